#include "octskin/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "octskin/config.hpp"
#include "octskin/corpus.hpp"
#include "octskin/data_io.hpp"
#include "octskin/ensemble_model.hpp"
#include "octskin/metrics.hpp"
#include "octskin/phantom.hpp"
#include "octskin/plot.hpp"
#include "octskin/preprocess.hpp"
#include "octskin/segnet.hpp"
#include "octskin/trainer.hpp"
#include "octskin/woundquant.hpp"
#include "runlog.hpp"

namespace fs = std::filesystem;

namespace octskin {
namespace {

// Flags that shadow config keys. Precedence: defaults < --config < --set < flag.
struct KeyFlag {
  const CLI::App* owner;
  CLI::Option* option;
  std::string key;
  std::shared_ptr<std::string> value;
  bool is_flag;
};

struct Session {
  std::vector<std::string> argv;
  std::ostream& out;
  std::string config_path;
  std::vector<std::string> sets;
  std::string log_path;
  std::vector<KeyFlag> key_flags;

  RunConfig config(const CLI::App* sub) const {
    RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got `" + kv + "`");
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    for (const auto& kf : key_flags)
      if (kf.owner == sub && kf.option->count() > 0) cfg.set(kf.key, kf.is_flag ? "true" : *kf.value);
    return cfg;
  }

  fs::path log_for(const fs::path& primary) const {
    if (!log_path.empty()) return log_path;
    if (fs::is_directory(primary)) return primary / "run.json";
    return fs::path(primary.string() + ".run.json");
  }
};

void bind_key(Session& s, CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
  auto value = std::make_shared<std::string>();
  CLI::Option* opt = sub->add_option(flag, *value, help + " [" + key + "]");
  s.key_flags.push_back({sub, opt, key, value, false});
}

void bind_key_flag(Session& s, CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
  const std::string text = help + " [" + key + "]";
  CLI::Option* opt = sub->add_flag(flag)->description(text);
  s.key_flags.push_back({sub, opt, key, nullptr, true});
}

Spacing spacing_from(const RunConfig& cfg) {
  return {cfg.get_real("axial_um_per_px"), cfg.get_real("lateral_um_per_px")};
}

DespeckleParams despeckle_from(const RunConfig& cfg) {
  return {static_cast<int>(cfg.get_int("despeckle_kernel")), static_cast<int>(cfg.get_int("despeckle_passes"))};
}

CorpusOptions corpus_from(const RunConfig& cfg) {
  CorpusOptions o;
  o.patch_px = static_cast<int>(cfg.get_int("patch_px"));
  o.stride_px = static_cast<int>(cfg.get_int("stride_px"));
  o.min_unique = static_cast<int>(cfg.get_int("min_unique"));
  o.despeckle = despeckle_from(cfg);
  return o;
}

InferenceParams inference_from(const RunConfig& cfg) {
  InferenceParams ip;
  ip.patch_px = static_cast<int>(cfg.get_int("patch_px"));
  ip.stride_px = static_cast<int>(cfg.get_int("stride_px"));
  ip.batch_size = static_cast<int>(cfg.get_int("batch_size"));
  ip.despeckle = despeckle_from(cfg);
  return ip;
}

ModelSpec model_spec_from(const RunConfig& cfg) {
  ModelSpec spec;
  spec.arch = parse_arch(cfg.get_string("arch"));
  spec.width_divisor = static_cast<int>(cfg.get_int("width_divisor"));
  spec.encoder_weights = cfg.get_string("encoder_weights");
  spec.encoder_pretrained = cfg.get_bool("encoder_pretrained") || !spec.encoder_weights.empty();
  spec.validate();
  return spec;
}

void write_mask_and_probs(const ProbabilityMap& pm, const fs::path& mask_out, const std::string& probs_out,
                          cli::RunLog& log) {
  save_mask(argmax_mask(pm), mask_out);
  log.output(mask_out);
  if (!probs_out.empty()) {
    save_probability_npy(pm, probs_out);
    log.output(probs_out);
  }
}

std::string join(const std::vector<double>& v) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------- phantom

void add_phantom(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("phantom", "Generate synthetic layered-skin phantoms and a manifest");
  auto out = std::make_shared<std::string>();
  auto count = std::make_shared<int>(1);
  auto halfwidths = std::make_shared<std::vector<double>>();
  sub->add_option("--out", *out, "Output directory")->required();
  auto* count_opt = sub->add_option("--count", *count, "Number of phantoms, seeds seed..seed+count-1")->check(CLI::PositiveNumber);
  sub->add_option("--halfwidths", *halfwidths, "Healing series: one wound halfwidth per day (0,4,8,...)")
      ->delimiter(',')
      ->excludes(count_opt);
  bind_key(s, sub, "--seed", "phantom_seed", "Base seed");
  bind_key(s, sub, "--height", "phantom_height_px", "Rows");
  bind_key(s, sub, "--width", "phantom_width_px", "Columns");
  bind_key(s, sub, "--wound-center", "phantom_wound_center_frac", "Wound center as a fraction of the width");
  bind_key(s, sub, "--wound-halfwidth", "phantom_wound_halfwidth_frac", "Wound halfwidth as a fraction of the width");
  sub->callback([&s, &action, sub, out, count, halfwidths] {
    action = [&s, sub, out, count, halfwidths] {
      const RunConfig cfg = s.config(sub);
      cli::RunLog log("phantom", s.argv);
      log.set_config(cfg);
      PhantomSpec base = PhantomSpec::from_config(cfg);
      base.spacing = spacing_from(cfg);
      std::vector<LabelledImage> items;
      if (!halfwidths->empty()) {
        for (auto& hp : generate_healing_series(base, *halfwidths)) {
          hp.image.subject_id = "phantom-" + std::to_string(base.seed);
          items.emplace_back(std::move(hp.image), std::move(hp.mask));
        }
      } else {
        for (int i = 0; i < *count; ++i) {
          PhantomSpec spec = base;
          spec.seed = base.seed + static_cast<std::uint64_t>(i);
          Phantom ph = generate_phantom(spec);
          items.emplace_back(std::move(ph.image), std::move(ph.mask));
        }
      }
      log.seed("phantom_seed", base.seed);
      const DatasetManifest m = write_labelled_dataset(items, *out);
      for (const auto& e : m.entries) {
        log.output(e.image_path);
        log.output(e.mask_path);
      }
      log.output(fs::path(*out) / "manifest.tsv");
      log.extra()["phantoms"] = items.size();
      log.write(s.log_for(*out));
      s.out << "wrote " << items.size() << " phantoms to " << *out << "\n";
    };
  });
}

// ------------------------------------------------------------- preprocess

void add_preprocess(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("preprocess", "Despeckle and min-max normalize one image");
  auto image = std::make_shared<std::string>(), out = std::make_shared<std::string>();
  sub->add_option("--image", *image, "Input B-scan")->required();
  sub->add_option("--out", *out, "Output 16-bit PNG or TIFF")->required();
  bind_key(s, sub, "--kernel", "despeckle_kernel", "Median kernel side (odd)");
  bind_key(s, sub, "--passes", "despeckle_passes", "Median passes");
  sub->callback([&s, &action, sub, image, out] {
    action = [&s, sub, image, out] {
      const RunConfig cfg = s.config(sub);
      cli::RunLog log("preprocess", s.argv);
      log.set_config(cfg);
      log.input(*image);
      save_image(preprocess(load_image(*image), despeckle_from(cfg)), *out);
      log.output(*out);
      log.write(s.log_for(*out));
    };
  });
}

// --------------------------------------------------------------- patchify

void add_patchify(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("patchify", "Cut a labelled dataset into filtered training patches");
  auto manifest = std::make_shared<std::string>(), out = std::make_shared<std::string>();
  sub->add_option("--manifest", *manifest, "Dataset manifest (TSV)")->required();
  sub->add_option("--out", *out, "Output directory")->required();
  bind_key(s, sub, "--patch", "patch_px", "Patch side");
  bind_key(s, sub, "--stride", "stride_px", "Stride");
  bind_key(s, sub, "--min-unique", "min_unique", "Minimum distinct classes per kept patch");
  sub->callback([&s, &action, sub, manifest, out] {
    action = [&s, sub, manifest, out] {
      const RunConfig cfg = s.config(sub);
      cli::RunLog log("patchify", s.argv);
      log.set_config(cfg);
      log.input(*manifest);
      CorpusStats stats;
      const PatchSet ps = build_patch_corpus(load_manifest(*manifest), corpus_from(cfg), &stats);
      save_patch_set(ps, *out);
      log.output(fs::path(*out) / "patches.tsv");
      log.extra()["images"] = stats.images;
      log.extra()["extracted"] = stats.extracted;
      log.extra()["kept"] = stats.kept;
      log.write(s.log_for(*out));
      s.out << stats.extracted << " patches extracted, " << stats.kept << " kept\n";
    };
  });
}

// ------------------------------------------------------------------ train

void add_train(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("train", "Train a segmentation network on a labelled dataset");
  auto manifest = std::make_shared<std::string>(), out_dir = std::make_shared<std::string>(".");
  sub->add_option("--manifest", *manifest, "Dataset manifest (TSV)")->required();
  sub->add_option("--out-dir", *out_dir, "Directory for checkpoint, history and run log");
  bind_key(s, sub, "--arch", "arch", "Architecture");
  bind_key(s, sub, "--epochs", "epochs", "Epochs");
  bind_key(s, sub, "--lr", "learning_rate", "Adam learning rate");
  bind_key(s, sub, "--batch-size", "batch_size", "Mini-batch size");
  bind_key(s, sub, "--val-fraction", "val_fraction", "Validation fraction");
  bind_key(s, sub, "--split-seed", "split_seed", "Train/validation split seed");
  bind_key(s, sub, "--seed", "train_seed", "Initialization and shuffling seed");
  bind_key_flag(s, sub, "--split-by-image", "split_by_image", "Keep each image on one side of the split");
  bind_key(s, sub, "--width-divisor", "width_divisor", "Divide every channel width");
  bind_key(s, sub, "--encoder-weights", "encoder_weights", "Pretrained encoder archive");
  bind_key(s, sub, "--patch", "patch_px", "Patch side");
  bind_key(s, sub, "--stride", "stride_px", "Stride");
  bind_key(s, sub, "--min-unique", "min_unique", "Minimum distinct classes per kept patch");
  sub->callback([&s, &action, sub, manifest, out_dir] {
    action = [&s, sub, manifest, out_dir] {
      const RunConfig cfg = s.config(sub);
      const ModelSpec spec = model_spec_from(cfg);
      Hyperparams hp = Hyperparams::from_config(cfg);
      hp.validate();
      cli::RunLog log("train", s.argv);
      log.set_config(cfg);
      log.seed("split_seed", hp.split_seed);
      log.seed("train_seed", hp.train_seed);
      log.input(*manifest);
      if (spec.encoder_pretrained) log.input(spec.encoder_weights);

      CorpusStats stats;
      const PatchSet corpus = build_patch_corpus(load_manifest(*manifest), corpus_from(cfg), &stats);
      s.out << stats.kept << " of " << stats.extracted << " patches kept\n";
      hp.on_epoch = [&s, &hp](const EpochRecord& e) {
        s.out << "epoch " << e.epoch << "/" << hp.epochs << " train_loss " << fmt(e.train_loss) << " val_loss "
              << fmt(e.val_loss) << " val_mean_iou " << fmt(e.val_mean_iou) << " (" << fmt(e.seconds) << " s)\n"
              << std::flush;
      };

      fs::create_directories(*out_dir);
      const std::string stem = std::string(arch_name(spec.arch)) + "-" + cli::utc_stamp();
      const fs::path ckpt = fs::path(*out_dir) / (stem + ".ckpt");
      const fs::path hist = fs::path(*out_dir) / (stem + ".history.csv");
      log.extra()["patches_extracted"] = stats.extracted;
      log.extra()["patches_kept"] = stats.kept;
      try {
        TrainResult r = train(build_model(spec, hp.train_seed), corpus, hp);
        r.model.save(ckpt);
        write_text_atomic(hist, r.history.to_csv());
        log.output(ckpt);
        log.output(hist);
        log.extra()["best_epoch"] = r.history.best_epoch + 1;
        if (r.history.best_epoch >= 0) log.extra()["best_val_mean_iou"] = r.history.val_mean_iou[r.history.best_epoch];
        log.write(s.log_for(fs::path(*out_dir) / stem));
        s.out << "checkpoint " << ckpt.string() << "\n";
      } catch (const TrainingError& e) {
        write_text_atomic(hist, e.history().to_csv());
        log.output(hist);
        log.extra()["error"] = e.what();
        log.write(s.log_for(fs::path(*out_dir) / stem));
        throw;
      }
    };
  });
}

// ---------------------------------------------------------------- predict

void add_predict(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("predict", "Segment one image with a trained checkpoint");
  auto model = std::make_shared<std::string>(), image = std::make_shared<std::string>(),
       out = std::make_shared<std::string>(), probs = std::make_shared<std::string>();
  sub->add_option("--model", *model, "Checkpoint")->required();
  sub->add_option("--image", *image, "Input B-scan")->required();
  sub->add_option("--out", *out, "Output label mask PNG")->required();
  sub->add_option("--probs", *probs, "Also write class probabilities (.npy, 4xHxW float32)");
  bind_key(s, sub, "--patch", "patch_px", "Patch side");
  bind_key(s, sub, "--stride", "stride_px", "Stride");
  sub->callback([&s, &action, sub, model, image, out, probs] {
    action = [&s, sub, model, image, out, probs] {
      const RunConfig cfg = s.config(sub);
      cli::RunLog log("predict", s.argv);
      log.set_config(cfg);
      log.input(*model);
      log.input(*image);
      const ProbabilityMap pm = predict_probs(Model::load(*model), load_image(*image), inference_from(cfg));
      write_mask_and_probs(pm, *out, *probs, log);
      log.write(s.log_for(*out));
    };
  });
}

// --------------------------------------------------------------- ensemble

void add_ensemble(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("ensemble", "Weighted probability ensemble of several checkpoints");
  auto models = std::make_shared<std::vector<std::string>>();
  auto weights = std::make_shared<std::vector<double>>();
  auto optimize = std::make_shared<bool>(false);
  auto val = std::make_shared<std::string>(), image = std::make_shared<std::string>(),
       out = std::make_shared<std::string>(), probs = std::make_shared<std::string>(),
       report = std::make_shared<std::string>();
  sub->add_option("--models", *models, "Member checkpoints")->required()->expected(1, -1);
  auto* w_opt = sub->add_option("--weights", *weights, "Member weights, comma separated")->delimiter(',');
  auto* o_opt = sub->add_flag("--optimize", *optimize, "Grid-search weights on --val")->excludes(w_opt);
  auto* v_opt = sub->add_option("--val", *val, "Validation manifest for --optimize");
  o_opt->needs(v_opt);
  v_opt->needs(o_opt);
  auto* i_opt = sub->add_option("--image", *image, "Image to segment with the ensemble");
  auto* out_opt = sub->add_option("--out", *out, "Output label mask PNG for --image");
  sub->add_option("--probs", *probs, "Also write class probabilities (.npy)")->needs(i_opt);
  auto* r_opt = sub->add_option("--report", *report, "JSON report with the weights and validation IoU");
  i_opt->needs(out_opt);
  out_opt->needs(i_opt);
  bind_key(s, sub, "--step", "ensemble_step", "Simplex grid spacing");
  bind_key(s, sub, "--patch", "patch_px", "Patch side");
  bind_key(s, sub, "--stride", "stride_px", "Stride");
  sub->callback([&s, &action, sub, models, weights, optimize, val, image, out, probs, report, r_opt, out_opt] {
    if (r_opt->count() == 0 && out_opt->count() == 0)
      throw CLI::ValidationError("ensemble", "give --report, --image/--out, or both");
    action = [&s, sub, models, weights, optimize, val, image, out, probs, report] {
      const RunConfig cfg = s.config(sub);
      cli::RunLog log("ensemble", s.argv);
      log.set_config(cfg);
      std::vector<Model> members;
      for (const auto& m : *models) {
        log.input(m);
        members.push_back(Model::load(m));
      }
      const InferenceParams ip = inference_from(cfg);
      EnsembleWeights w = EnsembleWeights::uniform(members.size());
      nlohmann::json rep;
      if (*optimize) {
        log.input(*val);
        const WeightSearchResult r = optimize_weights(members, load_manifest(*val), cfg.get_real("ensemble_step"), ip);
        w = r.weights;
        rep["val_mean_iou"] = r.mean_iou;
        rep["val_mean_nll"] = r.mean_nll;
        rep["candidates"] = r.candidate_scores.size();
      } else if (!weights->empty()) {
        if (weights->size() != members.size())
          throw ConfigError("ensemble: " + std::to_string(weights->size()) + " weights for " +
                            std::to_string(members.size()) + " models");
        w = EnsembleWeights(*weights);
      }
      rep["models"] = *models;
      rep["weights"] = w.values();
      s.out << "weights " << join(w.values()) << "\n";
      if (!image->empty()) {
        log.input(*image);
        const EnsembleModel em(std::move(members), w);
        write_mask_and_probs(ensemble_predict(em, load_image(*image), ip), *out, *probs, log);
      }
      log.extra() = rep;
      if (!report->empty()) {
        write_text_atomic(*report, rep.dump(2) + "\n");
        log.output(*report);
      }
      log.write(s.log_for(report->empty() ? fs::path(*out) : fs::path(*report)));
    };
  });
}

// ------------------------------------------------------------------- eval

void add_eval(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("eval", "Per-image and aggregate IoU of predicted masks");
  auto pred = std::make_shared<std::string>(), gt = std::make_shared<std::string>(),
       out = std::make_shared<std::string>();
  auto per_image = std::make_shared<bool>(false);
  sub->add_option("--pred-dir", *pred, "Directory of predicted mask PNGs")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--gt-dir", *gt, "Directory of ground-truth masks with the same file names")
      ->required()
      ->check(CLI::ExistingDirectory);
  sub->add_option("--out", *out, "Report CSV")->required();
  sub->add_flag("--per-image-mean", *per_image, "Aggregate as the mean of per-image scores instead of pooled counts");
  sub->callback([&s, &action, sub, pred, gt, out, per_image] {
    action = [&s, sub, pred, gt, out, per_image] {
      const RunConfig cfg = s.config(sub);
      cli::RunLog log("eval", s.argv);
      log.set_config(cfg);
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(*pred))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw ValidationError("eval: no .png masks in " + *pred);

      std::ostringstream csv;
      csv << "image";
      for (auto name : kClassNames) csv << ",iou_" << name;
      csv << ",mean_iou\n";
      auto row = [&csv](const std::string& label, const std::array<std::optional<double>, kNumClasses>& per_class,
                        double mean) {
        csv << label;
        for (const auto& v : per_class) csv << "," << (v ? fmt(*v) : "");
        csv << "," << fmt(mean) << "\n";
      };
      ConfusionMatrix pooled;
      std::array<double, kNumClasses> class_sum{};
      std::array<int, kNumClasses> class_n{};
      double mean_sum = 0.0;
      for (const auto& f : files) {
        const fs::path g = fs::path(*gt) / f.filename();
        if (!fs::exists(g)) throw ValidationError("eval: no ground truth for " + f.filename().string());
        log.input(f);
        log.input(g);
        const ConfusionMatrix cm = confusion(load_mask(f), load_mask(g));
        pooled += cm;
        const IoUReport r = iou(cm);
        row(f.filename().string(), r.per_class, r.mean_iou);
        mean_sum += r.mean_iou;
        for (int c = 0; c < kNumClasses; ++c)
          if (r.per_class[c]) class_sum[c] += *r.per_class[c], ++class_n[c];
      }
      IoUReport agg = iou(pooled);
      if (*per_image) {
        for (int c = 0; c < kNumClasses; ++c)
          agg.per_class[c] = class_n[c] ? std::optional<double>(class_sum[c] / class_n[c]) : std::nullopt;
        agg.mean_iou = mean_sum / static_cast<double>(files.size());
      }
      row(*per_image ? "aggregate_per_image_mean" : "aggregate_pooled", agg.per_class, agg.mean_iou);
      write_text_atomic(*out, csv.str());
      log.output(*out);
      log.extra()["images"] = files.size();
      log.extra()["mean_iou"] = agg.mean_iou;
      log.write(s.log_for(*out));
      s.out << "mean IoU " << fmt(agg.mean_iou) << " over " << files.size() << " images\n";
    };
  });
}

// --------------------------------------------------------------- quantify

void add_quantify(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("quantify", "Wound extent per time point and the healing curve");
  auto masks = std::make_shared<std::vector<std::string>>();
  auto days = std::make_shared<std::vector<int>>();
  auto spacing = std::make_shared<std::vector<double>>();
  auto out = std::make_shared<std::string>(), thickness = std::make_shared<std::string>();
  sub->add_option("--masks", *masks, "Label masks, one per day, comma separated")->required()->delimiter(',');
  sub->add_option("--days", *days, "Imaging days, comma separated")->required()->delimiter(',');
  sub->add_option("--spacing", *spacing, "axial,lateral micrometres per pixel")->delimiter(',')->expected(2);
  sub->add_option("--out", *out, "Healing curve CSV")->required();
  sub->add_option("--thickness-out", *thickness, "Per-image mean layer thickness CSV");
  bind_key(s, sub, "--min-gap", "min_gap_px", "Shortest wound run kept, in columns");
  sub->callback([&s, &action, sub, masks, days, spacing, out, thickness] {
    if (masks->size() != days->size()) throw CLI::ValidationError("quantify", "--masks and --days differ in length");
    action = [&s, sub, masks, days, spacing, out, thickness] {
      RunConfig cfg = s.config(sub);
      if (!spacing->empty()) {
        cfg.set("axial_um_per_px", std::to_string((*spacing)[0]));
        cfg.set("lateral_um_per_px", std::to_string((*spacing)[1]));
      }
      cli::RunLog log("quantify", s.argv);
      log.set_config(cfg);
      const Spacing sp = spacing_from(cfg);
      const int min_gap = static_cast<int>(cfg.get_int("min_gap_px"));
      std::vector<std::pair<int, WoundExtent>> series;
      std::ostringstream tcsv;
      tcsv << "day,image";
      for (auto name : kClassNames) tcsv << ",mean_um_" << name;
      tcsv << ",wound_width_um,wound_area_um2\n";
      for (std::size_t i = 0; i < masks->size(); ++i) {
        log.input((*masks)[i]);
        const LabelMask m = load_mask((*masks)[i]);
        const WoundExtent we = wound_extent(m, sp, min_gap);
        const ThicknessProfile tp = layer_thickness(m, sp.axial_um_per_px);
        tcsv << (*days)[i] << "," << (*masks)[i];
        for (const auto& v : tp.mean_um) tcsv << "," << (v ? fmt(*v) : "");
        tcsv << "," << fmt(we.width_um) << "," << fmt(we.area_um2) << "\n";
        series.emplace_back((*days)[i], we);
      }
      const HealingCurve curve = healing_curve(series);
      write_text_atomic(*out, healing_curve_csv(curve));
      log.output(*out);
      if (!thickness->empty()) {
        write_text_atomic(*thickness, tcsv.str());
        log.output(*thickness);
      }
      for (const auto& p : curve.points)
        s.out << "day " << p.day << " area_um2 " << fmt(p.area_um2) << " closure " << fmt(p.closure_frac) << "\n";
      log.write(s.log_for(*out));
    };
  });
}

// ------------------------------------------------------------------ plots

void add_plot_progression(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("plot-progression", "Render a healing curve CSV as a PNG");
  auto csv = std::make_shared<std::string>(), out = std::make_shared<std::string>(),
       metric = std::make_shared<std::string>("closure");
  sub->add_option("curve", *csv, "Healing curve CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", *out, "Output PNG")->required();
  sub->add_option("--metric", *metric, "closure (percent) or area (um^2)")->check(CLI::IsMember({"closure", "area"}));
  sub->callback([&s, &action, sub, csv, out, metric] {
    action = [&s, sub, csv, out, metric] {
      cli::RunLog log("plot-progression", s.argv);
      log.set_config(s.config(sub));
      log.input(*csv);
      const HealingCurve curve = parse_healing_curve_csv(read_text_file(*csv));
      PlotSeries series{*metric == "area" ? "wound bed area" : "closure", {}, {}};
      for (const auto& p : curve.points) {
        series.x.push_back(p.day);
        series.y.push_back(*metric == "area" ? p.area_um2 : 100.0 * p.closure_frac);
      }
      PlotStyle style;
      style.title = "Wound healing progression";
      style.x_label = "day";
      style.y_label = *metric == "area" ? "wound area (um^2)" : "closure (%)";
      write_line_plot({series}, style, *out);
      log.output(*out);
      log.write(s.log_for(*out));
    };
  });
}

void add_plot_loss(CLI::App& app, Session& s, std::function<void()>& action) {
  auto* sub = app.add_subcommand("plot-loss", "Render training histories as a loss plot");
  auto files = std::make_shared<std::vector<std::string>>();
  auto labels = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  sub->add_option("histories", *files, "History CSVs from train")->required()->check(CLI::ExistingFile);
  sub->add_option("--labels", *labels, "Series labels, comma separated")->delimiter(',');
  sub->add_option("--out", *out, "Output PNG")->required();
  sub->callback([&s, &action, sub, files, labels, out] {
    if (!labels->empty() && labels->size() != files->size())
      throw CLI::ValidationError("plot-loss", "--labels must name every history");
    action = [&s, sub, files, labels, out] {
      cli::RunLog log("plot-loss", s.argv);
      log.set_config(s.config(sub));
      std::vector<PlotSeries> series;
      for (std::size_t i = 0; i < files->size(); ++i) {
        log.input((*files)[i]);
        const TrainHistory h = TrainHistory::from_csv(read_text_file((*files)[i]));
        std::string name = labels->empty() ? fs::path((*files)[i]).stem().string() : (*labels)[i];
        if (labels->empty()) {
          if (const auto suffix = name.rfind(".history"); suffix != std::string::npos) name.erase(suffix);
          if (const auto dash = name.find('-'); dash != std::string::npos) name.erase(dash);
        }
        PlotSeries tr{name + " train", {}, h.train_loss}, va{name + " val", {}, h.val_loss};
        for (std::size_t e = 0; e < h.epochs(); ++e) tr.x.push_back(static_cast<double>(e + 1));
        va.x = tr.x;
        series.push_back(std::move(tr));
        series.push_back(std::move(va));
      }
      PlotStyle style;
      style.title = "Training and validation loss";
      style.x_label = "epoch";
      style.y_label = "cross-entropy";
      write_line_plot(series, style, *out);
      log.output(*out);
      log.write(s.log_for(*out));
    };
  });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> argv{"octskin"};
  argv.insert(argv.end(), args.begin(), args.end());
  Session s{argv, out, {}, {}, {}, {}};

  CLI::App app{"Skin-layer OCT segmentation, ensembling and wound quantification", "octskin"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", s.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", s.sets, "Override one configuration key (key=value), repeatable")->allow_extra_args(false);
  app.add_option("--log", s.log_path, "Reproducibility log path (default: next to the primary output)");

  std::function<void()> action;
  add_phantom(app, s, action);
  add_preprocess(app, s, action);
  add_patchify(app, s, action);
  add_train(app, s, action);
  add_predict(app, s, action);
  add_ensemble(app, s, action);
  add_eval(app, s, action);
  add_quantify(app, s, action);
  add_plot_progression(app, s, action);
  add_plot_loss(app, s, action);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (action) action();
  } catch (const ConfigError& e) {
    err << "octskin: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "octskin: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace octskin
