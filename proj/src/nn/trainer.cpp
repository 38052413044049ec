#include "octskin/trainer.hpp"

#include <torch/torch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "segnet_impl.hpp"

namespace octskin {

void Hyperparams::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("val_fraction must lie in (0,1)");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0,1)");
}

Hyperparams Hyperparams::from_config(const RunConfig& cfg) {
  Hyperparams hp;
  hp.learning_rate = cfg.get_real("learning_rate");
  hp.epochs = static_cast<int>(cfg.get_int("epochs"));
  hp.batch_size = static_cast<int>(cfg.get_int("batch_size"));
  hp.val_fraction = cfg.get_real("val_fraction");
  hp.split_seed = static_cast<std::uint64_t>(cfg.get_int("split_seed"));
  hp.train_seed = static_cast<std::uint64_t>(cfg.get_int("train_seed"));
  hp.split_by_image = cfg.get_bool("split_by_image");
  hp.validate();
  return hp;
}

std::string TrainHistory::to_csv() const {
  std::ostringstream ss;
  ss.precision(10);
  ss << "epoch,train_loss,val_loss,val_mean_iou\n";
  for (std::size_t i = 0; i < train_loss.size(); ++i)
    ss << i + 1 << ',' << train_loss[i] << ',' << val_loss[i] << ',' << val_mean_iou[i] << '\n';
  return ss.str();
}

TrainHistory TrainHistory::from_csv(const std::string& text) {
  TrainHistory h;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw FormatError("history CSV: expected 4 columns");
    h.train_loss.push_back(parse_double(cols[1], "train_loss"));
    h.val_loss.push_back(parse_double(cols[2], "val_loss"));
    h.val_mean_iou.push_back(parse_double(cols[3], "val_mean_iou"));
  }
  if (!h.val_mean_iou.empty())
    h.best_epoch = static_cast<int>(std::max_element(h.val_mean_iou.begin(), h.val_mean_iou.end()) -
                                    h.val_mean_iou.begin());
  return h;
}

std::pair<PatchSet, PatchSet> split_dataset(const PatchSet& ps, double val_fraction, std::uint64_t seed,
                                            bool by_image) {
  if (ps.empty()) throw ContractError("split_dataset: empty patch set");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ContractError("split_dataset: val_fraction must lie in (0,1)");
  const std::size_t n = ps.size();
  const auto n_train = static_cast<std::size_t>(std::ceil((1.0 - val_fraction) * static_cast<double>(n) - 1e-9));
  std::mt19937_64 rng(seed);

  std::vector<bool> to_train(n, false);
  if (!by_image) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n_train; ++i) to_train[order[i]] = true;
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[ps.patches[i].geometry.source_id].push_back(i);
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [id, idx] : groups) order.push_back(&idx);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t taken = 0;
    for (const auto* g : order) {
      if (taken >= n_train) break;
      for (auto i : *g) to_train[i] = true;
      taken += g->size();
    }
  }

  PatchSet train, val;
  train.patch_px = val.patch_px = ps.patch_px;
  train.stride_px = val.stride_px = ps.stride_px;
  for (std::size_t i = 0; i < n; ++i) (to_train[i] ? train : val).patches.push_back(ps.patches[i]);
  return {std::move(train), std::move(val)};
}

double cross_entropy(const ProbabilityMap& pm, const LabelMask& mask) {
  if (pm.height() != mask.height() || pm.width() != mask.width())
    throw ContractError("cross_entropy: probability map and mask shapes differ");
  const std::size_t n = pm.plane_size();
  if (n == 0) throw ContractError("cross_entropy: empty input");
  const auto& ids = mask.labels.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum -= std::log(std::max(pm.data()[ids[i] * n + i], 1e-12));
  return sum / static_cast<double>(n);
}

Evaluation evaluate(const Model& model, const PatchSet& patches, int batch_size) {
  Evaluation ev;
  if (patches.empty()) throw ContractError("evaluate: no patches");
  double loss = 0.0;
  std::vector<Raster<float>> batch;
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < patches.size(); start += bs) {
    batch.clear();
    const std::size_t end = std::min(patches.size(), start + bs);
    for (std::size_t i = start; i < end; ++i) batch.push_back(patches.patches[i].image);
    const auto maps = model.predict(batch);
    for (std::size_t i = start; i < end; ++i) {
      const auto& mask = patches.patches[i].mask;
      if (!mask) throw ContractError("evaluate: patch without mask");
      loss += cross_entropy(maps[i - start], *mask);
      ev.confusion += confusion(argmax_mask(maps[i - start]), *mask);
    }
  }
  ev.loss = loss / static_cast<double>(patches.size());
  ev.mean_iou = iou(ev.confusion).mean_iou;
  return ev;
}

namespace {

std::vector<nn::TensorRecord> snapshot(const torch::nn::Module& m) {
  auto state = nn::module_state(m);
  for (auto& rec : state) rec.value = rec.value.detach().clone();
  return state;
}

}  // namespace

TrainResult train(Model model, const PatchSet& data, const Hyperparams& hp) {
  hp.validate();
  for (const auto& p : data.patches)
    if (!p.mask) throw ContractError("train: every patch needs a mask");
  auto [train_set, val_set] = split_dataset(data, hp.val_fraction, hp.split_seed, hp.split_by_image);
  if (val_set.empty()) throw ContractError("train: validation split is empty; add patches or raise val_fraction");

  TrainHistory history;
  if (hp.epochs == 0) return {std::move(model), std::move(history), std::move(train_set), std::move(val_set)};

  auto& net = *model.impl().net;
  torch::optim::Adam opt(net.parameters(), torch::optim::AdamOptions(hp.learning_rate).betas({hp.beta1, hp.beta2}));
  std::mt19937_64 rng(hp.train_seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const int p = train_set.patch_px > 0 ? train_set.patch_px : train_set.patches.front().image.height();
  std::vector<nn::TensorRecord> best_state;
  double best_iou = -1.0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    net.train();
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      const auto b = static_cast<int64_t>(end - start);
      torch::Tensor x = torch::empty({b, 1, p, p});
      torch::Tensor y = torch::empty({b, p, p}, torch::kInt64);
      for (std::size_t i = start; i < end; ++i) {
        const auto& patch = train_set.patches[order[i]];
        const auto k = static_cast<int64_t>(i - start);
        std::memcpy(x[k].data_ptr<float>(), patch.image.data().data(), sizeof(float) * p * p);
        const auto& ids = patch.mask->labels.data();
        auto* dst = y[k].data_ptr<int64_t>();
        for (std::size_t j = 0; j < ids.size(); ++j) dst[j] = ids[j];
      }
      opt.zero_grad();
      torch::Tensor loss = torch::nn::functional::cross_entropy(net.forward(x), y);
      const double lv = loss.item<double>();
      if (!std::isfinite(lv))
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch + 1), history);
      loss.backward();
      opt.step();
      loss_sum += lv * static_cast<double>(b);
      seen += static_cast<std::size_t>(b);
    }

    const Evaluation ev = evaluate(model, val_set, hp.batch_size);
    if (!std::isfinite(ev.loss))
      throw TrainingError("train: non-finite validation loss at epoch " + std::to_string(epoch + 1), history);
    history.train_loss.push_back(loss_sum / static_cast<double>(seen));
    history.val_loss.push_back(ev.loss);
    history.val_mean_iou.push_back(ev.mean_iou);
    if (ev.mean_iou > best_iou) {
      best_iou = ev.mean_iou;
      history.best_epoch = epoch;
      best_state = snapshot(net);
    }
    if (hp.on_epoch) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      hp.on_epoch({epoch + 1, history.train_loss.back(), ev.loss, ev.mean_iou, secs});
    }
  }
  nn::load_module_state(net, best_state, "best epoch");
  net.eval();
  return {std::move(model), std::move(history), std::move(train_set), std::move(val_set)};
}

}  // namespace octskin
