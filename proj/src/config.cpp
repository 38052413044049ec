#include "octskin/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace octskin {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view origin) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                        ": expected `key = value`");
    KeyValue kv{trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)), lineno};
    if (kv.key.empty())
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": empty key");
    if (!seen.insert(kv.key).second)
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) +
                        ": duplicate key `" + kv.key + "`");
    out.push_back(std::move(kv));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(std::string(what) + ": expected a real number, got `" + s + "`");
  return v;
}

long long parse_int(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(std::string(what) + ": expected an integer, got `" + s + "`");
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(std::string(what) + ": expected true/false, got `" + s + "`");
}

std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item, what));
  return out;
}

namespace {

using Kind = RunConfig::Kind;

std::map<std::string, RunConfig::Field> default_fields() {
  return {
      // trainer
      {"learning_rate", {Kind::kReal, "1e-05", "Adam step size"}},
      {"epochs", {Kind::kInt, "30", "training epochs"}},
      {"batch_size", {Kind::kInt, "8", "mini-batch size"}},
      {"val_fraction", {Kind::kReal, "0.2", "validation fraction of the patch set"}},
      {"split_seed", {Kind::kInt, "0", "seed of the train/validation split"}},
      {"split_by_image", {Kind::kBool, "false", "keep all patches of an image on one side"}},
      {"train_seed", {Kind::kInt, "0", "seed for weight init and batch shuffling"}},
      // model
      {"arch", {Kind::kString, "base_unet", "base_unet|vgg16_unet|resnet34_unet|inceptionv3_unet"}},
      {"width_divisor", {Kind::kInt, "1", "divide every channel width by this factor"}},
      {"encoder_pretrained", {Kind::kBool, "false", "initialize the encoder from a weights file"}},
      {"encoder_weights", {Kind::kString, "", "path of exported encoder weights"}},
      // patching
      {"patch_px", {Kind::kInt, "128", "square patch side"}},
      {"stride_px", {Kind::kInt, "64", "patch grid stride"}},
      {"min_unique", {Kind::kInt, "2", "minimum distinct class ids in a kept patch"}},
      // preprocess
      {"despeckle_kernel", {Kind::kInt, "3", "median kernel side"}},
      {"despeckle_passes", {Kind::kInt, "1", "median passes"}},
      // spacing
      {"axial_um_per_px", {Kind::kReal, "10", "default axial spacing"}},
      {"lateral_um_per_px", {Kind::kReal, "25", "default lateral spacing"}},
      // quantification
      {"min_gap_px", {Kind::kInt, "3", "shortest epidermis gap counted as wound"}},
      // ensemble
      {"ensemble_step", {Kind::kReal, "0.1", "simplex grid spacing"}},
      // phantom
      {"phantom_height_px", {Kind::kInt, "256", ""}},
      {"phantom_width_px", {Kind::kInt, "512", ""}},
      {"phantom_top_margin_px", {Kind::kReal, "40", "background rows above the surface"}},
      {"phantom_epidermis_px", {Kind::kReal, "18", ""}},
      {"phantom_dermis_px", {Kind::kReal, "70", ""}},
      {"phantom_subcutaneous_px", {Kind::kReal, "60", ""}},
      {"phantom_wobble_px", {Kind::kReal, "6", ""}},
      {"phantom_epidermis_intensity", {Kind::kReal, "0.85", ""}},
      {"phantom_dermis_intensity", {Kind::kReal, "0.55", ""}},
      {"phantom_subcutaneous_intensity", {Kind::kReal, "0.3", ""}},
      {"phantom_background_intensity", {Kind::kReal, "0.06", ""}},
      {"phantom_speckle_shape", {Kind::kReal, "4", "gamma shape of the speckle"}},
      {"phantom_wound_center_frac", {Kind::kReal, "0.5", ""}},
      {"phantom_wound_halfwidth_frac", {Kind::kReal, "0", ""}},
      {"phantom_seed", {Kind::kInt, "0", ""}},
  };
}

}  // namespace

RunConfig::RunConfig() : fields_(default_fields()) {}

RunConfig RunConfig::from_text(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  for (const auto& kv : parse_key_values(text, origin)) {
    try {
      cfg.set(kv.key, kv.value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(kv.line) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from_text(read_text_file(path), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw ConfigError("unknown config key `" + key + "`");
  switch (it->second.kind) {
    case Kind::kInt: parse_int(value, key); break;
    case Kind::kReal: parse_double(value, key); break;
    case Kind::kBool: parse_bool(value, key); break;
    case Kind::kString: break;
  }
  it->second.value = trim(value);
}

const RunConfig::Field& RunConfig::field(const std::string& key, Kind kind) const {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw ConfigError("unknown config key `" + key + "`");
  if (it->second.kind != kind) throw ConfigError("config key `" + key + "` has another type");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  return parse_int(field(key, Kind::kInt).value, key);
}
double RunConfig::get_real(const std::string& key) const {
  return parse_double(field(key, Kind::kReal).value, key);
}
bool RunConfig::get_bool(const std::string& key) const {
  return parse_bool(field(key, Kind::kBool).value, key);
}
const std::string& RunConfig::get_string(const std::string& key) const {
  return field(key, Kind::kString).value;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [key, f] : fields_) out += key + " = " + f.value + "\n";
  return out;
}

}  // namespace octskin
