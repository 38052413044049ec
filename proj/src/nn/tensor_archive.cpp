#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "octskin/data_io.hpp"
#include "segnet_impl.hpp"

namespace octskin::nn {

namespace {

constexpr char kMagic[8] = {'O', 'C', 'T', 'S', 'K', 'C', 'K', '1'};

std::string dtype_name(const torch::Tensor& t) {
  if (t.scalar_type() == torch::kFloat32) return "f32";
  if (t.scalar_type() == torch::kInt64) return "i64";
  throw FormatError("tensor archive: unsupported dtype " + std::string(c10::toString(t.scalar_type())));
}

}  // namespace

void write_tensor_archive(const std::filesystem::path& path, const std::map<std::string, std::string>& meta,
                          const std::vector<TensorRecord>& tensors) {
  nlohmann::json header;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::vector<unsigned char> payload;
  for (const auto& rec : tensors) {
    const torch::Tensor t = rec.value.detach().contiguous().cpu();
    const std::size_t bytes = t.numel() * t.element_size();
    header["tensors"].push_back(
        {{"name", rec.name}, {"dtype", dtype_name(t)}, {"shape", t.sizes().vec()}, {"offset", payload.size()}});
    const auto* src = static_cast<const unsigned char*>(t.data_ptr());
    payload.insert(payload.end(), src, src + bytes);
  }
  const std::string h = header.dump();
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  const auto len = static_cast<std::uint32_t>(h.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((len >> (8 * i)) & 0xff));
  out.insert(out.end(), h.begin(), h.end());
  out.insert(out.end(), payload.begin(), payload.end());
  write_file_atomic(path, out);
}

std::vector<TensorRecord> read_tensor_archive(const std::filesystem::path& path,
                                              std::map<std::string, std::string>* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw FormatError(path.string() + ": not a tensor archive");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
  if (12 + static_cast<std::size_t>(len) > bytes.size()) throw FormatError(path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  if (meta) *meta = header.value("meta", std::map<std::string, std::string>{});
  const std::size_t base = 12 + len;
  std::vector<TensorRecord> out;
  for (const auto& rec : header.at("tensors")) {
    const std::string dtype = rec.at("dtype");
    const auto shape = rec.at("shape").get<std::vector<int64_t>>();
    const std::size_t offset = rec.at("offset");
    const auto type = dtype == "f32" ? torch::kFloat32 : dtype == "i64" ? torch::kInt64 : throw FormatError("dtype");
    torch::Tensor t = torch::empty(shape, torch::TensorOptions().dtype(type));
    const std::size_t nbytes = t.numel() * t.element_size();
    if (base + offset + nbytes > bytes.size()) throw FormatError(path.string() + ": truncated tensor data");
    std::memcpy(t.data_ptr(), bytes.data() + base + offset, nbytes);
    out.push_back({rec.at("name"), std::move(t)});
  }
  return out;
}

std::vector<TensorRecord> module_state(const torch::nn::Module& m) {
  std::vector<TensorRecord> out;
  for (const auto& p : m.named_parameters(true)) out.push_back({p.key(), p.value()});
  for (const auto& b : m.named_buffers(true)) out.push_back({b.key(), b.value()});
  return out;
}

void load_module_state(torch::nn::Module& m, const std::vector<TensorRecord>& state, const std::string& origin) {
  std::map<std::string, const torch::Tensor*> lookup;
  for (const auto& rec : state) lookup[rec.name] = &rec.value;
  torch::NoGradGuard guard;
  auto assign = [&](const std::string& name, torch::Tensor& dst) {
    auto it = lookup.find(name);
    if (it == lookup.end()) throw FormatError(origin + ": missing tensor `" + name + "`");
    if (it->second->sizes() != dst.sizes())
      throw FormatError(origin + ": tensor `" + name + "` has a mismatched shape");
    dst.copy_(*it->second);
  };
  for (auto& p : m.named_parameters(true)) assign(p.key(), p.value());
  for (auto& b : m.named_buffers(true)) assign(b.key(), b.value());
}

}  // namespace octskin::nn
