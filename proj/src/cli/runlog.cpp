#include "runlog.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "octskin/data_io.hpp"

namespace octskin::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

RunLog::RunLog(std::string command, std::vector<std::string> argv) {
  doc_["tool"] = "octskin";
  doc_["command"] = std::move(command);
  doc_["argv"] = std::move(argv);
  doc_["started_utc"] = utc_stamp();
  doc_["seeds"] = nlohmann::json::object();
  doc_["results"] = nlohmann::json::object();
}

void RunLog::set_config(const RunConfig& cfg) {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [key, field] : cfg.fields()) c[key] = field.value;
  doc_["config"] = std::move(c);
}

void RunLog::seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
void RunLog::input(const std::filesystem::path& path) { inputs_.push_back(path); }
void RunLog::output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunLog::write(const std::filesystem::path& path) {
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : paths) {
      nlohmann::json f{{"path", p.string()}};
      if (std::filesystem::is_regular_file(p)) f["sha256"] = sha256_file(p);
      arr.push_back(std::move(f));
    }
    return arr;
  };
  doc_["inputs"] = files(inputs_);
  doc_["outputs"] = files(outputs_);
  doc_["finished_utc"] = utc_stamp();
  write_text_atomic(path, doc_.dump(2) + "\n");
}

}  // namespace octskin::cli
