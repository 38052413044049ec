#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "octskin/config.hpp"

namespace octskin::cli {

std::string sha256_file(const std::filesystem::path& path);

/// `YYYYMMDDTHHMMSSZ` in UTC.
std::string utc_stamp();

/// Reproducibility record written next to the outputs of every run.
class RunLog {
 public:
  RunLog(std::string command, std::vector<std::string> argv);

  void set_config(const RunConfig& cfg);
  void seed(const std::string& name, std::uint64_t value);
  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  nlohmann::json& extra() { return doc_["results"]; }

  /// Stamps the finish time, hashes every recorded file and writes atomically.
  void write(const std::filesystem::path& path);

 private:
  nlohmann::json doc_;
  std::vector<std::filesystem::path> inputs_, outputs_;
};

}  // namespace octskin::cli
