#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "aloha/error.hpp"

namespace testsupport {

inline std::filesystem::path source_dir() { return ALOHA_SOURCE_DIR; }
inline std::filesystem::path tasks_dir() { return source_dir() / "tasks"; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

// The error code `f` throws, or nullopt when it returns normally.
template <class F>
std::optional<aloha::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const aloha::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("aloha_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
