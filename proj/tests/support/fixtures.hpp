#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fixtures {

inline std::filesystem::path root() { return std::filesystem::path(PROCMINE_SOURCE_DIR); }

inline std::filesystem::path path(const std::string& rel) { return root() / "tests" / "fixtures" / rel; }

inline std::string read(const std::string& rel) {
  std::ifstream in(path(rel), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    dir_ = std::filesystem::temp_directory_path() / ("procmine-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::string& rel) const { return dir_ / rel; }

 private:
  std::filesystem::path dir_;
};

}  // namespace fixtures
