#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "adlex/corpus.hpp"

namespace testsupport {

inline std::filesystem::path fixtures() { return ADLEX_FIXTURES; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("adlex-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline adlex::Transcript make(const std::string& id, const std::string& text, adlex::Label label,
                              std::optional<int> mmse = std::nullopt) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto next = text.find(' ', pos);
    if (next == std::string::npos) next = text.size();
    if (next > pos) tokens.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  return adlex::Transcript(id, tokens, label, mmse);
}

}  // namespace testsupport
