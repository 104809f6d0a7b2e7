#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ats/random.hpp"

namespace ats_test {

namespace fs = std::filesystem;

// Removed with its contents on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ats_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Hand-rolled generators over SplitMix64.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return lo + static_cast<int>(rng_.below(static_cast<std::uint64_t>(hi - lo + 1))); }
  double real(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  bool coin() { return rng_.below(2) == 1; }

  std::vector<int> labels(std::size_t n, int lo, int hi) {
    std::vector<int> out(n);
    for (auto& v : out) v = integer(lo, hi);
    return out;
  }

  std::vector<double> reals(std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (auto& v : out) v = real(lo, hi);
    return out;
  }

  std::string word(int min_len = 1, int max_len = 8) {
    static const char* letters = "abcdefghijklmnopqrstuvwxyz";
    std::string w;
    const int n = integer(min_len, max_len);
    for (int i = 0; i < n; ++i) w += letters[integer(0, 25)];
    return w;
  }

  // Words, punctuation and occasional multi-byte characters.
  std::string text(int max_words = 30) {
    static const std::vector<std::string> extras = {",", ".", "!", "?", "\xc3\xa9t\xc3\xa9", "\xe4\xbd\xa0\xe5\xa5\xbd",
                                                    "don't", "(x)", "\"q\""};
    std::string t;
    const int n = integer(1, max_words);
    for (int i = 0; i < n; ++i) {
      if (!t.empty()) t += coin() ? " " : "  ";
      t += integer(0, 5) == 0 ? extras[static_cast<std::size_t>(integer(0, static_cast<int>(extras.size()) - 1))] : word();
    }
    return t;
  }

  ats::SplitMix64& rng() { return rng_; }

 private:
  ats::SplitMix64 rng_;
};

}  // namespace ats_test
