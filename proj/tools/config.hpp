#pragma once

#include "carpetq/carpet.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>

namespace carpetq::cli {

// Raised for unreadable, malformed or incomplete config files. field() names the offending
// key ("" for syntax errors, where the message carries the line and column).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  CarpetSpec spec;
  int k_min = 2;
  int k_max = 6;
  std::size_t cloud_size = 1'000'000;
  int depth = 40;
  std::uint64_t seed = 0x5EED;
  std::filesystem::path output_dir = "out";
  std::set<std::string> formats{"csv", "json", "svg"};
  std::size_t cap_words = 10'000'000;
  unsigned threads = 0;
  int refine_iters = 0;
  std::size_t ball_centers = 100;
  int ball_min_level = 2;  // radii m^-level for level in [min, max]
  int ball_max_level = 8;

  bool wants(const std::string& format) const { return formats.count(format) > 0; }
};

// Parses JSON text. Throws ConfigError for syntax and schema problems and ValidationError
// when the carpet itself is invalid.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace carpetq::cli
