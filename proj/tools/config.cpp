#include "config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace carpetq::cli {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path, "missing required field \"" + path + "\"");
  return *it;
}

long long as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "field \"" + path + "\" must be an integer");
  return v.get<long long>();
}

long long int_or(const json& obj, const std::string& key, long long fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : as_int(*it, key);
}

long long positive(long long v, const std::string& path) {
  if (v <= 0) throw ConfigError(path, "field \"" + path + "\" must be positive");
  return v;
}

Rational as_rational(const json& v, const std::string& path) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, "field \"" + path + "\": " + e.what());
  }
  throw ConfigError(path, "field \"" + path + "\" must be a \"num/den\" string");
}

std::uint64_t as_seed(const json& v) {
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
    return v.get<std::uint64_t>();
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    try {
      std::size_t used = 0;
      const auto out = std::stoull(s, &used, 0);
      if (used == s.size()) return out;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("seed", "field \"seed\" must be a non-negative integer");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");

  RunConfig cfg;
  cfg.spec.n = static_cast<int>(as_int(require(doc, "n", "n"), "n"));
  cfg.spec.m = static_cast<int>(as_int(require(doc, "m", "m"), "m"));
  const auto& maps = require(doc, "maps", "maps");
  if (!maps.is_array()) throw ConfigError("maps", "field \"maps\" must be an array");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::string at = "maps[" + std::to_string(i) + "]";
    const auto& e = maps[i];
    if (!e.is_object()) throw ConfigError(at, "field \"" + at + "\" must be an object");
    MapWeight w;
    w.digit.i = static_cast<int>(as_int(require(e, "i", at + ".i"), at + ".i"));
    w.digit.j = static_cast<int>(as_int(require(e, "j", at + ".j"), at + ".j"));
    w.p = as_rational(require(e, "p", at + ".p"), at + ".p");
    cfg.spec.maps.push_back(std::move(w));
  }

  cfg.k_min = static_cast<int>(positive(int_or(doc, "k_min", cfg.k_min), "k_min"));
  cfg.k_max = static_cast<int>(positive(int_or(doc, "k_max", cfg.k_max), "k_max"));
  if (cfg.k_max < cfg.k_min) throw ConfigError("k_max", "k range is empty (k_max < k_min)");
  cfg.cloud_size = static_cast<std::size_t>(
      positive(int_or(doc, "cloud_size", static_cast<long long>(cfg.cloud_size)), "cloud_size"));
  cfg.depth = static_cast<int>(int_or(doc, "depth", cfg.depth));
  if (cfg.depth < 20) throw ConfigError("depth", "field \"depth\" must be at least 20");
  if (doc.contains("seed")) cfg.seed = as_seed(doc["seed"]);
  cfg.cap_words = static_cast<std::size_t>(
      positive(int_or(doc, "cap_words", static_cast<long long>(cfg.cap_words)), "cap_words"));
  cfg.refine_iters = static_cast<int>(int_or(doc, "refine_iters", cfg.refine_iters));
  if (cfg.refine_iters < 0) throw ConfigError("refine_iters", "field \"refine_iters\" must be >= 0");
  cfg.ball_centers = static_cast<std::size_t>(positive(
      int_or(doc, "ball_centers", static_cast<long long>(cfg.ball_centers)), "ball_centers"));
  cfg.ball_min_level = static_cast<int>(int_or(doc, "ball_min_level", cfg.ball_min_level));
  cfg.ball_max_level = static_cast<int>(int_or(doc, "ball_max_level", cfg.ball_max_level));
  if (cfg.ball_max_level < cfg.ball_min_level) {
    throw ConfigError("ball_max_level", "ball level range is empty");
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("output_dir", "field \"output_dir\" must be a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("outputs")) {
    const auto& out = doc["outputs"];
    if (!out.is_array()) throw ConfigError("outputs", "field \"outputs\" must be an array");
    cfg.formats.clear();
    for (const auto& f : out) {
      if (!f.is_string()) throw ConfigError("outputs", "entries of \"outputs\" must be strings");
      const auto s = f.get<std::string>();
      if (s != "csv" && s != "json" && s != "svg") {
        throw ConfigError("outputs", "unknown output format \"" + s + "\"");
      }
      cfg.formats.insert(s);
    }
  }
  // Validation errors carry their invariant names.
  auto report = validate_spec(cfg.spec);
  if (!report.ok()) throw ValidationError(std::move(report));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace carpetq::cli
