#include "commands.hpp"
#include "output.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace carpetq;
using namespace carpetq::cli;
namespace fs = std::filesystem;

namespace {

fs::path data(const std::string& name) { return fs::path(CARPETQ_TEST_DATA) / name; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("carpetq_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMinimal = R"({"n": 4, "m": 3, "maps": [
  {"i": 0, "j": 0, "p": "1/3"}, {"i": 0, "j": 2, "p": "1/3"}, {"i": 2, "j": 2, "p": "1/3"}]})";

}  // namespace

TEST_CASE("carpet A config loads with exact weights") {
  const auto cfg = load_config(data("carpet_a.json"));
  CHECK(cfg.spec.n == 4);
  CHECK(cfg.spec.m == 3);
  REQUIRE(cfg.spec.maps.size() == 3);
  CHECK(cfg.spec.maps[0].p == Rational(1, 3));
  CHECK(cfg.k_min == 2);
  CHECK(cfg.k_max == 6);
  CHECK(cfg.seed == 0x5EED);
}

TEST_CASE("config defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.k_min == 2);
  CHECK(cfg.k_max == 6);
  CHECK(cfg.cloud_size == 1'000'000);
  CHECK(cfg.depth == 40);
  CHECK(cfg.seed == 0x5EED);
  CHECK(cfg.wants("csv"));
  CHECK(cfg.wants("json"));
  CHECK(cfg.wants("svg"));
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<no error>");
  };
  CHECK(field_of(R"({"n": 4, "maps": []})") == "m");
  CHECK(field_of(R"({"n": 4, "m": 3, "maps": [{"i": 0, "j": 0}]})") == "maps[0].p");
  CHECK(field_of(R"({"n": 4, "m": 3, "maps": [{"i": 0, "j": 0, "p": "1/0"}]})") == "maps[0].p");
  CHECK(field_of(R"({"n": 4, "m": 3, "maps": [], "k_min": 5, "k_max": 3})") == "k_max");
  CHECK(field_of(R"({"n": 4, "m": 3, "maps": [], "depth": 10})") == "depth");
  CHECK(field_of(R"({"n": 4, "m": 3, "maps": [], "outputs": ["pdf"]})") == "outputs");
}

TEST_CASE("syntax errors report the position") {
  try {
    parse_config("{\n  \"n\": 4,\n  \"m\": \n}");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("invalid carpets report the invariant") {
  try {
    parse_config(R"({"n": 3, "m": 4, "maps": [{"i": 0, "j": 0, "p": "1/2"}, {"i": 2, "j": 2, "p": "1/2"}]})");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE_FALSE(e.report().errors.empty());
    CHECK(e.report().errors[0].invariant == "n_ge_m");
  }
}

TEST_CASE("csv numbers round trip") {
  for (double v : {0.1, 1.0 / 3.0, -15.721439742591278, 6.02214076e23, 5e-324}) {
    CHECK(std::strtod(fmt(v).c_str(), nullptr) == v);
  }
  CsvTable t{{"a", "b"}, {}};
  t.add({fmt(0.1), fmt_bool(true)});
  const auto back = parse_csv(t.str());
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK_THROWS_AS(t.add({"1"}), std::logic_error);
}

TEST_CASE("sequences on the self-similar carpet give s_k = s0") {
  auto cfg = load_config(data("carpet_c.json"));
  cfg.output_dir = scratch("seq_c");
  std::ostringstream log;
  const auto r = cmd_sequences(cfg, log);
  CHECK(r.ok());
  const auto t = read_csv(cfg.output_dir / "sequences.csv");
  const std::vector<std::string> want{"k", "phi_k", "xi_min", "xi_max", "d_k", "t_k",
                                      "s_k", "s0", "bound_dk", "bound_sk", "pass"};
  CHECK(t.columns == want);
  const auto s = t.column("s_k");
  const auto s0 = t.column("s0");
  REQUIRE(s.size() == 5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(std::strtod(s[i].c_str(), nullptr) - std::strtod(s0[i].c_str(), nullptr)) < 1e-12);
  }
}

TEST_CASE("antichain summary on carpet A at k = 4") {
  auto cfg = load_config(data("carpet_a.json"));
  cfg.k_min = cfg.k_max = 4;
  cfg.output_dir = scratch("ac_a");
  std::ostringstream log;
  const auto r = cmd_antichain(cfg, log);
  CHECK(r.ok());
  CHECK(log.str().find("maximal: true, mass: 1 (exact), delta_k <= C1: true") != std::string::npos);
}

TEST_CASE("report without prior outputs") {
  auto cfg = load_config(data("carpet_a.json"));
  cfg.output_dir = scratch("empty");
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(cmd_report(cfg, log), doctest::Contains("nothing to report"),
                       std::runtime_error);
}

TEST_CASE("quantize columns and report charts") {
  auto cfg = load_config(data("carpet_a.json"));
  // The drift test needs the full k range; R_k oscillates between neighbouring levels.
  cfg.k_min = 2;
  cfg.k_max = 6;
  cfg.cloud_size = 50000;
  cfg.ball_centers = 5;
  cfg.output_dir = scratch("quant_a");
  std::ostringstream log;
  CHECK(cmd_quantize(cfg, log).ok());
  const auto t = read_csv(cfg.output_dir / "quantize.csv");
  const std::vector<std::string> want{"k", "phi_k", "lower_anchor", "upper_anchor",
                                      "e_hat_est", "stderr", "R_k"};
  CHECK(t.columns == want);
  CHECK(t.rows.size() == 5);
  CHECK(cmd_sequences(cfg, log).ok());
  const auto rep = cmd_report(cfg, log);
  CHECK(rep.ok());
  const auto svg = slurp(cfg.output_dir / "r_k.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("href") == std::string::npos);  // self-contained
  CHECK(fs::exists(cfg.output_dir / "sequences.svg"));
}

TEST_CASE("outputs are byte-identical across thread counts") {
  auto cfg = load_config(data("carpet_a.json"));
  cfg.k_min = 2;
  cfg.k_max = 5;
  cfg.cloud_size = 100000;
  cfg.ball_centers = 10;
  std::vector<std::string> names{"partition.csv", "antichain.csv", "sequences.csv",
                                 "quantize.csv", "ball.csv", "quantize.json"};
  std::vector<std::string> first;
  for (unsigned threads : {1u, 4u, 16u}) {
    cfg.threads = threads;
    cfg.output_dir = scratch("det_" + std::to_string(threads));
    std::ostringstream log;
    for (const char* cmd : {"partition", "antichain", "sequences", "quantize"}) {
      CHECK(run_command(cmd, cfg, log).ok());
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto text = slurp(cfg.output_dir / names[i]);
      if (threads == 1) {
        first.push_back(text);
      } else {
        CAPTURE(names[i]);
        CHECK(text == first[i]);
      }
    }
  }
}

TEST_CASE("failure list is machine readable") {
  CommandResult r{"quantize", {{"sandwich", 3, "x"}}, {}};
  const auto s = failures_json(r);
  CHECK(s.find("\"invariant\":\"sandwich\"") != std::string::npos);
  CHECK(s.find("\"ok\":false") != std::string::npos);
}
