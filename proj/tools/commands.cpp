#include "commands.hpp"

#include "output.hpp"

#include "carpetq/coding.hpp"
#include "carpetq/kernels.hpp"
#include "carpetq/quantizer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace carpetq::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// nlohmann rejects NaN; emit null instead.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Outputs {
 public:
  Outputs(const RunConfig& cfg, CommandResult& result) : cfg_(cfg), result_(result) {}

  void csv(const std::string& name, const CsvTable& table) {
    if (cfg_.wants("csv")) put(name + ".csv", table.str());
  }
  void json_doc(const std::string& name, const json& doc) {
    if (cfg_.wants("json")) put(name + ".json", doc.dump(2) + "\n");
  }
  void svg(const std::string& name, const std::string& text) {
    if (cfg_.wants("svg")) put(name + ".svg", text);
  }

 private:
  void put(const std::string& file, const std::string& text) {
    write_text(cfg_.output_dir / file, text);
    result_.written.push_back(file);
  }
  const RunConfig& cfg_;
  CommandResult& result_;
};

json carpet_json(const RunConfig& cfg) {
  json maps = json::array();
  for (const auto& w : cfg.spec.maps) {
    maps.push_back({{"i", w.digit.i}, {"j", w.digit.j}, {"p", to_string(w.p)}});
  }
  return {{"n", cfg.spec.n}, {"m", cfg.spec.m}, {"maps", maps}};
}

EnumerationOptions enum_options(const RunConfig& cfg) { return {cfg.cap_words, cfg.threads}; }

void fail(CommandResult& r, std::string invariant, int k, std::string detail) {
  r.failures.push_back({std::move(invariant), k, std::move(detail)});
}

}  // namespace

CommandResult cmd_validate(const RunConfig& cfg, std::ostream& log) {
  CommandResult r{"validate", {}, {}};
  Outputs out(cfg, r);
  const auto report = validate_spec(cfg.spec);
  for (const auto& e : report.errors) fail(r, e.invariant, 0, e.message);
  json warnings = json::array();
  for (const auto& w : report.warnings) {
    warnings.push_back({{"invariant", w.invariant}, {"message", w.message}});
    log << "warning [" << w.invariant << "] " << w.message << "\n";
  }
  if (!report.ok()) return r;

  const Carpet carpet(cfg.spec);
  const auto& d = carpet.params();
  const bool separated = check_separation(cfg.spec);
  CsvTable t{{"name", "value"}, {}};
  auto row = [&](const std::string& name, const std::string& v) { t.add({name, v}); };
  row("theta", fmt(d.theta));
  row("k0", fmt(d.k0));
  row("p_min", to_string(d.p_min));
  row("p_max", to_string(d.p_max));
  row("q_min", to_string(d.q_min));
  row("q_max", to_string(d.q_max));
  row("eta", to_string(d.eta));
  row("s0", fmt(d.s0));
  row("Hp", fmt(d.Hp));
  row("C0", fmt(d.C0));
  row("C1", fmt(d.C1));
  row("delta", fmt(d.delta));
  row("A1", std::to_string(d.A1));
  row("A2", std::to_string(d.A2));
  row("D0", fmt(d.D0));
  row("ball_exponent", fmt(d.ball_exponent));
  row("eps0", fmt(d.eps0));
  row("D_ball", fmt(d.D_ball));
  row("C_ball", fmt(d.C_ball));
  row("separated", fmt_bool(separated));
  out.csv("validate", t);

  json q = json::object();
  for (const auto& [j, v] : d.q) q[std::to_string(j)] = to_string(v);
  json params = {{"theta", d.theta}, {"k0", d.k0}, {"Gy", d.Gy}, {"q", q},
                 {"p_min", to_string(d.p_min)}, {"p_max", to_string(d.p_max)},
                 {"q_min", to_string(d.q_min)}, {"q_max", to_string(d.q_max)},
                 {"eta", to_string(d.eta)}, {"s0", d.s0}, {"Hp", d.Hp}, {"C0", d.C0},
                 {"C1", d.C1}, {"delta", d.delta}, {"A1", d.A1}, {"A2", d.A2}, {"D0", d.D0},
                 {"ball_exponent", d.ball_exponent}, {"eps0", d.eps0}, {"D_ball", d.D_ball},
                 {"C_ball", d.C_ball}};
  out.json_doc("validate", {{"carpet", carpet_json(cfg)}, {"valid", true},
                            {"separated", separated}, {"warnings", warnings},
                            {"params", params}});
  log << "valid carpet, s0 = " << fmt(d.s0) << ", theta = " << fmt(d.theta)
      << (separated ? "" : " (digits not separated)") << "\n";
  return r;
}

CommandResult cmd_partition(const RunConfig& cfg, std::ostream& log) {
  CommandResult r{"partition", {}, {}};
  Outputs out(cfg, r);
  const Carpet carpet(cfg.spec);
  const std::vector<std::string> checks{"mass_sum_one",   "stopping_rule", "mass_ratio",
                                        "diameter_bounds", "phi_eta_bounds", "xi_bounds",
                                        "disjoint_interiors"};
  CsvTable t{{"k", "phi_k", "xi_min", "xi_max", "mass_sum"}, {}};
  for (const auto& c : checks) t.columns.push_back(c);
  t.columns.push_back("phi_consecutive");
  t.columns.push_back("pass");
  json rows = json::array();
  std::optional<PartitionStats> prev;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    PartitionStats st;
    try {
      const auto part = enumerate_lambda_k(carpet, k, enum_options(cfg));
      st = partition_stats(carpet, part);
    } catch (const ResourceLimitError& e) {
      fail(r, "resource_limit", k, e.what());
      log << "k=" << k << " skipped: " << e.what() << "\n";
      prev.reset();
      continue;
    }
    std::vector<std::string> row{fmt(k), fmt(st.phi_k), fmt(st.xi_min), fmt(st.xi_max),
                                 to_string(st.mass_sum)};
    json jchecks = json::object();
    for (const auto& c : st.checks) {
      jchecks[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
      if (!c.pass) fail(r, c.name, k, c.detail);
    }
    for (const auto& name : checks) {
      const auto* c = st.find(name);
      row.push_back(c ? fmt_bool(c->pass) : "n/a");
    }
    bool pass = st.all_pass();
    if (prev && prev->k == k - 1) {
      const auto c = check_consecutive(carpet, *prev, st);
      jchecks[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
      if (!c.pass) fail(r, c.name, k, c.detail);
      pass = pass && c.pass;
      row.push_back(fmt_bool(c.pass));
    } else {
      row.push_back("n/a");
    }
    row.push_back(fmt_bool(pass));
    t.add(row);
    rows.push_back({{"k", k}, {"phi_k", st.phi_k}, {"xi_min", st.xi_min}, {"xi_max", st.xi_max},
                    {"mass_sum", to_string(st.mass_sum)}, {"checks", jchecks}, {"pass", pass}});
    log << "k=" << k << " phi_k=" << st.phi_k << " xi=[" << st.xi_min << "," << st.xi_max
        << "] mass=" << to_string(st.mass_sum) << " " << (pass ? "pass" : "FAIL") << "\n";
    prev = std::move(st);
  }
  out.csv("partition", t);
  out.json_doc("partition", {{"carpet", carpet_json(cfg)}, {"levels", rows}});
  return r;
}

CommandResult cmd_antichain(const RunConfig& cfg, std::ostream& log) {
  CommandResult r{"antichain", {}, {}};
  Outputs out(cfg, r);
  const Carpet carpet(cfg.spec);
  const double C1 = carpet.params().C1;
  CsvTable t{{"k", "phi_k", "antichain_size", "families", "l_min", "l_max", "incomparable",
              "mass_one", "maximal", "family_mass_exact", "weighted_length_exact", "mass_band_holds", "family_bounds",
              "delta_k", "C1", "delta_le_C1", "t_k", "d_min", "d_max", "pass"},
             {}};
  json rows = json::array();
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    PartitionLambdaK part;
    try {
      part = enumerate_lambda_k(carpet, k, enum_options(cfg));
    } catch (const ResourceLimitError& e) {
      fail(r, "resource_limit", k, e.what());
      log << "k=" << k << " skipped: " << e.what() << "\n";
      continue;
    }
    Antichain ac;
    try {
      ac = build_antichain(carpet, part);
    } catch (const AntichainError& e) {
      fail(r, "antichain_construction", k, e.what());
      log << "k=" << k << " construction failed: " << e.what() << "\n";
      continue;
    }
    const auto rep = verify_maximal_antichain(carpet, ac.words, cfg.threads);
    const auto tv = compute_t(carpet, ac.words);
    std::size_t families = 0;
    for (const auto& s : ac.stages) families += s.families;
    const bool delta_ok = ac.delta_k <= C1;
    const bool pass = rep.maximal() && ac.family_mass_exact() && ac.weighted_length_exact() && ac.mass_band_holds() &&
                      ac.family_bounds_hold() && delta_ok;
    if (!rep.incomparable) fail(r, "incomparable", k, rep.example);
    if (!rep.mass_one) fail(r, "mass_one", k, "mass = " + to_string(rep.mass_sum));
    if (!ac.family_mass_exact()) fail(r, "family_mass_exact", k, "family mass identity fails");
    if (!ac.weighted_length_exact()) fail(r, "weighted_length_exact", k, "weighted length changed");
    if (!ac.mass_band_holds()) fail(r, "mass_band_holds", k, "replacement words leave the mass band");
    if (!ac.family_bounds_hold()) fail(r, "family_bounds", k, "family term exceeds C1 mass");
    if (!delta_ok) fail(r, "delta_le_C1", k, "delta_k = " + fmt(ac.delta_k));
    t.add({fmt(k), fmt(part.phi_k()), fmt(ac.size()), fmt(families), fmt(ac.l_min),
           fmt(ac.l_max), fmt_bool(rep.incomparable), fmt_bool(rep.mass_one),
           fmt_bool(rep.maximal()), fmt_bool(ac.family_mass_exact()), fmt_bool(ac.weighted_length_exact()),
           fmt_bool(ac.mass_band_holds()), fmt_bool(ac.family_bounds_hold()), fmt(ac.delta_k), fmt(C1),
           fmt_bool(delta_ok), fmt(tv.t), fmt(tv.d_min), fmt(tv.d_max), fmt_bool(pass)});
    json stages = json::array();
    for (const auto& s : ac.stages) {
      stages.push_back({{"stage", s.stage}, {"xi", s.xi}, {"gamma_size", s.gamma_size},
                        {"families", s.families}, {"f_words", s.f_words},
                        {"g_words", s.g_words}, {"f_mass", to_string(s.f_mass)},
                        {"g_mass", to_string(s.g_mass)}, {"family_mass_failures", s.family_mass_failures},
                        {"mass_band_failures", s.mass_band_failures}, {"bound_failures", s.bound_failures},
                        {"max_family_ratio", s.max_family_ratio}});
    }
    rows.push_back({{"k", k}, {"phi_k", part.phi_k()}, {"antichain_size", ac.size()},
                    {"families", families}, {"xi", ac.xi}, {"maximal", rep.maximal()},
                    {"mass", to_string(rep.mass_sum)}, {"family_mass_exact", ac.family_mass_exact()},
                    {"weighted_length_exact", ac.weighted_length_exact()},
                    {"weighted_length", to_string(ac.final_weighted_length)},
                    {"delta_k", ac.delta_k}, {"delta_k_direct", ac.delta_k_direct}, {"C1", C1},
                    {"t_k", tv.t}, {"stages", stages}, {"pass", pass}});
    log << "k=" << k << " maximal: " << fmt_bool(rep.maximal()) << ", mass: "
        << to_string(rep.mass_sum) << " (exact), delta_k <= C1: " << fmt_bool(delta_ok)
        << " (size " << ac.size() << ", " << families << " families)\n";
  }
  out.csv("antichain", t);
  out.json_doc("antichain", {{"carpet", carpet_json(cfg)}, {"levels", rows}});
  return r;
}

CommandResult cmd_sequences(const RunConfig& cfg, std::ostream& log) {
  CommandResult r{"sequences", {}, {}};
  Outputs out(cfg, r);
  const Carpet carpet(cfg.spec);
  CsvTable t{{"k", "phi_k", "xi_min", "xi_max", "d_k", "t_k", "s_k", "s0", "bound_dk",
              "bound_sk", "pass"},
             {}};
  json rows = json::array();
  std::vector<double> ks, scaled;
  std::vector<SequencePoint> points;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    SkValue s;
    double t_k = std::nan("");
    try {
      const auto part = enumerate_lambda_k(carpet, k, enum_options(cfg));
      s = compute_s_k(carpet, part);
      t_k = compute_t(carpet, build_antichain(carpet, part).words).t;
    } catch (const ResourceLimitError&) {
      // Too many words to hold: stream s_k, leave t_k empty.
      s = compute_s_k_stream(carpet, k, cfg.threads);
    }
    const auto p = make_sequence_point(carpet, s, t_k);
    points.push_back(p);
    if (!p.pass) fail(r, "sequence_bounds", k, "d_k, s_k or t_k outside its bound");
    t.add({fmt(k), fmt(p.phi_k), fmt(p.xi_min), fmt(p.xi_max), fmt(p.d_k), fmt(p.t_k),
           fmt(p.s_k), fmt(p.s0), fmt(p.bound_dk), fmt(p.bound_sk), fmt_bool(p.pass)});
    rows.push_back({{"k", k}, {"phi_k", p.phi_k}, {"xi_min", p.xi_min}, {"xi_max", p.xi_max},
                    {"d_k", p.d_k}, {"t_k", number(p.t_k)}, {"s_k", p.s_k}, {"s0", p.s0},
                    {"bound_dk", p.bound_dk}, {"bound_sk", p.bound_sk},
                    {"bound_tk", p.bound_tk}, {"pass", p.pass}});
    ks.push_back(k);
    scaled.push_back(k * std::abs(p.s_k - p.s0));
    log << "k=" << k << " d_k=" << fmt(p.d_k) << " s_k=" << fmt(p.s_k)
        << " t_k=" << fmt(p.t_k) << " " << (p.pass ? "pass" : "FAIL") << "\n";
  }
  json doc = {{"carpet", carpet_json(cfg)}, {"levels", rows}};
  if (ks.size() >= 3) {
    const auto trend = no_increase(ks, scaled);
    doc["scaled_sk_trend"] = {{"slope", trend.fit.slope},
                              {"slope_stderr", trend.fit.slope_stderr},
                              {"pass", trend.pass}};
    if (!trend.pass) fail(r, "scaled_sk_no_increase", 0, "slope " + fmt(trend.fit.slope));
  }
  out.csv("sequences", t);
  out.json_doc("sequences", doc);
  return r;
}

CommandResult cmd_quantize(const RunConfig& cfg, std::ostream& log) {
  CommandResult r{"quantize", {}, {}};
  Outputs out(cfg, r);
  const Carpet carpet(cfg.spec);
  const auto cloud = draw_cloud(carpet, cfg.cloud_size, cfg.depth, cfg.seed, cfg.threads);
  QuantOptions qo;
  qo.refine_iters = cfg.refine_iters;
  qo.cap_words = cfg.cap_words;
  qo.threads = cfg.threads;
  CsvTable t{{"k", "phi_k", "lower_anchor", "upper_anchor", "e_hat_est", "stderr", "R_k"}, {}};
  json rows = json::array();
  std::vector<double> ks, rk;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    QuantDiagnostics d;
    try {
      d = r_k_diagnostic(carpet, k, cloud, qo);
    } catch (const ResourceLimitError& e) {
      fail(r, "resource_limit", k, e.what());
      log << "k=" << k << " skipped: " << e.what() << "\n";
      continue;
    }
    if (!d.sandwich) fail(r, "sandwich", k, "estimate above upper anchor + 3 stderr");
    if (!d.gap_exact || d.upper_anchor - d.lower_anchor > d.gap_bound + 1e-12) {
      fail(r, "anchor_gap", k, "upper - lower = " + fmt(d.upper_anchor - d.lower_anchor));
    }
    if (d.lower_anchor > d.upper_anchor) fail(r, "anchor_order", k, "lower > upper");
    t.add({fmt(k), fmt(d.phi_k), fmt(d.lower_anchor), fmt(d.upper_anchor), fmt(d.e_hat_est),
           fmt(d.std_error), fmt(d.R_k)});
    rows.push_back({{"k", k}, {"phi_k", d.phi_k}, {"lower_anchor", d.lower_anchor},
                    {"upper_anchor", d.upper_anchor}, {"e_hat_est", d.e_hat_est},
                    {"stderr", d.std_error}, {"R_k", d.R_k}, {"R_lower", d.R_lower},
                    {"R_upper", d.R_upper}, {"gap_bound", d.gap_bound},
                    {"gap_exact", d.gap_exact}, {"sandwich", d.sandwich},
                    {"lambda_estimate", d.lambda_estimate},
                    {"lambda_stderr", d.lambda_std_error}, {"floored", d.floored},
                    {"refined_estimate", number(d.refined_estimate)}});
    ks.push_back(k);
    rk.push_back(d.R_k);
    log << "k=" << k << " phi_k=" << d.phi_k << " e_hat=" << fmt(d.e_hat_est) << " +- "
        << fmt(d.std_error) << " R_k=" << fmt(d.R_k) << " anchors=[" << fmt(d.lower_anchor)
        << ", " << fmt(d.upper_anchor) << "]\n";
  }
  json doc = {{"carpet", carpet_json(cfg)},
              {"cloud", {{"size", cloud.size()}, {"depth", cloud.depth}, {"seed", cfg.seed}}},
              {"distance_floor", kDistanceFloor},
              {"levels", rows}};
  if (ks.size() >= 3) {
    const auto drift = no_drift(ks, rk);
    doc["R_k_drift"] = {{"slope", drift.fit.slope},
                        {"slope_stderr", drift.fit.slope_stderr},
                        {"pass", drift.pass}};
    if (!drift.pass) fail(r, "R_k_no_drift", 0, "slope " + fmt(drift.fit.slope));
    log << "R_k slope " << fmt(drift.fit.slope) << " +- " << fmt(drift.fit.slope_stderr)
        << (drift.pass ? " (no drift)" : " (DRIFT)") << "\n";
  }

  std::vector<double> radii;
  for (int e = cfg.ball_min_level; e <= cfg.ball_max_level; ++e) {
    radii.push_back(std::pow(static_cast<double>(carpet.m()), -e));
  }
  const auto ball = ball_bound_check(carpet, cloud, cfg.ball_centers, radii,
                                     shard_seed(cfg.seed, 0xBA11), cfg.threads);
  json jball = {{"skipped", ball.skipped}, {"reason", ball.reason},
                {"exponent", ball.exponent}, {"C_ball", ball.C_ball},
                {"centers", cfg.ball_centers}, {"pass", ball.pass()}};
  if (ball.skipped) {
    log << "ball bound skipped: " << ball.reason << "\n";
  } else {
    CsvTable bt{{"center", "x", "y", "eps", "mass", "sigma", "bound", "pass"}, {}};
    for (const auto& row : ball.rows) {
      bt.add({fmt(row.center), fmt(row.x.x), fmt(row.x.y), fmt(row.eps), fmt(row.mass),
              fmt(row.sigma), fmt(row.bound), fmt_bool(row.pass)});
      if (!row.pass) fail(r, "ball_bound", 0, "center " + fmt(row.center) + " eps " + fmt(row.eps));
    }
    out.csv("ball", bt);
    jball["max_ratio"] = ball.max_ratio;
    log << "ball bound " << (ball.pass() ? "pass" : "FAIL") << ", max mass / bound "
        << fmt(ball.max_ratio) << "\n";
  }
  doc["ball_bound"] = jball;
  out.csv("quantize", t);
  out.json_doc("quantize", doc);
  return r;
}

CommandResult cmd_report(const RunConfig& cfg, std::ostream& log) {
  CommandResult r{"report", {}, {}};
  Outputs out(cfg, r);
  const std::vector<std::string> tables{"partition", "antichain", "sequences", "quantize", "ball"};
  CsvTable summary{{"table", "rows", "passing_rows", "all_pass"}, {}};
  json doc = json::object();
  bool any = false;
  for (const auto& name : tables) {
    const fs::path path = cfg.output_dir / (name + ".csv");
    if (!fs::exists(path)) continue;
    any = true;
    const auto t = read_csv(path);
    std::size_t passing = t.rows.size();
    const bool has_pass = std::find(t.columns.begin(), t.columns.end(), "pass") != t.columns.end();
    if (has_pass) {
      passing = 0;
      for (const auto& v : t.column("pass")) passing += v == "true" ? 1 : 0;
    }
    const bool all = passing == t.rows.size();
    if (!all) fail(r, name + "_rows", 0, fmt(t.rows.size() - passing) + " failing rows");
    summary.add({name, fmt(t.rows.size()), has_pass ? fmt(passing) : "n/a", fmt_bool(all)});
    doc[name] = {{"rows", t.rows.size()}, {"all_pass", all}};
    log << name << ": " << t.rows.size() << " rows" << (all ? "" : ", with failures") << "\n";

    auto col = [&](const std::string& c) {
      std::vector<double> v;
      for (const auto& s : t.column(c)) v.push_back(std::strtod(s.c_str(), nullptr));
      return v;
    };
    if (name == "sequences" && !t.rows.empty()) {
      const auto k = col("k");
      out.svg("sequences", line_chart("Entropy sequences", "k", "dimension",
                                      {{"d_k", k, col("d_k")},
                                       {"s_k", k, col("s_k")},
                                       {"t_k", k, col("t_k")},
                                       {"s0", k, col("s0"), true}}));
    }
    if (name == "quantize" && !t.rows.empty()) {
      const auto k = col("k");
      // log(phi_k) / s0 = R_k - e_hat, so the anchors shift onto the same scale.
      const auto R = col("R_k"), e = col("e_hat_est"), lo = col("lower_anchor"),
                 hi = col("upper_anchor");
      std::vector<double> r_lo, r_hi;
      for (std::size_t i = 0; i < R.size(); ++i) {
        r_lo.push_back(R[i] - e[i] + lo[i]);
        r_hi.push_back(R[i] - e[i] + hi[i]);
      }
      out.svg("r_k", line_chart("Normalized log quantization error", "k", "R_k",
                                {{"R_k", k, R},
                                 {"lower anchor", k, r_lo, true},
                                 {"upper anchor", k, r_hi, true}}));
    }
  }
  if (!any) {
    throw std::runtime_error("nothing to report: no partition, antichain, sequences, quantize "
                             "or ball tables in " + cfg.output_dir.string());
  }
  out.csv("report", summary);
  out.json_doc("report", doc);
  return r;
}

CommandResult run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
  if (name == "validate") return cmd_validate(cfg, log);
  if (name == "partition") return cmd_partition(cfg, log);
  if (name == "antichain") return cmd_antichain(cfg, log);
  if (name == "sequences") return cmd_sequences(cfg, log);
  if (name == "quantize") return cmd_quantize(cfg, log);
  if (name == "report") return cmd_report(cfg, log);
  throw std::invalid_argument("unknown command \"" + name + "\"");
}

std::string failures_json(const CommandResult& result) {
  json list = json::array();
  for (const auto& f : result.failures) {
    list.push_back({{"invariant", f.invariant}, {"k", f.k}, {"detail", f.detail}});
  }
  return json{{"command", result.command}, {"ok", result.ok()}, {"failures", list}}.dump();
}

}  // namespace carpetq::cli
