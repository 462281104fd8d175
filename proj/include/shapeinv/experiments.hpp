#pragma once

// Experiment drivers shared by the command-line tool and the acceptance run.
// Each command takes a resolved JSON config and an output directory, writes
// its artifacts there and returns a summary object.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "distance.hpp"
#include "fano.hpp"
#include "identifiability.hpp"
#include "io.hpp"
#include "posterior.hpp"
#include "prior.hpp"

namespace shapeinv::experiments {

namespace fs = std::filesystem;
using io::json;
using io::CsvTable;

inline const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v = {"simulate", "prior", "posterior", "distances", "identifiability",
                                             "fano", "contraction", "report"};
  return v;
}

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

inline json scenario_defaults() {
  return json{{"K", 4},
              {"M", 256},
              {"s", 1.0},
              {"beta", 2.5},
              {"f0", json::array({json::array({1, 1.2, 0.0}), json::array({2, 0.6, 0.0})})},
              {"g0", json::array({json::array({1, 0.5, 0.0}), json::array({2, 0.0, 0.2})})}};
}

inline json prior_defaults(double sieve_n) {
  return json{{"sieve", {{"n", sieve_n}, {"rho", 1.5}, {"c_lambda", 1.0}, {"K_max", 32}}},
              {"g", {{"nu", 1.6}, {"A", 2.0}, {"M", 256}, {"N_kl", 512}, {"max_attempts", 1000}}}};
}

inline json chain_defaults() {
  return json{{"sweeps", 20000},      {"burn_frac", 0.25},        {"thin", 5},
              {"f_step", 0.0},        {"beta_pcn", 0.2},          {"hellinger_budget", 1000},
              {"hellinger_every", 1}, {"prior_only", false},      {"debug_check", false}};
}

inline json default_config(const std::string& verb) {
  json c{{"schema_version", io::kSchemaVersion}, {"seed", 1}};
  if (verb == "simulate") {
    c["scenario"] = scenario_defaults();
    c["n"] = 100;
  } else if (verb == "prior") {
    c["prior"] = prior_defaults(100.0);
    c["draws"] = 6;
    c["smallball"] = {{"k", json::array({0, 1})},
                      {"eps", json::array({0.25, 0.3, 0.35, 0.4, 0.5, 0.6})},
                      {"reps", 100000},
                      {"M", 4096},
                      {"N_kl", 512}};
  } else if (verb == "posterior") {
    c["scenario"] = scenario_defaults();
    c["n"] = 100;
    c["dataset"] = "";
    c["prior"] = prior_defaults(0.0);
    c["chain"] = chain_defaults();
  } else if (verb == "distances") {
    c["pairs"] = 50;
    c["K_max"] = 3;
    c["M"] = 64;
    c["budget"] = 20000;
    c["coef_scale"] = 1.0;
  } else if (verb == "identifiability") {
    c["bessel"] = {{"n_max", 20}, {"a", json::array({0.1, 0.5, 1.0, 2.5, 5.0, 7.5, 10.0})}};
    c["equivalents_n"] = json::array({4, 9, 16, 25});
    c["In"] = {{"n_max", 30}, {"theta1", json::array({0.5, 1.0, 2.0})}};
    c["pairs"] = 50;
    c["M"] = 64;
    c["disk_theta10"] = json::array({0.6, 1.0, 1.6});
    c["phase_gaps"] = json::array({0.25, 0.5, 1.0, 1.5708});
  } else if (verb == "fano") {
    c["p"] = json::array({4, 8});
    c["s"] = 1.0;
    c["nu"] = 1.6;
    c["beta"] = 2.5;
    c["A"] = 2.0;
    c["budget"] = 20000;
    c["pipeline_n"] = json::array({100, 1000});
    c["kappa"] = 12.5;
    c["pipeline_budget"] = 2000;
  } else if (verb == "contraction") {
    c["scenario"] = scenario_defaults();
    c["n_grid"] = json::array({25, 100, 400});
    c["prior"] = prior_defaults(0.0);
    c["chain"] = chain_defaults();
  } else if (verb == "report") {
  } else {
    throw ConfigError("unknown command '" + verb + "'");
  }
  return c;
}

namespace detail {

inline bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

inline void merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
  for (auto& [k, v] : user.items()) {
    std::string key = path.empty() ? k : path + "." + k;
    if (!base.contains(k)) throw ConfigError("config: unknown key '" + key + "'");
    json& b = base[k];
    if (b.is_object()) {
      merge(b, v, key);
      continue;
    }
    if (!same_kind(b, v)) throw ConfigError("config: '" + key + "' has the wrong type");
    b = v;
  }
}

}  // namespace detail

// Defaults overlaid with the user config; unknown keys and type changes are rejected.
inline json resolve_config(const std::string& verb, const json& user) {
  json c = default_config(verb);
  detail::merge(c, user, "");
  if (c.at("schema_version").get<int>() != io::kSchemaVersion)
    throw ConfigError("config: schema_version must be " + std::to_string(io::kSchemaVersion));
  return c;
}

inline std::uint64_t master_seed(const json& c) { return c.at("seed").get<std::uint64_t>(); }

struct Scenario {
  FourierSeries f0;
  ShiftDensity g0 = ShiftDensity::uniform(4);
  int K = 0;
  double s = 1.0;
  double beta = 2.5;  // assumed decay of the shift coefficients, only enters the proof exponent
};

inline Scenario parse_scenario(const json& c) {
  Scenario sc;
  sc.K = c.at("K").get<int>();
  sc.s = c.at("s").get<double>();
  sc.beta = c.at("beta").get<double>();
  if (!(sc.s > 0.0)) throw ConfigError("scenario: s must be > 0");
  int M = c.at("M").get<int>();
  if (sc.K < 1) throw ConfigError("scenario: K must be >= 1");
  if (M < 64) throw ConfigError("scenario: M must be >= 64");
  std::map<int, cplx> m;
  for (auto& t : c.at("f0")) {
    if (!t.is_array() || t.size() != 3) throw ConfigError("scenario.f0: entries are [l, re, im]");
    m[t[0].get<int>()] = cplx{t[1].get<double>(), t[2].get<double>()};
  }
  std::vector<cplx> gc;
  for (auto& t : c.at("g0")) {
    if (!t.is_array() || t.size() != 3) throw ConfigError("scenario.g0: entries are [k, cos, sin]");
    int k = t[0].get<int>();
    if (k < 1 || k >= M / 2) throw ConfigError("scenario.g0: harmonic out of range");
    if (static_cast<int>(gc.size()) < k) gc.resize(static_cast<std::size_t>(k));
    gc[k - 1] += cplx{t[1].get<double>(), -t[2].get<double>()} / 2.0;
  }
  try {
    sc.f0 = FourierSeries::from_map(m, true);
    sc.g0 = ShiftDensity::from_coefficients(M, gc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return sc;
}

inline PosteriorPrior parse_prior(const json& c) {
  PosteriorPrior p;
  auto& s = c.at("sieve");
  p.sieve.n = s.at("n").get<double>();
  p.sieve.rho = s.at("rho").get<double>();
  p.sieve.c_lambda = s.at("c_lambda").get<double>();
  p.sieve.K_max = s.at("K_max").get<int>();
  if (!(p.sieve.rho > 0.0)) throw ConfigError("prior.sieve.rho must be > 0");
  if (!(p.sieve.c_lambda > 0.0)) throw ConfigError("prior.sieve.c_lambda must be > 0");
  if (p.sieve.K_max < 1) throw ConfigError("prior.sieve.K_max must be >= 1");
  auto& g = c.at("g");
  p.g.nu = g.at("nu").get<double>();
  p.g.A = g.at("A").get<double>();
  p.g.M = g.at("M").get<int>();
  p.g.N_kl = g.at("N_kl").get<int>();
  p.g.max_attempts = g.at("max_attempts").get<int>();
  p.g.validate();
  return p;
}

inline ChainConfig parse_chain(const json& c, std::uint64_t seed) {
  ChainConfig k;
  k.sweeps = c.at("sweeps").get<int>();
  k.burn_frac = c.at("burn_frac").get<double>();
  k.thin = c.at("thin").get<int>();
  k.f_step = c.at("f_step").get<double>();
  k.beta_pcn = c.at("beta_pcn").get<double>();
  k.hellinger_budget = c.at("hellinger_budget").get<int>();
  k.hellinger_every = c.at("hellinger_every").get<int>();
  k.prior_only = c.at("prior_only").get<bool>();
  k.debug_check = c.at("debug_check").get<bool>();
  k.seed = seed;
  k.validate();
  return k;
}

// Independent seeds for the pieces of one command.
inline std::uint64_t data_seed(std::uint64_t master) { return splitmix64(master ^ 0xda7a5eedULL); }
inline std::uint64_t chain_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ 0xc4a1115eedULL) + index);
}

struct CommandResult {
  json summary;
  int exit_code = 0;  // 0 success, 4 acceptance failure
};

inline json envelope(const std::string& verb, const json& config, json results, bool ok = true) {
  return json{{"schema_version", io::kSchemaVersion},
              {"command", verb},
              {"status", ok ? "ok" : "check_failed"},
              {"config", config},
              {"results", std::move(results)}};
}

inline json metric_json(const MetricSummary& m) {
  return json{{"median", m.median}, {"median_stderr", m.median_stderr}, {"mean", m.mean}, {"ess", m.ess}, {"count", m.count}};
}

inline json moves_json(const PosteriorSummary& s) {
  auto mv = [](const MoveStats& m) { return json{{"proposed", m.proposed}, {"accepted", m.accepted}, {"rate", m.rate()}}; };
  return json{{"theta1", mv(s.theta1)}, {"coef", mv(s.coef)}, {"birth", mv(s.birth)},
              {"death", mv(s.death)},   {"pcn", mv(s.pcn)},   {"ball_rejections", s.ball_rejections}};
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline CommandResult cmd_simulate(const json& cfg, const fs::path& out) {
  auto sc = parse_scenario(cfg.at("scenario"));
  int n = cfg.at("n").get<int>();
  if (n < 1) throw ConfigError("n must be >= 1");
  auto d = generate_dataset(sc.f0, sc.g0, n, sc.K, master_seed(cfg));
  json dj = io::to_json(d);
  dj["schema_version"] = io::kSchemaVersion;
  dj["config"] = cfg;
  io::write_json(out / "dataset.json", dj);
  json res{{"n", n}, {"K", sc.K}, {"dataset", "dataset.json"}, {"warnings", d.warnings}};
  auto summary = envelope("simulate", cfg, res);
  io::write_json(out / "summary.json", summary);
  return {summary, 0};
}

// ---------------------------------------------------------------------------
// prior
// ---------------------------------------------------------------------------

inline CommandResult cmd_prior(const json& cfg, const fs::path& out) {
  auto pr = parse_prior(cfg.at("prior"));
  if (!(pr.sieve.n > 1.0)) throw ConfigError("prior.sieve.n must be > 1 for prior draws");
  int draws = cfg.at("draws").get<int>();
  if (draws < 1) throw ConfigError("draws must be >= 1");
  auto& sb = cfg.at("smallball");
  SmallBallConfig sbc;
  sbc.reps = sb.at("reps").get<int>();
  sbc.M = sb.at("M").get<int>();
  sbc.N_kl = sb.at("N_kl").get<int>();
  sbc.seed = splitmix64(master_seed(cfg) ^ 0x5b11ULL);
  auto ks = sb.at("k").get<std::vector<int>>();
  auto eps = sb.at("eps").get<std::vector<double>>();
  if (sbc.reps < 100) throw ConfigError("smallball.reps must be >= 100");
  for (int k : ks)
    if (k < 0 || k > 4) throw ConfigError("smallball.k must lie in [0, 4]");
  for (double e : eps)
    if (!(e > 0.0)) throw ConfigError("smallball.eps must be > 0");

  CsvTable coef({"draw", "level", "l", "re", "im"});
  CsvTable dens({"draw", "t", "g", "attempts"});
  std::vector<io::PlotSeries> series;
  for (int i = 0; i < draws; ++i) {
    Rng rng = substream(master_seed(cfg), static_cast<std::uint64_t>(i));
    auto f = sample_sieve_f(pr.sieve, rng);
    for (int l = -f.K(); l <= f.K(); ++l)
      coef.row({std::to_string(i), std::to_string(f.K()), std::to_string(l), io::fmt(f[l].real()), io::fmt(f[l].imag())});
    auto g = sample_g_prior(pr.g, rng);
    io::PlotSeries ps;
    ps.name = "draw " + std::to_string(i);
    for (int m = 0; m < g.g.M(); ++m) {
      double t = static_cast<double>(m) / g.g.M();
      dens.row({std::to_string(i), io::fmt(t), io::fmt(g.g[m]), std::to_string(g.attempts)});
      ps.x.push_back(t);
      ps.y.push_back(g.g[m]);
    }
    series.push_back(std::move(ps));
  }
  coef.write(out / "prior_coefficients.csv", cfg);
  dens.write(out / "prior_densities.csv", cfg);
  io::write_text(out / "prior_densities.svg",
                 io::svg_plot({"prior shift densities", "t", "g(t)"}, series, cfg));

  CsvTable sbt({"k", "epsilon", "reps", "p_hat", "stderr", "censored", "upper95"});
  json fits = json::array();
  std::vector<io::PlotSeries> sbs;
  for (int k : ks) {
    auto pts = smallball_curve(k, eps, sbc);
    io::PlotSeries ps;
    ps.name = "k=" + std::to_string(k);
    for (auto& p : pts) {
      sbt.row({std::to_string(k), io::fmt(p.epsilon), std::to_string(p.reps), io::fmt(p.p_hat), io::fmt(p.stderr_),
               p.censored ? "1" : "0", io::fmt(p.upper95)});
      if (!p.censored && p.p_hat > 0.0 && p.p_hat < 1.0) {
        ps.x.push_back(1.0 / p.epsilon);
        ps.y.push_back(-std::log(p.p_hat));
      }
    }
    json fj{{"k", k}, {"target_slope", 1.0 / (k + 0.5)}};
    try {
      auto fit = smallball_rate_fit(pts);
      fj["slope"] = fit.slope;
      fj["relative_error"] = std::abs(fit.slope * (k + 0.5) - 1.0);
    } catch (const NumericError&) {
      fj["slope"] = nullptr;
      fj["note"] = "fewer than two points with 0 < P < 1";
    }
    fits.push_back(fj);
    sbs.push_back(std::move(ps));
  }
  sbt.write(out / "smallball.csv", cfg);
  io::PlotSpec spec{"small-ball exponent", "1/epsilon", "-log P", true, true};
  io::write_text(out / "smallball.svg", io::svg_plot(spec, sbs, cfg));

  json res{{"xi2", pr.sieve.xi2()}, {"level_weights", pr.sieve.level_weights()}, {"smallball_fits", fits}};
  auto summary = envelope("prior", cfg, res);
  io::write_json(out / "summary.json", summary);
  return {summary, 0};
}

// ---------------------------------------------------------------------------
// posterior
// ---------------------------------------------------------------------------

inline json cutoff_json(const CutoffReport& c) {
  auto ht = [](const HeadTail& h) { return json{{"head", h.head}, {"tail", h.tail}, {"total", h.total}}; };
  return json{{"n", c.n},
              {"eps_n", c.eps_n},
              {"k_shift_cutoff", c.k_shift_cutoff},
              {"k_shape_cutoff", c.k_shape_cutoff},
              {"k_split", c.k_split},
              {"exponent_statement", c.exponent_statement},
              {"exponent_proof", c.exponent_proof},
              {"rate_statement", c.rate_statement},
              {"rate_proof", c.rate_proof},
              {"f_median", ht(c.f_median)},
              {"g_median", ht(c.g_median)},
              {"max_parseval_error", c.max_parseval_error}};
}

inline json chain_json(const ChainResult& r) {
  json m = json::object();
  for (auto& x : r.summary.metrics) m[x.name] = metric_json(x);
  json mass = json::array();
  for (auto& c : r.summary.mass)
    mass.push_back(json{{"metric", c.metric}, {"anchor", c.anchor}, {"radius", c.radius}, {"mass", c.mass}});
  return json{{"n", r.summary.n},
              {"eps_n", r.summary.eps_n},
              {"log_rate_g", r.summary.log_rate_g},
              {"theta1_radius", r.summary.theta1_radius},
              {"kept_samples", r.samples.size()},
              {"metrics", m},
              {"mass_curves", mass},
              {"moves", moves_json(r.summary)},
              {"max_coherence_error", r.summary.max_coherence_error},
              {"coherence_checks", r.summary.coherence_checks}};
}

inline CsvTable chain_table(const ChainResult& r) {
  CsvTable t({"iter", "level", "theta1", "dist_f", "dist_g", "dist_theta1", "hellinger"});
  for (auto& s : r.samples)
    t.row({std::to_string(s.iter), std::to_string(s.level), io::fmt(s.theta1), io::fmt(s.dist_f), io::fmt(s.dist_g),
           io::fmt(s.dist_theta1), io::fmt(s.hellinger)});
  return t;
}

inline CommandResult cmd_posterior(const json& cfg, const fs::path& out) {
  auto pr = parse_prior(cfg.at("prior"));
  auto ch = parse_chain(cfg.at("chain"), chain_seed(master_seed(cfg), 0));
  auto sc = parse_scenario(cfg.at("scenario"));
  std::string path = cfg.at("dataset").get<std::string>();
  Dataset d;
  if (!path.empty()) {
    try {
      d = io::dataset_from_json(json::parse(io::read_text(path)));
    } catch (const std::exception& e) {
      throw ConfigError("dataset '" + path + "': " + e.what());
    }
  } else {
    int n = cfg.at("n").get<int>();
    if (n < 1) throw ConfigError("n must be >= 1");
    d = generate_dataset(sc.f0, sc.g0, n, sc.K, data_seed(master_seed(cfg)));
  }
  if (d.curves.empty() && !ch.prior_only) throw ConfigError("dataset has no curves");
  auto r = run_chain(d, pr, ch, ContractionModel{sc.s});
  chain_table(r).write(out / "chain.csv", cfg);

  json res = chain_json(r);
  if (d.truth) {
    auto g0 = d.truth->g.resampled(pr.g.M);
    auto cut = cutoff_diagnostics(std::max(2.0, r.summary.n), sc.s, pr.g.nu, sc.beta, r.f_samples, d.truth->f,
                                  r.g_samples, g0.values());
    res["cutoffs"] = cutoff_json(cut);
  }
  std::vector<io::PlotSeries> series;
  for (auto& c : r.summary.mass) {
    io::PlotSeries ps{c.metric + " @ " + c.anchor, {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}, c.mass, false};
    series.push_back(std::move(ps));
  }
  io::PlotSpec spec{"posterior mass within radius multiples", "radius / anchor", "posterior mass", true, false};
  io::write_text(out / "mass_curves.svg", io::svg_plot(spec, series, cfg));
  auto summary = envelope("posterior", cfg, res);
  io::write_json(out / "summary.json", summary);
  return {summary, 0};
}

// ---------------------------------------------------------------------------
// distances
// ---------------------------------------------------------------------------

inline ShiftDensity random_shift_density(int M, Rng& rng) {
  std::vector<cplx> c(3);
  for (auto& x : c) x = std::polar(0.15 * uniform01(rng), kTwoPi * uniform01(rng));
  return ShiftDensity::from_coefficients(M, c);
}

inline FourierSeries random_shape(int K, double scale, Rng& rng) {
  FourierSeries f(K);
  for (int l = -K; l <= K; ++l) f.set(l, complex_normal(rng, scale));
  return f;
}

struct BoundSuite {
  int pairs = 0;
  int shape_violations = 0;
  int tv_violations = 0;
  int chain_violations = 0;
  CsvTable shape{{"pair", "K", "tv", "tv_stderr", "bound", "violated"}};
  CsvTable shift{{"pair", "K", "tv", "tv_stderr", "w1", "w1_bound", "tv_bound", "l2_bound", "tv_violated",
                  "chain_violated"}};
};

inline BoundSuite run_bound_suite(int pairs, int K_max, int M, std::size_t budget, double scale, std::uint64_t seed) {
  BoundSuite s;
  s.pairs = pairs;
  struct Row {
    int K;
    ShapeBoundCheck a;
    ShiftBoundCheck b;
  };
  std::vector<Row> rows(static_cast<std::size_t>(pairs));
  parallel_for(rows.size(), [&](std::size_t i) {
    Rng rng = substream(seed, i);
    int K = 1 + static_cast<int>(i % static_cast<std::size_t>(K_max));
    auto f = random_shape(K, scale, rng), ft = random_shape(K, scale, rng);
    auto g = random_shift_density(M, rng), gt = random_shift_density(M, rng);
    MonteCarloBudget b;
    b.samples = budget;
    b.seed = splitmix64(seed + 2 * i);
    rows[i].K = K;
    rows[i].a = check_shape_bound(f, ft, g, b);
    b.seed = splitmix64(seed + 2 * i + 1);
    rows[i].b = check_prop_g_bound(f, g, gt, b);
  }, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    s.shape_violations += r.a.violated();
    s.tv_violations += r.b.tv_violated();
    s.chain_violations += r.b.chain_violated();
    s.shape.row({std::to_string(i), std::to_string(r.K), io::fmt(r.a.tv.value), io::fmt(r.a.tv.stderr_),
                 io::fmt(r.a.bound), r.a.violated() ? "1" : "0"});
    s.shift.row({std::to_string(i), std::to_string(r.K), io::fmt(r.b.tv.value), io::fmt(r.b.tv.stderr_), io::fmt(r.b.w1),
                 io::fmt(r.b.w1_bound), io::fmt(r.b.tv_bound), io::fmt(r.b.l2_bound), r.b.tv_violated() ? "1" : "0",
                 r.b.chain_violated() ? "1" : "0"});
  }
  return s;
}

inline CommandResult cmd_distances(const json& cfg, const fs::path& out) {
  int pairs = cfg.at("pairs").get<int>(), K_max = cfg.at("K_max").get<int>(), M = cfg.at("M").get<int>();
  int budget = cfg.at("budget").get<int>();
  double scale = cfg.at("coef_scale").get<double>();
  if (pairs < 1) throw ConfigError("pairs must be >= 1");
  if (K_max < 1) throw ConfigError("K_max must be >= 1");
  if (M < 16) throw ConfigError("M must be >= 16");
  if (budget < 2) throw ConfigError("budget must be >= 2");
  if (!(scale > 0.0)) throw ConfigError("coef_scale must be > 0");
  auto s = run_bound_suite(pairs, K_max, M, static_cast<std::size_t>(budget), scale, master_seed(cfg));
  s.shape.write(out / "shape_bound.csv", cfg);
  s.shift.write(out / "shift_bound.csv", cfg);
  bool ok = s.shape_violations == 0 && s.tv_violations == 0 && s.chain_violations == 0;
  json res{{"pairs", pairs},
           {"shape_bound_violations", s.shape_violations},
           {"shift_bound_violations", s.tv_violations},
           {"shift_chain_violations", s.chain_violations}};
  auto summary = envelope("distances", cfg, res, ok);
  io::write_json(out / "summary.json", summary);
  return {summary, ok ? 0 : 4};
}

// ---------------------------------------------------------------------------
// identifiability
// ---------------------------------------------------------------------------

inline CommandResult cmd_identifiability(const json& cfg, const fs::path& out) {
  int n_max = cfg.at("bessel").at("n_max").get<int>();
  auto as = cfg.at("bessel").at("a").get<std::vector<double>>();
  auto eq_n = cfg.at("equivalents_n").get<std::vector<int>>();
  int in_max = cfg.at("In").at("n_max").get<int>();
  auto in_t = cfg.at("In").at("theta1").get<std::vector<double>>();
  int pairs = cfg.at("pairs").get<int>(), M = cfg.at("M").get<int>();
  auto disk_t = cfg.at("disk_theta10").get<std::vector<double>>();
  auto gaps = cfg.at("phase_gaps").get<std::vector<double>>();
  if (n_max < 0 || in_max < 0) throw ConfigError("n_max must be >= 0");
  for (double a : as)
    if (!(a > 0.0 && a <= kBesselMaxArgument)) throw ConfigError("bessel.a must lie in (0, 700]");
  for (int n : eq_n)
    if (n < 1) throw ConfigError("equivalents_n must be >= 1");
  for (double t : in_t)
    if (!(t > 0.0)) throw ConfigError("In.theta1 must be > 0");
  for (double t : disk_t)
    if (!(t > 0.0)) throw ConfigError("disk_theta10 must be > 0");
  if (M < 16 || pairs < 0) throw ConfigError("M must be >= 16 and pairs >= 0");

  CsvTable bt({"n", "a", "series", "quadrature", "boost", "rel_err_quadrature", "rel_err_boost"});
  double max_q = 0.0, max_b = 0.0;
  for (int n = 0; n <= n_max; ++n)
    for (double a : as) {
      double s = bessel_A(n, a), q = bessel_A_quadrature(n, a), b = kTwoPi * boost::math::cyl_bessel_i(n, a);
      double eq = std::abs(s / q - 1.0), eb = std::abs(s / b - 1.0);
      max_q = std::max(max_q, eq), max_b = std::max(max_b, eb);
      bt.row(std::vector<double>{double(n), a, s, q, b, eq, eb});
    }
  bt.write(out / "bessel.csv", cfg);

  CsvTable dt({"n", "nth_derivative_series", "expected", "rel_err"});
  double max_d = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    double d = std::tgamma(n + 1.0) * bessel_A_series_coefficient(n, n), e = std::pow(2.0, 1.0 - n) * kPi;
    max_d = std::max(max_d, std::abs(d / e - 1.0));
    dt.row(std::vector<double>{double(n), d, e, std::abs(d / e - 1.0)});
  }
  dt.write(out / "bessel_derivative.csv", cfg);

  CsvTable et({"n", "a", "ratio_small", "envelope", "within"});
  int eq_bad = 0;
  for (int n : eq_n) {
    double amax = std::sqrt(static_cast<double>(n));
    for (double frac : {0.1, 0.25, 0.5, 0.75, 1.0}) {
      double a = frac * amax;
      auto r = bessel_equivalents_check(n, a);
      // ratio - 1 within twice the first-order term a / n
      bool ok = std::abs(r.ratio_small - 1.0) <= 2.0 * a / n;
      eq_bad += !ok;
      et.row({std::to_string(n), io::fmt(a), io::fmt(r.ratio_small), io::fmt(1.0 + a / n), ok ? "1" : "0"});
    }
  }
  et.write(out / "bessel_equivalents.csv", cfg);

  CsvTable it({"n", "theta1", "I_n"});
  int in_bad = 0;
  for (int n = 0; n <= in_max; ++n)
    for (double t : in_t) {
      double v = lower_bound_integral_In(n, t);
      in_bad += !(v > 0.0);
      it.row(std::vector<double>{double(n), t, v});
    }
  it.write(out / "In.csv", cfg);

  CsvTable qt({"pair", "theta1", "quadratic_form", "marginal_tv", "violated"});
  int qf_bad = 0;
  Rng rng = substream(master_seed(cfg), 0);
  for (int i = 0; i < pairs; ++i) {
    auto g = random_shift_density(M, rng), gt = random_shift_density(M, rng);
    double t = 0.5 + 1.5 * uniform01(rng);
    double lb = identifiability_quadratic_form(t, g, gt);
    double tv = tv_marginal(1, first_coefficient_law(t, g), first_coefficient_law(t, gt)).value;
    bool bad = lb > tv;
    qf_bad += bad;
    qt.row({std::to_string(i), io::fmt(t), io::fmt(lb), io::fmt(tv), bad ? "1" : "0"});
  }
  qt.write(out / "quadratic_form.csv", cfg);

  CsvTable pt({"case", "phase", "tv"});
  double max_inv = 0.0;
  auto u = ShiftDensity::uniform(M);
  for (double ph : gaps) {
    double tv = tv_marginal(1, first_coefficient_law(1.0, u), first_coefficient_law(std::polar(1.0, ph), u)).value;
    max_inv = std::max(max_inv, tv);
    pt.row({"uniform", io::fmt(ph), io::fmt(tv)});
  }
  pt.write(out / "phase_invariance.csv", cfg);

  CsvTable kt({"theta10", "theta1", "measured_tv", "cubic_floor", "holds"});
  int disk_bad = 0;
  auto g0 = ShiftDensity::from_function(M, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  for (double t0 : disk_t)
    for (double rel : {0.05, 0.1, 0.2, 0.4}) {
      auto r = theta1_disk_lower_bound(t0 * (1.0 + rel), t0, g0, g0);
      disk_bad += !r.holds();
      kt.row({io::fmt(t0), io::fmt(t0 * (1.0 + rel)), io::fmt(r.measured_tv), io::fmt(r.cubic_floor), r.holds() ? "1" : "0"});
    }
  kt.write(out / "disk_bound.csv", cfg);

  CsvTable ft({"phase_gap", "measured_tv", "linear_floor", "holds"});
  int phase_bad = 0;
  for (double ph : gaps) {
    auto r = thetak_phase_lower_bound(1, std::polar(1.0, ph), 1.0, g0);
    phase_bad += !r.holds();
    ft.row({io::fmt(ph), io::fmt(r.measured_tv), io::fmt(r.linear_floor), r.holds() ? "1" : "0"});
  }
  ft.write(out / "phase_bound.csv", cfg);

  json res{{"bessel_max_rel_err_quadrature", max_q},
           {"bessel_max_rel_err_boost", max_b},
           {"nth_derivative_max_rel_err", max_d},
           {"equivalent_envelope_failures", eq_bad},
           {"In_nonpositive", in_bad},
           {"quadratic_form_violations", qf_bad},
           {"uniform_phase_max_tv", max_inv},
           {"disk_floor_failures", disk_bad},
           {"phase_floor_failures", phase_bad},
           {"phase_floor_constant", kPhaseFloorConstant}};
  auto summary = envelope("identifiability", cfg, res);
  io::write_json(out / "summary.json", summary);
  return {summary, 0};
}

// ---------------------------------------------------------------------------
// fano
// ---------------------------------------------------------------------------

inline json net_json(const FanoNet& net) {
  json f = json::array(), g = json::array();
  for (auto& x : net.f) f.push_back(io::to_json(x));
  for (auto& x : net.g) g.push_back(io::to_json(x));
  return json{{"p", net.p}, {"s", net.s}, {"nu", net.nu}, {"beta", net.beta}, {"A", net.A},
              {"a", net.a}, {"M", net.M}, {"K_g", net.K_g}, {"f", f},       {"g", g}};
}

inline CommandResult cmd_fano(const json& cfg, const fs::path& out) {
  auto ps = cfg.at("p").get<std::vector<int>>();
  double s = cfg.at("s").get<double>(), nu = cfg.at("nu").get<double>(), beta = cfg.at("beta").get<double>();
  double A = cfg.at("A").get<double>(), kappa = cfg.at("kappa").get<double>();
  int budget = cfg.at("budget").get<int>(), pbudget = cfg.at("pipeline_budget").get<int>();
  auto pn = cfg.at("pipeline_n").get<std::vector<double>>();
  for (int p : ps)
    if (p < 4 || p % 4) throw ConfigError("fano.p entries must be multiples of 4, >= 4");
  if (!(beta > nu + 0.5 && beta > 1.0)) throw ConfigError("fano: need beta > max(1, nu + 1/2)");
  if (!(A > 0.0 && s > 0.0 && kappa > 0.0)) throw ConfigError("fano: A, s and kappa must be > 0");
  if (budget < 2 || pbudget < 2) throw ConfigError("fano: budgets must be >= 2");
  for (double n : pn)
    if (!(n >= 3.0)) throw ConfigError("fano.pipeline_n entries must be >= 3");
  std::uint64_t seed = master_seed(cfg);

  CsvTable sep({"p", "min_f_sep2", "f_formula_max_err", "min_g_sep2", "g_floor", "g_scale_p^-(2nu+2)", "f_ok", "g_ok"});
  CsvTable clo({"p", "ablation", "j", "tv", "tv_stderr"});
  json per_p = json::array();
  for (int p : ps) {
    auto net = build_net(p, s, nu, beta, A);
    io::write_json(out / ("net_p" + std::to_string(p) + ".json"), json{{"config", cfg}, {"net", net_json(net)}});
    auto r = verify_separation(net);
    sep.row({std::to_string(p), io::fmt(r.min_f_sep2), io::fmt(r.f_formula_max_err), io::fmt(r.min_g_sep2),
             io::fmt(r.g_floor), io::fmt(r.reference_g_scale), r.f_ok ? "1" : "0", r.g_ok ? "1" : "0"});
    json pj{{"p", p}, {"a", net.a}, {"f_ok", r.f_ok}, {"g_ok", r.g_ok}, {"f_formula_max_err", r.f_formula_max_err}};
    for (auto [name, ab] : {std::pair{"none", FanoAblation::None}, std::pair{"uniform_shifts", FanoAblation::UniformShifts},
                            std::pair{"shared_shift", FanoAblation::SharedShift}}) {
      auto c = verify_closeness(net, static_cast<std::size_t>(budget), seed, ab);
      for (int j = 0; j < p; ++j)
        clo.row({std::to_string(p), name, std::to_string(j), io::fmt(c.tv[j].value), io::fmt(c.tv[j].stderr_)});
      pj[std::string("max_tv_") + name] = c.max_tv;
      pj[std::string("max_tv_stderr_") + name] = c.max_tv_stderr;
    }
    per_p.push_back(pj);
  }
  sep.write(out / "separation.csv", cfg);
  clo.write(out / "closeness.csv", cfg);

  CsvTable pip({"n", "p", "a", "alpha_f", "alpha_g", "eta_measured", "eta_stderr", "beta_measured", "bound_f_measured",
                "bound_g_measured", "eta_nominal", "beta_nominal", "bound_f_nominal", "bound_g_nominal", "rate_f",
                "rate_g_statement", "rate_g_proof"});
  for (double n : pn) {
    auto r = lower_bound_pipeline(n, s, nu, beta, A, kappa, static_cast<std::size_t>(pbudget), seed);
    pip.row(std::vector<double>{r.n, double(r.p), r.a, r.alpha_f, r.alpha_g, r.eta_measured, r.eta_stderr,
                                r.beta_measured, r.bound_f_measured, r.bound_g_measured, r.eta_nominal, r.beta_nominal,
                                r.bound_f_nominal, r.bound_g_nominal, r.rate_f, r.rate_g_statement, r.rate_g_proof});
  }
  pip.write(out / "pipeline.csv", cfg);
  auto summary = envelope("fano", cfg, json{{"nets", per_p}});
  io::write_json(out / "summary.json", summary);
  return {summary, 0};
}

// ---------------------------------------------------------------------------
// contraction
// ---------------------------------------------------------------------------

struct ContractionRow {
  int n = 0;
  ChainResult chain;
  CutoffReport cut;
};

inline const std::vector<std::string>& contraction_metrics() {
  static const std::vector<std::string> m = {"hellinger", "dist_theta1", "dist_g", "dist_f"};
  return m;
}

// Datasets share one seed, so the smaller samples are prefixes of the larger
// ones; each n gets its own chain seed.
inline std::vector<ContractionRow> run_contraction(const Scenario& sc, const std::vector<int>& grid,
                                                   const PosteriorPrior& pr, const ChainConfig& base,
                                                   std::uint64_t seed) {
  std::vector<ContractionRow> rows(grid.size());
  auto dseed = data_seed(seed);
  parallel_for(grid.size(), [&](std::size_t i) {
    auto d = generate_dataset(sc.f0, sc.g0, grid[i], sc.K, dseed, 1.0);
    ChainConfig c = base;
    c.seed = chain_seed(seed, static_cast<std::uint64_t>(grid[i]));
    rows[i].n = grid[i];
    rows[i].chain = run_chain(d, pr, c, ContractionModel{sc.s});
    auto g0 = sc.g0.resampled(pr.g.M);
    rows[i].cut = cutoff_diagnostics(grid[i], sc.s, pr.g.nu, sc.beta, rows[i].chain.f_samples, sc.f0,
                                     rows[i].chain.g_samples, g0.values());
    rows[i].chain.f_samples.clear();
    rows[i].chain.g_samples.clear();
  });
  return rows;
}

inline bool strictly_decreasing(const std::vector<ContractionRow>& rows, const std::string& metric) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].chain.summary.metric(metric).median < rows[i - 1].chain.summary.metric(metric).median)) return false;
  return true;
}

inline CommandResult cmd_contraction(const json& cfg, const fs::path& out) {
  auto sc = parse_scenario(cfg.at("scenario"));
  auto pr = parse_prior(cfg.at("prior"));
  auto ch = parse_chain(cfg.at("chain"), 0);
  if (ch.prior_only) throw ConfigError("contraction: chain.prior_only must be false");
  auto grid = cfg.at("n_grid").get<std::vector<int>>();
  if (grid.empty()) throw ConfigError("contraction: n_grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] < 2 || (i && grid[i] <= grid[i - 1])) throw ConfigError("contraction: n_grid must increase from >= 2");
  auto rows = run_contraction(sc, grid, pr, ch, master_seed(cfg));

  std::vector<std::string> cols = {"n", "eps_n", "log_n^-nu"};
  for (auto& m : contraction_metrics()) cols.push_back(m + "_median"), cols.push_back(m + "_stderr");
  cols.insert(cols.end(), {"theta1_median", "level_median", "pcn_rate", "theta1_rate"});
  CsvTable tab(cols);
  CsvTable cut({"n", "k_shift_cutoff", "k_shape_cutoff", "k_split", "f_head", "f_tail", "g_head", "g_tail",
                "rate_statement", "rate_proof", "max_parseval_error"});
  json per_n = json::array();
  for (auto& r : rows) {
    auto& s = r.chain.summary;
    std::vector<double> v = {double(r.n), s.eps_n, s.log_rate_g};
    for (auto& m : contraction_metrics()) v.push_back(s.metric(m).median), v.push_back(s.metric(m).median_stderr);
    v.insert(v.end(), {s.metric("theta1").median, s.metric("level").median, s.pcn.rate(), s.theta1.rate()});
    tab.row(v);
    auto& c = r.cut;
    cut.row(std::vector<double>{double(r.n), c.k_shift_cutoff, c.k_shape_cutoff, double(c.k_split), c.f_median.head,
                                c.f_median.tail, c.g_median.head, c.g_median.tail, c.rate_statement, c.rate_proof,
                                c.max_parseval_error});
    json j = chain_json(r.chain);
    j["cutoffs"] = cutoff_json(r.cut);
    per_n.push_back(j);
  }
  tab.write(out / "contraction.csv", cfg);
  cut.write(out / "cutoffs.csv", cfg);

  // Overlays are drawn through the first point; only their shape is meaningful.
  auto series_of = [&](const std::string& m) {
    io::PlotSeries ps;
    ps.name = m + " median";
    for (auto& r : rows) ps.x.push_back(r.n), ps.y.push_back(r.chain.summary.metric(m).median);
    return ps;
  };
  auto overlay = [&](const std::string& name, const std::string& m, auto rate) {
    io::PlotSeries ps;
    ps.name = name;
    ps.dashed = true;
    double c = rows.front().chain.summary.metric(m).median / rate(rows.front().chain.summary);
    for (auto& r : rows) ps.x.push_back(r.n), ps.y.push_back(c * rate(r.chain.summary));
    return ps;
  };
  auto eps = [](const PosteriorSummary& s) { return s.eps_n; };
  auto lr = [](const PosteriorSummary& s) { return s.log_rate_g; };
  std::vector<io::PlotSeries> ll = {series_of("hellinger"), overlay("eps_n overlay", "hellinger", eps),
                                    series_of("dist_g"), overlay("(log n)^-nu overlay", "dist_g", lr),
                                    series_of("dist_theta1")};
  io::write_text(out / "contraction_loglog.svg",
                 io::svg_plot({"posterior median distance to truth", "n", "median", true, true}, ll, cfg));
  io::write_text(out / "contraction_semilog.svg",
                 io::svg_plot({"posterior median distance to truth", "n (log scale)", "median", true, false}, ll, cfg));

  json mono = json::object();
  bool ok = true;
  for (auto& m : {"hellinger", "dist_theta1", "dist_g"}) {
    bool d = strictly_decreasing(rows, m);
    mono[m] = d;
    ok = ok && d;
  }
  auto summary = envelope("contraction", cfg, json{{"per_n", per_n}, {"strictly_decreasing", mono}}, ok);
  io::write_json(out / "summary.json", summary);
  return {summary, ok ? 0 : 4};
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

inline void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_number() || j.is_boolean() || j.is_string()) {
    out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

// Collects every <dir>/summary.json below `out` into report.md and report.json.
inline CommandResult cmd_report(const json& cfg, const fs::path& out) {
  json all = json::object();
  std::vector<fs::path> found;
  if (fs::exists(out))
    for (auto& e : fs::recursive_directory_iterator(out))
      if (e.is_regular_file() && e.path().filename() == "summary.json" && e.path().parent_path() != out)
        found.push_back(e.path());
  std::sort(found.begin(), found.end());
  std::ostringstream md;
  md << "# Experiment report\n\n";
  for (auto& p : found) {
    json s = json::parse(io::read_text(p));
    std::string key = fs::relative(p.parent_path(), out).generic_string();
    all[key] = s;
    md << "## " << key << " (" << s.value("command", "?") << ", " << s.value("status", "?") << ")\n\n";
    if (s.value("command", "") == "contraction") {
      md << "| n | eps_n | (log n)^-nu | Hellinger | abs(theta1 - theta1_0) | L2(g, g0) |\n|---|---|---|---|---|---|\n";
      for (auto& r : s["results"]["per_n"]) {
        auto& m = r["metrics"];
        char buf[256];
        std::snprintf(buf, sizeof buf, "| %g | %.4g | %.4g | %.4g | %.4g | %.4g |\n", r["n"].get<double>(),
                      r["eps_n"].get<double>(), r["log_rate_g"].get<double>(), m["hellinger"]["median"].get<double>(),
                      m["dist_theta1"]["median"].get<double>(), m["dist_g"]["median"].get<double>());
        md << buf;
      }
      md << "\nThe eps_n and (log n)^-nu columns are reference scalings, not fitted rates.\n\n";
    }
    std::vector<std::pair<std::string, std::string>> kv;
    for (auto& [k, v] : s["results"].items())
      if (!v.is_array()) flatten(v, k, kv);
    for (auto& [k, v] : kv) md << "- " << k << ": " << v << "\n";
    md << "\n";
  }
  io::write_text(out / "report.md", md.str());
  json rep = envelope("report", cfg, all);
  io::write_json(out / "report.json", rep);
  return {envelope("report", cfg, json{{"summaries", found.size()}}), 0};
}

inline CommandResult run_command(const std::string& verb, const json& cfg, const fs::path& out) {
  if (verb == "simulate") return cmd_simulate(cfg, out);
  if (verb == "prior") return cmd_prior(cfg, out);
  if (verb == "posterior") return cmd_posterior(cfg, out);
  if (verb == "distances") return cmd_distances(cfg, out);
  if (verb == "identifiability") return cmd_identifiability(cfg, out);
  if (verb == "fano") return cmd_fano(cfg, out);
  if (verb == "contraction") return cmd_contraction(cfg, out);
  if (verb == "report") return cmd_report(cfg, out);
  throw ConfigError("unknown command '" + verb + "'");
}

}  // namespace shapeinv::experiments
