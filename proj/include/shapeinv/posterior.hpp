#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "density.hpp"
#include "distance.hpp"
#include "fourier.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "prior.hpp"

namespace shapeinv {

struct PosteriorPrior {
  SievePriorConfig sieve;  // sieve.n <= 0 means: use the dataset size
  GPriorConfig g;          // g.M is also the shift quadrature size
};

struct ChainConfig {
  int sweeps = 20000;
  double burn_frac = 0.25;
  int thin = 5;
  double f_step = 0.0;  // random-walk scale; <= 0 picks 0.5 / sqrt(n)
  double beta_pcn = 0.2;
  int hellinger_budget = 1000;
  int hellinger_every = 1;  // evaluate Hellinger on every k-th kept sample
  bool prior_only = false;  // constant likelihood
  bool debug_check = false;  // recompute log posterior after every accepted move
  bool update_g = true;
  bool birth_death = true;
  std::vector<int> update_freqs;  // empty: every active coefficient
  std::uint64_t seed = 1;

  void validate() const {
    if (sweeps < 1) throw ConfigError("chain: sweeps must be >= 1");
    if (!(burn_frac >= 0.0 && burn_frac < 1.0)) throw ConfigError("chain: burn_frac must lie in [0, 1)");
    if (thin < 1) throw ConfigError("chain: thin must be >= 1");
    if (!(beta_pcn > 0.0 && beta_pcn <= 1.0)) throw ConfigError("chain: beta_pcn must lie in (0, 1]");
    if (hellinger_every < 0) throw ConfigError("chain: hellinger_every must be >= 0");
    if (hellinger_budget < 2) throw ConfigError("chain: hellinger_budget must be >= 2");
  }
};

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct ChainState {
  int level = 1;
  FourierSeries f;  // cutoff = level cap, zero above level
  GpPath gp;
  std::vector<double> u;  // Gaussian coordinates of gp
  ShiftDensity g = ShiftDensity::uniform(4);
  double log_prior_f = 0.0;
  double loglik = 0.0;
  double log_post = 0.0;
  long sweeps = 0;
  MoveStats coef, theta1, birth, death, pcn;
  long ball_rejections = 0;
  double max_coherence_error = 0.0;
  long coherence_checks = 0;
};

// Metropolis-within-Gibbs sampler for (f, g) under sieve x ball-restricted
// log-GP prior. Per-curve exponent tables S_jq = 2 Re sum_l conj(y_jl) theta_l
// e^{-i 2 pi l q / Q} are cached so one coefficient move costs O(n Q).
class PosteriorSampler {
 public:
  PosteriorSampler(const Dataset& data, PosteriorPrior prior, ChainConfig cfg)
      : data_(data), prior_(std::move(prior)), cfg_(std::move(cfg)) {
    if (data_.curves.empty()) throw std::invalid_argument("init_chain: dataset is empty");
    cfg_.validate();
    if (prior_.sieve.n <= 0.0) prior_.sieve.n = static_cast<double>(std::max<std::size_t>(2, data_.n()));
    prior_.sieve.validate();
    prior_.g.validate();
    cap_ = std::min(prior_.sieve.K_max, std::max(1, data_.K));
    xi2_ = prior_.sieve.xi2();
    auto lw = prior_.sieve.level_weights(cap_);
    log_lambda_.assign(lw.size() + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < lw.size(); ++i) log_lambda_[i + 1] = std::log(lw[i]);
    Q_ = prior_.g.M;
    if (Q_ < 2 * data_.K + 2) throw ConfigError("chain: g grid M must be >= 2K+2");
    cosq_.resize(static_cast<std::size_t>(Q_));
    sinq_.resize(static_cast<std::size_t>(Q_));
    for (int q = 0; q < Q_; ++q) {
      cosq_[q] = std::cos(kTwoPi * q / Q_);
      sinq_[q] = std::sin(kTwoPi * q / Q_);
    }
    n_ = static_cast<int>(data_.n());
    base_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      double b = 0.0;
      for (int l = -data_.K; l <= data_.K; ++l) b += -std::log(kPi) - std::norm(data_.curves[j][l]);
      base_[j] = b;
    }
    step_ = cfg_.f_step > 0.0 ? cfg_.f_step : 0.5 / std::sqrt(static_cast<double>(std::max(1, n_)));
  }

  const ChainState& state() const { return st_; }
  const PosteriorPrior& prior() const { return prior_; }
  int level_cap() const { return cap_; }
  double xi2() const { return xi2_; }

  void init(Rng& rng) {
    st_ = ChainState{};
    // level from the prior renormalized on [1, cap]
    double u = uniform01(rng), acc = 0.0;
    st_.level = cap_;
    for (int l = 1; l <= cap_; ++l) {
      acc += std::exp(log_lambda_[l]);
      if (u < acc) {
        st_.level = l;
        break;
      }
    }
    st_.f = sample_sieve_f_at_level(st_.level, xi2_, rng).resized(cap_);
    auto draw = sample_g_prior(prior_.g, rng);
    st_.gp = std::move(draw.path);
    st_.u = st_.gp.coordinates();
    st_.g = std::move(draw.g);
    weights_from_g(st_.g, w_);
    st_.log_prior_f = log_prior_f(st_.f, st_.level);
    rebuild_cache();
    st_.loglik = total_loglik();
    st_.log_post = st_.log_prior_f + st_.loglik;
    guard("init");
  }

  // One sweep over the shape: random-walk Metropolis on each active
  // coefficient (theta_1 reflected at 0), then one birth/death move.
  void step_f(Rng& rng) { step_f(step_, rng); }

  void step_f(double scale, Rng& rng) {
    for (int k = -st_.level; k <= st_.level; ++k) {
      if (!cfg_.update_freqs.empty() &&
          std::find(cfg_.update_freqs.begin(), cfg_.update_freqs.end(), k) == cfg_.update_freqs.end())
        continue;
      cplx old = st_.f[k], prop;
      double z1 = std_normal(rng), z2 = std_normal(rng);
      if (k == 1) {
        prop = cplx{std::abs(old.real() + scale * z1), 0.0};
        if (prop.real() == 0.0) continue;
      } else {
        prop = old + scale * std::sqrt(0.5) * cplx{z1, z2};
      }
      MoveStats& ms = (k == 1) ? st_.theta1 : st_.coef;
      ++ms.proposed;
      if (scale == 0.0) {
        ++ms.accepted;
        continue;
      }
      double dprior = log_sieve_coefficient_density(k, prop, xi2_) - log_sieve_coefficient_density(k, old, xi2_);
      std::map<int, cplx> delta{{k, prop - old}};
      double new_loglik = propose_loglik(delta);
      double log_alpha = dprior + new_loglik - st_.loglik;
      if (std::log(uniform01(rng)) < log_alpha) {
        st_.f.set(k, prop);
        commit(new_loglik, st_.log_prior_f + dprior);
        ++ms.accepted;
      } else {
        pending_f_ = false;
      }
    }
    if (cfg_.birth_death) birth_death(rng);
  }

  // Preconditioned Crank-Nicolson move on the Gaussian coordinates of w;
  // proposals outside the 2A Sobolev ball are rejected.
  void step_g(double beta, Rng& rng) {
    pending_f_ = false;
    ++st_.pcn.proposed;
    double c = std::sqrt(1.0 - beta * beta);
    std::vector<double> u2(st_.u.size());
    for (std::size_t i = 0; i < u2.size(); ++i) u2[i] = c * st_.u[i] + beta * std_normal(rng);
    GpPath path = gp_path_from_coordinates(prior_.g.nu, prior_.g.M, prior_.g.N_kl, u2);
    ShiftDensity g2 = normalize_to_density(path);
    if (!prior_.g.in_ball(g2)) {
      ++st_.ball_rejections;
      return;
    }
    std::vector<double> w2;
    weights_from_g(g2, w2);
    double new_loglik = cfg_.prior_only ? 0.0 : loglik_with_weights(w2);
    double log_alpha = new_loglik - st_.loglik;
    if (std::log(uniform01(rng)) < log_alpha) {
      st_.u = std::move(u2);
      st_.gp = std::move(path);
      st_.g = std::move(g2);
      w_ = std::move(w2);
      if (!cfg_.prior_only) mix_ = pending_mix_;
      commit(new_loglik, st_.log_prior_f);
      ++st_.pcn.accepted;
    }
  }
  void step_g(Rng& rng) { step_g(cfg_.beta_pcn, rng); }

  void sweep(Rng& rng) {
    step_f(rng);
    if (cfg_.update_g) step_g(rng);
    ++st_.sweeps;
  }

  // log pi(f) at the given level: level weight plus coefficient densities.
  double log_prior_f(const FourierSeries& f, int level) const {
    double s = log_lambda_[level];
    for (int k = -level; k <= level; ++k) s += log_sieve_coefficient_density(k, f[k], xi2_);
    return s;
  }

  // Full recomputation through the independent likelihood routine.
  double recompute_log_post() const {
    double ll = cfg_.prior_only ? 0.0 : loglik_dataset(data_, st_.f, st_.g, Q_);
    return log_prior_f(st_.f, st_.level) + ll;
  }

  std::string dump() const {
    std::ostringstream os;
    os << "level=" << st_.level << " log_prior_f=" << st_.log_prior_f << " loglik=" << st_.loglik << " theta=[";
    for (int k = -st_.level; k <= st_.level; ++k) os << (k > -st_.level ? ", " : "") << k << ":" << st_.f[k];
    os << "] sweeps=" << st_.sweeps;
    return os.str();
  }

 private:
  void weights_from_g(const ShiftDensity& g, std::vector<double>& w) const {
    if (g.M() != Q_) throw std::invalid_argument("sampler: density grid differs from quadrature grid");
    w.resize(static_cast<std::size_t>(Q_));
    for (int q = 0; q < Q_; ++q) w[q] = g[q] / Q_;
  }

  // S and E tables from the current f.
  void rebuild_cache() {
    if (cfg_.prior_only) return;
    S_.assign(static_cast<std::size_t>(n_) * Q_, 0.0);
    for (int j = 0; j < n_; ++j)
      for (int l = -st_.level; l <= st_.level; ++l) add_contribution(j, l, st_.f[l], &S_[static_cast<std::size_t>(j) * Q_]);
    mix_.resize(n_);
    maxS_.resize(n_);
    E_.resize(S_.size());
    for (int j = 0; j < n_; ++j) refresh_row(j, &S_[static_cast<std::size_t>(j) * Q_], &E_[static_cast<std::size_t>(j) * Q_], maxS_[j]);
    for (int j = 0; j < n_; ++j) mix_[j] = mix_from_E(j, w_);
  }

  // row += 2 Re(conj(y_l) d e^{-i 2 pi l q / Q})
  void add_contribution(int j, int l, cplx d, double* row) const {
    if (d == cplx{} || std::abs(l) > data_.K) return;
    cplx b = std::conj(data_.curves[j][l]) * d;
    double br = 2.0 * b.real(), bi = 2.0 * b.imag();
    for (int q = 0; q < Q_; ++q) {
      int idx = detail::mod(1LL * l * q, Q_);
      row[q] += br * cosq_[idx] + bi * sinq_[idx];
    }
  }

  void refresh_row(int, const double* S, double* E, double& mx) const {
    mx = -std::numeric_limits<double>::infinity();
    for (int q = 0; q < Q_; ++q) mx = std::max(mx, S[q]);
    for (int q = 0; q < Q_; ++q) E[q] = std::exp(S[q] - mx);
  }

  double mix_from_E(int j, const std::vector<double>& w) const {
    const double* E = &E_[static_cast<std::size_t>(j) * Q_];
    double s = 0.0;
    for (int q = 0; q < Q_; ++q) s += w[q] * E[q];
    return maxS_[j] + std::log(s);
  }

  double theta_energy() const {
    double e = 0.0;
    for (int l = -std::min(st_.level, data_.K); l <= std::min(st_.level, data_.K); ++l) e += std::norm(st_.f[l]);
    return e;
  }

  double total_loglik() const {
    if (cfg_.prior_only) return 0.0;
    double s = -n_ * theta_energy();
    for (int j = 0; j < n_; ++j) s += base_[j] + mix_[j];
    return s;
  }

  double loglik_with_weights(const std::vector<double>& w) {
    pending_mix_.resize(n_);
    double s = -n_ * theta_energy();
    for (int j = 0; j < n_; ++j) {
      pending_mix_[j] = mix_from_E(j, w);
      s += base_[j] + pending_mix_[j];
    }
    return s;
  }

  // Log likelihood after adding delta to f; fills the pending tables.
  double propose_loglik(const std::map<int, cplx>& delta) {
    if (cfg_.prior_only) return 0.0;
    double energy = theta_energy();
    for (auto& [l, d] : delta) {
      if (std::abs(l) > data_.K) continue;
      energy += std::norm(st_.f[l] + d) - std::norm(st_.f[l]);
    }
    pS_ = S_;
    pE_.resize(S_.size());
    pmax_.resize(n_);
    pending_mix_.resize(n_);
    double s = -n_ * energy;
    for (int j = 0; j < n_; ++j) {
      double* row = &pS_[static_cast<std::size_t>(j) * Q_];
      for (auto& [l, d] : delta) add_contribution(j, l, d, row);
      double* E = &pE_[static_cast<std::size_t>(j) * Q_];
      refresh_row(j, row, E, pmax_[j]);
      double acc = 0.0;
      for (int q = 0; q < Q_; ++q) acc += w_[q] * E[q];
      pending_mix_[j] = pmax_[j] + std::log(acc);
      s += base_[j] + pending_mix_[j];
    }
    pending_f_ = true;
    return s;
  }

  void commit(double new_loglik, double new_log_prior_f) {
    if (pending_f_ && !cfg_.prior_only) {
      std::swap(S_, pS_);
      std::swap(E_, pE_);
      std::swap(maxS_, pmax_);
      mix_ = pending_mix_;
    }
    pending_f_ = false;
    st_.loglik = new_loglik;
    st_.log_prior_f = new_log_prior_f;
    st_.log_post = st_.log_prior_f + st_.loglik;
    guard("move");
    if (cfg_.debug_check) {
      double err = std::abs(recompute_log_post() - st_.log_post);
      st_.max_coherence_error = std::max(st_.max_coherence_error, err);
      ++st_.coherence_checks;
    }
  }

  void guard(const char* where) const {
    if (!std::isfinite(st_.log_post))
      throw NumericError(std::string("posterior chain: non-finite log posterior after ") + where + "; state: " + dump());
  }

  void birth_death(Rng& rng) {
    bool up = uniform01(rng) < 0.5;
    int l = st_.level;
    if (up) {
      ++st_.birth.proposed;
      if (l + 1 > cap_) return;
      int k = l + 1;
      cplx a = sample_sieve_coefficient(k, xi2_, rng), b = sample_sieve_coefficient(-k, xi2_, rng);
      double new_loglik = propose_loglik({{k, a}, {-k, b}});
      double dprior = log_lambda_[k] - log_lambda_[l] + log_sieve_coefficient_density(k, a, xi2_) +
                      log_sieve_coefficient_density(-k, b, xi2_);
      double log_alpha = log_lambda_[k] - log_lambda_[l] + new_loglik - st_.loglik;
      if (std::log(uniform01(rng)) < log_alpha) {
        st_.f.set(k, a);
        st_.f.set(-k, b);
        st_.level = k;
        commit(new_loglik, st_.log_prior_f + dprior);
        ++st_.birth.accepted;
      } else {
        pending_f_ = false;
      }
    } else {
      ++st_.death.proposed;
      if (l - 1 < 1) return;
      cplx a = st_.f[l], b = st_.f[-l];
      double new_loglik = propose_loglik({{l, -a}, {-l, -b}});
      double dprior = log_lambda_[l - 1] - log_lambda_[l] - log_sieve_coefficient_density(l, a, xi2_) -
                      log_sieve_coefficient_density(-l, b, xi2_);
      double log_alpha = log_lambda_[l - 1] - log_lambda_[l] + new_loglik - st_.loglik;
      if (std::log(uniform01(rng)) < log_alpha) {
        st_.f.set(l, 0.0);
        st_.f.set(-l, 0.0);
        st_.level = l - 1;
        commit(new_loglik, st_.log_prior_f + dprior);
        ++st_.death.accepted;
      } else {
        pending_f_ = false;
      }
    }
  }

  const Dataset& data_;
  PosteriorPrior prior_;
  ChainConfig cfg_;
  ChainState st_;
  int cap_ = 1, Q_ = 0, n_ = 0;
  double xi2_ = 0.0, step_ = 0.0;
  std::vector<double> log_lambda_;
  std::vector<double> cosq_, sinq_, base_, w_;
  std::vector<double> S_, E_, maxS_, mix_;
  std::vector<double> pS_, pE_, pmax_, pending_mix_;
  bool pending_f_ = false;
};

// ============================================================================
// Chains and summaries
// ============================================================================

struct SampleRecord {
  long iter = 0;
  int level = 0;
  double theta1 = 0.0;
  double dist_f = 0.0;
  double dist_g = 0.0;
  double dist_theta1 = 0.0;
  double hellinger = std::numeric_limits<double>::quiet_NaN();
};

struct MassCurve {
  std::string metric;
  std::string anchor;  // radius family
  std::vector<double> radius;
  std::vector<double> mass;
};

struct MetricSummary {
  std::string name;
  double median = 0.0;
  double median_stderr = 0.0;
  double mean = 0.0;
  double ess = 0.0;
  std::size_t count = 0;
};

struct PosteriorSummary {
  double n = 0.0;
  double eps_n = 0.0;
  double log_rate_g = 0.0;     // (log n)^{-nu}
  double theta1_radius = 0.0;  // eps_n^{1/3}
  std::vector<MetricSummary> metrics;
  std::vector<MassCurve> mass;
  MoveStats theta1, coef, birth, death, pcn;
  long ball_rejections = 0;
  double max_coherence_error = 0.0;
  long coherence_checks = 0;

  const MetricSummary& metric(const std::string& name) const {
    for (auto& m : metrics)
      if (m.name == name) return m;
    throw std::out_of_range("PosteriorSummary: no metric " + name);
  }
};

struct ChainResult {
  std::vector<SampleRecord> samples;
  std::vector<FourierSeries> f_samples;
  std::vector<std::vector<double>> g_samples;
  PosteriorSummary summary;
};

// n^{-min(nu/(2nu+1), s/(2s+2), 3/8)} (log n)^kappa
inline double contraction_eps(double n, double s, double nu, double kappa = 0.0) {
  double e = std::min({nu / (2.0 * nu + 1.0), s / (2.0 * s + 2.0), 3.0 / 8.0});
  return std::pow(n, -e) * std::pow(std::log(n), kappa);
}

inline double effective_sample_size(const std::vector<double>& x, int batches = 20) {
  if (x.size() < static_cast<std::size_t>(2 * batches)) return static_cast<double>(x.size());
  std::size_t b = x.size() / batches;
  std::vector<double> bm;
  for (int i = 0; i < batches; ++i) bm.push_back(mean(std::vector<double>(x.begin() + i * b, x.begin() + (i + 1) * b)));
  double s2 = variance(x), sig2 = static_cast<double>(b) * variance(bm);
  if (!(sig2 > 0.0)) return static_cast<double>(x.size());
  return std::min(static_cast<double>(x.size()), static_cast<double>(x.size()) * s2 / sig2);
}

inline MetricSummary summarize_metric(const std::string& name, const std::vector<double>& v) {
  MetricSummary m;
  m.name = name;
  std::vector<double> x;
  for (double d : v)
    if (std::isfinite(d)) x.push_back(d);
  m.count = x.size();
  if (x.empty()) return m;
  m.median = median(x);
  m.median_stderr = batch_median_stderr(x);
  m.mean = mean(x);
  m.ess = effective_sample_size(x);
  return m;
}

inline MassCurve mass_curve(const std::string& metric, const std::string& anchor, double base,
                            const std::vector<double>& values) {
  MassCurve c;
  c.metric = metric;
  c.anchor = anchor;
  std::vector<double> x;
  for (double d : values)
    if (std::isfinite(d)) x.push_back(d);
  for (double mult : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    double r = base * mult;
    double cnt = 0.0;
    for (double d : x) cnt += d <= r ? 1.0 : 0.0;
    c.radius.push_back(r);
    c.mass.push_back(x.empty() ? 0.0 : cnt / x.size());
  }
  return c;
}

struct ContractionModel {
  double s = 1.0;  // shape smoothness used for the eps_n overlay
};

inline ChainResult run_chain(const Dataset& data, const PosteriorPrior& prior, const ChainConfig& cfg,
                             ContractionModel model = {}) {
  cfg.validate();
  if (cfg.sweeps <= static_cast<int>(cfg.burn_frac * cfg.sweeps))
    throw ConfigError("run_chain: sweeps must exceed burn-in");
  PosteriorSampler sampler(data, prior, cfg);
  Rng rng = substream(cfg.seed, 0);
  sampler.init(rng);
  ChainResult res;
  int burn = static_cast<int>(cfg.burn_frac * cfg.sweeps);
  std::optional<Truth> truth = data.truth;
  std::optional<ShiftDensity> g0;
  MonteCarloDraws draws;
  std::vector<int> band;
  if (truth) {
    g0 = truth->g.resampled(prior.g.M);
    for (int l = -data.K; l <= data.K; ++l) band.push_back(l);
    draws = MonteCarloDraws::make(static_cast<std::size_t>(cfg.hellinger_budget), static_cast<int>(band.size()),
                                  splitmix64(cfg.seed ^ 0x4e11ULL));
  }
  long kept = 0;
  for (int it = 1; it <= cfg.sweeps; ++it) {
    sampler.sweep(rng);
    if (it <= burn || (it - burn) % cfg.thin != 0) continue;
    const auto& st = sampler.state();
    SampleRecord r;
    r.iter = it;
    r.level = st.level;
    r.theta1 = st.f[1].real();
    if (truth) {
      r.dist_theta1 = std::abs(st.f[1].real() - truth->f[1].real());
      r.dist_f = l2_distance(st.f, truth->f);
      r.dist_g = l2_distance(st.g, *g0);
      if (cfg.hellinger_every > 0 && kept % cfg.hellinger_every == 0) {
        MixtureLaw a{st.f.resized(data.K), st.g}, b{truth->f.resized(data.K), *g0};
        r.hellinger = compare_laws(a, b, band, draws).hellinger.value;
      }
    }
    ++kept;
    res.samples.push_back(r);
    res.f_samples.push_back(st.f);
    res.g_samples.push_back(st.g.values());
  }
  const auto& st = sampler.state();
  auto& sm = res.summary;
  sm.n = static_cast<double>(data.n());
  sm.theta1 = st.theta1;
  sm.coef = st.coef;
  sm.birth = st.birth;
  sm.death = st.death;
  sm.pcn = st.pcn;
  sm.ball_rejections = st.ball_rejections;
  sm.max_coherence_error = st.max_coherence_error;
  sm.coherence_checks = st.coherence_checks;
  double n = std::max(2.0, sm.n);
  sm.eps_n = contraction_eps(n, model.s, prior.g.nu);
  sm.log_rate_g = std::pow(std::log(n), -prior.g.nu);
  sm.theta1_radius = std::cbrt(sm.eps_n);
  auto col = [&](auto get) {
    std::vector<double> v;
    for (auto& r : res.samples) v.push_back(get(r));
    return v;
  };
  auto th = col([](const SampleRecord& r) { return r.theta1; });
  auto lv = col([](const SampleRecord& r) { return static_cast<double>(r.level); });
  sm.metrics.push_back(summarize_metric("theta1", th));
  sm.metrics.push_back(summarize_metric("level", lv));
  if (truth) {
    auto h = col([](const SampleRecord& r) { return r.hellinger; });
    auto dt = col([](const SampleRecord& r) { return r.dist_theta1; });
    auto df = col([](const SampleRecord& r) { return r.dist_f; });
    auto dg = col([](const SampleRecord& r) { return r.dist_g; });
    sm.metrics.push_back(summarize_metric("hellinger", h));
    sm.metrics.push_back(summarize_metric("dist_theta1", dt));
    sm.metrics.push_back(summarize_metric("dist_f", df));
    sm.metrics.push_back(summarize_metric("dist_g", dg));
    sm.mass.push_back(mass_curve("hellinger", "eps_n", sm.eps_n, h));
    sm.mass.push_back(mass_curve("dist_g", "log(n)^-nu", sm.log_rate_g, dg));
    sm.mass.push_back(mass_curve("dist_f", "log(n)^-nu", sm.log_rate_g, df));
    sm.mass.push_back(mass_curve("dist_theta1", "eps_n^(1/3)", sm.theta1_radius, dt));
  }
  return res;
}

// ============================================================================
// Frequency cut-off diagnostics
// ============================================================================

struct HeadTail {
  double head = 0.0;
  double tail = 0.0;
  double total = 0.0;
};

// Split of ||d||^2 at |k| <= k_cut for a coefficient table.
inline HeadTail head_tail(const FourierSeries& d, int k_cut) {
  HeadTail h;
  for (int l = -d.K(); l <= d.K(); ++l) (std::abs(l) <= k_cut ? h.head : h.tail) += std::norm(d[l]);
  h.total = std::pow(norms(d).l2, 2);
  return h;
}

// Same split for the difference of two grid densities (grid Parseval, Nyquist
// term included in the tail).
inline HeadTail head_tail(const std::vector<double>& g, const std::vector<double>& g0, int k_cut) {
  if (g.size() != g0.size()) throw std::invalid_argument("head_tail: grids differ");
  std::vector<double> d(g.size());
  double total = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    d[m] = g[m] - g0[m];
    total += d[m] * d[m];
  }
  int M = static_cast<int>(g.size());
  auto X = fft::rfft(d);
  HeadTail h;
  for (int k = 0; k <= M / 2; ++k) {
    double c2 = std::norm(X[k] / static_cast<double>(M));
    double mult = (k == 0 || (M % 2 == 0 && k == M / 2)) ? 1.0 : 2.0;
    (k <= k_cut ? h.head : h.tail) += mult * c2;
  }
  h.total = total / M;
  return h;
}

struct CutoffReport {
  double n = 0.0;
  double eps_n = 0.0;
  double k_shift_cutoff = 0.0;  // solves (k + 2 nu) log k = (1/3) log(1/eps_n)
  double k_shape_cutoff = 0.0;  // (log n)^{2 nu / (2 nu + 2 s + 1)}
  int k_split = 1;
  double exponent_statement = 0.0;  // 2s * 2nu / (2s + 2nu + 1)
  double exponent_proof = 0.0;      // 4 s nu / (2s + 2 beta + 1)
  double rate_statement = 0.0;
  double rate_proof = 0.0;
  HeadTail f_median, g_median;      // component-wise medians over samples
  double max_parseval_error = 0.0;  // max |head + tail - total|
};

inline double shift_cutoff(double eps_n, double nu) {
  double rhs = std::log(1.0 / eps_n) / 3.0;
  if (rhs <= 0.0) return 1.0;
  double lo = 1.0, hi = 2.0;
  while ((hi + 2.0 * nu) * std::log(hi) < rhs) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    ((mid + 2.0 * nu) * std::log(mid) < rhs ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double shape_cutoff(double n, double s, double nu) {
  return std::pow(std::log(n), 2.0 * nu / (2.0 * nu + 2.0 * s + 1.0));
}

inline CutoffReport cutoff_diagnostics(double n, double s, double nu, double beta,
                                       const std::vector<FourierSeries>& f_samples, const FourierSeries& f0,
                                       const std::vector<std::vector<double>>& g_samples,
                                       const std::vector<double>& g0_values, double kappa = 0.0) {
  CutoffReport r;
  r.n = n;
  r.eps_n = contraction_eps(n, s, nu, kappa);
  r.k_shift_cutoff = shift_cutoff(r.eps_n, nu);
  r.k_shape_cutoff = shape_cutoff(n, s, nu);
  r.k_split = std::max(1, static_cast<int>(std::floor(r.k_shape_cutoff)));
  r.exponent_statement = 2.0 * s * 2.0 * nu / (2.0 * s + 2.0 * nu + 1.0);
  r.exponent_proof = 4.0 * s * nu / (2.0 * s + 2.0 * beta + 1.0);
  r.rate_statement = std::pow(std::log(n), -r.exponent_statement);
  r.rate_proof = std::pow(std::log(n), -r.exponent_proof);
  std::vector<double> fh, ft, fT, gh, gt, gT;
  for (auto& f : f_samples) {
    auto h = head_tail(f - f0, r.k_split);
    fh.push_back(h.head), ft.push_back(h.tail), fT.push_back(h.total);
    r.max_parseval_error = std::max(r.max_parseval_error, std::abs(h.head + h.tail - h.total));
  }
  for (auto& g : g_samples) {
    auto h = head_tail(g, g0_values, r.k_split);
    gh.push_back(h.head), gt.push_back(h.tail), gT.push_back(h.total);
    r.max_parseval_error = std::max(r.max_parseval_error, std::abs(h.head + h.tail - h.total));
  }
  if (!fh.empty()) r.f_median = {median(fh), median(ft), median(fT)};
  if (!gh.empty()) r.g_median = {median(gh), median(gt), median(gT)};
  return r;
}

}  // namespace shapeinv
