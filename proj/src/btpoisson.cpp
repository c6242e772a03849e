#include "luckskill/btpoisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "luckskill/error.hpp"
#include "luckskill/parallel.hpp"

namespace luckskill {

void ModelSpec::validate() const {
  if (features.empty() && !include_intercept) {
    throw Error(ErrorCode::kInvalidArgument, "model needs at least one feature");
  }
  if (!(a > 0) || !(b > 0) || !(c > 0) || !(d > 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "Gamma hyperparameters must be positive");
  }
}

std::vector<std::string> ModelSpec::covariate_names() const {
  std::vector<std::string> names;
  if (include_intercept) names.emplace_back("intercept");
  for (Feature f : features) names.emplace_back(feature_name(f));
  return names;
}

ModelData make_model_data(const SeasonView& season,
                          std::vector<std::vector<double>> x,
                          std::vector<std::string> covariate_names) {
  ModelData data;
  data.teams = season.teams;
  data.covariates = std::move(covariate_names);
  if (x.size() != season.teams.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "design matrix has " + std::to_string(x.size()) + " rows for " +
                    std::to_string(season.teams.size()) + " teams");
  }
  for (const auto& row : x) {
    if (row.size() != data.covariates.size()) {
      throw Error(ErrorCode::kInvalidArgument, "ragged design matrix");
    }
  }
  data.x = std::move(x);
  data.games.reserve(season.matches.size());
  for (const auto& m : season.matches) {
    GameObs g;
    g.home = *season.team_index(m.home_team);
    g.away = *season.team_index(m.away_team);
    g.total = m.total_points();
    g.home_score = m.home_points_raw;
    data.games.push_back(g);
  }
  return data;
}

ModelData make_model_data(const SeasonView& season,
                          const std::vector<TeamFeatures>& features,
                          const ModelSpec& spec) {
  spec.validate();
  std::map<std::string, const TeamFeatures*> by_team;
  for (const auto& tf : features) by_team[tf.team] = &tf;
  std::vector<std::vector<double>> x;
  for (const auto& team : season.teams) {
    const auto it = by_team.find(team);
    if (it == by_team.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no feature row for team '" + team + "'");
    }
    std::vector<double> row;
    if (spec.include_intercept) row.push_back(1.0);
    for (Feature f : spec.features) row.push_back(it->second->z(f));
    x.push_back(std::move(row));
  }
  return make_model_data(season, std::move(x), spec.covariate_names());
}

double bt_probability(double alpha_i, double alpha_j) {
  if (!(alpha_i > 0) || !(alpha_j > 0)) {
    throw Error(ErrorCode::kNonPositiveSkill, "skills must be positive");
  }
  return alpha_i / (alpha_i + alpha_j);
}

GameRate game_rate(double pi, int total, double eps) {
  const double lambda = total * pi + eps;
  if (lambda < kRateFloor) return {kRateFloor, true};
  return {lambda, false};
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const std::vector<double>& v) { return dot(v, v); }

// Win probability of the home side from log-skills.
double home_probability(double eta_home, double eta_away) {
  return 1.0 / (1.0 + std::exp(eta_away - eta_home));
}

std::vector<double> log_skills(const std::vector<double>& w,
                               const ModelData& data) {
  std::vector<double> eta(data.n_teams());
  for (std::size_t i = 0; i < data.n_teams(); ++i) eta[i] = dot(w, data.x[i]);
  return eta;
}

double poisson_term(int y, double lambda) {
  return (y == 0 ? 0.0 : y * std::log(lambda)) - lambda;
}

void check_dimensions(const std::vector<double>& w,
                      const std::vector<double>& eps, const ModelData& data) {
  if (w.size() != data.dim() || eps.size() != data.n_games()) {
    throw Error(ErrorCode::kInvalidArgument,
                "parameter dimensions do not match the data");
  }
}

}  // namespace

GameRate game_rate(const std::vector<double>& w, const std::vector<double>& eps,
                   const ModelData& data, std::size_t k) {
  const GameObs& g = data.games[k];
  const double pi =
      home_probability(dot(w, data.x[g.home]), dot(w, data.x[g.away]));
  return game_rate(pi, g.total, eps[k]);
}

double log_likelihood(const std::vector<double>& w,
                      const std::vector<double>& eps, const ModelData& data) {
  check_dimensions(w, eps, data);
  const auto eta = log_skills(w, data);
  double ll = 0.0;
  for (std::size_t k = 0; k < data.n_games(); ++k) {
    const GameObs& g = data.games[k];
    const double pi = home_probability(eta[g.home], eta[g.away]);
    ll += poisson_term(g.home_score, game_rate(pi, g.total, eps[k]).lambda);
  }
  return ll;
}

double deviance(const std::vector<double>& w, const std::vector<double>& eps,
                const ModelData& data) {
  return -2.0 * log_likelihood(w, eps, data);
}

namespace {

struct PriorTerms {
  double w = 0.0;
  double eps = 0.0;
  double hyper = 0.0;
};

PriorTerms prior_terms(double tau_w, double tau_eps, double w_sq, double eps_sq,
                       std::size_t dim, std::size_t n_games,
                       const ModelSpec& spec) {
  PriorTerms p;
  p.w = 0.5 * static_cast<double>(dim) * std::log(tau_w) - 0.5 * tau_w * w_sq;
  p.eps = 0.5 * static_cast<double>(n_games) * std::log(tau_eps) -
          0.5 * tau_eps * eps_sq;
  p.hyper = (spec.a - 1.0) * std::log(tau_w) - spec.b * tau_w +
            (spec.c - 1.0) * std::log(tau_eps) - spec.d * tau_eps;
  return p;
}

}  // namespace

double log_posterior(const PosteriorSample& sample, const ModelData& data,
                     const ModelSpec& spec) {
  if (!(sample.tau_w > 0)) {
    throw Error(ErrorCode::kNonFiniteLogPost,
                "tau_w prior term: precision must be positive");
  }
  if (!(sample.tau_eps > 0)) {
    throw Error(ErrorCode::kNonFiniteLogPost,
                "tau_eps prior term: precision must be positive");
  }
  const double ll = log_likelihood(sample.w, sample.eps, data);
  const PriorTerms p =
      prior_terms(sample.tau_w, sample.tau_eps, squared_norm(sample.w),
                  squared_norm(sample.eps), data.dim(), data.n_games(), spec);
  if (!std::isfinite(ll)) {
    throw Error(ErrorCode::kNonFiniteLogPost, "log-likelihood is not finite");
  }
  if (!std::isfinite(p.w)) {
    throw Error(ErrorCode::kNonFiniteLogPost, "weight prior is not finite");
  }
  if (!std::isfinite(p.eps)) {
    throw Error(ErrorCode::kNonFiniteLogPost,
                "random-effect prior is not finite");
  }
  if (!std::isfinite(p.hyper)) {
    throw Error(ErrorCode::kNonFiniteLogPost, "hyper-prior is not finite");
  }
  return ll + p.w + p.eps + p.hyper;
}

std::vector<double> log_posterior_gradient_w(const PosteriorSample& sample,
                                             const ModelData& data) {
  check_dimensions(sample.w, sample.eps, data);
  const auto eta = log_skills(sample.w, data);
  std::vector<double> grad(data.dim(), 0.0);
  for (std::size_t k = 0; k < data.n_games(); ++k) {
    const GameObs& g = data.games[k];
    const double pi = home_probability(eta[g.home], eta[g.away]);
    const GameRate rate = game_rate(pi, g.total, sample.eps[k]);
    if (rate.floored) continue;
    const double scale =
        (g.home_score / rate.lambda - 1.0) * g.total * pi * (1.0 - pi);
    for (std::size_t j = 0; j < data.dim(); ++j) {
      grad[j] += scale * (data.x[g.home][j] - data.x[g.away][j]);
    }
  }
  for (std::size_t j = 0; j < data.dim(); ++j) {
    grad[j] -= sample.tau_w * sample.w[j];
  }
  return grad;
}

double mh_log_ratio(const PosteriorSample& from, const PosteriorSample& to,
                    const ModelData& data, const ModelSpec& spec) {
  // Precisions move on the log scale, so the target carries the Jacobian.
  auto target = [&](const PosteriorSample& s) {
    return log_posterior(s, data, spec) + std::log(s.tau_w) +
           std::log(s.tau_eps);
  };
  return target(to) - target(from);
}

namespace {

// Incrementally maintained chain state.
class Chain {
 public:
  Chain(const ModelData& data, const ModelSpec& spec, const FitOptions& options)
      : data_(data),
        spec_(spec),
        options_(options),
        w_rng_(derive_seed(options.seed, 0)),
        eps_rng_(derive_seed(options.seed, 1)),
        tau_rng_(derive_seed(options.seed, 2)),
        rescale_rng_(derive_seed(options.seed, 3)),
        dim_(data.dim()),
        n_games_(data.n_games()) {
    w_.assign(dim_, 0.0);
    eta_.assign(data.n_teams(), 0.0);
    eps_.assign(n_games_, 0.0);
    pi_.assign(n_games_, 0.5);
    ll_.assign(n_games_, 0.0);
    initialise_random_effects();
    for (std::size_t k = 0; k < n_games_; ++k) ll_[k] = term(k, pi_[k], eps_[k]);
    ll_sum_ = std::accumulate(ll_.begin(), ll_.end(), 0.0);

    w_scale_.assign(dim_, 0.05);
    eps_scale_.assign(n_games_, 2.0);
    w_stats_.assign(dim_, {});
    eps_stats_.assign(n_games_, {});
    new_eta_.resize(eta_.size());
    alpha_.assign(eta_.size(), 1.0);
    new_alpha_.resize(eta_.size());
    new_pi_.resize(n_games_);
    new_ll_.resize(n_games_);
  }

  FitResult run() {
    FitResult out;
    out.spec = spec_;
    out.teams = data_.teams;
    out.covariates = data_.covariates;
    out.seed = options_.seed;
    out.n_iter = options_.n_iter;
    out.burn_in = options_.burn_in;
    const std::size_t kept = options_.n_iter - options_.burn_in;
    out.samples.reserve(kept);
    std::vector<double> alpha_sum(data_.n_teams(), 0.0);
    std::vector<double> eps_sum(n_games_, 0.0);
    std::vector<double> eps_sq_sum(n_games_, 0.0);

    for (std::size_t it = 0; it < options_.n_iter; ++it) {
      const bool adapting = it < options_.burn_in;
      if (it == options_.burn_in) reset_counts();
      const double gain = 1.0 / std::pow(static_cast<double>(it) + 1.0, 0.6);

      for (std::size_t j = 0; j < dim_; ++j) {
        const bool ok = update_w(j);
        record(w_stats_[j], ok, adapting, gain, w_scale_[j]);
      }
      for (std::size_t k = 0; k < n_games_; ++k) {
        const bool ok = update_eps(k);
        record(eps_stats_[k], ok, adapting, gain, eps_scale_[k]);
      }
      record(tau_w_stats_, update_log_tau(true), adapting, gain, tau_w_scale_);
      record(tau_eps_stats_, update_log_tau(false), adapting, gain,
             tau_eps_scale_);
      record(rescale_stats_, update_rescale(), adapting, gain, rescale_scale_);

      const double lp = current_log_post();
      if (!std::isfinite(lp)) {
        throw Error(ErrorCode::kChainDiverged,
                    "log posterior became non-finite at iteration " +
                        std::to_string(it));
      }
      if (adapting) continue;

      PosteriorSample s;
      s.w = w_;
      if (options_.store_eps) s.eps = eps_;
      s.tau_w = tau_w_;
      s.tau_eps = tau_eps_;
      s.log_post = lp;
      s.deviance = -2.0 * ll_sum_;
      out.samples.push_back(std::move(s));
      for (std::size_t i = 0; i < data_.n_teams(); ++i) {
        alpha_sum[i] += alpha_[i];
      }
      for (std::size_t k = 0; k < n_games_; ++k) {
        eps_sum[k] += eps_[k];
        eps_sq_sum[k] += eps_[k] * eps_[k];
      }
    }

    const double n = static_cast<double>(kept);
    out.alpha_hat.resize(data_.n_teams());
    for (std::size_t i = 0; i < data_.n_teams(); ++i) {
      out.alpha_hat[i] = alpha_sum[i] / n;
    }
    out.eps_mean.resize(n_games_);
    out.eps_sd.resize(n_games_);
    for (std::size_t k = 0; k < n_games_; ++k) {
      out.eps_mean[k] = eps_sum[k] / n;
      out.eps_sd[k] = std::sqrt(
          std::max(0.0, eps_sq_sum[k] / n - out.eps_mean[k] * out.eps_mean[k]));
    }
    out.w_mean.assign(dim_, 0.0);
    for (const auto& s : out.samples) {
      for (std::size_t j = 0; j < dim_; ++j) out.w_mean[j] += s.w[j] / n;
    }

    std::size_t acc = 0;
    std::size_t tried = 0;
    auto block = [&](const std::vector<AcceptStats>& stats) {
      std::size_t a = 0;
      std::size_t t = 0;
      for (const auto& s : stats) {
        a += s.accepted;
        t += s.tried;
      }
      acc += a;
      tried += t;
      return t == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(t);
    };
    out.block_acceptance.w = block(w_stats_);
    out.block_acceptance.eps = block(eps_stats_);
    out.block_acceptance.tau_w = block({tau_w_stats_});
    out.block_acceptance.tau_eps = block({tau_eps_stats_});
    out.block_acceptance.rescale = block({rescale_stats_});
    out.acceptance_rate =
        tried == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(tried);
    out.floor_hits = floor_hits_;
    out.rate_evaluations = rate_evaluations_;
    out.w_scales = w_scale_;
    out.dic = dic(out, data_);
    return out;
  }

 private:
  struct AcceptStats {
    std::size_t accepted = 0;
    std::size_t tried = 0;
  };

  // Each block draws from its own stream, so fits of nested models on the
  // same data share the random-effect moves.
  struct Stream {
    std::mt19937_64 rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    explicit Stream(std::uint64_t seed) : rng(seed) {}
    double gaussian() { return normal(rng); }
    double uniform() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
    bool accept(double log_ratio) {
      return log_ratio >= 0.0 || std::log(uniform()) < log_ratio;
    }
  };

  double term(std::size_t k, double pi, double eps) {
    const GameObs& g = data_.games[k];
    const GameRate rate = game_rate(pi, g.total, eps);
    ++rate_evaluations_;
    if (rate.floored) ++floor_hits_;
    return poisson_term(g.home_score, rate.lambda);
  }

  // Moment-based start for the random effects: their variance is the excess
  // of the residual variance over the Poisson variance at even skills.
  void initialise_random_effects() {
    double resid_sq = 0.0;
    double mean_rate = 0.0;
    for (const GameObs& g : data_.games) {
      const double r = g.home_score - 0.5 * g.total;
      resid_sq += r * r;
      mean_rate += 0.5 * g.total;
    }
    const double k = static_cast<double>(std::max<std::size_t>(1, n_games_));
    const double excess = std::max(1.0, (resid_sq - mean_rate) / k);
    tau_eps_ = 1.0 / excess;
    tau_w_ = 1.0;
    const double shrink = excess / (excess + std::max(1.0, mean_rate / k));
    for (std::size_t k2 = 0; k2 < n_games_; ++k2) {
      const GameObs& g = data_.games[k2];
      eps_[k2] = shrink * (g.home_score - 0.5 * g.total);
    }
    eps_sq_ = squared_norm(eps_);
    w_sq_ = 0.0;
  }

  bool update_w(std::size_t j) {
    const double delta = w_scale_[j] * w_rng_.gaussian();
    const double proposal = w_[j] + delta;
    for (std::size_t i = 0; i < eta_.size(); ++i) {
      new_eta_[i] = eta_[i] + delta * data_.x[i][j];
      new_alpha_[i] = std::exp(new_eta_[i]);
    }
    double new_sum = 0.0;
    for (std::size_t k = 0; k < n_games_; ++k) {
      const GameObs& g = data_.games[k];
      new_pi_[k] = new_alpha_[g.home] / (new_alpha_[g.home] + new_alpha_[g.away]);
      new_ll_[k] = term(k, new_pi_[k], eps_[k]);
      new_sum += new_ll_[k];
    }
    const double new_w_sq = w_sq_ - w_[j] * w_[j] + proposal * proposal;
    const double log_ratio = (new_sum - ll_sum_) - 0.5 * tau_w_ * (new_w_sq - w_sq_);
    if (!w_rng_.accept(log_ratio)) return false;
    w_[j] = proposal;
    w_sq_ = new_w_sq;
    eta_.swap(new_eta_);
    alpha_.swap(new_alpha_);
    pi_.swap(new_pi_);
    ll_.swap(new_ll_);
    ll_sum_ = new_sum;
    return true;
  }

  bool update_eps(std::size_t k) {
    const double proposal = eps_[k] + eps_scale_[k] * eps_rng_.gaussian();
    const double new_term = term(k, pi_[k], proposal);
    const double log_ratio = (new_term - ll_[k]) -
                             0.5 * tau_eps_ * (proposal * proposal - eps_[k] * eps_[k]);
    if (!eps_rng_.accept(log_ratio)) return false;
    eps_sq_ += proposal * proposal - eps_[k] * eps_[k];
    ll_sum_ += new_term - ll_[k];
    ll_[k] = new_term;
    eps_[k] = proposal;
    return true;
  }

  // Random walk on u = log(tau). The conditional target in u is
  //   (shape + m/2) u - e^u (rate + |v|^2 / 2).
  bool update_log_tau(bool weights) {
    double& tau = weights ? tau_w_ : tau_eps_;
    const double scale = weights ? tau_w_scale_ : tau_eps_scale_;
    const double shape = weights ? spec_.a : spec_.c;
    const double rate = weights ? spec_.b : spec_.d;
    const double m = static_cast<double>(weights ? dim_ : n_games_);
    // |eps|^2 drifts under incremental updates; refresh it here.
    if (!weights) eps_sq_ = squared_norm(eps_);
    const double sq = weights ? w_sq_ : eps_sq_;
    const double u = std::log(tau);
    const double u_new = u + scale * tau_rng_.gaussian();
    const double tau_new = std::exp(u_new);
    const double log_ratio = (shape + 0.5 * m) * (u_new - u) -
                             (tau_new - tau) * (rate + 0.5 * sq);
    if (!tau_rng_.accept(log_ratio)) return false;
    tau = tau_new;
    return true;
  }

  // Joint move eps -> e^r eps, log tau_eps -> log tau_eps - 2r. It keeps
  // tau_eps |eps|^2 fixed, so the prior and Jacobian terms reduce to
  //   -2 c r - d (tau' - tau).
  bool update_rescale() {
    const double r = rescale_scale_ * rescale_rng_.gaussian();
    const double f = std::exp(r);
    double new_sum = 0.0;
    for (std::size_t k = 0; k < n_games_; ++k) {
      new_ll_[k] = term(k, pi_[k], f * eps_[k]);
      new_sum += new_ll_[k];
    }
    const double tau_new = tau_eps_ * std::exp(-2.0 * r);
    const double log_ratio =
        (new_sum - ll_sum_) - 2.0 * spec_.c * r - spec_.d * (tau_new - tau_eps_);
    if (!rescale_rng_.accept(log_ratio)) return false;
    for (double& e : eps_) e *= f;
    eps_sq_ = squared_norm(eps_);
    ll_.swap(new_ll_);
    ll_sum_ = new_sum;
    tau_eps_ = tau_new;
    return true;
  }

  void record(AcceptStats& stats, bool accepted, bool adapting, double gain,
              double& scale) {
    ++stats.tried;
    if (accepted) ++stats.accepted;
    if (adapting) {
      scale *= std::exp(gain * ((accepted ? 1.0 : 0.0) - options_.target_acceptance));
    }
  }

  void reset_counts() {
    for (auto& s : w_stats_) s = {};
    for (auto& s : eps_stats_) s = {};
    tau_w_stats_ = {};
    tau_eps_stats_ = {};
    rescale_stats_ = {};
    floor_hits_ = 0;
    rate_evaluations_ = 0;
  }

  double current_log_post() const {
    const PriorTerms p = prior_terms(tau_w_, tau_eps_, w_sq_, eps_sq_, dim_,
                                     n_games_, spec_);
    return ll_sum_ + p.w + p.eps + p.hyper;
  }

  const ModelData& data_;
  const ModelSpec& spec_;
  const FitOptions& options_;
  Stream w_rng_;
  Stream eps_rng_;
  Stream tau_rng_;
  Stream rescale_rng_;
  std::size_t dim_;
  std::size_t n_games_;

  std::vector<double> w_;
  std::vector<double> eta_;
  std::vector<double> alpha_;
  std::vector<double> eps_;
  std::vector<double> pi_;
  std::vector<double> ll_;
  double ll_sum_ = 0.0;
  double w_sq_ = 0.0;
  double eps_sq_ = 0.0;
  double tau_w_ = 1.0;
  double tau_eps_ = 1.0;

  std::vector<double> w_scale_;
  std::vector<double> eps_scale_;
  double tau_w_scale_ = 0.5;
  double tau_eps_scale_ = 0.05;
  std::vector<AcceptStats> w_stats_;
  std::vector<AcceptStats> eps_stats_;
  AcceptStats tau_w_stats_;
  AcceptStats tau_eps_stats_;
  AcceptStats rescale_stats_;
  double rescale_scale_ = 0.02;
  std::size_t floor_hits_ = 0;
  std::size_t rate_evaluations_ = 0;

  std::vector<double> new_eta_;
  std::vector<double> new_alpha_;
  std::vector<double> new_pi_;
  std::vector<double> new_ll_;
};

}  // namespace

FitResult fit(const ModelData& data, const ModelSpec& spec,
              const FitOptions& options) {
  spec.validate();
  if (data.dim() == 0 || data.n_games() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty model data");
  }
  if (options.burn_in >= options.n_iter ||
      options.n_iter - options.burn_in < 100) {
    throw Error(ErrorCode::kInsufficientIterations,
                "need at least 100 post-burn-in iterations (n_iter " +
                    std::to_string(options.n_iter) + ", burn-in " +
                    std::to_string(options.burn_in) + ")");
  }
  Chain chain(data, spec, options);
  return chain.run();
}

DicResult dic(const FitResult& fit, const ModelData& data) {
  DicResult r;
  if (fit.samples.empty()) {
    throw Error(ErrorCode::kInsufficientIterations, "no posterior samples");
  }
  for (const auto& s : fit.samples) r.mean_deviance += s.deviance;
  r.mean_deviance /= static_cast<double>(fit.samples.size());
  r.deviance_at_mean = deviance(fit.w_mean, fit.eps_mean, data);
  r.p_d = r.mean_deviance - r.deviance_at_mean;
  r.dic = r.mean_deviance + r.p_d;
  return r;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  if (halves.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(halves.front().size());
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double within = 0.0;
  for (const auto& h : halves) {
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / n;
    means.push_back(mean);
    double ss = 0.0;
    for (double v : h) ss += (v - mean) * (v - mean);
    within += ss / (n - 1.0);
  }
  within /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (m - 1.0);
  if (within <= 0.0) return 1.0;
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

MultiChainFit fit_chains(const ModelData& data, const ModelSpec& spec,
                         const FitOptions& options, std::size_t n_chains,
                         unsigned threads) {
  if (n_chains == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one chain");
  }
  MultiChainFit out;
  out.chains.resize(n_chains);
  parallel_for(n_chains, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      FitOptions chain_options = options;
      chain_options.seed =
          n_chains == 1 ? options.seed : derive_seed(options.seed, c);
      out.chains[c] = fit(data, spec, chain_options);
    }
  });

  FitResult& merged = out.merged;
  const FitResult& first = out.chains.front();
  merged.spec = first.spec;
  merged.teams = first.teams;
  merged.covariates = first.covariates;
  merged.seed = options.seed;
  merged.n_iter = options.n_iter;
  merged.burn_in = options.burn_in;
  merged.w_mean.assign(data.dim(), 0.0);
  merged.eps_mean.assign(data.n_games(), 0.0);
  merged.eps_sd.assign(data.n_games(), 0.0);
  merged.alpha_hat.assign(data.n_teams(), 0.0);
  const double weight = 1.0 / static_cast<double>(n_chains);
  std::vector<double> eps_second(data.n_games(), 0.0);
  for (const FitResult& c : out.chains) {
    merged.samples.insert(merged.samples.end(), c.samples.begin(), c.samples.end());
    for (std::size_t j = 0; j < data.dim(); ++j) merged.w_mean[j] += weight * c.w_mean[j];
    for (std::size_t k = 0; k < data.n_games(); ++k) {
      merged.eps_mean[k] += weight * c.eps_mean[k];
      eps_second[k] +=
          weight * (c.eps_sd[k] * c.eps_sd[k] + c.eps_mean[k] * c.eps_mean[k]);
    }
    for (std::size_t i = 0; i < data.n_teams(); ++i) {
      merged.alpha_hat[i] += weight * c.alpha_hat[i];
    }
    merged.acceptance_rate += weight * c.acceptance_rate;
    merged.block_acceptance.w += weight * c.block_acceptance.w;
    merged.block_acceptance.eps += weight * c.block_acceptance.eps;
    merged.block_acceptance.tau_w += weight * c.block_acceptance.tau_w;
    merged.block_acceptance.tau_eps += weight * c.block_acceptance.tau_eps;
    merged.block_acceptance.rescale += weight * c.block_acceptance.rescale;
    merged.floor_hits += c.floor_hits;
    merged.rate_evaluations += c.rate_evaluations;
  }
  for (std::size_t k = 0; k < data.n_games(); ++k) {
    merged.eps_sd[k] = std::sqrt(
        std::max(0.0, eps_second[k] - merged.eps_mean[k] * merged.eps_mean[k]));
  }
  merged.w_scales = first.w_scales;
  merged.dic = dic(merged, data);

  for (std::size_t j = 0; j < data.dim(); ++j) {
    std::vector<std::vector<double>> traces;
    for (const FitResult& c : out.chains) {
      std::vector<double> t;
      for (const auto& s : c.samples) t.push_back(s.w[j]);
      traces.push_back(std::move(t));
    }
    out.rhat_w.push_back(split_rhat(traces));
  }
  std::vector<std::vector<double>> lp;
  for (const FitResult& c : out.chains) {
    std::vector<double> t;
    for (const auto& s : c.samples) t.push_back(s.log_post);
    lp.push_back(std::move(t));
  }
  out.rhat_log_post = split_rhat(lp);
  return out;
}

double skill_win_correlation(const std::vector<double>& alpha,
                             const ModelData& data) {
  std::vector<double> wins(data.n_teams(), 0.0);
  for (const GameObs& g : data.games) {
    const int away_score = g.total - g.home_score;
    if (g.home_score > away_score) wins[g.home] += 1.0;
    if (away_score > g.home_score) wins[g.away] += 1.0;
  }
  const double n = static_cast<double>(alpha.size());
  const double ma = std::accumulate(alpha.begin(), alpha.end(), 0.0) / n;
  const double mw = std::accumulate(wins.begin(), wins.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    sab += (alpha[i] - ma) * (wins[i] - mw);
    saa += (alpha[i] - ma) * (alpha[i] - ma);
    sbb += (wins[i] - mw) * (wins[i] - mw);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

UnderdogTable underdog_probs(
    const SeasonView& season, const std::vector<double>& alpha,
    const std::optional<std::set<std::string>>& removed_plus) {
  if (alpha.size() != season.teams.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "need one skill per team (" +
                    std::to_string(season.teams.size()) + ")");
  }
  UnderdogTable t;
  t.has_removed_plus = removed_plus.has_value();
  for (const auto& m : season.matches) {
    const std::size_t h = *season.team_index(m.home_team);
    const std::size_t a = *season.team_index(m.away_team);
    const double ah = alpha[h];
    const double aa = alpha[a];
    if (std::abs(ah - aa) <= 1e-12 * std::max(std::abs(ah), std::abs(aa))) {
      ++t.tied_skill;
      continue;
    }
    const bool underdog_home = ah < aa;
    const bool underdog_won = underdog_home
                                  ? m.home_points_raw > m.away_points_raw
                                  : m.away_points_raw > m.home_points_raw;
    const std::string& favored = underdog_home ? m.away_team : m.home_team;
    auto add = [&](UnderdogCell& cell) {
      ++cell.games;
      if (underdog_won) ++cell.wins;
    };
    add(t.overall);
    add(underdog_home ? t.home : t.away);
    if (removed_plus && removed_plus->count(favored)) {
      add(underdog_home ? t.home_plus : t.away_plus);
    }
  }
  return t;
}

}  // namespace luckskill
