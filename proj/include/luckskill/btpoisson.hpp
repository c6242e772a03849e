#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "luckskill/corpus.hpp"
#include "luckskill/features.hpp"

namespace luckskill {

// Bradley-Terry-Poisson random-effects model.
//
//   log(alpha_i) = w . x_i
//   Y_k ~ Poisson(lambda_k),  lambda_k = N_k * alpha_h / (alpha_h + alpha_a) + eps_k
//   w ~ N(0, I / tau_w),  eps ~ N(0, I / tau_eps)
//   tau_w ~ Gamma(a, b),  tau_eps ~ Gamma(c, d)   (shape, rate)
//
// lambda_k is floored at kRateFloor so the Poisson rate stays positive.

inline constexpr double kRateFloor = 1e-6;

struct ModelSpec {
  std::vector<Feature> features;
  double a = 0.01;
  double b = 0.01;
  double c = 0.01;
  double d = 0.01;
  // Not identifiable: a common shift of log(alpha) cancels in the win
  // probability. Only for experimentation.
  bool include_intercept = false;

  // Throws kInvalidArgument on an empty feature set or non-positive
  // hyperparameters.
  void validate() const;
  std::vector<std::string> covariate_names() const;
};

struct GameObs {
  std::size_t home = 0;
  std::size_t away = 0;
  int total = 0;       // N_k
  int home_score = 0;  // Y_k
};

// Design matrix and observations for one season.
struct ModelData {
  std::vector<std::string> teams;
  std::vector<std::string> covariates;
  // teams.size() rows of covariates.size() values.
  std::vector<std::vector<double>> x;
  std::vector<GameObs> games;

  std::size_t n_teams() const { return teams.size(); }
  std::size_t dim() const { return covariates.size(); }
  std::size_t n_games() const { return games.size(); }
};

// Uses the standardized feature values of each season team. Throws
// kInvalidArgument when a team has no feature row.
ModelData make_model_data(const SeasonView& season,
                          const std::vector<TeamFeatures>& features,
                          const ModelSpec& spec);

// x rows follow season.teams.
ModelData make_model_data(const SeasonView& season,
                          std::vector<std::vector<double>> x,
                          std::vector<std::string> covariate_names);

struct PosteriorSample {
  std::vector<double> w;
  // Empty unless FitOptions::store_eps is set.
  std::vector<double> eps;
  double tau_w = 1.0;
  double tau_eps = 1.0;
  double log_post = 0.0;
  double deviance = 0.0;
};

// P(i beats j) = alpha_i / (alpha_i + alpha_j). Throws kNonPositiveSkill.
double bt_probability(double alpha_i, double alpha_j);

struct GameRate {
  double lambda = 0.0;
  bool floored = false;
};

GameRate game_rate(double pi, int total, double eps);
GameRate game_rate(const std::vector<double>& w, const std::vector<double>& eps,
                   const ModelData& data, std::size_t k);

// Poisson log-likelihood without the log(y!) constant.
double log_likelihood(const std::vector<double>& w,
                      const std::vector<double>& eps, const ModelData& data);

// -2 * log_likelihood. Negative for typical scores because log(y!) is
// omitted; differences between models on the same data are unaffected.
double deviance(const std::vector<double>& w, const std::vector<double>& eps,
                const ModelData& data);

// Unnormalized log posterior density in (w, eps, tau_w, tau_eps):
//   loglik + (d/2) log tau_w - tau_w |w|^2 / 2
//          + (K/2) log tau_eps - tau_eps |eps|^2 / 2
//          + (a-1) log tau_w - b tau_w + (c-1) log tau_eps - d tau_eps.
// Throws kNonFiniteLogPost naming the offending term.
double log_posterior(const PosteriorSample& sample, const ModelData& data,
                     const ModelSpec& spec);

// Analytic d log_posterior / d w.
std::vector<double> log_posterior_gradient_w(const PosteriorSample& sample,
                                             const ModelData& data);

struct FitOptions {
  std::size_t n_iter = 10000;
  std::size_t burn_in = 2000;
  std::uint64_t seed = 0;
  // Robbins-Monro target for every component's acceptance rate during
  // burn-in; scales are frozen afterwards.
  double target_acceptance = 0.39;
  // Keep every post-burn-in eps vector (K doubles per sample).
  bool store_eps = false;
};

struct BlockAcceptance {
  double w = 0.0;
  double eps = 0.0;
  double tau_w = 0.0;
  double tau_eps = 0.0;
  double rescale = 0.0;
};

struct DicResult {
  double mean_deviance = 0.0;       // D-bar
  double deviance_at_mean = 0.0;    // D(theta-bar)
  double p_d = 0.0;
  double dic = 0.0;
};

struct FitResult {
  ModelSpec spec;
  std::vector<std::string> teams;
  std::vector<std::string> covariates;
  std::vector<PosteriorSample> samples;
  // Post-burn-in acceptance over all component updates.
  double acceptance_rate = 0.0;
  BlockAcceptance block_acceptance;
  std::vector<double> w_mean;
  std::vector<double> eps_mean;
  std::vector<double> eps_sd;
  // Posterior mean of exp(w . x_i), indexed like teams.
  std::vector<double> alpha_hat;
  DicResult dic;
  std::uint64_t seed = 0;
  std::size_t n_iter = 0;
  std::size_t burn_in = 0;
  std::size_t floor_hits = 0;
  std::size_t rate_evaluations = 0;
  std::vector<double> w_scales;
  double floor_hit_rate() const {
    return rate_evaluations == 0
               ? 0.0
               : static_cast<double>(floor_hits) /
                     static_cast<double>(rate_evaluations);
  }
};

// Componentwise random-walk Metropolis-Hastings: w, then eps, then log tau_w
// and log tau_eps, then a joint rescaling of (eps, tau_eps). Each block uses
// its own random stream derived from the seed. Throws kInsufficientIterations
// when fewer than 100 samples would be kept and kChainDiverged when the log
// posterior stops being finite.
FitResult fit(const ModelData& data, const ModelSpec& spec,
              const FitOptions& options);

// Log acceptance ratio of a symmetric proposal from `from` to `to`.
double mh_log_ratio(const PosteriorSample& from, const PosteriorSample& to,
                    const ModelData& data, const ModelSpec& spec);

// DIC from the stored samples: D-bar + p_D with p_D = D-bar - D(theta-bar).
DicResult dic(const FitResult& fit, const ModelData& data);

struct MultiChainFit {
  std::vector<FitResult> chains;
  FitResult merged;
  // Split-R-hat for each w coordinate and for the log posterior.
  std::vector<double> rhat_w;
  double rhat_log_post = 0.0;
};

// Independent chains seeded with derive_seed(options.seed, c), run on up to
// `threads` workers and merged afterwards.
MultiChainFit fit_chains(const ModelData& data, const ModelSpec& spec,
                         const FitOptions& options, std::size_t n_chains,
                         unsigned threads = 0);

// Split-R-hat over chains of equal length.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Pearson correlation between skills and games won (strictly higher score).
double skill_win_correlation(const std::vector<double>& alpha,
                             const ModelData& data);

struct UnderdogCell {
  std::size_t wins = 0;
  std::size_t games = 0;
  // nullopt when no match qualifies (EmptyCondition).
  std::optional<double> value() const {
    if (games == 0) return std::nullopt;
    return static_cast<double>(wins) / static_cast<double>(games);
  }
};

struct UnderdogTable {
  UnderdogCell overall;        // P(U)
  UnderdogCell away;           // P(U | A)
  UnderdogCell home;           // P(U | H)
  UnderdogCell away_plus;      // P(U | A, R+)
  UnderdogCell home_plus;      // P(U | H, R+)
  // Matches skipped because both teams have the same skill.
  std::size_t tied_skill = 0;
  bool has_removed_plus = false;
};

// The underdog of a match is the team with the smaller skill; it wins when
// its raw score is strictly higher. R+ cells keep matches whose favored team
// is in `removed_plus`. `alpha` is indexed like season.teams.
UnderdogTable underdog_probs(const SeasonView& season,
                             const std::vector<double>& alpha,
                             const std::optional<std::set<std::string>>&
                                 removed_plus = std::nullopt);

}  // namespace luckskill
