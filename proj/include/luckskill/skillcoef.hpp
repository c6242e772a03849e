#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "luckskill/baseline.hpp"
#include "luckskill/corpus.hpp"
#include "luckskill/error.hpp"

namespace luckskill {

enum class VarianceDenominator {
  kSample,      // n - 1
  kPopulation,  // n
};

// Final table points per team and their spread.
struct SeasonTable {
  std::vector<std::string> teams;
  std::vector<double> points;
  std::vector<int> home_games;
  std::vector<int> away_games;
  double mean = 0.0;
  double s2 = 0.0;
};

SeasonTable final_table(const SeasonView& season, const ScoringScheme& scheme,
                        VarianceDenominator denominator = VarianceDenominator::kSample);

double sample_variance(const std::vector<double>& values,
                       VarianceDenominator denominator);

struct PhiValue {
  // (s2 - baseline) / s2, or -inf when s2 == 0.
  double value = 0.0;
  // s2 == 0: phi is undefined and reported as -inf.
  bool degenerate = false;
  // Per-team game counts differ from (k home, k away); the baseline variance
  // is then the mean of each team's own expected variance.
  bool approximate = false;
  double s2 = 0.0;
  double baseline_variance = 0.0;
};

PhiValue phi(const SeasonTable& table, const BaselineMoments& moments);

enum class Classification { kSkill, kRandom, kSubRandom };

const char* classification_name(Classification c);
Classification classify(double phi, double ci_low, double ci_high);

// Percentile of sorted data with linear interpolation between order
// statistics (Hyndman-Fan type 7). -inf entries are handled.
double percentile_sorted(const std::vector<double>& sorted, double q);

struct MonteCarloOptions {
  std::size_t n_replicates = 10000;
  std::uint64_t seed = 0;
  // 0 = hardware concurrency. Results do not depend on the thread count.
  unsigned threads = 0;
  double ci_level = 0.95;
  VarianceDenominator denominator = VarianceDenominator::kSample;
};

struct MonteCarloInterval {
  double ci_low = 0.0;
  double ci_high = 0.0;
  // Indexed by replicate number.
  std::vector<double> replicate_phis;
};

// Replays the season's schedule n_replicates times with every outcome drawn
// i.i.d. from `probs`. Each replicate is scored exactly as an observed season:
// its own outcome frequencies feed the baseline variance.
MonteCarloInterval monte_carlo_ci(const SeasonView& season,
                                  const ScoringScheme& scheme,
                                  const ContextProbs& probs,
                                  const MonteCarloOptions& options);

struct PhiReport {
  std::string league_id;
  std::string season_id;
  std::size_t n_teams = 0;
  int games_per_team = 0;
  ContextProbs probs;
  BaselineMoments moments;
  double s2 = 0.0;
  double phi = 0.0;
  bool degenerate = false;
  bool approximate = false;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_replicates = 0;
  double ci_level = 0.95;
  Classification classification = Classification::kRandom;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> warnings;
};

PhiReport evaluate_season(const SeasonView& season, const ScoringScheme& scheme,
                          const MonteCarloOptions& options);

struct RemovalStep {
  std::string team;
  double points = 0.0;
  // Removed from the top of the table (above the mean score).
  bool best = false;
  double phi_before = 0.0;
  double ci_low_before = 0.0;
  double ci_high_before = 0.0;
};

struct RemovalTrace {
  std::string league_id;
  std::string season_id;
  std::size_t initial_teams = 0;
  std::vector<RemovalStep> removed;
  double final_phi = 0.0;
  double final_ci_low = 0.0;
  double final_ci_high = 0.0;
  std::size_t teams_remaining = 0;
  std::uint64_t rng_seed = 0;

  // Removed teams taken from the top of the table.
  std::vector<std::string> removed_best() const;
};

// Thrown by reduce_to_random when fewer than four teams would remain before
// the season becomes indistinguishable from chance. Carries the partial trace.
class ExhaustedTeamsError : public Error {
 public:
  ExhaustedTeamsError(const std::string& message, RemovalTrace trace)
      : Error(ErrorCode::kExhaustedTeams, message), trace_(std::move(trace)) {}
  const RemovalTrace& trace() const { return trace_; }

 private:
  RemovalTrace trace_;
};

inline constexpr std::size_t kMinTeamsAfterRemoval = 4;

// Removes teams one at a time, farthest from the mean score first, until the
// recomputed phi falls inside its recomputed interval. Ties between the top
// and bottom remove the top team; ties on the same side go alphabetically.
// Context probabilities are re-estimated from the surviving matches.
// Step s of the procedure seeds its interval with derive_seed(seed, s)
// (step 0 uses `seed` itself).
RemovalTrace reduce_to_random(const SeasonView& season,
                              const ScoringScheme& scheme,
                              const MonteCarloOptions& options);

struct CumulativePoint {
  std::string season_id;
  std::size_t n_teams = 0;
  std::size_t n_matches = 0;
  PhiValue phi;
};

// phi over matches pooled from the first season up to each season in turn,
// treated as one championship over the teams present in the pool.
std::vector<CumulativePoint> cumulative_phi(
    const std::vector<SeasonView>& seasons, const ScoringScheme& scheme,
    VarianceDenominator denominator = VarianceDenominator::kSample);

}  // namespace luckskill
