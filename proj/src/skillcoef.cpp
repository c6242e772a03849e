#include "luckskill/skillcoef.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "luckskill/parallel.hpp"

namespace luckskill {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TeamCounts {
  bool regular = true;
  double mean_home = 0.0;
  double mean_away = 0.0;
};

TeamCounts team_counts(const std::vector<int>& home, const std::vector<int>& away,
                       int k) {
  TeamCounts c;
  for (std::size_t i = 0; i < home.size(); ++i) {
    if (home[i] != k || away[i] != k) c.regular = false;
    c.mean_home += home[i];
    c.mean_away += away[i];
  }
  if (!home.empty()) {
    c.mean_home /= static_cast<double>(home.size());
    c.mean_away /= static_cast<double>(away.size());
  }
  return c;
}

PhiValue phi_value(double s2, const TeamCounts& counts,
                   const BaselineMoments& m) {
  PhiValue out;
  out.s2 = s2;
  out.approximate = !counts.regular;
  out.baseline_variance =
      counts.regular ? m.var_2k
                     : m.var_home * counts.mean_home + m.var_away * counts.mean_away;
  if (s2 == 0.0) {
    out.degenerate = true;
    out.value = kNegInf;
  } else {
    out.value = (s2 - out.baseline_variance) / s2;
  }
  return out;
}

// Integer-indexed copy of a season's schedule.
struct Schedule {
  std::size_t n_teams = 0;
  std::vector<std::uint32_t> home;
  std::vector<std::uint32_t> away;
  std::vector<int> home_games;
  std::vector<int> away_games;
};

Schedule make_schedule(const SeasonView& season) {
  Schedule s;
  s.n_teams = season.teams.size();
  s.home_games.assign(s.n_teams, 0);
  s.away_games.assign(s.n_teams, 0);
  s.home.reserve(season.matches.size());
  s.away.reserve(season.matches.size());
  for (const auto& m : season.matches) {
    const auto h = static_cast<std::uint32_t>(*season.team_index(m.home_team));
    const auto a = static_cast<std::uint32_t>(*season.team_index(m.away_team));
    s.home.push_back(h);
    s.away.push_back(a);
    ++s.home_games[h];
    ++s.away_games[a];
  }
  return s;
}

int season_k(const SeasonView& season) { return std::max(1, season.k()); }

}  // namespace

double sample_variance(const std::vector<double>& values,
                       VarianceDenominator denominator) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double d = denominator == VarianceDenominator::kSample
                       ? static_cast<double>(n - 1)
                       : static_cast<double>(n);
  return ss / d;
}

SeasonTable final_table(const SeasonView& season, const ScoringScheme& scheme,
                        VarianceDenominator denominator) {
  SeasonTable t;
  t.teams = season.teams;
  t.points.assign(t.teams.size(), 0.0);
  t.home_games.assign(t.teams.size(), 0);
  t.away_games.assign(t.teams.size(), 0);
  for (const auto& m : season.matches) {
    const std::size_t h = *season.team_index(m.home_team);
    const std::size_t a = *season.team_index(m.away_team);
    const Outcome& o =
        scheme.outcomes()[scheme.classify(m.home_points_raw, m.away_points_raw)];
    t.points[h] += o.home_points;
    t.points[a] += o.away_points;
    ++t.home_games[h];
    ++t.away_games[a];
  }
  if (!t.points.empty()) {
    t.mean = std::accumulate(t.points.begin(), t.points.end(), 0.0) /
             static_cast<double>(t.points.size());
  }
  t.s2 = sample_variance(t.points, denominator);
  return t;
}

PhiValue phi(const SeasonTable& table, const BaselineMoments& moments) {
  return phi_value(table.s2,
                   team_counts(table.home_games, table.away_games, moments.k),
                   moments);
}

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::kSkill: return "Skill";
    case Classification::kRandom: return "Random";
    case Classification::kSubRandom: return "SubRandom";
  }
  return "Random";
}

Classification classify(double phi, double ci_low, double ci_high) {
  if (phi > ci_high) return Classification::kSkill;
  if (phi < ci_low) return Classification::kSubRandom;
  return Classification::kRandom;
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  const double a = sorted[lo];
  const double b = sorted[hi];
  if (frac == 0.0 || a == b || std::isinf(a)) return a;
  return a + frac * (b - a);
}

MonteCarloInterval monte_carlo_ci(const SeasonView& season,
                                  const ScoringScheme& scheme,
                                  const ContextProbs& probs,
                                  const MonteCarloOptions& options) {
  if (options.n_replicates == 0) {
    throw Error(ErrorCode::kInvalidArgument, "n_replicates must be positive");
  }
  if (probs.outcome.size() != scheme.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "probabilities do not match scheme '" + scheme.name() + "'");
  }
  const Schedule schedule = make_schedule(season);
  const int k = season_k(season);
  const TeamCounts counts =
      team_counts(schedule.home_games, schedule.away_games, k);

  const std::size_t n_outcomes = scheme.size();
  std::vector<double> cumulative(n_outcomes);
  std::partial_sum(probs.outcome.begin(), probs.outcome.end(),
                   cumulative.begin());
  std::vector<double> home_points(n_outcomes);
  std::vector<double> away_points(n_outcomes);
  for (std::size_t o = 0; o < n_outcomes; ++o) {
    home_points[o] = scheme.outcomes()[o].home_points;
    away_points[o] = scheme.outcomes()[o].away_points;
  }

  MonteCarloInterval out;
  out.replicate_phis.resize(options.n_replicates);
  parallel_for(
      options.n_replicates, options.threads,
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> points(schedule.n_teams);
        std::vector<std::size_t> outcome_counts(n_outcomes);
        std::mt19937_64 rng;
        for (std::size_t r = begin; r < end; ++r) {
          rng.seed(derive_seed(options.seed, r));
          std::fill(points.begin(), points.end(), 0.0);
          std::fill(outcome_counts.begin(), outcome_counts.end(), 0);
          for (std::size_t g = 0; g < schedule.home.size(); ++g) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            std::size_t o = 0;
            while (o + 1 < n_outcomes && u >= cumulative[o]) ++o;
            points[schedule.home[g]] += home_points[o];
            points[schedule.away[g]] += away_points[o];
            ++outcome_counts[o];
          }
          const ContextProbs rep_probs =
              ContextProbs::from_counts(outcome_counts, scheme);
          const BaselineMoments m = moments(rep_probs, scheme, k);
          out.replicate_phis[r] =
              phi_value(sample_variance(points, options.denominator), counts, m)
                  .value;
        }
      });

  std::vector<double> sorted = out.replicate_phis;
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - options.ci_level) / 2.0;
  out.ci_low = percentile_sorted(sorted, tail);
  out.ci_high = percentile_sorted(sorted, 1.0 - tail);
  return out;
}

PhiReport evaluate_season(const SeasonView& season, const ScoringScheme& scheme,
                          const MonteCarloOptions& options) {
  PhiReport r;
  r.league_id = season.league_id;
  r.season_id = season.season_id;
  r.n_teams = season.n_teams();
  r.games_per_team = season.games_per_team;
  r.warnings = season.warnings;
  r.probs = estimate_context_probs(season, scheme);
  r.moments = moments(r.probs, scheme, season_k(season));
  const SeasonTable table = final_table(season, scheme, options.denominator);
  const PhiValue value = phi(table, r.moments);
  r.s2 = value.s2;
  r.phi = value.value;
  r.degenerate = value.degenerate;
  r.approximate = value.approximate;
  if (value.degenerate) {
    r.warnings.push_back("final scores have zero variance; phi set to -inf");
  }
  if (value.approximate) {
    r.warnings.push_back(
        "unequal per-team game counts; baseline variance uses each team's own "
        "counts");
  }
  const MonteCarloInterval ci = monte_carlo_ci(season, scheme, r.probs, options);
  r.ci_low = ci.ci_low;
  r.ci_high = ci.ci_high;
  r.n_replicates = options.n_replicates;
  r.ci_level = options.ci_level;
  r.rng_seed = options.seed;
  r.classification = r.degenerate ? Classification::kSubRandom
                                   : classify(r.phi, r.ci_low, r.ci_high);
  return r;
}

std::vector<std::string> RemovalTrace::removed_best() const {
  std::vector<std::string> out;
  for (const auto& step : removed) {
    if (step.best) out.push_back(step.team);
  }
  return out;
}

namespace {

// Index of the team farthest from the mean score, applying the tie rules.
std::size_t pick_team_to_remove(const SeasonTable& table) {
  double max_distance = 0.0;
  for (double p : table.points) {
    max_distance = std::max(max_distance, std::abs(p - table.mean));
  }
  const double tolerance = 1e-9 * std::max(1.0, std::abs(table.mean));
  std::optional<std::size_t> best_side;
  std::optional<std::size_t> worst_side;
  // Teams are sorted by id, so the first hit on each side is alphabetical.
  for (std::size_t i = 0; i < table.points.size(); ++i) {
    const double d = table.points[i] - table.mean;
    if (std::abs(d) < max_distance - tolerance) continue;
    if (d >= 0) {
      if (!best_side) best_side = i;
    } else if (!worst_side) {
      worst_side = i;
    }
  }
  return best_side ? *best_side : *worst_side;
}

}  // namespace

RemovalTrace reduce_to_random(const SeasonView& season,
                              const ScoringScheme& scheme,
                              const MonteCarloOptions& options) {
  RemovalTrace trace;
  trace.league_id = season.league_id;
  trace.season_id = season.season_id;
  trace.initial_teams = season.n_teams();
  trace.rng_seed = options.seed;

  PhiReport report = evaluate_season(season, scheme, options);
  if (report.classification != Classification::kSkill) {
    throw Error(ErrorCode::kNotSkillSeason,
                season.league_id + "/" + season.season_id + " is classified " +
                    classification_name(report.classification) +
                    " (phi " + std::to_string(report.phi) + ", CI [" +
                    std::to_string(report.ci_low) + ", " +
                    std::to_string(report.ci_high) + "])");
  }

  std::vector<std::string> excluded;
  SeasonView current = season;
  for (std::size_t step = 1;; ++step) {
    const SeasonTable table = final_table(current, scheme, options.denominator);
    const std::size_t idx = pick_team_to_remove(table);
    RemovalStep removal;
    removal.team = table.teams[idx];
    removal.points = table.points[idx];
    removal.best = table.points[idx] >= table.mean;
    removal.phi_before = report.phi;
    removal.ci_low_before = report.ci_low;
    removal.ci_high_before = report.ci_high;
    trace.removed.push_back(removal);
    excluded.push_back(removal.team);

    current = without_teams(season, excluded);
    trace.teams_remaining = current.n_teams();
    if (current.n_teams() < kMinTeamsAfterRemoval) {
      trace.final_phi = report.phi;
      trace.final_ci_low = report.ci_low;
      trace.final_ci_high = report.ci_high;
      throw ExhaustedTeamsError(
          season.league_id + "/" + season.season_id + ": still not random with " +
              std::to_string(current.n_teams() + 1) + " teams",
          std::move(trace));
    }

    MonteCarloOptions step_options = options;
    step_options.seed = derive_seed(options.seed, step);
    report = evaluate_season(current, scheme, step_options);
    if (report.phi >= report.ci_low && report.phi <= report.ci_high) {
      trace.final_phi = report.phi;
      trace.final_ci_low = report.ci_low;
      trace.final_ci_high = report.ci_high;
      return trace;
    }
  }
}

std::vector<CumulativePoint> cumulative_phi(
    const std::vector<SeasonView>& seasons, const ScoringScheme& scheme,
    VarianceDenominator denominator) {
  std::vector<CumulativePoint> out;
  SeasonView pool;
  for (const SeasonView& s : seasons) {
    if (pool.league_id.empty()) pool.league_id = s.league_id;
    pool.matches.insert(pool.matches.end(), s.matches.begin(), s.matches.end());
    const SeasonView pooled = without_teams(pool, {});
    const ContextProbs probs = estimate_context_probs(pooled, scheme);
    const BaselineMoments m = moments(probs, scheme, season_k(pooled));
    CumulativePoint point;
    point.season_id = s.season_id;
    point.n_teams = pooled.n_teams();
    point.n_matches = pooled.matches.size();
    point.phi = phi(final_table(pooled, scheme, denominator), m);
    out.push_back(point);
  }
  return out;
}

}  // namespace luckskill
