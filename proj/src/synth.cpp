#include "luckskill/synth.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <tuple>

#include <nlohmann/json.hpp>

#include "luckskill/error.hpp"

namespace luckskill {

namespace {

constexpr double kRateFloor = 1e-6;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Circle-method rounds of a single round robin over n (or n+1 with a bye).
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> circle_rounds(
    std::size_t n) {
  const std::size_t m = n % 2 == 0 ? n : n + 1;
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
  for (std::size_t r = 0; r + 1 < m; ++r) {
    std::vector<std::pair<std::size_t, std::size_t>> games;
    for (std::size_t i = 0; i < m / 2; ++i) {
      std::size_t a = order[i];
      std::size_t b = order[m - 1 - i];
      if (a >= n || b >= n) continue;  // bye
      if ((r + i) % 2 == 1) std::swap(a, b);
      games.emplace_back(a, b);
    }
    rounds.push_back(std::move(games));
    // Keep order[0] fixed and rotate the rest by one position.
    const std::size_t last = order[m - 1];
    for (std::size_t i = m - 1; i > 1; --i) order[i] = order[i - 1];
    order[1] = last;
  }
  return rounds;
}

// Raw score pair that falls into outcome `o`.
std::pair<int, int> representative_score(const Outcome& o) {
  const int margin = std::max(1, o.min_margin);
  switch (o.when) {
    case Comparison::kHomeGreater: return {margin, 0};
    case Comparison::kEqual: return {0, 0};
    case Comparison::kHomeLess: return {0, margin};
  }
  return {0, 0};
}

std::size_t outcome_index(const ScoringScheme& scheme, Comparison kind) {
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    if (scheme.outcomes()[i].when == kind) return i;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "scheme '" + scheme.name() + "' lacks a required outcome kind");
}

std::vector<Fixture> schedule_for(const SynthConfig& config,
                                  std::vector<std::string>& teams) {
  if (config.schedule == ScheduleKind::kReplay) {
    if (!config.replay) {
      throw Error(ErrorCode::kInvalidArgument, "replay schedule needs a season");
    }
    teams = config.replay->teams;
    std::vector<Fixture> out;
    for (const auto& m : config.replay->matches) {
      out.push_back({m.round, *config.replay->team_index(m.home_team),
                     *config.replay->team_index(m.away_team)});
    }
    return out;
  }
  teams = synth_team_names(config.n_teams);
  return double_round_robin(config.n_teams, config.games_per_team);
}

SeasonView finish(const SynthConfig& config, std::vector<MatchRecord> records) {
  BuildOptions opts;
  opts.min_teams = 2;
  opts.allow_irregular = config.schedule == ScheduleKind::kReplay;
  return build_season(records, config.league_id, config.season_id, opts);
}

}  // namespace

std::vector<std::string> synth_team_names(std::size_t n) {
  const int width = n < 100 ? 2 : n < 1000 ? 3 : 6;
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "T%0*zu", width, i + 1);
    names.emplace_back(buf);
  }
  return names;
}

std::vector<Fixture> double_round_robin(std::size_t n_teams,
                                        int games_per_team) {
  if (n_teams < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two teams");
  }
  const int base = static_cast<int>(2 * (n_teams - 1));
  if (games_per_team == 0) games_per_team = base;
  const int extra = games_per_team - base;
  if (extra < 0 || extra % 2 != 0 || (extra > 0 && n_teams % 2 != 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "games_per_team must be 2(n-1) plus an even number of extra "
                "games, with an even number of teams for extras");
  }
  const auto rounds = circle_rounds(n_teams);
  const int n_rounds = static_cast<int>(rounds.size());
  std::vector<Fixture> out;
  for (int r = 0; r < n_rounds; ++r) {
    for (const auto& [h, a] : rounds[r]) out.push_back({r + 1, h, a});
  }
  for (int r = 0; r < n_rounds; ++r) {
    for (const auto& [h, a] : rounds[r]) out.push_back({n_rounds + r + 1, a, h});
  }
  int round = 2 * n_rounds;
  for (int j = 0; j < extra / 2; ++j) {
    const auto& games = rounds[j % n_rounds];
    ++round;
    for (const auto& [h, a] : games) out.push_back({round, h, a});
    ++round;
    for (const auto& [h, a] : games) out.push_back({round, a, h});
  }
  return out;
}

SeasonView simulate_random(const SynthConfig& config) {
  const ContextProbs probs = ContextProbs::from_home_tie_away(
      config.scheme, config.p_home, config.p_tie, config.p_away);
  std::vector<std::string> teams;
  const auto fixtures = schedule_for(config, teams);
  if (config.mode == SynthMode::kPlanted && config.n_planted > teams.size()) {
    throw Error(ErrorCode::kInvalidArgument, "more planted teams than teams");
  }

  const ScoringScheme& scheme = config.scheme;
  const std::size_t home_win = outcome_index(scheme, Comparison::kHomeGreater);
  const std::size_t away_win = outcome_index(scheme, Comparison::kHomeLess);
  const bool ties = scheme.allows_ties();
  const std::size_t tie = ties ? outcome_index(scheme, Comparison::kEqual) : 0;

  std::mt19937_64 rng(config.seed);
  std::vector<MatchRecord> records;
  records.reserve(fixtures.size());
  for (const Fixture& f : fixtures) {
    const double u = uniform01(rng);
    std::size_t o = 0;
    const bool home_planted =
        config.mode == SynthMode::kPlanted && f.home < config.n_planted;
    const bool away_planted =
        config.mode == SynthMode::kPlanted && f.away < config.n_planted;
    if (home_planted != away_planted) {
      const double p_win = config.planted_win_prob;
      const double rest = 1.0 - p_win;
      const std::size_t strong_win = home_planted ? home_win : away_win;
      const std::size_t strong_loss = home_planted ? away_win : home_win;
      if (u < p_win) {
        o = strong_win;
      } else if (ties && u < p_win + rest / 2) {
        o = tie;
      } else {
        o = strong_loss;
      }
    } else {
      double acc = 0.0;
      o = scheme.size() - 1;
      for (std::size_t i = 0; i < scheme.size(); ++i) {
        acc += probs.outcome[i];
        if (u < acc) {
          o = i;
          break;
        }
      }
    }
    const auto [hs, as] = representative_score(scheme.outcomes()[o]);
    MatchRecord m;
    m.league_id = config.league_id;
    m.season_id = config.season_id;
    m.round = f.round;
    m.home_team = teams[f.home];
    m.away_team = teams[f.away];
    m.home_points_raw = hs;
    m.away_points_raw = as;
    records.push_back(std::move(m));
  }
  return finish(config, std::move(records));
}

BtSimulation simulate_bt(const SynthConfig& config) {
  std::vector<std::string> teams;
  const auto fixtures = schedule_for(config, teams);
  const std::size_t n = teams.size();
  if (config.features.size() != n) {
    throw Error(ErrorCode::kInvalidArgument,
                "need one feature row per team (" + std::to_string(n) + ")");
  }
  if (config.eps_precision <= 0 || config.mean_total_points <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "eps_precision and mean_total_points must be positive");
  }
  std::vector<double> alpha(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (config.features[i].size() != config.w_true.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "feature row width differs from w_true");
    }
    double eta = 0.0;
    for (std::size_t j = 0; j < config.w_true.size(); ++j) {
      eta += config.w_true[j] * config.features[i][j];
    }
    alpha[i] = std::exp(eta);
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0,
                                         1.0 / std::sqrt(config.eps_precision));
  std::poisson_distribution<int> total_dist(config.mean_total_points);
  const bool ties = config.scheme.allows_ties();
  const int fixed_total = static_cast<int>(std::lround(config.mean_total_points));

  BtSimulation sim;
  std::vector<MatchRecord> records;
  std::map<std::tuple<int, std::string, std::string>, double> eps_by_game;
  for (const Fixture& f : fixtures) {
    const double pi = alpha[f.home] / (alpha[f.home] + alpha[f.away]);
    int total = 0;
    int y = 0;
    double eps = 0.0;
    for (;;) {
      total = config.sample_total_points ? total_dist(rng) : fixed_total;
      eps = noise(rng);
      double lambda = total * pi + eps;
      if (lambda < kRateFloor) {
        lambda = kRateFloor;
        ++sim.floor_hits;
      }
      std::poisson_distribution<int> score(lambda);
      do {
        y = score(rng);
      } while (y > total);
      if (ties || 2 * y != total) break;
    }
    MatchRecord m;
    m.league_id = config.league_id;
    m.season_id = config.season_id;
    m.round = f.round;
    m.home_team = teams[f.home];
    m.away_team = teams[f.away];
    m.home_points_raw = y;
    m.away_points_raw = total - y;
    eps_by_game[{m.round, m.home_team, m.away_team}] = eps;
    records.push_back(std::move(m));
  }
  sim.season = finish(config, std::move(records));
  sim.alpha.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sim.alpha[*sim.season.team_index(teams[i])] = alpha[i];
  }
  for (const auto& m : sim.season.matches) {
    sim.eps.push_back(eps_by_game.at({m.round, m.home_team, m.away_team}));
  }
  return sim;
}

SeasonView simulate(const SynthConfig& config) {
  if (config.mode == SynthMode::kBradleyTerry) return simulate_bt(config).season;
  return simulate_random(config);
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    const std::string mode = j.value("mode", std::string("random"));
    if (mode == "random") {
      c.mode = SynthMode::kRandom;
    } else if (mode == "bt") {
      c.mode = SynthMode::kBradleyTerry;
    } else if (mode == "planted") {
      c.mode = SynthMode::kPlanted;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + mode + "'");
    }
    c.n_teams = j.value("n_teams", c.n_teams);
    if (j.contains("scheme")) {
      const auto& s = j.at("scheme");
      c.scheme = s.is_string() ? ScoringScheme::by_name(s.get<std::string>())
                               : ScoringScheme::from_json(s);
    }
    c.league_id = j.value("league", c.league_id);
    c.season_id = j.value("season", c.season_id);
    c.seed = j.value("seed", c.seed);
    c.games_per_team = j.value("games_per_team", c.games_per_team);
    c.p_home = j.value("p_home", c.p_home);
    c.p_tie = j.value("p_tie", c.p_tie);
    c.p_away = j.value("p_away", c.p_away);
    c.n_planted = j.value("n_planted", c.n_planted);
    c.planted_win_prob = j.value("planted_win_prob", c.planted_win_prob);
    if (j.contains("w_true")) c.w_true = j.at("w_true").get<std::vector<double>>();
    if (j.contains("features")) {
      c.features = j.at("features").get<std::vector<std::vector<double>>>();
    }
    c.eps_precision = j.value("eps_precision", c.eps_precision);
    c.mean_total_points = j.value("mean_total_points", c.mean_total_points);
    c.sample_total_points = j.value("sample_total_points", c.sample_total_points);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed synth config: ") + e.what());
  }
  if (c.n_teams < 4 && c.schedule == ScheduleKind::kDoubleRoundRobin) {
    throw Error(ErrorCode::kInvalidArgument, "n_teams must be >= 4");
  }
  return c;
}

}  // namespace luckskill
