#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "luckskill/baseline.hpp"
#include "luckskill/corpus.hpp"

namespace luckskill {

enum class SynthMode {
  // Every match drawn i.i.d. from the context probabilities.
  kRandom,
  // Scores drawn from the Bradley-Terry-Poisson model with known weights.
  kBradleyTerry,
  // Random model plus a set of planted strong teams.
  kPlanted,
};

enum class ScheduleKind { kDoubleRoundRobin, kReplay };

struct SynthConfig {
  SynthMode mode = SynthMode::kRandom;
  std::size_t n_teams = 20;
  ScoringScheme scheme = ScoringScheme::soccer();
  std::string league_id = "SYN";
  std::string season_id = "1";
  std::uint64_t seed = 0;

  ScheduleKind schedule = ScheduleKind::kDoubleRoundRobin;
  // Games per team; 0 means a plain double round robin (2(n-1)). Larger even
  // values append extra home-and-away rounds (n_teams must then be even).
  int games_per_team = 0;
  // Schedule source for kReplay; scores are discarded.
  std::optional<SeasonView> replay;

  // kRandom and kPlanted: (P_h, P_t, P_a).
  double p_home = 0.5;
  double p_tie = 0.25;
  double p_away = 0.25;

  // kPlanted: the first n_planted teams beat everyone else with this
  // probability regardless of venue; the remainder splits evenly between a
  // tie (when the scheme has ties) and a loss.
  std::size_t n_planted = 0;
  double planted_win_prob = 0.9;

  // kBradleyTerry: log(alpha_i) = w . x_i.
  std::vector<double> w_true;
  // n_teams rows of feature values.
  std::vector<std::vector<double>> features;
  double eps_precision = 0.04;
  double mean_total_points = 200.0;
  // Draw N_k ~ Poisson(mean_total_points) instead of holding it fixed.
  bool sample_total_points = false;

  static SynthConfig from_json(const nlohmann::json& j);
};

// Team ids T01, T02, ... (zero padded so alphabetical order is numeric).
std::vector<std::string> synth_team_names(std::size_t n);

// Circle-method double round robin; every pair meets once in each venue.
// Returns (round, home index, away index) triples.
struct Fixture {
  int round = 1;
  std::size_t home = 0;
  std::size_t away = 0;
};
std::vector<Fixture> double_round_robin(std::size_t n_teams,
                                        int games_per_team = 0);

SeasonView simulate_random(const SynthConfig& config);

struct BtSimulation {
  SeasonView season;
  // Indexed like season.teams.
  std::vector<double> alpha;
  // Random effect per match, aligned with season.matches.
  std::vector<double> eps;
  std::size_t floor_hits = 0;
};

BtSimulation simulate_bt(const SynthConfig& config);

// Dispatches on config.mode (kBradleyTerry returns only the season).
SeasonView simulate(const SynthConfig& config);

}  // namespace luckskill
