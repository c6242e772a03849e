#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "luckskill/btpoisson.hpp"
#include "luckskill/corpus.hpp"
#include "luckskill/skillcoef.hpp"

namespace luckskill {

nlohmann::json to_json(const PhiReport& report);
PhiReport phi_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RemovalTrace& trace);
RemovalTrace removal_trace_from_json(const nlohmann::json& j);

// Keeps every `thin`-th sample (w, tau, log posterior, deviance). eps samples
// are never written; their posterior means are.
nlohmann::json fit_to_json(const FitResult& fit, std::size_t thin = 10);
FitResult fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const UnderdogTable& table);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

struct BatchRow {
  std::string sport;
  std::string league_id;
  std::string season_id;
  std::size_t n_teams = 0;
  std::size_t n_matches = 0;
  double phi = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string classification;
  // Percentage of teams removed before the season looked random; empty when
  // removal was not run or ran out of teams.
  std::optional<double> pct_removed;
  std::uint64_t seed = 0;
  // Non-empty when this season failed; the numeric fields are then unset.
  std::string error;
};

struct SportSummary {
  std::string sport;
  std::size_t n_seasons = 0;
  std::size_t n_errors = 0;
  double phi_min = 0.0;
  double phi_q25 = 0.0;
  double phi_median = 0.0;
  double phi_q75 = 0.0;
  double phi_max = 0.0;
  double pct_random = 0.0;
  std::optional<double> mean_pct_removed;
};

struct BatchOptions {
  // Used for sports that are not a built-in scheme name.
  std::optional<ScoringScheme> scheme;
  ColumnSchema schema;
  BuildOptions build;
  MonteCarloOptions monte_carlo;
  bool run_removal = true;
  // Seasons processed concurrently; 0 = hardware concurrency.
  unsigned workers = 0;
};

struct BatchResult {
  std::vector<BatchRow> rows;
  std::vector<SportSummary> sports;
  std::vector<RemovalTrace> traces;
  std::vector<std::filesystem::path> inputs;
};

// Every *.csv file below `corpus`. A file in a subdirectory belongs to the
// sport named by its first path component; a top-level file uses its stem.
// Season i (in sorted (sport, league, season) order) is seeded with
// derive_seed(seed, i). Per-season failures are recorded in the row.
BatchResult batch_phi(const std::filesystem::path& corpus,
                      const BatchOptions& options);

std::vector<SportSummary> summarize(const std::vector<BatchRow>& rows);

void write_batch_csv(std::ostream& out, const std::vector<BatchRow>& rows);
void write_sport_summary_csv(std::ostream& out,
                             const std::vector<SportSummary>& sports);
void write_phi_by_season_csv(std::ostream& out,
                             const std::vector<PhiReport>& reports);
void write_cumulative_csv(std::ostream& out, const std::string& league_id,
                          const std::vector<CumulativePoint>& points);
void write_removal_csv(std::ostream& out,
                       const std::vector<RemovalTrace>& traces);
void write_underdog_csv(std::ostream& out, const UnderdogTable& table);

std::uint64_t fnv1a_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const Manifest& manifest);

}  // namespace luckskill
