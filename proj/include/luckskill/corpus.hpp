#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace luckskill {

// One game as played: raw scores are native score units (goals, points,
// sets), not league-table points.
struct MatchRecord {
  std::string league_id;
  std::string season_id;
  int round = 1;
  std::string home_team;
  std::string away_team;
  int home_points_raw = 0;
  int away_points_raw = 0;
  // Line in the source file, 0 when the record was built in memory.
  std::size_t source_line = 0;

  int total_points() const { return home_points_raw + away_points_raw; }
};

bool operator==(const MatchRecord& a, const MatchRecord& b);

// Maps the canonical column names onto the header names of a given file.
struct ColumnSchema {
  std::string league = "league";
  std::string season = "season";
  std::string round = "round";
  std::string home = "home";
  std::string away = "away";
  std::string home_score = "home_score";
  std::string away_score = "away_score";
  char delimiter = ',';

  // Reads a JSON sidecar such as {"home": "HomeTeam", "delimiter": ";"}.
  // Keys that are absent keep their defaults.
  static ColumnSchema from_json_file(const std::filesystem::path& path);
};

// Throws Error{kMissingColumn, kNonIntegerScore, kSelfMatch}; messages name
// the offending line. The round column is optional and defaults to 1.
std::vector<MatchRecord> load_matches(std::istream& in,
                                      const ColumnSchema& schema = {});
std::vector<MatchRecord> load_matches(const std::filesystem::path& path,
                                      const ColumnSchema& schema = {});

void write_matches(std::ostream& out, const std::vector<MatchRecord>& matches,
                   char delimiter = ',');

struct BuildOptions {
  // Leagues with fewer teams are rejected (the source corpus kept leagues
  // with more than seven teams).
  std::size_t min_teams = 8;
  // Downgrade IrregularSchedule to a warning; phi then carries a caveat.
  bool allow_irregular = false;
};

// Season-level view. Teams are sorted by id and matches are kept in a
// canonical order, so the view does not depend on input row order.
struct SeasonView {
  std::string league_id;
  std::string season_id;
  std::vector<std::string> teams;
  std::vector<MatchRecord> matches;
  // 2k for a regular season; the largest per-team count otherwise.
  int games_per_team = 0;
  // Every team plays the same number of games, half of them at home.
  bool regular = true;
  // Each unordered pair meets equally often in both venue orientations.
  bool pair_balanced = true;
  std::vector<std::string> warnings;

  std::size_t n_teams() const { return teams.size(); }
  int k() const { return games_per_team / 2; }
  std::optional<std::size_t> team_index(const std::string& team) const;

  friend bool operator==(const SeasonView&, const SeasonView&) = default;
};

SeasonView build_season(const std::vector<MatchRecord>& records,
                        const std::string& league_id,
                        const std::string& season_id,
                        const BuildOptions& options = {});

// Groups records by (league, season) preserving nothing but membership.
std::map<std::pair<std::string, std::string>, std::vector<MatchRecord>>
split_by_season(const std::vector<MatchRecord>& records);

// Season view over the subset of matches not involving any of `excluded`.
// Regularity is re-evaluated but never enforced.
SeasonView without_teams(const SeasonView& season,
                         const std::vector<std::string>& excluded);

struct RosterRecord {
  int season = 0;
  std::string team;
  std::string player;
  double salary = 0.0;
  double per = 0.0;
  int first_season = 0;
};

// Columns: season,team,player,salary,per,first_season.
std::vector<RosterRecord> load_rosters(std::istream& in, char delimiter = ',');
std::vector<RosterRecord> load_rosters(const std::filesystem::path& path,
                                       char delimiter = ',');

}  // namespace luckskill
