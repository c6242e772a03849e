#include "luckskill/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "luckskill/error.hpp"
#include "luckskill/table.hpp"

namespace luckskill {

bool operator==(const MatchRecord& a, const MatchRecord& b) {
  return std::tie(a.league_id, a.season_id, a.round, a.home_team, a.away_team,
                  a.home_points_raw, a.away_points_raw) ==
         std::tie(b.league_id, b.season_id, b.round, b.home_team, b.away_team,
                  b.home_points_raw, b.away_points_raw);
}

namespace {

std::string at_line(std::size_t line) {
  return "line " + std::to_string(line);
}

std::optional<long long> parse_integer(const std::string& text) {
  long long value = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end || begin == end) {
    return std::nullopt;
  }
  return value;
}

std::optional<double> parse_real(const std::string& text) {
  double value = 0;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() ||
      text.empty()) {
    return std::nullopt;
  }
  return value;
}

std::size_t require_column(const DelimitedTable& table,
                           const std::string& name) {
  const auto idx = table.column(name);
  if (!idx) {
    throw Error(ErrorCode::kMissingColumn, "column '" + name + "' not found");
  }
  return *idx;
}

const std::string& field(const DelimitedTable& table, std::size_t row,
                         std::size_t col) {
  if (col >= table.rows[row].size()) {
    throw Error(ErrorCode::kMissingColumn,
                at_line(table.line_numbers[row]) + ": row has only " +
                    std::to_string(table.rows[row].size()) + " fields");
  }
  return table.rows[row][col];
}

auto match_key(const MatchRecord& m) {
  return std::tie(m.round, m.home_team, m.away_team, m.home_points_raw,
                  m.away_points_raw);
}

}  // namespace

ColumnSchema ColumnSchema::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "schema '" + path.string() + "': " + e.what());
  }
  ColumnSchema schema;
  auto take = [&](const char* key, std::string& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::string>();
  };
  take("league", schema.league);
  take("season", schema.season);
  take("round", schema.round);
  take("home", schema.home);
  take("away", schema.away);
  take("home_score", schema.home_score);
  take("away_score", schema.away_score);
  if (j.contains("delimiter")) {
    const auto d = j.at("delimiter").get<std::string>();
    if (d.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "delimiter must be a single character");
    }
    schema.delimiter = d[0];
  }
  return schema;
}

std::vector<MatchRecord> load_matches(std::istream& in,
                                      const ColumnSchema& schema) {
  const DelimitedTable table = read_delimited(in, schema.delimiter);
  const std::size_t c_league = require_column(table, schema.league);
  const std::size_t c_season = require_column(table, schema.season);
  const std::size_t c_home = require_column(table, schema.home);
  const std::size_t c_away = require_column(table, schema.away);
  const std::size_t c_hs = require_column(table, schema.home_score);
  const std::size_t c_as = require_column(table, schema.away_score);
  const auto c_round = table.column(schema.round);

  std::vector<MatchRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = table.line_numbers[r];
    MatchRecord m;
    m.source_line = line;
    m.league_id = field(table, r, c_league);
    m.season_id = field(table, r, c_season);
    m.home_team = field(table, r, c_home);
    m.away_team = field(table, r, c_away);
    auto score = [&](std::size_t col, const char* which) {
      const auto v = parse_integer(field(table, r, col));
      if (!v || *v < 0) {
        throw Error(ErrorCode::kNonIntegerScore,
                    at_line(line) + ": " + which + " score '" +
                        field(table, r, col) +
                        "' is not a non-negative integer");
      }
      return static_cast<int>(*v);
    };
    m.home_points_raw = score(c_hs, "home");
    m.away_points_raw = score(c_as, "away");
    if (c_round) {
      const auto v = parse_integer(field(table, r, *c_round));
      if (!v || *v < 1) {
        throw Error(ErrorCode::kInvalidArgument,
                    at_line(line) + ": round must be an integer >= 1");
      }
      m.round = static_cast<int>(*v);
    }
    if (m.home_team == m.away_team) {
      throw Error(ErrorCode::kSelfMatch,
                  at_line(line) + ": team '" + m.home_team + "' plays itself");
    }
    records.push_back(std::move(m));
  }
  return records;
}

std::vector<MatchRecord> load_matches(const std::filesystem::path& path,
                                      const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  try {
    return load_matches(in, schema);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_matches(std::ostream& out, const std::vector<MatchRecord>& matches,
                   char delimiter) {
  write_delimited_row(out,
                      {"league", "season", "round", "home", "away",
                       "home_score", "away_score"},
                      delimiter);
  for (const auto& m : matches) {
    write_delimited_row(
        out,
        {m.league_id, m.season_id, std::to_string(m.round), m.home_team,
         m.away_team, std::to_string(m.home_points_raw),
         std::to_string(m.away_points_raw)},
        delimiter);
  }
}

std::optional<std::size_t> SeasonView::team_index(
    const std::string& team) const {
  const auto it = std::lower_bound(teams.begin(), teams.end(), team);
  if (it == teams.end() || *it != team) return std::nullopt;
  return static_cast<std::size_t>(it - teams.begin());
}

namespace {

// Fills teams, regularity flags and games_per_team from season.matches.
// Returns a description of the first irregularity, empty when regular.
std::string index_season(SeasonView& season) {
  std::set<std::string> names;
  for (const auto& m : season.matches) {
    names.insert(m.home_team);
    names.insert(m.away_team);
  }
  season.teams.assign(names.begin(), names.end());
  std::sort(season.matches.begin(), season.matches.end(),
            [](const MatchRecord& a, const MatchRecord& b) {
              return match_key(a) < match_key(b);
            });

  const std::size_t n = season.teams.size();
  std::vector<int> home(n, 0);
  std::vector<int> away(n, 0);
  std::map<std::pair<std::size_t, std::size_t>, int> oriented;
  for (const auto& m : season.matches) {
    const std::size_t h = *season.team_index(m.home_team);
    const std::size_t a = *season.team_index(m.away_team);
    ++home[h];
    ++away[a];
    ++oriented[{h, a}];
  }

  std::string problem;
  int max_games = 0;
  for (std::size_t i = 0; i < n; ++i) {
    max_games = std::max(max_games, home[i] + away[i]);
  }
  for (std::size_t i = 0; i < n && problem.empty(); ++i) {
    if (home[i] + away[i] != max_games) {
      problem = "team '" + season.teams[i] + "' plays " +
                std::to_string(home[i] + away[i]) + " games, others up to " +
                std::to_string(max_games);
    } else if (home[i] != away[i]) {
      problem = "team '" + season.teams[i] + "' has " +
                std::to_string(home[i]) + " home and " +
                std::to_string(away[i]) + " away games";
    }
  }
  season.games_per_team = max_games;
  season.regular = problem.empty();

  season.pair_balanced = true;
  for (const auto& [pair, count] : oriented) {
    const auto rev = oriented.find({pair.second, pair.first});
    if (rev == oriented.end() || rev->second != count) {
      season.pair_balanced = false;
      break;
    }
  }
  return problem;
}

}  // namespace

SeasonView build_season(const std::vector<MatchRecord>& records,
                        const std::string& league_id,
                        const std::string& season_id,
                        const BuildOptions& options) {
  SeasonView season;
  season.league_id = league_id;
  season.season_id = season_id;
  for (const auto& m : records) {
    if (m.league_id != league_id || m.season_id != season_id) {
      throw Error(ErrorCode::kInvalidArgument,
                  "record for " + m.league_id + "/" + m.season_id +
                      " passed to season " + league_id + "/" + season_id);
    }
  }
  if (records.empty()) {
    throw Error(ErrorCode::kEmptySeason,
                league_id + "/" + season_id + " has no matches");
  }
  season.matches = records;
  const std::string problem = index_season(season);
  if (!problem.empty()) {
    if (!options.allow_irregular) {
      throw Error(ErrorCode::kIrregularSchedule,
                  league_id + "/" + season_id + ": " + problem);
    }
    season.warnings.push_back("irregular schedule: " + problem);
  }
  if (!season.pair_balanced) {
    season.warnings.push_back(
        "pairings are not venue-balanced (some pairs meet more often in one "
        "orientation)");
  }
  if (season.teams.size() < options.min_teams) {
    throw Error(ErrorCode::kTooFewTeams,
                league_id + "/" + season_id + " has " +
                    std::to_string(season.teams.size()) + " teams, need " +
                    std::to_string(options.min_teams));
  }
  return season;
}

std::map<std::pair<std::string, std::string>, std::vector<MatchRecord>>
split_by_season(const std::vector<MatchRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<MatchRecord>> out;
  for (const auto& m : records) out[{m.league_id, m.season_id}].push_back(m);
  return out;
}

SeasonView without_teams(const SeasonView& season,
                         const std::vector<std::string>& excluded) {
  SeasonView out;
  out.league_id = season.league_id;
  out.season_id = season.season_id;
  const std::set<std::string> drop(excluded.begin(), excluded.end());
  for (const auto& m : season.matches) {
    if (drop.count(m.home_team) || drop.count(m.away_team)) continue;
    out.matches.push_back(m);
  }
  const std::string problem = index_season(out);
  if (!problem.empty()) out.warnings.push_back("irregular schedule: " + problem);
  return out;
}

std::vector<RosterRecord> load_rosters(std::istream& in, char delimiter) {
  const DelimitedTable table = read_delimited(in, delimiter);
  const std::size_t c_season = require_column(table, "season");
  const std::size_t c_team = require_column(table, "team");
  const std::size_t c_player = require_column(table, "player");
  const std::size_t c_salary = require_column(table, "salary");
  const std::size_t c_per = require_column(table, "per");
  const std::size_t c_first = require_column(table, "first_season");

  std::vector<RosterRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = at_line(table.line_numbers[r]);
    RosterRecord rec;
    const auto season = parse_integer(field(table, r, c_season));
    const auto first = parse_integer(field(table, r, c_first));
    const auto salary = parse_real(field(table, r, c_salary));
    const auto per = parse_real(field(table, r, c_per));
    if (!season || !first) {
      throw Error(ErrorCode::kInvalidArgument,
                  where + ": season and first_season must be integer years");
    }
    if (!salary || *salary < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  where + ": salary must be a non-negative number");
    }
    if (!per) {
      throw Error(ErrorCode::kInvalidArgument, where + ": per must be a number");
    }
    rec.season = static_cast<int>(*season);
    rec.first_season = static_cast<int>(*first);
    if (rec.first_season > rec.season) {
      throw Error(ErrorCode::kInvalidArgument,
                  where + ": first_season after season");
    }
    rec.team = field(table, r, c_team);
    rec.player = field(table, r, c_player);
    rec.salary = *salary;
    rec.per = *per;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RosterRecord> load_rosters(const std::filesystem::path& path,
                                       char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return load_rosters(in, delimiter);
}

}  // namespace luckskill
