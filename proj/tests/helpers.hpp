#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "luckskill/corpus.hpp"

namespace testing {

inline luckskill::MatchRecord match(const std::string& home,
                                    const std::string& away, int hs, int as,
                                    int round = 1) {
  luckskill::MatchRecord m;
  m.league_id = "L";
  m.season_id = "S";
  m.round = round;
  m.home_team = home;
  m.away_team = away;
  m.home_points_raw = hs;
  m.away_points_raw = as;
  return m;
}

// Double round robin over four teams; scores are home-away goals.
//   A: 3 home wins, 1 away win, 1 away draw, 1 away loss
inline std::vector<luckskill::MatchRecord> four_team_records() {
  return {
      match("A", "B", 2, 0, 1), match("C", "D", 1, 1, 1),
      match("A", "C", 1, 0, 2), match("B", "D", 0, 2, 2),
      match("A", "D", 3, 1, 3), match("B", "C", 2, 2, 3),
      match("B", "A", 1, 1, 4), match("D", "C", 0, 1, 4),
      match("C", "A", 2, 1, 5), match("D", "B", 1, 0, 5),
      match("D", "A", 0, 2, 6), match("C", "B", 3, 0, 6),
  };
}

inline luckskill::SeasonView four_team_season() {
  luckskill::BuildOptions options;
  options.min_teams = 4;
  return luckskill::build_season(four_team_records(), "L", "S", options);
}

inline std::string to_csv(const std::vector<luckskill::MatchRecord>& records) {
  std::ostringstream out;
  luckskill::write_matches(out, records);
  return out.str();
}

}  // namespace testing
