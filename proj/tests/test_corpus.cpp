#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "luckskill/corpus.hpp"
#include "luckskill/error.hpp"
#include "luckskill/synth.hpp"

using namespace luckskill;
using Catch::Matchers::ContainsSubstring;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load_matches reads a six-row file") {
  std::istringstream in(
      "league,season,round,home,away,home_score,away_score\n"
      "L,S,1,A,B,2,1\n"
      "L,S,1,C,D,0,0\n"
      "L,S,2,A,C,1,3\n"
      "L,S,2,B,D,4,4\n"
      "L,S,3,A,D,0,1\n"
      "L,S,3,B,C,2,2\n");
  const auto records = load_matches(in);
  REQUIRE(records.size() == 6);
  CHECK(records[2].home_team == "A");
  CHECK(records[2].away_team == "C");
  CHECK(records[2].home_points_raw == 1);
  CHECK(records[2].away_points_raw == 3);
  CHECK(records[2].round == 2);
  CHECK(records[2].source_line == 4);
  CHECK(records[3].total_points() == 8);
}

TEST_CASE("self match names the offending line") {
  std::istringstream in(
      "league,season,home,away,home_score,away_score\n"
      "L,S,A,B,1,0\n"
      "L,S,C,C,2,2\n");
  const auto msg = message_of([&] { load_matches(in); });
  CHECK_THAT(msg, ContainsSubstring("SelfMatch"));
  CHECK_THAT(msg, ContainsSubstring("line 3"));
}

TEST_CASE("missing column and bad scores") {
  {
    std::istringstream in("league,season,home,away,home_score\nL,S,A,B,1\n");
    CHECK(code_of([&] { load_matches(in); }) == ErrorCode::kMissingColumn);
  }
  {
    std::istringstream in(
        "league,season,home,away,home_score,away_score\nL,S,A,B,1.5,0\n");
    CHECK(code_of([&] { load_matches(in); }) == ErrorCode::kNonIntegerScore);
  }
  {
    std::istringstream in(
        "league,season,home,away,home_score,away_score\nL,S,A,B,-1,0\n");
    CHECK(code_of([&] { load_matches(in); }) == ErrorCode::kNonIntegerScore);
  }
  {
    std::istringstream in(
        "league,season,home,away,home_score,away_score\nL,S,A,B,x,0\n");
    const auto msg = message_of([&] { load_matches(in); });
    CHECK_THAT(msg, ContainsSubstring("line 2"));
  }
}

TEST_CASE("round column is optional and schemas remap names") {
  std::istringstream in("Div;Yr;H;A;HG;AG\nX;2020;A;B;1;0\n");
  ColumnSchema schema;
  schema.league = "Div";
  schema.season = "Yr";
  schema.home = "H";
  schema.away = "A";
  schema.home_score = "HG";
  schema.away_score = "AG";
  schema.delimiter = ';';
  const auto records = load_matches(in, schema);
  REQUIRE(records.size() == 1);
  CHECK(records[0].league_id == "X");
  CHECK(records[0].season_id == "2020");
  CHECK(records[0].round == 1);
}

TEST_CASE("schema sidecar file") {
  const auto dir = std::filesystem::temp_directory_path() / "luckskill_schema";
  std::filesystem::create_directories(dir);
  const auto path = dir / "schema.json";
  std::ofstream(path) << R"({"home": "HomeTeam", "away": "AwayTeam", "delimiter": ";"})";
  const auto schema = ColumnSchema::from_json_file(path);
  CHECK(schema.home == "HomeTeam");
  CHECK(schema.away == "AwayTeam");
  CHECK(schema.delimiter == ';');
  CHECK(schema.league == "league");
}

TEST_CASE("file errors carry the path") {
  const auto dir = std::filesystem::temp_directory_path() / "luckskill_corpus";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bad.csv";
  std::ofstream(path) << "league,season,home,away,home_score,away_score\nL,S,A,A,1,0\n";
  const auto msg = message_of([&] { load_matches(path); });
  CHECK_THAT(msg, ContainsSubstring(path.string()));
  CHECK_THAT(msg, ContainsSubstring("line 2"));
  CHECK(code_of([&] { load_matches(dir / "absent.csv"); }) == ErrorCode::kIo);
}

TEST_CASE("four-team double round robin") {
  const SeasonView s = testing::four_team_season();
  CHECK(s.n_teams() == 4);
  CHECK(s.matches.size() == 12);
  CHECK(s.games_per_team == 6);
  CHECK(s.k() == 3);
  CHECK(s.regular);
  CHECK(s.pair_balanced);
  CHECK(s.teams == std::vector<std::string>{"A", "B", "C", "D"});
}

TEST_CASE("irregular schedules") {
  auto records = testing::four_team_records();
  records.pop_back();
  BuildOptions options;
  options.min_teams = 4;
  CHECK(code_of([&] { build_season(records, "L", "S", options); }) ==
        ErrorCode::kIrregularSchedule);
  options.allow_irregular = true;
  const SeasonView s = build_season(records, "L", "S", options);
  CHECK_FALSE(s.regular);
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("too few teams and empty seasons") {
  CHECK(code_of([] { build_season(testing::four_team_records(), "L", "S"); }) ==
        ErrorCode::kTooFewTeams);
  CHECK(code_of([] { build_season({}, "L", "S"); }) == ErrorCode::kEmptySeason);
  auto records = testing::four_team_records();
  records[0].season_id = "other";
  BuildOptions options;
  options.min_teams = 4;
  CHECK(code_of([&] { build_season(records, "L", "S", options); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("twenty-team season has n(n-1) matches") {
  SynthConfig c;
  c.n_teams = 20;
  c.seed = 5;
  const SeasonView s = simulate_random(c);
  CHECK(s.matches.size() == 20u * 19u);
  CHECK(s.games_per_team == 38);
  CHECK(s.regular);
}

TEST_CASE("home and away appearances both equal the match count") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig c;
    c.n_teams = 8 + 2 * seed;
    c.seed = seed;
    const SeasonView s = simulate_random(c);
    std::size_t home = 0;
    std::size_t away = 0;
    for (const auto& t : s.teams) {
      for (const auto& m : s.matches) {
        home += m.home_team == t;
        away += m.away_team == t;
      }
    }
    CHECK(home == s.matches.size());
    CHECK(away == s.matches.size());
  }
}

TEST_CASE("build_season ignores input row order") {
  SynthConfig c;
  c.n_teams = 10;
  c.seed = 17;
  const SeasonView base = simulate_random(c);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto shuffled = base.matches;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(build_season(shuffled, base.league_id, base.season_id) == base);
  }
}

TEST_CASE("round trip through the text format") {
  const auto records = testing::four_team_records();
  std::istringstream in(testing::to_csv(records));
  const auto back = load_matches(in);
  CHECK(back == records);
}

TEST_CASE("without_teams drops every match of the excluded teams") {
  const SeasonView s = testing::four_team_season();
  const SeasonView t = without_teams(s, {"A"});
  CHECK(t.teams == std::vector<std::string>{"B", "C", "D"});
  CHECK(t.matches.size() == 6);
  CHECK(t.games_per_team == 4);
  CHECK(t.regular);
}

TEST_CASE("split_by_season groups records") {
  auto records = testing::four_team_records();
  auto other = testing::four_team_records();
  for (auto& m : other) m.season_id = "T";
  records.insert(records.end(), other.begin(), other.end());
  const auto groups = split_by_season(records);
  REQUIRE(groups.size() == 2);
  CHECK(groups.at({"L", "S"}).size() == 12);
  CHECK(groups.at({"L", "T"}).size() == 12);
}

TEST_CASE("roster loading validates rows") {
  {
    std::istringstream in(
        "season,team,player,salary,per,first_season\n2016,A,p,1.5,10,2014\n");
    const auto rows = load_rosters(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].salary == 1.5);
    CHECK(rows[0].first_season == 2014);
  }
  {
    std::istringstream in(
        "season,team,player,salary,per,first_season\n2016,A,p,-1,10,2014\n");
    CHECK(code_of([&] { load_rosters(in); }) == ErrorCode::kInvalidArgument);
  }
  {
    std::istringstream in(
        "season,team,player,salary,per,first_season\n2016,A,p,1,10,2017\n");
    CHECK(code_of([&] { load_rosters(in); }) == ErrorCode::kInvalidArgument);
  }
  {
    std::istringstream in("season,team,player,salary,per\n2016,A,p,1,10\n");
    CHECK(code_of([&] { load_rosters(in); }) == ErrorCode::kMissingColumn);
  }
}
