#include <cmath>
#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "luckskill/baseline.hpp"
#include "luckskill/btpoisson.hpp"
#include "luckskill/error.hpp"
#include "luckskill/skillcoef.hpp"
#include "luckskill/synth.hpp"

using namespace luckskill;
using Catch::Approx;

namespace {

struct Summary {
  double mean = 0.0;
  double se = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

SynthConfig bt_config(std::size_t n_teams, std::vector<double> w,
                      std::vector<std::vector<double>> x, std::uint64_t seed) {
  SynthConfig c;
  c.mode = SynthMode::kBradleyTerry;
  c.scheme = ScoringScheme::basketball();
  c.n_teams = n_teams;
  c.w_true = std::move(w);
  c.features = std::move(x);
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("team names sort numerically") {
  const auto names = synth_team_names(12);
  CHECK(names.front() == "T01");
  CHECK(names.back() == "T12");
  CHECK(std::is_sorted(names.begin(), names.end()));
  CHECK(synth_team_names(100).front() == "T001");
}

TEST_CASE("circle-method schedule") {
  for (std::size_t n : {2u, 5u, 8u, 13u}) {
    const auto fixtures = double_round_robin(n);
    CHECK(fixtures.size() == n * (n - 1));
    std::map<std::pair<std::size_t, std::size_t>, int> seen;
    std::map<std::pair<int, std::size_t>, int> per_round;
    for (const auto& f : fixtures) {
      CHECK(f.home != f.away);
      ++seen[{f.home, f.away}];
      ++per_round[{f.round, f.home}];
      ++per_round[{f.round, f.away}];
    }
    CHECK(seen.size() == n * (n - 1));
    for (const auto& [key, count] : per_round) CHECK(count == 1);
  }
  CHECK_THROWS_AS(double_round_robin(1), Error);
  CHECK_THROWS_AS(double_round_robin(5, 10), Error);
  CHECK_THROWS_AS(double_round_robin(6, 11), Error);
}

TEST_CASE("thirty teams playing 82 games") {
  SynthConfig c;
  c.n_teams = 30;
  c.games_per_team = 82;
  c.scheme = ScoringScheme::basketball();
  c.p_home = 0.6;
  c.p_tie = 0.0;
  c.p_away = 0.4;
  const auto s = simulate_random(c);
  CHECK(s.games_per_team == 82);
  CHECK(s.k() == 41);
  CHECK(s.regular);
  CHECK(s.matches.size() == 30u * 41u);
  std::map<std::string, int> home;
  std::map<std::string, int> away;
  for (const auto& m : s.matches) {
    ++home[m.home_team];
    ++away[m.away_team];
  }
  for (const auto& t : s.teams) {
    CHECK(home[t] == 41);
    CHECK(away[t] == 41);
  }
}

TEST_CASE("certain home wins") {
  SynthConfig c;
  c.n_teams = 10;
  c.p_home = 1.0;
  c.p_tie = 0.0;
  c.p_away = 0.0;
  const auto s = simulate_random(c);
  for (const auto& m : s.matches) CHECK(m.home_points_raw > m.away_points_raw);
  const auto table = final_table(s, ScoringScheme::soccer());
  for (double p : table.points) CHECK(p == 27);
}

TEST_CASE("simulation is deterministic and regular") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig c;
    c.n_teams = 6 + seed;
    c.seed = seed;
    const auto a = simulate_random(c);
    CHECK(a == simulate_random(c));
    CHECK(a.regular);
    CHECK(a.pair_balanced);
    CHECK(a.n_teams() == c.n_teams);
  }
  SynthConfig c;
  c.seed = 1;
  const auto a = simulate_random(c);
  c.seed = 2;
  CHECK_FALSE(a == simulate_random(c));
}

TEST_CASE("replaying an observed schedule") {
  const auto observed = testing::four_team_season();
  SynthConfig c;
  c.schedule = ScheduleKind::kReplay;
  c.replay = observed;
  c.league_id = "L";
  c.season_id = "S";
  const auto s = simulate_random(c);
  REQUIRE(s.matches.size() == observed.matches.size());
  for (std::size_t i = 0; i < s.matches.size(); ++i) {
    CHECK(s.matches[i].home_team == observed.matches[i].home_team);
    CHECK(s.matches[i].away_team == observed.matches[i].away_team);
    CHECK(s.matches[i].round == observed.matches[i].round);
  }
  c.replay.reset();
  CHECK_THROWS_AS(simulate_random(c), Error);
}

TEST_CASE("outcome frequencies and final-score variance match the baseline") {
  const auto soccer = ScoringScheme::soccer();
  const auto probs = ContextProbs::from_home_tie_away(soccer, 0.45, 0.3, 0.25);
  const auto m = moments(probs, soccer, 15);
  std::vector<double> home_share;
  std::vector<double> first_team;
  std::vector<double> first_team_sq;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    SynthConfig c;
    c.n_teams = 16;
    c.p_home = 0.45;
    c.p_tie = 0.3;
    c.p_away = 0.25;
    c.seed = seed;
    const auto s = simulate_random(c);
    std::size_t h = 0;
    for (const auto& x : s.matches) h += x.home_points_raw > x.away_points_raw;
    home_share.push_back(static_cast<double>(h) / static_cast<double>(s.matches.size()));
    const double pts = final_table(s, soccer).points[0];
    first_team.push_back(pts);
  }
  const auto hs = summarize(home_share);
  CHECK(std::abs(hs.mean - 0.45) <= 4 * hs.se);
  const auto ft = summarize(first_team);
  CHECK(std::abs(ft.mean - m.mu_2k) <= 4 * ft.se);
  std::vector<double> dev2;
  for (double p : first_team) dev2.push_back((p - m.mu_2k) * (p - m.mu_2k));
  const auto var = summarize(dev2);
  CHECK(std::abs(var.mean - m.var_2k) <= 4 * var.se);
}

TEST_CASE("planted teams dominate") {
  SynthConfig c;
  c.mode = SynthMode::kPlanted;
  c.n_teams = 12;
  c.n_planted = 2;
  c.seed = 3;
  std::size_t wins = 0;
  std::size_t games = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    c.seed = seed;
    const auto s = simulate(c);
    for (const auto& m : s.matches) {
      const bool hp = m.home_team == "T01" || m.home_team == "T02";
      const bool ap = m.away_team == "T01" || m.away_team == "T02";
      if (hp == ap) continue;
      ++games;
      wins += hp ? m.home_points_raw > m.away_points_raw
                 : m.away_points_raw > m.home_points_raw;
    }
  }
  const double share = static_cast<double>(wins) / static_cast<double>(games);
  const double se = std::sqrt(0.9 * 0.1 / static_cast<double>(games));
  CHECK(std::abs(share - 0.9) <= 4 * se);
  c.n_planted = 13;
  CHECK_THROWS_AS(simulate(c), Error);
}

TEST_CASE("zero weights make home and away symmetric") {
  std::vector<double> share;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto c = bt_config(10, {0.0, 0.0}, std::vector<std::vector<double>>(10, {1.0, -2.0}),
                       seed);
    const auto sim = simulate_bt(c);
    for (const auto& m : sim.season.matches) {
      share.push_back(static_cast<double>(m.home_points_raw) / m.total_points());
    }
    for (double a : sim.alpha) CHECK(a == 1.0);
  }
  const auto s = summarize(share);
  CHECK(std::abs(s.mean - 0.5) <= 4 * s.se);
}

TEST_CASE("a nine-to-one skill ratio takes nine tenths of the points") {
  // Without the Y <= N cap the strong team's mean share is exactly 0.9.
  auto c = bt_config(2, {1.0}, {{std::log(9.0)}, {0.0}}, 8);
  c.games_per_team = 1000;
  c.mean_total_points = 2000;
  const auto sim = simulate_bt(c);
  CHECK(sim.alpha[0] == Approx(9.0).epsilon(1e-14));
  std::vector<double> share;
  for (const auto& m : sim.season.matches) {
    const double strong =
        m.home_team == "T01" ? m.home_points_raw : m.away_points_raw;
    share.push_back(strong / m.total_points());
    CHECK(m.total_points() == 2000);
  }
  const auto s = summarize(share);
  CHECK(std::abs(s.mean - 0.9) <= 4 * s.se);
}

TEST_CASE("the score cap lowers the strong team's share at small totals") {
  auto c = bt_config(2, {1.0}, {{std::log(9.0)}, {0.0}}, 8);
  c.games_per_team = 4000;
  const auto sim = simulate_bt(c);
  std::vector<double> share;
  for (const auto& m : sim.season.matches) {
    const double strong =
        m.home_team == "T01" ? m.home_points_raw : m.away_points_raw;
    share.push_back(strong / m.total_points());
  }
  // Mean of Poisson(max(N pi + eps, floor)) conditioned on Y <= N, integrated
  // over eps ~ N(0, 25) on a grid.
  const int n = 200;
  const auto capped_mean = [&](double pi) {
    double num = 0.0;
    double den = 0.0;
    for (double e = -40.0; e <= 40.0; e += 0.01) {
      const double weight = std::exp(-e * e / 50.0);
      const double lambda = std::max(n * pi + e, kRateFloor);
      double mass = 0.0;
      double first = 0.0;
      for (int y = 0; y <= n; ++y) {
        const double p = std::exp(y * std::log(lambda) - lambda - std::lgamma(y + 1.0));
        mass += p;
        first += y * p;
      }
      num += weight * first / mass;
      den += weight;
    }
    return num / den;
  };
  const double expected = 0.5 * (capped_mean(0.9) / n) + 0.5 * (1.0 - capped_mean(0.1) / n);
  const auto s = summarize(share);
  CHECK(expected < 0.9);
  CHECK(std::abs(s.mean - expected) <= 4 * s.se);
}

TEST_CASE("tied scores are redrawn when the scheme has no ties") {
  std::size_t matches = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = bt_config(12, {0.0}, std::vector<std::vector<double>>(12, {0.0}), seed);
    c.mean_total_points = 20;
    const auto sim = simulate_bt(c);
    for (const auto& m : sim.season.matches) {
      CHECK(m.home_points_raw != m.away_points_raw);
      ++matches;
    }
    CHECK(sim.eps.size() == sim.season.matches.size());
  }
  CHECK(matches == 20u * 132u);
}

TEST_CASE("sampled totals vary") {
  auto c = bt_config(8, {0.2}, std::vector<std::vector<double>>(8, {0.5}), 4);
  c.sample_total_points = true;
  const auto sim = simulate_bt(c);
  std::set<int> totals;
  for (const auto& m : sim.season.matches) totals.insert(m.total_points());
  CHECK(totals.size() > 5);
  CHECK(sim.season == simulate_bt(c).season);
}

TEST_CASE("bad Bradley-Terry configurations") {
  auto c = bt_config(4, {0.2}, std::vector<std::vector<double>>(3, {0.5}), 1);
  CHECK_THROWS_AS(simulate_bt(c), Error);
  c = bt_config(4, {0.2}, std::vector<std::vector<double>>(4, {0.5, 1.0}), 1);
  CHECK_THROWS_AS(simulate_bt(c), Error);
  c = bt_config(4, {0.2}, std::vector<std::vector<double>>(4, {0.5}), 1);
  c.eps_precision = 0.0;
  CHECK_THROWS_AS(simulate_bt(c), Error);
}

TEST_CASE("configuration from JSON") {
  const auto c = SynthConfig::from_json(nlohmann::json::parse(R"({
    "mode": "planted", "n_teams": 14, "n_planted": 3, "scheme": "handball",
    "p_home": 0.6, "p_tie": 0.1, "p_away": 0.3, "seed": 9
  })"));
  CHECK(c.mode == SynthMode::kPlanted);
  CHECK(c.n_teams == 14);
  CHECK(c.n_planted == 3);
  CHECK(c.scheme.name() == "handball");
  CHECK(c.p_tie == 0.1);
  CHECK(c.seed == 9);
  CHECK_THROWS_AS(SynthConfig::from_json(nlohmann::json::parse(R"({"mode": "x"})")),
                  Error);
}
