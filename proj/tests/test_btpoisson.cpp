#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "catch_amalgamated.hpp"
#include "luckskill/btpoisson.hpp"
#include "luckskill/error.hpp"
#include "luckskill/parallel.hpp"
#include "luckskill/synth.hpp"

using namespace luckskill;
using Catch::Approx;

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

// Two teams, one covariate, one game in each venue.
ModelData two_game_data() {
  ModelData d;
  d.teams = {"A", "B"};
  d.covariates = {"x"};
  d.x = {{0.5}, {-0.3}};
  d.games = {{0, 1, 50, 30}, {1, 0, 40, 15}};
  return d;
}

PosteriorSample two_game_sample() {
  PosteriorSample s;
  s.w = {0.8};
  s.eps = {1.5, -2.0};
  s.tau_w = 2.0;
  s.tau_eps = 0.5;
  return s;
}

ModelSpec spec_for(std::size_t dim) {
  ModelSpec spec;
  for (std::size_t i = 0; i < dim; ++i) spec.features.push_back(static_cast<Feature>(i));
  return spec;
}

struct Synthetic {
  BtSimulation sim;
  ModelData data;
};

Synthetic synthetic(std::size_t n_teams, const std::vector<double>& w,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  SynthConfig c;
  c.mode = SynthMode::kBradleyTerry;
  c.scheme = ScoringScheme::basketball();
  c.n_teams = n_teams;
  c.w_true = w;
  c.features.assign(n_teams, std::vector<double>(w.size()));
  for (auto& row : c.features) {
    for (auto& v : row) v = n01(rng);
  }
  c.seed = seed;
  Synthetic s{simulate_bt(c), {}};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < w.size(); ++i) names.push_back("f" + std::to_string(i));
  s.data = make_model_data(s.sim.season, c.features, names);
  return s;
}

}  // namespace

TEST_CASE("Bradley-Terry probability") {
  CHECK(bt_probability(1.0, 1.0) == 0.5);
  CHECK(bt_probability(3.0, 1.0) == 0.75);
  CHECK(bt_probability(3.0 * 7.3, 1.0 * 7.3) == Approx(0.75).epsilon(1e-15));
  CHECK(bt_probability(2.0, 5.0) + bt_probability(5.0, 2.0) == Approx(1.0));
  CHECK(code_of([] { bt_probability(0.0, 1.0); }) == ErrorCode::kNonPositiveSkill);
  CHECK(code_of([] { bt_probability(1.0, -2.0); }) == ErrorCode::kNonPositiveSkill);
}

TEST_CASE("game rate and its floor") {
  CHECK(game_rate(0.5, 200, 0.0).lambda == 100.0);
  CHECK(game_rate(0.5, 200, -27.0).lambda == 73.0);
  const auto r = game_rate(0.5, 200, -150.0);
  CHECK(r.floored);
  CHECK(r.lambda == kRateFloor);
  CHECK_FALSE(game_rate(0.5, 200, 5.0).floored);
}

TEST_CASE("single-game likelihood peaks at the observed score") {
  ModelData d;
  d.teams = {"A", "B"};
  d.covariates = {"x"};
  d.x = {{0.0}, {0.0}};
  d.games = {{0, 1, 100, 57}};
  const std::vector<double> w = {0.3};
  // lambda = 50 + eps; the maximum of y log(lambda) - lambda is at lambda = y.
  const double at_y = log_likelihood(w, {7.0}, d);
  CHECK(at_y == Approx(57 * std::log(57.0) - 57).epsilon(1e-14));
  double prev = -std::numeric_limits<double>::infinity();
  bool rising = true;
  int turns = 0;
  for (double eps = -45.0; eps <= 60.0; eps += 0.25) {
    const double ll = log_likelihood(w, {eps}, d);
    CHECK(ll <= at_y + 1e-12);
    if (rising && ll < prev) {
      rising = false;
      ++turns;
    } else if (!rising && ll > prev) {
      ++turns;
    }
    prev = ll;
  }
  CHECK(turns == 1);
}

TEST_CASE("zero score contributes minus the rate") {
  ModelData d;
  d.teams = {"A", "B"};
  d.covariates = {"x"};
  d.x = {{0.0}, {0.0}};
  d.games = {{0, 1, 10, 0}};
  CHECK(log_likelihood({0.0}, {-1.0}, d) == Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("log posterior of two games matches a high-precision oracle") {
  // mpmath at 40 digits.
  const auto d = two_game_data();
  const auto s = two_game_sample();
  CHECK(log_likelihood(s.w, s.eps, d) ==
        Approx(96.98628668403474514689601).epsilon(1e-13));
  CHECK(deviance(s.w, s.eps, d) == Approx(-193.972573368069490293792).epsilon(1e-13));
  CHECK(log_posterior(s, d, spec_for(1)) ==
        Approx(94.4122130937547724921874).epsilon(1e-13));
}

TEST_CASE("zero weights give even odds") {
  auto d = two_game_data();
  auto s = two_game_sample();
  s.w = {0.0};
  s.eps = {0.0, 0.0};
  // lambda = 25 and 20.
  const double expected = 30 * std::log(25.0) - 25 + 15 * std::log(20.0) - 20;
  CHECK(log_likelihood(s.w, s.eps, d) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("non-finite log posterior names the term") {
  const auto d = two_game_data();
  auto s = two_game_sample();
  s.tau_w = 0.0;
  try {
    log_posterior(s, d, spec_for(1));
    FAIL("expected NonFiniteLogPost");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteLogPost);
    CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("tau_w"));
  }
}

TEST_CASE("model spec validation") {
  ModelSpec spec;
  CHECK(code_of([&] { spec.validate(); }) == ErrorCode::kInvalidArgument);
  spec.features = {Feature::AP};
  spec.validate();
  spec.c = 0.0;
  CHECK(code_of([&] { spec.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("analytic gradient agrees with central differences") {
  const auto syn = synthetic(12, {0.4, -0.3, 0.2}, 3);
  const auto& d = syn.data;
  const auto spec = spec_for(3);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 25; ++trial) {
    PosteriorSample s;
    s.w = {0.5 * n01(rng), 0.5 * n01(rng), 0.5 * n01(rng)};
    s.eps.resize(d.n_games());
    for (auto& e : s.eps) e = 3.0 * n01(rng);
    s.tau_w = 1.5;
    s.tau_eps = 0.1;
    const auto g = log_posterior_gradient_w(s, d);
    for (std::size_t j = 0; j < 3; ++j) {
      const double h = 1e-5;
      auto up = s;
      auto dn = s;
      up.w[j] += h;
      dn.w[j] -= h;
      const double fd =
          (log_posterior(up, d, spec) - log_posterior(dn, d, spec)) / (2 * h);
      CHECK(std::abs(g[j] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("acceptance ratio is antisymmetric and includes the log-scale Jacobian") {
  const auto d = two_game_data();
  const auto spec = spec_for(1);
  const auto from = two_game_sample();
  auto to = from;
  to.w = {0.6};
  to.eps = {1.0, -1.0};
  to.tau_w = 3.0;
  to.tau_eps = 0.25;
  const double r = mh_log_ratio(from, to, d, spec);
  CHECK(r == Approx(-mh_log_ratio(to, from, d, spec)).epsilon(1e-14));
  const double expected = log_posterior(to, d, spec) + std::log(3.0) + std::log(0.25) -
                          log_posterior(from, d, spec) - std::log(2.0) -
                          std::log(0.5);
  CHECK(r == Approx(expected).epsilon(1e-13));
  auto w_only = from;
  w_only.w = {1.1};
  CHECK(mh_log_ratio(from, w_only, d, spec) ==
        Approx(log_posterior(w_only, d, spec) - log_posterior(from, d, spec))
            .epsilon(1e-13));
}

TEST_CASE("stored samples are consistent with the density") {
  const auto syn = synthetic(10, {0.3, -0.2}, 5);
  const auto spec = spec_for(2);
  FitOptions o;
  o.n_iter = 1500;
  o.burn_in = 500;
  o.seed = 1;
  o.store_eps = true;
  const auto f = fit(syn.data, spec, o);
  REQUIRE(f.samples.size() == 1000);
  for (std::size_t i = 0; i < f.samples.size(); i += 50) {
    const auto& s = f.samples[i];
    REQUIRE(s.eps.size() == syn.data.n_games());
    CHECK(log_posterior(s, syn.data, spec) == Approx(s.log_post).epsilon(1e-9));
    CHECK(deviance(s.w, s.eps, syn.data) == Approx(s.deviance).epsilon(1e-9));
    CHECK(s.tau_w > 0);
    CHECK(s.tau_eps > 0);
  }
  CHECK(f.acceptance_rate > 0.0);
  CHECK(f.acceptance_rate < 1.0);
  CHECK(f.w_mean.size() == 2);
  CHECK(f.alpha_hat.size() == 10);
  CHECK(f.eps_mean.size() == syn.data.n_games());
  CHECK(f.dic.dic == Approx(f.dic.mean_deviance + f.dic.p_d));
}

TEST_CASE("fits are deterministic given the seed") {
  const auto syn = synthetic(8, {0.3}, 6);
  FitOptions o;
  o.n_iter = 600;
  o.burn_in = 200;
  o.seed = 42;
  const auto a = fit(syn.data, spec_for(1), o);
  const auto b = fit(syn.data, spec_for(1), o);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].w == b.samples[i].w);
    CHECK(a.samples[i].log_post == b.samples[i].log_post);
  }
  o.seed = 43;
  CHECK(fit(syn.data, spec_for(1), o).samples.back().w != a.samples.back().w);
}

TEST_CASE("too few kept iterations") {
  const auto d = two_game_data();
  FitOptions o;
  o.n_iter = 150;
  o.burn_in = 100;
  CHECK(code_of([&] { fit(d, spec_for(1), o); }) == ErrorCode::kInsufficientIterations);
  o.burn_in = 200;
  CHECK(code_of([&] { fit(d, spec_for(1), o); }) == ErrorCode::kInsufficientIterations);
}

TEST_CASE("DIC of a single sample has no effective parameters") {
  const auto d = two_game_data();
  const auto s = two_game_sample();
  FitResult f;
  auto stored = s;
  stored.deviance = deviance(s.w, s.eps, d);
  f.samples = {stored};
  f.w_mean = s.w;
  f.eps_mean = s.eps;
  const auto r = dic(f, d);
  CHECK(r.p_d == 0.0);
  CHECK(r.dic == r.deviance_at_mean);
  CHECK(r.dic == Approx(-193.972573368069490293792).epsilon(1e-13));
  f.samples.clear();
  CHECK(code_of([&] { dic(f, d); }) == ErrorCode::kInsufficientIterations);
}

TEST_CASE("split R-hat") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> same(4, std::vector<double>(2000));
  for (auto& c : same) {
    for (auto& v : c) v = n01(rng);
  }
  CHECK(split_rhat(same) == Approx(1.0).margin(0.01));
  auto shifted = same;
  for (auto& v : shifted[0]) v += 3.0;
  CHECK(split_rhat(shifted) > 1.5);
  // A trend inside one chain shows up between its halves.
  std::vector<std::vector<double>> trend(1, std::vector<double>(2000));
  for (std::size_t i = 0; i < 2000; ++i) trend[0][i] = n01(rng) + (i < 1000 ? 0 : 4);
  CHECK(split_rhat(trend) > 1.5);
}

TEST_CASE("multiple chains") {
  const auto syn = synthetic(8, {0.3}, 7);
  FitOptions o;
  o.n_iter = 700;
  o.burn_in = 300;
  o.seed = 5;
  const auto one = fit_chains(syn.data, spec_for(1), o, 1);
  const auto direct = fit(syn.data, spec_for(1), o);
  CHECK(one.merged.samples.back().w == direct.samples.back().w);
  const auto three = fit_chains(syn.data, spec_for(1), o, 3, 2);
  REQUIRE(three.chains.size() == 3);
  CHECK(three.merged.samples.size() == 1200);
  CHECK(three.rhat_w.size() == 1);
  CHECK(std::isfinite(three.rhat_log_post));
  const auto serial = fit_chains(syn.data, spec_for(1), o, 3, 1);
  CHECK(serial.merged.samples.back().w == three.merged.samples.back().w);
  CHECK(serial.chains[1].seed == derive_seed(5, 1));
}

TEST_CASE("skill and wins correlation") {
  ModelData d;
  d.teams = {"A", "B", "C"};
  d.covariates = {"x"};
  d.x = {{0}, {0}, {0}};
  // A wins 2, B wins 1, C wins 0.
  d.games = {{0, 1, 10, 6}, {0, 2, 10, 7}, {1, 2, 10, 8}};
  CHECK(skill_win_correlation({3.0, 2.0, 1.0}, d) == Approx(1.0).epsilon(1e-14));
  CHECK(skill_win_correlation({1.0, 2.0, 3.0}, d) == Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("underdog probabilities match a direct count") {
  SynthConfig c;
  c.n_teams = 12;
  c.seed = 19;
  const auto season = simulate_random(c);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::vector<double> alpha(season.teams.size());
  for (auto& a : alpha) a = u(rng);
  alpha[5] = alpha[6];
  const std::set<std::string> plus = {season.teams[0], season.teams[3], season.teams[6]};
  const auto table = underdog_probs(season, alpha, plus);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < season.teams.size(); ++i) index[season.teams[i]] = i;
  std::size_t n[5] = {};
  std::size_t w[5] = {};
  std::size_t tied = 0;
  for (const auto& m : season.matches) {
    const double ah = alpha[index[m.home_team]];
    const double aa = alpha[index[m.away_team]];
    if (ah == aa) {
      ++tied;
      continue;
    }
    const bool under_home = ah < aa;
    const bool won = under_home ? m.home_points_raw > m.away_points_raw
                                : m.away_points_raw > m.home_points_raw;
    const std::string& fav = under_home ? m.away_team : m.home_team;
    const int side = under_home ? 2 : 1;
    n[0] += 1;
    w[0] += won;
    n[side] += 1;
    w[side] += won;
    if (plus.count(fav)) {
      n[side + 2] += 1;
      w[side + 2] += won;
    }
  }
  CHECK(table.tied_skill == tied);
  CHECK(tied == 2);
  CHECK(table.overall.games == n[0]);
  CHECK(table.overall.wins == w[0]);
  CHECK(table.away.games == n[1]);
  CHECK(table.away.wins == w[1]);
  CHECK(table.home.games == n[2]);
  CHECK(table.home.wins == w[2]);
  CHECK(table.away_plus.games == n[3]);
  CHECK(table.away_plus.wins == w[3]);
  CHECK(table.home_plus.games == n[4]);
  CHECK(table.home_plus.wins == w[4]);
  CHECK(table.has_removed_plus);
  CHECK(*table.overall.value() ==
        static_cast<double>(w[0]) / static_cast<double>(n[0]));
}

TEST_CASE("underdog cells without matches are empty") {
  SynthConfig c;
  c.n_teams = 8;
  c.seed = 2;
  const auto season = simulate_random(c);
  const std::vector<double> alpha(season.teams.size(), 1.0);
  const auto all_tied = underdog_probs(season, alpha);
  CHECK_FALSE(all_tied.overall.value());
  CHECK(all_tied.tied_skill == season.matches.size());
  std::vector<double> ranked(season.teams.size());
  std::iota(ranked.begin(), ranked.end(), 1.0);
  const auto none_plus = underdog_probs(season, ranked, std::set<std::string>{});
  CHECK(none_plus.overall.value());
  CHECK_FALSE(none_plus.home_plus.value());
  CHECK_FALSE(none_plus.away_plus.value());
  CHECK_FALSE(underdog_probs(season, ranked).has_removed_plus);
}
