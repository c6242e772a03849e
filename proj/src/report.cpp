#include "luckskill/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <tuple>

#include "luckskill/error.hpp"
#include "luckskill/parallel.hpp"
#include "luckskill/table.hpp"

namespace luckskill {

using nlohmann::json;

namespace {

// JSON has no infinities; they travel as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double get_number(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::kInvalidArgument, "not a number: '" + s + "'");
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> get_numbers(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(get_number(x));
  return v;
}

Classification parse_classification(const std::string& name) {
  for (Classification c : {Classification::kSkill, Classification::kRandom,
                           Classification::kSubRandom}) {
    if (name == classification_name(c)) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown classification '" + name + "'");
}

json cell_json(const UnderdogCell& c) {
  json j = {{"wins", c.wins}, {"games", c.games}};
  const auto v = c.value();
  j["p"] = v ? json(*v) : json(nullptr);
  return j;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

json to_json(const PhiReport& r) {
  json probs = {{"outcome", numbers(r.probs.outcome)},
                {"p_home", r.probs.p_home},
                {"p_tie", r.probs.p_tie},
                {"p_away", r.probs.p_away},
                {"n_matches", r.probs.n_matches}};
  json m = {{"mu_home", r.moments.mu_home},   {"var_home", r.moments.var_home},
            {"mu_away", r.moments.mu_away},   {"var_away", r.moments.var_away},
            {"mu_2k", r.moments.mu_2k},       {"var_2k", r.moments.var_2k},
            {"k", r.moments.k}};
  return {{"league", r.league_id},
          {"season", r.season_id},
          {"n_teams", r.n_teams},
          {"games_per_team", r.games_per_team},
          {"probs", probs},
          {"moments", m},
          {"s2", number(r.s2)},
          {"phi", number(r.phi)},
          {"degenerate", r.degenerate},
          {"approximate", r.approximate},
          {"ci_low", number(r.ci_low)},
          {"ci_high", number(r.ci_high)},
          {"n_replicates", r.n_replicates},
          {"ci_level", r.ci_level},
          {"classification", classification_name(r.classification)},
          {"rng_seed", r.rng_seed},
          {"warnings", r.warnings}};
}

PhiReport phi_report_from_json(const json& j) {
  PhiReport r;
  r.league_id = j.at("league").get<std::string>();
  r.season_id = j.at("season").get<std::string>();
  r.n_teams = j.at("n_teams").get<std::size_t>();
  r.games_per_team = j.at("games_per_team").get<int>();
  const json& p = j.at("probs");
  r.probs.outcome = get_numbers(p.at("outcome"));
  r.probs.p_home = p.at("p_home").get<double>();
  r.probs.p_tie = p.at("p_tie").get<double>();
  r.probs.p_away = p.at("p_away").get<double>();
  r.probs.n_matches = p.at("n_matches").get<std::size_t>();
  const json& m = j.at("moments");
  r.moments.mu_home = m.at("mu_home").get<double>();
  r.moments.var_home = m.at("var_home").get<double>();
  r.moments.mu_away = m.at("mu_away").get<double>();
  r.moments.var_away = m.at("var_away").get<double>();
  r.moments.mu_2k = m.at("mu_2k").get<double>();
  r.moments.var_2k = m.at("var_2k").get<double>();
  r.moments.k = m.at("k").get<int>();
  r.s2 = get_number(j.at("s2"));
  r.phi = get_number(j.at("phi"));
  r.degenerate = j.at("degenerate").get<bool>();
  r.approximate = j.at("approximate").get<bool>();
  r.ci_low = get_number(j.at("ci_low"));
  r.ci_high = get_number(j.at("ci_high"));
  r.n_replicates = j.at("n_replicates").get<std::size_t>();
  r.ci_level = j.at("ci_level").get<double>();
  r.classification = parse_classification(j.at("classification").get<std::string>());
  r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json to_json(const RemovalTrace& t) {
  json steps = json::array();
  for (const auto& s : t.removed) {
    steps.push_back({{"team", s.team},
                     {"points", s.points},
                     {"best", s.best},
                     {"phi_before", number(s.phi_before)},
                     {"ci_low_before", number(s.ci_low_before)},
                     {"ci_high_before", number(s.ci_high_before)}});
  }
  return {{"league", t.league_id},
          {"season", t.season_id},
          {"initial_teams", t.initial_teams},
          {"removed", steps},
          {"removed_best", t.removed_best()},
          {"final_phi", number(t.final_phi)},
          {"final_ci_low", number(t.final_ci_low)},
          {"final_ci_high", number(t.final_ci_high)},
          {"teams_remaining", t.teams_remaining},
          {"rng_seed", t.rng_seed}};
}

RemovalTrace removal_trace_from_json(const json& j) {
  RemovalTrace t;
  t.league_id = j.at("league").get<std::string>();
  t.season_id = j.at("season").get<std::string>();
  t.initial_teams = j.at("initial_teams").get<std::size_t>();
  for (const auto& s : j.at("removed")) {
    RemovalStep step;
    step.team = s.at("team").get<std::string>();
    step.points = s.at("points").get<double>();
    step.best = s.at("best").get<bool>();
    step.phi_before = get_number(s.at("phi_before"));
    step.ci_low_before = get_number(s.at("ci_low_before"));
    step.ci_high_before = get_number(s.at("ci_high_before"));
    t.removed.push_back(step);
  }
  t.final_phi = get_number(j.at("final_phi"));
  t.final_ci_low = get_number(j.at("final_ci_low"));
  t.final_ci_high = get_number(j.at("final_ci_high"));
  t.teams_remaining = j.at("teams_remaining").get<std::size_t>();
  t.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return t;
}

json fit_to_json(const FitResult& f, std::size_t thin) {
  thin = std::max<std::size_t>(1, thin);
  std::vector<std::string> features;
  for (Feature x : f.spec.features) features.emplace_back(feature_name(x));
  json spec = {{"features", features},
               {"a", f.spec.a},
               {"b", f.spec.b},
               {"c", f.spec.c},
               {"d", f.spec.d},
               {"include_intercept", f.spec.include_intercept}};
  json samples = json::array();
  for (std::size_t i = 0; i < f.samples.size(); i += thin) {
    const auto& s = f.samples[i];
    samples.push_back({{"w", numbers(s.w)},
                       {"tau_w", s.tau_w},
                       {"tau_eps", s.tau_eps},
                       {"log_post", number(s.log_post)},
                       {"deviance", number(s.deviance)}});
  }
  json deviance_trace = json::array();
  for (const auto& s : f.samples) deviance_trace.push_back(number(s.deviance));
  return {{"spec", spec},
          {"teams", f.teams},
          {"covariates", f.covariates},
          {"seed", f.seed},
          {"n_iter", f.n_iter},
          {"burn_in", f.burn_in},
          {"n_samples", f.samples.size()},
          {"thin", thin},
          {"acceptance_rate", f.acceptance_rate},
          {"block_acceptance",
           {{"w", f.block_acceptance.w},
            {"eps", f.block_acceptance.eps},
            {"tau_w", f.block_acceptance.tau_w},
            {"tau_eps", f.block_acceptance.tau_eps},
            {"rescale", f.block_acceptance.rescale}}},
          {"alpha_hat", numbers(f.alpha_hat)},
          {"w_mean", numbers(f.w_mean)},
          {"eps_mean", numbers(f.eps_mean)},
          {"eps_sd", numbers(f.eps_sd)},
          {"w_scales", numbers(f.w_scales)},
          {"dic",
           {{"dic", number(f.dic.dic)},
            {"p_d", number(f.dic.p_d)},
            {"mean_deviance", number(f.dic.mean_deviance)},
            {"deviance_at_mean", number(f.dic.deviance_at_mean)}}},
          {"floor_hits", f.floor_hits},
          {"floor_hit_rate", f.floor_hit_rate()},
          {"rate_evaluations", f.rate_evaluations},
          {"samples", samples},
          {"deviance_trace", deviance_trace}};
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  const json& spec = j.at("spec");
  for (const auto& name : spec.at("features")) {
    f.spec.features.push_back(parse_feature(name.get<std::string>()));
  }
  f.spec.a = spec.at("a").get<double>();
  f.spec.b = spec.at("b").get<double>();
  f.spec.c = spec.at("c").get<double>();
  f.spec.d = spec.at("d").get<double>();
  f.spec.include_intercept = spec.value("include_intercept", false);
  f.teams = j.at("teams").get<std::vector<std::string>>();
  f.covariates = j.at("covariates").get<std::vector<std::string>>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.n_iter = j.at("n_iter").get<std::size_t>();
  f.burn_in = j.at("burn_in").get<std::size_t>();
  f.acceptance_rate = j.at("acceptance_rate").get<double>();
  const json& b = j.at("block_acceptance");
  f.block_acceptance = {b.at("w").get<double>(), b.at("eps").get<double>(),
                        b.at("tau_w").get<double>(),
                        b.at("tau_eps").get<double>(),
                        b.value("rescale", 0.0)};
  f.alpha_hat = get_numbers(j.at("alpha_hat"));
  f.w_mean = get_numbers(j.at("w_mean"));
  f.eps_mean = get_numbers(j.at("eps_mean"));
  f.eps_sd = get_numbers(j.at("eps_sd"));
  f.w_scales = get_numbers(j.value("w_scales", json::array()));
  const json& d = j.at("dic");
  f.dic.dic = get_number(d.at("dic"));
  f.dic.p_d = get_number(d.at("p_d"));
  f.dic.mean_deviance = get_number(d.at("mean_deviance"));
  f.dic.deviance_at_mean = get_number(d.at("deviance_at_mean"));
  f.floor_hits = j.value("floor_hits", std::size_t{0});
  f.rate_evaluations = j.value("rate_evaluations", std::size_t{0});
  for (const auto& s : j.at("samples")) {
    PosteriorSample p;
    p.w = get_numbers(s.at("w"));
    p.tau_w = s.at("tau_w").get<double>();
    p.tau_eps = s.at("tau_eps").get<double>();
    p.log_post = get_number(s.at("log_post"));
    p.deviance = get_number(s.at("deviance"));
    f.samples.push_back(std::move(p));
  }
  return f;
}

json to_json(const UnderdogTable& t) {
  json j = {{"P(U)", cell_json(t.overall)},
            {"P(U|A)", cell_json(t.away)},
            {"P(U|H)", cell_json(t.home)},
            {"tied_skill", t.tied_skill}};
  if (t.has_removed_plus) {
    j["P(U|A,R+)"] = cell_json(t.away_plus);
    j["P(U|H,R+)"] = cell_json(t.home_plus);
  }
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

namespace {

struct SeasonJob {
  std::string sport;
  std::string league;
  std::string season;
  std::vector<MatchRecord> records;
};

std::string sport_of(const std::filesystem::path& corpus,
                     const std::filesystem::path& file) {
  const auto rel = std::filesystem::relative(file, corpus);
  auto it = rel.begin();
  if (std::next(it) == rel.end()) return file.stem().string();
  return it->string();
}

ScoringScheme scheme_for(const std::string& sport, const BatchOptions& options) {
  try {
    return ScoringScheme::by_name(sport);
  } catch (const Error&) {
    if (options.scheme) return *options.scheme;
    throw Error(ErrorCode::kInvalidArgument,
                "no scoring scheme for sport '" + sport + "'");
  }
}

}  // namespace

BatchResult batch_phi(const std::filesystem::path& corpus,
                      const BatchOptions& options) {
  BatchResult result;
  if (!std::filesystem::is_directory(corpus)) {
    throw Error(ErrorCode::kIo, "not a directory: " + corpus.string());
  }
  for (const auto& entry : std::filesystem::recursive_directory_iterator(corpus)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      result.inputs.push_back(entry.path());
    }
  }
  std::sort(result.inputs.begin(), result.inputs.end());

  std::vector<SeasonJob> jobs;
  std::vector<BatchRow> file_errors;
  for (const auto& file : result.inputs) {
    const std::string sport = sport_of(corpus, file);
    try {
      for (auto& [key, records] :
           split_by_season(load_matches(file, options.schema))) {
        jobs.push_back({sport, key.first, key.second, std::move(records)});
      }
    } catch (const Error& e) {
      BatchRow row;
      row.sport = sport;
      row.league_id = file.stem().string();
      row.error = e.what();
      file_errors.push_back(std::move(row));
    }
  }
  std::sort(jobs.begin(), jobs.end(), [](const SeasonJob& a, const SeasonJob& b) {
    return std::tie(a.sport, a.league, a.season) <
           std::tie(b.sport, b.league, b.season);
  });
  if (jobs.empty() && file_errors.empty()) {
    throw Error(ErrorCode::kEmptySeason, "no seasons under " + corpus.string());
  }

  result.rows.resize(jobs.size());
  std::vector<std::optional<RemovalTrace>> traces(jobs.size());
  const unsigned workers = resolve_threads(options.workers);
  MonteCarloOptions inner = options.monte_carlo;
  if (workers > 1) inner.threads = 1;

  parallel_for(jobs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SeasonJob& job = jobs[i];
      BatchRow& row = result.rows[i];
      row.sport = job.sport;
      row.league_id = job.league;
      row.season_id = job.season;
      row.n_matches = job.records.size();
      row.seed = derive_seed(options.monte_carlo.seed, i);
      try {
        const ScoringScheme scheme = scheme_for(job.sport, options);
        const SeasonView season =
            build_season(job.records, job.league, job.season, options.build);
        row.n_teams = season.n_teams();
        MonteCarloOptions mc = inner;
        mc.seed = row.seed;
        const PhiReport report = evaluate_season(season, scheme, mc);
        row.phi = report.phi;
        row.ci_low = report.ci_low;
        row.ci_high = report.ci_high;
        row.classification = classification_name(report.classification);
        if (!options.run_removal) continue;
        if (report.classification != Classification::kSkill) {
          row.pct_removed = 0.0;
          continue;
        }
        try {
          RemovalTrace trace = reduce_to_random(season, scheme, mc);
          row.pct_removed = 100.0 * static_cast<double>(trace.removed.size()) /
                            static_cast<double>(season.n_teams());
          traces[i] = std::move(trace);
        } catch (const ExhaustedTeamsError& e) {
          traces[i] = e.trace();
        }
      } catch (const Error& e) {
        row.error = e.what();
      }
    }
  });

  for (auto& t : traces) {
    if (t) result.traces.push_back(std::move(*t));
  }
  for (auto& row : file_errors) result.rows.push_back(std::move(row));
  result.sports = summarize(result.rows);
  return result;
}

std::vector<SportSummary> summarize(const std::vector<BatchRow>& rows) {
  std::map<std::string, std::vector<const BatchRow*>> by_sport;
  for (const auto& r : rows) by_sport[r.sport].push_back(&r);
  std::vector<SportSummary> out;
  for (const auto& [sport, group] : by_sport) {
    SportSummary s;
    s.sport = sport;
    std::vector<double> phis;
    std::size_t n_random = 0;
    double removed_sum = 0.0;
    std::size_t removed_n = 0;
    for (const BatchRow* r : group) {
      if (!r->error.empty()) {
        ++s.n_errors;
        continue;
      }
      ++s.n_seasons;
      phis.push_back(r->phi);
      if (r->classification == classification_name(Classification::kRandom)) {
        ++n_random;
      }
      if (r->pct_removed) {
        removed_sum += *r->pct_removed;
        ++removed_n;
      }
    }
    if (!phis.empty()) {
      std::sort(phis.begin(), phis.end());
      s.phi_min = phis.front();
      s.phi_q25 = percentile_sorted(phis, 0.25);
      s.phi_median = percentile_sorted(phis, 0.5);
      s.phi_q75 = percentile_sorted(phis, 0.75);
      s.phi_max = phis.back();
      s.pct_random = 100.0 * static_cast<double>(n_random) /
                     static_cast<double>(phis.size());
    }
    if (removed_n > 0) s.mean_pct_removed = removed_sum / static_cast<double>(removed_n);
    out.push_back(s);
  }
  return out;
}

void write_batch_csv(std::ostream& out, const std::vector<BatchRow>& rows) {
  write_delimited_row(out, {"sport", "league", "season", "n_teams", "n_matches",
                            "phi", "ci_low", "ci_high", "classification",
                            "pct_removed", "seed", "error"});
  for (const auto& r : rows) {
    const bool ok = r.error.empty();
    write_delimited_row(
        out, {r.sport, r.league_id, r.season_id, std::to_string(r.n_teams),
              std::to_string(r.n_matches), ok ? format_double(r.phi) : "",
              ok ? format_double(r.ci_low) : "",
              ok ? format_double(r.ci_high) : "", r.classification,
              optional_field(r.pct_removed), std::to_string(r.seed), r.error});
  }
}

void write_sport_summary_csv(std::ostream& out,
                             const std::vector<SportSummary>& sports) {
  write_delimited_row(out, {"sport", "n_seasons", "n_errors", "phi_min",
                            "phi_q25", "phi_median", "phi_q75", "phi_max",
                            "pct_random", "mean_pct_removed"});
  for (const auto& s : sports) {
    write_delimited_row(
        out, {s.sport, std::to_string(s.n_seasons), std::to_string(s.n_errors),
              format_double(s.phi_min), format_double(s.phi_q25),
              format_double(s.phi_median), format_double(s.phi_q75),
              format_double(s.phi_max), format_double(s.pct_random),
              optional_field(s.mean_pct_removed)});
  }
}

void write_phi_by_season_csv(std::ostream& out,
                             const std::vector<PhiReport>& reports) {
  write_delimited_row(out, {"league", "season", "n_teams", "phi", "ci_low",
                            "ci_high", "classification"});
  for (const auto& r : reports) {
    write_delimited_row(out, {r.league_id, r.season_id, std::to_string(r.n_teams),
                              format_double(r.phi), format_double(r.ci_low),
                              format_double(r.ci_high),
                              classification_name(r.classification)});
  }
}

void write_cumulative_csv(std::ostream& out, const std::string& league_id,
                          const std::vector<CumulativePoint>& points) {
  write_delimited_row(out, {"league", "season", "n_teams", "n_matches", "phi"});
  for (const auto& p : points) {
    write_delimited_row(out, {league_id, p.season_id, std::to_string(p.n_teams),
                              std::to_string(p.n_matches),
                              format_double(p.phi.value)});
  }
}

void write_removal_csv(std::ostream& out,
                       const std::vector<RemovalTrace>& traces) {
  write_delimited_row(out, {"league", "season", "step", "team", "points",
                            "side", "phi_before", "ci_low_before",
                            "ci_high_before", "pct_removed"});
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.removed.size(); ++i) {
      const auto& s = t.removed[i];
      const double pct = t.initial_teams == 0
                             ? 0.0
                             : 100.0 * static_cast<double>(i + 1) /
                                   static_cast<double>(t.initial_teams);
      write_delimited_row(
          out, {t.league_id, t.season_id, std::to_string(i + 1), s.team,
                format_double(s.points), s.best ? "best" : "worst",
                format_double(s.phi_before), format_double(s.ci_low_before),
                format_double(s.ci_high_before), format_double(pct)});
    }
  }
}

void write_underdog_csv(std::ostream& out, const UnderdogTable& t) {
  write_delimited_row(out, {"condition", "wins", "games", "p"});
  auto row = [&](const char* name, const UnderdogCell& c) {
    const auto v = c.value();
    write_delimited_row(out, {name, std::to_string(c.wins), std::to_string(c.games),
                              v ? format_double(*v) : ""});
  };
  row("P(U)", t.overall);
  row("P(U|A)", t.away);
  row("P(U|H)", t.home);
  if (t.has_removed_plus) {
    row("P(U|A,R+)", t.away_plus);
    row("P(U|H,R+)", t.home_plus);
  }
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

json to_json(const Manifest& m) {
  json inputs = json::array();
  for (const auto& p : m.inputs) {
    json entry = {{"path", p.string()}};
    if (std::filesystem::is_regular_file(p)) {
      entry["bytes"] = std::filesystem::file_size(p);
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx",
                    static_cast<unsigned long long>(fnv1a_file(p)));
      entry["fnv1a64"] = hex;
    }
    inputs.push_back(entry);
  }
  std::vector<std::string> outputs;
  for (const auto& p : m.outputs) outputs.push_back(p.string());
  return {{"tool", "luckskill"},
          {"version", LUCKSKILL_VERSION},
          {"command", m.command},
          {"args", m.args},
          {"seed", m.seed},
          {"threads", m.threads},
          {"inputs", inputs},
          {"outputs", outputs},
          {"extra", m.extra}};
}

}  // namespace luckskill
