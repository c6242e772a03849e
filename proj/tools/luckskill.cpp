#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "luckskill/baseline.hpp"
#include "luckskill/btpoisson.hpp"
#include "luckskill/corpus.hpp"
#include "luckskill/error.hpp"
#include "luckskill/features.hpp"
#include "luckskill/parallel.hpp"
#include "luckskill/report.hpp"
#include "luckskill/skillcoef.hpp"
#include "luckskill/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace luckskill;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  std::string out_dir = ".";
  std::string format = "json";
  bool allow_irregular = false;
  std::size_t min_teams = 8;
  std::string scheme = "soccer";
  std::string scheme_file;
  std::string schema_file;
  std::size_t replicates = 10000;
};

struct Run {
  Manifest manifest;
  fs::path out_dir;

  fs::path output(const std::string& given, const std::string& fallback) {
    fs::path p = given.empty() ? out_dir / fallback : fs::path(given);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    manifest.outputs.push_back(p);
    return p;
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  return out;
}

ScoringScheme load_scheme(const Globals& g) {
  if (!g.scheme_file.empty()) return ScoringScheme::from_json(read_json_file(g.scheme_file));
  return ScoringScheme::by_name(g.scheme);
}

ColumnSchema load_schema(const Globals& g) {
  if (g.schema_file.empty()) return {};
  return ColumnSchema::from_json_file(g.schema_file);
}

BuildOptions build_options(const Globals& g) {
  BuildOptions b;
  b.allow_irregular = g.allow_irregular;
  b.min_teams = g.min_teams;
  return b;
}

MonteCarloOptions mc_options(const Globals& g) {
  MonteCarloOptions m;
  m.n_replicates = g.replicates;
  m.seed = g.seed;
  m.threads = g.threads;
  return m;
}

// Seasons of a match file, optionally narrowed to one league and season.
std::vector<SeasonView> load_seasons(const Globals& g, const std::string& path,
                                     const std::string& league,
                                     const std::string& season) {
  const auto records = load_matches(fs::path(path), load_schema(g));
  std::vector<SeasonView> out;
  for (const auto& [key, recs] : split_by_season(records)) {
    if (!league.empty() && key.first != league) continue;
    if (!season.empty() && key.second != season) continue;
    out.push_back(build_season(recs, key.first, key.second, build_options(g)));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kEmptySeason, "no matching season in " + path);
  }
  return out;
}

SeasonView load_one_season(const Globals& g, const std::string& path,
                           const std::string& league, const std::string& season) {
  auto seasons = load_seasons(g, path, league, season);
  if (seasons.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                path + " holds " + std::to_string(seasons.size()) +
                    " seasons; select one with --league/--season");
  }
  return seasons.front();
}

std::uint64_t season_seed(const Globals& g, std::size_t i, std::size_t n) {
  return n == 1 ? g.seed : derive_seed(g.seed, i);
}

void cmd_simulate(const Globals& g, Run& run, const std::string& mode,
                  const std::string& config_path, const std::string& out,
                  const std::string& truth, std::optional<std::size_t> planted) {
  json cfg = json::object();
  if (!config_path.empty()) {
    cfg = read_json_file(config_path);
    run.manifest.inputs.push_back(config_path);
  }
  if (!mode.empty()) cfg["mode"] = mode;
  if (planted) {
    cfg["n_planted"] = *planted;
  } else if (cfg.value("mode", "") == "planted" && !cfg.contains("n_planted")) {
    cfg["n_planted"] = 3;
  }
  SynthConfig config = SynthConfig::from_json(cfg);
  if (!cfg.contains("scheme")) config.scheme = load_scheme(g);
  if (g.seed_set || !cfg.contains("seed")) config.seed = g.seed;
  run.manifest.seed = config.seed;

  json truth_json = {{"mode", cfg.value("mode", "random")}, {"seed", config.seed}};
  SeasonView season;
  if (config.mode == SynthMode::kBradleyTerry) {
    BtSimulation sim = simulate_bt(config);
    season = std::move(sim.season);
    truth_json["teams"] = season.teams;
    truth_json["alpha"] = sim.alpha;
    truth_json["w_true"] = config.w_true;
    truth_json["eps"] = sim.eps;
    truth_json["floor_hits"] = sim.floor_hits;
  } else {
    season = simulate_random(config);
    truth_json["teams"] = season.teams;
    std::vector<std::string> planted(
        season.teams.begin(),
        season.teams.begin() +
            static_cast<std::ptrdiff_t>(std::min(config.n_planted, season.teams.size())));
    truth_json["planted"] = planted;
  }
  auto f = open_out(run.output(out, "matches.csv"));
  write_matches(f, season.matches);
  if (!truth.empty()) write_json_file(run.output(truth, ""), truth_json);
  std::cerr << "simulated " << season.matches.size() << " matches for "
            << season.n_teams() << " teams\n";
}

void cmd_phi(const Globals& g, Run& run, const std::string& matches,
             const std::string& league, const std::string& season,
             const std::string& out) {
  run.manifest.inputs.push_back(matches);
  const ScoringScheme scheme = load_scheme(g);
  const auto seasons = load_seasons(g, matches, league, season);
  std::vector<PhiReport> reports;
  for (std::size_t i = 0; i < seasons.size(); ++i) {
    MonteCarloOptions mc = mc_options(g);
    mc.seed = season_seed(g, i, seasons.size());
    reports.push_back(evaluate_season(seasons[i], scheme, mc));
  }
  if (g.format == "json") {
    json j = json::array();
    for (const auto& r : reports) j.push_back(to_json(r));
    write_json_file(run.output(out, "report.json"),
                    reports.size() == 1 ? j.front() : j);
  } else {
    auto f = open_out(run.output(out, "phi_by_season.csv"));
    write_phi_by_season_csv(f, reports);
  }
  if (g.format == "json") {
    auto f = open_out(run.output("", "phi_by_season.csv"));
    write_phi_by_season_csv(f, reports);
  }
  std::map<std::string, std::vector<SeasonView>> by_league;
  for (const auto& s : seasons) by_league[s.league_id].push_back(s);
  auto f = open_out(run.output("", "cumulative_phi.csv"));
  bool first = true;
  for (const auto& [lg, list] : by_league) {
    std::ostringstream part;
    write_cumulative_csv(part, lg, cumulative_phi(list, scheme));
    std::string text = part.str();
    if (!first) text = text.substr(text.find('\n') + 1);
    f << text;
    first = false;
  }
  for (const auto& r : reports) {
    std::cout << r.league_id << ' ' << r.season_id << " phi=" << r.phi << " CI=["
              << r.ci_low << ", " << r.ci_high << "] "
              << classification_name(r.classification) << '\n';
  }
}

void cmd_reduce(const Globals& g, Run& run, const std::string& matches,
                const std::string& league, const std::string& season,
                const std::string& out) {
  run.manifest.inputs.push_back(matches);
  const ScoringScheme scheme = load_scheme(g);
  const auto seasons = load_seasons(g, matches, league, season);
  std::vector<RemovalTrace> traces;
  std::optional<Error> failure;
  for (std::size_t i = 0; i < seasons.size(); ++i) {
    MonteCarloOptions mc = mc_options(g);
    mc.seed = season_seed(g, i, seasons.size());
    try {
      traces.push_back(reduce_to_random(seasons[i], scheme, mc));
    } catch (const ExhaustedTeamsError& e) {
      traces.push_back(e.trace());
      if (!failure) failure = Error(e.code(), e.detail());
    }
  }
  json j = json::array();
  for (const auto& t : traces) j.push_back(to_json(t));
  write_json_file(run.output(g.format == "json" ? out : "", "removed.json"),
                  traces.size() == 1 ? j.front() : j);
  auto f = open_out(run.output(g.format == "csv" ? out : "", "removal.csv"));
  write_removal_csv(f, traces);
  for (const auto& t : traces) {
    std::cout << t.league_id << ' ' << t.season_id << " removed";
    for (const auto& s : t.removed) std::cout << ' ' << s.team;
    std::cout << " phi=" << t.final_phi << '\n';
  }
  if (failure) throw *failure;
}

void cmd_features(Run& run, const std::string& rosters, int year,
                  const std::string& conferences, int window,
                  bool allow_missing_prior, const std::string& out) {
  run.manifest.inputs.push_back(rosters);
  std::map<std::string, char> conf;
  if (!conferences.empty()) {
    conf = load_conferences(conferences);
    run.manifest.inputs.push_back(conferences);
  }
  FeatureOptions options;
  options.window = window;
  options.allow_missing_prior = allow_missing_prior;
  const auto features = compute_features(load_rosters(fs::path(rosters)), year,
                                         conf, options);
  auto f = open_out(run.output(out, "features.csv"));
  write_features_csv(f, features);
  std::cerr << "wrote features for " << features.size() << " teams\n";
}

ModelData model_data_for(const Globals& g, Run& run, const std::string& matches,
                         const std::string& league, const std::string& season,
                         const std::string& features_path,
                         std::optional<int> feature_season, const ModelSpec& spec,
                         SeasonView* season_out = nullptr) {
  run.manifest.inputs.push_back(matches);
  run.manifest.inputs.push_back(features_path);
  SeasonView view = load_one_season(g, matches, league, season);
  int year = 0;
  if (feature_season) {
    year = *feature_season;
  } else {
    try {
      year = std::stoi(view.season_id);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  "season '" + view.season_id +
                      "' is not a year; pass --feature-season");
    }
  }
  std::vector<TeamFeatures> rows;
  for (auto& tf : read_features_csv(features_path)) {
    if (tf.season == year) rows.push_back(std::move(tf));
  }
  ModelData data = make_model_data(view, rows, spec);
  if (season_out) *season_out = std::move(view);
  return data;
}

void cmd_fit(const Globals& g, Run& run, const std::string& matches,
             const std::string& league, const std::string& season,
             const std::string& features_path, std::optional<int> feature_season,
             const std::string& model, std::size_t iters, std::size_t burnin,
             std::size_t chains, std::size_t thin, const std::string& out) {
  ModelSpec spec;
  spec.features = parse_feature_list(model);
  spec.validate();
  const ModelData data = model_data_for(g, run, matches, league, season,
                                        features_path, feature_season, spec);
  FitOptions options;
  options.n_iter = iters;
  options.burn_in = burnin;
  options.seed = g.seed;
  const MultiChainFit result = fit_chains(data, spec, options, chains, g.threads);
  json j = fit_to_json(result.merged, thin);
  j["n_chains"] = chains;
  j["rhat_w"] = result.rhat_w;
  j["rhat_log_post"] = result.rhat_log_post;
  j["skill_win_correlation"] =
      skill_win_correlation(result.merged.alpha_hat, data);
  json per_chain = json::array();
  for (const auto& c : result.chains) {
    per_chain.push_back({{"seed", c.seed},
                         {"acceptance_rate", c.acceptance_rate},
                         {"dic", c.dic.dic}});
  }
  j["chains"] = per_chain;
  write_json_file(run.output(out, "fit.json"), j);
  std::cout << "model " << model << " DIC=" << result.merged.dic.dic
            << " pD=" << result.merged.dic.p_d
            << " acceptance=" << result.merged.acceptance_rate << '\n';
}

void cmd_dic(const Globals& g, Run& run, const std::vector<std::string>& fits,
             const std::string& out) {
  struct Row {
    std::string path;
    std::string model;
    DicResult dic;
  };
  std::vector<Row> rows;
  for (const auto& p : fits) {
    run.manifest.inputs.push_back(p);
    const FitResult f = fit_from_json(read_json_file(p));
    std::string model;
    for (Feature x : f.spec.features) {
      if (!model.empty()) model += '+';
      model += feature_name(x);
    }
    rows.push_back({p, model, f.dic});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.dic.dic < b.dic.dic;
  });
  if (g.format == "json") {
    json j = json::array();
    for (const auto& r : rows) {
      j.push_back({{"fit", r.path},
                   {"model", r.model},
                   {"dic", r.dic.dic},
                   {"p_d", r.dic.p_d},
                   {"mean_deviance", r.dic.mean_deviance},
                   {"deviance_at_mean", r.dic.deviance_at_mean}});
    }
    write_json_file(run.output(out, "dic.json"), j);
  } else {
    auto f = open_out(run.output(out, "dic.csv"));
    f << "fit,model,dic,p_d,mean_deviance,deviance_at_mean\n";
    for (const auto& r : rows) {
      f << r.path << ',' << r.model << ',' << r.dic.dic << ',' << r.dic.p_d << ','
        << r.dic.mean_deviance << ',' << r.dic.deviance_at_mean << '\n';
    }
  }
  for (const auto& r : rows) {
    std::cout << r.model << " DIC=" << r.dic.dic << " pD=" << r.dic.p_d << '\n';
  }
}

void cmd_underdog(const Globals& g, Run& run, const std::string& fit_path,
                  const std::string& matches, const std::string& league,
                  const std::string& season, const std::string& removed_path,
                  const std::string& out) {
  run.manifest.inputs.push_back(fit_path);
  run.manifest.inputs.push_back(matches);
  const FitResult f = fit_from_json(read_json_file(fit_path));
  const SeasonView view = load_one_season(g, matches, league, season);
  std::map<std::string, double> by_team;
  for (std::size_t i = 0; i < f.teams.size(); ++i) by_team[f.teams[i]] = f.alpha_hat[i];
  std::vector<double> alpha;
  for (const auto& t : view.teams) {
    const auto it = by_team.find(t);
    if (it == by_team.end()) {
      throw Error(ErrorCode::kInvalidArgument, "fit has no skill for team '" + t + "'");
    }
    alpha.push_back(it->second);
  }
  std::optional<std::set<std::string>> plus;
  if (!removed_path.empty()) {
    run.manifest.inputs.push_back(removed_path);
    json j = read_json_file(removed_path);
    if (j.is_array()) {
      if (j.size() != 1) {
        throw Error(ErrorCode::kInvalidArgument,
                    removed_path + " must hold a single removal trace");
      }
      j = j.front();
    }
    const auto best = removal_trace_from_json(j).removed_best();
    plus = std::set<std::string>(best.begin(), best.end());
  }
  const UnderdogTable table = underdog_probs(view, alpha, plus);
  if (g.format == "json") {
    write_json_file(run.output(out, "underdog.json"), to_json(table));
  } else {
    auto o = open_out(run.output(out, "underdog.csv"));
    write_underdog_csv(o, table);
  }
  write_underdog_csv(std::cout, table);
}

void cmd_batch(const Globals& g, Run& run, const std::string& corpus,
               bool no_removal, unsigned workers) {
  BatchOptions options;
  if (!g.scheme_file.empty()) {
    options.scheme = ScoringScheme::from_json(read_json_file(g.scheme_file));
  } else {
    options.scheme = ScoringScheme::by_name(g.scheme);
  }
  options.schema = load_schema(g);
  options.build = build_options(g);
  options.monte_carlo = mc_options(g);
  options.run_removal = !no_removal;
  options.workers = workers == 0 ? g.threads : workers;
  const BatchResult result = batch_phi(corpus, options);
  for (const auto& p : result.inputs) run.manifest.inputs.push_back(p);
  {
    auto f = open_out(run.output("", "batch.csv"));
    write_batch_csv(f, result.rows);
  }
  {
    auto f = open_out(run.output("", "sports.csv"));
    write_sport_summary_csv(f, result.sports);
  }
  {
    auto f = open_out(run.output("", "removal.csv"));
    write_removal_csv(f, result.traces);
  }
  if (g.format == "json") {
    json traces = json::array();
    for (const auto& t : result.traces) traces.push_back(to_json(t));
    write_json_file(run.output("", "removed.json"), traces);
  }
  std::size_t errors = 0;
  for (const auto& r : result.rows) {
    if (!r.error.empty()) {
      ++errors;
      std::cerr << r.sport << '/' << r.league_id << '/' << r.season_id << ": "
                << r.error << '\n';
    }
  }
  std::cout << result.rows.size() << " seasons, " << errors << " failed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skill versus luck in league tables"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master RNG seed");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--out-dir", g.out_dir, "Directory for default output names");
  app.add_option("--format", g.format, "Primary output format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--allow-irregular", g.allow_irregular,
               "Accept unequal game counts with a warning");
  app.add_option("--min-teams", g.min_teams, "Smallest league accepted");
  app.add_option("--scheme", g.scheme, "Built-in scoring scheme")
      ->check(CLI::IsMember({"soccer", "basketball", "handball", "volleyball"}));
  app.add_option("--scheme-file", g.scheme_file, "Scoring scheme JSON")
      ->check(CLI::ExistingFile);
  app.add_option("--schema", g.schema_file, "Column mapping JSON")
      ->check(CLI::ExistingFile);
  app.add_option("--replicates", g.replicates, "Monte-Carlo replicates")
      ->check(CLI::PositiveNumber);
  app.fallthrough();

  std::string matches, league, season, out, mode, config, truth, rosters,
      conferences, features, model = "CO,A5,AP,VL,RC,SI", fit_path, removed,
      corpus;
  int year = 0;
  int window = kDefaultWindow;
  bool allow_missing_prior = false;
  std::optional<int> feature_season;
  std::size_t iters = 10000, burnin = 2000, chains = 1, thin = 10;
  std::vector<std::string> fit_files;
  bool no_removal = false;
  unsigned workers = 0;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic season");
  sim->add_option("--mode", mode)->check(CLI::IsMember({"random", "bt", "planted"}));
  sim->add_option("--config", config)->check(CLI::ExistingFile);
  sim->add_option("--out", out);
  sim->add_option("--truth", truth);
  std::optional<std::size_t> planted;
  sim->add_option("--planted", planted, "Planted strong teams (planted mode, default 3)");

  auto add_season_select = [&](CLI::App* cmd, bool need_matches = true) {
    auto* o = cmd->add_option("--matches", matches, "Match file")
                  ->check(CLI::ExistingFile);
    if (need_matches) o->required();
    cmd->add_option("--league", league);
    cmd->add_option("--season", season);
    cmd->add_option("--out", out);
  };
  auto* phi_cmd = app.add_subcommand("phi", "Skill coefficient with interval");
  add_season_select(phi_cmd);
  auto* reduce = app.add_subcommand("reduce", "Remove teams until random");
  add_season_select(reduce);

  auto* feat = app.add_subcommand("features", "Team covariates from rosters");
  feat->add_option("--rosters", rosters)->required()->check(CLI::ExistingFile);
  feat->add_option("--year", year)->required();
  feat->add_option("--conferences", conferences)->check(CLI::ExistingFile);
  feat->add_option("--window", window)->check(CLI::NonNegativeNumber);
  feat->add_flag("--allow-missing-prior", allow_missing_prior);
  feat->add_option("--out", out);

  auto* fit_cmd = app.add_subcommand("fit", "Bradley-Terry-Poisson posterior");
  add_season_select(fit_cmd);
  fit_cmd->add_option("--features", features)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--feature-season", feature_season);
  fit_cmd->add_option("--model", model, "Comma-separated features");
  fit_cmd->add_option("--iters", iters);
  fit_cmd->add_option("--burnin", burnin);
  fit_cmd->add_option("--chains", chains)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--thin", thin)->check(CLI::PositiveNumber);

  auto* dic_cmd = app.add_subcommand("dic", "Compare fitted models by DIC");
  dic_cmd->add_option("fits", fit_files)->required()->check(CLI::ExistingFile);
  dic_cmd->add_option("--out", out);

  auto* under = app.add_subcommand("underdog", "Underdog win rates");
  add_season_select(under);
  under->add_option("--fit", fit_path)->required()->check(CLI::ExistingFile);
  under->add_option("--removed-plus", removed)->check(CLI::ExistingFile);

  auto* batch = app.add_subcommand("batch", "Skill coefficient over a corpus");
  batch->add_option("--corpus", corpus)->required()->check(CLI::ExistingDirectory);
  batch->add_flag("--no-removal", no_removal);
  batch->add_option("--workers", workers, "Seasons in flight (default --threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  g.seed_set = seed_opt->count() > 0;

  Run run;
  run.out_dir = g.out_dir;
  run.manifest.args.assign(argv + 1, argv + argc);
  run.manifest.seed = g.seed;
  run.manifest.threads = g.threads;
  CLI::App* cmd = app.get_subcommands().front();
  run.manifest.command = cmd->get_name();
  try {
    fs::create_directories(run.out_dir);
    if (!g.scheme_file.empty()) run.manifest.inputs.push_back(g.scheme_file);
    if (!g.schema_file.empty()) run.manifest.inputs.push_back(g.schema_file);
    if (cmd == sim) {
      cmd_simulate(g, run, mode, config, out, truth, planted);
    } else if (cmd == phi_cmd) {
      cmd_phi(g, run, matches, league, season, out);
    } else if (cmd == reduce) {
      cmd_reduce(g, run, matches, league, season, out);
    } else if (cmd == feat) {
      cmd_features(run, rosters, year, conferences, window, allow_missing_prior, out);
    } else if (cmd == fit_cmd) {
      cmd_fit(g, run, matches, league, season, features, feature_season, model,
              iters, burnin, chains, thin, out);
    } else if (cmd == dic_cmd) {
      cmd_dic(g, run, fit_files, out);
    } else if (cmd == under) {
      cmd_underdog(g, run, fit_path, matches, league, season, removed, out);
    } else if (cmd == batch) {
      cmd_batch(g, run, corpus, no_removal, workers);
    }
    run.manifest.extra = {{"scheme", g.scheme_file.empty() ? g.scheme : g.scheme_file},
                          {"replicates", g.replicates},
                          {"format", g.format}};
    write_json_file(run.out_dir / (run.manifest.command + ".manifest.json"),
                    to_json(run.manifest));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
