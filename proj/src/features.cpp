#include "luckskill/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "luckskill/error.hpp"
#include "luckskill/table.hpp"

namespace luckskill {

namespace {

constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "CO", "A5", "A6_10", "SD", "AP", "VL", "RV", "CC", "RC", "SI"};

std::size_t idx(Feature f) { return static_cast<std::size_t>(f); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

int career_length(int year, int first_season) { return year - first_season; }

}  // namespace

const char* feature_name(Feature f) { return kFeatureNames[idx(f)]; }

Feature parse_feature(const std::string& name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (name == kFeatureNames[i]) return static_cast<Feature>(i);
  }
  if (name == "A6-10" || name == "A6") return Feature::A6_10;
  throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + name + "'");
}

std::vector<Feature> parse_feature_list(const std::string& comma_separated) {
  std::vector<Feature> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t+"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    // "CO+A5+AP" is accepted as well as "CO,A5,AP".
    std::stringstream plus(item);
    std::string part;
    while (std::getline(plus, part, '+')) {
      if (!part.empty()) out.push_back(parse_feature(part));
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty feature list");
  }
  return out;
}

std::optional<std::size_t> AffiliationGraph::player_node(
    const std::string& player) const {
  const auto it = std::lower_bound(players_.begin(), players_.end(), player);
  if (it == players_.end() || *it != player) return std::nullopt;
  return static_cast<std::size_t>(it - players_.begin());
}

std::optional<std::size_t> AffiliationGraph::team_node(
    const std::string& team) const {
  const auto it = std::lower_bound(teams_.begin(), teams_.end(), team);
  if (it == teams_.end() || *it != team) return std::nullopt;
  return players_.size() + static_cast<std::size_t>(it - teams_.begin());
}

bool AffiliationGraph::has_edge(std::size_t u, std::size_t v) const {
  const auto& n = adjacency_[u];
  return std::binary_search(n.begin(), n.end(), v);
}

std::size_t AffiliationGraph::n_edges() const {
  std::size_t total = 0;
  for (const auto& n : adjacency_) total += n.size();
  return total / 2;
}

double AffiliationGraph::local_clustering(std::size_t node) const {
  const auto& n = adjacency_[node];
  if (n.size() < 2) return 0.0;
  std::size_t links = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto& ni = adjacency_[n[i]];
    // Count neighbors of n[i] that are also neighbors of node and come later.
    auto a = std::upper_bound(ni.begin(), ni.end(), n[i]);
    auto b = n.begin() + static_cast<std::ptrdiff_t>(i) + 1;
    while (a != ni.end() && b != n.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++links;
        ++a;
        ++b;
      }
    }
  }
  const double pairs = static_cast<double>(n.size()) *
                       static_cast<double>(n.size() - 1) / 2.0;
  return static_cast<double>(links) / pairs;
}

AffiliationGraph build_graph(const std::vector<RosterRecord>& rosters, int year,
                             int window) {
  AffiliationGraph g;
  g.year_ = year;
  std::set<std::string> active;
  std::set<std::string> teams;
  bool any = false;
  for (const auto& r : rosters) {
    if (r.season < year - window || r.season > year) continue;
    any = true;
    teams.insert(r.team);
    if (r.season == year) active.insert(r.player);
  }
  if (!any || active.empty()) {
    throw Error(ErrorCode::kEmptyWindow,
                "no active rosters for " + std::to_string(year) + " in window [" +
                    std::to_string(year - window) + ", " +
                    std::to_string(year) + "]");
  }
  g.players_.assign(active.begin(), active.end());
  g.teams_.assign(teams.begin(), teams.end());
  std::vector<std::set<std::size_t>> adj(g.players_.size() + g.teams_.size());

  // (season, team) -> active players on that roster.
  std::map<std::pair<int, std::string>, std::set<std::size_t>> groups;
  for (const auto& r : rosters) {
    if (r.season < year - window || r.season > year) continue;
    const auto p = g.player_node(r.player);
    if (!p) continue;
    const std::size_t t = *g.team_node(r.team);
    adj[*p].insert(t);
    adj[t].insert(*p);
    groups[{r.season, r.team}].insert(*p);
  }
  for (const auto& [key, members] : groups) {
    for (auto a = members.begin(); a != members.end(); ++a) {
      for (auto b = std::next(a); b != members.end(); ++b) {
        adj[*a].insert(*b);
        adj[*b].insert(*a);
      }
    }
  }
  g.adjacency_.resize(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    g.adjacency_[i].assign(adj[i].begin(), adj[i].end());
  }
  return g;
}

double team_volatility(const AffiliationGraph& current,
                       const AffiliationGraph& previous,
                       const std::string& team) {
  if (previous.year() != current.year() - 1) {
    throw Error(ErrorCode::kMissingPriorYear,
                "volatility for " + std::to_string(current.year()) +
                    " needs the " + std::to_string(current.year() - 1) +
                    " graph");
  }
  auto degree = [&](const AffiliationGraph& g) {
    const auto node = g.team_node(team);
    return node ? static_cast<double>(g.degree(*node)) : 0.0;
  };
  return degree(current) - degree(previous);
}

std::vector<RosterRecord> team_roster(const std::vector<RosterRecord>& rosters,
                                      const std::string& team, int year) {
  std::map<std::string, RosterRecord> by_player;
  for (const auto& r : rosters) {
    if (r.season == year && r.team == team) by_player.emplace(r.player, r);
  }
  std::vector<RosterRecord> out;
  out.reserve(by_player.size());
  for (auto& [name, rec] : by_player) out.push_back(rec);
  return out;
}

double roster_volatility(const AffiliationGraph& graph,
                         const std::vector<RosterRecord>& roster) {
  double total = 0.0;
  for (const auto& r : roster) {
    const auto node = graph.player_node(r.player);
    if (!node) continue;
    const int career = std::max(1, career_length(graph.year(), r.first_season));
    total += static_cast<double>(graph.degree(*node)) / career;
  }
  return total;
}

ClusteringFeatures team_clustering(const AffiliationGraph& graph,
                                   const std::string& team,
                                   const std::vector<RosterRecord>& roster) {
  ClusteringFeatures out;
  if (const auto node = graph.team_node(team)) {
    out.team_clustering = graph.local_clustering(*node);
  }
  if (!roster.empty()) {
    double total = 0.0;
    for (const auto& r : roster) {
      const auto node = graph.player_node(r.player);
      if (!node) continue;
      total += graph.local_clustering(*node) *
               career_length(graph.year(), r.first_season);
    }
    out.roster_coherence = total / static_cast<double>(roster.size());
  }
  return out;
}

SalaryFeatures salary_per_features(const std::vector<RosterRecord>& roster) {
  if (roster.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty roster");
  }
  std::vector<double> salaries;
  std::vector<double> pers;
  for (const auto& r : roster) {
    salaries.push_back(r.salary);
    pers.push_back(r.per);
  }
  std::sort(salaries.begin(), salaries.end(), std::greater<>());
  SalaryFeatures f;
  const std::size_t m = salaries.size();
  const std::size_t top = std::min<std::size_t>(5, m);
  f.a5 = std::accumulate(salaries.begin(), salaries.begin() + top, 0.0) /
         static_cast<double>(top);
  if (m > 5) {
    const std::size_t end = std::min<std::size_t>(10, m);
    f.a6_10 = std::accumulate(salaries.begin() + 5, salaries.begin() + end, 0.0) /
              static_cast<double>(end - 5);
  }
  f.fewer_than_five = m < 5;
  f.fewer_than_ten = m < 10;
  f.sd = sample_sd(salaries);
  f.ap = mean_of(pers);
  f.si = static_cast<double>(m);
  return f;
}

std::map<std::string, char> load_conferences(const std::filesystem::path& path) {
  const DelimitedTable table = read_delimited_file(path);
  const auto c_team = table.column("team");
  const auto c_conf = table.column("conference");
  if (!c_team || !c_conf) {
    throw Error(ErrorCode::kMissingColumn,
                path.string() + ": needs team and conference columns");
  }
  std::map<std::string, char> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() <= std::max(*c_team, *c_conf)) continue;
    const std::string& conf = row[*c_conf];
    if (conf.empty() || (conf[0] != 'E' && conf[0] != 'W' && conf[0] != 'e' &&
                         conf[0] != 'w')) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ": line " +
                      std::to_string(table.line_numbers[r]) +
                      ": conference must be E or W");
    }
    out[row[*c_team]] = static_cast<char>(std::toupper(conf[0]));
  }
  return out;
}

void standardize(std::vector<TeamFeatures>& features) {
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    std::vector<double> column;
    for (const auto& t : features) column.push_back(t.raw[f]);
    const double m = mean_of(column);
    const double sd = sample_sd(column);
    for (auto& t : features) {
      t.standardized[f] = sd > 0 ? (t.raw[f] - m) / sd : 0.0;
    }
  }
}

std::vector<TeamFeatures> compute_features(
    const std::vector<RosterRecord>& rosters, int year,
    const std::map<std::string, char>& conferences,
    const FeatureOptions& options) {
  const AffiliationGraph graph = build_graph(rosters, year, options.window);
  std::optional<AffiliationGraph> previous;
  try {
    previous = build_graph(rosters, year - 1, options.window);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyWindow) throw;
    if (!options.allow_missing_prior) {
      throw Error(ErrorCode::kMissingPriorYear,
                  "no rosters for " + std::to_string(year - 1) +
                      "; team volatility is undefined");
    }
  }

  std::set<std::string> teams;
  for (const auto& r : rosters) {
    if (r.season == year) teams.insert(r.team);
  }

  std::vector<TeamFeatures> out;
  for (const std::string& team : teams) {
    TeamFeatures tf;
    tf.season = year;
    tf.team = team;
    const auto roster = team_roster(rosters, team, year);
    const SalaryFeatures s = salary_per_features(roster);
    const ClusteringFeatures c = team_clustering(graph, team, roster);
    const auto conf = conferences.find(team);
    double co = 0.0;
    if (conf == conferences.end()) {
      tf.flags.push_back("no conference");
    } else {
      co = conf->second == 'E' ? 0.5 : -0.5;
    }
    tf.raw[idx(Feature::CO)] = co;
    tf.raw[idx(Feature::A5)] = s.a5;
    tf.raw[idx(Feature::A6_10)] = s.a6_10;
    tf.raw[idx(Feature::SD)] = s.sd;
    tf.raw[idx(Feature::AP)] = s.ap;
    tf.raw[idx(Feature::VL)] =
        previous ? team_volatility(graph, *previous, team) : 0.0;
    tf.raw[idx(Feature::RV)] = roster_volatility(graph, roster);
    tf.raw[idx(Feature::CC)] = c.team_clustering;
    tf.raw[idx(Feature::RC)] = c.roster_coherence;
    tf.raw[idx(Feature::SI)] = s.si;
    if (s.fewer_than_five) tf.flags.push_back("fewer than five players");
    if (!previous) tf.flags.push_back("no prior year; VL set to 0");
    out.push_back(std::move(tf));
  }
  standardize(out);
  return out;
}

void write_features_csv(std::ostream& out,
                        const std::vector<TeamFeatures>& features) {
  std::vector<std::string> header = {"season", "team"};
  for (const char* name : kFeatureNames) {
    header.emplace_back(name);
    header.push_back(std::string(name) + "_z");
  }
  header.emplace_back("flags");
  write_delimited_row(out, header);
  for (const auto& t : features) {
    std::vector<std::string> row = {std::to_string(t.season), t.team};
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      row.push_back(format_double(t.raw[f]));
      row.push_back(format_double(t.standardized[f]));
    }
    std::string flags;
    for (const auto& fl : t.flags) flags += (flags.empty() ? "" : ";") + fl;
    row.push_back(flags);
    write_delimited_row(out, row);
  }
}

std::vector<TeamFeatures> read_features_csv(const std::filesystem::path& path) {
  const DelimitedTable table = read_delimited_file(path);
  const auto c_team = table.column("team");
  if (!c_team) {
    throw Error(ErrorCode::kMissingColumn, path.string() + ": no team column");
  }
  const auto c_season = table.column("season");
  std::array<std::optional<std::size_t>, kNumFeatures> raw_col;
  std::array<std::optional<std::size_t>, kNumFeatures> z_col;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    raw_col[f] = table.column(kFeatureNames[f]);
    z_col[f] = table.column(std::string(kFeatureNames[f]) + "_z");
  }
  if (!raw_col[idx(Feature::A6_10)]) raw_col[idx(Feature::A6_10)] = table.column("A6-10");

  auto number = [&](std::size_t r, std::size_t c) {
    const auto& row = table.rows[r];
    if (c >= row.size()) {
      throw Error(ErrorCode::kMissingColumn,
                  path.string() + ": line " +
                      std::to_string(table.line_numbers[r]) + " is short");
    }
    double v = 0.0;
    const auto& s = row[c];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ": line " +
                      std::to_string(table.line_numbers[r]) + ": '" + s +
                      "' is not a number");
    }
    return v;
  };

  std::vector<TeamFeatures> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    TeamFeatures tf;
    tf.team = table.rows[r].at(*c_team);
    if (c_season) tf.season = static_cast<int>(number(r, *c_season));
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (raw_col[f]) tf.raw[f] = number(r, *raw_col[f]);
      if (z_col[f]) tf.standardized[f] = number(r, *z_col[f]);
    }
    out.push_back(std::move(tf));
  }

  // Standardize raw-only columns within each season.
  std::map<int, std::vector<std::size_t>> by_season;
  for (std::size_t i = 0; i < out.size(); ++i) by_season[out[i].season].push_back(i);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (z_col[f] || !raw_col[f]) continue;
    for (const auto& [season, rows] : by_season) {
      std::vector<double> column;
      for (std::size_t i : rows) column.push_back(out[i].raw[f]);
      const double m = mean_of(column);
      const double sd = sample_sd(column);
      for (std::size_t i : rows) {
        out[i].standardized[f] = sd > 0 ? (out[i].raw[f] - m) / sd : 0.0;
      }
    }
  }
  return out;
}

}  // namespace luckskill
