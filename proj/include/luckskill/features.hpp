#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "luckskill/corpus.hpp"

namespace luckskill {

enum class Feature : std::size_t { CO, A5, A6_10, SD, AP, VL, RV, CC, RC, SI };
inline constexpr std::size_t kNumFeatures = 10;

const char* feature_name(Feature f);
// Accepts the canonical names plus "A6-10" and "A6" for A6_10.
Feature parse_feature(const std::string& name);
std::vector<Feature> parse_feature_list(const std::string& comma_separated);

// Player/team graph for one year. Nodes are the players active in that year
// and the teams seen in the window; players [0, P) come before teams.
//  - two players are adjacent if they shared a roster in any season of
//    [year - window, year];
//  - a player is adjacent to every team they were rostered on in that window.
class AffiliationGraph {
 public:
  AffiliationGraph() = default;

  int year() const { return year_; }
  const std::vector<std::string>& players() const { return players_; }
  const std::vector<std::string>& teams() const { return teams_; }
  std::size_t n_nodes() const { return adjacency_.size(); }

  std::optional<std::size_t> player_node(const std::string& player) const;
  std::optional<std::size_t> team_node(const std::string& team) const;
  const std::vector<std::size_t>& neighbors(std::size_t node) const {
    return adjacency_[node];
  }
  std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }
  bool has_edge(std::size_t u, std::size_t v) const;
  std::size_t n_edges() const;

  // Fraction of neighbor pairs that are adjacent; 0 below two neighbors.
  double local_clustering(std::size_t node) const;

  friend AffiliationGraph build_graph(const std::vector<RosterRecord>& rosters,
                                      int year, int window);

 private:
  int year_ = 0;
  std::vector<std::string> players_;
  std::vector<std::string> teams_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

inline constexpr int kDefaultWindow = 6;

// Throws kEmptyWindow when no roster rows fall in the window or nobody is
// active in `year`.
AffiliationGraph build_graph(const std::vector<RosterRecord>& rosters, int year,
                             int window = kDefaultWindow);

// Change of the team's degree since the previous year's graph. A team that
// is absent from a graph counts as degree 0. Throws kMissingPriorYear when
// the graphs are not consecutive years.
double team_volatility(const AffiliationGraph& current,
                       const AffiliationGraph& previous,
                       const std::string& team);

// Players rostered by `team` in `year`, deduplicated, sorted by id.
std::vector<RosterRecord> team_roster(const std::vector<RosterRecord>& rosters,
                                      const std::string& team, int year);

// Sum over the roster of player degree / career length; rookies (career
// length 0) use a denominator of 1.
double roster_volatility(const AffiliationGraph& graph,
                         const std::vector<RosterRecord>& roster);

struct ClusteringFeatures {
  double team_clustering = 0.0;    // CC
  double roster_coherence = 0.0;   // RC
};

ClusteringFeatures team_clustering(const AffiliationGraph& graph,
                                   const std::string& team,
                                   const std::vector<RosterRecord>& roster);

struct SalaryFeatures {
  double a5 = 0.0;
  double a6_10 = 0.0;
  double sd = 0.0;
  double ap = 0.0;
  double si = 0.0;
  // Fewer than five players: A5 averages the salaries available.
  bool fewer_than_five = false;
  // Fewer than ten players: A6_10 averages ranks 6.. available (0 if none).
  bool fewer_than_ten = false;
};

// Throws kInvalidArgument for an empty roster.
SalaryFeatures salary_per_features(const std::vector<RosterRecord>& roster);

// team -> 'E' or 'W'. Columns: team,conference (optionally season).
std::map<std::string, char> load_conferences(const std::filesystem::path& path);

struct TeamFeatures {
  int season = 0;
  std::string team;
  std::array<double, kNumFeatures> raw{};
  std::array<double, kNumFeatures> standardized{};
  std::vector<std::string> flags;

  double raw_value(Feature f) const { return raw[static_cast<std::size_t>(f)]; }
  double z(Feature f) const { return standardized[static_cast<std::size_t>(f)]; }
};

struct FeatureOptions {
  int window = kDefaultWindow;
  // When the previous year has no rosters, set VL to 0 instead of throwing.
  bool allow_missing_prior = false;
};

// All ten features for every team rostered in `year`, standardized across
// those teams (sample standard deviation). CO is +0.5 for East and -0.5 for
// West before standardization; teams without a conference get 0.
std::vector<TeamFeatures> compute_features(
    const std::vector<RosterRecord>& rosters, int year,
    const std::map<std::string, char>& conferences,
    const FeatureOptions& options = {});

// In-place (x - mean) / sd per feature column; constant columns become 0.
void standardize(std::vector<TeamFeatures>& features);

void write_features_csv(std::ostream& out,
                        const std::vector<TeamFeatures>& features);

// Reads a file written by write_features_csv. Columns missing from the file
// are left at 0; when a "<name>_z" column is absent the raw column is
// standardized per season.
std::vector<TeamFeatures> read_features_csv(const std::filesystem::path& path);

}  // namespace luckskill
