#pragma once

#include <climits>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "luckskill/corpus.hpp"

namespace luckskill {

// How the raw home score compares with the raw away score.
enum class Comparison { kHomeGreater, kEqual, kHomeLess };

// One table-point outcome. A raw score pair (h, a) falls into this outcome
// when its comparison matches and min_margin <= |h - a| <= max_margin.
struct Outcome {
  std::string label;
  double home_points = 0.0;
  double away_points = 0.0;
  Comparison when = Comparison::kHomeGreater;
  int min_margin = 0;
  int max_margin = INT_MAX;
};

class ScoringScheme {
 public:
  // Throws kInvalidArgument unless the outcomes are mutually exclusive and
  // cover every non-tied raw score pair.
  ScoringScheme(std::string name, std::vector<Outcome> outcomes);

  static ScoringScheme soccer();      // 3 / 1 / 0
  static ScoringScheme basketball();  // 1 / 0, no ties
  static ScoringScheme handball();    // 2 / 1 / 0
  static ScoringScheme volleyball();  // 3 / 0, no ties
  // Built-in lookup by name; throws kInvalidArgument for unknown names.
  static ScoringScheme by_name(const std::string& name);
  static ScoringScheme from_json(const nlohmann::json& j);

  const std::string& name() const { return name_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  std::size_t size() const { return outcomes_.size(); }
  bool allows_ties() const;

  // Outcome index for a raw score pair. Throws kUnclassifiableScore when no
  // outcome applies (a tie under a tie-less scheme).
  std::size_t classify(int home_raw, int away_raw) const;

 private:
  std::string name_;
  std::vector<Outcome> outcomes_;
};

void to_json(nlohmann::json& j, const ScoringScheme& scheme);

// Outcome frequencies for a season. p_home / p_tie / p_away aggregate the
// per-outcome probabilities by comparison kind.
struct ContextProbs {
  std::vector<double> outcome;
  double p_home = 0.0;
  double p_tie = 0.0;
  double p_away = 0.0;
  std::size_t n_matches = 0;

  static ContextProbs from_counts(const std::vector<std::size_t>& counts,
                                  const ScoringScheme& scheme);
  // For schemes with at most one outcome per comparison kind.
  static ContextProbs from_home_tie_away(const ScoringScheme& scheme,
                                         double p_home, double p_tie,
                                         double p_away);
};

ContextProbs estimate_context_probs(const SeasonView& season,
                                    const ScoringScheme& scheme);

struct BaselineMoments {
  double mu_home = 0.0;
  double var_home = 0.0;
  double mu_away = 0.0;
  double var_away = 0.0;
  double mu_2k = 0.0;
  double var_2k = 0.0;
  int k = 0;
};

// Exact moments of the per-game table points under the random model and of
// the season total after k home and k away games.
BaselineMoments moments(const ContextProbs& probs, const ScoringScheme& scheme,
                        int k);

}  // namespace luckskill
