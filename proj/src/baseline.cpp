#include "luckskill/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <utility>

#include <nlohmann/json.hpp>

#include "luckskill/error.hpp"

namespace luckskill {

namespace {

const char* comparison_name(Comparison c) {
  switch (c) {
    case Comparison::kHomeGreater: return "greater";
    case Comparison::kEqual: return "equal";
    case Comparison::kHomeLess: return "less";
  }
  return "greater";
}

Comparison parse_comparison(const std::string& s) {
  if (s == "greater") return Comparison::kHomeGreater;
  if (s == "equal") return Comparison::kEqual;
  if (s == "less") return Comparison::kHomeLess;
  throw Error(ErrorCode::kInvalidArgument,
              "classify rule must be greater, equal or less, got '" + s + "'");
}

void validate_outcomes(const std::string& name,
                       const std::vector<Outcome>& outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "scheme '" + name + "' is empty");
  }
  int equal_rules = 0;
  for (const Outcome& o : outcomes) {
    if (o.min_margin > o.max_margin || o.min_margin < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scheme '" + name + "': bad margin range for '" + o.label +
                      "'");
    }
    if (o.when == Comparison::kEqual) ++equal_rules;
  }
  if (equal_rules > 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "scheme '" + name + "' has more than one tie outcome");
  }
  // Decisive results must be covered by disjoint margin ranges [1, inf).
  for (Comparison kind : {Comparison::kHomeGreater, Comparison::kHomeLess}) {
    std::vector<std::pair<int, int>> ranges;
    for (const Outcome& o : outcomes) {
      if (o.when == kind) {
        ranges.emplace_back(std::max(1, o.min_margin), o.max_margin);
      }
    }
    std::sort(ranges.begin(), ranges.end());
    long long next = 1;
    for (const auto& [lo, hi] : ranges) {
      if (lo != next) {
        throw Error(ErrorCode::kInvalidArgument,
                    "scheme '" + name + "': '" + comparison_name(kind) +
                        "' outcomes overlap or leave a gap at margin " +
                        std::to_string(next));
      }
      next = static_cast<long long>(hi) + 1;
    }
    if (next != static_cast<long long>(INT_MAX) + 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scheme '" + name + "': '" + comparison_name(kind) +
                      "' outcomes do not cover every margin");
    }
  }
}

}  // namespace

ScoringScheme::ScoringScheme(std::string name, std::vector<Outcome> outcomes)
    : name_(std::move(name)), outcomes_(std::move(outcomes)) {
  validate_outcomes(name_, outcomes_);
}

ScoringScheme ScoringScheme::soccer() {
  return ScoringScheme("soccer",
                       {{"home_win", 3, 0, Comparison::kHomeGreater},
                        {"tie", 1, 1, Comparison::kEqual},
                        {"away_win", 0, 3, Comparison::kHomeLess}});
}

ScoringScheme ScoringScheme::basketball() {
  return ScoringScheme("basketball",
                       {{"home_win", 1, 0, Comparison::kHomeGreater},
                        {"away_win", 0, 1, Comparison::kHomeLess}});
}

ScoringScheme ScoringScheme::handball() {
  return ScoringScheme("handball",
                       {{"home_win", 2, 0, Comparison::kHomeGreater},
                        {"tie", 1, 1, Comparison::kEqual},
                        {"away_win", 0, 2, Comparison::kHomeLess}});
}

ScoringScheme ScoringScheme::volleyball() {
  return ScoringScheme("volleyball",
                       {{"home_win", 3, 0, Comparison::kHomeGreater},
                        {"away_win", 0, 3, Comparison::kHomeLess}});
}

ScoringScheme ScoringScheme::by_name(const std::string& name) {
  if (name == "soccer") return soccer();
  if (name == "basketball") return basketball();
  if (name == "handball") return handball();
  if (name == "volleyball") return volleyball();
  throw Error(ErrorCode::kInvalidArgument, "unknown scoring scheme '" + name +
                                               "' (built-ins: soccer, "
                                               "basketball, handball, "
                                               "volleyball)");
}

ScoringScheme ScoringScheme::from_json(const nlohmann::json& j) {
  try {
    std::vector<Outcome> outcomes;
    for (const auto& o : j.at("outcomes")) {
      Outcome out;
      out.label = o.at("label").get<std::string>();
      out.home_points = o.at("home_points").get<double>();
      out.away_points = o.at("away_points").get<double>();
      out.when = parse_comparison(o.at("when").get<std::string>());
      out.min_margin = o.value("min_margin", 0);
      out.max_margin = o.value("max_margin", INT_MAX);
      outcomes.push_back(std::move(out));
    }
    return ScoringScheme(j.at("name").get<std::string>(), std::move(outcomes));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed scoring scheme: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const ScoringScheme& scheme) {
  j = nlohmann::json{{"name", scheme.name()}, {"outcomes", nlohmann::json::array()}};
  for (const Outcome& o : scheme.outcomes()) {
    nlohmann::json oj{{"label", o.label},
                      {"home_points", o.home_points},
                      {"away_points", o.away_points},
                      {"when", comparison_name(o.when)}};
    if (o.min_margin != 0) oj["min_margin"] = o.min_margin;
    if (o.max_margin != INT_MAX) oj["max_margin"] = o.max_margin;
    j["outcomes"].push_back(std::move(oj));
  }
}

bool ScoringScheme::allows_ties() const {
  return std::any_of(outcomes_.begin(), outcomes_.end(), [](const Outcome& o) {
    return o.when == Comparison::kEqual;
  });
}

std::size_t ScoringScheme::classify(int home_raw, int away_raw) const {
  const Comparison kind = home_raw > away_raw   ? Comparison::kHomeGreater
                          : home_raw < away_raw ? Comparison::kHomeLess
                                                : Comparison::kEqual;
  const int margin = std::abs(home_raw - away_raw);
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    const Outcome& o = outcomes_[i];
    if (o.when != kind) continue;
    if (kind == Comparison::kEqual ||
        (margin >= o.min_margin && margin <= o.max_margin)) {
      return i;
    }
  }
  throw Error(ErrorCode::kUnclassifiableScore,
              "score " + std::to_string(home_raw) + "-" +
                  std::to_string(away_raw) + " has no outcome under '" +
                  name_ + "'");
}

ContextProbs ContextProbs::from_counts(const std::vector<std::size_t>& counts,
                                       const ScoringScheme& scheme) {
  ContextProbs p;
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0) {
    throw Error(ErrorCode::kEmptySeason, "no matches to estimate probabilities");
  }
  p.n_matches = total;
  p.outcome.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p.outcome[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    switch (scheme.outcomes()[i].when) {
      case Comparison::kHomeGreater: p.p_home += p.outcome[i]; break;
      case Comparison::kEqual: p.p_tie += p.outcome[i]; break;
      case Comparison::kHomeLess: p.p_away += p.outcome[i]; break;
    }
  }
  return p;
}

ContextProbs ContextProbs::from_home_tie_away(const ScoringScheme& scheme,
                                              double p_home, double p_tie,
                                              double p_away) {
  if (p_home < 0 || p_tie < 0 || p_away < 0 ||
      std::abs(p_home + p_tie + p_away - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument,
                "context probabilities must be non-negative and sum to 1");
  }
  if (!scheme.allows_ties() && p_tie > 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "scheme '" + scheme.name() + "' has no ties but P_t > 0");
  }
  ContextProbs p;
  p.p_home = p_home;
  p.p_tie = p_tie;
  p.p_away = p_away;
  p.outcome.assign(scheme.size(), 0.0);
  int seen[3] = {0, 0, 0};
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const Comparison kind = scheme.outcomes()[i].when;
    if (++seen[static_cast<int>(kind)] > 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scheme '" + scheme.name() +
                      "' splits an outcome kind; give per-outcome "
                      "probabilities instead");
    }
    p.outcome[i] = kind == Comparison::kHomeGreater ? p_home
                   : kind == Comparison::kEqual     ? p_tie
                                                    : p_away;
  }
  return p;
}

ContextProbs estimate_context_probs(const SeasonView& season,
                                    const ScoringScheme& scheme) {
  if (season.matches.empty()) {
    throw Error(ErrorCode::kEmptySeason,
                season.league_id + "/" + season.season_id + " has no matches");
  }
  std::vector<std::size_t> counts(scheme.size(), 0);
  for (const auto& m : season.matches) {
    ++counts[scheme.classify(m.home_points_raw, m.away_points_raw)];
  }
  return ContextProbs::from_counts(counts, scheme);
}

BaselineMoments moments(const ContextProbs& probs, const ScoringScheme& scheme,
                        int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (probs.outcome.size() != scheme.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "probabilities do not match scheme '" + scheme.name() + "'");
  }
  BaselineMoments m;
  m.k = k;
  double second_home = 0.0;
  double second_away = 0.0;
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const Outcome& o = scheme.outcomes()[i];
    const double p = probs.outcome[i];
    m.mu_home += p * o.home_points;
    m.mu_away += p * o.away_points;
    second_home += p * o.home_points * o.home_points;
    second_away += p * o.away_points * o.away_points;
  }
  // Round-off can leave a tiny negative value for degenerate distributions.
  m.var_home = std::max(0.0, second_home - m.mu_home * m.mu_home);
  m.var_away = std::max(0.0, second_away - m.mu_away * m.mu_away);
  m.mu_2k = k * (m.mu_home + m.mu_away);
  m.var_2k = k * (m.var_home + m.var_away);
  return m;
}

}  // namespace luckskill
