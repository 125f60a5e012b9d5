#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trajgame/types.hpp"

namespace trajgame {

inline constexpr double kMinTypeProbability = 1e-12;
inline constexpr double kProbabilitySumTol = 1e-9;

/// Common prior over joint types. Stores one marginal vector per agent and,
/// optionally, pairwise joint tables p(t_i, t_j) for agent pairs i < j.
/// Pairs without a stored table default to the independence product.
///
/// Marginals must be strictly positive; pairwise tables must marginalize to
/// the stored marginals. Construction validates both.
class BeliefPrior {
 public:
  BeliefPrior() = default;

  explicit BeliefPrior(std::vector<std::vector<double>> marginals)
      : marginals_(std::move(marginals)) {
    validate_marginals();
  }

  static BeliefPrior independent(std::vector<std::vector<double>> marginals) {
    return BeliefPrior(std::move(marginals));
  }

  /// Attach an explicit joint table for agent pair (i, j), i < j, with
  /// table(a, b) = p(t_i = a, t_j = b).
  void set_pair_table(AgentId i, AgentId j, MatX table) {
    if (i >= j) throw ConfigError("prior.pair_table: requires agent i < j");
    check_pair_consistency(i, j, table);
    pair_tables_[{i, j}] = std::move(table);
  }

  int num_agents() const { return static_cast<int>(marginals_.size()); }

  int num_types(AgentId i) const {
    return static_cast<int>(marginals_.at(i).size());
  }

  double marginal(AgentId i, int type) const { return marginals_.at(i).at(type); }

  const std::vector<double>& marginals(AgentId i) const {
    return marginals_.at(i);
  }

  /// Pairwise joint p(t_i = a, t_j = b) for distinct agents.
  double pair(AgentId i, int a, AgentId j, int b) const {
    if (i == j) throw ConfigError("prior.pair: agents must be distinct");
    if (i > j) return pair(j, b, i, a);
    const auto it = pair_tables_.find({i, j});
    if (it == pair_tables_.end()) return marginal(i, a) * marginal(j, b);
    return it->second(a, b);
  }

  /// Conditional p(t_j = b | t_i = a) = p(t_i, t_j) / p(t_i).
  double conditional(AgentId j, int b, AgentId i, int a) const {
    return pair(i, a, j, b) / marginal(i, a);
  }

  bool has_pair_table(AgentId i, AgentId j) const {
    if (i > j) std::swap(i, j);
    return pair_tables_.count({i, j}) > 0;
  }

 private:
  void validate_marginals() const {
    for (std::size_t i = 0; i < marginals_.size(); ++i) {
      const auto& m = marginals_[i];
      if (m.empty())
        throw ConfigError("prior.marginals[" + std::to_string(i) + "]: empty");
      double sum = 0.0;
      for (double p : m) {
        if (!(p > kMinTypeProbability))
          throw ConfigError("prior.marginals[" + std::to_string(i) +
                            "]: entries must be strictly positive");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbabilitySumTol)
        throw ConfigError("prior.marginals[" + std::to_string(i) +
                          "]: sums to " + std::to_string(sum) + ", not 1");
    }
  }

  void check_pair_consistency(AgentId i, AgentId j, const MatX& table) const {
    if (table.rows() != num_types(i) || table.cols() != num_types(j))
      throw ConfigError("prior.pair_table: shape mismatch for agents " +
                        std::to_string(i) + "," + std::to_string(j));
    if ((table.array() < 0.0).any())
      throw ConfigError("prior.pair_table: negative entry");
    for (int a = 0; a < table.rows(); ++a) {
      if (std::abs(table.row(a).sum() - marginal(i, a)) > kProbabilitySumTol)
        throw ConfigError("prior.pair_table: row " + std::to_string(a) +
                          " does not marginalize to p(t_" + std::to_string(i) +
                          ")");
    }
    for (int b = 0; b < table.cols(); ++b) {
      if (std::abs(table.col(b).sum() - marginal(j, b)) > kProbabilitySumTol)
        throw ConfigError("prior.pair_table: column " + std::to_string(b) +
                          " does not marginalize to p(t_" + std::to_string(j) +
                          ")");
    }
  }

  std::vector<std::vector<double>> marginals_;
  std::map<std::pair<AgentId, AgentId>, MatX> pair_tables_;
};

}  // namespace trajgame
