#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mctd/config.hpp"
#include "mctd/evaluation.hpp"
#include "mctd/experts.hpp"
#include "mctd/masking.hpp"
#include "mctd/replay.hpp"
#include "mctd/tree.hpp"

namespace mctd {

/// Q(child) + c_p * sqrt(ln N(parent)) / (1 + N(child)) *
/// (w_ent * u_ent + w_div * u_div + epsilon_floor).
/// Uses the child's cached bonuses. Throws if N(parent) == 0.
double ph_ucb_me_score(const TreeNode& parent, const TreeNode& child, const RunConfig& cfg);

/// Greedy descent by ph_ucb_me_score over non-exhausted children, lowest
/// insertion index on ties. Stops at a leaf or at max depth.
TreeNode& select_leaf(TreeNode& root, const RunConfig& cfg);

/// Walks from `leaf_child` to the root: N += 1 and Q = max(Q, value), or,
/// for BackupRule::sum, Q = running mean of backed-up values.
void backpropagate(TreeNode& leaf_child, double value, BackupRule rule);

struct SearchResult {
  std::vector<RankedSequence> ranked;
  std::size_t simulations_used = 0;
  /// The tree ran out of expandable nodes before the budget was spent.
  bool exhausted = false;
  std::size_t nodes = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
};

/// The experts a mode uses: none, the indexed one, or all E of them.
/// Throws ConfigError naming `experts`, `single_expert_index` or `E`.
std::vector<std::shared_ptr<Expert>> select_active_experts(
    const RunConfig& cfg, std::vector<std::shared_ptr<Expert>> experts);

/// Owns the tree and every mutation of it (single writer).
class Search {
 public:
  /// `experts` is the full configured set; the mode picks the active subset.
  /// A null `confidence` selects ensemble self-agreement (or random
  /// confidence when no experts are active).
  Search(const RunConfig& cfg, Sequence root, std::vector<std::shared_ptr<Expert>> experts,
         CriticPanel panel, std::unique_ptr<ConfidenceProvider> confidence = nullptr,
         ReplayLog* log = nullptr);

  /// One select-expand-evaluate-backpropagate iteration. Returns false when
  /// nothing is left to expand.
  bool step();
  SearchResult run();

  const TreeNode& root() const noexcept { return *root_; }
  const EvaluationCache& cache() const noexcept { return cache_; }
  const RunConfig& config() const noexcept { return cfg_; }
  const std::vector<std::shared_ptr<Expert>>& active_experts() const noexcept { return active_; }
  std::size_t simulations_used() const noexcept { return simulations_; }

  std::vector<RankedSequence> ranked() const;

 private:
  RunConfig cfg_;
  std::vector<std::shared_ptr<Expert>> active_;
  CriticPanel panel_;
  std::unique_ptr<ConfidenceProvider> confidence_;
  ReplayLog* log_;
  EvaluationCache cache_;
  std::unique_ptr<TreeNode> root_;
  std::uint64_t next_node_id_ = 1;
  std::size_t simulations_ = 0;
};

SearchResult run_search(const RunConfig& cfg, const Sequence& root,
                        std::vector<std::shared_ptr<Expert>> experts, const CriticPanel& panel,
                        ReplayLog* log = nullptr);

}  // namespace mctd
