#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mctd/config.hpp"
#include "mctd/evaluation.hpp"
#include "mctd/experts.hpp"
#include "mctd/masking.hpp"
#include "mctd/replay.hpp"
#include "mctd/tree.hpp"
#include "mctd/uncertainty.hpp"

namespace mctd {

struct ExpansionContext {
  const RunConfig& cfg;
  /// Experts active for the run's mode; empty in random_no_expert.
  std::span<const std::shared_ptr<Expert>> experts;
  const CriticPanel& panel;
  EvaluationCache& cache;
  const ConfidenceProvider& confidence;
  /// Source of fresh node ids.
  std::uint64_t& next_node_id;
};

struct ExpansionResult {
  ConfidenceProfile confidence;
  MaskSet mask;
  double u_ent = 0.0;
  /// Pooled candidates before de-duplication.
  std::size_t pool_size = 0;
  /// Unique candidates (parent excluded) in pooling order.
  std::vector<CandidateRecord> candidates;
  /// New children in rank order.
  std::vector<TreeNode*> children;
};

/// One distribution set per distinct expert (first reply wins), in first-
/// appearance order. All replies must share `mask`.
EnsembleProposalSet pooled_proposals(const MaskSet& mask, std::span<const ExpertReply> replies);

/// Indices of the best `k` entries by score, descending; ties go to the
/// lexicographically smaller sequence.
std::vector<std::size_t> rank_top_k(std::span<const Sequence> sequences,
                                    std::span<const double> scores, std::size_t k);

/// Masks the node, pools E x k expert rollouts (or n_cand uniform fills in
/// random_no_expert), de-duplicates, scores through the cache, keeps the
/// top K and attaches them as children with cached bonuses. An empty
/// `children` list means nothing new was proposed.
ExpansionResult expand(TreeNode& node, ExpansionContext& ctx);

}  // namespace mctd
