#include "mctd/expansion.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "mctd/error.hpp"
#include "mctd/rng.hpp"

namespace mctd {

namespace {

constexpr std::string_view kRandomFillId = "random";

struct Pooled {
  Sequence sequence;
  std::string expert_id;
  std::size_t rollout;
};

}  // namespace

EnsembleProposalSet pooled_proposals(const MaskSet& mask, std::span<const ExpertReply> replies) {
  EnsembleProposalSet out{mask, {}};
  std::unordered_set<std::string> seen;
  for (const auto& reply : replies) {
    const auto& d = reply.distributions;
    MCTD_EXPECTS(d.entries.size() == mask.size(), "pooled_proposals: reply mask mismatch");
    for (std::size_t i : mask)
      MCTD_EXPECTS(d.entries.count(i), "pooled_proposals: reply mask mismatch");
    if (seen.insert(d.expert_id).second) out.per_expert.push_back(d);
  }
  return out;
}

std::vector<std::size_t> rank_top_k(std::span<const Sequence> sequences,
                                    std::span<const double> scores, std::size_t k) {
  MCTD_EXPECTS(sequences.size() == scores.size(), "rank_top_k: size mismatch");
  std::vector<std::size_t> idx(sequences.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return sequences[a] < sequences[b];
  });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

ExpansionResult expand(TreeNode& node, ExpansionContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  MCTD_EXPECTS(!node.terminal, "expand: node is terminal");
  MCTD_EXPECTS(node.depth < cfg.max_depth, "expand: node at max depth");

  ExpansionResult result;
  result.confidence = ctx.confidence.profile(node.sequence, node.id);
  result.mask = get_mask_set(result.confidence, MaskSchedule::from_config(cfg), node.depth);
  if (result.mask.empty()) return result;

  std::vector<Pooled> pool;
  if (cfg.mode == Mode::random_no_expert || ctx.experts.empty()) {
    const Alphabet& alphabet = Alphabet::amino_acids();
    for (std::size_t r = 0; r < cfg.n_cand; ++r) {
      SplitMix64 rng(rollout_seed(cfg.seed, node.id, kRandomFillId, r));
      std::map<std::size_t, char> fill;
      for (std::size_t i : result.mask) fill.emplace(i, alphabet.symbol_at(rng.below(alphabet.size())));
      pool.push_back({splice(node.sequence, result.mask, fill), std::string(kRandomFillId), r});
    }
    result.u_ent = 0.0;
  } else {
    const double temperature = cfg.decoding == Decoding::argmax ? 0.0 : cfg.temperature;
    std::vector<ExpertReply> replies;
    replies.reserve(ctx.experts.size() * cfg.rollouts_per_expert);
    for (const auto& expert : ctx.experts) {
      for (std::size_t r = 0; r < cfg.rollouts_per_expert; ++r) {
        ExpertQuery q{node.sequence, result.mask, temperature,
                      rollout_seed(cfg.seed, node.id, expert->id(), r)};
        ExpertReply reply = expert->propose(q);
        try {
          reply.validate(result.mask, expert->alphabet());
        } catch (const ContractViolation& e) {
          throw ExpertFailure(expert->id(), std::string("invalid reply: ") + e.what());
        }
        reply.distributions.expert_id = expert->id();
        pool.push_back({splice(node.sequence, result.mask, reply.sample), expert->id(), r});
        replies.push_back(std::move(reply));
      }
    }
    // The bonus uses untempered distributions.
    EnsembleProposalSet proposals;
    if (temperature == 1.0) {
      proposals = pooled_proposals(result.mask, replies);
    } else {
      proposals.mask = result.mask;
      std::unordered_set<std::string> seen;
      for (const auto& expert : ctx.experts) {
        if (!seen.insert(expert->id()).second) continue;
        auto d = expert->distributions(node.sequence, result.mask);
        d.expert_id = expert->id();
        proposals.per_expert.push_back(std::move(d));
      }
    }
    result.u_ent = ensemble_surprisal(proposals);
  }
  result.pool_size = pool.size();

  // First occurrence wins; candidates identical to the parent are dropped.
  std::unordered_set<std::string> seen{node.sequence.str()};
  std::vector<Sequence> unique_seqs;
  std::vector<double> scores;
  for (auto& p : pool) {
    if (!seen.insert(p.sequence.str()).second) continue;
    CandidateRecord rec;
    rec.report = ctx.cache.evaluate(p.sequence, ctx.panel);
    rec.sequence = p.sequence;
    rec.expert_id = p.expert_id;
    rec.rollout = p.rollout;
    rec.u_div = normalized_hamming(node.sequence, p.sequence);
    unique_seqs.push_back(p.sequence);
    scores.push_back(rec.report.composite);
    result.candidates.push_back(std::move(rec));
  }

  for (std::size_t idx : rank_top_k(unique_seqs, scores, cfg.K)) {
    auto& rec = result.candidates[idx];
    rec.kept = true;
    TreeNode& child = node.add_child(ctx.next_node_id++, rec.sequence, rec.report.composite,
                                     result.u_ent, rec.u_div,
                                     Provenance{rec.expert_id, rec.rollout});
    if (child.depth >= cfg.max_depth) {
      child.terminal = true;
      child.exhausted = true;
    }
    result.children.push_back(&child);
  }
  return result;
}

}  // namespace mctd
