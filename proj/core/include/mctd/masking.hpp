#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>

#include "mctd/sequence.hpp"

namespace mctd {

class Expert;
struct RunConfig;

/// Linear confidence-threshold schedule: masking starts permissive at the
/// root and tightens as depth grows.
struct MaskSchedule {
  double tau_hi = 70.0;
  double tau_lo = 30.0;
  std::size_t max_depth = 5;
  std::size_t min_mask = 1;
  double max_mask_fraction = 0.5;

  static MaskSchedule from_config(const RunConfig& cfg);
  void validate() const;
};

double threshold_at(const MaskSchedule& schedule, std::size_t depth);

/// Positions whose confidence is below the depth's threshold, floored at
/// `min_mask` and capped at ceil(max_mask_fraction * L). Both adjustments
/// keep the lowest-confidence positions, ties broken by lower index.
MaskSet get_mask_set(const ConfidenceProfile& profile, const MaskSchedule& schedule,
                     std::size_t depth);

/// Leave-one-out ensemble self-agreement: for each position, mask it alone
/// and average the experts' probability of the current token, times 100.
ConfidenceProfile confidence_from_ensemble(const Sequence& sequence,
                                           std::span<const std::shared_ptr<Expert>> experts);

/// Source of the per-residue confidence that drives masking.
class ConfidenceProvider {
 public:
  virtual ~ConfidenceProvider() = default;
  /// `node_id` lets stochastic providers stay deterministic per node.
  virtual ConfidenceProfile profile(const Sequence& sequence, std::uint64_t node_id) const = 0;
};

/// Ensemble self-agreement over a fixed expert set.
class EnsembleConfidence final : public ConfidenceProvider {
 public:
  explicit EnsembleConfidence(std::vector<std::shared_ptr<Expert>> experts);
  ConfidenceProfile profile(const Sequence& sequence, std::uint64_t node_id) const override;

 private:
  std::vector<std::shared_ptr<Expert>> experts_;
};

/// Uninformed profile for runs without experts: i.i.d. uniform values in
/// [0, 100) drawn from hash(seed, node id).
class RandomConfidence final : public ConfidenceProvider {
 public:
  explicit RandomConfidence(std::uint64_t seed) : seed_(seed) {}
  ConfidenceProfile profile(const Sequence& sequence, std::uint64_t node_id) const override;

 private:
  std::uint64_t seed_;
};

/// Externally supplied profile (e.g. real pLDDT for the root sequence),
/// returned verbatim for every node.
class FixedConfidence final : public ConfidenceProvider {
 public:
  explicit FixedConfidence(ConfidenceProfile profile) : profile_(std::move(profile)) {}
  ConfidenceProfile profile(const Sequence& sequence, std::uint64_t node_id) const override;

 private:
  ConfidenceProfile profile_;
};

}  // namespace mctd
