#pragma once

#include <utility>
#include <vector>

#include "mctd/sequence.hpp"

namespace mctd {

/// Distributions from E experts over one shared mask.
struct EnsembleProposalSet {
  MaskSet mask;
  std::vector<PositionDistributionSet> per_expert;

  /// E >= 1 and every expert answers exactly the mask.
  void validate(std::size_t alphabet_size) const;
};

/// -sum p ln p with 0 ln 0 = 0 (nats).
double shannon_entropy(const ProbabilityVector& p);

/// Ensemble mutual information (BALD): per masked position, entropy of the
/// expert-averaged distribution minus the mean expert entropy, then
/// averaged over positions. Zero when the experts agree; bounded by
/// ln |alphabet|. Throws ContractViolation for an empty mask.
double ensemble_surprisal(const EnsembleProposalSet& proposals);

struct Bonuses {
  double u_ent = 0.0;
  double u_div = 0.0;
};

/// The two exploration bonuses cached on a child at expansion time.
Bonuses bonus_pair(const Sequence& parent, const Sequence& child,
                   const EnsembleProposalSet& proposals);

}  // namespace mctd
