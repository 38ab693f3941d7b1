#include "mctd/uncertainty.hpp"

#include <cmath>

#include "mctd/error.hpp"

namespace mctd {

void EnsembleProposalSet::validate(std::size_t alphabet_size) const {
  MCTD_EXPECTS(!per_expert.empty(), "ensemble needs at least one expert");
  for (const auto& d : per_expert) d.validate(mask, alphabet_size);
}

double shannon_entropy(const ProbabilityVector& p) {
  check_distribution(p);
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h < 0.0 ? 0.0 : h;
}

double ensemble_surprisal(const EnsembleProposalSet& proposals) {
  MCTD_EXPECTS(!proposals.mask.empty(), "ensemble_surprisal: empty mask");
  MCTD_EXPECTS(!proposals.per_expert.empty(), "ensemble_surprisal: no experts");
  const std::size_t alphabet_size =
      proposals.per_expert.front().entries.begin()->second.size();
  proposals.validate(alphabet_size);

  const double e = static_cast<double>(proposals.per_expert.size());
  double total = 0.0;
  ProbabilityVector mean(alphabet_size);
  for (std::size_t pos : proposals.mask) {
    std::fill(mean.begin(), mean.end(), 0.0);
    double mean_entropy = 0.0;
    for (const auto& expert : proposals.per_expert) {
      const auto& p = expert.entries.at(pos);
      for (std::size_t a = 0; a < alphabet_size; ++a) mean[a] += p[a] / e;
      mean_entropy += shannon_entropy(p) / e;
    }
    double b = shannon_entropy(mean) - mean_entropy;
    // Mutual information is non-negative; tolerate rounding only.
    MCTD_EXPECTS(b >= -1e-12, "ensemble_surprisal: negative mutual information");
    total += b < 0.0 ? 0.0 : b;
  }
  return total / static_cast<double>(proposals.mask.size());
}

Bonuses bonus_pair(const Sequence& parent, const Sequence& child,
                   const EnsembleProposalSet& proposals) {
  return {ensemble_surprisal(proposals), normalized_hamming(parent, child)};
}

}  // namespace mctd
