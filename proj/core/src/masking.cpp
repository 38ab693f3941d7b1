#include "mctd/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mctd/config.hpp"
#include "mctd/error.hpp"
#include "mctd/experts.hpp"
#include "mctd/rng.hpp"

namespace mctd {

MaskSchedule MaskSchedule::from_config(const RunConfig& cfg) {
  return {cfg.tau_hi, cfg.tau_lo, cfg.max_depth, cfg.min_mask, cfg.max_mask_fraction};
}

void MaskSchedule::validate() const {
  if (tau_hi < tau_lo) throw ConfigError("tau_hi", "tau_hi must be >= tau_lo");
  MCTD_EXPECTS(tau_lo >= 0.0 && tau_hi <= 100.0, "mask schedule: thresholds outside [0, 100]");
  MCTD_EXPECTS(max_depth >= 1, "mask schedule: max_depth must be >= 1");
  MCTD_EXPECTS(max_mask_fraction > 0.0 && max_mask_fraction <= 1.0,
               "mask schedule: max_mask_fraction outside (0, 1]");
}

double threshold_at(const MaskSchedule& schedule, std::size_t depth) {
  MCTD_EXPECTS(depth <= schedule.max_depth, "threshold_at: depth beyond max_depth");
  return schedule.tau_hi - (schedule.tau_hi - schedule.tau_lo) * static_cast<double>(depth) /
                               static_cast<double>(schedule.max_depth);
}

MaskSet get_mask_set(const ConfidenceProfile& profile, const MaskSchedule& schedule,
                     std::size_t depth) {
  schedule.validate();
  const double tau = threshold_at(schedule, depth);
  const std::size_t len = profile.size();

  // Positions in ascending (confidence, index) order.
  std::vector<std::size_t> order(len);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return profile[a] < profile[b]; });

  std::size_t count = 0;
  for (std::size_t i = 0; i < len; ++i) count += profile[i] < tau;

  const auto cap = static_cast<std::size_t>(
      std::ceil(schedule.max_mask_fraction * static_cast<double>(len) - 1e-9));
  if (count > cap) count = cap;
  // The floor applies only to an empty threshold set, and wins over the cap.
  if (count == 0) count = std::min(schedule.min_mask, len);

  // Every below-threshold position precedes every other one in `order`,
  // so a prefix is exactly "filter, then keep the lowest".
  std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  return MaskSet(std::move(picked), len);
}

ConfidenceProfile confidence_from_ensemble(const Sequence& sequence,
                                           std::span<const std::shared_ptr<Expert>> experts) {
  MCTD_EXPECTS(!experts.empty(), "confidence_from_ensemble: no experts");
  std::vector<double> values(sequence.length(), 0.0);
  for (std::size_t i = 0; i < sequence.length(); ++i) {
    const MaskSet single({i}, sequence.length());
    double mean = 0.0;
    for (const auto& expert : experts) {
      const auto dists = expert->distributions(sequence, single);
      const auto& p = dists.entries.at(i);
      mean += p[expert->alphabet().index_of(sequence[i])];
    }
    values[i] = std::clamp(100.0 * mean / static_cast<double>(experts.size()), 0.0, 100.0);
  }
  return ConfidenceProfile(std::move(values));
}

EnsembleConfidence::EnsembleConfidence(std::vector<std::shared_ptr<Expert>> experts)
    : experts_(std::move(experts)) {
  MCTD_EXPECTS(!experts_.empty(), "EnsembleConfidence: no experts");
}

ConfidenceProfile EnsembleConfidence::profile(const Sequence& sequence, std::uint64_t) const {
  return confidence_from_ensemble(sequence, experts_);
}

ConfidenceProfile RandomConfidence::profile(const Sequence& sequence,
                                            std::uint64_t node_id) const {
  SplitMix64 rng(hash_combine(mix64(seed_ ^ 0xC0FFEEULL), node_id));
  std::vector<double> values(sequence.length());
  for (double& v : values) v = 100.0 * rng.uniform();
  return ConfidenceProfile(std::move(values));
}

ConfidenceProfile FixedConfidence::profile(const Sequence& sequence, std::uint64_t) const {
  MCTD_EXPECTS(profile_.size() == sequence.length(), "FixedConfidence: length mismatch");
  return profile_;
}

}  // namespace mctd
