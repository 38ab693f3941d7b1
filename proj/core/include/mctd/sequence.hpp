#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mctd/alphabet.hpp"

namespace mctd {

/// A complete token string. Never carries mask placeholders; masking is a
/// transient view produced during expansion.
class Sequence {
 public:
  Sequence() = default;
  /// Validates every token against `alphabet`. Lowercase input is upcased.
  Sequence(std::string_view tokens, const Alphabet& alphabet = Alphabet::amino_acids());

  std::size_t length() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  char operator[](std::size_t i) const noexcept { return tokens_[i]; }
  const std::string& str() const noexcept { return tokens_; }

  auto operator<=>(const Sequence&) const = default;

 private:
  std::string tokens_;
};

/// Sorted, duplicate-free set of 0-based positions.
class MaskSet {
 public:
  MaskSet() = default;
  /// Sorts and validates; throws ContractViolation on duplicates or
  /// out-of-range indices (when `length` is given).
  explicit MaskSet(std::vector<std::size_t> indices);
  MaskSet(std::vector<std::size_t> indices, std::size_t length);

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(std::size_t i) const noexcept;
  bool operator==(const MaskSet&) const = default;

  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

 private:
  std::vector<std::size_t> indices_;
};

/// Per-residue confidence in [0, 100] (pLDDT convention).
class ConfidenceProfile {
 public:
  ConfidenceProfile() = default;
  explicit ConfidenceProfile(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

using ProbabilityVector = std::vector<double>;

inline constexpr double kNormTolerance = 1e-6;

/// Throws ContractViolation unless `p` is non-negative and sums to 1 within
/// kNormTolerance.
void check_distribution(const ProbabilityVector& p, std::string_view what = "distribution");

/// Categorical distributions one expert emits for each masked position.
struct PositionDistributionSet {
  std::string expert_id;
  std::map<std::size_t, ProbabilityVector> entries;

  /// Checks normalization, vector length and that the keys equal `mask`.
  void validate(const MaskSet& mask, std::size_t alphabet_size) const;
};

/// Fraction of positions at which `a` and `b` differ.
double normalized_hamming(const Sequence& a, const Sequence& b);

}  // namespace mctd
