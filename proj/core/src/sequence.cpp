#include "mctd/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mctd/error.hpp"

namespace mctd {

Sequence::Sequence(std::string_view tokens, const Alphabet& alphabet) {
  tokens_.reserve(tokens.size());
  for (char c : tokens) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    MCTD_EXPECTS(alphabet.contains(up),
                 std::string("invalid token '") + c + "' at position " +
                     std::to_string(tokens_.size()));
    tokens_.push_back(up);
  }
}

MaskSet::MaskSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  MCTD_EXPECTS(std::adjacent_find(indices_.begin(), indices_.end()) == indices_.end(),
               "mask indices must be distinct");
}

MaskSet::MaskSet(std::vector<std::size_t> indices, std::size_t length)
    : MaskSet(std::move(indices)) {
  MCTD_EXPECTS(indices_.empty() || indices_.back() < length,
               "mask index " + (indices_.empty() ? std::string() : std::to_string(indices_.back())) +
                   " out of range for length " + std::to_string(length));
}

bool MaskSet::contains(std::size_t i) const noexcept {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

ConfidenceProfile::ConfidenceProfile(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    MCTD_EXPECTS(std::isfinite(values_[i]) && values_[i] >= 0.0 && values_[i] <= 100.0,
                 "confidence at position " + std::to_string(i) + " outside [0, 100]");
  }
}

void check_distribution(const ProbabilityVector& p, std::string_view what) {
  double sum = 0.0;
  for (double x : p) {
    MCTD_EXPECTS(std::isfinite(x) && x >= 0.0, std::string(what) + " has a negative entry");
    sum += x;
  }
  MCTD_EXPECTS(std::abs(sum - 1.0) <= kNormTolerance,
               std::string(what) + " sums to " + std::to_string(sum));
}

void PositionDistributionSet::validate(const MaskSet& mask, std::size_t alphabet_size) const {
  MCTD_EXPECTS(entries.size() == mask.size(), "distribution keys do not match mask");
  for (std::size_t i : mask) {
    auto it = entries.find(i);
    MCTD_EXPECTS(it != entries.end(), "no distribution for masked position " + std::to_string(i));
    MCTD_EXPECTS(it->second.size() == alphabet_size,
                 "distribution at " + std::to_string(i) + " has wrong length");
    check_distribution(it->second, "distribution at " + std::to_string(i));
  }
}

double normalized_hamming(const Sequence& a, const Sequence& b) {
  MCTD_EXPECTS(a.length() == b.length(), "normalized_hamming: length mismatch");
  if (a.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.length(); ++i) diff += a[i] != b[i];
  return static_cast<double>(diff) / static_cast<double>(a.length());
}

}  // namespace mctd
