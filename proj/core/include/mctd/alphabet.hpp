#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace mctd {

/// Ordered set of single-character tokens. Defaults to the 20 canonical
/// amino acids in the usual one-letter order.
class Alphabet {
 public:
  static constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
  static constexpr int kNone = -1;

  Alphabet() : Alphabet(kAminoAcids) {}
  explicit Alphabet(std::string_view symbols);

  static const Alphabet& amino_acids();

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbols() const noexcept { return symbols_; }
  char symbol_at(std::size_t i) const { return symbols_.at(i); }

  /// Index of `c`, or kNone if `c` is not part of the alphabet.
  int find(char c) const noexcept { return index_[static_cast<unsigned char>(c)]; }
  bool contains(char c) const noexcept { return find(c) != kNone; }
  /// Index of `c`; throws ContractViolation if absent.
  std::size_t index_of(char c) const;

  bool operator==(const Alphabet& other) const noexcept { return symbols_ == other.symbols_; }

 private:
  std::string symbols_;
  std::array<int, 256> index_{};
};

}  // namespace mctd
