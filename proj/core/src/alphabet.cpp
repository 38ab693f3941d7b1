#include "mctd/alphabet.hpp"

#include "mctd/error.hpp"

namespace mctd {

Alphabet::Alphabet(std::string_view symbols) : symbols_(symbols) {
  index_.fill(kNone);
  MCTD_EXPECTS(symbols_.size() >= 2, "alphabet needs at least two symbols");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    auto& slot = index_[static_cast<unsigned char>(symbols_[i])];
    MCTD_EXPECTS(slot == kNone, std::string("duplicate alphabet symbol '") + symbols_[i] + "'");
    slot = static_cast<int>(i);
  }
}

const Alphabet& Alphabet::amino_acids() {
  static const Alphabet aa{kAminoAcids};
  return aa;
}

std::size_t Alphabet::index_of(char c) const {
  const int i = find(c);
  MCTD_EXPECTS(i != kNone, std::string("symbol '") + c + "' not in alphabet");
  return static_cast<std::size_t>(i);
}

}  // namespace mctd
