#pragma once

#include <memory>
#include <string>

#include "mctd/evaluation.hpp"
#include "mctd/experts.hpp"

namespace toy {

// Puts all mass on the symbol after the current one (alphabet order, cyclic).
class ShiftExpert final : public mctd::Expert {
 public:
  explicit ShiftExpert(std::string id = "shift", std::size_t step = 1) : id_(std::move(id)), step_(step) {}
  const std::string& id() const noexcept override { return id_; }
  const mctd::Alphabet& alphabet() const noexcept override { return mctd::Alphabet::amino_acids(); }
  mctd::ExpertReply propose(const mctd::ExpertQuery& q) const override {
    return mctd::reply_from_distributions(distributions(q.sequence, q.mask), q, alphabet(), 0);
  }
  mctd::PositionDistributionSet distributions(const mctd::Sequence& s,
                                              const mctd::MaskSet& m) const override {
    mctd::PositionDistributionSet d{id_, {}};
    for (std::size_t i : m) {
      mctd::ProbabilityVector p(20, 0.0);
      p[(alphabet().index_of(s[i]) + step_) % 20] = 1.0;
      d.entries[i] = p;
    }
    return d;
  }

 private:
  std::string id_;
  std::size_t step_;
};

// Always returns the current sequence's own symbols.
class EchoExpert final : public mctd::Expert {
 public:
  const std::string& id() const noexcept override { return id_; }
  const mctd::Alphabet& alphabet() const noexcept override { return mctd::Alphabet::amino_acids(); }
  mctd::ExpertReply propose(const mctd::ExpertQuery& q) const override {
    return mctd::reply_from_distributions(distributions(q.sequence, q.mask), q, alphabet(), 0);
  }
  mctd::PositionDistributionSet distributions(const mctd::Sequence& s,
                                              const mctd::MaskSet& m) const override {
    mctd::PositionDistributionSet d{id_, {}};
    for (std::size_t i : m) {
      mctd::ProbabilityVector p(20, 0.0);
      p[alphabet().index_of(s[i])] = 1.0;
      d.entries[i] = p;
    }
    return d;
  }

 private:
  std::string id_ = "echo";
};

// Scores a sequence by the alphabet index of its first symbol, over 19.
class FirstSymbolCritic final : public mctd::Critic {
 public:
  const std::string& name() const noexcept override { return name_; }
  double score(const mctd::Sequence& s) const override {
    ++calls;
    return static_cast<double>(mctd::Alphabet::amino_acids().index_of(s[0])) / 19.0;
  }
  mutable std::size_t calls = 0;

 private:
  std::string name_ = "first";
};

inline mctd::CriticPanel first_symbol_panel(std::shared_ptr<FirstSymbolCritic> c = nullptr) {
  if (!c) c = std::make_shared<FirstSymbolCritic>();
  return mctd::CriticPanel({c}, {{"first", 1.0}});
}

// One-hot PSSM that spells `target`.
inline mctd::PssmMatrix one_hot_pssm(const std::string& target) {
  mctd::PssmMatrix m{mctd::Alphabet::amino_acids(), {}};
  for (char c : target) {
    mctd::ProbabilityVector row(20, 0.0);
    row[m.alphabet.index_of(c)] = 1.0;
    m.rows.push_back(row);
  }
  return m;
}

}  // namespace toy
