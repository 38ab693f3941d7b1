#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mctd/alphabet.hpp"
#include "mctd/sequence.hpp"

namespace mctd {

/// One rollout request. `temperature == 0` requests the argmax limit
/// (deterministic unmasking).
struct ExpertQuery {
  Sequence sequence;
  MaskSet mask;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct ExpertReply {
  /// Temperature-scaled distributions the sample was drawn from.
  PositionDistributionSet distributions;
  std::map<std::size_t, char> sample;
  std::optional<ConfidenceProfile> confidence;

  /// Sample keys equal the mask and every sampled symbol has non-zero mass.
  void validate(const MaskSet& mask, const Alphabet& alphabet) const;
};

/// A generator that fills masked positions.
class Expert {
 public:
  virtual ~Expert() = default;

  virtual const std::string& id() const noexcept = 0;
  virtual const Alphabet& alphabet() const noexcept = 0;

  virtual ExpertReply propose(const ExpertQuery& query) const = 0;

  /// Raw (temperature 1) distributions at the masked positions.
  virtual PositionDistributionSet distributions(const Sequence& sequence,
                                                const MaskSet& mask) const;

  /// False when the expert must not be queried from several threads at once.
  virtual bool concurrent_safe() const noexcept { return true; }
};

/// p^(1/T) renormalized; T == 0 gives the one-hot argmax (lowest index on
/// ties).
ProbabilityVector apply_temperature(const ProbabilityVector& p, double temperature);

/// Draws one symbol per masked position in ascending position order from a
/// SplitMix64 stream seeded with `seed`: the first symbol with non-zero mass
/// whose cumulative probability exceeds u ~ U[0,1).
std::map<std::size_t, char> sample_positions(const PositionDistributionSet& dists,
                                             const Alphabet& alphabet, std::uint64_t seed);

/// Shared rollout path for in-process experts: scale raw distributions by
/// the query temperature and sample.
ExpertReply reply_from_distributions(const PositionDistributionSet& raw, const ExpertQuery& query,
                                     const Alphabet& alphabet, std::uint64_t expert_seed);

/// Copy of `sequence` with every masked position replaced by `fill`.
Sequence splice(const Sequence& sequence, const MaskSet& mask,
                const std::map<std::size_t, char>& fill);

/// Context-free expert: every position draws from the same distribution
/// table regardless of the query.
class UniformExpert final : public Expert {
 public:
  explicit UniformExpert(Alphabet alphabet = Alphabet::amino_acids(), std::uint64_t seed = 0,
                         std::string id = "uniform");

  const std::string& id() const noexcept override { return id_; }
  const Alphabet& alphabet() const noexcept override { return alphabet_; }
  ExpertReply propose(const ExpertQuery& query) const override;
  PositionDistributionSet distributions(const Sequence& sequence,
                                        const MaskSet& mask) const override;

 private:
  Alphabet alphabet_;
  std::uint64_t seed_;
  std::string id_;
};

/// Position-specific categorical profile, one row per residue.
struct PssmMatrix {
  Alphabet alphabet;
  std::vector<ProbabilityVector> rows;

  std::size_t length() const noexcept { return rows.size(); }

  /// Column frequencies of equal-length sequences with `pseudocount` added to
  /// every cell.
  static PssmMatrix fit(std::span<const Sequence> aligned, double pseudocount,
                        const Alphabet& alphabet = Alphabet::amino_acids());

  /// Text format: optional `# alphabet XYZ...` header, then one row per
  /// position of whitespace-separated non-negative weights in alphabet
  /// order. Rows are normalized on load. Other `#` lines are comments.
  static PssmMatrix parse(std::istream& in);
  static PssmMatrix load(const std::string& path);
  void write(std::ostream& out) const;
};

class PssmExpert final : public Expert {
 public:
  explicit PssmExpert(PssmMatrix matrix, std::uint64_t seed = 0, std::string id = "pssm");

  const std::string& id() const noexcept override { return id_; }
  const Alphabet& alphabet() const noexcept override { return matrix_.alphabet; }
  const PssmMatrix& matrix() const noexcept { return matrix_; }
  ExpertReply propose(const ExpertQuery& query) const override;
  PositionDistributionSet distributions(const Sequence& sequence,
                                        const MaskSet& mask) const override;

 private:
  PssmMatrix matrix_;
  std::uint64_t seed_;
  std::string id_;
};

/// Order-n Markov model with additive smoothing. A position is predicted
/// from its (order - 1) preceding tokens; when any of them is masked, falls
/// off the sequence start, or was never seen in training, the smoothed
/// marginal letter frequencies are used instead.
class KmerExpert final : public Expert {
 public:
  KmerExpert(std::size_t order, std::span<const Sequence> training, double smoothing,
             std::uint64_t seed = 0, std::string id = {},
             const Alphabet& alphabet = Alphabet::amino_acids());

  const std::string& id() const noexcept override { return id_; }
  const Alphabet& alphabet() const noexcept override { return alphabet_; }
  std::size_t order() const noexcept { return order_; }
  ExpertReply propose(const ExpertQuery& query) const override;
  PositionDistributionSet distributions(const Sequence& sequence,
                                        const MaskSet& mask) const override;

 private:
  Alphabet alphabet_;
  std::size_t order_;
  double smoothing_;
  std::uint64_t seed_;
  std::string id_;
  ProbabilityVector marginal_;
  std::unordered_map<std::string, std::vector<double>> context_counts_;
};

std::shared_ptr<Expert> uniform_expert(Alphabet alphabet = Alphabet::amino_acids(),
                                       std::uint64_t seed = 0);
std::shared_ptr<Expert> pssm_expert(PssmMatrix matrix, std::uint64_t seed = 0);
std::shared_ptr<Expert> kmer_expert(std::size_t order, std::span<const Sequence> training,
                                    double smoothing, std::uint64_t seed = 0);

}  // namespace mctd
