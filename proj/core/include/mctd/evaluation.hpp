#pragma once

#include <atomic>
#include <cstddef>
#include <future>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mctd/alphabet.hpp"
#include "mctd/sequence.hpp"

namespace mctd {

/// One value per alphabet symbol. Text format: `symbol value` per line,
/// `#` comments.
struct ResidueTable {
  Alphabet alphabet;
  std::vector<double> values;

  double operator()(char symbol) const { return values[alphabet.index_of(symbol)]; }

  static ResidueTable parse(std::istream& in, const Alphabet& alphabet = Alphabet::amino_acids());
  static ResidueTable load(const std::string& path,
                           const Alphabet& alphabet = Alphabet::amino_acids());
  void write(std::ostream& out) const;
  /// Digest of write() output; pins shipped data files.
  std::string digest() const;
};

/// Kyte-Doolittle hydropathy scale.
const ResidueTable& kyte_doolittle();

/// Reference amino-acid composition (fractions summing to 1). Its
/// hydropathy mean is kReferenceHydropathy and its net charge is zero.
const ResidueTable& reference_composition();

inline constexpr double kReferenceHydropathy = -0.4;
inline constexpr std::size_t kHydropathyWindow = 5;

/// Centered sliding-window mean of Kyte-Doolittle values; windows are
/// truncated at the sequence ends.
std::vector<double> hydropathy_profile(const Sequence& s, std::size_t window = kHydropathyWindow);
double mean_hydropathy(const Sequence& s);
/// #{K,R,H} - #{D,E}.
int net_charge(const Sequence& s);
/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Fraction of positions matching the native sequence.
double aar(const Sequence& candidate, const Sequence& target);

/// (1 + corr(hydropathy profile, target profile)) / 2; 0.5 when either
/// profile is flat. A stand-in for self-consistency TM-score, not a
/// substitute for it.
double structure_proxy(const Sequence& candidate, std::span<const double> target_profile);

struct BiophysicalTerms {
  double hydro = 0.0;
  double composition = 0.0;
  double charge = 0.0;
  double total() const noexcept { return (hydro + composition + charge) / 3.0; }
};

BiophysicalTerms biophysical_terms(const Sequence& candidate);
double biophysical_bonus(const Sequence& candidate);

/// Scores complete sequences. Implementations must be pure and reentrant.
class Critic {
 public:
  virtual ~Critic() = default;
  virtual const std::string& name() const noexcept = 0;
  virtual double score(const Sequence& candidate) const = 0;
};

class AarCritic final : public Critic {
 public:
  explicit AarCritic(Sequence target);
  const std::string& name() const noexcept override;
  double score(const Sequence& candidate) const override { return aar(candidate, target_); }

 private:
  Sequence target_;
};

class StructureProxyCritic final : public Critic {
 public:
  explicit StructureProxyCritic(std::vector<double> target_profile);
  const std::string& name() const noexcept override;
  double score(const Sequence& candidate) const override {
    return structure_proxy(candidate, target_profile_);
  }

 private:
  std::vector<double> target_profile_;
};

class BiophysicalCritic final : public Critic {
 public:
  const std::string& name() const noexcept override;
  double score(const Sequence& candidate) const override { return biophysical_bonus(candidate); }
};

struct CriticReport {
  std::map<std::string, double, std::less<>> per_critic;
  double composite = 0.0;
};

using CriticWeights = std::map<std::string, double, std::less<>>;

/// Runs every critic and forms R = sum_j w_j C_j. Each critic needs a
/// weight and each weight needs a critic.
CriticReport composite_reward(const Sequence& candidate,
                              std::span<const std::shared_ptr<Critic>> critics,
                              const CriticWeights& weights);

/// Critics plus their fixed weights.
class CriticPanel {
 public:
  CriticPanel(std::vector<std::shared_ptr<Critic>> critics, CriticWeights weights);

  CriticReport operator()(const Sequence& candidate) const {
    return composite_reward(candidate, critics_, weights_);
  }
  const std::vector<std::shared_ptr<Critic>>& critics() const noexcept { return critics_; }
  const CriticWeights& weights() const noexcept { return weights_; }

 private:
  std::vector<std::shared_ptr<Critic>> critics_;
  CriticWeights weights_;
};

/// The three standard critics for a known native sequence.
CriticPanel standard_panel(const Sequence& target, const CriticWeights& weights);

/// Memo of evaluated sequences. Each distinct sequence is scored at most
/// once even under concurrent misses; failed evaluations are not stored.
class EvaluationCache {
 public:
  CriticReport evaluate(const Sequence& candidate, const CriticPanel& panel);

  /// nullptr when absent.
  const CriticReport* find(const Sequence& candidate) const;

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }
  std::size_t size() const;

  struct Entry {
    std::string sequence;
    CriticReport report;
  };
  /// Best `n` entries by composite reward, descending; ties go to the
  /// lexicographically smaller sequence.
  std::vector<Entry> top(std::size_t n) const;
  double max_composite() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<CriticReport>> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Free-function form of EvaluationCache::evaluate.
inline CriticReport evaluate_cached(const Sequence& candidate, EvaluationCache& cache,
                                    const CriticPanel& panel) {
  return cache.evaluate(candidate, panel);
}

}  // namespace mctd
