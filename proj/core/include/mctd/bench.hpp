#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mctd/config.hpp"
#include "mctd/evaluation.hpp"
#include "mctd/experts.hpp"
#include "mctd/replay.hpp"
#include "mctd/report.hpp"
#include "mctd/sequence.hpp"

namespace mctd::bench {

/// Inverse-folding stand-in with known ground truth.
struct SyntheticTask {
  std::string task_id;
  Sequence target;
  /// hydropathy_profile(target); the structure proxy's reference.
  std::vector<double> target_profile;
  /// target with exactly ceil(rho * L) positions changed.
  Sequence baseline;
  std::uint64_t seed = 0;
  double rho = 0.0;

  std::size_t length() const noexcept { return target.length(); }
};

struct TaskGenParams {
  std::size_t count = 50;
  std::size_t min_len = 30;
  std::size_t max_len = 120;
  double rho = 0.3;
  std::uint64_t seed = 0;
  /// Letter distribution targets are drawn from; reference composition
  /// when empty.
  std::vector<double> composition;
};

/// Letter frequencies of a corpus, usable as TaskGenParams::composition.
std::vector<double> composition_of(std::span<const Sequence> corpus,
                                   const Alphabet& alphabet = Alphabet::amino_acids());

/// Copy of `source` with exactly `count` distinct positions resampled to a
/// different symbol, uniformly over the other |alphabet| - 1.
Sequence corrupt_exact(const Sequence& source, std::size_t count, std::uint64_t seed);

/// Copy of `source` where each position independently changes to a
/// different symbol with probability `rate`.
Sequence mutate(const Sequence& source, double rate, std::uint64_t seed);

std::vector<SyntheticTask> generate_tasks(const TaskGenParams& params);

/// One task per line: {"task_id","length","seed","rho","target","baseline","profile"}.
void write_tasks(std::ostream& out, std::span<const SyntheticTask> tasks);
std::vector<SyntheticTask> read_tasks(std::istream& in);
std::vector<SyntheticTask> load_tasks(const std::string& path);

struct ExpertFitParams {
  /// Homologs of the target the PSSM is fit on.
  std::size_t homologs = 8;
  double homolog_divergence = 0.4;
  double pssm_pseudocount = 0.5;
  /// Independently corrupted copies of the target the k-mer model is fit on.
  std::size_t corrupted_copies = 8;
  std::size_t kmer_order = 3;
  double kmer_smoothing = 0.1;
  /// Fraction of positions held out for the fidelity check.
  double held_out_fraction = 0.25;
  std::size_t max_attempts = 8;
};

/// Three experts of graded fidelity for one task, weakest first:
/// uniform, k-mer (fit on corrupted copies), PSSM (fit on homologs).
struct TaskExperts {
  std::vector<std::shared_ptr<Expert>> experts;
  /// Mean probability of the true token at held-out positions, per expert.
  std::vector<double> fidelity;
};

/// Mean probability `expert` gives the true token at `positions`, each
/// masked alone in `context`.
double true_token_probability(const Expert& expert, const Sequence& context,
                              const Sequence& truth, std::span<const std::size_t> positions);

/// Fits the experts and checks fidelity is strictly increasing on a
/// held-out slice; refits with a derived seed up to max_attempts times and
/// throws Error if the ordering never holds.
TaskExperts fit_task_experts(const SyntheticTask& task, std::uint64_t seed,
                             const ExpertFitParams& params = {});

struct AblationVariant {
  std::string label;
  Mode mode = Mode::multi_expert;
  std::size_t single_expert_index = 0;
};

/// random_no_expert, one single_expert per expert, multi_expert.
std::vector<AblationVariant> standard_variants(std::span<const std::string> expert_ids);

std::string variant_label(Mode mode, const std::string& single_expert_id = {});

struct TaskRun {
  RunSummary summary;
  std::vector<RankedSequence> ranked;
};

/// One search on `task`; errors propagate.
TaskRun execute_task(const SyntheticTask& task, const RunConfig& cfg,
                     const std::vector<std::shared_ptr<Expert>>& experts,
                     const std::string& variant, std::ostream* replay = nullptr);

/// Runs one search on `task` and records baseline/final metrics and
/// wall-clock time. Never throws: failures are recorded in the summary.
RunSummary run_task(const SyntheticTask& task, const RunConfig& cfg,
                    const std::vector<std::shared_ptr<Expert>>& experts,
                    const std::string& variant, std::ostream* replay = nullptr);

struct AblationReport {
  /// Sorted by (task_id, variant, seed).
  std::vector<RunSummary> runs;
  std::size_t failures = 0;
};

/// Every (task, variant, seed) triple, `jobs` at a time. Experts are fit
/// once per task with `expert_seed`.
AblationReport run_ablation(std::span<const SyntheticTask> tasks, const RunConfig& base,
                            std::span<const AblationVariant> variants,
                            std::span<const std::uint64_t> seeds, std::size_t jobs = 1,
                            std::uint64_t expert_seed = 0, const ExpertFitParams& fit = {});

/// P(X >= positives) for X ~ Binomial(n, 1/2).
double sign_test_p_value(std::size_t positives, std::size_t n);

}  // namespace mctd::bench
