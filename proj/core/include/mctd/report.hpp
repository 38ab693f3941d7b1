#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mctd/config.hpp"

namespace mctd {

struct MetricTriple {
  double aar = 0.0;
  double reward = 0.0;
  double structure_proxy = 0.0;
};

/// Outcome of one search on one task.
struct RunSummary {
  std::string task_id;
  std::string variant;
  Mode mode = Mode::multi_expert;
  std::uint64_t seed = 0;
  std::size_t length = 0;
  MetricTriple baseline;
  MetricTriple final_;
  std::string final_sequence;
  double wall_seconds = 0.0;
  std::size_t simulations_used = 0;
  std::string config_hash;
  std::string search_hash;
  bool ok = true;
  std::string error;
};

inline constexpr int kSummaryVersion = 1;

/// One JSON line, `"type":"summary"`.
std::string encode_summary(const RunSummary& s);
/// nullopt with `warning` set when the line is not a v1 summary.
std::optional<RunSummary> decode_summary(std::string_view line, std::string* warning = nullptr);

enum class LengthBin { short_, medium, long_ };
LengthBin length_bin(std::size_t length) noexcept;
std::string_view to_string(LengthBin b) noexcept;

struct ReportRow {
  std::string variant;
  Mode mode = Mode::multi_expert;
  std::size_t n = 0;
  MetricTriple baseline;
  MetricTriple final_;
  MetricTriple delta() const noexcept {
    return {final_.aar - baseline.aar, final_.reward - baseline.reward,
            final_.structure_proxy - baseline.structure_proxy};
  }
};

struct BinnedRow {
  std::string variant;
  LengthBin bin = LengthBin::short_;
  ReportRow stats;
};

/// Means over successful runs, one row per variant ordered random,
/// single..., multi (then by label). Failed runs are skipped.
std::vector<ReportRow> aggregate(std::span<const RunSummary> runs);
/// Same, split by length bin (<100, 100-300, >300); empty bins are omitted.
std::vector<BinnedRow> aggregate_binned(std::span<const RunSummary> runs);

/// Fixed-width table: one row per variant, (Baseline, Final, Delta) for AAR,
/// Reward and StructProxy.
std::string format_table(std::span<const ReportRow> rows);
std::string format_csv(std::span<const ReportRow> rows);
std::string format_binned_table(std::span<const BinnedRow> rows);
/// Plot-ready long format: variant,bin,n,metric,baseline,final,delta.
std::string format_series_csv(std::span<const BinnedRow> rows);

}  // namespace mctd
