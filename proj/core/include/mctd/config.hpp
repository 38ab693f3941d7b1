#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace mctd {

enum class Mode { random_no_expert, single_expert, multi_expert };
enum class BackupRule { max, sum };
enum class Decoding { sample, argmax };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(BackupRule r) noexcept;
std::string_view to_string(Decoding d) noexcept;
Mode parse_mode(std::string_view s);
BackupRule parse_backup_rule(std::string_view s);
Decoding parse_decoding(std::string_view s);

namespace critic_names {
inline constexpr std::string_view aar = "aar";
inline constexpr std::string_view structure_proxy = "structure_proxy";
inline constexpr std::string_view biophysical = "biophysical";
}  // namespace critic_names

/// Every knob of the search loop. Defaults are the fixed hyperparameters of
/// the reported runs (K = 3, k = 3, depth 5, c_p = 1.414, max backup).
struct RunConfig {
  double c_p = 1.414;
  double w_ent = 1.0;
  double w_div = 1.0;
  /// Added to the bonus sum before scaling; 0 keeps the exploration term
  /// purely multiplicative.
  double epsilon_floor = 0.0;
  std::size_t K = 3;
  std::size_t E = 3;
  std::size_t rollouts_per_expert = 3;
  std::size_t max_depth = 5;
  std::size_t total_simulations = 30;
  std::size_t n_cand = 6;
  BackupRule backup_rule = BackupRule::max;
  std::map<std::string, double, std::less<>> reward_weights = {
      {std::string(critic_names::aar), 0.6},
      {std::string(critic_names::structure_proxy), 0.35},
      {std::string(critic_names::biophysical), 0.05},
  };
  double tau_hi = 70.0;
  double tau_lo = 30.0;
  std::size_t min_mask = 1;
  double max_mask_fraction = 0.5;
  Mode mode = Mode::multi_expert;
  /// Which configured expert a single_expert run uses.
  std::size_t single_expert_index = 0;
  Decoding decoding = Decoding::sample;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t top_k_return = 5;
};

/// Checks every RunConfig invariant and returns the (possibly weight-
/// renormalized) config. Throws ConfigError naming the first bad field.
RunConfig validate_config(RunConfig cfg);

/// Flat `key = value` document. `#` starts a comment; blank lines are
/// ignored; keys are unique.
using KeyValueDoc = std::map<std::string, std::string, std::less<>>;

KeyValueDoc parse_key_values(std::string_view text);

/// Applies every RunConfig key present in `doc` to `cfg` and removes it from
/// `doc`; keys that are left over belong to the caller. Throws ConfigError on
/// malformed values.
void apply_key_values(RunConfig& cfg, KeyValueDoc& doc);

/// Canonical text form (sorted keys, round-trippable doubles).
std::string serialize_config(const RunConfig& cfg);

/// FNV-1a hex digest of serialize_config().
std::string config_hash(const RunConfig& cfg);

/// Digest over the fields that change what a search does for a fixed task,
/// i.e. everything except mode, single_expert_index and seed. Runs of one
/// ablation share this hash.
std::string search_hash(const RunConfig& cfg);

}  // namespace mctd
