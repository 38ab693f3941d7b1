#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mctd/evaluation.hpp"
#include "mctd/sequence.hpp"

namespace mctd {

// Replay log schema, version 1: one JSON object per line.
//
//   {"v":1,"type":"header","config_hash":..,"config":"..","root":{"id":0,"seq":..,"composite":..,"scores":{..}}}
//   {"v":1,"type":"simulation","sim":i,"path":[ids],"leaf":id,"depth":d,
//    "confidence":[..],"mask":[..],"u_ent":..,"pool_size":n,
//    "candidates":[{"hash":..,"seq":..,"expert":..,"rollout":r,"scores":{..},
//                   "composite":..,"kept":bool,"u_div":..}],
//    "children":[ids],"backups":[{"child":id,"value":v}],"terminal":bool,
//    "root_q":..,"root_n":..}
//   {"v":1,"type":"result","simulations_used":n,"exhausted":bool,"ranked":[{"seq":..,"composite":..}]}
//
// Readers ignore unknown fields.

struct CandidateRecord {
  Sequence sequence;
  std::string expert_id;
  std::size_t rollout = 0;
  CriticReport report;
  bool kept = false;
  double u_div = 0.0;
};

struct BackupRecord {
  std::uint64_t child = 0;
  double value = 0.0;
};

struct SimulationRecord {
  std::size_t sim = 0;
  std::vector<std::uint64_t> path;
  std::uint64_t leaf = 0;
  std::size_t depth = 0;
  std::vector<double> confidence;
  MaskSet mask;
  double u_ent = 0.0;
  std::size_t pool_size = 0;
  std::vector<CandidateRecord> candidates;
  std::vector<std::uint64_t> children;
  std::vector<BackupRecord> backups;
  bool terminal = false;
  double root_q = 0.0;
  std::size_t root_n = 0;
};

struct RankedSequence {
  Sequence sequence;
  CriticReport report;
};

/// Append-only sink; a null stream discards records.
class ReplayLog {
 public:
  explicit ReplayLog(std::ostream* out = nullptr) : out_(out) {}

  void header(const std::string& config_hash, const std::string& config_text,
              const Sequence& root, const CriticReport& root_report);
  void simulation(const SimulationRecord& record);
  void result(std::size_t simulations_used, bool exhausted,
              const std::vector<RankedSequence>& ranked);

  bool enabled() const noexcept { return out_ != nullptr; }

 private:
  void emit(const std::string& line);
  std::ostream* out_;
};

/// 16-hex-digit FNV-1a digest of a sequence string.
std::string sequence_hash(const Sequence& s);

}  // namespace mctd
