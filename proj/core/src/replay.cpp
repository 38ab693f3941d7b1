#include "mctd/replay.hpp"

#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "mctd/rng.hpp"

namespace mctd {

using ojson = nlohmann::ordered_json;

namespace {

ojson scores_json(const CriticReport& r) {
  ojson s = ojson::object();
  for (const auto& [name, v] : r.per_critic) s[name] = v;
  return s;
}

}  // namespace

std::string sequence_hash(const Sequence& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s.str())));
  return buf;
}

void ReplayLog::emit(const std::string& line) {
  if (out_) *out_ << line << '\n';
}

void ReplayLog::header(const std::string& config_hash, const std::string& config_text,
                       const Sequence& root, const CriticReport& root_report) {
  if (!out_) return;
  ojson j;
  j["v"] = 1;
  j["type"] = "header";
  j["config_hash"] = config_hash;
  j["config"] = config_text;
  j["root"] = {{"id", 0},
               {"seq", root.str()},
               {"composite", root_report.composite},
               {"scores", scores_json(root_report)}};
  emit(j.dump());
}

void ReplayLog::simulation(const SimulationRecord& r) {
  if (!out_) return;
  ojson j;
  j["v"] = 1;
  j["type"] = "simulation";
  j["sim"] = r.sim;
  j["path"] = r.path;
  j["leaf"] = r.leaf;
  j["depth"] = r.depth;
  j["confidence"] = r.confidence;
  j["mask"] = r.mask.indices();
  j["u_ent"] = r.u_ent;
  j["pool_size"] = r.pool_size;
  ojson cands = ojson::array();
  for (const auto& c : r.candidates) {
    ojson cj;
    cj["hash"] = sequence_hash(c.sequence);
    cj["seq"] = c.sequence.str();
    cj["expert"] = c.expert_id;
    cj["rollout"] = c.rollout;
    cj["scores"] = scores_json(c.report);
    cj["composite"] = c.report.composite;
    cj["kept"] = c.kept;
    cj["u_div"] = c.u_div;
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  j["children"] = r.children;
  ojson backups = ojson::array();
  for (const auto& b : r.backups) backups.push_back({{"child", b.child}, {"value", b.value}});
  j["backups"] = std::move(backups);
  j["terminal"] = r.terminal;
  j["root_q"] = r.root_q;
  j["root_n"] = r.root_n;
  emit(j.dump());
}

void ReplayLog::result(std::size_t simulations_used, bool exhausted,
                       const std::vector<RankedSequence>& ranked) {
  if (!out_) return;
  ojson j;
  j["v"] = 1;
  j["type"] = "result";
  j["simulations_used"] = simulations_used;
  j["exhausted"] = exhausted;
  ojson list = ojson::array();
  for (const auto& r : ranked)
    list.push_back({{"seq", r.sequence.str()}, {"composite", r.report.composite}});
  j["ranked"] = std::move(list);
  emit(j.dump());
}

}  // namespace mctd
