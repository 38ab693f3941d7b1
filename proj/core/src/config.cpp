#include "mctd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mctd/error.hpp"
#include "mctd/rng.hpp"

namespace mctd {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::random_no_expert: return "random_no_expert";
    case Mode::single_expert: return "single_expert";
    case Mode::multi_expert: return "multi_expert";
  }
  return "?";
}

std::string_view to_string(BackupRule r) noexcept { return r == BackupRule::max ? "max" : "sum"; }
std::string_view to_string(Decoding d) noexcept {
  return d == Decoding::sample ? "sample" : "argmax";
}

Mode parse_mode(std::string_view s) {
  if (s == "random_no_expert") return Mode::random_no_expert;
  if (s == "single_expert") return Mode::single_expert;
  if (s == "multi_expert") return Mode::multi_expert;
  throw ConfigError("mode", "unknown mode '" + std::string(s) + "'");
}

BackupRule parse_backup_rule(std::string_view s) {
  if (s == "max") return BackupRule::max;
  if (s == "sum") return BackupRule::sum;
  throw ConfigError("backup_rule", "expected max or sum, got '" + std::string(s) + "'");
}

Decoding parse_decoding(std::string_view s) {
  if (s == "sample") return Decoding::sample;
  if (s == "argmax") return Decoding::argmax;
  throw ConfigError("decoding", "expected sample or argmax, got '" + std::string(s) + "'");
}

namespace {

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(field, "not a number: '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(field, "not a non-negative integer: '" + v + "'");
  return out;
}

std::string fmt_double(double x) {
  // Shortest text that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::map<std::string, double, std::less<>> parse_weights(const std::string& v) {
  std::map<std::string, double, std::less<>> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("reward_weights", "expected name:weight, got '" + item + "'");
    const std::string name = trim(item.substr(0, colon));
    if (name.empty() || out.count(name))
      throw ConfigError("reward_weights", "empty or repeated critic name in '" + item + "'");
    out[name] = to_double("reward_weights", trim(item.substr(colon + 1)));
  }
  return out;
}

void write_fields(std::ostream& os, const RunConfig& c, bool search_only) {
  // Sorted by key so the text is canonical.
  os << "E = " << c.E << '\n';
  os << "K = " << c.K << '\n';
  os << "backup_rule = " << to_string(c.backup_rule) << '\n';
  os << "c_p = " << fmt_double(c.c_p) << '\n';
  os << "decoding = " << to_string(c.decoding) << '\n';
  os << "epsilon_floor = " << fmt_double(c.epsilon_floor) << '\n';
  os << "max_depth = " << c.max_depth << '\n';
  os << "max_mask_fraction = " << fmt_double(c.max_mask_fraction) << '\n';
  os << "min_mask = " << c.min_mask << '\n';
  if (!search_only) os << "mode = " << to_string(c.mode) << '\n';
  os << "n_cand = " << c.n_cand << '\n';
  os << "reward_weights = ";
  bool first = true;
  for (const auto& [k, w] : c.reward_weights) {
    os << (first ? "" : ",") << k << ':' << fmt_double(w);
    first = false;
  }
  os << '\n';
  os << "rollouts_per_expert = " << c.rollouts_per_expert << '\n';
  if (!search_only) {
    os << "seed = " << c.seed << '\n';
    os << "single_expert_index = " << c.single_expert_index << '\n';
  }
  os << "tau_hi = " << fmt_double(c.tau_hi) << '\n';
  os << "tau_lo = " << fmt_double(c.tau_lo) << '\n';
  os << "temperature = " << fmt_double(c.temperature) << '\n';
  os << "top_k_return = " << c.top_k_return << '\n';
  os << "total_simulations = " << c.total_simulations << '\n';
  os << "w_div = " << fmt_double(c.w_div) << '\n';
  os << "w_ent = " << fmt_double(c.w_ent) << '\n';
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

RunConfig validate_config(RunConfig cfg) {
  require(std::isfinite(cfg.c_p) && cfg.c_p > 0.0, "c_p", "must be > 0");
  require(std::isfinite(cfg.w_ent) && cfg.w_ent >= 0.0, "w_ent", "must be >= 0");
  require(std::isfinite(cfg.w_div) && cfg.w_div >= 0.0, "w_div", "must be >= 0");
  require(std::isfinite(cfg.epsilon_floor) && cfg.epsilon_floor >= 0.0, "epsilon_floor",
          "must be >= 0");
  require(cfg.K >= 1, "K", "must be >= 1");
  require(cfg.E >= 1, "E", "must be >= 1");
  require(cfg.rollouts_per_expert >= 1, "rollouts_per_expert", "must be >= 1");
  require(cfg.max_depth >= 1, "max_depth", "must be >= 1");
  require(cfg.n_cand >= 1, "n_cand", "must be >= 1");
  require(cfg.top_k_return >= 1, "top_k_return", "must be >= 1");
  require(cfg.tau_hi >= 0.0 && cfg.tau_hi <= 100.0, "tau_hi", "must lie in [0, 100]");
  require(cfg.tau_lo >= 0.0 && cfg.tau_lo <= 100.0, "tau_lo", "must lie in [0, 100]");
  require(cfg.tau_hi >= cfg.tau_lo, "tau_hi", "must be >= tau_lo");
  require(cfg.max_mask_fraction > 0.0 && cfg.max_mask_fraction <= 1.0, "max_mask_fraction",
          "must lie in (0, 1]");
  require(std::isfinite(cfg.temperature) && cfg.temperature > 0.0, "temperature",
          "must be > 0");
  require(cfg.mode != Mode::single_expert || cfg.single_expert_index < cfg.E,
          "single_expert_index", "must be < E");

  require(!cfg.reward_weights.empty(), "reward_weights", "at least one critic weight required");
  double sum = 0.0;
  for (const auto& [name, w] : cfg.reward_weights) {
    require(std::isfinite(w) && w >= 0.0, "reward_weights", "weight of '" + name + "' is negative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-6, "reward_weights",
          "weights sum to " + fmt_double(sum) + ", expected 1");
  if (sum != 1.0) {
    for (auto& [name, w] : cfg.reward_weights) w /= sum;
  }
  return cfg;
}

KeyValueDoc parse_key_values(std::string_view text) {
  KeyValueDoc doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    if (doc.count(key)) throw ConfigError(key, "duplicate key");
    doc[key] = trim(line.substr(eq + 1));
  }
  return doc;
}

void apply_key_values(RunConfig& cfg, KeyValueDoc& doc) {
  auto take = [&](const char* key, auto&& apply) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    apply(std::string(key), it->second);
    doc.erase(it);
  };
  auto as_double = [](double& dst) {
    return [&dst](const std::string& k, const std::string& v) { dst = to_double(k, v); };
  };
  auto as_size = [](std::size_t& dst) {
    return [&dst](const std::string& k, const std::string& v) {
      dst = static_cast<std::size_t>(to_u64(k, v));
    };
  };

  take("c_p", as_double(cfg.c_p));
  take("w_ent", as_double(cfg.w_ent));
  take("w_div", as_double(cfg.w_div));
  take("epsilon_floor", as_double(cfg.epsilon_floor));
  take("K", as_size(cfg.K));
  take("E", as_size(cfg.E));
  take("rollouts_per_expert", as_size(cfg.rollouts_per_expert));
  take("max_depth", as_size(cfg.max_depth));
  take("total_simulations", as_size(cfg.total_simulations));
  take("n_cand", as_size(cfg.n_cand));
  take("backup_rule", [&](const auto&, const std::string& v) { cfg.backup_rule = parse_backup_rule(v); });
  take("reward_weights", [&](const auto&, const std::string& v) { cfg.reward_weights = parse_weights(v); });
  take("tau_hi", as_double(cfg.tau_hi));
  take("tau_lo", as_double(cfg.tau_lo));
  take("min_mask", as_size(cfg.min_mask));
  take("max_mask_fraction", as_double(cfg.max_mask_fraction));
  take("mode", [&](const auto&, const std::string& v) { cfg.mode = parse_mode(v); });
  take("single_expert_index", as_size(cfg.single_expert_index));
  take("decoding", [&](const auto&, const std::string& v) { cfg.decoding = parse_decoding(v); });
  take("temperature", as_double(cfg.temperature));
  take("seed", [&](const std::string& k, const std::string& v) { cfg.seed = to_u64(k, v); });
  take("top_k_return", as_size(cfg.top_k_return));
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  write_fields(os, cfg, false);
  return os.str();
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(serialize_config(cfg))); }

std::string search_hash(const RunConfig& cfg) {
  std::ostringstream os;
  write_fields(os, cfg, true);
  return hex64(fnv1a64(os.str()));
}

}  // namespace mctd
