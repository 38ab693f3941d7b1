#include "mctd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace mctd {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace {

ojson metrics_json(const MetricTriple& m) {
  return {{"aar", m.aar}, {"reward", m.reward}, {"structure_proxy", m.structure_proxy}};
}

bool read_metrics(const json& j, MetricTriple& m) {
  if (!j.is_object()) return false;
  for (auto [key, dst] : {std::pair{"aar", &m.aar}, std::pair{"reward", &m.reward},
                          std::pair{"structure_proxy", &m.structure_proxy}}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return false;
    *dst = it->get<double>();
  }
  return true;
}

int mode_rank(Mode m) {
  switch (m) {
    case Mode::random_no_expert: return 0;
    case Mode::single_expert: return 1;
    case Mode::multi_expert: return 2;
  }
  return 3;
}

struct Acc {
  Mode mode = Mode::multi_expert;
  std::size_t n = 0;
  MetricTriple base, fin;
  void add(const RunSummary& s) {
    mode = s.mode;
    ++n;
    base.aar += s.baseline.aar;
    base.reward += s.baseline.reward;
    base.structure_proxy += s.baseline.structure_proxy;
    fin.aar += s.final_.aar;
    fin.reward += s.final_.reward;
    fin.structure_proxy += s.final_.structure_proxy;
  }
  ReportRow row(const std::string& variant) const {
    ReportRow r{variant, mode, n, base, fin};
    const double d = n ? static_cast<double>(n) : 1.0;
    for (MetricTriple* m : {&r.baseline, &r.final_}) {
      m->aar /= d;
      m->reward /= d;
      m->structure_proxy /= d;
    }
    return r;
  }
};

std::string fmt(double x, const char* spec = "%.3f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string fmt_delta(double x) {
  // Avoid printing "-0.000".
  if (std::abs(x) < 5e-4) x = 0.0;
  return fmt(x, "%+.3f");
}

std::string pad(const std::string& s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::string encode_summary(const RunSummary& s) {
  ojson j;
  j["v"] = kSummaryVersion;
  j["type"] = "summary";
  j["task_id"] = s.task_id;
  j["variant"] = s.variant;
  j["mode"] = std::string(to_string(s.mode));
  j["seed"] = s.seed;
  j["length"] = s.length;
  j["ok"] = s.ok;
  if (!s.ok) j["error"] = s.error;
  j["baseline"] = metrics_json(s.baseline);
  j["final"] = metrics_json(s.final_);
  j["final_sequence"] = s.final_sequence;
  j["wall_seconds"] = s.wall_seconds;
  j["simulations_used"] = s.simulations_used;
  j["config_hash"] = s.config_hash;
  j["search_hash"] = s.search_hash;
  return j.dump();
}

std::optional<RunSummary> decode_summary(std::string_view line, std::string* warning) {
  auto fail = [&](const std::string& why) -> std::optional<RunSummary> {
    if (warning) *warning = why;
    return std::nullopt;
  };
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail("not a JSON object");
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) return fail("missing schema version");
  if (v->get<int>() != kSummaryVersion)
    return fail("unsupported schema version " + std::to_string(v->get<int>()));
  if (j.value("type", std::string()) != "summary") return fail("not a summary record");
  RunSummary s;
  try {
    s.task_id = j.at("task_id").get<std::string>();
    s.variant = j.at("variant").get<std::string>();
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.length = j.at("length").get<std::size_t>();
    s.ok = j.value("ok", true);
    s.error = j.value("error", std::string());
    if (!read_metrics(j.at("baseline"), s.baseline) || !read_metrics(j.at("final"), s.final_))
      return fail("malformed metrics");
    s.final_sequence = j.value("final_sequence", std::string());
    s.wall_seconds = j.value("wall_seconds", 0.0);
    s.simulations_used = j.value("simulations_used", std::size_t{0});
    s.config_hash = j.value("config_hash", std::string());
    s.search_hash = j.value("search_hash", std::string());
  } catch (const std::exception& e) {
    return fail(std::string("malformed summary: ") + e.what());
  }
  return s;
}

LengthBin length_bin(std::size_t length) noexcept {
  if (length < 100) return LengthBin::short_;
  if (length <= 300) return LengthBin::medium;
  return LengthBin::long_;
}

std::string_view to_string(LengthBin b) noexcept {
  switch (b) {
    case LengthBin::short_: return "<100";
    case LengthBin::medium: return "100-300";
    case LengthBin::long_: return ">300";
  }
  return "?";
}

std::vector<ReportRow> aggregate(std::span<const RunSummary> runs) {
  std::map<std::string, Acc> acc;
  for (const auto& s : runs)
    if (s.ok) acc[s.variant].add(s);
  std::vector<ReportRow> rows;
  for (const auto& [variant, a] : acc) rows.push_back(a.row(variant));
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return mode_rank(a.mode) < mode_rank(b.mode);
  });
  return rows;
}

std::vector<BinnedRow> aggregate_binned(std::span<const RunSummary> runs) {
  std::map<std::pair<std::string, LengthBin>, Acc> acc;
  for (const auto& s : runs)
    if (s.ok) acc[{s.variant, length_bin(s.length)}].add(s);
  std::vector<BinnedRow> rows;
  for (const auto& [key, a] : acc) rows.push_back({key.first, key.second, a.row(key.first)});
  std::stable_sort(rows.begin(), rows.end(), [](const BinnedRow& a, const BinnedRow& b) {
    if (mode_rank(a.stats.mode) != mode_rank(b.stats.mode))
      return mode_rank(a.stats.mode) < mode_rank(b.stats.mode);
    if (a.variant != b.variant) return a.variant < b.variant;
    return a.bin < b.bin;
  });
  return rows;
}

std::string format_table(std::span<const ReportRow> rows) {
  std::size_t w = 7;
  for (const auto& r : rows) w = std::max(w, r.variant.size());
  constexpr std::size_t c = 9;
  std::ostringstream os;
  const std::string groups[] = {"AAR", "Reward", "StructProxy"};
  os << pad("Variant", w) << " | " << pad("n", 4, true);
  for (const auto& g : groups) os << " | " << pad(g, 3 * c + 2);
  os << '\n' << pad("", w) << " | " << pad("", 4);
  for (std::size_t g = 0; g < 3; ++g)
    os << " | " << pad("Baseline", c, true) << ' ' << pad("Final", c, true) << ' '
       << pad("Delta", c, true);
  os << '\n' << std::string(w, '-') << "-+-" << std::string(4, '-');
  for (std::size_t g = 0; g < 3; ++g) os << "-+-" << std::string(3 * c + 2, '-');
  os << '\n';
  for (const auto& r : rows) {
    const MetricTriple d = r.delta();
    os << pad(r.variant, w) << " | " << pad(std::to_string(r.n), 4, true);
    const double triples[3][3] = {{r.baseline.aar, r.final_.aar, d.aar},
                                  {r.baseline.reward, r.final_.reward, d.reward},
                                  {r.baseline.structure_proxy, r.final_.structure_proxy,
                                   d.structure_proxy}};
    for (const auto& t : triples)
      os << " | " << pad(fmt(t[0]), c, true) << ' ' << pad(fmt(t[1]), c, true) << ' '
         << pad(fmt_delta(t[2]), c, true);
    os << '\n';
  }
  return os.str();
}

std::string format_csv(std::span<const ReportRow> rows) {
  std::ostringstream os;
  os << "variant,mode,n,aar_baseline,aar_final,aar_delta,reward_baseline,reward_final,"
        "reward_delta,structure_proxy_baseline,structure_proxy_final,structure_proxy_delta\n";
  for (const auto& r : rows) {
    const MetricTriple d = r.delta();
    os << r.variant << ',' << to_string(r.mode) << ',' << r.n << ',' << fmt(r.baseline.aar, "%.6f")
       << ',' << fmt(r.final_.aar, "%.6f") << ',' << fmt(d.aar, "%.6f") << ','
       << fmt(r.baseline.reward, "%.6f") << ',' << fmt(r.final_.reward, "%.6f") << ','
       << fmt(d.reward, "%.6f") << ',' << fmt(r.baseline.structure_proxy, "%.6f") << ','
       << fmt(r.final_.structure_proxy, "%.6f") << ',' << fmt(d.structure_proxy, "%.6f") << '\n';
  }
  return os.str();
}

std::string format_binned_table(std::span<const BinnedRow> rows) {
  std::ostringstream os;
  std::size_t w = 7;
  for (const auto& r : rows) w = std::max(w, r.variant.size());
  os << pad("Variant", w) << " | " << pad("Length", 7) << " | " << pad("n", 4, true) << " | "
     << pad("AAR", 9, true) << ' ' << pad("dAAR", 9, true) << " | " << pad("Reward", 9, true)
     << ' ' << pad("dReward", 9, true) << " | " << pad("Struct", 9, true) << ' '
     << pad("dStruct", 9, true) << '\n';
  for (const auto& b : rows) {
    const MetricTriple d = b.stats.delta();
    os << pad(b.variant, w) << " | " << pad(std::string(to_string(b.bin)), 7) << " | "
       << pad(std::to_string(b.stats.n), 4, true) << " | " << pad(fmt(b.stats.final_.aar), 9, true)
       << ' ' << pad(fmt_delta(d.aar), 9, true) << " | " << pad(fmt(b.stats.final_.reward), 9, true)
       << ' ' << pad(fmt_delta(d.reward), 9, true) << " | "
       << pad(fmt(b.stats.final_.structure_proxy), 9, true) << ' '
       << pad(fmt_delta(d.structure_proxy), 9, true) << '\n';
  }
  return os.str();
}

std::string format_series_csv(std::span<const BinnedRow> rows) {
  std::ostringstream os;
  os << "variant,bin,n,metric,baseline,final,delta\n";
  for (const auto& b : rows) {
    const MetricTriple d = b.stats.delta();
    const std::tuple<const char*, double, double, double> metrics[] = {
        {"aar", b.stats.baseline.aar, b.stats.final_.aar, d.aar},
        {"reward", b.stats.baseline.reward, b.stats.final_.reward, d.reward},
        {"structure_proxy", b.stats.baseline.structure_proxy, b.stats.final_.structure_proxy,
         d.structure_proxy}};
    for (const auto& [name, base, fin, delta] : metrics)
      os << b.variant << ',' << to_string(b.bin) << ',' << b.stats.n << ',' << name << ','
         << fmt(base, "%.6f") << ',' << fmt(fin, "%.6f") << ',' << fmt(delta, "%.6f") << '\n';
  }
  return os.str();
}

}  // namespace mctd
