#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <unistd.h>

#include "mctd/bench.hpp"
#include "mctd/config.hpp"
#include "mctd/error.hpp"
#include "mctd/evaluation.hpp"
#include "mctd/experts.hpp"
#include "mctd/remote_expert.hpp"
#include "mctd/report.hpp"
#include "mctd/search.hpp"

namespace fs = std::filesystem;
using namespace mctd;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kRuntime = 2, kIo = 3 };

struct IoError : Error {
  using Error::Error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// temp file in the same directory, then rename
void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class F>
void parallel_for(std::size_t count, std::size_t jobs, F&& body) {
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, count));
  for (std::size_t w = 0; w < n; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// Config file: RunConfig keys plus
//   tasks       task-set file (relative to the config file)
//   experts     comma list: task_fitted | uniform | pssm:FILE | stdio:CMD | http://...
//   baseline    single-search start sequence (when no task set)
//   target      its native sequence
//   expert_seed seed for task_fitted experts

struct Settings {
  RunConfig cfg;
  bool explicit_e = false;
  std::optional<fs::path> tasks;
  std::vector<std::string> experts;
  std::string baseline, target;
  std::uint64_t expert_seed = 0;
};

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw ConfigError(key, "expected an unsigned integer, got '" + v + "'");
  return out;
}

Settings load_settings(const std::optional<fs::path>& path) {
  Settings s;
  if (!path) return s;
  KeyValueDoc doc = parse_key_values(read_file(*path));
  const fs::path base = path->parent_path();
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = doc.find(key);
    if (it == doc.end()) return std::nullopt;
    std::string v = it->second;
    doc.erase(it);
    return v;
  };
  if (auto v = take("tasks")) {
    fs::path p(*v);
    s.tasks = p.is_absolute() ? p : base / p;
  }
  if (auto v = take("experts")) s.experts = split_list(*v);
  if (auto v = take("baseline")) s.baseline = *v;
  if (auto v = take("target")) s.target = *v;
  if (auto v = take("expert_seed")) s.expert_seed = parse_u64("expert_seed", *v);
  s.explicit_e = doc.count("E") > 0;
  apply_key_values(s.cfg, doc);
  if (!doc.empty()) throw ConfigError(doc.begin()->first, "unknown key");
  return s;
}

// Experts not tied to a task, built once.
struct ExpertPlan {
  bool task_fitted = false;
  std::vector<std::shared_ptr<Expert>> fixed;
  std::size_t count() const { return fixed.size() + (task_fitted ? 3 : 0); }
};

ExpertPlan plan_experts(const std::vector<std::string>& specs) {
  ExpertPlan plan;
  for (const auto& spec : specs) {
    if (spec == "task_fitted") {
      if (plan.task_fitted) throw ConfigError("experts", "task_fitted listed twice");
      plan.task_fitted = true;
    } else if (spec == "uniform") {
      plan.fixed.push_back(uniform_expert());
    } else if (spec.rfind("pssm:", 0) == 0) {
      plan.fixed.push_back(pssm_expert(PssmMatrix::load(spec.substr(5))));
    } else if (spec.rfind("stdio:", 0) == 0 || spec.rfind("http://", 0) == 0) {
      plan.fixed.push_back(remote_expert(spec));
    } else {
      throw ConfigError("experts", "unrecognised expert '" + spec + "'");
    }
  }
  return plan;
}

std::vector<std::shared_ptr<Expert>> experts_for(const ExpertPlan& plan,
                                                 const bench::SyntheticTask& task,
                                                 std::uint64_t expert_seed) {
  std::vector<std::shared_ptr<Expert>> out;
  if (plan.task_fitted) out = bench::fit_task_experts(task, expert_seed).experts;
  out.insert(out.end(), plan.fixed.begin(), plan.fixed.end());
  return out;
}

std::string ranked_tsv(const std::vector<RankedSequence>& ranked) {
  std::ostringstream os;
  os << "rank\tsequence\tcomposite";
  if (!ranked.empty())
    for (const auto& [name, v] : ranked.front().report.per_critic) os << '\t' << name;
  os << '\n';
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    os << i + 1 << '\t' << ranked[i].sequence.str() << '\t' << fmt(ranked[i].report.composite);
    for (const auto& [name, v] : ranked[i].report.per_critic) os << '\t' << fmt(v);
    os << '\n';
  }
  return os.str();
}

std::string safe_name(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return out;
}

// ---------------------------------------------------------------------------

struct RunOptions {
  std::optional<std::string> config;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> experts;
  std::string out;
  std::size_t jobs = default_jobs();
};

int cmd_run(const RunOptions& opt) {
  Settings st = load_settings(opt.config ? std::optional<fs::path>(*opt.config) : std::nullopt);
  if (opt.mode) st.cfg.mode = parse_mode(*opt.mode);
  if (opt.seed) st.cfg.seed = *opt.seed;
  if (opt.experts) st.experts = split_list(*opt.experts);

  std::vector<bench::SyntheticTask> tasks;
  if (st.tasks) {
    std::istringstream in(read_file(*st.tasks));
    tasks = bench::read_tasks(in);
    if (tasks.empty()) throw ConfigError("tasks", "task set is empty");
  } else {
    if (st.baseline.empty()) throw ConfigError("baseline", "needed when no task set is given");
    if (st.target.empty()) throw ConfigError("target", "needed when no task set is given");
    bench::SyntheticTask t;
    t.task_id = "run";
    t.target = Sequence(st.target);
    t.baseline = Sequence(st.baseline);
    if (t.target.length() != t.baseline.length())
      throw ConfigError("target", "length differs from baseline");
    t.target_profile = hydropathy_profile(t.target);
    tasks.push_back(std::move(t));
  }

  const ExpertPlan plan = plan_experts(st.experts);
  if (!st.explicit_e && plan.count() > 0) st.cfg.E = plan.count();
  RunConfig cfg = validate_config(st.cfg);
  // Dry selection so mode/expert mismatches fail before any work.
  const std::vector<std::shared_ptr<Expert>> placeholders(plan.count(), uniform_expert());
  select_active_experts(cfg, placeholders);

  std::string single_id;
  if (cfg.mode == Mode::single_expert) {
    const std::size_t i = cfg.single_expert_index;
    if (plan.task_fitted && i < 3)
      single_id = std::vector<std::string>{"uniform", "kmer3", "pssm"}[i];
    else
      single_id = plan.fixed[i - (plan.task_fitted ? 3 : 0)]->id();
  }
  const std::string label = bench::variant_label(cfg.mode, single_id);

  const fs::path out(opt.out);
  ensure_dir(out);

  struct Outcome {
    std::optional<bench::TaskRun> run;
    std::string replay;
    std::string error;
    bool config_error = false;
  };
  std::vector<Outcome> outcomes(tasks.size());
  parallel_for(tasks.size(), opt.jobs, [&](std::size_t i) {
    std::ostringstream replay;
    try {
      const auto experts = experts_for(plan, tasks[i], st.expert_seed);
      outcomes[i].run = bench::execute_task(tasks[i], cfg, experts, label, &replay);
      outcomes[i].replay = replay.str();
    } catch (const ConfigError& e) {
      outcomes[i].error = e.what();
      outcomes[i].config_error = true;
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  std::string summaries;
  int code = kOk;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& o = outcomes[i];
    const std::string stem = safe_name(tasks[i].task_id);
    if (o.run) {
      write_atomic(out / (stem + ".replay.jsonl"), o.replay);
      write_atomic(out / (stem + ".ranked.tsv"), ranked_tsv(o.run->ranked));
      summaries += encode_summary(o.run->summary) + '\n';
    } else {
      RunSummary s;
      s.task_id = tasks[i].task_id;
      s.variant = label;
      s.mode = cfg.mode;
      s.seed = cfg.seed;
      s.length = tasks[i].length();
      s.config_hash = config_hash(cfg);
      s.search_hash = search_hash(cfg);
      s.ok = false;
      s.error = o.error;
      summaries += encode_summary(s) + '\n';
      std::cerr << "mctd run: " << tasks[i].task_id << ": " << o.error << '\n';
      code = std::max(code, o.config_error ? int{kConfig} : int{kRuntime});
    }
  }
  write_atomic(out / "config.txt", serialize_config(cfg));
  write_atomic(out / "summaries.jsonl", summaries);
  return code;
}

// ---------------------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> in;
  std::string format = "table";
  bool force = false;
  std::optional<std::string> series;
  std::optional<std::string> out;
};

std::vector<RunSummary> collect_summaries(const std::vector<std::string>& inputs) {
  std::vector<RunSummary> runs;
  for (const auto& input : inputs) {
    fs::path file(input);
    if (fs::is_directory(file)) file /= "summaries.jsonl";
    std::ifstream in(file);
    if (!in) {
      std::cerr << "mctd report: warning: " << input << ": no summaries found\n";
      continue;
    }
    std::string line;
    std::size_t line_no = 0, good = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string warning;
      if (auto s = decode_summary(line, &warning)) {
        runs.push_back(std::move(*s));
        ++good;
      } else {
        std::cerr << "mctd report: warning: " << file.string() << ':' << line_no << ": " << warning
                  << '\n';
      }
    }
    if (good == 0) std::cerr << "mctd report: warning: " << file.string() << ": no valid summaries\n";
  }
  return runs;
}

int cmd_report(const ReportOptions& opt) {
  const std::vector<RunSummary> runs = collect_summaries(opt.in);
  std::size_t ok = 0, failed = 0;
  std::set<std::string> hashes;
  for (const auto& r : runs) {
    if (r.ok) {
      ++ok;
      hashes.insert(r.search_hash);
    } else {
      ++failed;
    }
  }
  if (ok == 0) {
    std::cerr << "mctd report: nothing to aggregate\n";
    return kIo;
  }
  if (hashes.size() > 1 && !opt.force) {
    std::cerr << "mctd report: runs come from " << hashes.size()
              << " different search configurations; pass --force to aggregate anyway\n";
    return kConfig;
  }
  const auto rows = aggregate(runs);
  const auto binned = aggregate_binned(runs);
  std::string text;
  if (opt.format == "csv") {
    text = format_csv(rows);
  } else {
    text = format_table(rows) + "\n" + format_binned_table(binned);
    if (failed) text += "\n" + std::to_string(failed) + " failed run(s) excluded\n";
  }
  if (opt.out)
    write_atomic(*opt.out, text);
  else
    std::cout << text;
  if (opt.series) write_atomic(*opt.series, format_series_csv(binned));
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_gen_tasks(const bench::TaskGenParams& params, const std::string& out) {
  const auto tasks = bench::generate_tasks(params);
  std::ostringstream os;
  bench::write_tasks(os, tasks);
  write_atomic(out, os.str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct AblateOptions {
  std::optional<std::string> config;
  std::optional<std::string> tasks;
  bench::TaskGenParams gen;
  std::string seeds = "0,1,2";
  std::size_t jobs = default_jobs();
  std::string out;
};

int cmd_ablate(const AblateOptions& opt) {
  Settings st = load_settings(opt.config ? std::optional<fs::path>(*opt.config) : std::nullopt);
  std::vector<bench::SyntheticTask> tasks;
  if (opt.tasks) {
    std::istringstream in(read_file(*opt.tasks));
    tasks = bench::read_tasks(in);
  } else if (st.tasks) {
    std::istringstream in(read_file(*st.tasks));
    tasks = bench::read_tasks(in);
  } else {
    tasks = bench::generate_tasks(opt.gen);
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(opt.seeds)) seeds.push_back(parse_u64("seeds", s));
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  validate_config(st.cfg);

  const std::vector<std::string> ids = {"uniform", "kmer3", "pssm"};
  const auto variants = bench::standard_variants(ids);
  const auto report = bench::run_ablation(tasks, st.cfg, variants, seeds, opt.jobs, st.expert_seed);

  const fs::path out(opt.out);
  ensure_dir(out);
  std::string summaries;
  for (const auto& r : report.runs) summaries += encode_summary(r) + '\n';
  const auto rows = aggregate(report.runs);
  const auto binned = aggregate_binned(report.runs);
  const std::string table = format_table(rows) + "\n" + format_binned_table(binned);
  write_atomic(out / "summaries.jsonl", summaries);
  write_atomic(out / "table.txt", table);
  write_atomic(out / "table.csv", format_csv(rows));
  write_atomic(out / "series.csv", format_series_csv(binned));
  std::cout << table;
  if (report.failures) {
    std::cerr << "mctd ablate: " << report.failures << " run(s) failed\n";
    return kRuntime;
  }
  return kOk;
}

template <class F>
int guarded(const char* name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::cerr << "mctd " << name << ": config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "mctd " << name << ": " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "mctd " << name << ": " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-expert Monte Carlo tree diffusion planner"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "search one sequence or every task in a task set");
  run_cmd->add_option("--config", run.config, "key = value config file");
  run_cmd->add_option("--mode", run.mode, "random_no_expert | single_expert | multi_expert");
  run_cmd->add_option("--seed", run.seed, "run seed");
  run_cmd->add_option("--experts", run.experts,
                      "comma list: task_fitted, uniform, pssm:FILE, stdio:CMD, http://HOST:PORT/PATH");
  run_cmd->add_option("--out", run.out, "output directory")->required();
  run_cmd->add_option("--jobs", run.jobs, "parallel tasks");

  ReportOptions rep;
  auto* rep_cmd = app.add_subcommand("report", "aggregate summaries into a baseline/final/delta table");
  rep_cmd->add_option("--in", rep.in, "run directories or summary files")->required();
  rep_cmd->add_option("--format", rep.format)->check(CLI::IsMember({"table", "csv"}));
  rep_cmd->add_flag("--force", rep.force, "aggregate runs with differing search configs");
  rep_cmd->add_option("--series", rep.series, "write length-binned metric series CSV");
  rep_cmd->add_option("--out", rep.out, "write the report here instead of stdout");

  bench::TaskGenParams gen;
  gen.count = 10;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-tasks", "generate a synthetic task set");
  gen_cmd->add_option("--count", gen.count);
  gen_cmd->add_option("--min-len", gen.min_len);
  gen_cmd->add_option("--max-len", gen.max_len);
  gen_cmd->add_option("--rho", gen.rho);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen_out)->required();

  AblateOptions abl;
  auto* abl_cmd = app.add_subcommand("ablate", "run every mode on a task set with fitted experts");
  abl_cmd->add_option("--config", abl.config);
  abl_cmd->add_option("--tasks", abl.tasks, "task set (generated when absent)");
  abl_cmd->add_option("--count", abl.gen.count);
  abl_cmd->add_option("--min-len", abl.gen.min_len);
  abl_cmd->add_option("--max-len", abl.gen.max_len);
  abl_cmd->add_option("--rho", abl.gen.rho);
  abl_cmd->add_option("--task-seed", abl.gen.seed);
  abl_cmd->add_option("--seeds", abl.seeds, "comma list of run seeds");
  abl_cmd->add_option("--jobs", abl.jobs);
  abl_cmd->add_option("--out", abl.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  if (*run_cmd) return guarded("run", [&] { return cmd_run(run); });
  if (*rep_cmd) return guarded("report", [&] { return cmd_report(rep); });
  if (*gen_cmd) return guarded("gen-tasks", [&] { return cmd_gen_tasks(gen, gen_out); });
  return guarded("ablate", [&] { return cmd_ablate(abl); });
}
