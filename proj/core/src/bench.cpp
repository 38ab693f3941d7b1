#include "mctd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mctd/error.hpp"
#include "mctd/rng.hpp"
#include "mctd/search.hpp"

namespace mctd::bench {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace {

std::size_t exact_count(double rho, std::size_t len) {
  return static_cast<std::size_t>(std::ceil(rho * static_cast<double>(len) - 1e-9));
}

char draw_symbol(SplitMix64& rng, std::span<const double> cdf, const Alphabet& alphabet) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
  return alphabet.symbol_at(idx);
}

char different_symbol(SplitMix64& rng, char current, const Alphabet& alphabet) {
  const std::size_t cur = alphabet.index_of(current);
  std::size_t pick = rng.below(alphabet.size() - 1);
  if (pick >= cur) ++pick;
  return alphabet.symbol_at(pick);
}

}  // namespace

std::vector<double> composition_of(std::span<const Sequence> corpus, const Alphabet& alphabet) {
  std::vector<double> freq(alphabet.size(), 0.0);
  double total = 0.0;
  for (const auto& s : corpus)
    for (std::size_t i = 0; i < s.length(); ++i) {
      freq[alphabet.index_of(s[i])] += 1.0;
      total += 1.0;
    }
  MCTD_EXPECTS(total > 0.0, "composition_of: empty corpus");
  for (double& f : freq) f /= total;
  return freq;
}

Sequence corrupt_exact(const Sequence& source, std::size_t count, std::uint64_t seed) {
  MCTD_EXPECTS(count <= source.length(), "corrupt_exact: more positions than residues");
  const Alphabet& alphabet = Alphabet::amino_acids();
  SplitMix64 rng(seed);
  std::vector<std::size_t> idx(source.length());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::string out = source.str();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out[idx[i]] = different_symbol(rng, out[idx[i]], alphabet);
  }
  return Sequence(out);
}

Sequence mutate(const Sequence& source, double rate, std::uint64_t seed) {
  const Alphabet& alphabet = Alphabet::amino_acids();
  SplitMix64 rng(seed);
  std::string out = source.str();
  for (char& c : out)
    if (rng.uniform() < rate) c = different_symbol(rng, c, alphabet);
  return Sequence(out);
}

std::vector<SyntheticTask> generate_tasks(const TaskGenParams& params) {
  if (params.count < 1) throw ConfigError("count", "must be >= 1");
  if (params.min_len < 10 || params.max_len > 1024 || params.min_len > params.max_len)
    throw ConfigError("length", "range must satisfy 10 <= min <= max <= 1024");
  if (!(params.rho > 0.0 && params.rho < 1.0)) throw ConfigError("rho", "must lie in (0, 1)");

  const Alphabet& alphabet = Alphabet::amino_acids();
  std::vector<double> comp =
      params.composition.empty() ? reference_composition().values : params.composition;
  if (comp.size() != alphabet.size()) throw ConfigError("composition", "needs 20 frequencies");
  std::vector<double> cdf(comp.size());
  std::partial_sum(comp.begin(), comp.end(), cdf.begin());
  if (!(cdf.back() > 0.0)) throw ConfigError("composition", "all-zero composition");
  for (double& c : cdf) c /= cdf.back();

  std::vector<SyntheticTask> tasks;
  tasks.reserve(params.count);
  for (std::size_t t = 0; t < params.count; ++t) {
    SyntheticTask task;
    task.seed = hash_combine(mix64(params.seed), t);
    task.rho = params.rho;
    char id[64];
    std::snprintf(id, sizeof id, "s%llu-t%03zu", static_cast<unsigned long long>(params.seed), t);
    task.task_id = id;

    SplitMix64 rng(task.seed);
    const std::size_t len = params.min_len + rng.below(params.max_len - params.min_len + 1);
    std::string target(len, 'A');
    for (char& c : target) c = draw_symbol(rng, cdf, alphabet);
    task.target = Sequence(target);
    task.target_profile = hydropathy_profile(task.target);
    task.baseline = corrupt_exact(task.target, exact_count(params.rho, len),
                                  hash_combine(task.seed, 0xBA5E));
    tasks.push_back(std::move(task));
  }
  return tasks;
}

void write_tasks(std::ostream& out, std::span<const SyntheticTask> tasks) {
  for (const auto& t : tasks) {
    ojson j;
    j["task_id"] = t.task_id;
    j["length"] = t.length();
    j["seed"] = t.seed;
    j["rho"] = t.rho;
    j["target"] = t.target.str();
    j["baseline"] = t.baseline.str();
    j["profile"] = t.target_profile;
    out << j.dump() << '\n';
  }
}

std::vector<SyntheticTask> read_tasks(std::istream& in) {
  std::vector<SyntheticTask> tasks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      SyntheticTask t;
      t.task_id = j.at("task_id").get<std::string>();
      t.seed = j.at("seed").get<std::uint64_t>();
      t.rho = j.at("rho").get<double>();
      t.target = Sequence(j.at("target").get<std::string>());
      t.baseline = Sequence(j.at("baseline").get<std::string>());
      t.target_profile = j.at("profile").get<std::vector<double>>();
      MCTD_EXPECTS(t.baseline.length() == t.target.length() &&
                       t.target_profile.size() == t.target.length(),
                   "lengths disagree");
      tasks.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw Error("task file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

std::vector<SyntheticTask> load_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open task file '" + path + "'");
  return read_tasks(in);
}

// ---------------------------------------------------------------------------

double true_token_probability(const Expert& expert, const Sequence& context,
                              const Sequence& truth, std::span<const std::size_t> positions) {
  MCTD_EXPECTS(!positions.empty(), "true_token_probability: no positions");
  double sum = 0.0;
  for (std::size_t i : positions) {
    const auto d = expert.distributions(context, MaskSet({i}, context.length()));
    sum += d.entries.at(i)[expert.alphabet().index_of(truth[i])];
  }
  return sum / static_cast<double>(positions.size());
}

TaskExperts fit_task_experts(const SyntheticTask& task, std::uint64_t seed,
                             const ExpertFitParams& params) {
  MCTD_EXPECTS(params.homologs >= 1 && params.corrupted_copies >= 1,
               "fit_task_experts: empty corpus");
  const std::size_t len = task.length();
  for (std::size_t attempt = 0; attempt < params.max_attempts; ++attempt) {
    const std::uint64_t s = hash_combine(hash_combine(mix64(seed), fnv1a64(task.task_id)), attempt);

    std::vector<Sequence> homologs;
    for (std::size_t h = 0; h < params.homologs; ++h)
      homologs.push_back(mutate(task.target, params.homolog_divergence, hash_combine(s, h)));
    std::vector<Sequence> corrupted;
    for (std::size_t c = 0; c < params.corrupted_copies; ++c)
      corrupted.push_back(corrupt_exact(task.target, exact_count(task.rho, len),
                                        hash_combine(s, 1000 + c)));

    TaskExperts out;
    out.experts.push_back(std::make_shared<UniformExpert>());
    out.experts.push_back(std::make_shared<KmerExpert>(params.kmer_order, corrupted,
                                                       params.kmer_smoothing));
    out.experts.push_back(
        std::make_shared<PssmExpert>(PssmMatrix::fit(homologs, params.pssm_pseudocount)));

    SplitMix64 rng(hash_combine(s, 0x4E1D));
    std::vector<std::size_t> idx(len);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t held = std::max<std::size_t>(1, exact_count(params.held_out_fraction, len));
    for (std::size_t i = 0; i < held; ++i) std::swap(idx[i], idx[i + rng.below(len - i)]);
    idx.resize(held);
    std::sort(idx.begin(), idx.end());

    for (const auto& e : out.experts)
      out.fidelity.push_back(true_token_probability(*e, task.baseline, task.target, idx));
    if (out.fidelity[0] < out.fidelity[1] && out.fidelity[1] < out.fidelity[2]) return out;
  }
  throw Error("fit_task_experts: fidelity ordering uniform < kmer < pssm not reached for task " +
              task.task_id);
}

std::string variant_label(Mode mode, const std::string& single_expert_id) {
  if (mode == Mode::single_expert) return "single_expert:" + single_expert_id;
  return std::string(to_string(mode));
}

std::vector<AblationVariant> standard_variants(std::span<const std::string> expert_ids) {
  std::vector<AblationVariant> v;
  v.push_back({variant_label(Mode::random_no_expert), Mode::random_no_expert, 0});
  for (std::size_t i = 0; i < expert_ids.size(); ++i)
    v.push_back({variant_label(Mode::single_expert, expert_ids[i]), Mode::single_expert, i});
  v.push_back({variant_label(Mode::multi_expert), Mode::multi_expert, 0});
  return v;
}

TaskRun execute_task(const SyntheticTask& task, const RunConfig& cfg,
                     const std::vector<std::shared_ptr<Expert>>& experts,
                     const std::string& variant, std::ostream* replay) {
  TaskRun out;
  RunSummary& s = out.summary;
  s.task_id = task.task_id;
  s.variant = variant;
  s.mode = cfg.mode;
  s.seed = cfg.seed;
  s.length = task.length();
  const auto start = std::chrono::steady_clock::now();

  const RunConfig checked = validate_config(cfg);
  s.config_hash = config_hash(checked);
  s.search_hash = search_hash(checked);
  const CriticPanel panel = standard_panel(task.target, checked.reward_weights);
  auto metrics = [&](const Sequence& seq, double reward) {
    return MetricTriple{aar(seq, task.target), reward, structure_proxy(seq, task.target_profile)};
  };
  s.baseline = metrics(task.baseline, panel(task.baseline).composite);

  ReplayLog log(replay);
  Search search(checked, task.baseline, experts, panel, nullptr, &log);
  SearchResult result = search.run();
  const auto& best = result.ranked.front();
  s.final_ = metrics(best.sequence, best.report.composite);
  s.final_sequence = best.sequence.str();
  s.simulations_used = result.simulations_used;
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.ranked = std::move(result.ranked);
  return out;
}

RunSummary run_task(const SyntheticTask& task, const RunConfig& cfg,
                    const std::vector<std::shared_ptr<Expert>>& experts, const std::string& variant,
                    std::ostream* replay) {
  const auto start = std::chrono::steady_clock::now();
  try {
    return execute_task(task, cfg, experts, variant, replay).summary;
  } catch (const std::exception& e) {
    RunSummary s;
    s.task_id = task.task_id;
    s.variant = variant;
    s.mode = cfg.mode;
    s.seed = cfg.seed;
    s.length = task.length();
    s.ok = false;
    s.error = e.what();
    s.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
  }
}

AblationReport run_ablation(std::span<const SyntheticTask> tasks, const RunConfig& base,
                            std::span<const AblationVariant> variants,
                            std::span<const std::uint64_t> seeds, std::size_t jobs,
                            std::uint64_t expert_seed, const ExpertFitParams& fit) {
  struct Job {
    std::size_t task, variant, seed;
  };
  std::vector<Job> work;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (std::size_t v = 0; v < variants.size(); ++v)
      for (std::size_t s = 0; s < seeds.size(); ++s) work.push_back({t, v, s});

  std::vector<std::optional<TaskExperts>> experts(tasks.size());
  std::vector<std::string> fit_errors(tasks.size());
  std::vector<RunSummary> runs(work.size());

  auto parallel = [&](std::size_t count, auto&& body) {
    std::atomic<std::size_t> next{0};
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, count));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      });
    for (auto& th : pool) th.join();
  };

  parallel(tasks.size(), [&](std::size_t t) {
    try {
      experts[t] = fit_task_experts(tasks[t], expert_seed, fit);
    } catch (const std::exception& e) {
      fit_errors[t] = e.what();
    }
  });

  parallel(work.size(), [&](std::size_t i) {
    const Job& job = work[i];
    const SyntheticTask& task = tasks[job.task];
    const AblationVariant& variant = variants[job.variant];
    RunConfig cfg = base;
    cfg.mode = variant.mode;
    cfg.single_expert_index = variant.single_expert_index;
    cfg.seed = seeds[job.seed];
    if (!experts[job.task]) {
      RunSummary s;
      s.task_id = task.task_id;
      s.variant = variant.label;
      s.mode = variant.mode;
      s.seed = cfg.seed;
      s.length = task.length();
      s.ok = false;
      s.error = fit_errors[job.task];
      runs[i] = std::move(s);
      return;
    }
    const auto& ex = experts[job.task]->experts;
    cfg.E = ex.size();
    runs[i] = run_task(task, cfg, ex, variant.label);
  });

  AblationReport report;
  report.runs = std::move(runs);
  std::sort(report.runs.begin(), report.runs.end(), [](const RunSummary& a, const RunSummary& b) {
    return std::tie(a.task_id, a.variant, a.seed) < std::tie(b.task_id, b.variant, b.seed);
  });
  for (const auto& r : report.runs) report.failures += !r.ok;
  return report;
}

double sign_test_p_value(std::size_t positives, std::size_t n) {
  MCTD_EXPECTS(positives <= n, "sign_test_p_value: positives > n");
  double p = 0.0;
  for (std::size_t k = positives; k <= n; ++k) {
    const double log_choose = std::lgamma(static_cast<double>(n) + 1.0) -
                              std::lgamma(static_cast<double>(k) + 1.0) -
                              std::lgamma(static_cast<double>(n - k) + 1.0);
    p += std::exp(log_choose - static_cast<double>(n) * std::log(2.0));
  }
  return std::min(1.0, p);
}

}  // namespace mctd::bench
