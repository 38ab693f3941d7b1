#include "mctd/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mctd/config.hpp"
#include "mctd/error.hpp"
#include "mctd/rng.hpp"

namespace mctd {

namespace {

ResidueTable make_table(std::initializer_list<std::pair<char, double>> entries) {
  ResidueTable t{Alphabet::amino_acids(), std::vector<double>(20, 0.0)};
  for (auto [c, v] : entries) t.values[t.alphabet.index_of(c)] = v;
  return t;
}

}  // namespace

ResidueTable ResidueTable::parse(std::istream& in, const Alphabet& alphabet) {
  ResidueTable t{alphabet, std::vector<double>(alphabet.size(), 0.0)};
  std::vector<bool> seen(alphabet.size(), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string symbol;
    double value;
    if (!(ls >> symbol)) continue;
    MCTD_EXPECTS(symbol.size() == 1 && (ls >> value),
                 "residue table line " + std::to_string(line_no) + ": expected 'symbol value'");
    const std::size_t a = alphabet.index_of(symbol[0]);
    MCTD_EXPECTS(!seen[a], "residue table: duplicate symbol '" + symbol + "'");
    seen[a] = true;
    t.values[a] = value;
  }
  MCTD_EXPECTS(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }),
               "residue table: missing symbols");
  return t;
}

ResidueTable ResidueTable::load(const std::string& path, const Alphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open residue table '" + path + "'");
  return parse(in, alphabet);
}

void ResidueTable::write(std::ostream& out) const {
  char buf[32];
  for (std::size_t a = 0; a < alphabet.size(); ++a) {
    const auto res = std::to_chars(buf, buf + sizeof buf, values[a]);
    out << alphabet.symbol_at(a) << ' ' << std::string_view(buf, res.ptr) << '\n';
  }
}

std::string ResidueTable::digest() const {
  std::ostringstream os;
  write(os);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

const ResidueTable& kyte_doolittle() {
  static const ResidueTable t = make_table({
      {'A', 1.8},  {'R', -4.5}, {'N', -3.5}, {'D', -3.5}, {'C', 2.5},  {'Q', -3.5}, {'E', -3.5},
      {'G', -0.4}, {'H', -3.2}, {'I', 4.5},  {'L', 3.8},  {'K', -3.9}, {'M', 1.9},  {'F', 2.8},
      {'P', -1.6}, {'S', -0.8}, {'T', -0.7}, {'W', -0.9}, {'Y', -1.3}, {'V', 4.2},
  });
  return t;
}

const ResidueTable& reference_composition() {
  // Residues per hundred. Rounded natural-protein frequencies, adjusted so
  // that K+R+H = D+E and the Kyte-Doolittle mean is exactly -0.4.
  static const ResidueTable t = make_table({
      {'A', 0.09}, {'R', 0.06}, {'N', 0.04}, {'D', 0.06}, {'C', 0.01}, {'Q', 0.04}, {'E', 0.07},
      {'G', 0.08}, {'H', 0.01}, {'I', 0.05}, {'L', 0.09}, {'K', 0.06}, {'M', 0.01}, {'F', 0.04},
      {'P', 0.05}, {'S', 0.08}, {'T', 0.06}, {'W', 0.01}, {'Y', 0.03}, {'V', 0.06},
  });
  return t;
}

std::vector<double> hydropathy_profile(const Sequence& s, std::size_t window) {
  MCTD_EXPECTS(window >= 1, "hydropathy_profile: window must be >= 1");
  const auto& kd = kyte_doolittle();
  const std::size_t len = s.length();
  std::vector<double> raw(len), out(len);
  for (std::size_t i = 0; i < len; ++i) raw[i] = kd(s[i]);
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(len, i + (window - half));
    double sum = 0.0;
    for (std::size_t j = lo; j < hi; ++j) sum += raw[j];
    out[i] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

double mean_hydropathy(const Sequence& s) {
  if (s.empty()) return 0.0;
  const auto& kd = kyte_doolittle();
  double sum = 0.0;
  for (std::size_t i = 0; i < s.length(); ++i) sum += kd(s[i]);
  return sum / static_cast<double>(s.length());
}

int net_charge(const Sequence& s) {
  int net = 0;
  for (std::size_t i = 0; i < s.length(); ++i) {
    switch (s[i]) {
      case 'K': case 'R': case 'H': ++net; break;
      case 'D': case 'E': --net; break;
      default: break;
    }
  }
  return net;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  MCTD_EXPECTS(a.size() == b.size(), "pearson: length mismatch");
  const std::size_t n = a.size();
  if (n == 0) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  constexpr double kFlat = 1e-12;
  if (saa <= kFlat * static_cast<double>(n) || sbb <= kFlat * static_cast<double>(n))
    return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double aar(const Sequence& candidate, const Sequence& target) {
  MCTD_EXPECTS(candidate.length() == target.length(), "aar: length mismatch");
  if (candidate.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < candidate.length(); ++i) same += candidate[i] == target[i];
  return static_cast<double>(same) / static_cast<double>(candidate.length());
}

double structure_proxy(const Sequence& candidate, std::span<const double> target_profile) {
  MCTD_EXPECTS(candidate.length() == target_profile.size(),
               "structure_proxy: profile length mismatch");
  const auto profile = hydropathy_profile(candidate);
  const auto r = pearson(profile, target_profile);
  return r ? (1.0 + *r) / 2.0 : 0.5;
}

BiophysicalTerms biophysical_terms(const Sequence& candidate) {
  BiophysicalTerms t;
  if (candidate.empty()) return t;
  const double len = static_cast<double>(candidate.length());

  t.hydro = std::clamp(1.0 - std::abs(mean_hydropathy(candidate) - kReferenceHydropathy) / 4.5,
                       0.0, 1.0);

  const auto& ref = reference_composition();
  std::vector<double> freq(ref.alphabet.size(), 0.0);
  for (std::size_t i = 0; i < candidate.length(); ++i) freq[ref.alphabet.index_of(candidate[i])] += 1.0;
  double tv = 0.0;
  for (std::size_t a = 0; a < freq.size(); ++a) tv += std::abs(freq[a] / len - ref.values[a]);
  t.composition = std::clamp(1.0 - 0.5 * tv, 0.0, 1.0);

  t.charge = 1.0 - std::min(1.0, std::abs(static_cast<double>(net_charge(candidate))) / len * 5.0);
  return t;
}

double biophysical_bonus(const Sequence& candidate) { return biophysical_terms(candidate).total(); }

// ---------------------------------------------------------------------------

namespace {
const std::string kAarName(critic_names::aar);
const std::string kProxyName(critic_names::structure_proxy);
const std::string kBioName(critic_names::biophysical);
}  // namespace

AarCritic::AarCritic(Sequence target) : target_(std::move(target)) {}
const std::string& AarCritic::name() const noexcept { return kAarName; }

StructureProxyCritic::StructureProxyCritic(std::vector<double> target_profile)
    : target_profile_(std::move(target_profile)) {}
const std::string& StructureProxyCritic::name() const noexcept { return kProxyName; }

const std::string& BiophysicalCritic::name() const noexcept { return kBioName; }

CriticReport composite_reward(const Sequence& candidate,
                              std::span<const std::shared_ptr<Critic>> critics,
                              const CriticWeights& weights) {
  MCTD_EXPECTS(!critics.empty(), "composite_reward: no critics");
  CriticReport report;
  for (const auto& critic : critics) {
    const std::string& name = critic->name();
    auto w = weights.find(name);
    if (w == weights.end()) throw EvaluationError(name, "no weight configured");
    double score = 0.0;
    try {
      score = critic->score(candidate);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(name, e.what());
    }
    if (!std::isfinite(score)) throw EvaluationError(name, "non-finite score");
    report.per_critic[name] = score;
    report.composite += w->second * score;
  }
  for (const auto& [name, w] : weights) {
    if (!report.per_critic.count(name)) throw EvaluationError(name, "weighted critic not configured");
  }
  return report;
}

CriticPanel::CriticPanel(std::vector<std::shared_ptr<Critic>> critics, CriticWeights weights)
    : critics_(std::move(critics)), weights_(std::move(weights)) {
  MCTD_EXPECTS(!critics_.empty(), "critic panel: no critics");
  for (const auto& c : critics_) {
    MCTD_EXPECTS(weights_.count(c->name()), "critic panel: no weight for '" + c->name() + "'");
  }
  MCTD_EXPECTS(weights_.size() == critics_.size(), "critic panel: weight without a critic");
}

CriticPanel standard_panel(const Sequence& target, const CriticWeights& weights) {
  std::vector<std::shared_ptr<Critic>> critics{
      std::make_shared<AarCritic>(target),
      std::make_shared<StructureProxyCritic>(hydropathy_profile(target)),
      std::make_shared<BiophysicalCritic>(),
  };
  return CriticPanel(std::move(critics), weights);
}

// ---------------------------------------------------------------------------

CriticReport EvaluationCache::evaluate(const Sequence& candidate, const CriticPanel& panel) {
  std::promise<CriticReport> promise;
  std::shared_future<CriticReport> pending;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(candidate.str());
    if (it != entries_.end()) {
      pending = it->second;
    } else {
      entries_.emplace(candidate.str(), promise.get_future().share());
      ++misses_;
    }
  }
  if (pending.valid()) {
    ++hits_;
    return pending.get();
  }
  try {
    CriticReport report = panel(candidate);
    promise.set_value(report);
    return report;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    entries_.erase(candidate.str());
    --misses_;
    throw;
  }
}

const CriticReport* EvaluationCache::find(const Sequence& candidate) const {
  std::shared_future<CriticReport> fut;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(candidate.str());
    if (it == entries_.end()) return nullptr;
    fut = it->second;
  }
  // The map keeps the shared state alive, so the reference outlives `fut`.
  return &fut.get();
}

std::size_t EvaluationCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<EvaluationCache::Entry> EvaluationCache::top(std::size_t n) const {
  std::vector<std::pair<std::string, std::shared_future<CriticReport>>> snapshot;
  {
    std::lock_guard lock(mu_);
    snapshot.assign(entries_.begin(), entries_.end());
  }
  std::vector<Entry> all;
  all.reserve(snapshot.size());
  for (const auto& [seq, fut] : snapshot) all.push_back({seq, fut.get()});
  auto better = [](const Entry& a, const Entry& b) {
    if (a.report.composite != b.report.composite) return a.report.composite > b.report.composite;
    return a.sequence < b.sequence;
  };
  if (n < all.size()) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
    all.resize(n);
  } else {
    std::sort(all.begin(), all.end(), better);
  }
  return all;
}

double EvaluationCache::max_composite() const {
  const auto best = top(1);
  MCTD_EXPECTS(!best.empty(), "max_composite: empty cache");
  return best.front().report.composite;
}

}  // namespace mctd
