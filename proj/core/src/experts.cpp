#include "mctd/experts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mctd/error.hpp"
#include "mctd/rng.hpp"

namespace mctd {

void ExpertReply::validate(const MaskSet& mask, const Alphabet& alphabet) const {
  distributions.validate(mask, alphabet.size());
  MCTD_EXPECTS(sample.size() == mask.size(), "sample keys do not match mask");
  for (std::size_t i : mask) {
    auto it = sample.find(i);
    MCTD_EXPECTS(it != sample.end(), "no sample for masked position " + std::to_string(i));
    const int a = alphabet.find(it->second);
    MCTD_EXPECTS(a != Alphabet::kNone, "sampled symbol outside alphabet");
    MCTD_EXPECTS(distributions.entries.at(i)[static_cast<std::size_t>(a)] > 0.0,
                 "sampled symbol has zero probability at " + std::to_string(i));
  }
  if (confidence) {
    MCTD_EXPECTS(confidence->size() > 0, "empty confidence profile");
  }
}

PositionDistributionSet Expert::distributions(const Sequence& sequence,
                                              const MaskSet& mask) const {
  return propose({sequence, mask, 1.0, 0}).distributions;
}

ProbabilityVector apply_temperature(const ProbabilityVector& p, double temperature) {
  MCTD_EXPECTS(temperature >= 0.0 && std::isfinite(temperature), "temperature must be >= 0");
  if (temperature == 1.0) return p;
  ProbabilityVector out(p.size(), 0.0);
  if (temperature == 0.0) {
    const auto best = std::max_element(p.begin(), p.end());  // first maximum
    out[static_cast<std::size_t>(best - p.begin())] = 1.0;
    return out;
  }
  const double inv = 1.0 / temperature;
  double sum = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    out[a] = p[a] > 0.0 ? std::pow(p[a], inv) : 0.0;
    sum += out[a];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    // Underflow at very low temperature: fall back to the argmax limit.
    return apply_temperature(p, 0.0);
  }
  for (double& x : out) x /= sum;
  return out;
}

std::map<std::size_t, char> sample_positions(const PositionDistributionSet& dists,
                                             const Alphabet& alphabet, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::map<std::size_t, char> out;
  for (const auto& [pos, p] : dists.entries) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t chosen = p.size();
    std::size_t last_nonzero = p.size();
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (p[a] <= 0.0) continue;
      last_nonzero = a;
      cum += p[a];
      if (cum > u) {
        chosen = a;
        break;
      }
    }
    if (chosen == p.size()) chosen = last_nonzero;
    MCTD_EXPECTS(chosen < p.size(), "cannot sample from an all-zero distribution");
    out.emplace(pos, alphabet.symbol_at(chosen));
  }
  return out;
}

ExpertReply reply_from_distributions(const PositionDistributionSet& raw, const ExpertQuery& query,
                                     const Alphabet& alphabet, std::uint64_t expert_seed) {
  ExpertReply reply;
  reply.distributions.expert_id = raw.expert_id;
  for (const auto& [pos, p] : raw.entries)
    reply.distributions.entries.emplace(pos, apply_temperature(p, query.temperature));
  reply.sample = sample_positions(reply.distributions, alphabet, query.seed ^ expert_seed);
  return reply;
}

Sequence splice(const Sequence& sequence, const MaskSet& mask,
                const std::map<std::size_t, char>& fill) {
  MCTD_EXPECTS(fill.size() == mask.size(), "splice: fill keys do not match mask");
  std::string out = sequence.str();
  for (std::size_t i : mask) {
    auto it = fill.find(i);
    MCTD_EXPECTS(it != fill.end(), "splice: no fill for position " + std::to_string(i));
    MCTD_EXPECTS(i < out.size(), "splice: position out of range");
    out[i] = it->second;
  }
  return Sequence(out);
}

namespace {

void check_query(const ExpertQuery& q) {
  MCTD_EXPECTS(q.mask.empty() || q.mask.indices().back() < q.sequence.length(),
               "expert query: mask index out of range");
}

}  // namespace

// ---------------------------------------------------------------------------

UniformExpert::UniformExpert(Alphabet alphabet, std::uint64_t seed, std::string id)
    : alphabet_(std::move(alphabet)), seed_(seed), id_(std::move(id)) {}

PositionDistributionSet UniformExpert::distributions(const Sequence& sequence,
                                                     const MaskSet& mask) const {
  check_query({sequence, mask});
  PositionDistributionSet out{id_, {}};
  const ProbabilityVector p(alphabet_.size(), 1.0 / static_cast<double>(alphabet_.size()));
  for (std::size_t i : mask) out.entries.emplace(i, p);
  return out;
}

ExpertReply UniformExpert::propose(const ExpertQuery& query) const {
  return reply_from_distributions(distributions(query.sequence, query.mask), query, alphabet_,
                                  seed_);
}

// ---------------------------------------------------------------------------

PssmMatrix PssmMatrix::fit(std::span<const Sequence> aligned, double pseudocount,
                           const Alphabet& alphabet) {
  MCTD_EXPECTS(!aligned.empty(), "PssmMatrix::fit: no sequences");
  MCTD_EXPECTS(pseudocount >= 0.0, "PssmMatrix::fit: negative pseudocount");
  const std::size_t len = aligned.front().length();
  PssmMatrix m{alphabet, std::vector<ProbabilityVector>(len, ProbabilityVector(alphabet.size(), pseudocount))};
  for (const auto& s : aligned) {
    MCTD_EXPECTS(s.length() == len, "PssmMatrix::fit: sequences differ in length");
    for (std::size_t i = 0; i < len; ++i) m.rows[i][alphabet.index_of(s[i])] += 1.0;
  }
  for (auto& row : m.rows) {
    double sum = 0.0;
    for (double x : row) sum += x;
    MCTD_EXPECTS(sum > 0.0, "PssmMatrix::fit: empty column");
    for (double& x : row) x /= sum;
  }
  return m;
}

PssmMatrix PssmMatrix::parse(std::istream& in) {
  PssmMatrix m{Alphabet::amino_acids(), {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key, value;
      if (hs >> key >> value && key == "alphabet") {
        MCTD_EXPECTS(m.rows.empty(), "pssm: alphabet header after data rows");
        m.alphabet = Alphabet(value);
      }
      continue;
    }
    std::istringstream ls(line);
    ProbabilityVector row;
    double x;
    while (ls >> x) {
      MCTD_EXPECTS(std::isfinite(x) && x >= 0.0,
                   "pssm line " + std::to_string(line_no) + ": negative weight");
      row.push_back(x);
    }
    MCTD_EXPECTS(ls.eof(), "pssm line " + std::to_string(line_no) + ": not a number");
    MCTD_EXPECTS(row.size() == m.alphabet.size(),
                 "pssm line " + std::to_string(line_no) + ": expected " +
                     std::to_string(m.alphabet.size()) + " values");
    double sum = 0.0;
    for (double v : row) sum += v;
    MCTD_EXPECTS(sum > 0.0, "pssm line " + std::to_string(line_no) + ": all-zero row");
    // Rows already normalized are kept bit-exact so write/parse round-trips.
    if (std::abs(sum - 1.0) > 1e-12)
      for (double& v : row) v /= sum;
    m.rows.push_back(std::move(row));
  }
  MCTD_EXPECTS(!m.rows.empty(), "pssm: no rows");
  return m;
}

PssmMatrix PssmMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pssm file '" + path + "'");
  return parse(in);
}

void PssmMatrix::write(std::ostream& out) const {
  out << "# alphabet " << alphabet.symbols() << '\n';
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t a = 0; a < row.size(); ++a) {
      const auto res = std::to_chars(buf, buf + sizeof buf, row[a]);
      out << (a ? " " : "") << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

PssmExpert::PssmExpert(PssmMatrix matrix, std::uint64_t seed, std::string id)
    : matrix_(std::move(matrix)), seed_(seed), id_(std::move(id)) {
  MCTD_EXPECTS(matrix_.length() > 0, "pssm_expert: empty matrix");
  for (const auto& row : matrix_.rows) {
    MCTD_EXPECTS(row.size() == matrix_.alphabet.size(), "pssm_expert: row length mismatch");
    check_distribution(row, "pssm row");
  }
}

PositionDistributionSet PssmExpert::distributions(const Sequence& sequence,
                                                  const MaskSet& mask) const {
  check_query({sequence, mask});
  if (sequence.length() != matrix_.length())
    throw ExpertFailure(id_, "sequence length " + std::to_string(sequence.length()) +
                                 " does not match profile length " +
                                 std::to_string(matrix_.length()));
  PositionDistributionSet out{id_, {}};
  for (std::size_t i : mask) out.entries.emplace(i, matrix_.rows[i]);
  return out;
}

ExpertReply PssmExpert::propose(const ExpertQuery& query) const {
  return reply_from_distributions(distributions(query.sequence, query.mask), query,
                                  matrix_.alphabet, seed_);
}

// ---------------------------------------------------------------------------

KmerExpert::KmerExpert(std::size_t order, std::span<const Sequence> training, double smoothing,
                       std::uint64_t seed, std::string id, const Alphabet& alphabet)
    : alphabet_(alphabet),
      order_(order),
      smoothing_(smoothing),
      seed_(seed),
      id_(id.empty() ? "kmer" + std::to_string(order) : std::move(id)),
      marginal_(alphabet.size(), 0.0) {
  MCTD_EXPECTS(order >= 1, "kmer_expert: order must be >= 1");
  MCTD_EXPECTS(smoothing > 0.0 && std::isfinite(smoothing), "kmer_expert: smoothing must be > 0");
  MCTD_EXPECTS(!training.empty(), "kmer_expert: empty training corpus");

  const double k = static_cast<double>(alphabet_.size());
  double total = 0.0;
  for (const auto& s : training) {
    for (std::size_t i = 0; i < s.length(); ++i) {
      const std::size_t a = alphabet_.index_of(s[i]);
      marginal_[a] += 1.0;
      total += 1.0;
      if (order_ > 1 && i + 1 >= order_) {
        auto& counts = context_counts_[s.str().substr(i + 1 - order_, order_ - 1)];
        if (counts.empty()) counts.assign(alphabet_.size(), 0.0);
        counts[a] += 1.0;
      }
    }
  }
  for (double& m : marginal_) m = (m + smoothing_) / (total + smoothing_ * k);
}

PositionDistributionSet KmerExpert::distributions(const Sequence& sequence,
                                                  const MaskSet& mask) const {
  check_query({sequence, mask});
  const double k = static_cast<double>(alphabet_.size());
  PositionDistributionSet out{id_, {}};
  for (std::size_t i : mask) {
    const std::vector<double>* counts = nullptr;
    if (order_ > 1 && i + 1 >= order_) {
      bool context_visible = true;
      for (std::size_t j = i + 1 - order_; j < i; ++j) context_visible &= !mask.contains(j);
      if (context_visible) {
        auto it = context_counts_.find(sequence.str().substr(i + 1 - order_, order_ - 1));
        if (it != context_counts_.end()) counts = &it->second;
      }
    }
    if (!counts) {
      out.entries.emplace(i, marginal_);
      continue;
    }
    double n = 0.0;
    for (double c : *counts) n += c;
    ProbabilityVector p(alphabet_.size());
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = ((*counts)[a] + smoothing_) / (n + smoothing_ * k);
    out.entries.emplace(i, std::move(p));
  }
  return out;
}

ExpertReply KmerExpert::propose(const ExpertQuery& query) const {
  return reply_from_distributions(distributions(query.sequence, query.mask), query, alphabet_,
                                  seed_);
}

std::shared_ptr<Expert> uniform_expert(Alphabet alphabet, std::uint64_t seed) {
  return std::make_shared<UniformExpert>(std::move(alphabet), seed);
}

std::shared_ptr<Expert> pssm_expert(PssmMatrix matrix, std::uint64_t seed) {
  return std::make_shared<PssmExpert>(std::move(matrix), seed);
}

std::shared_ptr<Expert> kmer_expert(std::size_t order, std::span<const Sequence> training,
                                    double smoothing, std::uint64_t seed) {
  return std::make_shared<KmerExpert>(order, training, smoothing, seed);
}

}  // namespace mctd
