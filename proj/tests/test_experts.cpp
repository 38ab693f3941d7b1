#include <doctest.h>

#include <random>
#include <sstream>

#include "mctd/error.hpp"
#include "mctd/experts.hpp"
#include "mctd/rng.hpp"
#include "mctd/uncertainty.hpp"

using namespace mctd;

namespace {

const Alphabet& AA = Alphabet::amino_acids();

PssmMatrix random_pssm(std::mt19937_64& rng, std::size_t len) {
  PssmMatrix m{AA, {}};
  for (std::size_t r = 0; r < len; ++r) {
    ProbabilityVector row(20);
    double s = 0.0;
    for (double& x : row) s += (x = static_cast<double>(rng() % 50));
    if (s == 0.0) row[0] = s = 1.0;
    for (double& x : row) x /= s;
    m.rows.push_back(row);
  }
  return m;
}

ProbabilityVector one_hot(std::size_t k) {
  ProbabilityVector v(20, 0.0);
  v[k] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("uniform expert distributions") {
  const auto e = uniform_expert();
  const auto reply = e->propose({Sequence("ACDEFG"), MaskSet({0, 4}), 1.0, 7});
  for (const auto& [pos, p] : reply.distributions.entries)
    for (double x : p) CHECK(x == 0.05);
  CHECK_NOTHROW(reply.validate(MaskSet({0, 4}), AA));
}

TEST_CASE("one-hot pssm column forces the sample") {
  std::mt19937_64 rng(1);
  PssmMatrix m = random_pssm(rng, 4);
  m.rows[2] = one_hot(AA.index_of('W'));
  const auto e = pssm_expert(m);
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    CHECK(e->propose({Sequence("AAAA"), MaskSet({2}), 1.0, seed}).sample.at(2) == 'W');
}

TEST_CASE("temperature 0.5 squares and renormalizes") {
  const ProbabilityVector p = {0.5, 0.3, 0.2};
  const auto q = apply_temperature(p, 0.5);
  const double z = 0.25 + 0.09 + 0.04;
  CHECK(q[0] == doctest::Approx(0.25 / z).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(0.09 / z).epsilon(1e-14));
  CHECK(q[2] == doctest::Approx(0.04 / z).epsilon(1e-14));
}

TEST_CASE("temperature zero is argmax with lowest-index ties") {
  CHECK(apply_temperature({0.2, 0.4, 0.4}, 0.0) == ProbabilityVector{0.0, 1.0, 0.0});
  const auto e = uniform_expert();
  const auto r = e->propose({Sequence("ACDE"), MaskSet({1, 2}), 0.0, 3});
  CHECK(r.sample.at(1) == 'A');
  CHECK(r.sample.at(2) == 'A');
}

TEST_CASE("lower temperature never lowers the argmax probability") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const PssmMatrix m = random_pssm(rng, 1);
    const auto& p = m.rows[0];
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    double prev = 0.0;
    for (double temp : {4.0, 2.0, 1.0, 0.7, 0.3, 0.1, 0.0}) {
      const double now = apply_temperature(p, temp)[best];
      CHECK(now >= prev - 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("sampling follows the documented SplitMix64 rule") {
  std::mt19937_64 rng(3);
  const PssmMatrix m = random_pssm(rng, 8);
  PositionDistributionSet d{"x", {}};
  for (std::size_t i : {1u, 4u, 6u}) d.entries[i] = m.rows[i];
  const std::uint64_t seed = 0xDEADBEEF;
  const auto got = sample_positions(d, AA, seed);
  SplitMix64 ref(seed);
  for (const auto& [pos, p] : d.entries) {
    const double u = static_cast<double>(ref() >> 11) / 9007199254740992.0;
    double cum = 0.0;
    std::size_t pick = 0;
    for (std::size_t a = 0; a < 20; ++a) {
      if (p[a] == 0.0) continue;
      pick = a;
      cum += p[a];
      if (cum > u) break;
    }
    CHECK(got.at(pos) == AA.symbol_at(pick));
  }
}

TEST_CASE("replies are deterministic in the seed") {
  std::mt19937_64 rng(4);
  const auto e = pssm_expert(random_pssm(rng, 30));
  const ExpertQuery q{Sequence(std::string(30, 'A')), MaskSet({0, 3, 9, 10, 29}), 1.0, 99};
  const auto a = e->propose(q), b = e->propose(q);
  CHECK(a.sample == b.sample);
  CHECK(a.distributions.entries == b.distributions.entries);
  ExpertQuery other = q;
  other.seed = 100;
  bool differs = false;
  for (std::uint64_t s = 100; s < 110 && !differs; ++s) {
    other.seed = s;
    differs = e->propose(other).sample != a.sample;
  }
  CHECK(differs);
}

TEST_CASE("splice examples") {
  const Sequence s("ACDE");
  CHECK(splice(s, MaskSet{}, {}) == s);
  CHECK(splice(s, MaskSet({0, 1, 2, 3}), {{0, 'W'}, {1, 'Y'}, {2, 'F'}, {3, 'H'}}).str() == "WYFH");
  CHECK(splice(s, MaskSet({1, 3}), {{1, 'W'}, {3, 'H'}}).str() == "AWDH");
  CHECK_THROWS_AS(splice(s, MaskSet({1, 3}), {{1, 'W'}}), ContractViolation);
  CHECK_THROWS_AS(splice(s, MaskSet({1}), {{2, 'W'}}), ContractViolation);
}

TEST_CASE("splice of a sample differs only inside the mask") {
  std::mt19937_64 rng(5);
  const auto e = pssm_expert(random_pssm(rng, 40));
  const Sequence seq(std::string(40, 'G'));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < 40; ++i)
      if (rng() % 3 == 0) idx.push_back(i);
    const MaskSet mask(idx);
    const Sequence out = splice(seq, mask, e->propose({seq, mask, 1.0, seed}).sample);
    for (std::size_t i = 0; i < 40; ++i)
      if (!mask.contains(i)) CHECK(out[i] == seq[i]);
  }
}

TEST_CASE("kmer order 1 is the smoothed marginal") {
  const std::vector<Sequence> corpus = {Sequence("AAC"), Sequence("ACD"), Sequence("WWW"),
                                        Sequence("AKA"), Sequence("CCA")};
  // Counts by hand over 15 letters: A 6, C 4, D 1, K 1, W 3.
  const double smooth = 0.5, denom = 15.0 + 20 * smooth;
  KmerExpert e(1, corpus, smooth);
  const auto d = e.distributions(Sequence("AAAA"), MaskSet({0, 2}));
  for (const auto& [pos, p] : d.entries) {
    CHECK(p[AA.index_of('A')] == doctest::Approx((6 + smooth) / denom).epsilon(1e-14));
    CHECK(p[AA.index_of('C')] == doctest::Approx((4 + smooth) / denom).epsilon(1e-14));
    CHECK(p[AA.index_of('D')] == doctest::Approx((1 + smooth) / denom).epsilon(1e-14));
    CHECK(p[AA.index_of('W')] == doctest::Approx((3 + smooth) / denom).epsilon(1e-14));
    CHECK(p[AA.index_of('Y')] == doctest::Approx(smooth / denom).epsilon(1e-14));
  }
}

TEST_CASE("kmer context and fallbacks") {
  const std::vector<Sequence> corpus = {Sequence("ACDACDACD")};
  KmerExpert e(3, corpus, 0.1);
  CHECK(e.id() == "kmer3");
  const Sequence s("ACDACW");
  // Context "AC" is followed by D three times: (3 + 0.1) / (3 + 20 * 0.1).
  const auto d = e.distributions(s, MaskSet({5}));
  CHECK(d.entries.at(5)[AA.index_of('D')] == doctest::Approx(0.62).epsilon(1e-14));
  CHECK(d.entries.at(5)[AA.index_of('W')] == doctest::Approx(0.02).epsilon(1e-14));
  // Masked context and sequence start fall back to the marginal.
  const auto m = e.distributions(s, MaskSet({4, 5}));
  const auto start = e.distributions(s, MaskSet({0}));
  CHECK(m.entries.at(5) == start.entries.at(0));
  // Unseen context too.
  const auto unseen = e.distributions(Sequence("WWWWWW"), MaskSet({3}));
  CHECK(unseen.entries.at(3) == start.entries.at(0));
  CHECK_THROWS_AS(KmerExpert(2, corpus, 0.0), ContractViolation);
}

TEST_CASE("sharp pssm is self-confident on its consensus") {
  PssmMatrix m{AA, {}};
  const std::string consensus = "MKTAYIAKQR";
  for (char c : consensus) {
    ProbabilityVector row(20, 0.01 / 19);
    row[AA.index_of(c)] = 0.99;
    m.rows.push_back(row);
  }
  const auto e = pssm_expert(m);
  const auto d = e->distributions(Sequence(consensus), MaskSet({0, 5, 9}));
  for (const auto& [pos, p] : d.entries) CHECK(p[AA.index_of(consensus[pos])] == doctest::Approx(0.99));
}

TEST_CASE("uniform against itself has zero surprisal") {
  const auto a = uniform_expert(), b = uniform_expert();
  const MaskSet mask({0, 1});
  EnsembleProposalSet set{mask, {a->distributions(Sequence("AC"), mask),
                                 b->distributions(Sequence("AC"), mask)}};
  CHECK(ensemble_surprisal(set) == 0.0);
}

TEST_CASE("pssm text format round trip") {
  std::mt19937_64 rng(6);
  const PssmMatrix m = random_pssm(rng, 5);
  std::stringstream ss;
  m.write(ss);
  const PssmMatrix back = PssmMatrix::parse(ss);
  REQUIRE(back.rows.size() == 5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t a = 0; a < 20; ++a) CHECK(back.rows[r][a] == m.rows[r][a]);
  std::istringstream bad("1 2 3\n");
  CHECK_THROWS(PssmMatrix::parse(bad));
}

TEST_CASE("pssm fit counts columns with pseudocounts") {
  const std::vector<Sequence> seqs = {Sequence("AC"), Sequence("AD"), Sequence("WC")};
  const PssmMatrix m = PssmMatrix::fit(seqs, 1.0);
  CHECK(m.rows[0][AA.index_of('A')] == doctest::Approx(3.0 / 23.0));
  CHECK(m.rows[0][AA.index_of('W')] == doctest::Approx(2.0 / 23.0));
  CHECK(m.rows[1][AA.index_of('C')] == doctest::Approx(3.0 / 23.0));
  CHECK(m.rows[1][AA.index_of('Y')] == doctest::Approx(1.0 / 23.0));
}

TEST_CASE("pssm expert rejects length mismatch") {
  std::mt19937_64 rng(7);
  const auto e = pssm_expert(random_pssm(rng, 4));
  CHECK_THROWS(e->propose({Sequence("ACDEF"), MaskSet({0}), 1.0, 0}));
}
