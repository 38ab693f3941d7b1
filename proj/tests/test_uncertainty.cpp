#include <doctest.h>

#include <cmath>
#include <random>

#include "mctd/error.hpp"
#include "mctd/uncertainty.hpp"
#include "support/oracles.hpp"

using namespace mctd;

namespace {

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> g(0.3, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (double& x : p) s += (x = g(rng) + 1e-300);
  for (double& x : p) x /= s;
  return p;
}

EnsembleProposalSet make_set(const std::vector<std::size_t>& mask,
                             const std::vector<std::vector<std::vector<double>>>& p) {
  EnsembleProposalSet set;
  set.mask = MaskSet(mask);
  for (std::size_t e = 0; e < p.size(); ++e) {
    PositionDistributionSet d;
    d.expert_id = "e" + std::to_string(e);
    for (std::size_t i = 0; i < mask.size(); ++i) d.entries[mask[i]] = p[e][i];
    set.per_expert.push_back(d);
  }
  return set;
}

std::vector<double> one_hot(std::size_t n, std::size_t k) {
  std::vector<double> v(n, 0.0);
  v[k] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("shannon entropy examples") {
  CHECK(shannon_entropy(one_hot(20, 3)) == 0.0);
  CHECK(shannon_entropy({0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // -0.9 ln 0.9 - 0.1 ln 0.1, evaluated independently.
  CHECK(shannon_entropy({0.9, 0.1}) == doctest::Approx(0.3250829733914482).epsilon(1e-14));
  CHECK_THROWS_AS(shannon_entropy({0.6, 0.6}), ContractViolation);
}

TEST_CASE("surprisal of identical experts is zero") {
  std::mt19937_64 rng(3);
  const auto p = random_distribution(rng, 20), q = random_distribution(rng, 20);
  CHECK(ensemble_surprisal(make_set({0, 5}, {{p, q}, {p, q}})) == 0.0);
}

TEST_CASE("binary maximal disagreement gives ln 2") {
  const auto set = make_set({2}, {{one_hot(20, 0)}, {one_hot(20, 1)}});
  CHECK(std::abs(ensemble_surprisal(set) - std::log(2.0)) <= 1e-9);
}

TEST_CASE("single expert surprisal is exactly zero") {
  std::mt19937_64 rng(4);
  CHECK(ensemble_surprisal(make_set({1, 2, 3}, {{random_distribution(rng, 20),
                                                 random_distribution(rng, 20),
                                                 random_distribution(rng, 20)}})) == 0.0);
}

TEST_CASE("empty mask is an error") {
  EnsembleProposalSet set;
  set.per_expert.push_back({"a", {}});
  CHECK_THROWS_AS(ensemble_surprisal(set), ContractViolation);
}

TEST_CASE("mismatched expert keys are rejected") {
  auto set = make_set({0, 1}, {{one_hot(20, 0), one_hot(20, 0)}, {one_hot(20, 1), one_hot(20, 1)}});
  set.per_expert[1].entries.erase(1);
  set.per_expert[1].entries[2] = one_hot(20, 1);
  CHECK_THROWS_AS(ensemble_surprisal(set), ContractViolation);
}

TEST_CASE("surprisal matches brute force on random instances") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t E = 1 + rng() % 5, M = 1 + rng() % 8;
    std::vector<std::size_t> mask;
    for (std::size_t i = 0; i < M; ++i) mask.push_back(i * 3 + rng() % 3);
    std::vector<std::vector<std::vector<double>>> p(E, std::vector<std::vector<double>>(M));
    for (auto& e : p)
      for (auto& v : e) v = random_distribution(rng, 20);
    const double got = ensemble_surprisal(make_set(mask, p));
    CHECK(std::abs(got - oracle::surprisal(p)) <= 1e-9);
    CHECK(got >= 0.0);
    CHECK(got <= std::log(20.0) + 1e-12);
  }
}

TEST_CASE("surprisal is invariant under expert and position permutations") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t E = 2 + rng() % 4, M = 1 + rng() % 6;
    std::vector<std::vector<std::vector<double>>> p(E, std::vector<std::vector<double>>(M));
    for (auto& e : p)
      for (auto& v : e) v = random_distribution(rng, 20);
    std::vector<std::size_t> mask(M);
    std::iota(mask.begin(), mask.end(), std::size_t{0});
    const double base = ensemble_surprisal(make_set(mask, p));
    auto q = p;
    std::shuffle(q.begin(), q.end(), rng);
    CHECK(ensemble_surprisal(make_set(mask, q)) == doctest::Approx(base).epsilon(1e-12));
    auto r = p;
    for (auto& e : r) std::reverse(e.begin(), e.end());
    CHECK(ensemble_surprisal(make_set(mask, r)) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("bonus pair examples") {
  const Sequence parent("ACDE");
  const auto agree = make_set({3}, {{one_hot(20, 2)}, {one_hot(20, 2)}});
  const Bonuses same = bonus_pair(parent, parent, agree);
  CHECK(same.u_ent == 0.0);
  CHECK(same.u_div == 0.0);

  const auto disagree = make_set({3}, {{one_hot(20, 0)}, {one_hot(20, 1)}});
  const Bonuses b = bonus_pair(parent, Sequence("ACDF"), disagree);
  CHECK(b.u_ent == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(b.u_div == 0.25);
}
