#include <doctest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "mctd/error.hpp"
#include "mctd/config.hpp"
#include "mctd/evaluation.hpp"

using namespace mctd;

namespace {

class FixedCritic final : public Critic {
 public:
  FixedCritic(std::string name, double value) : name_(std::move(name)), value_(value) {}
  const std::string& name() const noexcept override { return name_; }
  double score(const Sequence&) const override { return value_; }

 private:
  std::string name_;
  double value_;
};

class CountingCritic final : public Critic {
 public:
  const std::string& name() const noexcept override { return name_; }
  double score(const Sequence& s) const override {
    ++calls;
    if (fail_next.exchange(false)) throw std::runtime_error("flaky");
    return static_cast<double>(s[0] - 'A') / 25.0;
  }
  mutable std::atomic<int> calls{0};
  mutable std::atomic<bool> fail_next{false};

 private:
  std::string name_ = "counting";
};

Sequence random_sequence(std::mt19937_64& rng, std::size_t len) {
  const std::string& sym = Alphabet::amino_acids().symbols();
  std::string s(len, 'A');
  for (char& c : s) c = sym[rng() % sym.size()];
  return Sequence(s);
}

CriticPanel three_fixed(double a, double p, double b) {
  return CriticPanel({std::make_shared<FixedCritic>("aar", a),
                      std::make_shared<FixedCritic>("structure_proxy", p),
                      std::make_shared<FixedCritic>("biophysical", b)},
                     {{"aar", 0.6}, {"structure_proxy", 0.35}, {"biophysical", 0.05}});
}

}  // namespace

TEST_CASE("aar examples") {
  CHECK(aar(Sequence("ACDE"), Sequence("ACDE")) == 1.0);
  CHECK(aar(Sequence("ACDE"), Sequence("ACDF")) == 0.75);
  CHECK_THROWS_AS(aar(Sequence("ACD"), Sequence("ACDF")), ContractViolation);
}

TEST_CASE("aar and normalized hamming sum to one") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t len = 1 + rng() % 64;
    const Sequence a = random_sequence(rng, len), b = random_sequence(rng, len);
    CHECK(aar(a, b) + normalized_hamming(a, b) == 1.0);
  }
}

TEST_CASE("kyte doolittle values") {
  const auto& kd = kyte_doolittle();
  CHECK(kd('A') == 1.8);
  CHECK(kd('R') == -4.5);
  CHECK(kd('I') == 4.5);
  CHECK(mean_hydropathy(Sequence("AA")) == 1.8);
}

TEST_CASE("hydropathy profile uses truncated windows") {
  const auto p = hydropathy_profile(Sequence("IRAGK"));
  // I 4.5, R -4.5, A 1.8, G -0.4, K -3.9
  CHECK(p[0] == doctest::Approx((4.5 - 4.5 + 1.8) / 3));
  CHECK(p[1] == doctest::Approx((4.5 - 4.5 + 1.8 - 0.4) / 4));
  CHECK(p[2] == doctest::Approx((4.5 - 4.5 + 1.8 - 0.4 - 3.9) / 5));
  CHECK(p[4] == doctest::Approx((1.8 - 0.4 - 3.9) / 3));
}

TEST_CASE("net charge counting rule") {
  CHECK(net_charge(Sequence("KR")) == 2);
  CHECK(net_charge(Sequence("DE")) == -2);
  CHECK(net_charge(Sequence("KD")) == 0);
  CHECK(net_charge(Sequence("HAD")) == 0);
}

TEST_CASE("structure proxy examples") {
  const Sequence s("MKTAYIAKQRQISFVKSHFSRQ");
  const auto prof = hydropathy_profile(s);
  CHECK(structure_proxy(s, prof) == doctest::Approx(1.0).epsilon(1e-12));

  double mean = 0.0;
  for (double x : prof) mean += x;
  mean /= static_cast<double>(prof.size());
  std::vector<double> mirrored;
  for (double x : prof) mirrored.push_back(2 * mean - x);
  CHECK(structure_proxy(s, mirrored) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(structure_proxy(s, std::vector<double>(s.length(), 1.0)) == 0.5);
  CHECK(structure_proxy(Sequence(std::string(s.length(), 'A')), prof) == 0.5);
  CHECK_THROWS_AS(structure_proxy(s, std::vector<double>(3, 1.0)), ContractViolation);
}

TEST_CASE("biophysical bonus is one at the reference point") {
  // Built from the reference table: 100 residues at its exact counts.
  const auto& ref = reference_composition();
  std::string s;
  for (std::size_t a = 0; a < 20; ++a)
    s += std::string(static_cast<std::size_t>(std::lround(ref.values[a] * 100)),
                     ref.alphabet.symbol_at(a));
  REQUIRE(s.size() == 100);
  const Sequence seq(s);
  CHECK(mean_hydropathy(seq) == doctest::Approx(kReferenceHydropathy).epsilon(1e-12));
  CHECK(net_charge(seq) == 0);
  const auto t = biophysical_terms(seq);
  CHECK(t.hydro == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.composition == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.charge == 1.0);
  CHECK(biophysical_bonus(seq) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("biophysical terms by hand") {
  const auto t = biophysical_terms(Sequence("KKKK"));
  CHECK(t.charge == 0.0);
  CHECK(t.hydro == doctest::Approx(1.0 - std::abs(-3.9 + 0.4) / 4.5));
  CHECK(t.composition == doctest::Approx(reference_composition()('K')));
  const auto i = biophysical_terms(Sequence("IIII"));
  CHECK(i.hydro == doctest::Approx(0.0));
}

TEST_CASE("critic outputs stay in the unit interval") {
  std::mt19937_64 rng(2);
  const Sequence target = random_sequence(rng, 50);
  const CriticPanel panel = standard_panel(target, RunConfig{}.reward_weights);
  for (int t = 0; t < 300; ++t) {
    const auto r = panel(random_sequence(rng, 50));
    for (const auto& [name, v] : r.per_critic) CHECK((v >= 0.0 && v <= 1.0));
    CHECK((r.composite >= 0.0 && r.composite <= 1.0));
  }
}

TEST_CASE("composite reward arithmetic") {
  CHECK(std::abs(three_fixed(0.5, 0.8, 0.2)(Sequence("A")).composite - 0.59) <= 1e-12);
  CHECK(three_fixed(1, 1, 1)(Sequence("A")).composite == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(3);
  const Sequence target = random_sequence(rng, 30), cand = random_sequence(rng, 30);
  const CriticPanel only_aar = standard_panel(target, {{"aar", 1.0}, {"structure_proxy", 0.0},
                                                       {"biophysical", 0.0}});
  CHECK(only_aar(cand).composite == aar(cand, target));
}

TEST_CASE("composite reward is monotone in each critic") {
  for (double a : {0.1, 0.5}) {
    const double base = three_fixed(a, 0.5, 0.5)(Sequence("A")).composite;
    CHECK(three_fixed(a + 0.1, 0.5, 0.5)(Sequence("A")).composite > base);
    CHECK(three_fixed(a, 0.6, 0.5)(Sequence("A")).composite > base);
    CHECK(three_fixed(a, 0.5, 0.6)(Sequence("A")).composite > base);
  }
}

TEST_CASE("critic failure names the critic") {
  auto c = std::make_shared<CountingCritic>();
  c->fail_next = true;
  const CriticPanel panel({c}, {{"counting", 1.0}});
  try {
    panel(Sequence("A"));
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.critic() == "counting");
  }
  CHECK_THROWS_AS(CriticPanel({c}, {{"other", 1.0}}), ContractViolation);
}

TEST_CASE("cache evaluates each sequence once") {
  auto c = std::make_shared<CountingCritic>();
  const CriticPanel panel({c}, {{"counting", 1.0}});
  EvaluationCache cache;
  cache.evaluate(Sequence("ACD"), panel);
  cache.evaluate(Sequence("ACD"), panel);
  CHECK(c->calls == 1);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
  cache.evaluate(Sequence("ACE"), panel);
  CHECK(cache.size() == 2);
  CHECK(cache.find(Sequence("ACE")) != nullptr);
  CHECK(cache.find(Sequence("WWW")) == nullptr);
}

TEST_CASE("cache with many duplicates, concurrently") {
  auto c = std::make_shared<CountingCritic>();
  const CriticPanel panel({c}, {{"counting", 1.0}});
  EvaluationCache cache;
  std::mt19937_64 rng(4);
  std::vector<Sequence> pool;
  for (int i = 0; i < 1000; ++i) {
    if (!pool.empty() && rng() % 10 < 3)
      pool.push_back(pool[rng() % pool.size()]);
    else
      pool.push_back(random_sequence(rng, 6));
  }
  std::set<std::string> distinct;
  for (const auto& s : pool) distinct.insert(s.str());

  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < pool.size(); i += 4) cache.evaluate(pool[i], panel);
    });
  for (auto& th : threads) th.join();
  CHECK(static_cast<std::size_t>(c->calls.load()) == distinct.size());
  CHECK(cache.misses() == cache.size());
  CHECK(cache.hits() + cache.misses() == pool.size());
}

TEST_CASE("failed evaluations are not cached") {
  auto c = std::make_shared<CountingCritic>();
  const CriticPanel panel({c}, {{"counting", 1.0}});
  EvaluationCache cache;
  c->fail_next = true;
  CHECK_THROWS_AS(cache.evaluate(Sequence("ACD"), panel), EvaluationError);
  CHECK(cache.size() == 0);
  CHECK(cache.misses() == 0);
  CHECK_NOTHROW(cache.evaluate(Sequence("ACD"), panel));
  CHECK(cache.size() == 1);
  CHECK(c->calls == 2);
}

TEST_CASE("cache ranking ties go to the smaller sequence") {
  const CriticPanel panel({std::make_shared<FixedCritic>("f", 0.5)}, {{"f", 1.0}});
  EvaluationCache cache;
  for (const char* s : {"WA", "CA", "MA"}) cache.evaluate(Sequence(s), panel);
  const auto top = cache.top(2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].sequence == "CA");
  CHECK(top[1].sequence == "MA");
}

TEST_CASE("shipped residue tables match the embedded ones") {
  const auto kd = ResidueTable::load(MCTD_DATA_DIR "/kyte_doolittle.txt");
  const auto comp = ResidueTable::load(MCTD_DATA_DIR "/reference_composition.txt");
  CHECK(kd.digest() == kyte_doolittle().digest());
  CHECK(comp.digest() == reference_composition().digest());
  CHECK(kyte_doolittle().digest() == "5d776d4dae14b7cc");
  CHECK(reference_composition().digest() == "c6c73d769c326c68");
}

TEST_CASE("reference composition sums to one with zero net charge") {
  const auto& ref = reference_composition();
  double sum = 0.0, kd = 0.0;
  for (std::size_t a = 0; a < 20; ++a) {
    sum += ref.values[a];
    kd += ref.values[a] * kyte_doolittle().values[a];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kd == doctest::Approx(kReferenceHydropathy).epsilon(1e-12));
  CHECK(ref('K') + ref('R') + ref('H') == doctest::Approx(ref('D') + ref('E')));
}
