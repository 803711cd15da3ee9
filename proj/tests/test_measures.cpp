#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "shiftlab/measure.hpp"

using namespace shiftlab;

namespace {

constexpr double kPhi = 1.6180339887498948482;

MarkovMeasure random_markov(std::mt19937_64& rng, int a) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  MarkovMeasure m;
  m.alphabet = a;
  m.P.assign(a, std::vector<double>(a));
  m.pi.assign(a, 0.0);
  for (int i = 0; i < a; ++i) {
    double s = 0;
    for (int j = 0; j < a; ++j) s += (m.P[i][j] = u(rng));
    for (int j = 0; j < a; ++j) m.P[i][j] /= s;
  }
  m.pi = m.stationary();
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("markov cylinder mass") {
  auto b = bernoulli_measure({0.5, 0.5});
  CHECK(b.mass(word_from_string("0110", 2)) == doctest::Approx(1.0 / 16));
  CHECK(b.mass({}) == 1.0);
  auto parry = parry_measure(golden_mean());
  CHECK(parry.invariant());
  // Perron data of the golden mean: lambda = phi, pi_0 = (phi+1)/(phi+2)
  CHECK(parry.pi[0] == doctest::Approx((kPhi + 1) / (kPhi + 2)).epsilon(1e-12));
  CHECK(parry.mass(word_from_string("01", 2)) == doctest::Approx(1.0 / (kPhi + 2)).epsilon(1e-12));
  CHECK(parry.mass(word_from_string("11", 2)) == 0.0);
  CHECK(parry.compatible_with(golden_mean()));
  CHECK_FALSE(periodic_point_measure(2, {1, 1}).compatible_with(golden_mean()));
}

TEST_CASE("entropy") {
  CHECK(parry_measure(golden_mean()).entropy() == doctest::Approx(std::log(kPhi)).epsilon(1e-12));
  CHECK(parry_measure(full_shift(2)).entropy() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  auto b = bernoulli_measure({0.2, 0.8});
  double h = -(0.2 * std::log(0.2) + 0.8 * std::log(0.8));
  CHECK(b.entropy() == doctest::Approx(h).epsilon(1e-12));
  CHECK(periodic_point_measure(2, {0, 1}).entropy() == doctest::Approx(0.0));
  // entropy is affine on convex combinations
  auto mix = Measure::convex({{0.3, Measure::markov(b)},
                              {0.7, Measure::markov(parry_measure(full_shift(2)))}});
  CHECK(mix.entropy() == doctest::Approx(0.3 * h + 0.7 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("weak* distance with the canonical family") {
  auto d0 = Measure::markov(periodic_point_measure(2, {0}));
  auto d1 = Measure::markov(periodic_point_measure(2, {1}));
  auto d = wstar_distance(d0, d1, 3);
  // cylinders hit: "0"(k=1), "1"(2), "00"(3), "11"(6), "000"(7), "111"(14)
  double expect = 0.5 + 0.25 + 0.125 + std::ldexp(1.0, -6) + std::ldexp(1.0, -7) + std::ldexp(1.0, -14);
  CHECK(d.value == doctest::Approx(expect).epsilon(1e-15));
  CHECK(d.tail == std::ldexp(1.0, -14));  // binary alphabet, 14 cylinders of depth <= 3

  CHECK(SeparatingFamily::canonical(2, 3).words.size() == 14);

  auto b = Measure::markov(bernoulli_measure({0.5, 0.5}));
  CHECK(wstar_distance(b, b, 5).value == 0.0);

  // symmetry and triangle inequality on random measures
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto x = Measure::markov(random_markov(rng, 2));
    auto y = Measure::markov(random_markov(rng, 2));
    auto z = Measure::markov(random_markov(rng, 2));
    CHECK(wstar_distance(x, y, 4).value == doctest::Approx(wstar_distance(y, x, 4).value));
    CHECK(wstar_distance(x, z, 4).value <=
          wstar_distance(x, y, 4).value + wstar_distance(y, z, 4).value + 1e-12);
  }
}

TEST_CASE("pushforward") {
  // point mass on (01)^inf maps to point mass on (10)^inf
  auto p01 = Measure::markov(periodic_point_measure(2, {0, 1}));
  auto p10 = p01.pushforward();
  CHECK(p10.mass(word_from_string("10", 2)) == doctest::Approx(1.0));
  CHECK(p10.mass(word_from_string("0", 2)) == doctest::Approx(0.0));
  // (f_* nu)[w] = sum_s nu[s w]
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    MarkovMeasure m = random_markov(rng, 3);
    m.pi = {0.5, 0.3, 0.2};  // deliberately non-stationary
    auto nu = Measure::markov(m);
    auto fnu = nu.pushforward();
    for (const auto& w : full_shift(3).words_of_length(3)) {
      double s = 0;
      for (int c = 0; c < 3; ++c) {
        Word sw{static_cast<Symbol>(c)};
        sw.insert(sw.end(), w.begin(), w.end());
        s += nu.mass(sw);
      }
      CHECK(fnu.mass(w) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  // invariant measures are fixed points
  auto parry = Measure::markov(parry_measure(golden_mean()));
  CHECK(wstar_distance(parry, parry.pushforward(), 4).value == doctest::Approx(0.0));
}

TEST_CASE("empirical measures") {
  auto e = Measure::empirical(word_from_string("0011", 2), 2);
  CHECK(e.mass(word_from_string("0", 2)) == doctest::Approx(0.5));
  CHECK(e.mass(word_from_string("01", 2)) == doctest::Approx(1.0 / 3));
  CHECK(e.mass(word_from_string("001", 2)) == doctest::Approx(0.5));
  auto pe = e.pushforward();
  CHECK(pe.mass(word_from_string("0", 2)) == doctest::Approx(1.0 / 3));
  CHECK_THROWS(e.entropy());
}

TEST_CASE("restrict_normalize and full support") {
  std::vector<ShiftSystem> levels{golden_mean(), full_shift(2)};
  auto omega = full_support_measure(levels);
  // two levels: dyadic weights with the tail absorbed -> 1/2, 1/2
  REQUIRE(omega.kind() == Measure::Kind::convex);
  CHECK(omega.parts()[0].first == doctest::Approx(0.5));
  CHECK(omega.parts()[1].first == doctest::Approx(0.5));
  // full support: every binary cylinder has positive mass
  for (int l = 1; l <= 4; ++l)
    for (const auto& w : full_shift(2).words_of_length(l)) CHECK(omega.mass(w) > 0.0);

  auto level1 = restrict_normalize(omega, 1);
  auto parry = Measure::markov(parry_measure(golden_mean()));
  CHECK(wstar_distance(level1, parry, 4).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(restrict_normalize(Measure::markov(bernoulli_measure({0.5, 0.5})), 0));
}

TEST_CASE("higher block presentation") {
  // 2-block presentation of Bernoulli(1/4, 3/4)
  auto blocks = full_shift(2).words_of_length(2);
  MarkovMeasure chain;
  chain.alphabet = 4;
  chain.pi = {1.0 / 16, 3.0 / 16, 3.0 / 16, 9.0 / 16};
  chain.P.assign(4, std::vector<double>(4, 0.0));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (blocks[i][1] == blocks[j][0]) chain.P[i][j] = blocks[j][1] ? 0.75 : 0.25;
  auto hb = Measure::higher_block(2, blocks, chain);
  auto direct = Measure::markov(bernoulli_measure({0.25, 0.75}));
  for (int l = 1; l <= 4; ++l)
    for (const auto& w : full_shift(2).words_of_length(l))
      CHECK(hb.mass(w) == doctest::Approx(direct.mass(w)).epsilon(1e-12));
  CHECK(hb.entropy() == doctest::Approx(direct.entropy()).epsilon(1e-12));
}

TEST_CASE("decomposition transport") {
  // spec'd toy example: flip system, point mass on the block "01"
  auto flip = ShiftSystem{"flip", 2, {{0, 1}, {1, 0}}};
  auto ps = power_restrict(flip);
  auto block_point = Measure::markov(periodic_point_measure(1, {0}));
  auto avg = decomposition_average(block_point, ps);
  CHECK(avg.mass(word_from_string("0", 2)) == doctest::Approx(0.5));
  CHECK(avg.mass(word_from_string("1", 2)) == doctest::Approx(0.5));
  CHECK(avg.mass(word_from_string("01", 2)) == doctest::Approx(0.5));
  CHECK(avg.mass(word_from_string("10", 2)) == doctest::Approx(0.5));
  CHECK(avg.mass(word_from_string("11", 2)) == doctest::Approx(0.0));
  // invariance: mass(w) = sum_s mass(s w)
  for (int l = 1; l <= 3; ++l)
    for (const auto& w : full_shift(2).words_of_length(l)) {
      double s = 0;
      for (int c = 0; c < 2; ++c) {
        Word sw{static_cast<Symbol>(c)};
        sw.insert(sw.end(), w.begin(), w.end());
        s += avg.mass(sw);
      }
      CHECK(avg.mass(w) == doctest::Approx(s).epsilon(1e-12));
    }

  // teeter system: uniform base measure <-> Bernoulli(1/2) block chain
  ShiftSystem teeter{"teeter", 3, {{0, 0, 1}, {0, 0, 1}, {1, 1, 0}}};
  auto pt = power_restrict(teeter);
  MarkovMeasure base;
  base.alphabet = 3;
  base.pi = {0.25, 0.25, 0.5};
  base.P = {{0, 0, 1}, {0, 0, 1}, {0.5, 0.5, 0}};
  base.validate();
  CHECK(base.invariant());
  auto block = h_star(Measure::markov(base), pt);
  auto b12 = Measure::markov(bernoulli_measure({0.5, 0.5}));
  CHECK(wstar_distance(block, b12, 4).value == doctest::Approx(0.0).epsilon(1e-10));
  // k * h(base) = h(block chain)
  CHECK(block.entropy() == doctest::Approx(2 * base.entropy()).epsilon(1e-10));
  // round trip through the phase average reproduces the base measure
  auto round = decomposition_average(block, pt);
  auto base_m = Measure::markov(base);
  for (int l = 1; l <= 4; ++l)
    for (const auto& w : teeter.words_of_length(l))
      CHECK(round.mass(w) == doctest::Approx(base_m.mass(w)).epsilon(1e-10));
  CHECK(round.entropy() == doctest::Approx(base.entropy()).epsilon(1e-10));
}
