#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "shiftlab/measure.hpp"
#include "shiftlab/shift_system.hpp"

namespace shiftlab {

// Depth-1/2 statistics of a target measure, the inputs of the typicality
// predicate.
struct PairStats {
  int alphabet = 0;
  std::vector<double> p1;
  std::vector<std::vector<double>> p2;
  static PairStats of(const Measure& mu);
};

// Words sharing (first symbol, last symbol, transition counts) have the same
// empirical statistics up to depth 2, so typicality is a class property.
struct TransitionClass {
  Symbol first = 0;
  Symbol last = 0;
  std::vector<std::vector<std::uint32_t>> counts;
  int length() const;  // word length = 1 + sum of counts
};

// Truncated weak* value at depth 2 between the class's empirical statistics
// and the target (canonical cylinder enumeration, weights 2^-k).
double class_distance_value(const TransitionClass& c, const PairStats& target);
// Exact bound on the discarded tail of the weak* series: 2^-(a + a^2).
double pair_tail_bound(int alphabet);
// Class carried by the target: transitions only where the target pair mass
// is positive.
bool class_supported(const TransitionClass& c, const PairStats& target);
// Conservative membership: distance value plus tail bound within zeta.
bool class_typical(const TransitionClass& c, const PairStats& target, double zeta);

// Exact class count by memoized DP over the remaining transition counts.
mpz_class class_count_dp(const TransitionClass& c);
// Exact class count in closed form: (prod_i r_i!)/(prod_ij c_ij!) times the
// (last,first) cofactor of I - C* with C*_ij = c_ij / r_i.
mpz_class class_count_closed(const TransitionClass& c);

struct TypicalWordSet {
  int n = 0;
  double zeta = 0;
  std::string mode;  // "enumerate" or "box"
  PairStats target;
  struct Entry {
    TransitionClass cls;
    double log_count;
  };
  std::vector<Entry> classes;
  mpz_class exact_count = 0;  // exact count of the words in `classes`
  double log_count = 0;       // log(exact_count), -inf if empty

  // Uniform draw over the collected words (class picked proportionally to its
  // exact count, then a uniform member of the class).
  Word sample(std::mt19937_64& rng) const;
};

// All typical classes, via one forward pass of the transition-count DP
// (state = first/current symbol + count vector). Practical for n up to ~64 on
// binary alphabets.
TypicalWordSet typical_words_enumerate(const ShiftSystem& sys, const Measure& target, int n,
                                       double zeta);
// Typical classes inside a box around the expected transition counts; budget
// caps the number of enumerated classes. The count is exact for the collected
// classes and hence a certified lower bound for the full typical set.
TypicalWordSet typical_words_box(const ShiftSystem& sys, const Measure& target, int n,
                                 double zeta, long budget = 30000);
// Dispatcher: enumerate for small n, box beyond.
TypicalWordSet typical_words(const ShiftSystem& sys, const Measure& target, int n, double zeta,
                             long budget = 30000);

// Typical-class counts for every n = 1..horizon in a single DP sweep.
std::vector<mpz_class> typical_counts_sweep(const ShiftSystem& sys, const Measure& target,
                                            double zeta, int horizon);

struct EntropyEstimate {
  mpz_class count;
  double estimate;  // log(count) / n, nats
};
EntropyEstimate estimate_entropy_word_count(const ShiftSystem& sys, int n);

double log_of_mpz(const mpz_class& x);

// Uniform-separation certificate: distinct words of length n are (n, 1/2)-
// separated, so |typical words| >= e^{n (h - eta)} certifies a separated set
// of that size.
struct SeparationCertificate {
  double eta = 0, zeta = 0, h = 0;
  int horizon = 0;
  int n_star = -1;  // smallest n such that the bound holds on [n_star, horizon]
  struct Row {
    int n;
    mpz_class count;
    double log_bound;
    bool pass;
  };
  std::vector<Row> rows;
  bool certified = false;  // n_star <= horizon
};
SeparationCertificate certify_uniform_separation(const ShiftSystem& sys, const Measure& target,
                                                 double eta, double zeta, int horizon);

// Ergodic Markov approximation of a (possibly non-ergodic) target: switching
// chains on higher-block presentations, (block depth, switch probability)
// searched on a logarithmic grid. Bounds are verified by direct computation;
// when unattainable the best achievable pair is reported with met = false.
struct DenseApproxResult {
  Measure nu;
  bool met = false;
  double distance = 0;     // truncated weak* value + tail
  double entropy_gap = 0;  // h(target) - h(nu)
  int block_depth = 0;
  double switch_prob = 0;
};
DenseApproxResult entropy_dense_approx(const ShiftSystem& sys, const Measure& target, double zeta,
                                       double eta, int wstar_depth = 3);

}  // namespace shiftlab
