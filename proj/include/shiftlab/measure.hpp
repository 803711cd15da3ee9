#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "shiftlab/shift_system.hpp"

namespace shiftlab {

// Stationary solve / invariance checks accept this residual.
inline constexpr double kStationaryTol = 1e-12;

struct MarkovMeasure {
  int alphabet = 0;
  std::vector<double> pi;               // initial distribution
  std::vector<std::vector<double>> P;   // row-stochastic where pi-reachable
  int level = 0;                        // family level tag (1-based; 0 = untagged)

  void validate() const;
  bool invariant(double tol = kStationaryTol) const;  // pi P == pi
  bool compatible_with(const ShiftSystem& sys) const; // P_ij > 0 => A_ij = 1
  double mass(const Word& w) const;
  double entropy() const;  // nats; uses pi if invariant, else the stationary vector of P
  std::vector<double> stationary() const;
};

MarkovMeasure bernoulli_measure(const std::vector<double>& p);
// Dirac at the periodic stream w.w.w...  (as a Markov measure with a
// deterministic transition rule along the cycle and pi concentrated on w[0]).
MarkovMeasure periodic_point_measure(int alphabet, const Word& cycle);
// Measure of maximal entropy of a transitive system.
MarkovMeasure parry_measure(const ShiftSystem& sys);

class Measure {
 public:
  enum class Kind { markov, convex, empirical, higher_block, phase_average };

  Measure() = default;
  static Measure markov(MarkovMeasure m);
  static Measure convex(std::vector<std::pair<double, Measure>> parts);
  static Measure empirical(Word w, int alphabet);
  // Markov chain on overlapping b-blocks (sliding-block presentation): blocks
  // lists the admissible b-words, chain is over block indices.
  static Measure higher_block(int base_alphabet, std::vector<Word> blocks, MarkovMeasure chain);
  // Average (1/k) sum f^i_* of a k-block measure decoded to the base
  // alphabet; blocks[s] is the base word of block symbol s (all length k).
  static Measure phase_average(Measure block_measure, std::vector<Word> blocks,
                               int base_alphabet);

  Kind kind() const { return kind_; }
  int alphabet() const { return alphabet_; }
  int level() const { return level_; }
  void set_level(int l) { level_ = l; }

  double mass(const Word& w) const;
  double entropy() const;  // nats; undefined for empirical measures
  Measure pushforward() const;

  // component access
  const MarkovMeasure& as_markov() const;
  const std::vector<std::pair<double, Measure>>& parts() const;
  const Word& sample_word() const;  // empirical
  const std::vector<Word>& blocks() const;
  const Measure& block_measure() const;
  int block_len() const;

 private:
  Kind kind_ = Kind::markov;
  int alphabet_ = 0;
  int level_ = 0;
  MarkovMeasure markov_;
  std::vector<std::pair<double, Measure>> parts_;
  Word word_;
  std::vector<Word> blocks_;
  std::shared_ptr<Measure> inner_;
  int block_len_ = 1;
};

// Canonical separating family: indicators of cylinder words enumerated by
// (length, lexicographic), weight 2^-k for the k-th member (k starts at 1).
struct SeparatingFamily {
  int alphabet = 0;
  int depth = 0;
  std::vector<Word> words;  // all alphabet^1 + ... + alphabet^depth words
  static SeparatingFamily canonical(int alphabet, int depth);
};

struct WstarDistance {
  double value = 0;  // truncated to cylinders of length <= depth
  double tail = 0;   // exact bound on the discarded tail: 2^-(#cylinders)
};

WstarDistance wstar_distance(const Measure& mu, const Measure& nu, int depth);

// Spec'd operations on combinations.
Measure restrict_normalize(const Measure& convex_measure, int level);
Measure full_support_measure(const std::vector<ShiftSystem>& levels);

// Transport along a periodic decomposition: base invariant (convex of)
// Markov -> measure on the block system of ps.
Measure h_star(const Measure& base, const PowerSystem& ps);
// Inverse direction: block measure -> (1/k) sum_i f^i_* of its decoding.
Measure decomposition_average(const Measure& block_measure, const PowerSystem& ps);

}  // namespace shiftlab
