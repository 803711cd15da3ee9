#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace shiftlab {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

std::string word_to_string(const Word& w);
Word word_from_string(const std::string& s, int alphabet);

// Smallest m >= 0 with 2^-m <= eps. Requires 0 < eps.
int coord_window(const mpq_class& eps);

struct PeriodicDecomposition {
  int period = 1;
  // classes[i] = cyclic class D_i; D_0 is the class containing symbol 0 and
  // every edge maps D_i into D_{i+1 mod period}.
  std::vector<std::vector<int>> classes;
  std::vector<int> class_of;
};

struct ShiftSystem {
  std::string name;
  int alphabet = 0;
  std::vector<std::vector<std::uint8_t>> A;  // 0/1 transition matrix

  // Rejects empty alphabets, non-0/1 entries and stranded symbols (rows or
  // columns that are all zero). Alphabet size 1 is rejected unless
  // allow_single_symbol is set (block systems of a power decomposition may
  // legitimately collapse to one block).
  void validate(bool allow_single_symbol = false) const;

  bool edge(Symbol a, Symbol b) const { return A[a][b] != 0; }
  bool is_admissible(const Word& w) const;
  std::vector<Word> words_of_length(int n) const;  // lexicographic order
  mpz_class count_words(int n) const;

  bool is_transitive() const;                    // strongly connected
  std::optional<int> primitivity_index() const;  // least N with A^N > 0
  bool is_mixing() const { return primitivity_index().has_value(); }
  // Gap constant used when gluing segments: equals the primitivity index.
  // Throws if the system is not mixing.
  int specification_gap() const;
  PeriodicDecomposition periodic_decomposition() const;  // requires transitivity

  // True iff there is a path with exactly `edges` edges from a to b.
  bool reachable_in(Symbol a, Symbol b, int edges) const;
  // Lexicographically smallest word c with |c| = len such that a.c.b is
  // admissible. len = 0 checks the direct edge.
  std::optional<Word> connector(Symbol a, Symbol b, int len) const;

  // Lexicographically smallest admissible extension of `prefix` to
  // `total_len` symbols. prefix itself must be admissible.
  Word lex_min_extension(const Word& prefix, int total_len) const;
  Word lex_min_word(int len) const;
};

ShiftSystem full_shift(int alphabet);
ShiftSystem golden_mean();

// Concatenates segments with the given gaps: segment i+1 starts exactly
// gaps[i] coordinates after the end of segment i, i.e. there are gaps[i] - 1
// free symbols in between (chosen lexicographically smallest) plus the forced
// transition into the next segment.
Word glue_segments(const ShiftSystem& sys, const std::vector<Word>& segments,
                   const std::vector<int>& gaps);
Word glue_segments(const ShiftSystem& sys, const std::vector<Word>& segments, int gap);

// 1/2-tracing of a delta-pseudo-orbit (delta <= 1/4, so consecutive points
// agree on at least their first two coordinates). The pseudo-orbit is given
// by finite prefixes of its points; each prefix needs >= coord_window(delta)+1
// symbols. Returns the tracing point's prefix y with y[i] = pseudo[i][0].
Word shadow_pseudo_orbit(const ShiftSystem& sys, const std::vector<Word>& pseudo,
                         const mpq_class& delta);

struct PowerSystem {
  ShiftSystem block_system;  // one symbol per block
  int k = 1;                 // period of the base system
  std::vector<Word> blocks;  // block symbol -> base word of length k, starts in D_0
  PeriodicDecomposition decomposition;
};

// Period decomposition of a transitive system followed by restriction of the
// k-th power to words starting in class D_0. The resulting block system is
// mixing.
PowerSystem power_restrict(const ShiftSystem& sys);

}  // namespace shiftlab
