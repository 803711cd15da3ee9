#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/measure.hpp"
#include "shiftlab/separation.hpp"
#include "shiftlab/shift_system.hpp"

namespace shiftlab {

// A nondecreasing family of transitive SFT levels over one alphabet. The
// ambient system defaults to the largest level but may strictly exceed it
// (declared closure reference).
struct NestedFamily {
  std::string name;
  std::vector<ShiftSystem> levels;  // level 1 .. L, zero pattern nondecreasing
  std::optional<ShiftSystem> ambient_override;
  int density_depth = 6;  // every ambient cylinder to this depth meets a level

  const ShiftSystem& ambient() const;
  // level index semantics: 1..L for levels, 0 for the ambient system
  const ShiftSystem& system_of(int level) const;
  int level_count() const { return static_cast<int>(levels.size()); }
  // effective rank for "largest of" comparisons (ambient above all levels)
  static int rank(int level) { return level == 0 ? 1 << 20 : level; }
  void validate() const;
  // smallest level whose system admits u; 0 if only the ambient does; -1 if none
  int level_admitting(const Word& u) const;
};

// Polygonal compact connected set of invariant measures: vertices joined by
// affine segments.
struct TargetPath {
  struct Vertex {
    Measure measure;
    int level = 1;  // 1..L, or 0 for ambient-supported
  };
  std::vector<Vertex> vertices;
  void validate(const NestedFamily& family) const;
  double inf_entropy() const;  // min over vertices (affine along segments)
  bool singleton() const { return vertices.size() == 1; }
};

// Dense traversal of the path with vanishing steps, plus per-band working
// measures.
struct MeasureChain {
  struct Step {
    Measure alpha;   // point on the path
    Measure gamma;   // working measure for the band (direct mode: == alpha)
    int level = 1;   // carrying level (0 = ambient)
    double tau = 0;  // global path parameter in [0, segment count]
    double gamma_distance = 0;  // d(alpha, gamma), 0 in direct mode
  };
  std::vector<Step> steps;
  double eta = 0;
  double entropy_floor = 0;  // H* = inf_k h(gamma_k) - eta over generated steps
  bool direct_mode = true;
};

// count = number of steps to generate (bands + 2 lookahead)
MeasureChain build_chain(const TargetPath& path, double eta, int count,
                         bool direct_mode = true);

struct Checkpoint {
  enum class Type { prefix, block, net, bridge };
  long long M = 0;    // prefix length at the end of this slot
  int band = 0;       // 0 for the opening prefix slot, else 1..B
  int slot = 0;       // slot index within the band
  Type type = Type::prefix;
  Word content;       // the word pinned at the start of the slot
  long long offset = 0;  // start position of the content window
};

struct Schedule {
  int bands = 0;   // B; per-band arrays carry B+2 entries (k = 1..B+2)
  double eta = 0;
  mpq_class eps0;                 // 2^-|u|
  std::vector<mpq_class> eps;     // eps[k-1] = ε_k
  std::vector<mpq_class> zeta;    // ζ_k, strictly decreasing rationals
  std::vector<int> level;         // l_k: carrying level of γ_k
  std::vector<int> glue_level;    // L_k: level used for nets/connectors
  std::vector<int> m;             // m(ε_k): coordinate window of ε_k
  std::vector<long long> K;       // specification gaps of the glue levels
  std::vector<long long> n;       // content lengths
  std::vector<long long> t;       // net sizes |Δ_k|
  std::vector<long long> N;       // repetitions (size B)
  std::vector<std::vector<Word>> nets;        // Δ_k, lexicographic
  std::vector<TypicalWordSet> gamma_sets;     // Γ_k (size B)
  Word u;          // defining word of the cylinder U
  int u_level = 0; // l_0
  Word x0;         // length m_1 extension of u inside X_{l_0}
  double entropy_floor = 0;

  long long prefix_slot_length() const;       // n'_0 = m_1 + K_1 - 1
  long long block_slot_length(int k) const;   // n_k + K_k - 1
  long long net_slot_length(int k) const;     // m_k + K_k - 1
  long long bridge_slot_length(int k) const;  // m_k + K_{k+1} - 1
  long long band_length(int k) const;
  long long band_end(int k) const;  // M at the end of band k (k = 0: prefix)
  // throws std::logic_error naming the first violated display
  void assert_inequalities() const;
};

// Solves for the minimal-by-policy schedule. zeta1_cap bounds ζ_1 from above
// (on top of the strict barrier 5 ζ_1 (H* - η) < η).
// In measure mode (chain.direct_mode == false) the chain's working measures
// are refined in place with ergodic Markov approximations before the block
// sets are realized.
Schedule solve_schedule(const NestedFamily& family, MeasureChain& chain, const Word& u,
                        double eta, int bands, const mpq_class& zeta1_cap = mpq_class(1, 10),
                        long box_budget = 30000);

struct SymbolStream {
  Word symbols;
  std::vector<Checkpoint> checkpoints;
  std::uint64_t seed = 0;
  int complete_bands = -1;  // -1: nothing; 0: prefix slot done; k: band k done
  long long horizon = 0;
};

// Deterministic generation: band k draws from an RNG seeded by (seed, k), so
// any suffix can be regenerated from a band boundary. Stops at the end of the
// slot in which `horizon` is reached, or after band B.
SymbolStream generate_point(const NestedFamily& family, const MeasureChain& chain,
                            const Schedule& schedule, std::uint64_t seed, long long horizon);
// Continues a stream whose first `stream.complete_bands` bands are already
// materialized; output is byte-identical to an uninterrupted run.
void resume_point(SymbolStream& stream, const NestedFamily& family, const MeasureChain& chain,
                  const Schedule& schedule, long long horizon);

struct TrackingRow {
  long long M = 0;
  int band = 0;
  double distance = 0;  // truncated weak* value of E_M against the band measure
  double envelope = 0;
  bool distance_ok = true;
  bool window_ok = true;  // slot content reproduced and still ζ-typical
};
struct TrackingReport {
  std::vector<TrackingRow> rows;
  std::vector<double> band_max;  // max distance per materialized band (1-based)
  double allowance = 0;          // weak*-truncation allowance added to envelopes
  bool pass = true;
};
// depth: truncation depth of the weak* metric used for E_M distances.
// base_targets: optional override of the per-band tracking targets (used by
// the periodic-decomposition route to audit against phase-averaged measures).
TrackingReport verify_tracking(const SymbolStream& stream, const MeasureChain& chain,
                               const Schedule& schedule, long long horizon, int depth = 3,
                               const std::vector<Measure>* band_targets = nullptr);

struct TransitivityRow {
  int level = 0;
  Word word;
  long long first_hit = -1;   // -1: never seen in the audited prefix
  long long scheduled_by = 0; // band horizon by which the hit is guaranteed
  int scheduled_band = 0;     // 0: no materialized band covers this word
  bool audited = false;       // scheduled band fully inside the prefix
  bool pass = false;
};
struct TransitivityReport {
  std::vector<TransitivityRow> rows;
  bool pass = true;        // over rows whose scheduled band is materialized
  int skipped = 0;         // rows whose scheduled band exceeds the prefix
};
TransitivityReport verify_transitivity(const SymbolStream& stream, const NestedFamily& family,
                                       const Schedule& schedule, int depth, long long horizon);

struct FamilyCertificate {
  double log_count = 0;  // Σ N_k log |Γ_k|
  double rate = 0;       // log_count / M_end
  double floor = 0;      // inf-entropy of the path minus floor_slack
  long long M = 0;
  bool rate_ok = false;
  int pairs_checked = 0;
  int pairs_separated = 0;
  bool pass = false;
};
FamilyCertificate separated_family_certificate(const Schedule& schedule, const TargetPath& path,
                                               double floor_slack, std::uint64_t seed,
                                               int pairs = 100);

// Checkpoint-ratio audit: first checkpoint index from which M_{j+1}/M_j stays
// within 1 + ζ_{band(j)} for the rest of the materialized schedule.
long long checkpoint_ratio_settles_at(const SymbolStream& stream, const Schedule& schedule);

// Periodic-decomposition route: when the family is transitive but not mixing,
// the construction runs in the common-period power on the class of symbol 0
// and transports back.
struct MixingRoute {
  bool identity = true;
  int k = 1;        // common period
  int i0 = 0;       // class of the cylinder word's first symbol
  NestedFamily block_family;            // power-restricted levels
  std::vector<PowerSystem> powers;      // per level (+ ambient last if distinct)
  Word block_u;                         // cylinder transported to block level

  // decode a block-level stream to the base alphabet and drop i0 symbols
  Word decode(const Word& block_symbols) const;
  long long base_index(long long block_index) const;  // M translation
};
MixingRoute mixing_route(const NestedFamily& family, const Word& u);

}  // namespace shiftlab
