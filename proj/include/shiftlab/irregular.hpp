#pragma once

#include <utility>
#include <vector>

#include "shiftlab/constructor.hpp"
#include "shiftlab/measure.hpp"

namespace shiftlab {

// A locally constant real observable: the value at x depends only on the
// window x_0 .. x_{window-1}.
struct Observable {
  int alphabet = 2;
  int window = 1;             // 1 or 2
  std::vector<double> table;  // indexed by the window read as base-`alphabet` digits

  double value_code(long long code) const { return table[code]; }
  // value of the window starting at position pos of w (must fit)
  double value(const Word& w, std::size_t pos) const;
  void validate(const ShiftSystem& sys) const;
};

// ∫ φ dμ, the exact weighted sum of table entries against cylinder masses.
double spread(const Observable& phi, const Measure& mu);

// Exact [min, max] of ∫ φ dμ over invariant measures of the system. The
// extremes are attained on simple cycles of the transition graph, which are
// enumerated exhaustively.
std::pair<double, double> spread_range(const Observable& phi, const ShiftSystem& sys);

// Gibbs-type tilt: the Markov equilibrium measure of β·φ on sys, built from
// the Perron data of A_ij e^{β φ}.
MarkovMeasure tilted_measure(const ShiftSystem& sys, const Observable& phi, double beta);

enum class IrregularVariant { a, b, c, d, e };

// Builds the target-path factory for the five limit-set shapes:
//   a: a segment of level-n0 measures with distinct spreads
//   b: the single Parry measure of level n0
//   c: one level-n0 endpoint and one full-support endpoint, distinct spreads
//   d: two full-support endpoints with distinct spreads
//   e: one full-support measure
// Endpoint spreads come from the entropy-constrained tilts of φ (loss ≤ η,
// spread gap capped at 0.6); full-support endpoints mix a tilt with the
// family-wide full-support measure at the largest grid θ < 1 keeping the
// entropy loss ≤ η. Throws std::invalid_argument when φ has zero spread on
// level n0 (no irregular point exists for it there).
TargetPath irregular_target(const Observable& phi, const NestedFamily& family, int n0,
                            IrregularVariant variant, double eta);

struct BirkhoffTrace {
  struct Row {
    long long M = 0;
    int band = 0;
    double average = 0;      // (1/#windows) Σ φ over the length-M prefix
    double running_min = 0;  // over checkpoint averages of bands ≥ 1 so far
    double running_max = 0;
  };
  std::vector<Row> rows;
  double liminf_est = 0;
  double limsup_est = 0;
  double oscillation() const { return limsup_est - liminf_est; }
};
BirkhoffTrace birkhoff_trace(const SymbolStream& stream, const Observable& phi,
                             long long horizon);

struct LimitClassification {
  struct Cluster {
    std::vector<double> center;  // empirical masses over the canonical words
    int hits = 0;
    bool level_supported = false;  // inside some proper level of the family
    int level = 0;                 // smallest supporting proper level, 0 = ambient only
  };
  std::vector<Cluster> clusters;
  double radius = 0;
  bool conclusive = true;           // cluster centers pairwise > radius apart
  bool irregular = false;           // more than one accumulation cluster
  bool support_applicable = false;  // family has a level strictly below the ambient
  char tag = '?';                   // 'a'..'e', or '?' when inconclusive
};
// Clusters the checkpoint empirical measures (weak* truncated to `depth`) by
// greedy leader clustering at the given radius, then labels each cluster by
// the smallest proper level supporting it. Proper level = a level whose
// transition pattern is strictly below the ambient's. mass_tol is the
// empirical mass above which a forbidden word counts as genuinely charged;
// a forbidden-word mass within a factor 2 of mass_tol on any cluster makes
// the verdict inconclusive. Samples are taken at the checkpoints past
// start_M (default: the last three quarters of the prefix); streams without
// checkpoints are sampled at evenly spaced positions instead.
LimitClassification classify_limit_set(const SymbolStream& stream, const NestedFamily& family,
                                       long long horizon, double tolerance, int depth = 2,
                                       double mass_tol = 0.005, long long start_M = -1);

}  // namespace shiftlab
