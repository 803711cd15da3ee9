#include "shiftlab/irregular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shiftlab {
namespace {

// edge value of φ on the transition i -> j
double edge_value(const Observable& phi, int i, int j) {
  return phi.window == 1 ? phi.table[i] : phi.table[i * phi.alphabet + j];
}

struct PerronData {
  double lambda = 0;
  std::vector<double> right, left;
};

PerronData perron(const std::vector<std::vector<double>>& B) {
  int a = static_cast<int>(B.size());
  PerronData p;
  p.right.assign(a, 1.0);
  p.left.assign(a, 1.0);
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> nr(a, 0.0), nl(a, 0.0);
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < a; ++j) {
        nr[i] += B[i][j] * p.right[j];
        nl[j] += p.left[i] * B[i][j];
      }
    double s = *std::max_element(nr.begin(), nr.end());
    if (s <= 0) throw std::invalid_argument("tilt: matrix has a dead row");
    double sl = *std::max_element(nl.begin(), nl.end());
    double drift = 0;
    for (int i = 0; i < a; ++i) {
      nr[i] /= s;
      nl[i] /= sl;
      drift = std::max(drift, std::abs(nr[i] - p.right[i]) + std::abs(nl[i] - p.left[i]));
    }
    p.lambda = s;
    p.right = std::move(nr);
    p.left = std::move(nl);
    if (drift < 1e-15 && it > 3) break;
  }
  return p;
}

constexpr double kSpreadGapCap = 0.6;

}  // namespace

double Observable::value(const Word& w, std::size_t pos) const {
  long long code = 0;
  for (int k = 0; k < window; ++k) code = code * alphabet + w[pos + k];
  return table[code];
}

void Observable::validate(const ShiftSystem& sys) const {
  if (alphabet != sys.alphabet) throw std::invalid_argument("observable: alphabet mismatch");
  if (window < 1 || window > 2) throw std::invalid_argument("observable: window must be 1 or 2");
  std::size_t need = 1;
  for (int k = 0; k < window; ++k) need *= alphabet;
  if (table.size() != need) throw std::invalid_argument("observable: table size mismatch");
  for (double v : table)
    if (!std::isfinite(v)) throw std::invalid_argument("observable: non-finite table entry");
}

double spread(const Observable& phi, const Measure& mu) {
  double s = 0;
  if (phi.window == 1) {
    for (int i = 0; i < phi.alphabet; ++i)
      s += phi.table[i] * mu.mass({static_cast<Symbol>(i)});
  } else {
    for (int i = 0; i < phi.alphabet; ++i)
      for (int j = 0; j < phi.alphabet; ++j)
        s += phi.table[i * phi.alphabet + j] *
             mu.mass({static_cast<Symbol>(i), static_cast<Symbol>(j)});
  }
  return s;
}

std::pair<double, double> spread_range(const Observable& phi, const ShiftSystem& sys) {
  phi.validate(sys);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  int a = sys.alphabet;
  std::vector<int> path;
  std::vector<bool> used(a, false);
  // every extreme of the (linear) integral over the cycle polytope is a
  // simple cycle; enumerate them all from each anchor
  auto dfs = [&](auto&& self, int anchor, int cur) -> void {
    for (int nxt = 0; nxt < a; ++nxt) {
      if (!sys.edge(static_cast<Symbol>(cur), static_cast<Symbol>(nxt))) continue;
      if (nxt == anchor) {
        double sum = 0;
        for (std::size_t i = 0; i < path.size(); ++i)
          sum += edge_value(phi, path[i], path[(i + 1) % path.size()]);
        double mean = sum / static_cast<double>(path.size());
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
      } else if (nxt > anchor && !used[nxt]) {
        used[nxt] = true;
        path.push_back(nxt);
        self(self, anchor, nxt);
        path.pop_back();
        used[nxt] = false;
      }
    }
  };
  for (int anchor = 0; anchor < a; ++anchor) {
    std::fill(used.begin(), used.end(), false);
    used[anchor] = true;
    path.assign(1, anchor);
    dfs(dfs, anchor, anchor);
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("spread range: no cycles (empty system)");
  return {lo, hi};
}

MarkovMeasure tilted_measure(const ShiftSystem& sys, const Observable& phi, double beta) {
  phi.validate(sys);
  int a = sys.alphabet;
  std::vector<std::vector<double>> B(a, std::vector<double>(a, 0.0));
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j)
      if (sys.edge(static_cast<Symbol>(i), static_cast<Symbol>(j)))
        B[i][j] = std::exp(beta * edge_value(phi, i, j));
  auto p = perron(B);
  MarkovMeasure mu;
  mu.alphabet = a;
  mu.P.assign(a, std::vector<double>(a, 0.0));
  mu.pi.assign(a, 0.0);
  double norm = 0;
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < a; ++j)
      if (B[i][j] > 0) mu.P[i][j] = B[i][j] * p.right[j] / (p.lambda * p.right[i]);
    mu.pi[i] = p.left[i] * p.right[i];
    norm += mu.pi[i];
  }
  for (int i = 0; i < a; ++i) mu.pi[i] /= norm;
  return mu;
}

TargetPath irregular_target(const Observable& phi, const NestedFamily& family, int n0,
                            IrregularVariant variant, double eta) {
  family.validate();
  const ShiftSystem& sys = family.system_of(n0);
  phi.validate(sys);
  auto [lo, hi] = spread_range(phi, sys);
  if (hi - lo < 1e-9)
    throw std::invalid_argument(
        "irregular target: the observable has zero spread on the chosen level");

  double h_top = Measure::markov(parry_measure(sys)).entropy();
  auto tilt_spread = [&](double beta) {
    return spread(phi, Measure::markov(tilted_measure(sys, phi, beta)));
  };
  auto tilt_entropy = [&](double beta) {
    return Measure::markov(tilted_measure(sys, phi, beta)).entropy();
  };
  // largest |β| of the given sign keeping the equilibrium's entropy loss ≤ η
  auto extreme_beta = [&](double sign) {
    double b = sign;
    while (tilt_entropy(b) >= h_top - eta && std::abs(b) < 1e4) b *= 2;
    double good = 0, bad = b;
    for (int it = 0; it < 60; ++it) {
      double mid = (good + bad) / 2;
      (tilt_entropy(mid) >= h_top - eta ? good : bad) = mid;
    }
    return good;
  };
  double b_lo = extreme_beta(-1.0), b_hi = extreme_beta(1.0);
  double s_lo = tilt_spread(b_lo), s_hi = tilt_spread(b_hi);
  if (s_hi - s_lo > kSpreadGapCap) {
    double center = (s_hi + s_lo) / 2;
    auto solve_beta = [&](double target) {
      double a = b_lo, b = b_hi;  // spread is increasing in β
      for (int it = 0; it < 80; ++it) {
        double mid = (a + b) / 2;
        (tilt_spread(mid) < target ? a : b) = mid;
      }
      return (a + b) / 2;
    };
    b_lo = solve_beta(center - kSpreadGapCap / 2);
    b_hi = solve_beta(center + kSpreadGapCap / 2);
  }
  Measure nu1 = Measure::markov(tilted_measure(sys, phi, b_lo));
  Measure nu2 = Measure::markov(tilted_measure(sys, phi, b_hi));
  Measure parry = Measure::markov(parry_measure(sys));

  TargetPath path;
  if (variant == IrregularVariant::a) {
    path.vertices.push_back({nu1, n0});
    path.vertices.push_back({nu2, n0});
    return path;
  }
  if (variant == IrregularVariant::b) {
    path.vertices.push_back({parry, n0});
    return path;
  }
  // full-support endpoints: θ ν + (1-θ) ω at the largest grid θ < 1 whose
  // (affine) entropy still sits within η of the level's top entropy
  Measure omega = full_support_measure(family.levels);
  auto mixed = [&](const Measure& nu) {
    for (int g = 18; g >= 1; --g) {
      double theta = g / 20.0;
      Measure m = Measure::convex({{theta, nu}, {1 - theta, omega}});
      if (m.entropy() >= h_top - eta) return m;
    }
    throw std::invalid_argument("irregular target: no mixing weight meets the entropy budget");
  };
  switch (variant) {
    case IrregularVariant::c:
      path.vertices.push_back({nu1, n0});
      path.vertices.push_back({mixed(nu2), 0});
      break;
    case IrregularVariant::d:
      path.vertices.push_back({mixed(nu1), 0});
      path.vertices.push_back({mixed(nu2), 0});
      break;
    case IrregularVariant::e:
      path.vertices.push_back({mixed(parry), 0});
      break;
    default:
      break;
  }
  return path;
}

BirkhoffTrace birkhoff_trace(const SymbolStream& stream, const Observable& phi,
                             long long horizon) {
  BirkhoffTrace tr;
  long long limit = std::min<long long>(horizon, static_cast<long long>(stream.symbols.size()));
  double sum = 0;
  double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
  std::size_t ci = 0;
  long long windows = 0;
  for (long long i = 0; i + phi.window - 1 < limit || (ci < stream.checkpoints.size() && i < limit);
       ++i) {
    if (i + phi.window - 1 < limit) {
      sum += phi.value(stream.symbols, static_cast<std::size_t>(i));
      ++windows;
    }
    while (ci < stream.checkpoints.size() && stream.checkpoints[ci].M == i + 1) {
      const Checkpoint& cp = stream.checkpoints[ci];
      ++ci;
      if (cp.M > limit) break;
      BirkhoffTrace::Row row;
      row.M = cp.M;
      row.band = cp.band;
      row.average = windows > 0 ? sum / static_cast<double>(windows) : 0.0;
      if (cp.band >= 1) {
        rmin = std::min(rmin, row.average);
        rmax = std::max(rmax, row.average);
      }
      row.running_min = rmin;
      row.running_max = rmax;
      tr.rows.push_back(row);
    }
  }
  tr.liminf_est = rmin;
  tr.limsup_est = rmax;
  return tr;
}

LimitClassification classify_limit_set(const SymbolStream& stream, const NestedFamily& family,
                                       long long horizon, double tolerance, int depth,
                                       double mass_tol, long long start_M) {
  LimitClassification out;
  out.radius = tolerance;
  int A = family.ambient().alphabet;
  auto fam = SeparatingFamily::canonical(A, depth);

  // proper levels: strictly below the ambient's transition pattern
  std::vector<int> proper;
  for (int lv = 1; lv <= family.level_count(); ++lv)
    if (family.system_of(lv).A != family.ambient().A) proper.push_back(lv);
  out.support_applicable = !proper.empty();

  long long limit = std::min<long long>(horizon, static_cast<long long>(stream.symbols.size()));
  if (start_M < 0) start_M = limit / 4;  // skip the burn-in quarter
  // sampling positions: checkpoints when present, else an even grid
  std::vector<long long> sample_at;
  if (!stream.checkpoints.empty()) {
    for (const auto& cp : stream.checkpoints)
      if (cp.M >= start_M && cp.M <= limit) sample_at.push_back(cp.M);
  } else {
    for (int j = 0; j < 64; ++j) sample_at.push_back(start_M + (limit - start_M) * j / 63);
  }

  // rolling empirical masses over the canonical words
  std::vector<std::pair<int, long long>> codes;
  for (const auto& w : fam.words) {
    long long c = 0;
    for (Symbol s : w) c = c * A + s;
    codes.emplace_back(static_cast<int>(w.size()), c);
  }
  std::vector<std::vector<long long>> counts(depth);
  {
    long long size = 1;
    for (int l = 0; l < depth; ++l) {
      size *= A;
      counts[l].assign(size, 0);
    }
  }
  std::vector<long long> roll(depth, 0), pows(depth, 0);
  {
    long long p = 1;
    for (int l = 0; l < depth; ++l) pows[l] = (p *= A);
  }

  std::vector<std::vector<double>> samples;
  std::size_t si = 0;
  for (long long i = 0; i < limit && si < sample_at.size(); ++i) {
    for (int l = 0; l < depth; ++l) {
      roll[l] = (roll[l] * A + stream.symbols[i]) % pows[l];
      if (i >= l) ++counts[l][roll[l]];
    }
    while (si < sample_at.size() && sample_at[si] == i + 1) {
      ++si;
      std::vector<double> v;
      v.reserve(codes.size());
      for (auto [len, code] : codes)
        v.push_back(static_cast<double>(counts[len - 1][code]) /
                    static_cast<double>(i + 1 - len + 1));
      samples.push_back(std::move(v));
    }
  }

  auto dist = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0, w = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      w *= 0.5;
      d += w * std::abs(x[k] - y[k]);
    }
    return d;
  };
  for (const auto& v : samples) {
    bool placed = false;
    for (auto& cl : out.clusters) {
      if (dist(v, cl.center) <= tolerance) {
        for (std::size_t k = 0; k < v.size(); ++k)
          cl.center[k] = (cl.center[k] * cl.hits + v[k]) / (cl.hits + 1);
        ++cl.hits;
        placed = true;
        break;
      }
    }
    if (!placed) out.clusters.push_back({v, 1, false, 0});
  }
  for (auto& cl : out.clusters) {
    for (int lv : proper) {
      const ShiftSystem& sys = family.system_of(lv);
      bool ok = true;
      for (std::size_t k = 0; k < fam.words.size() && ok; ++k)
        if (!sys.is_admissible(fam.words[k])) {
          // a mass near the threshold means the support verdict would hinge
          // on the tolerance choice: refuse to guess
          if (cl.center[k] > mass_tol / 2 && cl.center[k] < 2 * mass_tol) out.conclusive = false;
          if (cl.center[k] > mass_tol) ok = false;
        }
      if (ok) {
        cl.level_supported = true;
        cl.level = lv;
        break;
      }
    }
  }

  out.irregular = out.clusters.size() >= 2;
  if (!out.conclusive || out.clusters.empty()) {
    out.tag = '?';
    return out;
  }
  int supported = 0;
  for (const auto& cl : out.clusters) supported += cl.level_supported ? 1 : 0;
  int n = static_cast<int>(out.clusters.size());
  if (n == 1)
    out.tag = supported == 1 ? 'b' : 'e';
  else if (supported == n)
    out.tag = 'a';
  else if (supported == 0)
    out.tag = 'd';
  else
    out.tag = 'c';
  return out;
}

}  // namespace shiftlab
