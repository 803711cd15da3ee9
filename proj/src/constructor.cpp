#include "shiftlab/constructor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shiftlab {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

mpz_class Z(long long v) { return mpz_class(static_cast<long>(v)); }

mpq_class Q(long long v) { return mpq_class(static_cast<long>(v)); }

double wstar_total(const Measure& a, const Measure& b, int depth) {
  auto d = wstar_distance(a, b, depth);
  return d.value + d.tail;
}

long long ceil_ratio(const mpz_class& lhs, const mpq_class& q) {
  if (lhs <= 0) return 0;
  mpq_class v = mpq_class(lhs) / q;
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), v.get_num().get_mpz_t(), v.get_den().get_mpz_t());
  if (!c.fits_slong_p()) throw std::overflow_error("schedule bound does not fit a machine word");
  return c.get_si();
}

void check_pair_support(const Measure& mu, const ShiftSystem& sys, const char* what) {
  for (int i = 0; i < sys.alphabet; ++i)
    for (int j = 0; j < sys.alphabet; ++j)
      if (!sys.edge(static_cast<Symbol>(i), static_cast<Symbol>(j)) &&
          mu.mass({static_cast<Symbol>(i), static_cast<Symbol>(j)}) > 1e-12)
        throw std::invalid_argument(std::string(what) +
                                    ": measure puts mass on a transition its level forbids");
}

}  // namespace

// ----------------------------------------------------------- NestedFamily

const ShiftSystem& NestedFamily::ambient() const {
  if (ambient_override) return *ambient_override;
  if (levels.empty()) throw std::invalid_argument("family: no levels");
  return levels.back();
}

const ShiftSystem& NestedFamily::system_of(int level) const {
  if (level == 0) return ambient();
  if (level < 1 || level > level_count()) throw std::out_of_range("family: bad level index");
  return levels[level - 1];
}

void NestedFamily::validate() const {
  if (levels.empty()) throw std::invalid_argument("family: no levels");
  int a = levels.front().alphabet;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].alphabet != a) throw std::invalid_argument("family: alphabet mismatch");
    levels[i].validate();
    if (!levels[i].is_transitive())
      throw std::invalid_argument("family: level " + std::to_string(i + 1) + " is not transitive");
  }
  auto dominated = [a](const ShiftSystem& lo, const ShiftSystem& hi, const std::string& what) {
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < a; ++j)
        if (lo.A[i][j] && !hi.A[i][j])
          throw std::invalid_argument("family: nesting violated (" + what + " forbids " +
                                      word_to_string({static_cast<Symbol>(i),
                                                      static_cast<Symbol>(j)}) + ")");
  };
  for (size_t i = 0; i + 1 < levels.size(); ++i)
    dominated(levels[i], levels[i + 1], "level " + std::to_string(i + 2));
  if (ambient_override) {
    if (ambient_override->alphabet != a) throw std::invalid_argument("family: ambient alphabet");
    ambient_override->validate();
    dominated(levels.back(), *ambient_override, "ambient");
    // density certificate: every ambient cylinder to the certified depth must
    // meet some level
    for (int len = 1; len <= density_depth; ++len) {
      if (std::pow(static_cast<double>(a), len) > 2e6) break;
      for (const auto& w : ambient().words_of_length(len)) {
        bool met = false;
        for (const auto& lv : levels)
          if (lv.is_admissible(w)) {
            met = true;
            break;
          }
        if (!met)
          throw std::invalid_argument("family: ambient cylinder " + word_to_string(w) +
                                      " meets no level (density certificate fails)");
      }
    }
  }
}

int NestedFamily::level_admitting(const Word& u) const {
  for (int l = 1; l <= level_count(); ++l)
    if (levels[l - 1].is_admissible(u)) return l;
  if (ambient_override && ambient().is_admissible(u)) return 0;
  return -1;
}

// ------------------------------------------------------------- TargetPath

void TargetPath::validate(const NestedFamily& family) const {
  if (vertices.empty()) throw std::invalid_argument("target path: no vertices");
  for (const auto& v : vertices) {
    if (v.level < 0 || v.level > family.level_count())
      throw std::invalid_argument("target path: bad level tag");
    const ShiftSystem& sys = family.system_of(v.level);
    if (v.measure.alphabet() != sys.alphabet)
      throw std::invalid_argument("target path: alphabet mismatch");
    check_pair_support(v.measure, sys, "target path");
  }
}

double TargetPath::inf_entropy() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) h = std::min(h, v.measure.entropy());
  return h;
}

// ------------------------------------------------------------ MeasureChain

MeasureChain build_chain(const TargetPath& path, double eta, int count, bool direct_mode) {
  if (path.vertices.empty()) throw std::invalid_argument("build_chain: empty path");
  if (count < 1) throw std::invalid_argument("build_chain: count must be positive");
  MeasureChain ch;
  ch.eta = eta;
  ch.direct_mode = direct_mode;
  int S = static_cast<int>(path.vertices.size()) - 1;

  std::vector<double> params;
  params.push_back(0.0);
  if (S > 0) {
    // dyadic zigzag: pass r sweeps the whole path with step 2^-r, direction
    // alternating, so consecutive steps shrink to zero while every tail
    // remains dense in the path.
    int r = 0;
    bool forward = true;
    while (static_cast<int>(params.size()) < count) {
      double step = std::ldexp(static_cast<double>(1), -r);
      double cur = params.back();
      double target = forward ? static_cast<double>(S) : 0.0;
      long long moves = std::llround(std::abs(target - cur) / step);
      for (long long i = 1; i <= moves && static_cast<int>(params.size()) < count; ++i)
        params.push_back(forward ? cur + i * step : cur - i * step);
      forward = !forward;
      ++r;
    }
  } else {
    params.assign(count, 0.0);
  }

  auto at = [&](double s) -> std::pair<Measure, int> {
    if (S == 0) return {path.vertices[0].measure, path.vertices[0].level};
    int seg = std::min(static_cast<int>(std::floor(s)), S - 1);
    double tau = s - seg;
    const auto& a = path.vertices[seg];
    const auto& b = path.vertices[seg + 1];
    if (tau <= 1e-12) return {a.measure, a.level};
    if (tau >= 1 - 1e-12) return {b.measure, b.level};
    int lvl = NestedFamily::rank(a.level) >= NestedFamily::rank(b.level) ? a.level : b.level;
    return {Measure::convex({{1 - tau, a.measure}, {tau, b.measure}}), lvl};
  };

  double floor_h = std::numeric_limits<double>::infinity();
  for (double s : params) {
    auto [mu, lvl] = at(s);
    MeasureChain::Step st;
    st.alpha = mu;
    st.gamma = mu;  // measure mode refines this in solve_schedule
    st.level = lvl;
    st.tau = s;
    ch.steps.push_back(std::move(st));
    floor_h = std::min(floor_h, mu.entropy());
  }
  ch.entropy_floor = floor_h - eta;
  return ch;
}

// ---------------------------------------------------------------- Schedule

long long Schedule::prefix_slot_length() const { return m[0] + K[0] - 1; }
long long Schedule::block_slot_length(int k) const { return n[k - 1] + K[k - 1] - 1; }
long long Schedule::net_slot_length(int k) const { return m[k - 1] + K[k - 1] - 1; }
long long Schedule::bridge_slot_length(int k) const { return m[k - 1] + K[k] - 1; }

long long Schedule::band_length(int k) const {
  return N[k - 1] * block_slot_length(k) + (t[k - 1] - 1) * net_slot_length(k) +
         bridge_slot_length(k);
}

long long Schedule::band_end(int k) const {
  long long total = prefix_slot_length();
  for (int j = 1; j <= k; ++j) total += band_length(j);
  return total;
}

void Schedule::assert_inequalities() const {
  auto fail = [](const std::string& what) { throw std::logic_error("schedule: " + what); };
  int B = bands;
  // net/bridge budget per segment, the display (t_k K_k + K_{k+1})/n_k <= ζ_k,
  // plus its strengthened form accounting for the widened net windows
  for (int k = 1; k <= B + 2; ++k) {
    if (Q(t[k - 1] * K[k - 1] + K[k]) > zeta[k - 1] * Q(n[k - 1]))
      fail("net budget display fails at band " + std::to_string(k));
    long long wide = (t[k - 1] - 1) * (m[k - 1] + K[k - 1] - 1) + (m[k - 1] + K[k] - 1);
    if (Q(wide) > zeta[k - 1] * Q(n[k - 1]))
      fail("widened net budget fails at band " + std::to_string(k));
  }
  // repetition displays
  std::vector<mpz_class> Sw(B + 1, 0);  // Sw[k] = sum_{j<=k} N_j n_j
  for (int k = 1; k <= B; ++k) Sw[k] = Sw[k - 1] + Z(N[k - 1]) * Z(n[k - 1]);
  for (int k = 1; k <= B; ++k) {
    long long lhs1 = n[k] + (t[k] - 1) * K[k] + 2 * K[k + 1] + n[k + 1];
    if (Q(lhs1) > zeta[k - 1] * mpq_class(Sw[k]))
      fail("lookahead display fails at band " + std::to_string(k));
  }
  mpz_class run = 0, run_wide = Z(prefix_slot_length());
  for (int k = 1; k <= B - 1; ++k) {
    run += Z(N[k - 1]) * Z(n[k - 1] + K[k - 1] - 1) + Z(t[k - 1] * K[k - 1]);
    run_wide += Z(band_length(k));
    if (mpq_class(run + Z(K[k])) > zeta[k] * mpq_class(Sw[k + 1]))
      fail("cumulative display fails at band " + std::to_string(k));
    if (mpq_class(run_wide + Z(K[k])) > zeta[k] * mpq_class(Sw[k + 1]))
      fail("widened cumulative display fails at band " + std::to_string(k));
  }
  for (int k = 1; k < B; ++k)
    if (N[k] <= N[k - 1]) fail("repetitions not strictly increasing");
  for (int k = 1; k <= B + 2; ++k)
    if (zeta[k] >= zeta[k - 1]) fail("zeta not strictly decreasing");
}

Schedule solve_schedule(const NestedFamily& family, MeasureChain& chain, const Word& u,
                        double eta, int bands, const mpq_class& zeta1_cap, long box_budget) {
  family.validate();
  if (u.empty()) throw std::invalid_argument("schedule: empty cylinder word");
  if (bands < 1 || bands > 28) throw std::invalid_argument("schedule: band count out of range");
  if (static_cast<int>(chain.steps.size()) < bands + 2)
    throw std::invalid_argument("schedule: chain too short for the requested bands");

  Schedule sch;
  sch.bands = bands;
  sch.eta = eta;
  sch.u = u;
  int extent = bands + 3;  // per-band arrays carry k = 1 .. B+3

  sch.u_level = family.level_admitting(u);
  if (sch.u_level < 0)
    throw std::invalid_argument("schedule: the cylinder misses every level of the family");

  // ε chain: ε_1 = min(ε*/6, ε_0/2) with ε* = 1/2, then halving
  sch.eps0 = mpq_class(1) >> static_cast<unsigned>(u.size());
  mpq_class eps1 = std::min(mpq_class(1, 12), mpq_class(sch.eps0 / 2));
  for (int k = 1; k <= extent; ++k) sch.eps.push_back(eps1 >> static_cast<unsigned>(k - 1));

  // measure-mode refinement of the working measures (direct mode keeps γ = α)
  if (!chain.direct_mode) {
    for (int k = 1; k <= bands + 2; ++k) {
      auto& st = chain.steps[k - 1];
      double tol = sch.eps[k - 1].get_d();
      auto res = entropy_dense_approx(family.system_of(st.level), st.alpha, tol, 2 * eta);
      if (!res.met)
        throw std::runtime_error("schedule: ergodic approximation missed its bounds at band " +
                                 std::to_string(k) + " (achieved distance " +
                                 std::to_string(res.distance) + ", entropy gap " +
                                 std::to_string(res.entropy_gap) + ")");
      st.gamma = res.nu;
      st.gamma_distance = res.distance;
    }
    double floor_h = std::numeric_limits<double>::infinity();
    for (const auto& st : chain.steps) floor_h = std::min(floor_h, st.gamma.entropy());
    chain.entropy_floor = floor_h - eta;
  }
  sch.entropy_floor = chain.entropy_floor;

  // ζ policy: ζ_k = ζ_1 (33-k)/32, with ζ_1 capped by the strict barrier
  // 5 ζ_1 (H* - η) < η (checked in exact rational arithmetic against a
  // rational upper bound of H* - η)
  mpq_class zeta1 = zeta1_cap;
  double excess = chain.entropy_floor - eta;  // = inf h(γ) - 2η
  if (excess > 0) {
    mpq_class D(static_cast<long>(std::ceil(excess * (1 << 20))) + 1, 1 << 20);  // upper bound
    mpq_class eta_lb(static_cast<long>(std::floor(eta * (1 << 20))), 1 << 20);   // lower bound
    if (eta_lb <= 0) throw std::invalid_argument("schedule: eta too small");
    while (5 * zeta1 * D >= eta_lb) zeta1 /= 2;
  }
  for (int k = 1; k <= extent; ++k) {
    mpq_class zk = zeta1 * mpq_class(33 - k, 32);
    zk.canonicalize();
    sch.zeta.push_back(zk);
  }

  // per-band levels, glue levels, gaps, windows, nets
  auto level_at = [&](int k) {
    int idx = std::min<int>(k, static_cast<int>(chain.steps.size()));
    return chain.steps[idx - 1].level;
  };
  for (int k = 1; k <= extent; ++k) {
    sch.level.push_back(level_at(k));
    int glue = sch.u_level;
    auto bump = [&](int cand) {
      if (NestedFamily::rank(cand) > NestedFamily::rank(glue)) glue = cand;
    };
    for (int j = 1; j <= k + 1; ++j) bump(level_at(j));
    bump(std::min(k, family.level_count()));  // nets sweep upward through the levels
    sch.glue_level.push_back(glue);
    const ShiftSystem& gsys = family.system_of(glue);
    sch.m.push_back(coord_window(sch.eps[k - 1]));
    sch.K.push_back(gsys.specification_gap());
    auto net = gsys.words_of_length(sch.m[k - 1]);
    sch.t.push_back(static_cast<long long>(net.size()));
    sch.nets.push_back(std::move(net));
  }
  sch.x0 = family.system_of(sch.u_level).lex_min_extension(u, sch.m[0]);

  // content lengths: smallest n_k meeting the net-budget displays, grown until
  // the block set certifies |Γ_k| >= e^{n_k (h_k - η)} (direct arithmetic on
  // exact counts); lookahead bands only need the displays
  for (int k = 1; k <= bands + 2; ++k) {
    mpz_class need1 = Z(sch.t[k - 1] * sch.K[k - 1] + sch.K[k]);
    mpz_class need2 = Z((sch.t[k - 1] - 1) * (sch.m[k - 1] + sch.K[k - 1] - 1) +
                        (sch.m[k - 1] + sch.K[k] - 1));
    long long nk = std::max(ceil_ratio(need1, sch.zeta[k - 1]), ceil_ratio(need2, sch.zeta[k - 1]));
    nk = std::max(nk, static_cast<long long>(2 * sch.m[k - 1] + 2));
    if (k <= bands) {
      const auto& st = chain.steps[k - 1];
      const ShiftSystem& sys = family.system_of(st.level);
      double hk = st.gamma.entropy();
      double rate_needed = hk - eta;
      double zk = sch.zeta[k - 1].get_d();
      bool certified = false;
      for (int attempt = 0; attempt < 200 && !certified; ++attempt) {
        auto ts = typical_words(sys, st.gamma, static_cast<int>(nk), zk, box_budget);
        if (ts.exact_count >= 2 && ts.log_count >= rate_needed * nk &&
            ts.log_count >= sch.entropy_floor * nk) {
          sch.gamma_sets.push_back(std::move(ts));
          certified = true;
        } else {
          nk += std::max<long long>(1, nk / 20);
        }
      }
      if (!certified)
        throw std::runtime_error("schedule: block-set certification failed at band " +
                                 std::to_string(k));
    }
    sch.n.push_back(nk);
  }

  // repetitions: smallest strictly increasing N_k meeting the cumulative
  // displays (narrow form and the widened-slot form) and the lookahead display
  auto line1 = [&](int k) {
    return Z(sch.n[k] + (sch.t[k] - 1) * sch.K[k] + 2 * sch.K[k + 1] + sch.n[k + 1]);
  };
  std::vector<mpz_class> Sw{0};
  auto push_N = [&](long long Nk) {
    sch.N.push_back(Nk);
    Sw.push_back(Sw.back() + Z(Nk) * Z(sch.n[sch.N.size() - 1]));
  };
  long long N1 = std::max<long long>(1, (ceil_ratio(line1(1), sch.zeta[0]) + sch.n[0] - 1) / sch.n[0]);
  push_N(N1);
  for (int k = 1; k <= bands - 1; ++k) {
    mpz_class run = 0;
    for (int j = 1; j <= k; ++j)
      run += Z(sch.N[j - 1]) * Z(sch.n[j - 1] + sch.K[j - 1] - 1) + Z(sch.t[j - 1] * sch.K[j - 1]);
    mpz_class run_wide = Z(sch.prefix_slot_length());
    for (int j = 1; j <= k; ++j) run_wide += Z(sch.band_length(j));
    long long next = sch.N[k - 1] + 1;
    auto bump_for = [&](const mpz_class& lhs, const mpq_class& z) {
      long long target = ceil_ratio(lhs, z);  // required Sw[k+1]
      mpz_class deficit = Z(target) - Sw[k];
      if (deficit > 0) {
        mpz_class need;
        mpz_cdiv_q(need.get_mpz_t(), deficit.get_mpz_t(), Z(sch.n[k]).get_mpz_t());
        next = std::max(next, static_cast<long long>(need.get_si()));
      }
    };
    bump_for(run + Z(sch.K[k]), sch.zeta[k]);
    bump_for(run_wide + Z(sch.K[k]), sch.zeta[k]);
    bump_for(line1(k + 1), sch.zeta[k]);
    push_N(next);
  }
  sch.assert_inequalities();
  return sch;
}

// ---------------------------------------------------------- point generator

namespace {

std::mt19937_64 band_rng(std::uint64_t seed, int band) {
  return std::mt19937_64(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (band + 1))));
}

}  // namespace

void resume_point(SymbolStream& s, const NestedFamily& family, const MeasureChain& chain,
                  const Schedule& sch, long long horizon) {
  (void)chain;
  int B = sch.bands;
  s.horizon = horizon;
  int start_band = s.complete_bands + 1;
  long long base = start_band == 0 ? 0 : sch.band_end(start_band - 1);
  if (static_cast<long long>(s.symbols.size()) < base)
    throw std::invalid_argument("resume: stored prefix shorter than its band boundary");
  // drop any partially generated band; it is regenerated deterministically
  s.symbols.resize(base);
  while (!s.checkpoints.empty() && s.checkpoints.back().M > base) s.checkpoints.pop_back();

  auto sample_band_blocks = [&](int k, long long count) {
    auto rng = band_rng(s.seed, k);
    std::vector<Word> out;
    out.reserve(count);
    for (long long i = 0; i < count; ++i) out.push_back(sch.gamma_sets[k - 1].sample(rng));
    return out;
  };
  auto first_symbol_of_band = [&](int k) -> Symbol {
    auto rng = band_rng(s.seed, k);
    return sch.gamma_sets[k - 1].sample(rng).front();
  };
  // appends one slot: content, then a connector of `conn_len` symbols toward
  // `next_first` inside `glue` (or a lexicographic extension when the stream
  // ends after this slot)
  auto append_slot = [&](const Word& content, long long conn_len, const ShiftSystem& glue,
                         std::optional<Symbol> next_first, int band, int slot,
                         Checkpoint::Type type) {
    Checkpoint cp;
    cp.offset = static_cast<long long>(s.symbols.size());
    cp.band = band;
    cp.slot = slot;
    cp.type = type;
    cp.content = content;
    s.symbols.insert(s.symbols.end(), content.begin(), content.end());
    if (next_first) {
      auto conn = glue.connector(content.back(), *next_first, static_cast<int>(conn_len));
      if (!conn)
        throw std::logic_error("generator: no connector of the scheduled gap length");
      s.symbols.insert(s.symbols.end(), conn->begin(), conn->end());
    } else if (conn_len > 0) {
      Word ext = glue.lex_min_extension(content, static_cast<int>(content.size() + conn_len));
      s.symbols.insert(s.symbols.end(), ext.begin() + content.size(), ext.end());
    }
    cp.M = static_cast<long long>(s.symbols.size());
    s.checkpoints.push_back(std::move(cp));
  };

  for (int k = start_band; k <= B; ++k) {
    if (static_cast<long long>(s.symbols.size()) >= horizon) break;
    if (k == 0) {
      const ShiftSystem& glue = family.system_of(sch.glue_level[0]);
      append_slot(sch.x0, sch.K[0] - 1, glue, first_symbol_of_band(1), 0, 0,
                  Checkpoint::Type::prefix);
      s.complete_bands = 0;
      continue;
    }
    const ShiftSystem& glue = family.system_of(sch.glue_level[k - 1]);
    const ShiftSystem& glue_next = family.system_of(sch.glue_level[k]);
    auto blocks = sample_band_blocks(k, sch.N[k - 1]);
    const auto& net = sch.nets[k - 1];
    bool interrupted = false;
    for (long long j = 0; j < sch.N[k - 1] && !interrupted; ++j) {
      Symbol next = j + 1 < sch.N[k - 1] ? blocks[j + 1].front() : net.front().front();
      append_slot(blocks[j], sch.K[k - 1] - 1, glue, next, k, static_cast<int>(j),
                  Checkpoint::Type::block);
      interrupted = static_cast<long long>(s.symbols.size()) >= horizon;
    }
    for (long long j = 0; j + 1 < sch.t[k - 1] && !interrupted; ++j) {
      append_slot(net[j], sch.K[k - 1] - 1, glue, net[j + 1].front(), k,
                  static_cast<int>(sch.N[k - 1] + j), Checkpoint::Type::net);
      interrupted = static_cast<long long>(s.symbols.size()) >= horizon;
    }
    if (!interrupted) {
      std::optional<Symbol> next;
      if (k < B) next = first_symbol_of_band(k + 1);
      append_slot(net.back(), sch.K[k] - 1, glue_next, next, k,
                  static_cast<int>(sch.N[k - 1] + sch.t[k - 1] - 1), Checkpoint::Type::bridge);
      s.complete_bands = k;
    } else {
      break;
    }
  }
}

SymbolStream generate_point(const NestedFamily& family, const MeasureChain& chain,
                            const Schedule& schedule, std::uint64_t seed, long long horizon) {
  SymbolStream s;
  s.seed = seed;
  resume_point(s, family, chain, schedule, horizon);
  return s;
}

// ------------------------------------------------------------ verification

namespace {

// rolling window counts of all words of lengths 1..depth
struct WindowCounter {
  int alphabet, depth;
  std::vector<std::vector<long long>> counts;  // per length, indexed by code
  std::vector<long long> codes;                // rolling code per length
  long long seen = 0;

  WindowCounter(int a, int d) : alphabet(a), depth(d), counts(d), codes(d, 0) {
    long long size = 1;
    for (int l = 0; l < d; ++l) {
      size *= a;
      counts[l].assign(size, 0);
    }
  }
  void push(Symbol x) {
    ++seen;
    long long pow = 1;
    for (int l = 0; l < depth; ++l) {
      pow *= alphabet;
      codes[l] = (codes[l] * alphabet + x) % pow;
      if (seen >= l + 1) ++counts[l][codes[l]];
    }
  }
  double emp(int len, long long code) const {
    long long windows = seen - len + 1;
    return windows > 0 ? static_cast<double>(counts[len - 1][code]) / windows : 0.0;
  }
};

}  // namespace

TrackingReport verify_tracking(const SymbolStream& stream, const MeasureChain& chain,
                               const Schedule& sch, long long horizon, int depth,
                               const std::vector<Measure>* band_targets) {
  TrackingReport rep;
  int B = sch.bands;
  int A = (band_targets && !band_targets->empty()) ? (*band_targets)[0].alphabet()
                                                   : chain.steps[0].gamma.alphabet();
  auto target_of = [&](int band) -> const Measure& {
    int b = std::max(band, 1);
    if (band_targets)
      return (*band_targets)[std::min<int>(b, static_cast<int>(band_targets->size())) - 1];
    return chain.steps[std::min<int>(b, static_cast<int>(chain.steps.size())) - 1].gamma;
  };

  auto fam = SeparatingFamily::canonical(A, depth);
  rep.allowance = std::ldexp(1.0, -static_cast<int>(fam.words.size()));

  // per-band target masses over the canonical family
  std::vector<std::vector<double>> masses(B + 1);
  std::vector<double> envelopes(B + 1);
  for (int b = 0; b <= B; ++b) {
    const Measure& tgt = target_of(b);
    masses[b].reserve(fam.words.size());
    for (const auto& w : fam.words) masses[b].push_back(tgt.mass(w));
    int km = std::max(b - 1, 1);
    envelopes[b] = 9 * sch.zeta[km - 1].get_d() + 4 * sch.eps[km - 1].get_d() +
                   wstar_total(target_of(km), target_of(km + 1), depth) + rep.allowance;
  }

  // precompute word codes of the canonical family
  std::vector<std::pair<int, long long>> fam_codes;
  fam_codes.reserve(fam.words.size());
  for (const auto& w : fam.words) {
    long long code = 0;
    for (Symbol sym : w) code = code * A + sym;
    fam_codes.emplace_back(static_cast<int>(w.size()), code);
  }

  WindowCounter wc(A, depth);
  rep.band_max.assign(B + 1, 0.0);
  size_t ci = 0;
  long long limit = std::min<long long>(horizon, static_cast<long long>(stream.symbols.size()));
  for (long long i = 0; i < limit; ++i) {
    wc.push(stream.symbols[i]);
    while (ci < stream.checkpoints.size() && stream.checkpoints[ci].M == i + 1) {
      const Checkpoint& cp = stream.checkpoints[ci];
      ++ci;
      TrackingRow row;
      row.M = cp.M;
      row.band = cp.band;
      double dist = 0, weight = 1.0;
      for (size_t wi = 0; wi < fam_codes.size(); ++wi) {
        weight *= 0.5;
        dist += weight * std::abs(wc.emp(fam_codes[wi].first, fam_codes[wi].second) -
                                  masses[cp.band][wi]);
      }
      row.distance = dist;
      row.envelope = envelopes[cp.band];
      row.distance_ok = dist <= row.envelope;
      // window reproduction + typicality of block contents
      row.window_ok = std::equal(cp.content.begin(), cp.content.end(),
                                 stream.symbols.begin() + cp.offset);
      if (row.window_ok && cp.type == Checkpoint::Type::block && !band_targets) {
        TransitionClass cls;
        cls.first = cp.content.front();
        cls.last = cp.content.back();
        cls.counts.assign(A, std::vector<std::uint32_t>(A, 0));
        for (size_t p = 0; p + 1 < cp.content.size(); ++p)
          ++cls.counts[cp.content[p]][cp.content[p + 1]];
        row.window_ok = class_typical(cls, PairStats::of(target_of(cp.band)),
                                      sch.zeta[cp.band - 1].get_d());
      }
      rep.band_max[cp.band] = std::max(rep.band_max[cp.band], dist);
      rep.pass = rep.pass && row.distance_ok && row.window_ok;
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

TransitivityReport verify_transitivity(const SymbolStream& stream, const NestedFamily& family,
                                       const Schedule& sch, int depth, long long horizon) {
  TransitivityReport rep;
  int A = family.ambient().alphabet;
  long long limit = std::min<long long>(horizon, static_cast<long long>(stream.symbols.size()));
  if (std::pow(static_cast<double>(A), depth) > 4e6)
    throw std::invalid_argument("transitivity audit: depth too large");

  // first-occurrence indices of every window of each length
  std::vector<std::vector<long long>> first(depth);
  {
    long long size = 1;
    for (int l = 0; l < depth; ++l) {
      size *= A;
      first[l].assign(size, -1);
    }
    std::vector<long long> codes(depth, 0);
    long long pow_l[32];
    long long p = 1;
    for (int l = 0; l < depth; ++l) pow_l[l] = (p *= A);
    for (long long i = 0; i < limit; ++i) {
      for (int l = 0; l < depth; ++l) {
        codes[l] = (codes[l] * A + stream.symbols[i]) % pow_l[l];
        if (i >= l && first[l][codes[l]] < 0) first[l][codes[l]] = i - l;
      }
    }
  }

  for (int lv = 1; lv <= family.level_count(); ++lv) {
    const ShiftSystem& sys = family.system_of(lv);
    for (int len = 1; len <= depth; ++len) {
      for (const auto& w : sys.words_of_length(len)) {
        TransitivityRow row;
        row.level = lv;
        row.word = w;
        long long code = 0;
        for (Symbol sym : w) code = code * A + sym;
        row.first_hit = first[len - 1][code];
        row.scheduled_band = 0;
        for (int k = 1; k <= sch.bands; ++k) {
          if (sch.m[k - 1] >= len &&
              NestedFamily::rank(sch.glue_level[k - 1]) >= NestedFamily::rank(lv)) {
            row.scheduled_band = k;
            break;
          }
        }
        if (row.scheduled_band > 0) {
          row.scheduled_by = sch.band_end(row.scheduled_band);
          row.audited = stream.complete_bands >= row.scheduled_band && row.scheduled_by <= limit;
        }
        row.pass = row.first_hit >= 0 && row.scheduled_band > 0 &&
                   row.first_hit + len <= row.scheduled_by;
        if (row.audited)
          rep.pass = rep.pass && row.pass;
        else
          ++rep.skipped;
        rep.rows.push_back(std::move(row));
      }
    }
  }
  return rep;
}

long long checkpoint_ratio_settles_at(const SymbolStream& stream, const Schedule& sch) {
  long long settled = 0;
  for (size_t j = 0; j + 1 < stream.checkpoints.size(); ++j) {
    const auto& cur = stream.checkpoints[j];
    const auto& nxt = stream.checkpoints[j + 1];
    int band = std::max(nxt.band, 1);
    mpq_class bound = (1 + sch.zeta[band - 1]) * mpq_class(static_cast<long>(cur.M));
    if (mpq_class(static_cast<long>(nxt.M)) > bound) settled = static_cast<long long>(j) + 1;
  }
  return settled;
}

FamilyCertificate separated_family_certificate(const Schedule& sch, const TargetPath& path,
                                               double floor_slack, std::uint64_t seed, int pairs) {
  FamilyCertificate cert;
  int B = sch.bands;
  for (int k = 1; k <= B; ++k) cert.log_count += sch.N[k - 1] * sch.gamma_sets[k - 1].log_count;
  cert.M = sch.band_end(B);
  cert.rate = cert.log_count / static_cast<double>(cert.M);
  cert.floor = path.inf_entropy() - floor_slack;
  cert.rate_ok = cert.rate >= cert.floor;

  std::mt19937_64 rng(splitmix64(seed ^ 0xC2B2AE3D27D4EB4FULL));
  for (int i = 0; i < pairs; ++i) {
    int k = 1 + static_cast<int>(rng() % B);
    if (sch.gamma_sets[k - 1].exact_count < 2) {
      --i;
      continue;
    }
    Word w1 = sch.gamma_sets[k - 1].sample(rng);
    Word w2 = sch.gamma_sets[k - 1].sample(rng);
    int guard = 0;
    while (w2 == w1 && guard++ < 200) w2 = sch.gamma_sets[k - 1].sample(rng);
    if (w2 == w1) continue;
    ++cert.pairs_checked;
    // two streams with these block choices in the same slot differ inside the
    // block window, hence are (M, 1/2)-separated at that window's end
    bool differ = false;
    for (size_t p = 0; p < w1.size(); ++p)
      if (w1[p] != w2[p]) {
        differ = true;
        break;
      }
    if (differ) ++cert.pairs_separated;
  }
  cert.pass = cert.rate_ok && cert.pairs_checked == pairs && cert.pairs_separated == pairs;
  return cert;
}

// ------------------------------------------------------------ mixing route

Word MixingRoute::decode(const Word& block_symbols) const {
  const auto& blocks = powers.front().blocks;
  Word out;
  out.reserve(block_symbols.size() * k);
  for (Symbol b : block_symbols) {
    const Word& w = blocks[b];
    out.insert(out.end(), w.begin(), w.end());
  }
  out.erase(out.begin(), out.begin() + i0);
  return out;
}

long long MixingRoute::base_index(long long block_index) const { return block_index * k - i0; }

MixingRoute mixing_route(const NestedFamily& family, const Word& u) {
  family.validate();
  MixingRoute route;
  std::vector<PeriodicDecomposition> decs;
  int period = 0;
  for (const auto& lv : family.levels) {
    decs.push_back(lv.periodic_decomposition());
    period = period == 0 ? decs.back().period : std::gcd(period, decs.back().period);
  }
  if (period <= 1) {
    route.identity = true;
    route.block_family = family;
    return route;
  }
  for (size_t i = 0; i < family.levels.size(); ++i) {
    if (decs[i].period != period)
      throw std::invalid_argument("mixing route: levels have different periods");
    for (int s = 0; s < family.levels[i].alphabet; ++s)
      if (decs[i].class_of[s] % period != decs[0].class_of[s] % period)
        throw std::invalid_argument("mixing route: periodic classes misaligned across levels");
  }
  route.identity = false;
  route.k = period;
  route.i0 = u.empty() ? 0 : decs[0].class_of[u[0]];

  for (const auto& lv : family.levels) route.powers.push_back(power_restrict(lv));
  const auto& ref_blocks = route.powers.back().blocks;
  for (const auto& ps : route.powers)
    if (ps.blocks != ref_blocks)
      throw std::invalid_argument(
          "mixing route: levels induce different block alphabets (unsupported)");
  route.block_family.name = family.name + "-blocks";
  for (const auto& ps : route.powers) route.block_family.levels.push_back(ps.block_system);
  route.block_family.density_depth = family.density_depth;

  // transported cylinder: lexicographically smallest admissible base word,
  // starting in class D_0, carrying u at offset i0, cut into blocks
  if (!u.empty()) {
    int lv = family.level_admitting(u);
    if (lv < 0) throw std::invalid_argument("mixing route: cylinder misses every level");
    const ShiftSystem& sys = family.system_of(lv);
    const auto& dec = decs[lv - 1];
    int total = static_cast<int>((route.i0 + u.size() + period - 1) / period) * period;
    Word w(total, 0);
    auto fixed = [&](int pos) -> std::optional<Symbol> {
      if (pos >= route.i0 && pos < route.i0 + static_cast<int>(u.size()))
        return u[pos - route.i0];
      return std::nullopt;
    };
    auto dfs = [&](auto&& self, int pos) -> bool {
      if (pos == total) return true;
      auto f = fixed(pos);
      for (int c = 0; c < sys.alphabet; ++c) {
        if (f && *f != c) continue;
        if (pos == 0 && dec.class_of[c] != 0) continue;
        if (pos > 0 && !sys.edge(w[pos - 1], static_cast<Symbol>(c))) continue;
        w[pos] = static_cast<Symbol>(c);
        if (self(self, pos + 1)) return true;
      }
      return false;
    };
    if (!dfs(dfs, 0))
      throw std::invalid_argument("mixing route: cylinder cannot be aligned with class D_0");
    for (int b = 0; b < total / period; ++b) {
      Word blk(w.begin() + b * period, w.begin() + (b + 1) * period);
      auto it = std::find(ref_blocks.begin(), ref_blocks.end(), blk);
      if (it == ref_blocks.end())
        throw std::logic_error("mixing route: aligned word uses an unknown block");
      route.block_u.push_back(static_cast<Symbol>(it - ref_blocks.begin()));
    }
  }
  return route;
}

}  // namespace shiftlab
