#include "shiftlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shiftlab {
namespace {

void check_distribution(const std::vector<double>& p, const char* what) {
  double s = 0;
  for (double x : p) {
    if (x < -1e-15 || x > 1 + 1e-12) throw std::invalid_argument(std::string(what) + ": entry out of [0,1]");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

// Solve x P = x, sum x = 1 by Gaussian elimination on (P^T - I | normalization).
std::vector<double> stationary_of(const std::vector<std::vector<double>>& P) {
  int n = static_cast<int>(P.size());
  // rows: (P^T - I) x = 0 for i < n-1, plus sum row
  std::vector<std::vector<double>> M(n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n - 1; ++i) {
    for (int j = 0; j < n; ++j) M[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
    M[i][n] = 0.0;
  }
  for (int j = 0; j < n; ++j) M[n - 1][j] = 1.0;
  M[n - 1][n] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col; r < n; ++r)
      if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
    if (std::abs(M[piv][col]) < 1e-14)
      throw std::invalid_argument("stationary vector not unique (reducible chain)");
    std::swap(M[piv], M[col]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = M[r][col] / M[col][col];
      for (int c = col; c <= n; ++c) M[r][c] -= f * M[col][c];
    }
  }
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = M[i][n] / M[i][i];
  // residual check
  for (int j = 0; j < n; ++j) {
    double r = -x[j];
    for (int i = 0; i < n; ++i) r += x[i] * P[i][j];
    if (std::abs(r) > kStationaryTol)
      throw std::runtime_error("stationary solve residual too large");
  }
  return x;
}

}  // namespace

void MarkovMeasure::validate() const {
  if (alphabet < 1) throw std::invalid_argument("markov measure: empty alphabet");
  if (static_cast<int>(pi.size()) != alphabet || static_cast<int>(P.size()) != alphabet)
    throw std::invalid_argument("markov measure: dimension mismatch");
  check_distribution(pi, "markov pi");
  for (int i = 0; i < alphabet; ++i) {
    if (static_cast<int>(P[i].size()) != alphabet)
      throw std::invalid_argument("markov measure: row size mismatch");
    double s = 0;
    for (double x : P[i]) {
      if (x < -1e-15 || x > 1 + 1e-12) throw std::invalid_argument("markov P: entry out of [0,1]");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("markov P: row does not sum to 1");
  }
}

bool MarkovMeasure::invariant(double tol) const {
  for (int j = 0; j < alphabet; ++j) {
    double r = -pi[j];
    for (int i = 0; i < alphabet; ++i) r += pi[i] * P[i][j];
    if (std::abs(r) > tol) return false;
  }
  return true;
}

bool MarkovMeasure::compatible_with(const ShiftSystem& sys) const {
  if (sys.alphabet != alphabet) return false;
  for (int i = 0; i < alphabet; ++i)
    for (int j = 0; j < alphabet; ++j)
      if (P[i][j] > 1e-15 && !sys.edge(static_cast<Symbol>(i), static_cast<Symbol>(j)))
        return false;
  return true;
}

double MarkovMeasure::mass(const Word& w) const {
  if (w.empty()) return 1.0;
  for (Symbol s : w)
    if (s >= alphabet) throw std::invalid_argument("mass: symbol out of alphabet");
  double m = pi[w[0]];
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    if (m == 0.0) return 0.0;
    m *= P[w[i]][w[i + 1]];
  }
  return m;
}

std::vector<double> MarkovMeasure::stationary() const { return stationary_of(P); }

double MarkovMeasure::entropy() const {
  std::vector<double> p = invariant() ? pi : stationary_of(P);
  double h = 0;
  for (int i = 0; i < alphabet; ++i) {
    if (p[i] <= 0) continue;
    for (int j = 0; j < alphabet; ++j)
      if (P[i][j] > 0) h -= p[i] * P[i][j] * std::log(P[i][j]);
  }
  return h;
}

MarkovMeasure bernoulli_measure(const std::vector<double>& p) {
  MarkovMeasure m;
  m.alphabet = static_cast<int>(p.size());
  m.pi = p;
  m.P.assign(m.alphabet, p);
  m.validate();
  return m;
}

MarkovMeasure periodic_point_measure(int alphabet, const Word& cycle) {
  if (cycle.empty()) throw std::invalid_argument("periodic point: empty cycle");
  MarkovMeasure m;
  m.alphabet = alphabet;
  m.pi.assign(alphabet, 0.0);
  m.P.assign(alphabet, std::vector<double>(alphabet, 0.0));
  m.pi[cycle[0]] = 1.0;
  for (size_t i = 0; i < cycle.size(); ++i) {
    Symbol a = cycle[i];
    Symbol b = cycle[(i + 1) % cycle.size()];
    if (m.P[a] != std::vector<double>(alphabet, 0.0) && m.P[a][b] != 1.0)
      throw std::invalid_argument("periodic point: cycle revisits a symbol with a different successor");
    std::fill(m.P[a].begin(), m.P[a].end(), 0.0);
    m.P[a][b] = 1.0;
  }
  // unused symbols: self loops so rows are stochastic
  for (int i = 0; i < alphabet; ++i) {
    double s = 0;
    for (double x : m.P[i]) s += x;
    if (s == 0.0) m.P[i][i] = 1.0;
  }
  m.validate();
  return m;
}

MarkovMeasure parry_measure(const ShiftSystem& sys) {
  sys.validate(true);
  if (!sys.is_transitive()) throw std::invalid_argument("parry measure requires transitivity");
  int n = sys.alphabet;
  // Power iteration on A + I (primitive for irreducible A), so the iteration
  // converges even for periodic systems; eigenvalue of A recovered at the end.
  auto iterate = [&](bool left) {
    std::vector<double> v(n, 1.0 / n);
    for (int it = 0; it < 20000; ++it) {
      std::vector<double> w(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (sys.A[i][j]) {
            if (left)
              w[j] += v[i];
            else
              w[i] += v[j];
          }
      for (int i = 0; i < n; ++i) w[i] += v[i];
      double s = 0;
      for (double x : w) s += x;
      double delta = 0;
      for (int i = 0; i < n; ++i) {
        w[i] /= s;
        delta = std::max(delta, std::abs(w[i] - v[i]));
      }
      v.swap(w);
      if (delta < 1e-16) break;
    }
    return v;
  };
  std::vector<double> v = iterate(false), u = iterate(true);
  // Rayleigh quotient for A
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    double Av = 0;
    for (int j = 0; j < n; ++j)
      if (sys.A[i][j]) Av += v[j];
    num += u[i] * Av;
    den += u[i] * v[i];
  }
  double lambda = num / den;
  for (int i = 0; i < n; ++i) {
    double Av = 0;
    for (int j = 0; j < n; ++j)
      if (sys.A[i][j]) Av += v[j];
    if (std::abs(Av - lambda * v[i]) > 1e-10 * lambda)
      throw std::runtime_error("parry eigenpair residual too large");
  }
  MarkovMeasure m;
  m.alphabet = n;
  m.P.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (sys.A[i][j]) m.P[i][j] = v[j] / (lambda * v[i]);
  double s = 0;
  m.pi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) s += u[i] * v[i];
  for (int i = 0; i < n; ++i) m.pi[i] = u[i] * v[i] / s;
  m.validate();
  if (!m.invariant(1e-9)) throw std::runtime_error("parry measure not invariant");
  return m;
}

// ---------------------------------------------------------------- Measure --

Measure Measure::markov(MarkovMeasure m) {
  m.validate();
  Measure out;
  out.kind_ = Kind::markov;
  out.alphabet_ = m.alphabet;
  out.level_ = m.level;
  out.markov_ = std::move(m);
  return out;
}

Measure Measure::convex(std::vector<std::pair<double, Measure>> parts) {
  if (parts.empty()) throw std::invalid_argument("convex: no parts");
  double s = 0;
  int a = parts[0].second.alphabet();
  for (auto& [w, m] : parts) {
    if (w < -1e-15) throw std::invalid_argument("convex: negative weight");
    if (m.alphabet() != a) throw std::invalid_argument("convex: alphabet mismatch");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("convex: weights do not sum to 1");
  Measure out;
  out.kind_ = Kind::convex;
  out.alphabet_ = a;
  out.parts_ = std::move(parts);
  for (auto& [w, m] : out.parts_) out.level_ = std::max(out.level_, m.level());
  return out;
}

Measure Measure::empirical(Word w, int alphabet) {
  if (w.empty()) throw std::invalid_argument("empirical: empty word");
  Measure out;
  out.kind_ = Kind::empirical;
  out.alphabet_ = alphabet;
  out.word_ = std::move(w);
  return out;
}

Measure Measure::higher_block(int base_alphabet, std::vector<Word> blocks, MarkovMeasure chain) {
  chain.validate();
  if (static_cast<int>(blocks.size()) != chain.alphabet)
    throw std::invalid_argument("higher_block: block count mismatch");
  size_t b = blocks.empty() ? 0 : blocks[0].size();
  for (const auto& w : blocks)
    if (w.size() != b || w.empty()) throw std::invalid_argument("higher_block: ragged blocks");
  Measure out;
  out.kind_ = Kind::higher_block;
  out.alphabet_ = base_alphabet;
  out.level_ = chain.level;
  out.markov_ = std::move(chain);
  out.blocks_ = std::move(blocks);
  out.block_len_ = static_cast<int>(b);
  return out;
}

Measure Measure::phase_average(Measure block_measure, std::vector<Word> blocks,
                               int base_alphabet) {
  if (blocks.empty()) throw std::invalid_argument("phase_average: no blocks");
  size_t k = blocks[0].size();
  for (const auto& w : blocks)
    if (w.size() != k || w.empty()) throw std::invalid_argument("phase_average: ragged blocks");
  if (block_measure.alphabet() != static_cast<int>(blocks.size()))
    throw std::invalid_argument("phase_average: block measure alphabet mismatch");
  Measure out;
  out.kind_ = Kind::phase_average;
  out.alphabet_ = base_alphabet;
  out.level_ = block_measure.level();
  out.inner_ = std::make_shared<Measure>(std::move(block_measure));
  out.blocks_ = std::move(blocks);
  out.block_len_ = static_cast<int>(k);
  return out;
}

const MarkovMeasure& Measure::as_markov() const {
  if (kind_ != Kind::markov && kind_ != Kind::higher_block)
    throw std::logic_error("not a markov measure");
  return markov_;
}
const std::vector<std::pair<double, Measure>>& Measure::parts() const {
  if (kind_ != Kind::convex) throw std::logic_error("not a convex combination");
  return parts_;
}
const Word& Measure::sample_word() const {
  if (kind_ != Kind::empirical) throw std::logic_error("not an empirical measure");
  return word_;
}
const std::vector<Word>& Measure::blocks() const { return blocks_; }
const Measure& Measure::block_measure() const {
  if (kind_ != Kind::phase_average) throw std::logic_error("not a phase average");
  return *inner_;
}
int Measure::block_len() const { return block_len_; }

double Measure::mass(const Word& w) const {
  if (w.empty()) return 1.0;
  switch (kind_) {
    case Kind::markov:
      return markov_.mass(w);
    case Kind::convex: {
      double m = 0;
      for (const auto& [wt, part] : parts_) m += wt * part.mass(w);
      return m;
    }
    case Kind::empirical: {
      size_t l = w.size();
      if (l > word_.size()) return 0.0;
      size_t windows = word_.size() - l + 1;
      size_t hits = 0;
      for (size_t i = 0; i < windows; ++i)
        if (std::equal(w.begin(), w.end(), word_.begin() + i)) ++hits;
      return static_cast<double>(hits) / static_cast<double>(windows);
    }
    case Kind::higher_block: {
      int b = block_len_;
      int l = static_cast<int>(w.size());
      double total = 0;
      if (l < b) {
        for (size_t s = 0; s < blocks_.size(); ++s)
          if (std::equal(w.begin(), w.end(), blocks_[s].begin())) total += markov_.pi[s];
        return total;
      }
      // walk the block chain: block index of w[i..i+b)
      auto block_index = [&](const Word& x, int off) -> int {
        for (size_t s = 0; s < blocks_.size(); ++s)
          if (std::equal(blocks_[s].begin(), blocks_[s].end(), x.begin() + off))
            return static_cast<int>(s);
        return -1;
      };
      int cur = block_index(w, 0);
      if (cur < 0) return 0.0;
      double m = markov_.pi[cur];
      for (int i = 1; i + b <= l; ++i) {
        int nxt = block_index(w, i);
        if (nxt < 0 || m == 0.0) return 0.0;
        m *= markov_.P[cur][nxt];
        cur = nxt;
      }
      return m;
    }
    case Kind::phase_average: {
      int k = block_len_;
      int l = static_cast<int>(w.size());
      double total = 0;
      for (int phase = 0; phase < k; ++phase) {
        // block words covering base coordinates [phase, phase + l)
        int nblocks = (phase + l + k - 1) / k;
        Word bw;
        double sum = 0;
        auto rec = [&](auto&& self, int idx) -> void {
          if (idx == nblocks) {
            sum += inner_->mass(bw);
            return;
          }
          for (size_t s = 0; s < blocks_.size(); ++s) {
            // check decoded symbols of block idx against w
            bool ok = true;
            for (int c = 0; c < k && ok; ++c) {
              int base_pos = idx * k + c - phase;
              if (base_pos >= 0 && base_pos < l && blocks_[s][c] != w[base_pos]) ok = false;
            }
            if (!ok) continue;
            bw.push_back(static_cast<Symbol>(s));
            self(self, idx + 1);
            bw.pop_back();
          }
        };
        rec(rec, 0);
        total += sum;
      }
      return total / k;
    }
  }
  return 0.0;
}

double Measure::entropy() const {
  switch (kind_) {
    case Kind::markov:
    case Kind::higher_block:
      return markov_.entropy();
    case Kind::convex: {
      double h = 0;
      for (const auto& [wt, part] : parts_) h += wt * part.entropy();
      return h;
    }
    case Kind::phase_average:
      return inner_->entropy() / block_len_;
    case Kind::empirical:
      throw std::logic_error("entropy undefined for empirical measures");
  }
  return 0.0;
}

Measure Measure::pushforward() const {
  switch (kind_) {
    case Kind::markov: {
      MarkovMeasure m = markov_;
      std::vector<double> np(m.alphabet, 0.0);
      for (int i = 0; i < m.alphabet; ++i)
        for (int j = 0; j < m.alphabet; ++j) np[j] += m.pi[i] * m.P[i][j];
      m.pi = np;
      return Measure::markov(std::move(m));
    }
    case Kind::convex: {
      auto ps = parts_;
      for (auto& [w, part] : ps) part = part.pushforward();
      return Measure::convex(std::move(ps));
    }
    case Kind::empirical: {
      Word w(word_.begin() + 1, word_.end());
      if (w.empty()) throw std::invalid_argument("pushforward: sample word exhausted");
      return Measure::empirical(std::move(w), alphabet_);
    }
    case Kind::higher_block: {
      Measure out = *this;
      std::vector<double> np(markov_.alphabet, 0.0);
      for (int i = 0; i < markov_.alphabet; ++i)
        for (int j = 0; j < markov_.alphabet; ++j) np[j] += markov_.pi[i] * markov_.P[i][j];
      out.markov_.pi = np;
      return out;
    }
    case Kind::phase_average:
      return *this;  // invariant by construction
  }
  return *this;
}

// ------------------------------------------------------------- weak* metric

SeparatingFamily SeparatingFamily::canonical(int alphabet, int depth) {
  SeparatingFamily f;
  f.alphabet = alphabet;
  f.depth = depth;
  ShiftSystem full = full_shift(alphabet);
  for (int l = 1; l <= depth; ++l) {
    auto ws = full.words_of_length(l);
    f.words.insert(f.words.end(), ws.begin(), ws.end());
  }
  return f;
}

WstarDistance wstar_distance(const Measure& mu, const Measure& nu, int depth) {
  if (mu.alphabet() != nu.alphabet())
    throw std::invalid_argument("wstar_distance: alphabet mismatch");
  if (depth < 1) throw std::invalid_argument("wstar_distance: depth must be >= 1");
  auto fam = SeparatingFamily::canonical(mu.alphabet(), depth);
  WstarDistance d;
  double weight = 1.0;
  for (const auto& w : fam.words) {
    weight *= 0.5;  // 2^-k for the k-th cylinder
    d.value += weight * std::abs(mu.mass(w) - nu.mass(w));
  }
  d.tail = weight;  // sum_{k > k_max} 2^-k = 2^-k_max
  return d;
}

// --------------------------------------------------------------- transforms

Measure restrict_normalize(const Measure& m, int level) {
  if (m.kind() == Measure::Kind::markov) {
    if (m.level() <= 0 || m.level() > level)
      throw std::invalid_argument("restrict_normalize: measure gives level zero mass");
    return m;
  }
  if (m.kind() != Measure::Kind::convex)
    throw std::invalid_argument("restrict_normalize: expected a convex combination");
  std::vector<std::pair<double, Measure>> kept;
  double total = 0;
  for (const auto& [w, part] : m.parts()) {
    if (part.level() <= level && part.level() > 0) {
      kept.emplace_back(w, part);
      total += w;
    }
  }
  if (total <= 1e-15)
    throw std::invalid_argument("restrict_normalize: level has zero mass");
  for (auto& [w, part] : kept) w /= total;
  if (kept.size() == 1) return kept[0].second;
  return Measure::convex(std::move(kept));
}

Measure full_support_measure(const std::vector<ShiftSystem>& levels) {
  if (levels.empty()) throw std::invalid_argument("full_support_measure: no levels");
  int N = static_cast<int>(levels.size());
  std::vector<std::pair<double, Measure>> parts;
  for (int l = 1; l <= N; ++l) {
    // dyadic weights 2^-l; the top level absorbs the tail so weights sum to 1
    double w = (l < N) ? std::ldexp(1.0, -l) : std::ldexp(1.0, -(N - 1));
    MarkovMeasure p = parry_measure(levels[l - 1]);
    p.level = l;
    Measure part = Measure::markov(std::move(p));
    part.set_level(l);
    parts.emplace_back(w, std::move(part));
  }
  if (parts.size() == 1) return parts[0].second;
  return Measure::convex(std::move(parts));
}

namespace {

Measure h_star_markov(const MarkovMeasure& base, const PowerSystem& ps) {
  int B = static_cast<int>(ps.blocks.size());
  MarkovMeasure chain;
  chain.alphabet = B;
  chain.level = base.level;
  chain.pi.assign(B, 0.0);
  chain.P.assign(B, std::vector<double>(B, 0.0));
  double total = 0;
  std::vector<double> bm(B);
  for (int i = 0; i < B; ++i) {
    bm[i] = base.mass(ps.blocks[i]);
    total += bm[i];
  }
  if (total <= 1e-15) throw std::invalid_argument("h_star: base measure misses class D_0");
  for (int i = 0; i < B; ++i) chain.pi[i] = bm[i] / total;
  for (int i = 0; i < B; ++i) {
    if (bm[i] <= 0) {
      chain.P[i][i] = 1.0;  // unreachable row
      continue;
    }
    double rs = 0;
    for (int j = 0; j < B; ++j) {
      Word joined = ps.blocks[i];
      joined.insert(joined.end(), ps.blocks[j].begin(), ps.blocks[j].end());
      chain.P[i][j] = base.mass(joined) / bm[i];
      rs += chain.P[i][j];
    }
    if (std::abs(rs - 1.0) > 1e-9)
      throw std::runtime_error("h_star: induced block chain not stochastic");
    for (int j = 0; j < B; ++j) chain.P[i][j] /= rs;
  }
  Measure out = Measure::markov(std::move(chain));
  out.set_level(base.level);
  return out;
}

}  // namespace

Measure h_star(const Measure& base, const PowerSystem& ps) {
  if (base.kind() == Measure::Kind::markov) return h_star_markov(base.as_markov(), ps);
  if (base.kind() == Measure::Kind::convex) {
    std::vector<std::pair<double, Measure>> parts;
    for (const auto& [w, part] : base.parts()) parts.emplace_back(w, h_star(part, ps));
    return Measure::convex(std::move(parts));
  }
  throw std::invalid_argument("h_star: expected (convex of) markov measures");
}

Measure decomposition_average(const Measure& block_measure, const PowerSystem& ps) {
  int base_alphabet = 0;
  for (const auto& b : ps.blocks)
    for (Symbol s : b) base_alphabet = std::max(base_alphabet, static_cast<int>(s) + 1);
  // the base alphabet is that of the decomposed system
  base_alphabet = std::max(base_alphabet,
                           static_cast<int>(ps.decomposition.class_of.size()));
  return Measure::phase_average(block_measure, ps.blocks, base_alphabet);
}

}  // namespace shiftlab
