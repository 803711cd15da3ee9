#include "shiftlab/shift_system.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace shiftlab {
namespace {

const char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";

int digit_value(char c) {
  for (int i = 0; i < 36; ++i)
    if (kDigits[i] == c) return i;
  return -1;
}

std::vector<std::vector<std::uint8_t>> bool_multiply(
    const std::vector<std::vector<std::uint8_t>>& X,
    const std::vector<std::vector<std::uint8_t>>& Y) {
  int n = static_cast<int>(X.size());
  std::vector<std::vector<std::uint8_t>> Z(n, std::vector<std::uint8_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (X[i][k])
        for (int j = 0; j < n; ++j)
          if (Y[k][j]) Z[i][j] = 1;
  return Z;
}

bool all_positive(const std::vector<std::vector<std::uint8_t>>& X) {
  for (const auto& row : X)
    for (auto v : row)
      if (!v) return false;
  return true;
}

}  // namespace

std::string word_to_string(const Word& w) {
  std::string s;
  s.reserve(w.size());
  for (Symbol c : w) {
    if (c >= 36) throw std::invalid_argument("symbol out of printable range");
    s.push_back(kDigits[c]);
  }
  return s;
}

Word word_from_string(const std::string& s, int alphabet) {
  Word w;
  w.reserve(s.size());
  for (char c : s) {
    int v = digit_value(c);
    if (v < 0 || v >= alphabet) throw std::invalid_argument("bad symbol in word string");
    w.push_back(static_cast<Symbol>(v));
  }
  return w;
}

int coord_window(const mpq_class& eps) {
  if (eps <= 0) throw std::invalid_argument("coord_window: eps must be positive");
  int m = 0;
  mpq_class pow = 1;  // 2^-m
  while (pow > eps) {
    pow /= 2;
    ++m;
    if (m > 4096) throw std::invalid_argument("coord_window: eps unreasonably small");
  }
  return m;
}

void ShiftSystem::validate(bool allow_single_symbol) const {
  if (alphabet < 1) throw std::invalid_argument(name + ": empty alphabet");
  if (alphabet == 1 && !allow_single_symbol)
    throw std::invalid_argument(name + ": alphabet of size 1 is rejected");
  if (alphabet > 36) throw std::invalid_argument(name + ": alphabet too large (max 36)");
  if (static_cast<int>(A.size()) != alphabet)
    throw std::invalid_argument(name + ": transition matrix has wrong row count");
  for (int i = 0; i < alphabet; ++i) {
    if (static_cast<int>(A[i].size()) != alphabet)
      throw std::invalid_argument(name + ": transition matrix row has wrong size");
    for (int j = 0; j < alphabet; ++j)
      if (A[i][j] != 0 && A[i][j] != 1)
        throw std::invalid_argument(name + ": transition matrix must be 0/1");
  }
  for (int i = 0; i < alphabet; ++i) {
    bool out = false, in = false;
    for (int j = 0; j < alphabet; ++j) {
      out = out || A[i][j];
      in = in || A[j][i];
    }
    if (!out || !in)
      throw std::invalid_argument(name + ": stranded symbol " + std::string(1, kDigits[i]));
  }
}

bool ShiftSystem::is_admissible(const Word& w) const {
  for (Symbol c : w)
    if (c >= alphabet) return false;
  for (size_t i = 0; i + 1 < w.size(); ++i)
    if (!edge(w[i], w[i + 1])) return false;
  return true;
}

std::vector<Word> ShiftSystem::words_of_length(int n) const {
  if (n < 0) throw std::invalid_argument("words_of_length: negative length");
  std::vector<Word> out;
  if (n == 0) {
    out.push_back({});
    return out;
  }
  Word w;
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == n) {
      out.push_back(w);
      return;
    }
    for (int s = 0; s < alphabet; ++s) {
      if (!w.empty() && !edge(w.back(), static_cast<Symbol>(s))) continue;
      w.push_back(static_cast<Symbol>(s));
      self(self, depth + 1);
      w.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

mpz_class ShiftSystem::count_words(int n) const {
  if (n < 1) throw std::invalid_argument("count_words: n must be >= 1");
  std::vector<mpz_class> v(alphabet, 1);
  for (int step = 1; step < n; ++step) {
    std::vector<mpz_class> nv(alphabet, 0);
    for (int i = 0; i < alphabet; ++i) {
      if (v[i] == 0) continue;
      for (int j = 0; j < alphabet; ++j)
        if (A[j][i]) nv[j] += v[i];
    }
    v.swap(nv);
  }
  mpz_class total = 0;
  for (const auto& x : v) total += x;
  return total;
}

bool ShiftSystem::is_transitive() const {
  auto bfs = [&](bool forward) {
    std::vector<char> seen(alphabet, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    for (size_t q = 0; q < queue.size(); ++q) {
      int u = queue[q];
      for (int v = 0; v < alphabet; ++v) {
        bool e = forward ? A[u][v] : A[v][u];
        if (e && !seen[v]) {
          seen[v] = 1;
          queue.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return bfs(true) && bfs(false);
}

std::optional<int> ShiftSystem::primitivity_index() const {
  // Wielandt: a primitive matrix of order n satisfies A^((n-1)^2+1) > 0.
  int bound = (alphabet - 1) * (alphabet - 1) + 1;
  auto P = A;
  for (int k = 1; k <= bound; ++k) {
    if (all_positive(P)) return k;
    P = bool_multiply(P, A);
  }
  return std::nullopt;
}

int ShiftSystem::specification_gap() const {
  auto k = primitivity_index();
  if (!k) throw std::invalid_argument(name + ": specification gap undefined (not mixing)");
  return *k;
}

PeriodicDecomposition ShiftSystem::periodic_decomposition() const {
  if (!is_transitive())
    throw std::invalid_argument(name + ": periodic decomposition requires transitivity");
  std::vector<int> depth(alphabet, -1);
  std::vector<int> queue{0};
  depth[0] = 0;
  for (size_t q = 0; q < queue.size(); ++q) {
    int u = queue[q];
    for (int v = 0; v < alphabet; ++v)
      if (A[u][v] && depth[v] < 0) {
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
  }
  long long g = 0;
  for (int u = 0; u < alphabet; ++u)
    for (int v = 0; v < alphabet; ++v)
      if (A[u][v]) g = std::gcd(g, static_cast<long long>(depth[u] + 1 - depth[v]));
  if (g == 0) g = 1;
  PeriodicDecomposition d;
  d.period = static_cast<int>(g < 0 ? -g : g);
  d.classes.assign(d.period, {});
  d.class_of.assign(alphabet, 0);
  for (int u = 0; u < alphabet; ++u) {
    int c = ((depth[u] % d.period) + d.period) % d.period;
    d.class_of[u] = c;
    d.classes[c].push_back(u);
  }
  return d;
}

bool ShiftSystem::reachable_in(Symbol a, Symbol b, int edges) const {
  if (edges < 0) return false;
  if (edges == 0) return a == b;
  std::vector<char> cur(alphabet, 0);
  cur[a] = 1;
  for (int step = 0; step < edges; ++step) {
    std::vector<char> nxt(alphabet, 0);
    for (int i = 0; i < alphabet; ++i)
      if (cur[i])
        for (int j = 0; j < alphabet; ++j)
          if (A[i][j]) nxt[j] = 1;
    cur.swap(nxt);
  }
  return cur[b] != 0;
}

std::optional<Word> ShiftSystem::connector(Symbol a, Symbol b, int len) const {
  if (len < 0) return std::nullopt;
  if (len == 0) return edge(a, b) ? std::optional<Word>(Word{}) : std::nullopt;
  if (!reachable_in(a, b, len + 1)) return std::nullopt;
  Word c;
  Symbol cur = a;
  for (int i = 0; i < len; ++i) {
    int remaining = len - i;  // edges left after choosing this symbol: remaining
    bool found = false;
    for (int s = 0; s < alphabet; ++s) {
      if (edge(cur, static_cast<Symbol>(s)) &&
          reachable_in(static_cast<Symbol>(s), b, remaining)) {
        c.push_back(static_cast<Symbol>(s));
        cur = static_cast<Symbol>(s);
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;  // unreachable given earlier check
  }
  return c;
}

Word ShiftSystem::lex_min_extension(const Word& prefix, int total_len) const {
  if (!is_admissible(prefix)) throw std::invalid_argument("lex_min_extension: bad prefix");
  Word w = prefix;
  while (static_cast<int>(w.size()) < total_len) {
    bool found = false;
    for (int s = 0; s < alphabet; ++s) {
      if (w.empty() || edge(w.back(), static_cast<Symbol>(s))) {
        w.push_back(static_cast<Symbol>(s));
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("lex_min_extension: dead end");
  }
  return w;
}

Word ShiftSystem::lex_min_word(int len) const { return lex_min_extension({}, len); }

ShiftSystem full_shift(int alphabet) {
  ShiftSystem s;
  s.name = "full-" + std::to_string(alphabet) + "-shift";
  s.alphabet = alphabet;
  s.A.assign(alphabet, std::vector<std::uint8_t>(alphabet, 1));
  s.validate(alphabet == 1);
  return s;
}

ShiftSystem golden_mean() {
  ShiftSystem s;
  s.name = "golden-mean";
  s.alphabet = 2;
  s.A = {{1, 1}, {1, 0}};
  s.validate();
  return s;
}

Word glue_segments(const ShiftSystem& sys, const std::vector<Word>& segments,
                   const std::vector<int>& gaps) {
  if (segments.empty()) throw std::invalid_argument("glue_segments: no segments");
  if (gaps.size() + 1 != segments.size())
    throw std::invalid_argument("glue_segments: need one gap per adjacent pair");
  for (const auto& s : segments) {
    if (s.empty()) throw std::invalid_argument("glue_segments: empty segment");
    if (!sys.is_admissible(s)) throw std::invalid_argument("glue_segments: inadmissible segment");
  }
  Word out = segments[0];
  for (size_t i = 1; i < segments.size(); ++i) {
    int g = gaps[i - 1];
    if (g < 1) throw std::invalid_argument("glue_segments: gap must be >= 1");
    auto c = sys.connector(out.back(), segments[i].front(), g - 1);
    if (!c)
      throw std::invalid_argument("glue_segments: no admissible connector for gap " +
                                  std::to_string(g));
    out.insert(out.end(), c->begin(), c->end());
    out.insert(out.end(), segments[i].begin(), segments[i].end());
  }
  return out;
}

Word glue_segments(const ShiftSystem& sys, const std::vector<Word>& segments, int gap) {
  return glue_segments(sys, segments,
                       std::vector<int>(segments.empty() ? 0 : segments.size() - 1, gap));
}

Word shadow_pseudo_orbit(const ShiftSystem& sys, const std::vector<Word>& pseudo,
                         const mpq_class& delta) {
  if (delta > mpq_class(1, 4)) throw std::invalid_argument("shadow: delta must be <= 1/4");
  int m = coord_window(delta);  // consecutive points agree on coords [0, m)
  if (pseudo.empty()) throw std::invalid_argument("shadow: empty pseudo-orbit");
  for (const auto& p : pseudo) {
    if (static_cast<int>(p.size()) < m + 1)
      throw std::invalid_argument("shadow: pseudo-orbit prefixes too short");
    if (!sys.is_admissible(p)) throw std::invalid_argument("shadow: inadmissible point");
  }
  for (size_t i = 0; i + 1 < pseudo.size(); ++i)
    for (int c = 0; c < m; ++c)
      if (pseudo[i][c + 1] != pseudo[i + 1][c])
        throw std::invalid_argument("shadow: not a delta-pseudo-orbit");
  Word y(pseudo.size());
  for (size_t i = 0; i < pseudo.size(); ++i) y[i] = pseudo[i][0];
  if (!sys.is_admissible(y)) throw std::logic_error("shadow: trace inadmissible");
  return y;
}

PowerSystem power_restrict(const ShiftSystem& sys) {
  PowerSystem ps;
  ps.decomposition = sys.periodic_decomposition();
  ps.k = ps.decomposition.period;
  for (const auto& w : sys.words_of_length(ps.k))
    if (ps.decomposition.class_of[w[0]] == 0) ps.blocks.push_back(w);
  int B = static_cast<int>(ps.blocks.size());
  if (B == 0) throw std::logic_error("power_restrict: no blocks");
  ps.block_system.name = sys.name + "^" + std::to_string(ps.k) + "|D0";
  ps.block_system.alphabet = B;
  ps.block_system.A.assign(B, std::vector<std::uint8_t>(B, 0));
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j)
      ps.block_system.A[i][j] = sys.edge(ps.blocks[i].back(), ps.blocks[j].front()) ? 1 : 0;
  ps.block_system.validate(true);
  return ps;
}

}  // namespace shiftlab
