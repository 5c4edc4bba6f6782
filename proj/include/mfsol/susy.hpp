#pragma once

#include <bit>
#include <optional>

#include "algebra.hpp"
#include "grassmann.hpp"

namespace mfsol {

// Generators and structure relations ----------------------------------------

/// l1..l5 (index 0..4); l4, l5 are the odd generators.
inline std::array<CMat, 5> osp_generators() {
  return {CMat(3, {1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0}),
          CMat(3, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}),
          CMat(3, {0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0}),
          CMat(3, {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0}),
          CMat(3, {0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0})};
}

inline bool osp_odd(int j) { return j >= 3; }

/// Coordinates of a matrix in the span of l1..l5 plus the part outside it.
struct OspCoords {
  std::array<cd, 5> c{};
  double outside = 0;
};

inline OspCoords osp_decompose(const CMat& m) {
  const auto l = osp_generators();
  OspCoords r;
  r.c = {m(0, 0), m(0, 1), m(1, 0), m(0, 2), m(1, 2)};
  CMat rest = m;
  for (int j = 0; j < 5; ++j) rest -= r.c[j] * l[j];
  r.outside = rest.max_abs();
  return r;
}

struct StructureRelation {
  int a, b;                    // generator indices 0..4
  bool anti;                   // {a, b} instead of [a, b]
  std::array<cd, 5> printed;   // right-hand side as listed
  std::array<cd, 5> computed;  // from matrix arithmetic
  double outside = 0;
  bool pass = false;
  std::string name() const {
    std::string s = anti ? "{" : "[";
    s += "l" + std::to_string(a + 1) + ",l" + std::to_string(b + 1);
    return s + (anti ? "}" : "]");
  }
};

inline std::string osp_str(const std::array<cd, 5>& c) {
  std::ostringstream os;
  bool first = true;
  for (int j = 0; j < 5; ++j) {
    if (c[j] == cd{}) continue;
    double v = c[j].real();
    if (!first) os << (v < 0 ? " - " : " + ");
    else if (v < 0) os << "-";
    first = false;
    if (std::abs(std::abs(v) - 1.0) > 1e-15 || c[j].imag() != 0) {
      if (c[j].imag() != 0) os << "(" << c[j] << ")";
      else os << std::abs(v);
    }
    os << "l" << j + 1;
  }
  return first ? "0" : os.str();
}

/// Evaluates every bracket of the listed OSP(2|1) relations by matrix arithmetic.
inline std::vector<StructureRelation> check_structure_relations() {
  const auto l = osp_generators();
  auto e = [](int j, double v) {
    std::array<cd, 5> c{};
    if (j >= 0) c[j] = v;
    return c;
  };
  std::vector<StructureRelation> rel = {
      {0, 1, false, e(1, 2), {}},  {0, 2, false, e(2, 2), {}},  {1, 2, false, e(0, 1), {}},
      {0, 3, false, e(3, 1), {}},  {0, 4, false, e(4, -1), {}}, {1, 3, false, e(-1, 0), {}},
      {1, 4, false, e(3, 1), {}},  {2, 3, false, e(4, 1), {}},  {2, 4, false, e(-1, 0), {}},
      {3, 3, true, e(1, -2), {}},  {3, 4, true, e(0, 1), {}},   {4, 4, true, e(2, 2), {}}};
  for (auto& r : rel) {
    CMat m = r.anti ? anticommutator(l[r.a], l[r.b]) : commutator(l[r.a], l[r.b]);
    auto d = osp_decompose(m);
    r.computed = d.c;
    r.outside = d.outside;
    r.pass = d.outside == 0;
    for (int j = 0; j < 5; ++j) r.pass = r.pass && std::abs(r.computed[j] - r.printed[j]) == 0;
  }
  return rel;
}

// Polynomials in even and odd symbols ----------------------------------------

/// Field symbols. Even ones commute; odd ones anticommute.
enum class Sym {
  lambda, q, q_x, q_xx, q_xxx, p, p_x, p_xx, p_xxx, q_t, p_t,              // even
  b, b_x, b_xx, b_xxx, e, e_x, e_xx, e_xxx, b_t, e_t,                      // odd
  theta  // odd constant used to grade brackets with the odd generators
};
inline constexpr int n_even_syms = 11;
inline constexpr int n_odd_syms = 11;

inline bool sym_odd(Sym s) { return int(s) >= n_even_syms; }

inline const char* sym_name(Sym s) {
  static const char* names[] = {"lambda", "q", "q_x", "q_xx", "q_xxx", "p", "p_x", "p_xx", "p_xxx",
                                "q_t", "p_t", "beta", "beta_x", "beta_xx", "beta_xxx", "eps",
                                "eps_x", "eps_xx", "eps_xxx", "beta_t", "eps_t", "theta"};
  return names[int(s)];
}

/// ∂x or ∂t of a symbol; empty when it is outside the tracked jet.
inline std::optional<Sym> sym_derivative(Sym s, bool time) {
  if (s == Sym::lambda) return std::nullopt;
  if (time) {
    switch (s) {
      case Sym::q: return Sym::q_t;
      case Sym::p: return Sym::p_t;
      case Sym::b: return Sym::b_t;
      case Sym::e: return Sym::e_t;
      default: return std::nullopt;
    }
  }
  switch (s) {
    case Sym::q: case Sym::q_x: case Sym::q_xx:
    case Sym::p: case Sym::p_x: case Sym::p_xx:
    case Sym::b: case Sym::b_x: case Sym::b_xx:
    case Sym::e: case Sym::e_x: case Sym::e_xx:
      return Sym(int(s) + 1);
    default: return std::nullopt;
  }
}

/// Polynomial over C in the even symbols with Grassmann-odd symbols (normal
/// ordered by index). Exact arithmetic up to floating coefficients, which stay
/// small integers times powers of i here.
class SuperPoly {
 public:
  using Mask = std::uint32_t;
  using Key = std::pair<std::array<int, n_even_syms>, Mask>;

  SuperPoly() = default;
  SuperPoly(cd c) {  // NOLINT: scalars promote
    if (c != cd{}) t_[Key{{}, 0}] = c;
  }
  static SuperPoly sym(Sym s) {
    Key k{{}, 0};
    if (sym_odd(s)) k.second = Mask(1) << (int(s) - n_even_syms);
    else k.first[int(s)] = 1;
    SuperPoly r;
    r.t_[k] = 1.0;
    return r;
  }

  const std::map<Key, cd>& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  /// 0 even, 1 odd, -1 mixed.
  int parity() const {
    int p = -2;
    for (const auto& [k, v] : t_) {
      int q = std::popcount(k.second) % 2;
      if (p == -2) p = q;
      else if (p != q) return -1;
    }
    return p == -2 ? 0 : p;
  }
  cd coeff(const Key& k) const {
    auto it = t_.find(k);
    return it == t_.end() ? cd{} : it->second;
  }

  SuperPoly& operator+=(const SuperPoly& o) {
    for (const auto& [k, v] : o.t_) add(k, v);
    return *this;
  }
  SuperPoly& operator-=(const SuperPoly& o) {
    for (const auto& [k, v] : o.t_) add(k, -v);
    return *this;
  }
  friend SuperPoly operator+(SuperPoly a, const SuperPoly& b) { return a += b; }
  friend SuperPoly operator-(SuperPoly a, const SuperPoly& b) { return a -= b; }
  friend SuperPoly operator-(const SuperPoly& a) { return SuperPoly() - a; }
  friend SuperPoly operator*(const SuperPoly& a, const SuperPoly& b) {
    SuperPoly r;
    for (const auto& [ka, va] : a.t_)
      for (const auto& [kb, vb] : b.t_) {
        if (ka.second & kb.second) continue;
        Key k = ka;
        for (int s = 0; s < n_even_syms; ++s) k.first[s] += kb.first[s];
        k.second |= kb.second;
        r.add(k, double(Grassmann::reorder_sign(ka.second, kb.second)) * va * vb);
      }
    return r;
  }
  friend SuperPoly operator*(double c, const SuperPoly& a) { return SuperPoly(cd(c)) * a; }
  friend SuperPoly operator*(cd c, const SuperPoly& a) { return SuperPoly(c) * a; }
  friend bool operator==(const SuperPoly& a, const SuperPoly& b) { return (a - b).is_zero(); }

  /// Even derivation in x (time = false) or t.
  SuperPoly derivative(bool time) const {
    SuperPoly r;
    for (const auto& [k, v] : t_) {
      for (int s = 0; s < n_even_syms; ++s) {
        if (k.first[s] == 0 || Sym(s) == Sym::lambda) continue;
        auto d = sym_derivative(Sym(s), time);
        require(d.has_value(), ErrorKind::invalid_argument,
                std::string("derivative of ") + sym_name(Sym(s)) + " is not tracked");
        Key nk = k;
        nk.first[s] -= 1;
        nk.first[int(*d)] += 1;
        r.add(nk, double(k.first[s]) * v);
      }
      for (int i = 0; i < n_odd_syms; ++i) {
        const Mask bit = Mask(1) << i;
        if (!(k.second & bit) || Sym(i + n_even_syms) == Sym::theta) continue;
        auto d = sym_derivative(Sym(i + n_even_syms), time);
        require(d.has_value(), ErrorKind::invalid_argument,
                std::string("derivative of ") + sym_name(Sym(i + n_even_syms)) + " is not tracked");
        const int j = int(*d) - n_even_syms;
        const Mask rest = k.second & ~bit;
        if (rest & (Mask(1) << j)) continue;
        // move θ_i to the front, swap it for θ_j, move θ_j back into place
        int sgn = std::popcount(k.second & (bit - 1)) + std::popcount(rest & ((Mask(1) << j) - 1));
        Key nk = k;
        nk.second = rest | (Mask(1) << j);
        r.add(nk, (sgn % 2 ? -1.0 : 1.0) * v);
      }
    }
    return r;
  }
  SuperPoly dx() const { return derivative(false); }
  SuperPoly dt() const { return derivative(true); }

  /// Part proportional to lambda^k, with lambda removed.
  SuperPoly lambda_coeff(int k) const {
    SuperPoly r;
    for (const auto& [key, v] : t_)
      if (key.first[int(Sym::lambda)] == k) {
        Key nk = key;
        nk.first[int(Sym::lambda)] = 0;
        r.add(nk, v);
      }
    return r;
  }
  int max_lambda_power() const {
    int m = 0;
    for (const auto& [k, v] : t_) m = std::max(m, k.first[int(Sym::lambda)]);
    return m;
  }
  /// Exchanges q and p together with their derivatives.
  SuperPoly swap_qp() const {
    SuperPoly r;
    for (const auto& [key, v] : t_) {
      Key k = key;
      for (int s = 0; s < 4; ++s) std::swap(k.first[int(Sym::q) + s], k.first[int(Sym::p) + s]);
      std::swap(k.first[int(Sym::q_t)], k.first[int(Sym::p_t)]);
      r.add(k, v);
    }
    return r;
  }
  /// Drops every monomial containing an odd symbol.
  SuperPoly bosonic() const {
    SuperPoly r;
    for (const auto& [k, v] : t_)
      if (k.second == 0) r.add(k, v);
    return r;
  }

  std::string str() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : t_) {
      os << (first ? "" : " + ");
      first = false;
      if (v.imag() == 0) os << v.real();
      else if (v.real() == 0) os << v.imag() << "i";
      else os << "(" << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i)";
      for (int s = 0; s < n_even_syms; ++s)
        for (int e = 0; e < k.first[s]; ++e) os << "*" << sym_name(Sym(s));
      for (int i = 0; i < n_odd_syms; ++i)
        if (k.second & (Mask(1) << i)) os << "*" << sym_name(Sym(i + n_even_syms));
    }
    return os.str();
  }

 private:
  void add(const Key& k, cd v) {
    if (v == cd{}) return;
    auto it = t_.find(k);
    if (it == t_.end()) {
      t_.emplace(k, v);
    } else {
      it->second += v;
      if (std::abs(it->second) < 1e-13) t_.erase(it);
    }
  }
  std::map<Key, cd> t_;
};

inline SuperPoly S(Sym s) { return SuperPoly::sym(s); }

// Supermatrices ---------------------------------------------------------------

/// 3×3 matrix over a ring R (SuperPoly or Grassmann). Entries (0,2), (1,2),
/// (2,0), (2,1) form the odd blocks.
template <class R>
struct SuperMatrix {
  std::array<R, 9> a;

  SuperMatrix() = default;
  explicit SuperMatrix(const R& zero) { a.fill(zero); }
  R& operator()(int i, int j) { return a[i * 3 + j]; }
  const R& operator()(int i, int j) const { return a[i * 3 + j]; }

  static bool odd_slot(int i, int j) { return (i == 2) != (j == 2); }

  SuperMatrix& operator+=(const SuperMatrix& o) {
    for (int k = 0; k < 9; ++k) a[k] += o.a[k];
    return *this;
  }
  SuperMatrix& operator-=(const SuperMatrix& o) {
    for (int k = 0; k < 9; ++k) a[k] -= o.a[k];
    return *this;
  }
  friend SuperMatrix operator+(SuperMatrix x, const SuperMatrix& y) { return x += y; }
  friend SuperMatrix operator-(SuperMatrix x, const SuperMatrix& y) { return x -= y; }
  friend SuperMatrix operator*(const SuperMatrix& x, const SuperMatrix& y) {
    SuperMatrix r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        R s = x(i, 0) * y(0, j);
        s += x(i, 1) * y(1, j);
        s += x(i, 2) * y(2, j);
        r(i, j) = s;
      }
    return r;
  }
  friend SuperMatrix operator*(const R& c, const SuperMatrix& x) {
    SuperMatrix r;
    for (int k = 0; k < 9; ++k) r.a[k] = c * x.a[k];
    return r;
  }

  /// Entrywise parity respects the grading (homogeneous even matrix).
  bool graded_even() const {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const R& e = (*this)(i, j);
        if (!e.is_zero() && e.parity() != (odd_slot(i, j) ? 1 : 0)) return false;
      }
    return true;
  }
};

using SymMatrix = SuperMatrix<SuperPoly>;

template <class R>
SuperMatrix<R> commutator(const SuperMatrix<R>& x, const SuperMatrix<R>& y) {
  return x * y - y * x;
}

/// Σ c_j l_j with ring-valued coefficients.
template <class R>
SuperMatrix<R> osp_combination(const std::array<R, 5>& c) {
  const R zero = c[0] - c[0];
  SuperMatrix<R> m(zero);
  m(0, 0) = c[0];
  m(1, 1) = zero - c[0];
  m(0, 1) = c[1];
  m(1, 0) = c[2];
  m(0, 2) = c[3];
  m(2, 1) = zero - c[3];
  m(1, 2) = c[4];
  m(2, 0) = c[4];
  return m;
}

/// Coordinates along l1..l5 and whatever lies outside the span.
template <class R>
struct SymOsp {
  std::array<R, 5> c;
  SuperMatrix<R> outside;
};

template <class R>
SymOsp<R> osp_coords(const SuperMatrix<R>& m) {
  SymOsp<R> r;
  r.c = {m(0, 0), m(0, 1), m(1, 0), m(0, 2), m(1, 2)};
  r.outside = m - osp_combination(r.c);
  return r;
}

inline SymMatrix numeric_matrix(const CMat& m) {
  SymMatrix r(SuperPoly{});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = SuperPoly(m(i, j));
  return r;
}

inline bool is_zero(const SymMatrix& m) {
  for (const auto& e : m.a)
    if (!e.is_zero()) return false;
  return true;
}

// Lax pair and zero curvature -----------------------------------------------

/// U = iλl1 + q l2 + p l3 + β l4 + ε l5
inline SymMatrix assemble_U() {
  return osp_combination<SuperPoly>({cd(0, 1) * S(Sym::lambda), S(Sym::q), S(Sym::p), S(Sym::b), S(Sym::e)});
}

/// V = 2λU + i(pq + 2βε)l1 − iq_x l2 + ip_x l3 − 2iβ_x l4 + 2iε_x l5
inline SymMatrix assemble_V() {
  const cd i(0, 1);
  SymMatrix V = (2.0 * S(Sym::lambda)) * assemble_U();
  V += osp_combination<SuperPoly>({i * (S(Sym::p) * S(Sym::q) + 2.0 * S(Sym::b) * S(Sym::e)),
                                   -i * S(Sym::q_x), i * S(Sym::p_x), -2.0 * i * S(Sym::b_x),
                                   2.0 * i * S(Sym::e_x)});
  return V;
}

inline SymMatrix sym_dx(const SymMatrix& m) {
  SymMatrix r;
  for (int k = 0; k < 9; ++k) r.a[k] = m.a[k].dx();
  return r;
}
inline SymMatrix sym_dt(const SymMatrix& m) {
  SymMatrix r;
  for (int k = 0; k < 9; ++k) r.a[k] = m.a[k].dt();
  return r;
}

/// One equation of the listed OSP(2|1) NLSE, with r read as p.
struct SusyEquation {
  std::string name;
  int generator;        // coordinate of the curvature it should match
  Sym time_symbol;      // q_t, p_t, eps_t or beta_t
  SuperPoly printed;
  SuperPoly derived;    // curvature coordinate rescaled to the printed time-derivative coefficient
  SuperPoly difference; // derived − printed
  bool match() const { return difference.is_zero(); }
};

inline std::vector<SuperPoly> printed_osp_nlse() {
  const cd i(0, 1);
  auto q = S(Sym::q), p = S(Sym::p), b = S(Sym::b), e = S(Sym::e);
  return {
      i * S(Sym::q_t) + S(Sym::q_xx) - 2.0 * p * q * q - 4.0 * q * b * e - 4.0 * e * S(Sym::e_x),
      i * S(Sym::p_t) - S(Sym::p_xx) + 2.0 * q * p * p + 4.0 * p * b * e - 4.0 * b * S(Sym::b_x),
      i * S(Sym::e_t) + 2.0 * S(Sym::e_xx) + 2.0 * q * S(Sym::b_x) + S(Sym::q_x) * b - e * p * q,
      i * S(Sym::b_t) - 2.0 * S(Sym::b_xx) - 2.0 * p * S(Sym::e_x) - S(Sym::p_x) * e + b * p * q};
}

struct ZeroCurvatureReport {
  SymMatrix curvature;                 // U_t − V_x + [U, V]
  std::array<SymOsp<SuperPoly>, 3> by_power;  // λ⁰, λ¹, λ² coordinates
  int max_power = 0;
  bool lambda2_zero = false, lambda1_zero = false, outside_zero = false, l1_zero = false;
  std::vector<SusyEquation> equations;          // r read as p
  std::vector<SusyEquation> equations_swapped;  // q and p exchanged, q equation on l3
  static bool all(const std::vector<SusyEquation>& v) {
    for (const auto& e : v)
      if (!e.match()) return false;
    return true;
  }
  bool all_match() const { return all(equations); }
  bool all_match_swapped() const { return all(equations_swapped); }
};

/// Expands U_t − V_x + [U, V] and compares the λ⁰ coordinates with the
/// printed evolution system.
inline ZeroCurvatureReport susy_zero_curvature(const SymMatrix& U = assemble_U(),
                                               const SymMatrix& V = assemble_V()) {
  ZeroCurvatureReport r;
  r.curvature = sym_dt(U) - sym_dx(V) + commutator(U, V);
  SymMatrix byk[3];
  for (int k = 0; k < 3; ++k) {
    for (int m = 0; m < 9; ++m) byk[k].a[m] = r.curvature.a[m].lambda_coeff(k);
    r.by_power[k] = osp_coords(byk[k]);
  }
  for (const auto& e : r.curvature.a) r.max_power = std::max(r.max_power, e.max_lambda_power());
  r.lambda2_zero = is_zero(byk[2]) && r.max_power <= 2;
  r.lambda1_zero = is_zero(byk[1]);
  r.outside_zero = is_zero(r.by_power[0].outside);
  r.l1_zero = r.by_power[0].c[0].is_zero();

  const auto printed = printed_osp_nlse();
  struct Row { const char* name; int gen; Sym ts; };
  auto compare = [&](const Row (&map)[4], bool swap) {
    std::vector<SusyEquation> out;
    for (int k = 0; k < 4; ++k) {
      SusyEquation e;
      e.name = map[k].name;
      e.generator = map[k].gen;
      e.time_symbol = map[k].ts;
      e.printed = printed[k];
      SuperPoly z = r.by_power[0].c[map[k].gen];
      if (swap) z = z.swap_qp();
      SuperPoly::Key tk{{}, 0};
      if (sym_odd(map[k].ts)) tk.second = SuperPoly::Mask(1) << (int(map[k].ts) - n_even_syms);
      else tk.first[int(map[k].ts)] = 1;
      const cd cz = z.coeff(tk), cp = e.printed.coeff(tk);
      e.derived = cz == cd{} ? z : SuperPoly(cp / cz) * z;
      e.difference = e.derived - e.printed;
      out.push_back(e);
    }
    return out;
  };
  const Row literal[4] = {
      {"q", 1, Sym::q_t}, {"r", 2, Sym::p_t}, {"eps", 4, Sym::e_t}, {"beta", 3, Sym::b_t}};
  const Row swapped[4] = {
      {"q", 2, Sym::q_t}, {"r", 1, Sym::p_t}, {"eps", 4, Sym::e_t}, {"beta", 3, Sym::b_t}};
  r.equations = compare(literal, false);
  r.equations_swapped = compare(swapped, true);
  return r;
}

/// [l_j, U] minus the listed right-hand side, for j = 1..5. The odd
/// generators enter as θ l_j with an odd constant θ, and the right-hand side
/// is multiplied by θ from the left, which is the graded bracket.
inline std::array<SymMatrix, 5> bracket_form_residuals(const SymMatrix& U = assemble_U()) {
  const auto l = osp_generators();
  const cd i(0, 1);
  auto lam = S(Sym::lambda), q = S(Sym::q), p = S(Sym::p), b = S(Sym::b), e = S(Sym::e);
  const SuperPoly z;
  std::array<std::array<SuperPoly, 5>, 5> rhs = {{
      {z, 2.0 * q, -2.0 * p, b, -e},
      {p, -2.0 * i * lam, z, e, z},
      {-q, z, 2.0 * i * lam, z, b},
      {e, -2.0 * b, z, -i * lam, -p},
      {-b, 2.0 * e, z, -q, i * lam},
  }};
  std::array<SymMatrix, 5> out;
  const SuperPoly th = S(Sym::theta);
  for (int j = 0; j < 5; ++j) {
    if (!osp_odd(j)) {
      out[j] = commutator(numeric_matrix(l[j]), U) - osp_combination(rhs[j]);
      continue;
    }
    std::array<SuperPoly, 5> r;
    for (int k = 0; k < 5; ++k) r[k] = th * rhs[j][k];
    out[j] = commutator(th * numeric_matrix(l[j]), U) - osp_combination(r);
  }
  return out;
}

// Grassmann-valued grid fields -------------------------------------------------

using GMat = SuperMatrix<Grassmann>;

/// Samples of a Grassmann-valued field on a grid (one element per node).
struct GField {
  Grid2 grid;
  std::vector<Grassmann> v;
  GField() = default;
  GField(const Grid2& g, int n) : grid(g), v(g.size(), Grassmann(n)) {}
  int generators() const { return v.empty() ? 0 : v[0].generators(); }
  /// body + Σ c_m(x) θ^m from coefficient fields keyed by monomial mask.
  static GField from_coeffs(const Grid2& g, int n, const std::map<Grassmann::Mask, CField>& c) {
    GField f(g, n);
    for (const auto& [m, fld] : c) {
      check_same(g, fld.grid);
      Grassmann mono(n, 1.0);
      for (int i = 0; i < n; ++i)
        if (m & (Grassmann::Mask(1) << i)) mono = mono * Grassmann::generator(n, i);
      for (std::size_t k = 0; k < g.size(); ++k) f.v[k] += mono * fld[k];
    }
    return f;
  }
  std::map<Grassmann::Mask, CField> coeffs() const {
    std::map<Grassmann::Mask, CField> c;
    for (std::size_t k = 0; k < v.size(); ++k)
      for (const auto& [m, val] : v[k].terms()) {
        auto it = c.find(m);
        if (it == c.end()) it = c.emplace(m, CField(grid)).first;
        it->second[k] = val;
      }
    return c;
  }
};

/// Field of 3×3 supermatrices.
struct GMatField {
  Grid2 grid;
  std::vector<GMat> v;
  GMatField() = default;
  GMatField(const Grid2& g, int n) : grid(g), v(g.size(), GMat(Grassmann(n))) {}
  std::size_t size() const { return v.size(); }

  GField entry(int i, int j) const {
    GField f;
    f.grid = grid;
    f.v.reserve(v.size());
    for (const auto& m : v) f.v.push_back(m(i, j));
    return f;
  }
  void set_entry(int i, int j, const GField& f) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k](i, j) = f.v[k];
  }
  /// Largest coefficient magnitude over all entries, monomials and nodes.
  double max_abs() const {
    double m = 0;
    for (const auto& x : v)
      for (const auto& e : x.a)
        for (const auto& [mask, c] : e.terms()) m = std::max(m, std::abs(c));
    return m;
  }
  /// Same, restricted to the body (no odd generators).
  double body_max_abs() const {
    double m = 0;
    for (const auto& x : v)
      for (const auto& e : x.a) m = std::max(m, std::abs(e.body()));
    return m;
  }
};

inline GMat gmat_numeric(const CMat& m, int n) {
  GMat r{Grassmann(n)};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = Grassmann(n, m(i, j));
  return r;
}

inline GMat gmat_scale(const GMat& m, cd c) {
  GMat r = m;
  for (auto& e : r.a) e *= c;
  return r;
}

#define MFSOL_GMF_BINOP(op)                                                  \
  inline GMatField operator op(const GMatField& a, const GMatField& b) {    \
    check_same(a.grid, b.grid);                                              \
    GMatField r = a;                                                         \
    for (std::size_t k = 0; k < a.size(); ++k) r.v[k] = a.v[k] op b.v[k];    \
    return r;                                                                \
  }
MFSOL_GMF_BINOP(+)
MFSOL_GMF_BINOP(-)
MFSOL_GMF_BINOP(*)
#undef MFSOL_GMF_BINOP

inline GMatField operator*(cd c, const GMatField& a) {
  GMatField r = a;
  for (auto& m : r.v) m = gmat_scale(m, c);
  return r;
}

inline GMatField commutator(const GMatField& a, const GMatField& b) { return a * b - b * a; }

inline GField diff(const GField& f, int mx, DiffScheme sch = DiffScheme::spectral) {
  auto c = f.coeffs();
  for (auto& [m, fld] : c) fld = diff(fld, mx, 0, sch);
  return GField::from_coeffs(f.grid, f.generators(), c);
}

inline GMatField diff(const GMatField& f, int mx, DiffScheme sch = DiffScheme::spectral) {
  GMatField r = f;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.set_entry(i, j, diff(f.entry(i, j), mx, sch));
  return r;
}

/// Centred 4th-order time derivative of a 5-slice trajectory at the middle slice.
inline GMatField time_derivative(const std::vector<GMatField>& slices, double dt) {
  require(slices.size() == 5, ErrorKind::invalid_argument, "time derivative needs 5 slices");
  const double w[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
  GMatField r = slices[2];
  for (std::size_t k = 0; k < r.size(); ++k) {
    GMat acc = gmat_scale(slices[0].v[k], w[0] / (12.0 * dt));
    for (int s = 1; s < 5; ++s) acc += gmat_scale(slices[s].v[k], w[s] / (12.0 * dt));
    r.v[k] = acc;
  }
  return r;
}

namespace detail {

inline CMat inverse3(const CMat& m) {
  auto c = [&](int i, int j) { return m(i, j); };
  cd det = c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) - c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0)) +
           c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0));
  require(std::abs(det) > 1e-10, ErrorKind::singular, "supermatrix body is not invertible");
  CMat r(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      int a = (j + 1) % 3, b = (j + 2) % 3, d = (i + 1) % 3, e = (i + 2) % 3;
      r(i, j) = (c(a, d) * c(b, e) - c(a, e) * c(b, d)) / det;
    }
  return r;
}

}  // namespace detail

/// Inverse via the body inverse and the (finite) Neumann series of the nilpotent part.
inline GMat inverse(const GMat& g) {
  const int n = g(0, 0).generators();
  CMat body(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) body(i, j) = g(i, j).body();
  const GMat binv = gmat_numeric(detail::inverse3(body), n);
  GMat nil = g - gmat_numeric(body, n);
  GMat x = binv * nil;  // g = body (I + x)
  GMat term = gmat_numeric(CMat::identity(3), n), sum = term;
  for (int k = 1; k <= n; ++k) {
    term = gmat_scale(term * x, -1.0);
    sum += term;
  }
  return sum * binv;
}

// Super spin equation ---------------------------------------------------------

/// R built from S3, S±, γ1, γ2 (Grassmann-valued fields).
inline GMatField assemble_R(const GField& s3, const GField& sp, const GField& sm, const GField& g1,
                            const GField& g2) {
  GMatField R(s3.grid, s3.generators());
  for (std::size_t k = 0; k < R.size(); ++k) {
    GMat& m = R.v[k];
    m(0, 0) = s3.v[k];
    m(0, 1) = sm.v[k];
    m(0, 2) = g1.v[k];
    m(1, 0) = sp.v[k];
    m(1, 1) = -s3.v[k];
    m(1, 2) = g2.v[k];
    m(2, 0) = g2.v[k];
    m(2, 1) = -g1.v[k];
  }
  return R;
}

/// Max body deviation of R³ − R.
inline double mv_constraint_defect(const GMatField& R) {
  return (R * R * R - R).max_abs();
}

/// iR_t − ½[R, R_xx] − (3/2)[R², (R²)_xx]
inline GMatField mv_residual(const GMatField& R, const GMatField& Rt, DiffScheme sch = DiffScheme::spectral,
                             double tol = 1e-6) {
  check_same(R.grid, Rt.grid);
  const double d = mv_constraint_defect(R);
  require(d <= tol, ErrorKind::invalid_argument,
          "R^3 = R violated by " + std::to_string(d));
  const GMatField R2 = R * R;
  return cd(0, 1) * Rt - cd(0.5) * commutator(R, diff(R, 2, sch)) -
         cd(1.5) * commutator(R2, diff(R2, 2, sch));
}

inline GMatField mv_residual(const std::vector<GMatField>& traj, double dt,
                             DiffScheme sch = DiffScheme::spectral, double tol = 1e-6) {
  return mv_residual(traj[2], time_derivative(traj, dt), sch, tol);
}

/// R_t from the super spin equation.
inline GMatField mv_rhs(const GMatField& R, DiffScheme sch = DiffScheme::spectral) {
  const GMatField R2 = R * R;
  return cd(0, -1) * (cd(0.5) * commutator(R, diff(R, 2, sch)) + cd(1.5) * commutator(R2, diff(R2, 2, sch)));
}

/// One explicit RK4 step of the super spin equation.
inline GMatField mv_step(const GMatField& R, double dt, DiffScheme sch = DiffScheme::spectral) {
  GMatField k1 = mv_rhs(R, sch);
  GMatField k2 = mv_rhs(R + cd(dt / 2) * k1, sch);
  GMatField k3 = mv_rhs(R + cd(dt / 2) * k2, sch);
  GMatField k4 = mv_rhs(R + cd(dt) * k3, sch);
  return R + cd(dt / 6) * (k1 + cd(2.0) * k2 + cd(2.0) * k3 + k4);
}

/// U′_t − V′_x + [U′, V′] for U′ = iλR, V′ = 2iλ²R + (3λ/2)[R², (R²)_x], plus
/// (λ/2)[R, R_x] in V′ when `half_term` is set. Without that term the λ²
/// part is −2iR_x in the bosonic sector.
inline GMatField mv_lax_curvature(const GMatField& R, const GMatField& Rt, cd lambda, bool half_term,
                                  DiffScheme sch = DiffScheme::spectral) {
  const GMatField R2 = R * R, Rx = diff(R, 1, sch);
  GMatField V = cd(2.0) * I * lambda * lambda * R + cd(1.5) * lambda * commutator(R2, diff(R2, 1, sch));
  if (half_term) V = V + cd(0.5) * lambda * commutator(R, Rx);
  const GMatField U = I * lambda * R;
  return I * lambda * Rt - diff(V, 1, sch) + commutator(U, V);
}

/// R_t from the bosonic reduction: R = S·σ in the upper block, S_t = S × S_xx.
inline GMatField mv_bosonic_rate(const Vec3Field& S, int n) {
  const Grid2& g = S[0].grid;
  Vec3Field St = cross(S, diff(S, 2, 0));
  GMatField r(g, n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    r.v[k](0, 0) = Grassmann(n, St[2][k]);
    r.v[k](1, 1) = Grassmann(n, -St[2][k]);
    r.v[k](0, 1) = Grassmann(n, cd(St[0][k], -St[1][k]));
    r.v[k](1, 0) = Grassmann(n, cd(St[0][k], St[1][k]));
  }
  return r;
}

/// Bosonic R for a unit spin field: S3 on the diagonal, S∓ = S1 ∓ iS2 off it.
inline GMatField bosonic_R(const Vec3Field& S, int n) {
  const Grid2& g = S[0].grid;
  GField s3(g, n), sp(g, n), sm(g, n), z(g, n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    s3.v[k] = Grassmann(n, S[2][k]);
    sp.v[k] = Grassmann(n, cd(S[0][k], S[1][k]));
    sm.v[k] = Grassmann(n, cd(S[0][k], -S[1][k]));
  }
  return assemble_R(s3, sp, sm, z, z);
}

// Super frame -----------------------------------------------------------------

struct SuperFields {
  GField q, p, beta, eps;
  cd lambda;
};

inline GMatField assemble_U(const SuperFields& f) {
  const int n = f.q.generators();
  GMatField U(f.q.grid, n);
  for (std::size_t k = 0; k < U.size(); ++k)
    U.v[k] = osp_combination<Grassmann>(
        {Grassmann(n, I * f.lambda), f.q.v[k], f.p.v[k], f.beta.v[k], f.eps.v[k]});
  return U;
}

namespace detail {

inline GField shift_x(const GField& f, double delta) {
  auto c = f.coeffs();
  const Grid2& g = f.grid;
  for (auto& [m, fld] : c)
    fld = apply_symbol_axis(fld, 0, [&](std::size_t mm) -> cd {
      double k = wavenumber(mm, g.nx, g.lx);
      return is_nyquist(mm, g.nx) ? cd(std::cos(k * delta), 0.0) : std::exp(I * k * delta);
    });
  return GField::from_coeffs(g, f.generators(), c);
}

}  // namespace detail

/// Solves g_x = U g along a periodic line from g(x0) = g0 with RK4; U at
/// half steps comes from band-limited interpolation of the fields.
inline GMatField solve_super_transport(const SuperFields& f, const GMat& g0) {
  const Grid2& grid = f.q.grid;
  require(grid.is_line() && grid.periodic_x, ErrorKind::invalid_argument,
          "super transport runs on a periodic line");
  const double h = grid.dx();
  const GMatField U0 = assemble_U(f);
  SuperFields half{detail::shift_x(f.q, h / 2), detail::shift_x(f.p, h / 2),
                   detail::shift_x(f.beta, h / 2), detail::shift_x(f.eps, h / 2), f.lambda};
  const GMatField Uh = assemble_U(half);
  GMatField G(grid, g0(0, 0).generators());
  G.v[0] = g0;
  for (std::size_t i = 0; i + 1 < grid.nx; ++i) {
    const GMat &a = U0.v[i], &b = Uh.v[i], &c = U0.v[i + 1];
    const GMat& y = G.v[i];
    GMat k1 = a * y;
    GMat k2 = b * (y + gmat_scale(k1, h / 2));
    GMat k3 = b * (y + gmat_scale(k2, h / 2));
    GMat k4 = c * (y + gmat_scale(k3, h));
    G.v[i + 1] = y + gmat_scale(k1 + gmat_scale(k2, 2.0) + gmat_scale(k3, 2.0) + k4, h / 6);
  }
  return G;
}

struct SuperFrame {
  std::array<GMatField, 5> e;  // ê_j = g⁻¹ l_j g; odd ones carry θ on the left
  int theta = 0;
};

inline SuperFrame super_frame(const GMatField& G, int theta) {
  const int n = G.v[0](0, 0).generators();
  require(theta >= 0 && theta < n, ErrorKind::invalid_argument, "theta generator out of range");
  const auto l = osp_generators();
  const Grassmann th = Grassmann::generator(n, theta);
  SuperFrame fr;
  fr.theta = theta;
  for (int j = 0; j < 5; ++j) fr.e[j] = G;
  for (std::size_t k = 0; k < G.size(); ++k) {
    const GMat gi = inverse(G.v[k]);
    for (int j = 0; j < 5; ++j) {
      GMat lj = gmat_numeric(l[j], n);
      if (osp_odd(j)) lj = th * lj;
      fr.e[j].v[k] = gi * lj * G.v[k];
    }
  }
  return fr;
}

struct SuperFrameResidual {
  std::array<double, 5> printed{};    // frame system as listed
  std::array<double, 5> corrected{};  // fifth equation from the graded bracket
  double transport = 0;               // max |g_x − U g| with 4th-order differences
};

namespace detail {

// Right-hand sides of the frame system as coefficients of l1..l5. `fixed`
// replaces the fifth row by the graded-bracket result.
inline std::array<std::array<Grassmann, 5>, 5> frame_rhs(const Grassmann& q, const Grassmann& p,
                                                          const Grassmann& b, const Grassmann& e,
                                                          cd lambda, bool fixed) {
  const int n = q.generators();
  const Grassmann z(n), il(n, I * lambda);
  if (fixed)
    return {{{z, 2.0 * q, -2.0 * p, b, -1.0 * e},
             {p, -2.0 * il, z, e, z},
             {-1.0 * q, z, 2.0 * il, z, b},
             {e, -2.0 * b, z, -1.0 * il, -1.0 * p},
             {b, z, 2.0 * e, -1.0 * q, il}}};
  return {{{z, 2.0 * q, -2.0 * p, b, -1.0 * e},
           {p, -2.0 * il, z, e, z},
           {-1.0 * q, z, 2.0 * il, z, b},
           {e, -2.0 * b, z, -1.0 * il, -1.0 * p},
           {-1.0 * b, 2.0 * e, z, -1.0 * q, il}}};
}

}  // namespace detail

/// Residuals of the five frame equations for ê_j = g⁻¹ l_j g (θ l_j for the
/// odd ones) with g from solve_super_transport. Coefficients multiply the
/// generators inside the conjugation, and odd rows carry θ on the left.
/// ê_x uses 4th-order differences with one-sided closures because g is not
/// periodic.
inline SuperFrameResidual mlxv_frame_residual(const SuperFields& f, const GMat& g0, int theta) {
  const GMatField G = solve_super_transport(f, g0);
  const SuperFrame fr = super_frame(G, theta);
  const int n = G.v[0](0, 0).generators();
  const Grassmann th = Grassmann::generator(n, theta);
  Grid2 open = G.grid;
  open.periodic_x = false;
  open.lx = G.grid.dx() * double(G.grid.nx - 1);  // same nodes, open spacing
  auto dxo = [&](GMatField m) {
    m.grid = open;
    return diff(m, 1, DiffScheme::fd4);
  };
  std::vector<GMat> ginv(G.size());
  for (std::size_t k = 0; k < G.size(); ++k) ginv[k] = inverse(G.v[k]);

  SuperFrameResidual out;
  std::array<GMatField, 5> ex;
  for (int j = 0; j < 5; ++j) ex[j] = dxo(fr.e[j]);
  for (int fixed = 0; fixed < 2; ++fixed)
    for (int j = 0; j < 5; ++j) {
      double m = 0;
      for (std::size_t k = 0; k < G.size(); ++k) {
        auto rows = detail::frame_rhs(f.q.v[k], f.p.v[k], f.beta.v[k], f.eps.v[k], f.lambda, fixed);
        std::array<Grassmann, 5> c = rows[j];
        if (osp_odd(j))
          for (auto& x : c) x = th * x;
        GMat r = ex[j].v[k] - ginv[k] * osp_combination<Grassmann>(c) * G.v[k];
        for (const auto& e : r.a)
          for (const auto& [mask, v] : e.terms()) m = std::max(m, std::abs(v));
      }
      (fixed ? out.corrected : out.printed)[j] = m;
    }
  const GMatField Gx = dxo(G), U = assemble_U(f);
  for (std::size_t k = 0; k < G.size(); ++k) {
    GMat r = Gx.v[k] - U.v[k] * G.v[k];
    for (const auto& e : r.a)
      for (const auto& [mask, v] : e.terms()) out.transport = std::max(out.transport, std::abs(v));
  }
  return out;
}

}  // namespace mfsol
