#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "grid.hpp"

namespace mfsol {

/// Element of the Grassmann algebra on N anticommuting generators θ_0..θ_{N-1}.
/// Monomials are bit masks with generators in increasing order.
class Grassmann {
 public:
  using Mask = std::uint32_t;

  explicit Grassmann(int n = 8) : n_(n) {
    require(n >= 0 && n <= 24, ErrorKind::invalid_argument, "generator count must be 0..24");
  }
  Grassmann(int n, cd scalar) : Grassmann(n) {
    if (scalar != cd{}) c_[0] = scalar;
  }
  static Grassmann generator(int n, int i) {
    require(i >= 0 && i < n, ErrorKind::invalid_argument, "generator index out of range");
    Grassmann g(n);
    g.c_[Mask(1) << i] = 1.0;
    return g;
  }

  int generators() const { return n_; }
  const std::map<Mask, cd>& terms() const { return c_; }
  cd coeff(Mask m) const {
    auto it = c_.find(m);
    return it == c_.end() ? cd{} : it->second;
  }
  cd body() const { return coeff(0); }
  bool is_zero(double tol = 0.0) const {
    for (const auto& [m, v] : c_)
      if (std::abs(v) > tol) return false;
    return true;
  }
  /// 0 even, 1 odd, -1 mixed, 0 for zero.
  int parity() const {
    int p = -2;
    for (const auto& [m, v] : c_) {
      if (v == cd{}) continue;
      int q = std::popcount(m) % 2;
      if (p == -2) p = q;
      else if (p != q) return -1;
    }
    return p == -2 ? 0 : p;
  }

  Grassmann& operator+=(const Grassmann& o) {
    same(o);
    for (const auto& [m, v] : o.c_) add(m, v);
    return *this;
  }
  Grassmann& operator-=(const Grassmann& o) {
    same(o);
    for (const auto& [m, v] : o.c_) add(m, -v);
    return *this;
  }
  Grassmann& operator*=(cd s) {
    if (s == cd{}) c_.clear();
    for (auto& [m, v] : c_) v *= s;
    return *this;
  }
  friend Grassmann operator+(Grassmann a, const Grassmann& b) { return a += b; }
  friend Grassmann operator-(Grassmann a, const Grassmann& b) { return a -= b; }
  friend Grassmann operator-(Grassmann a) { return a *= -1.0; }
  friend Grassmann operator*(Grassmann a, cd s) { return a *= s; }
  friend Grassmann operator*(cd s, Grassmann a) { return a *= s; }
  friend Grassmann operator*(const Grassmann& a, const Grassmann& b) {
    a.same(b);
    Grassmann r(a.n_);
    for (const auto& [ma, va] : a.c_)
      for (const auto& [mb, vb] : b.c_) {
        if (ma & mb) continue;
        r.add(ma | mb, double(reorder_sign(ma, mb)) * va * vb);
      }
    return r;
  }
  friend bool operator==(const Grassmann& a, const Grassmann& b) {
    return a.n_ == b.n_ && (a - b).is_zero();
  }

  /// Sign from moving the generators of b past those of a into canonical order.
  static int reorder_sign(Mask a, Mask b) {
    int swaps = 0;
    for (Mask bb = b; bb; bb &= bb - 1) {
      int j = std::countr_zero(bb);
      swaps += std::popcount(a >> (j + 1));
    }
    return swaps % 2 ? -1 : 1;
  }

  std::string str(const std::vector<std::string>& names = {}) const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, v] : c_) {
      if (v == cd{}) continue;
      if (!first) os << " + ";
      first = false;
      os << "(" << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i)";
      for (int i = 0; i < n_; ++i)
        if (m & (Mask(1) << i))
          os << "*" << (i < int(names.size()) ? names[i] : "t" + std::to_string(i));
    }
    return first ? "0" : os.str();
  }

 private:
  void add(Mask m, cd v) {
    if (v == cd{}) return;
    auto it = c_.find(m);
    if (it == c_.end()) {
      c_.emplace(m, v);
    } else {
      it->second += v;
      if (it->second == cd{}) c_.erase(it);
    }
  }
  void same(const Grassmann& o) const {
    require(n_ == o.n_, ErrorKind::dimension_mismatch, "mixed Grassmann algebras");
  }

  int n_;
  std::map<Mask, cd> c_;
};

inline Grassmann grassmann_mul(const Grassmann& a, const Grassmann& b) { return a * b; }

}  // namespace mfsol
