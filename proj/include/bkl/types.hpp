// types.hpp - shared scalar/vector aliases and small helpers
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace bkl {

using cxd  = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// log values below this are collapsed to -inf (empty fibers, vanished kernels)
inline constexpr double log_floor = -700.0;

inline double neg_inf() { return -std::numeric_limits<double>::infinity(); }
inline bool is_neg_inf(double x) { return x == neg_inf(); }

// base-space point z in C^n
struct ZPoint {
  CVec c;
  ZPoint() = default;
  explicit ZPoint(CVec v) : c(std::move(v)) {}
  static ZPoint zero(int n) { return ZPoint(CVec::Zero(n)); }
  int dim() const { return static_cast<int>(c.size()); }
  cxd operator[](int i) const { return c[i]; }
};

// parameter point t in C^m
struct TPoint {
  CVec c;
  TPoint() = default;
  explicit TPoint(CVec v) : c(std::move(v)) {}
  static TPoint zero(int m) { return TPoint(CVec::Zero(m)); }
  int dim() const { return static_cast<int>(c.size()); }
  cxd operator[](int i) const { return c[i]; }
};

inline ZPoint zpoint1(cxd z) {
  CVec v(1);
  v[0] = z;
  return ZPoint(v);
}

inline TPoint tpoint1(cxd t) {
  CVec v(1);
  v[0] = t;
  return TPoint(v);
}

// splitmix64: cheap deterministic seed mixing (per-stage / per-t streams)
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27; x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// stable key for caching values at a parameter point
inline std::string tpoint_key(const TPoint& t) {
  std::string k;
  k.reserve(t.dim() * 16);
  for (int i = 0; i < t.dim(); ++i) {
    double re = t.c[i].real(), im = t.c[i].imag();
    k.append(reinterpret_cast<const char*>(&re), sizeof(double));
    k.append(reinterpret_cast<const char*>(&im), sizeof(double));
  }
  return k;
}

} // namespace bkl
