// geometry.hpp - parameter-dependent domains, quadrature rules, exhaustions
//
// Product rules are polar per axis: Gauss-Legendre in u = r^2 (so monomials
// z^a zbar^a integrate exactly) times a uniform angular grid that annihilates
// z^a zbar^b for a != b up to the declared degree.  Balls in C^n use a
// conical-product Gauss-Jacobi rule on the radial simplex sum u_i < R^2.
// Sublevel regions get seeded rejection sampling over their bounding box.
#pragma once

#include "fields.hpp"
#include "types.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bkl::geometry {

enum class DomainKind { polydisc, ball, sublevel };

// per-axis sampling bounds for sublevel regions
struct Box {
  RVec re_lo, re_hi, im_lo, im_hi;
  int dim() const { return static_cast<int>(re_lo.size()); }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i)
      v *= (re_hi[i] - re_lo[i]) * (im_hi[i] - im_lo[i]);
    return v;
  }
};

inline Box square_box(int n, double half_width) {
  Box b;
  b.re_lo = RVec::Constant(n, -half_width);
  b.re_hi = RVec::Constant(n, half_width);
  b.im_lo = RVec::Constant(n, -half_width);
  b.im_hi = RVec::Constant(n, half_width);
  return b;
}

struct DomainSpec {
  DomainKind kind = DomainKind::polydisc;
  int n = 1;
  RVec radii;               // polydisc: n entries; ball: single entry
  RealFieldPtr rho;         // sublevel defining function rho(t, z)
  Box box;                  // sublevel sampling bounds
  TPoint t_ref;             // parameter the sublevel fiber is frozen at
  double rho_shift = 0.0;   // effective defining function is rho + rho_shift
};

struct QuadratureRule {
  std::vector<ZPoint> nodes;
  RVec weights;
  int exactness = 0;        // max total monomial degree integrated exactly; 0 = Monte Carlo
  double volume_estimate = 0.0;
  double volume_se = 0.0;   // standard error of the volume estimate; 0 for exact rules
  bool monte_carlo = false;
  int node_count() const { return static_cast<int>(nodes.size()); }
  bool empty() const { return nodes.empty(); }
};

struct Exhaustion {
  std::vector<DomainSpec> stages;
};

// ---------------- constructors / membership ----------------

inline DomainSpec make_polydisc(RVec radii) {
  for (int i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0)) throw std::invalid_argument("make_polydisc: radii must be positive");
  DomainSpec d;
  d.kind = DomainKind::polydisc;
  d.n = static_cast<int>(radii.size());
  d.radii = std::move(radii);
  return d;
}

inline DomainSpec make_disc(double radius) {
  return make_polydisc(RVec::Constant(1, radius));
}

inline DomainSpec make_ball(int n, double radius) {
  if (n < 1) throw std::invalid_argument("make_ball: dimension must be >= 1");
  if (!(radius > 0)) throw std::invalid_argument("make_ball: radius must be positive");
  DomainSpec d;
  d.kind = DomainKind::ball;
  d.n = n;
  d.radii = RVec::Constant(1, radius);
  return d;
}

inline DomainSpec make_sublevel(RealFieldPtr rho, Box box, TPoint t_ref) {
  if (!rho || !rho->value) throw std::invalid_argument("make_sublevel: missing defining function");
  if (box.dim() != rho->n) throw std::invalid_argument("make_sublevel: box/defining-function dimension mismatch");
  for (int i = 0; i < box.dim(); ++i)
    if (!(box.re_lo[i] < box.re_hi[i]) || !(box.im_lo[i] < box.im_hi[i]))
      throw std::invalid_argument("make_sublevel: degenerate box");
  DomainSpec d;
  d.kind = DomainKind::sublevel;
  d.n = rho->n;
  d.rho = std::move(rho);
  d.box = std::move(box);
  d.t_ref = std::move(t_ref);
  return d;
}

inline bool contains(const DomainSpec& d, const ZPoint& z) {
  switch (d.kind) {
    case DomainKind::polydisc:
      for (int i = 0; i < d.n; ++i)
        if (!(std::abs(z.c[i]) < d.radii[i])) return false;
      return true;
    case DomainKind::ball:
      return z.c.squaredNorm() < d.radii[0] * d.radii[0];
    case DomainKind::sublevel:
      return d.rho->value(d.t_ref, z) + d.rho_shift < 0.0;
  }
  return false;
}

// closed-form volume; Monte Carlo estimates live on the sampled rule instead
inline double domain_volume(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::polydisc: {
      double v = 1.0;
      for (int i = 0; i < d.n; ++i) v *= pi * d.radii[i] * d.radii[i];
      return v;
    }
    case DomainKind::ball: {
      double v = std::pow(pi * d.radii[0] * d.radii[0], d.n);
      for (int k = 2; k <= d.n; ++k) v /= k;
      return v;
    }
    case DomainKind::sublevel:
      throw std::invalid_argument("domain_volume: no closed form for sublevel regions");
  }
  return 0.0;
}

// integral of z^a zbar^b over the domain (exact closed form); zero unless a == b
inline double monomial_integral(const DomainSpec& d,
                                const std::vector<int>& a, const std::vector<int>& b) {
  if (static_cast<int>(a.size()) != d.n || static_cast<int>(b.size()) != d.n)
    throw std::invalid_argument("monomial_integral: index dimension mismatch");
  if (a != b) return 0.0;
  switch (d.kind) {
    case DomainKind::polydisc: {
      double v = 1.0;
      for (int i = 0; i < d.n; ++i)
        v *= pi * std::pow(d.radii[i], 2 * a[i] + 2) / (a[i] + 1);
      return v;
    }
    case DomainKind::ball: {
      int total = 0;
      double lg = 0.0;
      for (int i = 0; i < d.n; ++i) {
        total += a[i];
        lg += std::lgamma(a[i] + 1.0);
      }
      lg -= std::lgamma(total + d.n + 1.0);
      return std::pow(pi, d.n) * std::pow(d.radii[0], 2 * (total + d.n)) * std::exp(lg);
    }
    case DomainKind::sublevel:
      throw std::invalid_argument("monomial_integral: no closed form for sublevel regions");
  }
  return 0.0;
}

// ---------------- Gauss rules (Golub-Welsch) ----------------

struct Rule1D {
  RVec nodes, weights;
};

// nodes/weights for integral_0^1 f(x) (1-x)^alpha dx, exact for deg(f) <= 2q-1
inline Rule1D gauss_jacobi01(int q, int alpha) {
  if (q < 1) throw std::invalid_argument("gauss_jacobi01: need at least one node");
  if (alpha < 0) throw std::invalid_argument("gauss_jacobi01: alpha must be >= 0");
  const double a = static_cast<double>(alpha), b = 0.0;
  RVec diag(q), sub(q > 1 ? q - 1 : 0);
  diag[0] = (b - a) / (a + b + 2.0);
  for (int k = 1; k < q; ++k) {
    const double s = 2.0 * k + a + b;
    diag[k] = (b * b - a * a) / (s * (s + 2.0));
    const double bk = 4.0 * k * (k + a) * (k + b) * (k + a + b) /
                      (s * s * (s + 1.0) * (s - 1.0));
    sub[k - 1] = std::sqrt(bk);
  }
  // total mass of (1-xi)^alpha on [-1,1]
  const double b0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  Eigen::SelfAdjointEigenSolver<RMat> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_jacobi01: tridiagonal eigensolve failed");
  Rule1D r;
  r.nodes.resize(q);
  r.weights.resize(q);
  const double scale = std::pow(2.0, a + 1.0);
  for (int i = 0; i < q; ++i) {
    r.nodes[i] = 0.5 * (es.eigenvalues()[i] + 1.0);             // [-1,1] -> [0,1]
    const double w = b0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    r.weights[i] = w / scale;
  }
  return r;
}

inline Rule1D gauss_legendre01(int q) { return gauss_jacobi01(q, 0); }

namespace detail {

// uniform double in [0,1) from a 64-bit state; fixed mapping, no library
// distribution involved, so streams are stable across standard libraries
inline double u01(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t x = s;
  x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27; x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

struct AxisRule {
  std::vector<double> r;        // radial positions
  std::vector<double> wr;       // radial weights (already include the 1/2 du factor)
  int n_theta = 0;
};

inline AxisRule polar_axis_rule(double radius, int order) {
  AxisRule ax;
  const Rule1D gl = gauss_legendre01(order);
  const double R2 = radius * radius;
  ax.r.resize(order);
  ax.wr.resize(order);
  for (int i = 0; i < order; ++i) {
    ax.r[i] = std::sqrt(R2 * gl.nodes[i]);
    ax.wr[i] = 0.5 * R2 * gl.weights[i];
  }
  ax.n_theta = 2 * order + 1;
  return ax;
}

} // namespace detail

// ---------------- sampling ----------------

inline QuadratureRule sample_quadrature(const DomainSpec& d, int order, std::uint64_t seed) {
  if (order < 1) throw std::invalid_argument("sample_quadrature: order must be >= 1");
  QuadratureRule rule;

  if (d.kind == DomainKind::polydisc || (d.kind == DomainKind::ball && d.n == 1)) {
    std::vector<detail::AxisRule> ax(d.n);
    for (int i = 0; i < d.n; ++i) {
      const double R = d.kind == DomainKind::ball ? d.radii[0] : d.radii[i];
      ax[i] = detail::polar_axis_rule(R, order);
    }
    // tensor product, last axis fastest
    std::vector<int> idx(2 * d.n, 0);  // (radial, angular) per axis
    std::size_t total = 1;
    for (int i = 0; i < d.n; ++i) total *= ax[i].r.size() * ax[i].n_theta;
    rule.nodes.reserve(total);
    std::vector<double> ws;
    ws.reserve(total);
    while (true) {
      CVec z(d.n);
      double w = 1.0;
      for (int i = 0; i < d.n; ++i) {
        const int ri = idx[2 * i], ti = idx[2 * i + 1];
        const double th = 2.0 * pi * ti / ax[i].n_theta;
        z[i] = ax[i].r[ri] * cxd(std::cos(th), std::sin(th));
        w *= ax[i].wr[ri] * (2.0 * pi / ax[i].n_theta);
      }
      rule.nodes.emplace_back(std::move(z));
      ws.push_back(w);
      int k = 2 * d.n - 1;
      for (; k >= 0; --k) {
        const int axi = k / 2;
        const int lim = (k % 2 == 0) ? static_cast<int>(ax[axi].r.size()) : ax[axi].n_theta;
        if (++idx[k] < lim) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
    rule.weights = Eigen::Map<RVec>(ws.data(), static_cast<Eigen::Index>(ws.size()));
    rule.exactness = 2 * order;
    rule.volume_estimate = rule.weights.sum();
    return rule;
  }

  if (d.kind == DomainKind::ball) {
    // conical product over the simplex u_1 + ... + u_n < R^2, u_i = r_i^2
    const int n = d.n;
    const double R2 = d.radii[0] * d.radii[0];
    std::vector<Rule1D> gj(n);
    for (int l = 0; l < n; ++l) gj[l] = gauss_jacobi01(order, n - 1 - l);
    const int n_theta = 2 * order + 1;
    std::vector<int> idx(n, 0);
    std::vector<double> u(n);
    std::vector<ZPoint> nodes;
    std::vector<double> ws;
    // radial simplex tuples first, angles tensored after
    std::vector<std::pair<std::vector<double>, double>> radial;
    while (true) {
      double scale = R2, w = 1.0;
      for (int l = 0; l < n; ++l) {
        const double x = gj[l].nodes[idx[l]];
        u[l] = scale * x;
        scale *= (1.0 - x);
        w *= gj[l].weights[idx[l]];
      }
      radial.emplace_back(u, w * std::pow(R2, n));
      int k = n - 1;
      for (; k >= 0; --k) {
        if (++idx[k] < order) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
    const double ang_w = std::pow(pi / n_theta, n);  // (1/2)^n (2 pi / n_theta)^n
    std::vector<int> tidx(n, 0);
    nodes.reserve(radial.size() * static_cast<std::size_t>(std::pow(n_theta, n)));
    for (const auto& [uu, wu] : radial) {
      std::fill(tidx.begin(), tidx.end(), 0);
      while (true) {
        CVec z(n);
        for (int l = 0; l < n; ++l) {
          const double th = 2.0 * pi * tidx[l] / n_theta;
          z[l] = std::sqrt(uu[l]) * cxd(std::cos(th), std::sin(th));
        }
        nodes.emplace_back(std::move(z));
        ws.push_back(wu * ang_w);
        int k = n - 1;
        for (; k >= 0; --k) {
          if (++tidx[k] < n_theta) break;
          tidx[k] = 0;
        }
        if (k < 0) break;
      }
    }
    rule.nodes = std::move(nodes);
    rule.weights = Eigen::Map<RVec>(ws.data(), static_cast<Eigen::Index>(ws.size()));
    rule.exactness = 2 * order;
    rule.volume_estimate = rule.weights.sum();
    return rule;
  }

  // sublevel: rejection sampling over the box, equal weights
  const int n = d.n;
  const std::int64_t n_total = 2048LL * order;
  std::uint64_t state = seed ^ 0x5851f42d4c957f2dULL;
  const double box_vol = d.box.volume();
  std::vector<ZPoint> acc;
  for (std::int64_t s = 0; s < n_total; ++s) {
    CVec z(n);
    for (int i = 0; i < n; ++i) {
      const double re = d.box.re_lo[i] + (d.box.re_hi[i] - d.box.re_lo[i]) * detail::u01(state);
      const double im = d.box.im_lo[i] + (d.box.im_hi[i] - d.box.im_lo[i]) * detail::u01(state);
      z[i] = cxd(re, im);
    }
    ZPoint p(std::move(z));
    if (d.rho->value(d.t_ref, p) + d.rho_shift < 0.0) acc.push_back(std::move(p));
  }
  const double p_acc = static_cast<double>(acc.size()) / static_cast<double>(n_total);
  rule.monte_carlo = true;
  rule.nodes = std::move(acc);
  rule.weights = RVec::Constant(rule.node_count(), box_vol / static_cast<double>(n_total));
  rule.exactness = 0;
  rule.volume_estimate = box_vol * p_acc;
  rule.volume_se = box_vol * std::sqrt(p_acc * (1.0 - p_acc) / static_cast<double>(n_total));
  return rule;
}

// ---------------- fibers and exhaustions ----------------

inline DomainSpec fiber_domain(const DomainSpec& d, const TPoint& t) {
  if (d.kind != DomainKind::sublevel) return d;  // product family: fibers identical
  if (d.rho->m > 0 && t.dim() != d.rho->m)
    throw std::invalid_argument("fiber_domain: parameter dimension mismatch");
  DomainSpec f = d;
  f.t_ref = t;
  return f;
}

inline DomainSpec scale_domain(const DomainSpec& d, double factor) {
  if (d.kind == DomainKind::sublevel)
    throw std::invalid_argument("scale_domain: sublevel stages use shifts, not scaling");
  DomainSpec s = d;
  s.radii = (factor * d.radii).eval();
  return s;
}

// probe-based nesting check: every quadrature node of stage k must lie in stage k+1
inline void verify_nested(const Exhaustion& ex, int probe_order = 4, std::uint64_t seed = 1) {
  for (std::size_t k = 0; k + 1 < ex.stages.size(); ++k) {
    const QuadratureRule probe = sample_quadrature(ex.stages[k], probe_order, mix_seed(seed, k));
    for (const auto& z : probe.nodes)
      if (!contains(ex.stages[k + 1], z))
        throw std::runtime_error("verify_nested: stage " + std::to_string(k) +
                                 " is not contained in stage " + std::to_string(k + 1));
  }
}

// geometric exhaustion: radii * growth^k for product domains,
// defining-function shifts -growth^{-(k+1)} -> 0 for sublevel regions
inline Exhaustion exhaust(const DomainSpec& d, int count, double growth) {
  if (count < 1) throw std::invalid_argument("exhaust: count must be >= 1");
  if (!(growth > 1.0)) throw std::invalid_argument("exhaust: growth must exceed 1");
  Exhaustion ex;
  ex.stages.reserve(count);
  for (int k = 0; k < count; ++k) {
    if (d.kind == DomainKind::sublevel) {
      DomainSpec s = d;
      s.rho_shift = d.rho_shift + std::pow(growth, -(k + 1));
      ex.stages.push_back(std::move(s));
    } else {
      ex.stages.push_back(scale_domain(d, std::pow(growth, k)));
    }
  }
  verify_nested(ex);
  return ex;
}

// explicit stage list (e.g. arithmetic radius ladders)
inline Exhaustion exhaust_radii(const DomainSpec& d, const std::vector<double>& radii) {
  if (d.kind == DomainKind::sublevel)
    throw std::invalid_argument("exhaust_radii: product domains only");
  Exhaustion ex;
  double prev = 0.0;
  for (double R : radii) {
    if (!(R > prev)) throw std::invalid_argument("exhaust_radii: radii must increase");
    prev = R;
    ex.stages.push_back(scale_domain(d, R / d.radii.maxCoeff()));
  }
  verify_nested(ex);
  return ex;
}

} // namespace bkl::geometry
