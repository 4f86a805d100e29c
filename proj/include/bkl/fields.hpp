// fields.hpp - scalar and matrix-valued fields on U x C^n with Wirtinger derivatives
//
// Derivative convention used throughout: for w = x + iy,
//   d/dw = (d/dx - i d/dy)/2,   d/dwbar = (d/dx + i d/dy)/2.
// Second-derivative accessors always pair one holomorphic with one
// anti-holomorphic index (that is all the curvature formulas need).
// Fields either carry analytic derivative closures or fall back to central
// differences with step = fd_step * (1 + |coordinate|).
#pragma once

#include "types.hpp"

#include <functional>
#include <memory>
#include <stdexcept>

namespace bkl {

enum class Var { T, Z };

namespace detail {

// keep scalar/matrix FD code paths identical: force concrete values out of
// Eigen expression templates before their operands go out of scope
inline cxd materialize(const cxd& x) { return x; }
inline double materialize(const double& x) { return x; }
template <class E>
auto materialize(const E& e) { return e.eval(); }

inline cxd& coord(TPoint& t, ZPoint& z, Var sp, int i) {
  return sp == Var::T ? t.c[i] : z.c[i];
}

inline cxd coord_of(const TPoint& t, const ZPoint& z, Var sp, int i) {
  return sp == Var::T ? t.c[i] : z.c[i];
}

template <class Fn>
auto eval_shift(const Fn& f, const TPoint& t, const ZPoint& z,
                Var sp, int i, cxd d) {
  TPoint tt = t;
  ZPoint zz = z;
  coord(tt, zz, sp, i) += d;
  return f(tt, zz);
}

template <class Fn>
auto eval_shift2(const Fn& f, const TPoint& t, const ZPoint& z,
                 Var sp1, int i1, cxd d1, Var sp2, int i2, cxd d2) {
  TPoint tt = t;
  ZPoint zz = z;
  coord(tt, zz, sp1, i1) += d1;
  coord(tt, zz, sp2, i2) += d2;
  return f(tt, zz);
}

inline double fd_h(const TPoint& t, const ZPoint& z, Var sp, int i, double base) {
  return base * (1.0 + std::abs(coord_of(t, z, sp, i)));
}

// d/dw of f (holomorphic Wirtinger derivative), central differences
template <class Fn>
auto fd_d1(const Fn& f, const TPoint& t, const ZPoint& z,
           Var sp, int i, double base) {
  const double h = fd_h(t, z, sp, i, base);
  auto px = eval_shift(f, t, z, sp, i, cxd(h, 0));
  auto mx = eval_shift(f, t, z, sp, i, cxd(-h, 0));
  auto py = eval_shift(f, t, z, sp, i, cxd(0, h));
  auto my = eval_shift(f, t, z, sp, i, cxd(0, -h));
  auto fx = materialize((px - mx) * (0.5 / h));
  auto fy = materialize((py - my) * (0.5 / h));
  return materialize((fx - cxd(0, 1) * fy) * 0.5);
}

// d/dw1 d/dw2bar of f.  Same-slot case reduces to a quarter Laplacian;
// distinct slots use 4-point crosses per real-coordinate pair.
template <class Fn>
auto fd_d2(const Fn& f, const TPoint& t, const ZPoint& z,
           Var sp1, int i1, Var sp2, int i2, double base) {
  const double h1 = fd_h(t, z, sp1, i1, base);
  if (sp1 == sp2 && i1 == i2) {
    auto f0 = f(t, z);
    auto px = eval_shift(f, t, z, sp1, i1, cxd(h1, 0));
    auto mx = eval_shift(f, t, z, sp1, i1, cxd(-h1, 0));
    auto py = eval_shift(f, t, z, sp1, i1, cxd(0, h1));
    auto my = eval_shift(f, t, z, sp1, i1, cxd(0, -h1));
    auto fxx = materialize((px - 2.0 * f0 + mx) * (1.0 / (h1 * h1)));
    auto fyy = materialize((py - 2.0 * f0 + my) * (1.0 / (h1 * h1)));
    return materialize((fxx + fyy) * 0.25);
  }
  const double h2 = fd_h(t, z, sp2, i2, base);
  auto cross = [&](cxd d1, cxd d2) {
    auto pp = eval_shift2(f, t, z, sp1, i1, d1, sp2, i2, d2);
    auto pm = eval_shift2(f, t, z, sp1, i1, d1, sp2, i2, -d2);
    auto mp = eval_shift2(f, t, z, sp1, i1, -d1, sp2, i2, d2);
    auto mm = eval_shift2(f, t, z, sp1, i1, -d1, sp2, i2, -d2);
    return materialize((pp - pm - mp + mm) * (0.25 / (std::abs(d1) * std::abs(d2))));
  };
  const cxd ex1(h1, 0), ey1(0, h1), ex2(h2, 0), ey2(0, h2);
  auto xx = cross(ex1, ex2);
  auto yy = cross(ey1, ey2);
  auto xy = cross(ex1, ey2);
  auto yx = cross(ey1, ex2);
  return materialize((xx + yy + cxd(0, 1) * (xy - yx)) * 0.25);
}

} // namespace detail

// ---------------- real-valued field ----------------

// real function of (t, z); m = 0 declares a t-independent field
struct RealField {
  int m = 0, n = 1;
  double fd_step = 1e-4;
  std::function<double(const TPoint&, const ZPoint&)> value;
  // analytic slots (all-or-nothing per order); empty => finite differences
  std::function<cxd(const TPoint&, const ZPoint&, int)> dt_fn, dz_fn;
  std::function<cxd(const TPoint&, const ZPoint&, int, int)> dtt_fn, dzz_fn, dtz_fn;

  bool analytic() const { return static_cast<bool>(dz_fn); }

  double operator()(const TPoint& t, const ZPoint& z) const { return value(t, z); }

private:
  // complex-valued view of the (real) evaluator, for the FD templates
  auto cplx() const {
    return [this](const TPoint& t, const ZPoint& z) { return cxd(value(t, z), 0); };
  }

public:
  cxd dt(const TPoint& t, const ZPoint& z, int j) const {
    if (m == 0) return cxd(0);
    if (dt_fn) return dt_fn(t, z, j);
    return detail::fd_d1(cplx(), t, z, Var::T, j, fd_step);
  }
  cxd dz(const TPoint& t, const ZPoint& z, int v) const {
    if (dz_fn) return dz_fn(t, z, v);
    return detail::fd_d1(cplx(), t, z, Var::Z, v, fd_step);
  }
  // dtt(j,k) = d/dt_j d/dtbar_k
  cxd dtt(const TPoint& t, const ZPoint& z, int j, int k) const {
    if (m == 0) return cxd(0);
    if (dtt_fn) return dtt_fn(t, z, j, k);
    return detail::fd_d2(cplx(), t, z, Var::T, j, Var::T, k, fd_step);
  }
  // dzz(v,u) = d/dz_v d/dzbar_u
  cxd dzz(const TPoint& t, const ZPoint& z, int v, int u) const {
    if (dzz_fn) return dzz_fn(t, z, v, u);
    return detail::fd_d2(cplx(), t, z, Var::Z, v, Var::Z, u, fd_step);
  }
  // dtz(j,u) = d/dt_j d/dzbar_u
  cxd dtz(const TPoint& t, const ZPoint& z, int j, int u) const {
    if (m == 0) return cxd(0);
    if (dtz_fn) return dtz_fn(t, z, j, u);
    return detail::fd_d2(cplx(), t, z, Var::T, j, Var::Z, u, fd_step);
  }
  // d/dz_v d/dtbar_k, via conjugation (field is real-valued)
  cxd dzt(const TPoint& t, const ZPoint& z, int v, int k) const {
    return std::conj(dtz(t, z, k, v));
  }
};

using RealFieldPtr = std::shared_ptr<const RealField>;

inline RealFieldPtr field_ptr(RealField f) {
  return std::make_shared<const RealField>(std::move(f));
}

inline RealField real_field_from_value(
    int m, int n, std::function<double(const TPoint&, const ZPoint&)> fn,
    double fd_step = 1e-4) {
  RealField f;
  f.m = m;
  f.n = n;
  f.value = std::move(fn);
  f.fd_step = fd_step;
  return f;
}

// rho + c (stage shifts of defining functions); a constant shift leaves every
// derivative closure valid, and FD differences cancel it on their own
inline RealField shift_field(const RealField& f, double c) {
  RealField g = f;
  auto base = f.value;
  g.value = [base, c](const TPoint& t, const ZPoint& z) { return base(t, z) + c; };
  return g;
}

// freeze the parameter slot: returns a z-only field (m = 0)
inline RealField freeze_t(const RealField& f, const TPoint& t0) {
  RealField g;
  g.m = 0;
  g.n = f.n;
  g.fd_step = f.fd_step;
  auto cp = std::make_shared<RealField>(f);
  g.value = [cp, t0](const TPoint&, const ZPoint& z) { return cp->value(t0, z); };
  g.dz_fn = [cp, t0](const TPoint&, const ZPoint& z, int v) { return cp->dz(t0, z, v); };
  g.dt_fn = [](const TPoint&, const ZPoint&, int) { return cxd(0, 0); };
  g.dzz_fn = [cp, t0](const TPoint&, const ZPoint& z, int v, int u) { return cp->dzz(t0, z, v, u); };
  g.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0, 0); };
  g.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0, 0); };
  return g;
}

} // namespace bkl

namespace bkl::metric {

// ---------------- Hermitian metric field ----------------

// rank x rank Hermitian-positive matrix field h(t, z) on the trivial bundle.
// Second-derivative accessors: dtt(j,k) = d/dtbar_k d/dt_j h, etc.; the
// remaining mixed sector d/dtbar_k d/dz_v h follows from Hermitian symmetry.
struct MetricField {
  int rank = 1, m = 0, n = 1;
  double fd_step = 1e-4;
  std::function<CMat(const TPoint&, const ZPoint&)> eval;
  std::function<CMat(const TPoint&, const ZPoint&, int)> dt_fn, dz_fn;
  std::function<CMat(const TPoint&, const ZPoint&, int, int)> dtt_fn, dzz_fn, dtz_fn;
  // fast path for rank-1 weights h = e^{-phi}; null for genuinely matrix-valued h
  RealFieldPtr scalar_phi;

  bool analytic() const { return static_cast<bool>(dz_fn); }

  CMat operator()(const TPoint& t, const ZPoint& z) const { return eval(t, z); }

  CMat dt(const TPoint& t, const ZPoint& z, int j) const {
    if (m == 0) return CMat::Zero(rank, rank);
    if (dt_fn) return dt_fn(t, z, j);
    return detail::fd_d1(eval, t, z, Var::T, j, fd_step);
  }
  CMat dz(const TPoint& t, const ZPoint& z, int v) const {
    if (dz_fn) return dz_fn(t, z, v);
    return detail::fd_d1(eval, t, z, Var::Z, v, fd_step);
  }
  CMat dtt(const TPoint& t, const ZPoint& z, int j, int k) const {
    if (m == 0) return CMat::Zero(rank, rank);
    if (dtt_fn) return dtt_fn(t, z, j, k);
    return detail::fd_d2(eval, t, z, Var::T, j, Var::T, k, fd_step);
  }
  CMat dzz(const TPoint& t, const ZPoint& z, int v, int u) const {
    if (dzz_fn) return dzz_fn(t, z, v, u);
    return detail::fd_d2(eval, t, z, Var::Z, v, Var::Z, u, fd_step);
  }
  CMat dtz(const TPoint& t, const ZPoint& z, int j, int u) const {
    if (m == 0) return CMat::Zero(rank, rank);
    if (dtz_fn) return dtz_fn(t, z, j, u);
    return detail::fd_d2(eval, t, z, Var::T, j, Var::Z, u, fd_step);
  }
  // d/dtbar_k d/dz_v h = (d/dzbar_v d/dt_k h)^H for Hermitian-valued h
  CMat dzt(const TPoint& t, const ZPoint& z, int v, int k) const {
    return dtz(t, z, k, v).adjoint();
  }
};

// h = e^{-phi} on a line, all h-derivatives composed exactly from phi's
inline MetricField metric_from_weight(RealFieldPtr phi) {
  if (!phi || !phi->value) throw std::invalid_argument("metric_from_weight: empty weight");
  MetricField h;
  h.rank = 1;
  h.m = phi->m;
  h.n = phi->n;
  h.fd_step = phi->fd_step;
  h.scalar_phi = phi;
  auto one = [](cxd x) { CMat v(1, 1); v(0, 0) = x; return v; };
  h.eval = [phi, one](const TPoint& t, const ZPoint& z) {
    return one(std::exp(-phi->value(t, z)));
  };
  h.dt_fn = [phi, one](const TPoint& t, const ZPoint& z, int j) {
    return one(-phi->dt(t, z, j) * std::exp(-phi->value(t, z)));
  };
  h.dz_fn = [phi, one](const TPoint& t, const ZPoint& z, int v) {
    return one(-phi->dz(t, z, v) * std::exp(-phi->value(t, z)));
  };
  h.dtt_fn = [phi, one](const TPoint& t, const ZPoint& z, int j, int k) {
    cxd pj = phi->dt(t, z, j), pk = phi->dt(t, z, k);
    return one((-phi->dtt(t, z, j, k) + pj * std::conj(pk)) * std::exp(-phi->value(t, z)));
  };
  h.dzz_fn = [phi, one](const TPoint& t, const ZPoint& z, int v, int u) {
    cxd pv = phi->dz(t, z, v), pu = phi->dz(t, z, u);
    return one((-phi->dzz(t, z, v, u) + pv * std::conj(pu)) * std::exp(-phi->value(t, z)));
  };
  h.dtz_fn = [phi, one](const TPoint& t, const ZPoint& z, int j, int u) {
    cxd pj = phi->dt(t, z, j), pu = phi->dz(t, z, u);
    return one((-phi->dtz(t, z, j, u) + pj * std::conj(pu)) * std::exp(-phi->value(t, z)));
  };
  return h;
}

inline MetricField constant_metric(CMat h0, int m, int n) {
  MetricField h;
  h.rank = static_cast<int>(h0.rows());
  h.m = m;
  h.n = n;
  const int r = h.rank;
  h.eval = [h0](const TPoint&, const ZPoint&) { return h0; };
  auto zr = [r](const TPoint&, const ZPoint&, int) { return CMat(CMat::Zero(r, r)); };
  auto zr2 = [r](const TPoint&, const ZPoint&, int, int) { return CMat(CMat::Zero(r, r)); };
  h.dt_fn = zr;
  h.dz_fn = zr;
  h.dtt_fn = zr2;
  h.dzz_fn = zr2;
  h.dtz_fn = zr2;
  return h;
}

// matrix-valued h given only by its evaluator; derivatives by differencing
inline MetricField metric_from_matrix_fn(
    int rank, int m, int n,
    std::function<CMat(const TPoint&, const ZPoint&)> fn, double fd_step = 1e-4) {
  MetricField h;
  h.rank = rank;
  h.m = m;
  h.n = n;
  h.fd_step = fd_step;
  h.eval = std::move(fn);
  return h;
}

// c * h for a positive constant (Ramadanov-type metric ladders)
inline MetricField scale_metric(const MetricField& h, double c) {
  if (!(c > 0)) throw std::invalid_argument("scale_metric: factor must be positive");
  MetricField g = h;
  auto e = h.eval;
  g.eval = [e, c](const TPoint& t, const ZPoint& z) { return CMat(c * e(t, z)); };
  auto wrap1 = [c](std::function<CMat(const TPoint&, const ZPoint&, int)> f)
      -> std::function<CMat(const TPoint&, const ZPoint&, int)> {
    if (!f) return nullptr;
    return [f, c](const TPoint& t, const ZPoint& z, int i) { return CMat(c * f(t, z, i)); };
  };
  auto wrap2 = [c](std::function<CMat(const TPoint&, const ZPoint&, int, int)> f)
      -> std::function<CMat(const TPoint&, const ZPoint&, int, int)> {
    if (!f) return nullptr;
    return [f, c](const TPoint& t, const ZPoint& z, int i, int j) { return CMat(c * f(t, z, i, j)); };
  };
  g.dt_fn = wrap1(h.dt_fn);
  g.dz_fn = wrap1(h.dz_fn);
  g.dtt_fn = wrap2(h.dtt_fn);
  g.dzz_fn = wrap2(h.dzz_fn);
  g.dtz_fn = wrap2(h.dtz_fn);
  if (h.scalar_phi) {
    auto phi0 = h.scalar_phi;
    auto phi = std::make_shared<RealField>(*phi0);
    const double off = -std::log(c);
    auto base = phi0->value;
    phi->value = [base, off](const TPoint& t, const ZPoint& z) { return base(t, z) + off; };
    g.scalar_phi = phi;
  }
  return g;
}

} // namespace bkl::metric
