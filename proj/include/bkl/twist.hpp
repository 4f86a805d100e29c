// twist.hpp - cutoff smoothing rho_j, twisted weights h_j = h e^{-rho_j}, and
// the explicit eta = f(rho) construction with its delta/C1 constants
//
// rho_j(s) = (1/j) log(1 + e^{j^2 s}) flattens to ~0 for s < 0 and to ~j*s for
// s > 0.  Evaluation goes through the log1p branch appropriate to the sign of
// j^2 s, so nothing overflows no matter how deep the probe point sits.
#pragma once

#include "fields.hpp"
#include "types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bkl::twist {

// value of rho_j at one rho, plus d rho_j / d rho and the second derivative
// (the chain-rule prefactors j*sigma and j^3*sigma*(1-sigma))
struct SmoothMax {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline SmoothMax smooth_max_zero(double rho, int j) {
  if (j < 4) throw std::invalid_argument("smooth_max_zero: cutoff index must be >= 4");
  const double x = static_cast<double>(j) * j * rho;
  SmoothMax s;
  double sigma;
  if (x > 30.0) {
    s.value = j * rho + std::log1p(std::exp(-x)) / j;
    sigma = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double ex = std::exp(x);
    s.value = std::log1p(ex) / j;
    sigma = ex / (1.0 + ex);
  }
  s.d1 = j * sigma;
  s.d2 = static_cast<double>(j) * j * j * sigma * (1.0 - sigma);
  return s;
}

// a + b with every derivative slot summed through the accessors
inline RealField add_fields(const RealField& a, const RealField& b) {
  if (a.n != b.n) throw std::invalid_argument("add_fields: base dimension mismatch");
  auto pa = std::make_shared<RealField>(a);
  auto pb = std::make_shared<RealField>(b);
  RealField s;
  s.m = std::max(a.m, b.m);
  s.n = a.n;
  s.fd_step = std::min(a.fd_step, b.fd_step);
  s.value = [pa, pb](const TPoint& t, const ZPoint& z) { return pa->value(t, z) + pb->value(t, z); };
  s.dt_fn = [pa, pb](const TPoint& t, const ZPoint& z, int j) { return pa->dt(t, z, j) + pb->dt(t, z, j); };
  s.dz_fn = [pa, pb](const TPoint& t, const ZPoint& z, int v) { return pa->dz(t, z, v) + pb->dz(t, z, v); };
  s.dtt_fn = [pa, pb](const TPoint& t, const ZPoint& z, int j, int k) { return pa->dtt(t, z, j, k) + pb->dtt(t, z, j, k); };
  s.dzz_fn = [pa, pb](const TPoint& t, const ZPoint& z, int v, int u) { return pa->dzz(t, z, v, u) + pb->dzz(t, z, v, u); };
  s.dtz_fn = [pa, pb](const TPoint& t, const ZPoint& z, int j, int u) { return pa->dtz(t, z, j, u) + pb->dtz(t, z, j, u); };
  return s;
}

// rho_j composed with the defining function, derivatives by chain rule:
// (rho_j)_a = d1 rho_a, (rho_j)_{a bbar} = d1 rho_{a bbar} + d2 rho_a conj(rho_b)
inline RealField compose_cutoff(RealFieldPtr rho, int j) {
  if (!rho || !rho->value) throw std::invalid_argument("compose_cutoff: empty defining function");
  smooth_max_zero(0.0, j);  // validates j
  RealField c;
  c.m = rho->m;
  c.n = rho->n;
  c.fd_step = rho->fd_step;
  c.value = [rho, j](const TPoint& t, const ZPoint& z) {
    return smooth_max_zero(rho->value(t, z), j).value;
  };
  c.dt_fn = [rho, j](const TPoint& t, const ZPoint& z, int p) {
    return smooth_max_zero(rho->value(t, z), j).d1 * rho->dt(t, z, p);
  };
  c.dz_fn = [rho, j](const TPoint& t, const ZPoint& z, int v) {
    return smooth_max_zero(rho->value(t, z), j).d1 * rho->dz(t, z, v);
  };
  c.dtt_fn = [rho, j](const TPoint& t, const ZPoint& z, int p, int q) {
    const SmoothMax s = smooth_max_zero(rho->value(t, z), j);
    return s.d1 * rho->dtt(t, z, p, q) + s.d2 * rho->dt(t, z, p) * std::conj(rho->dt(t, z, q));
  };
  c.dzz_fn = [rho, j](const TPoint& t, const ZPoint& z, int v, int u) {
    const SmoothMax s = smooth_max_zero(rho->value(t, z), j);
    return s.d1 * rho->dzz(t, z, v, u) + s.d2 * rho->dz(t, z, v) * std::conj(rho->dz(t, z, u));
  };
  c.dtz_fn = [rho, j](const TPoint& t, const ZPoint& z, int p, int u) {
    const SmoothMax s = smooth_max_zero(rho->value(t, z), j);
    return s.d1 * rho->dtz(t, z, p, u) + s.d2 * rho->dt(t, z, p) * std::conj(rho->dz(t, z, u));
  };
  return c;
}

// h_j = h e^{-rho_j}.  Scalar weights stay scalar (phi + rho_j); matrix-valued
// h gets the product rule on its derivative closures.
inline metric::MetricField twisted_weight(const metric::MetricField& h, RealFieldPtr rho, int j) {
  const RealField cut = compose_cutoff(rho, j);
  if (h.scalar_phi)
    return metric::metric_from_weight(field_ptr(add_fields(*h.scalar_phi, cut)));

  auto hp = std::make_shared<metric::MetricField>(h);
  auto c = std::make_shared<RealField>(cut);
  metric::MetricField g;
  g.rank = h.rank;
  g.m = std::max(h.m, cut.m);
  g.n = h.n;
  g.fd_step = h.fd_step;
  g.eval = [hp, c](const TPoint& t, const ZPoint& z) {
    return CMat(std::exp(-c->value(t, z)) * hp->eval(t, z));
  };
  g.dt_fn = [hp, c](const TPoint& t, const ZPoint& z, int p) {
    const double e = std::exp(-c->value(t, z));
    return CMat(e * (hp->dt(t, z, p) - c->dt(t, z, p) * hp->eval(t, z)));
  };
  g.dz_fn = [hp, c](const TPoint& t, const ZPoint& z, int v) {
    const double e = std::exp(-c->value(t, z));
    return CMat(e * (hp->dz(t, z, v) - c->dz(t, z, v) * hp->eval(t, z)));
  };
  // dbar_q d_p (h e^{-c}) with c real:
  //   e^{-c} [ h_{p qbar} - conj(c_q) h_p - c_p h_{qbar} + (c_p conj(c_q) - c_{p qbar}) h ]
  auto second = [hp, c](const TPoint& t, const ZPoint& z,
                        const CMat& hpq, const CMat& hp1, const CMat& hq1,
                        cxd cp, cxd cq, cxd cpq) {
    const double e = std::exp(-c->value(t, z));
    return CMat(e * (hpq - std::conj(cq) * hp1 - cp * hq1 +
                     (cp * std::conj(cq) - cpq) * hp->eval(t, z)));
  };
  g.dtt_fn = [hp, c, second](const TPoint& t, const ZPoint& z, int p, int q) {
    return second(t, z, hp->dtt(t, z, p, q), hp->dt(t, z, p), hp->dt(t, z, q).adjoint(),
                  c->dt(t, z, p), c->dt(t, z, q), c->dtt(t, z, p, q));
  };
  g.dzz_fn = [hp, c, second](const TPoint& t, const ZPoint& z, int v, int u) {
    return second(t, z, hp->dzz(t, z, v, u), hp->dz(t, z, v), hp->dz(t, z, u).adjoint(),
                  c->dz(t, z, v), c->dz(t, z, u), c->dzz(t, z, v, u));
  };
  g.dtz_fn = [hp, c, second](const TPoint& t, const ZPoint& z, int p, int u) {
    return second(t, z, hp->dtz(t, z, p, u), hp->dt(t, z, p), hp->dz(t, z, u).adjoint(),
                  c->dt(t, z, p), c->dz(t, z, u), c->dtz(t, z, p, u));
  };
  return g;
}

// ---------------- the eta = f(rho) construction ----------------

struct TwistParams {
  int j = 4;
  double delta = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;   // free constant, fixed to 0
  double k = 0.0;    // tan-argument scale sqrt(1+delta) j^{3/2} / (4 sqrt(delta))

  double arg(double rho) const { return k * (rho + c1 * delta); }
  // supremum of the rho band where cos(arg) stays positive
  double rho_sup() const { return pi / (4.0 * k) - 1.0; }
};

// sqrt(delta j^3/(1+delta)) - (j+delta); positive iff delta is workable for j
inline double delta_margin(int j, double delta) {
  const double j3 = static_cast<double>(j) * j * j;
  return std::sqrt(delta * j3 / (1.0 + delta)) - (j + delta);
}

inline TwistParams make_twist_params(int j, double delta) {
  if (j < 4) throw std::invalid_argument("make_twist_params: index must be >= 4");
  if (!(delta > 0)) throw std::invalid_argument("make_twist_params: delta must be positive");
  if (!(delta_margin(j, delta) > 0))
    throw std::invalid_argument("make_twist_params: delta " + std::to_string(delta) +
                                " fails sqrt(delta j^3/(1+delta)) > j+delta for j = " +
                                std::to_string(j));
  TwistParams p;
  p.j = j;
  p.delta = delta;
  p.k = std::sqrt(1.0 + delta) * std::pow(static_cast<double>(j), 1.5) / (4.0 * std::sqrt(delta));
  // chosen so the tan argument equals pi/4 exactly at rho = -1
  p.c1 = (pi / (4.0 * p.k) + 1.0) / delta;
  p.c2 = 0.0;
  return p;
}

// smallest workable delta: scan the power-of-two grid upward for the first
// sign change of the margin, then bisect onto the boundary and keep the
// passing endpoint
inline TwistParams choose_twist_constants(int j) {
  if (j < 4) throw std::invalid_argument("choose_twist_constants: index must be >= 4");
  double lo = 0.0, hi = 0.0;
  double prev = std::pow(2.0, -6);
  for (int e = -6; e <= 6; ++e) {
    const double d = std::pow(2.0, e);
    if (delta_margin(j, d) > 0.0) {
      hi = d;
      lo = (e == -6) ? 0.0 : prev;
      break;
    }
    prev = d;
  }
  if (hi == 0.0)
    throw std::logic_error("choose_twist_constants: no workable delta on the grid (unreachable for j >= 4)");
  if (lo > 0.0) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (delta_margin(j, mid) > 0.0 ? hi : lo) = mid;
    }
  }
  return make_twist_params(j, hi);
}

// f(rho) = c2 - (2/(1+delta)) log cos(k (rho + c1 delta)) and its rho-derivatives
struct EtaJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline EtaJet twist_eta(double rho, const TwistParams& p) {
  if (rho < -1.0)
    throw std::domain_error("twist_eta: defining function below -1 (rho = " +
                            std::to_string(rho) + "); inputs must be normalized to [-1, 0)");
  const double a = p.arg(rho);
  if (!(a < pi / 2.0))
    throw std::domain_error("twist_eta: tan argument " + std::to_string(a) +
                            " >= pi/2 at rho = " + std::to_string(rho) +
                            " (admissible band is rho < " + std::to_string(p.rho_sup()) + ")");
  const double c = std::cos(a);
  EtaJet e;
  e.value = p.c2 - (2.0 / (1.0 + p.delta)) * std::log(c);
  e.d1 = (2.0 * p.k / (1.0 + p.delta)) * std::tan(a);
  e.d2 = (2.0 * p.k * p.k / (1.0 + p.delta)) / (c * c);
  return e;
}

// 2 delta f'' - delta(1+delta) f'^2 - j^3/4, identically zero in exact arithmetic
inline double ode_residual(double rho, const TwistParams& p) {
  const EtaJet e = twist_eta(rho, p);
  const double j3 = static_cast<double>(p.j) * p.j * p.j;
  return 2.0 * p.delta * e.d2 - p.delta * (1.0 + p.delta) * e.d1 * e.d1 - j3 / 4.0;
}

// eta = f(rho) as a field, chain-ruled like compose_cutoff
inline RealField make_eta_field(RealFieldPtr rho, const TwistParams& p) {
  if (!rho || !rho->value) throw std::invalid_argument("make_eta_field: empty defining function");
  RealField eta;
  eta.m = rho->m;
  eta.n = rho->n;
  eta.fd_step = rho->fd_step;
  eta.value = [rho, p](const TPoint& t, const ZPoint& z) {
    return twist_eta(rho->value(t, z), p).value;
  };
  eta.dt_fn = [rho, p](const TPoint& t, const ZPoint& z, int q) {
    return twist_eta(rho->value(t, z), p).d1 * rho->dt(t, z, q);
  };
  eta.dz_fn = [rho, p](const TPoint& t, const ZPoint& z, int v) {
    return twist_eta(rho->value(t, z), p).d1 * rho->dz(t, z, v);
  };
  eta.dtt_fn = [rho, p](const TPoint& t, const ZPoint& z, int q, int s) {
    const EtaJet e = twist_eta(rho->value(t, z), p);
    return e.d1 * rho->dtt(t, z, q, s) + e.d2 * rho->dt(t, z, q) * std::conj(rho->dt(t, z, s));
  };
  eta.dzz_fn = [rho, p](const TPoint& t, const ZPoint& z, int v, int u) {
    const EtaJet e = twist_eta(rho->value(t, z), p);
    return e.d1 * rho->dzz(t, z, v, u) + e.d2 * rho->dz(t, z, v) * std::conj(rho->dz(t, z, u));
  };
  eta.dtz_fn = [rho, p](const TPoint& t, const ZPoint& z, int q, int u) {
    const EtaJet e = twist_eta(rho->value(t, z), p);
    return e.d1 * rho->dtz(t, z, q, u) + e.d2 * rho->dt(t, z, q) * std::conj(rho->dz(t, z, u));
  };
  return eta;
}

} // namespace bkl::twist
