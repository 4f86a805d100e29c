// curvature.hpp - pointwise curvature blocks, the twisted operator, and
// positivity verdicts
//
// Sign convention: blocks are oriented so that scalar weights h = e^{-phi}
// produce +(complex Hessian of phi); a plurisubharmonic weight then yields a
// PSD block, matching the positivity statements being tested.  Sections are
// expressed in the h-orthonormal frame (conjugation by h^{1/2}), which makes
// every assembled matrix literally Hermitian and leaves eigenvalues of the
// quadratic form unchanged.
#pragma once

#include "fields.hpp"
#include "twist.hpp"
#include "types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bkl::curvature {

struct CurvatureBlock {
  int m = 0, n = 1, r = 1;
  CMat assembled;          // ((m+n) r) x ((m+n) r), Hermitian after symmetrization
  double herm_error = 0.0; // max entry asymmetry before symmetrization

  int dim() const { return (m + n) * r; }
  // r x r block for holomorphic direction p, anti-holomorphic direction q
  // (directions 0..m-1 are t, m..m+n-1 are z)
  CMat block(int p, int q) const { return assembled.block(p * r, q * r, r, r); }
};

enum class Verdict { positive, semipositive, indefinite };

struct PositivityVerdict {
  double min_eig = 0.0;
  double tol = 0.0;
  Verdict verdict = Verdict::semipositive;
};

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::positive: return "positive";
    case Verdict::semipositive: return "semipositive";
    case Verdict::indefinite: return "indefinite";
  }
  return "?";
}

namespace detail {

inline std::string point_str(const TPoint& t, const ZPoint& z) {
  std::ostringstream os;
  os << "(t =";
  for (int i = 0; i < t.dim(); ++i) os << " " << t.c[i];
  os << ", z =";
  for (int i = 0; i < z.dim(); ++i) os << " " << z.c[i];
  os << ")";
  return os.str();
}

struct Frame {
  CMat sqrt, inv_sqrt;   // h^{1/2}, h^{-1/2}
  CMat inv;              // h^{-1}
};

inline Frame metric_frame(const metric::MetricField& h, const TPoint& t, const ZPoint& z) {
  const CMat hv = h(t, z);
  Eigen::SelfAdjointEigenSolver<CMat> es(hv);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("curvature: metric eigensolve failed at " + point_str(t, z));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw std::runtime_error("curvature: metric singular (condition " +
                             std::to_string(lo > 0 ? hi / lo : std::numeric_limits<double>::infinity()) +
                             ") at " + point_str(t, z));
  Frame f;
  f.sqrt = es.operatorSqrt();
  f.inv_sqrt = es.operatorInverseSqrt();
  f.inv = f.inv_sqrt * f.inv_sqrt;
  return f;
}

// derivative of h in holomorphic direction p (t-sector first, then z-sector)
inline CMat d_hol(const metric::MetricField& h, const TPoint& t, const ZPoint& z, int p) {
  return p < h.m ? h.dt(t, z, p) : h.dz(t, z, p - h.m);
}

// mixed second derivative: dbar in direction q of d in direction p
inline CMat d_mixed(const metric::MetricField& h, const TPoint& t, const ZPoint& z, int p, int q) {
  const bool pt = p < h.m, qt = q < h.m;
  if (pt && qt) return h.dtt(t, z, p, q);
  if (pt && !qt) return h.dtz(t, z, p, q - h.m);
  if (!pt && qt) return h.dzt(t, z, p - h.m, q);
  return h.dzz(t, z, p - h.m, q - h.m);
}

} // namespace detail

// full curvature Theta(h) at (t, z) over all m+n directions
inline CurvatureBlock theta_full(const metric::MetricField& h, const TPoint& t, const ZPoint& z) {
  const int m = h.m, n = h.n, r = h.rank, d = m + n;
  const detail::Frame fr = detail::metric_frame(h, t, z);
  CurvatureBlock out;
  out.m = m;
  out.n = n;
  out.r = r;
  out.assembled = CMat::Zero(d * r, d * r);
  for (int p = 0; p < d; ++p) {
    const CMat dp = detail::d_hol(h, t, z, p);
    for (int q = 0; q < d; ++q) {
      const CMat dq_bar = detail::d_hol(h, t, z, q).adjoint();  // dbar_q h for Hermitian h
      const CMat mixed = detail::d_mixed(h, t, z, p, q);
      const CMat a = fr.inv * dq_bar * fr.inv * dp - fr.inv * mixed;
      out.assembled.block(p * r, q * r, r, r) = fr.sqrt * a * fr.inv_sqrt;
    }
  }
  out.herm_error = (out.assembled - out.assembled.adjoint().eval()).cwiseAbs().maxCoeff();
  out.assembled = 0.5 * (out.assembled + out.assembled.adjoint().eval());
  return out;
}

// Theta_delta: base z-sector scaled by delta/(1+delta), assembled directly
inline CurvatureBlock theta_delta(const metric::MetricField& h, double delta,
                                  const TPoint& t, const ZPoint& z) {
  if (!(delta > 0)) throw std::invalid_argument("theta_delta: delta must be positive");
  CurvatureBlock out = theta_full(h, t, z);
  const int m = out.m, n = out.n, r = out.r;
  out.assembled.block(m * r, m * r, n * r, n * r) *= delta / (1.0 + delta);
  return out;
}

// the same operator via the subtraction form Theta(h) - (1/(1+delta)) Theta(h^[t]),
// with the fiber curvature assembled through an independently frozen metric
inline CurvatureBlock theta_delta_subtraction(const metric::MetricField& h, double delta,
                                              const TPoint& t, const ZPoint& z) {
  if (!(delta > 0)) throw std::invalid_argument("theta_delta_subtraction: delta must be positive");
  CurvatureBlock full = theta_full(h, t, z);

  metric::MetricField frozen;
  frozen.rank = h.rank;
  frozen.m = 0;
  frozen.n = h.n;
  frozen.fd_step = h.fd_step;
  auto hp = std::make_shared<metric::MetricField>(h);
  frozen.eval = [hp, t](const TPoint&, const ZPoint& zz) { return hp->eval(t, zz); };
  frozen.dz_fn = [hp, t](const TPoint&, const ZPoint& zz, int v) { return hp->dz(t, zz, v); };
  frozen.dzz_fn = [hp, t](const TPoint&, const ZPoint& zz, int v, int u) { return hp->dzz(t, zz, v, u); };
  const CurvatureBlock fiber = theta_full(frozen, TPoint{}, z);

  const int m = full.m, n = full.n, r = full.r;
  full.assembled.block(m * r, m * r, n * r, n * r) -= fiber.assembled / (1.0 + delta);
  return full;
}

// scalar twist form w_{nu mu} = Ric + 2 eta_{nu mubar} - (1+delta) eta_nu conj(eta_mu)
namespace detail {
inline CMat twist_form(const RealField& eta, double delta,
                       const std::optional<CMat>& ricci,
                       const TPoint& t, const ZPoint& z) {
  const int n = eta.n;
  CMat w = CMat::Zero(n, n);
  if (ricci) {
    if (ricci->rows() != n || ricci->cols() != n)
      throw std::invalid_argument("twist_form: Ricci form has wrong dimension");
    if ((*ricci - ricci->adjoint()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + ricci->cwiseAbs().maxCoeff()))
      throw std::invalid_argument("twist_form: Ricci form must be Hermitian");
    w = *ricci;
  }
  CVec deta(n);
  for (int v = 0; v < n; ++v) deta[v] = eta.dz(t, z, v);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u)
      w(v, u) += 2.0 * eta.dzz(t, z, v, u) - (1.0 + delta) * deta[v] * std::conj(deta[u]);
  return 0.5 * (w + w.adjoint().eval());
}
} // namespace detail

// twisted operator: Theta_delta plus the (delta/(1+delta)) scalar twist on the base sector
inline CurvatureBlock xi_delta_eta(const metric::MetricField& h, double delta,
                                   const RealField& eta,
                                   const std::optional<CMat>& ricci,
                                   const TPoint& t, const ZPoint& z) {
  if (eta.n != h.n) throw std::invalid_argument("xi_delta_eta: eta/base dimension mismatch");
  CurvatureBlock out = theta_delta(h, delta, t, z);
  const CMat w = detail::twist_form(eta, delta, ricci, t, z);
  const int m = out.m, n = out.n, r = out.r;
  const double factor = delta / (1.0 + delta);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u)
      out.assembled.block((m + v) * r, (m + u) * r, r, r) += factor * w(v, u) * CMat::Identity(r, r);
  return out;
}

inline RealField zero_eta(int n) {
  RealField eta;
  eta.m = 0;
  eta.n = n;
  eta.value = [](const TPoint&, const ZPoint&) { return 0.0; };
  eta.dt_fn = [](const TPoint&, const ZPoint&, int) { return cxd(0); };
  eta.dz_fn = [](const TPoint&, const ZPoint&, int) { return cxd(0); };
  eta.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  eta.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  eta.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return eta;
}

// max-norm gap between 2 ddbar eta - (1+delta) deta ^ dbareta and its
// exponential rewrite (4 e^{(1+delta)eta/2}/(1+delta)) ddbar(-e^{-(1+delta)eta/2}),
// the two sides evaluated through independent algebra
inline double rewrite_identity_check(const RealField& eta, double delta,
                                     const TPoint& t, const ZPoint& z) {
  const int n = eta.n;
  CVec deta(n);
  for (int v = 0; v < n; ++v) deta[v] = eta.dz(t, z, v);
  const double ev = eta.value(t, z);
  const double c = 0.5 * (1.0 + delta);
  double worst = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const cxd lhs = 2.0 * eta.dzz(t, z, v, u) - (1.0 + delta) * deta[v] * std::conj(deta[u]);
      // g = -e^{-c eta}: g_nu = c e^{-c eta} eta_nu,
      // g_{nu mubar} = c e^{-c eta} (eta_{nu mubar} - c eta_nu conj(eta_mu))
      const cxd g2 = c * std::exp(-c * ev) *
                     (eta.dzz(t, z, v, u) - c * deta[v] * std::conj(deta[u]));
      const cxd rhs = (4.0 * std::exp(c * ev) / (1.0 + delta)) * g2;
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

// eigenvalue classification with the scale-aware default tolerance
inline PositivityVerdict griffiths_check(const CurvatureBlock& b, double tol = -1.0) {
  Eigen::SelfAdjointEigenSolver<CMat> es(b.assembled, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("griffiths_check: eigensolve failed (non-Hermitian input?)");
  PositivityVerdict v;
  v.min_eig = es.eigenvalues().minCoeff();
  const double spectral = std::max(std::abs(es.eigenvalues().minCoeff()),
                                   std::abs(es.eigenvalues().maxCoeff()));
  v.tol = tol >= 0 ? tol : 1e-9 * (1.0 + spectral);
  if (v.min_eig > v.tol)
    v.verdict = Verdict::positive;
  else if (v.min_eig >= -v.tol)
    v.verdict = Verdict::semipositive;
  else
    v.verdict = Verdict::indefinite;
  return v;
}

// the base-positivity hypothesis on the fiber: base curvature of h^[t] plus
// the full (unscaled) twist, contracted as an (n r) x (n r) quadratic form
inline PositivityVerdict nakano_base_check(const metric::MetricField& h,
                                           const RealField& eta, double delta,
                                           const std::optional<CMat>& ricci,
                                           const TPoint& t, const ZPoint& z,
                                           double tol = -1.0) {
  const int n = h.n, r = h.rank;
  const CurvatureBlock full = theta_full(h, t, z);
  const CMat w = detail::twist_form(eta, delta, ricci, t, z);
  CMat nak = full.assembled.block(h.m * r, h.m * r, n * r, n * r);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u)
      nak.block(v * r, u * r, r, r) += w(v, u) * CMat::Identity(r, r);
  CurvatureBlock base;
  base.m = 0;
  base.n = n;
  base.r = r;
  base.assembled = 0.5 * (nak + nak.adjoint().eval());
  base.herm_error = (nak - nak.adjoint().eval()).cwiseAbs().maxCoeff();
  return griffiths_check(base, tol);
}

// M^{eta,rho}_j at z: the fiber form whose nonnegativity the twist construction forces
inline CurvatureBlock m_matrix(const RealField& rho, const twist::TwistParams& params,
                               const RealField& eta, const TPoint& t, const ZPoint& z) {
  const int n = rho.n;
  const double rv = rho.value(t, z);
  if (rv < -1.0 || rv >= 0.0)
    throw std::domain_error("m_matrix: defining function value " + std::to_string(rv) +
                            " outside [-1, 0) at " + detail::point_str(t, z));
  const twist::SmoothMax s = twist::smooth_max_zero(rv, params.j);
  const double delta = params.delta;
  CVec drho(n), deta(n);
  for (int v = 0; v < n; ++v) {
    drho[v] = rho.dz(t, z, v);
    deta[v] = eta.dz(t, z, v);
  }
  CMat mm(n, n);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const cxd rho_vu = rho.dzz(t, z, v, u);
      const cxd cut = s.d1 * rho_vu + s.d2 * drho[v] * std::conj(drho[u]);
      const cxd tw = 2.0 * eta.dzz(t, z, v, u) -
                     (1.0 + delta) * deta[v] * std::conj(deta[u]) - rho_vu;
      mm(v, u) = -cut / (1.0 + delta) + delta / (1.0 + delta) * tw;
    }
  }
  CurvatureBlock out;
  out.m = 0;
  out.n = n;
  out.r = 1;
  out.herm_error = (mm - mm.adjoint().eval()).cwiseAbs().maxCoeff();
  out.assembled = 0.5 * (mm + mm.adjoint().eval());
  return out;
}

// the proof's pointwise lower bound for the M matrix:
// (1/(1+delta)) (sqrt(delta j^3/(1+delta)) tan(k(rho+c1 delta)) - (j+delta)) ddbar rho
inline CMat m_matrix_lower_bound(const RealField& rho, const twist::TwistParams& params,
                                 const TPoint& t, const ZPoint& z) {
  const int n = rho.n;
  const double rv = rho.value(t, z);
  const double j3 = static_cast<double>(params.j) * params.j * params.j;
  const double coeff = (std::sqrt(params.delta * j3 / (1.0 + params.delta)) *
                            std::tan(params.arg(rv)) -
                        (params.j + params.delta)) /
                       (1.0 + params.delta);
  CMat hess(n, n);
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u)
      hess(v, u) = rho.dzz(t, z, v, u);
  hess = 0.5 * (hess + hess.adjoint().eval());
  return coeff * hess;
}

} // namespace bkl::curvature
