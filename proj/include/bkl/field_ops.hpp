// field_ops.hpp - operators of the field of truncated Bergman spaces over the
// parameter: Chern connection coefficients, the curvature of the subbundle of
// polynomial sections inside the ambient node space, the node-space Bergman
// projection, and the finite-difference Hessian of t -> (u(t), u(t))_t
//
// Everything lives on one truncated model per parameter point.  The ambient
// space is the quadrature node space with the discrete inner product
// <F1, F2> = sum_q w_q F2(z_q)^* h(t, z_q) F1(z_q); the model span embeds by
// node evaluation, and by construction the Gram matrix is exactly the
// restriction of that inner product.  Weight derivatives in t come from the
// MetricField slots, so no stencil of models is needed for the connection or
// the curvature; only t_u_hessian differentiates across neighbouring models.
//
// Supported families keep the fiber domain fixed while t moves (product
// families).  A t-dependent sublevel domain changes the node set with t and
// is rejected; those families are handled through the cutoff-weight
// comparisons in the variation module instead.
#pragma once

#include "bergman.hpp"
#include "fields.hpp"
#include "geometry.hpp"
#include "types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkl::field_ops {

enum class OperatorKind { connection, projection, curvature };

inline const char* kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::connection: return "connection";
    case OperatorKind::projection: return "projection";
    default: return "curvature";
  }
}

// matrix of an operator together with the parameter directions it involves;
// connection/curvature act on model coefficients, projection on node values
struct FieldOperator {
  OperatorKind kind = OperatorKind::connection;
  CMat matrix;
  int j = 0, k = 0;
};

// one truncated model per parameter point, all built with the same recipe
struct ModelFamily {
  geometry::DomainSpec domain;
  metric::MetricField weight;
  int degree = 12;
  int quad_order = 26;
  std::uint64_t seed = 1;

  bergman::BergmanModel at(const TPoint& t) const {
    return bergman::build_model(geometry::fiber_domain(domain, t), weight, t,
                                degree, quad_order, seed);
  }
};

namespace detail {

inline void require_supported(const bergman::BergmanModel& model, const char* who) {
  if (model.weight.m < 1)
    throw std::invalid_argument(std::string(who) + ": weight has no parameter directions");
  if (model.domain.kind == geometry::DomainKind::sublevel && model.domain.rho &&
      model.domain.rho->m > 0)
    throw std::invalid_argument(std::string(who) +
                                ": t-dependent fiber domain is unsupported; use the "
                                "cutoff-weight comparisons instead");
  if (model.empty())
    throw std::invalid_argument(std::string(who) + ": model has dimension zero");
}

inline void require_direction(const bergman::BergmanModel& model, int j, const char* who) {
  if (j < 0 || j >= model.weight.m)
    throw std::invalid_argument(std::string(who) + ": parameter direction out of range");
}

// sum_q w_q conj(z_q^alpha) z_q^beta K(z_q)_{il} for a node-wise r x r kernel;
// same index orientation as the Gram assembly, K = h reproduces G
template <class Kern>
CMat assemble_form(const bergman::BergmanModel& model, Kern&& kern) {
  const int na = static_cast<int>(model.exponents.size());
  const int r = model.r;
  CMat g = CMat::Zero(model.dim(), model.dim());
  for (int q = 0; q < model.quad.node_count(); ++q) {
    const ZPoint& zq = model.quad.nodes[q];
    const double wq = model.quad.weights[q];
    const CVec b = model.monomials(zq);
    const CMat kv = kern(zq);
    if (r == 1) {
      g.noalias() += (wq * kv(0, 0)) * (b.conjugate() * b.transpose());
    } else {
      for (int a = 0; a < na; ++a)
        for (int bb = 0; bb < na; ++bb)
          g.block(a * r, bb * r, r, r) += (wq * std::conj(b[a]) * b[bb]) * kv;
    }
  }
  return g;
}

// X = G^{-1} B through the pivoted factorization, column by column
inline CMat solve_columns(const bergman::BergmanModel& model, const CMat& b) {
  CMat x(b.rows(), b.cols());
  for (int c = 0; c < b.cols(); ++c)
    x.col(c) = bergman::solve_gram(model.factor, CVec(b.col(c)));
  return x;
}

inline CMat weight_inverse_at(const bergman::BergmanModel& model, const ZPoint& zq) {
  const CMat hv = model.weight.eval(model.t, zq);
  if (model.r == 1) {
    CMat inv(1, 1);
    inv(0, 0) = 1.0 / hv(0, 0);
    return inv;
  }
  return hv.inverse();
}

} // namespace detail

// entrywise d/dt_j of the Gram matrix, assembled from the weight slot
inline CMat gram_dt(const bergman::BergmanModel& model, int j) {
  detail::require_supported(model, "gram_dt");
  detail::require_direction(model, j, "gram_dt");
  return detail::assemble_form(
      model, [&](const ZPoint& zq) { return model.weight.dt(model.t, zq, j); });
}

// entrywise d/dt_j dbar/dt_k of the Gram matrix
inline CMat gram_dtt(const bergman::BergmanModel& model, int j, int k) {
  detail::require_supported(model, "gram_dtt");
  detail::require_direction(model, j, "gram_dtt");
  detail::require_direction(model, k, "gram_dtt");
  return detail::assemble_form(
      model, [&](const ZPoint& zq) { return model.weight.dtt(model.t, zq, j, k); });
}

// pairing <g_j u, g_k v> of the connection multipliers g_j = h^{-1} d_{t_j}h:
// node kernel (d_{t_k}h)^* h^{-1} (d_{t_j}h)
inline CMat connection_pairing_form(const bergman::BergmanModel& model, int j, int k) {
  detail::require_supported(model, "connection_pairing_form");
  detail::require_direction(model, j, "connection_pairing_form");
  detail::require_direction(model, k, "connection_pairing_form");
  return detail::assemble_form(model, [&](const ZPoint& zq) {
    const CMat dj = model.weight.dt(model.t, zq, j);
    const CMat dk = model.weight.dt(model.t, zq, k);
    return CMat(dk.adjoint() * detail::weight_inverse_at(model, zq) * dj);
  });
}

// quadratic form of the ambient curvature Theta^F_{j kbar}, a multiplication
// operator: node kernel h A_{jk} = (d_k h)^* h^{-1} (d_j h) - dbar_k d_j h
inline CMat theta_f_form(const bergman::BergmanModel& model, int j, int k) {
  return connection_pairing_form(model, j, k) - gram_dtt(model, j, k);
}

// connection coefficient in direction j: the matrix of P_t composed with
// multiplication by g_j = h^{-1} d_{t_j} h, i.e. G^{-1} d_{t_j}G.  This is the
// metric-compatible sign: d_{t_j}(u, v) = (du/dt_j + g_j u, v) + (u, dbar v),
// and for h = e^{-phi} the multiplier is -d_{t_j}phi.  Acts on coefficients;
// the d/dt_j term of the covariant derivative is zero on sections with
// t-independent coefficients.
inline FieldOperator field_connection(const bergman::BergmanModel& model, int j) {
  detail::require_supported(model, "field_connection");
  detail::require_direction(model, j, "field_connection");
  FieldOperator op;
  op.kind = OperatorKind::connection;
  op.j = j;
  op.matrix = detail::solve_columns(model, gram_dt(model, j));
  return op;
}

// quadratic form of the subbundle curvature Theta^E_{j kbar}: the ambient
// form minus the second-fundamental-form correction
//   <P_perp(g_j u), P_perp(g_k v)> = N_kj - S_k^* G^{-1} S_j
inline CMat curvature_form(const bergman::BergmanModel& model, int j, int k) {
  detail::require_supported(model, "curvature_form");
  detail::require_direction(model, j, "curvature_form");
  detail::require_direction(model, k, "curvature_form");
  const CMat n_kj = connection_pairing_form(model, j, k);
  const CMat sj = gram_dt(model, j);
  const CMat sk = gram_dt(model, k);
  const CMat theta_f = n_kj - gram_dtt(model, j, k);
  const CMat correction = n_kj - sk.adjoint() * detail::solve_columns(model, sj);
  CMat form = theta_f - correction;
  form = 0.5 * (form + form.adjoint().eval());
  return form;
}

// operator of Theta^E_{j kbar} on coefficients: G^{-1} curvature_form
inline FieldOperator field_curvature(const bergman::BergmanModel& model, int j, int k) {
  FieldOperator op;
  op.kind = OperatorKind::curvature;
  op.j = j;
  op.k = k;
  op.matrix = detail::solve_columns(model, curvature_form(model, j, k));
  return op;
}

// node evaluation of the basis: (Q r) x dim, rows grouped by node
inline CMat node_eval_matrix(const bergman::BergmanModel& model) {
  const int na = static_cast<int>(model.exponents.size());
  const int r = model.r;
  CMat v = CMat::Zero(model.quad.node_count() * r, model.dim());
  for (int q = 0; q < model.quad.node_count(); ++q) {
    const CVec b = model.monomials(model.quad.nodes[q]);
    for (int a = 0; a < na; ++a)
      for (int i = 0; i < r; ++i) v(q * r + i, model.flat(a, i)) = b[a];
  }
  return v;
}

// block-diagonal matrix of the discrete ambient inner product, w_q h(t, z_q)
inline CMat node_weight_matrix(const bergman::BergmanModel& model) {
  const int r = model.r;
  CMat w = CMat::Zero(model.quad.node_count() * r, model.quad.node_count() * r);
  for (int q = 0; q < model.quad.node_count(); ++q)
    w.block(q * r, q * r, r, r) =
        model.quad.weights[q] * model.weight.eval(model.t, model.quad.nodes[q]);
  return w;
}

// Bergman projection of the node space onto the model span: P = V G^{-1} V^* W.
// Idempotent because V^* W V is the Gram matrix, and self-adjoint for the
// discrete inner product (W P is Hermitian).
inline FieldOperator field_projection(const bergman::BergmanModel& model) {
  detail::require_supported(model, "field_projection");
  const CMat v = node_eval_matrix(model);
  const CMat rhs = v.adjoint() * node_weight_matrix(model);
  FieldOperator op;
  op.kind = OperatorKind::projection;
  op.matrix = v * detail::solve_columns(model, rhs);
  return op;
}

// ||P_perp (du + g_j u)||^2 in the ambient node space, for a section with
// coefficients u and coefficient derivative du in direction j
inline double perp_gradient_norm2(const bergman::BergmanModel& model, const CVec& u,
                                  const CVec& du, int j) {
  detail::require_supported(model, "perp_gradient_norm2");
  detail::require_direction(model, j, "perp_gradient_norm2");
  if (u.size() != model.dim() || du.size() != model.dim())
    throw std::invalid_argument("perp_gradient_norm2: coefficient size mismatch");
  const int na = static_cast<int>(model.exponents.size());
  const int r = model.r;
  double nrm2 = 0.0;
  CVec c = CVec::Zero(model.dim());
  for (int q = 0; q < model.quad.node_count(); ++q) {
    const ZPoint& zq = model.quad.nodes[q];
    const double wq = model.quad.weights[q];
    const CVec b = model.monomials(zq);
    CVec uval = CVec::Zero(r), duval = CVec::Zero(r);
    for (int a = 0; a < na; ++a)
      for (int i = 0; i < r; ++i) {
        uval[i] += u[model.flat(a, i)] * b[a];
        duval[i] += du[model.flat(a, i)] * b[a];
      }
    const CMat hv = model.weight.eval(model.t, zq);
    const CMat gj = detail::weight_inverse_at(model, zq) * model.weight.dt(model.t, zq, j);
    const CVec val = duval + gj * uval;
    const CVec hval = hv * val;
    nrm2 += wq * std::real(val.dot(hval));
    for (int a = 0; a < na; ++a)
      for (int i = 0; i < r; ++i) c[model.flat(a, i)] += wq * std::conj(b[a]) * hval[i];
  }
  return nrm2 - bergman::inv_quad_form(model.factor, c);
}

// coefficient family holomorphic in t (each u_k(t) a coefficient vector)
using CoeffFamily = std::function<CVec(const TPoint&)>;

struct HessianReport {
  CMat hessian;                     // m x m entries d_j dbar_k (-T_u) at t0
  double comparison = 0.0;          // sum_k ||u_k(t0)||^2 in the center model
  double richardson_gap = 0.0;      // step vs step/2 disagreement, max abs
  bool noisy = false;               // gap beyond tolerance: step too small or too rough
  double constraint_residual = 0.0; // sum_{j,k} ||covariant d_{t_j} u_k||, center model
};

// finite-difference complex Hessian of T_u(t) = sum_k (u_k(t), u_k(t))_t with
// Richardson control; rebuilt models share the recipe of the family
inline HessianReport t_u_hessian(const ModelFamily& family,
                                 const std::vector<CoeffFamily>& sections,
                                 const TPoint& t0, double step = 1e-3) {
  if (sections.empty()) throw std::invalid_argument("t_u_hessian: no sections");
  if (!(step > 0)) throw std::invalid_argument("t_u_hessian: step must be positive");
  const int m = family.weight.m;
  if (m < 1) throw std::invalid_argument("t_u_hessian: weight has no parameter directions");
  if (t0.dim() != m) throw std::invalid_argument("t_u_hessian: parameter dimension mismatch");

  const bergman::BergmanModel center = family.at(t0);
  detail::require_supported(center, "t_u_hessian");
  const int dim = center.dim();

  auto neg_t = [&](const TPoint& t, const ZPoint&) -> cxd {
    const bergman::BergmanModel model = family.at(t);
    double total = 0.0;
    for (const auto& sec : sections) {
      const CVec u = sec(t);
      if (u.size() != dim)
        throw std::invalid_argument("t_u_hessian: section size mismatch");
      total += std::real(u.dot(model.gram * u));
    }
    return cxd(-total, 0.0);
  };
  const ZPoint zdummy = ZPoint::zero(1);

  auto hess_at = [&](double h) {
    CMat out(m, m);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        out(j, k) = bkl::detail::fd_d2(neg_t, t0, zdummy, Var::T, j, Var::T, k, h);
    return out;
  };
  const CMat coarse = hess_at(step);
  const CMat fine = hess_at(0.5 * step);

  HessianReport rep;
  rep.richardson_gap = (fine - coarse).cwiseAbs().maxCoeff();
  // central differences are O(h^2): the extrapolation cancels the leading term
  CMat h = (4.0 * fine - coarse) / 3.0;
  h = 0.5 * (h + h.adjoint().eval());
  rep.hessian = h;
  rep.noisy = rep.richardson_gap > 1e-3 * (1.0 + h.cwiseAbs().maxCoeff());

  for (const auto& sec : sections)
    rep.comparison += std::real(CVec(sec(t0)).dot(center.gram * CVec(sec(t0))));

  // residual of the holomorphy constraint covariant d_{t_j} u_k = 0; reported,
  // not enforced, since it only holds exactly at special weights
  double res2 = 0.0;
  for (int j = 0; j < m; ++j) {
    const FieldOperator gamma = field_connection(center, j);
    for (const auto& sec : sections) {
      auto wrapped = [&](const TPoint& t, const ZPoint&) { return CVec(sec(t)); };
      const CVec du = bkl::detail::fd_d1(wrapped, t0, zdummy, Var::T, j, step);
      const CVec cov = du + gamma.matrix * CVec(sec(t0));
      res2 += std::real(cov.dot(center.gram * cov));
    }
  }
  rep.constraint_residual = std::sqrt(std::max(res2, 0.0));
  return rep;
}

} // namespace bkl::field_ops
