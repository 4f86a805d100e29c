// bergman.hpp - truncated weighted Bergman spaces: Gram assembly over
// quadrature, pivoted Cholesky with direction dropping, kernel evaluation,
// dual norms of evaluation/measure functionals, and the extremal check
//
// The basis is monomials z^alpha (|alpha| <= degree) times bundle frame
// directions; nothing is orthonormalized, every quantity is a quadratic form
// in the Gram matrix G or its pseudo-inverse on the kept directions.  The
// factorization works on the diagonally equilibrated Gram (unit diagonal), so
// the pivot threshold measures near-linear-dependence of directions rather
// than their raw scale: a monomial Gram on a large disc has harmless
// column-scaling spread of many orders of magnitude, and equilibration keeps
// the threshold 1e-13 * trace/dim meaningful for it.
#pragma once

#include "fields.hpp"
#include "geometry.hpp"
#include "types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bkl::bergman {

// all multi-indices with |alpha| <= degree in graded lexicographic order
inline std::vector<std::vector<int>> multi_indices(int n, int degree) {
  if (n < 1) throw std::invalid_argument("multi_indices: need n >= 1");
  if (degree < 0) throw std::invalid_argument("multi_indices: need degree >= 0");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  auto rec = [&](auto&& self, int pos, int rem) -> void {
    if (pos == n - 1) {
      cur[pos] = rem;
      out.push_back(cur);
      return;
    }
    for (int k = rem; k >= 0; --k) {
      cur[pos] = k;
      self(self, pos + 1, rem - k);
    }
  };
  for (int g = 0; g <= degree; ++g) rec(rec, 0, g);
  return out;
}

inline cxd monomial(const ZPoint& z, const std::vector<int>& alpha) {
  cxd v(1.0);
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (int k = 0; k < alpha[i]; ++k) v *= z.c[i];
  return v;
}

// pivoted Cholesky of the equilibrated Gram; directions whose Schur pivot
// falls below 1e-13 * trace/dim (trace of the matrix being factorized) are
// dropped and reported
struct GramFactor {
  std::vector<int> order;    // kept flat indices in elimination order
  std::vector<int> dropped;  // flat indices removed from the model
  CMat l;                    // lower triangular, P G~ P^T = L L^*
  RVec scale;                // equilibration d_i = 1/sqrt(G_ii), 0 if G_ii ~ 0
  double threshold = 0.0;
  double min_pivot = 0.0;

  int kept() const { return static_cast<int>(order.size()); }
};

inline GramFactor factor_gram(const CMat& g) {
  const int dim = static_cast<int>(g.rows());
  GramFactor f;
  f.scale = RVec::Zero(dim);
  std::vector<int> cand;
  for (int i = 0; i < dim; ++i) {
    const double dii = std::real(g(i, i));
    if (dii > 1e-300) {
      f.scale[i] = 1.0 / std::sqrt(dii);
      cand.push_back(i);
    } else {
      f.dropped.push_back(i);
    }
  }
  const int nc = static_cast<int>(cand.size());
  if (nc == 0) {
    if (dim > 0) throw std::runtime_error("factor_gram: total pivot loss (zero Gram diagonal)");
    f.l = CMat::Zero(0, 0);
    return f;
  }

  CMat a(nc, nc);
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j)
      a(i, j) = g(cand[i], cand[j]) * f.scale[cand[i]] * f.scale[cand[j]];
  f.threshold = 1e-13 * std::real(a.trace()) / nc;

  std::vector<int> pos = cand;
  int k = 0;
  for (; k < nc; ++k) {
    int piv = k;
    for (int i = k + 1; i < nc; ++i)
      if (std::real(a(i, i)) > std::real(a(piv, piv))) piv = i;
    const double pval = std::real(a(piv, piv));
    if (!(pval > f.threshold)) break;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      a.col(k).swap(a.col(piv));
      std::swap(pos[k], pos[piv]);
    }
    f.min_pivot = k == 0 ? pval : std::min(f.min_pivot, pval);
    const double root = std::sqrt(pval);
    a(k, k) = root;
    for (int i = k + 1; i < nc; ++i) a(i, k) /= root;
    // keep the trailing Schur complement Hermitian on both triangles: later
    // pivot swaps read it from either side
    for (int j = k + 1; j < nc; ++j)
      for (int i = j; i < nc; ++i) {
        const cxd v = a(i, j) - a(i, k) * std::conj(a(j, k));
        a(i, j) = v;
        if (i != j) a(j, i) = std::conj(v);
      }
  }
  if (k == 0) throw std::runtime_error("factor_gram: total pivot loss (all pivots below threshold)");

  f.order.assign(pos.begin(), pos.begin() + k);
  f.dropped.insert(f.dropped.end(), pos.begin() + k, pos.end());
  f.l = CMat::Zero(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = j; i < k; ++i) f.l(i, j) = a(i, j);
  return f;
}

// pseudo-solve G x = b on the kept directions (dropped coordinates -> 0)
inline CVec solve_gram(const GramFactor& f, const CVec& b) {
  const int k = f.kept();
  CVec y(k);
  for (int i = 0; i < k; ++i) y[i] = b[f.order[i]] * f.scale[f.order[i]];
  f.l.triangularView<Eigen::Lower>().solveInPlace(y);
  f.l.adjoint().triangularView<Eigen::Upper>().solveInPlace(y);
  CVec x = CVec::Zero(b.size());
  for (int i = 0; i < k; ++i) x[f.order[i]] = y[i] * f.scale[f.order[i]];
  return x;
}

// c^* G^{-1} c on the kept directions; nonnegative by construction
inline double inv_quad_form(const GramFactor& f, const CVec& c) {
  const int k = f.kept();
  CVec y(k);
  for (int i = 0; i < k; ++i) y[i] = c[f.order[i]] * f.scale[f.order[i]];
  f.l.triangularView<Eigen::Lower>().solveInPlace(y);
  return y.squaredNorm();
}

struct BergmanModel {
  geometry::DomainSpec domain;
  metric::MetricField weight;
  TPoint t;
  int n = 1, r = 1, degree = 0;
  std::vector<std::vector<int>> exponents;   // empty => dimension-0 model
  geometry::QuadratureRule quad;
  CMat gram;
  GramFactor factor;
  double gram_herm_error = 0.0;

  int dim() const { return static_cast<int>(exponents.size()) * r; }
  bool empty() const { return dim() == 0; }
  int flat(int a, int i) const { return a * r + i; }

  CVec monomials(const ZPoint& z) const {
    CVec v(static_cast<int>(exponents.size()));
    for (std::size_t a = 0; a < exponents.size(); ++a) v[a] = monomial(z, exponents[a]);
    return v;
  }
};

inline BergmanModel build_model(const geometry::DomainSpec& domain,
                                const metric::MetricField& weight, const TPoint& t,
                                int degree, int quad_order, std::uint64_t seed = 1) {
  if (degree < 0) throw std::invalid_argument("build_model: degree must be >= 0");
  if (weight.n != domain.n)
    throw std::invalid_argument("build_model: weight/domain dimension mismatch");
  BergmanModel model;
  model.domain = domain;
  model.weight = weight;
  model.t = t;
  model.n = domain.n;
  model.r = weight.rank;
  model.degree = degree;
  model.quad = geometry::sample_quadrature(domain, quad_order, seed);
  if (model.quad.empty()) return model;  // empty fiber -> dimension-0 model

  model.exponents = multi_indices(domain.n, degree);
  const int nb = static_cast<int>(model.exponents.size());
  const int r = model.r;
  const int dim = nb * r;
  // orientation: G_{(a i)(b l)} = conj(z^alpha) z^beta h_il, so that u^* G u
  // is the squared norm of f = sum u_{(a i)} z^alpha e_i (checked by the
  // reproducing-property tests on non-radial weights, where G is off-diagonal)
  CMat g = CMat::Zero(dim, dim);
  const bool scalar = (r == 1);
  for (std::size_t q = 0; q < model.quad.nodes.size(); ++q) {
    const ZPoint& zq = model.quad.nodes[q];
    const double wq = model.quad.weights[q];
    const CVec b = model.monomials(zq);
    if (scalar) {
      const double hv = std::real(weight.eval(t, zq)(0, 0));
      g.noalias() += (wq * hv) * (b.conjugate() * b.transpose());
    } else {
      const CMat hv = weight.eval(t, zq);
      for (int a = 0; a < nb; ++a)
        for (int bb = 0; bb < nb; ++bb)
          g.block(a * r, bb * r, r, r) += (wq * std::conj(b[a]) * b[bb]) * hv;
    }
  }
  model.gram_herm_error = (g - g.adjoint().eval()).cwiseAbs().maxCoeff();
  model.gram = 0.5 * (g + g.adjoint().eval());
  model.factor = factor_gram(model.gram);
  return model;
}

// K(z, wbar) = B(z) G^{-1} B(w)^*, an r x r matrix (dropped directions excluded)
inline CMat kernel_eval(const BergmanModel& model, const ZPoint& z, const ZPoint& w) {
  const int r = model.r;
  if (model.empty()) return CMat::Zero(r, r);
  const CVec bz = model.monomials(z);
  const CVec bw = model.monomials(w);
  const int nb = static_cast<int>(model.exponents.size());
  CMat k(r, r);
  for (int l = 0; l < r; ++l) {
    CVec col = CVec::Zero(model.dim());
    for (int b = 0; b < nb; ++b) col[model.flat(b, l)] = std::conj(bw[b]);
    const CVec y = solve_gram(model.factor, col);
    for (int kk = 0; kk < r; ++kk) {
      cxd acc(0);
      for (int a = 0; a < nb; ++a) acc += bz[a] * y[model.flat(a, kk)];
      k(kk, l) = acc;
    }
  }
  return k;
}

inline double kernel_diag(const BergmanModel& model, const ZPoint& z) {
  return std::real(kernel_eval(model, z, z).trace());
}

// coefficient array of the functional f -> <f(z), sigma>
inline CVec eval_functional_coeffs(const BergmanModel& model, const ZPoint& z, const CVec& sigma) {
  if (sigma.size() != model.r)
    throw std::invalid_argument("eval functional: sigma must have length r");
  CVec c = CVec::Zero(model.dim());
  const CVec bz = model.monomials(z);
  for (std::size_t a = 0; a < model.exponents.size(); ++a)
    for (int i = 0; i < model.r; ++i)
      c[model.flat(static_cast<int>(a), i)] = std::conj(bz[a]) * sigma[i];
  return c;
}

// dual squared norm of the evaluation functional, as the G-inverse quadratic form
inline double eval_functional_norm(const BergmanModel& model, const ZPoint& z, const CVec& sigma) {
  if (model.empty()) return 0.0;
  return inv_quad_form(model.factor, eval_functional_coeffs(model, z, sigma));
}

// dual squared norm of f -> sum_k <f(z_k), sigma_k> for an atomic measure
inline double measure_functional_norm(const BergmanModel& model,
                                      const std::vector<std::pair<ZPoint, CVec>>& atoms) {
  if (model.empty()) return 0.0;
  CVec c = CVec::Zero(model.dim());
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (!geometry::contains(model.domain, atoms[k].first))
      throw std::invalid_argument("measure functional: atom " + std::to_string(k) +
                                  " lies outside the model domain");
    c += eval_functional_coeffs(model, atoms[k].first, atoms[k].second);
  }
  return inv_quad_form(model.factor, c);
}

struct ExtremalReport {
  double exact = 0.0;        // sup |<f(z),sigma>|^2 / ||f||^2 via the G-inverse form
  double best_random = 0.0;  // largest random-sample lower bound
  double gap = 0.0;          // exact - best_random
  double maximizer_residual = 0.0;
  int samples = 0;
};

// the extremal characterization for an arbitrary functional with coefficient
// array c: the sup of |<f,c>|^2/||f||^2 is attained by G^{-1}c, and random
// elements of the space can only approach it from below
inline ExtremalReport extremal_check_functional(const BergmanModel& model, const CVec& c,
                                                int samples = 1000, std::uint64_t seed = 7) {
  ExtremalReport rep;
  rep.samples = samples;
  if (model.empty()) return rep;
  rep.exact = inv_quad_form(model.factor, c);

  auto quotient = [&](const CVec& u) -> double {
    const double den = std::real(u.dot(model.gram * u));
    if (!(den > 0.0)) return 0.0;
    return std::norm(c.dot(u)) / den;
  };

  const CVec umax = solve_gram(model.factor, c);
  if (rep.exact > 0.0)
    rep.maximizer_residual = std::abs(quotient(umax) - rep.exact) / rep.exact;

  const int k = model.factor.kept();
  std::uint64_t state = seed ^ 0x9e3779b97f4a7c15ull;
  auto u01 = [&state]() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t x = state;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  };
  for (int s = 0; s < samples; ++s) {
    CVec u = CVec::Zero(model.dim());
    for (int i = 0; i < k; ++i) {
      const int fi = model.factor.order[i];
      u[fi] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0) * model.factor.scale[fi];
    }
    rep.best_random = std::max(rep.best_random, quotient(u));
  }
  rep.gap = rep.exact - rep.best_random;
  return rep;
}

inline ExtremalReport extremal_check(const BergmanModel& model, const ZPoint& z,
                                     const CVec& sigma, int samples = 1000,
                                     std::uint64_t seed = 7) {
  if (model.empty()) return ExtremalReport{0.0, 0.0, 0.0, 0.0, samples};
  return extremal_check_functional(model, eval_functional_coeffs(model, z, sigma), samples, seed);
}

// sharp constant of the pointwise bound sup_probes |f(z)|^2 <= C ||f||^2
inline double bergman_inequality_constant(const BergmanModel& model,
                                          const std::vector<ZPoint>& probes) {
  if (probes.empty())
    throw std::invalid_argument("bergman_inequality_constant: empty probe list");
  double c = 0.0;
  for (const ZPoint& z : probes) c = std::max(c, kernel_diag(model, z));
  return c;
}

} // namespace bkl::bergman
