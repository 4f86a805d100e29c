#include <catch2/catch_amalgamated.hpp>

#include <bkl/bergman.hpp>
#include <bkl/field_ops.hpp>
#include <bkl/fields.hpp>
#include <bkl/geometry.hpp>
#include <bkl/types.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

using namespace bkl;
using Catch::Matchers::ContainsSubstring;

namespace {

// phi = |t|^2 + |z|^2 with exact derivative slots
RealField phi_product() {
  RealField f;
  f.m = 1;
  f.n = 1;
  f.value = [](const TPoint& t, const ZPoint& z) { return std::norm(t.c[0]) + std::norm(z.c[0]); };
  f.dt_fn = [](const TPoint& t, const ZPoint&, int) { return std::conj(t.c[0]); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int) { return std::conj(z.c[0]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return f;
}

// phi = |t1|^2 + |t2|^2 + |z|^2
RealField phi_product2() {
  RealField f;
  f.m = 2;
  f.n = 1;
  f.value = [](const TPoint& t, const ZPoint& z) {
    return std::norm(t.c[0]) + std::norm(t.c[1]) + std::norm(z.c[0]);
  };
  f.dt_fn = [](const TPoint& t, const ZPoint&, int j) { return std::conj(t.c[j]); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int) { return std::conj(z.c[0]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int j, int k) { return cxd(j == k ? 1 : 0); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return f;
}

// phi = |z - t|^2
RealField phi_shifted() {
  RealField f;
  f.m = 1;
  f.n = 1;
  f.value = [](const TPoint& t, const ZPoint& z) { return std::norm(z.c[0] - t.c[0]); };
  f.dt_fn = [](const TPoint& t, const ZPoint& z, int) { return -std::conj(z.c[0] - t.c[0]); };
  f.dz_fn = [](const TPoint& t, const ZPoint& z, int) { return std::conj(z.c[0] - t.c[0]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(-1); };
  return f;
}

// phi = 2 Re(t) |z|^2, the weight is flat at t = 0
RealField phi_linear() {
  RealField f;
  f.m = 1;
  f.n = 1;
  f.value = [](const TPoint& t, const ZPoint& z) {
    return 2.0 * std::real(t.c[0]) * std::norm(z.c[0]);
  };
  f.dt_fn = [](const TPoint&, const ZPoint& z, int) { return cxd(std::norm(z.c[0])); };
  f.dz_fn = [](const TPoint& t, const ZPoint& z, int) {
    return 2.0 * std::real(t.c[0]) * std::conj(z.c[0]);
  };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  f.dzz_fn = [](const TPoint& t, const ZPoint&, int, int) { return cxd(2.0 * std::real(t.c[0])); };
  f.dtz_fn = [](const TPoint&, const ZPoint& z, int, int) { return z.c[0]; };
  return f;
}

// phi = |z|^2 carried with a spectator parameter direction
RealField phi_fock_t() {
  RealField f;
  f.m = 1;
  f.n = 1;
  f.value = [](const TPoint&, const ZPoint& z) { return std::norm(z.c[0]); };
  f.dt_fn = [](const TPoint&, const ZPoint&, int) { return cxd(0); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int) { return std::conj(z.c[0]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return f;
}

std::uint64_t rng_state = 0x9d4ab1f0c37e55a1ull;
double u01() {
  rng_state += 0x9e3779b97f4a7c15ull;
  std::uint64_t x = rng_state;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

CVec random_coeffs(int dim) {
  CVec u(dim);
  for (int i = 0; i < dim; ++i) u[i] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
  return u;
}

} // namespace

TEST_CASE("node-space projection is idempotent and self-adjoint") {
  const auto model = bergman::build_model(
      geometry::make_disc(1.5), metric::metric_from_weight(field_ptr(phi_linear())),
      TPoint::zero(1), 5, 12);
  const auto p = field_ops::field_projection(model);
  REQUIRE(p.kind == field_ops::OperatorKind::projection);
  REQUIRE(std::string(field_ops::kind_name(p.kind)) == "projection");

  const double scale = 1.0 + p.matrix.cwiseAbs().maxCoeff();
  REQUIRE((p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff() <= 1e-9 * scale);

  const CMat w = field_ops::node_weight_matrix(model);
  const CMat wp = w * p.matrix;
  REQUIRE((wp - wp.adjoint()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + wp.cwiseAbs().maxCoeff()));

  // the projection fixes every function in the model span
  const CMat v = field_ops::node_eval_matrix(model);
  REQUIRE((p.matrix * v - v).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + v.cwiseAbs().maxCoeff()));

  // the discrete ambient inner product restricts to the Gram matrix
  const CMat g = v.adjoint() * w * v;
  REQUIRE((g - model.gram).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + model.gram.cwiseAbs().maxCoeff()));
}

TEST_CASE("connection at 2Re(t)|z|^2 is projected multiplication by -|z|^2") {
  const double r2 = 1.5 * 1.5;
  const auto model = bergman::build_model(
      geometry::make_disc(1.5), metric::metric_from_weight(field_ptr(phi_linear())),
      TPoint::zero(1), 5, 12);
  const auto gamma = field_ops::field_connection(model, 0);
  REQUIRE(gamma.kind == field_ops::OperatorKind::connection);
  REQUIRE(gamma.j == 0);

  // compatible multiplier g = h^{-1} d_t h = -d_t phi = -|z|^2; on the flat
  // disc the projection of -|z|^2 z^a is -R^2 (a+1)/(a+2) z^a
  for (int a = 0; a <= 5; ++a) {
    const double want = -r2 * (a + 1.0) / (a + 2.0);
    REQUIRE(std::abs(gamma.matrix(a, a) - want) <= 1e-10);
    for (int b = 0; b <= 5; ++b)
      if (b != a) REQUIRE(std::abs(gamma.matrix(a, b)) <= 1e-10);
  }

  // same operator assembled as projected multiplication, entry for entry
  const CMat s = field_ops::detail::assemble_form(model, [&](const ZPoint& zq) {
    CMat k(1, 1);
    k(0, 0) = std::norm(zq.c[0]) * model.weight.eval(model.t, zq)(0, 0);
    return k;
  });
  const CMat mult = field_ops::detail::solve_columns(model, s);
  REQUIRE((gamma.matrix + mult).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("product gaussian at t = 0 has identity curvature") {
  const auto model = bergman::build_model(
      geometry::make_disc(3.0), metric::metric_from_weight(field_ptr(phi_product())),
      TPoint::zero(1), 8, 18);
  const double gscale = model.gram.cwiseAbs().maxCoeff();

  // d_t h vanishes at t = 0, so the connection coefficient is exactly zero
  const auto gamma = field_ops::field_connection(model, 0);
  REQUIRE(gamma.matrix.cwiseAbs().maxCoeff() <= 1e-13);

  // the ambient curvature multiplier is the identity: its form is the Gram
  const CMat theta_f = field_ops::theta_f_form(model, 0, 0);
  REQUIRE((theta_f - model.gram).cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + gscale));

  const auto curv = field_ops::field_curvature(model, 0, 0);
  REQUIRE(curv.kind == field_ops::OperatorKind::curvature);
  const CMat id = CMat::Identity(model.dim(), model.dim());
  REQUIRE((curv.matrix - id).cwiseAbs().maxCoeff() <= 1e-9);

  // (Theta^E u, u) = ||u||^2 for random sections
  const CMat form = field_ops::curvature_form(model, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const CVec u = random_coeffs(model.dim());
    const double pairing = std::real(u.dot(form * u));
    const double norm2 = std::real(u.dot(model.gram * u));
    REQUIRE(std::abs(pairing - norm2) <= 1e-8 * norm2);
  }
}

TEST_CASE("t-independent weight gives a flat field") {
  field_ops::ModelFamily family;
  family.domain = geometry::make_disc(2.0);
  family.weight = metric::metric_from_weight(field_ptr(phi_fock_t()));
  family.degree = 6;
  family.quad_order = 14;
  const auto model = family.at(TPoint::zero(1));

  REQUIRE(field_ops::field_connection(model, 0).matrix.cwiseAbs().maxCoeff() <= 1e-14);
  REQUIRE(field_ops::curvature_form(model, 0, 0).cwiseAbs().maxCoeff() <= 1e-14);
  REQUIRE(field_ops::field_curvature(model, 0, 0).matrix.cwiseAbs().maxCoeff() <= 1e-14);

  CVec u = CVec::Zero(model.dim());
  u[0] = 1.0;
  u[2] = cxd(0.4, -0.3);
  const auto rep = field_ops::t_u_hessian(
      family, {[u](const TPoint&) { return u; }}, TPoint::zero(1), 1e-3);
  REQUIRE(std::abs(rep.hessian(0, 0)) <= 1e-8);
  REQUIRE(rep.comparison > 0.0);
  REQUIRE(rep.constraint_residual <= 1e-10);
  REQUIRE_FALSE(rep.noisy);
}

TEST_CASE("curvature assembly matches finite differences of the Gram family") {
  field_ops::ModelFamily family;
  family.domain = geometry::make_disc(2.5);
  family.weight = metric::metric_from_weight(field_ptr(phi_shifted()));
  family.degree = 6;
  family.quad_order = 14;
  const TPoint t0 = tpoint1(cxd(0.25, -0.1));
  const auto model = family.at(t0);

  auto gram_of = [&](const TPoint& t, const ZPoint&) { return family.at(t).gram; };
  const ZPoint zdummy = ZPoint::zero(1);
  const CMat dg = bkl::detail::fd_d1(gram_of, t0, zdummy, Var::T, 0, 1e-4);
  const CMat d2g = bkl::detail::fd_d2(gram_of, t0, zdummy, Var::T, 0, Var::T, 0, 1e-4);

  const Eigen::FullPivLU<CMat> lu(model.gram);
  const double gscale = 1.0 + model.gram.cwiseAbs().maxCoeff();

  const CMat dg_exact = field_ops::gram_dt(model, 0);
  REQUIRE((dg - dg_exact).cwiseAbs().maxCoeff() <= 1e-6 * gscale);
  const CMat d2g_exact = field_ops::gram_dtt(model, 0, 0);
  REQUIRE((d2g - d2g_exact).cwiseAbs().maxCoeff() <= 1e-6 * gscale);

  // connection = G^{-1} dG, curvature form = dGbar G^{-1} dG - d2G
  const auto gamma = field_ops::field_connection(model, 0);
  REQUIRE((gamma.matrix - CMat(lu.solve(dg))).cwiseAbs().maxCoeff() <= 1e-6 * gscale);

  const CMat form_fd = dg.adjoint() * lu.solve(dg) - d2g;
  const CMat form = field_ops::curvature_form(model, 0, 0);
  REQUIRE((form - form_fd).cwiseAbs().maxCoeff() <= 1e-5 * gscale);

  // the curvature form is Hermitian and its pairings are real
  REQUIRE((form - form.adjoint()).cwiseAbs().maxCoeff() <= 1e-13 * gscale);
  for (int trial = 0; trial < 10; ++trial) {
    const CVec u = random_coeffs(model.dim());
    REQUIRE(std::abs(std::imag(u.dot(form * u))) <= 1e-10 * (1.0 + std::abs(u.dot(form * u))));
  }

  // passing to the subfield only lowers curvature: theta_f - form is PSD
  const CMat defect = field_ops::theta_f_form(model, 0, 0) - form;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (defect + defect.adjoint().eval()));
  REQUIRE(es.eigenvalues().minCoeff() >= -1e-8 * gscale);
}

TEST_CASE("hessian of the product gaussian matches the center norm") {
  field_ops::ModelFamily family;
  family.domain = geometry::make_disc(3.0);
  family.weight = metric::metric_from_weight(field_ptr(phi_product()));
  family.degree = 8;
  family.quad_order = 18;
  const auto center = family.at(TPoint::zero(1));

  CVec u = CVec::Zero(center.dim());
  u[0] = 1.0;
  u[1] = cxd(0.0, -0.25);
  u[2] = 0.5;
  const auto rep = field_ops::t_u_hessian(
      family, {[u](const TPoint&) { return u; }}, TPoint::zero(1), 1e-3);

  // G(t) = e^{-|t|^2} G(0), so the Hessian of -T at 0 is the squared norm
  REQUIRE(rep.comparison > 0.0);
  REQUIRE(std::abs(rep.hessian(0, 0) - rep.comparison) <= 1e-8 * rep.comparison);
  REQUIRE_FALSE(rep.noisy);
  REQUIRE(rep.richardson_gap <= 1e-4 * rep.comparison);
  REQUIRE(rep.constraint_residual <= 1e-10);

  // split identity: Hessian = (Theta^E u, u) + ||P_perp grad u||^2 here
  const CMat form = field_ops::curvature_form(center, 0, 0);
  const double pairing = std::real(u.dot(form * u));
  const double perp = field_ops::perp_gradient_norm2(center, u, CVec::Zero(center.dim()), 0);
  REQUIRE(std::abs(perp) <= 1e-12);
  REQUIRE(std::abs(rep.hessian(0, 0) - (pairing + perp)) <= 1e-4 * (1.0 + rep.comparison));
}

TEST_CASE("hessian split identity holds at a non-product weight") {
  field_ops::ModelFamily family;
  family.domain = geometry::make_disc(2.5);
  family.weight = metric::metric_from_weight(field_ptr(phi_shifted()));
  family.degree = 6;
  family.quad_order = 14;
  const TPoint t0 = tpoint1(cxd(0.25, -0.1));
  const auto center = family.at(t0);
  const int dim = center.dim();

  CVec u0 = CVec::Zero(dim), u1 = CVec::Zero(dim);
  u0[0] = 1.0;
  u0[2] = cxd(0.3, 0.4);
  u0[4] = -0.2;
  u1[1] = cxd(0.5, -0.1);
  u1[3] = 0.25;
  auto section = [u0, u1](const TPoint& t) { return CVec(u0 + t.c[0] * u1); };

  const auto rep = field_ops::t_u_hessian(family, {section}, t0, 1e-3);
  const CVec uc = section(t0);

  // covariant t-derivative of the section in the model
  const auto gamma = field_ops::field_connection(center, 0);
  const CVec cov = u1 + gamma.matrix * uc;
  const double cov2 = std::real(cov.dot(center.gram * cov));
  REQUIRE(std::abs(rep.constraint_residual - std::sqrt(cov2)) <= 1e-6);

  // Hessian(-T) = (Theta^E u, u) - ||covariant du||^2, and equivalently
  // (Theta^F u, u) - ||P_perp grad u||^2 - ||covariant du||^2
  const double pairing_e = std::real(uc.dot(field_ops::curvature_form(center, 0, 0) * uc));
  const double rhs1 = pairing_e - cov2;
  const double pairing_f = std::real(uc.dot(field_ops::theta_f_form(center, 0, 0) * uc));
  const double perp = field_ops::perp_gradient_norm2(center, uc, u1, 0);
  const double rhs2 = pairing_f - perp - cov2;
  REQUIRE(std::abs(rhs1 - rhs2) <= 1e-8 * (1.0 + std::abs(rhs1)));
  REQUIRE(std::abs(rep.hessian(0, 0) - rhs1) <= 1e-5 * (1.0 + std::abs(rhs1)));
  REQUIRE_FALSE(rep.noisy);
}

TEST_CASE("hessian handles two parameter directions") {
  field_ops::ModelFamily family;
  family.domain = geometry::make_disc(2.5);
  family.weight = metric::metric_from_weight(field_ptr(phi_product2()));
  family.degree = 4;
  family.quad_order = 10;
  const auto center = family.at(TPoint::zero(2));

  CVec u = CVec::Zero(center.dim());
  u[0] = 0.8;
  u[3] = cxd(-0.2, 0.6);
  const auto rep = field_ops::t_u_hessian(
      family, {[u](const TPoint&) { return u; }}, TPoint::zero(2), 1e-3);

  REQUIRE(rep.hessian.rows() == 2);
  REQUIRE((rep.hessian - rep.hessian.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);
  const CMat want = rep.comparison * CMat::Identity(2, 2);
  REQUIRE((rep.hessian - want).cwiseAbs().maxCoeff() <= 1e-7 * rep.comparison);
}

TEST_CASE("field operator inputs are validated") {
  const auto flat = metric::constant_metric(CMat::Identity(1, 1), 0, 1);
  const auto no_param =
      bergman::build_model(geometry::make_disc(1.0), flat, TPoint{}, 3, 8);
  REQUIRE_THROWS_WITH(field_ops::field_connection(no_param, 0),
                      ContainsSubstring("no parameter directions"));

  const auto model = bergman::build_model(
      geometry::make_disc(1.0), metric::metric_from_weight(field_ptr(phi_product())),
      TPoint::zero(1), 3, 8);
  REQUIRE_THROWS_WITH(field_ops::field_connection(model, 1),
                      ContainsSubstring("out of range"));
  REQUIRE_THROWS_WITH(field_ops::field_curvature(model, 0, -1),
                      ContainsSubstring("out of range"));

  // moving fiber domains are rejected
  RealField rho_t;
  rho_t.m = 1;
  rho_t.n = 1;
  rho_t.value = [](const TPoint& t, const ZPoint& z) {
    return std::norm(z.c[0]) - 1.0 + 0.25 * std::norm(t.c[0]);
  };
  geometry::Box box;
  box.re_lo = RVec::Constant(1, -1.2);
  box.re_hi = RVec::Constant(1, 1.2);
  box.im_lo = RVec::Constant(1, -1.2);
  box.im_hi = RVec::Constant(1, 1.2);
  const auto moving = geometry::make_sublevel(field_ptr(rho_t), box, TPoint::zero(1));
  const auto moving_model = bergman::build_model(
      moving, metric::metric_from_weight(field_ptr(phi_product())), TPoint::zero(1), 3, 8);
  REQUIRE_THROWS_WITH(field_ops::field_connection(moving_model, 0),
                      ContainsSubstring("unsupported"));

  // coefficient sizes must match the model
  REQUIRE_THROWS_WITH(
      field_ops::perp_gradient_norm2(model, CVec::Zero(2), CVec::Zero(model.dim()), 0),
      ContainsSubstring("size mismatch"));

  field_ops::ModelFamily family;
  family.domain = geometry::make_disc(1.0);
  family.weight = metric::metric_from_weight(field_ptr(phi_product()));
  family.degree = 3;
  family.quad_order = 8;
  REQUIRE_THROWS_WITH(field_ops::t_u_hessian(family, {}, TPoint::zero(1)),
                      ContainsSubstring("no sections"));
  const auto sec = [](const TPoint&) { return CVec(CVec::Zero(2)); };
  REQUIRE_THROWS_WITH(field_ops::t_u_hessian(family, {sec}, TPoint::zero(1), 0.0),
                      ContainsSubstring("step"));
  REQUIRE_THROWS_WITH(field_ops::t_u_hessian(family, {sec}, TPoint::zero(2)),
                      ContainsSubstring("dimension mismatch"));
  REQUIRE_THROWS_WITH(field_ops::t_u_hessian(family, {sec}, TPoint::zero(1)),
                      ContainsSubstring("section size mismatch"));
}
