#include <catch2/catch_amalgamated.hpp>

#include <bkl/bergman.hpp>
#include <bkl/fields.hpp>
#include <bkl/geometry.hpp>
#include <bkl/types.hpp>

#include <cmath>
#include <complex>
#include <vector>

using namespace bkl;

namespace {

metric::MetricField flat_weight() { return metric::constant_metric(CMat::Identity(1, 1), 0, 1); }

RealField phi_fock() {
  RealField f;
  f.m = 0;
  f.n = 1;
  f.value = [](const TPoint&, const ZPoint& z) { return std::norm(z.c[0]); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int) { return std::conj(z.c[0]); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
  return f;
}

metric::MetricField diag_weight2() {
  metric::MetricField h;
  h.rank = 2;
  h.m = 0;
  h.n = 1;
  h.eval = [](const TPoint&, const ZPoint& z) {
    const double a = std::norm(z.c[0]);
    CMat v = CMat::Zero(2, 2);
    v(0, 0) = std::exp(-a);
    v(1, 1) = std::exp(-2.0 * a);
    return v;
  };
  return h;
}

std::uint64_t rng_state = 0x2545f4914f6cdd1dull;
double u01() {
  rng_state += 0x9e3779b97f4a7c15ull;
  std::uint64_t x = rng_state;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

} // namespace

TEST_CASE("multi-indices are graded lexicographic") {
  const auto mi1 = bergman::multi_indices(1, 3);
  REQUIRE(mi1.size() == 4);
  for (int a = 0; a <= 3; ++a) REQUIRE(mi1[a] == std::vector<int>{a});

  const auto mi2 = bergman::multi_indices(2, 2);
  const std::vector<std::vector<int>> expect = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  REQUIRE(mi2 == expect);

  ZPoint z;
  z.c = CVec(2);
  z.c[0] = cxd(2.0, 0.0);
  z.c[1] = cxd(0.0, 1.0);
  REQUIRE(std::abs(bergman::monomial(z, {2, 1}) - cxd(0.0, 4.0)) < 1e-15);
  REQUIRE_THROWS_AS(bergman::multi_indices(0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(bergman::multi_indices(1, -1), std::invalid_argument);
}

TEST_CASE("unit disc flat-weight Gram is diag(pi, pi/2, pi/3, pi/4)") {
  const auto domain = geometry::make_disc(1.0);
  const auto model = bergman::build_model(domain, flat_weight(), TPoint{}, 3, 8);
  REQUIRE(model.dim() == 4);
  REQUIRE(model.factor.dropped.empty());
  REQUIRE(model.gram_herm_error < 1e-12);
  for (int a = 0; a < 4; ++a)
    REQUIRE(std::abs(model.gram(a, a) - pi / (a + 1)) < 1e-12);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (a != b) REQUIRE(std::abs(model.gram(a, b)) < 1e-13);
}

TEST_CASE("degree-0 Gaussian Gram on the unit disc is pi(1-1/e)") {
  const auto model = bergman::build_model(geometry::make_disc(1.0),
                                          metric::metric_from_weight(field_ptr(phi_fock())),
                                          TPoint{}, 0, 12);
  REQUIRE(model.dim() == 1);
  REQUIRE(std::abs(model.gram(0, 0) - pi * (1.0 - std::exp(-1.0))) < 1e-12);
}

TEST_CASE("disc kernel matches the closed form 1/(pi(1-z wbar)^2)") {
  const auto model =
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 12, 26);
  const ZPoint z0 = zpoint1(cxd(0, 0));
  const ZPoint zh = zpoint1(cxd(0.5, 0.0));

  const double k00 = std::real(bergman::kernel_eval(model, z0, z0)(0, 0));
  REQUIRE(std::abs(k00 - 1.0 / pi) < 1e-10);

  const double khh = std::real(bergman::kernel_eval(model, zh, zh)(0, 0));
  const double closed = 1.0 / (pi * 0.5625);
  REQUIRE(std::abs(khh - closed) < 1e-6);
  REQUIRE(khh < closed);  // truncation can only lose mass

  // Hermitian symmetry at distinct arguments
  const ZPoint w = zpoint1(cxd(0.3, -0.4));
  const cxd kzw = bergman::kernel_eval(model, zh, w)(0, 0);
  const cxd kwz = bergman::kernel_eval(model, w, zh)(0, 0);
  REQUIRE(std::abs(kzw - std::conj(kwz)) < 1e-12);
  const cxd closed_zw = 1.0 / (pi * std::pow(1.0 - zh.c[0] * std::conj(w.c[0]), 2));
  REQUIRE(std::abs(kzw - closed_zw) < 1e-6);
}

TEST_CASE("Fock weight on a big disc reproduces the Fock kernel at 0") {
  const auto model = bergman::build_model(geometry::make_disc(12.0),
                                          metric::metric_from_weight(field_ptr(phi_fock())),
                                          TPoint{}, 40, 82);
  REQUIRE(model.dim() == 41);
  REQUIRE(model.factor.dropped.empty());
  const double k00 = bergman::kernel_diag(model, zpoint1(cxd(0, 0)));
  REQUIRE(std::abs(k00 - 1.0 / pi) < 1e-10);

  // e^{z wbar}/pi away from the origin, truncation well inside the disc
  const ZPoint z = zpoint1(cxd(1.0, 0.5));
  const double kzz = bergman::kernel_diag(model, z);
  REQUIRE(std::abs(kzz - std::exp(std::norm(z.c[0])) / pi) < 1e-6 * kzz);
}

TEST_CASE("kernel diagonal grows with truncation degree") {
  const ZPoint zh = zpoint1(cxd(0.5, 0.2));
  double prev_flat = 0.0, prev_fock = 0.0;
  for (int d : {2, 4, 8, 12}) {
    const auto flat =
        bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, d, 2 * d + 2);
    const auto fock = bergman::build_model(geometry::make_disc(4.0),
                                           metric::metric_from_weight(field_ptr(phi_fock())),
                                           TPoint{}, d, 2 * d + 2);
    const double kf = bergman::kernel_diag(flat, zh);
    const double kg = bergman::kernel_diag(fock, zh);
    REQUIRE(kf >= prev_flat - 1e-13);
    REQUIRE(kg >= prev_fock - 1e-13);
    prev_flat = kf;
    prev_fock = kg;
  }
}

TEST_CASE("evaluation functional norm equals the kernel quadratic form") {
  const auto model =
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 12, 26);

  CVec sig1(1);
  sig1[0] = 1.0;
  REQUIRE(std::abs(bergman::eval_functional_norm(model, zpoint1(cxd(0, 0)), sig1) - 1.0 / pi) <
          1e-12);
  CVec sig0(1);
  sig0[0] = 0.0;
  REQUIRE(bergman::eval_functional_norm(model, zpoint1(cxd(0.3, 0.1)), sig0) == 0.0);

  rng_state = 0x2545f4914f6cdd1dull;
  for (int s = 0; s < 25; ++s) {
    const ZPoint z = zpoint1(cxd(1.6 * u01() - 0.8, 1.6 * u01() - 0.8));
    CVec sig(1);
    sig[0] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    const double lhs = bergman::eval_functional_norm(model, z, sig);
    const double rhs =
        std::real((sig.adjoint() * bergman::kernel_eval(model, z, z) * sig)(0, 0));
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));

    const cxd c(1.7, -0.3);
    const double scaled = bergman::eval_functional_norm(model, z, (sig * c).eval());
    REQUIRE(std::abs(scaled - std::norm(c) * lhs) <= 1e-10 * std::max(1.0, scaled));
  }
}

TEST_CASE("rank-2 weights flow through Gram, kernel, and dual norms") {
  const auto model =
      bergman::build_model(geometry::make_disc(2.0), diag_weight2(), TPoint{}, 2, 16);
  REQUIRE(model.dim() == 6);
  REQUIRE(model.factor.dropped.empty());

  const CMat k = bergman::kernel_eval(model, zpoint1(cxd(0, 0)), zpoint1(cxd(0, 0)));
  REQUIRE(std::abs(k(0, 0) - 1.0 / (pi * (1.0 - std::exp(-4.0)))) < 1e-10);
  REQUIRE(std::abs(k(1, 1) - 2.0 / (pi * (1.0 - std::exp(-8.0)))) < 1e-10);
  REQUIRE(std::abs(k(0, 1)) < 1e-12);

  rng_state = 99;
  for (int s = 0; s < 25; ++s) {
    const ZPoint z = zpoint1(cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0));
    CVec sig(2);
    sig[0] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    sig[1] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    const double lhs = bergman::eval_functional_norm(model, z, sig);
    const double rhs =
        std::real((sig.adjoint() * bergman::kernel_eval(model, z, z) * sig)(0, 0));
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("measure functionals reduce to evaluation and pass the brute-force check") {
  const auto model =
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 2, 10);
  const ZPoint z = zpoint1(cxd(0.55, 0.0));
  const ZPoint zm = zpoint1(cxd(-0.55, 0.0));
  CVec one(1), zero(1);
  one[0] = 1.0;
  zero[0] = 0.0;

  const double single = bergman::measure_functional_norm(model, {{z, one}});
  REQUIRE(std::abs(single - bergman::eval_functional_norm(model, z, one)) < 1e-12);

  const double padded = bergman::measure_functional_norm(model, {{z, one}, {zm, zero}});
  REQUIRE(std::abs(padded - single) < 1e-12);

  // symmetric atoms: c = (2, 0, 2 zbar^2), closed form 4/pi + 12|z|^4/pi
  const double both = bergman::measure_functional_norm(model, {{z, one}, {zm, one}});
  const double a4 = std::pow(0.55, 4);
  REQUIRE(std::abs(both - (4.0 / pi) * (1.0 + 3.0 * a4)) < 1e-10);

  CVec c = bergman::eval_functional_coeffs(model, z, one) +
           bergman::eval_functional_coeffs(model, zm, one);
  const auto brute = bergman::extremal_check_functional(model, c, 100000, 11);
  REQUIRE(std::abs(brute.exact - both) < 1e-12);
  REQUIRE(brute.best_random <= brute.exact);
  REQUIRE(brute.gap <= 0.01 * brute.exact);

  REQUIRE_THROWS_AS(bergman::measure_functional_norm(model, {{zpoint1(cxd(1.5, 0.0)), one}}),
                    std::invalid_argument);
}

TEST_CASE("extremal characterization: exact value, residual, random domination") {
  const auto model =
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 8, 18);
  CVec one(1);
  one[0] = 1.0;

  const auto rep = bergman::extremal_check(model, zpoint1(cxd(0, 0)), one, 5000, 3);
  REQUIRE(std::abs(rep.exact - 1.0 / pi) < 1e-12);
  REQUIRE(rep.maximizer_residual <= 1e-12);
  REQUIRE(rep.best_random <= rep.exact);
  REQUIRE(rep.gap >= 0.0);

  const auto off = bergman::extremal_check(model, zpoint1(cxd(0.4, -0.3)), one, 5000, 3);
  REQUIRE(std::abs(off.exact - bergman::eval_functional_norm(model, zpoint1(cxd(0.4, -0.3)), one)) <
          1e-12 * off.exact);
  REQUIRE(off.maximizer_residual <= 1e-12);

  // dimension-1 model: sup = |b_0(z)|^2 / G_00
  const auto d0 = bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 0, 6);
  const auto tiny = bergman::extremal_check(d0, zpoint1(cxd(0.2, 0.7)), one, 100, 5);
  REQUIRE(std::abs(tiny.exact - 1.0 / pi) < 1e-12);
}

TEST_CASE("pointwise bound constant from kernel diagonals") {
  const auto model =
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 8, 18);
  const ZPoint z0 = zpoint1(cxd(0, 0));
  const ZPoint zb = zpoint1(cxd(0.7, 0.0));

  const double c0 = bergman::bergman_inequality_constant(model, {z0});
  REQUIRE(std::abs(c0 - 1.0 / pi) < 1e-10);
  const double c1 = bergman::bergman_inequality_constant(model, {z0, zb});
  REQUIRE(c1 >= c0);
  REQUIRE_THROWS_AS(bergman::bergman_inequality_constant(model, {}), std::invalid_argument);

  rng_state = 7;
  for (int s = 0; s < 100; ++s) {
    CVec u(model.dim());
    for (int i = 0; i < model.dim(); ++i) u[i] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    const double nrm = std::real(u.dot(model.gram * u));
    u /= std::sqrt(nrm);
    for (const ZPoint& z : {z0, zb}) {
      const cxd val = model.monomials(z).transpose() * u;
      REQUIRE(std::norm(val) <= c1 * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("reproducing property holds on the truncated space") {
  const auto model =
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, 6, 14);
  const ZPoint z = zpoint1(cxd(0.35, -0.2));
  rng_state = 13;
  for (int s = 0; s < 20; ++s) {
    CVec u(model.dim());
    for (int i = 0; i < model.dim(); ++i) u[i] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    // <f, K(.,zbar)> over the quadrature measure vs f(z)
    cxd lhs(0);
    for (std::size_t q = 0; q < model.quad.nodes.size(); ++q) {
      const ZPoint& zq = model.quad.nodes[q];
      const cxd fq = model.monomials(zq).transpose() * u;
      const cxd kq = bergman::kernel_eval(model, zq, z)(0, 0);
      lhs += model.quad.weights[q] * std::conj(kq) * fq;
    }
    const cxd rhs = model.monomials(z).transpose() * u;
    REQUIRE(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("non-radial weights couple the Gram and still reproduce") {
  metric::MetricField h;
  h.rank = 1;
  h.m = 0;
  h.n = 1;
  h.eval = [](const TPoint&, const ZPoint& z) {
    CMat v(1, 1);
    v(0, 0) = std::exp(-std::real(z.c[0]));
    return v;
  };
  const auto model = bergman::build_model(geometry::make_disc(1.0), h, TPoint{}, 6, 16);
  REQUIRE(std::abs(model.gram(0, 1)) > 1e-3);  // genuinely off-diagonal

  const ZPoint z = zpoint1(cxd(0.4, 0.25));
  rng_state = 31;
  for (int s = 0; s < 20; ++s) {
    CVec u(model.dim());
    for (int i = 0; i < model.dim(); ++i) u[i] = cxd(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    cxd lhs(0);
    for (std::size_t q = 0; q < model.quad.nodes.size(); ++q) {
      const ZPoint& zq = model.quad.nodes[q];
      const double hv = std::real(h.eval(TPoint{}, zq)(0, 0));
      const cxd fq = model.monomials(zq).transpose() * u;
      const cxd kq = bergman::kernel_eval(model, zq, z)(0, 0);
      lhs += model.quad.weights[q] * hv * std::conj(kq) * fq;
    }
    const cxd rhs = model.monomials(z).transpose() * u;
    REQUIRE(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(rhs)));

    // norm form consistency: u^* G u is the quadrature integral of |f|^2 h
    double direct = 0.0;
    for (std::size_t q = 0; q < model.quad.nodes.size(); ++q) {
      const double hv = std::real(h.eval(TPoint{}, model.quad.nodes[q])(0, 0));
      direct += model.quad.weights[q] * hv *
                std::norm(cxd(model.monomials(model.quad.nodes[q]).transpose() * u));
    }
    REQUIRE(std::abs(direct - std::real(u.dot(model.gram * u))) < 1e-10 * (1.0 + direct));
  }

  CVec sig(1);
  sig[0] = cxd(0.8, -0.6);
  const double lhs = bergman::eval_functional_norm(model, z, sig);
  const double rhs = std::real((sig.adjoint() * bergman::kernel_eval(model, z, z) * sig)(0, 0));
  REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, rhs));
}

TEST_CASE("empty fibers give dimension-0 models with zero kernels") {
  RealField rho;
  rho.m = 0;
  rho.n = 1;
  rho.value = [](const TPoint&, const ZPoint& z) { return std::norm(z.c[0]) + 1.0; };
  const auto domain =
      geometry::make_sublevel(field_ptr(rho), geometry::square_box(1, 1.5), TPoint{});
  const auto model = bergman::build_model(domain, flat_weight(), TPoint{}, 4, 4, 17);
  REQUIRE(model.empty());
  REQUIRE(bergman::kernel_eval(model, zpoint1(cxd(0, 0)), zpoint1(cxd(0, 0))).cwiseAbs().maxCoeff() ==
          0.0);
  CVec one(1);
  one[0] = 1.0;
  REQUIRE(bergman::eval_functional_norm(model, zpoint1(cxd(0, 0)), one) == 0.0);
  REQUIRE(bergman::extremal_check(model, zpoint1(cxd(0, 0)), one).exact == 0.0);
}

TEST_CASE("pivoted factorization solves badly scaled Hermitian systems") {
  rng_state = 5;
  const int n = 8;
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cxd(u01() - 0.5, u01() - 0.5);
  CMat g = m * m.adjoint() + 0.1 * CMat::Identity(n, n);
  RVec d(n);
  for (int i = 0; i < n; ++i) d[i] = std::pow(10.0, 6.0 * u01() - 3.0);
  g = d.asDiagonal() * g * d.asDiagonal();
  g = 0.5 * (g + g.adjoint().eval());

  const auto f = bergman::factor_gram(g);
  REQUIRE(f.kept() == n);
  CVec b(n);
  for (int i = 0; i < n; ++i) b[i] = cxd(u01() - 0.5, u01() - 0.5);
  const CVec x = bergman::solve_gram(f, b);
  REQUIRE((g * x - b).norm() < 1e-8 * g.cwiseAbs().maxCoeff());
  const double direct = std::real(b.dot(g.fullPivLu().solve(b).eval()));
  REQUIRE(std::abs(bergman::inv_quad_form(f, b) - direct) < 1e-8 * (1.0 + std::abs(direct)));
}

TEST_CASE("rank-deficient Grams drop directions and pseudo-solve") {
  CMat g(2, 2);
  g << 2.0, 2.0, 2.0, 2.0;
  const auto f = bergman::factor_gram(g);
  REQUIRE(f.kept() == 1);
  REQUIRE(f.dropped.size() == 1);
  CVec c(2);
  c << 1.0, 1.0;
  REQUIRE(std::abs(bergman::inv_quad_form(f, c) - 0.5) < 1e-14);

  REQUIRE_THROWS_AS(bergman::factor_gram(CMat::Zero(2, 2)), std::runtime_error);
}

TEST_CASE("Monte Carlo Grams are reproducible for a fixed seed") {
  RealField rho;
  rho.m = 0;
  rho.n = 1;
  rho.value = [](const TPoint&, const ZPoint& z) { return std::norm(z.c[0]) - 1.0; };
  const auto domain =
      geometry::make_sublevel(field_ptr(rho), geometry::square_box(1, 1.1), TPoint{});
  const auto a = bergman::build_model(domain, flat_weight(), TPoint{}, 3, 4, 123);
  const auto b = bergman::build_model(domain, flat_weight(), TPoint{}, 3, 4, 123);
  REQUIRE((a.gram - b.gram).cwiseAbs().maxCoeff() == 0.0);
  const auto c = bergman::build_model(domain, flat_weight(), TPoint{}, 3, 4, 124);
  REQUIRE((a.gram - c.gram).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("build_model validates its inputs") {
  REQUIRE_THROWS_AS(
      bergman::build_model(geometry::make_disc(1.0), flat_weight(), TPoint{}, -1, 4),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      bergman::build_model(geometry::make_polydisc(RVec::Constant(2, 1.0)), flat_weight(), TPoint{}, 2, 4),
      std::invalid_argument);
}
