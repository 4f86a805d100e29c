#include <bkl/geometry.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace bkl;
using namespace bkl::geometry;

namespace {

double quad_monomial(const QuadratureRule& q, const std::vector<int>& a, const std::vector<int>& b) {
  cxd acc = 0.0;
  for (int k = 0; k < q.node_count(); ++k) {
    cxd v = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      v *= std::pow(q.nodes[k].c[i], a[i]) * std::pow(std::conj(q.nodes[k].c[i]), b[i]);
    acc += q.weights[k] * v;
  }
  REQUIRE(std::abs(acc.imag()) < 1e-12 * (1.0 + std::abs(acc)));
  return acc.real();
}

} // namespace

TEST_CASE("gauss_legendre01 integrates polynomials to declared degree") {
  const Rule1D r = gauss_legendre01(6);
  double s0 = 0, s5 = 0, s11 = 0;
  for (int i = 0; i < 6; ++i) {
    s0 += r.weights[i];
    s5 += r.weights[i] * std::pow(r.nodes[i], 5);
    s11 += r.weights[i] * std::pow(r.nodes[i], 11);
  }
  REQUIRE(std::abs(s0 - 1.0) < 1e-14);
  REQUIRE(std::abs(s5 - 1.0 / 6.0) < 1e-14);
  REQUIRE(std::abs(s11 - 1.0 / 12.0) < 1e-14);
}

TEST_CASE("gauss_jacobi01 handles the (1-x)^alpha factor") {
  // integral_0^1 x^7 (1-x)^2 dx = 2/(8*9*10) = 1/360
  const Rule1D r = gauss_jacobi01(5, 2);
  double total = 0, s7 = 0;
  for (int i = 0; i < 5; ++i) {
    total += r.weights[i];
    s7 += r.weights[i] * std::pow(r.nodes[i], 7);
  }
  REQUIRE(std::abs(total - 1.0 / 3.0) < 1e-14);
  REQUIRE(std::abs(s7 - 1.0 / 360.0) < 1e-15);
}

TEST_CASE("disc rule matches closed-form monomial integrals") {
  const DomainSpec disc = make_disc(1.0);
  const QuadratureRule q = sample_quadrature(disc, 6, 0);
  REQUIRE(q.exactness == 12);
  REQUIRE(std::abs(q.volume_estimate - pi) < 1e-12);
  REQUIRE(std::abs(quad_monomial(q, {1}, {1}) - pi / 2.0) < 1e-13);
  REQUIRE(std::abs(quad_monomial(q, {2}, {2}) - pi / 3.0) < 1e-13);
  REQUIRE(std::abs(quad_monomial(q, {3}, {0})) < 1e-13);
  REQUIRE(std::abs(quad_monomial(q, {1}, {2})) < 1e-13);
  REQUIRE(std::abs(monomial_integral(disc, {2}, {2}) - pi / 3.0) < 1e-15);
}

TEST_CASE("disc rule stays exact at the boundary degree") {
  const DomainSpec disc = make_disc(1.0);
  const QuadratureRule q = sample_quadrature(disc, 4, 0);
  // |z|^8 has total degree 8 = exactness
  REQUIRE(std::abs(quad_monomial(q, {4}, {4}) - pi / 5.0) < 1e-13);
}

TEST_CASE("scaled disc picks up the radius power") {
  const DomainSpec disc = make_disc(2.0);
  const QuadratureRule q = sample_quadrature(disc, 5, 0);
  REQUIRE(std::abs(quad_monomial(q, {1}, {1}) - 8.0 * pi) < 1e-11);
}

TEST_CASE("polydisc rule is an exact tensor product") {
  RVec radii(2);
  radii << 1.0, 0.5;
  const DomainSpec pd = make_polydisc(radii);
  const QuadratureRule q = sample_quadrature(pd, 5, 0);
  REQUIRE(std::abs(q.volume_estimate - domain_volume(pd)) < 1e-13);
  const double want = monomial_integral(pd, {1, 2}, {1, 2});
  REQUIRE(std::abs(quad_monomial(q, {1, 2}, {1, 2}) - want) < 1e-13);
  REQUIRE(std::abs(quad_monomial(q, {1, 0}, {0, 1})) < 1e-13);
}

TEST_CASE("ball rule reproduces simplex moments") {
  const DomainSpec b2 = make_ball(2, 1.0);
  const QuadratureRule q = sample_quadrature(b2, 6, 0);
  REQUIRE(std::abs(q.volume_estimate - pi * pi / 2.0) < 1e-12);
  REQUIRE(std::abs(quad_monomial(q, {1, 0}, {1, 0}) - pi * pi / 6.0) < 1e-12);
  REQUIRE(std::abs(quad_monomial(q, {1, 1}, {1, 1}) - pi * pi / 24.0) < 1e-12);
  REQUIRE(std::abs(quad_monomial(q, {1, 0}, {0, 1})) < 1e-12);

  const DomainSpec b2r = make_ball(2, 2.0);
  const QuadratureRule qr = sample_quadrature(b2r, 6, 0);
  REQUIRE(std::abs(quad_monomial(qr, {1, 0}, {1, 0}) - 32.0 * pi * pi / 3.0) < 1e-9);
  REQUIRE(std::abs(monomial_integral(b2r, {1, 0}, {1, 0}) - 32.0 * pi * pi / 3.0) < 1e-11);

  const DomainSpec b3 = make_ball(3, 1.3);
  const QuadratureRule q3 = sample_quadrature(b3, 3, 0);
  const double v3 = std::pow(pi * 1.3 * 1.3, 3) / 6.0;
  REQUIRE(std::abs(q3.volume_estimate - v3) < 1e-11);
  REQUIRE(std::abs(domain_volume(b3) - v3) < 1e-13);
}

TEST_CASE("one-dimensional ball degenerates to the disc rule") {
  const QuadratureRule qb = sample_quadrature(make_ball(1, 1.5), 4, 0);
  const QuadratureRule qd = sample_quadrature(make_disc(1.5), 4, 0);
  REQUIRE(qb.node_count() == qd.node_count());
  REQUIRE((qb.weights - qd.weights).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("sublevel sampling is deterministic and consistent") {
  auto rho = field_ptr(real_field_from_value(0, 1, [](const TPoint&, const ZPoint& z) {
    return z.c.squaredNorm() - 1.0;
  }));
  const DomainSpec dom = make_sublevel(rho, square_box(1, 1.2), TPoint{});
  const QuadratureRule a = sample_quadrature(dom, 8, 42);
  const QuadratureRule b = sample_quadrature(dom, 8, 42);
  const QuadratureRule c = sample_quadrature(dom, 8, 43);
  REQUIRE(a.monte_carlo);
  REQUIRE(a.node_count() == b.node_count());
  for (int i = 0; i < a.node_count(); ++i)
    REQUIRE((a.nodes[i].c - b.nodes[i].c).norm() == 0.0);
  REQUIRE((a.nodes[0].c - c.nodes[0].c).norm() > 0.0);  // different stream
  REQUIRE(std::abs(a.volume_estimate - pi) < 4.0 * a.volume_se + 1e-9);
  for (const auto& z : a.nodes) REQUIRE(contains(dom, z));
}

TEST_CASE("sublevel fibers move with the parameter") {
  // disc of squared radius 1 - |t|^2/4
  auto rho = field_ptr(real_field_from_value(1, 1, [](const TPoint& t, const ZPoint& z) {
    return z.c.squaredNorm() - 1.0 + 0.25 * t.c.squaredNorm();
  }));
  const DomainSpec dom = make_sublevel(rho, square_box(1, 1.1), tpoint1(0.0));
  const DomainSpec fib = fiber_domain(dom, tpoint1(1.0));
  REQUIRE(contains(dom, zpoint1(0.9)));
  REQUIRE(!contains(fib, zpoint1(0.9)));           // radius shrank to sqrt(3)/2
  REQUIRE(contains(fib, zpoint1(0.8)));
  const QuadratureRule q = sample_quadrature(fib, 16, 7);
  REQUIRE(std::abs(q.volume_estimate - 0.75 * pi) < 4.0 * q.volume_se + 1e-9);
}

TEST_CASE("geometric exhaustion is nested and monotone") {
  const Exhaustion ex = exhaust(make_disc(1.0), 3, 2.0);
  REQUIRE(ex.stages.size() == 3);
  REQUIRE(std::abs(ex.stages[2].radii[0] - 4.0) < 1e-15);

  auto rho = field_ptr(real_field_from_value(0, 1, [](const TPoint&, const ZPoint& z) {
    return z.c.squaredNorm() - 1.0;
  }));
  const Exhaustion es = exhaust(make_sublevel(rho, square_box(1, 1.2), TPoint{}), 3, 2.0);
  REQUIRE(std::abs(es.stages[0].rho_shift - 0.5) < 1e-15);
  REQUIRE(std::abs(es.stages[2].rho_shift - 0.125) < 1e-15);
  REQUIRE(!contains(es.stages[0], zpoint1(0.8)));  // |z|^2 = .64 > 1 - 1/2
  REQUIRE(contains(es.stages[2], zpoint1(0.8)));

  const Exhaustion er = exhaust_radii(make_disc(1.0), {1.0, 2.0, 4.0, 8.0});
  REQUIRE(er.stages.size() == 4);
  REQUIRE_THROWS(exhaust_radii(make_disc(1.0), {2.0, 1.0}));
}

TEST_CASE("constructor validation rejects bad input") {
  REQUIRE_THROWS(make_disc(0.0));
  REQUIRE_THROWS(make_ball(0, 1.0));
  REQUIRE_THROWS(sample_quadrature(make_disc(1.0), 0, 0));
  REQUIRE_THROWS(gauss_jacobi01(3, -1));
  REQUIRE_THROWS(domain_volume(make_sublevel(
      field_ptr(real_field_from_value(0, 1, [](const TPoint&, const ZPoint& z) {
        return z.c.squaredNorm() - 1.0;
      })),
      square_box(1, 1.2), TPoint{})));
}
