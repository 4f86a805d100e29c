// variation.hpp - plurisubharmonicity probes over the parameter space and
// monotone stage comparisons (domain exhaustions, metric ladders, cutoff
// ladders, dual-norm exhaustions)
//
// psh_check drives everything: central-difference complex Hessians in the 2m
// real coordinates with a Richardson step-halving check, plus an independent
// circle mean-value test (16 samples on circles of radii 2*step and 8*step
// per complex coordinate line).  Values at or below log_floor count as -inf,
// and a grid that is -inf everywhere gets the all_minus_infinity verdict
// instead of a psh judgement.
#pragma once

#include "bergman.hpp"
#include "field_ops.hpp"
#include "fields.hpp"
#include "geometry.hpp"
#include "twist.hpp"
#include "types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bkl::variation {

using field_ops::ModelFamily;

// ---------------- grids ----------------

struct GridSpec {
  std::vector<TPoint> points;
  int size() const { return static_cast<int>(points.size()); }
  bool empty() const { return points.empty(); }
};

inline GridSpec single_point(TPoint t) {
  GridSpec g;
  g.points.push_back(std::move(t));
  return g;
}

// uniform lattice in one complex parameter (m = 1)
inline GridSpec square_grid(double re_lo, double re_hi, double im_lo, double im_hi,
                            int nre, int nim) {
  if (nre < 1 || nim < 1)
    throw std::invalid_argument("square_grid: need at least one point per axis");
  if (!(re_lo <= re_hi) || !(im_lo <= im_hi))
    throw std::invalid_argument("square_grid: bounds out of order");
  GridSpec g;
  g.points.reserve(static_cast<std::size_t>(nre) * nim);
  for (int a = 0; a < nre; ++a) {
    const double re = nre == 1 ? re_lo : re_lo + (re_hi - re_lo) * a / (nre - 1);
    for (int b = 0; b < nim; ++b) {
      const double im = nim == 1 ? im_lo : im_lo + (im_hi - im_lo) * b / (nim - 1);
      g.points.push_back(tpoint1(cxd(re, im)));
    }
  }
  return g;
}

// ---------------- reports ----------------

enum class PSHVerdict { strictly_psh, psh, fail, all_minus_infinity };

inline const char* verdict_name(PSHVerdict v) {
  switch (v) {
    case PSHVerdict::strictly_psh: return "strictly-psh";
    case PSHVerdict::psh: return "psh";
    case PSHVerdict::fail: return "fail";
    case PSHVerdict::all_minus_infinity: return "all-minus-infinity";
  }
  return "?";
}

struct PSHReport {
  GridSpec grid;
  std::vector<double> values;                        // -inf sentinel allowed
  std::vector<CMat> hessians;                        // m x m; empty when the stencil hit -inf
  std::vector<double> min_eigs;                      // NaN when skipped
  std::vector<std::array<double, 2>> circle_deficits;  // per radius, worst line; NaN when skipped
  std::vector<double> usc_defects;                   // max(sample) - center on the small circles
  PSHVerdict verdict = PSHVerdict::fail;
  bool hessian_circle_agree = true;                  // both probes reach the same fail/no-fail call
  bool noisy = false;                                // some Richardson gap exceeded the noise ratio
  double step = 0.0;
  double tol = 0.0;
  // filled by kernel_variation on moving-fiber families
  std::vector<int> ladder;
  std::vector<std::vector<double>> ladder_values;    // per rung, per grid point (log scale)
  bool ladder_monotone = true;
};

enum class MonotoneDirection { nonincreasing, nondecreasing };

inline const char* direction_name(MonotoneDirection d) {
  return d == MonotoneDirection::nonincreasing ? "nonincreasing" : "nondecreasing";
}

struct MonotoneReport {
  std::vector<double> values;
  MonotoneDirection direction = MonotoneDirection::nonincreasing;
  double limit_estimate = 0.0;
  bool verdict = false;
  double worst_violation = 0.0;       // most negative adjacent margin, 0 when clean
  double worst_pair_violation = 0.0;  // same over all stage pairs
  double gap = std::numeric_limits<double>::quiet_NaN();    // cutoff ladders: bound - last value
  double bound = std::numeric_limits<double>::quiet_NaN();  // cutoff ladders: inner-domain value
  double tol = 0.0;
  int stages() const { return static_cast<int>(values.size()); }
};

struct DualExhaustionReport {
  MonotoneReport monotone;  // stage norms at the first grid point; verdict covers every point
  PSHReport psh;            // log of the limit-stage norm over the grid
};

// ---------------- internals ----------------

namespace detail {

inline constexpr int kCircleSamples = 16;
inline constexpr double kRadiusFactors[2] = {2.0, 8.0};
inline constexpr double kNoiseRatio = 1e-3;   // Richardson gap vs Hessian scale
inline constexpr double kLadderSlack = 1e-3;  // log-scale slack for cutoff rung comparisons

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::string tstr(const TPoint& t) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < t.dim(); ++i) {
    if (i) os << ", ";
    os << t.c[i].real() << (t.c[i].imag() < 0 ? "" : "+") << t.c[i].imag() << "i";
  }
  os << ")";
  return os.str();
}

inline double log_or_ninf(double x) {
  if (!(x > 0.0)) return neg_inf();
  const double v = std::log(x);
  return v <= log_floor ? neg_inf() : v;
}

// memoized scalar function of t; collapses underflow and NaN to -inf so the
// stencil logic only ever sees finite values or the sentinel
struct CachedValue {
  std::function<double(const TPoint&)> fn;
  std::shared_ptr<std::unordered_map<std::string, double>> memo =
      std::make_shared<std::unordered_map<std::string, double>>();
  double operator()(const TPoint& t) const {
    const std::string key = tpoint_key(t);
    if (auto it = memo->find(key); it != memo->end()) return it->second;
    double v = fn(t);
    if (v != v || v <= log_floor) v = neg_inf();
    (*memo)[key] = v;
    return v;
  }
};

inline MonotoneReport monotone_from_values(std::vector<double> values,
                                           MonotoneDirection direction, double tol) {
  MonotoneReport rep;
  rep.values = std::move(values);
  rep.direction = direction;
  rep.tol = tol;
  rep.verdict = true;
  if (!rep.values.empty()) rep.limit_estimate = rep.values.back();
  const double sign = direction == MonotoneDirection::nonincreasing ? 1.0 : -1.0;
  const int n = rep.stages();
  for (int i = 0; i + 1 < n; ++i) {
    const double margin = sign * (rep.values[i] - rep.values[i + 1]);
    const double slack = tol * (1.0 + std::max(std::abs(rep.values[i]), std::abs(rep.values[i + 1])));
    if (margin < -slack) rep.verdict = false;
    rep.worst_violation = std::min(rep.worst_violation, margin);
  }
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      const double margin = sign * (rep.values[i] - rep.values[k]);
      const double slack = 2.0 * tol * (1.0 + std::max(std::abs(rep.values[i]), std::abs(rep.values[k])));
      if (margin < -slack) rep.verdict = false;
      rep.worst_pair_violation = std::min(rep.worst_pair_violation, margin);
    }
  return rep;
}

}  // namespace detail

// ---------------- psh probe ----------------

// FD complex Hessian plus circle mean-value test of a scalar function over the
// parameter grid.  Values <= log_floor are treated as -inf; a point whose
// stencil or circle touches -inf is skipped (NaN entries) and the verdict is
// formed from the remaining points, matching the psh-or-identically--inf
// dichotomy.  Throws when the grid is empty or when the Richardson check
// flags every computable point as noise-dominated.
inline PSHReport psh_check(const std::function<double(const TPoint&)>& value,
                           const GridSpec& grid, double step = 1e-3, double tol = 1e-6) {
  if (grid.empty())
    throw std::invalid_argument("psh_check: empty t-grid (the stencil needs at least one point)");
  if (!(step > 0.0) || !std::isfinite(step))
    throw std::invalid_argument("psh_check: fd step must be positive and finite");
  const int m = grid.points[0].dim();
  if (m < 1) throw std::invalid_argument("psh_check: grid points need at least one parameter");
  for (const TPoint& t : grid.points)
    if (t.dim() != m) throw std::invalid_argument("psh_check: grid points have mixed dimensions");

  detail::CachedValue f{value};
  auto fz = [&f](const TPoint& t, const ZPoint&) -> cxd { return cxd(f(t), 0.0); };
  const ZPoint zdummy = ZPoint::zero(1);

  const int np = grid.size();
  PSHReport rep;
  rep.grid = grid;
  rep.step = step;
  rep.tol = tol;
  rep.values.assign(np, 0.0);
  rep.hessians.assign(np, CMat());
  rep.min_eigs.assign(np, detail::nan());
  rep.circle_deficits.assign(np, {detail::nan(), detail::nan()});
  rep.usc_defects.assign(np, detail::nan());

  int finite_points = 0, stencil_points = 0, noisy_points = 0;
  bool hess_fail = false, circle_fail = false;
  double hess_min = std::numeric_limits<double>::infinity();

  for (int p = 0; p < np; ++p) {
    const TPoint& t = grid.points[p];
    const double v = f(t);
    rep.values[p] = v;
    if (is_neg_inf(v)) continue;
    ++finite_points;

    // Hessian at the base step and at half the step; upper triangle only,
    // the mirrored entries are forced by hermiticity
    CMat coarse(m, m), fine(m, m);
    for (int j = 0; j < m; ++j)
      for (int k = j; k < m; ++k) {
        coarse(j, k) = bkl::detail::fd_d2(fz, t, zdummy, Var::T, j, Var::T, k, step);
        fine(j, k) = bkl::detail::fd_d2(fz, t, zdummy, Var::T, j, Var::T, k, 0.5 * step);
        if (k > j) {
          coarse(k, j) = std::conj(coarse(j, k));
          fine(k, j) = std::conj(fine(j, k));
        }
      }
    if (coarse.allFinite() && fine.allFinite()) {
      ++stencil_points;
      CMat h = (4.0 * fine - coarse) / 3.0;
      h = 0.5 * (h + h.adjoint().eval());
      const double gap = (fine - coarse).cwiseAbs().maxCoeff();
      const double scale = 1.0 + h.cwiseAbs().maxCoeff();
      if (gap > detail::kNoiseRatio * scale) {
        ++noisy_points;
        rep.noisy = true;
      }
      Eigen::SelfAdjointEigenSolver<CMat> es(h);
      const double me = es.eigenvalues().minCoeff();
      rep.hessians[p] = std::move(h);
      rep.min_eigs[p] = me;
      hess_min = std::min(hess_min, me);
      if (me < -tol) hess_fail = true;
    }

    // circle means per complex coordinate line, two radii; a circle touching
    // -inf is dropped rather than judged
    double usc = -std::numeric_limits<double>::infinity();
    bool usc_seen = false;
    for (int ri = 0; ri < 2; ++ri) {
      double worst = std::numeric_limits<double>::infinity();
      bool seen = false;
      for (int j = 0; j < m; ++j) {
        const double rad = detail::kRadiusFactors[ri] * step * (1.0 + std::abs(t.c[j]));
        double mean = 0.0;
        bool ok = true;
        for (int s = 0; s < detail::kCircleSamples; ++s) {
          const double ang = 2.0 * pi * s / detail::kCircleSamples;
          TPoint ts = t;
          ts.c[j] += rad * cxd(std::cos(ang), std::sin(ang));
          const double vs = f(ts);
          if (is_neg_inf(vs)) { ok = false; break; }
          mean += vs;
          if (ri == 0 && vs - v > usc) { usc = vs - v; usc_seen = true; }
        }
        if (!ok) continue;
        seen = true;
        worst = std::min(worst, mean / detail::kCircleSamples - v);
      }
      if (seen) {
        rep.circle_deficits[p][ri] = worst;
        if (worst < -tol) circle_fail = true;
      }
    }
    if (usc_seen) rep.usc_defects[p] = usc;
  }

  if (finite_points == 0) {
    rep.verdict = PSHVerdict::all_minus_infinity;
    return rep;
  }
  if (stencil_points > 0 && noisy_points == stencil_points)
    throw std::runtime_error("psh_check: step below noise floor (Richardson check failed at every grid point)");

  rep.hessian_circle_agree = (hess_fail == circle_fail);
  if (hess_fail || circle_fail)
    rep.verdict = PSHVerdict::fail;
  else if (stencil_points > 0 && hess_min > tol)
    rep.verdict = PSHVerdict::strictly_psh;
  else
    rep.verdict = PSHVerdict::psh;
  return rep;
}

// ---------------- kernel / measure variation ----------------

// squared dual norm of evaluation against sigma at z for the fiber model at t;
// raw value, not a log
inline double fiber_kernel_value(const ModelFamily& family, const TPoint& t,
                                 const ZPoint& z, const CVec& sigma) {
  const bergman::BergmanModel model = family.at(t);
  if (model.empty()) return 0.0;
  if (!geometry::contains(model.domain, z))
    throw std::invalid_argument("fiber_kernel_value: z outside a nonempty fiber");
  return bergman::eval_functional_norm(model, z, sigma);
}

// psh probe of t -> log <sigma (x) conj(sigma), K_t(z, zbar)>.  Fixed-fiber
// families are evaluated directly.  Families whose fibers move with t are
// replaced by models on the fixed covering polydisc of the sampling box with
// the cutoff-twisted weights h e^{-rho_j}: the report carries the value ladder
// over j (nondecreasing toward the fiber values) and the psh probe runs on the
// last rung.
inline PSHReport kernel_variation(const ModelFamily& family, const ZPoint& z,
                                  const CVec& sigma, const GridSpec& grid,
                                  std::vector<int> ladder = {4, 6, 8, 12},
                                  double step = 1e-3, double tol = 1e-6) {
  if (sigma.size() != family.weight.rank)
    throw std::invalid_argument("kernel_variation: sigma must have length r");
  const geometry::DomainSpec& dom = family.domain;
  const bool moving = dom.kind == geometry::DomainKind::sublevel && dom.rho && dom.rho->m > 0;

  if (!moving) {
    auto value = [&family, z, sigma](const TPoint& t) -> double {
      const bergman::BergmanModel model = family.at(t);
      if (model.empty()) return neg_inf();
      if (!geometry::contains(model.domain, z))
        throw std::invalid_argument("kernel_variation: z outside a nonempty fiber");
      return detail::log_or_ninf(bergman::eval_functional_norm(model, z, sigma));
    };
    return psh_check(value, grid, step, tol);
  }

  if (ladder.empty())
    throw std::invalid_argument("kernel_variation: moving fibers need a cutoff ladder");
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
    if (ladder[i] >= ladder[i + 1])
      throw std::invalid_argument("kernel_variation: cutoff ladder must increase");

  // covering polydisc of the sampling box
  RVec radii(dom.n);
  for (int i = 0; i < dom.n; ++i) {
    const double re = std::max(std::abs(dom.box.re_lo[i]), std::abs(dom.box.re_hi[i]));
    const double im = std::max(std::abs(dom.box.im_lo[i]), std::abs(dom.box.im_hi[i]));
    radii[i] = std::hypot(re, im);
  }
  const geometry::DomainSpec cover = geometry::make_polydisc(radii);
  if (!geometry::contains(cover, z))
    throw std::invalid_argument("kernel_variation: z outside the covering domain");
  RealFieldPtr rho = dom.rho;
  if (dom.rho_shift != 0.0) rho = field_ptr(shift_field(*dom.rho, dom.rho_shift));

  std::vector<detail::CachedValue> rung_fn;
  rung_fn.reserve(ladder.size());
  for (int j : ladder) {
    ModelFamily fam{cover, twist::twisted_weight(family.weight, rho, j),
                    family.degree, family.quad_order, family.seed};
    auto value = [fam, z, sigma](const TPoint& t) -> double {
      return detail::log_or_ninf(bergman::eval_functional_norm(fam.at(t), z, sigma));
    };
    rung_fn.push_back(detail::CachedValue{value});
  }

  std::vector<std::vector<double>> ladder_values(ladder.size());
  for (std::size_t r = 0; r < ladder.size(); ++r) {
    ladder_values[r].reserve(grid.points.size());
    for (const TPoint& t : grid.points) ladder_values[r].push_back(rung_fn[r](t));
  }
  bool monotone = true;
  for (std::size_t r = 0; r + 1 < ladder.size(); ++r)
    for (std::size_t p = 0; p < grid.points.size(); ++p)
      if (ladder_values[r + 1][p] < ladder_values[r][p] - detail::kLadderSlack) monotone = false;

  auto last = rung_fn.back();
  PSHReport rep = psh_check([last](const TPoint& t) { return last(t); }, grid, step, tol);
  rep.ladder = std::move(ladder);
  rep.ladder_values = std::move(ladder_values);
  rep.ladder_monotone = monotone;
  return rep;
}

// an atom of the measure: a holomorphic position curve plus a fixed pairing
// vector in the fiber rank
struct AtomPath {
  std::function<ZPoint(const TPoint&)> position;
  CVec sigma;
};

// psh probe of t -> log of the squared dual norm of f -> sum_k <f(z_k(t)), sigma_k>.
// An empty atom list gives the identically--inf report; an atom leaving its
// fiber raises an error that names the parameter point.
inline PSHReport measure_variation(const ModelFamily& family, const std::vector<AtomPath>& atoms,
                                   const GridSpec& grid, double step = 1e-3, double tol = 1e-6) {
  for (const AtomPath& a : atoms) {
    if (!a.position) throw std::invalid_argument("measure_variation: atom without a position curve");
    if (a.sigma.size() != family.weight.rank)
      throw std::invalid_argument("measure_variation: atom sigma must have length r");
  }
  auto value = [&family, &atoms](const TPoint& t) -> double {
    const bergman::BergmanModel model = family.at(t);
    if (model.empty()) return neg_inf();
    std::vector<std::pair<ZPoint, CVec>> a;
    a.reserve(atoms.size());
    for (const AtomPath& atom : atoms) a.emplace_back(atom.position(t), atom.sigma);
    try {
      return detail::log_or_ninf(bergman::measure_functional_norm(model, a));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string(e.what()) + " while probing t = " + detail::tstr(t));
    }
  };
  return psh_check(value, grid, step, tol);
}

// ---------------- monotone stage comparisons ----------------

// kernel pairings along an increasing family of domains with one weight:
// values must not increase, and the last stage estimates the limit
inline MonotoneReport ramadanov_domains(const geometry::Exhaustion& ex,
                                        const metric::MetricField& weight, const TPoint& t,
                                        const ZPoint& z, const CVec& sigma, int degree,
                                        int quad_order, double tol = 1e-9,
                                        std::uint64_t seed = 1) {
  if (ex.stages.empty()) throw std::invalid_argument("ramadanov_domains: empty exhaustion");
  if (!geometry::contains(ex.stages.front(), z))
    throw std::invalid_argument("ramadanov_domains: z outside the smallest stage");
  std::vector<double> values;
  values.reserve(ex.stages.size());
  for (std::size_t k = 0; k < ex.stages.size(); ++k) {
    const bergman::BergmanModel model =
        bergman::build_model(ex.stages[k], weight, t, degree, quad_order, mix_seed(seed, k));
    values.push_back(bergman::eval_functional_norm(model, z, sigma));
  }
  return detail::monotone_from_values(std::move(values), MonotoneDirection::nonincreasing, tol);
}

// kernel pairings along a pointwise nondecreasing ladder of weights on one
// domain: larger weights mean larger norms, so the pairings must not increase.
// The ladder ordering is spot-checked on quadrature nodes before any model is
// built, and a violation is an error, not a verdict.
inline MonotoneReport ramadanov_metrics(const geometry::DomainSpec& domain,
                                        const std::vector<metric::MetricField>& ladder,
                                        const TPoint& t, const ZPoint& z, const CVec& sigma,
                                        int degree, int quad_order, double tol = 1e-9,
                                        std::uint64_t seed = 1) {
  if (ladder.empty()) throw std::invalid_argument("ramadanov_metrics: empty weight ladder");
  const int r = ladder.front().rank;
  for (const metric::MetricField& h : ladder)
    if (h.rank != r) throw std::invalid_argument("ramadanov_metrics: mixed ladder ranks");

  const geometry::QuadratureRule probe =
      geometry::sample_quadrature(domain, std::min(quad_order, 6), mix_seed(seed, 0x5afe));
  for (std::size_t l = 0; l + 1 < ladder.size(); ++l)
    for (std::size_t q = 0; q < probe.nodes.size(); ++q) {
      const CMat lo = ladder[l].eval(t, probe.nodes[q]);
      const CMat hi = ladder[l + 1].eval(t, probe.nodes[q]);
      const CMat diff = 0.5 * ((hi - lo) + (hi - lo).adjoint().eval());
      const double slack = 1e-10 * (1.0 + std::max(lo.norm(), hi.norm()));
      double low = 0.0;
      if (r == 1) {
        low = std::real(diff(0, 0));
      } else {
        Eigen::SelfAdjointEigenSolver<CMat> es(diff);
        low = es.eigenvalues().minCoeff();
      }
      if (low < -slack)
        throw std::runtime_error("ramadanov_metrics: ladder decreases between stages " +
                                 std::to_string(l) + " and " + std::to_string(l + 1) +
                                 " at node " + std::to_string(q));
    }

  std::vector<double> values;
  values.reserve(ladder.size());
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    const bergman::BergmanModel model =
        bergman::build_model(domain, ladder[l], t, degree, quad_order, mix_seed(seed, l));
    values.push_back(bergman::eval_functional_norm(model, z, sigma));
  }
  return detail::monotone_from_values(std::move(values), MonotoneDirection::nonincreasing, tol);
}

// kernel pairings on the outer domain under the twisted weights h e^{-rho_j}:
// the values must not decrease in j and stay below the inner-domain pairing,
// which enters the report as the bound, with gap = bound - last value
inline MonotoneReport cutoff_convergence(const geometry::DomainSpec& inner,
                                         const geometry::DomainSpec& outer,
                                         const metric::MetricField& weight, RealFieldPtr rho,
                                         const std::vector<int>& ladder, const TPoint& t,
                                         const ZPoint& z, const CVec& sigma, int degree,
                                         int quad_order, double tol = 1e-6,
                                         std::uint64_t seed = 1) {
  if (ladder.empty()) throw std::invalid_argument("cutoff_convergence: empty cutoff ladder");
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
    if (ladder[i] >= ladder[i + 1])
      throw std::invalid_argument("cutoff_convergence: cutoff ladder must increase");

  const bergman::BergmanModel inner_model =
      bergman::build_model(inner, weight, t, degree, quad_order, mix_seed(seed, 0xb0d));
  const double bound = bergman::eval_functional_norm(inner_model, z, sigma);

  std::vector<double> values;
  values.reserve(ladder.size());
  for (std::size_t r = 0; r < ladder.size(); ++r) {
    const metric::MetricField twisted = twist::twisted_weight(weight, rho, ladder[r]);
    const bergman::BergmanModel model =
        bergman::build_model(outer, twisted, t, degree, quad_order, mix_seed(seed, r));
    values.push_back(bergman::eval_functional_norm(model, z, sigma));
  }
  MonotoneReport rep =
      detail::monotone_from_values(std::move(values), MonotoneDirection::nondecreasing, tol);
  rep.bound = bound;
  rep.gap = bound - rep.values.back();
  if (rep.values.back() > bound * (1.0 + tol) + tol) rep.verdict = false;
  return rep;
}

// squared dual norms of evaluation against sigma along an exhaustion, per grid
// point: stage norms must not increase at any t, and the log of the limit
// stage is probed for plurisubharmonicity over the grid
inline DualExhaustionReport dual_norm_exhaustion(const metric::MetricField& weight,
                                                 const geometry::Exhaustion& ex,
                                                 const ZPoint& z, const CVec& sigma,
                                                 const GridSpec& tgrid, int degree,
                                                 int quad_order, double step = 1e-3,
                                                 double tol = 1e-9, double psh_tol = 1e-6,
                                                 std::uint64_t seed = 1) {
  if (ex.stages.empty()) throw std::invalid_argument("dual_norm_exhaustion: empty exhaustion");
  if (tgrid.empty()) throw std::invalid_argument("dual_norm_exhaustion: empty t-grid");
  if (!geometry::contains(ex.stages.front(), z))
    throw std::invalid_argument("dual_norm_exhaustion: z outside the smallest stage");

  DualExhaustionReport rep;
  const std::size_t ns = ex.stages.size();
  auto stage_norm = [&](std::size_t k, const TPoint& t) -> double {
    const bergman::BergmanModel model =
        bergman::build_model(ex.stages[k], weight, t, degree, quad_order, mix_seed(seed, k));
    return bergman::eval_functional_norm(model, z, sigma);
  };

  bool verdict = true;
  double worst = 0.0, worst_pair = 0.0;
  for (int p = 0; p < tgrid.size(); ++p) {
    std::vector<double> values;
    values.reserve(ns);
    for (std::size_t k = 0; k < ns; ++k) values.push_back(stage_norm(k, tgrid.points[p]));
    MonotoneReport pr =
        detail::monotone_from_values(std::move(values), MonotoneDirection::nonincreasing, tol);
    verdict = verdict && pr.verdict;
    worst = std::min(worst, pr.worst_violation);
    worst_pair = std::min(worst_pair, pr.worst_pair_violation);
    if (p == 0) rep.monotone = std::move(pr);
  }
  rep.monotone.verdict = verdict;
  rep.monotone.worst_violation = worst;
  rep.monotone.worst_pair_violation = worst_pair;

  const std::size_t last = ns - 1;
  auto value = [&stage_norm, last](const TPoint& t) -> double {
    return detail::log_or_ninf(stage_norm(last, t));
  };
  rep.psh = psh_check(value, tgrid, step, psh_tol);
  return rep;
}

}  // namespace bkl::variation
