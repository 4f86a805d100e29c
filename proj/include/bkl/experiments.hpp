// experiments.hpp - the six experiment drivers behind the runner.  Each takes
// a resolved config, computes its checks, writes one CSV artifact into the
// out directory, and returns the report; everything downstream of the seed is
// deterministic.
#pragma once

#include "bergman.hpp"
#include "config.hpp"
#include "curvature.hpp"
#include "field_ops.hpp"
#include "fields.hpp"
#include "geometry.hpp"
#include "registry.hpp"
#include "report.hpp"
#include "twist.hpp"
#include "types.hpp"
#include "variation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkl::experiments {

namespace detail {

// rethrow module failures with the check they were feeding named
template <class Fn>
auto stage(const char* check, Fn&& fn) {
  try {
    return fn();
  } catch (const config::ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("check " + std::string(check) + ": " + e.what());
  }
}

inline geometry::DomainSpec make_domain(const config::ExperimentConfig& cfg) {
  if (cfg.domain_kind == "disc") return geometry::make_disc(cfg.domain_radii[0]);
  if (cfg.domain_kind == "polydisc") {
    RVec radii(static_cast<Eigen::Index>(cfg.domain_radii.size()));
    for (std::size_t i = 0; i < cfg.domain_radii.size(); ++i)
      radii[static_cast<Eigen::Index>(i)] = cfg.domain_radii[i];
    return geometry::make_polydisc(radii);
  }
  if (cfg.domain_kind == "ball") return geometry::make_ball(cfg.domain_dim, cfg.domain_radii[0]);
  const RealFieldPtr rho = registry::make_rho(cfg.domain_rho);
  return geometry::make_sublevel(rho, geometry::square_box(rho->n, cfg.domain_box),
                                 TPoint::zero(rho->m));
}

inline ZPoint probe_z(const config::ExperimentConfig& cfg, int n) {
  CVec c = CVec::Zero(n);
  c[0] = cxd(cfg.probe_z_re, cfg.probe_z_im);
  return ZPoint(std::move(c));
}

inline TPoint probe_t(const config::ExperimentConfig& cfg) {
  return tpoint1(cxd(cfg.probe_t_re, cfg.probe_t_im));
}

inline CVec unit_sigma(int rank) {
  CVec s = CVec::Zero(rank);
  s[0] = 1.0;
  return s;
}

inline std::string artifact_path(const config::ExperimentConfig& cfg,
                                 const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return (std::filesystem::path(cfg.out) / name).string();
}

inline report::RunReport base_report(const config::ExperimentConfig& cfg) {
  report::RunReport rep;
  rep.experiment = cfg.experiment;
  rep.config_echo = config::echo(cfg);
  return rep;
}

} // namespace detail

// kernel diagonal at the probe plus the identities that certify it: the
// factorized dual norm against the assembled kernel, the extremal sup
// against random lower bounds, and Gram hermiticity
inline report::RunReport run_kernel(const config::ExperimentConfig& cfg) {
  report::RunReport rep = detail::base_report(cfg);
  const geometry::DomainSpec dom = detail::make_domain(cfg);
  const metric::MetricField h = registry::make_weight(cfg.weight, 1, dom.n);
  const TPoint t = detail::probe_t(cfg);
  const geometry::DomainSpec fiber = geometry::fiber_domain(dom, t);
  const bergman::BergmanModel model = detail::stage("kernel_value", [&] {
    return bergman::build_model(fiber, h, t, cfg.degree, cfg.quad_order, cfg.seed);
  });
  const ZPoint z = detail::probe_z(cfg, dom.n);
  const CVec sigma = detail::unit_sigma(h.rank);

  const double value = detail::stage("kernel_value", [&] {
    return bergman::eval_functional_norm(model, z, sigma);
  });
  const CMat kzz = model.empty() ? CMat(CMat::Zero(h.rank, h.rank))
                                 : bergman::kernel_eval(model, z, z);
  const double direct = std::real(sigma.dot(kzz * sigma));
  const double gap = std::abs(value - direct);
  const double scale = 1.0 + std::abs(value);
  rep.checks.push_back({"kernel_" + cfg.domain_kind,
                        std::isfinite(value) && value >= 0.0 && gap <= cfg.tol * scale,
                        value, cfg.tol});
  rep.checks.push_back({"dual_identity", gap <= cfg.tol * scale, gap, cfg.tol * scale});

  const CVec coeffs = model.empty() ? CVec(CVec::Zero(0))
                                    : bergman::eval_functional_coeffs(model, z, sigma);
  const auto ext = detail::stage("extremal_gap", [&] {
    return bergman::extremal_check_functional(model, coeffs, cfg.samples, cfg.seed);
  });
  rep.checks.push_back({"extremal_gap", ext.gap >= -cfg.tol * (1.0 + std::abs(ext.exact)),
                        ext.gap, cfg.tol});
  rep.checks.push_back({"extremal_residual",
                        ext.maximizer_residual <= cfg.tol * (1.0 + std::abs(ext.exact)),
                        ext.maximizer_residual, cfg.tol});
  const double gram_scale =
      1e-12 * (1.0 + (model.empty() ? 0.0 : model.gram.cwiseAbs().maxCoeff()));
  rep.checks.push_back(
      {"gram_hermitian", model.gram_herm_error <= gram_scale, model.gram_herm_error,
       gram_scale});

  // radial profile of the kernel diagonal along the first coordinate axis
  report::CsvTable csv;
  csv.header = {"z_re", "z_im", "kernel"};
  const double reach =
      0.98 * (dom.kind == geometry::DomainKind::sublevel ? cfg.domain_box : dom.radii[0]);
  for (int k = 0; k <= 20; ++k) {
    CVec c = CVec::Zero(dom.n);
    c[0] = reach * k / 20.0;
    const ZPoint zk(std::move(c));
    if (!geometry::contains(fiber, zk)) continue;
    csv.rows.push_back({std::real(zk.c[0]), 0.0,
                        bergman::eval_functional_norm(model, zk, sigma)});
  }
  const std::string path = detail::artifact_path(cfg, "kernel_profile.csv");
  report::write_csv(path, csv);
  rep.artifacts.push_back(path);
  return rep;
}

// curvature identities at the probe: the scalar-weight Hessian identity, the
// two assemblies of the delta-scaled operator, and the verdict of the
// twisted block against the configured expectation
inline report::RunReport run_curvature(const config::ExperimentConfig& cfg) {
  report::RunReport rep = detail::base_report(cfg);
  const metric::MetricField h = registry::make_weight(cfg.weight, 1, 1);
  const TPoint t = detail::probe_t(cfg);
  const ZPoint z = detail::probe_z(cfg, 1);

  const curvature::CurvatureBlock full = detail::stage("scalar_hessian_agreement", [&] {
    return curvature::theta_full(h, t, z);
  });
  if (h.rank == 1 && h.scalar_phi) {
    const RealFieldPtr phi = h.scalar_phi;
    CMat want(2, 2);
    want(0, 0) = phi->dtt(t, z, 0, 0);
    want(0, 1) = phi->dtz(t, z, 0, 0);
    want(1, 0) = phi->dzt(t, z, 0, 0);
    want(1, 1) = phi->dzz(t, z, 0, 0);
    const double diff = (full.assembled - want).cwiseAbs().maxCoeff();
    rep.checks.push_back({"scalar_hessian_agreement", diff <= cfg.tol, diff, cfg.tol});
  }

  const curvature::CurvatureBlock direct = curvature::theta_delta(h, cfg.delta, t, z);
  const curvature::CurvatureBlock subtr = detail::stage("delta_subtraction_gap", [&] {
    return curvature::theta_delta_subtraction(h, cfg.delta, t, z);
  });
  const double gap = (direct.assembled - subtr.assembled).cwiseAbs().maxCoeff();
  rep.checks.push_back({"delta_subtraction_gap", gap <= cfg.tol, gap, cfg.tol});

  const RealField eta = curvature::zero_eta(1);
  const curvature::CurvatureBlock xi =
      curvature::xi_delta_eta(h, cfg.delta, eta, std::nullopt, t, z);
  rep.checks.push_back({"xi_hermitian", xi.herm_error <= cfg.tol, xi.herm_error, cfg.tol});
  const curvature::PositivityVerdict pv = curvature::griffiths_check(xi);
  const bool expect_ok =
      cfg.expect == "any" || cfg.expect == curvature::verdict_name(pv.verdict);
  rep.checks.push_back({"xi_verdict", expect_ok, pv.min_eig, pv.tol});

  // twisted-block spectrum along the real fiber axis at the probe parameter
  report::CsvTable csv;
  csv.header = {"z_re", "z_im", "min_eig", "herm_error"};
  for (int k = 0; k <= 10; ++k) {
    const ZPoint zk = zpoint1(cxd(-0.8 + 0.16 * k, 0.0));
    const curvature::CurvatureBlock xik =
        curvature::xi_delta_eta(h, cfg.delta, eta, std::nullopt, t, zk);
    const curvature::PositivityVerdict pvk = curvature::griffiths_check(xik);
    csv.rows.push_back({std::real(zk.c[0]), 0.0, pvk.min_eig, xik.herm_error});
  }
  const std::string path = detail::artifact_path(cfg, "curvature_eigs.csv");
  report::write_csv(path, csv);
  rep.artifacts.push_back(path);
  return rep;
}

// auxiliary-function algebra for one index: the defining ODE, the workable
// constants, the tan-argument band, and positivity of the M matrix on the
// configured defining function
inline report::RunReport run_twist(const config::ExperimentConfig& cfg) {
  report::RunReport rep = detail::base_report(cfg);
  twist::TwistParams params;
  try {
    params = cfg.twist_delta > 0 ? twist::make_twist_params(cfg.twist_j, cfg.twist_delta)
                                 : twist::choose_twist_constants(cfg.twist_j);
  } catch (const std::exception& e) {
    throw config::ConfigError(std::string("twist.delta: ") + e.what());
  }
  const double j3 = static_cast<double>(cfg.twist_j) * cfg.twist_j * cfg.twist_j;

  // scan the admissible band, keeping clear of the tan blow-up at its top
  const double band_lo = -1.0;
  const double band_hi = -1.0 + 0.99 * (params.rho_sup() + 1.0);
  report::CsvTable csv;
  csv.header = {"rho", "eta", "eta_d1", "ode_residual"};
  double resid_max = 0.0;
  for (int k = 0; k < cfg.probes; ++k) {
    const double rho = band_lo + (band_hi - band_lo) * k / (cfg.probes - 1);
    const twist::EtaJet jet = twist::twist_eta(rho, params);
    const double resid = std::abs(twist::ode_residual(rho, params));
    resid_max = std::max(resid_max, resid);
    csv.rows.push_back({rho, jet.value, jet.d1, resid});
  }

  rep.checks.push_back({"delta_margin", twist::delta_margin(cfg.twist_j, params.delta) > 0.0,
                        twist::delta_margin(cfg.twist_j, params.delta), 0.0});
  rep.checks.push_back(
      {"ode_residual_max", resid_max <= cfg.tol * j3, resid_max, cfg.tol * j3});
  const double c1d = params.c1 * params.delta;
  rep.checks.push_back(
      {"c1_delta_bound", c1d <= 1.0 + pi / 8.0 + 1e-12, c1d, 1.0 + pi / 8.0});
  const double arg_top = params.arg(band_hi);
  rep.checks.push_back({"tan_arg_range",
                        params.arg(-1.0) >= pi / 4.0 - 1e-12 && arg_top < pi / 2.0,
                        arg_top, pi / 2.0});

  // M matrix over the covered shell of the configured defining function
  const RealFieldPtr rho_field = registry::make_rho(cfg.rho);
  const RealField eta = twist::make_eta_field(rho_field, params);
  const TPoint t0 = TPoint::zero(rho_field->m);
  double m_min = std::numeric_limits<double>::infinity();
  constexpr double golden = 0.6180339887498949;
  for (int k = 0; k < cfg.probes; ++k) {
    const double s = (1.0 + band_hi) * (k + 0.5) / cfg.probes;  // rho = s - 1
    const double theta = 2.0 * pi * std::fmod(k * golden, 1.0);
    const ZPoint zk = zpoint1(std::sqrt(s) * cxd(std::cos(theta), std::sin(theta)));
    const curvature::CurvatureBlock mm = detail::stage("m_matrix_psd", [&] {
      return curvature::m_matrix(*rho_field, params, eta, t0, zk);
    });
    Eigen::SelfAdjointEigenSolver<CMat> es(mm.assembled, Eigen::EigenvaluesOnly);
    m_min = std::min(m_min, es.eigenvalues().minCoeff());
  }
  rep.checks.push_back({"m_matrix_psd", m_min >= -1e-10, m_min, 1e-10});

  const std::string path = detail::artifact_path(cfg, "twist_residuals.csv");
  report::write_csv(path, csv);
  rep.artifacts.push_back(path);
  return rep;
}

// plurisubharmonicity of the log kernel diagonal over the configured
// parameter grid, through both the Hessian stencil and the circle means
inline report::RunReport run_psh(const config::ExperimentConfig& cfg) {
  report::RunReport rep = detail::base_report(cfg);
  const geometry::DomainSpec dom = detail::make_domain(cfg);
  const metric::MetricField h = registry::make_weight(cfg.weight, 1, dom.n);
  field_ops::ModelFamily family;
  family.domain = dom;
  family.weight = h;
  family.degree = cfg.degree;
  family.quad_order = cfg.quad_order;
  family.seed = cfg.seed;
  const variation::GridSpec grid =
      variation::square_grid(cfg.grid_re_lo, cfg.grid_re_hi, cfg.grid_im_lo, cfg.grid_im_hi,
                             cfg.grid_re_n, cfg.grid_im_n);
  const ZPoint z = detail::probe_z(cfg, dom.n);
  const CVec sigma = detail::unit_sigma(h.rank);

  const variation::PSHReport pv = detail::stage("psh_verdict", [&] {
    return variation::kernel_variation(family, z, sigma, grid, cfg.ladder, cfg.fd_step,
                                       cfg.tol);
  });
  double worst_eig = 0.0;
  bool have_eig = false;
  for (double e : pv.min_eigs)
    if (!std::isnan(e)) {
      worst_eig = have_eig ? std::min(worst_eig, e) : e;
      have_eig = true;
    }
  rep.checks.push_back({"psh_verdict", pv.verdict != variation::PSHVerdict::fail,
                        worst_eig, cfg.tol});
  rep.checks.push_back({"probes_agree", pv.hessian_circle_agree,
                        pv.hessian_circle_agree ? 1.0 : 0.0, 0.0});
  rep.checks.push_back({"fd_quiet", !pv.noisy, pv.noisy ? 1.0 : 0.0, 0.0});
  if (!pv.ladder_values.empty())
    rep.checks.push_back({"ladder_monotone", pv.ladder_monotone,
                          pv.ladder_monotone ? 1.0 : 0.0, 0.0});

  report::CsvTable csv;
  csv.header = {"t_re",    "t_im",          "log_kernel",    "hessian_min_eig",
                "deficit_inner", "deficit_outer", "usc_defect"};
  for (std::size_t i = 0; i < pv.grid.points.size(); ++i) {
    const TPoint& t = pv.grid.points[i];
    csv.rows.push_back({std::real(t.c[0]), std::imag(t.c[0]), pv.values[i], pv.min_eigs[i],
                        pv.circle_deficits[i][0], pv.circle_deficits[i][1],
                        pv.usc_defects[i]});
  }
  const std::string path = detail::artifact_path(cfg, "psh_grid.csv");
  report::write_csv(path, csv);
  rep.artifacts.push_back(path);
  return rep;
}

// kernel pairings along the configured exhaustion stages; larger domains can
// only shrink the dual norm
inline report::RunReport run_ramadanov(const config::ExperimentConfig& cfg) {
  report::RunReport rep = detail::base_report(cfg);
  const geometry::DomainSpec dom = detail::make_domain(cfg);
  const geometry::Exhaustion ex = geometry::exhaust_radii(dom, cfg.stages);
  const metric::MetricField h = registry::make_weight(cfg.weight, 1, dom.n);
  const TPoint t = detail::probe_t(cfg);
  const ZPoint z = detail::probe_z(cfg, dom.n);
  const CVec sigma = detail::unit_sigma(h.rank);

  const variation::MonotoneReport mr = detail::stage("stages_nonincreasing", [&] {
    return variation::ramadanov_domains(ex, h, t, z, sigma, cfg.degree, cfg.quad_order,
                                        cfg.tol, cfg.seed);
  });
  rep.checks.push_back(
      {"stages_nonincreasing", mr.verdict, mr.worst_violation, cfg.tol});
  rep.checks.push_back(
      {"limit_finite", std::isfinite(mr.limit_estimate), mr.limit_estimate, 0.0});

  report::CsvTable csv;
  csv.header = {"stage", "radius", "value"};
  for (std::size_t k = 0; k < mr.values.size(); ++k)
    csv.rows.push_back({static_cast<double>(k), cfg.stages[k], mr.values[k]});
  const std::string path = detail::artifact_path(cfg, "ramadanov_stages.csv");
  report::write_csv(path, csv);
  rep.artifacts.push_back(path);
  return rep;
}

// operators of the model family at t = 0: the node-space projection, and the
// finite-difference parameter Hessian against its curvature-form prediction
inline report::RunReport run_nakano(const config::ExperimentConfig& cfg) {
  report::RunReport rep = detail::base_report(cfg);
  const geometry::DomainSpec dom = detail::make_domain(cfg);
  const metric::MetricField h = registry::make_weight(cfg.weight, 1, dom.n);
  field_ops::ModelFamily family;
  family.domain = dom;
  family.weight = h;
  family.degree = cfg.degree;
  family.quad_order = cfg.quad_order;
  family.seed = cfg.seed;
  const TPoint t0 = TPoint::zero(1);
  const bergman::BergmanModel model = detail::stage("projection_idempotent", [&] {
    return family.at(t0);
  });

  const CMat proj = detail::stage("projection_idempotent", [&] {
    return field_ops::field_projection(model).matrix;
  });
  const double idem = (proj * proj - proj).cwiseAbs().maxCoeff();
  rep.checks.push_back({"projection_idempotent", idem <= cfg.tol, idem, cfg.tol});
  const CMat wp = field_ops::node_weight_matrix(model) * proj;
  const double sa =
      (wp - wp.adjoint()).cwiseAbs().maxCoeff() / (1.0 + wp.cwiseAbs().maxCoeff());
  rep.checks.push_back({"projection_self_adjoint", sa <= cfg.tol, sa, cfg.tol});

  // random coefficient sections, constant in t
  std::mt19937_64 rng(mix_seed(cfg.seed, 0xa11a));
  std::normal_distribution<double> gauss;
  const int dim = model.dim();
  std::vector<CVec> us;
  std::vector<field_ops::CoeffFamily> secs;
  for (int s = 0; s < cfg.sections; ++s) {
    CVec u(dim);
    for (int i = 0; i < dim; ++i) u[i] = cxd(gauss(rng), gauss(rng));
    us.push_back(u);
    secs.emplace_back([u](const TPoint&) { return u; });
  }
  const field_ops::HessianReport hr = detail::stage("hessian_split_identity", [&] {
    return field_ops::t_u_hessian(family, secs, t0, cfg.fd_step);
  });

  // algebraic side: (Theta^E u, u) - ||Gamma u||^2 per section
  const CMat form = field_ops::curvature_form(model, 0, 0);
  const CMat gamma = field_ops::field_connection(model, 0).matrix;
  report::CsvTable csv;
  csv.header = {"section", "pairing", "norm2", "connection_norm2"};
  double rhs = 0.0;
  for (std::size_t s = 0; s < us.size(); ++s) {
    const CVec& u = us[s];
    const double pairing = std::real(u.dot(form * u));
    const CVec cov = gamma * u;
    const double cov2 = std::real(cov.dot(model.gram * cov));
    const double norm2 = std::real(u.dot(model.gram * u));
    rhs += pairing - cov2;
    csv.rows.push_back({static_cast<double>(s), pairing, norm2, cov2});
  }
  const double lhs = std::real(hr.hessian(0, 0));
  const double split = std::abs(lhs - rhs) / (1.0 + std::abs(rhs));
  // FD-limited: second differences across rebuilt models cap the accuracy
  rep.checks.push_back({"hessian_split_identity", split <= 1e-4, split, 1e-4});
  rep.checks.push_back(
      {"richardson_quiet", !hr.noisy, hr.richardson_gap, 0.0});

  const std::string path = detail::artifact_path(cfg, "nakano_sections.csv");
  report::write_csv(path, csv);
  rep.artifacts.push_back(path);
  return rep;
}

inline report::RunReport run(const config::ExperimentConfig& cfg) {
  if (cfg.experiment == "kernel") return run_kernel(cfg);
  if (cfg.experiment == "curvature") return run_curvature(cfg);
  if (cfg.experiment == "twist") return run_twist(cfg);
  if (cfg.experiment == "psh") return run_psh(cfg);
  if (cfg.experiment == "ramadanov") return run_ramadanov(cfg);
  if (cfg.experiment == "nakano") return run_nakano(cfg);
  throw config::ConfigError("unknown experiment '" + cfg.experiment + "'");
}

} // namespace bkl::experiments
