// registry.hpp - named built-in weights, defining functions, and experiment
// kinds for the config-driven runner.  Every entry carries exact derivative
// closures so the curvature and variation pipelines never fall back to
// finite differences on the weight itself.
#pragma once

#include "fields.hpp"
#include "types.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkl::registry {

// ---------------- weights ----------------

namespace detail {

inline double abs2_sum(const CVec& c) {
  double a = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) a += std::norm(c[i]);
  return a;
}

// phi = sum |z_v|^2, independent of t
inline RealField phi_fock(int m, int n) {
  RealField f;
  f.m = m;
  f.n = n;
  f.value = [](const TPoint&, const ZPoint& z) { return abs2_sum(z.c); };
  f.dt_fn = [](const TPoint&, const ZPoint&, int) { return cxd(0); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int v) { return std::conj(z.c[v]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int v, int u) { return cxd(v == u ? 1 : 0); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return f;
}

// phi = sum |t_q|^2 + sum |z_v|^2
inline RealField phi_product(int m, int n) {
  RealField f;
  f.m = m;
  f.n = n;
  f.value = [](const TPoint& t, const ZPoint& z) { return abs2_sum(t.c) + abs2_sum(z.c); };
  f.dt_fn = [](const TPoint& t, const ZPoint&, int q) { return std::conj(t.c[q]); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int v) { return std::conj(z.c[v]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int q, int s) { return cxd(q == s ? 1 : 0); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int v, int u) { return cxd(v == u ? 1 : 0); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return f;
}

// phi = sum |z_v - t_v|^2, needs matching dimensions
inline RealField phi_shifted(int m, int n) {
  if (m != n)
    throw std::invalid_argument("registry: shifted-gaussian needs matching parameter and "
                                "fiber dimensions");
  RealField f;
  f.m = m;
  f.n = n;
  f.value = [](const TPoint& t, const ZPoint& z) { return abs2_sum(z.c - t.c); };
  f.dt_fn = [](const TPoint& t, const ZPoint& z, int q) { return -std::conj(z.c[q] - t.c[q]); };
  f.dz_fn = [](const TPoint& t, const ZPoint& z, int v) { return std::conj(z.c[v] - t.c[v]); };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int q, int s) { return cxd(q == s ? 1 : 0); };
  f.dzz_fn = [](const TPoint&, const ZPoint&, int v, int u) { return cxd(v == u ? 1 : 0); };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int q, int u) { return cxd(q == u ? -1 : 0); };
  return f;
}

// phi = (a + a^2)/2 with a = sum |z_v|^2
inline RealField phi_radial_quartic(int m, int n) {
  RealField f;
  f.m = m;
  f.n = n;
  f.value = [](const TPoint&, const ZPoint& z) {
    const double a = abs2_sum(z.c);
    return 0.5 * (a + a * a);
  };
  f.dt_fn = [](const TPoint&, const ZPoint&, int) { return cxd(0); };
  f.dz_fn = [](const TPoint&, const ZPoint& z, int v) {
    const double a = abs2_sum(z.c);
    return 0.5 * (1.0 + 2.0 * a) * std::conj(z.c[v]);
  };
  f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  f.dzz_fn = [](const TPoint&, const ZPoint& z, int v, int u) {
    const double a = abs2_sum(z.c);
    cxd out = std::conj(z.c[v]) * z.c[u];
    if (v == u) out += 0.5 * (1.0 + 2.0 * a);
    return out;
  };
  f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
  return f;
}

// rank-2 diagonal metric diag(e^{-a}, e^{-2a}) with a = |z|^2, one fiber variable
inline metric::MetricField matrix_demo(int m, int n) {
  if (n != 1)
    throw std::invalid_argument("registry: matrix-demo is a one-variable weight");
  metric::MetricField h;
  h.rank = 2;
  h.m = m;
  h.n = 1;
  h.eval = [](const TPoint&, const ZPoint& z) {
    const double a = std::norm(z.c[0]);
    CMat v = CMat::Zero(2, 2);
    v(0, 0) = std::exp(-a);
    v(1, 1) = std::exp(-2.0 * a);
    return v;
  };
  h.dt_fn = [](const TPoint&, const ZPoint&, int) { return CMat(CMat::Zero(2, 2)); };
  h.dz_fn = [](const TPoint&, const ZPoint& z, int) {
    const double a = std::norm(z.c[0]);
    const cxd zb = std::conj(z.c[0]);
    CMat v = CMat::Zero(2, 2);
    v(0, 0) = -zb * std::exp(-a);
    v(1, 1) = -2.0 * zb * std::exp(-2.0 * a);
    return v;
  };
  h.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return CMat(CMat::Zero(2, 2)); };
  h.dzz_fn = [](const TPoint&, const ZPoint& z, int, int) {
    const double a = std::norm(z.c[0]);
    CMat v = CMat::Zero(2, 2);
    v(0, 0) = (a - 1.0) * std::exp(-a);
    v(1, 1) = (4.0 * a - 2.0) * std::exp(-2.0 * a);
    return v;
  };
  h.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return CMat(CMat::Zero(2, 2)); };
  return h;
}

struct WeightEntry {
  const char* name;
  const char* summary;
};

inline const std::vector<WeightEntry>& weight_table() {
  // keep sorted by name; the listing is promised stable and sorted
  static const std::vector<WeightEntry> table = {
      {"flat", "constant weight 1 (rank 1)"},
      {"fock", "e^{-|z|^2}"},
      {"matrix-demo", "rank-2 diagonal diag(e^{-|z|^2}, e^{-2|z|^2})"},
      {"product-gaussian", "e^{-|t|^2 - |z|^2}"},
      {"radial-quartic", "e^{-(|z|^2 + |z|^4)/2}"},
      {"shifted-gaussian", "e^{-|z - t|^2}"},
  };
  return table;
}

struct RhoEntry {
  const char* name;
  const char* summary;
};

inline const std::vector<RhoEntry>& rho_table() {
  static const std::vector<RhoEntry> table = {
      {"shrinking-disc", "|z|^2 - 1 + |t|^2/4 (fibers move with t)"},
      {"unit-disc", "|z|^2 - 1"},
  };
  return table;
}

struct ExperimentEntry {
  const char* name;
  const char* summary;
};

inline const std::vector<ExperimentEntry>& experiment_table() {
  static const std::vector<ExperimentEntry> table = {
      {"curvature", "block curvature operators and their positivity verdicts"},
      {"kernel", "truncated kernel diagonal with dual-identity and extremal checks"},
      {"nakano", "projection and curvature operators of the model family, parameter Hessian"},
      {"psh", "plurisubharmonicity probe of the log kernel over a parameter grid"},
      {"ramadanov", "monotone kernel convergence along a domain exhaustion"},
      {"twist", "auxiliary-function algebra: ODE residual, constants, M matrix"},
  };
  return table;
}

} // namespace detail

inline std::vector<std::string> weight_names() {
  std::vector<std::string> names;
  for (const auto& e : detail::weight_table()) names.emplace_back(e.name);
  return names;
}

inline bool has_weight(const std::string& name) {
  for (const auto& e : detail::weight_table())
    if (name == e.name) return true;
  return false;
}

// named weight with m parameter directions on an n-variable fiber
inline metric::MetricField make_weight(const std::string& name, int m, int n) {
  if (m < 0 || n < 1)
    throw std::invalid_argument("registry: weight dimensions out of range");
  if (name == "flat") return metric::constant_metric(CMat::Identity(1, 1), m, n);
  if (name == "fock") return metric::metric_from_weight(field_ptr(detail::phi_fock(m, n)));
  if (name == "matrix-demo") return detail::matrix_demo(m, n);
  if (name == "product-gaussian")
    return metric::metric_from_weight(field_ptr(detail::phi_product(m, n)));
  if (name == "radial-quartic")
    return metric::metric_from_weight(field_ptr(detail::phi_radial_quartic(m, n)));
  if (name == "shifted-gaussian")
    return metric::metric_from_weight(field_ptr(detail::phi_shifted(m, n)));
  throw std::invalid_argument("registry: unknown weight '" + name + "'");
}

inline std::vector<std::string> rho_names() {
  std::vector<std::string> names;
  for (const auto& e : detail::rho_table()) names.emplace_back(e.name);
  return names;
}

inline bool has_rho(const std::string& name) {
  for (const auto& e : detail::rho_table())
    if (name == e.name) return true;
  return false;
}

// named defining functions, normalized to value -1 at the center
inline RealFieldPtr make_rho(const std::string& name) {
  if (name == "unit-disc") {
    RealField f;
    f.m = 0;
    f.n = 1;
    f.value = [](const TPoint&, const ZPoint& z) { return std::norm(z.c[0]) - 1.0; };
    f.dz_fn = [](const TPoint&, const ZPoint& z, int) { return std::conj(z.c[0]); };
    f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
    return field_ptr(std::move(f));
  }
  if (name == "shrinking-disc") {
    RealField f;
    f.m = 1;
    f.n = 1;
    f.value = [](const TPoint& t, const ZPoint& z) {
      return std::norm(z.c[0]) - 1.0 + 0.25 * std::norm(t.c[0]);
    };
    f.dt_fn = [](const TPoint& t, const ZPoint&, int) { return 0.25 * std::conj(t.c[0]); };
    f.dz_fn = [](const TPoint&, const ZPoint& z, int) { return std::conj(z.c[0]); };
    f.dtt_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0.25); };
    f.dzz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(1); };
    f.dtz_fn = [](const TPoint&, const ZPoint&, int, int) { return cxd(0); };
    return field_ptr(std::move(f));
  }
  throw std::invalid_argument("registry: unknown defining function '" + name + "'");
}

inline std::vector<std::string> experiment_names() {
  std::vector<std::string> names;
  for (const auto& e : detail::experiment_table()) names.emplace_back(e.name);
  return names;
}

inline bool has_experiment(const std::string& name) {
  for (const auto& e : detail::experiment_table())
    if (name == e.name) return true;
  return false;
}

namespace detail {

inline std::string padded(const std::string& name, std::size_t width) {
  return name + std::string(name.size() < width ? width - name.size() : 1, ' ');
}

} // namespace detail

// plain-text listing: sections in a fixed order, entries sorted within each
// section.  The extras section is reserved for user-loaded tables; none
// exist, so it always prints empty.
inline std::string listing() {
  std::ostringstream out;
  out << "experiments:\n";
  for (const auto& e : detail::experiment_table())
    out << "  " << detail::padded(e.name, 12) << e.summary << "\n";
  out << "weights:\n";
  for (const auto& e : detail::weight_table())
    out << "  " << detail::padded(e.name, 18) << e.summary << "\n";
  out << "defining functions:\n";
  for (const auto& e : detail::rho_table())
    out << "  " << detail::padded(e.name, 16) << e.summary << "\n";
  out << "extras:\n  (none)\n";
  return out.str();
}

} // namespace bkl::registry
