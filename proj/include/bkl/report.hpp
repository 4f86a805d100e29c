// report.hpp - check lines, run reports, and CSV artifacts for the experiment
// runner.  All numbers print in the shortest round-trip form so a report or
// CSV regenerated from the same config and seed is byte-identical.
#pragma once

#include "types.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace bkl::report {

// shortest decimal string that parses back to exactly x
inline std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc())
    throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf, res.ptr);
}

struct CheckLine {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tol = 0.0;
};

struct RunReport {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<CheckLine> checks;
  std::vector<std::string> artifacts;  // CSV paths written during the run

  bool all_pass() const {
    for (const CheckLine& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

// static environment stamp: toolchain only, nothing run-dependent
inline std::string environment_stamp() {
  std::string s = "precision=double eigen=";
  s += std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
       "." + std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang_major__)
  s += " compiler=clang-" + std::to_string(__clang_major__) + "." +
       std::to_string(__clang_minor__);
#elif defined(__GNUC__)
  s += " compiler=gcc-" + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#else
  s += " compiler=unknown";
#endif
  return s;
}

inline void print_report(const RunReport& rep, std::ostream& out) {
  out << "REPORT " << rep.experiment << "\n";
  out << "ENV " << environment_stamp() << "\n";
  for (const auto& [key, value] : rep.config_echo)
    out << "CONFIG " << key << " = " << value << "\n";
  for (const CheckLine& c : rep.checks)
    out << "CHECK " << c.name << " " << (c.pass ? "PASS" : "FAIL")
        << " value=" << fmt_double(c.value) << " tol=" << fmt_double(c.tol) << "\n";
  for (const std::string& path : rep.artifacts)
    out << "ARTIFACT " << path << "\n";
  out << "RESULT " << (rep.all_pass() ? "PASS" : "FAIL") << "\n";
}

// ---------------- CSV artifacts ----------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string csv_text(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::runtime_error("csv_text: row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += fmt_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_csv: cannot open '" + path + "'");
  f << csv_text(table);
  if (!f) throw std::runtime_error("write_csv: short write to '" + path + "'");
}

} // namespace bkl::report
