#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eiv/analyzers.hpp"
#include "eiv/errors.hpp"
#include "eiv/montecarlo.hpp"

namespace eiv {

enum class OutputFormat { csv, markdown };

inline OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "markdown" || name == "md") return OutputFormat::markdown;
  throw ConfigError("format must be csv or markdown");
}

// One emitted table line; n == 0 encodes the infinite ensemble.
struct TableRow {
  double rho = 0.0;
  double alpha = 0.0;
  int n = 0;
  std::string variant;
  double coverage_percent = 0.0;
  double mean_length = 0.0;
  double median_length = 0.0;
  int failures = 0;
  int reps = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, value);
  return buf;
}

inline std::string fmt_param(double v) { return fmt("%.10g", v); }
inline std::string fmt_fixed3(double v) { return fmt("%.3f", v); }

inline std::string fmt_n(int n) {
  return n == 0 ? std::string("inf") : std::to_string(n);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

template <typename T>
void ordered_insert(std::vector<T>& values, const T& v) {
  for (const T& existing : values)
    if (existing == v) return;
  values.push_back(v);
}

}  // namespace detail

inline const char* kTableHeader =
    "rho,alpha,n,variant,coverage,mean_length,median_length,failures,reps,"
    "seed";

inline std::vector<TableRow> table_rows(
    const std::vector<CellResult>& results) {
  std::vector<TableRow> rows;
  for (const CellResult& cell : results)
    for (const VariantSummary& s : cell.variants) {
      TableRow row;
      row.rho = cell.config.rho;
      row.alpha = cell.config.alpha;
      row.n = cell.config.ensemble_n;
      row.variant = variant_name(s.variant);
      row.coverage_percent = 100.0 * s.coverage;
      row.mean_length = s.mean_length;
      row.median_length = s.median_length;
      row.failures = s.failures;
      row.reps = s.reps;
      row.seed = cell.config.seed;
      rows.push_back(row);
    }
  return rows;
}

inline void emit_table_csv(const std::vector<TableRow>& rows,
                           std::ostream& out) {
  out << kTableHeader << "\n";
  for (const TableRow& r : rows)
    out << detail::fmt_param(r.rho) << ',' << detail::fmt_param(r.alpha)
        << ',' << detail::fmt_n(r.n) << ',' << r.variant << ','
        << detail::fmt_fixed3(r.coverage_percent) << ','
        << detail::fmt_fixed3(r.mean_length) << ','
        << detail::fmt_fixed3(r.median_length) << ',' << r.failures << ','
        << r.reps << ',' << r.seed << "\n";
}

// Coverage table grouped the way the simulation study is usually read:
// one block per rho, one row per n, one column pair per alpha.
inline void emit_table_markdown(const std::vector<TableRow>& rows,
                                std::ostream& out) {
  std::vector<double> rhos, alphas;
  std::vector<int> ns;
  std::vector<std::string> variants;
  for (const TableRow& r : rows) {
    detail::ordered_insert(rhos, r.rho);
    detail::ordered_insert(alphas, r.alpha);
    detail::ordered_insert(ns, r.n);
    detail::ordered_insert(variants, r.variant);
  }
  std::map<std::string, const TableRow*> index;
  for (const TableRow& r : rows)
    index[detail::fmt_param(r.rho) + '|' + detail::fmt_param(r.alpha) + '|' +
          detail::fmt_n(r.n) + '|' + r.variant] = &r;

  out << "# Coverage percent (mean interval length)\n";
  for (double rho : rhos) {
    out << "\n## rho = " << detail::fmt_param(rho) << "\n\n| n |";
    for (double alpha : alphas)
      for (const std::string& v : variants)
        out << " alpha=" << detail::fmt_param(alpha) << ' ' << v << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < alphas.size() * variants.size(); ++i)
      out << "---|";
    out << "\n";
    for (int n : ns) {
      out << "| " << detail::fmt_n(n) << " |";
      for (double alpha : alphas)
        for (const std::string& v : variants) {
          const auto it =
              index.find(detail::fmt_param(rho) + '|' +
                         detail::fmt_param(alpha) + '|' + detail::fmt_n(n) +
                         '|' + v);
          if (it == index.end()) {
            out << " - |";
          } else {
            out << ' ' << detail::fmt_fixed3(it->second->coverage_percent)
                << "% (" << detail::fmt_fixed3(it->second->mean_length)
                << ") |";
          }
        }
      out << "\n";
    }
  }
}

inline void emit_table(const std::vector<CellResult>& results,
                       std::ostream& out, OutputFormat format) {
  if (results.empty()) throw InputError("emit_table: empty results");
  const std::vector<TableRow> rows = table_rows(results);
  if (format == OutputFormat::csv) {
    emit_table_csv(rows, out);
  } else {
    emit_table_markdown(rows, out);
  }
}

inline std::vector<TableRow> parse_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTableHeader)
    throw InputError("parse_table_csv: bad header");
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 10) throw InputError("parse_table_csv: bad row");
    TableRow r;
    r.rho = std::stod(f[0]);
    r.alpha = std::stod(f[1]);
    r.n = f[2] == "inf" ? 0 : std::stoi(f[2]);
    r.variant = f[3];
    r.coverage_percent = std::stod(f[4]);
    r.mean_length = std::stod(f[5]);
    r.median_length = std::stod(f[6]);
    r.failures = std::stoi(f[7]);
    r.reps = std::stoi(f[8]);
    r.seed = std::stoull(f[9]);
    rows.push_back(r);
  }
  return rows;
}

// Rate-sweep table: same schema with the dimension prepended.
inline void emit_sweep(const std::vector<CellResult>& results,
                       std::ostream& out, OutputFormat format) {
  if (results.empty()) throw InputError("emit_sweep: empty results");
  if (format == OutputFormat::csv) {
    out << "p," << kTableHeader << "\n";
    for (const CellResult& cell : results)
      for (const TableRow& r : table_rows({cell}))
        out << cell.config.p << ',' << detail::fmt_param(r.rho) << ','
            << detail::fmt_param(r.alpha) << ',' << detail::fmt_n(r.n) << ','
            << r.variant << ',' << detail::fmt_fixed3(r.coverage_percent)
            << ',' << detail::fmt_fixed3(r.mean_length) << ','
            << detail::fmt_fixed3(r.median_length) << ',' << r.failures << ','
            << r.reps << ',' << r.seed << "\n";
    return;
  }
  std::vector<std::string> variants;
  for (const CellResult& cell : results)
    for (const VariantSummary& s : cell.variants)
      detail::ordered_insert(variants, std::string(variant_name(s.variant)));
  out << "# Coverage percent (mean interval length) by dimension\n\n| p | n |";
  for (const std::string& v : variants) out << ' ' << v << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < variants.size(); ++i) out << "---|";
  out << "\n";
  for (const CellResult& cell : results) {
    out << "| " << cell.config.p << " | "
        << detail::fmt_n(cell.config.ensemble_n) << " |";
    for (const std::string& v : variants) {
      bool found = false;
      for (const VariantSummary& s : cell.variants)
        if (variant_name(s.variant) == v) {
          out << ' ' << detail::fmt_fixed3(100.0 * s.coverage) << "% ("
              << detail::fmt_fixed3(s.mean_length) << ") |";
          found = true;
        }
      if (!found) out << " - |";
    }
    out << "\n";
  }
}

inline void emit_amse(const AmseReport& report, std::ostream& out,
                      OutputFormat format) {
  if (report.rows.empty()) throw InputError("emit_amse: empty report");
  if (format == OutputFormat::csv) {
    out << "weighting,amse,efficiency\n";
    for (const AmseRow& r : report.rows)
      out << r.weighting << ',' << detail::fmt("%.12g", r.amse) << ','
          << detail::fmt("%.6f", r.efficiency) << "\n";
    return;
  }
  out << "# Diagonal-design AMSE (p = " << report.p
      << ", beta1 = " << detail::fmt_param(report.beta1) << ", design "
      << report.design << ")\n\n| weighting | amse | efficiency |\n|---|---|---|\n";
  for (const AmseRow& r : report.rows)
    out << "| " << r.weighting << " | " << detail::fmt("%.12g", r.amse)
        << " | " << detail::fmt("%.6f", r.efficiency) << " |\n";
  out << "\nlower bound: " << detail::fmt("%.12g", report.lower_bound) << "\n";
}

inline void emit_certify(const CertifyReport& report, std::ostream& out,
                         OutputFormat format) {
  if (report.trials.empty()) throw InputError("emit_certify: empty report");
  if (format == OutputFormat::csv) {
    out << "trial,delta,delta_hat,ub,applicable,b_positive_definite,"
           "bound_diff,measured_diff,within_bound\n";
    for (const CertifyTrial& t : report.trials)
      out << t.index << ',' << detail::fmt("%.12g", t.delta) << ','
          << detail::fmt("%.12g", t.delta_hat) << ','
          << detail::fmt("%.12g", t.ub) << ',' << int(t.applicable) << ','
          << int(t.b_positive_definite) << ','
          << detail::fmt("%.12g", t.bound_diff) << ','
          << detail::fmt("%.12g", t.measured_diff) << ','
          << int(t.within_bound) << "\n";
    return;
  }
  out << "# Perturbation certificates (" << report.trials.size()
      << " trials, " << report.violations
      << " violations)\n\n| trial | delta | delta_hat | ub | bound_diff | "
         "measured_diff | ok |\n|---|---|---|---|---|---|---|\n";
  for (const CertifyTrial& t : report.trials)
    out << "| " << t.index << " | " << detail::fmt("%.6g", t.delta) << " | "
        << detail::fmt("%.6g", t.delta_hat) << " | "
        << detail::fmt("%.6g", t.ub) << " | "
        << detail::fmt("%.6g", t.bound_diff) << " | "
        << detail::fmt("%.6g", t.measured_diff) << " | "
        << (t.within_bound ? "yes" : "no") << " |\n";
}

}  // namespace eiv
