#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crdext/datagen.hpp"
#include "crdext/estimators.hpp"
#include "crdext/gencrd.hpp"

namespace crdext {

enum class EvalMode { Dup, Distinct, General, Uniqueness };

std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);

inline constexpr int kReportVersion = 1;

struct EvalRow {
  std::size_t query_id = 0;
  std::size_t joins = 0;
  std::size_t dnf_size = 1;
  double truth = 0.0;
  double estimate = 0.0;
  double q_error = 1.0;
  std::uint64_t estimator_calls = 0;
  std::uint64_t pruned = 0;
  double time_us = 0.0;        // whole estimate, only with timing
  double subroutine_us = 0.0;  // time inside the base estimator
  bool operator==(const EvalRow&) const = default;
};

/// Nearest-rank percentiles: the p-th is the value at rank ceil(p/100 * n).
struct Summary {
  std::size_t count = 0;
  double p5 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0, p95 = 0, p99 = 0, max = 0, mean = 0;
  bool operator==(const Summary&) const = default;
};

double percentile(std::vector<double> values, double p);
Summary summarize(const std::vector<double>& values);

struct EvalReport {
  EvalMode mode = EvalMode::Dup;
  std::string estimator;
  bool timing = false;
  std::vector<EvalRow> rows;

  Summary overall;
  std::map<std::size_t, Summary> by_joins;
  std::map<std::size_t, Summary> by_dnf_size;

  /// Recomputes the summaries from rows.
  void finalize();
  bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
  EvalMode mode = EvalMode::Dup;
  bool timing = false;
  GenCrdOptions gencrd;
};

/// dup:      M(q) against card_dup, conjunctive queries only.
/// distinct: U(q) * M(q) against card_distinct; needs `uniqueness`.
/// general:  GenCrd over M (or over U*M when `uniqueness` is given, then
///           against card_distinct) against card_dup.
/// q-errors use max(x, 1) on both sides.
/// Throws Error(Capability) when M cannot handle a workload query.
EvalReport evaluate(const Schema& schema, const std::vector<QueryAst>& workload, const std::vector<LabelRecord>& labels,
                    const Estimator& base, const UniquenessPredictor* uniqueness, const EvalOptions& opts);

/// Predicted against true uniqueness rates, both clamped at kUniquenessEps.
/// Empty-result queries are skipped; query_id keeps the workload index.
EvalReport evaluate_uniqueness(const Schema& schema, const std::vector<QueryAst>& workload,
                               const std::vector<LabelRecord>& labels, const UniquenessPredictor& predictor,
                               bool timing = false);

enum class ReportFormat { Csv, Json, Table };
ReportFormat report_format_from_string(const std::string& s);

/// Deterministic bytes; timing columns only when report.timing is set.
std::string render(const EvalReport& report, ReportFormat format);

/// Inverse of render for csv and json. Throws Error(Parse).
EvalReport parse_report(const std::string& text, ReportFormat format);

}  // namespace crdext
