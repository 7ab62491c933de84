#include "crdext/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "crdext/error.hpp"
#include "crdext/punq.hpp"

namespace crdext {

using nlohmann::json;

std::string to_string(EvalMode m) {
  switch (m) {
    case EvalMode::Dup: return "dup";
    case EvalMode::Distinct: return "distinct";
    case EvalMode::General: return "general";
    case EvalMode::Uniqueness: return "uniqueness";
  }
  return "dup";
}

EvalMode eval_mode_from_string(const std::string& s) {
  for (auto m : {EvalMode::Dup, EvalMode::Distinct, EvalMode::General, EvalMode::Uniqueness})
    if (to_string(m) == s) return m;
  throw Error(ErrorKind::Config, "unknown mode '" + s + "'");
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  if (s == "table") return ReportFormat::Table;
  throw Error(ErrorKind::Config, "unknown format '" + s + "'");
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  auto at = [&](double p) { return percentile(v, p); };
  s.p5 = at(5);
  s.p25 = at(25);
  s.p50 = at(50);
  s.p75 = at(75);
  s.p90 = at(90);
  s.p95 = at(95);
  s.p99 = at(99);
  s.max = v.back();
  double sum = 0.0;
  for (double x : values) sum += x;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

void EvalReport::finalize() {
  std::vector<double> all;
  std::map<std::size_t, std::vector<double>> j, d;
  for (const auto& r : rows) {
    all.push_back(r.q_error);
    j[r.joins].push_back(r.q_error);
    d[r.dnf_size].push_back(r.q_error);
  }
  overall = summarize(all);
  by_joins.clear();
  by_dnf_size.clear();
  for (const auto& [k, v] : j) by_joins[k] = summarize(v);
  for (const auto& [k, v] : d) by_dnf_size[k] = summarize(v);
}

// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

/// Forwards to another estimator and accumulates the time spent there.
class TimedEstimator : public Estimator {
 public:
  TimedEstimator(const Estimator& inner, bool timing) : inner_(inner), timing_(timing) {}
  std::string name() const override { return inner_.name(); }
  EstimatorCaps capabilities() const override { return inner_.capabilities(); }
  double estimate(const ConjunctiveQuery& q) const override {
    if (!timing_) return inner_.estimate(q);
    auto t0 = Clock::now();
    double v = inner_.estimate(q);
    elapsed_ += Clock::now() - t0;
    return v;
  }
  Clock::duration take() const { return std::exchange(elapsed_, Clock::duration::zero()); }

 private:
  const Estimator& inner_;
  bool timing_;
  mutable Clock::duration elapsed_{};
};

double card_qerror(double truth, double estimate) { return q_error(std::max(truth, 1.0), std::max(estimate, 1.0)); }

}  // namespace

EvalReport evaluate(const Schema& schema, const std::vector<QueryAst>& workload, const std::vector<LabelRecord>& labels,
                    const Estimator& base, const UniquenessPredictor* uniqueness, const EvalOptions& opts) {
  if (workload.size() != labels.size()) throw Error(ErrorKind::Config, "workload and labels differ in length");
  if (opts.mode == EvalMode::Distinct && !uniqueness) throw Error(ErrorKind::Config, "distinct mode needs a uniqueness model");
  if (opts.mode == EvalMode::Uniqueness) throw Error(ErrorKind::Config, "use evaluate_uniqueness for uniqueness mode");

  TimedEstimator timed(base, opts.timing);
  // Non-owning handles for the set-theoretic wrapper.
  EstimatorPtr timed_ptr(std::shared_ptr<const Estimator>(), &timed);
  UniquenessPtr u_ptr(std::shared_ptr<const UniquenessPredictor>(), uniqueness);
  std::unique_ptr<PunqExtended> extended;
  if (uniqueness) extended = std::make_unique<PunqExtended>(timed_ptr, u_ptr);
  const Estimator& subject = extended ? static_cast<const Estimator&>(*extended) : timed;

  EvalReport report;
  report.mode = opts.mode;
  report.timing = opts.timing;
  report.estimator = subject.name();
  if (opts.mode == EvalMode::General) report.estimator = "gencrd(" + report.estimator + ")";

  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto& q = workload[i];
    const auto& l = labels[i];
    EvalRow row;
    row.query_id = i;
    row.joins = l.joins;
    row.dnf_size = l.dnf_size;
    const bool set_semantics = uniqueness != nullptr;
    row.truth = static_cast<double>(set_semantics ? l.card_distinct : l.card_dup);

    auto t0 = Clock::now();
    if (opts.mode == EvalMode::General) {
      auto r = gen_crd(q, schema, subject, opts.gencrd);
      row.estimate = r.estimate;
      row.estimator_calls = r.stats.estimator_calls;
      row.pruned = r.stats.pruned_by_implyfalse;
    } else {
      auto cq = to_conjunctive(q, schema);
      row.estimate = checked_estimate(subject, cq);
      row.estimator_calls = 1;
    }
    if (opts.timing) {
      row.time_us = micros(Clock::now() - t0);
      row.subroutine_us = micros(timed.take());
    }
    row.q_error = card_qerror(row.truth, row.estimate);
    report.rows.push_back(row);
  }
  report.finalize();
  return report;
}

EvalReport evaluate_uniqueness(const Schema& schema, const std::vector<QueryAst>& workload,
                               const std::vector<LabelRecord>& labels, const UniquenessPredictor& predictor,
                               bool timing) {
  if (workload.size() != labels.size()) throw Error(ErrorKind::Config, "workload and labels differ in length");
  EvalReport report;
  report.mode = EvalMode::Uniqueness;
  report.timing = timing;
  report.estimator = predictor.name();
  for (std::size_t i = 0; i < workload.size(); ++i) {
    if (labels[i].empty()) continue;
    auto cq = to_conjunctive(workload[i], schema);
    EvalRow row;
    row.query_id = i;
    row.joins = labels[i].joins;
    row.dnf_size = labels[i].dnf_size;
    row.truth = labels[i].uniqueness;
    auto t0 = Clock::now();
    row.estimate = predictor.predict(cq);
    if (timing) row.time_us = row.subroutine_us = micros(Clock::now() - t0);
    row.estimator_calls = 1;
    row.q_error = q_error(std::clamp(row.truth, kUniquenessEps, 1.0), std::clamp(row.estimate, kUniquenessEps, 1.0));
    report.rows.push_back(row);
  }
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string num(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& s) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error(ErrorKind::Parse, "bad number '" + s + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t x = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error(ErrorKind::Parse, "bad integer '" + s + "'");
  return x;
}

const std::vector<std::string> kBaseColumns = {"query_id", "joins", "dnf_size", "truth", "estimate",
                                               "q_error", "estimator_calls", "pruned"};
const std::vector<std::string> kTimingColumns = {"time_us", "subroutine_us"};

json summary_json(const Summary& s) {
  return {{"count", s.count}, {"p5", s.p5},   {"p25", s.p25}, {"p50", s.p50}, {"p75", s.p75},
          {"p90", s.p90},     {"p95", s.p95}, {"p99", s.p99}, {"max", s.max}, {"mean", s.mean}};
}

std::string render_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "# report_version=" << kReportVersion << ",mode=" << to_string(r.mode) << ",estimator=" << r.estimator << "\n";
  auto cols = kBaseColumns;
  if (r.timing) cols.insert(cols.end(), kTimingColumns.begin(), kTimingColumns.end());
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& row : r.rows) {
    out << row.query_id << ',' << row.joins << ',' << row.dnf_size << ',' << num(row.truth) << ',' << num(row.estimate)
        << ',' << num(row.q_error) << ',' << row.estimator_calls << ',' << row.pruned;
    if (r.timing) out << ',' << num(row.time_us) << ',' << num(row.subroutine_us);
    out << "\n";
  }
  return out.str();
}

std::string render_json(const EvalReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j{{"query_id", row.query_id}, {"joins", row.joins},       {"dnf_size", row.dnf_size},
           {"truth", row.truth},       {"estimate", row.estimate}, {"q_error", row.q_error},
           {"estimator_calls", row.estimator_calls}, {"pruned", row.pruned}};
    if (r.timing) {
      j["time_us"] = row.time_us;
      j["subroutine_us"] = row.subroutine_us;
    }
    rows.push_back(j);
  }
  json by_joins = json::object(), by_dnf = json::object();
  for (const auto& [k, s] : r.by_joins) by_joins[std::to_string(k)] = summary_json(s);
  for (const auto& [k, s] : r.by_dnf_size) by_dnf[std::to_string(k)] = summary_json(s);
  json doc{{"report_version", kReportVersion},
           {"mode", to_string(r.mode)},
           {"estimator", r.estimator},
           {"timing", r.timing},
           {"rows", rows},
           {"summary", {{"overall", summary_json(r.overall)}, {"by_joins", by_joins}, {"by_dnf_size", by_dnf}}}};
  return doc.dump(2) + "\n";
}

std::string render_table(const EvalReport& r) {
  std::ostringstream out;
  out << "mode: " << to_string(r.mode) << "   estimator: " << r.estimator << "   queries: " << r.rows.size() << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %7s %10s %10s %10s %10s %10s %12s %10s\n", "group", "count", "50th", "75th",
                "90th", "95th", "99th", "max", "mean");
  out << line;
  if (r.rows.empty()) return out.str();
  auto emit = [&](const std::string& name, const Summary& s) {
    std::snprintf(line, sizeof line, "%-12s %7zu %10.3f %10.3f %10.3f %10.3f %10.3f %12.3f %10.3f\n", name.c_str(), s.count,
                  s.p50, s.p75, s.p90, s.p95, s.p99, s.max, s.mean);
    out << line;
  };
  emit("all", r.overall);
  for (const auto& [k, s] : r.by_joins) emit("joins=" + std::to_string(k), s);
  if (r.by_dnf_size.size() > 1 || r.mode == EvalMode::General)
    for (const auto& [k, s] : r.by_dnf_size) emit("dnf=" + std::to_string(k), s);
  return out.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

EvalReport parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  EvalReport r;
  if (!std::getline(in, line) || line.rfind("# report_version=", 0) != 0) throw Error(ErrorKind::Parse, "missing report header");
  for (const auto& kv : split(line.substr(2), ',')) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    auto k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "report_version" && parse_uint(v) != kReportVersion)
      throw Error(ErrorKind::VersionMismatch, "report version " + v);
    if (k == "mode") r.mode = eval_mode_from_string(v);
    if (k == "estimator") r.estimator = v;
  }
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "missing column header");
  auto cols = split(line, ',');
  auto timed = kBaseColumns;
  timed.insert(timed.end(), kTimingColumns.begin(), kTimingColumns.end());
  if (cols == timed) r.timing = true;
  else if (cols != kBaseColumns) throw Error(ErrorKind::Parse, "unexpected report columns");
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != cols.size()) throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": wrong field count");
    EvalRow row;
    row.query_id = parse_uint(f[0]);
    row.joins = parse_uint(f[1]);
    row.dnf_size = parse_uint(f[2]);
    row.truth = parse_num(f[3]);
    row.estimate = parse_num(f[4]);
    row.q_error = parse_num(f[5]);
    row.estimator_calls = parse_uint(f[6]);
    row.pruned = parse_uint(f[7]);
    if (r.timing) {
      row.time_us = parse_num(f[8]);
      row.subroutine_us = parse_num(f[9]);
    }
    r.rows.push_back(row);
  }
  r.finalize();
  return r;
}

EvalReport parse_json(const std::string& text) {
  EvalReport r;
  try {
    const auto doc = json::parse(text);
    if (doc.at("report_version").get<int>() != kReportVersion) throw Error(ErrorKind::VersionMismatch, "report version");
    r.mode = eval_mode_from_string(doc.at("mode").get<std::string>());
    r.estimator = doc.at("estimator").get<std::string>();
    r.timing = doc.value("timing", false);
    for (const auto& j : doc.at("rows")) {
      EvalRow row;
      row.query_id = j.at("query_id").get<std::size_t>();
      row.joins = j.at("joins").get<std::size_t>();
      row.dnf_size = j.at("dnf_size").get<std::size_t>();
      row.truth = j.at("truth").get<double>();
      row.estimate = j.at("estimate").get<double>();
      row.q_error = j.at("q_error").get<double>();
      row.estimator_calls = j.at("estimator_calls").get<std::uint64_t>();
      row.pruned = j.at("pruned").get<std::uint64_t>();
      row.time_us = j.value("time_us", 0.0);
      row.subroutine_us = j.value("subroutine_us", 0.0);
      r.rows.push_back(row);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("report: ") + e.what());
  }
  r.finalize();
  return r;
}

}  // namespace

std::string render(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Json: return render_json(report);
    case ReportFormat::Table: return render_table(report);
  }
  return {};
}

EvalReport parse_report(const std::string& text, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return parse_csv(text);
    case ReportFormat::Json: return parse_json(text);
    case ReportFormat::Table: break;
  }
  throw Error(ErrorKind::Parse, "table reports cannot be parsed back");
}

}  // namespace crdext
