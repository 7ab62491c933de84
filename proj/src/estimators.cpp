#include "crdext/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "crdext/error.hpp"

namespace crdext {

namespace {

class OracleEstimator : public Estimator {
 public:
  explicit OracleEstimator(const Database& db) : db_(db) {}
  std::string name() const override { return "oracle"; }
  EstimatorCaps capabilities() const override { return {true, true}; }
  double estimate(const ConjunctiveQuery& q) const override { return static_cast<double>(count(db_, q)); }

 private:
  const Database& db_;
};

}  // namespace

EstimatorPtr oracle_estimator(const Database& db) { return std::make_shared<OracleEstimator>(db); }

double checked_estimate(const Estimator& est, const ConjunctiveQuery& q) {
  if (q.has_inequality_join() && !est.capabilities().supports_inequality_join)
    throw Error(ErrorKind::Capability, est.name() + " does not support inequality joins");
  double v = est.estimate(q);
  if (!std::isfinite(v) || v < 0.0)
    throw Error(ErrorKind::Estimator, est.name() + " returned " + std::to_string(v));
  return v;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

Database bernoulli_sample(const Database& db, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw Error(ErrorKind::Config, "sampling rate must be in (0, 1]");
  std::vector<Table> tables;
  for (std::size_t t = 0; t < db.tables().size(); ++t) {
    const auto& src = db.tables()[t];
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (t + 1)));
    std::bernoulli_distribution keep(rate);
    std::vector<std::vector<Value>> cols(src.num_columns());
    for (std::size_t r = 0; r < src.row_count(); ++r) {
      if (!keep(rng)) continue;
      for (std::size_t c = 0; c < cols.size(); ++c) cols[c].push_back(src.column(c)[r]);
    }
    tables.emplace_back(src.def(), std::move(cols));
  }
  return Database(db.schema(), std::move(tables));
}

}  // namespace

SamplingEstimator::SamplingEstimator(const Database& db, double rate, std::uint64_t seed)
    : sample_(bernoulli_sample(db, rate, seed)), rate_(rate) {}

double SamplingEstimator::estimate(const ConjunctiveQuery& q) const {
  double scale = std::pow(1.0 / rate_, static_cast<double>(q.tables.size()));
  return static_cast<double>(count(sample_, q)) * scale;
}

EstimatorPtr sampling_estimator(const Database& db, double rate, std::uint64_t seed) {
  return std::make_shared<SamplingEstimator>(db, rate, seed);
}

// ---------------------------------------------------------------------------
// Histograms

ColumnHistogram ColumnHistogram::build(const std::vector<Value>& values, std::size_t buckets) {
  if (buckets == 0) throw Error(ErrorKind::Config, "histogram needs at least one bucket");
  ColumnHistogram h;
  h.rows = values.size();
  if (values.empty()) return h;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.min = *lo;
  h.max = *hi;
  const double span = static_cast<double>(h.max - h.min) + 1.0;
  const auto n = static_cast<std::size_t>(std::min<double>(static_cast<double>(buckets), span));
  h.width = span / static_cast<double>(n);
  h.counts.assign(n, 0);
  h.distinct.assign(n, 0);
  std::vector<std::unordered_set<Value>> seen(n);
  std::unordered_set<Value> all;
  for (Value v : values) {
    auto b = std::min<std::size_t>(n - 1, static_cast<std::size_t>(static_cast<double>(v - h.min) / h.width));
    ++h.counts[b];
    seen[b].insert(v);
    all.insert(v);
  }
  for (std::size_t b = 0; b < n; ++b) h.distinct[b] = seen[b].size();
  h.distinct_total = all.size();
  return h;
}

double ColumnHistogram::selectivity(CmpOp op, Value value) const {
  if (rows == 0) return 0.0;
  const double total = static_cast<double>(rows);
  if (op == CmpOp::Equal) {
    if (value < min || value > max) return 0.0;
    auto b = std::min<std::size_t>(counts.size() - 1,
                                   static_cast<std::size_t>(static_cast<double>(value - min) / width));
    if (counts[b] == 0) return 0.0;
    return static_cast<double>(counts[b]) / total / static_cast<double>(distinct[b]);
  }
  // Value x occupies [x, x + 1) on the axis; bucket b covers
  // [min + b * width, min + (b + 1) * width).
  auto mass_below = [&](double cut) {
    double mass = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
      double lo = static_cast<double>(min) + static_cast<double>(b) * width;
      double frac = std::clamp((cut - lo) / width, 0.0, 1.0);
      mass += frac * static_cast<double>(counts[b]);
    }
    return mass / total;
  };
  if (op == CmpOp::Less) return mass_below(static_cast<double>(value));
  return 1.0 - mass_below(static_cast<double>(value) + 1.0);
}

HistogramEstimator::HistogramEstimator(const Database& db, std::size_t buckets) : schema_(db.schema()) {
  for (const auto& t : db.tables()) {
    stats_.table_rows.push_back(t.row_count());
    std::vector<ColumnHistogram> cols;
    for (std::size_t c = 0; c < t.num_columns(); ++c) cols.push_back(ColumnHistogram::build(t.column(c), buckets));
    stats_.columns.push_back(std::move(cols));
  }
}

const ColumnHistogram& HistogramEstimator::histogram(const ColumnRef& c) const {
  auto t = schema_.table_index(c.table);
  if (!t) throw Error(ErrorKind::Validation, c.qualified());
  auto idx = schema_.tables()[*t].column_index(c.column);
  if (!idx) throw Error(ErrorKind::Validation, c.qualified());
  return stats_.columns[*t][*idx];
}

double HistogramEstimator::estimate(const ConjunctiveQuery& q) const {
  double est = 1.0;
  for (const auto& t : q.tables) {
    auto idx = schema_.table_index(t);
    if (!idx) throw Error(ErrorKind::Validation, t);
    est *= static_cast<double>(stats_.table_rows[*idx]);
  }
  for (const auto& p : q.preds) est *= histogram(p.column).selectivity(p.op, p.value);
  for (const auto& j : q.joins) {
    if (!j.is_equality()) throw Error(ErrorKind::Capability, "histogram estimator: inequality join");
    auto d = std::max(histogram(j.left).distinct_total, histogram(j.right).distinct_total);
    est *= d == 0 ? 0.0 : 1.0 / static_cast<double>(d);
  }
  return est;
}

EstimatorPtr histogram_estimator(const Database& db, std::size_t buckets) {
  return std::make_shared<HistogramEstimator>(db, buckets);
}

// ---------------------------------------------------------------------------
// PUNQ(M)

PunqExtended::PunqExtended(EstimatorPtr base, UniquenessPtr uniqueness)
    : base_(std::move(base)), uniqueness_(std::move(uniqueness)) {
  if (!base_ || !uniqueness_) throw Error(ErrorKind::Config, "punq_extended needs an estimator and a model");
}

std::string PunqExtended::name() const { return "punq(" + base_->name() + ")"; }

EstimatorCaps PunqExtended::capabilities() const {
  auto m = base_->capabilities();
  auto u = uniqueness_->capabilities();
  return {m.supports_inequality_join && u.supports_inequality_join, m.thread_safe && u.thread_safe};
}

double PunqExtended::estimate(const ConjunctiveQuery& q) const {
  double c = checked_estimate(*base_, q);
  return uniqueness_->predict(q) * c;
}

EstimatorPtr punq_extended(EstimatorPtr base, UniquenessPtr uniqueness) {
  return std::make_shared<PunqExtended>(std::move(base), std::move(uniqueness));
}

}  // namespace crdext
