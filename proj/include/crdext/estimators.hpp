#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crdext/query.hpp"
#include "crdext/store.hpp"

namespace crdext {

struct EstimatorCaps {
  bool supports_inequality_join = false;
  /// estimate() may be called concurrently on one instance.
  bool thread_safe = true;
};

/// A "limited" cardinality model: conjunctive queries, bag semantics.
/// estimate() must be deterministic and return a finite value >= 0.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual EstimatorCaps capabilities() const = 0;
  virtual double estimate(const ConjunctiveQuery& q) const = 0;
};

/// Predicts the uniqueness rate ||Q|| / |Q| of a conjunctive query.
class UniquenessPredictor {
 public:
  virtual ~UniquenessPredictor() = default;
  virtual std::string name() const = 0;
  virtual EstimatorCaps capabilities() const = 0;
  virtual double predict(const ConjunctiveQuery& q) const = 0;
};

using EstimatorPtr = std::shared_ptr<const Estimator>;
using UniquenessPtr = std::shared_ptr<const UniquenessPredictor>;

/// Exact bag count via the executor. The database must outlive the estimator.
EstimatorPtr oracle_estimator(const Database& db);

/// Bernoulli sample of every base table, joined exactly and scaled by
/// 1/rate per table in the query.
class SamplingEstimator : public Estimator {
 public:
  SamplingEstimator(const Database& db, double rate, std::uint64_t seed);

  std::string name() const override { return "sampling"; }
  EstimatorCaps capabilities() const override { return {true, true}; }
  double estimate(const ConjunctiveQuery& q) const override;

  const Database& sample() const { return sample_; }
  double rate() const { return rate_; }

 private:
  Database sample_;
  double rate_;
};

EstimatorPtr sampling_estimator(const Database& db, double rate, std::uint64_t seed);

/// Equi-width histogram of one column over [min, max].
struct ColumnHistogram {
  Value min = 0;
  Value max = 0;
  double width = 1.0;                        // bucket width on the value axis
  std::vector<std::uint64_t> counts;         // rows per bucket
  std::vector<std::uint64_t> distinct;       // distinct values per bucket
  std::uint64_t distinct_total = 0;
  std::uint64_t rows = 0;

  static ColumnHistogram build(const std::vector<Value>& values, std::size_t buckets);

  /// Fraction of rows satisfying `column op value`, assuming values are
  /// spread uniformly inside a bucket.
  double selectivity(CmpOp op, Value value) const;
};

struct HistogramStats {
  std::vector<std::uint64_t> table_rows;                 // schema order
  std::vector<std::vector<ColumnHistogram>> columns;     // [table][column]
};

inline constexpr std::size_t kDefaultHistogramBuckets = 100;

/// Attribute-value-independence baseline: per-predicate histogram
/// selectivities multiplied together; equality joins use
/// 1 / max(distinct(left), distinct(right)).
class HistogramEstimator : public Estimator {
 public:
  HistogramEstimator(const Database& db, std::size_t buckets = kDefaultHistogramBuckets);

  std::string name() const override { return "histogram"; }
  EstimatorCaps capabilities() const override { return {false, true}; }
  double estimate(const ConjunctiveQuery& q) const override;

  const HistogramStats& stats() const { return stats_; }

 private:
  const ColumnHistogram& histogram(const ColumnRef& c) const;

  Schema schema_;
  HistogramStats stats_;
};

EstimatorPtr histogram_estimator(const Database& db, std::size_t buckets = kDefaultHistogramBuckets);

/// Exact uniqueness rate from the executor (0 for empty results).
class ExactUniqueness : public UniquenessPredictor {
 public:
  explicit ExactUniqueness(const Database& db) : db_(db) {}
  std::string name() const override { return "exact-uniqueness"; }
  EstimatorCaps capabilities() const override { return {true, true}; }
  double predict(const ConjunctiveQuery& q) const override { return execute(db_, q).uniqueness_rate; }

 private:
  const Database& db_;
};

/// Always predicts the same rate.
class ConstantUniqueness : public UniquenessPredictor {
 public:
  explicit ConstantUniqueness(double rate) : rate_(rate) {}
  std::string name() const override { return "constant-uniqueness"; }
  EstimatorCaps capabilities() const override { return {true, true}; }
  double predict(const ConjunctiveQuery&) const override { return rate_; }

 private:
  double rate_;
};

/// Set-theoretic extension of a bag estimator: U(q) * M(q).
class PunqExtended : public Estimator {
 public:
  PunqExtended(EstimatorPtr base, UniquenessPtr uniqueness);

  std::string name() const override;
  EstimatorCaps capabilities() const override;
  double estimate(const ConjunctiveQuery& q) const override;

  const Estimator& base() const { return *base_; }
  const UniquenessPredictor& uniqueness() const { return *uniqueness_; }

 private:
  EstimatorPtr base_;
  UniquenessPtr uniqueness_;
};

EstimatorPtr punq_extended(EstimatorPtr base, UniquenessPtr uniqueness);

/// Throws Error(Estimator) unless v is finite and non-negative.
double checked_estimate(const Estimator& est, const ConjunctiveQuery& q);

}  // namespace crdext
