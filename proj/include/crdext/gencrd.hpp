#pragma once

#include <cstddef>
#include <cstdint>

#include "crdext/dnf.hpp"
#include "crdext/estimators.hpp"
#include "crdext/query.hpp"

namespace crdext {

struct GenCrdStats {
  std::size_t estimator_calls = 0;
  std::size_t pruned_by_implyfalse = 0;
  std::size_t dnf_size = 0;
  std::size_t recursion_depth = 0;
};

struct GenCrdOptions {
  bool use_implyfalse = true;
  std::size_t dnf_cap = kDefaultDnfCap;
  /// Evaluate base-case estimates on a thread pool. The recursion is replayed
  /// in the same order, so the result is bit-identical to sequential mode.
  bool parallel = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct GenCrdResult {
  double estimate = 0.0;
  GenCrdStats stats;
};

/// Upper bound on subroutine calls for a DNF list of m queries: 2^m - 1.
std::uint64_t call_bound(std::size_t m);

/// Inclusion-exclusion over the DNF list:
///   |[Q1..Qn]| = |[Q1]| + |[Q2..Qn]| - |[Q1^Q2, ..., Q1^Qn]|
/// Single-query lists are pruned to 0 when imply_false holds, otherwise
/// passed to the estimator. Only the final estimate is clamped at 0.
GenCrdResult gen_crd(const DnfList& list, const Estimator& est, const GenCrdOptions& opts = {});

GenCrdResult gen_crd(const QueryAst& q, const Schema& schema, const Estimator& est, const GenCrdOptions& opts = {});

}  // namespace crdext
