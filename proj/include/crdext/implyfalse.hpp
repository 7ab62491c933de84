#pragma once

#include <cstddef>

#include "crdext/query.hpp"

namespace crdext {

/// Work counters for one imply_false call.
struct ImplyFalseTrace {
  std::size_t columns = 0;     // distinct columns in the query
  std::size_t atoms = 0;       // join + predicate atoms folded
  std::size_t find_steps = 0;  // parent-pointer hops in union-find
};

/// Sound, incomplete contradiction test for conjunctive queries with
/// equality joins and {<,=,>} column predicates.
///
/// Columns linked by equality joins share one class; each class keeps a
/// strict lower bound, a strict upper bound and an optional exact value.
/// Returns true only when no tuple of any database can satisfy the query.
/// Exact values are checked strictly inside (lower, upper), which also
/// catches boundary cases such as {a = 5, a > 5}. No integer-gap reasoning:
/// {a > 5, a < 6} is not flagged.
///
/// Throws Error(UnsupportedJoin) on an inequality join.
bool imply_false(const ConjunctiveQuery& q, ImplyFalseTrace* trace = nullptr);

}  // namespace crdext
