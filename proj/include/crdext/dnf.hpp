#pragma once

#include <cstddef>
#include <vector>

#include "crdext/query.hpp"
#include "crdext/schema.hpp"

namespace crdext {

inline constexpr std::size_t kDefaultDnfCap = 64;

/// Conjunctive queries whose disjunction is equivalent to one general query.
/// Members share SELECT (A) and FROM (T).
struct DnfList {
  std::vector<ConjunctiveQuery> queries;

  std::size_t size() const { return queries.size(); }
};

/// Complement of a column predicate within {<,=,>}.
std::vector<PredAtom> negate_atom(const PredAtom& p);

/// Pushes NOT to the leaves and distributes AND over OR.
///
/// Throws Error(UnsupportedNegation) when a NOT reaches a join atom and
/// Error(DnfBlowup) when the list would exceed `cap` members.
DnfList get_dnf_list(const QueryAst& q, const Schema& schema, std::size_t cap = kDefaultDnfCap);

/// Length of the DNF list without materializing it (same rules and errors).
std::size_t dnf_size(const QueryAst& q, std::size_t cap = kDefaultDnfCap);

}  // namespace crdext
