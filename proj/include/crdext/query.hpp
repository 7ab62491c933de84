#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "crdext/schema.hpp"
#include "crdext/types.hpp"

namespace crdext {

/// Column-to-column comparison. Between two tables it is a join.
struct JoinAtom {
  ColumnRef left;
  CmpOp op = CmpOp::Equal;
  ColumnRef right;

  auto operator<=>(const JoinAtom&) const = default;
  bool operator==(const JoinAtom&) const = default;

  bool is_equality() const { return op == CmpOp::Equal; }

  /// Orders the column pair lexicographically, flipping the operator when
  /// the sides swap, so equal atoms compare equal.
  JoinAtom canonical() const;
};

/// Column-to-constant comparison.
struct PredAtom {
  ColumnRef column;
  CmpOp op = CmpOp::Equal;
  Value value = 0;

  auto operator<=>(const PredAtom&) const = default;
  bool operator==(const PredAtom&) const = default;
};

/// Boolean WHERE tree. Value type; children are owned.
class BoolExpr {
 public:
  enum class Kind { True, And, Or, Not, Join, Pred };

  BoolExpr() = default;  // TRUE

  static BoolExpr truth() { return BoolExpr(); }
  static BoolExpr conj(std::vector<BoolExpr> children);
  static BoolExpr disj(std::vector<BoolExpr> children);
  static BoolExpr negate(BoolExpr child);
  static BoolExpr join(JoinAtom atom);
  static BoolExpr pred(PredAtom atom);

  /// AND of the given atoms; TRUE when empty, the atom itself when single.
  static BoolExpr conj_of(std::vector<BoolExpr> children);

  Kind kind() const { return kind_; }
  bool is_atom() const { return kind_ == Kind::Join || kind_ == Kind::Pred; }
  const std::vector<BoolExpr>& children() const { return children_; }
  const JoinAtom& join_atom() const { return std::get<JoinAtom>(atom_); }
  const PredAtom& pred_atom() const { return std::get<PredAtom>(atom_); }

  /// Tables referenced anywhere in the subtree.
  std::set<std::string> tables() const;
  bool contains_join() const;
  bool is_pure_conjunction() const;

  bool operator==(const BoolExpr& other) const;

 private:
  Kind kind_ = Kind::True;
  std::vector<BoolExpr> children_;
  std::variant<std::monostate, JoinAtom, PredAtom> atom_;
};

struct SelectClause {
  bool distinct = false;
  bool star = false;
  std::vector<ColumnRef> attrs;  // empty when star
  bool operator==(const SelectClause&) const = default;
};

struct QueryAst {
  SelectClause select;
  std::vector<std::string> from;
  BoolExpr where;
  bool operator==(const QueryAst&) const = default;
};

/// The four-set form (A, T, J, P) of a conjunctive query.
struct ConjunctiveQuery {
  std::set<ColumnRef> attrs;
  std::set<std::string> tables;
  std::set<JoinAtom> joins;
  std::set<PredAtom> preds;
  bool distinct = false;

  bool operator==(const ConjunctiveQuery&) const = default;

  std::size_t num_joins() const { return joins.size(); }
  bool has_inequality_join() const;
};

/// Throws Error(Validation) naming the first offending reference.
void validate(const QueryAst& q, const Schema& schema);
void validate(const ConjunctiveQuery& q, const Schema& schema);

/// Requires a pure conjunction of atoms; star expands to every column of the
/// FROM tables in schema order. Throws Error(NotConjunctive).
ConjunctiveQuery to_conjunctive(const QueryAst& q, const Schema& schema);

/// Re-embeds a conjunctive query as an AND tree. Inverse of to_conjunctive up
/// to atom order and star expansion.
QueryAst to_ast(const ConjunctiveQuery& q);

/// Same SELECT and FROM, WHERE is both conjunctions.
/// Throws Error(MismatchedFromOrSelect) when A or T differ.
ConjunctiveQuery intersect(const ConjunctiveQuery& q1, const ConjunctiveQuery& q2);

/// Number of join atoms between distinct tables in the top-level conjunction.
std::size_t count_joins(const QueryAst& q);

}  // namespace crdext
