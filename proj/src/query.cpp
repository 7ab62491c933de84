#include "crdext/query.hpp"

#include <algorithm>

#include "crdext/error.hpp"

namespace crdext {

JoinAtom JoinAtom::canonical() const {
  if (right < left) return JoinAtom{right, flip(op), left};
  return *this;
}

bool ConjunctiveQuery::has_inequality_join() const {
  return std::any_of(joins.begin(), joins.end(), [](const JoinAtom& j) { return !j.is_equality(); });
}

BoolExpr BoolExpr::conj(std::vector<BoolExpr> children) {
  BoolExpr e;
  e.kind_ = Kind::And;
  e.children_ = std::move(children);
  return e;
}

BoolExpr BoolExpr::disj(std::vector<BoolExpr> children) {
  BoolExpr e;
  e.kind_ = Kind::Or;
  e.children_ = std::move(children);
  return e;
}

BoolExpr BoolExpr::negate(BoolExpr child) {
  BoolExpr e;
  e.kind_ = Kind::Not;
  e.children_.push_back(std::move(child));
  return e;
}

BoolExpr BoolExpr::join(JoinAtom atom) {
  BoolExpr e;
  e.kind_ = Kind::Join;
  e.atom_ = std::move(atom);
  return e;
}

BoolExpr BoolExpr::pred(PredAtom atom) {
  BoolExpr e;
  e.kind_ = Kind::Pred;
  e.atom_ = std::move(atom);
  return e;
}

BoolExpr BoolExpr::conj_of(std::vector<BoolExpr> children) {
  if (children.empty()) return truth();
  if (children.size() == 1) return std::move(children.front());
  return conj(std::move(children));
}

std::set<std::string> BoolExpr::tables() const {
  std::set<std::string> out;
  switch (kind_) {
    case Kind::True: break;
    case Kind::Join:
      out.insert(join_atom().left.table);
      out.insert(join_atom().right.table);
      break;
    case Kind::Pred: out.insert(pred_atom().column.table); break;
    default:
      for (const auto& c : children_) out.merge(c.tables());
  }
  return out;
}

bool BoolExpr::contains_join() const {
  if (kind_ == Kind::Join) return true;
  return std::any_of(children_.begin(), children_.end(), [](const BoolExpr& c) { return c.contains_join(); });
}

bool BoolExpr::is_pure_conjunction() const {
  switch (kind_) {
    case Kind::True:
    case Kind::Join:
    case Kind::Pred: return true;
    case Kind::And:
      return std::all_of(children_.begin(), children_.end(),
                         [](const BoolExpr& c) { return c.is_pure_conjunction(); });
    default: return false;
  }
}

bool BoolExpr::operator==(const BoolExpr& other) const {
  return kind_ == other.kind_ && atom_ == other.atom_ && children_ == other.children_;
}

namespace {

void check_column(const ColumnRef& col, const std::set<std::string>& from, const Schema& schema) {
  if (!from.contains(col.table) || !schema.has_column(col))
    throw Error(ErrorKind::Validation, col.qualified());
}

void validate_expr(const BoolExpr& e, const std::set<std::string>& from, const Schema& schema) {
  using K = BoolExpr::Kind;
  switch (e.kind()) {
    case K::True: return;
    case K::Join:
      check_column(e.join_atom().left, from, schema);
      check_column(e.join_atom().right, from, schema);
      return;
    case K::Pred: check_column(e.pred_atom().column, from, schema); return;
    case K::Not:
      if (e.children().size() != 1) throw Error(ErrorKind::Validation, "NOT needs exactly one child");
      break;
    case K::And:
    case K::Or:
      if (e.children().size() < 2)
        throw Error(ErrorKind::Validation, std::string(e.kind() == K::And ? "AND" : "OR") +
                                               " needs at least two children");
      break;
  }
  for (const auto& c : e.children()) validate_expr(c, from, schema);
}

std::set<std::string> check_from(const std::vector<std::string>& tables, const Schema& schema) {
  if (tables.empty()) throw Error(ErrorKind::Validation, "empty FROM");
  std::set<std::string> from;
  for (const auto& t : tables) {
    if (schema.find_table(t) == nullptr) throw Error(ErrorKind::Validation, t);
    if (!from.insert(t).second) throw Error(ErrorKind::Validation, "duplicate table " + t);
  }
  return from;
}

void collect_atoms(const BoolExpr& e, ConjunctiveQuery& out) {
  using K = BoolExpr::Kind;
  switch (e.kind()) {
    case K::True: return;
    case K::Join: out.joins.insert(e.join_atom().canonical()); return;
    case K::Pred: out.preds.insert(e.pred_atom()); return;
    case K::And:
      for (const auto& c : e.children()) collect_atoms(c, out);
      return;
    default: throw Error(ErrorKind::NotConjunctive, "WHERE contains OR/NOT");
  }
}

}  // namespace

void validate(const QueryAst& q, const Schema& schema) {
  auto from = check_from(q.from, schema);
  if (!q.select.star && q.select.attrs.empty()) throw Error(ErrorKind::Validation, "empty SELECT list");
  for (const auto& a : q.select.attrs) check_column(a, from, schema);
  validate_expr(q.where, from, schema);
}

void validate(const ConjunctiveQuery& q, const Schema& schema) {
  if (q.tables.empty()) throw Error(ErrorKind::Validation, "empty FROM");
  for (const auto& t : q.tables)
    if (schema.find_table(t) == nullptr) throw Error(ErrorKind::Validation, t);
  for (const auto& a : q.attrs) check_column(a, q.tables, schema);
  for (const auto& j : q.joins) {
    check_column(j.left, q.tables, schema);
    check_column(j.right, q.tables, schema);
  }
  for (const auto& p : q.preds) check_column(p.column, q.tables, schema);
}

ConjunctiveQuery to_conjunctive(const QueryAst& q, const Schema& schema) {
  if (!q.where.is_pure_conjunction()) throw Error(ErrorKind::NotConjunctive, "WHERE contains OR/NOT");
  validate(q, schema);
  ConjunctiveQuery out;
  out.distinct = q.select.distinct;
  out.tables.insert(q.from.begin(), q.from.end());
  if (q.select.star) {
    for (const auto& t : schema.tables())
      if (out.tables.contains(t.name))
        for (const auto& c : t.columns) out.attrs.insert({t.name, c.name});
  } else {
    out.attrs.insert(q.select.attrs.begin(), q.select.attrs.end());
  }
  collect_atoms(q.where, out);
  return out;
}

QueryAst to_ast(const ConjunctiveQuery& q) {
  QueryAst out;
  out.select.distinct = q.distinct;
  out.select.attrs.assign(q.attrs.begin(), q.attrs.end());
  out.from.assign(q.tables.begin(), q.tables.end());
  std::vector<BoolExpr> atoms;
  for (const auto& j : q.joins) atoms.push_back(BoolExpr::join(j));
  for (const auto& p : q.preds) atoms.push_back(BoolExpr::pred(p));
  out.where = BoolExpr::conj_of(std::move(atoms));
  return out;
}

ConjunctiveQuery intersect(const ConjunctiveQuery& q1, const ConjunctiveQuery& q2) {
  if (q1.tables != q2.tables || q1.attrs != q2.attrs || q1.distinct != q2.distinct)
    throw Error(ErrorKind::MismatchedFromOrSelect, "intersected queries must share SELECT and FROM");
  ConjunctiveQuery out = q1;
  out.joins.insert(q2.joins.begin(), q2.joins.end());
  out.preds.insert(q2.preds.begin(), q2.preds.end());
  return out;
}

std::size_t count_joins(const QueryAst& q) {
  std::vector<const BoolExpr*> conjuncts;
  if (q.where.kind() == BoolExpr::Kind::And) {
    for (const auto& c : q.where.children()) conjuncts.push_back(&c);
  } else {
    conjuncts.push_back(&q.where);
  }
  std::size_t n = 0;
  for (const auto* c : conjuncts)
    if (c->kind() == BoolExpr::Kind::Join && c->join_atom().left.table != c->join_atom().right.table) ++n;
  return n;
}

}  // namespace crdext
