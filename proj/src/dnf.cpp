#include "crdext/dnf.hpp"

#include "crdext/error.hpp"

namespace crdext {

namespace {

using Conjunct = std::vector<BoolExpr>;  // atoms only
using Disjunction = std::vector<Conjunct>;

std::size_t capped_mul(std::size_t a, std::size_t b, std::size_t cap) {
  if (a != 0 && b > cap / a) throw Error(ErrorKind::DnfBlowup, "DNF list exceeds cap of " + std::to_string(cap));
  auto r = a * b;
  if (r > cap) throw Error(ErrorKind::DnfBlowup, "DNF list exceeds cap of " + std::to_string(cap));
  return r;
}

std::size_t capped_add(std::size_t a, std::size_t b, std::size_t cap) {
  if (a + b > cap) throw Error(ErrorKind::DnfBlowup, "DNF list exceeds cap of " + std::to_string(cap));
  return a + b;
}

// DNF of e (or NOT e when negated), as a list of atom conjunctions.
Disjunction to_dnf(const BoolExpr& e, bool negated, std::size_t cap) {
  using K = BoolExpr::Kind;
  switch (e.kind()) {
    case K::True:
      if (negated) return {};  // FALSE: no disjuncts
      return {Conjunct{}};
    case K::Pred: {
      if (!negated) return {Conjunct{e}};
      Disjunction out;
      for (const auto& p : negate_atom(e.pred_atom())) out.push_back({BoolExpr::pred(p)});
      return out;
    }
    case K::Join:
      if (negated)
        throw Error(ErrorKind::UnsupportedNegation, "NOT over join atom " + e.join_atom().left.qualified() + " " +
                                                        std::string(op_symbol(e.join_atom().op)) + " " +
                                                        e.join_atom().right.qualified());
      return {Conjunct{e}};
    case K::Not: return to_dnf(e.children().front(), !negated, cap);
    case K::And:
    case K::Or: {
      // De Morgan: a negated AND is an OR of negated children, and vice versa.
      bool as_or = (e.kind() == K::Or) != negated;
      if (as_or) {
        Disjunction out;
        for (const auto& c : e.children()) {
          auto part = to_dnf(c, negated, cap);
          capped_add(out.size(), part.size(), cap);
          out.insert(out.end(), part.begin(), part.end());
        }
        return out;
      }
      Disjunction acc{Conjunct{}};
      for (const auto& c : e.children()) {
        auto part = to_dnf(c, negated, cap);
        capped_mul(acc.size(), part.size(), cap);
        Disjunction next;
        next.reserve(acc.size() * part.size());
        for (const auto& left : acc)
          for (const auto& right : part) {
            Conjunct merged = left;
            merged.insert(merged.end(), right.begin(), right.end());
            next.push_back(std::move(merged));
          }
        acc = std::move(next);
      }
      return acc;
    }
  }
  return {};
}

std::size_t count_dnf(const BoolExpr& e, bool negated, std::size_t cap) {
  using K = BoolExpr::Kind;
  switch (e.kind()) {
    case K::True: return negated ? 0 : 1;
    case K::Pred: return negated ? 2 : 1;
    case K::Join:
      if (negated) throw Error(ErrorKind::UnsupportedNegation, "NOT over join atom");
      return 1;
    case K::Not: return count_dnf(e.children().front(), !negated, cap);
    default: {
      bool as_or = (e.kind() == K::Or) != negated;
      std::size_t n = as_or ? 0 : 1;
      for (const auto& c : e.children()) {
        auto k = count_dnf(c, negated, cap);
        n = as_or ? capped_add(n, k, cap) : capped_mul(n, k, cap);
      }
      return n;
    }
  }
}

}  // namespace

std::vector<PredAtom> negate_atom(const PredAtom& p) {
  switch (p.op) {
    case CmpOp::Equal: return {{p.column, CmpOp::Less, p.value}, {p.column, CmpOp::Greater, p.value}};
    case CmpOp::Less: return {{p.column, CmpOp::Equal, p.value}, {p.column, CmpOp::Greater, p.value}};
    case CmpOp::Greater: return {{p.column, CmpOp::Less, p.value}, {p.column, CmpOp::Equal, p.value}};
  }
  return {};
}

DnfList get_dnf_list(const QueryAst& q, const Schema& schema, std::size_t cap) {
  validate(q, schema);
  auto disjuncts = to_dnf(q.where, false, cap);

  // Each member keeps q's SELECT and FROM; atoms go through the conjunctive
  // builder so star expansion and atom dedup match to_conjunctive.
  QueryAst shell = q;
  shell.where = BoolExpr::truth();
  const ConjunctiveQuery base = to_conjunctive(shell, schema);

  DnfList out;
  out.queries.reserve(disjuncts.size());
  for (const auto& conj : disjuncts) {
    ConjunctiveQuery member = base;
    for (const auto& atom : conj) {
      if (atom.kind() == BoolExpr::Kind::Join) member.joins.insert(atom.join_atom().canonical());
      else member.preds.insert(atom.pred_atom());
    }
    out.queries.push_back(std::move(member));
  }
  if (out.queries.empty()) {
    // WHERE is FALSE (e.g. NOT TRUE); represent as a contradictory member.
    ConjunctiveQuery member = base;
    const auto col = *base.attrs.begin();
    member.preds.insert({col, CmpOp::Less, 0});
    member.preds.insert({col, CmpOp::Greater, 0});
    member.preds.insert({col, CmpOp::Equal, 0});
    out.queries.push_back(std::move(member));
  }
  return out;
}

std::size_t dnf_size(const QueryAst& q, std::size_t cap) { return std::max<std::size_t>(1, count_dnf(q.where, false, cap)); }

}  // namespace crdext
