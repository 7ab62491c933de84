#include "crdext/implyfalse.hpp"

#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "crdext/error.hpp"

namespace crdext {

namespace {

class ColumnClasses {
 public:
  std::size_t id(const ColumnRef& c) {
    auto [it, inserted] = ids_.try_emplace(c, parent_.size());
    if (inserted) {
      parent_.push_back(parent_.size());
      size_.push_back(1);
    }
    return it->second;
  }

  std::size_t find(std::size_t x, std::size_t& steps) {
    std::size_t root = x;
    while (parent_[root] != root) {
      root = parent_[root];
      ++steps;
    }
    while (parent_[x] != root) {
      auto next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::size_t a, std::size_t b, std::size_t& steps) {
    a = find(a, steps);
    b = find(b, steps);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  std::size_t count() const { return parent_.size(); }

 private:
  std::unordered_map<ColumnRef, std::size_t> ids_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct Bounds {
  // Strict bounds: value must satisfy lower < v < upper.
  std::optional<Value> lower;
  std::optional<Value> upper;
  std::optional<Value> exact;
};

}  // namespace

bool imply_false(const ConjunctiveQuery& q, ImplyFalseTrace* trace) {
  ImplyFalseTrace local;
  ImplyFalseTrace& t = trace ? *trace : local;
  t = {};

  // Stage 1: one singleton class per column used in the query.
  ColumnClasses classes;
  for (const auto& j : q.joins) {
    if (!j.is_equality())
      throw Error(ErrorKind::UnsupportedJoin, "inequality join " + j.left.qualified() + " " +
                                                   std::string(op_symbol(j.op)) + " " + j.right.qualified());
    classes.id(j.left);
    classes.id(j.right);
  }
  for (const auto& p : q.preds) classes.id(p.column);
  t.columns = classes.count();
  std::vector<Bounds> bounds(classes.count());

  // Stage 2: columns that must be equal share a class.
  for (const auto& j : q.joins) {
    ++t.atoms;
    classes.unite(classes.id(j.left), classes.id(j.right), t.find_steps);
  }

  // Stage 3: fold predicates into their class.
  for (const auto& p : q.preds) {
    ++t.atoms;
    auto& b = bounds[classes.find(classes.id(p.column), t.find_steps)];
    switch (p.op) {
      case CmpOp::Greater: b.lower = b.lower ? std::max(*b.lower, p.value) : p.value; break;
      case CmpOp::Less: b.upper = b.upper ? std::min(*b.upper, p.value) : p.value; break;
      case CmpOp::Equal:
        if (b.exact && *b.exact != p.value) return true;
        b.exact = p.value;
        break;
    }
  }

  // Stage 4: contradiction sweep over class representatives.
  for (const auto& b : bounds) {
    if (b.lower && b.upper && *b.upper <= *b.lower) return true;
    if (b.exact) {
      if (b.lower && !(*b.lower < *b.exact)) return true;
      if (b.upper && !(*b.exact < *b.upper)) return true;
    }
  }
  return false;
}

}  // namespace crdext
