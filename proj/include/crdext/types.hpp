#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace crdext {

using Value = std::int64_t;

/// Qualified column name, `table.column`.
struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
  bool operator==(const ColumnRef&) const = default;

  std::string qualified() const { return table + "." + column; }

  /// Splits "T.c" at the first dot. Throws Error(Validation) without one.
  static ColumnRef parse(std::string_view qualified);
};

/// Comparison operators allowed in predicates and joins.
enum class CmpOp : std::uint8_t { Less = 0, Equal = 1, Greater = 2 };

inline constexpr int kNumOps = 3;

constexpr std::string_view op_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Less: return "<";
    case CmpOp::Equal: return "=";
    case CmpOp::Greater: return ">";
  }
  return "?";
}

/// `a op b` holds iff `b flip(op) a` holds.
constexpr CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::Less: return CmpOp::Greater;
    case CmpOp::Greater: return CmpOp::Less;
    case CmpOp::Equal: return CmpOp::Equal;
  }
  return op;
}

constexpr bool compare(Value lhs, CmpOp op, Value rhs) {
  switch (op) {
    case CmpOp::Less: return lhs < rhs;
    case CmpOp::Equal: return lhs == rhs;
    case CmpOp::Greater: return lhs > rhs;
  }
  return false;
}

}  // namespace crdext

template <>
struct std::hash<crdext::ColumnRef> {
  std::size_t operator()(const crdext::ColumnRef& c) const noexcept {
    std::size_t h = std::hash<std::string>{}(c.table);
    return h ^ (std::hash<std::string>{}(c.column) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};
