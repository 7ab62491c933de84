#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crdext/query.hpp"
#include "crdext/store.hpp"

namespace crdext {

enum class FeatVariant : std::uint32_t { Standard = 0, Revised = 1 };

std::string to_string(FeatVariant v);
FeatVariant feat_variant_from_string(const std::string& s);

/// Segment layout of a query feature vector.
///
/// Standard: A T J1 J2 C O V, length nT + 4 nC + nO + 1.
/// Revised:  A T J1 JO J2 C O V, length nT + 4 nC + 2 nO + 1; JO carries the
/// join operator so inequality joins can be encoded.
struct FeatLayout {
  FeatVariant variant = FeatVariant::Standard;
  std::vector<std::string> tables;
  std::vector<ColumnRef> columns;   // table-major, matches Schema::all_columns
  std::vector<Value> col_min;
  std::vector<Value> col_max;

  std::size_t nT() const { return tables.size(); }
  std::size_t nC() const { return columns.size(); }
  static constexpr std::size_t nO() { return kNumOps; }

  std::size_t a_off() const { return 0; }
  std::size_t t_off() const { return nC(); }
  std::size_t j1_off() const { return t_off() + nT(); }
  std::size_t jo_off() const { return j1_off() + nC(); }
  std::size_t j2_off() const { return jo_off() + (variant == FeatVariant::Revised ? nO() : 0); }
  std::size_t c_off() const { return j2_off() + nC(); }
  std::size_t o_off() const { return c_off() + nC(); }
  std::size_t v_off() const { return o_off() + nO(); }
  std::size_t length() const { return v_off() + 1; }

  static std::size_t length_for(std::size_t nT, std::size_t nC, FeatVariant v) {
    return nT + 4 * nC + (v == FeatVariant::Revised ? 2 : 1) * kNumOps + 1;
  }

  /// Normalization bounds from the data (declared range for empty tables).
  static FeatLayout from_database(const Database& db, FeatVariant variant);
  static FeatLayout from_schema(const Schema& schema, FeatVariant variant);

  std::size_t table_index(const std::string& table) const;
  std::size_t column_index(const ColumnRef& col) const;

  /// (v - min) / (max - min) clamped to [0, 1]; 0 for a constant column.
  double normalize(std::size_t column, Value v) const;

  /// True when tables and columns match the schema in order.
  bool compatible_with(const Schema& schema) const;

  bool operator==(const FeatLayout&) const = default;
};

/// Sorted (index, value) pairs.
struct SparseVec {
  std::vector<std::pair<std::uint32_t, double>> entries;
  auto operator<=>(const SparseVec&) const = default;
  bool operator==(const SparseVec&) const = default;
};

using FeatureSet = std::vector<SparseVec>;

/// One vector per attribute, table, join and predicate, in sorted order.
/// Throws Error(Featurization) for unknown names or an inequality join under
/// the standard layout.
FeatureSet featurize(const ConjunctiveQuery& q, const FeatLayout& layout);

std::vector<double> densify(const SparseVec& v, std::size_t length);

}  // namespace crdext
