#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crdext/types.hpp"

namespace crdext {

struct ColumnDef {
  std::string name;
  Value declared_min = 0;
  Value declared_max = 0;
  bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;

  const ColumnDef* find_column(std::string_view column) const;
  std::optional<std::size_t> column_index(std::string_view column) const;
  bool operator==(const TableDef&) const = default;
};

using JoinEdge = std::pair<ColumnRef, ColumnRef>;

/// Table definitions plus the join edges the generator may use.
///
/// Table order is significant: it fixes the one-hot positions used by the
/// featurizer (tables in order, columns table-major).
class Schema {
 public:
  Schema() = default;
  /// Throws Error(Validation) on duplicate names or dangling join edges.
  Schema(std::vector<TableDef> tables, std::vector<JoinEdge> join_edges);

  const std::vector<TableDef>& tables() const { return tables_; }
  const std::vector<JoinEdge>& join_edges() const { return join_edges_; }

  const TableDef* find_table(std::string_view name) const;
  std::optional<std::size_t> table_index(std::string_view name) const;
  bool has_column(const ColumnRef& col) const;

  std::size_t num_tables() const { return tables_.size(); }
  std::size_t num_columns() const;

  /// All columns in featurization order.
  std::vector<ColumnRef> all_columns() const;

  /// Global (table-major) index of a column; nullopt if unknown.
  std::optional<std::size_t> global_column_index(const ColumnRef& col) const;

  static Schema from_json_text(const std::string& text);
  std::string to_json_text() const;
  static Schema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<TableDef> tables_;
  std::vector<JoinEdge> join_edges_;
};

}  // namespace crdext
