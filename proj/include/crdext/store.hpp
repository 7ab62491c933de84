#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crdext/query.hpp"
#include "crdext/schema.hpp"

namespace crdext {

struct ColumnStats {
  Value min = 0;
  Value max = 0;
  std::size_t distinct_count = 0;
  bool operator==(const ColumnStats&) const = default;
};

/// Dense integer columns, all of length row_count().
class Table {
 public:
  Table() = default;
  /// Throws Error(SchemaMismatch) if column count or lengths disagree with def.
  Table(TableDef def, std::vector<std::vector<Value>> columns);

  const std::string& name() const { return def_.name; }
  const TableDef& def() const { return def_; }
  std::size_t row_count() const { return rows_; }
  std::size_t num_columns() const { return columns_.size(); }
  const std::vector<Value>& column(std::size_t index) const { return columns_.at(index); }
  const std::vector<Value>& column(std::string_view name) const;

  /// Cached exact stats. Throws Error(EmptyColumn) on an empty table.
  ColumnStats stats(std::size_t index) const;

 private:
  TableDef def_;
  std::vector<std::vector<Value>> columns_;
  std::vector<ColumnStats> stats_;
  std::size_t rows_ = 0;
};

/// Reads a headered, comma-separated integer file.
/// Throws Error(Io), Error(SchemaMismatch) or CsvParseError.
Table load_csv(const std::filesystem::path& path, const TableDef& def);
void save_csv(const Table& table, const std::filesystem::path& path);

/// Immutable snapshot; every const member is safe to call concurrently.
class Database {
 public:
  Database() = default;
  /// One table per schema table, in schema order.
  Database(Schema schema, std::vector<Table> tables);

  const Schema& schema() const { return schema_; }
  const std::vector<Table>& tables() const { return tables_; }
  const Table& table(std::string_view name) const;
  const Table* find_table(std::string_view name) const;

  /// Throws Error(Validation) for unknown columns, Error(EmptyColumn) if empty.
  ColumnStats column_stats(const ColumnRef& col) const;

  /// `dir/schema.json` plus `dir/<table>.csv`.
  static Database load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

 private:
  Schema schema_;
  std::vector<Table> tables_;
};

struct ExecResult {
  std::uint64_t card_dup = 0;
  std::uint64_t card_distinct = 0;
  double uniqueness_rate = 0.0;
  bool operator==(const ExecResult&) const = default;
};

/// Exact bag and set cardinality of a conjunctive query.
/// Throws Error(Validation) for unknown names, Error(Overflow) when a count
/// exceeds 64 bits or the distinct pass outgrows its memory or step limit.
ExecResult execute(const Database& db, const ConjunctiveQuery& q);

/// Bag count only; skips the distinct projection pass.
std::uint64_t count(const Database& db, const ConjunctiveQuery& q);

/// Same counting semantics for arbitrary AND/OR/NOT WHERE trees, evaluating
/// the boolean tree per joined tuple.
ExecResult execute_general(const Database& db, const QueryAst& q);

/// Rejects non-conjunctive input with Error(UnsupportedQuery).
ExecResult execute(const Database& db, const QueryAst& q);

ColumnStats column_stats(const Database& db, const ColumnRef& col);

}  // namespace crdext
