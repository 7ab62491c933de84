#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crdext/punq.hpp"
#include "crdext/query.hpp"
#include "crdext/store.hpp"

namespace crdext {

enum class ColumnKind { Serial, Foreign, Value };

/// Mixes a column with an earlier one: with probability `strength` the value
/// is the partner's value rescaled into this column's range.
struct Correlation {
  std::string column;                 // same-table column, or T.c reached through `via`
  std::optional<std::string> via;     // foreign-key column of this table
  double strength = 0.0;              // in [0, 1]
};

struct ColumnGen {
  std::string name;
  ColumnKind kind = ColumnKind::Value;
  Value min = 0;                      // Value columns
  Value max = 0;
  double skew = 0.0;                  // Zipf exponent; 0 is uniform
  std::string references;             // Foreign: "T.c" of a serial column
  std::optional<Correlation> correlate;
};

struct TableGen {
  std::string name;
  std::size_t rows = 0;
  std::vector<ColumnGen> columns;
};

struct DbGenConfig {
  std::vector<TableGen> tables;
  std::vector<JoinEdge> join_edges;
  std::uint64_t seed = 0;

  /// Throws Error(Config).
  void validate() const;

  static DbGenConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  static DbGenConfig load(const std::filesystem::path& path);

  /// Star schema: `title` plus five satellites keyed by movie_id, with
  /// skewed values and a few same-table and cross-join correlations.
  /// `scale` multiplies every row count.
  static DbGenConfig imdb_like(double scale = 1.0, std::uint64_t seed = 0);
};

/// Deterministic per seed. Throws Error(Config).
Database gen_db(const DbGenConfig& cfg);

/// Per-index counts; workload size is the sum.
struct WorkloadSpec {
  std::vector<std::size_t> joins;       // joins[k]: queries with k joins
  std::vector<std::size_t> dnf_sizes;   // dnf_sizes[k]: general queries of DNF size k+1
  std::size_t max_preds_per_table = 3;
  double distinct_prob = 0.0;           // chance of SELECT DISTINCT
  std::uint64_t seed = 0;

  std::size_t count() const;
  /// Throws Error(Config) when the distributions disagree.
  void validate(bool general) const;

  static WorkloadSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

/// Random connected query with `joins` join atoms over the declared edges.
/// Constants come from actual rows. Throws Error(Gen) after bounded retries.
QueryAst gen_conjunctive(const Database& db, std::size_t joins, const WorkloadSpec& spec, std::mt19937_64& rng);

/// Starts from gen_conjunctive and injects `p OR p'` and `NOT p` until the DNF
/// list has exactly `dnf_size` members. Throws Error(Gen) after bounded retries.
QueryAst gen_general(const Database& db, std::size_t joins, std::size_t dnf_size, const WorkloadSpec& spec,
                     std::mt19937_64& rng);

/// Whole workload in generation order; general when spec.dnf_sizes is set.
std::vector<QueryAst> gen_workload(const Database& db, const WorkloadSpec& spec);

struct LabelRecord {
  std::uint64_t card_dup = 0;
  std::uint64_t card_distinct = 0;
  double uniqueness = 0.0;
  std::size_t joins = 0;
  std::size_t dnf_size = 1;
  bool distinct = false;
  bool empty() const { return card_dup == 0; }
  /// card_distinct for DISTINCT queries, card_dup otherwise.
  std::uint64_t target() const { return distinct ? card_distinct : card_dup; }
  bool operator==(const LabelRecord&) const = default;
};

std::vector<LabelRecord> label_workload(const Database& db, const std::vector<QueryAst>& workload);

std::string labels_to_json_text(const std::vector<LabelRecord>& labels);
std::vector<LabelRecord> labels_from_json_text(const std::string& text);
void save_labels(const std::vector<LabelRecord>& labels, const std::filesystem::path& path);
std::vector<LabelRecord> load_labels(const std::filesystem::path& path);

/// Conjunctive, non-empty queries with their uniqueness rates.
std::vector<LabeledSample> training_samples(const std::vector<QueryAst>& workload, const std::vector<LabelRecord>& labels,
                                            const Schema& schema);

}  // namespace crdext
