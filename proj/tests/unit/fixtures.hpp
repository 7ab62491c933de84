#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "crdext/query.hpp"
#include "crdext/store.hpp"

namespace fixtures {

struct TableRows {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<crdext::Value>> rows;
};

/// Builds a database from row-major literals; declared ranges are the data range.
crdext::Database make_db(const std::vector<TableRows>& tables,
                         std::vector<crdext::JoinEdge> edges = {});

/// R(a,b) = {(1,1),(1,2),(2,2)}, S(b,c) = {(1,10),(2,20),(2,30)}, edge R.b=S.b.
crdext::Database toy_db();

/// Random small database with tables R, S, U of three columns each, values
/// in [0, domain).
crdext::Database random_db(std::mt19937_64& rng, std::size_t max_rows = 8, crdext::Value domain = 5);

/// Brute-force reference: full cross product, naive boolean evaluation.
struct BruteResult {
  std::uint64_t dup = 0;
  std::uint64_t distinct = 0;
};
BruteResult brute_force(const crdext::Database& db, const crdext::QueryAst& q);

/// Random query over random_db's schema. Joins between distinct tables,
/// predicates with constants in [-1, domain]. When `general` is set, the WHERE
/// tree may contain OR and NOT over column predicates.
crdext::QueryAst random_query(std::mt19937_64& rng, const crdext::Schema& schema, bool general,
                              crdext::Value domain = 5, int max_tables = 3);

}  // namespace fixtures
