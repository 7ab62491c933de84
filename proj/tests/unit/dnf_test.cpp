#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crdext/dnf.hpp"
#include "crdext/error.hpp"
#include "crdext/parser.hpp"
#include "crdext/store.hpp"
#include "fixtures.hpp"

using namespace crdext;

namespace {

// Inclusion-exclusion over all non-empty subsets, each intersection counted
// by the brute-force executor.
std::int64_t subset_inclusion_exclusion(const Database& db, const DnfList& list) {
  const auto m = list.size();
  std::int64_t total = 0;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    ConjunctiveQuery joint;
    bool first = true;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask & (1u << i))) continue;
      joint = first ? list.queries[i] : intersect(joint, list.queries[i]);
      first = false;
    }
    auto n = static_cast<std::int64_t>(fixtures::brute_force(db, to_ast(joint)).dup);
    total += (__builtin_popcount(mask) % 2 == 1) ? n : -n;
  }
  return total;
}

}  // namespace

TEST_CASE("negate_atom complements within {<,=,>}", "[dnf]") {
  ColumnRef a{"R", "a"};
  CHECK(negate_atom({a, CmpOp::Equal, 5}) == std::vector<PredAtom>{{a, CmpOp::Less, 5}, {a, CmpOp::Greater, 5}});
  CHECK(negate_atom({a, CmpOp::Less, 5}) == std::vector<PredAtom>{{a, CmpOp::Equal, 5}, {a, CmpOp::Greater, 5}});
  CHECK(negate_atom({a, CmpOp::Greater, 5}) == std::vector<PredAtom>{{a, CmpOp::Less, 5}, {a, CmpOp::Equal, 5}});
}

TEST_CASE("negated atom counts the complement", "[dnf][property]") {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 100; ++iter) {
    auto db = fixtures::random_db(rng, 10, 6);
    const auto total = db.table("R").row_count();
    auto op = static_cast<CmpOp>(iter % 3);
    Value v = static_cast<Value>(iter % 7) - 1;
    QueryAst q;
    q.select.star = true;
    q.from = {"R"};
    q.where = BoolExpr::pred({{"R", "y"}, op, v});
    auto positive = fixtures::brute_force(db, q).dup;
    std::vector<BoolExpr> alts;
    for (const auto& p : negate_atom(q.where.pred_atom())) alts.push_back(BoolExpr::pred(p));
    q.where = BoolExpr::disj(std::move(alts));
    REQUIRE(fixtures::brute_force(db, q).dup == total - positive);
  }
}

TEST_CASE("get_dnf_list distributes AND over OR", "[dnf]") {
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R WHERE (R.a = 1 OR R.a = 2) AND R.b > 0", db.schema());
  auto list = get_dnf_list(q, db.schema());
  REQUIRE(list.size() == 2);
  CHECK(list.queries[0].preds == std::set<PredAtom>{{{"R", "a"}, CmpOp::Equal, 1}, {{"R", "b"}, CmpOp::Greater, 0}});
  CHECK(list.queries[1].preds == std::set<PredAtom>{{{"R", "a"}, CmpOp::Equal, 2}, {{"R", "b"}, CmpOp::Greater, 0}});
  CHECK(dnf_size(q) == 2);

  auto conj = parse("SELECT R.a FROM R, S WHERE R.b = S.b AND R.a > 0 AND R.a > 0", db.schema());
  auto one = get_dnf_list(conj, db.schema());
  REQUIRE(one.size() == 1);
  CHECK(one.queries[0].preds.size() == 1);
  CHECK(one.queries[0] == to_conjunctive(conj, db.schema()));
}

TEST_CASE("three-member list keeps contradictory members", "[dnf]") {
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R WHERE R.a = 1 AND (R.b = 2 OR R.b = 1 OR R.a = 2)", db.schema());
  auto list = get_dnf_list(q, db.schema());
  REQUIRE(list.size() == 3);
  // The third member {a=1, a=2} is contradictory and stays in the list.
  CHECK(list.queries[2].preds == std::set<PredAtom>{{{"R", "a"}, CmpOp::Equal, 1}, {{"R", "a"}, CmpOp::Equal, 2}});
}

TEST_CASE("NOT over a join atom is rejected", "[dnf]") {
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R, S WHERE NOT R.b = S.b", db.schema());
  CHECK_THROWS_MATCHES(get_dnf_list(q, db.schema()), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::UnsupportedNegation;
                       }));
}

TEST_CASE("cap overflow raises DnfBlowup", "[dnf]") {
  auto db = fixtures::toy_db();
  std::string where;
  for (int i = 0; i < 7; ++i) where += std::string(i ? " AND " : "") + "(R.a = " + std::to_string(i) + " OR R.b = 1)";
  auto q = parse("SELECT R.a FROM R WHERE " + where, db.schema());
  CHECK_THROWS_MATCHES(get_dnf_list(q, db.schema()), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::DnfBlowup;
                       }));
  CHECK(get_dnf_list(q, db.schema(), 128).size() == 128);
}

TEST_CASE("DNF list is semantically equivalent", "[dnf][property]") {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int iter = 0; iter < 400; ++iter) {
    auto db = fixtures::random_db(rng, 5, 4);
    auto q = fixtures::random_query(rng, db.schema(), true, 4, 2);
    DnfList list;
    try {
      list = get_dnf_list(q, db.schema(), 10);
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::DnfBlowup);
      continue;
    }
    REQUIRE(list.size() == dnf_size(q, 10));
    for (const auto& member : list.queries) {
      REQUIRE(member.attrs == list.queries.front().attrs);
      REQUIRE(member.tables == list.queries.front().tables);
    }
    INFO(render(q));
    REQUIRE(subset_inclusion_exclusion(db, list) == static_cast<std::int64_t>(fixtures::brute_force(db, q).dup));
    ++checked;
  }
  CHECK(checked > 200);
}
