#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crdext/error.hpp"
#include "crdext/gencrd.hpp"
#include "crdext/parser.hpp"
#include "fixtures.hpp"

using namespace crdext;

namespace {

struct CountingOracle : Estimator {
  explicit CountingOracle(const Database& db) : db(db) {}
  std::string name() const override { return "counting-oracle"; }
  EstimatorCaps capabilities() const override { return {true, false}; }
  double estimate(const ConjunctiveQuery& q) const override {
    ++calls;
    return static_cast<double>(count(db, q));
  }
  const Database& db;
  mutable std::size_t calls = 0;
};

}  // namespace

TEST_CASE("call_bound is 2^m - 1", "[gencrd]") {
  CHECK(call_bound(1) == 1);
  CHECK(call_bound(3) == 7);
  CHECK(call_bound(5) == 31);
  CHECK_THROWS_AS(call_bound(0), Error);
}

TEST_CASE("single conjunctive query is one estimator call", "[gencrd]") {
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R, S WHERE R.b = S.b AND S.c > 10", db.schema());
  CountingOracle oracle(db);
  auto r = gen_crd(q, db.schema(), oracle);
  CHECK(r.estimate == static_cast<double>(execute(db, q).card_dup));
  CHECK(r.stats.estimator_calls == 1);
  CHECK(r.stats.dnf_size == 1);
}

TEST_CASE("two disjuncts: a + b - c", "[gencrd]") {
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R, S WHERE R.b = S.b AND (R.a = 1 OR S.c > 15)", db.schema());
  auto brute = fixtures::brute_force(db, q);
  auto a = fixtures::brute_force(db, parse("SELECT R.a FROM R, S WHERE R.b = S.b AND R.a = 1", db.schema())).dup;
  auto b = fixtures::brute_force(db, parse("SELECT R.a FROM R, S WHERE R.b = S.b AND S.c > 15", db.schema())).dup;
  auto c = fixtures::brute_force(db, parse("SELECT R.a FROM R, S WHERE R.b = S.b AND R.a = 1 AND S.c > 15", db.schema())).dup;
  REQUIRE(a + b - c == brute.dup);
  CountingOracle oracle(db);
  auto r = gen_crd(q, db.schema(), oracle);
  CHECK(r.estimate == static_cast<double>(brute.dup));
  CHECK(execute_general(db, q).card_dup == brute.dup);
  CHECK(r.stats.estimator_calls + r.stats.pruned_by_implyfalse == 3);
}

TEST_CASE("contradictory intersections are pruned without estimator calls", "[gencrd]") {
  // Three disjuncts on one column: every pairwise intersection is contradictory.
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R WHERE R.b > 0 AND (R.a = 1 OR R.a = 2 OR R.a = 3)", db.schema());
  CountingOracle oracle(db);
  auto r = gen_crd(q, db.schema(), oracle);
  CHECK(r.stats.dnf_size == 3);
  CHECK(r.stats.estimator_calls == 3);
  CHECK(r.stats.pruned_by_implyfalse == 4);
  CHECK(oracle.calls == 3);
  CHECK(r.estimate == static_cast<double>(execute_general(db, q).card_dup));

  GenCrdOptions off;
  off.use_implyfalse = false;
  CountingOracle again(db);
  auto unpruned = gen_crd(q, db.schema(), again, off);
  CHECK(unpruned.stats.estimator_calls == 7);
  CHECK(unpruned.estimate == r.estimate);
}

TEST_CASE("calls plus pruned equal 2^m - 1", "[gencrd][property]") {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 200; ++iter) {
    auto db = fixtures::random_db(rng, 5, 4);
    auto q = fixtures::random_query(rng, db.schema(), true, 4, 2);
    DnfList list;
    try {
      list = get_dnf_list(q, db.schema(), 5);
    } catch (const Error&) {
      continue;
    }
    auto r = gen_crd(list, *oracle_estimator(db));
    REQUIRE(r.stats.estimator_calls + r.stats.pruned_by_implyfalse == call_bound(list.size()));
    REQUIRE(r.stats.recursion_depth == list.size());
  }
}

TEST_CASE("GenCrd with the exact oracle is exact", "[gencrd][property]") {
  std::mt19937_64 rng(1001);
  int checked = 0;
  for (int iter = 0; iter < 400; ++iter) {
    auto db = fixtures::random_db(rng, 6, 4);
    auto q = fixtures::random_query(rng, db.schema(), true, 4, 3);
    DnfList list;
    try {
      list = get_dnf_list(q, db.schema(), 8);
    } catch (const Error&) {
      continue;
    }
    auto truth = execute_general(db, q).card_dup;
    auto oracle = oracle_estimator(db);
    auto r = gen_crd(list, *oracle);
    INFO(render(q));
    REQUIRE(r.estimate == static_cast<double>(truth));

    // Any order of the list gives the same exact answer.
    std::shuffle(list.queries.begin(), list.queries.end(), rng);
    REQUIRE(gen_crd(list, *oracle).estimate == static_cast<double>(truth));
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("parallel mode is bit-identical to sequential mode", "[gencrd]") {
  std::mt19937_64 rng(55);
  GenCrdOptions par;
  par.parallel = true;
  par.threads = 4;
  for (int iter = 0; iter < 100; ++iter) {
    auto db = fixtures::random_db(rng, 8, 5);
    auto q = fixtures::random_query(rng, db.schema(), true, 5, 2);
    q.where = BoolExpr::conj_of({q.where.kind() == BoolExpr::Kind::True ? BoolExpr::pred({{q.from[0], "x"}, CmpOp::Less, 3}) : q.where});
    DnfList list;
    try {
      list = get_dnf_list(q, db.schema(), 8);
    } catch (const Error&) {
      continue;
    }
    bool inequality = std::any_of(list.queries.begin(), list.queries.end(),
                                  [](const ConjunctiveQuery& c) { return c.has_inequality_join(); });
    EstimatorPtr est = inequality ? sampling_estimator(db, 0.7, 3) : histogram_estimator(db, 3);
    auto seq = gen_crd(list, *est);
    auto parallel = gen_crd(list, *est, par);
    REQUIRE(std::memcmp(&seq.estimate, &parallel.estimate, sizeof(double)) == 0);
    REQUIRE(seq.stats.estimator_calls == parallel.stats.estimator_calls);
  }
  auto db = fixtures::toy_db();
  CountingOracle unsafe(db);
  CHECK_THROWS_MATCHES(gen_crd(parse("SELECT R.a FROM R WHERE R.a = 1 OR R.a = 2", db.schema()), db.schema(), unsafe, par),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::Capability; }));
}

TEST_CASE("only the final estimate is clamped", "[gencrd]") {
  // Returns a large value for intersections so a + b - c goes negative.
  struct Skewed : Estimator {
    std::string name() const override { return "skewed"; }
    EstimatorCaps capabilities() const override { return {true, true}; }
    double estimate(const ConjunctiveQuery& q) const override { return q.preds.size() > 1 ? 100.0 : 1.0; }
  };
  auto db = fixtures::toy_db();
  auto q = parse("SELECT R.a FROM R WHERE R.a = 1 OR R.b = 2", db.schema());
  auto r = gen_crd(q, db.schema(), Skewed{});
  CHECK(r.estimate == 0.0);
}

TEST_CASE("distinct extension is exact when projection is injective", "[gencrd]") {
  // SELECT * over tables without duplicate rows: every joined tuple projects
  // to a distinct row, so set-theoretic counts obey inclusion-exclusion.
  std::mt19937_64 rng(314);
  int checked = 0;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<fixtures::TableRows> tables;
    for (const char* name : {"R", "S"}) {
      fixtures::TableRows t{name, {"id", "v"}, {}};
      auto n = 1 + rng() % 6;
      for (std::size_t i = 0; i < n; ++i) t.rows.push_back({static_cast<Value>(i), static_cast<Value>(rng() % 3)});
      tables.push_back(t);
    }
    auto db = fixtures::make_db(tables, {{ColumnRef{"R", "v"}, ColumnRef{"S", "v"}}});
    auto q = parse("SELECT DISTINCT * FROM R, S WHERE R.v = S.v AND (R.id < 2 OR S.id > 1 OR NOT R.id = 3)", db.schema());
    auto ext = punq_extended(oracle_estimator(db), std::make_shared<ExactUniqueness>(db));
    auto r = gen_crd(q, db.schema(), *ext);
    REQUIRE(r.estimate == Catch::Approx(static_cast<double>(execute_general(db, q).card_distinct)).margin(1e-9));
    ++checked;
  }
  CHECK(checked == 100);

  // With a non-injective projection the identity does not hold.
  auto db = fixtures::make_db({{"R", {"a", "b"}, {{1, 1}, {1, 2}}}});
  auto q = parse("SELECT DISTINCT R.a FROM R WHERE R.b = 1 OR R.b = 2", db.schema());
  auto ext = punq_extended(oracle_estimator(db), std::make_shared<ExactUniqueness>(db));
  CHECK(execute_general(db, q).card_distinct == 1);
  CHECK(gen_crd(q, db.schema(), *ext).estimate == 2.0);
}
