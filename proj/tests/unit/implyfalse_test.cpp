#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crdext/error.hpp"
#include "crdext/implyfalse.hpp"
#include "crdext/store.hpp"
#include "fixtures.hpp"

using namespace crdext;

namespace {

ConjunctiveQuery make(std::vector<PredAtom> preds, std::vector<JoinAtom> joins = {}) {
  ConjunctiveQuery q;
  q.tables = {"R", "S", "U"};
  q.attrs = {{"R", "x"}};
  q.preds.insert(preds.begin(), preds.end());
  for (auto& j : joins) q.joins.insert(j.canonical());
  return q;
}

const ColumnRef a{"R", "x"};
const ColumnRef b{"S", "x"};
const ColumnRef c{"U", "y"};

}  // namespace

TEST_CASE("known contradictions are detected", "[implyfalse]") {
  CHECK(imply_false(make({{a, CmpOp::Greater, 5}, {a, CmpOp::Less, 5}})));
  CHECK(imply_false(make({{a, CmpOp::Equal, 3}, {b, CmpOp::Equal, 7}}, {{a, CmpOp::Equal, b}})));
  CHECK(imply_false(make({{a, CmpOp::Greater, 5}, {a, CmpOp::Equal, 5}})));
  CHECK(imply_false(make({{a, CmpOp::Less, 5}, {a, CmpOp::Equal, 5}})));
  CHECK(imply_false(make({{a, CmpOp::Equal, 1}, {a, CmpOp::Equal, 2}})));
  // Transitive classes: a=b, b=c, a=1, c=2.
  CHECK(imply_false(make({{a, CmpOp::Equal, 1}, {c, CmpOp::Equal, 2}}, {{a, CmpOp::Equal, b}, {b, CmpOp::Equal, c}})));
  CHECK(imply_false(make({{a, CmpOp::Greater, 4}, {c, CmpOp::Less, 3}}, {{a, CmpOp::Equal, b}, {c, CmpOp::Equal, b}})));
}

TEST_CASE("satisfiable or undetected queries return false", "[implyfalse]") {
  CHECK_FALSE(imply_false(make({})));
  CHECK_FALSE(imply_false(make({{a, CmpOp::Greater, 5}, {a, CmpOp::Less, 9}, {a, CmpOp::Equal, 7}})));
  // Only a=6 qualifies over integers; the test is real-valued.
  CHECK_FALSE(imply_false(make({{a, CmpOp::Greater, 5}, {a, CmpOp::Less, 7}})));
  CHECK_FALSE(imply_false(make({{a, CmpOp::Greater, 5}, {a, CmpOp::Less, 6}})));
  // Different classes do not interact.
  CHECK_FALSE(imply_false(make({{a, CmpOp::Equal, 1}, {b, CmpOp::Equal, 2}})));
}

TEST_CASE("inequality joins are rejected", "[implyfalse]") {
  CHECK_THROWS_MATCHES(imply_false(make({}, {{a, CmpOp::Less, b}})), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::UnsupportedJoin; }));
}

TEST_CASE("boundary case a=5 AND a>5 has no rows", "[implyfalse]") {
  std::mt19937_64 rng(8);
  for (int iter = 0; iter < 50; ++iter) {
    auto db = fixtures::random_db(rng, 10, 8);
    auto q = make({{a, CmpOp::Greater, 5}, {a, CmpOp::Equal, 5}});
    q.tables = {"R"};
    REQUIRE(execute(db, q).card_dup == 0);
  }
}

TEST_CASE("imply_false is sound on random queries", "[implyfalse][property]") {
  std::mt19937_64 rng(4242);
  int positives = 0;
  for (int iter = 0; iter < 3000; ++iter) {
    auto db = fixtures::random_db(rng, 6, 4);
    ConjunctiveQuery q;
    q.tables = {"R", "S", "U"};
    q.attrs = {{"R", "x"}};
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_int_distribution<Value> val(-1, 4);
    const char* names[] = {"R", "S", "U"};
    const char* cols[] = {"x", "y", "z"};
    auto col = [&] { return ColumnRef{names[pick(rng)], cols[pick(rng)]}; };
    int njoins = pick(rng);
    for (int i = 0; i < njoins; ++i) {
      JoinAtom j{col(), CmpOp::Equal, col()};
      if (j.left.table != j.right.table) q.joins.insert(j.canonical());
    }
    int npreds = 1 + pick(rng) + pick(rng);
    for (int i = 0; i < npreds; ++i) q.preds.insert({col(), static_cast<CmpOp>(pick(rng)), val(rng)});
    if (imply_false(q)) {
      ++positives;
      REQUIRE(execute(db, q).card_dup == 0);
    }
  }
  CHECK(positives > 100);
}

TEST_CASE("work grows linearly with the number of atoms", "[implyfalse]") {
  // Ladder: n columns chained by equality joins, one predicate each.
  auto ladder = [](std::size_t n) {
    ConjunctiveQuery q;
    for (std::size_t i = 0; i < n; ++i) q.tables.insert("T" + std::to_string(i));
    q.attrs = {{"T0", "c"}};
    for (std::size_t i = 0; i + 1 < n; ++i)
      q.joins.insert(JoinAtom{{"T" + std::to_string(i), "c"}, CmpOp::Equal, {"T" + std::to_string(i + 1), "c"}}.canonical());
    for (std::size_t i = 0; i < n; ++i) q.preds.insert({{"T" + std::to_string(i), "c"}, CmpOp::Greater, static_cast<Value>(i)});
    return q;
  };
  std::vector<double> per_atom;
  for (std::size_t n : {16, 64, 256, 1024, 4096}) {
    ImplyFalseTrace trace;
    CHECK_FALSE(imply_false(ladder(n), &trace));
    CHECK(trace.columns == n);
    CHECK(trace.atoms == 2 * n - 1);
    per_atom.push_back(static_cast<double>(trace.find_steps) / static_cast<double>(trace.atoms));
  }
  // Union by size + path compression: hops per atom stay bounded.
  for (double r : per_atom) CHECK(r < 4.0);
}
