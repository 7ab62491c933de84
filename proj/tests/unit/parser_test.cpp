#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crdext/error.hpp"
#include "crdext/parser.hpp"
#include "fixtures.hpp"

using namespace crdext;

namespace {

BoolExpr pred(const char* col, CmpOp op, Value v) { return BoolExpr::pred({ColumnRef::parse(col), op, v}); }

}  // namespace

TEST_CASE("parse simple DISTINCT query", "[parser]") {
  auto db = fixtures::toy_db();
  auto q = parse("SELECT DISTINCT R.a FROM R WHERE R.a > 5", db.schema());
  CHECK(q.select.distinct);
  CHECK(q.select.attrs == std::vector<ColumnRef>{{"R", "a"}});
  CHECK(q.from == std::vector<std::string>{"R"});
  CHECK(q.where == pred("R.a", CmpOp::Greater, 5));
}

TEST_CASE("NOT binds tighter than AND, AND tighter than OR", "[parser]") {
  auto db = fixtures::toy_db();
  auto q = parse("select R.a from R where not R.a = 5 or R.b < 2 and R.b > 0", db.schema());
  auto expected = BoolExpr::disj({BoolExpr::negate(pred("R.a", CmpOp::Equal, 5)),
                                  BoolExpr::conj({pred("R.b", CmpOp::Less, 2), pred("R.b", CmpOp::Greater, 0)})});
  CHECK(q.where == expected);

  auto grouped = parse("SELECT R.a FROM R WHERE NOT (R.a = 5 OR R.b < 2)", db.schema());
  CHECK(grouped.where ==
        BoolExpr::negate(BoolExpr::disj({pred("R.a", CmpOp::Equal, 5), pred("R.b", CmpOp::Less, 2)})));
}

TEST_CASE("syntax errors carry spans", "[parser]") {
  std::string text = "SELECT FROM";
  try {
    parse_unchecked(text);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.span() == SourceSpan{7, 11});
    CHECK(text.substr(e.span().start, e.span().end - e.span().start) == "FROM");
  }
  CHECK_THROWS_AS(parse_unchecked("SELECT R.a FROM R WHERE R.a >"), SyntaxError);
  CHECK_THROWS_AS(parse_unchecked("SELECT R.a FROM R WHERE (R.a > 1"), SyntaxError);
  CHECK_THROWS_AS(parse_unchecked("SELECT R.a FROM R WHERE R.a ! 1"), SyntaxError);
  CHECK_THROWS_AS(parse_unchecked("SELECT R.a FROM R extra"), SyntaxError);
}

TEST_CASE("parse validates against the schema", "[parser]") {
  auto db = fixtures::toy_db();
  CHECK_THROWS_MATCHES(parse("SELECT R.z FROM R", db.schema()), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::Validation;
                       }));
}

TEST_CASE("render forms", "[parser]") {
  QueryAst q;
  q.select.attrs = {{"R", "a"}};
  q.from = {"R"};
  q.where = pred("R.a", CmpOp::Greater, 5);
  CHECK(render(q) == "SELECT R.a FROM R WHERE R.a > 5");
  q.select.distinct = true;
  CHECK(render(q) == "SELECT DISTINCT R.a FROM R WHERE R.a > 5");
  q.where = BoolExpr::truth();
  q.select = {false, true, {}};
  CHECK(render(q) == "SELECT * FROM R");
  q.where = BoolExpr::conj({BoolExpr::conj({pred("R.a", CmpOp::Less, -3), pred("R.b", CmpOp::Equal, 1)}),
                            BoolExpr::negate(BoolExpr::negate(pred("R.a", CmpOp::Less, 1)))});
  CHECK(render(q) == "SELECT * FROM R WHERE (R.a < -3 AND R.b = 1) AND NOT NOT R.a < 1");
}

TEST_CASE("parse(render(q)) == q on random trees", "[parser][property]") {
  std::mt19937_64 rng(1234);
  for (int iter = 0; iter < 1000; ++iter) {
    auto db = fixtures::random_db(rng, 2);
    auto q = fixtures::random_query(rng, db.schema(), true);
    auto text = render(q);
    auto back = parse(text, db.schema());
    INFO(text);
    REQUIRE(back == q);
    REQUIRE(render(back) == text);
  }
}

TEST_CASE("workload files skip comments and blank lines", "[parser]") {
  auto db = fixtures::toy_db();
  std::string text = "# header\n\nSELECT R.a FROM R  # trailing\n   \nSELECT * FROM S WHERE S.c = 10\n";
  auto qs = parse_workload(text, db.schema());
  REQUIRE(qs.size() == 2);
  CHECK(qs[1].from == std::vector<std::string>{"S"});
  CHECK_THROWS_AS(parse_workload("SELECT R.a FROM R\nSELECT\n", db.schema()), SyntaxError);
}
