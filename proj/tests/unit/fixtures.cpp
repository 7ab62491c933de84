#include "fixtures.hpp"

#include <functional>
#include <map>
#include <set>

using namespace crdext;

namespace fixtures {

Database make_db(const std::vector<TableRows>& tables, std::vector<JoinEdge> edges) {
  std::vector<TableDef> defs;
  std::vector<Table> data;
  for (const auto& t : tables) {
    TableDef def{t.name, {}};
    std::vector<std::vector<Value>> cols(t.columns.size());
    for (const auto& row : t.rows)
      for (std::size_t c = 0; c < row.size(); ++c) cols[c].push_back(row[c]);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      Value lo = 0, hi = 0;
      if (!cols[c].empty()) {
        lo = *std::min_element(cols[c].begin(), cols[c].end());
        hi = *std::max_element(cols[c].begin(), cols[c].end());
      }
      def.columns.push_back({t.columns[c], lo, hi});
    }
    defs.push_back(def);
    data.emplace_back(def, std::move(cols));
  }
  return Database(Schema(std::move(defs), std::move(edges)), std::move(data));
}

Database toy_db() {
  return make_db({{"R", {"a", "b"}, {{1, 1}, {1, 2}, {2, 2}}}, {"S", {"b", "c"}, {{1, 10}, {2, 20}, {2, 30}}}},
                 {{ColumnRef{"R", "b"}, ColumnRef{"S", "b"}}});
}

Database random_db(std::mt19937_64& rng, std::size_t max_rows, Value domain) {
  std::uniform_int_distribution<std::size_t> nrows(1, max_rows);
  std::uniform_int_distribution<Value> val(0, domain - 1);
  std::vector<TableRows> tables;
  for (const char* name : {"R", "S", "U"}) {
    TableRows t{name, {"x", "y", "z"}, {}};
    auto n = nrows(rng);
    for (std::size_t r = 0; r < n; ++r) t.rows.push_back({val(rng), val(rng), val(rng)});
    tables.push_back(std::move(t));
  }
  return make_db(tables, {{ColumnRef{"R", "x"}, ColumnRef{"S", "x"}},
                          {ColumnRef{"S", "y"}, ColumnRef{"U", "y"}},
                          {ColumnRef{"R", "z"}, ColumnRef{"U", "z"}}});
}

namespace {

bool naive_eval(const BoolExpr& e, const std::map<std::string, std::map<std::string, Value>>& tuple) {
  auto get = [&](const ColumnRef& c) { return tuple.at(c.table).at(c.column); };
  auto cmp = [](Value l, CmpOp op, Value r) {
    if (op == CmpOp::Less) return l < r;
    if (op == CmpOp::Greater) return l > r;
    return l == r;
  };
  switch (e.kind()) {
    case BoolExpr::Kind::True: return true;
    case BoolExpr::Kind::Pred: return cmp(get(e.pred_atom().column), e.pred_atom().op, e.pred_atom().value);
    case BoolExpr::Kind::Join: return cmp(get(e.join_atom().left), e.join_atom().op, get(e.join_atom().right));
    case BoolExpr::Kind::Not: return !naive_eval(e.children()[0], tuple);
    case BoolExpr::Kind::And:
      for (const auto& c : e.children())
        if (!naive_eval(c, tuple)) return false;
      return true;
    case BoolExpr::Kind::Or:
      for (const auto& c : e.children())
        if (naive_eval(c, tuple)) return true;
      return false;
  }
  return false;
}

}  // namespace

BruteResult brute_force(const Database& db, const QueryAst& q) {
  BruteResult out;
  std::set<std::vector<Value>> distinct;
  std::map<std::string, std::map<std::string, Value>> tuple;
  std::vector<ColumnRef> proj = q.select.attrs;
  if (q.select.star)
    for (const auto& t : q.from)
      for (const auto& c : db.table(t).def().columns) proj.push_back({t, c.name});

  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == q.from.size()) {
      if (!naive_eval(q.where, tuple)) return;
      ++out.dup;
      std::vector<Value> key;
      for (const auto& c : proj) key.push_back(tuple.at(c.table).at(c.column));
      distinct.insert(key);
      return;
    }
    const auto& t = db.table(q.from[i]);
    for (std::size_t r = 0; r < t.row_count(); ++r) {
      auto& row = tuple[t.name()];
      for (std::size_t c = 0; c < t.num_columns(); ++c) row[t.def().columns[c].name] = t.column(c)[r];
      rec(i + 1);
    }
  };
  rec(0);
  out.distinct = distinct.size();
  return out;
}

QueryAst random_query(std::mt19937_64& rng, const Schema& schema, bool general, Value domain, int max_tables) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  QueryAst q;
  std::vector<std::string> names;
  for (const auto& t : schema.tables()) names.push_back(t.name);
  std::shuffle(names.begin(), names.end(), rng);
  auto ntables = 1 + pick(static_cast<std::size_t>(std::min<int>(max_tables, static_cast<int>(names.size()))));
  q.from.assign(names.begin(), names.begin() + static_cast<long>(ntables));

  std::vector<ColumnRef> cols;
  for (const auto& t : q.from)
    for (const auto& c : schema.find_table(t)->columns) cols.push_back({t, c.name});

  if (coin(0.2)) {
    q.select.star = true;
  } else {
    auto nsel = 1 + pick(3);
    std::set<ColumnRef> chosen;
    for (std::size_t i = 0; i < nsel; ++i) chosen.insert(cols[pick(cols.size())]);
    q.select.attrs.assign(chosen.begin(), chosen.end());
  }
  q.select.distinct = coin(0.3);

  auto random_pred = [&]() {
    PredAtom p{cols[pick(cols.size())], static_cast<CmpOp>(pick(3)),
               std::uniform_int_distribution<Value>(-1, domain)(rng)};
    return BoolExpr::pred(p);
  };
  std::function<BoolExpr(int)> random_tree = [&](int depth) -> BoolExpr {
    if (depth == 0 || coin(0.4)) return random_pred();
    auto r = pick(3);
    if (r == 0) return BoolExpr::negate(random_tree(depth - 1));
    std::vector<BoolExpr> kids;
    auto n = 2 + pick(2);
    for (std::size_t i = 0; i < n; ++i) kids.push_back(random_tree(depth - 1));
    return r == 1 ? BoolExpr::conj(std::move(kids)) : BoolExpr::disj(std::move(kids));
  };

  std::vector<BoolExpr> conjuncts;
  // Chain the tables with random equality joins (occasionally an inequality).
  for (std::size_t i = 1; i < q.from.size(); ++i) {
    const auto* a = schema.find_table(q.from[pick(i)]);
    const auto* b = schema.find_table(q.from[i]);
    JoinAtom j{{a->name, a->columns[pick(a->columns.size())].name},
               coin(0.85) ? CmpOp::Equal : static_cast<CmpOp>(pick(3)),
               {b->name, b->columns[pick(b->columns.size())].name}};
    conjuncts.push_back(BoolExpr::join(j));
  }
  auto npreds = pick(4);
  for (std::size_t i = 0; i < npreds; ++i) conjuncts.push_back(general ? random_tree(2) : random_pred());
  q.where = BoolExpr::conj_of(std::move(conjuncts));
  return q;
}

}  // namespace fixtures
