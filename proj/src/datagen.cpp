#include "crdext/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crdext/dnf.hpp"
#include "crdext/error.hpp"

namespace crdext {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

const TableGen* find_table(const DbGenConfig& cfg, const std::string& name) {
  for (const auto& t : cfg.tables)
    if (t.name == name) return &t;
  return nullptr;
}

const ColumnGen* find_column(const TableGen& t, const std::string& name) {
  for (const auto& c : t.columns)
    if (c.name == name) return &c;
  return nullptr;
}

std::pair<Value, Value> range_of(const DbGenConfig& cfg, const TableGen& t, const ColumnGen& c) {
  switch (c.kind) {
    case ColumnKind::Serial: return {1, static_cast<Value>(t.rows)};
    case ColumnKind::Foreign: {
      auto ref = ColumnRef::parse(c.references);
      return {1, static_cast<Value>(find_table(cfg, ref.table)->rows)};
    }
    case ColumnKind::Value: return {c.min, c.max};
  }
  return {0, 0};
}

// Tables ordered so that every referenced table comes first.
std::vector<std::size_t> generation_order(const DbGenConfig& cfg) {
  std::vector<std::size_t> order;
  std::vector<int> state(cfg.tables.size(), 0);
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < cfg.tables.size(); ++i)
      if (cfg.tables[i].name == name) return i;
    config_error("unknown table " + name);
  };
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (state[i] == 2) return;
    if (state[i] == 1) config_error("foreign keys form a cycle through " + cfg.tables[i].name);
    state[i] = 1;
    for (const auto& c : cfg.tables[i].columns)
      if (c.kind == ColumnKind::Foreign) visit(index_of(ColumnRef::parse(c.references).table));
    state[i] = 2;
    order.push_back(i);
  };
  for (std::size_t i = 0; i < cfg.tables.size(); ++i) visit(i);
  return order;
}

/// Zipf over ranks 0..n-1 with P(r) proportional to 1 / (r+1)^s.
class Zipf {
 public:
  Zipf(std::uint64_t n, double s) : n_(n), s_(s) {
    if (s_ > 0.0) {
      if (n > 2'000'000) config_error("skewed column range is too large");
      cdf_.resize(n);
      double acc = 0.0;
      for (std::uint64_t r = 0; r < n; ++r) cdf_[r] = acc += std::pow(static_cast<double>(r + 1), -s_);
      for (auto& x : cdf_) x /= acc;
    }
  }
  std::uint64_t operator()(std::mt19937_64& rng) const {
    if (s_ == 0.0) return std::uniform_int_distribution<std::uint64_t>(0, n_ - 1)(rng);
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), n_ - 1);
  }

 private:
  std::uint64_t n_;
  double s_;
  std::vector<double> cdf_;
};

Value rescale(Value x, Value plo, Value phi, Value lo, Value hi) {
  if (phi <= plo) return lo;
  long double t = static_cast<long double>(x - plo) / static_cast<long double>(phi - plo);
  return lo + static_cast<Value>(std::llround(t * static_cast<long double>(hi - lo)));
}

}  // namespace

void DbGenConfig::validate() const {
  if (tables.empty()) config_error("no tables");
  std::set<std::string> names;
  for (const auto& t : tables) {
    if (!names.insert(t.name).second) config_error("duplicate table " + t.name);
    if (t.rows == 0) config_error(t.name + ": rows must be positive");
    if (t.columns.empty()) config_error(t.name + ": no columns");
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (!cols.insert(c.name).second) config_error(t.name + ": duplicate column " + c.name);
      const auto where = t.name + "." + c.name;
      if (c.kind == ColumnKind::Value) {
        if (c.min > c.max) config_error(where + ": empty range");
      }
      if (c.kind == ColumnKind::Foreign) {
        auto ref = ColumnRef::parse(c.references);
        const auto* rt = find_table(*this, ref.table);
        const auto* rc = rt ? find_column(*rt, ref.column) : nullptr;
        if (!rc || rc->kind != ColumnKind::Serial) config_error(where + ": must reference a serial column");
        if (rt == &t) config_error(where + ": self reference");
      }
      if (!(c.skew >= 0.0)) config_error(where + ": skew must be >= 0");
      if (c.correlate) {
        const auto& k = *c.correlate;
        if (!(k.strength >= 0.0 && k.strength <= 1.0)) config_error(where + ": correlation strength outside [0, 1]");
        if (k.via) {
          const auto* fk = find_column(t, *k.via);
          if (!fk || fk->kind != ColumnKind::Foreign || &*fk >= &c) config_error(where + ": via must be an earlier foreign key");
          auto ref = ColumnRef::parse(fk->references);
          if (!find_column(*find_table(*this, ref.table), k.column))
            config_error(where + ": " + ref.table + " has no column " + k.column);
        } else {
          const auto* partner = find_column(t, k.column);
          if (!partner || partner >= &c) config_error(where + ": correlated column must come earlier");
        }
      }
    }
  }
  generation_order(*this);
}

Database gen_db(const DbGenConfig& cfg) {
  cfg.validate();
  std::vector<TableDef> defs;
  for (const auto& t : cfg.tables) {
    TableDef d{t.name, {}};
    for (const auto& c : t.columns) {
      auto [lo, hi] = range_of(cfg, t, c);
      d.columns.push_back({c.name, lo, hi});
    }
    defs.push_back(std::move(d));
  }
  Schema schema(defs, cfg.join_edges);

  std::vector<std::vector<std::vector<Value>>> data(cfg.tables.size());
  for (std::size_t ti : generation_order(cfg)) {
    const auto& t = cfg.tables[ti];
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + ti + 1);
    auto& cols = data[ti];
    cols.assign(t.columns.size(), std::vector<Value>(t.rows));
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      const auto& c = t.columns[ci];
      auto [lo, hi] = range_of(cfg, t, c);
      auto& out = cols[ci];
      if (c.kind == ColumnKind::Serial) {
        std::iota(out.begin(), out.end(), Value{1});
        continue;
      }
      Zipf draw(static_cast<std::uint64_t>(hi - lo) + 1, c.skew);

      // Partner values and their range, when correlated.
      const std::vector<Value>* partner = nullptr;
      const std::vector<Value>* fk = nullptr;
      Value plo = 0, phi = 0;
      if (c.correlate) {
        const auto& k = *c.correlate;
        if (k.via) {
          std::size_t fi = defs[ti].column_index(*k.via).value();
          fk = &cols[fi];
          auto ref = ColumnRef::parse(t.columns[fi].references);
          auto rti = schema.table_index(ref.table).value();
          auto rci = defs[rti].column_index(k.column).value();
          partner = &data[rti][rci];
          std::tie(plo, phi) = range_of(cfg, cfg.tables[rti], cfg.tables[rti].columns[rci]);
        } else {
          auto pci = defs[ti].column_index(k.column).value();
          partner = &cols[pci];
          std::tie(plo, phi) = range_of(cfg, t, t.columns[pci]);
        }
      }
      std::bernoulli_distribution mix(c.correlate ? c.correlate->strength : 0.0);
      for (std::size_t r = 0; r < t.rows; ++r) {
        Value v = lo + static_cast<Value>(draw(rng));
        if (partner && mix(rng)) {
          Value x = fk ? (*partner)[static_cast<std::size_t>((*fk)[r] - 1)] : (*partner)[r];
          v = rescale(x, plo, phi, lo, hi);
        }
        out[r] = v;
      }
    }
  }

  std::vector<Table> tables;
  for (std::size_t i = 0; i < defs.size(); ++i) tables.emplace_back(defs[i], std::move(data[i]));
  return Database(std::move(schema), std::move(tables));
}

// ---------------------------------------------------------------------------
// Config I/O

namespace {

std::string kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Serial: return "serial";
    case ColumnKind::Foreign: return "foreign";
    case ColumnKind::Value: return "value";
  }
  return "value";
}

ColumnKind kind_from(const std::string& s) {
  if (s == "serial") return ColumnKind::Serial;
  if (s == "foreign") return ColumnKind::Foreign;
  if (s == "value") return ColumnKind::Value;
  config_error("unknown column kind '" + s + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

}  // namespace

DbGenConfig DbGenConfig::from_json_text(const std::string& text) {
  DbGenConfig cfg;
  try {
    auto j = json::parse(text);
    cfg.seed = j.value("seed", std::uint64_t{0});
    for (const auto& jt : j.at("tables")) {
      TableGen t;
      t.name = jt.at("name").get<std::string>();
      t.rows = jt.at("rows").get<std::size_t>();
      for (const auto& jc : jt.at("columns")) {
        ColumnGen c;
        c.name = jc.at("name").get<std::string>();
        c.kind = kind_from(jc.value("kind", std::string("value")));
        c.min = jc.value("min", Value{0});
        c.max = jc.value("max", Value{0});
        c.skew = jc.value("skew", 0.0);
        c.references = jc.value("references", std::string());
        if (jc.contains("correlate")) {
          const auto& k = jc.at("correlate");
          Correlation corr;
          corr.column = k.at("column").get<std::string>();
          if (k.contains("via")) corr.via = k.at("via").get<std::string>();
          corr.strength = k.at("strength").get<double>();
          c.correlate = corr;
        }
        t.columns.push_back(std::move(c));
      }
      cfg.tables.push_back(std::move(t));
    }
    for (const auto& e : j.value("join_edges", json::array()))
      cfg.join_edges.emplace_back(ColumnRef::parse(e.at(0).get<std::string>()), ColumnRef::parse(e.at(1).get<std::string>()));
  } catch (const json::exception& e) {
    config_error(std::string("generator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string DbGenConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["tables"] = json::array();
  for (const auto& t : tables) {
    json jt{{"name", t.name}, {"rows", t.rows}, {"columns", json::array()}};
    for (const auto& c : t.columns) {
      json jc{{"name", c.name}, {"kind", kind_name(c.kind)}};
      if (c.kind == ColumnKind::Value) {
        jc["min"] = c.min;
        jc["max"] = c.max;
      }
      if (c.kind == ColumnKind::Foreign) jc["references"] = c.references;
      if (c.kind != ColumnKind::Serial) jc["skew"] = c.skew;
      if (c.correlate) {
        json k{{"column", c.correlate->column}, {"strength", c.correlate->strength}};
        if (c.correlate->via) k["via"] = *c.correlate->via;
        jc["correlate"] = k;
      }
      jt["columns"].push_back(jc);
    }
    j["tables"].push_back(jt);
  }
  j["join_edges"] = json::array();
  for (const auto& [a, b] : join_edges) j["join_edges"].push_back({a.qualified(), b.qualified()});
  return j.dump(2) + "\n";
}

DbGenConfig DbGenConfig::load(const std::filesystem::path& path) { return from_json_text(read_file(path)); }

DbGenConfig DbGenConfig::imdb_like(double scale, std::uint64_t seed) {
  auto rows = [scale](std::size_t n) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(scale * static_cast<double>(n)))); };
  auto value = [](std::string name, Value lo, Value hi, double skew) {
    ColumnGen c;
    c.name = std::move(name);
    c.min = lo;
    c.max = hi;
    c.skew = skew;
    return c;
  };
  auto serial = [] {
    ColumnGen c;
    c.name = "id";
    c.kind = ColumnKind::Serial;
    return c;
  };
  auto movie_fk = [](double skew) {
    ColumnGen c;
    c.name = "movie_id";
    c.kind = ColumnKind::Foreign;
    c.references = "title.id";
    c.skew = skew;
    return c;
  };
  auto correlated = [](ColumnGen c, std::string with, double strength, std::optional<std::string> via = std::nullopt) {
    c.correlate = Correlation{std::move(with), std::move(via), strength};
    return c;
  };

  DbGenConfig cfg;
  cfg.seed = seed;
  cfg.tables = {
      {"title", rows(10000),
       {serial(), value("kind_id", 1, 7, 1.2), correlated(value("production_year", 1900, 2020, 0.0), "kind_id", 0.4),
        value("season_nr", 0, 30, 1.5)}},
      {"cast_info", rows(40000),
       {movie_fk(0.6), value("person_id", 1, 20000, 0.9), value("role_id", 1, 11, 1.0),
        correlated(value("nr_order", 0, 50, 0.7), "role_id", 0.5)}},
      {"movie_info", rows(30000),
       {movie_fk(0.5), correlated(value("info_type_id", 1, 110, 1.1), "kind_id", 0.5, "movie_id"),
        value("info", 0, 2000, 1.0)}},
      {"movie_keyword", rows(20000), {movie_fk(0.7), value("keyword_id", 1, 8000, 1.0)}},
      {"movie_companies", rows(15000),
       {movie_fk(0.4), value("company_id", 1, 3000, 1.1), value("company_type_id", 1, 2, 0.0)}},
      {"movie_info_idx", rows(10000),
       {movie_fk(0.3), value("info_type_id", 99, 113, 0.8),
        correlated(value("info", 0, 100, 0.0), "production_year", 0.6, "movie_id")}},
  };
  for (const char* t : {"cast_info", "movie_info", "movie_keyword", "movie_companies", "movie_info_idx"})
    cfg.join_edges.push_back({ColumnRef{t, "movie_id"}, ColumnRef{"title", "id"}});
  return cfg;
}

// ---------------------------------------------------------------------------
// Workloads

std::size_t WorkloadSpec::count() const { return std::accumulate(joins.begin(), joins.end(), std::size_t{0}); }

void WorkloadSpec::validate(bool general) const {
  if (!(distinct_prob >= 0.0 && distinct_prob <= 1.0)) config_error("distinct_prob outside [0, 1]");
  if (general) {
    if (std::accumulate(dnf_sizes.begin(), dnf_sizes.end(), std::size_t{0}) != count())
      config_error("dnf_sizes and joins describe different workload sizes");
    if (dnf_sizes.size() > 5) config_error("DNF sizes above 5 are not generated");
  }
}

WorkloadSpec WorkloadSpec::from_json_text(const std::string& text) {
  WorkloadSpec s;
  try {
    auto j = json::parse(text);
    s.joins = j.at("joins").get<std::vector<std::size_t>>();
    s.dnf_sizes = j.value("dnf_sizes", std::vector<std::size_t>{});
    s.max_preds_per_table = j.value("max_preds_per_table", s.max_preds_per_table);
    s.distinct_prob = j.value("distinct_prob", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    config_error(std::string("workload spec: ") + e.what());
  }
  s.validate(!s.dnf_sizes.empty());
  return s;
}

std::string WorkloadSpec::to_json_text() const {
  json j{{"joins", joins}, {"max_preds_per_table", max_preds_per_table}, {"distinct_prob", distinct_prob}, {"seed", seed}};
  if (!dnf_sizes.empty()) j["dnf_sizes"] = dnf_sizes;
  return j.dump(2) + "\n";
}

namespace {

constexpr int kMaxRetries = 1000;

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

PredAtom random_pred(const Table& table, std::mt19937_64& rng) {
  auto c = std::uniform_int_distribution<std::size_t>(0, table.num_columns() - 1)(rng);
  auto op = static_cast<CmpOp>(std::uniform_int_distribution<int>(0, kNumOps - 1)(rng));
  auto r = std::uniform_int_distribution<std::size_t>(0, table.row_count() - 1)(rng);
  return {{table.name(), table.def().columns[c].name}, op, table.column(c)[r]};
}

// Changes one of column, operator, constant (equal odds) to get p' != p.
PredAtom mutate(const Database& db, const PredAtom& p, std::mt19937_64& rng) {
  const auto& table = db.table(p.column.table);
  for (int attempt = 0; attempt < 100; ++attempt) {
    PredAtom q = p;
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0: q.column = random_pred(table, rng).column; break;
      case 1: q.op = static_cast<CmpOp>(std::uniform_int_distribution<int>(0, kNumOps - 1)(rng)); break;
      default: q.value = random_pred(table, rng).value; break;
    }
    if (q.column != p.column) q.value = table.column(q.column.column)[std::uniform_int_distribution<std::size_t>(0, table.row_count() - 1)(rng)];
    if (q != p) return q;
  }
  // Constant-valued table with one column: the operator always changes.
  PredAtom q = p;
  q.op = p.op == CmpOp::Less ? CmpOp::Greater : CmpOp::Less;
  return q;
}

// Group sizes whose product is the target DNF size.
std::vector<std::vector<int>> factorizations(std::size_t target) {
  switch (target) {
    case 1: return {{}};
    case 2: return {{2}};
    case 3: return {{3}};
    case 4: return {{4}, {2, 2}};
    case 5: return {{5}};
    default: config_error("DNF size " + std::to_string(target) + " is not generated");
  }
}

// (leaves, negated leaves) pairs giving a group of the given DNF size; a
// negated leaf expands to two members.
std::vector<std::pair<int, int>> group_shapes(int size) {
  switch (size) {
    case 2: return {{2, 0}, {1, 1}};
    case 3: return {{2, 1}};
    case 4: return {{2, 2}};
    case 5: return {{3, 2}};
    default: return {};
  }
}

}  // namespace

QueryAst gen_conjunctive(const Database& db, std::size_t joins, const WorkloadSpec& spec, std::mt19937_64& rng) {
  const auto& schema = db.schema();
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::vector<std::string> chosen{pick(schema.tables(), rng).name};
    std::vector<BoolExpr> conjuncts;
    bool ok = true;
    for (std::size_t k = 0; k < joins && ok; ++k) {
      std::vector<const JoinEdge*> frontier;
      for (const auto& e : schema.join_edges()) {
        bool l = std::find(chosen.begin(), chosen.end(), e.first.table) != chosen.end();
        bool r = std::find(chosen.begin(), chosen.end(), e.second.table) != chosen.end();
        if (l != r) frontier.push_back(&e);
      }
      if (frontier.empty()) {
        ok = false;
        break;
      }
      const auto& e = *pick(frontier, rng);
      chosen.push_back(std::find(chosen.begin(), chosen.end(), e.first.table) == chosen.end() ? e.first.table : e.second.table);
      conjuncts.push_back(BoolExpr::join({e.first, CmpOp::Equal, e.second}));
    }
    if (!ok) continue;

    std::set<PredAtom> seen;
    std::vector<ColumnRef> columns;
    for (const auto& t : chosen) {
      const auto& table = db.table(t);
      for (const auto& c : table.def().columns) columns.push_back({t, c.name});
      if (table.row_count() == 0) continue;
      auto n = std::uniform_int_distribution<std::size_t>(0, spec.max_preds_per_table)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        auto p = random_pred(table, rng);
        if (seen.insert(p).second) conjuncts.push_back(BoolExpr::pred(p));
      }
    }

    QueryAst q;
    q.from = chosen;
    std::shuffle(columns.begin(), columns.end(), rng);
    auto c = std::uniform_int_distribution<std::size_t>(1, columns.size())(rng);
    q.select.attrs.assign(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(c));
    q.select.distinct = std::bernoulli_distribution(spec.distinct_prob)(rng);
    q.where = BoolExpr::conj_of(std::move(conjuncts));
    return q;
  }
  throw Error(ErrorKind::Gen, "no connected table set with " + std::to_string(joins) + " joins");
}

QueryAst gen_general(const Database& db, std::size_t joins, std::size_t dnf_target, const WorkloadSpec& spec,
                     std::mt19937_64& rng) {
  const auto options = factorizations(dnf_target);
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    auto q = gen_conjunctive(db, joins, spec, rng);
    if (dnf_target == 1) return q;
    const auto& groups = pick(options, rng);

    std::vector<BoolExpr> conjuncts;
    if (q.where.kind() == BoolExpr::Kind::And) conjuncts = q.where.children();
    else if (q.where.kind() != BoolExpr::Kind::True) conjuncts = {q.where};
    std::vector<std::size_t> pred_slots;
    for (std::size_t i = 0; i < conjuncts.size(); ++i)
      if (conjuncts[i].kind() == BoolExpr::Kind::Pred) pred_slots.push_back(i);
    if (pred_slots.size() < groups.size()) continue;
    std::shuffle(pred_slots.begin(), pred_slots.end(), rng);

    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto [leaves, negated] = pick(group_shapes(groups[g]), rng);
      auto& slot = conjuncts[pred_slots[g]];
      std::vector<PredAtom> atoms{slot.pred_atom()};
      while (static_cast<int>(atoms.size()) < leaves) {
        auto next = mutate(db, atoms.back(), rng);
        if (std::find(atoms.begin(), atoms.end(), next) == atoms.end()) atoms.push_back(next);
      }
      std::vector<std::size_t> order(atoms.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<BoolExpr> parts;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        bool neg = std::find(order.begin(), order.begin() + negated, i) != order.begin() + negated;
        parts.push_back(neg ? BoolExpr::negate(BoolExpr::pred(atoms[i])) : BoolExpr::pred(atoms[i]));
      }
      slot = parts.size() == 1 ? parts.front() : BoolExpr::disj(std::move(parts));
    }
    q.where = BoolExpr::conj_of(std::move(conjuncts));
    if (dnf_size(q, 64) == dnf_target) return q;
  }
  throw Error(ErrorKind::Gen, "could not reach DNF size " + std::to_string(dnf_target));
}

std::vector<QueryAst> gen_workload(const Database& db, const WorkloadSpec& spec) {
  const bool general = !spec.dnf_sizes.empty();
  spec.validate(general);
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> joins, sizes;
  for (std::size_t k = 0; k < spec.joins.size(); ++k) joins.insert(joins.end(), spec.joins[k], k);
  for (std::size_t k = 0; k < spec.dnf_sizes.size(); ++k) sizes.insert(sizes.end(), spec.dnf_sizes[k], k + 1);
  std::shuffle(joins.begin(), joins.end(), rng);
  std::shuffle(sizes.begin(), sizes.end(), rng);

  std::vector<QueryAst> out;
  out.reserve(joins.size());
  for (std::size_t i = 0; i < joins.size(); ++i)
    out.push_back(general ? gen_general(db, joins[i], sizes[i], spec, rng) : gen_conjunctive(db, joins[i], spec, rng));
  return out;
}

// ---------------------------------------------------------------------------
// Labels

std::vector<LabelRecord> label_workload(const Database& db, const std::vector<QueryAst>& workload) {
  std::vector<LabelRecord> out;
  out.reserve(workload.size());
  for (const auto& q : workload) {
    validate(q, db.schema());
    auto r = execute_general(db, q);
    LabelRecord l;
    l.card_dup = r.card_dup;
    l.card_distinct = r.card_distinct;
    l.uniqueness = r.uniqueness_rate;
    l.joins = count_joins(q);
    l.dnf_size = dnf_size(q, std::size_t{1} << 20);
    l.distinct = q.select.distinct;
    out.push_back(l);
  }
  return out;
}

std::string labels_to_json_text(const std::vector<LabelRecord>& labels) {
  json arr = json::array();
  for (const auto& l : labels)
    arr.push_back({{"card_dup", l.card_dup},
                   {"card_distinct", l.card_distinct},
                   {"uniqueness", l.uniqueness},
                   {"joins", l.joins},
                   {"dnf_size", l.dnf_size},
                   {"distinct", l.distinct}});
  return json{{"labels", arr}}.dump(1) + "\n";
}

std::vector<LabelRecord> labels_from_json_text(const std::string& text) {
  std::vector<LabelRecord> out;
  try {
    const auto doc = json::parse(text);
    for (const auto& j : doc.at("labels")) {
      LabelRecord l;
      l.card_dup = j.at("card_dup").get<std::uint64_t>();
      l.card_distinct = j.at("card_distinct").get<std::uint64_t>();
      l.uniqueness = j.at("uniqueness").get<double>();
      l.joins = j.at("joins").get<std::size_t>();
      l.dnf_size = j.at("dnf_size").get<std::size_t>();
      l.distinct = j.value("distinct", false);
      out.push_back(l);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("labels file: ") + e.what());
  }
  return out;
}

void save_labels(const std::vector<LabelRecord>& labels, const std::filesystem::path& path) {
  write_file(path, labels_to_json_text(labels));
}

std::vector<LabelRecord> load_labels(const std::filesystem::path& path) { return labels_from_json_text(read_file(path)); }

std::vector<LabeledSample> training_samples(const std::vector<QueryAst>& workload, const std::vector<LabelRecord>& labels,
                                            const Schema& schema) {
  if (workload.size() != labels.size()) throw Error(ErrorKind::Config, "workload and labels differ in length");
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < workload.size(); ++i) {
    if (labels[i].empty() || !workload[i].where.is_pure_conjunction()) continue;
    out.push_back({to_conjunctive(workload[i], schema), labels[i].uniqueness});
  }
  return out;
}

}  // namespace crdext
