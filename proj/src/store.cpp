#include "crdext/store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <unordered_map>
#include <unordered_set>

#include "crdext/error.hpp"

namespace crdext {

// ---------------------------------------------------------------------------
// Table / Database

Table::Table(TableDef def, std::vector<std::vector<Value>> columns)
    : def_(std::move(def)), columns_(std::move(columns)) {
  if (columns_.size() != def_.columns.size())
    throw Error(ErrorKind::SchemaMismatch, def_.name + ": expected " + std::to_string(def_.columns.size()) +
                                               " columns, got " + std::to_string(columns_.size()));
  rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].size() != rows_)
      throw Error(ErrorKind::SchemaMismatch, def_.name + "." + def_.columns[i].name + ": ragged column");
  }
  stats_.reserve(columns_.size());
  for (const auto& col : columns_) {
    ColumnStats s;
    if (!col.empty()) {
      auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      s.min = *lo;
      s.max = *hi;
      std::unordered_set<Value> seen(col.begin(), col.end());
      s.distinct_count = seen.size();
    }
    stats_.push_back(s);
  }
}

const std::vector<Value>& Table::column(std::string_view name) const {
  auto idx = def_.column_index(name);
  if (!idx) throw Error(ErrorKind::Validation, def_.name + "." + std::string(name));
  return columns_[*idx];
}

ColumnStats Table::stats(std::size_t index) const {
  if (rows_ == 0) throw Error(ErrorKind::EmptyColumn, def_.name + "." + def_.columns.at(index).name);
  return stats_.at(index);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

Table load_csv(const std::filesystem::path& path, const TableDef& def) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::SchemaMismatch, path.string() + ": missing header row");
  auto header = split_commas(trim(line));
  for (auto& h : header) h = trim(h);
  std::vector<std::string> expected;
  for (const auto& c : def.columns) expected.push_back(c.name);
  if (header != expected)
    throw Error(ErrorKind::SchemaMismatch, path.string() + ": header does not match table " + def.name);

  std::vector<std::vector<Value>> columns(def.columns.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    ++row;
    auto cells = split_commas(line);
    if (cells.size() != def.columns.size())
      throw Error(ErrorKind::Parse, path.string() + ": row " + std::to_string(row) + " has " +
                                        std::to_string(cells.size()) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto cell = trim(cells[c]);
      Value v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw CsvParseError(path.string(), row, def.columns[c].name, cell);
      columns[c].push_back(v);
    }
  }
  return Table(def, std::move(columns));
}

void save_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto& cols = table.def().columns;
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c].name;
  out << '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << table.column(c)[r];
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Database::Database(Schema schema, std::vector<Table> tables) : schema_(std::move(schema)), tables_(std::move(tables)) {
  if (tables_.size() != schema_.num_tables())
    throw Error(ErrorKind::SchemaMismatch, "table count does not match schema");
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (!(tables_[i].def() == schema_.tables()[i]))
      throw Error(ErrorKind::SchemaMismatch, "table " + tables_[i].name() + " does not match schema");
  }
}

const Table* Database::find_table(std::string_view name) const {
  auto idx = schema_.table_index(name);
  return idx ? &tables_[*idx] : nullptr;
}

const Table& Database::table(std::string_view name) const {
  const auto* t = find_table(name);
  if (t == nullptr) throw Error(ErrorKind::Validation, std::string(name));
  return *t;
}

ColumnStats Database::column_stats(const ColumnRef& col) const {
  const auto& t = table(col.table);
  auto idx = t.def().column_index(col.column);
  if (!idx) throw Error(ErrorKind::Validation, col.qualified());
  return t.stats(*idx);
}

Database Database::load(const std::filesystem::path& dir) {
  auto schema = Schema::load(dir / "schema.json");
  std::vector<Table> tables;
  for (const auto& def : schema.tables()) tables.push_back(load_csv(dir / (def.name + ".csv"), def));
  return Database(std::move(schema), std::move(tables));
}

void Database::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  schema_.save(dir / "schema.json");
  for (const auto& t : tables_) save_csv(t, dir / (t.name() + ".csv"));
}

ColumnStats column_stats(const Database& db, const ColumnRef& col) { return db.column_stats(col); }

// ---------------------------------------------------------------------------
// Executor

namespace {

using RowId = std::uint32_t;
using Binding = std::span<const RowId>;

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorKind::Overflow, "cardinality exceeds 64 bits");
  return r;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorKind::Overflow, "cardinality exceeds 64 bits");
  return r;
}

// Boolean tree with columns resolved to (slot, data).
struct Compiled {
  BoolExpr::Kind kind = BoolExpr::Kind::True;
  std::size_t lslot = 0;
  const Value* lcol = nullptr;
  std::size_t rslot = 0;
  const Value* rcol = nullptr;
  CmpOp op = CmpOp::Equal;
  Value value = 0;
  std::vector<Compiled> kids;

  bool eval(Binding b) const {
    using K = BoolExpr::Kind;
    switch (kind) {
      case K::True: return true;
      case K::Pred: return compare(lcol[b[lslot]], op, value);
      case K::Join: return compare(lcol[b[lslot]], op, rcol[b[rslot]]);
      case K::Not: return !kids.front().eval(b);
      case K::And:
        for (const auto& k : kids)
          if (!k.eval(b)) return false;
        return true;
      case K::Or:
        for (const auto& k : kids)
          if (k.eval(b)) return true;
        return false;
    }
    return false;
  }
};

struct SlotAtom {
  std::size_t lslot;
  const Value* lcol;
  CmpOp op;
  std::size_t rslot;
  const Value* rcol;
};

struct Problem {
  std::vector<const Table*> tables;
  std::vector<std::vector<Compiled>> filters;  // per slot, conjunction
  std::vector<SlotAtom> atoms;                  // cross-slot, conjunction
  std::vector<Compiled> residual;               // multi-slot, conjunction
  std::vector<std::pair<std::size_t, const Value*>> projection;
  bool want_distinct = true;
};

class Resolver {
 public:
  Resolver(const Database& db, const std::vector<std::string>& tables) {
    for (const auto& name : tables) {
      const auto* t = db.find_table(name);
      if (t == nullptr) throw Error(ErrorKind::Validation, name);
      slot_of_.emplace(name, tables_.size());
      tables_.push_back(t);
    }
  }

  std::size_t slot(const ColumnRef& c) const {
    auto it = slot_of_.find(c.table);
    if (it == slot_of_.end()) throw Error(ErrorKind::Validation, c.qualified());
    return it->second;
  }

  const Value* data(const ColumnRef& c) const {
    const Table* t = tables_[slot(c)];
    auto idx = t->def().column_index(c.column);
    if (!idx) throw Error(ErrorKind::Validation, c.qualified());
    return t->column(*idx).data();
  }

  Compiled compile(const BoolExpr& e) const {
    Compiled out;
    out.kind = e.kind();
    switch (e.kind()) {
      case BoolExpr::Kind::True: break;
      case BoolExpr::Kind::Pred:
        out.lslot = slot(e.pred_atom().column);
        out.lcol = data(e.pred_atom().column);
        out.op = e.pred_atom().op;
        out.value = e.pred_atom().value;
        break;
      case BoolExpr::Kind::Join:
        out.lslot = slot(e.join_atom().left);
        out.lcol = data(e.join_atom().left);
        out.op = e.join_atom().op;
        out.rslot = slot(e.join_atom().right);
        out.rcol = data(e.join_atom().right);
        break;
      default:
        for (const auto& c : e.children()) out.kids.push_back(compile(c));
    }
    return out;
  }

  const std::vector<const Table*>& tables() const { return tables_; }

 private:
  std::vector<const Table*> tables_;
  std::unordered_map<std::string, std::size_t> slot_of_;
};

// Exact distinct counting has to hold every projected tuple; past these
// limits the executor gives up with Overflow instead of exhausting memory.
constexpr std::size_t kMaxTupleValues = std::size_t{1} << 27;
constexpr std::uint64_t kMaxEnumerationSteps = std::uint64_t{1} << 30;

void count_step(std::uint64_t& steps) {
  if (++steps > kMaxEnumerationSteps) throw Error(ErrorKind::Overflow, "join enumeration exceeds the step limit");
}

/// Insert-only set of fixed-width tuples, stored flat with open addressing.
class TupleSet {
 public:
  void insert(const std::vector<Value>& t) {
    if (width_ == 0 && data_.empty() && count_ == 0) width_ = t.size();
    if ((count_ + 1) * std::max<std::size_t>(width_, 1) > kMaxTupleValues)
      throw Error(ErrorKind::Overflow, "distinct result exceeds the in-memory tuple limit");
    if ((count_ + 1) * 2 > slots_.size()) grow();
    if (insert_at(t.data(), hash(t.data()))) {
      data_.insert(data_.end(), t.begin(), t.end());
      ++count_;
    }
  }
  std::size_t size() const { return count_; }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  std::uint64_t hash(const Value* t) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ width_;
    for (std::size_t i = 0; i < width_; ++i) {
      h ^= static_cast<std::uint64_t>(t[i]);
      h *= 0xff51afd7ed558ccdULL;
      h ^= h >> 32;
    }
    return h;
  }

  // Returns true when t was absent; its slot then points at the next free row.
  bool insert_at(const Value* t, std::uint64_t h) {
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t i = h & mask;; i = (i + 1) & mask) {
      if (slots_[i] == kEmpty) {
        slots_[i] = static_cast<std::uint32_t>(count_);
        return true;
      }
      if (std::equal(t, t + width_, data_.data() + slots_[i] * width_)) return false;
    }
  }

  void grow() {
    slots_.assign(std::max<std::size_t>(16, slots_.size() * 2), kEmpty);
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t r = 0; r < count_; ++r) {
      std::size_t i = hash(data_.data() + r * width_) & mask;
      while (slots_[i] != kEmpty) i = (i + 1) & mask;
      slots_[i] = static_cast<std::uint32_t>(r);
    }
  }

  std::size_t width_ = 0;
  std::size_t count_ = 0;
  std::vector<Value> data_;
  std::vector<std::uint32_t> slots_;
};

struct Counts {
  std::uint64_t dup = 0;
  std::uint64_t distinct = 0;
};

class Solver {
 public:
  explicit Solver(const Problem& p) : p_(p), n_(p.tables.size()) {}

  Counts run() {
    rows_.resize(n_);
    std::vector<RowId> scratch(n_, 0);
    for (std::size_t s = 0; s < n_; ++s) {
      const auto count = p_.tables[s]->row_count();
      for (std::size_t r = 0; r < count; ++r) {
        scratch[s] = static_cast<RowId>(r);
        bool ok = true;
        for (const auto& f : p_.filters[s]) {
          if (!f.eval(scratch)) {
            ok = false;
            break;
          }
        }
        if (ok) rows_[s].push_back(static_cast<RowId>(r));
      }
      if (rows_[s].empty()) return {};
    }
    if (!p_.residual.empty() || !is_forest()) return enumerate_all();
    return solve_forest();
  }

 private:
  // Per-edge matcher between a bound slot and a free slot.
  struct Edge {
    std::size_t bound = 0;
    std::size_t free = 0;
    // Oriented atoms: bound_col op free_col.
    std::vector<std::tuple<const Value*, CmpOp, const Value*>> atoms;
    int key = -1;  // index of an equality atom usable for hashing
    std::unordered_map<Value, std::vector<std::uint32_t>> index;  // key -> positions in rows_[free]
  };

  void orient(Edge& e, std::size_t bound, std::size_t free) const {
    e.bound = bound;
    e.free = free;
    for (const auto& a : p_.atoms) {
      if (a.lslot == bound && a.rslot == free) e.atoms.emplace_back(a.lcol, a.op, a.rcol);
      else if (a.lslot == free && a.rslot == bound) e.atoms.emplace_back(a.rcol, flip(a.op), a.lcol);
    }
    for (std::size_t i = 0; i < e.atoms.size(); ++i) {
      if (std::get<1>(e.atoms[i]) == CmpOp::Equal) {
        e.key = static_cast<int>(i);
        break;
      }
    }
    if (e.key >= 0) {
      const Value* col = std::get<2>(e.atoms[e.key]);
      const auto& rows = rows_[free];
      for (std::uint32_t pos = 0; pos < rows.size(); ++pos) e.index[col[rows[pos]]].push_back(pos);
    }
  }

  // Calls fn(position) for each row of e.free matching bound row `brow`.
  template <typename Fn>
  void for_matches(const Edge& e, RowId brow, Fn&& fn) const {
    const auto& rows = rows_[e.free];
    auto accept = [&](std::uint32_t pos) {
      RowId frow = rows[pos];
      for (std::size_t i = 0; i < e.atoms.size(); ++i) {
        if (static_cast<int>(i) == e.key) continue;
        const auto& [bc, op, fc] = e.atoms[i];
        if (!compare(bc[brow], op, fc[frow])) return;
      }
      fn(pos);
    };
    if (e.key >= 0) {
      auto it = e.index.find(std::get<0>(e.atoms[e.key])[brow]);
      if (it == e.index.end()) return;
      for (auto pos : it->second) accept(pos);
    } else {
      for (std::uint32_t pos = 0; pos < rows.size(); ++pos) accept(pos);
    }
  }

  bool is_forest() {
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& a : p_.atoms) pairs.insert(std::minmax(a.lslot, a.rslot));
    for (const auto& [a, b] : pairs) {
      auto ra = find(a), rb = find(b);
      if (ra == rb) return false;
      parent[ra] = rb;
    }
    adjacency_.assign(n_, {});
    for (const auto& [a, b] : pairs) {
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    return true;
  }

  Counts solve_forest() {
    std::vector<bool> has_proj(n_, false);
    for (const auto& [slot, col] : p_.projection) has_proj[slot] = true;

    std::vector<bool> visited(n_, false);
    std::uint64_t dup = 1;
    std::uint64_t distinct = 1;
    for (std::size_t start = 0; start < n_; ++start) {
      if (visited[start]) continue;
      // Collect the component, then root it at its first projected slot.
      std::vector<std::size_t> comp{start};
      visited[start] = true;
      for (std::size_t i = 0; i < comp.size(); ++i)
        for (auto nb : adjacency_[comp[i]])
          if (!visited[nb]) {
            visited[nb] = true;
            comp.push_back(nb);
          }
      std::sort(comp.begin(), comp.end());
      std::size_t root = comp.front();
      for (auto s : comp)
        if (has_proj[s]) {
          root = s;
          break;
        }
      auto [cdup, cdistinct, projected] = solve_tree(root, has_proj);
      dup = checked_mul(dup, cdup);
      if (projected) distinct = checked_mul(distinct, cdistinct);
      if (dup == 0) return {};
    }
    return {dup, p_.want_distinct ? distinct : 0};
  }

  std::tuple<std::uint64_t, std::uint64_t, bool> solve_tree(std::size_t root, const std::vector<bool>& has_proj) {
    // BFS order with parent edges.
    std::vector<std::size_t> order{root};
    std::vector<long> parent(n_, -1);
    std::vector<std::vector<std::size_t>> children(n_);
    std::vector<bool> seen(n_, false);
    seen[root] = true;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto u = order[i];
      for (auto v : adjacency_[u]) {
        if (seen[v]) continue;
        seen[v] = true;
        parent[v] = static_cast<long>(u);
        children[u].push_back(v);
        order.push_back(v);
      }
    }
    edges_.clear();
    edges_.resize(n_);
    for (auto v : order)
      if (parent[v] >= 0) orient(edges_[v], static_cast<std::size_t>(parent[v]), v);

    std::vector<bool> needed(n_, false);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      needed[*it] = has_proj[*it];
      for (auto c : children[*it]) needed[*it] = needed[*it] || needed[c];
    }
    const bool want_distinct = p_.want_distinct && needed[root];

    // Bottom-up subtree multiplicities. weight[v][pos] counts join tuples of
    // v's subtree rooted at that row; partial[v][pos] only over children that
    // carry no projected columns.
    std::vector<std::vector<std::uint64_t>> weight(n_), partial(n_);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto v = *it;
      const auto& rows = rows_[v];
      weight[v].assign(rows.size(), 1);
      if (want_distinct && needed[v]) partial[v].assign(rows.size(), 1);
      for (auto c : children[v]) {
        const Edge& e = edges_[c];
        const auto& wc = weight[c];
        // Fast path: single equality atom, pre-aggregate child weight per key.
        std::unordered_map<Value, std::uint64_t> key_mass;
        const bool aggregated = e.key >= 0 && e.atoms.size() == 1;
        if (aggregated) {
          for (const auto& [key, positions] : e.index) {
            std::uint64_t m = 0;
            for (auto pos : positions) m = checked_add(m, wc[pos]);
            key_mass.emplace(key, m);
          }
        }
        for (std::size_t pos = 0; pos < rows.size(); ++pos) {
          if (weight[v][pos] == 0 && !(want_distinct && needed[v])) continue;
          std::uint64_t mass = 0;
          if (aggregated) {
            auto f = key_mass.find(std::get<0>(e.atoms[0])[rows[pos]]);
            if (f != key_mass.end()) mass = f->second;
          } else {
            for_matches(e, rows[pos], [&](std::uint32_t cpos) { mass = checked_add(mass, wc[cpos]); });
          }
          weight[v][pos] = checked_mul(weight[v][pos], mass);
          if (want_distinct && needed[v] && !needed[c]) partial[v][pos] = checked_mul(partial[v][pos], mass);
        }
      }
    }
    std::uint64_t dup = 0;
    for (auto w : weight[root]) dup = checked_add(dup, w);
    if (!want_distinct || dup == 0) return {dup, 0, needed[root]};

    // Enumerate the subtree spanning projected slots; other branches only
    // need to be non-empty, which partial[] encodes.
    std::vector<std::size_t> needed_order;
    for (auto v : order)
      if (needed[v]) needed_order.push_back(v);
    std::vector<std::pair<std::size_t, const Value*>> proj;
    for (const auto& pc : p_.projection)
      if (seen[pc.first]) proj.push_back(pc);

    TupleSet tuples;
    std::vector<RowId> bound(n_, 0);
    std::vector<Value> tuple(proj.size());
    std::uint64_t steps = 0;
    std::function<void(std::size_t)> bind = [&](std::size_t k) {
      count_step(steps);
      if (k == needed_order.size()) {
        for (std::size_t i = 0; i < proj.size(); ++i) tuple[i] = proj[i].second[bound[proj[i].first]];
        tuples.insert(tuple);
        return;
      }
      auto v = needed_order[k];
      auto take = [&](std::uint32_t pos) {
        if (partial[v][pos] == 0) return;
        bound[v] = rows_[v][pos];
        bind(k + 1);
      };
      if (k == 0) {
        for (std::uint32_t pos = 0; pos < rows_[v].size(); ++pos) take(pos);
      } else {
        const Edge& e = edges_[v];
        for_matches(e, bound[e.bound], take);
      }
    };
    bind(0);
    return {dup, tuples.size(), true};
  }

  // Backtracking over all slots for cyclic join graphs or residual predicates.
  Counts enumerate_all() {
    std::vector<std::size_t> order;
    std::vector<bool> placed(n_, false);
    std::vector<std::vector<std::size_t>> adj(n_);
    for (const auto& a : p_.atoms) {
      adj[a.lslot].push_back(a.rslot);
      adj[a.rslot].push_back(a.lslot);
    }
    for (std::size_t s = 0; s < n_; ++s) {
      if (placed[s]) continue;
      placed[s] = true;
      order.push_back(s);
      for (std::size_t i = order.size() - 1; i < order.size(); ++i)
        for (auto nb : adj[order[i]])
          if (!placed[nb]) {
            placed[nb] = true;
            order.push_back(nb);
          }
    }

    // For each position, the atoms against earlier slots, with an optional
    // hash index on one equality atom.
    struct Step {
      std::size_t slot;
      std::vector<std::tuple<std::size_t, const Value*, CmpOp, const Value*>> checks;  // bound slot
      int key = -1;
      std::unordered_map<Value, std::vector<RowId>> index;
    };
    std::vector<Step> steps;
    std::vector<bool> before(n_, false);
    for (auto s : order) {
      Step st;
      st.slot = s;
      for (const auto& a : p_.atoms) {
        if (a.rslot == s && before[a.lslot]) st.checks.emplace_back(a.lslot, a.lcol, a.op, a.rcol);
        else if (a.lslot == s && before[a.rslot]) st.checks.emplace_back(a.rslot, a.rcol, flip(a.op), a.lcol);
      }
      for (std::size_t i = 0; i < st.checks.size(); ++i)
        if (std::get<2>(st.checks[i]) == CmpOp::Equal) {
          st.key = static_cast<int>(i);
          break;
        }
      if (st.key >= 0) {
        const Value* col = std::get<3>(st.checks[st.key]);
        for (auto r : rows_[s]) st.index[col[r]].push_back(r);
      }
      before[s] = true;
      steps.push_back(std::move(st));
    }

    std::uint64_t dup = 0;
    TupleSet tuples;
    std::vector<RowId> bound(n_, 0);
    std::vector<Value> tuple(p_.projection.size());
    std::uint64_t visited = 0;
    std::function<void(std::size_t)> go = [&](std::size_t k) {
      count_step(visited);
      if (k == steps.size()) {
        for (const auto& r : p_.residual)
          if (!r.eval(bound)) return;
        dup = checked_add(dup, 1);
        if (p_.want_distinct) {
          for (std::size_t i = 0; i < tuple.size(); ++i)
            tuple[i] = p_.projection[i].second[bound[p_.projection[i].first]];
          tuples.insert(tuple);
        }
        return;
      }
      const Step& st = steps[k];
      auto attempt = [&](RowId r) {
        for (std::size_t i = 0; i < st.checks.size(); ++i) {
          if (static_cast<int>(i) == st.key) continue;
          const auto& [bs, bc, op, fc] = st.checks[i];
          if (!compare(bc[bound[bs]], op, fc[r])) return;
        }
        bound[st.slot] = r;
        go(k + 1);
      };
      if (st.key >= 0) {
        const auto& [bs, bc, op, fc] = st.checks[st.key];
        auto it = st.index.find(bc[bound[bs]]);
        if (it == st.index.end()) return;
        for (auto r : it->second) attempt(r);
      } else {
        for (auto r : rows_[st.slot]) attempt(r);
      }
    };
    go(0);
    std::uint64_t distinct = p_.want_distinct ? tuples.size() : 0;
    return {dup, distinct};
  }

  const Problem& p_;
  std::size_t n_;
  std::vector<std::vector<RowId>> rows_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Edge> edges_;
};

ExecResult finish(Counts c) {
  ExecResult r;
  r.card_dup = c.dup;
  r.card_distinct = c.distinct;
  r.uniqueness_rate = c.dup > 0 ? static_cast<double>(c.distinct) / static_cast<double>(c.dup) : 0.0;
  return r;
}

void add_projection(Problem& p, const Resolver& res, const std::vector<ColumnRef>& attrs) {
  for (const auto& a : attrs) p.projection.emplace_back(res.slot(a), res.data(a));
}

Problem build_conjunctive(const Database& db, const ConjunctiveQuery& q, const Resolver& res) {
  Problem p;
  p.tables = res.tables();
  p.filters.resize(p.tables.size());
  for (const auto& pred : q.preds) {
    auto c = res.compile(BoolExpr::pred(pred));
    p.filters[c.lslot].push_back(std::move(c));
  }
  for (const auto& j : q.joins) {
    auto ls = res.slot(j.left), rs = res.slot(j.right);
    if (ls == rs) {
      p.filters[ls].push_back(res.compile(BoolExpr::join(j)));
    } else {
      p.atoms.push_back({ls, res.data(j.left), j.op, rs, res.data(j.right)});
    }
  }
  add_projection(p, res, std::vector<ColumnRef>(q.attrs.begin(), q.attrs.end()));
  (void)db;
  return p;
}

void flatten_and(const BoolExpr& e, std::vector<const BoolExpr*>& out) {
  if (e.kind() == BoolExpr::Kind::And) {
    for (const auto& c : e.children()) flatten_and(c, out);
  } else if (e.kind() != BoolExpr::Kind::True) {
    out.push_back(&e);
  }
}

}  // namespace

ExecResult execute(const Database& db, const ConjunctiveQuery& q) {
  validate(q, db.schema());
  Resolver res(db, std::vector<std::string>(q.tables.begin(), q.tables.end()));
  return finish(Solver(build_conjunctive(db, q, res)).run());
}

std::uint64_t count(const Database& db, const ConjunctiveQuery& q) {
  validate(q, db.schema());
  Resolver res(db, std::vector<std::string>(q.tables.begin(), q.tables.end()));
  auto p = build_conjunctive(db, q, res);
  p.want_distinct = false;
  return Solver(p).run().dup;
}

ExecResult execute(const Database& db, const QueryAst& q) {
  if (!q.where.is_pure_conjunction())
    throw Error(ErrorKind::UnsupportedQuery, "execute requires a conjunctive query; decompose to DNF first");
  return execute(db, to_conjunctive(q, db.schema()));
}

ExecResult execute_general(const Database& db, const QueryAst& q) {
  validate(q, db.schema());
  Resolver res(db, q.from);
  Problem p;
  p.tables = res.tables();
  p.filters.resize(p.tables.size());
  std::vector<const BoolExpr*> conjuncts;
  flatten_and(q.where, conjuncts);
  for (const auto* c : conjuncts) {
    auto tables = c->tables();
    if (c->kind() == BoolExpr::Kind::Join && tables.size() == 2) {
      const auto& j = c->join_atom();
      p.atoms.push_back({res.slot(j.left), res.data(j.left), j.op, res.slot(j.right), res.data(j.right)});
    } else if (tables.size() == 1) {
      auto slot = res.slot(ColumnRef{*tables.begin(), ""});
      p.filters[slot].push_back(res.compile(*c));
    } else {
      p.residual.push_back(res.compile(*c));
    }
  }
  if (q.select.star) {
    for (const auto& t : q.from)
      for (const auto& col : db.table(t).def().columns) p.projection.emplace_back(res.slot({t, col.name}), res.data({t, col.name}));
  } else {
    add_projection(p, res, q.select.attrs);
  }
  return finish(Solver(p).run());
}

}  // namespace crdext
