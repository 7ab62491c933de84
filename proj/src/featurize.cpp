#include "crdext/featurize.hpp"

#include <algorithm>

#include "crdext/error.hpp"

namespace crdext {

std::string to_string(FeatVariant v) { return v == FeatVariant::Revised ? "revised" : "standard"; }

FeatVariant feat_variant_from_string(const std::string& s) {
  if (s == "standard") return FeatVariant::Standard;
  if (s == "revised") return FeatVariant::Revised;
  throw Error(ErrorKind::Config, "unknown feature layout '" + s + "'");
}

namespace {

FeatLayout skeleton(const Schema& schema, FeatVariant variant) {
  FeatLayout layout;
  layout.variant = variant;
  for (const auto& t : schema.tables()) layout.tables.push_back(t.name);
  layout.columns = schema.all_columns();
  return layout;
}

}  // namespace

FeatLayout FeatLayout::from_schema(const Schema& schema, FeatVariant variant) {
  auto layout = skeleton(schema, variant);
  for (const auto& t : schema.tables())
    for (const auto& c : t.columns) {
      layout.col_min.push_back(c.declared_min);
      layout.col_max.push_back(c.declared_max);
    }
  return layout;
}

FeatLayout FeatLayout::from_database(const Database& db, FeatVariant variant) {
  auto layout = skeleton(db.schema(), variant);
  for (const auto& t : db.tables())
    for (std::size_t c = 0; c < t.num_columns(); ++c) {
      if (t.row_count() == 0) {
        layout.col_min.push_back(t.def().columns[c].declared_min);
        layout.col_max.push_back(t.def().columns[c].declared_max);
      } else {
        auto s = t.stats(c);
        layout.col_min.push_back(s.min);
        layout.col_max.push_back(s.max);
      }
    }
  return layout;
}

std::size_t FeatLayout::table_index(const std::string& table) const {
  auto it = std::find(tables.begin(), tables.end(), table);
  if (it == tables.end()) throw Error(ErrorKind::Featurization, "table " + table + " is not in the layout");
  return static_cast<std::size_t>(it - tables.begin());
}

std::size_t FeatLayout::column_index(const ColumnRef& col) const {
  // columns are table-major but not globally sorted, so scan
  auto it = std::find(columns.begin(), columns.end(), col);
  if (it == columns.end()) throw Error(ErrorKind::Featurization, "column " + col.qualified() + " is not in the layout");
  return static_cast<std::size_t>(it - columns.begin());
}

double FeatLayout::normalize(std::size_t column, Value v) const {
  const Value lo = col_min.at(column), hi = col_max.at(column);
  if (hi <= lo) return 0.0;
  double x = (static_cast<double>(v) - static_cast<double>(lo)) / (static_cast<double>(hi) - static_cast<double>(lo));
  return std::clamp(x, 0.0, 1.0);
}

bool FeatLayout::compatible_with(const Schema& schema) const {
  if (schema.num_tables() != nT()) return false;
  for (std::size_t i = 0; i < nT(); ++i)
    if (schema.tables()[i].name != tables[i]) return false;
  return schema.all_columns() == columns && col_min.size() == nC() && col_max.size() == nC();
}

FeatureSet featurize(const ConjunctiveQuery& q, const FeatLayout& layout) {
  auto idx = [](std::size_t i) { return static_cast<std::uint32_t>(i); };
  FeatureSet out;
  out.reserve(q.attrs.size() + q.tables.size() + q.joins.size() + q.preds.size());

  for (const auto& a : q.attrs) out.push_back({{{idx(layout.a_off() + layout.column_index(a)), 1.0}}});
  for (const auto& t : q.tables) out.push_back({{{idx(layout.t_off() + layout.table_index(t)), 1.0}}});
  for (const auto& j : q.joins) {
    if (!j.is_equality() && layout.variant != FeatVariant::Revised)
      throw Error(ErrorKind::Featurization, "inequality join needs the revised layout");
    SparseVec v;
    v.entries.push_back({idx(layout.j1_off() + layout.column_index(j.left)), 1.0});
    if (layout.variant == FeatVariant::Revised)
      v.entries.push_back({idx(layout.jo_off() + static_cast<std::size_t>(j.op)), 1.0});
    v.entries.push_back({idx(layout.j2_off() + layout.column_index(j.right)), 1.0});
    out.push_back(std::move(v));
  }
  for (const auto& p : q.preds) {
    auto c = layout.column_index(p.column);
    out.push_back({{{idx(layout.c_off() + c), 1.0},
                    {idx(layout.o_off() + static_cast<std::size_t>(p.op)), 1.0},
                    {idx(layout.v_off()), layout.normalize(c, p.value)}}});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> densify(const SparseVec& v, std::size_t length) {
  std::vector<double> d(length, 0.0);
  for (auto [i, x] : v.entries) d.at(i) = x;
  return d;
}

}  // namespace crdext
