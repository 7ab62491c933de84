#include "crdext/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crdext/error.hpp"
#include "json.hpp"

namespace crdext {

using nlohmann::json;

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::UnsupportedQuery: return "UnsupportedQuery";
    case ErrorKind::EmptyColumn: return "EmptyColumn";
    case ErrorKind::NotConjunctive: return "NotConjunctive";
    case ErrorKind::MismatchedFromOrSelect: return "MismatchedFromOrSelect";
    case ErrorKind::DnfBlowup: return "DnfBlowup";
    case ErrorKind::UnsupportedNegation: return "UnsupportedNegation";
    case ErrorKind::UnsupportedJoin: return "UnsupportedJoin";
    case ErrorKind::Estimator: return "EstimatorError";
    case ErrorKind::Featurization: return "FeaturizationError";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Gen: return "GenError";
    case ErrorKind::Capability: return "CapabilityError";
    case ErrorKind::Overflow: return "Overflow";
  }
  return "Error";
}

ColumnRef ColumnRef::parse(std::string_view qualified) {
  auto dot = qualified.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == qualified.size())
    throw Error(ErrorKind::Validation, "not a qualified column: '" + std::string(qualified) + "'");
  return ColumnRef{std::string(qualified.substr(0, dot)), std::string(qualified.substr(dot + 1))};
}

const ColumnDef* TableDef::find_column(std::string_view column) const {
  for (const auto& c : columns)
    if (c.name == column) return &c;
  return nullptr;
}

std::optional<std::size_t> TableDef::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == column) return i;
  return std::nullopt;
}

Schema::Schema(std::vector<TableDef> tables, std::vector<JoinEdge> join_edges)
    : tables_(std::move(tables)), join_edges_(std::move(join_edges)) {
  std::set<std::string> names;
  for (const auto& t : tables_) {
    if (t.name.empty() || t.name.find('.') != std::string::npos)
      throw Error(ErrorKind::Validation, "bad table name '" + t.name + "'");
    if (!names.insert(t.name).second) throw Error(ErrorKind::Validation, "duplicate table '" + t.name + "'");
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (c.name.empty() || c.name.find('.') != std::string::npos)
        throw Error(ErrorKind::Validation, "bad column name '" + t.name + "." + c.name + "'");
      if (!cols.insert(c.name).second)
        throw Error(ErrorKind::Validation, "duplicate column '" + t.name + "." + c.name + "'");
      if (c.declared_min > c.declared_max)
        throw Error(ErrorKind::Validation, "empty declared range for '" + t.name + "." + c.name + "'");
    }
  }
  for (const auto& [a, b] : join_edges_) {
    if (!has_column(a)) throw Error(ErrorKind::Validation, "join edge references unknown column " + a.qualified());
    if (!has_column(b)) throw Error(ErrorKind::Validation, "join edge references unknown column " + b.qualified());
    if (a.table == b.table)
      throw Error(ErrorKind::Validation, "join edge within one table: " + a.qualified() + "=" + b.qualified());
  }
}

const TableDef* Schema::find_table(std::string_view name) const {
  for (const auto& t : tables_)
    if (t.name == name) return &t;
  return nullptr;
}

std::optional<std::size_t> Schema::table_index(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (tables_[i].name == name) return i;
  return std::nullopt;
}

bool Schema::has_column(const ColumnRef& col) const {
  const auto* t = find_table(col.table);
  return t != nullptr && t->find_column(col.column) != nullptr;
}

std::size_t Schema::num_columns() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.columns.size();
  return n;
}

std::vector<ColumnRef> Schema::all_columns() const {
  std::vector<ColumnRef> out;
  for (const auto& t : tables_)
    for (const auto& c : t.columns) out.push_back({t.name, c.name});
  return out;
}

std::optional<std::size_t> Schema::global_column_index(const ColumnRef& col) const {
  std::size_t offset = 0;
  for (const auto& t : tables_) {
    if (t.name == col.table) {
      auto idx = t.column_index(col.column);
      if (!idx) return std::nullopt;
      return offset + *idx;
    }
    offset += t.columns.size();
  }
  return std::nullopt;
}

Schema Schema::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("schema json: ") + e.what());
  }
  try {
    std::vector<TableDef> tables;
    for (const auto& jt : j.at("tables")) {
      TableDef t;
      t.name = jt.at("name").get<std::string>();
      for (const auto& jc : jt.at("columns")) {
        t.columns.push_back(
            {jc.at("name").get<std::string>(), jc.at("min").get<Value>(), jc.at("max").get<Value>()});
      }
      tables.push_back(std::move(t));
    }
    std::vector<JoinEdge> edges;
    if (j.contains("join_edges")) {
      for (const auto& je : j.at("join_edges")) {
        edges.emplace_back(ColumnRef::parse(je.at(0).get<std::string>()),
                           ColumnRef::parse(je.at(1).get<std::string>()));
      }
    }
    return Schema(std::move(tables), std::move(edges));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("schema json: ") + e.what());
  }
}

std::string Schema::to_json_text() const {
  json j;
  j["tables"] = json::array();
  for (const auto& t : tables_) {
    json jt;
    jt["name"] = t.name;
    jt["columns"] = json::array();
    for (const auto& c : t.columns)
      jt["columns"].push_back({{"name", c.name}, {"min", c.declared_min}, {"max", c.declared_max}});
    j["tables"].push_back(std::move(jt));
  }
  j["join_edges"] = json::array();
  for (const auto& [a, b] : join_edges_) j["join_edges"].push_back({a.qualified(), b.qualified()});
  return j.dump(2) + "\n";
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void Schema::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json_text();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace crdext
