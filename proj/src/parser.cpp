#include "crdext/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "crdext/error.hpp"

namespace crdext {

namespace {

enum class Tok { Ident, Int, Comma, Dot, Star, LParen, RParen, Less, Equal, Greater, Semi, End };

struct Token {
  Tok kind;
  std::string_view text;
  SourceSpan span;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    auto single = [&](Tok k) {
      out.push_back({k, s.substr(i, 1), {i, i + 1}});
      ++i;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, s.substr(start, i - start), {start, i}});
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      ++i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      out.push_back({Tok::Int, s.substr(start, i - start), {start, i}});
    } else {
      switch (c) {
        case ',': single(Tok::Comma); break;
        case '.': single(Tok::Dot); break;
        case '*': single(Tok::Star); break;
        case '(': single(Tok::LParen); break;
        case ')': single(Tok::RParen); break;
        case '<': single(Tok::Less); break;
        case '=': single(Tok::Equal); break;
        case '>': single(Tok::Greater); break;
        case ';': single(Tok::Semi); break;
        default: throw SyntaxError(std::string("unexpected character '") + c + "'", {i, i + 1});
      }
    }
  }
  out.push_back({Tok::End, {}, {s.size(), s.size()}});
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_keyword(std::string_view w) {
  for (auto k : {"SELECT", "DISTINCT", "FROM", "WHERE", "AND", "OR", "NOT", "TRUE"})
    if (iequals(w, k)) return true;
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  QueryAst query() {
    QueryAst q;
    expect_keyword("SELECT");
    if (at_keyword("DISTINCT")) {
      ++pos_;
      q.select.distinct = true;
    }
    if (peek().kind == Tok::Star) {
      ++pos_;
      q.select.star = true;
    } else {
      q.select.attrs.push_back(column());
      while (peek().kind == Tok::Comma) {
        ++pos_;
        q.select.attrs.push_back(column());
      }
    }
    expect_keyword("FROM");
    q.from.push_back(identifier("table name"));
    while (peek().kind == Tok::Comma) {
      ++pos_;
      q.from.push_back(identifier("table name"));
    }
    if (at_keyword("WHERE")) {
      ++pos_;
      q.where = disjunction();
    }
    if (peek().kind == Tok::Semi) ++pos_;
    if (peek().kind != Tok::End) fail("unexpected trailing input");
    return q;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    const auto& t = peek();
    throw SyntaxError(msg + (t.kind == Tok::End ? " (end of input)" : " near '" + std::string(t.text) + "'"),
                      t.span);
  }

  bool at_keyword(const char* kw) const { return peek().kind == Tok::Ident && iequals(peek().text, kw); }

  void expect_keyword(const char* kw) {
    if (!at_keyword(kw)) fail(std::string("expected ") + kw);
    ++pos_;
  }

  std::string identifier(const char* what) {
    if (peek().kind != Tok::Ident || is_keyword(peek().text)) fail(std::string("expected ") + what);
    return std::string(toks_[pos_++].text);
  }

  ColumnRef column() {
    ColumnRef c;
    c.table = identifier("column reference");
    if (peek().kind != Tok::Dot) fail("expected '.' in qualified column");
    ++pos_;
    c.column = identifier("column name");
    return c;
  }

  BoolExpr disjunction() {
    std::vector<BoolExpr> kids{conjunction()};
    while (at_keyword("OR")) {
      ++pos_;
      kids.push_back(conjunction());
    }
    return kids.size() == 1 ? std::move(kids.front()) : BoolExpr::disj(std::move(kids));
  }

  BoolExpr conjunction() {
    std::vector<BoolExpr> kids{negation()};
    while (at_keyword("AND")) {
      ++pos_;
      kids.push_back(negation());
    }
    return kids.size() == 1 ? std::move(kids.front()) : BoolExpr::conj(std::move(kids));
  }

  BoolExpr negation() {
    if (at_keyword("NOT")) {
      ++pos_;
      return BoolExpr::negate(negation());
    }
    if (peek().kind == Tok::LParen) {
      ++pos_;
      auto inner = disjunction();
      if (peek().kind != Tok::RParen) fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (at_keyword("TRUE")) {
      ++pos_;
      return BoolExpr::truth();
    }
    return atom();
  }

  BoolExpr atom() {
    auto lhs = column();
    CmpOp op;
    switch (peek().kind) {
      case Tok::Less: op = CmpOp::Less; break;
      case Tok::Equal: op = CmpOp::Equal; break;
      case Tok::Greater: op = CmpOp::Greater; break;
      default: fail("expected comparison operator");
    }
    ++pos_;
    if (peek().kind == Tok::Int) {
      const auto& t = toks_[pos_++];
      Value v = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size())
        throw SyntaxError("integer out of range", t.span);
      return BoolExpr::pred({std::move(lhs), op, v});
    }
    auto rhs = column();
    return BoolExpr::join({std::move(lhs), op, std::move(rhs)});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Binding strength: OR < AND < NOT < atom.
int precedence(const BoolExpr& e) {
  switch (e.kind()) {
    case BoolExpr::Kind::Or: return 1;
    case BoolExpr::Kind::And: return 2;
    case BoolExpr::Kind::Not: return 3;
    default: return 4;
  }
}

void render_expr(const BoolExpr& e, std::ostringstream& out);

void render_child(const BoolExpr& child, int parent_prec, std::ostringstream& out) {
  // Parenthesize anything that would otherwise re-associate into the parent.
  bool parens = precedence(child) <= parent_prec && !child.is_atom() && child.kind() != BoolExpr::Kind::True;
  if (parens) out << '(';
  render_expr(child, out);
  if (parens) out << ')';
}

void render_expr(const BoolExpr& e, std::ostringstream& out) {
  switch (e.kind()) {
    case BoolExpr::Kind::True: out << "TRUE"; break;
    case BoolExpr::Kind::Pred:
      out << e.pred_atom().column.qualified() << ' ' << op_symbol(e.pred_atom().op) << ' ' << e.pred_atom().value;
      break;
    case BoolExpr::Kind::Join:
      out << e.join_atom().left.qualified() << ' ' << op_symbol(e.join_atom().op) << ' '
          << e.join_atom().right.qualified();
      break;
    case BoolExpr::Kind::Not:
      out << "NOT ";
      render_child(e.children().front(), 2, out);
      break;
    case BoolExpr::Kind::And:
    case BoolExpr::Kind::Or: {
      const char* sep = e.kind() == BoolExpr::Kind::And ? " AND " : " OR ";
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) out << sep;
        render_child(e.children()[i], precedence(e), out);
      }
      break;
    }
  }
}

}  // namespace

QueryAst parse_unchecked(std::string_view text) { return Parser(text).query(); }

QueryAst parse(std::string_view text, const Schema& schema) {
  auto q = parse_unchecked(text);
  validate(q, schema);
  return q;
}

std::string render(const QueryAst& q) {
  std::ostringstream out;
  out << "SELECT ";
  if (q.select.distinct) out << "DISTINCT ";
  if (q.select.star) {
    out << '*';
  } else {
    for (std::size_t i = 0; i < q.select.attrs.size(); ++i) out << (i ? ", " : "") << q.select.attrs[i].qualified();
  }
  out << " FROM ";
  for (std::size_t i = 0; i < q.from.size(); ++i) out << (i ? ", " : "") << q.from[i];
  if (q.where.kind() != BoolExpr::Kind::True) {
    out << " WHERE ";
    render_expr(q.where, out);
  }
  return out.str();
}

std::vector<QueryAst> parse_workload(std::string_view text, const Schema& schema) {
  std::vector<QueryAst> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    bool blank = std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (!blank) {
      try {
        out.push_back(parse(line, schema));
      } catch (const SyntaxError& e) {
        throw SyntaxError("line " + std::to_string(line_no) + ": " + e.what(),
                          {start + e.span().start, start + e.span().end});
      } catch (const Error& e) {
        throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

std::vector<QueryAst> load_workload(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str(), schema);
}

void save_workload(const std::vector<QueryAst>& queries, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  for (const auto& q : queries) out << render(q) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

}  // namespace crdext
