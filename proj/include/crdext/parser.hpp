#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crdext/query.hpp"
#include "crdext/schema.hpp"

namespace crdext {

/// Grammar:
///   query  := SELECT [DISTINCT] ('*' | col {',' col}) FROM ident {',' ident}
///             [WHERE or] [';']
///   or     := and {OR and}
///   and    := not {AND not}
///   not    := NOT not | '(' or ')' | TRUE | col op (int | col)
///   op     := '<' | '=' | '>'
/// Keywords are case-insensitive. Throws SyntaxError.
QueryAst parse_unchecked(std::string_view text);

/// parse_unchecked followed by validate(); throws SyntaxError or Error(Validation).
QueryAst parse(std::string_view text, const Schema& schema);

/// Single-line SQL. parse(render(q)) == q for every valid q.
std::string render(const QueryAst& q);

/// One query per line; '#' starts a comment, blank lines are skipped.
std::vector<QueryAst> parse_workload(std::string_view text, const Schema& schema);
std::vector<QueryAst> load_workload(const std::string& path, const Schema& schema);
void save_workload(const std::vector<QueryAst>& queries, const std::string& path);

}  // namespace crdext
