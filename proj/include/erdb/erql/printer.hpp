#pragma once

#include <string>

#include "erdb/erql/ast.hpp"

namespace erdb::erql {

/// Printers emit canonical statement text: lowercase keywords, minimal
/// spacing, fully parenthesized boolean structure. parse(print(x)) is
/// structurally identical to x for all three grammars.
std::string print_ddl(const DdlStatement& stmt);
std::string print_query(const LogicalQuery& query);
std::string print_dml(const CrudStatement& stmt);

std::string print_predicate(const Predicate& pred);
std::string print_path(const Path& path);
std::string print_literal(const Value& v);

} // namespace erdb::erql
