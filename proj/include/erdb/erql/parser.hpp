#pragma once

#include <string>
#include <vector>

#include "erdb/erql/ast.hpp"

namespace erdb::erql {

/// Parses a sequence of semicolon-separated DDL statements
/// (create entity / create relationship / alter …). Empty input → empty list.
std::vector<DdlStatement> parse_ddl(const std::string& text);

/// Parses one query. Trailing semicolon optional.
LogicalQuery parse_query(const std::string& text);

/// Parses one DML statement (insert/update/delete/purge).
CrudStatement parse_dml(const std::string& text);

/// Statement classification for mixed scripts: "ddl", "query", or "dml".
/// Looks at the first keyword only.
std::string classify_statement(const std::string& text);

/// Splits a script on top-level semicolons (string literals respected),
/// dropping empty statements.
std::vector<std::string> split_statements(const std::string& text);

} // namespace erdb::erql
