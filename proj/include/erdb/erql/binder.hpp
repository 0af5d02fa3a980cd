#pragma once

#include "erdb/er_model.hpp"
#include "erdb/erql/ast.hpp"

namespace erdb::erql {

/// Resolves all names in a query against the schema, annotating paths with
/// (entity, declaring entity, type), resolving relationship joins to concrete
/// (left binder, roles), and expanding `binder.*` attribute lists. Mutates in
/// place; idempotent (a bound AST is returned unchanged). Throws Error with
/// source locations on unknown names, ISA misuse, and type errors.
void bind(const ErSchema& schema, LogicalQuery& query);

/// Validates and normalizes a DML statement: document conformance against
/// the attribute tree (including owner key-closure fields for weak entities),
/// literal coercions (int→float, date shape), multi-valued arrays normalized
/// to sorted duplicate-free sets, key predicates checked to cover exactly the
/// target's key closure, and target restrictions (delete/purge address
/// hierarchy roots or weak entities, not subclasses).
void bind(const ErSchema& schema, CrudStatement& stmt);

/// Resolves one path against a binder's entity set. Shared by query binding
/// and the compiler. Returns the filled Bound annotation.
Path::Bound resolve_path(const ErSchema& schema, const std::string& entity, const Path& path);

} // namespace erdb::erql
