#pragma once

#include <string>
#include <vector>

#include "erdb/er_model.hpp"
#include "erdb/erql/ast.hpp"
#include "erdb/mapping.hpp"
#include "erdb/plan.hpp"
#include "erdb/store.hpp"

namespace erdb {

/// Grouping keys implied by the select list: the top-level non-aggregate,
/// non-nested expressions, in select order (path texts). Empty when the
/// query has no aggregates and no nested constructors. Throws when a bare
/// multi-valued path is mixed with aggregates (wrap it in unnest(...)).
std::vector<std::string> infer_groupby(const erql::LogicalQuery& query);

/// Compiles a bound query into a physical plan over `mapping`. The plan is
/// deterministic: left-deep joins in FROM order, scans list exactly the
/// columns consumed.
PlanNode compile_query(const ErSchema& schema, const Mapping& mapping,
                       const erql::LogicalQuery& query);

/// Compiles a bound DML statement into a write set. Pure: the write set is
/// a function of the statement, schema, and mapping only (matching is by
/// key/foreign-key equality, so no store state is consulted).
WriteSet compile_crud(const ErSchema& schema, const Mapping& mapping,
                      const erql::CrudStatement& stmt);

/// Write set that erases one entity instance everywhere: its rows, array
/// and nested elements, incident relationship instances, and transitively
/// owned weak entities. `key` is the instance's key closure tuple. The
/// instance is addressed by its hierarchy root (or by the weak entity set
/// itself); actions for fragments the concrete instance does not occupy
/// match nothing and are harmless, so the result is identical across
/// mappings regardless of the instance's concrete class.
WriteSet purge_compile(const ErSchema& schema, const Mapping& mapping, const std::string& entity,
                       const std::vector<Value>& key);

/// Building blocks shared with bulk materialization: insert write sets for
/// one conformed entity document / relationship instance.
void build_entity_insert(const ErSchema& schema, const Mapping& mapping, const std::string& entity,
                         const Value& doc, WriteSet& out);
void build_relationship_insert(const ErSchema& schema, const Mapping& mapping,
                               const std::string& relationship,
                               const std::vector<std::vector<Value>>& role_keys,
                               const Value& descriptive, WriteSet& out);

/// Mapping-independent result shape of a bound query (output names and
/// logical types). Used by schema evolution to detect queries whose meaning
/// shifts under a change.
std::vector<PlanColumn> result_shape(const ErSchema& schema, const erql::LogicalQuery& query);

} // namespace erdb
