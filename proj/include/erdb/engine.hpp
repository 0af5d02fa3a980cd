#pragma once

#include <string>
#include <vector>

#include "erdb/dataset.hpp"
#include "erdb/plan.hpp"
#include "erdb/store.hpp"

namespace erdb {

struct ResultTable {
    std::vector<PlanColumn> columns;
    std::vector<Row> rows;
};

/// Runs a plan against a store. Deterministic: row order follows store
/// insertion order through the operator semantics.
ResultTable execute(const Store& store, const PlanNode& plan);

/// Canonical form for cross-mapping equivalence: arrays sorted element-wise,
/// rows sorted by full-tuple order. Two executions are equivalent iff their
/// normalized tables (and column names) are equal.
ResultTable normalize_result(const ResultTable& table);
std::string result_fingerprint(const ResultTable& table);

/// RFC 4180 CSV (nested values rendered in canonical text form), and a
/// line-per-row nested text form for hierarchical results.
std::string result_to_csv(const ResultTable& table);
std::string result_to_text(const ResultTable& table);

/// Bulk-loads a conformed dataset: equivalent to applying the insert write
/// set of every entity (owners before weak dependents) and then every
/// relationship instance.
Store materialize(const ErSchema& schema, const Mapping& mapping, const Dataset& dataset);

/// Inverse of materialize: reassembles the logical dataset from the store.
/// Multi-valued fragments re-collapse to sorted arrays, nested layouts
/// unfold, hierarchy variants re-derive concrete classes, factorized
/// fragments re-emit both entity sets and their relationship. Throws
/// "inconsistent duplicates" when two stored copies of one attribute
/// disagree (a write-path bug, not user error).
Dataset reconstruct_entities(const Store& store, const ErSchema& schema);

} // namespace erdb
