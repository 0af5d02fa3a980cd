#pragma once

#include <map>
#include <string>
#include <vector>

#include "erdb/mapping.hpp"
#include "erdb/plan.hpp"
#include "erdb/value.hpp"

namespace erdb {

using Row = std::vector<Value>;

/// Row container for one fragment, keyed by the canonical text of the key
/// column tuple (so iteration order is deterministic and key lookups are the
/// primary-key index). Ordinary fragments use `rows`; factorized fragments
/// use the two row-groups plus the adjacency edges.
struct FragmentStore {
    std::map<std::string, Row> rows;
    std::map<std::string, Row> left_rows, right_rows, edges;

    // derived at create_store: key column indices per section
    std::vector<int> key_idx, left_key_idx, right_key_idx, edge_key_idx;
    // edge columns holding the left/right row-group keys, in group-key order
    std::vector<int> edge_left_key_idx, edge_right_key_idx;

    const std::map<std::string, Row>& section(Section s) const;
    std::map<std::string, Row>& section(Section s);
    const std::vector<int>& section_key_idx(Section s) const;
};

struct Store {
    Mapping mapping;
    std::map<std::string, FragmentStore> fragments;

    size_t row_count() const; // all rows, row-group members, and edges
    bool operator==(const Store& other) const;
};

Store create_store(const Mapping& mapping);

/// One physical write. `match` selects the affected rows by column equality
/// (all matching rows for update/delete; inserts ignore it). Guards make
/// compiled cardinality/uniqueness checks explicit, validated against the
/// state the action sees.
struct WriteAction {
    enum class Kind {
        Insert,       // new row from `set` (all columns; key columns required)
        Update,       // overwrite `set` columns of matching rows
        Delete,       // remove matching rows
        ArrayAppend,  // add `element` to sorted array `column` (error if present)
        ArrayRemove,  // remove `element` from array `column` (error if missing)
        NestedInsert, // add composite `element` to array `column`, identity = element_key
        NestedUpdate, // in elements whose fields match `element`, overwrite `set` fields
        NestedDelete  // remove elements whose fields match `element` (no-op if none)
    };

    Kind kind = Kind::Insert;
    std::string fragment;
    Section section = Section::Whole;

    std::vector<std::pair<std::string, Value>> match;
    std::vector<std::pair<std::string, Value>> set;

    // validation guards, checked before this action mutates anything:
    std::vector<std::pair<std::string, Value>> guard_equal;  // matched rows must hold these values
    std::vector<std::string> guard_absent;                   // matched rows must hold absent here
    std::vector<std::pair<std::string, Value>> guard_no_other_row; // no non-matched row may hold these

    std::string column;
    Value element;
    std::vector<std::string> element_key; // NestedInsert: fields forming element identity
};

struct WriteSet {
    std::vector<WriteAction> actions;
};

/// Applies all actions in order, atomically: each action is validated
/// (key collisions, guards, missing references) as it is applied, and on
/// any Error the already-applied prefix is rolled back, leaving the store
/// exactly as it was before the call.
void apply_writes(Store& store, const WriteSet& ws);

/// Canonical text of the columns `idx` of a row (lookup key for row maps).
std::string row_key_text(const Row& row, const std::vector<int>& idx);

} // namespace erdb
