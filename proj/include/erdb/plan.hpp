#pragma once

#include <string>
#include <vector>

#include "erdb/value.hpp"

namespace erdb {

/// Which rows of a fragment a scan or write addresses. Whole for ordinary
/// fragments; factorized fragments expose their two row-groups and the
/// adjacency edges separately.
enum class Section { Whole, Left, Right, Edges };

const char* section_name(Section s);

/// One column consumed by a scan: where it lives physically and the slot
/// name it is exposed under. Scans list exactly the columns the rest of the
/// plan consumes, so estimated_scan_width reflects real read width.
struct ScanColumn {
    Section section = Section::Whole;
    int index = 0; // into the fragment's (section's) column list
    std::string out_name;
};

/// A compiled predicate: the logical predicate tree with paths resolved to
/// column indices of the node it filters.
struct PlanPredicate {
    enum class Kind { Compare, In, And, Or, Not };
    enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

    struct Operand {
        int column = -1; // -1: literal
        Value literal;
        bool is_column() const { return column >= 0; }
    };

    Kind kind = Kind::Compare;
    CmpOp op = CmpOp::Eq;
    Operand lhs, rhs;
    std::vector<Value> in_list;
    std::vector<PlanPredicate> children;
};

/// How a projected output is assembled: either a single input column or a
/// composite packed from named sub-specs (used to reassemble composite
/// attributes stored as flattened columns).
struct PackSpec {
    int column = -1;
    std::vector<std::pair<std::string, PackSpec>> fields;
    bool is_column() const { return column >= 0; }
};

struct PlanColumn {
    std::string name;
    TypeDesc type;
};

/// Physical query plan: an operator tree whose leaves scan fragments.
/// Every node's output row shape is fixed at compile time (`columns`);
/// parents reference child columns by index.
struct PlanNode {
    enum class Op { Scan, Filter, Join, UnionAll, Unnest, Project, GroupNest, Aggregate };
    enum class JoinKind { Inner, LeftOuter };

    struct NestSpec {
        std::string name;
        std::vector<std::pair<int, std::string>> fields; // (child column, field name)
        // single unnamed field → array of scalars; several → array of composites
    };

    struct AggSpec {
        std::string fn; // count | sum | avg | min | max
        int column = -1;
        std::string name;
    };

    struct ProjectItem {
        std::string name;
        PackSpec source;
    };

    Op op = Op::Scan;
    std::vector<PlanNode> children;
    std::vector<PlanColumn> columns; // output shape

    // Scan
    std::string fragment;
    std::vector<ScanColumn> scan_columns;

    // Filter
    PlanPredicate predicate;

    // Join
    JoinKind join_kind = JoinKind::Inner;
    std::vector<std::pair<int, int>> join_keys; // (left column, right column)
    // left-join outputs where an unmatched right side means "no elements":
    // absent is replaced by an empty array (multi-valued attribute access)
    std::vector<int> coalesce_empty_arrays;

    // Unnest
    int unnest_column = -1;
    bool unnest_outer = false;

    // Project
    std::vector<ProjectItem> projections;

    // GroupNest / Aggregate
    std::vector<int> group_keys;
    std::vector<NestSpec> nests; // GroupNest
    std::vector<AggSpec> aggs;   // Aggregate; GroupNest may carry both
};

/// Column layout after unnesting `col` (an array column): the input columns,
/// then `<name>.#elem` holding the element, then one `<name>.<field path>`
/// column per leaf of a composite element (nested composites flattened with
/// dots; array-typed fields kept whole). Shared by the planner and the
/// executor so both agree on unnest output positions.
std::vector<PlanColumn> unnest_output_columns(const std::vector<PlanColumn>& in, int col);

/// Structural counters derived from a plan in one traversal.
struct PlanMetrics {
    size_t joins = 0;
    size_t unions = 0;
    size_t unnests = 0;
    size_t fragments_touched = 0;  // distinct fragments scanned
    size_t estimated_scan_width = 0; // columns consumed, summed over scans

    bool operator==(const PlanMetrics&) const = default;
};

PlanMetrics plan_metrics(const PlanNode& plan);

/// `key=value` lines, one per metric, in declaration order.
std::string plan_metrics_text(const PlanMetrics& m);

/// Stable indented text tree for golden-file tests.
std::string plan_to_string(const PlanNode& plan);

} // namespace erdb
