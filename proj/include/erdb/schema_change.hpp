#pragma once

#include <string>
#include <variant>

#include "erdb/er_model.hpp"

namespace erdb {

/// One atomic schema change. Multi-step evolution is a sequence of these.
struct SchemaChange {
    struct MakeMultivalued {
        std::string entity;
        std::string attribute;
    };
    struct ChangeCardinality {
        std::string relationship;
        std::string role;
        Cardinality to = Cardinality::Many;
    };
    enum class HierarchyStrategy { SingleTable, Disjoint, ClassPerSubclass };
    struct SetHierarchyStrategy {
        std::string root;
        HierarchyStrategy strategy = HierarchyStrategy::ClassPerSubclass;
    };
    struct AddAttribute {
        std::string entity;
        AttributeDef attribute;
    };
    struct DropAttribute {
        std::string entity;
        std::string attribute;
    };

    std::variant<MakeMultivalued, ChangeCardinality, SetHierarchyStrategy, AddAttribute,
                 DropAttribute>
        change;

    std::string describe() const;
};

const char* hierarchy_strategy_name(SchemaChange::HierarchyStrategy s);
SchemaChange::HierarchyStrategy hierarchy_strategy_from_name(const std::string& name);

/// Applies one change and returns the new schema. The result always passes
/// validate_schema; invalid references or changes that would break an
/// invariant throw Error. Note set_hierarchy_strategy does not alter the
/// schema itself (strategies are mapping-level); it only checks the root has
/// subclasses, so callers can use a uniform change pipeline.
ErSchema apply_change(const ErSchema& schema, const SchemaChange& change);

} // namespace erdb
