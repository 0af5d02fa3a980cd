#include "erdb/schema_change.hpp"

#include <algorithm>

namespace erdb {

const char* hierarchy_strategy_name(SchemaChange::HierarchyStrategy s) {
    switch (s) {
    case SchemaChange::HierarchyStrategy::SingleTable: return "single_table";
    case SchemaChange::HierarchyStrategy::Disjoint: return "disjoint";
    case SchemaChange::HierarchyStrategy::ClassPerSubclass: return "class_per_subclass";
    }
    return "?";
}

SchemaChange::HierarchyStrategy hierarchy_strategy_from_name(const std::string& name) {
    if (name == "single_table") return SchemaChange::HierarchyStrategy::SingleTable;
    if (name == "disjoint") return SchemaChange::HierarchyStrategy::Disjoint;
    if (name == "class_per_subclass") return SchemaChange::HierarchyStrategy::ClassPerSubclass;
    throw Error("unknown hierarchy strategy '" + name + "'");
}

std::string SchemaChange::describe() const {
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, MakeMultivalued>)
                return "make_multivalued " + c.entity + "." + c.attribute;
            else if constexpr (std::is_same_v<T, ChangeCardinality>)
                return "change_cardinality " + c.relationship + "." + c.role + " to " +
                       (c.to == Cardinality::One ? "one" : "many");
            else if constexpr (std::is_same_v<T, SetHierarchyStrategy>)
                return "set_hierarchy_strategy " + c.root + " " +
                       hierarchy_strategy_name(c.strategy);
            else if constexpr (std::is_same_v<T, AddAttribute>)
                return "add_attribute " + c.entity + "." + c.attribute.name;
            else
                return "drop_attribute " + c.entity + "." + c.attribute;
        },
        change);
}

namespace {

void check_valid(const ErSchema& s, const std::string& context) {
    ValidationReport r = validate_schema(s);
    if (!r.ok()) throw Error(context + " produces an invalid schema:\n" + r.to_string());
}

} // namespace

ErSchema apply_change(const ErSchema& schema, const SchemaChange& change) {
    ErSchema out = schema;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, SchemaChange::MakeMultivalued>) {
                EntitySetDef& e = out.entities.count(c.entity)
                                      ? out.entities[c.entity]
                                      : throw Error("unknown entity set '" + c.entity + "'");
                auto it = std::find_if(e.attributes.begin(), e.attributes.end(),
                                       [&](const AttributeDef& a) { return a.name == c.attribute; });
                if (it == e.attributes.end())
                    throw Error("entity '" + c.entity + "' has no attribute '" + c.attribute +
                                "' (inherited attributes must be changed on the declaring class)");
                if (it->is_multi())
                    throw Error("attribute '" + c.attribute + "' is already multi-valued");
                if (it->is_key)
                    throw Error("key attribute '" + c.attribute + "' cannot become multi-valued");
                AttributeDef elem = *it;
                elem.name = "v";
                *it = AttributeDef::make_multi(c.attribute, std::move(elem));
            } else if constexpr (std::is_same_v<T, SchemaChange::ChangeCardinality>) {
                auto rit = out.relationships.find(c.relationship);
                if (rit == out.relationships.end())
                    throw Error("unknown relationship '" + c.relationship + "'");
                RelationshipDef& r = rit->second;
                bool found = false;
                for (auto& p : r.participants) {
                    if (p.role == c.role) {
                        p.cardinality = c.to;
                        found = true;
                    }
                }
                if (!found)
                    throw Error("relationship '" + c.relationship + "' has no role '" + c.role +
                                "'");
            } else if constexpr (std::is_same_v<T, SchemaChange::SetHierarchyStrategy>) {
                const EntitySetDef& root = out.entity(c.root);
                if (root.is_subclass())
                    throw Error("'" + c.root + "' is not a hierarchy root");
                if (out.direct_subclasses(c.root).empty())
                    throw Error("'" + c.root + "' has no subclasses");
            } else if constexpr (std::is_same_v<T, SchemaChange::AddAttribute>) {
                EntitySetDef& e = out.entities.count(c.entity)
                                      ? out.entities[c.entity]
                                      : throw Error("unknown entity set '" + c.entity + "'");
                if (c.attribute.is_key)
                    throw Error("cannot add a key attribute to an existing entity set");
                e.attributes.push_back(c.attribute);
            } else { // DropAttribute
                EntitySetDef& e = out.entities.count(c.entity)
                                      ? out.entities[c.entity]
                                      : throw Error("unknown entity set '" + c.entity + "'");
                auto it = std::find_if(e.attributes.begin(), e.attributes.end(),
                                       [&](const AttributeDef& a) { return a.name == c.attribute; });
                if (it == e.attributes.end())
                    throw Error("entity '" + c.entity + "' has no attribute '" + c.attribute + "'");
                if (it->is_key) throw Error("cannot drop key attribute '" + c.attribute + "'");
                e.attributes.erase(it);
            }
        },
        change.change);
    check_valid(out, change.describe());
    return out;
}

} // namespace erdb
