#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "erdb/er_model.hpp"

namespace erdb {

/// One node per entity set, relationship, and attribute (at every nesting
/// level). Ids are stable strings: "entity:Person", "relationship:advisor",
/// "attr:Person.Ph", "attr:Emp.addr.city".
struct ErNode {
    enum class Kind { Entity, Relationship, Attribute };

    std::string id;
    Kind kind = Kind::Entity;
    std::string owner;             // parent node id; empty for entities/relationships
    std::string object;            // owning schema object (entity or relationship name)
    std::vector<std::string> path; // attribute path within the object; empty otherwise
};

struct ErEdge {
    enum class Kind { Participates, Isa, HasAttribute, Identifies };

    std::string a;
    std::string b;
    Kind kind = Kind::Participates;
};

class ErGraph {
public:
    std::map<std::string, ErNode> nodes;
    std::vector<ErEdge> edges;

    bool has_node(const std::string& id) const { return nodes.count(id) > 0; }
    const ErNode& node(const std::string& id) const;
    const std::vector<std::string>& neighbors(const std::string& id) const;

    /// Attribute node ids belonging to `object` (entity or relationship),
    /// all nesting levels, in declaration order.
    std::vector<std::string> attribute_nodes_of(const std::string& object) const;

    /// All attribute and relationship node ids (the set a mapping must cover).
    std::vector<std::string> coverable_nodes() const;
    /// All entity node ids.
    std::vector<std::string> entity_nodes() const;

private:
    friend ErGraph build_graph(const ErSchema&);
    std::map<std::string, std::vector<std::string>> adjacency_;
    std::map<std::string, std::vector<std::string>> object_attrs_;
};

std::string entity_node_id(const std::string& entity);
std::string relationship_node_id(const std::string& relationship);
std::string attribute_node_id(const std::string& object, const std::vector<std::string>& path);

/// Builds the graph for a validated schema: participates edges between
/// relationships and their participants, isa edges along direct subclass
/// links, has_attribute edges from each object to its attributes and from
/// composite/multi-valued attributes to their children, and an identifies
/// edge between each weak entity and its owner.
ErGraph build_graph(const ErSchema& schema);

/// True iff the subgraph induced by `ids` is connected (singletons count).
/// Throws on unknown ids; an empty set is connected by convention.
bool is_connected(const ErGraph& graph, const std::set<std::string>& ids);

} // namespace erdb
