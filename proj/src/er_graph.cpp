#include "erdb/er_graph.hpp"

#include <functional>

namespace erdb {

std::string entity_node_id(const std::string& entity) { return "entity:" + entity; }

std::string relationship_node_id(const std::string& relationship) {
    return "relationship:" + relationship;
}

std::string attribute_node_id(const std::string& object, const std::vector<std::string>& path) {
    std::string id = "attr:" + object;
    for (const auto& p : path) {
        id += '.';
        id += p;
    }
    return id;
}

const ErNode& ErGraph::node(const std::string& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw Error("unknown graph node '" + id + "'");
    return it->second;
}

const std::vector<std::string>& ErGraph::neighbors(const std::string& id) const {
    node(id); // existence check
    static const std::vector<std::string> empty;
    auto it = adjacency_.find(id);
    return it == adjacency_.end() ? empty : it->second;
}

std::vector<std::string> ErGraph::attribute_nodes_of(const std::string& object) const {
    auto it = object_attrs_.find(object);
    if (it == object_attrs_.end()) throw Error("unknown graph object '" + object + "'");
    return it->second;
}

std::vector<std::string> ErGraph::coverable_nodes() const {
    std::vector<std::string> out;
    for (const auto& [id, n] : nodes)
        if (n.kind != ErNode::Kind::Entity) out.push_back(id);
    return out;
}

std::vector<std::string> ErGraph::entity_nodes() const {
    std::vector<std::string> out;
    for (const auto& [id, n] : nodes)
        if (n.kind == ErNode::Kind::Entity) out.push_back(id);
    return out;
}

namespace {

void add_edge(ErGraph& g, const std::string& a, const std::string& b, ErEdge::Kind kind) {
    g.edges.push_back({a, b, kind});
}

/// Adds nodes for an attribute and its nested children. A multi-valued
/// attribute whose element is a bare scalar contributes a single node (the
/// element domain is not an attribute); a composite element's children get
/// their own nodes directly under the multi-valued node.
void add_attribute_nodes(ErGraph& g, const std::string& object, const std::string& owner_id,
                         std::vector<std::string> path, const AttributeDef& attr,
                         std::vector<std::string>& collected) {
    path.push_back(attr.name);
    std::string id = attribute_node_id(object, path);
    g.nodes[id] = ErNode{id, ErNode::Kind::Attribute, owner_id, object, path};
    collected.push_back(id);
    add_edge(g, owner_id, id, ErEdge::Kind::HasAttribute);

    if (attr.is_composite()) {
        for (const auto& child : attr.children)
            add_attribute_nodes(g, object, id, path, child, collected);
    } else if (attr.is_multi() && attr.element_def().is_composite()) {
        for (const auto& child : attr.element_def().children)
            add_attribute_nodes(g, object, id, path, child, collected);
    }
}

} // namespace

ErGraph build_graph(const ErSchema& schema) {
    ErGraph g;

    for (const auto& [name, e] : schema.entities) {
        std::string id = entity_node_id(name);
        g.nodes[id] = ErNode{id, ErNode::Kind::Entity, "", name, {}};
        auto& attrs = g.object_attrs_[name];
        for (const auto& a : e.attributes) add_attribute_nodes(g, name, id, {}, a, attrs);
    }
    for (const auto& [name, e] : schema.entities) {
        if (e.superclass)
            add_edge(g, entity_node_id(name), entity_node_id(*e.superclass), ErEdge::Kind::Isa);
        if (e.weak_owner)
            add_edge(g, entity_node_id(name), entity_node_id(e.weak_owner->owner),
                     ErEdge::Kind::Identifies);
    }
    for (const auto& [name, r] : schema.relationships) {
        std::string id = relationship_node_id(name);
        g.nodes[id] = ErNode{id, ErNode::Kind::Relationship, "", name, {}};
        auto& attrs = g.object_attrs_[name];
        for (const auto& a : r.attributes) add_attribute_nodes(g, name, id, {}, a, attrs);
        for (const auto& p : r.participants)
            add_edge(g, id, entity_node_id(p.entity), ErEdge::Kind::Participates);
    }

    for (const auto& e : g.edges) {
        g.adjacency_[e.a].push_back(e.b);
        g.adjacency_[e.b].push_back(e.a);
    }
    return g;
}

bool is_connected(const ErGraph& graph, const std::set<std::string>& ids) {
    for (const auto& id : ids) graph.node(id); // validate
    if (ids.size() <= 1) return true;

    std::set<std::string> seen;
    std::vector<std::string> stack{*ids.begin()};
    seen.insert(*ids.begin());
    while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        for (const auto& next : graph.neighbors(cur)) {
            if (ids.count(next) && seen.insert(next).second) stack.push_back(next);
        }
    }
    return seen.size() == ids.size();
}

} // namespace erdb
