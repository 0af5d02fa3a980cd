#include "erdb/mapping.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "erdb/json_util.hpp"

namespace erdb {

const char* layout_name(Layout l) {
    switch (l) {
    case Layout::Flat: return "flat";
    case Layout::Nested: return "nested";
    case Layout::Factorized: return "factorized";
    }
    return "?";
}

Layout layout_from_name(const std::string& name) {
    if (name == "flat") return Layout::Flat;
    if (name == "nested") return Layout::Nested;
    if (name == "factorized") return Layout::Factorized;
    throw Error("unknown layout '" + name + "'");
}

namespace {

const char* kind_name(Fragment::Kind k) {
    switch (k) {
    case Fragment::Kind::EntityRows: return "entity_rows";
    case Fragment::Kind::MultiValueRows: return "multivalue_rows";
    case Fragment::Kind::RelationshipRows: return "relationship_rows";
    case Fragment::Kind::FactorizedRows: return "factorized_rows";
    }
    return "?";
}

Fragment::Kind kind_from_name(const std::string& name) {
    if (name == "entity_rows") return Fragment::Kind::EntityRows;
    if (name == "multivalue_rows") return Fragment::Kind::MultiValueRows;
    if (name == "relationship_rows") return Fragment::Kind::RelationshipRows;
    if (name == "factorized_rows") return Fragment::Kind::FactorizedRows;
    throw Error("unknown fragment kind '" + name + "'");
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string attr_column_name(const std::string& entity, const std::vector<std::string>& path) {
    std::string out = entity;
    for (const auto& p : path) {
        out += '_';
        out += p;
    }
    return out;
}

ScalarType key_part_type(const ErSchema& schema, const KeyPart& part) {
    const AttributeDef* a = schema.entity(part.entity).find_attribute(part.attribute);
    if (!a) throw Error("internal: key closure names a missing attribute");
    return a->scalar;
}

/// Key-closure columns of `anchor`, named `<declaring entity>_<attr>`.
std::vector<Column> closure_columns(const ErSchema& schema, const std::string& anchor, bool key) {
    std::vector<Column> out;
    for (const auto& part : key_closure(schema, anchor))
        out.push_back({part.entity + "_" + part.attribute,
                       TypeDesc::make_scalar(key_part_type(schema, part)),
                       attribute_node_id(part.entity, {part.attribute}), key});
    return out;
}

/// Foreign-key columns referencing `entity`, named `<role>_<attr>`.
std::vector<Column> fk_columns(const ErSchema& schema, const std::string& role,
                               const std::string& entity, const std::string& rel_node, bool key) {
    std::vector<Column> out;
    for (const auto& part : key_closure(schema, entity))
        out.push_back({role + "_" + part.attribute,
                       TypeDesc::make_scalar(key_part_type(schema, part)), rel_node, key});
    return out;
}

/// Nodes a fragment needs so its key-closure columns are connected to the
/// rest of its subgraph: the anchor's inheritance chain, the ownership path
/// for weak entities (including the identifying relationships that link it),
/// and the closure attribute nodes themselves.
void add_closure_support_nodes(const ErSchema& schema, const std::string& anchor,
                               std::set<std::string>& nodes) {
    std::string cls = anchor;
    while (true) {
        for (const auto& link : schema.chain_of(cls)) nodes.insert(entity_node_id(link));
        const auto& owner = schema.entity(cls).weak_owner;
        if (!owner) break;
        nodes.insert(relationship_node_id(owner->identifying_relationship));
        cls = owner->owner;
    }
    for (const auto& part : key_closure(schema, anchor))
        nodes.insert(attribute_node_id(part.entity, {part.attribute}));
}

/// Classes whose attribute nodes legitimately belong to a fragment anchored
/// at `anchor`: its inheritance chain plus the chains along the ownership
/// path.
std::set<std::string> closure_support_classes(const ErSchema& schema, const std::string& anchor) {
    std::set<std::string> out;
    std::string cls = anchor;
    while (true) {
        for (const auto& link : schema.chain_of(cls)) out.insert(link);
        const auto& owner = schema.entity(cls).weak_owner;
        if (!owner) break;
        cls = owner->owner;
    }
    return out;
}

/// Adds the attribute node, plus every descendant node, to `nodes`.
void add_attr_subtree_nodes(const std::string& entity, const AttributeDef& attr,
                            std::vector<std::string>& path, std::set<std::string>& nodes) {
    path.push_back(attr.name);
    nodes.insert(attribute_node_id(entity, path));
    if (attr.is_composite())
        for (const auto& c : attr.children) add_attr_subtree_nodes(entity, c, path, nodes);
    else if (attr.is_multi() && attr.element_def().is_composite())
        for (const auto& c : attr.element_def().children)
            add_attr_subtree_nodes(entity, c, path, nodes);
    path.pop_back();
}

/// Adds nodes for the parts of an attribute tree this fragment stores:
/// scalars and composites always, multi-valued subtrees only when the
/// attribute is kept in place as an array column (else it lives in its own
/// exploded fragment).
void add_stored_attr_nodes(const std::string& entity, const AttributeDef& attr,
                           std::vector<std::string>& path, const std::set<std::string>& array_mv,
                           std::set<std::string>& nodes) {
    path.push_back(attr.name);
    std::string id = attribute_node_id(entity, path);
    if (attr.is_multi()) {
        if (array_mv.count(id)) {
            path.pop_back();
            add_attr_subtree_nodes(entity, attr, path, nodes);
            return;
        }
    } else {
        nodes.insert(id);
        if (attr.is_composite())
            for (const auto& c : attr.children) add_stored_attr_nodes(entity, c, path, array_mv, nodes);
    }
    path.pop_back();
}

bool is_closure_part(const ErSchema& schema, const std::string& anchor, const std::string& entity,
                     const std::string& attr) {
    for (const auto& part : key_closure(schema, anchor))
        if (part.entity == entity && part.attribute == attr) return true;
    return false;
}

/// Column emission for one attribute tree, driven by node membership:
/// a column appears iff its provenance node is in the fragment's node set.
void emit_attr_columns(const Fragment& frag, const std::string& entity, const AttributeDef& attr,
                       std::vector<std::string>& path, bool as_key, std::vector<Column>& out) {
    path.push_back(attr.name);
    std::string id = attribute_node_id(entity, path);
    if (attr.is_multi()) {
        bool as_array = std::find(frag.nesting.array_attrs.begin(), frag.nesting.array_attrs.end(),
                                  id) != frag.nesting.array_attrs.end();
        if (frag.nodes.count(id) && as_array)
            out.push_back({attr_column_name(entity, path), attr.type(), id, as_key});
    } else if (attr.is_composite()) {
        for (const auto& c : attr.children) emit_attr_columns(frag, entity, c, path, as_key, out);
    } else if (frag.nodes.count(id)) {
        out.push_back({attr_column_name(entity, path), TypeDesc::make_scalar(attr.scalar), id,
                       as_key});
    }
    path.pop_back();
}

const AttributeDef* find_attr_by_path(const ErSchema& schema, const std::string& entity,
                                      const std::vector<std::string>& path) {
    if (path.empty()) return nullptr;
    const AttributeDef* a = schema.entity(entity).find_attribute(path[0]);
    for (size_t i = 1; a && i < path.size(); ++i) {
        const std::vector<AttributeDef>* children = nullptr;
        if (a->is_composite()) children = &a->children;
        else if (a->is_multi() && a->element_def().is_composite()) children = &a->element_def().children;
        a = nullptr;
        if (children)
            for (const auto& c : *children)
                if (c.name == path[i]) a = &c;
    }
    return a;
}

struct ParsedAttrNode {
    std::string object;
    std::vector<std::string> path;
};

ParsedAttrNode parse_attr_node(const std::string& id) {
    if (id.rfind("attr:", 0) != 0) throw Error("'" + id + "' is not an attribute node id");
    std::string rest = id.substr(5);
    ParsedAttrNode out;
    size_t pos = 0;
    bool first = true;
    while (pos <= rest.size()) {
        size_t dot = rest.find('.', pos);
        std::string piece = rest.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (first) out.object = piece;
        else out.path.push_back(piece);
        first = false;
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return out;
}

/// Exploded element columns of a multi-valued attribute: the element as if
/// it were single-valued (composites flattened into leaf paths, nested
/// multi-valued attributes forced to arrays). All carry key=true because
/// set semantics make the whole element part of the row identity.
void emit_element_columns(const std::string& entity, const AttributeDef& elem,
                          std::vector<std::string>& path, std::vector<Column>& out) {
    if (elem.is_composite()) {
        for (const auto& c : elem.children) {
            path.push_back(c.name);
            if (c.is_scalar())
                out.push_back({attr_column_name(entity, path),
                               TypeDesc::make_scalar(c.scalar),
                               attribute_node_id(entity, path), true});
            else if (c.is_multi())
                out.push_back({attr_column_name(entity, path), c.type(),
                               attribute_node_id(entity, path), true});
            else
                emit_element_columns(entity, c, path, out);
            path.pop_back();
        }
    } else {
        // scalar element: one column named after the multi-valued attribute
        out.push_back({attr_column_name(entity, path), TypeDesc::make_scalar(elem.scalar),
                       attribute_node_id(entity, path), true});
    }
}

/// Composite element type of an embedded weak entity: its own attributes
/// (discriminators first by declaration order), multi-valued ones as arrays.
TypeDesc embedded_element_type(const ErSchema& schema, const std::string& weak) {
    std::vector<std::pair<std::string, TypeDesc>> fields;
    for (const auto& a : schema.entity(weak).attributes) fields.emplace_back(a.name, a.type());
    return TypeDesc::make_composite(std::move(fields));
}

std::vector<std::string> subtree_classes(const ErSchema& schema, const std::string& entity) {
    return schema.subtree_of(entity);
}

} // namespace

// ---- Fragment / Mapping accessors ----

std::vector<std::string> Fragment::key_column_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns)
        if (c.key) out.push_back(c.name);
    return out;
}

const Column* Fragment::find_column(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return &c;
    for (const auto* group : {&left_columns, &right_columns, &edge_columns})
        for (const auto& c : *group)
            if (c.name == name) return &c;
    return nullptr;
}

const Fragment* Mapping::find_fragment(const std::string& name) const {
    for (const auto& f : fragments)
        if (f.name == name) return &f;
    return nullptr;
}

std::string ValidityReport::to_string() const {
    static const char* rule_names[] = {"coverage", "connectivity", "reversibility", "crud"};
    std::string out;
    for (const auto& v : violations) {
        out += rule_names[static_cast<int>(v.rule)];
        out += ": ";
        out += v.detail;
        out += '\n';
    }
    for (const auto& w : warnings) {
        out += "warning: ";
        out += w;
        out += '\n';
    }
    return out;
}

// ---- column derivation ----

namespace {

/// Columns of an entity row-group: closure, discriminator, the hosted
/// classes' attributes in hierarchy order, folded foreign keys, embedded
/// weak-entity arrays.
std::vector<Column> derive_entity_columns(const ErSchema& schema, const Fragment& frag) {
    std::vector<Column> out = closure_columns(schema, frag.anchor, true);
    if (frag.type_column)
        out.push_back({"type", TypeDesc::make_scalar(ScalarType::Text), "", false});

    const std::string family_root = schema.root_of(frag.anchor).name;
    for (const auto& cls : subtree_classes(schema, family_root)) {
        if (!frag.nodes.count(entity_node_id(cls))) continue;
        for (const auto& a : schema.entity(cls).attributes) {
            if (a.is_key && is_closure_part(schema, frag.anchor, cls, a.name)) continue;
            std::vector<std::string> path;
            emit_attr_columns(frag, cls, a, path, false, out);
        }
    }
    for (const auto& fk : frag.folded_fks) {
        const RelationshipDef& rel = schema.relationship(fk.relationship);
        for (const auto& p : rel.participants)
            if (p.role == fk.fk_role) {
                auto cols = fk_columns(schema, p.role, p.entity,
                                       relationship_node_id(fk.relationship), false);
                out.insert(out.end(), cols.begin(), cols.end());
            }
    }
    for (const auto& emb : frag.nesting.embedded)
        out.push_back({emb.column, TypeDesc::make_array(embedded_element_type(schema, emb.entity)),
                       entity_node_id(emb.entity), false});
    return out;
}

std::vector<Column> derive_multivalue_columns(const ErSchema& schema, const Fragment& frag) {
    ParsedAttrNode parsed = parse_attr_node(frag.mv_node);
    const AttributeDef* attr = find_attr_by_path(schema, parsed.object, parsed.path);
    if (!attr || !attr->is_multi())
        throw Error("fragment '" + frag.name + "': '" + frag.mv_node +
                    "' is not a multi-valued attribute node");
    std::vector<Column> out = closure_columns(schema, frag.anchor, true);
    std::vector<std::string> path = parsed.path;
    emit_element_columns(parsed.object, attr->element_def(), path, out);
    return out;
}

std::vector<Column> derive_relationship_columns(const ErSchema& schema, const Fragment& frag) {
    const RelationshipDef& rel = schema.relationship(frag.relationship);
    std::vector<Column> out;
    for (const auto& p : rel.participants) {
        auto cols = fk_columns(schema, p.role, p.entity, relationship_node_id(rel.name), true);
        out.insert(out.end(), cols.begin(), cols.end());
    }
    for (const auto& a : rel.attributes) {
        // descriptive attributes; multi-valued ones are stored as arrays
        std::vector<std::string> path{a.name};
        if (a.is_scalar())
            out.push_back({attr_column_name(rel.name, path), TypeDesc::make_scalar(a.scalar),
                           attribute_node_id(rel.name, path), false});
        else
            out.push_back({attr_column_name(rel.name, path), a.type(),
                           attribute_node_id(rel.name, path), false});
    }
    return out;
}

Fragment entity_group_proto(const ErSchema& schema, const Fragment& fact, const std::string& cls);

std::vector<Column> derive_factorized_group(const ErSchema& schema, const Fragment& frag,
                                            const std::string& cls) {
    Fragment proto = entity_group_proto(schema, frag, cls);
    return derive_entity_columns(schema, proto);
}

/// Builds a pseudo entity fragment describing one row-group of a factorized
/// fragment, reusing the shared column derivation.
Fragment entity_group_proto(const ErSchema& schema, const Fragment& fact, const std::string& cls) {
    Fragment proto;
    proto.name = fact.name;
    proto.kind = Fragment::Kind::EntityRows;
    proto.anchor = cls;
    proto.nesting.array_attrs = fact.nesting.array_attrs;
    proto.type_column = !schema.entity(cls).superclass && schema.subtree_of(cls).size() > 1;
    // route folded fks to the side whose rows host them
    const RelationshipDef& rel = schema.relationship(fact.factorized.relationship);
    for (const auto& fk : fact.folded_fks)
        for (const auto& p : rel.participants)
            if (p.role == fk.host_role && p.entity == cls) proto.folded_fks.push_back(fk);
    // limit attribute emission to this group: keep only nodes of classes on
    // the anchor's own chain/ownership path, masking out the other side (and
    // any same-family siblings dragged in as foreign-key closure support)
    std::set<std::string> allowed = closure_support_classes(schema, cls);
    for (const auto& id : fact.nodes) {
        if (id.rfind("entity:", 0) == 0) {
            if (!allowed.count(id.substr(7))) continue;
        } else if (id.rfind("attr:", 0) == 0) {
            ParsedAttrNode parsed = parse_attr_node(id);
            if (schema.has_entity(parsed.object) && !allowed.count(parsed.object)) continue;
        }
        proto.nodes.insert(id);
    }
    return proto;
}

std::vector<Column> derive_edge_columns(const ErSchema& schema, const Fragment& frag) {
    const RelationshipDef& rel = schema.relationship(frag.factorized.relationship);
    std::vector<Column> out;
    for (const auto& p : rel.participants) {
        auto cols = fk_columns(schema, p.role, p.entity, relationship_node_id(rel.name), true);
        out.insert(out.end(), cols.begin(), cols.end());
    }
    for (const auto& a : rel.attributes) {
        std::vector<std::string> path{a.name};
        out.push_back({attr_column_name(rel.name, path), a.type(),
                       attribute_node_id(rel.name, path), false});
    }
    return out;
}

} // namespace

void derive_columns(const ErSchema& schema, Mapping& mapping) {
    for (auto& frag : mapping.fragments) {
        frag.columns.clear();
        frag.left_columns.clear();
        frag.right_columns.clear();
        frag.edge_columns.clear();
        switch (frag.kind) {
        case Fragment::Kind::EntityRows:
            frag.columns = derive_entity_columns(schema, frag);
            break;
        case Fragment::Kind::MultiValueRows:
            frag.columns = derive_multivalue_columns(schema, frag);
            break;
        case Fragment::Kind::RelationshipRows:
            frag.columns = derive_relationship_columns(schema, frag);
            break;
        case Fragment::Kind::FactorizedRows:
            frag.left_columns = derive_factorized_group(schema, frag, frag.factorized.left);
            frag.right_columns = derive_factorized_group(schema, frag, frag.factorized.right);
            frag.edge_columns = derive_edge_columns(schema, frag);
            frag.columns = frag.left_columns;
            frag.columns.insert(frag.columns.end(), frag.right_columns.begin(),
                                frag.right_columns.end());
            frag.columns.insert(frag.columns.end(), frag.edge_columns.begin(),
                                frag.edge_columns.end());
            break;
        }
        std::set<std::string> seen;
        for (const auto& c : frag.columns)
            if (frag.kind != Fragment::Kind::FactorizedRows && !seen.insert(c.name).second)
                throw Error("fragment '" + frag.name + "': duplicate column '" + c.name + "'");
    }
}

// ---- the design builder ----

namespace {

/// One point in the physical-design lattice. Every generator builds one of
/// these and hands it to build_design.
struct DesignConfig {
    std::map<std::string, HierarchyStrategy> hierarchy; // family root -> strategy
    std::set<std::string> array_mv;                     // mv attr nodes kept as array columns
    std::set<std::string> folded_weak;                  // weak entities embedded in owners
    std::set<std::string> factorized;                   // m2m relationships factorized
};

bool is_identifying(const ErSchema& schema, const std::string& rel) {
    for (const auto& [name, e] : schema.entities)
        if (e.weak_owner && e.weak_owner->identifying_relationship == rel) return true;
    return false;
}

/// The "one" side whose key gets folded, or -1 for many-to-many.
int fold_source_index(const RelationshipDef& rel) {
    for (size_t i = 0; i < rel.participants.size(); ++i)
        if (rel.participants[i].cardinality == Cardinality::One) return static_cast<int>(i);
    return -1;
}

HierarchyStrategy strategy_of(const DesignConfig& cfg, const std::string& root) {
    auto it = cfg.hierarchy.find(root);
    return it == cfg.hierarchy.end() ? HierarchyStrategy::ClassPerSubclass : it->second;
}

/// Collects every multi-valued attribute node of an entity's own attributes.
void collect_mv_nodes(const std::string& entity, const AttributeDef& attr,
                      std::vector<std::string>& path, std::vector<std::string>& out) {
    path.push_back(attr.name);
    if (attr.is_multi()) out.push_back(attribute_node_id(entity, path));
    else if (attr.is_composite())
        for (const auto& c : attr.children) collect_mv_nodes(entity, c, path, out);
    path.pop_back();
}

std::vector<std::string> mv_nodes_of(const ErSchema& schema, const std::string& entity) {
    std::vector<std::string> out;
    std::vector<std::string> path;
    for (const auto& a : schema.entity(entity).attributes) collect_mv_nodes(entity, a, path, out);
    return out;
}

struct DesignContext {
    const ErSchema& schema;
    const DesignConfig& cfg;
    Mapping out;
    std::set<std::string> used_names;
    // entity class -> index of the fragment (or factorized group) hosting its rows/attrs
    std::map<std::string, size_t> attr_host;
    std::map<std::string, std::string> consumed_by; // class/weak -> factorized rel

    std::string claim_name(std::string base) {
        std::string name = base;
        int n = 2;
        while (!used_names.insert(name).second) name = base + "_" + std::to_string(n++);
        return name;
    }
};

void fail(const std::string& msg) { throw Error(msg); }

/// Validates config feasibility; throws with a generator diagnostic.
void check_config(const ErSchema& schema, const DesignConfig& cfg) {
    for (const auto& [root, strat] : cfg.hierarchy) {
        if (!schema.has_entity(root)) fail("unknown hierarchy root '" + root + "'");
        if (schema.entity(root).superclass) fail("'" + root + "' is not a hierarchy root");
        (void)strat;
    }
    for (const auto& rel : cfg.factorized) {
        if (!schema.has_relationship(rel)) fail("unknown relationship '" + rel + "'");
        const RelationshipDef& r = schema.relationship(rel);
        if (!r.is_binary()) fail("only binary relationships can be factorized");
        if (is_identifying(schema, rel))
            fail("identifying relationship '" + rel + "' cannot be factorized");
        if (fold_source_index(r) >= 0)
            fail("'" + rel + "' folds into its many side; only many-to-many relationships "
                 "can be factorized");
        if (r.participants[0].entity == r.participants[1].entity)
            fail("self-relationship '" + rel + "' cannot be factorized");
        for (const auto& p : r.participants) {
            const std::string root = schema.root_of(p.entity).name;
            if (strategy_of(cfg, root) != HierarchyStrategy::ClassPerSubclass &&
                schema.subtree_of(root).size() > 1)
                fail("cannot factorize '" + rel + "': participant '" + p.entity +
                     "' lives in a folded hierarchy");
            if (cfg.folded_weak.count(p.entity))
                fail("cannot factorize '" + rel + "': participant '" + p.entity +
                     "' is folded into its owner");
        }
    }
    std::map<std::string, std::string> consumed;
    for (const auto& rel : cfg.factorized)
        for (const auto& p : schema.relationship(rel).participants)
            if (auto [it, fresh] = consumed.emplace(p.entity, rel); !fresh)
                fail("'" + p.entity + "' cannot join two factorized relationships ('" +
                     it->second + "' and '" + rel + "')");
    for (const auto& weak : cfg.folded_weak) {
        if (!schema.has_entity(weak) || !schema.entity(weak).is_weak())
            fail("'" + weak + "' is not a weak entity set");
        const std::string owner = schema.entity(weak).weak_owner->owner;
        if (cfg.folded_weak.count(owner))
            fail("cannot fold '" + weak + "': its owner '" + owner + "' is itself folded");
        if (consumed.count(owner))
            fail("cannot fold '" + weak + "': its owner '" + owner +
                 "' lives in a factorized fragment");
        const std::string owner_root = schema.root_of(owner).name;
        if (strategy_of(cfg, owner_root) == HierarchyStrategy::Disjoint &&
            schema.subtree_of(owner_root).size() > 1)
            fail("cannot fold '" + weak + "' into a disjoint-partitioned hierarchy");
        for (const auto& [rname, r] : schema.relationships) {
            if (is_identifying(schema, rname)) continue;
            int src = fold_source_index(r);
            if (src < 0) continue;
            const auto& host = r.participants[src == 0 ? 1 : 0];
            if (host.entity == weak)
                fail("cannot fold '" + weak + "': it holds the foreign key of '" + rname + "'");
        }
    }
}

/// Shared skeleton of an entity-rows fragment.
Fragment make_entity_fragment(const ErSchema& schema, const DesignConfig& cfg, std::string name,
                              const std::string& anchor,
                              const std::vector<std::string>& attr_classes, bool exact,
                              bool type_col) {
    Fragment f;
    f.name = std::move(name);
    f.kind = Fragment::Kind::EntityRows;
    f.anchor = anchor;
    f.exact = exact;
    f.type_column = type_col;
    add_closure_support_nodes(schema, anchor, f.nodes);
    for (const auto& cls : attr_classes) {
        f.nodes.insert(entity_node_id(cls));
        std::vector<std::string> path;
        for (const auto& a : schema.entity(cls).attributes)
            add_stored_attr_nodes(cls, a, path, cfg.array_mv, f.nodes);
        for (const auto& mv : mv_nodes_of(schema, cls))
            if (cfg.array_mv.count(mv)) f.nesting.array_attrs.push_back(mv);
    }
    if (!f.nesting.array_attrs.empty()) f.layout = Layout::Nested;
    return f;
}

void add_folded_fk(const ErSchema& schema, Fragment& f, const std::string& rel,
                   const std::string& fk_role, const std::string& host_role) {
    f.folded_fks.push_back({rel, fk_role, host_role});
    f.nodes.insert(relationship_node_id(rel));
    // the fk value's provenance path: the one side's entity + closure
    for (const auto& p : schema.relationship(rel).participants)
        if (p.role == fk_role) add_closure_support_nodes(schema, p.entity, f.nodes);
}

void embed_weak(const ErSchema& schema, Fragment& host, const std::string& weak) {
    const EntitySetDef& w = schema.entity(weak);
    host.nesting.embedded.push_back(
        {lower(weak), weak, w.weak_owner->identifying_relationship});
    host.layout = Layout::Nested;
    host.nodes.insert(entity_node_id(weak));
    host.nodes.insert(relationship_node_id(w.weak_owner->identifying_relationship));
    std::vector<std::string> path;
    for (const auto& a : w.attributes) add_attr_subtree_nodes(weak, a, path, host.nodes);
}

Mapping build_design(const ErSchema& schema, const DesignConfig& cfg, std::string name) {
    check_config(schema, cfg);
    DesignContext ctx{schema, cfg, {}, {}, {}, {}};
    ctx.out.name = std::move(name);
    ctx.out.schema_fingerprint = schema.fingerprint();

    for (const auto& rel : cfg.factorized)
        for (const auto& p : schema.relationship(rel).participants)
            ctx.consumed_by[p.entity] = rel;

    auto host_fragments_of = [&](const std::string& cls) {
        // Fragments whose rows host instances of `cls`. Prefer the most
        // specific inclusive fragment (anchor deepest on cls's chain); with
        // disjoint partitioning fall back to every exact fragment anchored
        // inside cls's subtree.
        int best = -1;
        size_t best_depth = 0;
        std::vector<size_t> exact_hosts;
        for (size_t i = 0; i < ctx.out.fragments.size(); ++i) {
            const Fragment& f = ctx.out.fragments[i];
            std::vector<std::string> anchors;
            if (f.kind == Fragment::Kind::EntityRows) {
                if (f.exact) {
                    if (schema.is_subclass_of(f.anchor, cls)) exact_hosts.push_back(i);
                    continue;
                }
                anchors.push_back(f.anchor);
            } else if (f.kind == Fragment::Kind::FactorizedRows) {
                anchors = {f.factorized.left, f.factorized.right};
            }
            for (const auto& anchor : anchors)
                if (schema.is_subclass_of(cls, anchor)) {
                    size_t depth = schema.chain_of(anchor).size();
                    if (best < 0 || depth > best_depth) {
                        best = static_cast<int>(i);
                        best_depth = depth;
                    }
                }
        }
        std::vector<size_t> out;
        if (best >= 0) out.push_back(static_cast<size_t>(best));
        else out = exact_hosts;
        return out;
    };

    // 1. hierarchy families (weak entities handled in step 2)
    for (const auto& [ename, e] : schema.entities) {
        if (e.superclass || e.is_weak()) continue;
        auto subtree = subtree_classes(schema, ename);
        if (subtree.size() == 1 && ctx.consumed_by.count(ename)) continue;
        switch (strategy_of(cfg, ename)) {
        case HierarchyStrategy::ClassPerSubclass:
            for (const auto& cls : subtree) {
                if (ctx.consumed_by.count(cls)) continue; // lives in a factorized fragment
                ctx.out.fragments.push_back(make_entity_fragment(
                    schema, cfg, ctx.claim_name(lower(cls)), cls, {cls}, false,
                    cls == ename && subtree.size() > 1));
            }
            break;
        case HierarchyStrategy::SingleTable:
            ctx.out.fragments.push_back(make_entity_fragment(schema, cfg,
                                                             ctx.claim_name(lower(ename)), ename,
                                                             subtree, false, subtree.size() > 1));
            break;
        case HierarchyStrategy::Disjoint:
            if (subtree.size() == 1) {
                ctx.out.fragments.push_back(make_entity_fragment(
                    schema, cfg, ctx.claim_name(lower(ename)), ename, {ename}, false, false));
                break;
            }
            for (const auto& cls : subtree)
                ctx.out.fragments.push_back(make_entity_fragment(
                    schema, cfg, ctx.claim_name(lower(cls) + (cls == ename ? "_only" : "_full")),
                    cls, schema.chain_of(cls), true, false));
            break;
        }
    }

    // 2. weak entities: own fragment, embedded in the owner, or factorized
    for (const auto& [ename, e] : schema.entities) {
        if (!e.is_weak()) continue;
        if (ctx.consumed_by.count(ename)) continue;
        if (cfg.folded_weak.count(ename)) continue; // after all row fragments exist
        ctx.out.fragments.push_back(make_entity_fragment(schema, cfg, ctx.claim_name(lower(ename)),
                                                         ename, {ename}, false, false));
    }
    for (const auto& [ename, e] : schema.entities) {
        if (!e.is_weak() || !cfg.folded_weak.count(ename)) continue;
        auto hosts = host_fragments_of(e.weak_owner->owner);
        if (hosts.empty()) fail("no host fragment for folded weak entity '" + ename + "'");
        for (size_t i : hosts) embed_weak(schema, ctx.out.fragments[i], ename);
    }

    // 3. relationships: factorized fragments first, so that relationships
    // folding into a consumed participant find the row-group hosting it
    for (const auto& [rname, rel] : schema.relationships) {
        if (!cfg.factorized.count(rname)) continue;
        {
            Fragment f;
            f.name = ctx.claim_name("fact_" + lower(rname));
            f.kind = Fragment::Kind::FactorizedRows;
            f.layout = Layout::Factorized;
            f.factorized = {rname, rel.participants[0].entity, rel.participants[1].entity};
            f.nodes.insert(relationship_node_id(rname));
            std::vector<std::string> rpath;
            for (const auto& a : rel.attributes) add_attr_subtree_nodes(rname, a, rpath, f.nodes);
            for (const auto& p : rel.participants) {
                add_closure_support_nodes(schema, p.entity, f.nodes);
                std::vector<std::string> path;
                for (const auto& a : schema.entity(p.entity).attributes)
                    add_stored_attr_nodes(p.entity, a, path, cfg.array_mv, f.nodes);
                for (const auto& mv : mv_nodes_of(schema, p.entity))
                    if (cfg.array_mv.count(mv)) f.nesting.array_attrs.push_back(mv);
            }
            ctx.out.fragments.push_back(std::move(f));
        }
    }
    for (const auto& [rname, rel] : schema.relationships) {
        if (is_identifying(schema, rname)) continue; // folded into the weak entity's storage
        if (cfg.factorized.count(rname)) continue;   // handled above
        int src = fold_source_index(rel);
        if (src >= 0) {
            const auto& fk_side = rel.participants[src];
            const auto& host_side = rel.participants[src == 0 ? 1 : 0];
            auto hosts = host_fragments_of(host_side.entity);
            if (hosts.empty())
                fail("no host fragment for folded relationship '" + rname + "'");
            for (size_t i : hosts)
                add_folded_fk(schema, ctx.out.fragments[i], rname, fk_side.role, host_side.role);
            continue;
        }
        Fragment f;
        f.name = ctx.claim_name(lower(rname));
        f.kind = Fragment::Kind::RelationshipRows;
        f.relationship = rname;
        f.nodes.insert(relationship_node_id(rname));
        std::vector<std::string> path;
        for (const auto& a : rel.attributes) add_attr_subtree_nodes(rname, a, path, f.nodes);
        for (const auto& p : rel.participants) add_closure_support_nodes(schema, p.entity, f.nodes);
        ctx.out.fragments.push_back(std::move(f));
    }

    // 4. exploded multi-valued attribute fragments
    for (const auto& [ename, e] : schema.entities) {
        if (cfg.folded_weak.count(ename)) continue; // covered by the embedding
        for (const auto& mv : mv_nodes_of(schema, ename)) {
            if (cfg.array_mv.count(mv)) continue;
            ParsedAttrNode parsed = parse_attr_node(mv);
            Fragment f;
            std::vector<std::string> base_path = parsed.path;
            f.name = ctx.claim_name(lower(attr_column_name(ename, base_path)));
            f.kind = Fragment::Kind::MultiValueRows;
            f.anchor = ename;
            f.mv_node = mv;
            add_closure_support_nodes(schema, ename, f.nodes);
            // the path down to the attribute, for connectivity
            const AttributeDef* a = schema.entity(ename).find_attribute(parsed.path[0]);
            std::vector<std::string> walked;
            for (size_t i = 0; i < parsed.path.size(); ++i) {
                walked.push_back(parsed.path[i]);
                f.nodes.insert(attribute_node_id(ename, walked));
                if (i + 1 < parsed.path.size()) {
                    const AttributeDef* next = nullptr;
                    for (const auto& c : a->is_multi() ? a->element_def().children : a->children)
                        if (c.name == parsed.path[i + 1]) next = &c;
                    a = next;
                }
            }
            if (a->is_multi() && a->element_def().is_composite()) {
                std::vector<std::string> path = parsed.path;
                for (const auto& c : a->element_def().children)
                    add_attr_subtree_nodes(ename, c, path, f.nodes);
            }
            ctx.out.fragments.push_back(std::move(f));
        }
    }

    derive_columns(schema, ctx.out);
    return ctx.out;
}

} // namespace

// ---- public generators ----

Mapping generate_normalized(const ErSchema& schema) {
    return build_design(schema, {}, "normalized");
}

Mapping generate_nested(const ErSchema& schema, const NestedOptions& options) {
    DesignConfig cfg;
    if (options.arrays_for_multivalued)
        for (const auto& [ename, e] : schema.entities)
            for (const auto& mv : mv_nodes_of(schema, ename)) cfg.array_mv.insert(mv);
    cfg.folded_weak = options.fold_weak_into_owner;
    if (options.fold_hierarchy)
        for (const auto& [ename, e] : schema.entities)
            if (!e.superclass && !e.is_weak() && schema.subtree_of(ename).size() > 1)
                cfg.hierarchy[ename] = HierarchyStrategy::SingleTable;
    return build_design(schema, cfg, "nested");
}

Mapping generate_hierarchy_variant(const ErSchema& schema, const std::string& root,
                                   HierarchyStrategy strategy) {
    if (!schema.has_entity(root)) throw Error("unknown entity set '" + root + "'");
    if (schema.subtree_of(root).size() == 1)
        throw Error("'" + root + "' has no subclasses");
    DesignConfig cfg;
    cfg.hierarchy[root] = strategy;
    return build_design(schema, cfg,
                        std::string("hierarchy_") + hierarchy_strategy_name(strategy));
}

Mapping generate_factorized(const ErSchema& schema, const std::string& relationship) {
    DesignConfig cfg;
    cfg.factorized.insert(relationship);
    return build_design(schema, cfg, "factorized_" + lower(relationship));
}

std::vector<Mapping> enumerate_mappings(const ErSchema& schema, size_t budget) {
    // axes, in a fixed order
    std::vector<std::string> roots;
    for (const auto& [ename, e] : schema.entities)
        if (!e.superclass && !e.is_weak() && schema.subtree_of(ename).size() > 1)
            roots.push_back(ename);
    std::vector<std::string> mv_axis;
    for (const auto& [ename, e] : schema.entities)
        for (const auto& mv : mv_nodes_of(schema, ename)) mv_axis.push_back(mv);
    std::vector<std::string> weak_axis;
    for (const auto& [ename, e] : schema.entities)
        if (e.is_weak()) weak_axis.push_back(ename);
    std::vector<std::string> m2m_axis;
    for (const auto& [rname, rel] : schema.relationships)
        if (rel.is_binary() && fold_source_index(rel) < 0 && !is_identifying(schema, rname) &&
            rel.participants[0].entity != rel.participants[1].entity)
            m2m_axis.push_back(rname);

    static const HierarchyStrategy strategies[] = {HierarchyStrategy::ClassPerSubclass,
                                                   HierarchyStrategy::SingleTable,
                                                   HierarchyStrategy::Disjoint};
    std::vector<size_t> radix;
    for (size_t i = 0; i < roots.size(); ++i) radix.push_back(3);
    for (size_t i = 0; i < mv_axis.size() + weak_axis.size() + m2m_axis.size(); ++i)
        radix.push_back(2);

    ErGraph graph = build_graph(schema);
    std::vector<Mapping> out;
    std::set<std::string> seen; // structural dedup
    std::vector<size_t> digits(radix.size(), 0);
    bool done = radix.empty();
    size_t emitted_counter = 0;
    while (out.size() < budget) {
        DesignConfig cfg;
        size_t d = 0;
        for (const auto& r : roots) cfg.hierarchy[r] = strategies[digits[d++]];
        for (const auto& mv : mv_axis)
            if (digits[d++]) cfg.array_mv.insert(mv);
        for (const auto& w : weak_axis)
            if (digits[d++]) cfg.folded_weak.insert(w);
        for (const auto& r : m2m_axis)
            if (digits[d++]) cfg.factorized.insert(r);

        bool feasible = true;
        try {
            check_config(schema, cfg);
        } catch (const Error&) {
            feasible = false;
        }
        if (feasible) {
            Mapping m = build_design(schema, cfg,
                                     "design_" + std::to_string(emitted_counter));
            Mapping key = m;
            key.name.clear();
            std::string text = serialize_mapping(key);
            if (seen.insert(text).second && check_cover(schema, graph, m).ok()) {
                ++emitted_counter;
                out.push_back(std::move(m));
            }
        }

        if (done) break;
        size_t i = 0;
        for (; i < digits.size(); ++i) {
            if (++digits[i] < radix[i]) break;
            digits[i] = 0;
        }
        if (i == digits.size()) break; // wrapped: lattice exhausted
    }
    return out;
}

// ---- validity ----

namespace {

std::string pretty_node(const std::string& id) {
    size_t colon = id.find(':');
    return colon == std::string::npos ? id : id.substr(colon + 1);
}

} // namespace

ValidityReport check_cover(const ErSchema& schema, const ErGraph& graph, const Mapping& mapping) {
    ValidityReport report;
    auto violate = [&](ValidityViolation::Rule rule, std::string detail) {
        report.violations.push_back({rule, std::move(detail)});
    };

    for (const auto& f : mapping.fragments)
        for (const auto& id : f.nodes)
            if (!graph.has_node(id))
                throw Error("fragment '" + f.name + "' references unknown node '" + id + "'");

    // coverage
    std::set<std::string> covered;
    for (const auto& f : mapping.fragments) covered.insert(f.nodes.begin(), f.nodes.end());
    for (const auto& id : graph.coverable_nodes())
        if (!covered.count(id)) violate(ValidityViolation::Rule::Coverage, pretty_node(id) + " uncovered");

    // connectivity
    for (const auto& f : mapping.fragments)
        if (!is_connected(graph, f.nodes))
            violate(ValidityViolation::Rule::Connectivity,
                    "fragment '" + f.name + "' is not a connected subgraph");

    // reversibility: key closures present as columns
    auto closure_present = [&](const Fragment& f, const std::vector<Column>& cols,
                               const std::string& entity) {
        for (const auto& part : key_closure(schema, entity)) {
            std::string want = part.entity + "_" + part.attribute;
            bool found = false;
            for (const auto& c : cols)
                if (c.name == want) found = true;
            if (!found)
                violate(ValidityViolation::Rule::Reversibility,
                        "fragment '" + f.name + "' stores '" + entity +
                            "' attributes but lacks key column '" + want + "'");
        }
    };
    for (const auto& f : mapping.fragments) {
        switch (f.kind) {
        case Fragment::Kind::EntityRows: {
            closure_present(f, f.columns, f.anchor);
            for (const auto& emb : f.nesting.embedded) {
                // the embedded element must carry the weak entity's discriminators
                const Column* col = f.find_column(emb.column);
                if (!col) continue;
                for (const auto& part : key_closure(schema, emb.entity)) {
                    if (schema.root_of(part.entity).name != schema.root_of(emb.entity).name)
                        continue; // owner part, implied by the host row
                    bool found = false;
                    for (const auto& [fname, ftype] : col->type.element().fields)
                        if (fname == part.attribute) found = true;
                    if (!found)
                        violate(ValidityViolation::Rule::Reversibility,
                                "embedded '" + emb.entity + "' in fragment '" + f.name +
                                    "' lacks discriminator '" + part.attribute + "'");
                }
            }
            break;
        }
        case Fragment::Kind::MultiValueRows:
            closure_present(f, f.columns, f.anchor);
            break;
        case Fragment::Kind::RelationshipRows:
            break; // fk columns are the closures by construction
        case Fragment::Kind::FactorizedRows:
            closure_present(f, f.left_columns, f.factorized.left);
            closure_present(f, f.right_columns, f.factorized.right);
            break;
        }
    }

    // reversibility: concrete class of every instance must be derivable
    for (const auto& [ename, e] : schema.entities) {
        if (e.superclass || e.is_weak()) continue;
        auto subtree = subtree_classes(schema, ename);
        if (subtree.size() == 1) continue;
        bool root_typed = false;
        std::set<std::string> exact_classes;
        std::set<std::string> anchored;
        for (const auto& f : mapping.fragments) {
            auto note = [&](const std::string& anchor, bool exact, bool typed) {
                if (schema.root_of(anchor).name != ename) return;
                if (exact) exact_classes.insert(anchor);
                else {
                    anchored.insert(anchor);
                    if (anchor == ename && typed) root_typed = true;
                }
            };
            if (f.kind == Fragment::Kind::EntityRows) note(f.anchor, f.exact, f.type_column);
            if (f.kind == Fragment::Kind::FactorizedRows) {
                for (const auto& side : {f.factorized.left, f.factorized.right}) {
                    if (schema.root_of(side).name != ename) continue;
                    bool typed = side == ename; // group proto adds type at the root
                    note(side, false, typed);
                }
            }
        }
        bool all_exact = true;
        bool all_anchored = true;
        for (const auto& cls : subtree) {
            if (!exact_classes.count(cls)) all_exact = false;
            if (!anchored.count(cls)) all_anchored = false;
        }
        if (!root_typed && !all_exact && !all_anchored)
            violate(ValidityViolation::Rule::Reversibility,
                    "hierarchy '" + ename + "': concrete classes are not derivable "
                    "(need a discriminator, disjoint fragments, or per-class fragments)");
    }

    // crud: a deterministic write target per entity and relationship
    for (const auto& [ename, e] : schema.entities) {
        bool hosted = false;
        for (const auto& f : mapping.fragments) {
            if (f.kind == Fragment::Kind::EntityRows) {
                bool in = f.exact ? f.anchor == ename
                                  : schema.is_subclass_of(ename, f.anchor);
                if (in) hosted = true;
                for (const auto& emb : f.nesting.embedded)
                    if (emb.entity == ename) hosted = true;
            }
            if (f.kind == Fragment::Kind::FactorizedRows &&
                (schema.is_subclass_of(ename, f.factorized.left) ||
                 schema.is_subclass_of(ename, f.factorized.right)))
                hosted = true;
        }
        if (!hosted)
            violate(ValidityViolation::Rule::Crud, "entity '" + ename + "' has no write target");
    }
    for (const auto& [rname, rel] : schema.relationships) {
        bool hosted = false;
        for (const auto& f : mapping.fragments) {
            if (f.kind == Fragment::Kind::RelationshipRows && f.relationship == rname) hosted = true;
            if (f.kind == Fragment::Kind::FactorizedRows && f.factorized.relationship == rname)
                hosted = true;
            for (const auto& fk : f.folded_fks)
                if (fk.relationship == rname) hosted = true;
            for (const auto& emb : f.nesting.embedded)
                if (emb.relationship == rname) hosted = true;
            // identifying relationship folded into the weak entity's own fragment
            if (f.kind == Fragment::Kind::EntityRows && schema.entity(f.anchor).is_weak() &&
                schema.entity(f.anchor).weak_owner->identifying_relationship == rname)
                hosted = true;
            if (f.kind == Fragment::Kind::FactorizedRows) {
                for (const auto& side : {f.factorized.left, f.factorized.right})
                    if (schema.entity(side).is_weak() &&
                        schema.entity(side).weak_owner->identifying_relationship == rname)
                        hosted = true;
            }
        }
        if (!hosted)
            violate(ValidityViolation::Rule::Crud,
                    "relationship '" + rname + "' has no write target");
    }

    // warnings: folded weak entities reachable only through unnest
    for (const auto& f : mapping.fragments)
        for (const auto& emb : f.nesting.embedded)
            for (const auto& [rname, rel] : schema.relationships)
                for (const auto& p : rel.participants)
                    if (p.entity == emb.entity && rname != emb.relationship)
                        report.warnings.push_back("queries joining '" + rname + "' must unnest '" +
                                                  emb.entity + "' out of fragment '" + f.name +
                                                  "'");
    return report;
}

// ---- serialization ----

namespace {

ordered_json fragment_to_json(const Fragment& f) {
    ordered_json j;
    j["name"] = f.name;
    j["kind"] = kind_name(f.kind);
    j["layout"] = layout_name(f.layout);
    if (!f.anchor.empty()) {
        j["anchor"] = f.anchor;
        j["exact"] = f.exact;
    }
    if (f.type_column) j["type_column"] = true;
    if (!f.mv_node.empty()) j["mv_node"] = f.mv_node;
    if (!f.relationship.empty()) j["relationship"] = f.relationship;
    j["nodes"] = ordered_json::array();
    for (const auto& n : f.nodes) j["nodes"].push_back(n);
    if (!f.folded_fks.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& fk : f.folded_fks) {
            ordered_json e;
            e["relationship"] = fk.relationship;
            e["fk_role"] = fk.fk_role;
            e["host_role"] = fk.host_role;
            arr.push_back(e);
        }
        j["folded_fks"] = arr;
    }
    if (!f.nesting.empty()) {
        ordered_json spec;
        spec["array_attrs"] = f.nesting.array_attrs;
        ordered_json emb = ordered_json::array();
        for (const auto& e : f.nesting.embedded) {
            ordered_json one;
            one["column"] = e.column;
            one["entity"] = e.entity;
            one["relationship"] = e.relationship;
            emb.push_back(one);
        }
        spec["embedded"] = emb;
        j["nesting_spec"] = spec;
    }
    if (f.kind == Fragment::Kind::FactorizedRows) {
        ordered_json spec;
        spec["relationship"] = f.factorized.relationship;
        spec["left"] = f.factorized.left;
        spec["right"] = f.factorized.right;
        j["factorized_spec"] = spec;
    }
    return j;
}

Fragment fragment_from_json(const ordered_json& j) {
    Fragment f;
    f.name = j.at("name").get<std::string>();
    f.kind = kind_from_name(j.at("kind").get<std::string>());
    f.layout = layout_from_name(j.at("layout").get<std::string>());
    if (j.contains("anchor")) {
        f.anchor = j["anchor"].get<std::string>();
        f.exact = j.value("exact", false);
    }
    f.type_column = j.value("type_column", false);
    f.mv_node = j.value("mv_node", std::string{});
    f.relationship = j.value("relationship", std::string{});
    for (const auto& n : j.at("nodes")) f.nodes.insert(n.get<std::string>());
    if (j.contains("folded_fks"))
        for (const auto& e : j["folded_fks"])
            f.folded_fks.push_back({e.at("relationship").get<std::string>(),
                                    e.at("fk_role").get<std::string>(),
                                    e.at("host_role").get<std::string>()});
    if (j.contains("nesting_spec")) {
        const auto& spec = j["nesting_spec"];
        for (const auto& a : spec.at("array_attrs"))
            f.nesting.array_attrs.push_back(a.get<std::string>());
        for (const auto& e : spec.at("embedded"))
            f.nesting.embedded.push_back({e.at("column").get<std::string>(),
                                          e.at("entity").get<std::string>(),
                                          e.at("relationship").get<std::string>()});
    }
    if (j.contains("factorized_spec")) {
        const auto& spec = j["factorized_spec"];
        f.factorized = {spec.at("relationship").get<std::string>(),
                        spec.at("left").get<std::string>(), spec.at("right").get<std::string>()};
    }
    return f;
}

} // namespace

std::string serialize_mapping(const Mapping& mapping) {
    ordered_json j;
    j["name"] = mapping.name;
    j["schema_fingerprint"] = mapping.schema_fingerprint;
    j["fragments"] = ordered_json::array();
    for (const auto& f : mapping.fragments) j["fragments"].push_back(fragment_to_json(f));
    return j.dump(2) + "\n";
}

Mapping deserialize_mapping(const std::string& text, const ErSchema& schema) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("malformed mapping document: ") + e.what());
    }
    Mapping m;
    try {
        m.name = j.at("name").get<std::string>();
        m.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
        for (const auto& f : j.at("fragments")) m.fragments.push_back(fragment_from_json(f));
    } catch (const std::exception& e) {
        throw Error(std::string("malformed mapping document: ") + e.what());
    }
    if (m.schema_fingerprint != schema.fingerprint())
        throw Error("schema mismatch: mapping was built for fingerprint " + m.schema_fingerprint +
                    ", current schema is " + schema.fingerprint());
    derive_columns(schema, m);
    return m;
}

} // namespace erdb
