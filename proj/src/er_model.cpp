#include "erdb/er_model.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace erdb {

AttributeDef AttributeDef::make_scalar(std::string name, ScalarType t, bool key) {
    AttributeDef a;
    a.name = std::move(name);
    a.kind = Kind::Scalar;
    a.scalar = t;
    a.is_key = key;
    return a;
}

AttributeDef AttributeDef::make_composite(std::string name, std::vector<AttributeDef> children) {
    AttributeDef a;
    a.name = std::move(name);
    a.kind = Kind::Composite;
    a.children = std::move(children);
    return a;
}

AttributeDef AttributeDef::make_multi(std::string name, AttributeDef elem) {
    AttributeDef a;
    a.name = std::move(name);
    a.kind = Kind::MultiValued;
    a.element.push_back(std::move(elem));
    return a;
}

const AttributeDef& AttributeDef::element_def() const {
    if (!is_multi() || element.empty())
        throw Error("element_def on non-multi-valued attribute '" + name + "'");
    return element.front();
}

TypeDesc AttributeDef::type() const {
    switch (kind) {
    case Kind::Scalar:
        return TypeDesc::make_scalar(scalar);
    case Kind::Composite: {
        std::vector<std::pair<std::string, TypeDesc>> fields;
        for (const auto& c : children) fields.emplace_back(c.name, c.type());
        return TypeDesc::make_composite(std::move(fields));
    }
    case Kind::MultiValued:
        return TypeDesc::make_array(element_def().type());
    }
    throw Error("unreachable attribute kind");
}

const AttributeDef* EntitySetDef::find_attribute(const std::string& attr) const {
    for (const auto& a : attributes)
        if (a.name == attr) return &a;
    return nullptr;
}

std::vector<const AttributeDef*> EntitySetDef::key_attributes() const {
    std::vector<const AttributeDef*> out;
    for (const auto& a : attributes)
        if (a.is_key) out.push_back(&a);
    return out;
}

const RelationshipParticipant* RelationshipDef::find_role(const std::string& role) const {
    for (const auto& p : participants)
        if (p.role == role) return &p;
    return nullptr;
}

bool ValidationReport::ok() const { return error_count() == 0; }

size_t ValidationReport::error_count() const {
    size_t n = 0;
    for (const auto& d : diagnostics)
        if (d.severity == Severity::ErrorLevel) ++n;
    return n;
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& d : diagnostics) {
        os << (d.severity == Severity::ErrorLevel ? "error" : "warning") << " [" << d.object
           << "]: " << d.message << "\n";
    }
    return os.str();
}

const EntitySetDef& ErSchema::entity(const std::string& name) const {
    auto it = entities.find(name);
    if (it == entities.end()) throw Error("unknown entity set '" + name + "'");
    return it->second;
}

const RelationshipDef& ErSchema::relationship(const std::string& name) const {
    auto it = relationships.find(name);
    if (it == relationships.end()) throw Error("unknown relationship '" + name + "'");
    return it->second;
}

const EntitySetDef& ErSchema::root_of(const std::string& name) const {
    const EntitySetDef* e = &entity(name);
    std::set<std::string> seen{e->name};
    while (e->superclass) {
        e = &entity(*e->superclass);
        if (!seen.insert(e->name).second)
            throw Error("inheritance cycle at '" + e->name + "'");
    }
    return *e;
}

std::vector<std::string> ErSchema::chain_of(const std::string& name) const {
    std::vector<std::string> chain;
    const EntitySetDef* e = &entity(name);
    std::set<std::string> seen;
    while (true) {
        if (!seen.insert(e->name).second)
            throw Error("inheritance cycle at '" + e->name + "'");
        chain.push_back(e->name);
        if (!e->superclass) break;
        e = &entity(*e->superclass);
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

std::vector<std::string> ErSchema::direct_subclasses(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [n, e] : entities)
        if (e.superclass && *e.superclass == name) out.push_back(n);
    return out; // map iteration is already sorted
}

std::vector<std::string> ErSchema::subtree_of(const std::string& name) const {
    std::vector<std::string> out;
    std::function<void(const std::string&)> walk = [&](const std::string& cur) {
        out.push_back(cur);
        for (const auto& sub : direct_subclasses(cur)) walk(sub);
    };
    walk(entity(name).name);
    return out;
}

bool ErSchema::is_subclass_of(const std::string& maybe_sub, const std::string& ancestor) const {
    for (const auto& link : chain_of(maybe_sub))
        if (link == ancestor) return true;
    return false;
}

const AttributeDef* ErSchema::find_attribute(const std::string& entity_name,
                                             const std::string& attr,
                                             std::string* declaring_entity) const {
    for (const auto& link : chain_of(entity_name)) {
        if (const AttributeDef* a = entity(link).find_attribute(attr)) {
            if (declaring_entity) *declaring_entity = link;
            return a;
        }
    }
    return nullptr;
}

namespace {

void attr_canonical(const AttributeDef& a, std::string& out) {
    out += a.name;
    out += ':';
    switch (a.kind) {
    case AttributeDef::Kind::Scalar:
        out += scalar_type_name(a.scalar);
        break;
    case AttributeDef::Kind::Composite:
        out += '{';
        for (size_t i = 0; i < a.children.size(); ++i) {
            if (i) out += ',';
            attr_canonical(a.children[i], out);
        }
        out += '}';
        break;
    case AttributeDef::Kind::MultiValued:
        out += '[';
        attr_canonical(a.element_def(), out);
        out += ']';
        break;
    }
    if (a.is_key) out += "!key";
}

void check_attrs(const std::string& object, const std::vector<AttributeDef>& attrs,
                 bool allow_keys, ValidationReport& report) {
    std::set<std::string> names;
    for (const auto& a : attrs) {
        if (a.name.empty())
            report.diagnostics.push_back({Severity::ErrorLevel, object, "attribute with empty name"});
        if (!names.insert(a.name).second)
            report.diagnostics.push_back(
                {Severity::ErrorLevel, object, "duplicate attribute '" + a.name + "'"});
        if (a.is_key && !allow_keys)
            report.diagnostics.push_back(
                {Severity::ErrorLevel, object,
                 "attribute '" + a.name + "' cannot be a key here"});
        if (a.is_key && !a.is_scalar())
            report.diagnostics.push_back(
                {Severity::ErrorLevel, object,
                 "key attribute '" + a.name + "' must be scalar"});
        switch (a.kind) {
        case AttributeDef::Kind::Scalar:
            break;
        case AttributeDef::Kind::Composite:
            if (a.children.empty())
                report.diagnostics.push_back(
                    {Severity::ErrorLevel, object,
                     "composite attribute '" + a.name + "' has no children"});
            check_attrs(object + "." + a.name, a.children, false, report);
            break;
        case AttributeDef::Kind::MultiValued:
            if (a.element.size() != 1)
                report.diagnostics.push_back(
                    {Severity::ErrorLevel, object,
                     "multi-valued attribute '" + a.name + "' must have exactly one element type"});
            else {
                if (a.element_def().is_multi())
                    report.diagnostics.push_back(
                        {Severity::ErrorLevel, object,
                         "multi-valued attribute '" + a.name + "' cannot directly nest another collection"});
                check_attrs(object + "." + a.name, a.element, false, report);
            }
            break;
        }
    }
}

} // namespace

std::string ErSchema::canonical_text() const {
    std::string out;
    for (const auto& [name, e] : entities) {
        out += "entity ";
        out += name;
        if (e.superclass) {
            out += " extends ";
            out += *e.superclass;
        }
        if (e.weak_owner) {
            out += " weak(";
            out += e.weak_owner->owner;
            out += ',';
            out += e.weak_owner->identifying_relationship;
            out += ')';
        }
        out += '(';
        for (size_t i = 0; i < e.attributes.size(); ++i) {
            if (i) out += ',';
            attr_canonical(e.attributes[i], out);
        }
        out += ")\n";
    }
    for (const auto& [name, r] : relationships) {
        out += "relationship ";
        out += name;
        out += '(';
        for (size_t i = 0; i < r.participants.size(); ++i) {
            const auto& p = r.participants[i];
            if (i) out += ',';
            out += p.role;
            out += '=';
            out += p.entity;
            out += (p.cardinality == Cardinality::One ? ":one" : ":many");
            out += (p.participation == Participation::Total ? ":total" : ":partial");
        }
        out += ')';
        if (!r.attributes.empty()) {
            out += '{';
            for (size_t i = 0; i < r.attributes.size(); ++i) {
                if (i) out += ',';
                attr_canonical(r.attributes[i], out);
            }
            out += '}';
        }
        out += '\n';
    }
    return out;
}

std::string ErSchema::fingerprint() const { return fnv1a64_hex(canonical_text()); }

ValidationReport validate_schema(const ErSchema& schema) {
    ValidationReport report;
    auto err = [&](const std::string& object, const std::string& msg) {
        report.diagnostics.push_back({Severity::ErrorLevel, object, msg});
    };

    for (const auto& [name, e] : schema.entities) {
        if (name.empty() || name != e.name) {
            err(name, "entity set key/name mismatch");
            continue;
        }
        check_attrs(name, e.attributes, true, report);

        if (e.superclass) {
            if (!schema.has_entity(*e.superclass)) {
                err(name, "unknown superclass '" + *e.superclass + "'");
            } else {
                // Cycle detection along this chain.
                std::set<std::string> seen{name};
                const EntitySetDef* cur = &e;
                bool cycle = false;
                while (cur->superclass && schema.has_entity(*cur->superclass)) {
                    cur = &schema.entity(*cur->superclass);
                    if (!seen.insert(cur->name).second) {
                        err(name, "inheritance cycle through '" + cur->name + "'");
                        cycle = true;
                        break;
                    }
                }
                if (!cycle) {
                    for (const auto* ka : e.key_attributes())
                        err(name, "subclass declares key attribute '" + ka->name +
                                      "'; keys belong to the hierarchy root");
                    // Shadowing an inherited attribute would make lookups ambiguous.
                    for (const auto& a : e.attributes) {
                        const EntitySetDef* up = &schema.entity(*e.superclass);
                        while (true) {
                            if (up->find_attribute(a.name))
                                err(name, "attribute '" + a.name + "' shadows one inherited from '" +
                                              up->name + "'");
                            if (!up->superclass || !schema.has_entity(*up->superclass)) break;
                            const std::string& next = *up->superclass;
                            if (seen.count(next) && next == name) break;
                            up = &schema.entity(next);
                            if (up->name == name) break;
                        }
                    }
                }
            }
            if (e.weak_owner)
                err(name, "entity set cannot be both a subclass and weak");
        }

        if (e.weak_owner) {
            const auto& w = *e.weak_owner;
            if (!schema.has_entity(w.owner))
                err(name, "unknown weak-entity owner '" + w.owner + "'");
            if (!schema.has_relationship(w.identifying_relationship)) {
                err(name, "unknown identifying relationship '" + w.identifying_relationship + "'");
            } else {
                const auto& rel = schema.relationship(w.identifying_relationship);
                const RelationshipParticipant* weak_side = nullptr;
                const RelationshipParticipant* owner_side = nullptr;
                for (const auto& p : rel.participants) {
                    if (p.entity == name) weak_side = &p;
                    else if (p.entity == w.owner) owner_side = &p;
                }
                if (!weak_side || !owner_side)
                    err(name, "identifying relationship '" + rel.name +
                                  "' does not connect '" + name + "' to '" + w.owner + "'");
                else {
                    if (owner_side->cardinality != Cardinality::One)
                        err(name, "identifying relationship '" + rel.name +
                                      "' must have cardinality one on the owner side");
                    if (weak_side->participation != Participation::Total)
                        err(name, "weak entity must participate totally in '" + rel.name + "'");
                }
            }
            if (e.key_attributes().empty())
                err(name, "weak entity needs at least one discriminator key attribute");
        } else if (!e.superclass) {
            if (e.key_attributes().empty())
                err(name, "missing key: strong entity set needs at least one key attribute");
        }
    }

    for (const auto& [name, r] : schema.relationships) {
        if (name.empty() || name != r.name) {
            err(name, "relationship key/name mismatch");
            continue;
        }
        if (schema.has_entity(name))
            err(name, "relationship name collides with an entity set");
        if (r.participants.size() < 2)
            err(name, "relationship needs at least two participants");
        std::set<std::string> roles;
        for (const auto& p : r.participants) {
            if (p.role.empty())
                err(name, "participant for '" + p.entity + "' has an empty role");
            if (!roles.insert(p.role).second)
                err(name, "duplicate role '" + p.role + "'");
            if (!schema.has_entity(p.entity))
                err(name, "unknown participant entity '" + p.entity + "'");
        }
        check_attrs(name, r.attributes, false, report);
    }

    return report;
}

std::vector<KeyPart> key_closure(const ErSchema& schema, const std::string& entity_name) {
    std::vector<KeyPart> out;
    std::function<void(const std::string&, std::set<std::string>&)> emit =
        [&](const std::string& name, std::set<std::string>& visiting) {
            if (!visiting.insert(name).second)
                throw Error("weak-entity ownership cycle at '" + name + "'");
            const EntitySetDef& root = schema.root_of(name);
            if (root.weak_owner) emit(root.weak_owner->owner, visiting);
            for (const auto* ka : root.key_attributes())
                out.push_back({root.name, ka->name});
        };
    std::set<std::string> visiting;
    emit(entity_name, visiting);
    return out;
}

} // namespace erdb
