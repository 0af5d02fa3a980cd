#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erdb/value.hpp"

namespace erdb {

/// An attribute: scalar, composite (named children), or multi-valued
/// (array of scalar/composite elements). One level of collection nesting
/// per attribute; deeper nesting goes through composite children.
struct AttributeDef {
    enum class Kind { Scalar, Composite, MultiValued };

    std::string name;
    Kind kind = Kind::Scalar;
    ScalarType scalar = ScalarType::Int;     // Kind::Scalar
    std::vector<AttributeDef> children;      // Kind::Composite
    std::vector<AttributeDef> element;       // Kind::MultiValued: exactly one, unnamed role
    bool is_key = false;

    static AttributeDef make_scalar(std::string name, ScalarType t, bool key = false);
    static AttributeDef make_composite(std::string name, std::vector<AttributeDef> children);
    static AttributeDef make_multi(std::string name, AttributeDef elem);

    bool is_scalar() const { return kind == Kind::Scalar; }
    bool is_composite() const { return kind == Kind::Composite; }
    bool is_multi() const { return kind == Kind::MultiValued; }
    const AttributeDef& element_def() const;

    /// Type of one stored value of this attribute (arrays for multi-valued).
    TypeDesc type() const;
};

enum class Cardinality { One, Many };
enum class Participation { Total, Partial };

struct SpecializationInfo {
    bool disjoint = false; // overlapping when false
    bool total = false;    // partial when false
};

struct WeakOwnerInfo {
    std::string owner;                    // owning entity set
    std::string identifying_relationship; // must exist in the schema
};

struct EntitySetDef {
    std::string name;
    std::vector<AttributeDef> attributes;
    std::optional<std::string> superclass;
    std::optional<SpecializationInfo> specialization; // meaningful with superclass
    std::optional<WeakOwnerInfo> weak_owner;
    std::string description;

    bool is_subclass() const { return superclass.has_value(); }
    bool is_weak() const { return weak_owner.has_value(); }
    const AttributeDef* find_attribute(const std::string& name) const;
    std::vector<const AttributeDef*> key_attributes() const;
};

struct RelationshipParticipant {
    std::string entity;
    std::string role; // defaults to the entity name
    Cardinality cardinality = Cardinality::Many;
    Participation participation = Participation::Partial;
};

struct RelationshipDef {
    std::string name;
    std::vector<RelationshipParticipant> participants;
    std::vector<AttributeDef> attributes; // descriptive
    std::string description;

    bool is_binary() const { return participants.size() == 2; }
    const RelationshipParticipant* find_role(const std::string& role) const;
};

struct Severity {
    enum Level { Warning, ErrorLevel };
};

struct Diagnostic {
    Severity::Level severity = Severity::ErrorLevel;
    std::string object;
    std::string message;
};

struct ValidationReport {
    std::vector<Diagnostic> diagnostics;

    bool ok() const;
    size_t error_count() const;
    std::string to_string() const;
};

/// A key-closure entry: the entity set that declares the attribute plus the
/// attribute itself. Weak-entity closures start with the owner's closure.
struct KeyPart {
    std::string entity;
    std::string attribute;
    bool operator==(const KeyPart&) const = default;
};

class ErSchema {
public:
    std::map<std::string, EntitySetDef> entities;
    std::map<std::string, RelationshipDef> relationships;

    const EntitySetDef& entity(const std::string& name) const;
    const RelationshipDef& relationship(const std::string& name) const;
    bool has_entity(const std::string& name) const { return entities.count(name) > 0; }
    bool has_relationship(const std::string& name) const { return relationships.count(name) > 0; }

    /// Root of the ISA chain containing `entity` (the entity itself when strong).
    const EntitySetDef& root_of(const std::string& entity) const;
    /// Chain root..entity inclusive, root first.
    std::vector<std::string> chain_of(const std::string& entity) const;
    /// Entity plus all transitive subclasses, in deterministic (sorted DFS) order.
    std::vector<std::string> subtree_of(const std::string& entity) const;
    /// Direct subclasses, sorted by name.
    std::vector<std::string> direct_subclasses(const std::string& entity) const;
    /// True if `maybe_sub` equals or transitively extends `ancestor`.
    bool is_subclass_of(const std::string& maybe_sub, const std::string& ancestor) const;

    /// Attribute lookup through the inheritance chain (root..entity).
    /// Returns the declaring entity and definition, or nullptr.
    const AttributeDef* find_attribute(const std::string& entity, const std::string& attr,
                                       std::string* declaring_entity = nullptr) const;

    /// Hash of the canonical schema text; mappings pin this.
    std::string fingerprint() const;
    std::string canonical_text() const;
};

/// Checks every structural invariant; returns all diagnostics rather than
/// stopping at the first.
ValidationReport validate_schema(const ErSchema& schema);

/// Full key of an entity set: its own key attributes for a strong entity,
/// the root's key for a subclass, owner closure plus local discriminator
/// for a weak entity. Throws on unknown names.
std::vector<KeyPart> key_closure(const ErSchema& schema, const std::string& entity);

} // namespace erdb
