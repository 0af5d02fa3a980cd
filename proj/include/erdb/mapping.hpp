#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "erdb/er_graph.hpp"
#include "erdb/er_model.hpp"
#include "erdb/schema_change.hpp"

namespace erdb {

using HierarchyStrategy = SchemaChange::HierarchyStrategy;

enum class Layout { Flat, Nested, Factorized };

const char* layout_name(Layout l);
Layout layout_from_name(const std::string& name);

/// One physical column of a fragment. Columns are derived deterministically
/// from the fragment's node set and specs (never hand-edited): attribute
/// columns are named `<Entity>_<attr_path...>` joined with underscores,
/// foreign keys `<role>_<key column name>`, and the class discriminator is
/// always called "type".
struct Column {
    std::string name;
    TypeDesc type;
    std::string node; // provenance node id; empty for synthesized columns
    bool key = false; // member of the fragment's primary key

    bool operator==(const Column&) const = default;
};

/// A many-to-one (or one-to-one) relationship folded into this fragment as
/// foreign-key columns holding the one side's key closure.
struct FoldedFk {
    std::string relationship;
    std::string fk_role;   // role whose key is stored here (the "one" side)
    std::string host_role; // role this fragment's rows play

    bool operator==(const FoldedFk&) const = default;
};

/// A weak entity embedded in its owner's fragment as an array of composites.
struct EmbeddedEntity {
    std::string column;       // array column name (the entity name, lowercased)
    std::string entity;       // embedded weak entity set
    std::string relationship; // its identifying relationship

    bool operator==(const EmbeddedEntity&) const = default;
};

/// Nested-layout details: which multi-valued attribute nodes stay in place
/// as array columns, and which weak entities are embedded.
struct NestingSpec {
    std::vector<std::string> array_attrs; // mv attribute node ids kept as arrays
    std::vector<EmbeddedEntity> embedded;

    bool empty() const { return array_attrs.empty() && embedded.empty(); }
    bool operator==(const NestingSpec&) const = default;
};

/// Factorized-layout details: one relationship pre-joined inside a single
/// fragment holding two row-groups (one per participant) plus an adjacency
/// index, so neither side's attribute values are duplicated.
struct FactorizedSpec {
    std::string relationship;
    std::string left;  // participants[0].entity
    std::string right; // participants[1].entity

    bool operator==(const FactorizedSpec&) const = default;
};

/// One connected subgraph of the E/R graph together with its physical
/// layout. `kind` records what a stored row means, which the compiler and
/// engine rely on:
///   EntityRows       one row per hosted entity instance
///   MultiValueRows   one row per (owner instance, element) of one
///                    multi-valued attribute
///   RelationshipRows one row per relationship instance
///   FactorizedRows   two row-groups plus adjacency entries
struct Fragment {
    enum class Kind { EntityRows, MultiValueRows, RelationshipRows, FactorizedRows };

    std::string name;
    Kind kind = Kind::EntityRows;
    Layout layout = Layout::Flat;
    std::set<std::string> nodes;

    // EntityRows / MultiValueRows
    std::string anchor;       // hosted entity (MultiValueRows: the owner)
    bool exact = false;       // rows restricted to concrete class == anchor
                              // (false: any class in subtree(anchor))
    bool type_column = false; // carries the "type" discriminator column
    std::vector<FoldedFk> folded_fks;
    NestingSpec nesting;
    std::string mv_node; // MultiValueRows: the exploded attribute node

    // RelationshipRows
    std::string relationship;

    // FactorizedRows
    FactorizedSpec factorized;

    // derived by derive_columns(); not serialized
    std::vector<Column> columns;
    // FactorizedRows only: the three column groups
    std::vector<Column> left_columns, right_columns, edge_columns;

    std::vector<std::string> key_column_names() const;
    const Column* find_column(const std::string& name) const;

    bool operator==(const Fragment&) const = default;
};

struct Mapping {
    std::string name;
    std::string schema_fingerprint;
    std::vector<Fragment> fragments;

    const Fragment* find_fragment(const std::string& name) const;
    bool operator==(const Mapping&) const = default;
};

struct ValidityViolation {
    enum class Rule { Coverage, Connectivity, Reversibility, Crud };
    Rule rule;
    std::string detail;
};

struct ValidityReport {
    std::vector<ValidityViolation> violations;
    std::vector<std::string> warnings;

    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Fills in the derived column lists of every fragment from its node set and
/// specs. Called by the generators and by deserialize_mapping; throws Error
/// on node sets that admit no well-formed column derivation (unknown node,
/// mv node in a flat fragment that is not its designated exploded attribute,
/// missing owner for an embedded entity, …).
void derive_columns(const ErSchema& schema, Mapping& mapping);

/// Validates a mapping against the two physical-design requirements plus
/// CRUD-definedness, reporting every violation:
///   coverage      every attribute and relationship node in ≥1 fragment
///   connectivity  each fragment's nodes induce a connected subgraph
///   reversibility each fragment carries the key closure of every entity
///                 whose attributes it stores, and a discriminator wherever
///                 instances of multiple classes share rows
///   crud          every entity and relationship has a deterministic write
///                 target
ValidityReport check_cover(const ErSchema& schema, const ErGraph& graph, const Mapping& mapping);

/// Fully normalized design: one flat fragment per entity (subclasses store
/// root key + their own attributes), one per many-to-many relationship, one
/// exploded fragment per multi-valued attribute; many-to-one relationships
/// fold into the many side as foreign keys.
Mapping generate_normalized(const ErSchema& schema);

struct NestedOptions {
    bool arrays_for_multivalued = false;
    std::set<std::string> fold_weak_into_owner;
    bool fold_hierarchy = false; // every hierarchy becomes one single-table fragment
};

/// Variations over the normalized design: multi-valued attributes as array
/// columns, weak entities embedded into owners as arrays of composites,
/// hierarchies folded into single fragments. All options off reproduces
/// generate_normalized exactly.
Mapping generate_nested(const ErSchema& schema, const NestedOptions& options);

/// Normalized design with one hierarchy mapped per `strategy`:
///   SingleTable      one fragment, nullable subclass columns + type
///   Disjoint         one fragment per class, full inherited columns, rows
///                    partitioned by concrete class
///   ClassPerSubclass root common columns + per-subclass delta fragments
///                    (identical to generate_normalized)
Mapping generate_hierarchy_variant(const ErSchema& schema, const std::string& root,
                                   HierarchyStrategy strategy);

/// Normalized design with one binary relationship factorized: both
/// participants and the relationship live in a single fragment (two
/// row-groups + adjacency).
Mapping generate_factorized(const ErSchema& schema, const std::string& relationship);

/// Deterministic enumeration of the design lattice {hierarchy strategy per
/// root} x {array vs exploded per mv attribute} x {fold vs separate per weak
/// entity} x {factorize vs not per many-to-many relationship}, truncated at
/// `budget`. Every emitted mapping passes check_cover.
std::vector<Mapping> enumerate_mappings(const ErSchema& schema, size_t budget);

/// Mapping document (JSON text). Deserialization re-derives columns and
/// rejects documents whose schema_fingerprint does not match `schema`.
std::string serialize_mapping(const Mapping& mapping);
Mapping deserialize_mapping(const std::string& text, const ErSchema& schema);

} // namespace erdb
