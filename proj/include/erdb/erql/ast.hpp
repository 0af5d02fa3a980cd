#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erdb/er_model.hpp"
#include "erdb/schema_change.hpp"
#include "erdb/value.hpp"

namespace erdb::erql {

struct SourceLoc {
    int line = 0;
    int col = 0;
};

/// Binder-rooted attribute path, e.g. `s.tot_credits` or `e.addr.city`.
/// Binding annotates it with the binder's entity, the class that actually
/// declares the attribute, and the value type at the end of the path.
struct Path {
    std::string binder;
    std::vector<std::string> parts;
    SourceLoc loc;

    struct Bound {
        std::string entity;           // binder's entity set
        std::string declaring_entity; // where parts[0] is declared (ISA-aware)
        TypeDesc type;                // type at the end of the path
    };
    std::optional<Bound> bound;

    std::string text() const;
};

struct Expr {
    enum class Kind { PathRef, Aggregate, Unnest };

    Kind kind = Kind::PathRef;
    Path path;
    std::string agg_fn; // count | sum | avg | min | max

    /// Output column name: alias if present (held by SelectItem), else derived.
    std::string derived_name() const;
};

struct SelectItem {
    enum class Kind { Expr, Nested, Star };

    Kind kind = Kind::Expr;

    // Kind::Expr
    Expr expr;
    std::string alias;

    // Kind::Nested: `name: [items]`
    std::string name;
    std::vector<SelectItem> items;

    // Kind::Star: `binder.*`
    std::string star_binder;
    SourceLoc star_loc;
    std::vector<std::string> star_attrs; // bound: expanded attribute names

    std::string output_name() const;
};

struct Predicate {
    enum class Kind { Compare, In, And, Or, Not };
    enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

    struct Operand {
        enum class Kind { PathRef, Literal };
        Kind kind = Kind::Literal;
        Path path;
        Value literal;
    };

    Kind kind = Kind::Compare;
    CmpOp op = CmpOp::Eq;       // Compare
    Operand lhs, rhs;           // Compare; In uses lhs only
    std::vector<Value> in_list; // In
    std::vector<Predicate> children; // And/Or: 2, Not: 1
};

/// One `join Entity b on …` clause. `on NAME` names a relationship; the
/// binder resolves which earlier binder it connects to and with which roles.
struct FromJoin {
    std::string entity;
    std::string binder;
    bool via_relationship = false;
    std::string relationship;          // via_relationship
    std::optional<Predicate> on_pred;  // predicate join
    SourceLoc loc;

    struct Resolved {
        std::string left_binder; // earlier binder this join attaches to
        std::string left_role;
        std::string right_role;  // role played by this join's binder
    };
    std::optional<Resolved> resolved;
};

struct LogicalQuery {
    std::vector<SelectItem> select;
    std::string base_entity;
    std::string base_binder;
    std::vector<FromJoin> joins;
    std::optional<Predicate> where;
    bool bound = false;

    /// binder → entity set, in FROM order.
    std::vector<std::pair<std::string, std::string>> binders() const;
};

struct DdlStatement {
    enum class Kind { CreateEntity, CreateRelationship, Alter };

    Kind kind = Kind::CreateEntity;
    EntitySetDef entity;          // CreateEntity
    RelationshipDef relationship; // CreateRelationship
    SchemaChange alter;           // Alter
};

struct CrudStatement {
    enum class Kind { InsertEntity, InsertRelationship, UpdateEntity, DeleteEntity, PurgeEntity };

    Kind kind = Kind::InsertEntity;
    std::string target; // entity set or relationship name
    SourceLoc loc;

    Value document; // InsertEntity: composite literal

    // InsertRelationship: role → key tuple (one value per key_closure part),
    // plus optional descriptive-attribute document.
    std::vector<std::pair<std::string, std::vector<Value>>> role_keys;
    Value descriptive;

    // UpdateEntity
    std::vector<std::pair<std::string, Value>> set_list;

    // UpdateEntity / DeleteEntity / PurgeEntity: conjunction of
    // attribute = literal equalities covering the key closure.
    std::vector<std::pair<std::string, Value>> key_pred;

    bool bound = false;
};

} // namespace erdb::erql
