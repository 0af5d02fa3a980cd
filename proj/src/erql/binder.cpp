#include "erdb/erql/binder.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "erdb/erql/printer.hpp"

namespace erdb::erql {

namespace {

[[noreturn]] void fail(const std::string& msg, SourceLoc loc = {}) {
    throw Error(msg, loc.line, loc.col);
}

/// Scans the whole schema for subclasses of `entity` declaring `attr`, for
/// the "belongs to subclass" diagnostic.
std::string find_declaring_subclass(const ErSchema& schema, const std::string& entity,
                                    const std::string& attr) {
    for (const auto& sub : schema.subtree_of(entity)) {
        if (sub == entity) continue;
        if (schema.entity(sub).find_attribute(attr)) return sub;
    }
    return "";
}

} // namespace

Path::Bound resolve_path(const ErSchema& schema, const std::string& entity, const Path& path) {
    Path::Bound bound;
    bound.entity = entity;

    const AttributeDef* cur = schema.find_attribute(entity, path.parts[0], &bound.declaring_entity);
    if (!cur) {
        std::string sub = find_declaring_subclass(schema, entity, path.parts[0]);
        if (!sub.empty())
            fail("attribute '" + path.parts[0] + "' belongs to subclass '" + sub +
                     "'; bind the query to that entity set",
                 path.loc);
        // weak entities expose their owner closure keys for identification,
        // but navigation happens through real attributes only
        fail("entity set '" + entity + "' has no attribute '" + path.parts[0] + "'", path.loc);
    }

    for (size_t i = 1; i < path.parts.size(); ++i) {
        if (cur->is_multi())
            fail("cannot navigate into multi-valued attribute '" + path.parts[i - 1] +
                     "'; use unnest(...) and select element fields separately",
                 path.loc);
        if (!cur->is_composite())
            fail("'" + path.parts[i - 1] + "' is scalar; cannot resolve '." + path.parts[i] + "'",
                 path.loc);
        const AttributeDef* next = nullptr;
        for (const auto& c : cur->children)
            if (c.name == path.parts[i]) next = &c;
        if (!next)
            fail("composite '" + path.parts[i - 1] + "' has no field '" + path.parts[i] + "'",
                 path.loc);
        cur = next;
    }

    bound.type = cur->type();
    return bound;
}

namespace {

class QueryBinder {
public:
    QueryBinder(const ErSchema& schema, LogicalQuery& q) : schema_(schema), q_(q) {}

    void run() {
        if (q_.bound) return;

        if (!schema_.has_entity(q_.base_entity))
            fail("unknown entity set '" + q_.base_entity + "'");
        declare_binder(q_.base_binder, q_.base_entity);

        for (auto& j : q_.joins) {
            if (!schema_.has_entity(j.entity)) fail("unknown entity set '" + j.entity + "'", j.loc);
            if (j.via_relationship) resolve_via(j);
            declare_binder(j.binder, j.entity);
            if (!j.via_relationship) bind_pred(*j.on_pred);
        }
        if (q_.where) bind_pred(*q_.where);
        for (auto& item : q_.select) bind_select_item(item);

        q_.bound = true;
    }

private:
    void declare_binder(const std::string& binder, const std::string& entity) {
        if (binders_.count(binder)) fail("duplicate binder '" + binder + "'");
        binders_[binder] = entity;
        binder_order_.push_back(binder);
    }

    /// How well an entity fits a participant slot: 0 exact, 1 the binder's
    /// entity is a subclass of the participant, 2 a superclass (implicit
    /// downcast through the relationship), none otherwise.
    std::optional<int> fit(const std::string& binder_entity, const std::string& participant) const {
        if (binder_entity == participant) return 0;
        if (schema_.is_subclass_of(binder_entity, participant)) return 1;
        if (schema_.is_subclass_of(participant, binder_entity)) return 2;
        return std::nullopt;
    }

    void resolve_via(FromJoin& j) {
        if (!schema_.has_relationship(j.relationship))
            fail("unknown relationship '" + j.relationship + "'", j.loc);
        const RelationshipDef& rel = schema_.relationship(j.relationship);
        if (!rel.is_binary())
            fail("relationship '" + j.relationship + "' is not binary", j.loc);

        // Try every (role for the new binder) × (earlier binder on the other
        // role), preferring exact entity matches, then the most recent binder.
        struct Candidate {
            int right_rank;
            size_t recency; // lower = more recent
            int left_rank;
            FromJoin::Resolved resolved;
        };
        std::vector<Candidate> candidates;
        for (const auto& right : rel.participants) {
            auto right_fit = fit(j.entity, right.entity);
            if (!right_fit) continue;
            const RelationshipParticipant& left = rel.participants[0].role == right.role
                                                      ? rel.participants[1]
                                                      : rel.participants[0];
            for (size_t back = 0; back < binder_order_.size(); ++back) {
                const std::string& lb = binder_order_[binder_order_.size() - 1 - back];
                auto left_fit = fit(binders_.at(lb), left.entity);
                if (!left_fit) continue;
                candidates.push_back(
                    {*right_fit, back, *left_fit, FromJoin::Resolved{lb, left.role, right.role}});
            }
        }
        if (candidates.empty()) {
            std::string earlier;
            for (const auto& b : binder_order_) {
                if (!earlier.empty()) earlier += ", ";
                earlier += binders_.at(b);
            }
            fail("relationship '" + j.relationship + "' does not relate " + j.entity + " and " +
                     earlier,
                 j.loc);
        }
        std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a,
                                                                  const Candidate& b) {
            return std::tie(a.right_rank, a.recency, a.left_rank) <
                   std::tie(b.right_rank, b.recency, b.left_rank);
        });
        j.resolved = candidates.front().resolved;
    }

    void bind_path(Path& p) {
        auto it = binders_.find(p.binder);
        if (it == binders_.end()) fail("unknown binder '" + p.binder + "'", p.loc);
        p.bound = resolve_path(schema_, it->second, p);
    }

    void bind_operand(Predicate::Operand& o) {
        if (o.kind == Predicate::Operand::Kind::PathRef) bind_path(o.path);
    }

    void bind_pred(Predicate& p) {
        switch (p.kind) {
        case Predicate::Kind::Compare:
            bind_operand(p.lhs);
            bind_operand(p.rhs);
            break;
        case Predicate::Kind::In:
            bind_operand(p.lhs);
            if (p.lhs.kind != Predicate::Operand::Kind::PathRef)
                fail("'in' requires an attribute path on the left");
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or:
        case Predicate::Kind::Not:
            for (auto& c : p.children) bind_pred(c);
            break;
        }
    }

    void bind_select_item(SelectItem& item) {
        switch (item.kind) {
        case SelectItem::Kind::Nested:
            for (auto& sub : item.items) bind_select_item(sub);
            break;
        case SelectItem::Kind::Star: {
            auto it = binders_.find(item.star_binder);
            if (it == binders_.end())
                fail("unknown binder '" + item.star_binder + "'", item.star_loc);
            item.star_attrs.clear();
            // all single-valued attributes along the chain, root first
            for (const auto& cls : schema_.chain_of(it->second))
                for (const auto& a : schema_.entity(cls).attributes)
                    if (!a.is_multi()) item.star_attrs.push_back(a.name);
            break;
        }
        case SelectItem::Kind::Expr: {
            Expr& e = item.expr;
            bind_path(e.path);
            const TypeDesc& t = e.path.bound->type;
            if (e.kind == Expr::Kind::Unnest) {
                if (!t.is_array())
                    fail("unnest argument '" + print_path(e.path) + "' is not multi-valued",
                         e.path.loc);
            } else if (e.kind == Expr::Kind::Aggregate) {
                if (t.is_array())
                    fail("aggregate over multi-valued path '" + print_path(e.path) +
                             "'; unnest it first",
                         e.path.loc);
                if (t.is_composite())
                    fail("aggregate over composite path '" + print_path(e.path) + "'",
                         e.path.loc);
                if ((e.agg_fn == "sum" || e.agg_fn == "avg") &&
                    !(t.scalar == ScalarType::Int || t.scalar == ScalarType::BigInt ||
                      t.scalar == ScalarType::Float))
                    fail(e.agg_fn + "(...) requires a numeric argument", e.path.loc);
            }
            break;
        }
        }
    }

    const ErSchema& schema_;
    LogicalQuery& q_;
    std::map<std::string, std::string> binders_;
    std::vector<std::string> binder_order_;
};

// ---- DML binding ----

/// Field slot inside a document: either a real attribute or an owner
/// key-closure column of a weak entity.
struct FieldSlot {
    const AttributeDef* attr = nullptr;
    ScalarType closure_type = ScalarType::Int; // when attr == nullptr
    bool required = false;
};

ScalarType closure_attr_type(const ErSchema& schema, const KeyPart& part) {
    const AttributeDef* a = schema.entity(part.entity).find_attribute(part.attribute);
    if (!a) throw Error("internal: key closure names missing attribute");
    return a->scalar;
}

Value coerce_scalar(const Value& v, ScalarType t, const std::string& context) {
    switch (t) {
    case ScalarType::Int:
    case ScalarType::BigInt:
        if (v.is_int()) return v;
        break;
    case ScalarType::Float:
        if (v.is_float()) return v;
        if (v.is_int()) return Value{static_cast<double>(v.as_int())};
        break;
    case ScalarType::Text:
        if (v.is_string()) return v;
        break;
    case ScalarType::Bool:
        if (v.is_bool()) return v;
        break;
    case ScalarType::Date:
        if (v.is_string()) {
            if (!looks_like_date(v.as_string()))
                throw Error(context + ": '" + v.as_string() + "' is not a YYYY-MM-DD date");
            return v;
        }
        break;
    }
    throw Error(context + ": expected " + scalar_type_name(t) + ", got " + v.canonical());
}

Value coerce_document(const Value& v, const AttributeDef& attr, const std::string& context);

Value coerce_composite(const Value& v, const std::vector<AttributeDef>& children,
                       const std::string& context) {
    if (!v.is_composite()) throw Error(context + ": expected {field: value, …}");
    Value::Composite out;
    std::set<std::string> known;
    for (const auto& c : children) known.insert(c.name);
    for (const auto& [k, field] : v.as_composite())
        if (!known.count(k)) throw Error(context + ": unknown field '" + k + "'");
    for (const auto& c : children) {
        auto it = v.as_composite().find(c.name);
        if (it == v.as_composite().end()) continue; // optional, absent
        out[c.name] = coerce_document(it->second, c, context + "." + c.name);
    }
    return Value{std::move(out)};
}

Value coerce_document(const Value& v, const AttributeDef& attr, const std::string& context) {
    switch (attr.kind) {
    case AttributeDef::Kind::Scalar:
        return coerce_scalar(v, attr.scalar, context);
    case AttributeDef::Kind::Composite:
        return coerce_composite(v, attr.children, context);
    case AttributeDef::Kind::MultiValued: {
        if (!v.is_array()) throw Error(context + ": expected an array");
        Value::Array out;
        for (const auto& e : v.as_array())
            out.push_back(coerce_document(e, attr.element_def(), context + "[]"));
        // multi-valued attributes have set semantics: sorted, duplicate-free
        std::sort(out.begin(), out.end(),
                  [](const Value& a, const Value& b) { return a.compare(b) < 0; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const Value& a, const Value& b) { return a.compare(b) == 0; }),
                  out.end());
        return Value{std::move(out)};
    }
    }
    throw Error("unreachable");
}

/// The document field slots of an entity: owner key-closure columns first
/// (for weak entities), then every attribute along the inheritance chain.
std::map<std::string, FieldSlot> entity_field_slots(const ErSchema& schema,
                                                    const std::string& entity) {
    std::map<std::string, FieldSlot> slots;
    std::set<std::string> chain_entities;
    for (const auto& cls : schema.chain_of(entity)) chain_entities.insert(cls);

    for (const auto& part : key_closure(schema, entity)) {
        if (chain_entities.count(part.entity)) continue; // own discriminator, handled below
        FieldSlot slot;
        slot.closure_type = closure_attr_type(schema, part);
        slot.required = true;
        if (!slots.emplace(part.attribute, slot).second)
            throw Error("ambiguous key column '" + part.attribute + "' in owner closure of '" +
                        entity + "'");
    }
    for (const auto& cls : schema.chain_of(entity)) {
        for (const auto& a : schema.entity(cls).attributes) {
            FieldSlot slot;
            slot.attr = &a;
            slot.required = a.is_key;
            if (!slots.emplace(a.name, slot).second)
                throw Error("attribute '" + a.name + "' collides with an owner key column of '" +
                            entity + "'");
        }
    }
    return slots;
}

void bind_insert_entity(const ErSchema& schema, CrudStatement& stmt) {
    schema.entity(stmt.target); // existence
    auto slots = entity_field_slots(schema, stmt.target);

    Value::Composite out;
    for (const auto& [k, v] : stmt.document.as_composite()) {
        auto it = slots.find(k);
        if (it == slots.end())
            fail("entity set '" + stmt.target + "' has no attribute '" + k + "'", stmt.loc);
        const FieldSlot& slot = it->second;
        std::string ctx = stmt.target + "." + k;
        out[k] = slot.attr ? coerce_document(v, *slot.attr, ctx)
                           : coerce_scalar(v, slot.closure_type, ctx);
    }
    for (const auto& [name, slot] : slots) {
        if (slot.required && !out.count(name))
            fail("insert into '" + stmt.target + "' is missing key attribute '" + name + "'",
                 stmt.loc);
    }
    stmt.document = Value{std::move(out)};
}

void check_key_pred(const ErSchema& schema, CrudStatement& stmt) {
    auto closure = key_closure(schema, stmt.target);
    std::map<std::string, ScalarType> expected;
    for (const auto& part : closure) {
        if (!expected.emplace(part.attribute, closure_attr_type(schema, part)).second)
            fail("ambiguous key column '" + part.attribute + "'", stmt.loc);
    }
    std::set<std::string> seen;
    for (auto& [name, value] : stmt.key_pred) {
        auto it = expected.find(name);
        if (it == expected.end())
            fail("'" + name + "' is not a key attribute of '" + stmt.target + "'", stmt.loc);
        if (!seen.insert(name).second) fail("key attribute '" + name + "' repeated", stmt.loc);
        value = coerce_scalar(value, it->second, stmt.target + " key " + name);
    }
    if (seen.size() != expected.size()) {
        for (const auto& [name, t] : expected)
            if (!seen.count(name))
                fail("key predicate must pin '" + name + "' (full key required)", stmt.loc);
    }
    // canonical order: key closure order
    std::vector<std::pair<std::string, Value>> ordered;
    for (const auto& part : closure)
        for (auto& [name, value] : stmt.key_pred)
            if (name == part.attribute) ordered.emplace_back(name, value);
    stmt.key_pred = std::move(ordered);
}

void bind_update(const ErSchema& schema, CrudStatement& stmt) {
    schema.entity(stmt.target); // existence
    auto slots = entity_field_slots(schema, stmt.target);
    std::set<std::string> seen;
    for (auto& [name, value] : stmt.set_list) {
        auto it = slots.find(name);
        if (it == slots.end())
            fail("entity set '" + stmt.target + "' has no attribute '" + name + "'", stmt.loc);
        if (!it->second.attr)
            fail("cannot update owner key column '" + name + "'", stmt.loc);
        if (it->second.attr->is_key)
            fail("cannot update key attribute '" + name + "'", stmt.loc);
        if (!seen.insert(name).second) fail("attribute '" + name + "' set twice", stmt.loc);
        value = coerce_document(value, *it->second.attr, stmt.target + "." + name);
    }
    check_key_pred(schema, stmt);
}

void bind_insert_relationship(const ErSchema& schema, CrudStatement& stmt) {
    const RelationshipDef& rel = schema.relationship(stmt.target);
    std::set<std::string> seen;
    if (stmt.role_keys.size() != rel.participants.size())
        fail("relationship '" + stmt.target + "' needs all " +
                 std::to_string(rel.participants.size()) + " roles",
             stmt.loc);
    std::vector<std::pair<std::string, std::vector<Value>>> ordered;
    for (const auto& p : rel.participants) {
        const std::vector<Value>* key = nullptr;
        for (const auto& [role, k] : stmt.role_keys)
            if (role == p.role) key = &k;
        if (!key) fail("missing role '" + p.role + "'", stmt.loc);
        auto closure = key_closure(schema, p.entity);
        if (key->size() != closure.size())
            fail("role '" + p.role + "' key needs " + std::to_string(closure.size()) +
                     " value(s) " + "(key closure of '" + p.entity + "')",
                 stmt.loc);
        std::vector<Value> coerced;
        for (size_t i = 0; i < key->size(); ++i)
            coerced.push_back(coerce_scalar((*key)[i], closure_attr_type(schema, closure[i]),
                                            p.role + "[" + std::to_string(i) + "]"));
        ordered.emplace_back(p.role, std::move(coerced));
    }
    for (const auto& [role, k] : stmt.role_keys) {
        if (!rel.find_role(role)) fail("relationship has no role '" + role + "'", stmt.loc);
        if (!seen.insert(role).second) fail("role '" + role + "' repeated", stmt.loc);
    }
    stmt.role_keys = std::move(ordered);

    if (!stmt.descriptive.is_absent()) {
        if (rel.attributes.empty())
            fail("relationship '" + stmt.target + "' has no descriptive attributes", stmt.loc);
        stmt.descriptive = coerce_composite(stmt.descriptive, rel.attributes, stmt.target);
    }
}

} // namespace

void bind(const ErSchema& schema, LogicalQuery& query) { QueryBinder(schema, query).run(); }

void bind(const ErSchema& schema, CrudStatement& stmt) {
    if (stmt.bound) return;
    switch (stmt.kind) {
    case CrudStatement::Kind::InsertEntity:
        bind_insert_entity(schema, stmt);
        break;
    case CrudStatement::Kind::InsertRelationship:
        bind_insert_relationship(schema, stmt);
        break;
    case CrudStatement::Kind::UpdateEntity:
        bind_update(schema, stmt);
        break;
    case CrudStatement::Kind::DeleteEntity:
    case CrudStatement::Kind::PurgeEntity: {
        const EntitySetDef& e = schema.entity(stmt.target);
        if (e.is_subclass())
            fail("delete/purge target '" + stmt.target + "' is a subclass; address the root '" +
                     schema.root_of(stmt.target).name +
                     "' (its rows carry the whole instance)",
                 stmt.loc);
        check_key_pred(schema, stmt);
        break;
    }
    }
    stmt.bound = true;
}

} // namespace erdb::erql
