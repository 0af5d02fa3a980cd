#include "erdb/erql/printer.hpp"

namespace erdb::erql {

namespace {

void print_attr(const AttributeDef& a, bool allow_key, std::string& out);

void print_type(const AttributeDef& a, std::string& out) {
    switch (a.kind) {
    case AttributeDef::Kind::Scalar:
        out += scalar_type_name(a.scalar);
        break;
    case AttributeDef::Kind::Composite:
        out += '{';
        for (size_t i = 0; i < a.children.size(); ++i) {
            if (i) out += ", ";
            print_attr(a.children[i], false, out);
        }
        out += '}';
        break;
    case AttributeDef::Kind::MultiValued:
        print_type(a.element_def(), out);
        out += "[]";
        break;
    }
}

void print_attr(const AttributeDef& a, bool allow_key, std::string& out) {
    out += a.name;
    out += ' ';
    print_type(a, out);
    if (allow_key && a.is_key) out += " key";
}

// Strings use exactly the lexer's escape set so printed text re-lexes;
// other scalars share the canonical formatting.
void print_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    out += '"';
}

void print_value(const Value& v, std::string& out) {
    if (v.is_string()) {
        print_string(v.as_string(), out);
        return;
    }
    if (v.is_composite()) {
        out += '{';
        bool first = true;
        for (const auto& [k, field] : v.as_composite()) {
            if (!first) out += ", ";
            first = false;
            out += k;
            out += ": ";
            print_value(field, out);
        }
        out += '}';
        return;
    }
    if (v.is_array()) {
        out += '[';
        for (size_t i = 0; i < v.as_array().size(); ++i) {
            if (i) out += ", ";
            print_value(v.as_array()[i], out);
        }
        out += ']';
        return;
    }
    v.canonical_into(out); // scalars share the canonical formatting
}

const char* cmp_op_text(Predicate::CmpOp op) {
    switch (op) {
    case Predicate::CmpOp::Eq: return "=";
    case Predicate::CmpOp::Ne: return "!=";
    case Predicate::CmpOp::Lt: return "<";
    case Predicate::CmpOp::Le: return "<=";
    case Predicate::CmpOp::Gt: return ">";
    case Predicate::CmpOp::Ge: return ">=";
    }
    return "?";
}

void print_operand(const Predicate::Operand& o, std::string& out) {
    if (o.kind == Predicate::Operand::Kind::PathRef) out += print_path(o.path);
    else print_value(o.literal, out);
}

void print_pred_into(const Predicate& p, std::string& out) {
    switch (p.kind) {
    case Predicate::Kind::Compare:
        print_operand(p.lhs, out);
        out += ' ';
        out += cmp_op_text(p.op);
        out += ' ';
        print_operand(p.rhs, out);
        break;
    case Predicate::Kind::In:
        print_operand(p.lhs, out);
        out += " in [";
        for (size_t i = 0; i < p.in_list.size(); ++i) {
            if (i) out += ", ";
            print_value(p.in_list[i], out);
        }
        out += ']';
        break;
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
        out += '(';
        print_pred_into(p.children[0], out);
        out += p.kind == Predicate::Kind::And ? " and " : " or ";
        print_pred_into(p.children[1], out);
        out += ')';
        break;
    case Predicate::Kind::Not:
        out += "not (";
        print_pred_into(p.children[0], out);
        out += ')';
        break;
    }
}

void print_select_item(const SelectItem& item, std::string& out) {
    switch (item.kind) {
    case SelectItem::Kind::Nested:
        out += item.name;
        out += ": [";
        for (size_t i = 0; i < item.items.size(); ++i) {
            if (i) out += ", ";
            print_select_item(item.items[i], out);
        }
        out += ']';
        break;
    case SelectItem::Kind::Star:
        out += item.star_binder;
        out += ".*";
        break;
    case SelectItem::Kind::Expr:
        switch (item.expr.kind) {
        case Expr::Kind::PathRef:
            out += print_path(item.expr.path);
            break;
        case Expr::Kind::Aggregate:
            out += item.expr.agg_fn;
            out += '(';
            out += print_path(item.expr.path);
            out += ')';
            break;
        case Expr::Kind::Unnest:
            out += "unnest(";
            out += print_path(item.expr.path);
            out += ')';
            break;
        }
        if (!item.alias.empty()) {
            out += " as ";
            out += item.alias;
        }
        break;
    }
}

} // namespace

std::string print_path(const Path& p) {
    std::string out = p.binder;
    for (const auto& part : p.parts) {
        out += '.';
        out += part;
    }
    return out;
}

std::string Path::text() const { return print_path(*this); }

std::string Expr::derived_name() const {
    std::string last = path.parts.back();
    if (kind == Kind::Aggregate) return agg_fn + "_" + last;
    return last;
}

std::string SelectItem::output_name() const {
    switch (kind) {
    case Kind::Nested: return name;
    case Kind::Star: return star_binder;
    case Kind::Expr: return alias.empty() ? expr.derived_name() : alias;
    }
    return "";
}

std::vector<std::pair<std::string, std::string>> LogicalQuery::binders() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back(base_binder, base_entity);
    for (const auto& j : joins) out.emplace_back(j.binder, j.entity);
    return out;
}

std::string print_literal(const Value& v) {
    std::string out;
    print_value(v, out);
    return out;
}

std::string print_predicate(const Predicate& pred) {
    std::string out;
    print_pred_into(pred, out);
    return out;
}

std::string print_ddl(const DdlStatement& stmt) {
    std::string out;
    switch (stmt.kind) {
    case DdlStatement::Kind::CreateEntity: {
        const EntitySetDef& e = stmt.entity;
        out += "create entity ";
        out += e.name;
        if (e.superclass) {
            out += " extends ";
            out += *e.superclass;
            if (e.specialization) {
                out += e.specialization->disjoint ? " disjoint" : " overlapping";
                out += e.specialization->total ? " total" : " partial";
            }
        }
        out += " (";
        for (size_t i = 0; i < e.attributes.size(); ++i) {
            if (i) out += ", ";
            print_attr(e.attributes[i], true, out);
        }
        out += ')';
        if (e.weak_owner) {
            out += " weak of ";
            out += e.weak_owner->owner;
            out += " via ";
            out += e.weak_owner->identifying_relationship;
        }
        break;
    }
    case DdlStatement::Kind::CreateRelationship: {
        const RelationshipDef& r = stmt.relationship;
        out += "create relationship ";
        out += r.name;
        out += " between ";
        for (size_t i = 0; i < r.participants.size(); ++i) {
            const auto& p = r.participants[i];
            if (i) out += ", ";
            out += p.entity;
            if (p.role != p.entity) {
                out += " as ";
                out += p.role;
            }
            out += p.cardinality == Cardinality::One ? " one" : " many";
            out += p.participation == Participation::Total ? " total" : " partial";
        }
        if (!r.attributes.empty()) {
            out += " (";
            for (size_t i = 0; i < r.attributes.size(); ++i) {
                if (i) out += ", ";
                print_attr(r.attributes[i], false, out);
            }
            out += ')';
        }
        break;
    }
    case DdlStatement::Kind::Alter:
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, SchemaChange::MakeMultivalued>) {
                    out += "alter entity " + c.entity + " make " + c.attribute + " multivalued";
                } else if constexpr (std::is_same_v<T, SchemaChange::ChangeCardinality>) {
                    out += "alter relationship " + c.relationship + " set " + c.role + " " +
                           (c.to == Cardinality::One ? "one" : "many");
                } else if constexpr (std::is_same_v<T, SchemaChange::SetHierarchyStrategy>) {
                    out += "alter hierarchy " + c.root + " strategy " +
                           hierarchy_strategy_name(c.strategy);
                } else if constexpr (std::is_same_v<T, SchemaChange::AddAttribute>) {
                    out += "alter entity " + c.entity + " add ";
                    print_attr(c.attribute, false, out);
                } else {
                    out += "alter entity " + c.entity + " drop " + c.attribute;
                }
            },
            stmt.alter.change);
        break;
    }
    return out;
}

std::string print_query(const LogicalQuery& q) {
    std::string out = "select ";
    for (size_t i = 0; i < q.select.size(); ++i) {
        if (i) out += ", ";
        print_select_item(q.select[i], out);
    }
    out += " from ";
    out += q.base_entity;
    out += ' ';
    out += q.base_binder;
    for (const auto& j : q.joins) {
        out += " join ";
        out += j.entity;
        out += ' ';
        out += j.binder;
        out += " on ";
        if (j.via_relationship) out += j.relationship;
        else out += print_predicate(*j.on_pred);
    }
    if (q.where) {
        out += " where ";
        out += print_predicate(*q.where);
    }
    return out;
}

std::string print_dml(const CrudStatement& stmt) {
    std::string out;
    switch (stmt.kind) {
    case CrudStatement::Kind::InsertEntity:
        out += "insert entity ";
        out += stmt.target;
        out += ' ';
        print_value(stmt.document, out);
        break;
    case CrudStatement::Kind::InsertRelationship:
        out += "insert relationship ";
        out += stmt.target;
        out += " (";
        for (size_t i = 0; i < stmt.role_keys.size(); ++i) {
            const auto& [role, key] = stmt.role_keys[i];
            if (i) out += ", ";
            out += role;
            out += ": ";
            if (key.size() == 1) {
                print_value(key[0], out);
            } else {
                out += '[';
                for (size_t k = 0; k < key.size(); ++k) {
                    if (k) out += ", ";
                    print_value(key[k], out);
                }
                out += ']';
            }
        }
        out += ')';
        if (!stmt.descriptive.is_absent()) {
            out += ' ';
            print_value(stmt.descriptive, out);
        }
        break;
    case CrudStatement::Kind::UpdateEntity: {
        out += "update entity ";
        out += stmt.target;
        out += " set ";
        for (size_t i = 0; i < stmt.set_list.size(); ++i) {
            if (i) out += ", ";
            out += stmt.set_list[i].first;
            out += " = ";
            print_value(stmt.set_list[i].second, out);
        }
        out += " where ";
        for (size_t i = 0; i < stmt.key_pred.size(); ++i) {
            if (i) out += " and ";
            out += stmt.key_pred[i].first;
            out += " = ";
            print_value(stmt.key_pred[i].second, out);
        }
        break;
    }
    case CrudStatement::Kind::DeleteEntity:
    case CrudStatement::Kind::PurgeEntity:
        out += stmt.kind == CrudStatement::Kind::DeleteEntity ? "delete entity " : "purge entity ";
        out += stmt.target;
        out += " where ";
        for (size_t i = 0; i < stmt.key_pred.size(); ++i) {
            if (i) out += " and ";
            out += stmt.key_pred[i].first;
            out += " = ";
            print_value(stmt.key_pred[i].second, out);
        }
        break;
    }
    return out;
}

} // namespace erdb::erql
