#include "erdb/erql/parser.hpp"

#include "erdb/erql/lexer.hpp"

#include <cctype>

namespace erdb::erql {

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(tokenize(text)) {}

    const Token& peek(size_t ahead = 0) const {
        size_t i = pos_ + ahead;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }
    const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool done() const { return peek().kind == Token::Kind::End; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        std::string got = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
        throw Error(msg + ", got " + got, t.loc.line, t.loc.col);
    }

    bool accept_punct(const char* p) {
        if (peek().is_punct(p)) {
            advance();
            return true;
        }
        return false;
    }
    void expect_punct(const char* p) {
        if (!accept_punct(p)) fail(std::string("expected '") + p + "'");
    }
    bool accept_keyword(const char* kw) {
        if (peek().is_keyword(kw)) {
            advance();
            return true;
        }
        return false;
    }
    void expect_keyword(const char* kw) {
        if (!accept_keyword(kw)) fail(std::string("expected '") + kw + "'");
    }
    std::string expect_name(const char* what) {
        if (peek().kind != Token::Kind::Name) fail(std::string("expected ") + what);
        return advance().text;
    }

    // ---- types & attributes (DDL) ----

    AttributeDef parse_type_into(std::string name) {
        // base type
        AttributeDef base;
        if (peek().is_punct("{")) {
            advance();
            std::vector<AttributeDef> children;
            do {
                children.push_back(parse_attr(false));
            } while (accept_punct(","));
            expect_punct("}");
            base = AttributeDef::make_composite("item", std::move(children));
        } else {
            std::string tn = expect_name("a type name");
            base = AttributeDef::make_scalar("v", scalar_type_from_name(tn));
        }
        // array suffixes
        bool is_array = false;
        while (peek().is_punct("[")) {
            advance();
            expect_punct("]");
            if (is_array) fail("arrays of arrays are not supported");
            is_array = true;
        }
        if (is_array) return AttributeDef::make_multi(std::move(name), std::move(base));
        base.name = std::move(name);
        return base;
    }

    AttributeDef parse_attr(bool allow_key) {
        std::string name = expect_name("an attribute name");
        AttributeDef a = parse_type_into(std::move(name));
        if (accept_keyword("key")) {
            if (!allow_key) fail("'key' is not allowed on nested attributes");
            a.is_key = true;
        }
        return a;
    }

    DdlStatement parse_create_entity() {
        DdlStatement stmt;
        stmt.kind = DdlStatement::Kind::CreateEntity;
        EntitySetDef& e = stmt.entity;
        e.name = expect_name("an entity set name");
        if (accept_keyword("extends")) {
            e.superclass = expect_name("a superclass name");
            SpecializationInfo info;
            if (accept_keyword("disjoint")) info.disjoint = true;
            else if (accept_keyword("overlapping")) info.disjoint = false;
            if (accept_keyword("total")) info.total = true;
            else if (accept_keyword("partial")) info.total = false;
            e.specialization = info;
        }
        expect_punct("(");
        do {
            e.attributes.push_back(parse_attr(true));
        } while (accept_punct(","));
        expect_punct(")");
        if (accept_keyword("weak")) {
            expect_keyword("of");
            WeakOwnerInfo w;
            w.owner = expect_name("an owner entity name");
            expect_keyword("via");
            w.identifying_relationship = expect_name("a relationship name");
            e.weak_owner = w;
        }
        return stmt;
    }

    DdlStatement parse_create_relationship() {
        DdlStatement stmt;
        stmt.kind = DdlStatement::Kind::CreateRelationship;
        RelationshipDef& r = stmt.relationship;
        r.name = expect_name("a relationship name");
        expect_keyword("between");
        do {
            RelationshipParticipant p;
            p.entity = expect_name("a participant entity name");
            p.role = p.entity;
            if (accept_keyword("as")) p.role = expect_name("a role name");
            if (accept_keyword("one")) p.cardinality = Cardinality::One;
            else if (accept_keyword("many")) p.cardinality = Cardinality::Many;
            if (accept_keyword("total")) p.participation = Participation::Total;
            else if (accept_keyword("partial")) p.participation = Participation::Partial;
            r.participants.push_back(std::move(p));
        } while (accept_punct(","));
        if (accept_punct("(")) {
            do {
                r.attributes.push_back(parse_attr(false));
            } while (accept_punct(","));
            expect_punct(")");
        }
        return stmt;
    }

    DdlStatement parse_alter() {
        DdlStatement stmt;
        stmt.kind = DdlStatement::Kind::Alter;
        if (accept_keyword("entity")) {
            std::string entity = expect_name("an entity set name");
            if (accept_keyword("make")) {
                std::string attr = expect_name("an attribute name");
                expect_keyword("multivalued");
                stmt.alter.change = SchemaChange::MakeMultivalued{entity, attr};
            } else if (accept_keyword("add")) {
                stmt.alter.change = SchemaChange::AddAttribute{entity, parse_attr(false)};
            } else if (accept_keyword("drop")) {
                stmt.alter.change =
                    SchemaChange::DropAttribute{entity, expect_name("an attribute name")};
            } else {
                fail("expected 'make', 'add', or 'drop'");
            }
        } else if (accept_keyword("relationship")) {
            std::string rel = expect_name("a relationship name");
            expect_keyword("set");
            std::string role = expect_name("a role name");
            Cardinality to;
            if (accept_keyword("one")) to = Cardinality::One;
            else if (accept_keyword("many")) to = Cardinality::Many;
            else fail("expected 'one' or 'many'");
            stmt.alter.change = SchemaChange::ChangeCardinality{rel, role, to};
        } else if (accept_keyword("hierarchy")) {
            std::string root = expect_name("a hierarchy root name");
            expect_keyword("strategy");
            std::string strat = expect_name("a strategy name");
            stmt.alter.change =
                SchemaChange::SetHierarchyStrategy{root, hierarchy_strategy_from_name(strat)};
        } else {
            fail("expected 'entity', 'relationship', or 'hierarchy' after 'alter'");
        }
        return stmt;
    }

    // ---- query ----

    Path parse_path() {
        Path p;
        p.loc = peek().loc;
        p.binder = expect_name("a binder name");
        expect_punct(".");
        p.parts.push_back(expect_name("an attribute name"));
        while (peek().is_punct(".")) {
            advance();
            p.parts.push_back(expect_name("an attribute name"));
        }
        return p;
    }

    Value parse_literal() {
        const Token& t = peek();
        switch (t.kind) {
        case Token::Kind::Int: {
            int64_t v = t.int_value;
            advance();
            return Value{v};
        }
        case Token::Kind::Float: {
            double v = t.float_value;
            advance();
            return Value{v};
        }
        case Token::Kind::String: {
            std::string v = t.text;
            advance();
            return Value{std::move(v)};
        }
        case Token::Kind::Name:
            if (t.is_keyword("true")) {
                advance();
                return Value{true};
            }
            if (t.is_keyword("false")) {
                advance();
                return Value{false};
            }
            fail("expected a literal");
        default:
            fail("expected a literal");
        }
    }

    Predicate::Operand parse_operand() {
        Predicate::Operand o;
        if (peek().kind == Token::Kind::Name && !peek().is_keyword("true") &&
            !peek().is_keyword("false") && peek(1).is_punct(".")) {
            o.kind = Predicate::Operand::Kind::PathRef;
            o.path = parse_path();
        } else {
            o.kind = Predicate::Operand::Kind::Literal;
            o.literal = parse_literal();
        }
        return o;
    }

    Predicate parse_comparison() {
        if (accept_punct("(")) {
            Predicate p = parse_pred();
            expect_punct(")");
            return p;
        }
        if (accept_keyword("not")) {
            Predicate p;
            p.kind = Predicate::Kind::Not;
            p.children.push_back(parse_comparison());
            return p;
        }
        Predicate p;
        p.lhs = parse_operand();
        if (accept_keyword("in")) {
            p.kind = Predicate::Kind::In;
            expect_punct("[");
            do {
                p.in_list.push_back(parse_literal());
            } while (accept_punct(","));
            expect_punct("]");
            return p;
        }
        p.kind = Predicate::Kind::Compare;
        if (accept_punct("=")) p.op = Predicate::CmpOp::Eq;
        else if (accept_punct("!=")) p.op = Predicate::CmpOp::Ne;
        else if (accept_punct("<=")) p.op = Predicate::CmpOp::Le;
        else if (accept_punct("<")) p.op = Predicate::CmpOp::Lt;
        else if (accept_punct(">=")) p.op = Predicate::CmpOp::Ge;
        else if (accept_punct(">")) p.op = Predicate::CmpOp::Gt;
        else fail("expected a comparison operator");
        p.rhs = parse_operand();
        return p;
    }

    Predicate parse_conjunction() {
        Predicate left = parse_comparison();
        while (accept_keyword("and")) {
            Predicate parent;
            parent.kind = Predicate::Kind::And;
            parent.children.push_back(std::move(left));
            parent.children.push_back(parse_comparison());
            left = std::move(parent);
        }
        return left;
    }

    Predicate parse_pred() {
        Predicate left = parse_conjunction();
        while (accept_keyword("or")) {
            Predicate parent;
            parent.kind = Predicate::Kind::Or;
            parent.children.push_back(std::move(left));
            parent.children.push_back(parse_conjunction());
            left = std::move(parent);
        }
        return left;
    }

    SelectItem parse_select_item() {
        // `name : [ items ]` — nested constructor
        if (peek().kind == Token::Kind::Name && peek(1).is_punct(":")) {
            SelectItem item;
            item.kind = SelectItem::Kind::Nested;
            item.name = advance().text;
            advance(); // ':'
            expect_punct("[");
            do {
                item.items.push_back(parse_select_item());
            } while (accept_punct(","));
            expect_punct("]");
            return item;
        }
        // `binder.*`
        if (peek().kind == Token::Kind::Name && peek(1).is_punct(".") && peek(2).is_punct("*")) {
            SelectItem item;
            item.kind = SelectItem::Kind::Star;
            item.star_loc = peek().loc;
            item.star_binder = advance().text;
            advance();
            advance();
            return item;
        }
        SelectItem item;
        item.kind = SelectItem::Kind::Expr;
        const Token& t = peek();
        if (t.kind == Token::Kind::Name && peek(1).is_punct("(") &&
            (t.is_keyword("count") || t.is_keyword("sum") || t.is_keyword("avg") ||
             t.is_keyword("min") || t.is_keyword("max") || t.is_keyword("unnest"))) {
            bool is_unnest = t.is_keyword("unnest");
            std::string fn;
            for (char c : t.text) fn += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            advance();
            expect_punct("(");
            item.expr.path = parse_path();
            expect_punct(")");
            if (is_unnest) {
                item.expr.kind = Expr::Kind::Unnest;
            } else {
                item.expr.kind = Expr::Kind::Aggregate;
                item.expr.agg_fn = fn;
            }
        } else {
            item.expr.kind = Expr::Kind::PathRef;
            item.expr.path = parse_path();
        }
        if (accept_keyword("as")) item.alias = expect_name("an alias");
        return item;
    }

    LogicalQuery parse_query_stmt() {
        LogicalQuery q;
        expect_keyword("select");
        do {
            q.select.push_back(parse_select_item());
        } while (accept_punct(","));
        expect_keyword("from");
        q.base_entity = expect_name("an entity set name");
        q.base_binder = expect_name("a binder name");
        while (accept_keyword("join")) {
            FromJoin j;
            j.loc = peek().loc;
            j.entity = expect_name("an entity set name");
            j.binder = expect_name("a binder name");
            expect_keyword("on");
            // `on NAME` (not followed by '.') names a relationship;
            // anything else is a join predicate.
            if (peek().kind == Token::Kind::Name && !peek(1).is_punct(".") &&
                !peek().is_keyword("not") && !peek().is_keyword("true") &&
                !peek().is_keyword("false")) {
                j.via_relationship = true;
                j.relationship = advance().text;
            } else {
                j.on_pred = parse_pred();
            }
            q.joins.push_back(std::move(j));
        }
        if (accept_keyword("where")) q.where = parse_pred();
        return q;
    }

    // ---- DML ----

    Value parse_document_value() {
        if (peek().is_punct("{")) {
            advance();
            Value::Composite doc;
            if (!peek().is_punct("}")) {
                do {
                    std::string key = expect_name("a field name");
                    expect_punct(":");
                    Value v = parse_document_value();
                    if (!doc.emplace(key, std::move(v)).second)
                        fail("duplicate field '" + key + "'");
                } while (accept_punct(","));
            }
            expect_punct("}");
            return Value{std::move(doc)};
        }
        if (peek().is_punct("[")) {
            advance();
            Value::Array arr;
            if (!peek().is_punct("]")) {
                do {
                    arr.push_back(parse_document_value());
                } while (accept_punct(","));
            }
            expect_punct("]");
            return Value{std::move(arr)};
        }
        return parse_literal();
    }

    std::vector<std::pair<std::string, Value>> parse_key_equalities() {
        std::vector<std::pair<std::string, Value>> out;
        do {
            std::string attr = expect_name("a key attribute name");
            expect_punct("=");
            out.emplace_back(std::move(attr), parse_literal());
        } while (accept_keyword("and"));
        return out;
    }

    CrudStatement parse_dml_stmt() {
        CrudStatement stmt;
        stmt.loc = peek().loc;
        if (accept_keyword("insert")) {
            if (accept_keyword("entity")) {
                stmt.kind = CrudStatement::Kind::InsertEntity;
                stmt.target = expect_name("an entity set name");
                stmt.document = parse_document_value();
                if (!stmt.document.is_composite()) fail("insert document must be {field: value, …}");
            } else if (accept_keyword("relationship")) {
                stmt.kind = CrudStatement::Kind::InsertRelationship;
                stmt.target = expect_name("a relationship name");
                expect_punct("(");
                do {
                    std::string role = expect_name("a role name");
                    expect_punct(":");
                    std::vector<Value> key;
                    if (accept_punct("[")) {
                        do {
                            key.push_back(parse_literal());
                        } while (accept_punct(","));
                        expect_punct("]");
                    } else {
                        key.push_back(parse_literal());
                    }
                    stmt.role_keys.emplace_back(std::move(role), std::move(key));
                } while (accept_punct(","));
                expect_punct(")");
                if (peek().is_punct("{")) {
                    stmt.descriptive = parse_document_value();
                }
            } else {
                fail("expected 'entity' or 'relationship' after 'insert'");
            }
        } else if (accept_keyword("update")) {
            expect_keyword("entity");
            stmt.kind = CrudStatement::Kind::UpdateEntity;
            stmt.target = expect_name("an entity set name");
            expect_keyword("set");
            do {
                std::string attr = expect_name("an attribute name");
                expect_punct("=");
                stmt.set_list.emplace_back(std::move(attr), parse_document_value());
            } while (accept_punct(","));
            expect_keyword("where");
            stmt.key_pred = parse_key_equalities();
        } else if (accept_keyword("delete")) {
            expect_keyword("entity");
            stmt.kind = CrudStatement::Kind::DeleteEntity;
            stmt.target = expect_name("an entity set name");
            expect_keyword("where");
            stmt.key_pred = parse_key_equalities();
        } else if (accept_keyword("purge")) {
            expect_keyword("entity");
            stmt.kind = CrudStatement::Kind::PurgeEntity;
            stmt.target = expect_name("an entity set name");
            expect_keyword("where");
            stmt.key_pred = parse_key_equalities();
        } else {
            fail("expected 'insert', 'update', 'delete', or 'purge'");
        }
        return stmt;
    }

    void expect_end() {
        accept_punct(";");
        if (!done()) fail("expected end of statement");
    }

private:
    std::vector<Token> tokens_;
    size_t pos_ = 0;
};

} // namespace

std::vector<DdlStatement> parse_ddl(const std::string& text) {
    Parser p(text);
    std::vector<DdlStatement> out;
    while (!p.done()) {
        if (p.accept_punct(";")) continue;
        if (p.accept_keyword("create")) {
            if (p.accept_keyword("entity")) out.push_back(p.parse_create_entity());
            else if (p.accept_keyword("relationship")) out.push_back(p.parse_create_relationship());
            else p.fail("expected 'entity' or 'relationship' after 'create'");
        } else if (p.accept_keyword("alter")) {
            out.push_back(p.parse_alter());
        } else {
            p.fail("expected 'create' or 'alter'");
        }
    }
    return out;
}

LogicalQuery parse_query(const std::string& text) {
    Parser p(text);
    LogicalQuery q = p.parse_query_stmt();
    p.expect_end();
    return q;
}

CrudStatement parse_dml(const std::string& text) {
    Parser p(text);
    CrudStatement stmt = p.parse_dml_stmt();
    p.expect_end();
    return stmt;
}

std::string classify_statement(const std::string& text) {
    std::vector<Token> toks = tokenize(text);
    if (toks.empty() || toks[0].kind != Token::Kind::Name)
        throw Error("cannot classify statement");
    const Token& t = toks[0];
    if (t.is_keyword("create") || t.is_keyword("alter")) return "ddl";
    if (t.is_keyword("select")) return "query";
    if (t.is_keyword("insert") || t.is_keyword("update") || t.is_keyword("delete") ||
        t.is_keyword("purge"))
        return "dml";
    throw Error("unrecognized statement start '" + t.text + "'", t.loc.line, t.loc.col);
}

std::vector<std::string> split_statements(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    bool in_string = false;
    bool in_comment = false;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_comment) {
            if (c == '\n') in_comment = false;
            cur += c;
            continue;
        }
        if (in_string) {
            cur += c;
            if (c == '\\' && i + 1 < text.size()) {
                cur += text[++i];
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            cur += c;
            continue;
        }
        if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
            in_comment = true;
            cur += c;
            continue;
        }
        if (c == ';') {
            out.push_back(cur);
            cur.clear();
            continue;
        }
        cur += c;
    }
    out.push_back(cur);

    std::vector<std::string> nonempty;
    for (auto& s : out) {
        bool blank = true;
        bool comment_line = false;
        for (size_t i = 0; i < s.size(); ++i) {
            char c = s[i];
            if (comment_line) {
                if (c == '\n') comment_line = false;
                continue;
            }
            if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
                comment_line = true;
                ++i;
                continue;
            }
            if (!std::isspace(static_cast<unsigned char>(c))) {
                blank = false;
                break;
            }
        }
        if (!blank) nonempty.push_back(std::move(s));
    }
    return nonempty;
}

} // namespace erdb::erql
