#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "erdb/erql/binder.hpp"
#include "erdb/erql/parser.hpp"
#include "erdb/erql/printer.hpp"
#include "support/fixtures.hpp"

using namespace erdb;
using namespace erdb::erql;

TEST_CASE("parse_ddl: create entity") {
    auto stmts = parse_ddl("create entity Person (ID bigint key, name text, Ph text[])");
    REQUIRE(stmts.size() == 1);
    REQUIRE(stmts[0].kind == DdlStatement::Kind::CreateEntity);
    const EntitySetDef& e = stmts[0].entity;
    CHECK(e.name == "Person");
    REQUIRE(e.attributes.size() == 3);
    CHECK(e.attributes[0].is_key);
    CHECK(e.attributes[0].scalar == ScalarType::BigInt);
    CHECK(e.attributes[2].is_multi());
    CHECK(e.attributes[2].element_def().scalar == ScalarType::Text);
}

TEST_CASE("parse_ddl: subclass, weak entity, composite types") {
    auto stmts = parse_ddl(
        "create entity Student extends Person disjoint partial (tot_credits int);"
        "create entity Section (sec_id int key, semester text key, year int key)"
        "  weak of Course via sec_course;"
        "create entity Emp (emp_id bigint key, addr {street text, city text},"
        "  phones {kind text, num text}[])");
    REQUIRE(stmts.size() == 3);
    CHECK(stmts[0].entity.superclass == "Person");
    CHECK(stmts[0].entity.specialization->disjoint);
    REQUIRE(stmts[1].entity.weak_owner.has_value());
    CHECK(stmts[1].entity.weak_owner->owner == "Course");
    CHECK(stmts[1].entity.weak_owner->identifying_relationship == "sec_course");
    const auto& emp = stmts[2].entity;
    CHECK(emp.attributes[1].is_composite());
    CHECK(emp.attributes[2].is_multi());
    CHECK(emp.attributes[2].element_def().is_composite());
}

TEST_CASE("parse_ddl: create relationship") {
    auto stmts = parse_ddl(
        "create relationship advisor between Instructor one, Student many;"
        "create relationship takes between Student many, Section many (grade text);"
        "create relationship rel_r1r3 between R1 as parent one, R3 as child many");
    REQUIRE(stmts.size() == 3);
    const auto& adv = stmts[0].relationship;
    CHECK(adv.participants[0].cardinality == Cardinality::One);
    CHECK(adv.participants[1].cardinality == Cardinality::Many);
    CHECK(stmts[1].relationship.attributes.size() == 1);
    CHECK(stmts[2].relationship.participants[0].role == "parent");
    CHECK(stmts[2].relationship.participants[1].role == "child");
}

TEST_CASE("parse_ddl: alter statements") {
    auto stmts = parse_ddl(
        "alter entity Person make city multivalued;"
        "alter relationship advisor set Instructor many;"
        "alter hierarchy Person strategy single_table;"
        "alter entity Person add nickname text;"
        "alter entity Person drop nickname");
    REQUIRE(stmts.size() == 5);
    for (const auto& s : stmts) CHECK(s.kind == DdlStatement::Kind::Alter);
    CHECK(std::holds_alternative<SchemaChange::MakeMultivalued>(stmts[0].alter.change));
    CHECK(std::holds_alternative<SchemaChange::ChangeCardinality>(stmts[1].alter.change));
    CHECK(std::holds_alternative<SchemaChange::SetHierarchyStrategy>(stmts[2].alter.change));
    CHECK(std::holds_alternative<SchemaChange::AddAttribute>(stmts[3].alter.change));
    CHECK(std::holds_alternative<SchemaChange::DropAttribute>(stmts[4].alter.change));
}

TEST_CASE("parse_ddl: empty input and errors") {
    CHECK(parse_ddl("").empty());
    CHECK(parse_ddl("  -- just a comment\n").empty());
    CHECK_THROWS_AS(parse_ddl("create table x"), Error);
    CHECK_THROWS_AS(parse_ddl("create entity P (id int key"), Error);
    try {
        parse_ddl("create entity P\n  (id int key,, name text)");
        FAIL("expected a syntax error");
    } catch (const Error& e) {
        CHECK(e.line == 2);
        CHECK(e.col > 0);
    }
}

TEST_CASE("parse_query: nested constructor and relationship join") {
    LogicalQuery q = parse_query(
        "select c.title, sections: [s.sec_id, s.semester] "
        "from Course c join Section s on sec_course");
    REQUIRE(q.select.size() == 2);
    CHECK(q.select[0].kind == SelectItem::Kind::Expr);
    REQUIRE(q.select[1].kind == SelectItem::Kind::Nested);
    CHECK(q.select[1].name == "sections");
    CHECK(q.select[1].items.size() == 2);
    REQUIRE(q.joins.size() == 1);
    CHECK(q.joins[0].via_relationship);
    CHECK(q.joins[0].relationship == "sec_course");
}

TEST_CASE("parse_query: aggregate without explicit group by") {
    LogicalQuery q =
        parse_query("select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor");
    REQUIRE(q.select.size() == 2);
    CHECK(q.select[0].expr.kind == Expr::Kind::PathRef);
    CHECK(q.select[1].expr.kind == Expr::Kind::Aggregate);
    CHECK(q.select[1].expr.agg_fn == "avg");
}

TEST_CASE("parse_query: minimal, star, unnest, predicates") {
    LogicalQuery q1 = parse_query("select p.ID from Person p");
    CHECK(q1.joins.empty());
    CHECK_FALSE(q1.where.has_value());

    LogicalQuery q2 = parse_query("select r3.* from R3 r3");
    CHECK(q2.select[0].kind == SelectItem::Kind::Star);
    CHECK(q2.select[0].star_binder == "r3");

    LogicalQuery q3 = parse_query(
        "select unnest(p.Ph) as phone from Person p "
        "where (p.ID > 3 and p.name != \"x\") or p.ID in [1, 2, 3]");
    CHECK(q3.select[0].expr.kind == Expr::Kind::Unnest);
    CHECK(q3.select[0].alias == "phone");
    REQUIRE(q3.where.has_value());
    CHECK(q3.where->kind == Predicate::Kind::Or);

    // predicate join vs relationship join disambiguation
    LogicalQuery q4 = parse_query("select a.x from A a join B b on a.x = b.y");
    CHECK_FALSE(q4.joins[0].via_relationship);
    REQUIRE(q4.joins[0].on_pred.has_value());
}

TEST_CASE("parse_dml forms") {
    CrudStatement ins = parse_dml(
        "insert entity Person {ID: 1, name: \"Ann\", Ph: [\"555-1111\", \"555-2222\"]}");
    CHECK(ins.kind == CrudStatement::Kind::InsertEntity);
    CHECK(ins.document.as_composite().at("Ph").as_array().size() == 2);

    CrudStatement del = parse_dml("delete entity Person where ID = 1");
    CHECK(del.kind == CrudStatement::Kind::DeleteEntity);
    REQUIRE(del.key_pred.size() == 1);
    CHECK(del.key_pred[0].first == "ID");

    CrudStatement rel = parse_dml("insert relationship advisor (Instructor: 2, Student: 1)");
    CHECK(rel.kind == CrudStatement::Kind::InsertRelationship);
    REQUIRE(rel.role_keys.size() == 2);
    CHECK(rel.role_keys[0].second[0] == Value{2});

    CrudStatement rel2 = parse_dml(
        "insert relationship takes (Student: 1, Section: [1, 1, \"Fall\", 2020]) {grade: \"A\"}");
    CHECK(rel2.role_keys[1].second.size() == 4);
    CHECK(rel2.descriptive.is_composite());

    CrudStatement upd = parse_dml("update entity Person set name = \"Bo\", city = \"LA\" where ID = 2");
    CHECK(upd.kind == CrudStatement::Kind::UpdateEntity);
    CHECK(upd.set_list.size() == 2);

    CrudStatement purge = parse_dml("purge entity Person where ID = 1");
    CHECK(purge.kind == CrudStatement::Kind::PurgeEntity);
}

TEST_CASE("print-parse round trips") {
    std::vector<std::string> ddl = {
        "create entity Person (ID bigint key, name text, Ph text[])",
        "create entity Student extends Person disjoint partial (tot_credits int)",
        "create entity Section (sec_id int key) weak of Course via sec_course",
        "create relationship advisor between Instructor one partial, Student many partial",
        "create relationship r between A as left one total, B many partial (w float)",
        "alter entity Person make city multivalued",
        "alter hierarchy R strategy class_per_subclass",
    };
    for (const auto& text : ddl) {
        CAPTURE(text);
        auto first = parse_ddl(text);
        REQUIRE(first.size() == 1);
        std::string printed = print_ddl(first[0]);
        auto second = parse_ddl(printed);
        REQUIRE(second.size() == 1);
        CHECK(print_ddl(second[0]) == printed);
    }

    std::vector<std::string> queries = {
        "select p.ID from Person p",
        "select c.title, secs: [s.sec_id, inner: [t.grade]] from Course c join Section s on sec_course",
        "select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor",
        "select r3.*, unnest(r3.r_mv1) as v from R3 r3 where not (r3.r_a in [1, 2]) and r3.r_id >= 10",
        "select a.x as y from A a join B b on a.x = b.y where a.z = true or a.w < -1.5",
    };
    for (const auto& text : queries) {
        CAPTURE(text);
        LogicalQuery q = parse_query(text);
        std::string printed = print_query(q);
        CHECK(print_query(parse_query(printed)) == printed);
    }

    std::vector<std::string> dml = {
        "insert entity Person {ID: 1, name: \"An\\\"n\", Ph: [\"5\"]}",
        "insert entity Emp {addr: {city: \"LA\", tags: [\"a\"]}, phones: [{kind: \"h\", num: \"1\"}]}",
        "insert relationship takes (Student: 1, Section: [1, 1, \"Fall\", 2020]) {grade: \"A\"}",
        "update entity Person set city = \"LA\" where ID = 2",
        "delete entity Course where course_id = 9",
        "purge entity Person where ID = 1",
    };
    for (const auto& text : dml) {
        CAPTURE(text);
        CrudStatement s = parse_dml(text);
        std::string printed = print_dml(s);
        CHECK(print_dml(parse_dml(printed)) == printed);
    }
}

TEST_CASE("keywords are case-insensitive, identifiers are not") {
    LogicalQuery q = parse_query("SELECT p.ID FROM Person p WHERE p.ID = 1");
    CHECK(q.base_entity == "Person");
    ErSchema s = fixtures::university_schema();
    bind(s, q);
    CHECK(q.bound);
    LogicalQuery bad = parse_query("select p.id from Person p");
    CHECK_THROWS_WITH_AS(bind(s, bad), "entity set 'Person' has no attribute 'id'", Error);
}

TEST_CASE("bind annotates paths and joins") {
    ErSchema s = fixtures::university_schema();
    LogicalQuery q =
        parse_query("select i.ID, avg(st.tot_credits) from Instructor i join Student st on advisor");
    bind(s, q);
    REQUIRE(q.bound);
    const Path& p0 = q.select[0].expr.path;
    REQUIRE(p0.bound.has_value());
    CHECK(p0.bound->entity == "Instructor");
    CHECK(p0.bound->declaring_entity == "Person"); // ID is inherited
    CHECK(p0.bound->type.scalar == ScalarType::BigInt);
    const Path& p1 = q.select[1].expr.path;
    CHECK(p1.bound->entity == "Student");
    CHECK(p1.bound->declaring_entity == "Student");
    REQUIRE(q.joins[0].resolved.has_value());
    CHECK(q.joins[0].resolved->left_binder == "i");
    CHECK(q.joins[0].resolved->left_role == "Instructor");
    CHECK(q.joins[0].resolved->right_role == "Student");

    // binding twice is a no-op
    std::string before = print_query(q);
    bind(s, q);
    CHECK(print_query(q) == before);
}

TEST_CASE("bind ISA rules") {
    ErSchema s = fixtures::university_schema();

    LogicalQuery up = parse_query("select st.name from Student st");
    bind(s, up); // superclass attribute through subclass binder: fine
    CHECK(up.select[0].expr.path.bound->declaring_entity == "Person");

    LogicalQuery down = parse_query("select p.rank from Person p");
    CHECK_THROWS_WITH_AS(
        bind(s, down),
        "attribute 'rank' belongs to subclass 'Instructor'; bind the query to that entity set",
        Error);
}

TEST_CASE("bind rejects bad joins, unknown names, type errors") {
    ErSchema s = fixtures::university_schema();

    LogicalQuery j = parse_query("select c.title from Course c join Student st on advisor");
    CHECK_THROWS_WITH_AS(bind(s, j), "relationship 'advisor' does not relate Student and Course",
                         Error);

    LogicalQuery dup = parse_query("select p.ID from Person p join Student p on advisor");
    CHECK_THROWS_AS(bind(s, dup), Error);

    LogicalQuery agg = parse_query("select sum(p.name) from Person p");
    CHECK_THROWS_AS(bind(s, agg), Error);

    LogicalQuery mv = parse_query("select count(p.Ph) from Person p");
    CHECK_THROWS_AS(bind(s, mv), Error);

    LogicalQuery un = parse_query("select unnest(p.name) from Person p");
    CHECK_THROWS_AS(bind(s, un), Error);

    LogicalQuery nav = parse_query("select e.phones.num from Emp e");
    CHECK_THROWS_AS(bind(fixtures::composite_schema(), nav), Error);

    LogicalQuery comp = parse_query("select e.addr.city from Emp e");
    bind(fixtures::composite_schema(), comp);
    CHECK(comp.select[0].expr.path.bound->type.scalar == ScalarType::Text);
}

TEST_CASE("bind star expansion") {
    ErSchema s = fixtures::synthetic_schema();
    LogicalQuery q = parse_query("select r3.* from R3 r3");
    bind(s, q);
    // single-valued attributes along the chain, root first; multi-valued excluded
    CHECK(q.select[0].star_attrs ==
          std::vector<std::string>{"r_id", "r_a", "r1_a", "r3_a"});
}

TEST_CASE("bind via-relationship with roles and subclass fit") {
    ErSchema s = fixtures::synthetic_schema();
    LogicalQuery q =
        parse_query("select p.r_id, c.r3_a from R1 p join R3 c on rel_r1r3");
    bind(s, q);
    CHECK(q.joins[0].resolved->left_role == "parent");
    CHECK(q.joins[0].resolved->right_role == "child");

    LogicalQuery rev = parse_query("select c.r_id from R3 c join R1 p on rel_r1r3");
    bind(s, rev);
    CHECK(rev.joins[0].resolved->left_role == "child");
    CHECK(rev.joins[0].resolved->right_role == "parent");
}

TEST_CASE("bind DML") {
    ErSchema s = fixtures::university_schema();

    CrudStatement ins = parse_dml(
        "insert entity Student {ID: 1, name: \"Ann\", city: \"College Park\","
        " Ph: [\"555-2222\", \"555-1111\", \"555-1111\"], tot_credits: 30}");
    bind(s, ins);
    // multi-valued arrays normalized to sorted sets
    const auto& ph = ins.document.as_composite().at("Ph").as_array();
    REQUIRE(ph.size() == 2);
    CHECK(ph[0].as_string() == "555-1111");

    CrudStatement weak = parse_dml(
        "insert entity Section {course_id: 1, sec_id: 1, semester: \"Fall\", year: 2020}");
    bind(s, weak); // owner closure field accepted

    CrudStatement missing = parse_dml("insert entity Section {sec_id: 1, semester: \"F\", year: 1}");
    CHECK_THROWS_AS(bind(s, missing), Error);

    CrudStatement badfield = parse_dml("insert entity Person {ID: 5, rank: \"prof\"}");
    CHECK_THROWS_AS(bind(s, badfield), Error); // rank belongs to Instructor

    CrudStatement relins =
        parse_dml("insert relationship takes (Student: 1, Section: [1, 1, \"Fall\", 2020])");
    bind(s, relins);
    CHECK(relins.role_keys[1].second.size() == 4);

    CrudStatement relbad = parse_dml("insert relationship takes (Student: 1, Section: 1)");
    CHECK_THROWS_AS(bind(s, relbad), Error); // Section key needs 4 values

    CrudStatement upd = parse_dml("update entity Student set tot_credits = 31 where ID = 1");
    bind(s, upd);

    CrudStatement updkey = parse_dml("update entity Person set ID = 9 where ID = 1");
    CHECK_THROWS_AS(bind(s, updkey), Error);

    CrudStatement delsec = parse_dml(
        "delete entity Section where course_id = 1 and sec_id = 1 and semester = \"Fall\" and year = 2020");
    bind(s, delsec);
    CHECK(delsec.key_pred.size() == 4);

    CrudStatement delpartial = parse_dml("delete entity Section where sec_id = 1");
    CHECK_THROWS_AS(bind(s, delpartial), Error);

    CrudStatement delsub = parse_dml("delete entity Student where ID = 1");
    CHECK_THROWS_AS(bind(s, delsub), Error); // subclass target

    CrudStatement flo = parse_dml("insert entity Emp {emp_id: 1, salary: 10, hired: \"2020-01-01\"}");
    bind(fixtures::composite_schema(), flo);
    CHECK(flo.document.as_composite().at("salary").is_float()); // int literal coerced

    CrudStatement baddate = parse_dml("insert entity Emp {emp_id: 1, hired: \"soon\"}");
    CHECK_THROWS_AS(bind(fixtures::composite_schema(), baddate), Error);
}

TEST_CASE("classify and split statements") {
    CHECK(classify_statement("select p.ID from Person p") == "query");
    CHECK(classify_statement("CREATE entity X (a int key)") == "ddl");
    CHECK(classify_statement("insert entity X {a: 1}") == "dml");
    CHECK(classify_statement("purge entity X where a = 1") == "dml");
    CHECK_THROWS_AS(classify_statement("droptable x"), Error);

    auto parts = split_statements(
        "create entity A (x int key); -- c;omment\nselect a.x from A a;\n"
        "insert entity A {x: 1, s: \"se;mi\"};\n  \n");
    REQUIRE(parts.size() == 3);
    CHECK(parts[1].find("select") != std::string::npos);
    CHECK(parts[2].find("se;mi") != std::string::npos);
}

TEST_CASE("lexer never crashes on arbitrary input") {
    std::vector<std::string> junk = {
        "???", "select \x01 from", "\"unterminated", "1.2.3.4", "a..b", "!", "[{(",
        std::string(1000, '('), "select", "create entity", "1e",
    };
    for (const auto& text : junk) {
        CAPTURE(text);
        try {
            parse_query(text);
        } catch (const Error&) {
            // expected for junk; anything else (crash/other exception) fails
        }
        try {
            parse_ddl(text);
        } catch (const Error&) {
        }
        try {
            parse_dml(text);
        } catch (const Error&) {
        }
    }
}
