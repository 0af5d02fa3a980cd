#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "erdb/er_model.hpp"
#include "support/fixtures.hpp"

using namespace erdb;

TEST_CASE("university schema validates cleanly") {
    ErSchema s = fixtures::university_schema();
    ValidationReport r = validate_schema(s);
    INFO(r.to_string());
    CHECK(r.ok());
    CHECK(r.diagnostics.empty());
}

TEST_CASE("synthetic and composite schemas validate cleanly") {
    for (auto s : {fixtures::synthetic_schema(), fixtures::composite_schema()}) {
        ValidationReport r = validate_schema(s);
        INFO(r.to_string());
        CHECK(r.ok());
    }
}

TEST_CASE("missing key is reported") {
    ErSchema s;
    EntitySetDef e;
    e.name = "Thing";
    e.attributes = {AttributeDef::make_scalar("x", ScalarType::Int)};
    s.entities[e.name] = e;
    ValidationReport r = validate_schema(s);
    REQUIRE(r.error_count() == 1);
    CHECK(r.diagnostics[0].message.find("missing key") != std::string::npos);
}

TEST_CASE("inheritance cycle is reported") {
    ErSchema s;
    for (auto [name, super] : {std::pair{"A", "B"}, {"B", "A"}}) {
        EntitySetDef e;
        e.name = name;
        e.superclass = super;
        s.entities[e.name] = e;
    }
    ValidationReport r = validate_schema(s);
    CHECK_FALSE(r.ok());
    bool found = false;
    for (const auto& d : r.diagnostics)
        found = found || d.message.find("inheritance cycle") != std::string::npos;
    CHECK(found);
}

TEST_CASE("subclass key and shadowing are rejected") {
    ErSchema s = fixtures::university_schema();
    s.entities["Student"].attributes.push_back(
        AttributeDef::make_scalar("extra", ScalarType::Int, true));
    s.entities["Student"].attributes.push_back(AttributeDef::make_scalar("name", ScalarType::Text));
    ValidationReport r = validate_schema(s);
    REQUIRE(r.error_count() == 2);
    CHECK(r.diagnostics[0].message.find("keys belong to the hierarchy root") != std::string::npos);
    CHECK(r.diagnostics[1].message.find("shadows") != std::string::npos);
}

TEST_CASE("weak entity constraints") {
    ErSchema s = fixtures::university_schema();

    SUBCASE("owner side must be cardinality one") {
        s.relationships["sec_course"].participants[0].cardinality = Cardinality::Many;
        ValidationReport r = validate_schema(s);
        CHECK_FALSE(r.ok());
        CHECK(r.diagnostics[0].message.find("cardinality one") != std::string::npos);
    }
    SUBCASE("weak side must be total") {
        s.relationships["sec_course"].participants[1].participation = Participation::Partial;
        ValidationReport r = validate_schema(s);
        CHECK_FALSE(r.ok());
        CHECK(r.diagnostics[0].message.find("totally") != std::string::npos);
    }
    SUBCASE("discriminator required") {
        for (auto& a : s.entities["Section"].attributes) a.is_key = false;
        ValidationReport r = validate_schema(s);
        CHECK_FALSE(r.ok());
        CHECK(r.diagnostics[0].message.find("discriminator") != std::string::npos);
    }
    SUBCASE("identifying relationship must connect weak entity and owner") {
        s.entities["Section"].weak_owner->identifying_relationship = "advisor";
        ValidationReport r = validate_schema(s);
        CHECK_FALSE(r.ok());
    }
}

TEST_CASE("relationship diagnostics") {
    ErSchema s = fixtures::university_schema();
    SUBCASE("unknown participant") {
        s.relationships["advisor"].participants[0].entity = "Nobody";
        CHECK_FALSE(validate_schema(s).ok());
    }
    SUBCASE("duplicate role") {
        s.relationships["takes"].participants[1].role = "Student";
        CHECK_FALSE(validate_schema(s).ok());
    }
    SUBCASE("name collision with entity") {
        RelationshipDef r;
        r.name = "Person";
        r.participants = {{"Course", "Course", Cardinality::One, Participation::Partial},
                          {"Student", "Student", Cardinality::Many, Participation::Partial}};
        s.relationships[r.name] = r;
        CHECK_FALSE(validate_schema(s).ok());
    }
}

TEST_CASE("attribute structure diagnostics") {
    ErSchema s;
    EntitySetDef e;
    e.name = "E";
    e.attributes = {
        AttributeDef::make_scalar("id", ScalarType::BigInt, true),
        AttributeDef::make_composite("empty", {}),
        AttributeDef::make_multi("bad",
                                 AttributeDef::make_multi("inner",
                                                          AttributeDef::make_scalar(
                                                              "v", ScalarType::Int))),
    };
    s.entities[e.name] = e;
    ValidationReport r = validate_schema(s);
    CHECK(r.error_count() == 2);
}

TEST_CASE("hierarchy navigation") {
    ErSchema s = fixtures::synthetic_schema();
    CHECK(s.root_of("R3").name == "R");
    CHECK(s.chain_of("R3") == std::vector<std::string>{"R", "R1", "R3"});
    CHECK(s.subtree_of("R") == std::vector<std::string>{"R", "R1", "R3", "R2", "R4"});
    CHECK(s.direct_subclasses("R") == std::vector<std::string>{"R1", "R2"});
    CHECK(s.is_subclass_of("R4", "R"));
    CHECK(s.is_subclass_of("R4", "R2"));
    CHECK_FALSE(s.is_subclass_of("R4", "R1"));
    CHECK(s.is_subclass_of("R", "R"));

    std::string decl;
    const AttributeDef* a = s.find_attribute("R3", "r_a", &decl);
    REQUIRE(a != nullptr);
    CHECK(decl == "R");
    CHECK(s.find_attribute("R", "r3_a") == nullptr); // inheritance looks up, not down
}

TEST_CASE("key closures") {
    ErSchema uni = fixtures::university_schema();

    auto closure = key_closure(uni, "Section");
    REQUIRE(closure.size() == 4);
    CHECK(closure[0] == KeyPart{"Course", "course_id"});
    CHECK(closure[1] == KeyPart{"Section", "sec_id"});
    CHECK(closure[2] == KeyPart{"Section", "semester"});
    CHECK(closure[3] == KeyPart{"Section", "year"});

    CHECK(key_closure(uni, "Student") == std::vector<KeyPart>{{"Person", "ID"}});
    CHECK(key_closure(uni, "Course") == std::vector<KeyPart>{{"Course", "course_id"}});
    CHECK(key_closure(uni, "Person") == std::vector<KeyPart>{{"Person", "ID"}});

    ErSchema syn = fixtures::synthetic_schema();
    CHECK(key_closure(syn, "S1") ==
          std::vector<KeyPart>{{"S", "s_id"}, {"S1", "s1_no"}});
    CHECK(key_closure(syn, "R4") == std::vector<KeyPart>{{"R", "r_id"}});
}

TEST_CASE("schema fingerprint is stable and sensitive") {
    ErSchema a = fixtures::university_schema();
    ErSchema b = fixtures::university_schema();
    CHECK(a.fingerprint() == b.fingerprint());
    b.entities["Person"].attributes.push_back(AttributeDef::make_scalar("x", ScalarType::Int));
    CHECK(a.fingerprint() != b.fingerprint());
    CHECK(a.fingerprint().size() == 16);
}
