#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "erdb/dataset.hpp"
#include "erdb/json_util.hpp"
#include "support/fixtures.hpp"

using namespace erdb;

namespace {

Value doc(Value::Composite fields) { return Value{std::move(fields)}; }

} // namespace

TEST_CASE("entity conformance normalizes documents") {
    ErSchema s = fixtures::university_schema();

    SUBCASE("multi-valued attributes become sorted duplicate-free sets") {
        Value d = conform_entity_document(
            s, "Person",
            doc({{"ID", Value{1}},
                 {"Ph", Value{Value::Array{Value{"b"}, Value{"a"}, Value{"b"}}}}}));
        CHECK(d.canonical() == R"({"ID":1,"Ph":["a","b"]})");
    }

    SUBCASE("missing or absent multi-valued attributes normalize to []") {
        Value d1 = conform_entity_document(s, "Person", doc({{"ID", Value{1}}}));
        Value d2 = conform_entity_document(s, "Person", doc({{"ID", Value{1}}, {"Ph", Value{}}}));
        CHECK(d1.canonical() == R"({"ID":1,"Ph":[]})");
        CHECK(d1.canonical() == d2.canonical());
    }

    SUBCASE("absent optional scalars are dropped") {
        Value d = conform_entity_document(s, "Person", doc({{"ID", Value{1}}, {"name", Value{}}}));
        CHECK(d.canonical() == R"({"ID":1,"Ph":[]})");
    }

    SUBCASE("subclass documents accept inherited and own attributes") {
        Value d = conform_entity_document(
            s, "Student", doc({{"ID", Value{1}}, {"name", Value{"Ann"}}, {"tot_credits", Value{30}}}));
        CHECK(d.canonical() == R"({"ID":1,"Ph":[],"name":"Ann","tot_credits":30})");
    }

    SUBCASE("weak entities carry their owner key columns") {
        Value d = conform_entity_document(s, "Section",
                                          doc({{"course_id", Value{7}},
                                               {"sec_id", Value{1}},
                                               {"semester", Value{"Fall"}},
                                               {"year", Value{2020}}}));
        CHECK(document_key(s, "Section", d) ==
              std::vector<Value>{Value{7}, Value{1}, Value{"Fall"}, Value{2020}});
    }

    SUBCASE("violations are rejected") {
        CHECK_THROWS_WITH(conform_entity_document(s, "Person", doc({{"ID", Value{1}},
                                                                    {"nope", Value{2}}})),
                          doctest::Contains("no attribute 'nope'"));
        CHECK_THROWS_WITH(conform_entity_document(s, "Person", doc({{"name", Value{"x"}}})),
                          doctest::Contains("missing key"));
        CHECK_THROWS_WITH(conform_entity_document(s, "Person", doc({{"ID", Value{"x"}}})),
                          doctest::Contains("expected bigint"));
        CHECK_THROWS_WITH(conform_entity_document(s, "Person",
                                                  doc({{"ID", Value{1}}, {"Ph", Value{"x"}}})),
                          doctest::Contains("expected an array"));
        // superclass attributes flow down, never up
        CHECK_THROWS(conform_entity_document(s, "Person", doc({{"ID", Value{1}},
                                                               {"tot_credits", Value{3}}})));
    }
}

TEST_CASE("scalar coercion follows declared types") {
    ErSchema s = fixtures::composite_schema();

    SUBCASE("int literals widen to float attributes") {
        Value d = conform_entity_document(s, "Emp", doc({{"emp_id", Value{1}},
                                                         {"salary", Value{70000}}}));
        CHECK(d.as_composite().at("salary").is_float());
    }

    SUBCASE("dates must look like YYYY-MM-DD") {
        CHECK_NOTHROW(conform_entity_document(s, "Emp", doc({{"emp_id", Value{1}},
                                                             {"hired", Value{"2020-02-29"}}})));
        CHECK_THROWS_WITH(conform_entity_document(s, "Emp", doc({{"emp_id", Value{1}},
                                                                 {"hired", Value{"soon"}}})),
                          doctest::Contains("not a YYYY-MM-DD date"));
    }

    SUBCASE("nested composites conform recursively") {
        Value d = conform_entity_document(
            s, "Emp",
            doc({{"emp_id", Value{1}},
                 {"addr", doc({{"city", Value{"X"}},
                               {"tags", Value{Value::Array{Value{"b"}, Value{"a"}}}}})}}));
        CHECK(d.as_composite().at("addr").canonical() == R"({"city":"X","tags":["a","b"]})");
        CHECK_THROWS_WITH(conform_entity_document(
                              s, "Emp",
                              doc({{"emp_id", Value{1}}, {"addr", doc({{"zip", Value{1}}})}})),
                          doctest::Contains("unknown field 'zip'"));
    }
}

TEST_CASE("relationship instance conformance") {
    ErSchema s = fixtures::university_schema();

    RelationshipInstance good;
    good.role_keys = {{Value{1}}, {Value{2}, Value{1}, Value{"Fall"}, Value{2020}}};
    good.descriptive = doc({{"grade", Value{"A"}}});
    // instance-level conformance checks shape and types only; reference
    // existence is a dataset-level concern
    CHECK_NOTHROW(conform_relationship_instance(s, "takes", good));

    SUBCASE("key tuple arity must match the participant's key closure") {
        RelationshipInstance bad = good;
        bad.role_keys[1] = {Value{1}};
        // Section's key closure has four parts (course_id, sec_id, semester, year)
        CHECK_THROWS_WITH(conform_relationship_instance(s, "takes", bad),
                          doctest::Contains("4 value(s)"));
    }

    SUBCASE("unknown descriptive attributes are rejected") {
        RelationshipInstance bad = good;
        bad.descriptive = doc({{"mark", Value{"A"}}});
        CHECK_THROWS_WITH(conform_relationship_instance(s, "takes", bad),
                          doctest::Contains("unknown field 'mark'"));
    }
}

TEST_CASE("dataset conformance enforces structural invariants") {
    ErSchema s = fixtures::university_schema();

    SUBCASE("the hand-built dataset is valid and canonicalization is idempotent") {
        Dataset d = conform_dataset(s, fixtures::d0_dataset());
        CHECK(d.instance_count() == 6);
        CHECK(dataset_fingerprint(conform_dataset(s, d)) == dataset_fingerprint(d));
        // Ann's phone set came in unsorted; canonical form is sorted
        const Value& ann = d.entities.at("Student").front();
        CHECK(ann.as_composite().at("Ph").canonical() == R"(["555-1111","555-2222"])");
    }

    SUBCASE("keys are unique across a hierarchy, not just one class") {
        Dataset d = fixtures::d0_dataset();
        d.entities["Person"].push_back(doc({{"ID", Value{1}}})); // clashes with Student 1
        CHECK_THROWS_WITH(conform_dataset(s, d), doctest::Contains("duplicate key (1)"));
    }

    SUBCASE("relationships must reference existing instances of the right class") {
        Dataset d = fixtures::d0_dataset();
        RelationshipInstance dangling;
        dangling.role_keys = {{Value{9}}, {Value{1}}};
        d.relationships["advisor"].push_back(dangling);
        CHECK_THROWS_WITH(conform_dataset(s, d), doctest::Contains("missing Instructor"));

        Dataset d2 = fixtures::d0_dataset();
        RelationshipInstance wrong_class;
        wrong_class.role_keys = {{Value{1}}, {Value{1}}}; // 1 is a Student, not an Instructor
        d2.relationships["advisor"].push_back(wrong_class);
        CHECK_THROWS_WITH(conform_dataset(s, d2), doctest::Contains("not a 'Instructor'"));
    }

    SUBCASE("cardinality one bounds links per instance") {
        Dataset d = fixtures::d0_dataset();
        d.entities["Instructor"].push_back(doc({{"ID", Value{3}}}));
        RelationshipInstance second_advisor;
        second_advisor.role_keys = {{Value{3}}, {Value{1}}};
        d.relationships["advisor"].push_back(second_advisor);
        CHECK_THROWS_WITH(conform_dataset(s, d), doctest::Contains("more than once"));
    }

    SUBCASE("duplicate relationship instances are rejected") {
        Dataset d = fixtures::d0_dataset();
        d.relationships["takes"].push_back(d.relationships["takes"].front());
        CHECK_THROWS_WITH(conform_dataset(s, d), doctest::Contains("duplicate 'takes'"));
    }

    SUBCASE("weak instances need a live owner") {
        Dataset d = fixtures::d0_dataset();
        d.entities["Section"].push_back(doc({{"course_id", Value{99}},
                                             {"sec_id", Value{1}},
                                             {"semester", Value{"Fall"}},
                                             {"year", Value{2020}}}));
        CHECK_THROWS_WITH(conform_dataset(s, d), doctest::Contains("missing owner (99)"));
    }

    SUBCASE("identifying relationships stay implicit") {
        Dataset d = fixtures::d0_dataset();
        RelationshipInstance explicit_link;
        explicit_link.role_keys = {{Value{1}}, {Value{1}, Value{1}, Value{"Fall"}, Value{2020}}};
        d.relationships["sec_course"].push_back(explicit_link);
        CHECK_THROWS_WITH(conform_dataset(s, d), doctest::Contains("implicit"));
    }
}

TEST_CASE("canonical text and fingerprints identify datasets") {
    ErSchema s = fixtures::university_schema();
    Dataset d = conform_dataset(s, fixtures::d0_dataset());

    // Frozen regression value (hand-checked canonical text, hashed with the
    // vetted FNV-1a). Recompute only when the canonical dataset text format
    // itself changes, and expect downstream fingerprints to move with it.
    CHECK(dataset_canonical_text(d) ==
          "entity Course {\"course_id\":1,\"title\":\"Intro\"}\n"
          "entity Instructor {\"ID\":2,\"Ph\":[],\"city\":\"Seattle\",\"name\":\"Bo\","
          "\"rank\":\"Professor\"}\n"
          "entity Section {\"course_id\":1,\"sec_id\":1,\"semester\":\"Fall\",\"year\":2020}\n"
          "entity Student {\"ID\":1,\"Ph\":[\"555-1111\",\"555-2222\"],"
          "\"city\":\"College Park\",\"name\":\"Ann\",\"tot_credits\":30}\n"
          "rel advisor (2)(1) {}\n"
          "rel takes (1)(1,1,\"Fall\",2020) {\"grade\":\"A\"}\n");
    CHECK(dataset_fingerprint(d) == "df23e14f0ce09888");

    // insertion order must not matter
    Dataset shuffled = fixtures::d0_dataset();
    std::reverse(shuffled.entities["Student"].begin(), shuffled.entities["Student"].end());
    CHECK(dataset_fingerprint(conform_dataset(s, shuffled)) == dataset_fingerprint(d));

    // any value change must show up
    Dataset tweaked = fixtures::d0_dataset();
    tweaked.entities["Course"].front().as_composite()["title"] = Value{"Intro II"};
    CHECK(dataset_fingerprint(conform_dataset(s, tweaked)) != dataset_fingerprint(d));
}

TEST_CASE("JSONL round-trips a dataset exactly") {
    ErSchema s = fixtures::university_schema();
    Dataset d = conform_dataset(s, fixtures::d0_dataset());

    std::string text = dataset_to_jsonl(d);
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    CHECK(text.find(R"("kind":"entity")") != std::string::npos);
    CHECK(text.find(R"("kind":"relationship")") != std::string::npos);

    Dataset back = dataset_from_jsonl(text, s);
    CHECK(dataset_canonical_text(back) == dataset_canonical_text(d));

    CHECK_THROWS_WITH(dataset_from_jsonl("{\"kind\":\"nope\"}\n", s),
                      doctest::Contains("unknown record kind"));
    CHECK_THROWS_WITH(dataset_from_jsonl("not json\n", s), doctest::Contains("line 1"));
}

TEST_CASE("JSON value conversion is lossless") {
    Value v{Value::Composite{
        {"a", Value{Value::Array{Value{1}, Value{2.5}, Value{true}, Value{"x"}}}},
        {"b", Value{}},
        {"c", Value{Value::Composite{{"d", Value{-3}}}}},
    }};
    Value back = json_to_value(value_to_json(v));
    CHECK(back.compare(v) == 0);
    CHECK(value_to_json(v).dump() == R"({"a":[1,2.5,true,"x"],"b":null,"c":{"d":-3}})");
}

TEST_CASE("generated datasets are deterministic and valid") {
    for (const ErSchema& s : {fixtures::university_schema(), fixtures::synthetic_schema(),
                              fixtures::composite_schema()}) {
        for (uint64_t seed : {1ULL, 7ULL}) {
            DatasetGenSpec spec;
            spec.seed = seed;
            spec.scale = 60;
            Dataset a = generate_dataset(s, spec);
            Dataset b = generate_dataset(s, spec);
            CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));
            CHECK_NOTHROW(conform_dataset(s, a)); // generator output is already valid
            CHECK(a.instance_count() > 0);
        }
        DatasetGenSpec s1{.seed = 1, .scale = 60};
        DatasetGenSpec s2{.seed = 2, .scale = 60};
        CHECK(dataset_fingerprint(generate_dataset(s, s1)) !=
              dataset_fingerprint(generate_dataset(s, s2)));
    }
}

TEST_CASE("generation populates every corner of the schema") {
    ErSchema s = fixtures::university_schema();
    DatasetGenSpec spec;
    spec.scale = 100;
    spec.weak_per_owner["Section"] = 2.0;
    spec.rel_fanout["takes"] = 1.5;
    Dataset d = generate_dataset(s, spec);

    // every concrete class got instances, roughly evenly
    for (const char* cls : {"Person", "Instructor", "Student", "Course"}) {
        INFO(cls);
        CHECK(d.entities.at(cls).size() >= 15);
        CHECK(d.entities.at(cls).size() <= 40);
    }
    CHECK(d.entities.at("Section").size() >= d.entities.at("Course").size());
    CHECK(d.relationships.at("takes").size() >= 10);
    CHECK(d.relationships.at("advisor").size() >= 3);
    CHECK(d.relationships.count("sec_course") == 0); // identifying, stays implicit

    // weights steer the class mix
    DatasetGenSpec skew;
    skew.scale = 100;
    skew.class_weights = {{"Person", 0.0}, {"Instructor", 1.0}, {"Student", 8.0}, {"Course", 1.0}};
    Dataset skewed = generate_dataset(s, skew);
    CHECK(skewed.entities.count("Person") == 0);
    CHECK(skewed.entities.at("Student").size() > 4 * skewed.entities.at("Instructor").size());
}

TEST_CASE("weak-of-weak generation orders owners first") {
    // extend the synthetic schema with a dependent of a dependent
    ErSchema s = fixtures::synthetic_schema();
    EntitySetDef s3;
    s3.name = "S3";
    s3.weak_owner = WeakOwnerInfo{"S1", "own_s3"};
    s3.attributes = {AttributeDef::make_scalar("s3_no", ScalarType::Int, true)};
    s.entities[s3.name] = s3;
    RelationshipDef own3;
    own3.name = "own_s3";
    own3.participants = {
        {"S1", "S1", Cardinality::One, Participation::Partial},
        {"S3", "S3", Cardinality::Many, Participation::Total},
    };
    s.relationships[own3.name] = own3;
    REQUIRE(validate_schema(s).ok());

    DatasetGenSpec spec;
    spec.scale = 40;
    Dataset d = generate_dataset(s, spec);
    CHECK(d.entities.at("S3").size() >= d.entities.at("S1").size() / 2);
    CHECK(document_key(s, "S3", d.entities.at("S3").front()).size() == 3);
}
