#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "erdb/mapping.hpp"
#include "support/fixtures.hpp"

using namespace erdb;

namespace {

std::vector<std::string> fragment_names(const Mapping& m) {
    std::vector<std::string> out;
    for (const auto& f : m.fragments) out.push_back(f.name);
    return out;
}

std::vector<std::string> column_names(const std::vector<Column>& cols) {
    std::vector<std::string> out;
    for (const auto& c : cols) out.push_back(c.name);
    return out;
}

bool has_violation(const ValidityReport& rep, ValidityViolation::Rule rule,
                   const std::string& needle) {
    for (const auto& v : rep.violations)
        if (v.rule == rule && v.detail.find(needle) != std::string::npos) return true;
    return false;
}

/// Name-insensitive structural equality.
bool same_design(Mapping a, Mapping b) {
    a.name.clear();
    b.name.clear();
    return serialize_mapping(a) == serialize_mapping(b);
}

} // namespace

TEST_CASE("normalized design of the university schema") {
    ErSchema s = fixtures::university_schema();
    Mapping m = generate_normalized(s);

    CHECK(m.schema_fingerprint == s.fingerprint());
    CHECK(fragment_names(m) == std::vector<std::string>{"course", "person", "instructor",
                                                        "student", "section", "takes", "teaches",
                                                        "person_ph"});

    const Fragment& person = *m.find_fragment("person");
    CHECK(person.kind == Fragment::Kind::EntityRows);
    CHECK(person.layout == Layout::Flat);
    CHECK(person.anchor == "Person");
    CHECK_FALSE(person.exact);
    CHECK(person.type_column); // the family has subclasses
    CHECK(column_names(person.columns) ==
          std::vector<std::string>{"Person_ID", "type", "Person_name", "Person_city"});
    CHECK(person.key_column_names() == std::vector<std::string>{"Person_ID"});
    CHECK(person.find_column("type")->type.is_scalar());

    // subclass fragments share the root key and carry only their own attributes
    const Fragment& instructor = *m.find_fragment("instructor");
    CHECK_FALSE(instructor.type_column);
    CHECK(column_names(instructor.columns) ==
          std::vector<std::string>{"Person_ID", "Instructor_rank"});
    const Fragment& student = *m.find_fragment("student");
    CHECK(column_names(student.columns) ==
          std::vector<std::string>{"Person_ID", "Student_tot_credits", "Instructor_ID"});
    REQUIRE(student.folded_fks.size() == 1); // many-to-one advisor folds onto the many side
    CHECK(student.folded_fks[0].relationship == "advisor");
    CHECK(student.folded_fks[0].fk_role == "Instructor");
    CHECK(student.folded_fks[0].host_role == "Student");

    // the weak entity's key closure starts with the owner's key
    const Fragment& section = *m.find_fragment("section");
    CHECK(column_names(section.columns) ==
          std::vector<std::string>{"Course_course_id", "Section_sec_id", "Section_semester",
                                   "Section_year"});
    CHECK(section.key_column_names().size() == 4);

    // many-to-many relationship rows: role-prefixed key closures + descriptive attrs
    const Fragment& takes = *m.find_fragment("takes");
    CHECK(takes.kind == Fragment::Kind::RelationshipRows);
    CHECK(takes.relationship == "takes");
    CHECK(column_names(takes.columns) ==
          std::vector<std::string>{"Student_ID", "Section_course_id", "Section_sec_id",
                                   "Section_semester", "Section_year", "takes_grade"});
    CHECK(takes.key_column_names().size() == 5);
    CHECK_FALSE(takes.find_column("takes_grade")->key);

    // multi-valued attribute exploded into owner-key x element rows, all key
    const Fragment& ph = *m.find_fragment("person_ph");
    CHECK(ph.kind == Fragment::Kind::MultiValueRows);
    CHECK(ph.mv_node == "attr:Person.Ph");
    CHECK(column_names(ph.columns) == std::vector<std::string>{"Person_ID", "Person_Ph"});
    CHECK(ph.key_column_names().size() == 2);

    ErGraph g = build_graph(s);
    ValidityReport rep = check_cover(s, g, m);
    CHECK(rep.ok());
    CHECK(rep.warnings.empty());
}

TEST_CASE("normalized design of composite attributes") {
    ErSchema s = fixtures::composite_schema();
    Mapping m = generate_normalized(s);

    CHECK(fragment_names(m) ==
          std::vector<std::string>{"dept", "emp", "emp_addr_tags", "emp_phones"});
    // composite attrs flatten to path-named columns; multi-valued parts leave
    const Fragment& emp = *m.find_fragment("emp");
    CHECK(column_names(emp.columns) ==
          std::vector<std::string>{"Emp_emp_id", "Emp_name", "Emp_addr_street", "Emp_addr_city",
                                   "Emp_salary", "Emp_active", "Emp_hired", "Dept_dept_id"});
    // array of composites explodes to one row per element, fields flattened
    const Fragment& phones = *m.find_fragment("emp_phones");
    CHECK(column_names(phones.columns) ==
          std::vector<std::string>{"Emp_emp_id", "Emp_phones_kind", "Emp_phones_num"});
    // multi-valued attr nested inside a composite gets its own fragment too
    const Fragment& tags = *m.find_fragment("emp_addr_tags");
    CHECK(column_names(tags.columns) == std::vector<std::string>{"Emp_emp_id", "Emp_addr_tags"});

    CHECK(check_cover(s, build_graph(s), m).ok());
}

TEST_CASE("nested design variants") {
    ErSchema s = fixtures::university_schema();

    SUBCASE("all options off reproduces the normalized design") {
        CHECK(same_design(generate_nested(s, {}), generate_normalized(s)));
    }

    SUBCASE("arrays and embedded weak entities") {
        NestedOptions opts;
        opts.arrays_for_multivalued = true;
        opts.fold_weak_into_owner = {"Section"};
        Mapping m = generate_nested(s, opts);

        CHECK(fragment_names(m) == std::vector<std::string>{"course", "person", "instructor",
                                                            "student", "takes", "teaches"});
        const Fragment& person = *m.find_fragment("person");
        CHECK(person.layout == Layout::Nested);
        CHECK(column_names(person.columns) ==
              std::vector<std::string>{"Person_ID", "type", "Person_name", "Person_city",
                                       "Person_Ph"});
        CHECK(person.find_column("Person_Ph")->type.is_array());

        const Fragment& course = *m.find_fragment("course");
        CHECK(column_names(course.columns) ==
              std::vector<std::string>{"Course_course_id", "Course_title", "section"});
        const Column* sec = course.find_column("section");
        REQUIRE(sec != nullptr);
        REQUIRE(sec->type.is_array());
        // each element carries the weak entity's discriminators
        std::vector<std::string> fields;
        for (const auto& [fname, ftype] : sec->type.element().fields) fields.push_back(fname);
        CHECK(fields == std::vector<std::string>{"sec_id", "semester", "year"});

        ErGraph g = build_graph(s);
        ValidityReport rep = check_cover(s, g, m);
        CHECK(rep.ok());
        // other relationships now reach Section only through the embedding
        REQUIRE(rep.warnings.size() == 2);
        CHECK(rep.warnings[0] ==
              "queries joining 'takes' must unnest 'Section' out of fragment 'course'");
        CHECK(rep.warnings[1] ==
              "queries joining 'teaches' must unnest 'Section' out of fragment 'course'");
    }

    SUBCASE("folded hierarchy") {
        NestedOptions opts;
        opts.fold_hierarchy = true;
        Mapping m = generate_nested(s, opts);
        CHECK(same_design(m, generate_hierarchy_variant(s, "Person",
                                                        HierarchyStrategy::SingleTable)));
    }
}

TEST_CASE("hierarchy storage variants") {
    ErSchema s = fixtures::university_schema();

    SUBCASE("single table") {
        Mapping m = generate_hierarchy_variant(s, "Person", HierarchyStrategy::SingleTable);
        CHECK(fragment_names(m) == std::vector<std::string>{"course", "person", "section",
                                                            "takes", "teaches", "person_ph"});
        const Fragment& person = *m.find_fragment("person");
        CHECK(person.type_column);
        CHECK(column_names(person.columns) ==
              std::vector<std::string>{"Person_ID", "type", "Person_name", "Person_city",
                                       "Instructor_rank", "Student_tot_credits", "Instructor_ID"});
        CHECK(check_cover(s, build_graph(s), m).ok());
    }

    SUBCASE("disjoint partition") {
        Mapping m = generate_hierarchy_variant(s, "Person", HierarchyStrategy::Disjoint);
        CHECK(fragment_names(m) ==
              std::vector<std::string>{"course", "person_only", "instructor_full", "student_full",
                                       "section", "takes", "teaches", "person_ph"});
        const Fragment& only = *m.find_fragment("person_only");
        CHECK(only.exact);
        CHECK_FALSE(only.type_column); // membership is exact, no discriminator needed
        CHECK(column_names(only.columns) ==
              std::vector<std::string>{"Person_ID", "Person_name", "Person_city"});
        const Fragment& full = *m.find_fragment("student_full");
        CHECK(full.exact);
        CHECK(full.anchor == "Student");
        CHECK(column_names(full.columns) ==
              std::vector<std::string>{"Person_ID", "Person_name", "Person_city",
                                       "Student_tot_credits", "Instructor_ID"});
        CHECK(check_cover(s, build_graph(s), m).ok());
    }

    SUBCASE("class per subclass reproduces the normalized design") {
        CHECK(same_design(generate_hierarchy_variant(s, "Person",
                                                     HierarchyStrategy::ClassPerSubclass),
                          generate_normalized(s)));
    }

    SUBCASE("rejects entities without subclasses") {
        CHECK_THROWS_WITH(generate_hierarchy_variant(s, "Course", HierarchyStrategy::SingleTable),
                          "'Course' has no subclasses");
    }
}

TEST_CASE("factorized relationship storage") {
    ErSchema s = fixtures::university_schema();
    Mapping m = generate_factorized(s, "takes");

    CHECK(fragment_names(m) == std::vector<std::string>{"course", "person", "instructor",
                                                        "fact_takes", "teaches", "person_ph"});
    const Fragment& fact = *m.find_fragment("fact_takes");
    CHECK(fact.kind == Fragment::Kind::FactorizedRows);
    CHECK(fact.layout == Layout::Factorized);
    CHECK(fact.factorized.relationship == "takes");
    CHECK(fact.factorized.left == "Student");
    CHECK(fact.factorized.right == "Section");
    // left group absorbs the student rows, including the folded advisor key;
    // right group absorbs the section rows; edges carry the pairs + attrs
    CHECK(column_names(fact.left_columns) ==
          std::vector<std::string>{"Person_ID", "Student_tot_credits", "Instructor_ID"});
    CHECK(column_names(fact.right_columns) ==
          std::vector<std::string>{"Course_course_id", "Section_sec_id", "Section_semester",
                                   "Section_year"});
    CHECK(column_names(fact.edge_columns) ==
          std::vector<std::string>{"Student_ID", "Section_course_id", "Section_sec_id",
                                   "Section_semester", "Section_year", "takes_grade"});
    CHECK(check_cover(s, build_graph(s), m).ok());

    SUBCASE("only many-to-many relationships qualify") {
        CHECK_THROWS_WITH(generate_factorized(s, "advisor"),
                          "'advisor' folds into its many side; only many-to-many relationships "
                          "can be factorized");
        CHECK_THROWS_WITH(generate_factorized(s, "sec_course"),
                          "identifying relationship 'sec_course' cannot be factorized");
        CHECK_THROWS_WITH(generate_factorized(s, "nope"), "unknown relationship 'nope'");
    }
}

TEST_CASE("validity checking catches broken designs") {
    ErSchema s = fixtures::university_schema();
    ErGraph g = build_graph(s);

    SUBCASE("coverage: dropping the multi-valued fragment") {
        Mapping m = generate_normalized(s);
        REQUIRE(m.fragments.back().name == "person_ph");
        m.fragments.pop_back();
        ValidityReport rep = check_cover(s, g, m);
        CHECK_FALSE(rep.ok());
        CHECK(has_violation(rep, ValidityViolation::Rule::Coverage, "Person.Ph uncovered"));
        CHECK(rep.to_string() == "coverage: Person.Ph uncovered\n");
    }

    SUBCASE("connectivity: a fragment spanning unrelated attributes") {
        Mapping m = generate_normalized(s);
        Fragment bad;
        bad.name = "bad";
        bad.kind = Fragment::Kind::EntityRows;
        bad.anchor = "Student";
        bad.nodes = {"entity:Student", "attr:Student.tot_credits", "attr:Course.title"};
        m.fragments.push_back(bad);
        derive_columns(s, m);
        ValidityReport rep = check_cover(s, g, m);
        CHECK(has_violation(rep, ValidityViolation::Rule::Connectivity,
                            "fragment 'bad' is not a connected subgraph"));
    }

    SUBCASE("reversibility: single table without a discriminator") {
        Mapping m = generate_hierarchy_variant(s, "Person", HierarchyStrategy::SingleTable);
        for (auto& f : m.fragments)
            if (f.name == "person") f.type_column = false;
        derive_columns(s, m);
        ValidityReport rep = check_cover(s, g, m);
        CHECK(has_violation(rep, ValidityViolation::Rule::Reversibility,
                            "hierarchy 'Person': concrete classes are not derivable"));
    }

    SUBCASE("reversibility: a fragment missing its key closure") {
        Mapping m = generate_normalized(s);
        for (auto& f : m.fragments)
            if (f.name == "student") {
                f.nodes.erase("attr:Person.ID");
                f.columns.erase(f.columns.begin()); // drop Person_ID
            }
        ValidityReport rep = check_cover(s, g, m);
        CHECK(has_violation(rep, ValidityViolation::Rule::Reversibility,
                            "fragment 'student' stores 'Student' attributes but lacks key column "
                            "'Person_ID'"));
    }

    SUBCASE("crud: dropping an entity's row fragment") {
        Mapping m = generate_normalized(s);
        m.fragments.erase(m.fragments.begin()); // course
        ValidityReport rep = check_cover(s, g, m);
        CHECK(has_violation(rep, ValidityViolation::Rule::Crud,
                            "entity 'Course' has no write target"));
        CHECK(has_violation(rep, ValidityViolation::Rule::Coverage, "Course.title uncovered"));
    }

    SUBCASE("crud: dropping a relationship fragment") {
        Mapping m = generate_normalized(s);
        std::erase_if(m.fragments, [](const Fragment& f) { return f.name == "teaches"; });
        ValidityReport rep = check_cover(s, g, m);
        CHECK(has_violation(rep, ValidityViolation::Rule::Crud,
                            "relationship 'teaches' has no write target"));
    }

    SUBCASE("unknown nodes are rejected outright") {
        Mapping m = generate_normalized(s);
        m.fragments[0].nodes.insert("attr:Course.bogus");
        CHECK_THROWS_WITH(check_cover(s, g, m),
                          "fragment 'course' references unknown node 'attr:Course.bogus'");
    }
}

TEST_CASE("design enumeration") {
    ErSchema uni = fixtures::university_schema();
    ErSchema syn = fixtures::synthetic_schema();
    ErSchema comp = fixtures::composite_schema();

    SUBCASE("full lattices, deduplicated and validity-checked") {
        ErGraph g = build_graph(syn);
        auto designs = enumerate_mappings(syn, 100000);
        CHECK(designs.size() == 112);
        for (const auto& d : designs) CHECK(check_cover(syn, g, d).ok());
        // structurally distinct
        std::set<std::string> texts;
        for (auto d : designs) {
            d.name.clear();
            texts.insert(serialize_mapping(d));
        }
        CHECK(texts.size() == designs.size());

        CHECK(enumerate_mappings(uni, 100000).size() == 16);
        CHECK(enumerate_mappings(comp, 100000).size() == 4);
    }

    SUBCASE("budget truncation and determinism") {
        auto six = enumerate_mappings(syn, 6);
        REQUIRE(six.size() == 6);
        auto again = enumerate_mappings(syn, 6);
        for (size_t i = 0; i < six.size(); ++i) {
            CHECK(six[i].name == "design_" + std::to_string(i));
            CHECK(six[i] == again[i]);
        }
    }

    SUBCASE("the normalized design is always in the lattice") {
        auto designs = enumerate_mappings(uni, 100000);
        Mapping normalized = generate_normalized(uni);
        bool found = false;
        for (const auto& d : designs)
            if (same_design(d, normalized)) found = true;
        CHECK(found);
    }

    SUBCASE("a schema with no design choices yields exactly one mapping") {
        ErSchema tiny;
        EntitySetDef e;
        e.name = "Thing";
        e.attributes = {AttributeDef::make_scalar("id", ScalarType::Int, true),
                        AttributeDef::make_scalar("label", ScalarType::Text)};
        tiny.entities["Thing"] = e;
        auto designs = enumerate_mappings(tiny, 100000);
        REQUIRE(designs.size() == 1);
        CHECK(same_design(designs[0], generate_normalized(tiny)));
    }
}

TEST_CASE("mapping documents round-trip") {
    ErSchema s = fixtures::university_schema();

    SUBCASE("serialize and deserialize all generator outputs") {
        NestedOptions opts;
        opts.arrays_for_multivalued = true;
        opts.fold_weak_into_owner = {"Section"};
        for (const auto& m :
             {generate_normalized(s), generate_nested(s, opts),
              generate_hierarchy_variant(s, "Person", HierarchyStrategy::Disjoint),
              generate_factorized(s, "takes")}) {
            Mapping back = deserialize_mapping(serialize_mapping(m), s);
            CHECK(back == m);
        }
    }

    SUBCASE("documents are pinned to the schema they were built for") {
        ErSchema other = fixtures::synthetic_schema();
        std::string doc = serialize_mapping(generate_normalized(s));
        CHECK_THROWS_WITH_AS(deserialize_mapping(doc, other),
                             doctest::Contains("schema mismatch"), Error);
    }

    SUBCASE("malformed documents are rejected") {
        CHECK_THROWS_WITH_AS(deserialize_mapping("not json", s),
                             doctest::Contains("malformed mapping document"), Error);
        CHECK_THROWS_WITH_AS(deserialize_mapping("{\"name\": \"x\"}", s),
                             doctest::Contains("malformed mapping document"), Error);
    }

    SUBCASE("a hand-edited document that loses a fragment fails validation") {
        Mapping m = deserialize_mapping(serialize_mapping(generate_normalized(s)), s);
        std::erase_if(m.fragments, [](const Fragment& f) { return f.name == "person_ph"; });
        ValidityReport rep = check_cover(s, build_graph(s), m);
        CHECK(has_violation(rep, ValidityViolation::Rule::Coverage, "Person.Ph uncovered"));
    }
}

TEST_CASE("design constraints are enforced") {
    ErSchema syn = fixtures::synthetic_schema();

    // factorizing a relationship consumes its participants' fragments
    Mapping m = generate_factorized(syn, "rel_r2s1");
    CHECK(m.find_fragment("fact_rel_r2s1") != nullptr);
    CHECK(m.find_fragment("r2") == nullptr);
    CHECK(m.find_fragment("s1") == nullptr);
    const Fragment& fact = *m.find_fragment("fact_rel_r2s1");
    CHECK(column_names(fact.left_columns) == std::vector<std::string>{"R_r_id", "R2_r2_a"});
    CHECK(column_names(fact.right_columns) ==
          std::vector<std::string>{"S_s_id", "S1_s1_no", "S1_s1_a"});
    CHECK(check_cover(syn, build_graph(syn), m).ok());

    // the weak entity S1 still gets CRUD through the factorized right group,
    // and its identifying relationship needs no separate fragment
    CHECK(m.find_fragment("own_s1") == nullptr);
}
