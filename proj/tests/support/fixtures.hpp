#pragma once

// Shared schemas and datasets used across the test suite. Kept in one place
// so every suite exercises the exact same definitions.

#include "erdb/dataset.hpp"
#include "erdb/er_model.hpp"

namespace erdb::fixtures {

/// A small university schema: Person hierarchy (Instructor, Student),
/// Course with weak Section, advisor / takes / teaches / sec_course
/// relationships, one multi-valued attribute (Person.Ph).
inline ErSchema university_schema() {
    ErSchema s;

    EntitySetDef person;
    person.name = "Person";
    person.attributes = {
        AttributeDef::make_scalar("ID", ScalarType::BigInt, true),
        AttributeDef::make_scalar("name", ScalarType::Text),
        AttributeDef::make_scalar("city", ScalarType::Text),
        AttributeDef::make_multi("Ph", AttributeDef::make_scalar("v", ScalarType::Text)),
    };
    s.entities[person.name] = person;

    EntitySetDef instructor;
    instructor.name = "Instructor";
    instructor.superclass = "Person";
    instructor.specialization = SpecializationInfo{true, false};
    instructor.attributes = {AttributeDef::make_scalar("rank", ScalarType::Text)};
    s.entities[instructor.name] = instructor;

    EntitySetDef student;
    student.name = "Student";
    student.superclass = "Person";
    student.specialization = SpecializationInfo{true, false};
    student.attributes = {AttributeDef::make_scalar("tot_credits", ScalarType::Int)};
    s.entities[student.name] = student;

    EntitySetDef course;
    course.name = "Course";
    course.attributes = {
        AttributeDef::make_scalar("course_id", ScalarType::BigInt, true),
        AttributeDef::make_scalar("title", ScalarType::Text),
    };
    s.entities[course.name] = course;

    EntitySetDef section;
    section.name = "Section";
    section.weak_owner = WeakOwnerInfo{"Course", "sec_course"};
    section.attributes = {
        AttributeDef::make_scalar("sec_id", ScalarType::Int, true),
        AttributeDef::make_scalar("semester", ScalarType::Text, true),
        AttributeDef::make_scalar("year", ScalarType::Int, true),
    };
    s.entities[section.name] = section;

    RelationshipDef sec_course;
    sec_course.name = "sec_course";
    sec_course.participants = {
        {"Course", "Course", Cardinality::One, Participation::Partial},
        {"Section", "Section", Cardinality::Many, Participation::Total},
    };
    s.relationships[sec_course.name] = sec_course;

    RelationshipDef advisor;
    advisor.name = "advisor";
    advisor.participants = {
        {"Instructor", "Instructor", Cardinality::One, Participation::Partial},
        {"Student", "Student", Cardinality::Many, Participation::Partial},
    };
    s.relationships[advisor.name] = advisor;

    RelationshipDef takes;
    takes.name = "takes";
    takes.participants = {
        {"Student", "Student", Cardinality::Many, Participation::Partial},
        {"Section", "Section", Cardinality::Many, Participation::Partial},
    };
    takes.attributes = {AttributeDef::make_scalar("grade", ScalarType::Text)};
    s.relationships[takes.name] = takes;

    RelationshipDef teaches;
    teaches.name = "teaches";
    teaches.participants = {
        {"Instructor", "Instructor", Cardinality::Many, Participation::Partial},
        {"Section", "Section", Cardinality::Many, Participation::Partial},
    };
    s.relationships[teaches.name] = teaches;

    return s;
}

/// Synthetic benchmark schema: a four-subclass hierarchy under R with three
/// multi-valued attributes, S with two weak dependents, one many-to-many
/// relationship crossing the families and one one-to-many inside R's family.
inline ErSchema synthetic_schema() {
    ErSchema s;

    EntitySetDef r;
    r.name = "R";
    r.attributes = {
        AttributeDef::make_scalar("r_id", ScalarType::BigInt, true),
        AttributeDef::make_scalar("r_a", ScalarType::Int),
        AttributeDef::make_multi("r_mv1", AttributeDef::make_scalar("v", ScalarType::Text)),
        AttributeDef::make_multi("r_mv2", AttributeDef::make_scalar("v", ScalarType::Text)),
        AttributeDef::make_multi("r_mv3", AttributeDef::make_scalar("v", ScalarType::Text)),
    };
    s.entities[r.name] = r;

    auto subclass = [](std::string name, std::string super, std::string attr) {
        EntitySetDef e;
        e.name = std::move(name);
        e.superclass = std::move(super);
        e.specialization = SpecializationInfo{false, false};
        e.attributes = {AttributeDef::make_scalar(std::move(attr), ScalarType::Int)};
        return e;
    };
    s.entities["R1"] = subclass("R1", "R", "r1_a");
    s.entities["R2"] = subclass("R2", "R", "r2_a");
    s.entities["R3"] = subclass("R3", "R1", "r3_a");
    s.entities["R4"] = subclass("R4", "R2", "r4_a");

    EntitySetDef se;
    se.name = "S";
    se.attributes = {
        AttributeDef::make_scalar("s_id", ScalarType::BigInt, true),
        AttributeDef::make_scalar("s_a", ScalarType::Int),
    };
    s.entities[se.name] = se;

    EntitySetDef s1;
    s1.name = "S1";
    s1.weak_owner = WeakOwnerInfo{"S", "own_s1"};
    s1.attributes = {
        AttributeDef::make_scalar("s1_no", ScalarType::Int, true),
        AttributeDef::make_scalar("s1_a", ScalarType::Int),
    };
    s.entities[s1.name] = s1;

    EntitySetDef s2;
    s2.name = "S2";
    s2.weak_owner = WeakOwnerInfo{"S", "own_s2"};
    s2.attributes = {
        AttributeDef::make_scalar("s2_no", ScalarType::Int, true),
        AttributeDef::make_scalar("s2_a", ScalarType::Int),
    };
    s.entities[s2.name] = s2;

    RelationshipDef own1;
    own1.name = "own_s1";
    own1.participants = {
        {"S", "S", Cardinality::One, Participation::Partial},
        {"S1", "S1", Cardinality::Many, Participation::Total},
    };
    s.relationships[own1.name] = own1;

    RelationshipDef own2;
    own2.name = "own_s2";
    own2.participants = {
        {"S", "S", Cardinality::One, Participation::Partial},
        {"S2", "S2", Cardinality::Many, Participation::Total},
    };
    s.relationships[own2.name] = own2;

    RelationshipDef r2s1;
    r2s1.name = "rel_r2s1";
    r2s1.participants = {
        {"R2", "R2", Cardinality::Many, Participation::Partial},
        {"S1", "S1", Cardinality::Many, Participation::Partial},
    };
    s.relationships[r2s1.name] = r2s1;

    RelationshipDef r1r3;
    r1r3.name = "rel_r1r3";
    r1r3.participants = {
        {"R1", "parent", Cardinality::One, Participation::Partial},
        {"R3", "child", Cardinality::Many, Participation::Partial},
    };
    s.relationships[r1r3.name] = r1r3;

    return s;
}

/// A tiny hand-checked university dataset (unconformed). Expected query
/// results in the engine tests are worked out from these five instances
/// by hand, so do not edit values casually.
inline Dataset d0_dataset() {
    Dataset d;
    d.entities["Student"].push_back(Value{Value::Composite{
        {"ID", Value{1}},
        {"name", Value{"Ann"}},
        {"city", Value{"College Park"}},
        {"Ph", Value{Value::Array{Value{"555-2222"}, Value{"555-1111"}}}},
        {"tot_credits", Value{30}},
    }});
    d.entities["Instructor"].push_back(Value{Value::Composite{
        {"ID", Value{2}},
        {"name", Value{"Bo"}},
        {"city", Value{"Seattle"}},
        {"rank", Value{"Professor"}},
    }});
    d.entities["Course"].push_back(Value{Value::Composite{
        {"course_id", Value{1}},
        {"title", Value{"Intro"}},
    }});
    d.entities["Section"].push_back(Value{Value::Composite{
        {"course_id", Value{1}},
        {"sec_id", Value{1}},
        {"semester", Value{"Fall"}},
        {"year", Value{2020}},
    }});

    RelationshipInstance takes;
    takes.role_keys = {{Value{1}}, {Value{1}, Value{1}, Value{"Fall"}, Value{2020}}};
    takes.descriptive = Value{Value::Composite{{"grade", Value{"A"}}}};
    d.relationships["takes"].push_back(takes);

    RelationshipInstance advisor;
    advisor.role_keys = {{Value{2}}, {Value{1}}};
    d.relationships["advisor"].push_back(advisor);

    return d;
}

/// Composite-heavy schema for round-trip coverage: nested composites and a
/// multi-valued composite attribute.
inline ErSchema composite_schema() {
    ErSchema s;

    EntitySetDef emp;
    emp.name = "Emp";
    emp.attributes = {
        AttributeDef::make_scalar("emp_id", ScalarType::BigInt, true),
        AttributeDef::make_scalar("name", ScalarType::Text),
        AttributeDef::make_composite(
            "addr",
            {
                AttributeDef::make_scalar("street", ScalarType::Text),
                AttributeDef::make_scalar("city", ScalarType::Text),
                AttributeDef::make_multi("tags",
                                         AttributeDef::make_scalar("v", ScalarType::Text)),
            }),
        AttributeDef::make_multi(
            "phones",
            AttributeDef::make_composite(
                "item",
                {
                    AttributeDef::make_scalar("kind", ScalarType::Text),
                    AttributeDef::make_scalar("num", ScalarType::Text),
                })),
        AttributeDef::make_scalar("salary", ScalarType::Float),
        AttributeDef::make_scalar("active", ScalarType::Bool),
        AttributeDef::make_scalar("hired", ScalarType::Date),
    };
    s.entities[emp.name] = emp;

    EntitySetDef dept;
    dept.name = "Dept";
    dept.attributes = {
        AttributeDef::make_scalar("dept_id", ScalarType::BigInt, true),
        AttributeDef::make_scalar("dname", ScalarType::Text),
    };
    s.entities[dept.name] = dept;

    RelationshipDef works;
    works.name = "works_in";
    works.participants = {
        {"Dept", "Dept", Cardinality::One, Participation::Partial},
        {"Emp", "Emp", Cardinality::Many, Participation::Partial},
    };
    s.relationships[works.name] = works;

    return s;
}

} // namespace erdb::fixtures
