#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "erdb/er_graph.hpp"
#include "support/fixtures.hpp"

using namespace erdb;

TEST_CASE("node ids") {
    CHECK(entity_node_id("Person") == "entity:Person");
    CHECK(relationship_node_id("advisor") == "relationship:advisor");
    CHECK(attribute_node_id("Person", {"Ph"}) == "attr:Person.Ph");
    CHECK(attribute_node_id("Emp", {"addr", "city"}) == "attr:Emp.addr.city");
}

TEST_CASE("university graph has the expected structure") {
    ErSchema s = fixtures::university_schema();
    ErGraph g = build_graph(s);

    // isa edges Person—Instructor and Person—Student
    auto has_edge = [&](const std::string& a, const std::string& b, ErEdge::Kind k) {
        for (const auto& e : g.edges)
            if (((e.a == a && e.b == b) || (e.a == b && e.b == a)) && e.kind == k) return true;
        return false;
    };
    CHECK(has_edge("entity:Instructor", "entity:Person", ErEdge::Kind::Isa));
    CHECK(has_edge("entity:Student", "entity:Person", ErEdge::Kind::Isa));
    CHECK(has_edge("relationship:advisor", "entity:Student", ErEdge::Kind::Participates));
    CHECK(has_edge("relationship:advisor", "entity:Instructor", ErEdge::Kind::Participates));
    CHECK(has_edge("entity:Section", "entity:Course", ErEdge::Kind::Identifies));

    CHECK(g.has_node("attr:Person.Ph"));
    CHECK(g.has_node("attr:takes.grade"));
    CHECK(g.node("attr:Person.Ph").owner == "entity:Person");

    // node count = entities + relationships + attribute nodes at all levels
    size_t attr_nodes = 0;
    for (const auto& [id, n] : g.nodes)
        if (n.kind == ErNode::Kind::Attribute) ++attr_nodes;
    // Person: ID,name,city,Ph; Instructor: rank; Student: tot_credits;
    // Course: course_id,title; Section: sec_id,semester,year; takes: grade
    CHECK(attr_nodes == 12);
    CHECK(g.nodes.size() == 5 + 4 + 12); // 5 entities, 4 relationships
}

TEST_CASE("minimal schemas") {
    ErSchema s;
    EntitySetDef e;
    e.name = "E";
    e.attributes = {AttributeDef::make_scalar("id", ScalarType::Int, true)};
    s.entities[e.name] = e;
    ErGraph g = build_graph(s);
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 1);
}

TEST_CASE("composite attribute contributes a node per nesting level") {
    ErSchema s;
    EntitySetDef e;
    e.name = "E";
    e.attributes = {
        AttributeDef::make_scalar("id", ScalarType::Int, true),
        AttributeDef::make_composite("addr",
                                     {AttributeDef::make_scalar("street", ScalarType::Text),
                                      AttributeDef::make_scalar("city", ScalarType::Text)}),
    };
    s.entities[e.name] = e;
    ErGraph g = build_graph(s);
    // entity, id, addr, addr.street, addr.city → the addr chain is 4 nodes
    CHECK(g.has_node("attr:E.addr"));
    CHECK(g.has_node("attr:E.addr.street"));
    CHECK(g.has_node("attr:E.addr.city"));
    CHECK(g.node("attr:E.addr.city").owner == "attr:E.addr");
    CHECK(g.nodes.size() == 5);

    auto attrs = g.attribute_nodes_of("E");
    CHECK(attrs == std::vector<std::string>{"attr:E.id", "attr:E.addr", "attr:E.addr.street",
                                            "attr:E.addr.city"});
}

TEST_CASE("multi-valued composite element children get nodes") {
    ErSchema s = fixtures::composite_schema();
    ErGraph g = build_graph(s);
    CHECK(g.has_node("attr:Emp.phones"));
    CHECK(g.has_node("attr:Emp.phones.kind"));
    CHECK(g.has_node("attr:Emp.phones.num"));
    CHECK(g.has_node("attr:Emp.addr.tags"));
    // a scalar-element multi-valued attribute is a single node
    CHECK_FALSE(g.has_node("attr:Emp.addr.tags.t"));
}

TEST_CASE("is_connected") {
    ErSchema s = fixtures::university_schema();
    ErGraph g = build_graph(s);

    CHECK(is_connected(g, {"entity:Student", "relationship:advisor", "entity:Instructor"}));
    CHECK_FALSE(is_connected(g, {"attr:Student.tot_credits", "attr:Course.title"}));
    CHECK(is_connected(g, {"attr:Person.Ph"}));
    CHECK(is_connected(g, {}));

    // whole graph is connected for this schema
    std::set<std::string> all;
    for (const auto& [id, n] : g.nodes) all.insert(id);
    CHECK(is_connected(g, all));

    // entity—attribute chains
    CHECK(is_connected(g, {"entity:Person", "attr:Person.Ph"}));
    CHECK_FALSE(is_connected(g, {"entity:Person", "attr:Course.title"}));

    CHECK_THROWS_AS(is_connected(g, {"entity:Nobody"}), Error);
}

TEST_CASE("build is deterministic") {
    ErSchema s = fixtures::synthetic_schema();
    ErGraph a = build_graph(s);
    ErGraph b = build_graph(s);
    REQUIRE(a.nodes.size() == b.nodes.size());
    auto ia = a.nodes.begin();
    auto ib = b.nodes.begin();
    for (; ia != a.nodes.end(); ++ia, ++ib) CHECK(ia->first == ib->first);
    REQUIRE(a.edges.size() == b.edges.size());
    for (size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].a == b.edges[i].a);
        CHECK(a.edges[i].b == b.edges[i].b);
    }
}
