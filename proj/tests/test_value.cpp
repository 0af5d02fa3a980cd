#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "erdb/value.hpp"

using namespace erdb;

TEST_CASE("scalar construction and accessors") {
    Value v{int64_t{42}};
    CHECK(v.is_int());
    CHECK(v.as_int() == 42);
    CHECK(v.to_double() == doctest::Approx(42.0));

    Value t{"hi"};
    CHECK(t.is_string());
    CHECK(t.as_string() == "hi");
    CHECK_THROWS(t.as_int());

    Value b{true};
    CHECK(b.is_bool());
    CHECK(b.as_bool());

    Value f{2.5};
    CHECK(f.is_float());
    CHECK(f.as_float() == doctest::Approx(2.5));

    Value none;
    CHECK(none.is_absent());
}

TEST_CASE("compare gives a total order across types") {
    // absent < bool < numeric < string < array < composite
    Value absent;
    Value b{false};
    Value i{3};
    Value f{3.5};
    Value s{"a"};
    Value arr{Value::Array{Value{1}}};
    Value comp{Value::Composite{{"x", Value{1}}}};

    CHECK(absent.compare(b) < 0);
    CHECK(b.compare(i) < 0);
    CHECK(i.compare(f) < 0); // numeric comparison: 3 < 3.5
    CHECK(f.compare(s) < 0);
    CHECK(s.compare(arr) < 0);
    CHECK(arr.compare(comp) < 0);
    CHECK(comp.compare(absent) > 0);

    CHECK(Value{3}.compare(Value{3.0}) == 0);
    CHECK(Value{4}.compare(Value{4}) == 0);
    CHECK(Value{"ab"}.compare(Value{"b"}) < 0);

    // arrays: lexicographic by element, then by length
    Value a1{Value::Array{Value{1}, Value{2}}};
    Value a2{Value::Array{Value{1}, Value{3}}};
    Value a3{Value::Array{Value{1}}};
    CHECK(a1.compare(a2) < 0);
    CHECK(a3.compare(a1) < 0);

    // composites: by sorted field name then value
    Value c1{Value::Composite{{"a", Value{1}}, {"b", Value{2}}}};
    Value c2{Value::Composite{{"a", Value{1}}, {"b", Value{3}}}};
    CHECK(c1.compare(c2) < 0);
}

TEST_CASE("canonical text is stable and json-like") {
    CHECK(Value().canonical() == "null");
    CHECK(Value{true}.canonical() == "true");
    CHECK(Value{-7}.canonical() == "-7");
    CHECK(Value{2.5}.canonical() == "2.5");
    CHECK(Value{1e100}.canonical() == "1e+100");
    CHECK(Value{"a\"b\n"}.canonical() == "\"a\\\"b\\n\"");
    Value arr{Value::Array{Value{1}, Value{"x"}}};
    CHECK(arr.canonical() == "[1,\"x\"]");
    Value comp{Value::Composite{{"b", Value{2}}, {"a", Value{}}}};
    CHECK(comp.canonical() == "{\"a\":null,\"b\":2}");

    // float formatting must be shortest round-trip, no locale effects
    CHECK(Value{0.1}.canonical() == "0.1");
    CHECK(Value{3.0}.canonical() == "3");
}

TEST_CASE("normalize_deep sorts arrays recursively") {
    Value inner1{Value::Array{Value{3}, Value{1}}};
    Value inner2{Value::Array{Value{2}}};
    Value v{Value::Composite{{"xs", Value{Value::Array{inner1, inner2}}}}};
    Value n = normalize_deep(v);
    CHECK(n.canonical() == "{\"xs\":[[1,3],[2]]}");
}

TEST_CASE("fnv1a64 matches known vectors") {
    // Reference values for the 64-bit FNV-1a parameters.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
}

TEST_CASE("type descriptors") {
    TypeDesc t = TypeDesc::make_array(TypeDesc::make_composite(
        {{"kind", TypeDesc::make_scalar(ScalarType::Text)},
         {"num", TypeDesc::make_scalar(ScalarType::Text)}}));
    CHECK(t.is_array());
    CHECK(t.element().is_composite());
    CHECK(scalar_type_from_name("bigint") == ScalarType::BigInt);
    CHECK(scalar_type_name(ScalarType::Date) == std::string("date"));
}

TEST_CASE("date shape check") {
    CHECK(looks_like_date("2020-01-31"));
    CHECK_FALSE(looks_like_date("2020-1-31"));
    CHECK_FALSE(looks_like_date("not a date"));
}
