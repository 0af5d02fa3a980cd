#include "erdb/value.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace erdb {

const char* scalar_type_name(ScalarType t) {
    switch (t) {
    case ScalarType::Int: return "int";
    case ScalarType::BigInt: return "bigint";
    case ScalarType::Float: return "float";
    case ScalarType::Text: return "text";
    case ScalarType::Bool: return "bool";
    case ScalarType::Date: return "date";
    }
    return "?";
}

ScalarType scalar_type_from_name(const std::string& name) {
    if (name == "int") return ScalarType::Int;
    if (name == "bigint") return ScalarType::BigInt;
    if (name == "float") return ScalarType::Float;
    if (name == "text") return ScalarType::Text;
    if (name == "bool") return ScalarType::Bool;
    if (name == "date") return ScalarType::Date;
    throw Error("unknown scalar type: " + name);
}

TypeDesc TypeDesc::make_scalar(ScalarType s) {
    TypeDesc t;
    t.kind = Kind::Scalar;
    t.scalar = s;
    return t;
}

TypeDesc TypeDesc::make_array(TypeDesc elem) {
    TypeDesc t;
    t.kind = Kind::Array;
    t.elems.push_back(std::move(elem));
    return t;
}

TypeDesc TypeDesc::make_composite(std::vector<std::pair<std::string, TypeDesc>> fields) {
    TypeDesc t;
    t.kind = Kind::Composite;
    t.fields = std::move(fields);
    return t;
}

const TypeDesc& TypeDesc::element() const {
    if (kind != Kind::Array || elems.empty()) throw Error("TypeDesc: not an array type");
    return elems[0];
}

bool TypeDesc::operator==(const TypeDesc& other) const {
    if (kind != other.kind) return false;
    switch (kind) {
    case Kind::Scalar: return scalar == other.scalar;
    case Kind::Array: return elems == other.elems;
    case Kind::Composite: return fields == other.fields;
    }
    return false;
}

std::string TypeDesc::to_string() const {
    switch (kind) {
    case Kind::Scalar: return scalar_type_name(scalar);
    case Kind::Array: return element().to_string() + "[]";
    case Kind::Composite: {
        std::string out = "{";
        bool first = true;
        for (const auto& [name, t] : fields) {
            if (!first) out += ", ";
            first = false;
            out += name + " " + t.to_string();
        }
        out += "}";
        return out;
    }
    }
    return "?";
}

double Value::to_double() const {
    if (is_int()) return static_cast<double>(as_int());
    if (is_float()) return as_float();
    throw Error("value is not numeric");
}

namespace {

int type_rank(const Value& v) {
    if (v.is_absent()) return 0;
    if (v.is_bool()) return 1;
    if (v.is_numeric()) return 2;
    if (v.is_string()) return 3;
    if (v.is_array()) return 4;
    return 5;
}

template <typename T>
int cmp3(const T& a, const T& b) {
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

} // namespace

int Value::compare(const Value& other) const {
    int ra = type_rank(*this), rb = type_rank(other);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
    case 0: return 0;
    case 1: return cmp3(as_bool(), other.as_bool());
    case 2:
        if (is_int() && other.is_int()) return cmp3(as_int(), other.as_int());
        return cmp3(to_double(), other.to_double());
    case 3: return cmp3(as_string(), other.as_string());
    case 4: {
        const auto& a = as_array();
        const auto& b = other.as_array();
        size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            int c = a[i].compare(b[i]);
            if (c != 0) return c;
        }
        return cmp3(a.size(), b.size());
    }
    default: {
        const auto& a = as_composite();
        const auto& b = other.as_composite();
        auto ia = a.begin();
        auto ib = b.begin();
        for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
            int c = cmp3(ia->first, ib->first);
            if (c != 0) return c;
            c = ia->second.compare(ib->second);
            if (c != 0) return c;
        }
        return cmp3(a.size(), b.size());
    }
    }
}

namespace {

void escape_json_into(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

} // namespace

void Value::canonical_into(std::string& out) const {
    if (is_absent()) {
        out += "null";
    } else if (is_bool()) {
        out += as_bool() ? "true" : "false";
    } else if (is_int()) {
        char buf[24];
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), as_int());
        out.append(buf, p);
    } else if (is_float()) {
        char buf[32];
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), as_float());
        out.append(buf, p);
    } else if (is_string()) {
        escape_json_into(as_string(), out);
    } else if (is_array()) {
        out += '[';
        bool first = true;
        for (const auto& e : as_array()) {
            if (!first) out += ',';
            first = false;
            e.canonical_into(out);
        }
        out += ']';
    } else {
        out += '{';
        bool first = true;
        for (const auto& [k, v] : as_composite()) {
            if (!first) out += ',';
            first = false;
            escape_json_into(k, out);
            out += ':';
            v.canonical_into(out);
        }
        out += '}';
    }
}

std::string Value::canonical() const {
    std::string out;
    canonical_into(out);
    return out;
}

Value normalize_deep(const Value& v) {
    if (v.is_array()) {
        Value::Array out;
        out.reserve(v.as_array().size());
        for (const auto& e : v.as_array()) out.push_back(normalize_deep(e));
        std::sort(out.begin(), out.end());
        return Value(std::move(out));
    }
    if (v.is_composite()) {
        Value::Composite out;
        for (const auto& [k, e] : v.as_composite()) out.emplace(k, normalize_deep(e));
        return Value(std::move(out));
    }
    return v;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

bool looks_like_date(const std::string& s) {
    if (s.size() != 10) return false;
    for (size_t i = 0; i < 10; ++i) {
        if (i == 4 || i == 7) {
            if (s[i] != '-') return false;
        } else if (s[i] < '0' || s[i] > '9') {
            return false;
        }
    }
    int month = (s[5] - '0') * 10 + (s[6] - '0');
    int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

} // namespace erdb
