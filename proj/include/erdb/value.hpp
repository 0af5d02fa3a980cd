#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace erdb {

/// Error type used across the library. Parse errors carry a source location.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg, int line = -1, int col = -1)
        : std::runtime_error(std::move(msg)), line(line), col(col) {}
    int line;
    int col;
};

enum class ScalarType { Int, BigInt, Float, Text, Bool, Date };

const char* scalar_type_name(ScalarType t);
ScalarType scalar_type_from_name(const std::string& name);

/// Type descriptor tree: scalar, array-of, or composite-of named fields.
struct TypeDesc {
    enum class Kind { Scalar, Array, Composite };
    Kind kind = Kind::Scalar;
    ScalarType scalar = ScalarType::Int;
    std::vector<TypeDesc> elems;                          // Array: exactly one
    std::vector<std::pair<std::string, TypeDesc>> fields; // Composite

    static TypeDesc make_scalar(ScalarType s);
    static TypeDesc make_array(TypeDesc elem);
    static TypeDesc make_composite(std::vector<std::pair<std::string, TypeDesc>> fields);

    bool is_scalar() const { return kind == Kind::Scalar; }
    bool is_array() const { return kind == Kind::Array; }
    bool is_composite() const { return kind == Kind::Composite; }
    const TypeDesc& element() const;

    bool operator==(const TypeDesc& other) const;
    std::string to_string() const;
};

/// Runtime value: absent (missing optional), scalar, array, or composite.
/// Int and BigInt share int64 storage; Text and Date share string storage.
class Value {
public:
    using Array = std::vector<Value>;
    using Composite = std::map<std::string, Value>;

    Value() : rep_(std::monostate{}) {}
    Value(bool b) : rep_(b) {}
    Value(int64_t i) : rep_(i) {}
    Value(int i) : rep_(static_cast<int64_t>(i)) {}
    Value(double d) : rep_(d) {}
    Value(std::string s) : rep_(std::move(s)) {}
    Value(const char* s) : rep_(std::string(s)) {}
    Value(Array a) : rep_(std::move(a)) {}
    Value(Composite c) : rep_(std::move(c)) {}

    bool is_absent() const { return std::holds_alternative<std::monostate>(rep_); }
    bool is_bool() const { return std::holds_alternative<bool>(rep_); }
    bool is_int() const { return std::holds_alternative<int64_t>(rep_); }
    bool is_float() const { return std::holds_alternative<double>(rep_); }
    bool is_string() const { return std::holds_alternative<std::string>(rep_); }
    bool is_array() const { return std::holds_alternative<Array>(rep_); }
    bool is_composite() const { return std::holds_alternative<Composite>(rep_); }
    bool is_numeric() const { return is_int() || is_float(); }

    bool as_bool() const { return std::get<bool>(rep_); }
    int64_t as_int() const { return std::get<int64_t>(rep_); }
    double as_float() const { return std::get<double>(rep_); }
    const std::string& as_string() const { return std::get<std::string>(rep_); }
    const Array& as_array() const { return std::get<Array>(rep_); }
    Array& as_array() { return std::get<Array>(rep_); }
    const Composite& as_composite() const { return std::get<Composite>(rep_); }
    Composite& as_composite() { return std::get<Composite>(rep_); }

    /// Numeric value widened to double; throws on non-numeric.
    double to_double() const;

    /// Total order over all values: type rank first (absent < bool < numeric
    /// < string < array < composite), then natural order within a type.
    /// Int and float compare numerically, so 3 == 3.0 and 3 < 3.5.
    int compare(const Value& other) const;
    bool operator==(const Value& other) const { return compare(other) == 0; }
    bool operator<(const Value& other) const { return compare(other) < 0; }

    /// Canonical text form: JSON-like, composite keys sorted, deterministic
    /// float formatting. Used for fingerprints and golden comparisons.
    std::string canonical() const;
    void canonical_into(std::string& out) const;

private:
    std::variant<std::monostate, bool, int64_t, double, std::string, Array, Composite> rep_;
};

/// Sorts array elements (recursively) into canonical order. Used when
/// normalizing multi-valued attributes and grouped results for comparison.
Value normalize_deep(const Value& v);

/// FNV-1a 64-bit over a string; stable fingerprint primitive.
uint64_t fnv1a64(const std::string& s);
std::string fnv1a64_hex(const std::string& s);

bool looks_like_date(const std::string& s);

} // namespace erdb
