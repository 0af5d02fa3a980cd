#pragma once

#include <json.hpp>

#include "erdb/value.hpp"

namespace erdb {

using ordered_json = nlohmann::ordered_json;

/// Value ↔ JSON: absent ↔ null, composites ↔ objects, arrays ↔ arrays.
/// Int and float survive the round trip (integer vs. decimal lexical form).
ordered_json value_to_json(const Value& v);
Value json_to_value(const ordered_json& j);

} // namespace erdb
