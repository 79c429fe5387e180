#pragma once

#include <string>

#include <json.hpp>

namespace twinpose {

using Json = nlohmann::ordered_json;

/// Serializes with every floating-point number printed in fixed notation at
/// `decimals` places ("-0.000000" is printed as "0.000000"). Integers,
/// strings, booleans and null print as usual. indent < 0 gives compact output.
std::string dump_fixed(const Json& value, int decimals = 6, int indent = -1);

}  // namespace twinpose
