#include "twinpose/json_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace twinpose {

namespace {

void write_number(std::string& out, double v, int decimals) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot serialize a non-finite number");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  out += s;
}

void write(std::string& out, const Json& v, int decimals, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(key).dump();
        out += indent < 0 ? ":" : ": ";
        write(out, item, decimals, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Short numeric rows (pixels, vectors) stay on one line.
      const bool inline_row =
          v.size() <= 4 && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number() || e.is_null(); });
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += inline_row && indent >= 0 ? ", " : ",";
        first = false;
        if (!inline_row) newline(depth + 1);
        write(out, item, decimals, indent, depth + 1);
      }
      if (!inline_row) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      write_number(out, v.get<double>(), decimals);
      return;
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string dump_fixed(const Json& value, int decimals, int indent) {
  std::string out;
  write(out, value, decimals, indent, 0);
  return out;
}

}  // namespace twinpose
