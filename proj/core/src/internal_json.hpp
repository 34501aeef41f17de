// Internal helpers shared by the library sources; not installed.
#ifndef WAVEREG_INTERNAL_JSON_HPP
#define WAVEREG_INTERNAL_JSON_HPP

#include <cstdio>
#include <string>

#include "json.hpp"
#include "wavereg/regression.hpp"

namespace wavereg::detail {

/// Canonical text form used for hashing: sorted keys (nlohmann objects
/// are already key-ordered) and floats at 17 significant digits.
inline void canonical_dump(const nlohmann::json& j, std::string& out) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += '"';
        out += it.key();
        out += "\":";
        canonical_dump(it.value(), out);
      }
      out += '}';
      break;
    }
    case nlohmann::json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        canonical_dump(v, out);
      }
      out += ']';
      break;
    }
    case nlohmann::json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
      out += buf;
      break;
    }
    default:
      out += j.dump();
  }
}

inline std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  canonical_dump(j, out);
  return out;
}

nlohmann::json regression_config_to_json(const RegressionConfig& config);
RegressionConfig regression_config_from_json(const nlohmann::json& j);

}  // namespace wavereg::detail

#endif  // WAVEREG_INTERNAL_JSON_HPP
