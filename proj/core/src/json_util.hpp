#pragma once

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>

#include "json.hpp"

#include "schedlab/errors.hpp"
#include "schedlab/models.hpp"

namespace schedlab::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

inline void require_object(const Json& j, std::string_view where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
}

inline void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed,
                           std::string_view where) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::string_view name : allowed) known = known || item.key() == name;
    if (!known) throw ValidationError("unknown field '" + item.key() + "' in " + std::string(where));
  }
}

// Non-finite doubles travel as null (NaN) or the strings "inf" / "-inf".
inline OrderedJson encode_double(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double decode_double(const Json& j, std::string_view where) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ValidationError(std::string(where) + " must be a number");
}

inline double get_number(const Json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing field '" + std::string(key) + "' in " + std::string(where));
  if (!it->is_number()) throw ValidationError("field '" + std::string(key) + "' in " + std::string(where) + " must be a number");
  return it->get<double>();
}

inline int get_int(const Json& j, std::string_view key, std::string_view where) {
  const double v = get_number(j, key, where);
  if (v != std::floor(v) || std::abs(v) > 2147483647.0) {
    throw ValidationError("field '" + std::string(key) + "' in " + std::string(where) + " must be an integer");
  }
  return static_cast<int>(v);
}

inline std::string get_string(const Json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing field '" + std::string(key) + "' in " + std::string(where));
  if (!it->is_string()) throw ValidationError("field '" + std::string(key) + "' in " + std::string(where) + " must be a string");
  return it->get<std::string>();
}

inline bool get_bool(const Json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing field '" + std::string(key) + "' in " + std::string(where));
  if (!it->is_boolean()) throw ValidationError("field '" + std::string(key) + "' in " + std::string(where) + " must be a boolean");
  return it->get<bool>();
}

OrderedJson model_json(const AnalyticModel& model);
AnalyticModel model_from(const Json& j, std::string_view where);

}  // namespace schedlab::detail
