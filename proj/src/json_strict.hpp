#pragma once

// Internal helpers for strict JSON loading: every object is checked against an
// explicit key whitelist and every field is type-checked, so malformed input
// fails loudly with the offending fragment retained instead of half-loading.

#include "taskmpc/types.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <string>

namespace taskmpc::jsonu {

[[noreturn]] inline void fail(const std::string& schema, const std::string& msg,
                              const nlohmann::json& ctx) {
  throw ParseError(schema + " schema: " + msg, ctx.dump());
}

inline void reject_unknown(const std::string& schema, const nlohmann::json& obj,
                           const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ParseError(schema + " schema: unknown key '" + it.key() + "' in " + where, obj.dump());
  }
}

inline double get_number(const std::string& schema, const nlohmann::json& obj,
                         const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    fail(schema, "missing or non-numeric '" + key + "' in " + where, obj);
  return obj[key].get<double>();
}

inline int get_int(const std::string& schema, const nlohmann::json& obj, const std::string& key,
                   const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    fail(schema, "missing or non-integer '" + key + "' in " + where, obj);
  return obj[key].get<int>();
}

inline std::string get_string(const std::string& schema, const nlohmann::json& obj,
                              const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string())
    fail(schema, "missing or non-string '" + key + "' in " + where, obj);
  return obj[key].get<std::string>();
}

inline nlohmann::json parse_document(const std::string& schema, const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ParseError(schema + " schema: input is not valid JSON", text);
  return j;
}

}  // namespace taskmpc::jsonu
