#pragma once

// JSON forms of the library's value types. Rationals travel as
// "numerator/denominator" strings; plain JSON integers are also accepted on
// input. Objects are parsed strictly: unknown keys are rejected.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

#include "chance_lab/errors.hpp"
#include "chance_lab/measures.hpp"
#include "chance_lab/procedures.hpp"
#include "chance_lab/rational.hpp"
#include "chance_lab/scales.hpp"

namespace chance_lab {

using Json = nlohmann::json;

namespace json_io {

inline void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                         std::initializer_list<const char*> required, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
  }
  for (const char* r : required) {
    if (!j.contains(r)) throw ParseError(where + ": missing key '" + std::string(r) + "'");
  }
}

inline Rational rational(const Json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (j.is_number_integer()) {
    return j.is_number_unsigned() ? Rational(to_integer(j.get<std::uint64_t>()))
                                  : Rational(j.get<long>());
  }
  throw ParseError(where + ": expected a \"p/q\" string or an integer");
}

inline std::vector<Rational> rational_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<Rational> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(rational(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Integers written in JSON text parse as unsigned, those built in code as signed.
inline bool is_count(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

inline std::uint64_t positive_integer(const Json& j, const std::string& where) {
  if (!is_count(j) || j.get<std::uint64_t>() == 0) {
    throw ParseError(where + ": expected a positive integer");
  }
  return j.get<std::uint64_t>();
}

inline Integer integer(const Json& j, const std::string& where) {
  if (j.is_number_unsigned()) return to_integer(j.get<std::uint64_t>());
  if (j.is_number_integer()) return Integer(j.get<long>());
  if (j.is_string()) {
    Integer z;
    if (z.set_str(j.get<std::string>(), 10) == 0) return z;
  }
  throw ParseError(where + ": expected an integer");
}

inline Json rational_json(const Rational& r) { return to_string(r); }

// Integral coefficients are written as numbers, others as "p/q".
inline Json coefficient_json(const Rational& r) {
  if (is_integral(r) && r.get_num().fits_slong_p()) return r.get_num().get_si();
  return to_string(r);
}

inline Json integer_json(const Integer& z) {
  if (z.fits_ulong_p()) return z.get_ui();
  return z.get_str();
}

}  // namespace json_io

inline Json to_json(const PartitionMeasure& m) {
  Json head = Json::array();
  for (const auto& h : m.head()) head.push_back(json_io::rational_json(h));
  Json tails = Json::array();
  for (const auto& t : m.tails()) {
    tails.push_back({{"c", json_io::rational_json(t.coefficient)},
                     {"rho", json_io::rational_json(t.ratio)},
                     {"start", t.start}});
  }
  return {{"label", m.label()}, {"head", head}, {"tails", tails}};
}

inline PartitionMeasure measure_from_json(const Json& j, const std::string& where = "measure") {
  json_io::require_keys(j, {"label", "head", "tails"}, {}, where);
  std::vector<Rational> head;
  if (j.contains("head")) head = json_io::rational_list(j["head"], where + ".head");
  std::vector<GeometricTail> tails;
  if (j.contains("tails")) {
    const Json& jt = j["tails"];
    if (!jt.is_array()) throw ParseError(where + ".tails: expected an array");
    for (std::size_t i = 0; i < jt.size(); ++i) {
      const std::string w = where + ".tails[" + std::to_string(i) + "]";
      json_io::require_keys(jt[i], {"c", "rho", "start"}, {"c", "rho", "start"}, w);
      tails.push_back({json_io::rational(jt[i]["c"], w + ".c"),
                       json_io::rational(jt[i]["rho"], w + ".rho"),
                       json_io::positive_integer(jt[i]["start"], w + ".start")});
    }
  }
  std::string label;
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw ParseError(where + ".label: expected a string");
    label = j["label"].get<std::string>();
  }
  return make_partition_measure(std::move(head), std::move(tails), std::move(label));
}

inline Json to_json(const SequenceFunction& f) {
  Json prefix = Json::array();
  for (const auto& v : f.prefix()) prefix.push_back(json_io::integer_json(v));
  Json tail = Json::array();
  for (const auto& c : f.tail().coefficients()) tail.push_back(json_io::coefficient_json(c));
  return {{"prefix", prefix}, {"tail", tail}};
}

inline SequenceFunction sequence_from_json(const Json& j, const std::string& where = "function") {
  json_io::require_keys(j, {"prefix", "tail"}, {"tail"}, where);
  std::vector<Integer> prefix;
  if (j.contains("prefix")) {
    if (!j["prefix"].is_array()) throw ParseError(where + ".prefix: expected an array");
    for (std::size_t i = 0; i < j["prefix"].size(); ++i) {
      prefix.push_back(json_io::integer(j["prefix"][i], where + ".prefix[" + std::to_string(i) + "]"));
    }
  }
  Polynomial tail(json_io::rational_list(j["tail"], where + ".tail"));
  return SequenceFunction::make(std::move(prefix), std::move(tail));
}

inline Json to_json(const Dartboard& b) {
  Json members = Json::array();
  for (const auto& m : b.members()) members.push_back(to_json(m));
  Json weights = Json::array();
  for (const auto& w : b.weights()) weights.push_back(json_io::rational_json(w));
  return {{"members", members}, {"weights", weights}};
}

inline Dartboard dartboard_from_json(const Json& j, const std::string& where = "board") {
  json_io::require_keys(j, {"members", "weights"}, {"members", "weights"}, where);
  if (!j["members"].is_array()) throw ParseError(where + ".members: expected an array");
  std::vector<SequenceFunction> members;
  for (std::size_t i = 0; i < j["members"].size(); ++i) {
    members.push_back(sequence_from_json(j["members"][i], where + ".members[" + std::to_string(i) + "]"));
  }
  return Dartboard::make(std::move(members), json_io::rational_list(j["weights"], where + ".weights"));
}

inline Json to_json(const CircleChanceModel& m) {
  Json bp = Json::array();
  for (const auto& x : m.breakpoints()) bp.push_back(json_io::rational_json(x));
  Json cdf = Json::array();
  for (const auto& x : m.cdf_values()) cdf.push_back(json_io::rational_json(x));
  return {{"breakpoints", bp}, {"cdf", cdf}};
}

inline CircleChanceModel circle_from_json(const Json& j, const std::string& where = "model") {
  json_io::require_keys(j, {"breakpoints", "cdf"}, {"breakpoints", "cdf"}, where);
  return CircleChanceModel::make(json_io::rational_list(j["breakpoints"], where + ".breakpoints"),
                                 json_io::rational_list(j["cdf"], where + ".cdf"));
}

}  // namespace chance_lab
