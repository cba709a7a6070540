#include "vpp/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace vpp {

using nlohmann::json;

void require_known_keys(const json& obj, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw InputError(where + ": unknown key '" + key + "'");
  }
}

namespace {

double number_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw InputError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

json scenario_to_json(const Scenario& s) {
  json j;
  j["alpha"] = s.alpha;
  j["beta0"] = s.beta0;
  j["u"] = s.u;
  j["t"] = s.t;
  j["m"] = s.m;
  j["consumers_per_subregion"] = s.consumers_per_subregion;
  j["num_subregions"] = s.subregions.size();
  json srs = json::array();
  for (const auto& sr : s.subregions) {
    srs.push_back({{"mean_output", sr.mean_output},
                   {"var_output", sr.var_output},
                   {"distribution", to_string(sr.distribution)}});
  }
  j["subregions"] = srs;
  return j;
}

Scenario scenario_from_json(const json& j) {
  const std::string where = "scenario";
  require_known_keys(j, {"alpha", "beta0", "u", "t", "m", "consumers_per_subregion",
                         "num_subregions", "subregions"},
                     where);
  Scenario s;
  s.alpha = number_field(j, "alpha", where);
  s.beta0 = number_field(j, "beta0", where);
  s.u = number_field(j, "u", where);
  s.t = number_field(j, "t", where);
  s.m = number_field(j, "m", where);
  if (!j.contains("consumers_per_subregion") || !j.at("consumers_per_subregion").is_number_integer())
    throw InputError(where + ": 'consumers_per_subregion' must be an integer");
  s.consumers_per_subregion = j.at("consumers_per_subregion").get<long>();
  if (!j.contains("subregions") || !j.at("subregions").is_array())
    throw InputError(where + ": 'subregions' must be an array");
  const auto& srs = j.at("subregions");
  for (std::size_t l = 0; l < srs.size(); ++l) {
    const std::string w = where + ".subregions[" + std::to_string(l) + "]";
    require_known_keys(srs[l], {"mean_output", "var_output", "distribution"}, w);
    SubregionStats sr;
    sr.mean_output = number_field(srs[l], "mean_output", w);
    sr.var_output = number_field(srs[l], "var_output", w);
    if (srs[l].contains("distribution")) {
      if (!srs[l].at("distribution").is_string())
        throw InputError(w + ": 'distribution' must be a string");
      try {
        sr.distribution = parse_distribution(srs[l].at("distribution").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw InputError(w + ": " + e.what());
      }
    }
    s.subregions.push_back(sr);
  }
  if (j.contains("num_subregions")) {
    const auto& n = j.at("num_subregions");
    if (!n.is_number_integer() || n.get<long>() != static_cast<long>(s.subregions.size()))
      throw InputError(where + ": 'num_subregions' must equal the length of 'subregions'");
  }
  return validate_scenario(std::move(s));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path));
}

namespace {

std::vector<std::string> split_path(const std::string& key) {
  std::string normalized;
  for (char c : key) {
    if (c == '[')
      normalized += '.';
    else if (c != ']')
      normalized += c;
  }
  std::vector<std::string> parts;
  std::stringstream ss(normalized);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

}  // namespace

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InputError("override '" + item + "' is not of the form key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    json* node = &doc;
    for (const auto& part : split_path(key)) {
      if (node->is_object()) {
        if (!node->contains(part)) throw InputError("override '" + key + "' names no existing field");
        node = &(*node)[part];
      } else if (node->is_array()) {
        std::size_t idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoul(part, &used);
          if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
          throw InputError("override '" + key + "': '" + part + "' is not an array index");
        }
        if (idx >= node->size()) throw InputError("override '" + key + "': index out of range");
        node = &(*node)[idx];
      } else {
        throw InputError("override '" + key + "' names no existing field");
      }
    }
    if (node->is_object() || node->is_array())
      throw InputError("override '" + key + "' must name a scalar field");
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    *node = value;
  }
}

}  // namespace vpp
