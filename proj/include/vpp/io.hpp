#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpp/core_model.hpp"

namespace vpp {

/// Raised for unreadable or malformed input documents.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json scenario_to_json(const Scenario& s);
/// Parses and validates; unknown keys are rejected.
Scenario scenario_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

/**
 * Applies `key=value` overrides to a document in place.
 *
 * Keys are dotted paths into existing fields, with array indices written
 * either as `subregions.1.var_output` or `subregions[1].var_output`. The
 * value is parsed as JSON when possible, otherwise taken as a string.
 */
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// Rejects keys outside `allowed`.
void require_known_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                        const std::string& where);

}  // namespace vpp
