#pragma once

#include "locbound/experiments.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace locbound::cli {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_number(double v);

/// JSON number, or null when not finite.
nlohmann::json json_number(double v);

std::string report_csv(const ExperimentReport& rep);
nlohmann::json report_json(const ExperimentReport& rep);
nlohmann::json spec_json(const ExperimentSpec& spec);

/// Writes `content` to a temporary file beside `path` and renames it into
/// place. Throws OutputError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace locbound::cli
