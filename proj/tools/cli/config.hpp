#pragma once

#include "locbound/experiments.hpp"
#include "locbound/network.hpp"
#include "locbound/ranging.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace locbound::cli {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration document. `location()` is a JSON pointer, or
/// "line L, column C" for syntax errors.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string location, const std::string& what)
        : std::runtime_error(location.empty() ? what : location + ": " + what), location_(std::move(location))
    {
    }
    const std::string& location() const { return location_; }

private:
    std::string location_;
};

struct WaveformConfig {
    std::filesystem::path pulse_file;
    double c = kSpeedOfLight;
    double n0 = 1.0;
    WaveformModel model;
};

struct NetworkConfig {
    Topology topology;
    BuildOptions options;
};

struct ConfigDoc {
    int schema_version = kSchemaVersion;
    std::optional<WaveformConfig> waveform;
    std::optional<NetworkConfig> network;
    std::optional<ExperimentSpec> experiment;
};

/// Parses and validates a configuration document. Relative pulse paths are
/// resolved against `base_dir`. Throws ConfigError.
ConfigDoc parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ConfigDoc load_config(const std::filesystem::path& path);

}  // namespace locbound::cli
