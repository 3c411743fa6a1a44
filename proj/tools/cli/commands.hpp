#pragma once

#include "cli/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace locbound::cli {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitUnlocalizable = 2 };

enum class Format { csv, json, text };

/// Throws ConfigError for anything other than csv/json (and text when
/// allowed).
Format parse_format(const std::string& name, bool allow_text = false);

struct SpebOptions {
    std::optional<std::string> agent;  ///< all agents when empty
    Format format = Format::csv;
    bool strict = false;
    std::vector<double> directions_deg;  ///< DPEB directions, degrees
};

struct BoundsOptions {
    std::optional<std::string> agent;
    Format format = Format::csv;
    bool strict = false;
};

struct ExperimentOptions {
    std::string kind;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> threads;
    std::optional<std::vector<double>> sweep;
    std::filesystem::path out_dir = ".";
    /// Experiment section of a config, used as the base spec when its kind
    /// matches.
    std::optional<ExperimentSpec> base;
};

struct RiiOptions {
    std::optional<std::filesystem::path> pulse;
    std::optional<std::string> channel;   ///< "los:1.0@0,0.5@2e-10"
    std::optional<std::string> pathloss;  ///< "d,b"
    double c = kSpeedOfLight;
    double n0 = 1.0;
    bool los_bias = false;
    Format format = Format::text;
};

/// Each command writes results to `out` and diagnostics to `err` and returns
/// an ExitCode. Input problems are reported, not thrown.
int cmd_speb(const ConfigDoc& doc, const SpebOptions& opt, std::ostream& out, std::ostream& err);
int cmd_bounds(const ConfigDoc& doc, const BoundsOptions& opt, std::ostream& out, std::ostream& err);
int cmd_experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err);
int cmd_rii(const RiiOptions& opt, std::ostream& out, std::ostream& err);

/// "los:1.0@0,0.5@2e-10" -> LOS channel with amplitudes 1.0, 0.5 at delays
/// 0 s and 2e-10 s. Throws std::invalid_argument.
MultipathChannel parse_channel_spec(const std::string& spec);

}  // namespace locbound::cli
