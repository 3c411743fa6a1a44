#include "cli/commands.hpp"
#include "cli/config.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace locbound::cli;

std::vector<double> parse_sweep(const std::string& text)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) {
            throw std::invalid_argument("malformed sweep value '" + item + "'");
        }
        out.push_back(v);
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Localization accuracy limits for cooperative wideband networks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string format = "csv";
    std::string agent;
    bool all = false;
    bool strict = false;
    std::vector<double> directions;

    auto* speb = app.add_subcommand("speb", "Per-agent SPEB, DPEB and information ellipse");
    speb->add_option("config", config_path, "Configuration document (JSON)")->required();
    auto* agent_opt = speb->add_option("--agent", agent, "Report one agent");
    speb->add_flag("--all", all, "Report every agent (default)")->excludes(agent_opt);
    speb->add_option("--format", format, "csv or json");
    speb->add_flag("--strict", strict, "Exit 2 when an agent is unlocalizable");
    speb->add_option("--direction", directions, "DPEB direction in degrees (repeatable)");

    std::string bounds_config;
    std::string bounds_format = "csv";
    std::string bounds_agent;
    bool bounds_strict = false;
    auto* bounds = app.add_subcommand("bounds", "Closed-form lower/upper SPEB approximations");
    bounds->add_option("config", bounds_config, "Configuration document (JSON)")->required();
    bounds->add_option("--agent", bounds_agent, "Report one agent");
    bounds->add_option("--format", bounds_format, "csv or json");
    bounds->add_flag("--strict", bounds_strict, "Exit 2 when an agent is unlocalizable");

    ExperimentOptions exp_opt;
    std::string exp_config;
    std::string sweep;
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    std::size_t threads = 0;
    std::string out_dir = ".";
    auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment and write CSV/JSON");
    experiment->add_option("kind", exp_opt.kind, "fig4 fig6 fig7 fig8 dense_scaling extended_scaling lemma1 lemma2")
        ->required();
    auto* seed_opt = experiment->add_option("--seed", seed, "64-bit seed");
    auto* trials_opt = experiment->add_option("--trials", trials, "Monte Carlo trials per point");
    auto* threads_opt = experiment->add_option("--threads", threads, "Worker threads");
    auto* sweep_opt = experiment->add_option("--sweep", sweep, "Comma-separated sweep values");
    experiment->add_option("--out", out_dir, "Output directory");
    experiment->add_option("--config", exp_config, "Configuration document with an experiment section");

    RiiOptions rii_opt;
    std::string pulse;
    std::string channel;
    std::string pathloss;
    std::string rii_format = "text";
    auto* rii = app.add_subcommand("rii", "Ranging information intensity of one link");
    auto* pulse_opt = rii->add_option("--pulse", pulse, "Pulse file (time, amplitude)");
    auto* channel_opt = rii->add_option("--channel", channel, "Channel, e.g. los:1.0@0,0.5@2e-10");
    auto* pathloss_opt = rii->add_option("--pathloss", pathloss, "Path-loss RII from d,b");
    channel_opt->excludes(pathloss_opt);
    rii->add_option("--c", rii_opt.c, "Propagation speed (m/s)");
    rii->add_option("--n0", rii_opt.n0, "One-sided noise level N0");
    rii->add_flag("--los-bias", rii_opt.los_bias, "Treat the first-path bias as known");
    rii->add_option("--format", rii_format, "text, csv or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return kExitInput;
    }

    std::string current_config;
    try {
        if (speb->parsed()) {
            SpebOptions opt;
            opt.format = parse_format(format);
            opt.strict = strict;
            opt.directions_deg = directions;
            if (!agent.empty()) {
                opt.agent = agent;
            }
            current_config = config_path;
            const ConfigDoc doc = load_config(config_path);
            return cmd_speb(doc, opt, std::cout, std::cerr);
        }
        if (bounds->parsed()) {
            BoundsOptions opt;
            opt.format = parse_format(bounds_format);
            opt.strict = bounds_strict;
            if (!bounds_agent.empty()) {
                opt.agent = bounds_agent;
            }
            current_config = bounds_config;
            const ConfigDoc doc = load_config(bounds_config);
            return cmd_bounds(doc, opt, std::cout, std::cerr);
        }
        if (experiment->parsed()) {
            if (*seed_opt) {
                exp_opt.seed = seed;
            }
            if (*trials_opt) {
                exp_opt.trials = trials;
            }
            if (*threads_opt) {
                exp_opt.threads = threads;
            }
            if (*sweep_opt) {
                exp_opt.sweep = parse_sweep(sweep);
            }
            exp_opt.out_dir = out_dir;
            if (!exp_config.empty()) {
                current_config = exp_config;
                const ConfigDoc doc = load_config(exp_config);
                exp_opt.base = doc.experiment;
            }
            return cmd_experiment(exp_opt, std::cout, std::cerr);
        }
        if (rii->parsed()) {
            if (*pulse_opt) {
                rii_opt.pulse = pulse;
            }
            if (*channel_opt) {
                rii_opt.channel = channel;
            }
            if (*pathloss_opt) {
                rii_opt.pathloss = pathloss;
            }
            rii_opt.format = parse_format(rii_format, true);
            return cmd_rii(rii_opt, std::cout, std::cerr);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << (current_config.empty() ? "" : current_config + ": ") << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
