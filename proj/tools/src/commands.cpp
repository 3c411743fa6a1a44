#include "cli/commands.hpp"

#include "cli/report_io.hpp"
#include "locbound/bounds.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace locbound::cli {

namespace {

using nlohmann::json;

std::string fixed6(double v)
{
    if (!std::isfinite(v)) {
        return format_number(v);
    }
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
}

std::string direction_label(double deg) { return "dpeb_" + format_number(deg) + "deg_m2"; }

const NetworkConfig* require_network(const ConfigDoc& doc, std::ostream& err)
{
    if (!doc.network) {
        err << "error: config has no network section\n";
        return nullptr;
    }
    return &*doc.network;
}

// Agents to report, or nullopt after printing an error.
std::optional<std::vector<std::string>> selected_agents(const NetworkEfim& net,
                                                        const std::optional<std::string>& agent, std::ostream& err)
{
    if (!agent) {
        return net.agents;
    }
    for (const auto& a : net.agents) {
        if (a == *agent) {
            return std::vector<std::string>{a};
        }
    }
    err << "error: unknown agent '" << *agent << "'\n";
    return std::nullopt;
}

double double_from(const std::string& text, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) {
        throw std::invalid_argument("malformed " + what + " '" + text + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) {
        out.push_back(cur);
    }
    if (!text.empty() && text.back() == sep) {
        out.emplace_back();
    }
    return out;
}

}  // namespace

Format parse_format(const std::string& name, bool allow_text)
{
    if (name == "csv") {
        return Format::csv;
    }
    if (name == "json") {
        return Format::json;
    }
    if (allow_text && name == "text") {
        return Format::text;
    }
    throw ConfigError("--format", "unsupported format '" + name + "'");
}

MultipathChannel parse_channel_spec(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("channel spec must start with 'los:' or 'nlos:'");
    }
    MultipathChannel ch;
    const std::string kind = spec.substr(0, colon);
    if (kind == "los") {
        ch.los = true;
    } else if (kind == "nlos") {
        ch.los = false;
    } else {
        throw std::invalid_argument("channel spec must start with 'los:' or 'nlos:'");
    }
    for (const std::string& path : split(spec.substr(colon + 1), ',')) {
        const auto at = path.find('@');
        if (at == std::string::npos) {
            throw std::invalid_argument("channel path '" + path + "' must read amplitude@delay");
        }
        ch.amplitudes.push_back(double_from(path.substr(0, at), "amplitude"));
        ch.delays.push_back(double_from(path.substr(at + 1), "delay"));
    }
    ch.validate();
    return ch;
}

int cmd_speb(const ConfigDoc& doc, const SpebOptions& opt, std::ostream& out, std::ostream& err)
{
    const NetworkConfig* cfg = require_network(doc, err);
    if (cfg == nullptr) {
        return kExitInput;
    }
    NetworkEfim net;
    try {
        net = build_efim(cfg->topology, cfg->options);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    const auto agents = selected_agents(net, opt.agent, err);
    if (!agents) {
        return kExitInput;
    }

    std::vector<std::string> unlocalizable;
    json rows = json::array();
    std::ostringstream csv;
    csv << "agent,localizable,speb_m2,mu_per_m2,eta_per_m2,theta_rad";
    for (double deg : opt.directions_deg) {
        csv << ',' << direction_label(deg);
    }
    csv << '\n';

    for (const auto& id : *agents) {
        const InfoMatrix2 j = agent_efim(net, id, ReductionPolicy::pseudo_inverse);
        const ErrorBound s = speb(j);
        const EllipseForm e = to_ellipse(j);
        if (!s.localizable()) {
            unlocalizable.push_back(id);
        }
        const double sv = s.value_or(HUGE_VAL);
        csv << id << ',' << (s.localizable() ? "true" : "false") << ',' << format_number(sv) << ','
            << format_number(e.mu) << ',' << format_number(e.eta) << ',' << format_number(e.theta);
        json dpebs = json::array();
        for (double deg : opt.directions_deg) {
            const ErrorBound d = dpeb(j, direction(deg * std::numbers::pi / 180.0));
            csv << ',' << format_number(d.value_or(HUGE_VAL));
            dpebs.push_back({{"direction_deg", deg}, {"value", json_number(d.value_or(HUGE_VAL))}});
        }
        csv << '\n';
        rows.push_back({{"id", id},
                        {"localizable", s.localizable()},
                        {"speb", json_number(sv)},
                        {"ellipse", {{"mu", e.mu}, {"eta", e.eta}, {"theta", e.theta}}},
                        {"efim", {{j.a11(), j.a12()}, {j.a12(), j.a22()}}},
                        {"dpeb", dpebs}});
    }

    if (opt.format == Format::json) {
        json doc_out = {{"schema_version", 1},
                        {"command", "speb"},
                        {"units",
                         {{"speb", "m^2"},
                          {"dpeb", "m^2"},
                          {"efim", "1/m^2"},
                          {"mu", "1/m^2"},
                          {"eta", "1/m^2"},
                          {"theta", "rad"},
                          {"direction", "deg"}}},
                        {"agents", rows}};
        out << doc_out.dump(2) << '\n';
    } else {
        out << csv.str();
    }
    if (opt.strict && !unlocalizable.empty()) {
        err << "unlocalizable agent(s):";
        for (const auto& id : unlocalizable) {
            err << ' ' << id;
        }
        err << '\n';
        return kExitUnlocalizable;
    }
    return kExitOk;
}

int cmd_bounds(const ConfigDoc& doc, const BoundsOptions& opt, std::ostream& out, std::ostream& err)
{
    const NetworkConfig* cfg = require_network(doc, err);
    if (cfg == nullptr) {
        return kExitInput;
    }
    NetworkEfim net;
    try {
        net = build_efim(cfg->topology, cfg->options);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    const auto agents = selected_agents(net, opt.agent, err);
    if (!agents) {
        return kExitInput;
    }

    std::vector<std::string> unlocalizable;
    json rows = json::array();
    std::ostringstream csv;
    csv << "agent,speb_lower_m2,speb_m2,speb_upper_m2,ratio\n";
    for (const auto& id : *agents) {
        EfimBounds b;
        try {
            b = efim_bounds(net, id);
        } catch (const std::invalid_argument& e) {
            err << "error: " << e.what() << '\n';
            return kExitInput;
        }
        const ErrorBound exact = speb(agent_efim(net, id, ReductionPolicy::pseudo_inverse));
        const ErrorBound lower = speb(b.upper);
        const ErrorBound upper = speb(b.lower);
        const bool ok = exact.localizable() && lower.localizable() && upper.localizable();
        if (!exact.localizable()) {
            unlocalizable.push_back(id);
        }
        const double lo = lower.value_or(HUGE_VAL);
        const double ex = exact.value_or(HUGE_VAL);
        const double hi = upper.value_or(HUGE_VAL);
        const double ratio = ok ? lo / hi : std::nan("");
        csv << id << ',' << format_number(lo) << ',' << format_number(ex) << ',' << format_number(hi) << ','
            << fixed6(ratio) << '\n';
        rows.push_back({{"id", id},
                        {"speb_lower", json_number(lo)},
                        {"speb", json_number(ex)},
                        {"speb_upper", json_number(hi)},
                        {"ratio", json_number(ratio)}});
    }
    if (opt.format == Format::json) {
        json doc_out = {{"schema_version", 1},
                        {"command", "bounds"},
                        {"units", {{"speb", "m^2"}, {"ratio", "1"}}},
                        {"agents", rows}};
        out << doc_out.dump(2) << '\n';
    } else {
        out << csv.str();
    }
    if (opt.strict && !unlocalizable.empty()) {
        err << "unlocalizable agent(s):";
        for (const auto& id : unlocalizable) {
            err << ' ' << id;
        }
        err << '\n';
        return kExitUnlocalizable;
    }
    return kExitOk;
}

int cmd_experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err)
{
    ExperimentSpec spec;
    try {
        const ExperimentKind kind = parse_experiment_kind(opt.kind);
        spec = opt.base && opt.base->kind == kind ? *opt.base : default_spec(kind);
        if (opt.seed) {
            spec.seed = *opt.seed;
        }
        if (opt.trials) {
            spec.trials = *opt.trials;
        }
        if (opt.threads) {
            spec.threads = *opt.threads;
        }
        if (opt.sweep) {
            spec.sweep = *opt.sweep;
        }
        spec.validate();
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    ExperimentReport rep;
    try {
        rep = run_experiment(spec);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    const std::string stem = to_string(spec.kind) + "_" + std::to_string(spec.seed);
    const std::filesystem::path csv_path = opt.out_dir / (stem + ".csv");
    const std::filesystem::path json_path = opt.out_dir / (stem + ".json");
    try {
        std::error_code ec;
        std::filesystem::create_directories(opt.out_dir, ec);
        if (!std::filesystem::is_directory(opt.out_dir)) {
            throw OutputError("output directory '" + opt.out_dir.string() + "' is not usable");
        }
        write_atomic(csv_path, report_csv(rep));
        write_atomic(json_path, report_json(rep).dump(2) + "\n");
    } catch (const OutputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    out << to_string(spec.kind) << " seed=" << spec.seed << " trials=" << spec.trials << " rows=" << rep.rows.size();
    for (const auto& f : rep.fits) {
        out << ' ' << f.name << "_slope=" << format_number(f.fit.slope) << " [" << format_number(f.fit.ci_low) << ", "
            << format_number(f.fit.ci_high) << ']';
    }
    for (const auto& [k, v] : rep.summary) {
        out << ' ' << k << '=' << format_number(v);
    }
    out << " -> " << csv_path.string() << ", " << json_path.string() << '\n';
    return kExitOk;
}

int cmd_rii(const RiiOptions& opt, std::ostream& out, std::ostream& err)
{
    if (opt.channel.has_value() == opt.pathloss.has_value()) {
        err << "error: give exactly one of --channel or --pathloss\n";
        return kExitInput;
    }
    json j = {{"schema_version", 1}, {"command", "rii"}};
    std::ostringstream text;

    if (opt.pathloss) {
        double d = 0.0;
        double b = 0.0;
        try {
            const auto parts = split(*opt.pathloss, ',');
            if (parts.size() != 2) {
                throw std::invalid_argument("--pathloss expects d,b");
            }
            d = double_from(parts[0], "distance");
            b = double_from(parts[1], "exponent");
            const double lambda = rii_pathloss(d, b);
            j["source"] = "pathloss";
            j["distance"] = d;
            j["b"] = b;
            j["lambda"] = lambda;
            j["units"] = {{"lambda", "1/m^2"}, {"distance", "m"}};
            text << "path loss: d = " << format_number(d) << " m, b = " << format_number(b) << '\n';
            text << "λ = " << format_number(lambda) << " 1/m^2\n";
        } catch (const std::invalid_argument& e) {
            err << "error: " << e.what() << '\n';
            return kExitInput;
        }
    } else {
        if (!opt.pulse) {
            err << "error: --channel needs --pulse\n";
            return kExitInput;
        }
        try {
            const WaveformModel w = load_pulse_file(opt.pulse->string(), opt.c, opt.n0);
            const MultipathChannel ch = parse_channel_spec(*opt.channel);
            const PsiMatrix psi = psi_matrix(w, ch);
            const double beta = effective_bandwidth(w);
            const double snr = first_path_snr(w, ch);
            const double chi = path_overlap_chi(psi);
            double lambda = 0.0;
            std::string note;
            if (opt.los_bias) {
                lambda = rii_with_channel_prior(psi, los_bias_prior(psi));
                note = "known first-path bias";
            } else if (ch.los) {
                lambda = rii_no_prior(psi);
            } else {
                note = "NLOS, no channel prior";
            }
            j["source"] = "waveform";
            j["pulse_file"] = opt.pulse->string();
            j["samples"] = w.samples().size();
            j["dt"] = w.dt();
            j["los"] = ch.los;
            j["paths"] = ch.paths();
            j["first_cluster"] = psi.first_cluster;
            j["beta"] = beta;
            j["snr"] = snr;
            j["chi"] = chi;
            j["lambda"] = lambda;
            if (!note.empty()) {
                j["note"] = note;
            }
            j["units"] = {{"beta", "Hz"}, {"snr", "1"}, {"chi", "1"}, {"lambda", "1/m^2"}, {"dt", "s"}};
            text << "pulse: " << opt.pulse->string() << " (" << w.samples().size()
                 << " samples, dt = " << format_number(w.dt()) << " s)\n";
            text << "β = " << format_number(beta) << " Hz\n";
            text << "SNR(1) = " << format_number(snr) << '\n';
            text << "first cluster = " << psi.first_cluster << " of " << ch.paths() << " path(s)\n";
            text << "χ = " << format_number(chi) << '\n';
            if (!ch.los && !opt.los_bias) {
                text << "λ = 0 (" << note << ")\n";
            } else {
                text << "λ = " << format_number(lambda) << " 1/m^2" << (note.empty() ? "" : " (" + note + ")")
                     << '\n';
            }
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitInput;
        }
    }

    if (opt.format == Format::json) {
        out << j.dump(2) << '\n';
    } else if (opt.format == Format::csv) {
        out << "quantity,value,unit\n";
        for (const auto& [k, v] : j.items()) {
            if (v.is_number() && k != "schema_version") {
                const std::string unit = j["units"].contains(k) ? j["units"][k].get<std::string>() : "";
                out << k << ',' << format_number(v.get<double>()) << ',' << unit << '\n';
            }
        }
    } else {
        out << text.str();
    }
    return kExitOk;
}

}  // namespace locbound::cli
