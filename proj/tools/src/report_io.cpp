#include "cli/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace locbound::cli {

using nlohmann::json;

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string report_csv(const ExperimentReport& rep)
{
    std::ostringstream out;
    out << "series,x,x_unit,samples,outages,outage_fraction,mean,std_error,q10,q50,q90,unit\n";
    for (const auto& r : rep.rows) {
        out << r.series << ',' << format_number(r.x) << ',' << rep.x_unit << ',' << r.samples << ',' << r.outages
            << ',' << format_number(r.outage_fraction) << ',' << format_number(r.mean) << ','
            << format_number(r.std_error) << ',' << format_number(r.q10) << ',' << format_number(r.q50) << ','
            << format_number(r.q90) << ',' << rep.value_unit << '\n';
    }
    return out.str();
}

json spec_json(const ExperimentSpec& s)
{
    json j;
    j["kind"] = to_string(s.kind);
    j["trials"] = s.trials;
    j["seed"] = s.seed;
    j["threads"] = s.threads;
    j["side"] = s.side;
    j["D"] = s.d;
    j["agents"] = s.agents;
    j["random_anchors"] = s.random_anchors;
    j["layouts"] = json::array();
    for (AnchorLayout l : s.layouts) {
        j["layouts"].push_back(to_string(l));
    }
    j["link"] = {{"k", s.link.k}, {"b", s.link.b}, {"r0", s.link.r0}, {"fading_sigma_db", s.link.fading_sigma_db}};
    if (s.link.rmax) {
        j["link"]["rmax"] = *s.link.rmax;
    }
    j["rho_total"] = s.rho_total;
    j["anchor_fraction"] = s.anchor_fraction;
    j["poisson_counts"] = s.poisson_counts;
    j["sweep"] = s.sweep;
    j["peer"] = {{"mu", s.peer.mu}, {"eta", s.peer.eta}, {"theta", s.peer.theta}};
    j["angles"] = s.angles;
    j["lambda0"] = s.lambda0;
    j["dist"] = to_string(s.dist);
    return j;
}

json report_json(const ExperimentReport& rep)
{
    json j;
    j["schema_version"] = 1;
    j["command"] = "experiment";
    j["kind"] = to_string(rep.spec.kind);
    j["seed"] = rep.spec.seed;
    j["trials"] = rep.spec.trials;
    j["x"] = {{"name", rep.x_name}, {"unit", rep.x_unit}};
    j["value"] = {{"name", rep.value_name}, {"unit", rep.value_unit}};
    j["spec"] = spec_json(rep.spec);
    j["rows"] = json::array();
    for (const auto& r : rep.rows) {
        j["rows"].push_back({{"series", r.series},
                             {"x", json_number(r.x)},
                             {"samples", r.samples},
                             {"outages", r.outages},
                             {"outage_fraction", json_number(r.outage_fraction)},
                             {"mean", json_number(r.mean)},
                             {"std_error", json_number(r.std_error)},
                             {"q10", json_number(r.q10)},
                             {"q50", json_number(r.q50)},
                             {"q90", json_number(r.q90)}});
    }
    j["fits"] = json::array();
    for (const auto& f : rep.fits) {
        j["fits"].push_back({{"name", f.name},
                             {"slope", json_number(f.fit.slope)},
                             {"intercept", json_number(f.fit.intercept)},
                             {"slope_se", json_number(f.fit.slope_se)},
                             {"ci_low", json_number(f.fit.ci_low)},
                             {"ci_high", json_number(f.fit.ci_high)},
                             {"points", f.fit.points}});
    }
    j["summary"] = json::object();
    for (const auto& [k, v] : rep.summary) {
        j["summary"][k] = json_number(v);
    }
    return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw OutputError("cannot write '" + tmp.string() + "'");
        }
        f << content;
        f.flush();
        if (!f) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw OutputError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw OutputError("cannot move output into place at '" + path.string() + "'");
    }
}

}  // namespace locbound::cli
