#include "cli/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace locbound::cli {

namespace {

using nlohmann::json;

std::string child(const std::string& ptr, const std::string& key)
{
    std::string escaped;
    for (char ch : key) {
        if (ch == '~') {
            escaped += "~0";
        } else if (ch == '/') {
            escaped += "~1";
        } else {
            escaped += ch;
        }
    }
    return ptr + "/" + escaped;
}

std::string child(const std::string& ptr, std::size_t index) { return ptr + "/" + std::to_string(index); }

std::string where(const std::string& ptr) { return ptr.empty() ? "/" : ptr; }

double as_number(const json& j, const std::string& ptr)
{
    if (!j.is_number()) {
        throw ConfigError(where(ptr), "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(where(ptr), "expected a finite number");
    }
    return v;
}

std::uint64_t as_unsigned(const json& j, const std::string& ptr)
{
    if (!j.is_number_unsigned()) {
        if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
            return j.get<std::uint64_t>();
        }
        throw ConfigError(where(ptr), "expected a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& ptr)
{
    if (!j.is_string()) {
        throw ConfigError(where(ptr), "expected a string");
    }
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& ptr)
{
    if (!j.is_boolean()) {
        throw ConfigError(where(ptr), "expected true or false");
    }
    return j.get<bool>();
}

const json& as_array(const json& j, const std::string& ptr)
{
    if (!j.is_array()) {
        throw ConfigError(where(ptr), "expected an array");
    }
    return j;
}

std::vector<double> as_numbers(const json& j, const std::string& ptr)
{
    std::vector<double> out;
    for (std::size_t i = 0; i < as_array(j, ptr).size(); ++i) {
        out.push_back(as_number(j[i], child(ptr, i)));
    }
    return out;
}

Eigen::Vector2d as_vec2(const json& j, const std::string& ptr)
{
    const std::vector<double> v = as_numbers(j, ptr);
    if (v.size() != 2) {
        throw ConfigError(where(ptr), "expected [x, y]");
    }
    return {v[0], v[1]};
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& ptr, Eigen::Index rows, Eigen::Index cols)
{
    as_array(j, ptr);
    if (static_cast<Eigen::Index>(j.size()) != rows) {
        throw ConfigError(where(ptr), "expected " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string rp = child(ptr, static_cast<std::size_t>(r));
        const std::vector<double> row = as_numbers(j[static_cast<std::size_t>(r)], rp);
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(rp, "expected " + std::to_string(cols) + " columns");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row[static_cast<std::size_t>(c)];
        }
    }
    return m;
}

// Object view that records which keys were read and rejects the rest.
class Obj {
public:
    Obj(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr))
    {
        if (!j.is_object()) {
            throw ConfigError(where(ptr_), "expected an object");
        }
    }

    const json* get(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& req(const std::string& key)
    {
        const json* v = get(key);
        if (v == nullptr) {
            throw ConfigError(where(ptr_), "missing required key '" + key + "'");
        }
        return *v;
    }

    std::string at(const std::string& key) const { return child(ptr_, key); }
    const std::string& ptr() const { return ptr_; }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(child(ptr_, key), "unknown key '" + key + "'");
            }
        }
    }

    template <class F>
    void opt(const std::string& key, F&& assign)
    {
        if (const json* v = get(key)) {
            assign(*v, at(key));
        }
    }

private:
    const json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
};

// Wraps library validation errors with the location they came from.
template <class F>
auto located(const std::string& ptr, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where(ptr), e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(where(ptr), e.what());
    }
}

WaveformConfig parse_waveform(const json& j, const std::string& ptr, const std::filesystem::path& base_dir)
{
    Obj o(j, ptr);
    std::filesystem::path file = as_string(o.req("pulse_file"), o.at("pulse_file"));
    if (file.is_relative()) {
        file = base_dir / file;
    }
    double c = kSpeedOfLight;
    double n0 = 1.0;
    o.opt("c", [&](const json& v, const std::string& p) { c = as_number(v, p); });
    o.opt("n0", [&](const json& v, const std::string& p) { n0 = as_number(v, p); });
    std::optional<double> window;
    o.opt("observation_window", [&](const json& v, const std::string& p) { window = as_number(v, p); });
    o.finish();
    if (!(c > 0.0) || !(n0 > 0.0)) {
        throw ConfigError(ptr, "c and n0 must be positive");
    }
    WaveformModel model = located(child(ptr, "pulse_file"), [&] { return load_pulse_file(file.string(), c, n0); });
    model.observation_window = window;
    return WaveformConfig{file, c, n0, std::move(model)};
}

MultipathChannel parse_channel(Obj& o)
{
    MultipathChannel ch;
    ch.delays = as_numbers(o.req("delays"), o.at("delays"));
    ch.amplitudes = as_numbers(o.req("amplitudes"), o.at("amplitudes"));
    o.opt("los", [&](const json& v, const std::string& p) { ch.los = as_bool(v, p); });
    located(o.ptr(), [&] { ch.validate(); });
    return ch;
}

double channel_rii(const json& j, const std::string& ptr, const std::optional<WaveformConfig>& waveform)
{
    if (!waveform) {
        throw ConfigError(ptr, "a channel needs the waveform section");
    }
    Obj o(j, ptr);
    const MultipathChannel ch = parse_channel(o);
    const json* prior = o.get("prior");
    const json* los_bias = o.get("los_bias");
    o.finish();
    if (prior != nullptr && los_bias != nullptr) {
        throw ConfigError(ptr, "give either 'prior' or 'los_bias', not both");
    }
    return located(ptr, [&] {
        const PsiMatrix psi = psi_matrix(waveform->model, ch);
        if (los_bias != nullptr && as_bool(*los_bias, child(ptr, "los_bias"))) {
            return rii_with_channel_prior(psi, los_bias_prior(psi));
        }
        if (prior == nullptr) {
            return rii_no_prior(psi);
        }
        const std::string pp = child(ptr, "prior");
        Obj po(*prior, pp);
        const auto n = static_cast<Eigen::Index>(2 * psi.paths());
        ChannelPriorBlocks blocks = ChannelPriorBlocks::zeros(psi.paths());
        po.opt("xi_dd", [&](const json& v, const std::string& p) { blocks.xi_dd = as_number(v, p); });
        po.opt("xi_dk", [&](const json& v, const std::string& p) {
            const std::vector<double> row = as_numbers(v, p);
            if (static_cast<Eigen::Index>(row.size()) != n) {
                throw ConfigError(p, "expected " + std::to_string(n) + " entries");
            }
            blocks.xi_dk = Eigen::Map<const Eigen::RowVectorXd>(row.data(), n);
        });
        po.opt("xi_kk", [&](const json& v, const std::string& p) { blocks.xi_kk = as_matrix(v, p, n, n); });
        po.finish();
        return rii_with_channel_prior(psi, blocks);
    });
}

NetworkConfig parse_network(const json& j, const std::string& ptr, const std::optional<WaveformConfig>& waveform)
{
    Obj o(j, ptr);
    NetworkConfig net;
    o.opt("reciprocal", [&](const json& v, const std::string& p) { net.options.reciprocal = as_bool(v, p); });

    const std::string nodes_ptr = o.at("nodes");
    const json& nodes = as_array(o.req("nodes"), nodes_ptr);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string np = child(nodes_ptr, i);
        Obj no(nodes[i], np);
        Node node;
        node.id = as_string(no.req("id"), no.at("id"));
        const std::string kind = as_string(no.req("kind"), no.at("kind"));
        if (kind == "anchor") {
            node.kind = NodeKind::anchor;
        } else if (kind == "agent") {
            node.kind = NodeKind::agent;
        } else {
            throw ConfigError(no.at("kind"), "kind must be 'anchor' or 'agent'");
        }
        node.position = as_vec2(no.req("position"), no.at("position"));
        no.opt("prior", [&](const json& v, const std::string& p) {
            const Eigen::MatrixXd m = as_matrix(v, p, 2, 2);
            if (m(0, 1) != m(1, 0)) {
                throw ConfigError(p, "prior must be symmetric");
            }
            node.prior = InfoMatrix2{m(0, 0), m(0, 1), m(1, 1)};
        });
        no.finish();
        located(np, [&] { net.topology.add_node(std::move(node)); });
    }

    if (const json* links = o.get("links")) {
        const std::string links_ptr = o.at("links");
        as_array(*links, links_ptr);
        for (std::size_t i = 0; i < links->size(); ++i) {
            const std::string lp = child(links_ptr, i);
            Obj lo((*links)[i], lp);
            RangingLink link;
            link.from = as_string(lo.req("from"), lo.at("from"));
            link.to = as_string(lo.req("to"), lo.at("to"));
            lo.opt("phi", [&](const json& v, const std::string& p) { link.phi = as_number(v, p); });
            lo.opt("distance", [&](const json& v, const std::string& p) { link.distance = as_number(v, p); });
            const json* lambda = lo.get("lambda");
            const json* pathloss = lo.get("pathloss");
            const json* channel = lo.get("channel");
            lo.finish();
            if ((lambda != nullptr) + (pathloss != nullptr) + (channel != nullptr) != 1) {
                throw ConfigError(lp, "give exactly one of 'lambda', 'pathloss' or 'channel'");
            }
            for (const auto& [key, id] : {std::pair{"from", link.from}, std::pair{"to", link.to}}) {
                if (!net.topology.has_node(id)) {
                    throw ConfigError(lo.at(key), "unknown node '" + id + "'");
                }
            }
            if (lambda != nullptr) {
                link.lambda = as_number(*lambda, lo.at("lambda"));
            } else if (pathloss != nullptr) {
                const std::string pp = lo.at("pathloss");
                Obj po(*pathloss, pp);
                const double b = as_number(po.req("b"), po.at("b"));
                double z = 1.0;
                double r0 = 0.0;
                std::optional<double> rmax;
                po.opt("z", [&](const json& v, const std::string& p) { z = as_number(v, p); });
                po.opt("r0", [&](const json& v, const std::string& p) { r0 = as_number(v, p); });
                po.opt("rmax", [&](const json& v, const std::string& p) { rmax = as_number(v, p); });
                po.finish();
                link.lambda = located(pp, [&] {
                    const double d = net.topology.geometry(link).distance;
                    return rii_pathloss(d, b, z, r0, rmax);
                });
            } else {
                const std::string cp = lo.at("channel");
                link.lambda = channel_rii(*channel, cp, waveform);
                link.los = !channel->contains("los") || (*channel)["los"].get<bool>();
            }
            located(lp, [&] { net.topology.add_link(std::move(link)); });
        }
    }

    o.opt("joint_prior", [&](const json& v, const std::string& p) {
        const auto n = static_cast<Eigen::Index>(2 * net.topology.agent_ids().size());
        net.options.joint_prior = as_matrix(v, p, n, n);
    });
    o.finish();
    return net;
}

ExperimentSpec parse_experiment(const json& j, const std::string& ptr)
{
    Obj o(j, ptr);
    const ExperimentKind kind =
        located(o.at("kind"), [&] { return parse_experiment_kind(as_string(o.req("kind"), o.at("kind"))); });
    ExperimentSpec s = default_spec(kind);
    o.opt("trials", [&](const json& v, const std::string& p) { s.trials = as_unsigned(v, p); });
    o.opt("seed", [&](const json& v, const std::string& p) { s.seed = as_unsigned(v, p); });
    o.opt("threads", [&](const json& v, const std::string& p) { s.threads = as_unsigned(v, p); });
    o.opt("side", [&](const json& v, const std::string& p) { s.side = as_number(v, p); });
    o.opt("D", [&](const json& v, const std::string& p) { s.d = as_number(v, p); });
    o.opt("agents", [&](const json& v, const std::string& p) { s.agents = as_unsigned(v, p); });
    o.opt("random_anchors", [&](const json& v, const std::string& p) { s.random_anchors = as_unsigned(v, p); });
    o.opt("layouts", [&](const json& v, const std::string& p) {
        s.layouts.clear();
        for (std::size_t i = 0; i < as_array(v, p).size(); ++i) {
            const std::string ip = child(p, i);
            s.layouts.push_back(located(ip, [&] { return parse_anchor_layout(as_string(v[i], ip)); }));
        }
    });
    o.opt("link", [&](const json& v, const std::string& p) {
        Obj lo(v, p);
        lo.opt("k", [&](const json& x, const std::string& q) { s.link.k = as_number(x, q); });
        lo.opt("b", [&](const json& x, const std::string& q) { s.link.b = as_number(x, q); });
        lo.opt("r0", [&](const json& x, const std::string& q) { s.link.r0 = as_number(x, q); });
        lo.opt("rmax", [&](const json& x, const std::string& q) { s.link.rmax = as_number(x, q); });
        lo.opt("fading_sigma_db",
               [&](const json& x, const std::string& q) { s.link.fading_sigma_db = as_number(x, q); });
        lo.finish();
    });
    o.opt("rho_total", [&](const json& v, const std::string& p) { s.rho_total = as_number(v, p); });
    o.opt("anchor_fraction", [&](const json& v, const std::string& p) { s.anchor_fraction = as_number(v, p); });
    o.opt("poisson_counts", [&](const json& v, const std::string& p) { s.poisson_counts = as_bool(v, p); });
    o.opt("sweep", [&](const json& v, const std::string& p) { s.sweep = as_numbers(v, p); });
    o.opt("peer", [&](const json& v, const std::string& p) {
        Obj po(v, p);
        s.peer.mu = as_number(po.req("mu"), po.at("mu"));
        s.peer.eta = as_number(po.req("eta"), po.at("eta"));
        po.opt("theta", [&](const json& x, const std::string& q) { s.peer.theta = as_number(x, q); });
        po.finish();
    });
    o.opt("angles", [&](const json& v, const std::string& p) { s.angles = as_numbers(v, p); });
    o.opt("lambda0", [&](const json& v, const std::string& p) { s.lambda0 = as_number(v, p); });
    o.opt("dist", [&](const json& v, const std::string& p) {
        s.dist = located(p, [&] { return parse_lemma2_dist(as_string(v, p)); });
    });
    o.finish();
    located(ptr, [&] { s.validate(); });
    return s;
}

}  // namespace

ConfigDoc parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Messages read "[json.exception.parse_error.101] parse error at line L, column C: ...".
        const std::string msg = e.what();
        static const std::regex pos(R"(line (\d+), column (\d+))");
        std::smatch m;
        std::string location = "byte " + std::to_string(e.byte);
        if (std::regex_search(msg, m, pos)) {
            location = "line " + m[1].str() + ", column " + m[2].str();
        }
        const auto colon = msg.find(": ", msg.find("parse error"));
        throw ConfigError(location, colon == std::string::npos ? msg : msg.substr(colon + 2));
    }

    Obj o(root, "");
    ConfigDoc doc;
    const json& version = o.req("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
        throw ConfigError("/schema_version", "unsupported schema version (expected " +
                                                 std::to_string(kSchemaVersion) + ")");
    }
    o.opt("waveform", [&](const json& v, const std::string& p) { doc.waveform = parse_waveform(v, p, base_dir); });
    o.opt("network", [&](const json& v, const std::string& p) { doc.network = parse_network(v, p, doc.waveform); });
    o.opt("experiment", [&](const json& v, const std::string& p) { doc.experiment = parse_experiment(v, p); });
    o.finish();
    return doc;
}

ConfigDoc load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot read config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

}  // namespace locbound::cli
