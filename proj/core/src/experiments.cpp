#include "locbound/experiments.hpp"

#include "locbound/bounds.hpp"
#include "locbound/ranging.hpp"

#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <type_traits>

namespace locbound {

namespace {

// Substream tags.
constexpr std::uint64_t kAnchorTag = 1;
constexpr std::uint64_t kAgentTag = 2;
constexpr std::uint64_t kFadingTag = 3;
constexpr std::uint64_t kCountTag = 4;
constexpr std::uint64_t kLemmaTag = 5;
constexpr std::uint64_t kTrialTag = 6;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Relative slack for the SPEB sandwich.
constexpr double kSandwichSlack = 1e-12;

template <class T>
T from_name(const std::string& name, const std::vector<std::pair<const char*, T>>& table, const char* what)
{
    for (const auto& [n, v] : table) {
        if (name == n) {
            return v;
        }
    }
    std::string msg = std::string("unknown ") + what + " '" + name + "' (expected";
    for (const auto& [n, v] : table) {
        msg += std::string(" ") + n;
    }
    throw std::invalid_argument(msg + ")");
}

template <class T>
std::string to_name(T value, const std::vector<std::pair<const char*, T>>& table)
{
    for (const auto& [n, v] : table) {
        if (v == value) {
            return n;
        }
    }
    return "?";
}

const std::vector<std::pair<const char*, ExperimentKind>>& kind_table()
{
    static const std::vector<std::pair<const char*, ExperimentKind>> t{
        {"fig4", ExperimentKind::fig4},
        {"fig6", ExperimentKind::fig6},
        {"fig7", ExperimentKind::fig7},
        {"fig8", ExperimentKind::fig8},
        {"dense_scaling", ExperimentKind::dense_scaling},
        {"extended_scaling", ExperimentKind::extended_scaling},
        {"lemma1", ExperimentKind::lemma1},
        {"lemma2", ExperimentKind::lemma2},
    };
    return t;
}

const std::vector<std::pair<const char*, AnchorLayout>>& layout_table()
{
    static const std::vector<std::pair<const char*, AnchorLayout>> t{
        {"setI", AnchorLayout::set_i},
        {"setII", AnchorLayout::set_ii},
        {"both", AnchorLayout::both},
        {"random", AnchorLayout::random},
    };
    return t;
}

const std::vector<std::pair<const char*, Lemma2Dist>>& dist_table()
{
    static const std::vector<std::pair<const char*, Lemma2Dist>> t{
        {"uniform", Lemma2Dist::uniform},
        {"pathloss", Lemma2Dist::pathloss},
    };
    return t;
}

// Runs fn(trial) for every trial, optionally on several threads. Each result
// lands in its own slot, so the output does not depend on scheduling.
template <class F>
auto map_trials(std::size_t trials, std::size_t threads, F fn) -> std::vector<std::invoke_result_t<F&, std::size_t>>
{
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<R> out(trials);
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, trials));
    if (workers == 1) {
        for (std::size_t t = 0; t < trials; ++t) {
            out[t] = fn(t);
        }
        return out;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = w; t < trials; t += workers) {
                    out[t] = fn(t);
                }
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

Eigen::Vector2d uniform_in_square(CounterRng& rng, double side)
{
    const double x = rng.uniform(-side / 2.0, side / 2.0);
    const double y = rng.uniform(-side / 2.0, side / 2.0);
    return {x, y};
}

Eigen::Vector2d uniform_in_disc(CounterRng& rng, double radius)
{
    const double r = radius * std::sqrt(rng.uniform());
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    return {r * std::cos(a), r * std::sin(a)};
}

// Global node numbering for fading substreams: agents first, then anchors.
double link_lambda(const LinkModel& m, const Eigen::Vector2d& rx, const Eigen::Vector2d& tx, std::uint64_t seed,
                   std::uint64_t rx_index, std::uint64_t tx_index)
{
    const double d = (rx - tx).norm();
    if (!(d > 0.0)) {
        if (m.r0 > 0.0) {
            return 0.0;
        }
        throw std::invalid_argument("deployment has coincident nodes");
    }
    double z = 1.0;
    if (m.fading_sigma_db > 0.0) {
        CounterRng rng = CounterRng::stream(seed, kFadingTag, rx_index, tx_index);
        z = std::pow(10.0, m.fading_sigma_db * rng.normal() / 10.0);
    }
    return m.k * rii_pathloss(d, m.b, z, m.r0, m.rmax);
}

Eigen::Matrix2d ri_matrix(double lambda, const Eigen::Vector2d& rx, const Eigen::Vector2d& tx)
{
    const Eigen::Vector2d u = (rx - tx).normalized();
    return lambda * u * u.transpose();
}

std::uint64_t trial_key(std::uint64_t seed, std::size_t trial)
{
    return CounterRng::stream(seed, kTrialTag, trial).key();
}

std::vector<double> finite_values(const std::vector<ErrorBound>& bounds)
{
    std::vector<double> out;
    out.reserve(bounds.size());
    for (const auto& b : bounds) {
        out.push_back(b.value_or(kNan));
    }
    return out;
}

std::vector<double> noncoop_spebs(const Deployment& dep, const LinkModel& model, std::uint64_t key)
{
    std::vector<double> out;
    out.reserve(dep.agents.size());
    for (std::size_t i = 0; i < dep.agents.size(); ++i) {
        out.push_back(speb(deployment_anchor_efim(dep, model, i, key)).value_or(kNan));
    }
    return out;
}

std::vector<AnchorLayout> layouts_or(const ExperimentSpec& spec, std::vector<AnchorLayout> fallback)
{
    return spec.layouts.empty() ? fallback : spec.layouts;
}

std::size_t anchors_for(const ExperimentSpec& spec, AnchorLayout layout)
{
    return layout == AnchorLayout::random ? spec.random_anchors : 0;
}

std::size_t as_count(double x, const char* what)
{
    if (!(x >= 1.0) || x != std::floor(x)) {
        throw std::invalid_argument(std::string(what) + " sweep values must be positive integers");
    }
    return static_cast<std::size_t>(x);
}

std::vector<double> logspace(double lo, double hi, std::size_t n)
{
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
}

std::string degrees_label(double rad)
{
    const long deg = std::lround(rad * 180.0 / std::numbers::pi);
    return "phi_" + std::to_string(deg) + "deg";
}

// Largest paired t statistic of an increase between consecutive sweep points.
double max_increase_t(const std::vector<const SweepRow*>& rows)
{
    double worst = -HUGE_VAL;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        worst = std::max(worst, paired_t(rows[i - 1]->trial_means, rows[i]->trial_means));
    }
    return worst;
}

LinearFit loglog_fit(const std::vector<double>& x, const std::vector<const SweepRow*>& rows)
{
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(rows[i]->mean));
    }
    return fit_line(lx, ly);
}

}  // namespace

std::string to_string(ExperimentKind kind) { return to_name(kind, kind_table()); }
ExperimentKind parse_experiment_kind(const std::string& name) { return from_name(name, kind_table(), "experiment"); }
std::string to_string(AnchorLayout layout) { return to_name(layout, layout_table()); }
AnchorLayout parse_anchor_layout(const std::string& name) { return from_name(name, layout_table(), "anchor layout"); }
std::string to_string(Lemma2Dist dist) { return to_name(dist, dist_table()); }
Lemma2Dist parse_lemma2_dist(const std::string& name) { return from_name(name, dist_table(), "distribution"); }

std::size_t layout_anchor_count(AnchorLayout layout)
{
    switch (layout) {
    case AnchorLayout::set_i:
    case AnchorLayout::set_ii:
        return 4;
    case AnchorLayout::both:
        return 8;
    case AnchorLayout::random:
        return 0;
    }
    return 0;
}

void LinkModel::validate() const
{
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw std::invalid_argument("link constant k must be positive");
    }
    if (!(b > 0.0) || !std::isfinite(b)) {
        throw std::invalid_argument("amplitude loss exponent b must be positive");
    }
    if (!(r0 >= 0.0)) {
        throw std::invalid_argument("r0 must be nonnegative");
    }
    if (rmax && !(*rmax > r0)) {
        throw std::invalid_argument("rmax must exceed r0");
    }
    if (!(fading_sigma_db >= 0.0)) {
        throw std::invalid_argument("fading sigma must be nonnegative");
    }
}

std::vector<Eigen::Vector2d> anchor_positions(AnchorLayout layout, double d, std::size_t random_count, double side,
                                              CounterRng& rng)
{
    std::vector<Eigen::Vector2d> out;
    const auto set_i = [&] {
        out.emplace_back(d, d);
        out.emplace_back(-d, d);
        out.emplace_back(-d, -d);
        out.emplace_back(d, -d);
    };
    const auto set_ii = [&] {
        out.emplace_back(d, 0.0);
        out.emplace_back(0.0, d);
        out.emplace_back(-d, 0.0);
        out.emplace_back(0.0, -d);
    };
    switch (layout) {
    case AnchorLayout::set_i:
        set_i();
        break;
    case AnchorLayout::set_ii:
        set_ii();
        break;
    case AnchorLayout::both:
        set_i();
        set_ii();
        break;
    case AnchorLayout::random:
        for (std::size_t i = 0; i < random_count; ++i) {
            out.push_back(uniform_in_square(rng, side));
        }
        break;
    }
    return out;
}

Deployment deploy_dense(std::uint64_t seed, std::uint64_t trial, std::size_t nb, std::size_t na, double side,
                        AnchorLayout layout, double d)
{
    if (!(side > 0.0) || !(d >= 0.0)) {
        throw std::invalid_argument("dense deployment needs side > 0 and D >= 0");
    }
    if (layout != AnchorLayout::random && nb != 0 && nb != layout_anchor_count(layout)) {
        throw std::invalid_argument("layout " + to_string(layout) + " has " +
                                    std::to_string(layout_anchor_count(layout)) + " anchors, not " +
                                    std::to_string(nb));
    }
    Deployment dep;
    CounterRng anchor_rng = CounterRng::stream(seed, kAnchorTag, trial);
    dep.anchors = anchor_positions(layout, d, nb, side, anchor_rng);
    dep.agents.reserve(na);
    for (std::size_t i = 0; i < na; ++i) {
        CounterRng rng = CounterRng::stream(seed, kAgentTag, trial, i);
        dep.agents.push_back(uniform_in_square(rng, side));
    }
    return dep;
}

Deployment deploy_extended(std::uint64_t seed, std::uint64_t trial, double rho_b, double rho_a, double radius,
                           bool poisson_counts)
{
    if (!(radius > 0.0) || !(rho_b >= 0.0) || !(rho_a >= 0.0)) {
        throw std::invalid_argument("extended deployment needs R > 0 and nonnegative densities");
    }
    const double area = std::numbers::pi * radius * radius;
    std::size_t nb = 0;
    std::size_t na_other = 0;
    if (poisson_counts) {
        CounterRng rng = CounterRng::stream(seed, kCountTag, trial);
        if (rho_b > 0.0) {
            nb = boost::random::poisson_distribution<std::size_t, double>(rho_b * area)(rng);
        }
        if (rho_a > 0.0) {
            na_other = boost::random::poisson_distribution<std::size_t, double>(rho_a * area)(rng);
        }
    } else {
        nb = static_cast<std::size_t>(std::llround(rho_b * area));
        const auto na = static_cast<std::size_t>(std::llround(rho_a * area));
        na_other = na > 0 ? na - 1 : 0;
    }
    Deployment dep;
    dep.anchors.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        CounterRng rng = CounterRng::stream(seed, kAnchorTag, trial, i);
        dep.anchors.push_back(uniform_in_disc(rng, radius));
    }
    dep.agents.reserve(na_other + 1);
    dep.agents.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i < na_other; ++i) {
        CounterRng rng = CounterRng::stream(seed, kAgentTag, trial, i);
        dep.agents.push_back(uniform_in_disc(rng, radius));
    }
    return dep;
}

Topology deployment_topology(const Deployment& dep, const LinkModel& model, std::uint64_t seed)
{
    model.validate();
    const std::size_t na = dep.agents.size();
    Topology topo;
    for (std::size_t i = 0; i < na; ++i) {
        topo.add_node({"agent" + std::to_string(i), NodeKind::agent, dep.agents[i], std::nullopt});
    }
    for (std::size_t i = 0; i < dep.anchors.size(); ++i) {
        topo.add_node({"anchor" + std::to_string(i), NodeKind::anchor, dep.anchors[i], std::nullopt});
    }
    for (std::size_t i = 0; i < na; ++i) {
        const std::string rx = "agent" + std::to_string(i);
        for (std::size_t a = 0; a < dep.anchors.size(); ++a) {
            const double lambda = link_lambda(model, dep.agents[i], dep.anchors[a], seed, i, na + a);
            topo.add_link({rx, "anchor" + std::to_string(a), lambda, true, std::nullopt, std::nullopt});
        }
        for (std::size_t j = 0; j < na; ++j) {
            if (j == i) {
                continue;
            }
            const double lambda = link_lambda(model, dep.agents[i], dep.agents[j], seed, i, j);
            topo.add_link({rx, "agent" + std::to_string(j), lambda, true, std::nullopt, std::nullopt});
        }
    }
    return topo;
}

InfoMatrix2 deployment_anchor_efim(const Deployment& dep, const LinkModel& model, std::size_t agent,
                                   std::uint64_t seed)
{
    const std::size_t na = dep.agents.size();
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    for (std::size_t a = 0; a < dep.anchors.size(); ++a) {
        const double lambda = link_lambda(model, dep.agents[agent], dep.anchors[a], seed, agent, na + a);
        if (lambda > 0.0) {
            j += ri_matrix(lambda, dep.agents[agent], dep.anchors[a]);
        }
    }
    return InfoMatrix2::from_matrix(j);
}

NetworkEfim efim_from_deployment(const Deployment& dep, const LinkModel& model, std::uint64_t seed)
{
    model.validate();
    const std::size_t na = dep.agents.size();
    NetworkEfim net;
    net.agents.reserve(na);
    for (std::size_t i = 0; i < na; ++i) {
        net.agents.push_back("agent" + std::to_string(i));
    }
    net.anchor = BlockMatrix(na);
    net.cooperation = BlockMatrix(na);
    net.prior = BlockMatrix(na);
    for (std::size_t i = 0; i < na; ++i) {
        net.anchor.set_block(i, i, deployment_anchor_efim(dep, model, i, seed).matrix());
        for (std::size_t j = 0; j < na; ++j) {
            if (j == i) {
                continue;
            }
            const double lambda = link_lambda(model, dep.agents[i], dep.agents[j], seed, i, j);
            if (lambda > 0.0) {
                const Eigen::Matrix2d ri = ri_matrix(lambda, dep.agents[i], dep.agents[j]);
                net.cooperation.add_to_block(i, i, ri);
                net.cooperation.add_to_block(j, j, ri);
                net.cooperation.add_to_block(i, j, -ri);
            }
        }
    }
    return net;
}

Eigen::MatrixXd deployment_total_efim(const Deployment& dep, const LinkModel& model, std::uint64_t seed)
{
    model.validate();
    const auto na = static_cast<Eigen::Index>(dep.agents.size());
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(2 * na, 2 * na);
    for (Eigen::Index i = 0; i < na; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        total.block<2, 2>(2 * i, 2 * i) += deployment_anchor_efim(dep, model, ui, seed).matrix();
        for (Eigen::Index j = 0; j < na; ++j) {
            if (j == i) {
                continue;
            }
            const auto uj = static_cast<std::size_t>(j);
            const double lambda = link_lambda(model, dep.agents[ui], dep.agents[uj], seed, ui, uj);
            if (lambda > 0.0) {
                // A link received by i informs both endpoints.
                const Eigen::Matrix2d ri = ri_matrix(lambda, dep.agents[ui], dep.agents[uj]);
                total.block<2, 2>(2 * i, 2 * i) += ri;
                total.block<2, 2>(2 * j, 2 * j) += ri;
                total.block<2, 2>(2 * i, 2 * j) -= ri;
                total.block<2, 2>(2 * j, 2 * i) -= ri;
            }
        }
    }
    return total;
}

Topology gen_dense(std::uint64_t seed, std::size_t nb, std::size_t na, double side, AnchorLayout layout, double d)
{
    return deployment_topology(deploy_dense(seed, 0, nb, na, side, layout, d), LinkModel{}, seed);
}

Topology gen_extended(std::uint64_t seed, double rho_b, double rho_a, double radius, double r0, double b,
                      double fading_sigma_db, bool poisson_counts)
{
    if (!(r0 > 0.0) || !(radius > r0)) {
        throw std::invalid_argument("extended network needs R > r0 > 0");
    }
    LinkModel model;
    model.b = b;
    model.r0 = r0;
    model.fading_sigma_db = fading_sigma_db;
    return deployment_topology(deploy_extended(seed, 0, rho_b, rho_a, radius, poisson_counts), model, seed);
}

void ExperimentSpec::validate() const
{
    if (trials == 0) {
        throw std::invalid_argument("trials must be at least 1");
    }
    if (!(side > 0.0) || !(d >= 0.0)) {
        throw std::invalid_argument("geometry must be positive");
    }
    if (!(rho_total > 0.0) || !(anchor_fraction > 0.0 && anchor_fraction < 1.0)) {
        throw std::invalid_argument("density must be positive and anchor fraction in (0, 1)");
    }
    if (kind != ExperimentKind::fig4 && sweep.empty()) {
        throw std::invalid_argument("sweep must not be empty");
    }
    link.validate();
}

ExperimentSpec default_spec(ExperimentKind kind)
{
    ExperimentSpec s;
    s.kind = kind;
    switch (kind) {
    case ExperimentKind::fig4:
        s.trials = 1;
        s.sweep = logspace(-2.0, 6.0, 81);
        s.angles = {0.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0};
        break;
    case ExperimentKind::fig6:
        s.sweep = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15};
        s.layouts = {AnchorLayout::set_i, AnchorLayout::set_ii, AnchorLayout::both};
        break;
    case ExperimentKind::fig7:
        s.sweep = {2, 3, 4, 5, 6, 8, 10, 12, 15};
        s.layouts = {AnchorLayout::set_i, AnchorLayout::set_ii, AnchorLayout::both};
        break;
    case ExperimentKind::fig8:
        for (int d = 1; d <= 14; ++d) {
            s.sweep.push_back(d);
        }
        s.layouts = {AnchorLayout::set_i, AnchorLayout::set_ii, AnchorLayout::both, AnchorLayout::random};
        break;
    case ExperimentKind::dense_scaling:
        s.sweep = {4, 8, 16, 32, 64};
        s.layouts = {AnchorLayout::set_ii};
        break;
    case ExperimentKind::extended_scaling:
        s.trials = 100;
        s.sweep = {64, 256, 1024, 4096};
        s.link.r0 = 1.0;
        break;
    case ExperimentKind::lemma1:
        s.trials = 10000;
        s.sweep = {16, 32, 64, 128};
        break;
    case ExperimentKind::lemma2:
        s.trials = 10000;
        s.sweep = {8, 16, 32, 64};
        break;
    }
    return s;
}

const SweepRow& ExperimentReport::row(const std::string& name, double x) const
{
    for (const auto& r : rows) {
        if (r.series == name && r.x == x) {
            return r;
        }
    }
    throw std::out_of_range("no row " + name + " at x = " + std::to_string(x));
}

std::vector<const SweepRow*> ExperimentReport::series(const std::string& name) const
{
    std::vector<const SweepRow*> out;
    for (const auto& r : rows) {
        if (r.series == name) {
            out.push_back(&r);
        }
    }
    return out;
}

double ExperimentReport::summary_value(const std::string& name) const
{
    for (const auto& [k, v] : summary) {
        if (k == name) {
            return v;
        }
    }
    throw std::out_of_range("no summary value '" + name + "'");
}

const LinearFit& ExperimentReport::fit(const std::string& name) const
{
    for (const auto& f : fits) {
        if (f.name == name) {
            return f.fit;
        }
    }
    throw std::out_of_range("no fit '" + name + "'");
}

SweepRow summarize(std::string series, double x, const std::vector<std::vector<double>>& per_trial)
{
    SweepRow row;
    row.series = std::move(series);
    row.x = x;
    std::vector<double> values;
    row.trial_means.reserve(per_trial.size());
    for (const auto& trial : per_trial) {
        CompensatedSum s;
        std::size_t n = 0;
        for (double v : trial) {
            ++row.samples;
            if (std::isnan(v)) {
                ++row.outages;
                continue;
            }
            values.push_back(v);
            s.add(v);
            ++n;
        }
        row.trial_means.push_back(n > 0 ? s.value() / static_cast<double>(n) : kNan);
    }
    row.outage_fraction = row.samples > 0 ? static_cast<double>(row.outages) / static_cast<double>(row.samples) : 0.0;
    if (values.empty()) {
        row.mean = row.std_error = row.q10 = row.q50 = row.q90 = kNan;
        return row;
    }
    row.mean = compensated_mean(values);
    row.std_error = sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
    row.q10 = quantile(values, 0.1);
    row.q50 = quantile(values, 0.5);
    row.q90 = quantile(values, 0.9);
    return row;
}

ExperimentReport run_experiment(const ExperimentSpec& spec)
{
    switch (spec.kind) {
    case ExperimentKind::fig4:
        return run_fig4(spec);
    case ExperimentKind::fig6:
        return run_fig6(spec);
    case ExperimentKind::fig7:
        return run_fig7(spec);
    case ExperimentKind::fig8:
        return run_fig8(spec);
    case ExperimentKind::dense_scaling:
    case ExperimentKind::extended_scaling:
        return run_scaling(spec);
    case ExperimentKind::lemma1:
        return run_lemma1(spec);
    case ExperimentKind::lemma2:
        return run_lemma2(spec);
    }
    throw std::invalid_argument("unknown experiment kind");
}

ExperimentReport run_fig4(const ExperimentSpec& spec)
{
    const std::vector<double> nus = spec.sweep.empty() ? logspace(-2.0, 6.0, 81) : spec.sweep;
    const std::vector<double> angles =
        spec.angles.empty() ? std::vector<double>{0.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0} : spec.angles;
    ExperimentReport rep;
    rep.spec = spec;
    rep.x_name = "nu";
    rep.x_unit = "1/m^2";
    rep.value_name = "effective_rii";
    rep.value_unit = "1/m^2";
    const double nu_max = *std::max_element(nus.begin(), nus.end());
    for (double phi : angles) {
        const std::string name = degrees_label(phi);
        for (double nu : nus) {
            rep.rows.push_back(summarize(name, nu, {{effective_rii(spec.peer, nu, phi).eff}}));
        }
        // nu -> inf limit of xi * nu is 1 / Delta(phi).
        const double c = std::cos(spec.peer.theta - phi);
        const double s = std::sin(spec.peer.theta - phi);
        const double delta = c * c / spec.peer.mu + s * s / spec.peer.eta;
        rep.summary.emplace_back("limit_" + name, 1.0 / delta);
        rep.summary.emplace_back("at_max_nu_" + name, effective_rii(spec.peer, nu_max, phi).eff);
    }
    return rep;
}

ExperimentReport run_fig6(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport rep;
    rep.spec = spec;
    rep.x_name = "agents";
    rep.x_unit = "count";
    rep.value_name = "speb";
    rep.value_unit = "m^2";
    for (AnchorLayout layout : layouts_or(spec, default_spec(ExperimentKind::fig6).layouts)) {
        const std::string base = to_string(layout);
        for (double x : spec.sweep) {
            const std::size_t na = as_count(x, "agent");
            using Pair = std::pair<std::vector<double>, std::vector<double>>;
            const auto per = map_trials(spec.trials, spec.threads, [&](std::size_t t) -> Pair {
                const Deployment dep =
                    deploy_dense(spec.seed, t, anchors_for(spec, layout), na, spec.side, layout, spec.d);
                const std::uint64_t key = trial_key(spec.seed, t);
                return {finite_values(all_agent_spebs(deployment_total_efim(dep, spec.link, key))),
                        noncoop_spebs(dep, spec.link, key)};
            });
            std::vector<std::vector<double>> coop;
            std::vector<std::vector<double>> noncoop;
            for (const auto& [c, n] : per) {
                coop.push_back(c);
                noncoop.push_back(n);
            }
            rep.rows.push_back(summarize(base + "/coop", x, coop));
            rep.rows.push_back(summarize(base + "/noncoop", x, noncoop));
        }
        rep.summary.emplace_back("max_increase_t_" + base + "/coop", max_increase_t(rep.series(base + "/coop")));
    }
    return rep;
}

ExperimentReport run_fig7(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport rep;
    rep.spec = spec;
    rep.x_name = "agents";
    rep.x_unit = "count";
    rep.value_name = "speb_lower_over_upper";
    rep.value_unit = "1";
    std::size_t violations = 0;
    double max_ratio = 0.0;
    double pair_deviation = 0.0;
    for (AnchorLayout layout : layouts_or(spec, default_spec(ExperimentKind::fig7).layouts)) {
        const std::string base = to_string(layout);
        for (double x : spec.sweep) {
            const std::size_t na = as_count(x, "agent");
            struct Trial {
                std::vector<double> ratios;
                std::size_t violations = 0;
            };
            const auto per = map_trials(spec.trials, spec.threads, [&](std::size_t t) {
                const Deployment dep =
                    deploy_dense(spec.seed, t, anchors_for(spec, layout), na, spec.side, layout, spec.d);
                const NetworkEfim net = efim_from_deployment(dep, spec.link, trial_key(spec.seed, t));
                const std::vector<ErrorBound> exact = all_agent_spebs(net.total().dense());
                Trial out;
                for (std::size_t k = 0; k < na; ++k) {
                    const EfimBounds b = efim_bounds(net, net.agents[k]);
                    const ErrorBound lo = speb(b.upper);
                    const ErrorBound hi = speb(b.lower);
                    if (!lo.localizable() || !hi.localizable() || !exact[k].localizable()) {
                        out.ratios.push_back(kNan);
                        continue;
                    }
                    const double e = exact[k].value();
                    if (lo.value() > e * (1.0 + kSandwichSlack) || e > hi.value() * (1.0 + kSandwichSlack)) {
                        ++out.violations;
                    }
                    out.ratios.push_back(lo.value() / hi.value());
                }
                return out;
            });
            std::vector<std::vector<double>> ratios;
            for (const auto& tr : per) {
                violations += tr.violations;
                ratios.push_back(tr.ratios);
                for (double r : tr.ratios) {
                    if (!std::isnan(r)) {
                        max_ratio = std::max(max_ratio, r);
                        if (na == 2) {
                            pair_deviation = std::max(pair_deviation, std::abs(r - 1.0));
                        }
                    }
                }
            }
            rep.rows.push_back(summarize(base, x, ratios));
        }
        rep.summary.emplace_back("max_increase_t_" + base, max_increase_t(rep.series(base)));
    }
    rep.summary.emplace_back("sandwich_violations", static_cast<double>(violations));
    rep.summary.emplace_back("max_ratio", max_ratio);
    rep.summary.emplace_back("max_deviation_at_two_agents", pair_deviation);
    return rep;
}

ExperimentReport run_fig8(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport rep;
    rep.spec = spec;
    rep.x_name = "D";
    rep.x_unit = "m";
    rep.value_name = "speb";
    rep.value_unit = "m^2";
    for (AnchorLayout layout : layouts_or(spec, default_spec(ExperimentKind::fig8).layouts)) {
        const std::string base = to_string(layout);
        for (double d : spec.sweep) {
            if (!(d >= 0.0)) {
                throw std::invalid_argument("D sweep values must be nonnegative");
            }
            const auto per = map_trials(spec.trials, spec.threads, [&](std::size_t t) {
                const Deployment dep =
                    deploy_dense(spec.seed, t, anchors_for(spec, layout), spec.agents, spec.side, layout, d);
                return finite_values(all_agent_spebs(deployment_total_efim(dep, spec.link, trial_key(spec.seed, t))));
            });
            rep.rows.push_back(summarize(base, d, per));
        }
        const auto rows = rep.series(base);
        std::size_t best = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i]->mean < rows[best]->mean) {
                best = i;
            }
        }
        rep.summary.emplace_back("argmin_D_" + base, rows[best]->x);
        rep.summary.emplace_back("min_speb_" + base, rows[best]->mean);
        rep.summary.emplace_back("first_over_min_" + base, rows.front()->mean / rows[best]->mean);
        rep.summary.emplace_back("interior_min_" + base,
                                 best != 0 && best + 1 != rows.size() ? 1.0 : 0.0);
    }
    // Smallest swept D at which set I stops beating set II.
    const auto s1 = rep.series("setI");
    const auto s2 = rep.series("setII");
    if (!s1.empty() && s1.size() == s2.size()) {
        double crossing = kNan;
        for (std::size_t i = 0; i < s1.size(); ++i) {
            if (s1[i]->mean > s2[i]->mean) {
                crossing = s1[i]->x;
                break;
            }
        }
        rep.summary.emplace_back("setI_worse_from_D", crossing);
    }
    return rep;
}

ScalingResult run_scaling(const ExperimentSpec& spec)
{
    spec.validate();
    if (spec.sweep.size() < 4) {
        throw std::invalid_argument("scaling sweep too short (need at least 4 points)");
    }
    ScalingResult rep;
    rep.spec = spec;
    rep.value_name = "speb";
    rep.value_unit = "m^2";
    rep.x_unit = "count";

    if (spec.kind == ExperimentKind::dense_scaling) {
        const AnchorLayout layout = layouts_or(spec, {AnchorLayout::set_ii}).front();
        rep.x_name = "agents";
        std::size_t nb = layout == AnchorLayout::random ? spec.random_anchors : layout_anchor_count(layout);
        std::vector<double> nodes;
        for (double x : spec.sweep) {
            const std::size_t na = as_count(x, "agent");
            nodes.push_back(static_cast<double>(nb + na));
            using Pair = std::pair<std::vector<double>, std::vector<double>>;
            const auto per = map_trials(spec.trials, spec.threads, [&](std::size_t t) -> Pair {
                const Deployment dep =
                    deploy_dense(spec.seed, t, anchors_for(spec, layout), na, spec.side, layout, spec.d);
                const std::uint64_t key = trial_key(spec.seed, t);
                return {finite_values(all_agent_spebs(deployment_total_efim(dep, spec.link, key))),
                        noncoop_spebs(dep, spec.link, key)};
            });
            std::vector<std::vector<double>> coop;
            std::vector<std::vector<double>> noncoop;
            for (const auto& [c, n] : per) {
                coop.push_back(c);
                noncoop.push_back(n);
            }
            rep.rows.push_back(summarize("coop", x, coop));
            rep.rows.push_back(summarize("noncoop", x, noncoop));
        }
        rep.fits.push_back({"coop_vs_nodes", loglog_fit(nodes, rep.series("coop"))});
        rep.fits.push_back({"noncoop_vs_agents", loglog_fit(spec.sweep, rep.series("noncoop"))});
        rep.summary.emplace_back("anchors", static_cast<double>(nb));
        return rep;
    }

    if (spec.kind != ExperimentKind::extended_scaling) {
        throw std::invalid_argument("run_scaling needs dense_scaling or extended_scaling");
    }
    if (!(spec.link.r0 > 0.0)) {
        throw std::invalid_argument("extended scaling needs r0 > 0");
    }
    rep.x_name = "nodes";
    const double rho_b = spec.rho_total * spec.anchor_fraction;
    const double rho_a = spec.rho_total * (1.0 - spec.anchor_fraction);
    std::vector<double> log_nodes;
    std::vector<double> log_anchors;
    for (double x : spec.sweep) {
        const std::size_t n = as_count(x, "node");
        const double radius = std::sqrt(static_cast<double>(n) / (std::numbers::pi * spec.rho_total));
        if (!(radius > spec.link.r0)) {
            throw std::invalid_argument("network radius must exceed r0");
        }
        log_nodes.push_back(std::log(static_cast<double>(n)));
        log_anchors.push_back(std::log(rho_b * std::numbers::pi * radius * radius));
        using Pair = std::pair<std::vector<double>, std::vector<double>>;
        const auto per = map_trials(spec.trials, spec.threads, [&](std::size_t t) -> Pair {
            const Deployment dep = deploy_extended(spec.seed, t, rho_b, rho_a, radius, spec.poisson_counts);
            const std::uint64_t key = trial_key(spec.seed, t);
            const Eigen::MatrixXd total = deployment_total_efim(dep, spec.link, key);
            return {{agent_spebs(total, {0}).front().value_or(kNan)},
                    {speb(deployment_anchor_efim(dep, spec.link, 0, key)).value_or(kNan)}};
        });
        std::vector<std::vector<double>> coop;
        std::vector<std::vector<double>> noncoop;
        for (const auto& [c, nc] : per) {
            coop.push_back(c);
            noncoop.push_back(nc);
        }
        rep.rows.push_back(summarize("coop", x, coop));
        rep.rows.push_back(summarize("noncoop", x, noncoop));
    }

    const auto coop = rep.series("coop");
    const auto noncoop = rep.series("noncoop");
    const auto spread = [](const std::vector<const SweepRow*>& rows, const std::vector<double>& scale) {
        double lo = HUGE_VAL;
        double hi = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            lo = std::min(lo, rows[i]->mean * scale[i]);
            hi = std::max(hi, rows[i]->mean * scale[i]);
        }
        return hi / lo;
    };
    rep.summary.emplace_back("coop_speb_log_n_spread", spread(coop, log_nodes));
    rep.summary.emplace_back("noncoop_speb_log_nb_spread", spread(noncoop, log_anchors));
    const std::size_t last = coop.size() - 1;
    rep.summary.emplace_back("coop_last_ratio", coop[last]->mean / coop[last - 1]->mean);
    rep.summary.emplace_back("noncoop_last_ratio", noncoop[last]->mean / noncoop[last - 1]->mean);

    std::vector<double> loglog;
    for (double ln : log_nodes) {
        loglog.push_back(std::log(ln));
    }
    std::vector<double> log_mean;
    for (const auto* r : coop) {
        log_mean.push_back(std::log(r->mean));
    }
    rep.fits.push_back({"coop_vs_log_nodes", fit_line(loglog, log_mean)});
    rep.fits.push_back({"coop_vs_nodes", fit_line(log_nodes, log_mean)});
    return rep;
}

double lemma1_sum(const std::vector<double>& angles)
{
    // sum_{k<j} sin^2(a_k - a_j) = N^2/4 - |sum e^{2i a}|^2 / 4.
    double re = 0.0;
    double im = 0.0;
    for (double a : angles) {
        re += std::cos(2.0 * a);
        im += std::sin(2.0 * a);
    }
    const auto n = static_cast<double>(angles.size());
    return std::max(0.0, (n * n - (re * re + im * im)) / 4.0);
}

double lemma1_check(std::size_t n, std::size_t trials, std::uint64_t seed)
{
    if (trials == 0) {
        throw std::invalid_argument("trials must be at least 1");
    }
    const double floor = static_cast<double>(n * n) / 32.0;
    std::size_t violations = 0;
    std::vector<double> angles(n);
    for (std::size_t t = 0; t < trials; ++t) {
        CounterRng rng = CounterRng::stream(seed, kLemmaTag, n, t);
        for (auto& a : angles) {
            a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        if (lemma1_sum(angles) < floor) {
            ++violations;
        }
    }
    return static_cast<double>(violations) / static_cast<double>(trials);
}

double lemma2_epsilon(double lambda0, Lemma2Dist dist)
{
    switch (dist) {
    case Lemma2Dist::uniform:
        return std::clamp(lambda0, 0.0, 1.0);
    case Lemma2Dist::pathloss:
        // r^2 is uniform on [1, 4]; lambda <= lambda0 iff r^2 >= 1/lambda0.
        if (lambda0 <= 0.25) {
            return 0.0;
        }
        return std::clamp((4.0 - 1.0 / lambda0) / 3.0, 0.0, 1.0);
    }
    return 1.0;
}

Lemma2Result lemma2_check(std::size_t n, double lambda0, Lemma2Dist dist, std::size_t trials, std::uint64_t seed)
{
    if (trials == 0 || n == 0) {
        throw std::invalid_argument("lemma2 needs N >= 1 and trials >= 1");
    }
    Lemma2Result out;
    out.epsilon = lemma2_epsilon(lambda0, dist);
    if (!(out.epsilon < 0.5)) {
        throw std::invalid_argument("lemma2 needs P{lambda <= lambda0} < 1/2");
    }
    out.bound = std::pow(4.0 * out.epsilon * (1.0 - out.epsilon), static_cast<double>(n) / 2.0);
    std::size_t hits = 0;
    std::vector<double> lambdas(n);
    const std::size_t rank = n / 2;  // 0-based index of lambda_(N/2+1)
    for (std::size_t t = 0; t < trials; ++t) {
        CounterRng rng = CounterRng::stream(seed, kLemmaTag + 1, n, t);
        for (auto& l : lambdas) {
            const double u = rng.uniform();
            l = dist == Lemma2Dist::uniform ? u : 1.0 / (1.0 + 3.0 * u);
        }
        std::nth_element(lambdas.begin(), lambdas.begin() + static_cast<std::ptrdiff_t>(rank), lambdas.end());
        if (lambdas[rank] <= lambda0) {
            ++hits;
        }
    }
    out.empirical = static_cast<double>(hits) / static_cast<double>(trials);
    return out;
}

ExperimentReport run_lemma1(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport rep;
    rep.spec = spec;
    rep.x_name = "N";
    rep.x_unit = "count";
    rep.value_name = "violation_fraction";
    rep.value_unit = "1";
    for (double x : spec.sweep) {
        const std::size_t n = as_count(x, "N");
        const double frac = lemma1_check(n, spec.trials, spec.seed);
        SweepRow row = summarize("violation", x, {{frac}});
        row.samples = spec.trials;
        rep.rows.push_back(row);
        rep.summary.emplace_back("violation_fraction_N" + std::to_string(n), frac);
    }
    return rep;
}

ExperimentReport run_lemma2(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport rep;
    rep.spec = spec;
    rep.x_name = "N";
    rep.x_unit = "count";
    rep.value_name = "probability";
    rep.value_unit = "1";
    for (double x : spec.sweep) {
        const std::size_t n = as_count(x, "N");
        const Lemma2Result r = lemma2_check(n, spec.lambda0, spec.dist, spec.trials, spec.seed);
        SweepRow emp = summarize("empirical", x, {{r.empirical}});
        emp.samples = spec.trials;
        rep.rows.push_back(emp);
        rep.rows.push_back(summarize("bound", x, {{r.bound}}));
    }
    rep.summary.emplace_back("epsilon", lemma2_epsilon(spec.lambda0, spec.dist));
    return rep;
}

}  // namespace locbound
