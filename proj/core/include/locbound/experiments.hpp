#pragma once

#include "locbound/info_matrix.hpp"
#include "locbound/network.hpp"
#include "locbound/rng.hpp"
#include "locbound/stats.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace locbound {

enum class ExperimentKind { fig4, fig6, fig7, fig8, dense_scaling, extended_scaling, lemma1, lemma2 };

std::string to_string(ExperimentKind kind);
/// Throws std::invalid_argument for an unknown name.
ExperimentKind parse_experiment_kind(const std::string& name);

/// setI: corners (+-D, +-D). setII: edge midpoints (+-D, 0), (0, +-D).
/// both: set I and set II together. random: uniform over the area.
enum class AnchorLayout { set_i, set_ii, both, random };

std::string to_string(AnchorLayout layout);
AnchorLayout parse_anchor_layout(const std::string& name);

/// Anchor count of a fixed layout (4, 4, 8); 0 for random.
std::size_t layout_anchor_count(AnchorLayout layout);

enum class Lemma2Dist { uniform, pathloss };

std::string to_string(Lemma2Dist dist);
Lemma2Dist parse_lemma2_dist(const std::string& name);

/// lambda(d) = k * z / d^(2b) for r0 <= d <= rmax, else 0. z = 1 unless
/// fading_sigma_db > 0, in which case z is log-normal with that spread.
struct LinkModel {
    double k = 1.0;  ///< m^(2b)
    double b = 1.0;
    double r0 = 0.0;  ///< m
    std::optional<double> rmax;
    double fading_sigma_db = 0.0;

    /// Throws std::invalid_argument for nonpositive k or b, negative r0 or
    /// sigma, or rmax <= r0.
    void validate() const;
};

/// Node positions of one random network. Agent 0 is the reference agent in
/// extended deployments.
struct Deployment {
    std::vector<Eigen::Vector2d> anchors;
    std::vector<Eigen::Vector2d> agents;
};

/// Anchors of `layout` at offset `d`; random anchors use `rng`.
std::vector<Eigen::Vector2d> anchor_positions(AnchorLayout layout, double d, std::size_t random_count,
                                              double side, CounterRng& rng);

/// Dense deployment of trial `trial`: `na` agents uniform in the square of
/// side `side` centred at the origin. Agent i always draws from the same
/// substream, so growing `na` keeps the earlier agents in place.
Deployment deploy_dense(std::uint64_t seed, std::uint64_t trial, std::size_t nb, std::size_t na, double side,
                        AnchorLayout layout, double d);

/// Extended deployment: reference agent at the origin plus anchors and agents
/// uniform in the disc of radius `radius`. Counts are rho * pi * R^2, rounded,
/// or Poisson with that mean.
Deployment deploy_extended(std::uint64_t seed, std::uint64_t trial, double rho_b, double rho_a, double radius,
                           bool poisson_counts);

/// Topology with every link populated: agents are "agent<i>", anchors
/// "anchor<i>". Fading draws use `seed`.
Topology deployment_topology(const Deployment& dep, const LinkModel& model, std::uint64_t seed = 0);

/// Same EFIM as build_efim(deployment_topology(...)) assembled directly. The
/// returned topology is left empty.
NetworkEfim efim_from_deployment(const Deployment& dep, const LinkModel& model, std::uint64_t seed = 0);

/// Total EFIM (2Na x 2Na) of a deployment.
Eigen::MatrixXd deployment_total_efim(const Deployment& dep, const LinkModel& model, std::uint64_t seed = 0);

/// J_A of agent i alone.
InfoMatrix2 deployment_anchor_efim(const Deployment& dep, const LinkModel& model, std::size_t agent,
                                   std::uint64_t seed = 0);

/// Square-area network with lambda = 1/d^2 links. `nb` must match the layout
/// (or be 0) except for the random layout.
Topology gen_dense(std::uint64_t seed, std::size_t nb, std::size_t na, double side, AnchorLayout layout, double d);

/// Disc network with path-loss links (rii_pathloss with the given exponent).
/// Requires radius > r0 > 0.
Topology gen_extended(std::uint64_t seed, double rho_b, double rho_a, double radius, double r0, double b,
                      double fading_sigma_db = 0.0, bool poisson_counts = false);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::fig6;
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    // Square-area geometry.
    double side = 20.0;  ///< m
    double d = 10.0;     ///< m
    std::size_t agents = 15;
    std::size_t random_anchors = 8;
    std::vector<AnchorLayout> layouts;

    LinkModel link;

    // Disc geometry.
    double rho_total = 1.0 / std::numbers::pi;  ///< nodes / m^2
    double anchor_fraction = 0.875;
    bool poisson_counts = false;

    /// x values: Na, D, N or nu depending on kind.
    std::vector<double> sweep;

    // fig4
    EllipseForm peer{2.0, 1.0, 0.0};
    std::vector<double> angles;  ///< rad

    // lemma2
    double lambda0 = 0.25;
    Lemma2Dist dist = Lemma2Dist::uniform;

    /// Throws std::invalid_argument for trials == 0, nonpositive geometry or
    /// an empty sweep.
    void validate() const;
};

/// Defaults reproducing the reference figure or scaling run.
ExperimentSpec default_spec(ExperimentKind kind);

/// One sweep point of one series. Samples are (trial, agent) values; mean and
/// quantiles skip unlocalizable samples, which count as outages.
struct SweepRow {
    std::string series;
    double x = 0.0;
    std::size_t samples = 0;
    std::size_t outages = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
    double outage_fraction = 0.0;
    /// Per-trial mean (NaN when nothing in the trial was localizable).
    std::vector<double> trial_means;
};

struct NamedFit {
    std::string name;
    LinearFit fit;
};

struct ExperimentReport {
    ExperimentSpec spec;
    std::string x_name;
    std::string x_unit;
    std::string value_name;
    std::string value_unit;
    std::vector<SweepRow> rows;
    std::vector<NamedFit> fits;
    std::vector<std::pair<std::string, double>> summary;

    /// Throws std::out_of_range when missing.
    const SweepRow& row(const std::string& series, double x) const;
    std::vector<const SweepRow*> series(const std::string& name) const;
    double summary_value(const std::string& name) const;
    const LinearFit& fit(const std::string& name) const;
};

using ScalingResult = ExperimentReport;

/// Aggregates per-trial samples (NaN = unlocalizable) into a row.
SweepRow summarize(std::string series, double x, const std::vector<std::vector<double>>& per_trial);

ExperimentReport run_experiment(const ExperimentSpec& spec);
ExperimentReport run_fig4(const ExperimentSpec& spec);
ExperimentReport run_fig6(const ExperimentSpec& spec);
ExperimentReport run_fig7(const ExperimentSpec& spec);
ExperimentReport run_fig8(const ExperimentSpec& spec);
/// dense_scaling or extended_scaling. Throws std::invalid_argument for fewer
/// than 4 sweep points.
ScalingResult run_scaling(const ExperimentSpec& spec);
ExperimentReport run_lemma1(const ExperimentSpec& spec);
ExperimentReport run_lemma2(const ExperimentSpec& spec);

/// sum_{k<j} sin^2(phi_k - phi_j) in closed form.
double lemma1_sum(const std::vector<double>& angles);

/// Fraction of trials whose N uniform angles give lemma1_sum < N^2/32.
double lemma1_check(std::size_t n, std::size_t trials, std::uint64_t seed);

struct Lemma2Result {
    double epsilon = 0.0;    ///< P{lambda <= lambda0}
    double bound = 0.0;      ///< (4 eps (1 - eps))^(N/2)
    double empirical = 0.0;  ///< fraction with lambda_(N/2+1) <= lambda0
};

/// Order-statistic check for N i.i.d. RIIs. uniform: lambda ~ U[0, 1].
/// pathloss: lambda = 1/r^2 with r uniform over the annulus 1 <= r <= 2.
/// Throws std::invalid_argument when epsilon >= 1/2.
Lemma2Result lemma2_check(std::size_t n, double lambda0, Lemma2Dist dist, std::size_t trials, std::uint64_t seed);

/// Probability that one draw from `dist` is <= lambda0.
double lemma2_epsilon(double lambda0, Lemma2Dist dist);

}  // namespace locbound
