#pragma once

#include "locbound/block_matrix.hpp"
#include "locbound/info_matrix.hpp"
#include "locbound/ranging.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace locbound {

class UnknownNodeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NodeKind { anchor, agent };

/// Network node. For agents with a prior, `position` is the prior mean and
/// `prior` its 2x2 information matrix.
struct Node {
    std::string id;
    NodeKind kind = NodeKind::agent;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    std::optional<InfoMatrix2> prior;
};

struct LinkGeometry {
    double phi = 0.0;       ///< rad
    double distance = 0.0;  ///< m
};

/// Nodes plus directed ranging links. Mutators validate their argument.
class Topology {
public:
    /// Throws std::invalid_argument on a duplicate id, an anchor with a prior,
    /// or a non-PSD prior.
    void add_node(Node node);
    /// Throws UnknownNodeError for missing endpoints and std::invalid_argument
    /// for self links, links received by an anchor, or negative lambda.
    void add_link(RangingLink link);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<RangingLink>& links() const { return links_; }

    bool has_node(const std::string& id) const { return index_.contains(id); }
    const Node& node(const std::string& id) const;

    /// Agent ids in insertion order; this is the block order of the EFIM.
    std::vector<std::string> agent_ids() const;
    std::vector<std::string> anchor_ids() const;

    /// phi_kj = angle of p_k - p_j and d_kj, unless the link overrides them.
    /// Throws std::invalid_argument for coincident endpoints without override.
    LinkGeometry geometry(const RangingLink& link) const;

    /// Rigid motion: positions rotated by `rotation` (rad) then translated;
    /// priors and angle overrides rotate along.
    Topology transformed(double rotation, const Eigen::Vector2d& translation) const;

    /// Adds the missing direction of every agent-agent link so that
    /// lambda_kj = lambda_jk. Throws std::invalid_argument when both
    /// directions exist with different lambda.
    Topology with_reciprocal_links() const;

    /// Drops node `id` and every link touching it.
    Topology without_node(const std::string& id) const;

    /// Turns agent `id` into an anchor. Links it received from agents are
    /// moved to the sending agent, links it received from anchors are dropped.
    Topology relabeled_as_anchor(const std::string& id) const;

private:
    std::vector<Node> nodes_;
    std::vector<RangingLink> links_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Network EFIM with its three contributions kept apart. Blocks follow
/// `agents` order.
struct NetworkEfim {
    Topology topology;
    std::vector<std::string> agents;
    BlockMatrix anchor;       ///< J_A, block diagonal
    BlockMatrix cooperation;  ///< J_C
    BlockMatrix prior;        ///< Xi_P

    BlockMatrix total() const { return anchor + cooperation + prior; }
    std::size_t n_agents() const { return agents.size(); }

    /// Throws UnknownNodeError when `id` is not an agent.
    std::size_t index_of(const std::string& id) const;

    /// J_A(p_k).
    InfoMatrix2 anchor_info(std::size_t k) const { return anchor.info_block(k); }
    /// C_kj, the cooperation RI between agents k and j.
    InfoMatrix2 cooperation_info(std::size_t k, std::size_t j) const;
};

struct BuildOptions {
    /// Mirror agent-agent links first (see Topology::with_reciprocal_links).
    bool reciprocal = false;
    /// Optional correlated prior over all agent coordinates (2Na x 2Na),
    /// added to the per-node prior blocks.
    std::optional<Eigen::MatrixXd> joint_prior;
};

NetworkEfim build_efim(const Topology& topo, const BuildOptions& options = {});

/// 2x2 EFIM of agent `id`. Under the strict policy a singular complement
/// raises SingularComplementError naming the eliminated agent.
InfoMatrix2 agent_efim(const NetworkEfim& net, const std::string& id,
                       ReductionPolicy policy = ReductionPolicy::strict);

/// SPEB of agent `id`; a singular complement under the strict policy is
/// reported as unlocalizable.
ErrorBound agent_speb(const NetworkEfim& net, const std::string& id,
                      ReductionPolicy policy = ReductionPolicy::strict);

/// SPEB of every agent from one factorization of the total EFIM, in block
/// order. Falls back to per-agent generalized Schur reductions when the total
/// EFIM is singular.
std::vector<ErrorBound> all_agent_spebs(const Eigen::MatrixXd& total);

/// As all_agent_spebs, restricted to the listed agent block indices.
std::vector<ErrorBound> agent_spebs(const Eigen::MatrixXd& total, const std::vector<std::size_t>& agents);

/// Adds agent `node` with `links` (each must touch the new agent) by bordering
/// the existing EFIM. Throws std::invalid_argument for a duplicate id.
NetworkEfim join(const NetworkEfim& net, const Node& node, const std::vector<RangingLink>& links);

/// Removes agent `id`: deletes its block row/column and subtracts its
/// cooperation RI from the remaining diagonal blocks.
NetworkEfim leave(const NetworkEfim& net, const std::string& id);

/// Anchor measurement made at one time step.
struct AnchorObservation {
    Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
    double lambda = 0.0;
};

/// EFIM of a single agent's trajectory. Step k links positions k and k+1 with
/// intensity step_info[k]; agents are named "t0", "t1", ...
NetworkEfim temporal_efim(const std::vector<Eigen::Vector2d>& positions,
                          const std::vector<std::vector<AnchorObservation>>& anchors,
                          const std::vector<double>& step_info);

/// Step intensity of a Gaussian range-increment odometer with std sigma (m).
double odometry_info(double sigma);

/// Reduces out agent `id` after giving it prior diag(t2, t2) and compares the
/// remaining agents' EFIM with the network where `id` is an anchor. Returns
/// max |difference| / max |anchor-route entry|.
double anchor_equivalence_check(const Topology& topo, const std::string& id, double t2);

/// Default t2 for anchor conversions: scale times the median diagonal entry
/// of J_A (or scale when J_A is zero).
double infinite_prior_level(const NetworkEfim& net, double scale = 1e12);

}  // namespace locbound
