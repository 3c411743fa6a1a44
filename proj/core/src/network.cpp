#include "locbound/network.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace locbound {

namespace {

Eigen::Matrix2d rotation(double theta)
{
    Eigen::Matrix2d r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

// Relative pivot threshold on the Jacobi-scaled total EFIM.
constexpr double kTotalPivotTol = 1e-12;

}  // namespace

void Topology::add_node(Node node)
{
    if (node.id.empty()) {
        throw std::invalid_argument("node id must not be empty");
    }
    if (index_.contains(node.id)) {
        throw std::invalid_argument("duplicate node id '" + node.id + "'");
    }
    if (!node.position.allFinite()) {
        throw std::invalid_argument("node '" + node.id + "' has a non-finite position");
    }
    if (node.prior) {
        if (node.kind == NodeKind::anchor) {
            throw std::invalid_argument("anchor '" + node.id + "' cannot carry a position prior");
        }
        if (!node.prior->is_psd()) {
            throw std::invalid_argument("prior of agent '" + node.id + "' is not positive semi-definite");
        }
    }
    index_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
}

void Topology::add_link(RangingLink link)
{
    const Node& from = node(link.from);
    node(link.to);
    if (link.from == link.to) {
        throw std::invalid_argument("link '" + link.from + "' -> itself is not allowed");
    }
    if (from.kind != NodeKind::agent) {
        throw std::invalid_argument("link receiver '" + link.from + "' must be an agent");
    }
    if (!std::isfinite(link.lambda) || link.lambda < 0.0) {
        throw std::invalid_argument("link " + link.from + " <- " + link.to + " has invalid RII");
    }
    if (link.distance && !(*link.distance > 0.0)) {
        throw std::invalid_argument("link " + link.from + " <- " + link.to + " has nonpositive distance");
    }
    links_.push_back(std::move(link));
}

const Node& Topology::node(const std::string& id) const
{
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw UnknownNodeError("unknown node '" + id + "'");
    }
    return nodes_[it->second];
}

std::vector<std::string> Topology::agent_ids() const
{
    std::vector<std::string> out;
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::agent) {
            out.push_back(n.id);
        }
    }
    return out;
}

std::vector<std::string> Topology::anchor_ids() const
{
    std::vector<std::string> out;
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::anchor) {
            out.push_back(n.id);
        }
    }
    return out;
}

LinkGeometry Topology::geometry(const RangingLink& link) const
{
    const Eigen::Vector2d diff = node(link.from).position - node(link.to).position;
    const double d = diff.norm();
    if (!(d > 0.0) && !(link.phi && link.distance)) {
        throw std::invalid_argument("link " + link.from + " <- " + link.to +
                                    " joins coincident nodes and has no angle override");
    }
    LinkGeometry g;
    g.phi = link.phi ? *link.phi : std::atan2(diff.y(), diff.x());
    g.distance = link.distance ? *link.distance : d;
    return g;
}

Topology Topology::transformed(double theta, const Eigen::Vector2d& translation) const
{
    const Eigen::Matrix2d r = rotation(theta);
    Topology out;
    for (Node n : nodes_) {
        n.position = r * n.position + translation;
        if (n.prior) {
            n.prior = InfoMatrix2::from_matrix(r * n.prior->matrix() * r.transpose());
        }
        out.add_node(std::move(n));
    }
    for (RangingLink l : links_) {
        if (l.phi) {
            l.phi = *l.phi + theta;
        }
        out.add_link(std::move(l));
    }
    return out;
}

Topology Topology::with_reciprocal_links() const
{
    Topology out;
    for (const auto& n : nodes_) {
        out.add_node(n);
    }
    for (const auto& l : links_) {
        out.add_link(l);
    }
    for (const auto& l : links_) {
        if (node(l.to).kind != NodeKind::agent) {
            continue;
        }
        const auto reverse = std::find_if(links_.begin(), links_.end(), [&](const RangingLink& o) {
            return o.from == l.to && o.to == l.from;
        });
        if (reverse == links_.end()) {
            RangingLink mirrored = l;
            std::swap(mirrored.from, mirrored.to);
            out.add_link(std::move(mirrored));
        } else if (reverse->lambda != l.lambda) {
            throw std::invalid_argument("reciprocal channel violated: lambda(" + l.from + "," + l.to +
                                        ") != lambda(" + l.to + "," + l.from + ")");
        }
    }
    return out;
}

Topology Topology::without_node(const std::string& id) const
{
    node(id);
    Topology out;
    for (const auto& n : nodes_) {
        if (n.id != id) {
            out.add_node(n);
        }
    }
    for (const auto& l : links_) {
        if (l.from != id && l.to != id) {
            out.add_link(l);
        }
    }
    return out;
}

Topology Topology::relabeled_as_anchor(const std::string& id) const
{
    if (node(id).kind != NodeKind::agent) {
        throw std::invalid_argument("'" + id + "' is already an anchor");
    }
    Topology out;
    for (Node n : nodes_) {
        if (n.id == id) {
            n.kind = NodeKind::anchor;
            n.prior.reset();
        }
        out.add_node(std::move(n));
    }
    for (const auto& l : links_) {
        if (l.from != id) {
            out.add_link(l);
        } else if (node(l.to).kind == NodeKind::agent) {
            RangingLink moved = l;
            std::swap(moved.from, moved.to);
            out.add_link(std::move(moved));
        }
    }
    return out;
}

std::size_t NetworkEfim::index_of(const std::string& id) const
{
    const auto it = std::find(agents.begin(), agents.end(), id);
    if (it == agents.end()) {
        throw UnknownNodeError("unknown agent '" + id + "'");
    }
    return static_cast<std::size_t>(it - agents.begin());
}

InfoMatrix2 NetworkEfim::cooperation_info(std::size_t k, std::size_t j) const
{
    if (k == j) {
        throw std::invalid_argument("cooperation RI needs two distinct agents");
    }
    return InfoMatrix2::from_matrix(-cooperation.block(k, j));
}

NetworkEfim build_efim(const Topology& input, const BuildOptions& options)
{
    NetworkEfim net;
    net.topology = options.reciprocal ? input.with_reciprocal_links() : input;
    const Topology& topo = net.topology;
    net.agents = topo.agent_ids();
    const std::size_t na = net.agents.size();

    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t k = 0; k < na; ++k) {
        slot.emplace(net.agents[k], k);
    }

    net.anchor = BlockMatrix(na);
    net.cooperation = BlockMatrix(na);
    net.prior = BlockMatrix(na);

    for (const auto& link : topo.links()) {
        const LinkGeometry g = topo.geometry(link);
        const Eigen::Matrix2d ri = (link.lambda * rdm(g.phi)).matrix();
        const std::size_t k = slot.at(link.from);
        const auto peer = slot.find(link.to);
        if (peer == slot.end()) {
            net.anchor.add_to_block(k, k, ri);
        } else {
            const std::size_t j = peer->second;
            net.cooperation.add_to_block(k, k, ri);
            net.cooperation.add_to_block(j, j, ri);
            net.cooperation.add_to_block(k, j, -ri);
        }
    }

    for (std::size_t k = 0; k < na; ++k) {
        const Node& n = topo.node(net.agents[k]);
        if (n.prior) {
            net.prior.set_block(k, k, n.prior->matrix());
        }
    }
    if (options.joint_prior) {
        const Eigen::MatrixXd& p = *options.joint_prior;
        if (p.rows() != static_cast<Eigen::Index>(2 * na) || p.cols() != p.rows()) {
            throw std::invalid_argument("joint prior must be 2Na x 2Na");
        }
        net.prior += BlockMatrix::from_dense(p);
    }
    return net;
}

InfoMatrix2 agent_efim(const NetworkEfim& net, const std::string& id, ReductionPolicy policy)
{
    const std::size_t k = net.index_of(id);
    try {
        return schur_reduce(net.total(), {k}, policy).info_block(0);
    } catch (const SingularComplementError& e) {
        throw SingularComplementError(e.block(), "EFIM of agent '" + id + "' is undefined: agent '" +
                                                     net.agents.at(e.block()) +
                                                     "' has a singular information complement");
    }
}

ErrorBound agent_speb(const NetworkEfim& net, const std::string& id, ReductionPolicy policy)
{
    try {
        return speb(agent_efim(net, id, policy));
    } catch (const SingularComplementError&) {
        return ErrorBound::unlocalizable();
    }
}

std::vector<ErrorBound> all_agent_spebs(const Eigen::MatrixXd& total)
{
    std::vector<std::size_t> all(static_cast<std::size_t>(total.rows()) / 2);
    for (std::size_t k = 0; k < all.size(); ++k) {
        all[k] = k;
    }
    return agent_spebs(total, all);
}

std::vector<ErrorBound> agent_spebs(const Eigen::MatrixXd& total, const std::vector<std::size_t>& agents)
{
    const Eigen::Index n = total.rows();
    if (total.cols() != n || n % 2 != 0) {
        throw std::invalid_argument("total EFIM must be square with 2x2 blocks");
    }
    for (std::size_t k : agents) {
        if (static_cast<Eigen::Index>(2 * k) >= n) {
            throw std::out_of_range("agent block index out of range");
        }
    }
    std::vector<ErrorBound> out;
    out.reserve(agents.size());

    Eigen::VectorXd scale(n);
    bool singular = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(total(i, i) > 0.0)) {
            singular = true;
            scale(i) = 1.0;
        } else {
            scale(i) = 1.0 / std::sqrt(total(i, i));
        }
    }
    if (!singular) {
        const Eigen::MatrixXd scaled = scale.asDiagonal() * total * scale.asDiagonal();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
        const Eigen::VectorXd piv = ldlt.vectorD();
        singular = ldlt.info() != Eigen::Success || piv.minCoeff() <= kTotalPivotTol * piv.maxCoeff();
        if (!singular) {
            for (std::size_t k : agents) {
                const auto r = static_cast<Eigen::Index>(2 * k);
                Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
                rhs(r, 0) = scale(r);
                rhs(r + 1, 1) = scale(r + 1);
                const Eigen::MatrixXd x = ldlt.solve(rhs);
                const double tr = scale(r) * x(r, 0) + scale(r + 1) * x(r + 1, 1);
                out.push_back(ErrorBound::finite(tr));
            }
            return out;
        }
    }

    const BlockMatrix blocks = BlockMatrix::from_dense(total);
    for (std::size_t k : agents) {
        out.push_back(speb(schur_reduce(blocks, {k}, ReductionPolicy::pseudo_inverse).info_block(0)));
    }
    return out;
}

NetworkEfim join(const NetworkEfim& net, const Node& node, const std::vector<RangingLink>& links)
{
    if (node.kind != NodeKind::agent) {
        throw std::invalid_argument("only agents can join the EFIM");
    }
    if (net.topology.has_node(node.id)) {
        throw std::invalid_argument("duplicate node id '" + node.id + "'");
    }
    NetworkEfim out;
    out.topology = net.topology;
    out.topology.add_node(node);
    for (const auto& l : links) {
        if (l.from != node.id && l.to != node.id) {
            throw std::invalid_argument("joining link " + l.from + " <- " + l.to + " does not touch '" +
                                        node.id + "'");
        }
        out.topology.add_link(l);
    }
    out.agents = net.agents;
    out.agents.push_back(node.id);
    const std::size_t n = net.n_agents();

    // Bordered update: J_A gets the new diagonal block, and M = blkdiag(C_k,new)
    // enters as [[M, -M K], [-K^T M, K^T M K]] on the cooperation part.
    Eigen::Matrix2d anchor_new = Eigen::Matrix2d::Zero();
    std::vector<Eigen::Matrix2d> m(n, Eigen::Matrix2d::Zero());
    for (const auto& l : links) {
        const LinkGeometry g = out.topology.geometry(l);
        const Eigen::Matrix2d ri = (l.lambda * rdm(g.phi)).matrix();
        const std::string& other = l.from == node.id ? l.to : l.from;
        if (out.topology.node(other).kind == NodeKind::anchor) {
            anchor_new += ri;
        } else {
            m[net.index_of(other)] += ri;
        }
    }

    out.anchor = net.anchor.grown(1);
    out.anchor.set_block(n, n, anchor_new);
    out.cooperation = net.cooperation.grown(1);
    Eigen::Matrix2d ktmk = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        out.cooperation.add_to_block(k, k, m[k]);
        out.cooperation.set_block(k, n, -m[k]);
        ktmk += m[k];
    }
    out.cooperation.set_block(n, n, ktmk);
    out.prior = net.prior.grown(1);
    if (node.prior) {
        out.prior.set_block(n, n, node.prior->matrix());
    }
    return out;
}

NetworkEfim leave(const NetworkEfim& net, const std::string& id)
{
    const std::size_t k = net.index_of(id);
    NetworkEfim out;
    out.topology = net.topology.without_node(id);
    out.agents = net.agents;
    out.agents.erase(out.agents.begin() + static_cast<std::ptrdiff_t>(k));

    BlockMatrix coop = net.cooperation;
    for (std::size_t j = 0; j < net.n_agents(); ++j) {
        if (j != k) {
            coop.add_to_block(j, j, coop.block(k, j));  // subtract C_kj
        }
    }
    out.cooperation = coop.without_block(k);
    out.anchor = net.anchor.without_block(k);
    out.prior = net.prior.without_block(k);
    return out;
}

NetworkEfim temporal_efim(const std::vector<Eigen::Vector2d>& positions,
                          const std::vector<std::vector<AnchorObservation>>& anchors,
                          const std::vector<double>& step_info)
{
    const std::size_t n = positions.size();
    if (n < 2) {
        throw std::invalid_argument("a trajectory needs at least two positions");
    }
    if (anchors.size() != n || step_info.size() != n - 1) {
        throw std::invalid_argument("trajectory, anchor and step lengths do not match");
    }
    Topology topo;
    for (std::size_t k = 0; k < n; ++k) {
        topo.add_node({"t" + std::to_string(k), NodeKind::agent, positions[k], std::nullopt});
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < anchors[k].size(); ++i) {
            const std::string id = "t" + std::to_string(k) + "/a" + std::to_string(i);
            topo.add_node({id, NodeKind::anchor, anchors[k][i].anchor, std::nullopt});
            topo.add_link({"t" + std::to_string(k), id, anchors[k][i].lambda, true, std::nullopt, std::nullopt});
        }
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (!(step_info[k] >= 0.0)) {
            throw std::invalid_argument("step information must be nonnegative");
        }
        if (step_info[k] > 0.0) {
            topo.add_link({"t" + std::to_string(k + 1), "t" + std::to_string(k), step_info[k], true,
                           std::nullopt, std::nullopt});
        }
    }
    return build_efim(topo);
}

double odometry_info(double sigma)
{
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("odometry standard deviation must be positive");
    }
    return 1.0 / (sigma * sigma);
}

double anchor_equivalence_check(const Topology& topo, const std::string& id, double t2)
{
    if (!(t2 >= 0.0)) {
        throw std::invalid_argument("t2 must be nonnegative");
    }
    const Node& target = topo.node(id);
    if (target.kind != NodeKind::agent) {
        throw std::invalid_argument("'" + id + "' is not an agent");
    }

    Topology with_prior;
    for (Node n : topo.nodes()) {
        if (n.id == id) {
            n.prior = n.prior.value_or(InfoMatrix2::zero()) + InfoMatrix2::diag(t2, t2);
        }
        with_prior.add_node(std::move(n));
    }
    for (const auto& l : topo.links()) {
        with_prior.add_link(l);
    }

    const NetworkEfim a = build_efim(with_prior);
    const std::size_t k = a.index_of(id);
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < a.n_agents(); ++j) {
        if (j != k) {
            keep.push_back(j);
        }
    }
    const BlockMatrix reduced = schur_reduce(a.total(), keep, ReductionPolicy::pseudo_inverse);
    const BlockMatrix anchored = build_efim(topo.relabeled_as_anchor(id)).total();

    if (reduced.size() == 0) {
        return 0.0;
    }
    const double scale = anchored.dense().cwiseAbs().maxCoeff();
    const double diff = reduced.max_abs_diff(anchored);
    return scale > 0.0 ? diff / scale : diff;
}

double infinite_prior_level(const NetworkEfim& net, double scale)
{
    std::vector<double> diag;
    for (Eigen::Index i = 0; i < net.anchor.dense().rows(); ++i) {
        diag.push_back(net.anchor.dense()(i, i));
    }
    if (diag.empty()) {
        return scale;
    }
    std::nth_element(diag.begin(), diag.begin() + static_cast<std::ptrdiff_t>(diag.size() / 2), diag.end());
    double level = diag[diag.size() / 2];
    if (!(level > 0.0)) {
        level = *std::max_element(diag.begin(), diag.end());
    }
    return level > 0.0 ? scale * level : scale;
}

}  // namespace locbound
