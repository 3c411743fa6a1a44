#include "locbound/bounds.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace locbound;
namespace lt = locbound::testing;
using locbound::testing::NetworkShape;
using locbound::testing::random_network;
using locbound::testing::random_pd2;

namespace {

constexpr double kPi = std::numbers::pi;

double min_eig(const InfoMatrix2& m)
{
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m.matrix()).eigenvalues()(0);
}

Eigen::Matrix4d two_agent_total(const InfoMatrix2& ja1, const InfoMatrix2& ja2, double nu, double phi)
{
    const Eigen::Matrix2d c = nu * rdm(phi).matrix();
    Eigen::Matrix4d m;
    m << ja1.matrix() + c, -c, -c, ja2.matrix() + c;
    return m;
}

}  // namespace

TEST(EffectiveRii, PeerUncertaintyDiscount)
{
    const EllipseForm peer{2.0, 1.0, 0.0};
    EXPECT_NEAR(effective_rii(peer, 1.0, 0.0).xi, 1.0 / 1.5, 1e-15);
    EXPECT_NEAR(effective_rii(peer, 1.0, kPi / 2).xi, 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(effective_rii(peer, 0.0, 0.3).eff, 0.0);
    EXPECT_THROW(effective_rii(peer, -1.0, 0.0), std::invalid_argument);
}

TEST(EffectiveRii, LimitsForLargeIntensity)
{
    // eff -> 1 / (q^T J^-1 q) as nu grows.
    const EllipseForm peer{2.0, 1.0, 0.0};
    EXPECT_NEAR(effective_rii(peer, 1e6, 0.0).eff, 2.0, 1e-3);
    EXPECT_NEAR(effective_rii(peer, 1e6, kPi / 4).eff, 4.0 / 3.0, 1e-3);
    EXPECT_NEAR(effective_rii(peer, 1e6, kPi / 2).eff, 1.0, 1e-3);
    double prev = 0.0;
    for (double nu : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const double eff = effective_rii(peer, nu, 0.6).eff;
        EXPECT_GT(eff, prev);
        EXPECT_LT(eff, nu);
        prev = eff;
    }
}

TEST(EffectiveRii, SingularPeer)
{
    const EllipseForm line{3.0, 0.0, 0.0};
    const EffectiveRii across = effective_rii(line, 2.0, kPi / 2);
    EXPECT_TRUE(across.peer_singular);
    EXPECT_DOUBLE_EQ(across.xi, 0.0);
    const EffectiveRii along = effective_rii(line, 2.0, 0.0);
    EXPECT_NEAR(along.xi, 1.0 / (1.0 + 2.0 / 3.0), 1e-15);
}

TEST(TwoAgent, WorkedInstance)
{
    const TwoAgentEfim e = two_agent_exact(InfoMatrix2::identity(), InfoMatrix2::identity(), 1.0, 0.0);
    EXPECT_NEAR(e.first.a11(), 1.5, 1e-15);
    EXPECT_NEAR(e.first.a12(), 0.0, 1e-15);
    EXPECT_NEAR(e.first.a22(), 1.0, 1e-15);
    EXPECT_NEAR(speb(e.first).value(), 5.0 / 3.0, 1e-15);
    EXPECT_LT(e.second.max_abs_diff(e.first), 1e-15);
}

TEST(TwoAgent, MatchesFourByFourSchur)
{
    auto rng = CounterRng::stream(51, 1);
    for (int t = 0; t < 1000; ++t) {
        const InfoMatrix2 ja1 = random_pd2(rng);
        const InfoMatrix2 ja2 = random_pd2(rng);
        const double nu = rng.uniform(0.0, 20.0);
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        const TwoAgentEfim e = two_agent_exact(ja1, ja2, nu, phi);
        const Eigen::Matrix4d m = two_agent_total(ja1, ja2, nu, phi);
        const Eigen::MatrixXd first = lt::brute_force_schur(m, 2);
        Eigen::Matrix4d swapped;
        swapped << m.bottomRightCorner<2, 2>(), m.bottomLeftCorner<2, 2>(), m.topRightCorner<2, 2>(),
            m.topLeftCorner<2, 2>();
        const Eigen::MatrixXd second = lt::brute_force_schur(swapped, 2);
        EXPECT_LT((e.first.matrix() - first).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((e.second.matrix() - second).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Bounds, TwoAgentsAreExact)
{
    Topology t;
    t.add_node({"a0", NodeKind::anchor, {0, 0}, std::nullopt});
    t.add_node({"a1", NodeKind::anchor, {0, 8}, std::nullopt});
    t.add_node({"a2", NodeKind::anchor, {8, 0}, std::nullopt});
    t.add_node({"x", NodeKind::agent, {2, 3}, std::nullopt});
    t.add_node({"y", NodeKind::agent, {6, 5}, std::nullopt});
    for (const char* a : {"a0", "a1"}) {
        t.add_link({"x", a, 1.0, true, std::nullopt, std::nullopt});
    }
    for (const char* a : {"a1", "a2"}) {
        t.add_link({"y", a, 0.8, true, std::nullopt, std::nullopt});
    }
    t.add_link({"x", "y", 0.5, true, std::nullopt, std::nullopt});
    const NetworkEfim net = build_efim(t, BuildOptions{.reciprocal = true, .joint_prior = std::nullopt});
    const EfimBounds b = efim_bounds(net, "x");
    const InfoMatrix2 exact = agent_efim(net, "x");
    EXPECT_LT(b.lower.max_abs_diff(exact), 1e-12);
    EXPECT_LT(b.upper.max_abs_diff(exact), 1e-12);
    ASSERT_EQ(b.coeffs.peers.size(), 1u);
    EXPECT_EQ(b.coeffs.peers[0].peer, "y");
    EXPECT_NEAR(b.coeffs.peers[0].nu, 1.0, 1e-12);  // both directions of the link
}

TEST(Bounds, SandwichOnRandomNetworks)
{
    auto rng = CounterRng::stream(52, 1);
    for (int t = 0; t < 300; ++t) {
        NetworkShape shape;
        shape.agents = 3 + static_cast<std::size_t>(rng.uniform() * 6);
        shape.priors = rng.uniform() < 0.5;
        const Topology topo = random_network(rng, shape);
        const NetworkEfim net = build_efim(topo);
        for (const auto& id : net.agents) {
            const EfimBounds b = efim_bounds(net, id);
            const InfoMatrix2 exact = agent_efim(net, id);
            const double tol = 1e-9 * exact.trace();
            EXPECT_GE(min_eig(exact - b.lower), -tol);
            EXPECT_GE(min_eig(b.upper - exact), -tol);
            const double s = speb(exact).value();
            EXPECT_LE(speb(b.upper).value(), s * (1.0 + 1e-12));
            EXPECT_LE(s, speb(b.lower).value() * (1.0 + 1e-12));
            for (const auto& p : b.coeffs.peers) {
                EXPECT_GE(p.xi_lower, 0.0);
                EXPECT_LE(p.xi_lower, p.xi_upper + 1e-15);
                EXPECT_LE(p.xi_upper, 1.0);
            }
        }
    }
}

TEST(Bounds, RejectsCorrelatedPriorAndNonRankOneCooperation)
{
    Topology t;
    t.add_node({"a", NodeKind::anchor, {0, 0}, std::nullopt});
    t.add_node({"x", NodeKind::agent, {1, 0}, std::nullopt});
    t.add_node({"y", NodeKind::agent, {0, 1}, std::nullopt});
    t.add_link({"x", "a", 1.0, true, std::nullopt, std::nullopt});
    t.add_link({"y", "a", 1.0, true, std::nullopt, std::nullopt});
    t.add_link({"x", "y", 1.0, true, std::nullopt, std::nullopt});
    BuildOptions opt;
    Eigen::MatrixXd joint = Eigen::MatrixXd::Identity(4, 4);
    joint(0, 2) = joint(2, 0) = 0.3;
    opt.joint_prior = joint;
    EXPECT_THROW((void)efim_bounds(build_efim(t, opt), "x"), std::invalid_argument);

    t.add_link({"x", "y", 1.0, true, 1.0, std::nullopt});  // second RI along another angle
    EXPECT_THROW((void)efim_bounds(t, "x"), std::invalid_argument);
}
