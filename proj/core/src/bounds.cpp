#include "locbound/bounds.hpp"

#include <cmath>

namespace locbound {

namespace {

// Angular tolerance (sin^2) for a ranging direction lying along the only
// observed axis of a singular peer EFIM.
constexpr double kParallelTol = 1e-12;

bool singular_ellipse(const EllipseForm& e)
{
    return e.mu <= 0.0 || e.eta <= kSingularRelTol * (e.mu + e.eta);
}

}  // namespace

EffectiveRii effective_rii(const EllipseForm& peer, double nu, double phi)
{
    if (!(nu >= 0.0)) {
        throw std::invalid_argument("cooperation intensity must be nonnegative");
    }
    const double c = std::cos(peer.theta - phi);
    const double s = std::sin(peer.theta - phi);
    EffectiveRii out;
    if (!singular_ellipse(peer)) {
        const double delta = c * c / peer.mu + s * s / peer.eta;
        out.xi = 1.0 / (1.0 + nu * delta);
    } else {
        out.peer_singular = true;
        if (peer.mu > 0.0 && s * s <= kParallelTol) {
            out.xi = 1.0 / (1.0 + nu * c * c / peer.mu);
        } else {
            out.xi = 0.0;
        }
    }
    out.eff = out.xi * nu;
    return out;
}

EfimBounds efim_bounds(const NetworkEfim& net, const std::string& id)
{
    const std::size_t na = net.n_agents();
    const std::size_t k = net.index_of(id);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < na; ++j) {
            if (i != j && net.prior.block(i, j).cwiseAbs().maxCoeff() > 0.0) {
                throw std::invalid_argument("EFIM bounds need independent agent priors");
            }
        }
    }

    std::vector<InfoMatrix2> own(na);
    for (std::size_t j = 0; j < na; ++j) {
        own[j] = net.anchor_info(j) + net.prior.info_block(j);
    }

    struct Ri {
        double nu = 0.0;
        double phi = 0.0;
    };
    auto rank_one = [&](std::size_t a, std::size_t b) {
        const InfoMatrix2 c = net.cooperation_info(a, b);
        const EllipseForm e = to_ellipse(c);
        if (e.eta > 1e-9 * (e.mu + e.eta)) {
            throw std::invalid_argument("cooperation RI between '" + net.agents[a] + "' and '" + net.agents[b] +
                                        "' is not rank one");
        }
        return Ri{e.mu, e.theta};
    };

    EfimBounds out;
    out.lower = own[k];
    out.upper = own[k];
    for (std::size_t j = 0; j < na; ++j) {
        if (j == k) {
            continue;
        }
        const Ri ckj = rank_one(k, j);
        if (ckj.nu == 0.0) {
            continue;
        }
        InfoMatrix2 boosted = own[j];
        for (std::size_t m = 0; m < na; ++m) {
            if (m != k && m != j) {
                boosted += 2.0 * net.cooperation_info(j, m);
            }
        }
        const EffectiveRii lo = effective_rii(to_ellipse(own[j]), ckj.nu, ckj.phi);
        const EffectiveRii hi = effective_rii(to_ellipse(boosted), ckj.nu, ckj.phi);
        const InfoMatrix2 r = rdm(ckj.phi);
        out.lower += lo.eff * r;
        out.upper += hi.eff * r;
        out.coeffs.peers.push_back({net.agents[j], ckj.nu, ckj.phi, lo.xi, hi.xi, lo.peer_singular});
    }
    return out;
}

EfimBounds efim_bounds(const Topology& topo, const std::string& id)
{
    return efim_bounds(build_efim(topo), id);
}

TwoAgentEfim two_agent_exact(const InfoMatrix2& ja1, const InfoMatrix2& ja2, double nu, double phi)
{
    const EffectiveRii to_first = effective_rii(to_ellipse(ja2), nu, phi);
    const EffectiveRii to_second = effective_rii(to_ellipse(ja1), nu, phi);
    return {ja1 + to_first.eff * rdm(phi), ja2 + to_second.eff * rdm(phi)};
}

}  // namespace locbound
