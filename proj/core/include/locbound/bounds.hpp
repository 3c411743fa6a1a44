#pragma once

#include "locbound/info_matrix.hpp"
#include "locbound/network.hpp"

#include <string>
#include <vector>

namespace locbound {

/// Discount applied to a peer's cooperation RI.
struct EffectiveRii {
    double xi = 0.0;   ///< 1 / (1 + nu * Delta(phi)), in [0, 1]
    double eff = 0.0;  ///< xi * nu
    /// The peer EFIM was singular; Delta(phi) = inf unless phi lies along the
    /// peer's only observed direction.
    bool peer_singular = false;
};

/// Effective RII a peer with anchor EFIM `peer` provides along `phi`.
/// Throws std::invalid_argument for nu < 0.
EffectiveRii effective_rii(const EllipseForm& peer, double nu, double phi);

struct PeerCoefficient {
    std::string peer;
    double nu = 0.0;   ///< cooperation intensity of C_kj
    double phi = 0.0;  ///< direction of C_kj
    double xi_lower = 0.0;
    double xi_upper = 0.0;
    bool peer_singular = false;
};

struct CooperationCoeffs {
    std::vector<PeerCoefficient> peers;
};

struct EfimBounds {
    InfoMatrix2 lower;  ///< J_L, ignores cooperation among the peers
    InfoMatrix2 upper;  ///< J_U, doubles the peers' mutual cooperation
    CooperationCoeffs coeffs;
};

/// Closed-form lower and upper EFIMs for agent `id`. Per-node prior blocks are
/// folded into the anchor part; a correlated joint prior is rejected.
EfimBounds efim_bounds(const NetworkEfim& net, const std::string& id);
EfimBounds efim_bounds(const Topology& topo, const std::string& id);

struct TwoAgentEfim {
    InfoMatrix2 first;
    InfoMatrix2 second;
};

/// Exact per-agent EFIMs of a two-agent network with cooperation RI
/// nu * rdm(phi).
TwoAgentEfim two_agent_exact(const InfoMatrix2& ja1, const InfoMatrix2& ja2, double nu, double phi);

}  // namespace locbound
