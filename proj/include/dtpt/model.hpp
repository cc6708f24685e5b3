#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtpt/errors.hpp"
#include "dtpt/trig.hpp"

namespace dtpt {

// Full physical parameterization of one emitter array.
//
// Units: lambda0 == 1 (all lengths are carrier wavelengths), hbar == 1, and
// gamma0 sets the rate scale. Site positions are x_i = (i-1)*spacing +
// offsets[i-1]; the couplings depend only on the separations |x_i - x_j|.
struct ModelConfig {
    int n_emitters = 0;
    double j0 = 0.0;
    double phi = 0.0;
    double gamma0 = 1.0;
    double spacing = 0.75;
    std::vector<double> offsets;   // empty means all zero

    void validate() const {
        if (n_emitters < 2)
            throw config_error("n_emitters must be >= 2, got " + std::to_string(n_emitters));
        if (!(j0 >= 0.0))
            throw config_error("j0 must be >= 0, got " + std::to_string(j0));
        if (!(gamma0 >= 0.0))
            throw config_error("gamma0 must be >= 0, got " + std::to_string(gamma0));
        if (!(spacing > 0.0))
            throw config_error("spacing must be > 0, got " + std::to_string(spacing));
        if (!std::isfinite(phi))
            throw config_error("phi must be finite");
        if (!offsets.empty() && static_cast<int>(offsets.size()) != n_emitters)
            throw config_error("offsets must have length n_emitters (" +
                               std::to_string(n_emitters) + "), got " +
                               std::to_string(offsets.size()));
        auto x = positions();
        for (int i = 1; i < n_emitters; ++i)
            if (!(x[i] > x[i - 1]))
                throw config_error("positions must be strictly increasing; sites " +
                                   std::to_string(i) + " and " + std::to_string(i + 1) +
                                   " are out of order");
    }

    // Long double so that separations like 2*0.75 = 1.5 stay exact and the
    // kernel's quarter-turn zeros survive (see trig.hpp).
    std::vector<long double> positions() const {
        std::vector<long double> x(static_cast<size_t>(n_emitters));
        for (int i = 0; i < n_emitters; ++i) {
            x[static_cast<size_t>(i)] = static_cast<long double>(i) * static_cast<long double>(spacing);
            if (!offsets.empty())
                x[static_cast<size_t>(i)] += static_cast<long double>(offsets[static_cast<size_t>(i)]);
        }
        return x;
    }

    bool zero_offsets() const {
        for (double d : offsets)
            if (d != 0.0) return false;
        return true;
    }
};

// Site-basis coupling matrices: h = H_topo + H_ph (symmetric, zero diagonal in
// the frame rotating at the carrier) and the dissipation kernel gamma.
struct CouplingSet {
    Eigen::MatrixXd h;
    Eigen::MatrixXd gamma;
    Eigen::VectorXd j_list;   // nearest-neighbor bonds J_1 .. J_{N-1}
};

// J_i = J0 * [1 + (-1)^i cos(phi)], i = 1..N-1: J1 = J0(1-cos phi) on odd
// bonds, J2 = J0(1+cos phi) on even bonds.
inline Eigen::VectorXd dimerized_couplings(const ModelConfig& cfg) {
    cfg.validate();
    const double c = std::cos(cfg.phi);
    Eigen::VectorXd j(cfg.n_emitters - 1);
    for (int i = 1; i < cfg.n_emitters; ++i)
        j[i - 1] = cfg.j0 * (1.0 + (i % 2 == 0 ? 1.0 : -1.0) * c);
    return j;
}

// Photon-mediated kernels of the 1D environment:
//   g_ij     = (gamma0/2) sin(2 pi d_ij),   g_ii = 0
//   gamma_ij = gamma0 cos(2 pi d_ij),       gamma_ii = gamma0
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pairwise_kernels(const ModelConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_emitters;
    const auto x = cfg.positions();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd gam = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        gam(i, i) = cfg.gamma0;
        for (int j = i + 1; j < n; ++j) {
            const long double d = x[static_cast<size_t>(j)] - x[static_cast<size_t>(i)];
            if (d == 0.0L)
                throw config_error("coincident emitter positions at sites " +
                                   std::to_string(i + 1) + " and " + std::to_string(j + 1));
            const double gij = 0.5 * cfg.gamma0 * sin_2pi(d);
            const double cij = cfg.gamma0 * cos_2pi(d);
            g(i, j) = gij; g(j, i) = gij;
            gam(i, j) = cij; gam(j, i) = cij;
        }
    }
    return {g, gam};
}

inline CouplingSet assemble(const ModelConfig& cfg) {
    auto [g, gam] = pairwise_kernels(cfg);
    Eigen::VectorXd j = dimerized_couplings(cfg);
    for (int i = 0; i + 1 < cfg.n_emitters; ++i) {
        const double v = g(i, i + 1) + j[i];
        g(i, i + 1) = v;
        g(i + 1, i) = v;
    }
    return {std::move(g), std::move(gam), std::move(j)};
}

// Chiral symmetry S h S = -h with S = diag(+1,-1,+1,...): every
// same-sublattice entry of h (i+j even, including the diagonal) must vanish.
inline bool check_chiral(const Eigen::MatrixXd& h, double tol = 1e-12) {
    const int n = static_cast<int>(h.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i + j) % 2 == 0 && std::abs(h(i, j)) > tol)
                return false;
    return true;
}

// Parity of the dissipation kernel: gamma couples only same-sublattice sites,
// i.e. gamma_ij = 0 whenever i+j is odd.
inline bool check_parity(const Eigen::MatrixXd& gamma, double tol = 1e-12) {
    const int n = static_cast<int>(gamma.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i + j) % 2 == 1 && std::abs(gamma(i, j)) > tol)
                return false;
    return true;
}

}
