#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtpt/errors.hpp"
#include "dtpt/model.hpp"

namespace dtpt {

// Real eigen-decomposition of h (site basis), energies ascending. Columns of
// `vectors` follow a deterministic sign convention: the entry of largest
// magnitude in each column is positive, ties broken by the lowest site index.
struct ModeSet {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
    std::vector<int> edge_indices;   // midgap column indices; empty if h is not chiral
};

// Dissipation kernel rotated into the eigenmode basis, Gamma_mn = V^T Gamma V.
struct DecayMatrix {
    Eigen::MatrixXd gamma_mn;
    int edge_index = -1;             // column of the edge/zero mode, -1 if none tagged
};

struct EdgeState {
    std::vector<int> indices;            // one column (odd N) or the midgap pair (even N)
    Eigen::MatrixXd distributions;       // N x indices.size(), per-site |psi|^2
};

struct RadiatingOverlap {
    double o_cos = 0.0;    // edge-state overlap with the normalized cosine factor of Gamma
    double o_sin = 0.0;    // ... and with the sine factor
    double gamma00 = 0.0;  // gamma0 (<u,psi>^2 + <v,psi>^2), the rank-2 reconstruction
};

struct NuFit {
    double nu = 0.0;
    double residual = 0.0;
    bool below_floor = false;        // some |Gamma_m'0| sat under the log floor; nu is +inf
    std::vector<int> n_list;
    std::vector<double> ln_abs;      // ln(|Gamma_m'0| / gamma0) per N
};

// Mode label m = index - (N-1)/2, so the zero mode of an odd chain is m = 0
// and the spectrum runs m = -(N-1)/2 .. +(N-1)/2 (half-integers for even N).
inline double mode_label(int index, int n) {
    return index - 0.5 * (n - 1);
}

inline ModeSet diagonalize(const CouplingSet& cs) {
    const int n = static_cast<int>(cs.h.rows());
    if (cs.h.cols() != n)
        throw dimension_mismatch("h must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cs.h);
    if (solver.info() != Eigen::Success)
        throw convergence_failure("symmetric eigensolver did not converge");

    ModeSet m;
    m.energies = solver.eigenvalues();
    m.vectors = solver.eigenvectors();
    for (int c = 0; c < n; ++c) {
        int imax = 0;
        double best = std::abs(m.vectors(0, c));
        for (int r = 1; r < n; ++r) {
            const double a = std::abs(m.vectors(r, c));
            if (a > best) { best = a; imax = r; }
        }
        if (m.vectors(imax, c) < 0.0)
            m.vectors.col(c) = -m.vectors.col(c);
    }

    if (check_chiral(cs.h)) {
        if (n % 2 == 1) {
            m.edge_indices = {(n - 1) / 2};
        } else {
            m.edge_indices = {n / 2 - 1, n / 2};
        }
    }
    return m;
}

namespace detail {

inline double spectrum_scale(const Eigen::VectorXd& e) {
    double s = 0.0;
    for (int i = 0; i < e.size(); ++i) s = std::max(s, std::abs(e[i]));
    return std::max(s, 1e-300);
}

}

// Midgap state(s) of a chiral chain: the zero mode for odd N, the two
// smallest-|E| modes for even N. The chiral precondition is checked through
// its spectral fingerprint (energies symmetric about zero).
inline EdgeState edge_state(const ModeSet& modes) {
    const int n = static_cast<int>(modes.energies.size());
    const double scale = detail::spectrum_scale(modes.energies);

    for (int i = 0; i < n; ++i)
        if (std::abs(modes.energies[i] + modes.energies[n - 1 - i]) > 1e-8 * scale)
            throw edge_undefined("spectrum is not symmetric about zero; no chiral midgap structure");

    EdgeState es;
    if (n % 2 == 1) {
        const int mid = (n - 1) / 2;
        if (std::abs(modes.energies[mid]) > 1e-8 * scale)
            throw edge_undefined("no zero-energy mode found");
        es.indices = {mid};
        es.distributions.resize(n, 1);
        es.distributions.col(0) = modes.vectors.col(mid).array().square();
    } else {
        const int lo = n / 2 - 1, hi = n / 2;
        // The pair counts as midgap only if it separates from the bulk by
        // more than 3x the median level spacing of |E|.
        std::vector<double> abse(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) abse[static_cast<size_t>(i)] = std::abs(modes.energies[i]);
        std::sort(abse.begin(), abse.end());
        std::vector<double> diffs;
        for (size_t i = 0; i + 1 < abse.size(); ++i) diffs.push_back(abse[i + 1] - abse[i]);
        std::sort(diffs.begin(), diffs.end());
        const double median = diffs.empty() ? 0.0 : diffs[diffs.size() / 2];
        const double separation = abse.size() > 2 ? abse[2] - abse[1] : 0.0;
        if (!(separation > 3.0 * median))
            throw edge_undefined("midgap pair does not separate from the bulk spectrum");
        es.indices = {lo, hi};
        es.distributions.resize(n, 2);
        es.distributions.col(0) = modes.vectors.col(lo).array().square();
        es.distributions.col(1) = modes.vectors.col(hi).array().square();
    }
    return es;
}

// IPR = sum p_i^2 / (sum p_i)^2 for a vector of per-site probabilities;
// equals sum |psi_i|^4 when p is a normalized |psi|^2.
inline double ipr(const Eigen::VectorXd& distribution) {
    const double total = distribution.sum();
    if (!(total > 0.0))
        throw validation_error("ipr needs a nonzero distribution");
    const double quartic = distribution.array().square().sum();
    return quartic / (total * total);
}

inline DecayMatrix decay_matrix(const ModeSet& modes, const Eigen::MatrixXd& gamma) {
    const int n = static_cast<int>(modes.vectors.rows());
    if (gamma.rows() != n || gamma.cols() != n)
        throw dimension_mismatch("gamma is " + std::to_string(gamma.rows()) + "x" +
                                 std::to_string(gamma.cols()) + " but the mode basis has " +
                                 std::to_string(n) + " sites");
    DecayMatrix d;
    Eigen::MatrixXd t = modes.vectors.transpose() * gamma * modes.vectors;
    d.gamma_mn = 0.5 * (t + t.transpose());
    d.edge_index = modes.edge_indices.empty() ? -1 : modes.edge_indices.front();
    return d;
}

inline RadiatingOverlap radiating_overlap(const ModeSet& modes, const ModelConfig& cfg) {
    cfg.validate();
    if (!cfg.zero_offsets())
        throw validation_error("radiating_overlap requires zero position offsets");
    const int n = cfg.n_emitters;
    if (static_cast<int>(modes.vectors.rows()) != n)
        throw dimension_mismatch("mode basis size does not match the configuration");

    EdgeState es = edge_state(modes);
    const Eigen::VectorXd psi = modes.vectors.col(es.indices.front());

    const auto x = cfg.positions();
    Eigen::VectorXd u(n), v(n);
    for (int i = 0; i < n; ++i) {
        u[i] = cos_2pi(x[static_cast<size_t>(i)]);
        v[i] = sin_2pi(x[static_cast<size_t>(i)]);
    }
    const double nu_ = u.norm(), nv = v.norm();
    const double du = u.dot(psi), dv = v.dot(psi);

    RadiatingOverlap r;
    r.o_cos = nu_ > 0.0 ? du / nu_ : 0.0;
    r.o_sin = nv > 0.0 ? dv / nv : 0.0;
    r.gamma00 = cfg.gamma0 * (du * du + dv * dv);
    return r;
}

// Exact dissipationless edge state at spacing 3/4, J0 = gamma0/2: sites 4n+1
// and 4n+3 carry (-1)^n tan^{2n}(phi/2), everything else is zero.
inline Eigen::VectorXd analytic_edge_state(const ModelConfig& cfg) {
    cfg.validate();
    if (cfg.n_emitters % 4 != 3)
        throw shape_mismatch("analytic edge state needs N = 4M+3, got N = " +
                             std::to_string(cfg.n_emitters));
    if (std::abs(cfg.spacing - 0.75) > 1e-12)
        throw validation_error("analytic edge state is defined at spacing 3/4 only");
    if (!(cfg.gamma0 > 0.0) || std::abs(cfg.j0 / cfg.gamma0 - 0.5) > 1e-12)
        throw validation_error("analytic edge state is defined at J0/gamma0 = 1/2 only");
    if (!cfg.zero_offsets())
        throw validation_error("analytic edge state requires zero position offsets");

    const int n = cfg.n_emitters;
    const double t = std::tan(0.5 * cfg.phi);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    double amp = 1.0;
    for (int m = 0; 4 * m + 2 < n; ++m) {
        a[4 * m] = amp;        // site 4m+1
        a[4 * m + 2] = amp;    // site 4m+3
        amp *= -t * t;
    }
    return a.normalized();
}

// Slope of -ln(|Gamma_m'0| / gamma0) against N over a family of odd sizes,
// with m' = sign * (N-3)/2 (the radiating bulk pair next to the band edge).
inline NuFit nu_scaling_fit(const ModelConfig& base, int sign,
                            const std::vector<int>& n_list) {
    if (n_list.size() < 4)
        throw validation_error("nu fit needs at least 4 sizes, got " +
                               std::to_string(n_list.size()));
    for (int n : n_list)
        if (n % 2 == 0 || n < 3)
            throw validation_error("nu fit sizes must be odd and >= 3, got " + std::to_string(n));
    if (sign != 1 && sign != -1)
        throw validation_error("mode offset sign must be +1 or -1");
    if (!(base.gamma0 > 0.0))
        throw validation_error("nu fit needs gamma0 > 0");

    NuFit fit;
    fit.n_list = n_list;
    for (int n : n_list) {
        ModelConfig cfg = base;
        cfg.n_emitters = n;
        cfg.offsets.clear();
        CouplingSet cs = assemble(cfg);
        ModeSet modes = diagonalize(cs);
        const int zero = (n - 1) / 2;
        const int mp = sign > 0 ? n - 2 : 1;   // ascending index of m' = +/-(N-3)/2
        const double g = modes.vectors.col(mp).dot(cs.gamma * modes.vectors.col(zero));
        const double mag = std::abs(g) / base.gamma0;
        if (mag < 1e-14)
            fit.below_floor = true;
        fit.ln_abs.push_back(std::log(mag));
    }

    if (fit.below_floor) {
        fit.nu = std::numeric_limits<double>::infinity();
        return fit;
    }

    const int m = static_cast<int>(n_list.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double x = n_list[static_cast<size_t>(i)];
        const double y = -fit.ln_abs[static_cast<size_t>(i)];
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    fit.nu = (m * sxy - sx * sy) / denom;
    const double icept = (sy - fit.nu * sx) / m;
    double ss = 0.0;
    for (int i = 0; i < m; ++i) {
        const double r = -fit.ln_abs[static_cast<size_t>(i)] -
                         (fit.nu * n_list[static_cast<size_t>(i)] + icept);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / m);
    return fit;
}

}
