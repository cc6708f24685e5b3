#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dtpt/errors.hpp"
#include "dtpt/model.hpp"
#include "dtpt/modes.hpp"

namespace dtpt {

using complexd = std::complex<double>;

// Biorthogonal decomposition of H_eff: columns of `right` are unit-norm right
// eigenvectors, columns of `left` satisfy left^H * right = identity.
// Eigenvalues lambda_j = E_j - i Gamma~_j sorted by ascending real part.
struct ComplexModeSet {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    double condition = 0.0;      // 1-norm condition estimate of the right basis
    bool near_defective = false; // condition above 1e8; propagation falls back to expm
    int edge_index = -1;         // set by identify_edge
};

struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd site_populations;   // times.size() x N
    Eigen::VectorXd ground_population;
    Eigen::VectorXd norm;
};

inline Eigen::MatrixXcd effective_hamiltonian(const CouplingSet& cs) {
    return cs.h.cast<complexd>() - complexd(0.0, 0.5) * cs.gamma.cast<complexd>();
}

inline Eigen::VectorXd gamma_tilde(const ComplexModeSet& cms) {
    return -cms.eigenvalues.imag();
}

inline ComplexModeSet complex_diagonalize(const Eigen::MatrixXcd& h_eff) {
    const int n = static_cast<int>(h_eff.rows());
    if (h_eff.cols() != n)
        throw dimension_mismatch("H_eff must be square");

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h_eff);
    if (solver.info() != Eigen::Success)
        throw convergence_failure("complex eigensolver did not converge");

    ComplexModeSet cms;
    cms.eigenvalues = solver.eigenvalues();
    cms.right = solver.eigenvectors();

    // deterministic order: ascending real part, then ascending imaginary part
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const complexd la = cms.eigenvalues[a], lb = cms.eigenvalues[b];
        if (la.real() != lb.real()) return la.real() < lb.real();
        return la.imag() < lb.imag();
    });
    Eigen::VectorXcd ev(n);
    Eigen::MatrixXcd rv(n, n);
    for (int i = 0; i < n; ++i) {
        ev[i] = cms.eigenvalues[order[static_cast<size_t>(i)]];
        rv.col(i) = cms.right.col(order[static_cast<size_t>(i)]);
    }
    cms.eigenvalues = std::move(ev);
    cms.right = std::move(rv);

    // phase convention: largest-magnitude entry of each column is real positive
    for (int c = 0; c < n; ++c) {
        int imax = 0;
        double best = std::abs(cms.right(0, c));
        for (int r = 1; r < n; ++r) {
            const double a = std::abs(cms.right(r, c));
            if (a > best) { best = a; imax = r; }
        }
        const complexd z = cms.right(imax, c);
        if (std::abs(z) > 0.0)
            cms.right.col(c) *= std::conj(z) / std::abs(z);
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(cms.right);
    Eigen::MatrixXcd rinv = lu.solve(Eigen::MatrixXcd::Identity(n, n));
    cms.left = rinv.adjoint();

    const double res = (cms.right * rinv - Eigen::MatrixXcd::Identity(n, n))
                           .cwiseAbs().maxCoeff();
    if (!(res < 1e-9 * std::max(1, n)))
        throw defective_matrix("biorthonormalization failed (completeness residual " +
                               std::to_string(res) + "); exceptional point suspected");

    double norm_r = 0.0, norm_rinv = 0.0;   // 1-norms
    for (int c = 0; c < n; ++c) {
        norm_r = std::max(norm_r, cms.right.col(c).cwiseAbs().sum());
        norm_rinv = std::max(norm_rinv, rinv.col(c).cwiseAbs().sum());
    }
    cms.condition = norm_r * norm_rinv;
    cms.near_defective = cms.condition > 1e8;
    return cms;
}

// Tag the mode with maximal overlap against a Hermitian-limit edge state.
inline int identify_edge(ComplexModeSet& cms, const Eigen::VectorXd& reference) {
    const int n = static_cast<int>(cms.right.rows());
    if (static_cast<int>(reference.size()) != n)
        throw dimension_mismatch("edge reference has the wrong length");
    int best = 0;
    double best_ov = -1.0;
    const Eigen::VectorXcd ref = reference.cast<complexd>();
    for (int j = 0; j < n; ++j) {
        const double ov = std::abs(ref.dot(cms.right.col(j))) / cms.right.col(j).norm();
        if (ov > best_ov) { best_ov = ov; best = j; }
    }
    cms.edge_index = best;
    return best;
}

// The minimum-|E| eigenvector of h: the per-spacing Hermitian reference used
// to track the edge branch through non-chiral configurations.
inline Eigen::VectorXd hermitian_edge_reference(const CouplingSet& cs, const ModeSet& modes) {
    int best = 0;
    double e = std::abs(modes.energies[0]);
    for (int i = 1; i < modes.energies.size(); ++i)
        if (std::abs(modes.energies[i]) < e) { e = std::abs(modes.energies[i]); best = i; }
    (void)cs;
    return modes.vectors.col(best);
}

struct WindowScan {
    std::vector<double> d;
    std::vector<double> gamma00;        // psi_ref^T Gamma psi_ref
    std::vector<double> gamma_tilde0;   // -Im lambda of the matched edge mode
    double threshold = 0.0;             // absolute rate the window is cut at
    bool window_found = false;
    double window_center = std::numeric_limits<double>::quiet_NaN();
    double window_width = 0.0;
};

// Sweep the emitter spacing at fixed (N, phi, J0, gamma0). At every spacing
// the edge branch is re-identified against that spacing's own Hermitian
// minimum-|E| mode, which keeps the scan independent of grid direction.
inline WindowScan window_scan(const ModelConfig& tpl, const std::vector<double>& d_grid,
                              double threshold_rel = 1e-6) {
    tpl.validate();
    if (d_grid.empty())
        throw validation_error("window scan needs a nonempty spacing grid");
    for (double d : d_grid)
        if (!(d > 0.0 && d <= 1.0))
            throw validation_error("window scan spacings must lie in (0, 1], got " +
                                   std::to_string(d));

    WindowScan ws;
    ws.threshold = threshold_rel * tpl.gamma0;
    for (double d : d_grid) {
        ModelConfig cfg = tpl;
        cfg.spacing = d;
        CouplingSet cs = assemble(cfg);
        ModeSet modes = diagonalize(cs);
        Eigen::VectorXd ref = hermitian_edge_reference(cs, modes);
        ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(cs));
        const int j = identify_edge(cms, ref);
        ws.d.push_back(d);
        ws.gamma00.push_back(ref.dot(cs.gamma * ref));
        ws.gamma_tilde0.push_back(-cms.eigenvalues[j].imag());
    }

    // contiguous sub-threshold run containing the grid point nearest 3/4
    int anchor = 0;
    for (size_t i = 1; i < ws.d.size(); ++i)
        if (std::abs(ws.d[i] - 0.75) < std::abs(ws.d[static_cast<size_t>(anchor)] - 0.75))
            anchor = static_cast<int>(i);
    if (ws.gamma_tilde0[static_cast<size_t>(anchor)] < ws.threshold) {
        int lo = anchor, hi = anchor;
        while (lo > 0 && ws.gamma_tilde0[static_cast<size_t>(lo - 1)] < ws.threshold) --lo;
        while (hi + 1 < static_cast<int>(ws.d.size()) &&
               ws.gamma_tilde0[static_cast<size_t>(hi + 1)] < ws.threshold) ++hi;
        const double step = ws.d.size() > 1
            ? (ws.d.back() - ws.d.front()) / static_cast<double>(ws.d.size() - 1)
            : 0.0;
        ws.window_found = true;
        ws.window_center = 0.5 * (ws.d[static_cast<size_t>(lo)] + ws.d[static_cast<size_t>(hi)]);
        ws.window_width = (hi - lo + 1) * step;
    }
    return ws;
}

// a(t) = exp(-i H_eff t) a(0), through the biorthogonal expansion when the
// basis is well conditioned and scaling-and-squaring exponentials otherwise.
inline Trajectory propagate(const Eigen::MatrixXcd& h_eff, const Eigen::VectorXcd& initial,
                            const Eigen::VectorXd& times) {
    const int n = static_cast<int>(h_eff.rows());
    if (static_cast<int>(initial.size()) != n)
        throw dimension_mismatch("initial state has the wrong length");
    if (std::abs(initial.norm() - 1.0) > 1e-8)
        throw validation_error("initial state must be normalized");
    if (times.size() < 1 || !(times[0] >= 0.0))
        throw validation_error("times must start at t >= 0");
    for (int i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw validation_error("times must be strictly ascending");

    const int nt = static_cast<int>(times.size());
    Trajectory tr;
    tr.times = times;
    tr.site_populations.resize(nt, n);
    tr.ground_population.resize(nt);
    tr.norm.resize(nt);

    bool use_modes = true;
    ComplexModeSet cms;
    try {
        cms = complex_diagonalize(h_eff);
        if (cms.near_defective) use_modes = false;
    } catch (const defective_matrix&) {
        use_modes = false;
    }

    auto record = [&](int row, const Eigen::VectorXcd& a) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double p = std::norm(a[i]);
            tr.site_populations(row, i) = p;
            total += p;
        }
        tr.ground_population[row] = 1.0 - total;
        tr.norm[row] = std::sqrt(total);
    };

    if (use_modes) {
        const Eigen::VectorXcd c = cms.left.adjoint() * initial;
        for (int t = 0; t < nt; ++t) {
            Eigen::VectorXcd phase(n);
            for (int j = 0; j < n; ++j)
                phase[j] = std::exp(complexd(0.0, -1.0) * cms.eigenvalues[j] * times[t]) * c[j];
            record(t, cms.right * phase);
        }
    } else {
        for (int t = 0; t < nt; ++t) {
            const Eigen::MatrixXcd u = (complexd(0.0, -1.0) * times[t] * h_eff).exp();
            record(t, u * initial);
        }
    }
    return tr;
}

struct OracleOptions {
    double dt = -1.0;            // default 1e-3 / rate scale
    double dt_min = -1.0;        // default 1e-6 / rate scale
    int max_halvings = 20;
    bool zero_dissipator = false;
};

namespace detail {

// Brute-force master equation on the full 2^N Hilbert space. Site j's qubit
// has excited = bit 0 and ground = bit 1, site 1 occupying the most
// significant bit, so the all-ground state is the last basis vector.
inline Trajectory lindblad_full(const CouplingSet& cs, double rate_scale,
                                const Eigen::VectorXcd& initial, const Eigen::VectorXd& times,
                                OracleOptions opts) {
    const int n = static_cast<int>(cs.h.rows());
    if (n > 8)
        throw validation_error("the Lindblad oracle is limited to N <= 8, got N = " +
                               std::to_string(n));
    if (static_cast<int>(initial.size()) != n)
        throw dimension_mismatch("initial state has the wrong length");
    if (std::abs(initial.norm() - 1.0) > 1e-8)
        throw validation_error("initial state must be normalized");
    if (times.size() < 1 || !(times[0] >= 0.0))
        throw validation_error("times must start at t >= 0");
    for (int i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw validation_error("times must be strictly ascending");
    if (!(rate_scale > 0.0)) rate_scale = 1.0;
    if (opts.dt <= 0.0) opts.dt = 1e-3 / rate_scale;
    if (opts.dt_min <= 0.0) opts.dt_min = 1e-6 / rate_scale;

    const int dim = 1 << n;
    const auto mask = [&](int site) { return 1 << (n - 1 - site); };  // site 0-based
    const auto excited = [&](int b, int site) { return (b & mask(site)) == 0; };

    // single-excitation embedding: site i excited, everything else ground
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(dim);
    for (int i = 0; i < n; ++i)
        psi0[(dim - 1) & ~mask(i)] = initial[i];

    // H = sum_ij h_ij sigma+_i sigma-_j on the full space
    Eigen::MatrixXcd hfull = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (cs.h(i, j) == 0.0) continue;
            for (int b = 0; b < dim; ++b) {
                if (!excited(b, j)) continue;       // sigma-_j needs j excited
                if (i == j) {                       // number operator term
                    hfull(b, b) += cs.h(i, i);
                    continue;
                }
                if (excited(b, i)) continue;        // sigma+_i needs i in ground
                const int b2 = (b | mask(j)) & ~mask(i);
                hfull(b2, b) += cs.h(i, j);
            }
        }

    // collective jump operators from the eigendecomposition of Gamma
    std::vector<Eigen::MatrixXcd> jumps;
    if (!opts.zero_dissipator) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(cs.gamma);
        if (gs.info() != Eigen::Success)
            throw convergence_failure("eigendecomposition of Gamma failed");
        for (int a = 0; a < n; ++a) {
            const double kappa = gs.eigenvalues()[a];
            if (kappa <= 1e-12 * rate_scale) continue;
            Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(dim, dim);
            for (int j = 0; j < n; ++j) {
                const double w = gs.eigenvectors()(j, a);
                if (w == 0.0) continue;
                for (int b = 0; b < dim; ++b)
                    if (excited(b, j))
                        l(b | mask(j), b) += w;
            }
            jumps.push_back(std::sqrt(kappa) * l);
        }
    }

    Eigen::MatrixXcd ldl = Eigen::MatrixXcd::Zero(dim, dim);   // sum L^H L
    for (const auto& l : jumps) ldl += l.adjoint() * l;
    // A = -i (H - (i/2) sum L^H L); drho = A rho + rho A^H + sum L rho L^H
    const Eigen::MatrixXcd a_op =
        complexd(0.0, -1.0) * (hfull - complexd(0.0, 0.5) * ldl);

    const int nt = static_cast<int>(times.size());
    Trajectory tr;
    tr.times = times;
    tr.site_populations.resize(nt, n);
    tr.ground_population.resize(nt);
    tr.norm.resize(nt);

    const auto deriv = [&](const Eigen::MatrixXcd& rho) {
        Eigen::MatrixXcd d = a_op * rho;
        d += d.adjoint().eval();
        for (const auto& l : jumps)
            d += l * rho * l.adjoint();
        return d;
    };

    double dt = opts.dt;
    for (int attempt = 0; attempt <= opts.max_halvings; ++attempt, dt *= 0.5) {
        if (dt < opts.dt_min)
            break;
        Eigen::MatrixXcd rho = psi0 * psi0.adjoint();
        double t_cur = 0.0;
        bool drifted = false;

        const auto rk4 = [&](double h) {
            const Eigen::MatrixXcd k1 = deriv(rho);
            const Eigen::MatrixXcd k2 = deriv(rho + (0.5 * h) * k1);
            const Eigen::MatrixXcd k3 = deriv(rho + (0.5 * h) * k2);
            const Eigen::MatrixXcd k4 = deriv(rho + h * k3);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        };

        for (int s = 0; s < nt && !drifted; ++s) {
            const double target = times[s];
            while (t_cur + dt <= target * (1.0 + 1e-15)) {
                rk4(dt);
                t_cur += dt;
            }
            if (target - t_cur > 1e-15 * std::max(1.0, target)) {
                rk4(target - t_cur);
                t_cur = target;
            }
            if (std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag()) > 1e-7) {
                drifted = true;
                break;
            }
            double total = 0.0;
            for (int j = 0; j < n; ++j) {
                double p = 0.0;
                for (int b = 0; b < dim; ++b)
                    if (excited(b, j)) p += rho(b, b).real();
                tr.site_populations(s, j) = p;
                total += p;
            }
            tr.ground_population[s] = rho(dim - 1, dim - 1).real();
            tr.norm[s] = std::sqrt(std::max(0.0, total));
        }
        if (!drifted)
            return tr;
    }
    throw step_too_large("oracle trace drift exceeded 1e-7 even at the minimum step size");
}

}

inline Trajectory lindblad_oracle(const CouplingSet& cs, double rate_scale,
                                  const Eigen::VectorXcd& initial, const Eigen::VectorXd& times,
                                  OracleOptions opts = {}) {
    return detail::lindblad_full(cs, rate_scale, initial, times, opts);
}

inline Trajectory lindblad_oracle(const ModelConfig& cfg, const Eigen::VectorXcd& initial,
                                  const Eigen::VectorXd& times, OracleOptions opts = {}) {
    cfg.validate();
    const double scale = std::max(cfg.gamma0, 4.0 * cfg.j0);
    return detail::lindblad_full(assemble(cfg), scale, initial, times, opts);
}

}
