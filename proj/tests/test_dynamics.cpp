#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "dtpt/dynamics.hpp"
#include "dtpt/model.hpp"
#include "dtpt/modes.hpp"
#include "dtpt/rng.hpp"

using namespace dtpt;
using Catch::Matchers::WithinAbs;

namespace {

ModelConfig make(int n, double j0, double phi, double gamma0, double spacing) {
    ModelConfig cfg;
    cfg.n_emitters = n;
    cfg.j0 = j0;
    cfg.phi = phi;
    cfg.gamma0 = gamma0;
    cfg.spacing = spacing;
    return cfg;
}

constexpr double pi = 3.14159265358979323846;

ModelConfig random_config(CounterRng& rng, int nmax) {
    const int n = 2 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(nmax - 1));
    auto cfg = make(n, rng.uniform(0.0, 1.5), rng.uniform(0.0, 2.0 * pi),
                    rng.uniform(0.2, 2.0), rng.uniform(0.1, 1.0));
    return cfg;
}

}

TEST_CASE("effective Hamiltonian is h - (i/2) gamma", "[dynamics][heff]") {
    auto cs = assemble(make(4, 0.5, 0.3 * pi, 1.2, 0.6));
    Eigen::MatrixXcd he = effective_hamiltonian(cs);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            REQUIRE(he(i, j).real() == cs.h(i, j));
            REQUIRE(he(i, j).imag() == -0.5 * cs.gamma(i, j));
        }
}

TEST_CASE("two-emitter dark/bright decomposition at half-wave spacing",
          "[dynamics][diagonalize]") {
    // h = 0, gamma = gamma0 [[1,-1],[-1,1]]: eigenpairs 0 <-> (1,1)/sqrt2 and
    // -i gamma0 <-> (1,-1)/sqrt2
    const double g0 = 0.7;
    auto cs = assemble(make(2, 0.0, 0.3 * pi, g0, 0.5));
    ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(cs));

    REQUIRE_THAT(std::abs(cms.eigenvalues[0] - complexd(0.0, -g0)), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(std::abs(cms.eigenvalues[1]), WithinAbs(0.0, 1e-14));

    Eigen::VectorXd gt = gamma_tilde(cms);
    REQUIRE_THAT(gt[0], WithinAbs(g0, 1e-14));
    REQUIRE_THAT(gt[1], WithinAbs(0.0, 1e-14));

    const double r = 1.0 / std::sqrt(2.0);
    REQUIRE_THAT(std::abs(cms.right(0, 0) - r), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(std::abs(cms.right(1, 0) + r), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(std::abs(cms.right(0, 1) - r), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(std::abs(cms.right(1, 1) - r), WithinAbs(0.0, 1e-12));
}

TEST_CASE("complex diagonalization reduces to the Hermitian case", "[dynamics][diagonalize]") {
    auto cfg = make(9, 0.6, 0.3 * pi, 0.0, 0.75);   // gamma0 = 0
    auto cs = assemble(cfg);
    ModeSet herm = diagonalize(cs);
    ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(cs));
    for (int i = 0; i < 9; ++i) {
        REQUIRE_THAT(cms.eigenvalues[i].real(), WithinAbs(herm.energies[i], 1e-12));
        REQUIRE_THAT(cms.eigenvalues[i].imag(), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("biorthogonal basis is complete and passive", "[dynamics][diagonalize]") {
    CounterRng rng(11, 0);
    for (int trial = 0; trial < 10; ++trial) {
        auto cfg = random_config(rng, 12);
        INFO("trial " << trial << " n=" << cfg.n_emitters << " d=" << cfg.spacing);
        const int n = cfg.n_emitters;
        ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(assemble(cfg)));

        Eigen::MatrixXcd gram = cms.left.adjoint() * cms.right;
        REQUIRE((gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

        Eigen::VectorXd gt = gamma_tilde(cms);
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            REQUIRE(gt[j] >= -1e-10 * cfg.gamma0);   // no gain from a passive bath
            total += gt[j];
        }
        // trace identity: sum Gamma~_j = N gamma0 / 2
        REQUIRE_THAT(total, WithinAbs(0.5 * n * cfg.gamma0, 1e-11 * n * std::max(1.0, cfg.gamma0)));
    }
}

TEST_CASE("spectrum interpolates continuously in the dissipation strength",
          "[dynamics][diagonalize]") {
    // H(s) = h - (i/2) s gamma; Bauer-Fike for the Hermitian base point bounds
    // every eigenvalue shift by ||s gamma / 2||_2 <= s N gamma0 / 2
    auto cfg = make(10, 0.5, 0.3 * pi, 1.0, 0.6);
    auto cs = assemble(cfg);
    ModeSet herm = diagonalize(cs);

    auto at_scale = [&](double s) {
        Eigen::MatrixXcd he = cs.h.cast<complexd>();
        he -= complexd(0.0, 0.5 * s) * cs.gamma.cast<complexd>();
        return complex_diagonalize(he);
    };

    ComplexModeSet zero = at_scale(0.0);
    for (int i = 0; i < 10; ++i) {
        REQUIRE_THAT(zero.eigenvalues[i].real(), WithinAbs(herm.energies[i], 1e-12));
        REQUIRE_THAT(zero.eigenvalues[i].imag(), WithinAbs(0.0, 1e-12));
    }

    ComplexModeSet small = at_scale(1e-3);
    for (int i = 0; i < 10; ++i) {
        double nearest = 1e9;
        for (int j = 0; j < 10; ++j)
            nearest = std::min(nearest, std::abs(small.eigenvalues[i] - herm.energies[j]));
        REQUIRE(nearest < 5e-3);
    }
}

TEST_CASE("edge decay rate falls to a plateau past the transition", "[dynamics][edge]") {
    // Gamma_00(J0) at d = 3/4: monotone decay up to J0 = gamma0/4, then pinned
    // near zero ("stops decaying").  The plateau floor is a finite-size tail
    // overlap ~ tan^{N-1}(phi/2), so the strict flatness bound needs a longer
    // chain than the shoulder region right above the kink allows.
    auto g00 = [](int n, double j0) {
        auto cs = assemble(make(n, j0, 0.3 * pi, 1.0, 0.75));
        DecayMatrix dm = decay_matrix(diagonalize(cs), cs.gamma);
        return dm.gamma_mn(dm.edge_index, dm.edge_index);
    };

    SECTION("strictly decreasing below the kink at N=21") {
        double prev = 1e9;
        for (int i = 1; i <= 12; ++i) {
            const double j0 = 0.02 * i;   // 0.02 .. 0.24
            const double g = g00(21, j0);
            REQUIRE(g < prev);
            prev = g;
        }
        REQUIRE(g00(21, 0.02) > 1.5);     // starts near the kernel-only value 2 gamma0
    }
    SECTION("plateau floor at N=21 is the finite-size tail scale") {
        for (double j0 : {0.30, 0.35, 0.40, 0.45, 0.50})
            REQUIRE(g00(21, j0) < 1e-5);
    }
    SECTION("flatness emerges at larger N") {
        double prev = -1.0;
        for (int i = 30; i <= 50; ++i) {
            const double g = g00(43, 0.01 * i);
            if (prev >= 0.0)
                REQUIRE(std::abs(g - prev) < 1e-6 * 0.01);   // per adjacent step
            prev = g;
        }
    }
}

TEST_CASE("edge mode of the dissipationless point has zero decay", "[dynamics][edge]") {
    auto cfg = make(11, 0.5, 0.3 * pi, 1.0, 0.75);
    auto cs = assemble(cfg);
    ModeSet modes = diagonalize(cs);
    ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(cs));
    const int j = identify_edge(cms, hermitian_edge_reference(cs, modes));
    REQUIRE(cms.edge_index == j);
    REQUIRE(std::abs(cms.eigenvalues[j].imag()) < 1e-12);
    REQUIRE(std::abs(cms.eigenvalues[j].real()) < 1e-12);
}

TEST_CASE("midgap pair protection switches across the transition", "[dynamics][edge]") {
    // N = 20, phi = 0.3 pi, d = 3/4; the width is 4 J0, so gamma0/width is set
    // through J0 at fixed gamma0 = 1
    auto at_ratio = [](double ratio) {
        auto cfg = make(20, 1.0 / (4.0 * ratio), 0.3 * pi, 1.0, 0.75);
        ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(assemble(cfg)));
        // the midgap pair: two smallest |Re lambda|
        std::vector<int> order(20);
        for (int i = 0; i < 20; ++i) order[static_cast<size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(cms.eigenvalues[a].real()) < std::abs(cms.eigenvalues[b].real());
        });
        const double g1 = -cms.eigenvalues[order[0]].imag();
        const double g2 = -cms.eigenvalues[order[1]].imag();
        return std::pair<double, double>{std::max(g1, g2), std::min(g1, g2)};
    };

    auto [topo_max, topo_min] = at_ratio(0.8);
    REQUIRE(topo_max < 1e-6);    // protected before the transition

    // deep protection: the pair decouples below 1e-8 gamma0 near the middle of
    // the topological regime (the N=20 tail-overlap floor rises toward both
    // the weak-coupling and critical ends)
    auto [deep_max, deep_min] = at_ratio(0.6);
    REQUIRE(deep_max < 1e-8);

    auto [post_max, post_min] = at_ratio(1.5);
    REQUIRE(post_min > 1e-4);    // strongly radiating after it
}

TEST_CASE("window scan isolates the protected spacing", "[dynamics][window]") {
    auto tpl = make(11, 0.3, 0.3 * pi, 1.0, 0.75);
    std::vector<double> grid;
    for (int i = 0; i < 161; ++i) grid.push_back(0.55 + 0.4 * i / 160.0);

    WindowScan ws = window_scan(tpl, grid);
    REQUIRE(ws.d.size() == grid.size());

    size_t argmin = 0;
    for (size_t i = 1; i < ws.gamma_tilde0.size(); ++i)
        if (ws.gamma_tilde0[i] < ws.gamma_tilde0[argmin]) argmin = i;
    REQUIRE_THAT(ws.d[argmin], WithinAbs(0.75, 0.0101));
    REQUIRE(ws.gamma_tilde0[argmin] > 5e-5);
    REQUIRE(ws.gamma_tilde0[argmin] < 5e-4);

    SECTION("the default threshold finds no true window at this size") {
        REQUIRE_FALSE(ws.window_found);
        REQUIRE(ws.window_width == 0.0);
        REQUIRE(std::isnan(ws.window_center));
    }
    SECTION("a realistic threshold opens a window around 3/4") {
        WindowScan wide = window_scan(tpl, grid, 1e-3);
        REQUIRE(wide.window_found);
        REQUIRE(wide.window_width > 0.0);
        REQUIRE(wide.window_center > 0.7);
        REQUIRE(wide.window_center < 0.8);
    }
    SECTION("other chiral spacings radiate strongly") {
        REQUIRE(window_scan(tpl, {0.25}).gamma_tilde0[0] > 1e-3);
        REQUIRE(window_scan(tpl, {0.5}).gamma_tilde0[0] > 1e-3);
        REQUIRE(window_scan(tpl, {0.5}).gamma_tilde0[0] >
                window_scan(tpl, {0.75}).gamma_tilde0[0]);
    }
    SECTION("grid refinement does not move the per-point values") {
        WindowScan coarse = window_scan(tpl, {0.65, 0.75, 0.85});
        REQUIRE(coarse.gamma_tilde0[1] ==
                window_scan(tpl, {0.75}).gamma_tilde0[0]);
    }
    SECTION("spacings outside (0, 1] are rejected") {
        REQUIRE_THROWS_AS(window_scan(tpl, {0.5, 1.5}), validation_error);
        REQUIRE_THROWS_AS(window_scan(tpl, {}), validation_error);
    }
}

TEST_CASE("propagate conserves a closed chain and decays an open one",
          "[dynamics][propagate]") {
    Eigen::VectorXd times(5);
    times << 0.0, 0.5, 1.0, 2.0, 4.0;

    SECTION("closed chain keeps its norm") {
        auto cs = assemble(make(6, 0.8, 0.3 * pi, 0.0, 0.75));
        Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(6);
        a0[0] = 1.0;
        Trajectory tr = propagate(effective_hamiltonian(cs), a0, times);
        for (int t = 0; t < times.size(); ++t) {
            REQUIRE_THAT(tr.norm[t], WithinAbs(1.0, 1e-10));
            REQUIRE_THAT(tr.ground_population[t], WithinAbs(0.0, 1e-10));
        }
    }
    SECTION("a single emitter decays at the bare rate") {
        const double g0 = 0.9;
        Eigen::MatrixXcd he(1, 1);
        he(0, 0) = complexd(0.0, -0.5 * g0);
        Eigen::VectorXcd a0(1);
        a0[0] = 1.0;
        Trajectory tr = propagate(he, a0, times);
        for (int t = 0; t < times.size(); ++t)
            REQUIRE_THAT(tr.site_populations(t, 0),
                         WithinAbs(std::exp(-g0 * times[t]), 1e-12));
    }
    SECTION("population bookkeeping is consistent") {
        auto cs = assemble(make(5, 0.4, 0.3 * pi, 1.0, 0.6));
        Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(5);
        a0[2] = 1.0;
        Trajectory tr = propagate(effective_hamiltonian(cs), a0, times);
        for (int t = 0; t < times.size(); ++t) {
            const double total = tr.site_populations.row(t).sum();
            REQUIRE_THAT(tr.ground_population[t], WithinAbs(1.0 - total, 1e-12));
            REQUIRE_THAT(tr.norm[t] * tr.norm[t], WithinAbs(total, 1e-12));
        }
    }
    SECTION("input validation") {
        auto cs = assemble(make(3, 0.4, 0.3 * pi, 1.0, 0.6));
        Eigen::MatrixXcd he = effective_hamiltonian(cs);
        Eigen::VectorXcd big = Eigen::VectorXcd::Zero(3);
        big[0] = 2.0;
        REQUIRE_THROWS_AS(propagate(he, big, times), validation_error);
        Eigen::VectorXcd wrong = Eigen::VectorXcd::Zero(4);
        wrong[0] = 1.0;
        REQUIRE_THROWS_AS(propagate(he, wrong, times), dimension_mismatch);
        Eigen::VectorXd bad(3);
        bad << 0.0, 1.0, 0.5;
        Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(3);
        a0[0] = 1.0;
        REQUIRE_THROWS_AS(propagate(he, a0, bad), validation_error);
    }
}

TEST_CASE("the analytic edge state survives forever", "[dynamics][propagate]") {
    auto cfg = make(11, 0.5, 0.3 * pi, 1.0, 0.75);
    Eigen::VectorXcd a0 = analytic_edge_state(cfg).cast<complexd>();
    Eigen::VectorXd times(3);
    times << 0.0, 10.0, 100.0;
    Trajectory tr = propagate(effective_hamiltonian(assemble(cfg)), a0, times);
    REQUIRE(tr.site_populations.row(2).sum() > 1.0 - 1e-6);
    REQUIRE_THAT(tr.norm[2], WithinAbs(1.0, 1e-6));
}

TEST_CASE("Lindblad oracle reproduces the two-emitter textbook cases", "[dynamics][oracle]") {
    const double g0 = 1.0;
    auto cfg = make(2, 0.3, 0.3 * pi, g0, 0.5);
    Eigen::VectorXd times(4);
    times << 0.0, 0.5, 1.5, 3.0;
    const double r = 1.0 / std::sqrt(2.0);

    SECTION("symmetric superposition is dark") {
        Eigen::VectorXcd a0(2);
        a0 << r, r;
        Trajectory tr = lindblad_oracle(cfg, a0, times);
        for (int t = 0; t < times.size(); ++t) {
            REQUIRE_THAT(tr.site_populations(t, 0), WithinAbs(0.5, 1e-9));
            REQUIRE_THAT(tr.site_populations(t, 1), WithinAbs(0.5, 1e-9));
            REQUIRE_THAT(tr.ground_population[t], WithinAbs(0.0, 1e-9));
        }
    }
    SECTION("antisymmetric superposition decays at twice the bare rate") {
        Eigen::VectorXcd a0(2);
        a0 << r, -r;
        Trajectory tr = lindblad_oracle(cfg, a0, times);
        for (int t = 0; t < times.size(); ++t) {
            const double expect = std::exp(-2.0 * g0 * times[t]);
            REQUIRE_THAT(tr.site_populations.row(t).sum(), WithinAbs(expect, 1e-7));
        }
    }
}

TEST_CASE("oracle with the dissipator removed is unitary", "[dynamics][oracle]") {
    auto cfg = make(3, 0.6, 0.3 * pi, 1.0, 0.6);
    Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(3);
    a0[1] = 1.0;
    Eigen::VectorXd times(4);
    times << 0.0, 0.3, 0.7, 1.2;

    OracleOptions opts;
    opts.zero_dissipator = true;
    Trajectory tr = lindblad_oracle(cfg, a0, times, opts);
    for (int t = 0; t < times.size(); ++t)
        REQUIRE_THAT(tr.norm[t], WithinAbs(1.0, 1e-8));

    // must agree with closed-chain propagation under h alone
    auto cs = assemble(cfg);
    Trajectory closed = propagate(cs.h.cast<complexd>(), a0, times);
    for (int t = 0; t < times.size(); ++t)
        for (int i = 0; i < 3; ++i)
            REQUIRE_THAT(tr.site_populations(t, i),
                         WithinAbs(closed.site_populations(t, i), 1e-6));
}

TEST_CASE("oracle matches non-Hermitian propagation in the one-excitation sector",
          "[dynamics][oracle]") {
    CounterRng rng(23, 0);
    for (int trial = 0; trial < 8; ++trial) {
        auto cfg = random_config(rng, 6);
        INFO("trial " << trial << " n=" << cfg.n_emitters << " d=" << cfg.spacing);
        const double scale = std::max(cfg.gamma0, std::max(4.0 * cfg.j0, 1e-3));

        Eigen::VectorXd times(6);
        for (int t = 0; t < 6; ++t) times[t] = 0.1 * t / scale;

        Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(cfg.n_emitters);
        a0[static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.n_emitters))] = 1.0;

        auto cs = assemble(cfg);
        Trajectory mode = propagate(effective_hamiltonian(cs), a0, times);
        Trajectory full = lindblad_oracle(cfg, a0, times);
        for (int t = 0; t < times.size(); ++t) {
            for (int i = 0; i < cfg.n_emitters; ++i)
                REQUIRE_THAT(full.site_populations(t, i),
                             WithinAbs(mode.site_populations(t, i), 1e-6));
            REQUIRE_THAT(full.ground_population[t],
                         WithinAbs(mode.ground_population[t], 1e-6));
        }
    }
}

TEST_CASE("oracle guards its step size and system size", "[dynamics][oracle]") {
    auto cfg = make(2, 0.3, 0.3 * pi, 1.0, 0.5);
    Eigen::VectorXcd a0(2);
    a0 << 1.0, 0.0;

    SECTION("a step below the resolvable minimum is reported, not absorbed") {
        Eigen::VectorXd times(2);
        times << 0.0, 1.0;
        OracleOptions opts;
        opts.dt = 1e-12;
        opts.dt_min = 1e-6;
        REQUIRE_THROWS_AS(lindblad_oracle(cfg, a0, times, opts), step_too_large);
    }
    SECTION("the full-space oracle refuses N > 8") {
        auto big = make(9, 0.3, 0.3 * pi, 1.0, 0.75);
        Eigen::VectorXcd b0 = Eigen::VectorXcd::Zero(9);
        b0[0] = 1.0;
        Eigen::VectorXd times(2);
        times << 0.0, 0.1;
        REQUIRE_THROWS_AS(lindblad_oracle(big, b0, times), validation_error);
    }
}
