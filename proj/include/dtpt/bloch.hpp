#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dtpt/errors.hpp"
#include "dtpt/model.hpp"

namespace dtpt {

struct BlochSample {
    double k = 0.0;
    double hx = 0.0;
    double hy = 0.0;
    double energy_plus = 0.0;
    double energy_minus = 0.0;
};

struct BandSummary {
    double gap = 0.0;             // delta_omega = 2|J1 - J2|
    double width = 0.0;           // Delta_omega = 2(J1 + J2)
    double critical_gamma = 0.0;  // gamma0_c = width
    int winding = 0;
    // False when the configuration sits on the gap closing (winding undefined
    // there, but gap/width/critical_gamma are still meaningful).
    bool winding_defined = true;
};

namespace detail {

// The closed-form Bloch components exist only at the quarter-wave spacings,
// where the photon kernel folds onto the ring with g0 = +/- gamma0/2.
inline double bloch_g0(const ModelConfig& cfg) {
    if (std::abs(cfg.spacing - 0.25) < 1e-12) return +0.5 * cfg.gamma0;
    if (std::abs(cfg.spacing - 0.75) < 1e-12) return -0.5 * cfg.gamma0;
    throw validation_error("Bloch components require spacing 0.25 or 0.75 (lambda0 units), got " +
                           std::to_string(cfg.spacing));
}

inline void require_even_n(const ModelConfig& cfg) {
    if (cfg.n_emitters % 2 != 0)
        throw validation_error("Bloch analysis needs an even emitter count (two-site cells), got " +
                               std::to_string(cfg.n_emitters));
    if (!cfg.zero_offsets())
        throw validation_error("Bloch analysis requires zero position offsets");
}

struct j_pair { double j1, j2; };

inline j_pair dimer_pair(const ModelConfig& cfg) {
    const double c = std::cos(cfg.phi);
    return {cfg.j0 * (1.0 - c), cfg.j0 * (1.0 + c)};
}

}

//   hx(k) = J1 + J2 cos k + (g0/2) [1 + cos(N k / 2)]
//   hy(k) = J2 sin k + (g0/2) F(k)
//   F(k)  = sum_{j=1}^{N/2} 2 (-1)^{j-1} sin(j k)  -  sin(N k / 2)
inline std::pair<double, double> bloch_components(const ModelConfig& cfg, double k) {
    cfg.validate();
    detail::require_even_n(cfg);
    const double g0 = detail::bloch_g0(cfg);
    const auto [j1, j2] = detail::dimer_pair(cfg);
    const int half = cfg.n_emitters / 2;

    double f = -std::sin(half * k);
    for (int j = 1; j <= half; ++j)
        f += 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::sin(j * k);

    const double hx = j1 + j2 * std::cos(k) + 0.5 * g0 * (1.0 + std::cos(half * k));
    const double hy = j2 * std::sin(k) + 0.5 * g0 * f;
    return {hx, hy};
}

inline BlochSample band_sample(const ModelConfig& cfg, double k) {
    auto [hx, hy] = bloch_components(cfg, k);
    const double e = std::hypot(hx, hy);
    return {k, hx, hy, e, -e};
}

// Branch-tracked winding of (hx, hy) around the origin over k in [-pi, pi).
// theta = atan2(-hx, hy); increments are wrapped to (-pi, pi] and summed in
// grid order (fixed-order reduction keeps the result bit-reproducible).
inline int winding_number(const ModelConfig& cfg, int samples = 0,
                          double eps_gap_rel = 1e-8) {
    cfg.validate();
    detail::require_even_n(cfg);
    if (samples == 0) samples = std::max(4096, 64 * cfg.n_emitters);
    if (samples < 1000)
        throw validation_error("winding_number needs at least 1000 samples, got " +
                               std::to_string(samples));

    const double scale = cfg.gamma0 > 0.0 ? cfg.gamma0
                                          : std::max(cfg.j0, 1e-300);
    const double eps_gap = eps_gap_rel * scale;

    const double pi = std::acos(-1.0);
    double min_eps = std::numeric_limits<double>::infinity();
    double total = 0.0;
    double theta_prev = 0.0, theta_first = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double k = -pi + 2.0 * pi * i / samples;
        auto [hx, hy] = bloch_components(cfg, k);
        min_eps = std::min(min_eps, std::hypot(hx, hy));
        const double theta = std::atan2(-hx, hy);
        if (i == 0) {
            theta_first = theta;
        } else {
            double d = theta - theta_prev;
            while (d > pi) d -= 2.0 * pi;
            while (d <= -pi) d += 2.0 * pi;
            total += d;
        }
        theta_prev = theta;
    }
    {
        double d = theta_first - theta_prev;   // close the loop back to k = -pi
        while (d > pi) d -= 2.0 * pi;
        while (d <= -pi) d += 2.0 * pi;
        total += d;
    }

    if (!(min_eps > eps_gap))
        throw gap_closed("band gap closes on the sampled Brillouin zone (min eps = " +
                         std::to_string(min_eps) + "); winding undefined");

    const double w_raw = total / (2.0 * pi);
    const double w_round = std::round(w_raw);
    if (std::abs(w_raw - w_round) >= 0.01)
        throw non_integer_winding("winding residue " + std::to_string(w_raw - w_round) +
                                  " exceeds 0.01; increase the sample count");
    return static_cast<int>(w_round);
}

inline BandSummary band_summary(const ModelConfig& cfg, int samples = 0) {
    cfg.validate();
    detail::require_even_n(cfg);
    (void)detail::bloch_g0(cfg);
    const auto [j1, j2] = detail::dimer_pair(cfg);
    BandSummary s;
    s.gap = 2.0 * std::abs(j1 - j2);
    s.width = 2.0 * (j1 + j2);
    s.critical_gamma = s.width;
    try {
        s.winding = winding_number(cfg, samples);
    } catch (const gap_closed&) {
        s.winding = 0;
        s.winding_defined = false;
    }
    return s;
}

struct DispersionFit {
    double exponent = 0.0;
    bool gapped = false;
    double k_star = 0.0;     // closing momentum the fit is anchored at
    double min_energy = 0.0; // eps_+ at k_star
};

// Log-log slope of eps_+ against |k - k*| over a small window. The closing
// momentum k* is located on a coarse scan and snapped to 0 or +/-pi when the
// minimum sits there (those are the only closings the model produces).
inline DispersionFit dispersion_exponent(const ModelConfig& cfg, double k_window = 0.1) {
    cfg.validate();
    detail::require_even_n(cfg);
    if (!(k_window > 0.0))
        throw validation_error("k_window must be positive");

    const double pi = std::acos(-1.0);
    const int coarse = 4096;
    double best_e = std::numeric_limits<double>::infinity();
    double best_k = 0.0;
    for (int i = 0; i <= coarse; ++i) {
        const double k = -pi + 2.0 * pi * i / coarse;
        const double e = band_sample(cfg, k).energy_plus;
        // strict < keeps the lowest-|k| minimizer on exact ties
        if (e < best_e || (e == best_e && std::abs(k) < std::abs(best_k))) {
            best_e = e;
            best_k = k;
        }
    }
    const double step = 2.0 * pi / coarse;
    double k_star = best_k;
    if (band_sample(cfg, 0.0).energy_plus <= best_e + 1e-14 * std::max(1.0, best_e))
        k_star = 0.0;
    else if (std::abs(std::abs(best_k) - pi) <= step)
        k_star = pi;

    DispersionFit fit;
    fit.k_star = k_star;
    fit.min_energy = band_sample(cfg, k_star).energy_plus;

    const double scale = std::max(cfg.gamma0, 4.0 * cfg.j0);
    fit.gapped = fit.min_energy > 1e-6 * std::max(scale, 1e-300);

    // 64 log-spaced offsets spanning two decades up to the window edge
    const int m = 64;
    std::vector<double> lx(m), ly(m);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double frac = static_cast<double>(i) / (m - 1);
        const double dk = k_window * std::pow(100.0, frac - 1.0);  // [w/100, w]
        const double e = band_sample(cfg, k_star + dk).energy_plus;
        if (!(e > 0.0) || !std::isfinite(std::log(e)))
            throw degenerate_fit("eps_+ underflows inside the fit window");
        lx[i] = std::log(dk);
        ly[i] = std::log(e);
        sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-30)
        throw degenerate_fit("fit abscissa is degenerate");
    fit.exponent = (m * sxy - sx * sy) / denom;
    return fit;
}

}
