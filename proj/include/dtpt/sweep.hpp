#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dtpt/bloch.hpp"
#include "dtpt/dynamics.hpp"
#include "dtpt/errors.hpp"
#include "dtpt/model.hpp"
#include "dtpt/modes.hpp"
#include "dtpt/rng.hpp"

namespace dtpt {

struct AxisSpec {
    std::string name;
    std::vector<double> values;

    static AxisSpec uniform(std::string name, double lo, double hi, int count) {
        if (count < 1)
            throw validation_error("axis '" + name + "' needs at least one grid point");
        if (count > 1 && !(hi > lo))
            throw validation_error("axis '" + name + "' grid must be strictly increasing");
        AxisSpec a;
        a.name = std::move(name);
        for (int i = 0; i < count; ++i)
            a.values.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        return a;
    }

    void validate() const {
        static const char* whitelist[] = {"j0_over_gamma0", "phi", "spacing", "gamma0_over_width"};
        bool ok = false;
        for (const char* w : whitelist) ok = ok || name == w;
        if (!ok)
            throw validation_error("unknown sweep axis '" + name +
                                   "' (allowed: j0_over_gamma0, phi, spacing, gamma0_over_width)");
        if (values.empty())
            throw validation_error("axis '" + name + "' has an empty grid");
        for (size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1]))
                throw validation_error("axis '" + name + "' grid must be strictly increasing");
    }
};

struct SweepSpec {
    ModelConfig base;
    AxisSpec axis1;
    AxisSpec axis2;
    std::uint64_t seed = 1;
    int samples = 200;

    void validate() const {
        base.validate();
        axis1.validate();
        axis2.validate();
        if (samples < 1)
            throw validation_error("samples must be >= 1");
    }
};

struct PhasePoint {
    int winding = 0;
    bool winding_defined = false;   // false off the quarter-wave spacings or on the closing
    bool edge_present = false;
    std::string label;              // "TP-I", "TP-II" or "NTP"
    bool on_boundary = false;
    double j1_over_j2 = 0.0;
    double gamma0_over_width = 0.0;
    double gamma_tilde0 = 0.0;      // effective decay of the tracked midgap mode
    double edge_ipr = 0.0;
};

// Phase label for one configuration. The momentum-space winding is always
// evaluated with the six-site Bloch formula: within the residue class where
// the ring folding is consistent (N = 2 mod 4) the result is N-independent,
// and outside it the finite-N formula produces spurious values, so a fixed
// reference size is the only defensible choice. The real-space diagnostics
// (edge detection, IPR, decay) use the configured N.
inline PhasePoint classify_phase(const ModelConfig& cfg,
                                 double eps_gamma = 0.0, double eps_j = 0.0) {
    cfg.validate();
    PhasePoint p;

    const double c = std::cos(cfg.phi);
    const double j1 = cfg.j0 * (1.0 - c), j2 = cfg.j0 * (1.0 + c);
    const double width = 2.0 * (j1 + j2);

    if (j2 > 0.0) {
        p.j1_over_j2 = j1 / j2;
    } else {
        p.j1_over_j2 = 1.0;    // no dimerization structure at all
        p.on_boundary = true;
    }
    if (width > 0.0) {
        p.gamma0_over_width = cfg.gamma0 / width;
    } else {
        p.gamma0_over_width = 0.0;
        p.on_boundary = true;
    }
    if (std::abs(p.j1_over_j2 - 1.0) <= eps_j) p.on_boundary = true;
    if (std::abs(p.gamma0_over_width - 1.0) <= eps_gamma) p.on_boundary = true;

    const bool quarter = std::abs(cfg.spacing - 0.25) < 1e-12 ||
                         std::abs(cfg.spacing - 0.75) < 1e-12;
    if (quarter) {
        ModelConfig wcfg;
        wcfg.n_emitters = 6;
        wcfg.j0 = cfg.j0;
        wcfg.phi = cfg.phi;
        wcfg.gamma0 = cfg.gamma0;
        wcfg.spacing = cfg.spacing;
        try {
            p.winding = winding_number(wcfg);
            p.winding_defined = true;
        } catch (const gap_closed&) {
            p.winding_defined = false;
            p.on_boundary = true;
        }
    }

    // real-space diagnostics at the configured size
    CouplingSet cs = assemble(cfg);
    ModeSet modes = diagonalize(cs);
    Eigen::VectorXd ref = hermitian_edge_reference(cs, modes);
    const int n = cfg.n_emitters;
    try {
        if (!modes.edge_indices.empty()) {
            EdgeState es = edge_state(modes);
            double mean_ipr = 0.0;
            for (int k = 0; k < es.distributions.cols(); ++k)
                mean_ipr += ipr(es.distributions.col(k));
            mean_ipr /= static_cast<double>(es.distributions.cols());
            p.edge_ipr = mean_ipr;
            p.edge_present = mean_ipr > 2.0 / n;
            ref = modes.vectors.col(es.indices.front());
        } else {
            Eigen::VectorXd dist = ref.array().square();
            p.edge_ipr = ipr(dist);
            p.edge_present = p.edge_ipr > 2.0 / n;
        }
    } catch (const edge_undefined&) {
        p.edge_present = false;
    }

    ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(cs));
    const int j = identify_edge(cms, ref);
    p.gamma_tilde0 = -cms.eigenvalues[j].imag();

    const bool beyond_dtpt = p.gamma0_over_width > 1.0;
    const bool ssh_topological = p.j1_over_j2 < 1.0;
    if (p.winding_defined) {
        if (p.winding == 1 && p.edge_present)
            p.label = "TP-I";
        else if (beyond_dtpt && ssh_topological)
            p.label = "TP-II";
        else
            p.label = "NTP";
    } else {
        if (p.edge_present && ssh_topological)
            p.label = "TP-I";
        else if (beyond_dtpt && ssh_topological)
            p.label = "TP-II";
        else
            p.label = "NTP";
    }
    return p;
}

struct PhaseDiagram {
    AxisSpec axis1;                  // gamma0_over_width
    AxisSpec axis2;                  // phi
    std::vector<PhasePoint> cells;   // row-major: axis1 outer, axis2 inner
};

// Default second axis: phi values reproducing a uniform J1/J2 grid on
// [0.2, 2] through r = (1 - cos phi)/(1 + cos phi).
inline AxisSpec phase_axis_from_ratio(double r_lo, double r_hi, int count) {
    AxisSpec a;
    a.name = "phi";
    for (int i = 0; i < count; ++i) {
        const double r = count == 1 ? r_lo : r_lo + (r_hi - r_lo) * i / (count - 1);
        a.values.push_back(std::acos((1.0 - r) / (1.0 + r)));
    }
    return a;
}

inline PhaseDiagram phase_diagram(const SweepSpec& spec) {
    spec.validate();
    if (spec.axis1.name != "gamma0_over_width" || spec.axis2.name != "phi")
        throw validation_error("phase diagram axes must be gamma0_over_width x phi");
    if (!(spec.base.j0 > 0.0))
        throw validation_error("phase diagram needs j0 > 0 to set the band width");

    PhaseDiagram pd;
    pd.axis1 = spec.axis1;
    pd.axis2 = spec.axis2;

    const auto half_step = [](const std::vector<double>& v, size_t i) {
        if (v.size() < 2) return 0.0;
        double s = 0.0;
        if (i > 0) s = std::max(s, v[i] - v[i - 1]);
        if (i + 1 < v.size()) s = std::max(s, v[i + 1] - v[i]);
        return 0.5 * s;
    };

    const double width = 4.0 * spec.base.j0;
    for (size_t i1 = 0; i1 < spec.axis1.values.size(); ++i1) {
        const double g_ratio = spec.axis1.values[i1];
        const double eps_g = half_step(spec.axis1.values, i1);
        for (size_t i2 = 0; i2 < spec.axis2.values.size(); ++i2) {
            const double phi = spec.axis2.values[i2];
            ModelConfig cfg = spec.base;
            cfg.phi = phi;
            cfg.gamma0 = g_ratio * width;
            // boundary resolution for J1/J2 = 1, from the neighboring phi cells
            const double r_here = (1.0 - std::cos(phi)) / (1.0 + std::cos(phi));
            double eps_r = 0.0;
            if (spec.axis2.values.size() > 1) {
                const auto r_of = [](double ph) {
                    return (1.0 - std::cos(ph)) / (1.0 + std::cos(ph));
                };
                if (i2 > 0)
                    eps_r = std::max(eps_r, std::abs(r_here - r_of(spec.axis2.values[i2 - 1])));
                if (i2 + 1 < spec.axis2.values.size())
                    eps_r = std::max(eps_r, std::abs(r_of(spec.axis2.values[i2 + 1]) - r_here));
                eps_r *= 0.5;
            }
            pd.cells.push_back(classify_phase(cfg, eps_g, eps_r));
        }
    }
    return pd;
}

struct DisorderStats {
    double mean = 0.0;
    double median = 0.0;
    double p5 = 0.0;
    double p95 = 0.0;
    int resamples = 0;
    std::vector<double> samples;   // per-sample Gamma~_0, in draw order
};

namespace detail {

inline double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const size_t lo = static_cast<size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}

// Position-disorder ensemble: offsets uniform on [-w, w], independent per
// site; draws that break the sorted-chain invariant are rejected and redrawn.
// The edge branch of every sample is matched against the clean configuration's
// Hermitian edge state. Sample s consumes substream (seed, s) only, so the
// draw sequence is independent of evaluation order.
inline DisorderStats disorder_ensemble(const ModelConfig& cfg, double w, int m,
                                       std::uint64_t seed) {
    cfg.validate();
    if (!(w >= 0.0))
        throw validation_error("disorder width must be >= 0");
    if (m < 1)
        throw validation_error("sample count must be >= 1");
    if (!cfg.zero_offsets())
        throw validation_error("disorder ensemble starts from a clean chain; offsets must be zero");

    CouplingSet clean = assemble(cfg);
    ModeSet clean_modes = diagonalize(clean);
    const Eigen::VectorXd ref = hermitian_edge_reference(clean, clean_modes);

    DisorderStats st;
    const int n = cfg.n_emitters;
    for (int s = 0; s < m; ++s) {
        CounterRng rng(seed, static_cast<std::uint64_t>(s));
        ModelConfig sample = cfg;
        sample.offsets.assign(static_cast<size_t>(n), 0.0);
        for (int attempt = 0;; ++attempt) {
            if (attempt == 1000)
                throw validation_error("disorder width " + std::to_string(w) +
                                       " cannot keep the chain sorted after 1000 redraws");
            for (int i = 0; i < n; ++i)
                sample.offsets[static_cast<size_t>(i)] = rng.uniform(-w, w);
            const auto x = sample.positions();
            bool sorted = true;
            for (int i = 1; i < n && sorted; ++i)
                sorted = x[static_cast<size_t>(i)] > x[static_cast<size_t>(i - 1)];
            if (sorted) break;
            ++st.resamples;
        }
        CouplingSet cs = assemble(sample);
        ComplexModeSet cms = complex_diagonalize(effective_hamiltonian(cs));
        const int j = identify_edge(cms, ref);
        st.samples.push_back(-cms.eigenvalues[j].imag());
    }

    st.mean = 0.0;
    for (double v : st.samples) st.mean += v;
    st.mean /= static_cast<double>(st.samples.size());
    st.median = detail::percentile(st.samples, 0.5);
    st.p5 = detail::percentile(st.samples, 0.05);
    st.p95 = detail::percentile(st.samples, 0.95);
    return st;
}

}
