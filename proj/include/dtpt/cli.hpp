#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtpt/bloch.hpp"
#include "dtpt/config.hpp"
#include "dtpt/dynamics.hpp"
#include "dtpt/errors.hpp"
#include "dtpt/io.hpp"
#include "dtpt/model.hpp"
#include "dtpt/modes.hpp"
#include "dtpt/sweep.hpp"
#include "dtpt/version.hpp"

namespace dtpt::cli {

struct Options {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int samples = 0;
    bool samples_set = false;
    std::vector<std::string> grids;   // raw "name:min:max:count" specs
    double threshold = -1.0;          // relative to gamma0; < 0 means default
    double width = -1.0;              // disorder width; < 0 means default
};

namespace detail {

inline AxisSpec parse_grid_spec(const std::string& spec) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
        if (c == ':') { parts.push_back(cur); cur.clear(); }
        else cur.push_back(c);
    }
    parts.push_back(cur);
    if (parts.size() != 4)
        throw validation_error("grid spec must be name:min:max:count, got '" + spec + "'");
    try {
        const double lo = std::stod(parts[1]);
        const double hi = std::stod(parts[2]);
        const size_t count = static_cast<size_t>(std::stoll(parts[3]));
        return AxisSpec::uniform(parts[0], lo, hi, static_cast<int>(count));
    } catch (const dtpt::error&) {
        throw;
    } catch (const std::exception&) {
        throw validation_error("cannot parse grid spec '" + spec + "'");
    }
}

inline std::optional<AxisSpec> find_grid(const Options& opts, const std::string& name) {
    std::optional<AxisSpec> found;
    for (const auto& spec : opts.grids) {
        AxisSpec a = parse_grid_spec(spec);
        if (a.name == name) found = std::move(a);
    }
    return found;
}

inline void require_known_grids(const Options& opts, std::initializer_list<const char*> names) {
    for (const auto& spec : opts.grids) {
        AxisSpec a = parse_grid_spec(spec);
        bool ok = false;
        for (const char* n : names) ok = ok || a.name == n;
        if (!ok)
            throw validation_error("grid '" + a.name + "' is not used by this command");
    }
}

inline std::string basename_of(const std::string& path) {
    return std::filesystem::path(path).filename().string();
}

// Canonical invocation string for the meta line. The output directory is
// omitted on purpose: it must not influence the bytes written into it.
inline io::Meta make_meta(const std::string& command, const std::string& config_path,
                          const Options& opts, std::uint64_t effective_seed,
                          const FullConfig& fc) {
    io::Meta m;
    m.command = "dtpt " + command + " " + basename_of(config_path);
    if (opts.seed_set) m.command += " --seed " + std::to_string(opts.seed);
    if (opts.samples_set) m.command += " --samples " + std::to_string(opts.samples);
    if (opts.width >= 0.0) m.command += " --width " + io::g17(opts.width);
    if (opts.threshold >= 0.0) m.command += " --threshold " + io::g17(opts.threshold);
    for (const auto& g : opts.grids) m.command += " --grid " + g;
    m.seed = effective_seed;
    m.config_hash = io::fnv1a64_hex(fc.canonical);
    return m;
}

inline nlohmann::json meta_json(const io::Meta& m) {
    return {{"tool", "dtpt"},
            {"version", dtpt::version},
            {"command", m.command},
            {"seed", m.seed},
            {"rng", dtpt::rng_id},
            {"config", std::string("fnv1a:") + m.config_hash}};
}

inline void write_json(const std::string& path, nlohmann::json j, const io::Meta& m) {
    j["meta"] = meta_json(m);
    io::write_text(path, j.dump(2) + "\n");
}

inline Eigen::VectorXcd initial_state(const FullConfig& fc, const CouplingSet& cs) {
    const int n = fc.model.n_emitters;
    const std::string& kind = fc.dynamics.initial;
    if (kind == "edge") {
        ModeSet modes = diagonalize(cs);
        return hermitian_edge_reference(cs, modes).cast<complexd>();
    }
    if (kind.rfind("site:", 0) == 0) {
        int site = 0;
        try {
            site = std::stoi(kind.substr(5));
        } catch (const std::exception&) {
            throw config_error("bad initial state '" + kind + "'");
        }
        if (site < 1 || site > n)
            throw config_error("initial site " + std::to_string(site) +
                               " outside 1.." + std::to_string(n));
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n);
        a[site - 1] = 1.0;
        return a;
    }
    if (kind == "amplitudes") {
        if (static_cast<int>(fc.dynamics.amplitudes.size()) != n)
            throw config_error("initial amplitudes must have length n_emitters");
        Eigen::VectorXcd a(n);
        for (int i = 0; i < n; ++i) a[i] = fc.dynamics.amplitudes[static_cast<size_t>(i)];
        if (std::abs(a.norm() - 1.0) > 1e-8)
            throw config_error("initial amplitudes must be normalized");
        return a;
    }
    throw config_error("unknown initial state '" + kind + "' (use \"edge\", \"site:<k>\", or an array)");
}

}

inline int run(const std::string& command, const std::string& config_path,
               const Options& opts, std::ostream& out, std::ostream& err) {
    try {
        static const char* commands[] = {"couplings", "bands", "winding", "spectrum",
                                         "edgestate", "decay", "nu-fit", "window",
                                         "dynamics", "phase-diagram", "disorder"};
        bool known = false;
        for (const char* c : commands) known = known || command == c;
        if (!known)
            throw validation_error("unknown command '" + command + "'");

        FullConfig fc = parse_config(config_path);
        const ModelConfig& model = fc.model;
        std::filesystem::create_directories(opts.out_dir);
        const auto path = [&](const char* name) {
            return (std::filesystem::path(opts.out_dir) / name).string();
        };

        std::uint64_t seed = 1;
        if (fc.sweep.seed) seed = *fc.sweep.seed;
        if (opts.seed_set) seed = opts.seed;
        const io::Meta meta = detail::make_meta(command, config_path, opts, seed, fc);

        if (command == "couplings") {
            detail::require_known_grids(opts, {});
            CouplingSet cs = assemble(model);
            io::CsvFile csv(path("couplings.csv"), meta, "i,j,h_ij,gamma_ij");
            int rows = 0;
            for (int i = 0; i < model.n_emitters; ++i)
                for (int j = i; j < model.n_emitters; ++j) {
                    csv.row({std::to_string(i + 1), std::to_string(j + 1),
                             io::g17(cs.h(i, j)), io::g17(cs.gamma(i, j))});
                    ++rows;
                }
            out << "N=" << model.n_emitters << " spacing=" << io::g17(model.spacing)
                << " wrote couplings.csv (" << rows << " rows)\n";
            return 0;
        }

        if (command == "bands" || command == "winding") {
            detail::require_known_grids(opts, {"k"});
            const double c = std::cos(model.phi);
            const double j1 = model.j0 * (1.0 - c), j2 = model.j0 * (1.0 + c);
            nlohmann::json summary = {{"gap", 2.0 * std::abs(j1 - j2)},
                                      {"width", 2.0 * (j1 + j2)},
                                      {"critical_gamma", 2.0 * (j1 + j2)}};
            if (command == "winding") {
                const int w = winding_number(model);   // GapClosed propagates -> exit 3
                summary["winding"] = w;
                detail::write_json(path("summary.json"), summary, meta);
                out << "W=" << w << "\n";
                return 0;
            }
            const double pi = std::acos(-1.0);
            AxisSpec kgrid = detail::find_grid(opts, "k").value_or(
                AxisSpec::uniform("k", -pi, pi, 1025));
            io::CsvFile csv(path("bands.csv"), meta, "k,hx,hy,e_plus,e_minus");
            for (double k : kgrid.values) {
                BlochSample s = band_sample(model, k);
                csv.row({io::g17(s.k), io::g17(s.hx), io::g17(s.hy),
                         io::g17(s.energy_plus), io::g17(s.energy_minus)});
            }
            BandSummary bs = band_summary(model);
            if (bs.winding_defined)
                summary["winding"] = bs.winding;
            else
                summary["winding"] = nullptr;
            detail::write_json(path("summary.json"), summary, meta);
            out << "gap=" << io::g17(bs.gap) << " width=" << io::g17(bs.width)
                << " critical_gamma=" << io::g17(bs.critical_gamma) << " winding="
                << (bs.winding_defined ? std::to_string(bs.winding) : std::string("undefined"))
                << "\n";
            return 0;
        }

        if (command == "spectrum") {
            detail::require_known_grids(opts, {"j0"});
            AxisSpec grid = detail::find_grid(opts, "j0").value_or(
                AxisSpec::uniform("j0", 0.005, 1.0, 200));
            io::CsvFile csv(path("spectrum.csv"), meta, "J0_over_gamma0,mode_index,energy");
            for (double v : grid.values) {
                ModelConfig cfg = model;
                cfg.j0 = v * model.gamma0;
                ModeSet modes = diagonalize(assemble(cfg));
                for (int i = 0; i < cfg.n_emitters; ++i)
                    csv.row({io::g17(v), io::g17(mode_label(i, cfg.n_emitters)),
                             io::g17(modes.energies[i])});
            }
            out << "wrote spectrum.csv (" << grid.values.size() << " couplings x "
                << model.n_emitters << " modes)\n";
            return 0;
        }

        if (command == "edgestate") {
            detail::require_known_grids(opts, {});
            ModeSet modes = diagonalize(assemble(model));
            EdgeState es = edge_state(modes);
            io::CsvFile csv(path("edge.csv"), meta, "site,prob");
            for (int i = 0; i < model.n_emitters; ++i)
                csv.row({std::to_string(i + 1), io::g17(es.distributions(i, 0))});
            out << "edge mode m=" << io::g17(mode_label(es.indices.front(), model.n_emitters))
                << " ipr=" << io::g17(ipr(es.distributions.col(0)))
                << (es.indices.size() == 2 ? " (midgap pair; lower member written)" : "")
                << "\n";
            return 0;
        }

        if (command == "decay") {
            detail::require_known_grids(opts, {});
            CouplingSet cs = assemble(model);
            ModeSet modes = diagonalize(cs);
            DecayMatrix dm = decay_matrix(modes, cs.gamma);
            io::CsvFile csv(path("decay.csv"), meta, "m,n,gamma_mn");
            const int n = model.n_emitters;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    csv.row({io::g17(mode_label(a, n)), io::g17(mode_label(b, n)),
                             io::g17(dm.gamma_mn(a, b))});
            int edge = dm.edge_index;
            if (edge < 0) {
                edge = 0;
                for (int i = 1; i < n; ++i)
                    if (std::abs(modes.energies[i]) < std::abs(modes.energies[edge])) edge = i;
            }
            out << "Gamma00=" << io::g17(dm.gamma_mn(edge, edge)) << "\n";
            return 0;
        }

        if (command == "nu-fit") {
            detail::require_known_grids(opts, {"n"});
            AxisSpec grid = detail::find_grid(opts, "n").value_or(
                AxisSpec::uniform("n", 17.0, 49.0, 9));
            std::vector<int> sizes;
            for (double v : grid.values) {
                const double r = std::round(v);
                if (std::abs(v - r) > 1e-9)
                    throw validation_error("nu-fit sizes must be integers, got " + io::g17(v));
                sizes.push_back(static_cast<int>(r));
            }
            NuFit fit = nu_scaling_fit(model, +1, sizes);
            io::CsvFile csv(path("nu.csv"), meta, "N,ln_abs_gamma_m0");
            for (size_t i = 0; i < sizes.size(); ++i)
                csv.row({std::to_string(sizes[i]), io::g17(fit.ln_abs[i])});
            nlohmann::json j = {{"residual", fit.residual},
                                {"sizes", sizes},
                                {"below_floor", fit.below_floor}};
            if (fit.below_floor)
                j["nu"] = "inf";
            else
                j["nu"] = fit.nu;
            detail::write_json(path("nu.json"), j, meta);
            out << "nu=" << (fit.below_floor ? std::string("inf") : io::g17(fit.nu)) << "\n";
            return 0;
        }

        if (command == "window") {
            detail::require_known_grids(opts, {"d"});
            AxisSpec grid = detail::find_grid(opts, "d").value_or(
                AxisSpec::uniform("d", 0.55, 0.95, 161));
            const double rel = opts.threshold >= 0.0 ? opts.threshold : 1e-6;
            WindowScan ws = window_scan(model, grid.values, rel);
            io::CsvFile csv(path("window.csv"), meta, "d_over_lambda0,Gamma00,Gamma_tilde0");
            for (size_t i = 0; i < ws.d.size(); ++i)
                csv.row({io::g17(ws.d[i]), io::g17(ws.gamma00[i]), io::g17(ws.gamma_tilde0[i])});
            nlohmann::json j = {{"window_width", ws.window_width}, {"threshold", ws.threshold}};
            if (ws.window_found)
                j["window_center"] = ws.window_center;
            else
                j["window_center"] = nullptr;
            detail::write_json(path("window.json"), j, meta);
            out << "window_width=" << io::g17(ws.window_width) << " threshold="
                << io::g17(ws.threshold) << "\n";
            return 0;
        }

        if (command == "dynamics") {
            detail::require_known_grids(opts, {"t"});
            AxisSpec grid = detail::find_grid(opts, "t").value_or(
                AxisSpec::uniform("t", 0.0, 10.0, 1001));
            const double scale = model.gamma0 > 0.0 ? model.gamma0 : 1.0;
            Eigen::VectorXd times(static_cast<int>(grid.values.size()));
            for (size_t i = 0; i < grid.values.size(); ++i)
                times[static_cast<int>(i)] = grid.values[i] / scale;

            CouplingSet cs = assemble(model);
            Eigen::VectorXcd a0 = detail::initial_state(fc, cs);
            Trajectory tr = fc.dynamics.oracle
                ? lindblad_oracle(model, a0, times)
                : propagate(effective_hamiltonian(cs), a0, times);

            std::string header = "t";
            for (int i = 1; i <= model.n_emitters; ++i)
                header += ",p_" + std::to_string(i);
            header += ",p_ground,norm";
            io::CsvFile csv(path("trajectory.csv"), meta, header);
            for (int s = 0; s < times.size(); ++s) {
                std::vector<std::string> row{io::g17(grid.values[static_cast<size_t>(s)])};
                for (int i = 0; i < model.n_emitters; ++i)
                    row.push_back(io::g17(tr.site_populations(s, i)));
                row.push_back(io::g17(tr.ground_population[s]));
                row.push_back(io::g17(tr.norm[s]));
                csv.row(row);
            }
            const double final_exc = tr.site_populations.row(times.size() - 1).sum();
            out << "final excited population=" << io::g17(final_exc)
                << (fc.dynamics.oracle ? " (full Lindblad oracle)" : "") << "\n";
            return 0;
        }

        if (command == "phase-diagram") {
            detail::require_known_grids(opts, {"gamma0_over_width", "phi"});
            SweepSpec spec;
            spec.base = model;
            spec.seed = seed;
            spec.axis1 = AxisSpec::uniform("gamma0_over_width", 0.0, 2.0, 21);
            spec.axis2 = phase_axis_from_ratio(0.2, 2.0, 21);
            if (fc.sweep.axis1) spec.axis1 = *fc.sweep.axis1;
            if (fc.sweep.axis2) spec.axis2 = *fc.sweep.axis2;
            if (auto g = detail::find_grid(opts, "gamma0_over_width")) spec.axis1 = *g;
            if (auto g = detail::find_grid(opts, "phi")) spec.axis2 = *g;

            PhaseDiagram pd = phase_diagram(spec);
            io::CsvFile csv(path("phase.csv"), meta,
                            "gamma0_over_width,j1_over_j2,phi,winding,winding_defined,"
                            "edge_present,label,on_boundary");
            int tp1 = 0, tp2 = 0, ntp = 0, boundary = 0;
            size_t idx = 0;
            for (size_t i1 = 0; i1 < pd.axis1.values.size(); ++i1)
                for (size_t i2 = 0; i2 < pd.axis2.values.size(); ++i2, ++idx) {
                    const PhasePoint& p = pd.cells[idx];
                    csv.row({io::g17(pd.axis1.values[i1]), io::g17(p.j1_over_j2),
                             io::g17(pd.axis2.values[i2]), std::to_string(p.winding),
                             p.winding_defined ? "1" : "0", p.edge_present ? "1" : "0",
                             p.label, p.on_boundary ? "1" : "0"});
                    if (p.on_boundary) ++boundary;
                    if (p.label == "TP-I") ++tp1;
                    else if (p.label == "TP-II") ++tp2;
                    else ++ntp;
                }
            out << "TP-I=" << tp1 << " TP-II=" << tp2 << " NTP=" << ntp
                << " boundary=" << boundary << "\n";
            return 0;
        }

        if (command == "disorder") {
            detail::require_known_grids(opts, {});
            const double w = opts.width >= 0.0 ? opts.width : 0.01;
            int m = 200;
            if (fc.sweep.samples) m = *fc.sweep.samples;
            if (opts.samples_set) m = opts.samples;
            DisorderStats st = disorder_ensemble(model, w, m, seed);
            io::CsvFile csv(path("disorder.csv"), meta, "sample,gamma_tilde0");
            for (size_t i = 0; i < st.samples.size(); ++i)
                csv.row({std::to_string(i), io::g17(st.samples[i])});
            nlohmann::json j = {{"mean", st.mean},     {"median", st.median},
                                {"p5", st.p5},         {"p95", st.p95},
                                {"resamples", st.resamples}, {"width", w},
                                {"samples", m},        {"seed", seed}};
            detail::write_json(path("disorder.json"), j, meta);
            out << "median=" << io::g17(st.median) << " p95=" << io::g17(st.p95)
                << " resamples=" << st.resamples << "\n";
            return 0;
        }

        throw validation_error("unhandled command '" + command + "'");
    } catch (const dtpt::error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}
