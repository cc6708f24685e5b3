// Command-line front end for the dtpt library.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtpt/cli.hpp"
#include "dtpt/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dissipative topological phase transition toolkit"};
    app.set_version_flag("--version", std::string("dtpt ") + dtpt::version);

    std::string command, config_path;
    dtpt::cli::Options opts;

    app.add_option("command", command,
                   "one of: couplings, bands, winding, spectrum, edgestate, decay, "
                   "nu-fit, window, dynamics, phase-diagram, disorder")
        ->required();
    app.add_option("config", config_path, "path to a JSON model configuration")->required();
    app.add_option("--out", opts.out_dir, "output directory (created if missing)");
    auto* seed_opt = app.add_option("--seed", opts.seed, "RNG seed for stochastic commands");
    auto* samples_opt = app.add_option("--samples", opts.samples, "ensemble size for disorder");
    app.add_option("--grid", opts.grids, "axis override, name:min:max:count (repeatable)");
    app.add_option("--threshold", opts.threshold, "window threshold relative to gamma0");
    app.add_option("--width", opts.width, "disorder width in units of lambda0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    opts.seed_set = seed_opt->count() > 0;
    opts.samples_set = samples_opt->count() > 0;

    return dtpt::cli::run(command, config_path, opts, std::cout, std::cerr);
}
