// porobound: bounds on effective poroelastic moduli of a voxel RVE.
//
//   porobound validate <rve-file>
//   porobound stats <rve-file> [--shifts "x,y,z;..."] [--subdiv N] [--out FILE]
//   porobound bounds <rve-file> [--bc FAMILY] [--tol T] [--out FILE]
//
// POROBOUND_THREADS caps the number of concurrent case solves.

#include <iostream>

#include "CLI11.hpp"
#include "porobound/errors.hpp"
#include "porobound/report.hpp"

int main(int argc, char **argv) {
    using namespace porobound;

    CLI::App app{"Upper and lower bounds on effective poroelastic moduli of a voxel RVE"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string out_path, shifts;

    auto *validate = app.add_subcommand("validate", "Check an RVE file and its phase materials");
    validate->add_option("rve-file", cfg.input_path, "RVE file")->required();
    validate->add_option("--out", out_path, "Write the report here instead of stdout");

    auto *stats = app.add_subcommand("stats", "Two-point statistics and homogeneity score");
    stats->add_option("rve-file", cfg.input_path, "RVE file")->required();
    stats->add_option("--shifts", shifts, "Voxel shifts, e.g. \"0,0,0;1,0,0\"");
    stats->add_option("--subdiv", cfg.subdivisions, "Subwindows per axis")->check(CLI::PositiveNumber);
    stats->add_option("--out", out_path, "Write the report here instead of stdout");

    auto *bounds = app.add_subcommand("bounds", "Compute the bounds on the 7x7 effective matrix");
    bounds->add_option("rve-file", cfg.input_path, "RVE file")->required();
    bounds->add_option("--bc", cfg.bc_family, "Boundary-condition family")
        ->check(CLI::IsMember({"displacement-pressure", "traction-fluid-content", "both"}));
    bounds->add_option("--tol", cfg.solver_tol, "Relative residual tolerance")->check(CLI::PositiveNumber);
    bounds->add_option("--max-iter-factor", cfg.max_iter_factor,
                       "Iteration cap = factor * sqrt(unknowns)")->check(CLI::PositiveNumber);
    bounds->add_option("--shifts", shifts, "Shifts for the homogeneity score");
    bounds->add_option("--subdiv", cfg.subdivisions, "Subwindows per axis")->check(CLI::PositiveNumber);
    bounds->add_flag("--timings", cfg.timings, "Include wall-clock timings in the report");
    bounds->add_option("--out", out_path, "Write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_input_error;
    }

    cfg.command = app.get_subcommands().front()->get_name();
    if (!out_path.empty()) cfg.output_path = out_path;
    try {
        if (!shifts.empty()) cfg.shifts = parse_shifts(shifts);
        cfg.threads = threads_from_environment();
    } catch (const InputError &e) {
        std::cerr << "porobound: " << e.what() << "\n";
        return exit_input_error;
    }

    const RunOutcome outcome = run(cfg);
    for (const auto &msg : outcome.messages) std::cerr << "porobound: " << msg << "\n";
    if (!outcome.report.empty() && !cfg.output_path) std::cout << outcome.report;
    return outcome.exit_code;
}
