// tcl4: command-line front end
//
//   tcl4 simulate|sweep|oracle|bcf-check|bench --config <path> --out <dir>
//        [--order 2|4] [--reference <path>]
//
// Exit status: 0 when the command's validations pass, 1 when a validation
// fails, 2 on errors (bad config, unreadable files, numerical failures).
// TCL4_WORKERS sets the worker count.

#include "tcl4/commands.hpp"
#include "tcl4/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"TCL0/TCL2/TCL4 spin-boson dynamics and benchmarks"};
    app.set_version_flag("--version", tcl4::code_version());
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<int> order;
    std::optional<std::string> reference;

    for (const char* name : {"simulate", "sweep", "oracle", "bcf-check", "bench"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--order", order, "TCL order (overrides solver.order)")->check(CLI::IsMember({0, 2, 4}));
        sub->add_option("--reference", reference, "reference trajectory CSV (overrides reference.path)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        tcl4::RunConfig cfg = tcl4::load_config(config_path);
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        if (order) cfg.solver.order = *order;
        if (reference) {
            if (!cfg.reference) cfg.reference.emplace();
            cfg.reference->path = *reference;
        }
        return tcl4::run(command, cfg, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "tcl4 " << command << ": error: " << e.what() << '\n';
        return 2;
    }
}
