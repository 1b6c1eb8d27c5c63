#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "xwin/cli.hpp"

using namespace xwin;

int main(int argc, char** argv) {
    CLI::App app{"xwin: Dirac brackets, radial series and spectra for the extra-window model"};
    app.require_subcommand(1, 1);
    cli::Options o;
    std::string format, out;
    int l = -1, order = -1;
    for (const char* name : {"brackets", "classify", "solve", "spectrum", "eta-conditions"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", o.config_path, "JSON run configuration")->required();
        sub->add_option("--format", format, "csv or json");
        sub->add_option("--out", out, "output file (default stdout)");
        sub->add_flag("--strict", o.strict, "exit 4 when the coefficient routes disagree");
        sub->add_option("--l", l, "single angular momentum");
        sub->add_option("--order", order, "truncation order (series degree for solve)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : cli::config_error;
    }
    o.command = app.get_subcommands().front()->get_name();
    if (!format.empty()) o.format = format;
    if (!out.empty()) o.out = out;
    auto* sub = app.get_subcommand(o.command);
    if (sub->count("--l")) o.l = l;
    if (sub->count("--order")) o.order = order;

    config::RunConfig cfg;
    try {
        cfg = cli::apply_overrides(config::load(o.config_path), o);
    } catch (const config::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return cli::config_error;
    }

    cli::Report rep;
    try {
        rep = cli::dispatch(cfg, o.command);
    } catch (const config::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return cli::config_error;
    } catch (const radial::IntegrationFailure& e) {
        std::cerr << "numerical failure (radial): " << e.what() << "\n";
        return cli::numerical_failure;
    } catch (const spectrum::SpectrumError& e) {
        std::cerr << "numerical failure (spectrum): " << e.what() << "\n";
        return cli::numerical_failure;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure (profiles): " << e.what() << "\n";
        return cli::numerical_failure;
    } catch (const sym::SymbolicError& e) {
        std::cerr << "numerical failure (symbolic): " << e.what() << "\n";
        return cli::numerical_failure;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cli::numerical_failure;
    }

    if (cfg.out_path.empty()) {
        cli::render(rep, cfg, std::cout);
    } else {
        std::ofstream f(cfg.out_path);
        if (!f) {
            std::cerr << "cannot write " << cfg.out_path << "\n";
            return cli::config_error;
        }
        cli::render(rep, cfg, f);
    }
    if (rep.discrepancy) {
        const auto& ra = rep.meta["route_agreement"];
        std::cerr << "coefficient routes disagree: max relative difference " << ra["max_rel"].get<double>()
                  << " at eps = " << ra["eps"].get<double>() << " (l = " << ra["l"].get<int>() << ")\n";
        if (o.strict) return cli::discrepancy;
    }
    return cli::ok;
}
