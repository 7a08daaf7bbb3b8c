// gmtlab: covering-functional experiments on explicit test mappings.
//
//   gmtlab run <config> [--jobs N]      run an experiment, write its CSV
//   gmtlab validate <config>            parse and validate a config
//   gmtlab list-maps                    show the builtin map catalog
//   gmtlab plot <csv> --kind K [-o F]   render records as an SVG
//
// Exit codes: 0 all checks pass, 1 check failure, 2 usage/config error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "gmtlab/experiment.hpp"
#include "gmtlab/svgplot.hpp"

namespace {

int cmd_run(const std::string& config_path, int jobs) {
    gmtlab::ExperimentConfig cfg = gmtlab::load_config(config_path);
    gmtlab::validate_config(cfg);
    gmtlab::RunResult result = gmtlab::run_experiment(cfg, jobs);

    std::filesystem::create_directories(cfg.output_dir);
    const std::string out_path =
        (std::filesystem::path(cfg.output_dir) / (cfg.experiment + ".csv")).string();
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 2;
    }
    out << gmtlab::records_to_csv(result.records);
    out.close();

    for (const auto& note : result.notes) std::cout << "note: " << note << "\n";
    std::cout << result.records.size() << " records -> " << out_path << "\n";
    std::cout << (result.checks_passed ? "checks: pass" : "checks: FAIL") << "\n";
    return result.checks_passed ? 0 : 1;
}

int cmd_validate(const std::string& config_path) {
    gmtlab::ExperimentConfig cfg = gmtlab::load_config(config_path);
    gmtlab::validate_config(cfg);
    std::cout << "config ok: experiment '" << cfg.experiment << "'\n";
    return 0;
}

int cmd_list_maps() {
    for (const auto& info : gmtlab::builtin_catalog())
        std::cout << info.signature << "\n    " << info.description << "\n";
    std::cout << "Any parenthesized expression tuple is also accepted as a map, e.g. "
                 "\"(x0^2 - x1^2, 2*x0*x1)\".\n";
    return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& kind, const std::string& out_path) {
    std::ifstream in(csv_path);
    if (!in) {
        std::cerr << "error: cannot open " << csv_path << "\n";
        return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const auto records = gmtlab::parse_csv(ss.str());
    if (records.empty()) {
        std::cerr << "error: no records in " << csv_path << "\n";
        return 2;
    }
    gmtlab::emit_plot(records, gmtlab::plot_kind_from_string(kind), out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"covering functionals, critical values and exponent laws on test mappings"};
    app.require_subcommand(1);

    std::string config_path, csv_path, kind, out_path = "plot.svg";
    int jobs = 1;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "validate a config file");
    validate->add_option("config", config_path, "config file")->required();

    app.add_subcommand("list-maps", "list builtin test mappings");

    auto* plot = app.add_subcommand("plot", "render a records CSV as SVG");
    plot->add_option("csv", csv_path, "records CSV")->required();
    plot->add_option("--kind", kind, "scaling | tradeoff | coarea")->required();
    plot->add_option("-o,--out", out_path, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("run")) return cmd_run(config_path, jobs);
        if (app.got_subcommand("validate")) return cmd_validate(config_path);
        if (app.got_subcommand("list-maps")) return cmd_list_maps();
        if (app.got_subcommand("plot")) return cmd_plot(csv_path, kind, out_path);
    } catch (const gmtlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
