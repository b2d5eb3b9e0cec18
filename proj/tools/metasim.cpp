// metasim command-line front end.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "metasim/runner.hpp"

namespace {

using metasim::json;

json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw metasim::IoError("cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::parse_error& err) {
        throw metasim::ConfigError(std::string("invalid JSON: ") + err.what());
    }
}

int report(const std::exception& ex, int code)
{
    std::cerr << "metasim: " << ex.what() << '\n';
    return code;
}

int cmd_run(const std::string& file, const std::string& out, bool log_scale)
{
    metasim::Scenario sc = metasim::scenario_from_json(read_json_file(file));
    if (log_scale) {
        sc.outputs.log_scale = true;
    }
    const auto rep = metasim::run_scenario(sc, out);
    std::cout << rep.directory.string() << '\n';
    return metasim::kExitOk;
}

int cmd_sweep(const std::string& file, const std::string& out, std::optional<std::size_t> jobs)
{
    const metasim::SweepSpec sw = metasim::sweep_from_json(read_json_file(file));
    const auto rep = metasim::run_sweep(sw, out, jobs);
    int failed = 0;
    for (const auto& row : rep.rows) {
        if (!row.ok()) {
            ++failed;
            std::cerr << "metasim: " << sw.axis << "=" << metasim::format_number(row.value) << ": " << row.error
                      << '\n';
        }
    }
    std::cout << (rep.directory / "summary.csv").string() << '\n';
    if (rep.all_failed()) {
        return rep.rows.front().exit_code;
    }
    return metasim::kExitOk;
}

int cmd_catalog(const std::optional<std::string>& emit)
{
    const auto entries = metasim::catalog();
    if (!emit) {
        for (const auto& sc : entries) {
            std::cout << sc.name << '\n';
        }
        return metasim::kExitOk;
    }
    metasim::ensure_directory(*emit);
    for (const auto& sc : entries) {
        const auto path = std::filesystem::path(*emit) / (sc.name + ".json");
        auto os = metasim::open_output(path);
        os << metasim::to_json(sc).dump(2) << '\n';
        metasim::finish_output(os, path);
        std::cout << path.string() << '\n';
    }
    return metasim::kExitOk;
}

int cmd_lambda0(const std::string& file)
{
    const metasim::Scenario sc = metasim::scenario_from_json(read_json_file(file));
    if (sc.params.e != 0.0) {
        throw metasim::ConfigError("lambda0 is defined for the linear model only (e = 0)", "/params/e");
    }
    metasim::SpectralResult r;
    try {
        r = metasim::malthus_exponent(sc.params);
    } catch (const metasim::NoRootError& err) {
        throw metasim::ConfigError(err.what(), "/params/m");
    }
    json j{{"lambda0", r.lambda0}, {"tau_max", r.tau_max}, {"quadrature_nodes", r.quadrature_nodes},
           {"residual", r.residual}};
    std::cout << j.dump(2) << '\n';
    return metasim::kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Structured-population metastasis simulator"};
    app.require_subcommand(1);

    std::string scenario_file, sweep_file, lambda_file;
    std::string run_out = "out", sweep_out = "out";
    bool log_scale = false;
    std::size_t jobs = 0;
    std::string emit_dir;

    auto* run = app.add_subcommand("run", "Simulate one scenario");
    run->add_option("scenario", scenario_file, "Scenario JSON file")->required();
    run->add_option("--out", run_out, "Output root directory");
    run->add_flag("--log-scale", log_scale, "Log-scale y axis in plots");

    auto* sweep = app.add_subcommand("sweep", "Run a one-parameter sweep");
    sweep->add_option("sweep", sweep_file, "Sweep JSON file")->required();
    sweep->add_option("--out", sweep_out, "Output root directory");
    auto* jobs_opt = sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

    auto* cat = app.add_subcommand("catalog", "List built-in scenarios");
    auto* emit_opt = cat->add_option("--emit", emit_dir, "Write each scenario as a JSON file into DIR");

    auto* lam = app.add_subcommand("lambda0", "Malthus exponent of the linear model");
    lam->add_option("scenario", lambda_file, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : metasim::kExitConfig;
    }

    try {
        if (*run) {
            return cmd_run(scenario_file, run_out, log_scale);
        }
        if (*sweep) {
            return cmd_sweep(sweep_file, sweep_out,
                             jobs_opt->count() > 0 ? std::optional<std::size_t>(jobs) : std::nullopt);
        }
        if (*cat) {
            return cmd_catalog(emit_opt->count() > 0 ? std::optional<std::string>(emit_dir) : std::nullopt);
        }
        if (*lam) {
            return cmd_lambda0(lambda_file);
        }
    } catch (const std::exception& ex) {
        return report(ex, metasim::exit_code_for(ex));
    }
    return 1;
}
