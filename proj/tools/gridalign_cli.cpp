#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gridalign/csv.hpp"
#include "gridalign/pipeline.hpp"

namespace ga = gridalign;

int main(int argc, char** argv) {
    CLI::App app{"Tariff, emissions, and price alignment pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    int year = 0;
    unsigned jobs = 0;
    std::string out_dir;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--year", year, "Analysis year");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory");

    auto* ingest = app.add_subcommand("ingest", "Parse and validate inputs, assign regions");
    auto* flatten = app.add_subcommand("flatten", "Build month-hour matrices");
    auto* analyze = app.add_subcommand("analyze", "Correlations, categories, premiums, regime map");
    auto* report = app.add_subcommand("report", "Summarize a finished run");
    for (auto* sub : {ingest, flatten, analyze, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ga::ExitCode::FatalIo);
    }

    auto log = [](std::string const& line) { std::cerr << line << '\n'; };
    ga::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = ga::load_config(config_path);
    } catch (ga::ConfigError const& e) {
        log(fmt::format("fatal: {}", e.what()));
        return static_cast<int>(ga::ExitCode::FatalIo);
    }
    if (year != 0) cfg.year = year;
    if (jobs != 0) cfg.jobs = jobs;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    ga::ExitCode rc = ga::ExitCode::Success;
    if (ingest->parsed()) {
        rc = ga::run_ingest(cfg, log);
    } else if (flatten->parsed()) {
        rc = ga::run_flatten(cfg, log);
    } else if (analyze->parsed()) {
        rc = ga::run_analyze(cfg, log);
        if (rc == ga::ExitCode::Success) {
            try {
                std::cout << ga::read_file((cfg.out_dir / "analysis" / "summary.txt").string());
            } catch (std::exception const& e) {
                log(fmt::format("fatal: {}", e.what()));
                rc = ga::ExitCode::FatalIo;
            }
        }
    } else if (report->parsed()) {
        std::string text;
        rc = ga::run_report(cfg, log, &text);
        std::cout << text;
    }
    return static_cast<int>(rc);
}
