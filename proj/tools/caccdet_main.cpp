#include "caccdet/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Ring-road CACC platoon simulator with V2X attack injection "
                 "and observer-based detection/isolation"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", log_path, report_out, format = "json";
    std::uint64_t seed = 0;
    double duration = 0.0, noise_sigma = -1.0;

    auto* validate = app.add_subcommand("validate", "check a scenario config");
    validate->add_option("--config", config_path, "scenario JSON file")->required();

    auto* run = app.add_subcommand("run", "run a scenario");
    run->add_option("--config", config_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory (log.csv, summary.json, plotdata/)");
    auto* seed_opt = run->add_option("--seed", seed, "override RNG seed");
    auto* dur_opt = run->add_option("--duration", duration, "override horizon [s]");
    auto* noise_opt = run->add_option("--noise-sigma", noise_sigma,
                                      "override process noise sigma [m/s^2]");
    run->add_option("--format", format, "verdict format: json or text")
        ->check(CLI::IsMember({"json", "text"}));

    auto* report = app.add_subcommand("report", "recompute summary.json from a log");
    report->add_option("--log", log_path, "log.csv produced by run")->required();
    report->add_option("--out", report_out, "write summary here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return cacc::cmd_validate(config_path, std::cout);
    if (run->parsed()) {
        cacc::RunRequest req;
        req.config_path = config_path;
        req.out_dir = out_dir;
        req.format = format;
        if (seed_opt->count()) req.seed = seed;
        if (dur_opt->count()) req.duration = duration;
        if (noise_opt->count()) req.noise_sigma = noise_sigma;
        return cacc::cmd_run(req, std::cout);
    }
    if (report->parsed()) {
        std::optional<std::string> out;
        if (!report_out.empty()) out = report_out;
        return cacc::cmd_report(log_path, out, std::cout);
    }
    return cacc::kExitConfigError;
}
