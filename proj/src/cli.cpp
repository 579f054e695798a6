#include "caccdet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cacc {

namespace {

std::string verdict_line(const SummaryReport& s) {
    std::ostringstream os;
    if (s.detection)
        os << "v2x_flag vehicle " << s.detection->vehicle << " at "
           << format_double(s.detection->time) << " s"
           << (s.detection->delay
                   ? " (delay " + format_double(*s.detection->delay) + " s)"
                   : "");
    else
        os << "no v2x flag";
    os << "; ";
    if (s.isolation)
        os << "v2i_flag at " << format_double(s.isolation->time) << " s"
           << (s.isolation->delay
                   ? " (delay " + format_double(*s.isolation->delay) + " s)"
                   : "");
    else
        os << "no v2i flag";
    os << "; false_alarms=" << s.false_alarms << " collisions=" << s.collisions
       << " disengagements=" << s.disengagements;
    if (s.aborted) os << " [ABORTED: numeric divergence]";
    return os.str();
}

std::string summary_text(const SummaryReport& s) {
    std::ostringstream os;
    os << "detection:      ";
    if (s.detection) {
        os << "vehicle " << s.detection->vehicle << " at "
           << format_double(s.detection->time) << " s";
        if (s.detection->delay) os << ", delay " << format_double(*s.detection->delay) << " s";
    } else {
        os << "none";
    }
    os << "\nisolation:      ";
    if (s.isolation) {
        os << "at " << format_double(s.isolation->time) << " s";
        if (s.isolation->delay) os << ", delay " << format_double(*s.isolation->delay) << " s";
    } else {
        os << "none";
    }
    os << "\nfalse alarms:   " << s.false_alarms
       << "\nmin headway:    " << format_double(s.min_headway) << " m"
       << "\ncollisions:     " << s.collisions
       << "\ndisengagements: " << s.disengagements << "\n";
    return os.str();
}

} // namespace

int cmd_validate(const std::string& config_path, std::ostream& out) {
    ScenarioConfig cfg;
    try {
        cfg = load_scenario(config_path);
    } catch (const std::exception& e) {
        out << "FAIL load: " << e.what() << "\n";
        return kExitConfigError;
    }
    ValidationReport rep = validate_scenario(cfg);
    for (const auto& p : rep.passed) out << "ok   " << p << "\n";
    for (const auto& i : rep.issues)
        out << "FAIL " << i.check << ": " << i.message << "\n";
    out << (rep.ok() ? "valid" : "invalid") << ": " << cfg.name << "\n";
    return rep.ok() ? kExitOk : kExitConfigError;
}

int cmd_run(const RunRequest& req, std::ostream& out) {
    ScenarioConfig cfg;
    try {
        cfg = load_scenario(req.config_path);
        if (req.seed) cfg.seed = *req.seed;
        if (req.duration) cfg.duration = *req.duration;
        if (req.noise_sigma) cfg.noise_sigma = *req.noise_sigma;
        ValidationReport rep = validate_scenario(cfg);
        if (!rep.ok()) {
            for (const auto& i : rep.issues)
                out << "FAIL " << i.check << ": " << i.message << "\n";
            return kExitConfigError;
        }
    } catch (const std::exception& e) {
        out << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    RunResult result = run_scenario(cfg);

    namespace fs = std::filesystem;
    const fs::path dir = req.out_dir.empty() ? fs::path(".") : fs::path(req.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::exists(dir)) {
        out << "cannot create output directory " << dir.string() << "\n";
        return kExitConfigError;
    }
    write_log_csv(result.log, (dir / "log.csv").string());
    {
        std::ofstream f(dir / "summary.json");
        f << summary_to_json(result.summary);
    }
    write_plotdata(result.log, (dir / "plotdata").string());
    if (req.format == "text") out << summary_text(result.summary);
    out << verdict_line(result.summary) << "\n";
    return result.diverged ? kExitDiverged : kExitOk;
}

int cmd_report(const std::string& log_path,
               const std::optional<std::string>& out_path, std::ostream& out) {
    SimLog log;
    try {
        log = read_log_csv(log_path);
    } catch (const std::exception& e) {
        out << "log error: " << e.what() << "\n";
        return kExitConfigError;
    }
    const SummaryReport s = summarize(log);
    const std::string json = summary_to_json(s);
    if (out_path) {
        std::ofstream f(*out_path);
        f << json;
    } else {
        out << json;
    }
    return kExitOk;
}

} // namespace cacc
