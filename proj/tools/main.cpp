// Command-line front end: runs one check (or all of them with `report`),
// writes <check>.csv files and summary.json into the output directory.

#include "hyperbuild/errors.hpp"
#include "hyperbuild/experiments.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace hyperbuild;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot write " + path.string());
    out << text;
}

nlohmann::ordered_json error_record(const std::string& command, std::string_view kind, const std::string& message) {
    return {{"command", command}, {"error", kind}, {"message", message}};
}

int run(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
        std::optional<std::string> out_dir, fs::path& dir) {
    RunConfig c = parse_config(read_file(config_path));
    if (seed) c.seed = *seed;
    if (out_dir) c.output_dir = *out_dir;
    dir = c.output_dir;
    fs::create_directories(dir);
    fs::remove(dir / "error.json");

    std::vector<std::string> checks;
    if (command == "report")
        checks = check_names();
    else
        checks = {command};

    auto summary = nlohmann::ordered_json::object();
    summary["version"] = kVersion;
    summary["config"] = to_json(c);
    summary["config"].erase("output_dir");  // keeps the summary independent of where it is written
    summary["checks"] = nlohmann::ordered_json::array();
    bool hard_ok = true;
    for (const auto& name : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto report = run_check(name, c);
        write_file(dir / (name + ".csv"), to_csv(report, c));
        summary["checks"].push_back(summary_entry(report));
        if (report.status == Status::Fail) hard_ok = false;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        fmt::print("{:<11} {}  ({:.1f} s)\n", name, to_string(report.status), secs);
        for (const auto& note : report.notes) fmt::print("  {}\n", note);
    }
    if (command == "report") summary["hard_checks_pass"] = hard_ok;
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    return hard_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks on boundary models of right-angled Fuchsian buildings"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    std::vector<std::pair<std::string, std::string>> commands = {
        {"dim", "constants table Q(p,q), a(p)"},
        {"polygon", "right-angled polygon invariants"},
        {"apartment", "wall statistics and crossing rate"},
        {"identity", "integer identity for the bad-wall count"},
        {"lemma4", "fiber-measure ratio band"},
        {"lemma5", "dyadic inequality on random step functions"},
        {"regularity", "Ahlfors profile and slope fit"},
        {"poincare", "fiber, pointwise and ball Poincare checks"},
        {"modulus", "discrete modulus oracle battery"},
        {"loewner", "Loewner function estimates at two resolutions"},
        {"report", "every check plus a pass/fail summary"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "flat JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--out", out_dir, "overrides the config output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) std::cerr << error_record("", to_string(ErrorKind::InvalidInput), e.what()).dump() << "\n";
        return code;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    fs::path dir = out_dir.value_or(RunConfig{}.output_dir);
    std::string kind = "internal";
    std::string message;
    try {
        return run(command, config_path, seed, out_dir, dir);
    } catch (const Error& e) {
        kind = to_string(e.kind());
        message = e.what();
    } catch (const std::exception& e) {
        message = e.what();
    }
    std::cerr << "error (" << kind << "): " << message << "\n";
    try {
        fs::create_directories(dir);
        write_file(dir / "error.json", error_record(command, kind, message).dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "could not write error record: " << e.what() << "\n";
    }
    return 2;
}
