// Scenario front end: run experiment descriptions (files or builtins),
// inspect the builtin catalog. Exit codes: 0 all checks passed, 1 at least
// one check failed, 2 malformed input or usage error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qr/errors.hpp"
#include "qr/scenario.hpp"

namespace {

int run_command(const std::string& target, const qr::RunOptions& opt) {
    qr::Scenario sc;
    if (qr::is_builtin(target)) {
        sc = qr::builtin_scenario(target);
    } else {
        std::ifstream in(target);
        if (!in) {
            std::cerr << "error: cannot open '" << target
                      << "' and it is not a builtin name\n";
            return 2;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << "error: " << target << " is not valid JSON: " << e.what() << "\n";
            return 2;
        }
        sc = qr::parse_scenario(j, target);
    }

    const qr::RunReport report = qr::run_scenario(sc, opt);
    for (const qr::CheckResult& r : report.checks)
        std::printf("[%s] %-24s deviation=%-12.5g %s\n", r.passed ? "PASS" : "FAIL",
                    r.id.c_str(), r.deviation, r.summary.c_str());
    std::printf("%s: %s (%zu checks, report in %s/%s/report.json)\n", sc.name.c_str(),
                report.all_passed ? "all checks passed" : "CHECKS FAILED",
                report.checks.size(), opt.out_dir.c_str(), sc.name.c_str());
    return report.all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quaternion-valued Riccati equations: integration, "
                 "classification, and identity checking over scenario files"};
    app.require_subcommand(1);

    std::string target;
    double horizon = 0.0, rtol = 0.0, atol = 0.0;
    std::string out_dir;
    CLI::App* run = app.add_subcommand("run", "Run a scenario file or builtin name");
    run->add_option("scenario", target, "Scenario file path or builtin name")->required();
    CLI::Option* horizon_opt = run->add_option("--horizon", horizon, "Override the horizon");
    CLI::Option* rtol_opt = run->add_option("--rtol", rtol, "Override the relative tolerance");
    CLI::Option* atol_opt = run->add_option("--atol", atol, "Override the absolute tolerance");
    CLI::Option* out_opt =
        run->add_option("--out", out_dir, "Output root (default: $QR_OUT_DIR or ./qr-out)");

    CLI::App* list = app.add_subcommand("list-builtins", "List the builtin scenarios");

    std::string show_name;
    CLI::App* show = app.add_subcommand("show", "Print a builtin scenario's configuration");
    show->add_option("name", show_name, "Builtin name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (list->parsed()) {
            for (const std::string& name : qr::builtin_names())
                std::printf("%-24s %s\n", name.c_str(),
                            qr::builtin_description(name).c_str());
            return 0;
        }
        if (show->parsed()) {
            if (!qr::is_builtin(show_name)) {
                std::cerr << "error: unknown builtin '" << show_name << "'\n";
                return 2;
            }
            std::cout << qr::serialize(qr::builtin_scenario(show_name)).dump(2) << "\n";
            return 0;
        }
        qr::RunOptions opt;
        if (horizon_opt->count() > 0) opt.horizon = horizon;
        if (rtol_opt->count() > 0) opt.rtol = rtol;
        if (atol_opt->count() > 0) opt.atol = atol;
        if (out_opt->count() > 0) {
            opt.out_dir = out_dir;
        } else if (const char* env = std::getenv("QR_OUT_DIR"); env && *env) {
            opt.out_dir = env;
        }
        return run_command(target, opt);
    } catch (const qr::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
