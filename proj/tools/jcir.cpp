// jcir: simulate, estimate, validate and benchmark from the command line.
// Exit codes: 0 success, 1 failed check or solver failure, 2 usage or configuration error.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cbi/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

int report_error(const std::exception& e) {
    std::cerr << "jcir: " << e.what() << '\n';
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jump-CIR jump-density estimation toolkit"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string series;
    bool quick = false;
    std::string fault = "none";
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    auto* simulate = app.add_subcommand("simulate", "simulate an observation series");
    simulate->add_option("--config", config, "experiment config file")->required();
    simulate->add_option("--out", out, "output directory");

    auto* estimate = app.add_subcommand("estimate", "estimate the jump density from a series");
    estimate->add_option("--series", series, "series CSV")->required();
    estimate->add_option("--config", config, "experiment config file")->required();
    estimate->add_option("--out", out, "output directory");

    auto* validate = app.add_subcommand("validate", "run the built-in invariant checks");
    validate->add_flag("--quick", quick, "smaller Monte-Carlo sizes");
    validate->add_option("--inject-fault", fault, "none, flow or w-domain (harness self-test)")
        ->check(CLI::IsMember({"none", "flow", "w-domain"}));

    auto* benchmark = app.add_subcommand("benchmark", "replicated consistency and risk experiment");
    benchmark->add_option("--config", config, "experiment config file")->required();
    benchmark->add_option("--out", out, "output directory");
    benchmark->add_option("--workers", workers, "parallel replicate workers")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate) {
            const auto res = cbi::cmd_simulate(config, out);
            std::cout << res.series_path.string() << '\n';
            return kOk;
        }
        if (*estimate) {
            try {
                std::cout << cbi::cmd_estimate(series, config, out).string() << '\n';
            } catch (const cbi::ConvergenceError& e) {
                std::cerr << "jcir: solver failure: " << e.what() << '\n';
                return kFailure;
            }
            return kOk;
        }
        if (*validate) {
            cbi::ValidateOptions opts;
            opts.quick = quick;
            opts.fault = fault == "flow"       ? cbi::Fault::perturbed_flow
                         : fault == "w-domain" ? cbi::Fault::w_domain
                                               : cbi::Fault::none;
            const auto checks = cbi::cmd_validate(opts);
            bool all = true;
            for (const auto& c : checks) {
                std::printf("%-28s %s  %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.detail.c_str());
                all = all && c.pass;
            }
            return all ? kOk : kFailure;
        }
        if (*benchmark) {
            const auto files = cbi::cmd_benchmark(config, out, workers);
            std::cout << files.rows.string() << '\n' << files.summary.string() << '\n';
            return files.all_rows_ok ? kOk : kFailure;
        }
    } catch (const cbi::ConfigError& e) {
        return report_error(e);
    } catch (const cbi::GridMismatchError& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        std::cerr << "jcir: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
