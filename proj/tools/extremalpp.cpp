// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: configures, executes and serializes the simulation
// experiments. Exit codes: 0 = all configured assertions passed,
// 1 = a statistical assertion failed, 2 = invalid configuration,
// 3 = I/O failure.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "extremal/experiments.hpp"

namespace {

int run_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                 int threads_override, const std::string& format,
                 std::optional<extremal::ExperimentKind> required_kind = std::nullopt) {
    extremal::ExperimentConfig cfg = extremal::parse_config_file(config_path);
    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.have_seed = true;
    }
    if (threads_override > 0) cfg.threads = threads_override;
    if (required_kind && cfg.experiment != *required_kind) {
        throw extremal::ConfigError(std::string("this subcommand requires experiment=") +
                                    extremal::to_string(*required_kind));
    }
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const extremal::ExperimentResult res = extremal::run_experiment(cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!cfg.out.empty()) {
        const auto paths = extremal::write_outputs(cfg, res, elapsed);
        std::cerr << "wrote " << paths.raw << ", " << paths.summary << ", " << paths.log << "\n";
    }
    if (format == "summary") {
        std::cout << res.summary.dump(2) << "\n";
    } else {
        std::cout << extremal::render_csv(res);
    }
    return res.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"extremalpp: point-process simulation and verification experiments"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string format = "summary";
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--threads", threads, "worker threads (results are independent of the value)");
    app.add_option("--format", format, "stdout format: csv|summary")
        ->check(CLI::IsMember({"csv", "summary"}));

    auto* sim = app.add_subcommand("simulate", "run one experiment from a config file");
    std::string sim_config;
    sim->add_option("--config", sim_config, "key=value config file")->required();

    auto* exact = app.add_subcommand("exact-kendall", "dump the exact Kendall tau pmf as CSV");
    std::uint64_t exact_n = 5;
    std::string exact_out;
    exact->add_option("--n", exact_n, "sample length")->required();
    exact->add_option("--out", exact_out, "output CSV path");

    auto* cond = app.add_subcommand("conditions", "estimate the limit conditions from a config");
    std::string cond_config;
    cond->add_option("--config", cond_config, "key=value config file")->required();

    auto* rep = app.add_subcommand("report", "re-test an existing raw CSV against a limit family");
    std::string rep_in, rep_family = "gumbel";
    double rep_alpha = 0.001;
    rep->add_option("--in", rep_in, "raw CSV produced by simulate")->required();
    rep->add_option("--against", rep_family, "limit family: gumbel|frechet:a|weibull:a");
    rep->add_option("--alpha", rep_alpha, "test level");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return run_simulate(sim_config, seed, threads, format);

        if (exact->parsed()) {
            extremal::ExperimentConfig cfg;
            cfg.experiment = extremal::ExperimentKind::exact_kendall;
            cfg.exact_n = exact_n;
            cfg.seed = 0;
            cfg.have_seed = true;
            cfg.out = exact_out;
            cfg.validate();
            const auto res = extremal::run_experiment(cfg);
            if (!exact_out.empty()) {
                extremal::write_outputs(cfg, res, 0.0);
                std::cerr << "wrote " << extremal::output_paths(cfg).raw << "\n";
            } else {
                std::cout << extremal::render_csv(res);
            }
            return 0;
        }

        if (cond->parsed()) {
            return run_simulate(cond_config, seed, threads, format,
                                extremal::ExperimentKind::conditions);
        }

        if (rep->parsed()) {
            const auto csv = extremal::read_csv_file(rep_in);
            const auto fam = extremal::detail::parse_family(rep_family);
            std::cout << extremal::report_from_csv(csv, fam, rep_alpha).dump(2) << "\n";
            return 0;
        }
    } catch (const extremal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const extremal::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
