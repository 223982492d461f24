/* coalign_cli.cpp: generate / solve / benchmark / selftest */

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coalign/benchmark.hpp"
#include "coalign/config.hpp"
#include "coalign/serialization.hpp"
#include "selftest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions
{
    std::string configPath;
    std::optional<std::uint64_t> seed;
    std::string outPath;
    std::string format = "json";
    std::optional<int> threads;
};

coalign::RunConfig load_config(const CommonOptions& opts)
{
    coalign::RunConfig config;
    if (!opts.configPath.empty())
        config = coalign::run_config_from_json(coalign::read_json_file(opts.configPath));
    if (opts.seed)
        config.seed = opts.seed;

    if (opts.threads) {
        config.benchmark.threads = *opts.threads;
    } else if (const char* env = std::getenv("COALIGN_THREADS")) {
        try {
            config.benchmark.threads = std::stoi(env);
        } catch (const std::exception&) {
            throw coalign::ConfigError("COALIGN_THREADS", "expected an integer");
        }
    }
    if (config.benchmark.threads < 1)
        throw coalign::ConfigError("threads", "must be at least 1");
    return config;
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-")
        std::cout << text;
    else
        coalign::write_text_file(path, text);
}

int cmd_generate(const CommonOptions& opts)
{
    const coalign::RunConfig config = load_config(opts);
    const std::uint64_t seed = config.seed.value_or(0);
    const coalign::Scene scene = coalign::generate_scene(config.benchmark.scene, seed);
    emit(opts.outPath, coalign::dump_json(coalign::scene_to_json(scene)));
    std::cerr << "seed " << seed << "\n";
    return kExitOk;
}

int cmd_solve(const CommonOptions& opts, const std::string& scenePath, std::optional<int> ego)
{
    coalign::RunConfig config = load_config(opts);
    if (ego)
        config.ego_id = *ego;
    const std::uint64_t seed = config.seed.value_or(0);
    const coalign::Scene scene = coalign::scene_from_json(coalign::read_json_file(scenePath));

    bool egoKnown = false;
    for (const auto& a : scene.agents)
        egoKnown = egoKnown || a.id == config.ego_id;
    if (!egoKnown) {
        std::cerr << "error: ego agent " << config.ego_id << " is not in " << scenePath << "\n";
        return kExitUsage;
    }

    const auto& b = config.benchmark;
    const coalign::SolveOutput out = coalign::solve_scene(
        scene, config.solve_noise_spec(), b.detector, b.cluster, b.solver, config.ego_id, seed);
    emit(opts.outPath, coalign::dump_json(coalign::solve_output_to_json(out)));
    std::cerr << "seed " << seed << ", objective " << out.result.initial_objective << " -> "
              << out.result.objective << " in " << out.result.iterations << " iterations"
              << (out.result.converged ? "" : " (not converged)") << "\n";
    return kExitOk;
}

std::string ratio_text(const std::optional<double>& r)
{
    if (!r)
        return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << *r;
    return os.str();
}

void print_summary(const coalign::BenchmarkReport& report)
{
    std::cerr << "noise(m/deg)   trans ratio   rot ratio   AP@0.7 uncorr -> corr\n";
    for (const auto& lr : report.levels) {
        const auto& r = lr.median_reduction[1];
        std::cerr << std::fixed << std::setprecision(2) << std::setw(5) << lr.noise.trans_scale
                  << "/" << std::setw(4) << lr.noise.rot_scale_deg << "    ";
        std::cerr << std::setprecision(3) << std::setw(10) << ratio_text(r.trans) << "  "
                  << std::setw(10) << ratio_text(r.rot);
        for (std::size_t t = 0; t < report.config.ap_thresholds.size(); ++t) {
            if (report.config.ap_thresholds[t] == 0.7)
                std::cerr << "   " << lr.ap[t][0] << " -> " << lr.ap[t][2];
        }
        std::cerr << "\n";
    }
    std::cerr.unsetf(std::ios::floatfield);
}

int cmd_benchmark(const CommonOptions& opts)
{
    coalign::RunConfig config = load_config(opts);
    if (!config.seed) {
        std::cerr << "error: benchmark runs need a seed (--seed or \"seed\" in the config)\n";
        return kExitUsage;
    }
    config.benchmark.seed = *config.seed;

    const coalign::BenchmarkReport report = coalign::run_benchmark(config.benchmark);
    if (opts.format == "csv")
        emit(opts.outPath, coalign::report_histograms_csv(report));
    else
        emit(opts.outPath, coalign::dump_json(coalign::report_to_json(report)));
    print_summary(report);

    if (!report.clean()) {
        std::cerr << report.skipped.size() << " scene(s) skipped, first: "
                  << report.skipped.front().reason << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

} /* namespace */

int main(int argc, char** argv)
{
    CLI::App app{"Agent-object pose graph correction for multi-agent detection"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto addCommon = [&](CLI::App* sub) {
        sub->add_option("--config", opts.configPath, "Flat JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seed, "Random seed");
        sub->add_option("--out", opts.outPath, "Output path (stdout if omitted)");
        sub->add_option("--threads", opts.threads, "Worker threads (overrides COALIGN_THREADS)");
    };

    auto* generate = app.add_subcommand("generate", "Generate a synthetic scene");
    addCommon(generate);

    std::string scenePath;
    std::optional<int> ego;
    auto* solve = app.add_subcommand("solve", "Simulate messages for a scene and correct poses");
    addCommon(solve);
    solve->add_option("--scene", scenePath, "Scene JSON file")->required()->check(CLI::ExistingFile);
    solve->add_option("--ego", ego, "Ego agent id");

    auto* benchmark = app.add_subcommand("benchmark", "Run the noise-grid benchmark");
    addCommon(benchmark);
    benchmark->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* selftest = app.add_subcommand("selftest", "Run the oracle-based property checks");
    addCommon(selftest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*generate)
            return cmd_generate(opts);
        if (*solve)
            return cmd_solve(opts, scenePath, ego);
        if (*benchmark)
            return cmd_benchmark(opts);
        if (*selftest)
            return coalign::tools::run_selftest(std::cout, opts.seed.value_or(1)) ? kExitOk
                                                                                  : kExitRuntime;
    } catch (const coalign::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const coalign::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const coalign::InfeasiblePacking& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
