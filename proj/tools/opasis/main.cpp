#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace opasis::cli;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> output_dir;
    std::vector<double> eta;
    std::optional<std::size_t> n_samples;
    std::vector<double> y0;
    std::vector<double> alpha;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_alpha) {
    cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--workers", o.workers, "sampling threads");
    cmd->add_option("--output-dir", o.output_dir, "output directory");
    cmd->add_option("--eta", o.eta, "proposal amplification factors (replaces eta_list)");
    cmd->add_option("--n-samples", o.n_samples, "paths per campaign");
    cmd->add_option("--y0", o.y0, "load-shed thresholds in MW (replaces y0_list)");
    if (with_alpha) cmd->add_option("--alpha", o.alpha, "VaR/CVaR levels (replaces alpha_list)");
}

ExperimentConfig configured(const Overrides& o) {
    ExperimentConfig cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (!o.eta.empty()) cfg.eta_list = o.eta;
    if (o.n_samples) cfg.n_samples = *o.n_samples;
    if (!o.y0.empty()) cfg.y0_list = o.y0;
    if (!o.alpha.empty()) cfg.alpha_list = o.alpha;
    validate(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"opasis: cascading-outage Monte Carlo and sequential importance sampling"};
    app.require_subcommand(1);

    Overrides o;
    auto* run = app.add_subcommand("run", "sample every (eta, replicate) campaign and write estimates");
    add_common(run, o, false);
    auto* conv = app.add_subcommand("convergence", "replicate-variance curves over sample-size prefixes");
    add_common(conv, o, false);
    auto* enumr = app.add_subcommand("enumerate", "exact path enumeration and proposition report");
    add_common(enumr, o, false);
    auto* analyze = app.add_subcommand("analyze", "recompute estimates from stored samples");
    add_common(analyze, o, true);

    std::string case_path;
    std::string dest;
    double factor = 1.5;
    double floor_mw = 20.0;
    auto* derive = app.add_subcommand("derive-limits", "write a JSON case with flow limits from base-case flows");
    derive->add_option("--case", case_path, "input case (.json or MATPOWER .m)")->required()->check(CLI::ExistingFile);
    derive->add_option("--factor", factor, "limit = factor * |base flow|")->capture_default_str();
    derive->add_option("--floor", floor_mw, "minimum limit in MW")->capture_default_str();
    derive->add_option("--out", dest, "output JSON case")->required();

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify", "check output files against the manifest hashes");
    verify->add_option("--output-dir", verify_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (derive->parsed()) return cmd_derive_limits(case_path, factor, floor_mw, dest, std::cerr);
        if (verify->parsed()) return cmd_verify(verify_dir, std::cerr);

        ExperimentConfig cfg = configured(o);
        fs::path out = resolve_output_dir(cfg, o.config);
        if (run->parsed()) return cmd_run(cfg, out, std::cerr);
        if (conv->parsed()) return cmd_convergence(cfg, out, std::cerr);
        if (enumr->parsed()) return cmd_enumerate(cfg, out, std::cerr);
        if (analyze->parsed()) return cmd_analyze(cfg, out, std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const opasis::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
