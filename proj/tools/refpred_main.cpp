#include <CLI11.hpp>

#include "refpred/cli.hpp"
#include "refpred/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Instance-level LLM success prediction from reference evaluations"};
    app.set_version_flag("--version", std::string(refpred::kToolVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    int jobs = 0;
    std::size_t n_ref = 0;
    bool seed_set = false, jobs_set = false, n_ref_set = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Run configuration JSON")->required();
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--seed", seed, "Override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--jobs", jobs, "Worker thread bound (0 = hardware)")
            ->each([&](const std::string&) { jobs_set = true; });
        cmd->add_option("--n-ref", n_ref, "Override the reference-set size")
            ->each([&](const std::string&) { n_ref_set = true; });
    };

    CLI::App* split = app.add_subcommand("split", "Write a train/val/test split plan");
    CLI::App* select = app.add_subcommand("select", "Write reference sets per selector");
    CLI::App* run = app.add_subcommand("run", "Run the full combination grid and report");
    CLI::App* sweep = app.add_subcommand("sweep", "Sweep the reference-set size");
    CLI::App* synthetic = app.add_subcommand("synthetic", "Write a synthetic world");
    for (CLI::App* cmd : {split, select, run, sweep, synthetic}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    refpred::cli::Overrides ov;
    if (seed_set) ov.seed = seed;
    if (jobs_set) ov.jobs = jobs;
    if (n_ref_set) ov.n_ref = n_ref;

    if (split->parsed()) return refpred::cli::cmd_split(config_path, out_dir, ov);
    if (select->parsed()) return refpred::cli::cmd_select(config_path, out_dir, ov);
    if (run->parsed()) return refpred::cli::cmd_run(config_path, out_dir, ov);
    if (sweep->parsed()) return refpred::cli::cmd_sweep(config_path, out_dir, ov);
    if (synthetic->parsed()) return refpred::cli::cmd_synthetic(config_path, out_dir, ov);
    return 1;
}
