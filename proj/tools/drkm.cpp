#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "drkm/commands.hpp"
#include "drkm/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deep restricted kernel machine experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string model;
    std::string mask;
    bool baseline = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--out", out, "output directory");
    };
    CLI::App* gen = app.add_subcommand("generate", "write the datasets and a manifest");
    CLI::App* trn = app.add_subcommand("train", "select the bandwidth and train a model");
    CLI::App* den = app.add_subcommand("denoise", "denoise the training points with a trained model");
    CLI::App* met = app.add_subcommand("metrics", "disentanglement metrics on the factor dataset");
    CLI::App* swp = app.add_subcommand("sweep", "run the configured value grids");
    for (CLI::App* sub : {gen, trn, den, met, swp}) add_common(sub);
    for (CLI::App* sub : {trn, den}) sub->add_option("--model", model, "model file (default <out>/model.json)");
    for (CLI::App* sub : {den, swp}) {
        sub->add_option("--component-mask", mask, "components kept, e.g. 1:1,1:2,2:1");
        sub->add_flag("--baseline", baseline, "also run the kernel PCA baseline and report the ratio");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        drkm::CommandOptions opts;
        if (!config_path.empty()) opts.config = drkm::load_config(config_path);
        for (CLI::App* sub : {gen, trn, den, met, swp}) {
            if (sub->count("--seed") > 0) opts.config.seed = seed;
        }
        opts.out = out;
        opts.model = model;
        if (den->count("--component-mask") > 0 || swp->count("--component-mask") > 0) opts.component_mask = mask;
        opts.baseline = baseline;
        if (*gen) drkm::cmd_generate(opts);
        if (*trn) drkm::cmd_train(opts);
        if (*den) drkm::cmd_denoise(opts);
        if (*met) drkm::cmd_metrics(opts);
        if (*swp) drkm::cmd_sweep(opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "drkm: %s\n", e.what());
        return drkm::exit_code_for(e);
    }
    return 0;
}
