#include "drkm/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <thread>

#include "json.hpp"

#include "drkm/csv.hpp"
#include "drkm/error.hpp"
#include "drkm/experiment.hpp"
#include "drkm/svg.hpp"

namespace drkm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig effective(const CommandOptions& opts) {
    ExperimentConfig cfg = opts.config;
    if (opts.component_mask) {
        parse_component_mask(*opts.component_mask);
        cfg.denoise.component_mask = *opts.component_mask;
    }
    if (opts.baseline) cfg.denoise.baseline = true;
    cfg.validate();
    return cfg;
}

fs::path model_path(const CommandOptions& opts) {
    return opts.model.empty() ? opts.out / "model.json" : opts.model;
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : ""; }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CsvTable train_report_table(const TrainReport& rep, const std::vector<std::string>& meta) {
    CsvTable t;
    t.meta = meta;
    t.meta.push_back(std::string("converged=") + (rep.converged ? "true" : "false"));
    t.header = {"round", "mu", "tau", "steps", "stop", "grad_norm", "objective",
                "residual", "penalty", "start_fingerprint", "end_fingerprint"};
    for (const auto& r : rep.rounds) {
        t.rows.push_back({std::to_string(r.round), fmt(r.mu), fmt(r.tau), std::to_string(r.steps),
                          std::string(to_string(r.stop)), fmt(r.grad_norm), fmt(r.objective), fmt(r.residual),
                          fmt(r.penalty), hex64(r.start_fingerprint), hex64(r.end_fingerprint)});
    }
    return t;
}

CsvTable selection_table(const std::vector<SelectionRow>& rows, double chosen, const std::vector<std::string>& meta) {
    CsvTable t;
    t.meta = meta;
    t.header = {"sigma2", "validation_error", "selected", "status"};
    for (const auto& r : rows) {
        t.rows.push_back({fmt(r.sigma2), fmt(r.validation_error), r.sigma2 == chosen ? "1" : "0", r.status});
    }
    return t;
}

void write_points(const fs::path& path, const Matrix& x, const std::vector<std::string>& meta) {
    save_points_csv(path, x, meta);
}

void require_point_cloud(const ExperimentConfig& cfg, const char* command) {
    if (cfg.dataset.is_factor_toy()) {
        throw ConfigError(std::string(command) + " needs a point-cloud dataset, not factor_toy");
    }
}

ExperimentConfig cell_config(const ExperimentConfig& base, double gamma, std::size_t n_train, std::size_t n_layers,
                             std::optional<std::uint64_t> init_seed) {
    ExperimentConfig c = base;
    c.sweep = {};
    if (gamma > 0.0) {
        for (auto& l : c.layers) {
            l.eta = gamma;
            l.lambda = 1.0;
        }
    }
    c.dataset.n_train = n_train;
    c.layers.resize(n_layers);
    if (init_seed) c.init_seed = init_seed;
    if (c.metrics.latent_layer > c.layers.size()) c.metrics.latent_layer = 0;
    c.validate();
    return c;
}

struct CellResult {
    std::vector<std::pair<std::string, double>> values;
    std::string status = "ok";
};

CellResult run_cell(const ExperimentConfig& cfg) {
    CellResult r;
    try {
        if (cfg.dataset.is_factor_toy()) {
            const auto m = run_metrics(cfg);
            r.values = {{"mig", m.report.mig}, {"sap", m.report.sap}, {"irs", m.report.irs}};
        } else {
            const PointSplits splits = make_point_splits(cfg);
            const auto mask = resolve_mask(cfg);
            const DrkmSelection sel = select_and_train(cfg, splits, mask);
            const TrainedModel model(sel.result.state);
            const DenoiseRun run = denoise_training_set(cfg, splits, model, mask);
            r.values = {{"drkm_error", run.drkm_error}, {"noisy_error", run.noisy_error}};
            if (cfg.denoise.baseline) {
                r.values.emplace_back("kpca_error", run.kpca_error);
                r.values.emplace_back("ratio", run.kpca_error / run.drkm_error);
            }
        }
    } catch (const std::exception& e) {
        r.values.clear();
        r.status = e.what();
    }
    return r;
}

}  // namespace

std::vector<std::string> run_meta(const ExperimentConfig& cfg, const std::string& command) {
    return {"config_hash=" + config_hash(cfg), "seed=" + std::to_string(cfg.seed), "command=" + command};
}

void cmd_generate(const CommandOptions& opts) {
    const ExperimentConfig cfg = effective(opts);
    const auto meta = run_meta(cfg, "generate");
    const SeedPlan seeds = SeedPlan::from(cfg.seed);
    json files = json::object();
    if (cfg.dataset.is_factor_toy()) {
        const FactorDataset train = make_factor_train(cfg), eval = make_factor_eval(cfg);
        save_factor_csv(opts.out / "train_factors.csv", train, meta);
        save_factor_csv(opts.out / "eval_factors.csv", eval, meta);
        files["train_factors.csv"] = train.size();
        files["eval_factors.csv"] = eval.size();
    } else {
        const PointSplits p = make_point_splits(cfg);
        write_points(opts.out / "train_clean.csv", p.train_clean, meta);
        write_points(opts.out / "train_noisy.csv", p.train_noisy, meta);
        write_points(opts.out / "validation_clean.csv", p.validation_clean, meta);
        write_points(opts.out / "validation_noisy.csv", p.validation_noisy, meta);
        files["train_clean.csv"] = p.train_clean.rows();
        files["train_noisy.csv"] = p.train_noisy.rows();
        files["validation_clean.csv"] = p.validation_clean.rows();
        files["validation_noisy.csv"] = p.validation_noisy.rows();
    }
    const json manifest{{"config_hash", config_hash(cfg)},
                        {"seed", cfg.seed},
                        {"seeds",
                         {{"train", seeds.train},
                          {"train_noise", seeds.train_noise},
                          {"validation", seeds.validation},
                          {"validation_noise", seeds.validation_noise}}},
                        {"files", files},
                        {"config", json::parse(canonical_json(cfg))}};
    write_text_file(opts.out / "manifest.json", manifest.dump(2) + "\n");
}

void cmd_train(const CommandOptions& opts) {
    const ExperimentConfig cfg = effective(opts);
    const auto meta = run_meta(cfg, "train");
    if (cfg.dataset.is_factor_toy()) {
        const TrainResult r = fit_model(cfg, make_factor_train(cfg).points);
        save_model(model_path(opts), r.state, meta);
        save_csv(opts.out / "train_report.csv", train_report_table(r.report, meta));
        return;
    }
    const PointSplits splits = make_point_splits(cfg);
    const DrkmSelection sel = select_and_train(cfg, splits, resolve_mask(cfg));
    save_model(model_path(opts), sel.result.state, meta);
    save_csv(opts.out / "train_report.csv", train_report_table(sel.result.report, meta));
    if (!sel.rows.empty()) save_csv(opts.out / "bandwidth_selection.csv", selection_table(sel.rows, sel.sigma2, meta));
}

void cmd_denoise(const CommandOptions& opts) {
    const ExperimentConfig cfg = effective(opts);
    require_point_cloud(cfg, "denoise");
    const auto meta = run_meta(cfg, "denoise");
    const fs::path mp = model_path(opts);
    if (!fs::exists(mp)) throw IoError("model file " + mp.string() + " not found; run train first");
    const TrainedModel model(load_model(mp));
    const PointSplits splits = make_point_splits(cfg);
    if (!(model.state().data() == splits.train_noisy)) {
        throw ConfigError("model " + mp.string() + " was trained on different data than this config generates");
    }
    const auto mask = resolve_mask(cfg);
    const DenoiseRun run = denoise_training_set(cfg, splits, model, mask);

    write_points(opts.out / "denoised.csv", run.drkm.points, meta);
    CsvTable summary;
    summary.meta = meta;
    summary.header = {"method", "components", "sigma2", "points", "error", "noisy_error",
                      "collapsed", "not_converged", "ratio"};
    const std::string ratio = cfg.denoise.baseline ? fmt(run.kpca_error / run.drkm_error) : "";
    summary.rows.push_back({"drkm", format_component_mask(mask), fmt(run.drkm_sigma2),
                            std::to_string(splits.train_noisy.rows()), fmt(run.drkm_error), fmt(run.noisy_error),
                            std::to_string(run.drkm.collapsed), std::to_string(run.drkm.not_converged), ratio});
    std::vector<ScatterSeries> series{{"clean", "#bbbbbb", splits.train_clean, 1.2, 0.8},
                                      {"noisy", "#7f7f7f", splits.train_noisy, 1.2, 0.5},
                                      {"drkm", "#1f77b4", run.drkm.points, 1.6, 0.9}};
    if (cfg.denoise.baseline) {
        summary.rows.push_back({"kpca", std::to_string(cfg.denoise.kpca_components), fmt(run.kpca_sigma2),
                                std::to_string(splits.train_noisy.rows()), fmt(run.kpca_error), fmt(run.noisy_error),
                                std::to_string(run.kpca.collapsed), std::to_string(run.kpca.not_converged), ""});
        write_points(opts.out / "kpca_denoised.csv", run.kpca.points, meta);
        save_csv(opts.out / "kpca_selection.csv", selection_table(run.kpca_rows, run.kpca_sigma2, meta));
        series.push_back({"kpca", "#ff7f0e", run.kpca.points, 1.6, 0.9});
    }
    save_csv(opts.out / "denoise_summary.csv", summary);
    write_text_file(opts.out / "denoise.svg",
                    scatter_svg(series, cfg.dataset.kind + " sigma_n=" + fmt(cfg.dataset.noise) + " mask " +
                                            format_component_mask(mask)));
}

void cmd_metrics(const CommandOptions& opts) {
    const ExperimentConfig cfg = effective(opts);
    const auto meta = run_meta(cfg, "metrics");
    const MetricsOutcome m = run_metrics(cfg);
    CsvTable t = m.report.to_table();
    t.meta.insert(t.meta.begin(), meta.begin(), meta.end());
    t.meta.push_back("latent_dim=" + std::to_string(m.latent_dim));
    save_csv(opts.out / "metrics.csv", t);
    write_text_file(opts.out / "metrics.txt", m.report.to_text());
}

std::size_t worker_count(std::size_t cells) {
    std::size_t n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("DRKM_THREADS")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(n, cells));
}

void cmd_sweep(const CommandOptions& opts) {
    const ExperimentConfig base = effective(opts);
    const auto& sw = base.sweep;
    const std::vector<double> gammas = sw.gamma.empty() ? std::vector<double>{0.0} : sw.gamma;
    const std::vector<std::size_t> ns = sw.n_train.empty() ? std::vector<std::size_t>{base.dataset.n_train} : sw.n_train;
    const std::vector<std::size_t> layers = sw.n_layers.empty() ? std::vector<std::size_t>{base.layers.size()} : sw.n_layers;
    std::vector<std::optional<std::uint64_t>> seeds;
    for (auto s : sw.seeds) seeds.emplace_back(s);
    if (seeds.empty()) seeds.emplace_back(std::nullopt);

    struct Cell {
        double gamma;
        std::size_t n_train, n_layers;
        std::optional<std::uint64_t> seed;
    };
    std::vector<Cell> cells;
    for (double g : gammas)
        for (auto n : ns)
            for (auto l : layers)
                for (auto s : seeds) cells.push_back({g, n, l, s});

    std::vector<CellResult> results(cells.size());
    std::vector<ExperimentConfig> configs;
    for (const auto& c : cells) configs.push_back(cell_config(base, c.gamma, c.n_train, c.n_layers, c.seed));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) results[i] = run_cell(configs[i]);
    };
    std::vector<std::thread> pool;
    const std::size_t workers = worker_count(cells.size());
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Deterministic post-pass in cell order.
    const auto meta = run_meta(base, "sweep");
    auto gamma_text = [](double g) { return g > 0.0 ? format_double(g) : std::string(""); };
    auto seed_text = [&](const Cell& c) {
        return c.seed ? std::to_string(*c.seed) : std::string("");
    };
    CsvTable longf;
    longf.meta = meta;
    longf.header = {"cell", "gamma", "n_train", "n_layers", "seed", "metric", "value", "status"};
    struct Bucket {
        std::map<std::string, std::vector<double>> values;
        std::size_t failed = 0;
    };
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Bucket> agg;
    std::vector<std::string> metric_order;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto& r = results[i];
        std::vector<std::string> key{std::to_string(i), gamma_text(c.gamma), std::to_string(c.n_train),
                                     std::to_string(c.n_layers), seed_text(c)};
        CsvTable cell;
        cell.meta = run_meta(configs[i], "sweep-cell");
        cell.header = {"metric", "value", "status"};
        auto& bucket = agg[{std::find(gammas.begin(), gammas.end(), c.gamma) - gammas.begin(), c.n_train, c.n_layers}];
        if (r.status != "ok") {
            auto row = key;
            row.insert(row.end(), {"", "", r.status});
            longf.rows.push_back(row);
            cell.rows.push_back({"", "", r.status});
            ++bucket.failed;
        }
        for (const auto& [m, v] : r.values) {
            auto row = key;
            row.insert(row.end(), {m, fmt(v), "ok"});
            longf.rows.push_back(row);
            cell.rows.push_back({m, fmt(v), "ok"});
            bucket.values[m].push_back(v);
            if (std::find(metric_order.begin(), metric_order.end(), m) == metric_order.end()) metric_order.push_back(m);
        }
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu.csv", i);
        save_csv(opts.out / "cells" / name, cell);
    }
    save_csv(opts.out / "sweep.csv", longf);

    CsvTable summary;
    summary.meta = meta;
    summary.header = {"gamma", "n_train", "n_layers", "metric", "mean", "std", "count", "failed"};
    for (const auto& [k, bucket] : agg) {
        const auto& [gi, n, l] = k;
        const std::size_t failed = bucket.failed;
        for (const auto& m : metric_order) {
            const auto it = bucket.values.find(m);
            const std::vector<double> v = it == bucket.values.end() ? std::vector<double>{} : it->second;
            double mean = 0.0, var = 0.0;
            for (double x : v) mean += x;
            if (!v.empty()) mean /= v.size();
            for (double x : v) var += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
            summary.rows.push_back({gamma_text(gammas[gi]), std::to_string(n), std::to_string(l), m,
                                    v.empty() ? "" : fmt(mean), v.empty() ? "" : fmt(sd), std::to_string(v.size()),
                                    std::to_string(failed)});
        }
        if (metric_order.empty()) {
            summary.rows.push_back({gamma_text(gammas[gi]), std::to_string(n), std::to_string(l), "", "", "", "0",
                                    std::to_string(failed)});
        }
    }
    save_csv(opts.out / "sweep_summary.csv", summary);
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const DivergenceError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 4;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
        dynamic_cast<const InfeasibleConstraint*>(&e)) {
        return 2;
    }
    return 1;
}

}  // namespace drkm
