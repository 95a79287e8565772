#include "drkm/experiment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "drkm/csv.hpp"
#include "drkm/error.hpp"
#include "drkm/linalg.hpp"
#include "drkm/random.hpp"

namespace drkm {

using nlohmann::json;

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

json matrix_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
    return Matrix(rows, cols, j.at("values").get<std::vector<double>>());
}

}  // namespace

SeedPlan SeedPlan::from(std::uint64_t seed) {
    return {derive(seed, 1), derive(seed, 2), derive(seed, 3), derive(seed, 4),
            derive(seed, 5), derive(seed, 6), derive(seed, 7)};
}

ShapeSpec shape_spec(const DatasetConfig& d, std::size_t n_points, std::uint64_t seed) {
    ShapeSpec s;
    s.n_points = n_points;
    s.seed = seed;
    if (d.kind == "composite_a") {
        s.kind = ShapeKind::Composite;
        s.parts = composite_square_spiral();
    } else if (d.kind == "composite_b") {
        s.kind = ShapeKind::Composite;
        s.parts = composite_two_squares_spiral_ring();
    } else if (d.is_factor_toy()) {
        throw ConfigError("dataset kind factor_toy is not a point cloud");
    } else {
        s.kind = shape_kind_from_string(d.kind);
    }
    return s;
}

PointSplits make_point_splits(const ExperimentConfig& cfg) {
    const auto seeds = SeedPlan::from(cfg.seed);
    const auto& d = cfg.dataset;
    PointSplits p;
    p.train_clean = generate_shape(shape_spec(d, d.n_train, seeds.train));
    p.train_noisy = add_noise(p.train_clean, d.noise, seeds.train_noise);
    p.validation_clean = generate_shape(shape_spec(d, d.n_validation, seeds.validation));
    p.validation_noisy = add_noise(p.validation_clean, d.noise, seeds.validation_noise);
    return p;
}

FactorDataset make_factor_train(const ExperimentConfig& cfg) {
    if (!cfg.dataset.is_factor_toy()) throw ConfigError("the metrics need dataset.kind = factor_toy");
    const auto seeds = SeedPlan::from(cfg.seed);
    auto ds = generate_factor_toy(cfg.dataset.cardinalities, cfg.dataset.embedding_dim, seeds.train, cfg.dataset.n_train);
    if (cfg.dataset.noise > 0.0) ds.points = add_noise(ds.points, cfg.dataset.noise, seeds.train_noise);
    return ds;
}

FactorDataset make_factor_eval(const ExperimentConfig& cfg) {
    FactorDataset all = make_factor_train(cfg);
    const std::size_t n = all.size();
    if (n <= cfg.metrics.n_eval) return all;
    // Uniform subset without replacement, kept in dataset order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(SeedPlan::from(cfg.seed).eval, 0x4556);
    for (std::size_t i = 0; i < cfg.metrics.n_eval; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(cfg.metrics.n_eval);
    std::sort(idx.begin(), idx.end());
    FactorDataset sub;
    sub.factors = all.factors;
    sub.points = Matrix(idx.size(), all.points.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy(all.points.row(idx[r]).begin(), all.points.row(idx[r]).end(), sub.points.row(r).begin());
        sub.values.push_back(all.values[idx[r]]);
    }
    return sub;
}

double median_sq_distance(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) throw InvalidArgument("median heuristic needs at least two points");
    std::vector<double> d;
    d.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < points.cols(); ++c) {
                const double t = points(i, c) - points(j, c);
                s += t * t;
            }
            d.push_back(s);
        }
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    double m = *mid;
    if (d.size() % 2 == 0) m = 0.5 * (m + *std::max_element(d.begin(), mid));
    if (!(m > 0.0)) throw InvalidArgument("median heuristic: all points coincide");
    return m;
}

ModelConfig resolve_model(const ExperimentConfig& cfg, const Matrix& x, std::optional<double> layer1_sigma2) {
    ModelConfig m;
    for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
        const auto& spec = cfg.layers[l];
        LayerConfig lc{spec.s, spec.eta, spec.lambda, KernelSpec::linear()};
        if (spec.family == KernelFamily::Rbf) {
            std::optional<double> sigma2 = (l == 0 && layer1_sigma2) ? layer1_sigma2 : spec.sigma2;
            if (!sigma2) {
                if (l == 0) {
                    sigma2 = spec.median_factor * median_sq_distance(x);
                } else {
                    const auto h = init_layerwise_kpca(m, x);
                    sigma2 = spec.median_factor * median_sq_distance(transpose(h.back()));
                }
            }
            lc.kernel = KernelSpec::rbf(*sigma2, spec.trainable);
        }
        m.layers.push_back(lc);
    }
    m.validate();
    return m;
}

std::vector<Matrix> initial_hidden(const ExperimentConfig& cfg, const ModelConfig& model, const Matrix& x) {
    if (cfg.init == InitMode::Random) {
        return init_random(model, x.rows(), cfg.init_seed ? *cfg.init_seed : SeedPlan::from(cfg.seed).init);
    }
    return init_layerwise_kpca(model, x);
}

TrainResult fit_model(const ExperimentConfig& cfg, const Matrix& x, std::optional<double> layer1_sigma2) {
    const ModelConfig model = resolve_model(cfg, x, layer1_sigma2);
    ModelState state(model, x, initial_hidden(cfg, model, x));
    if (!cfg.train) return {std::move(state), {}};
    ExperimentConfig sized = cfg;
    sized.dataset.n_train = x.rows();
    return train(std::move(state), sized.resolved_schedule());
}

std::vector<ComponentRef> resolve_mask(const ExperimentConfig& cfg, const std::string& override_mask) {
    if (!override_mask.empty()) return parse_component_mask(override_mask);
    if (!cfg.denoise.component_mask.empty()) return parse_component_mask(cfg.denoise.component_mask);
    return leading_components(cfg.layers.front().s);
}

namespace {

template <class F>
DenoiseBatch denoise_each(const Matrix& noisy, F&& one) {
    DenoiseBatch b;
    b.points = noisy;
    for (std::size_t i = 0; i < noisy.rows(); ++i) {
        try {
            const PreimageResult r = one(noisy.row(i));
            std::copy(r.x.begin(), r.x.end(), b.points.row(i).begin());
            b.iterations += r.iterations;
            b.not_converged += r.converged ? 0 : 1;
        } catch (const PreimageCollapse&) {
            ++b.collapsed;
        }
    }
    return b;
}

double validation_error(const Matrix& clean, const DenoiseBatch& b) {
    return reconstruction_error(clean, b.points);
}

}  // namespace

DenoiseBatch denoise_points(const TrainedModel& model, const Matrix& noisy, const std::vector<ComponentRef>& mask,
                            const PreimageSettings& settings) {
    return denoise_each(noisy, [&](std::span<const double> x) { return drkm_denoise(model, x, mask, settings); });
}

DenoiseBatch kpca_denoise_points(const KpcaModel& model, const Matrix& noisy, const PreimageSettings& settings) {
    return denoise_each(noisy, [&](std::span<const double> x) { return kpca_denoise(model, x, settings); });
}

DrkmSelection select_and_train(const ExperimentConfig& cfg, const PointSplits& splits,
                               const std::vector<ComponentRef>& mask) {
    if (!cfg.bandwidth.enabled || cfg.layers.front().family != KernelFamily::Rbf) {
        return {fit_model(cfg, splits.train_noisy), 0.0, {}};
    }
    std::optional<DrkmSelection> best;
    std::vector<SelectionRow> rows;
    double best_err = std::numeric_limits<double>::infinity();
    for (double s2 : cfg.bandwidth.grid) {
        try {
            TrainResult r = fit_model(cfg, splits.train_noisy, s2);
            const TrainedModel tm(r.state);
            const double err =
                validation_error(splits.validation_clean, denoise_points(tm, splits.validation_noisy, mask, cfg.denoise.preimage));
            rows.push_back({s2, err, "ok"});
            if (err < best_err) {
                best_err = err;
                best = DrkmSelection{std::move(r), s2, {}};
            }
        } catch (const DivergenceError& e) {
            rows.push_back({s2, std::numeric_limits<double>::quiet_NaN(), e.what()});
        }
    }
    if (!best) throw DivergenceError("every bandwidth of the grid diverged", 0);
    best->sigma2 = best->result.state.config().layers.front().kernel.sigma2;
    best->rows = std::move(rows);
    return std::move(*best);
}

KpcaSelection select_kpca(const ExperimentConfig& cfg, const PointSplits& splits) {
    const std::size_t s = cfg.denoise.kpca_components;
    std::vector<double> grid = cfg.bandwidth.grid;
    if (!cfg.bandwidth.enabled || grid.empty()) {
        const auto& l = cfg.layers.front();
        grid = {l.sigma2 ? *l.sigma2 : l.median_factor * median_sq_distance(splits.train_noisy)};
    }
    std::optional<KpcaSelection> best;
    std::vector<SelectionRow> rows;
    double best_err = std::numeric_limits<double>::infinity();
    for (double s2 : grid) {
        try {
            KpcaModel m = kpca_fit(splits.train_noisy, KernelSpec::rbf(s2), s);
            const double err = validation_error(splits.validation_clean,
                                                kpca_denoise_points(m, splits.validation_noisy, cfg.denoise.preimage));
            rows.push_back({s2, err, "ok"});
            if (err < best_err) {
                best_err = err;
                best = KpcaSelection{std::move(m), s2, {}};
            }
        } catch (const InvalidArgument& e) {
            rows.push_back({s2, std::numeric_limits<double>::quiet_NaN(), e.what()});
        }
    }
    if (!best) throw InvalidArgument("kernel PCA baseline failed for every bandwidth");
    best->rows = std::move(rows);
    return std::move(*best);
}

Matrix latent_codes(const TrainedModel& model, const Matrix& x, std::size_t latent_layer) {
    if (latent_layer == 0) return encode_concatenated(model, x);
    if (latent_layer > model.config().layers.size()) throw ConfigError("latent layer exceeds the layer count");
    const std::size_t s = model.config().layers[latent_layer - 1].s;
    Matrix z(x.rows(), s);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto codes = encode(model, x.row(i));
        std::copy(codes[latent_layer - 1].begin(), codes[latent_layer - 1].end(), z.row(i).begin());
    }
    return z;
}

MetricsOutcome run_metrics(const ExperimentConfig& cfg) {
    const FactorDataset train_set = make_factor_train(cfg);
    const FactorDataset eval_set = make_factor_eval(cfg);
    const TrainedModel model(fit_model(cfg, train_set.points).state);
    const Matrix z = latent_codes(model, eval_set.points, cfg.metrics.latent_layer);
    if (cfg.metrics.latent_dim != 0 && z.cols() != cfg.metrics.latent_dim) {
        throw ConfigError("latent dimension " + std::to_string(z.cols()) + " differs from metrics.latent_dim " +
                          std::to_string(cfg.metrics.latent_dim));
    }
    FactorColumns factors;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < eval_set.factors.size(); ++j) {
        factors.push_back(eval_set.factor_column(j));
        names.push_back(eval_set.factors[j].name);
    }
    MetricSettings ms;
    ms.bins = cfg.metrics.bins;
    ms.sap.train_fraction = cfg.metrics.sap_train_fraction;
    ms.sap.seed = SeedPlan::from(cfg.seed).sap;
    return {evaluate_metrics(z, factors, names, ms), z.cols()};
}

void save_model(const std::filesystem::path& path, const ModelState& state, const std::vector<std::string>& meta) {
    json layers = json::array();
    for (const auto& l : state.config().layers) {
        layers.push_back({{"s", l.s},
                          {"eta", l.eta},
                          {"lambda", l.lambda},
                          {"kernel", std::string(to_string(l.kernel.family))},
                          {"sigma2", l.kernel.sigma2},
                          {"trainable", l.kernel.trainable_bandwidth}});
    }
    json hidden = json::array();
    for (const auto& h : state.hidden()) hidden.push_back(matrix_json(h));
    const Matrix& x = state.data();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fingerprint(std::span<const double>(x.data(), x.size()))));
    json j{{"format", "drkm-model-1"}, {"meta", meta}, {"layers", layers},
           {"data", matrix_json(x)}, {"data_hash", hash}, {"hidden", hidden}};
    write_text_file(path, j.dump(1) + "\n");
}

ModelState load_model(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        const json j = json::parse(text);
        if (j.at("format") != "drkm-model-1") throw ParseError("unsupported model format", 1);
        ModelConfig cfg;
        for (const auto& l : j.at("layers")) {
            const auto fam = kernel_family_from_string(l.at("kernel").get<std::string>());
            KernelSpec k = fam == KernelFamily::Rbf
                               ? KernelSpec::rbf(l.at("sigma2").get<double>(), l.at("trainable").get<bool>())
                               : KernelSpec::linear();
            cfg.layers.push_back({l.at("s").get<std::size_t>(), l.at("eta").get<double>(),
                                  l.at("lambda").get<double>(), k});
        }
        std::vector<Matrix> hidden;
        for (const auto& h : j.at("hidden")) hidden.push_back(matrix_from_json(h));
        return ModelState(cfg, matrix_from_json(j.at("data")), std::move(hidden));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": malformed model file: " + e.what(), 1);
    }
}

DenoiseRun denoise_training_set(const ExperimentConfig& cfg, const PointSplits& splits, const TrainedModel& model,
                                const std::vector<ComponentRef>& mask) {
    DenoiseRun run;
    run.drkm_sigma2 = model.config().layers.front().kernel.sigma2;
    run.drkm = denoise_points(model, splits.train_noisy, mask, cfg.denoise.preimage);
    run.drkm_error = reconstruction_error(splits.train_clean, run.drkm.points);
    run.noisy_error = reconstruction_error(splits.train_clean, splits.train_noisy);
    if (cfg.denoise.baseline) {
        const KpcaSelection sel = select_kpca(cfg, splits);
        run.kpca_sigma2 = sel.sigma2;
        run.kpca_rows = sel.rows;
        run.kpca = kpca_denoise_points(sel.model, splits.train_noisy, cfg.denoise.preimage);
        run.kpca_error = reconstruction_error(splits.train_clean, run.kpca.points);
    }
    return run;
}

}  // namespace drkm
