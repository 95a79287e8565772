#include "drkm/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"

#include "drkm/csv.hpp"
#include "drkm/error.hpp"

namespace drkm {

using nlohmann::json;

namespace {

const std::set<std::string> kKinds{"square", "half_circle", "spiral", "ring", "composite_a", "composite_b",
                                   "factor_toy"};

// Reads keys from one JSON object and rejects whatever was not read.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where(key) + " has the wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json* sub(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key = "") const {
        const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
        return "'" + (p.empty() ? std::string("<root>") : p) + "'";
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError("unknown key " + where(k));
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

LayerSpec parse_layer(const json& j, const std::string& path) {
    Section s(j, path);
    LayerSpec l;
    s.get("s", l.s);
    s.get("eta", l.eta);
    s.get("lambda", l.lambda);
    std::string kernel = "rbf";
    s.get("kernel", kernel);
    if (kernel != "rbf" && kernel != "linear") throw ConfigError(s.where("kernel") + " must be rbf or linear");
    l.family = kernel == "rbf" ? KernelFamily::Rbf : KernelFamily::Linear;
    if (const json* sig = s.sub("sigma2")) {
        if (sig->is_string() && sig->get<std::string>() == "median") {
            l.sigma2.reset();
        } else if (sig->is_number()) {
            l.sigma2 = sig->get<double>();
        } else {
            throw ConfigError(s.where("sigma2") + " must be a number or \"median\"");
        }
    }
    s.get("median_factor", l.median_factor);
    s.get("trainable", l.trainable);
    s.finish();
    return l;
}

json layer_json(const LayerSpec& l) {
    json j{{"s", l.s},
           {"eta", l.eta},
           {"lambda", l.lambda},
           {"kernel", std::string(to_string(l.family))},
           {"median_factor", l.median_factor},
           {"trainable", l.trainable}};
    j["sigma2"] = l.sigma2 ? json(*l.sigma2) : json("median");
    return j;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

std::string_view to_string(InitMode m) noexcept {
    return m == InitMode::Random ? "random" : "layerwise_kpca";
}

PenaltySchedule ExperimentConfig::resolved_schedule() const {
    PenaltySchedule s = schedule;
    if (auto_max_outer) s.max_outer = default_max_outer(dataset.n_train);
    return s;
}

void ExperimentConfig::validate() const {
    require(kKinds.count(dataset.kind) > 0, "dataset.kind '" + dataset.kind + "' is not a known dataset");
    require(dataset.noise >= 0.0 && std::isfinite(dataset.noise), "dataset.noise must be >= 0");
    if (dataset.is_factor_toy()) {
        require(!dataset.cardinalities.empty(), "dataset.cardinalities must not be empty");
        for (auto c : dataset.cardinalities) require(c >= 2, "dataset.cardinalities entries must be >= 2");
        require(dataset.embedding_dim >= 1, "dataset.embedding_dim must be >= 1");
    } else {
        require(dataset.n_train >= 1, "dataset.n_train must be >= 1");
        require(dataset.n_validation >= 1, "dataset.n_validation must be >= 1");
    }
    require(!layers.empty(), "model.layers must not be empty");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string at = "model.layers[" + std::to_string(i) + "]";
        require(l.s >= 1, at + ".s must be >= 1");
        require(l.eta > 0.0 && l.lambda > 0.0, at + ": eta and lambda must be positive");
        require(!l.sigma2 || *l.sigma2 > 0.0, at + ".sigma2 must be positive");
        require(l.median_factor > 0.0, at + ".median_factor must be positive");
        require(!(l.trainable && l.family == KernelFamily::Linear), at + ": a linear kernel has no bandwidth");
    }
    try {
        schedule.validate();
        denoise.preimage.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (!denoise.component_mask.empty()) {
        try {
            parse_component_mask(denoise.component_mask);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("denoise.component_mask: ") + e.what());
        }
    }
    require(denoise.kpca_components >= 1, "denoise.kpca_components must be >= 1");
    for (double g : bandwidth.grid) require(g > 0.0, "bandwidth.grid entries must be positive");
    require(!bandwidth.enabled || !bandwidth.grid.empty(), "bandwidth.grid must not be empty when enabled");
    require(metrics.bins >= 2, "metrics.bins must be >= 2");
    require(metrics.sap_train_fraction > 0.0 && metrics.sap_train_fraction < 1.0,
            "metrics.sap_train_fraction must lie in (0, 1)");
    require(metrics.n_eval >= 2, "metrics.n_eval must be >= 2");
    require(metrics.latent_layer <= layers.size(), "metrics.latent_layer exceeds the layer count");
    for (double g : sweep.gamma) require(g > 0.0, "sweep.gamma entries must be positive");
    for (auto n : sweep.n_layers) require(n >= 1 && n <= layers.size(), "sweep.n_layers entries must lie in [1, layers]");
    for (auto n : sweep.n_train) require(n >= 1, "sweep.n_train entries must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    Section r(root, "");
    r.get("seed", cfg.seed);
    r.get("train", cfg.train);
    if (const json* is = r.sub("init_seed")) {
        if (is->is_null()) {
            cfg.init_seed.reset();
        } else if (!is->is_number_unsigned()) {
            throw ConfigError("'init_seed' must be a non-negative integer");
        } else {
            cfg.init_seed = is->get<std::uint64_t>();
        }
    }
    std::string init = "layerwise_kpca";
    r.get("init", init);
    if (init != "layerwise_kpca" && init != "random") throw ConfigError("'init' must be layerwise_kpca or random");
    cfg.init = init == "random" ? InitMode::Random : InitMode::LayerwiseKpca;

    if (const json* d = r.sub("dataset")) {
        Section s(*d, "dataset");
        s.get("kind", cfg.dataset.kind);
        s.get("n_train", cfg.dataset.n_train);
        s.get("n_validation", cfg.dataset.n_validation);
        s.get("noise", cfg.dataset.noise);
        s.get("cardinalities", cfg.dataset.cardinalities);
        s.get("embedding_dim", cfg.dataset.embedding_dim);
        s.finish();
    }
    if (const json* m = r.sub("model")) {
        Section s(*m, "model");
        if (const json* ls = s.sub("layers")) {
            if (!ls->is_array()) throw ConfigError("'model.layers' must be an array");
            cfg.layers.clear();
            for (std::size_t i = 0; i < ls->size(); ++i)
                cfg.layers.push_back(parse_layer((*ls)[i], "model.layers[" + std::to_string(i) + "]"));
        }
        s.finish();
    }
    if (const json* o = r.sub("schedule")) {
        Section s(*o, "schedule");
        auto& p = cfg.schedule;
        s.get("mu0", p.mu0);
        s.get("p", p.p);
        s.get("tau0", p.tau0);
        if (const json* mo = s.sub("max_outer")) {
            if (mo->is_string() && mo->get<std::string>() == "auto") {
                cfg.auto_max_outer = true;
            } else if (mo->is_number_unsigned()) {
                cfg.auto_max_outer = false;
                p.max_outer = mo->get<std::size_t>();
            } else {
                throw ConfigError("'schedule.max_outer' must be a count or \"auto\"");
            }
        }
        s.get("max_inner", p.max_inner);
        s.get("adam_lr", p.adam_lr);
        s.get("adam_beta1", p.adam_beta1);
        s.get("adam_beta2", p.adam_beta2);
        s.get("adam_eps", p.adam_eps);
        s.finish();
    }
    if (const json* b = r.sub("bandwidth")) {
        Section s(*b, "bandwidth");
        s.get("select", cfg.bandwidth.enabled);
        s.get("grid", cfg.bandwidth.grid);
        s.finish();
    }
    if (const json* d = r.sub("denoise")) {
        Section s(*d, "denoise");
        auto& dn = cfg.denoise;
        s.get("component_mask", dn.component_mask);
        s.get("kpca_components", dn.kpca_components);
        s.get("baseline", dn.baseline);
        s.get("max_iters", dn.preimage.max_iters);
        s.get("tol", dn.preimage.tol);
        s.get("restart_on_collapse", dn.preimage.restart_on_collapse);
        s.get("max_restarts", dn.preimage.max_restarts);
        s.get("restart_scale", dn.preimage.restart_scale);
        s.get("centered", dn.preimage.centered);
        s.finish();
    }
    if (const json* m = r.sub("metrics")) {
        Section s(*m, "metrics");
        s.get("bins", cfg.metrics.bins);
        s.get("sap_train_fraction", cfg.metrics.sap_train_fraction);
        s.get("n_eval", cfg.metrics.n_eval);
        s.get("latent_dim", cfg.metrics.latent_dim);
        s.get("latent_layer", cfg.metrics.latent_layer);
        s.finish();
    }
    if (const json* w = r.sub("sweep")) {
        Section s(*w, "sweep");
        s.get("gamma", cfg.sweep.gamma);
        s.get("n_train", cfg.sweep.n_train);
        s.get("seeds", cfg.sweep.seeds);
        s.get("n_layers", cfg.sweep.n_layers);
        s.finish();
    }
    r.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path));
}

std::string canonical_json(const ExperimentConfig& cfg) {
    json layers = json::array();
    for (const auto& l : cfg.layers) layers.push_back(layer_json(l));
    const auto& p = cfg.schedule;
    const auto& dn = cfg.denoise;
    json j{
        {"seed", cfg.seed},
        {"init_seed", cfg.init_seed ? json(*cfg.init_seed) : json(nullptr)},
        {"train", cfg.train},
        {"init", std::string(to_string(cfg.init))},
        {"dataset",
         {{"kind", cfg.dataset.kind},
          {"n_train", cfg.dataset.n_train},
          {"n_validation", cfg.dataset.n_validation},
          {"noise", cfg.dataset.noise},
          {"cardinalities", cfg.dataset.cardinalities},
          {"embedding_dim", cfg.dataset.embedding_dim}}},
        {"model", {{"layers", layers}}},
        {"schedule",
         {{"mu0", p.mu0},
          {"p", p.p},
          {"tau0", p.tau0},
          {"max_outer", cfg.auto_max_outer ? json("auto") : json(p.max_outer)},
          {"max_inner", p.max_inner},
          {"adam_lr", p.adam_lr},
          {"adam_beta1", p.adam_beta1},
          {"adam_beta2", p.adam_beta2},
          {"adam_eps", p.adam_eps}}},
        {"bandwidth", {{"select", cfg.bandwidth.enabled}, {"grid", cfg.bandwidth.grid}}},
        {"denoise",
         {{"component_mask", dn.component_mask},
          {"kpca_components", dn.kpca_components},
          {"baseline", dn.baseline},
          {"max_iters", dn.preimage.max_iters},
          {"tol", dn.preimage.tol},
          {"restart_on_collapse", dn.preimage.restart_on_collapse},
          {"max_restarts", dn.preimage.max_restarts},
          {"restart_scale", dn.preimage.restart_scale},
          {"centered", dn.preimage.centered}}},
        {"metrics",
         {{"bins", cfg.metrics.bins},
          {"sap_train_fraction", cfg.metrics.sap_train_fraction},
          {"n_eval", cfg.metrics.n_eval},
          {"latent_dim", cfg.metrics.latent_dim},
          {"latent_layer", cfg.metrics.latent_layer}}},
        {"sweep",
         {{"gamma", cfg.sweep.gamma},
          {"n_train", cfg.sweep.n_train},
          {"seeds", cfg.sweep.seeds},
          {"n_layers", cfg.sweep.n_layers}}},
    };
    return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json(cfg))));
    return buf;
}

}  // namespace drkm
