#include "drkm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "drkm/error.hpp"
#include "drkm/random.hpp"

namespace drkm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shapes(const Matrix& latents, const FactorColumns& factors) {
    if (latents.rows() == 0 || latents.cols() == 0) throw InvalidArgument("metrics need non-empty latents");
    if (factors.empty()) throw InvalidArgument("metrics need at least one factor");
    for (const auto& f : factors) {
        if (f.size() != latents.rows()) throw InvalidArgument("factor column length differs from latent rows");
    }
}

std::vector<double> column(const Matrix& m, std::size_t c) {
    std::vector<double> v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, c);
    return v;
}

std::size_t label_count(std::span<const std::size_t> a) {
    return a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
}

// Balanced accuracy of "value > t is positive" over all thresholds, fit on
// (value, positive) pairs. Returns {best score, threshold, flip}.
struct Stump {
    double score = 0.5;
    double threshold = std::numeric_limits<double>::infinity();
    bool flip = false;
};

Stump fit_stump(const std::vector<std::pair<double, bool>>& sorted, std::size_t pos_total) {
    const std::size_t n = sorted.size(), neg_total = n - pos_total;
    Stump best;
    if (pos_total == 0 || neg_total == 0) return best;
    std::size_t pos_le = 0, neg_le = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        (sorted[k].second ? pos_le : neg_le) += 1;
        if (sorted[k].first == sorted[k + 1].first) continue;
        // Predict positive above the threshold.
        const double tpr = double(pos_total - pos_le) / pos_total;
        const double tnr = double(neg_le) / neg_total;
        const double ba = 0.5 * (tpr + tnr);
        const double t = 0.5 * (sorted[k].first + sorted[k + 1].first);
        if (ba > best.score) best = {ba, t, false};
        if (1.0 - ba > best.score) best = {1.0 - ba, t, true};
    }
    return best;
}

double stump_score(const Stump& s, std::span<const double> v, std::span<const std::size_t> labels,
                   const std::vector<std::size_t>& idx, std::size_t cls) {
    std::size_t tp = 0, tn = 0, p = 0, q = 0;
    for (std::size_t i : idx) {
        const bool truth = labels[i] == cls;
        const bool pred = (v[i] > s.threshold) != s.flip;
        if (truth) {
            ++p;
            tp += pred;
        } else {
            ++q;
            tn += !pred;
        }
    }
    return 0.5 * (double(tp) / p + double(tn) / q);
}

}  // namespace

std::vector<std::size_t> equal_frequency_bins(std::span<const double> values, std::size_t bins) {
    if (bins < 2) throw InvalidArgument("need at least two bins");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::size_t> out(n);
    std::size_t group_bin = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r == 0 || values[order[r]] != values[order[r - 1]]) group_bin = r * bins / n;
        out[order[r]] = group_bin;
    }
    return out;
}

double entropy(std::span<const std::size_t> labels) {
    if (labels.empty()) return 0.0;
    std::vector<std::size_t> counts(label_count(labels), 0);
    for (auto l : labels) ++counts[l];
    double h = 0.0;
    const double n = static_cast<double>(labels.size());
    for (auto c : counts)
        if (c) h -= (c / n) * std::log(c / n);
    return std::max(0.0, h);
}

double discrete_mutual_information(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) throw InvalidArgument("mutual information needs equal-length columns");
    if (a.empty()) return 0.0;
    const std::size_t ka = label_count(a), kb = label_count(b);
    std::vector<std::size_t> joint(ka * kb, 0), ca(ka, 0), cb(kb, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[a[i] * kb + b[i]];
        ++ca[a[i]];
        ++cb[b[i]];
    }
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    for (std::size_t i = 0; i < ka; ++i)
        for (std::size_t j = 0; j < kb; ++j) {
            const auto c = joint[i * kb + j];
            if (c) mi += (c / n) * std::log(c * n / (double(ca[i]) * double(cb[j])));
        }
    return std::max(0.0, mi);
}

double mutual_information(std::span<const double> latent, std::span<const std::size_t> factor, std::size_t bins) {
    if (latent.size() != factor.size()) throw InvalidArgument("mutual information needs equal-length columns");
    const auto b = equal_frequency_bins(latent, bins);
    return discrete_mutual_information(b, factor);
}

Matrix mutual_information_matrix(const Matrix& latents, const FactorColumns& factors, std::size_t bins) {
    check_shapes(latents, factors);
    Matrix mi(latents.cols(), factors.size());
    for (std::size_t l = 0; l < latents.cols(); ++l) {
        const auto b = equal_frequency_bins(column(latents, l), bins);
        for (std::size_t j = 0; j < factors.size(); ++j) mi(l, j) = discrete_mutual_information(b, factors[j]);
    }
    return mi;
}

MigResult mig(const Matrix& latents, const FactorColumns& factors, std::size_t bins) {
    MigResult r;
    r.mi = mutual_information_matrix(latents, factors, bins);
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < factors.size(); ++j) {
        const double h = entropy(factors[j]);
        if (!(h > 0.0)) {
            r.per_factor.push_back(kNaN);
            r.warnings.push_back("factor " + std::to_string(j + 1) + " has zero entropy; excluded from MIG");
            continue;
        }
        std::vector<double> col;
        for (std::size_t l = 0; l < latents.cols(); ++l) col.push_back(r.mi(l, j));
        std::sort(col.begin(), col.end(), std::greater<>());
        const double second = col.size() > 1 ? col[1] : 0.0;
        const double gap = std::clamp((col[0] - second) / h, 0.0, 1.0);
        r.per_factor.push_back(gap);
        total += gap;
        ++used;
    }
    if (used == 0) r.warnings.push_back("no factor with positive entropy; MIG set to 0");
    r.score = used ? total / used : 0.0;
    return r;
}

SapResult sap(const Matrix& latents, const FactorColumns& factors, const SapSettings& settings) {
    check_shapes(latents, factors);
    if (!(settings.train_fraction > 0.0 && settings.train_fraction < 1.0)) {
        throw InvalidArgument("SAP train_fraction must lie in (0, 1)");
    }
    const std::size_t n = latents.rows(), nl = latents.cols(), nf = factors.size();
    const auto n_train = static_cast<std::size_t>(std::llround(settings.train_fraction * n));

    // Draw a split in which every class of every factor appears on both sides.
    std::vector<std::size_t> train_idx, test_idx;
    std::size_t attempt = 0;
    for (;; ++attempt) {
        if (attempt == settings.max_attempts) {
            throw InvalidArgument("SAP: no split with every class on both sides after " +
                                  std::to_string(settings.max_attempts) + " attempts");
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(settings.seed + attempt, 0x534150);
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        train_idx.assign(perm.begin(), perm.begin() + n_train);
        test_idx.assign(perm.begin() + n_train, perm.end());
        bool ok = !train_idx.empty() && !test_idx.empty();
        for (std::size_t j = 0; ok && j < nf; ++j) {
            const std::size_t k = label_count(factors[j]);
            std::vector<char> in_train(k, 0), in_test(k, 0), present(k, 0);
            for (auto l : factors[j]) present[l] = 1;
            for (auto i : train_idx) in_train[factors[j][i]] = 1;
            for (auto i : test_idx) in_test[factors[j][i]] = 1;
            std::size_t classes = 0;
            for (std::size_t c = 0; c < k; ++c) {
                classes += present[c];
                if (present[c] && (!in_train[c] || !in_test[c])) ok = false;
            }
            if (classes < 2) ok = false;
        }
        if (ok) break;
    }

    SapResult r;
    r.split_attempts = attempt + 1;
    r.s = Matrix(nl, nf);
    for (std::size_t l = 0; l < nl; ++l) {
        const auto v = column(latents, l);
        std::vector<std::size_t> order = train_idx;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        for (std::size_t j = 0; j < nf; ++j) {
            const auto& lab = factors[j];
            const std::size_t k = label_count(lab);
            // Two-class factors: one stump covers both one-vs-rest directions.
            const std::size_t classes = k == 2 ? 1 : k;
            double best_train = -1.0, test = 0.5;
            for (std::size_t c = 0; c < classes; ++c) {
                std::vector<std::pair<double, bool>> sorted;
                std::size_t pos = 0;
                for (auto i : order) {
                    sorted.emplace_back(v[i], lab[i] == c);
                    pos += lab[i] == c;
                }
                const Stump st = fit_stump(sorted, pos);
                if (st.score > best_train) {
                    best_train = st.score;
                    test = stump_score(st, v, lab, test_idx, c);
                }
            }
            r.s(l, j) = test;
        }
    }
    double total = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
        std::vector<double> col;
        for (std::size_t l = 0; l < nl; ++l) col.push_back(r.s(l, j));
        std::sort(col.begin(), col.end(), std::greater<>());
        const double gap = std::clamp(col[0] - (col.size() > 1 ? col[1] : 0.5), 0.0, 1.0);
        r.per_factor.push_back(gap);
        total += gap;
    }
    r.score = total / nf;
    return r;
}

IrsResult irs(const Matrix& latents, const FactorColumns& factors, std::size_t bins) {
    check_shapes(latents, factors);
    IrsResult r;
    const std::size_t nl = latents.cols();
    r.per_latent.assign(nl, kNaN);
    r.associated.assign(nl, 0);
    r.weights.assign(nl, 0.0);
    if (factors.size() == 1) {
        r.single_factor = true;
        r.score = 1.0;
        r.warnings.push_back("single-factor dataset: no other factors vary, IRS is 1 by convention");
        return r;
    }
    const Matrix mi = mutual_information_matrix(latents, factors, bins);
    double wsum = 0.0, acc = 0.0, plain = 0.0;
    std::size_t used = 0;
    for (std::size_t l = 0; l < nl; ++l) {
        const auto v = column(latents, l);
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double d_all = 0.0;
        for (double x : v) d_all = std::max(d_all, std::abs(x - mean));
        if (!(d_all > 0.0)) continue;
        std::size_t g = 0;
        for (std::size_t j = 1; j < factors.size(); ++j)
            if (mi(l, j) > mi(l, g)) g = j;
        r.associated[l] = g;
        const auto& lab = factors[g];
        std::map<std::size_t, std::pair<double, std::size_t>> sums;
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto& s = sums[lab[i]];
            s.first += v[i];
            ++s.second;
        }
        std::map<std::size_t, double> dev;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto& s = sums[lab[i]];
            dev[lab[i]] = std::max(dev[lab[i]], std::abs(v[i] - s.first / s.second));
        }
        double d_within = 0.0;
        for (const auto& [k, d] : dev) d_within += d;
        d_within /= dev.size();
        const double score = 1.0 - std::min(1.0, d_within / d_all);
        r.per_latent[l] = score;
        r.weights[l] = mi(l, g);
        wsum += r.weights[l];
        acc += r.weights[l] * score;
        plain += score;
        ++used;
    }
    if (used == 0) {
        r.warnings.push_back("all latents are constant; IRS set to 0 by convention");
        r.score = 0.0;
    } else if (!(wsum > 0.0)) {
        r.warnings.push_back("latents carry no mutual information; IRS uses an unweighted mean");
        r.score = plain / used;
    } else {
        r.score = std::clamp(acc / wsum, 0.0, 1.0);
    }
    return r;
}

MetricReport evaluate_metrics(const Matrix& latents, const FactorColumns& factors,
                              const std::vector<std::string>& factor_names, const MetricSettings& settings) {
    MetricReport rep;
    rep.mig_detail = mig(latents, factors, settings.bins);
    rep.sap_detail = sap(latents, factors, settings.sap);
    rep.irs_detail = irs(latents, factors, settings.bins);
    rep.mig = rep.mig_detail.score;
    rep.sap = rep.sap_detail.score;
    rep.irs = rep.irs_detail.score;
    rep.factor_names = factor_names;
    if (rep.factor_names.size() != factors.size()) {
        rep.factor_names.clear();
        for (std::size_t j = 0; j < factors.size(); ++j) rep.factor_names.push_back("f" + std::to_string(j + 1));
    }
    return rep;
}

CsvTable MetricReport::to_table() const {
    CsvTable t;
    t.header = {"metric", "scope", "index", "name", "value"};
    auto add = [&](const std::string& m, const std::string& scope, std::size_t idx, const std::string& name,
                   double v) {
        t.rows.push_back({m, scope, std::to_string(idx), name, std::isnan(v) ? "" : format_double(v)});
    };
    add("mig", "overall", 0, "", mig);
    add("sap", "overall", 0, "", sap);
    add("irs", "overall", 0, "", irs);
    for (std::size_t j = 0; j < mig_detail.per_factor.size(); ++j)
        add("mig", "factor", j + 1, factor_names[j], mig_detail.per_factor[j]);
    for (std::size_t j = 0; j < sap_detail.per_factor.size(); ++j)
        add("sap", "factor", j + 1, factor_names[j], sap_detail.per_factor[j]);
    for (std::size_t l = 0; l < irs_detail.per_latent.size(); ++l)
        add("irs", "latent", l + 1, "z" + std::to_string(l + 1), irs_detail.per_latent[l]);
    for (const auto& w : mig_detail.warnings) t.meta.push_back("warning=" + w);
    for (const auto& w : irs_detail.warnings) t.meta.push_back("warning=" + w);
    return t;
}

std::string MetricReport::to_text() const {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(4);
    o << "metric  score\n";
    o << "MIG     " << mig << "\n";
    o << "SAP     " << sap << "\n";
    o << "IRS     " << irs << "\n\n";
    o << "factor            MIG gap   SAP gap\n";
    for (std::size_t j = 0; j < factor_names.size(); ++j) {
        std::string name = factor_names[j];
        name.resize(16, ' ');
        o << name << "  " << mig_detail.per_factor[j] << "    " << sap_detail.per_factor[j] << "\n";
    }
    o << "\nlatent  IRS      factor\n";
    for (std::size_t l = 0; l < irs_detail.per_latent.size(); ++l) {
        o << "z" << l + 1 << (l + 1 < 10 ? "      " : "     ");
        if (std::isnan(irs_detail.per_latent[l])) {
            o << "const\n";
        } else {
            o << irs_detail.per_latent[l] << "   " << factor_names[irs_detail.associated[l]] << "\n";
        }
    }
    for (const auto& w : mig_detail.warnings) o << "warning: " << w << "\n";
    for (const auto& w : irs_detail.warnings) o << "warning: " << w << "\n";
    return o.str();
}

}  // namespace drkm
