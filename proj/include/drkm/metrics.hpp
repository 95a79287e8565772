#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drkm/csv.hpp"
#include "drkm/matrix.hpp"

namespace drkm {

/// Factor labels column by column: labels[j][n] is factor j of sample n.
using FactorColumns = std::vector<std::vector<std::size_t>>;

/// Rank-based bins: sample n goes to floor(rank * bins / N); tied values
/// share the bin of their first rank, so a constant column is one bin.
std::vector<std::size_t> equal_frequency_bins(std::span<const double> values, std::size_t bins);

/// Plug-in entropy of a label column, in nats.
double entropy(std::span<const std::size_t> labels);
/// Plug-in mutual information of two label columns, in nats.
double discrete_mutual_information(std::span<const std::size_t> a, std::span<const std::size_t> b);
/// MI between a binned latent column and a factor column.
double mutual_information(std::span<const double> latent, std::span<const std::size_t> factor, std::size_t bins);

/// L x F matrix of MI(latent l, factor j).
Matrix mutual_information_matrix(const Matrix& latents, const FactorColumns& factors, std::size_t bins);

struct MigResult {
    double score = 0.0;
    std::vector<double> per_factor;  ///< NaN for excluded factors
    Matrix mi;                       ///< L x F
    std::vector<std::string> warnings;
};

/// Mean over factors of (MI_top1 - MI_top2) / H(factor). Zero-entropy
/// factors are excluded with a warning.
MigResult mig(const Matrix& latents, const FactorColumns& factors, std::size_t bins = 20);

struct SapSettings {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::size_t max_attempts = 10;
};

struct SapResult {
    double score = 0.0;
    std::vector<double> per_factor;
    Matrix s;  ///< L x F test balanced accuracies
    std::size_t split_attempts = 1;
};

/// S_ij is the test balanced accuracy of a one-threshold stump on latent i
/// for factor j: threshold and polarity are fit on the train split; for a
/// multi-class factor the one-vs-rest class with the best train score is
/// used. Score = mean over factors of the gap between the two largest S_ij.
/// A split that leaves some class absent from either side is redrawn with
/// the next seed; after max_attempts InvalidArgument is thrown.
SapResult sap(const Matrix& latents, const FactorColumns& factors, const SapSettings& settings = {});

struct IrsResult {
    double score = 0.0;
    std::vector<double> per_latent;        ///< NaN for excluded (constant) latents
    std::vector<std::size_t> associated;   ///< argmax-MI factor per latent
    std::vector<double> weights;
    bool single_factor = false;
    std::vector<std::string> warnings;
};

/// For latent l with associated factor G: d_within = mean over values g of
/// max |l - mean(l | G=g)|, d_all = max |l - mean(l)|,
/// score_l = 1 - min(1, d_within / d_all). The result is the mean of score_l
/// weighted by MI(l, G). Constant latents are excluded; when every latent is
/// constant the score is 0 with a warning. A single-factor dataset scores 1
/// and is flagged.
IrsResult irs(const Matrix& latents, const FactorColumns& factors, std::size_t bins = 20);

struct MetricSettings {
    std::size_t bins = 20;
    SapSettings sap;
};

struct MetricReport {
    double mig = 0.0;
    double sap = 0.0;
    double irs = 0.0;
    MigResult mig_detail;
    SapResult sap_detail;
    IrsResult irs_detail;
    std::vector<std::string> factor_names;

    /// Long format: metric, scope, index, name, value.
    CsvTable to_table() const;
    std::string to_text() const;
};

MetricReport evaluate_metrics(const Matrix& latents, const FactorColumns& factors,
                              const std::vector<std::string>& factor_names, const MetricSettings& settings = {});

}  // namespace drkm
