#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spikezip/cae.hpp"
#include "spikezip/entropy.hpp"
#include "spikezip/spike_data.hpp"

namespace spikezip {

/// Exact reconstructions report this sentinel instead of +infinity.
inline constexpr double kSndrCapDb = 300.0;

/// 20 * log10(|X| / |X - Xhat|) over the whole batch, capped at kSndrCapDb.
double sndr(const std::vector<double>& x, const std::vector<double>& x_hat);
double sndr(const nn::TensorPtr& x, const nn::TensorPtr& x_hat);

/// One point of a rate-quality curve, aggregated over split repeats.
struct RateQualityPoint {
    std::string method;   // "cae", "pca", "dct" or "dwt"
    std::string setting;  // grid coordinate, e.g. "m=8" or "K=128"
    double cr = 0.0;      // mean compression ratio
    double cr_std = 0.0;
    double sndr_db = 0.0;  // mean quality on the held-out half
    double sndr_std = 0.0;
    uint32_t config_digest = 0;  // for CAE points; 0 for baselines
    int repeats = 1;
    std::vector<double> cr_samples;    // per-repeat values behind the means,
    std::vector<double> sndr_samples;  // index-aligned across methods
};

struct SweepOptions {
    std::vector<int> baseline_ms;        // kept-coefficient grid for pca/dct/dwt
    std::vector<CaeConfig> cae_configs;  // autoencoder grid
    TrainOptions train;                  // per-repeat training settings
    int repeats = 5;                     // 50/50 split repeats
    uint64_t seed = 1;
    int w_bits = 16;  // sample width for the wavelet codec's position mask
    int threads = 0;  // 0: SPIKEZIP_THREADS, else hardware concurrency
};

/// Rate-quality evaluation: for each repeat the batch is split 50/50 at
/// random, methods are fitted on one half and scored on the other, and the
/// autoencoder's ratio uses the measured index entropy of the held-out half.
/// Results are averaged per grid point and are identical for any thread
/// count.
std::vector<RateQualityPoint> sweep(const SpikeBatch& batch, const SweepOptions& opts);

/// Codeword activation statistics of a trained model over a spike tensor.
struct CodewordStats {
    SymbolHistogram histogram;
    double entropy_bits = 0.0;
    double usage_fraction = 0.0;  // codewords selected at least once
};
CodewordStats codeword_stats(const CaeModel& model, const nn::TensorPtr& raw_spikes);

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;  // k x dims
    double inertia = 0.0;
};

/// Lloyd's algorithm, best inertia over `restarts` seeded initializations.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, uint64_t seed);

/// Fraction of agreeing entries under the best one-to-one relabeling of the
/// prediction (exhaustive for k <= 6, Hungarian assignment above).
double match_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted, int k);

/// PCA to 3 features, k-means, then best-permutation agreement with `labels`.
double sorting_accuracy(const Eigen::MatrixXd& spikes, const std::vector<int>& labels, int k,
                        int restarts = 50, uint64_t seed = 1);

struct SortingReport {
    double accuracy_before = 0.0;
    std::vector<double> crs;             // one entry per compressed variant
    std::vector<double> accuracy_after;  // parallel to crs
    double noise_sigma = 0.0;
    std::string sequence_id;
};

struct GeneralizationMatrix {
    std::vector<std::string> ids;  // row = training sequence, column = test
    Eigen::MatrixXd sndr_db;
};

/// Trains one model per sequence on its first half and scores every
/// sequence's last half, per the train-early / test-late protocol.
GeneralizationMatrix generalization_matrix(const std::vector<SpikeBatch>& sequences,
                                           const std::vector<std::string>& ids,
                                           const CaeConfig& config, const TrainOptions& topt,
                                           int threads = 0);

/// Flattens a [N, C, D] spike tensor into an N x (C*D) matrix.
Eigen::MatrixXd to_matrix(const nn::TensorPtr& spikes);

/// Worker count for sweep fan-out: `requested` if positive, else the
/// SPIKEZIP_THREADS environment variable, else the hardware concurrency.
int worker_count(int requested = 0);

void write_rate_quality_csv(const std::string& path, const std::vector<RateQualityPoint>& points);
void write_sorting_csv(const std::string& path, const SortingReport& report);
void write_codewords_csv(const std::string& path, const CodewordStats& stats);
void write_generalization_csv(const std::string& path, const GeneralizationMatrix& matrix);
/// Minimal standalone line chart (log-scaled CR on x, SNDR dB on y).
void write_rate_quality_svg(const std::string& path, const std::vector<RateQualityPoint>& points);

}  // namespace spikezip
