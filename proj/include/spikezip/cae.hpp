#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "spikezip/adam.hpp"
#include "spikezip/layers.hpp"

namespace spikezip {

/// Thrown when training produces a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using nn::Layer;
using nn::Tape;
using nn::Tensor;
using nn::TensorPtr;

struct CaeConfig {
    int m_spk = 4;          // input spike ports
    int d_samples = 48;     // samples per spike
    int w_bits = 16;        // original sample bit width
    int n_feat = 16;        // latent feature vectors per spike group
    int k_codewords = 256;  // codebook size
    int width = 256;        // internal channel dimension
    int groups = 32;        // group count in the bottleneck blocks
    bool denoising = false; // train against clean targets

    int latent_dim() const { return d_samples / 4; }  // after two 2x poolings
    void validate() const;
    bool operator==(const CaeConfig&) const = default;

    /// Stable digest of the architecture-relevant fields; embedded in
    /// bitstream headers so a block can be matched to its model.
    uint32_t digest() const;
};

/// Latent vectors with their quantization: indexes[i] selects the codebook
/// row nearest to the i-th d-vector of y; y_hat holds the selected rows.
struct LatentBlock {
    TensorPtr y;               // [N, n_feat, d]
    std::vector<int> indexes;  // N * n_feat entries in [0, K)
    TensorPtr y_hat;           // [N, n_feat, d], rows copied from the codebook
};

class CaeModel {
public:
    CaeConfig config;

    Layer enc_in, enc_in_norm;
    nn::ResNeXtBlock enc_rx1, enc_rx2;
    Layer enc_out, enc_out_norm;
    TensorPtr codebook;  // [K, d], uniform [-1, 1] at build
    Layer dec_in, dec_in_norm;
    nn::DeconvResBlock dec_r1, dec_r2;
    Layer dec_out;

    double input_scale = 1.0;  // raw-amplitude divisor fitted on training data
    int trained_epochs = 0;
    uint64_t build_seed = 0;
    std::vector<double> loss_history;  // mean loss per epoch

    static CaeModel build(const CaeConfig& config, uint64_t seed);

    /// x: [N, m_spk, D] in normalized units -> y: [N, n_feat, d].
    TensorPtr encode(Tape* tape, const TensorPtr& x, bool training) const;

    /// Nearest codeword per latent vector (Euclidean, ties to lowest index).
    LatentBlock quantize(const TensorPtr& y) const;

    /// y_hat: [N, n_feat, d] -> x_hat: [N, m_spk, D] in normalized units.
    TensorPtr decode(Tape* tape, const TensorPtr& y_hat, bool training) const;

    /// Training loss: reconstruction + latent-quantization Euclidean terms.
    /// `target` is the reconstruction target (the input itself, or the clean
    /// counterpart in denoising mode). Returns the scalar loss; the graph
    /// routes the quantizer gradient straight through to the encoder and the
    /// latent term's gradient to both the encoder outputs and the codebook.
    TensorPtr loss(Tape* tape, const TensorPtr& x, const TensorPtr& target);

    /// Reconstruction loss with the quantizer bypassed (y_hat := y): the plain
    /// autoencoder objective. Also the differentiable surrogate used by the
    /// end-to-end gradient checks.
    TensorPtr plain_loss(Tape* tape, const TensorPtr& x, const TensorPtr& target);

    /// Full pipeline on raw-unit spikes: scale, encode, quantize, decode,
    /// unscale. Returns the reconstruction plus the codeword indexes.
    TensorPtr reconstruct(const TensorPtr& raw, std::vector<int>* indexes = nullptr) const;

    /// Decompression path: rebuilds raw-unit spikes from codeword indexes
    /// alone, identically to the tail of reconstruct().
    TensorPtr decode_indexes(const std::vector<int>& indexes) const;

    std::vector<TensorPtr> params() const;           // learnable, fixed order
    std::vector<TensorPtr> norm_buffers() const;     // running stats, fixed order
    int64_t encoder_param_count() const;             // includes the codebook
    int64_t decoder_param_count() const;
    /// Encoder-side multiply-accumulates per spike: convolutions plus VQ
    /// distance products, divided by m_spk; normalization/activation/pooling
    /// are excluded (the convention is printed by the stats command).
    int64_t encoder_macs_per_spike() const;
    int64_t decoder_macs_per_spike() const;

    void save(const std::string& path) const;
    static CaeModel load(const std::string& path);
};

/// 99.9th percentile of |amplitude| over a raw spike tensor; the stored
/// input_scale divisor. Always > 0 (falls back to 1 for all-zero data).
double fit_input_scale(const TensorPtr& raw);

struct TrainOptions {
    int epochs = 500;
    int batch_size = 48;
    uint64_t seed = 1;
    double lr = 1e-3;
    bool quantize_latents = true;  // false: train as a plain autoencoder
};

/// ADAM training over (raw spikes, optional clean targets). Fits input_scale,
/// shuffles per epoch, records mean loss per epoch in the model. Throws
/// std::runtime_error on divergence (non-finite loss).
void train(CaeModel& model, const TensorPtr& raw_spikes, const TensorPtr& raw_clean,
           const TrainOptions& opts);

}  // namespace spikezip
