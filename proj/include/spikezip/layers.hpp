#pragma once

#include <random>

#include "spikezip/ops.hpp"
#include "spikezip/tensor.hpp"

namespace spikezip::nn {

enum class LayerKind { Conv1d, Deconv1d, Norm, Relu, Downsample2, Upsample2 };

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int groups = 1;
    bool bias = false;

    void validate() const;
};

/// One network layer: a spec plus whatever parameters/buffers its kind needs.
/// Parameter-free kinds (relu, downsample2, upsample2) own no tensors.
class Layer {
public:
    LayerSpec spec;
    TensorPtr weight;    // conv/deconv
    TensorPtr bias;      // conv/deconv, optional
    TensorPtr gamma;     // norm
    TensorPtr beta;      // norm
    TensorPtr run_mean;  // norm buffer
    TensorPtr run_var;   // norm buffer

    static Layer conv1d(int in_ch, int out_ch, int kernel, int groups, bool bias);
    static Layer deconv1d(int in_ch, int out_ch, int kernel, int groups, bool bias);
    static Layer norm(int channels);
    static Layer relu();
    static Layer downsample2();
    static Layer upsample2();

    /// He-uniform weights (bound sqrt(6/fan_in), fan_in = in/groups * kernel),
    /// zero biases, gamma=1/beta=0, running stats mean 0 / var 1.
    void init(std::mt19937_64& rng);

    TensorPtr forward(Tape* tape, const TensorPtr& x, bool training) const;

    int64_t param_count() const;
    /// Multiply-accumulates at input temporal length L. Convolutions count
    /// kernel * L * in * out / groups; normalization, activation, pooling and
    /// upsampling count zero.
    int64_t macs(int64_t L) const;
    int out_length(int L) const;

    std::vector<TensorPtr> params() const;   // learnable tensors, fixed order
    std::vector<TensorPtr> buffers() const;  // running statistics
};

/// Residual bottleneck with grouped convolutions: 1x1 reduce to width/2,
/// 1x3 at width/2, 1x1 expand back, a norm after each convolution, and the
/// identity shortcut added before the final activation.
class ResNeXtBlock {
public:
    Layer reduce, n1, conv, n2, expand, n3;

    ResNeXtBlock() = default;
    ResNeXtBlock(int width, int groups);

    void init(std::mt19937_64& rng);
    TensorPtr forward(Tape* tape, const TensorPtr& x, bool training) const;
    int64_t param_count() const;
    int64_t macs(int64_t L) const;
    std::vector<TensorPtr> params() const;
    std::vector<TensorPtr> buffers() const;
};

/// Residual pair of 1x3 transposed convolutions at constant width with a norm
/// after each, identity shortcut added before the final activation.
class DeconvResBlock {
public:
    Layer d1, n1, d2, n2;

    DeconvResBlock() = default;
    explicit DeconvResBlock(int width);

    void init(std::mt19937_64& rng);
    TensorPtr forward(Tape* tape, const TensorPtr& x, bool training) const;
    int64_t param_count() const;
    int64_t macs(int64_t L) const;
    std::vector<TensorPtr> params() const;
    std::vector<TensorPtr> buffers() const;
};

int64_t param_count(const std::vector<Layer>& layers);

}  // namespace spikezip::nn
