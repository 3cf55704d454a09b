#include "spikezip/layers.hpp"

#include <cmath>

namespace spikezip::nn {

void LayerSpec::validate() const {
    switch (kind) {
        case LayerKind::Conv1d:
        case LayerKind::Deconv1d:
            if (in_channels < 1 || out_channels < 1)
                throw std::invalid_argument("layer: channel counts must be positive");
            if (kernel < 1) throw std::invalid_argument("layer: kernel must be >= 1");
            if (groups < 1) throw std::invalid_argument("layer: groups must be >= 1");
            if (in_channels % groups != 0 || out_channels % groups != 0)
                throw std::invalid_argument("layer: channels not divisible by groups");
            break;
        case LayerKind::Norm:
            if (in_channels < 1 || in_channels != out_channels)
                throw std::invalid_argument("norm: needs equal positive in/out channels");
            break;
        default:
            break;
    }
}

Layer Layer::conv1d(int in_ch, int out_ch, int kernel, int groups, bool bias) {
    Layer l;
    l.spec = {LayerKind::Conv1d, in_ch, out_ch, kernel, groups, bias};
    l.spec.validate();
    l.weight = Tensor::zeros({out_ch, in_ch / groups, kernel}, true);
    if (bias) l.bias = Tensor::zeros({out_ch}, true);
    return l;
}

Layer Layer::deconv1d(int in_ch, int out_ch, int kernel, int groups, bool bias) {
    Layer l;
    l.spec = {LayerKind::Deconv1d, in_ch, out_ch, kernel, groups, bias};
    l.spec.validate();
    l.weight = Tensor::zeros({in_ch, out_ch / groups, kernel}, true);
    if (bias) l.bias = Tensor::zeros({out_ch}, true);
    return l;
}

Layer Layer::norm(int channels) {
    Layer l;
    l.spec = {LayerKind::Norm, channels, channels, 1, 1, false};
    l.spec.validate();
    l.gamma = Tensor::full({channels}, 1.0, true);
    l.beta = Tensor::zeros({channels}, true);
    l.run_mean = Tensor::zeros({channels});
    l.run_var = Tensor::full({channels}, 1.0);
    return l;
}

Layer Layer::relu() {
    Layer l;
    l.spec.kind = LayerKind::Relu;
    return l;
}

Layer Layer::downsample2() {
    Layer l;
    l.spec.kind = LayerKind::Downsample2;
    return l;
}

Layer Layer::upsample2() {
    Layer l;
    l.spec.kind = LayerKind::Upsample2;
    return l;
}

void Layer::init(std::mt19937_64& rng) {
    if (weight) {
        const double fan_in = static_cast<double>(spec.in_channels / spec.groups) * spec.kernel;
        const double bound = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : weight->v) w = dist(rng);
    }
    if (bias)
        for (double& b : bias->v) b = 0.0;
    if (gamma) {
        for (double& x : gamma->v) x = 1.0;
        for (double& x : beta->v) x = 0.0;
        for (double& x : run_mean->v) x = 0.0;
        for (double& x : run_var->v) x = 1.0;
    }
}

TensorPtr Layer::forward(Tape* tape, const TensorPtr& x, bool training) const {
    switch (spec.kind) {
        case LayerKind::Conv1d:
            return nn::conv1d(tape, x, weight, bias, spec.groups);
        case LayerKind::Deconv1d:
            return nn::deconv1d(tape, x, weight, bias, spec.groups);
        case LayerKind::Norm:
            return nn::batch_norm(tape, x, gamma, beta, run_mean, run_var, training);
        case LayerKind::Relu:
            return nn::relu(tape, x);
        case LayerKind::Downsample2:
            return nn::avg_pool2(tape, x);
        case LayerKind::Upsample2:
            return nn::upsample2(tape, x);
    }
    throw std::logic_error("layer: unknown kind");
}

int64_t Layer::param_count() const {
    int64_t n = 0;
    for (const auto& p : params()) n += p->numel();
    return n;
}

int64_t Layer::macs(int64_t L) const {
    switch (spec.kind) {
        case LayerKind::Conv1d:
        case LayerKind::Deconv1d:
            return static_cast<int64_t>(spec.kernel) * L * spec.in_channels * spec.out_channels /
                   spec.groups;
        default:
            return 0;
    }
}

int Layer::out_length(int L) const {
    switch (spec.kind) {
        case LayerKind::Downsample2:
            return L / 2;
        case LayerKind::Upsample2:
            return 2 * L;
        default:
            return L;
    }
}

std::vector<TensorPtr> Layer::params() const {
    std::vector<TensorPtr> out;
    if (weight) out.push_back(weight);
    if (bias) out.push_back(bias);
    if (gamma) out.push_back(gamma);
    if (beta) out.push_back(beta);
    return out;
}

std::vector<TensorPtr> Layer::buffers() const {
    std::vector<TensorPtr> out;
    if (run_mean) out.push_back(run_mean);
    if (run_var) out.push_back(run_var);
    return out;
}

ResNeXtBlock::ResNeXtBlock(int width, int groups) {
    const int half = width / 2;
    reduce = Layer::conv1d(width, half, 1, groups, false);
    n1 = Layer::norm(half);
    conv = Layer::conv1d(half, half, 3, groups, false);
    n2 = Layer::norm(half);
    expand = Layer::conv1d(half, width, 1, groups, false);
    n3 = Layer::norm(width);
}

void ResNeXtBlock::init(std::mt19937_64& rng) {
    reduce.init(rng);
    n1.init(rng);
    conv.init(rng);
    n2.init(rng);
    expand.init(rng);
    n3.init(rng);
}

TensorPtr ResNeXtBlock::forward(Tape* tape, const TensorPtr& x, bool training) const {
    auto h = nn::relu(tape, n1.forward(tape, reduce.forward(tape, x, training), training));
    h = nn::relu(tape, n2.forward(tape, conv.forward(tape, h, training), training));
    h = n3.forward(tape, expand.forward(tape, h, training), training);
    return nn::relu(tape, nn::add(tape, h, x));
}

int64_t ResNeXtBlock::param_count() const {
    return reduce.param_count() + n1.param_count() + conv.param_count() + n2.param_count() +
           expand.param_count() + n3.param_count();
}

int64_t ResNeXtBlock::macs(int64_t L) const {
    return reduce.macs(L) + conv.macs(L) + expand.macs(L);
}

std::vector<TensorPtr> ResNeXtBlock::params() const {
    std::vector<TensorPtr> out;
    for (const Layer* l : {&reduce, &n1, &conv, &n2, &expand, &n3})
        for (auto& p : l->params()) out.push_back(p);
    return out;
}

std::vector<TensorPtr> ResNeXtBlock::buffers() const {
    std::vector<TensorPtr> out;
    for (const Layer* l : {&n1, &n2, &n3})
        for (auto& b : l->buffers()) out.push_back(b);
    return out;
}

DeconvResBlock::DeconvResBlock(int width) {
    d1 = Layer::deconv1d(width, width, 3, 1, false);
    n1 = Layer::norm(width);
    d2 = Layer::deconv1d(width, width, 3, 1, false);
    n2 = Layer::norm(width);
}

void DeconvResBlock::init(std::mt19937_64& rng) {
    d1.init(rng);
    n1.init(rng);
    d2.init(rng);
    n2.init(rng);
}

TensorPtr DeconvResBlock::forward(Tape* tape, const TensorPtr& x, bool training) const {
    auto h = nn::relu(tape, n1.forward(tape, d1.forward(tape, x, training), training));
    h = n2.forward(tape, d2.forward(tape, h, training), training);
    return nn::relu(tape, nn::add(tape, h, x));
}

int64_t DeconvResBlock::param_count() const {
    return d1.param_count() + n1.param_count() + d2.param_count() + n2.param_count();
}

int64_t DeconvResBlock::macs(int64_t L) const { return d1.macs(L) + d2.macs(L); }

std::vector<TensorPtr> DeconvResBlock::params() const {
    std::vector<TensorPtr> out;
    for (const Layer* l : {&d1, &n1, &d2, &n2})
        for (auto& p : l->params()) out.push_back(p);
    return out;
}

std::vector<TensorPtr> DeconvResBlock::buffers() const {
    std::vector<TensorPtr> out;
    for (const Layer* l : {&n1, &n2})
        for (auto& b : l->buffers()) out.push_back(b);
    return out;
}

int64_t param_count(const std::vector<Layer>& layers) {
    int64_t n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
}

}  // namespace spikezip::nn
