#include "spikezip/cae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spikezip/io_util.hpp"

namespace spikezip {

namespace {
bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }
constexpr uint16_t kCheckpointVersion = 1;
}  // namespace

void CaeConfig::validate() const {
    if (m_spk < 1) throw std::invalid_argument("config: m_spk must be >= 1");
    if (n_feat < 1) throw std::invalid_argument("config: n_feat must be >= 1");
    if (d_samples < 4 || d_samples % 4 != 0)
        throw std::invalid_argument("config: d_samples must be a positive multiple of 4");
    if (!is_pow2(k_codewords))
        throw std::invalid_argument("config: k_codewords must be a power of two");
    if (w_bits < 10 || w_bits > 16)
        throw std::invalid_argument("config: w_bits must be in [10, 16]");
    if (groups < 1) throw std::invalid_argument("config: groups must be >= 1");
    if (width < 2 || width % (2 * groups) != 0)
        throw std::invalid_argument("config: width must be a positive multiple of 2*groups");
}

uint32_t CaeConfig::digest() const {
    io::ByteWriter w;
    for (int f : {m_spk, d_samples, w_bits, n_feat, k_codewords, width, groups})
        w.u32(static_cast<uint32_t>(f));
    w.u8(denoising ? 1 : 0);
    return io::crc32(w.bytes);
}

CaeModel CaeModel::build(const CaeConfig& config, uint64_t seed) {
    config.validate();
    CaeModel m;
    m.config = config;
    m.build_seed = seed;

    m.enc_in = Layer::conv1d(config.m_spk, config.width, 1, 1, false);
    m.enc_in_norm = Layer::norm(config.width);
    m.enc_rx1 = nn::ResNeXtBlock(config.width, config.groups);
    m.enc_rx2 = nn::ResNeXtBlock(config.width, config.groups);
    m.enc_out = Layer::conv1d(config.width, config.n_feat, 1, 1, false);
    m.enc_out_norm = Layer::norm(config.n_feat);
    m.codebook = Tensor::zeros({config.k_codewords, config.latent_dim()}, true);
    m.dec_in = Layer::deconv1d(config.n_feat, config.width, 1, 1, false);
    m.dec_in_norm = Layer::norm(config.width);
    m.dec_r1 = nn::DeconvResBlock(config.width);
    m.dec_r2 = nn::DeconvResBlock(config.width);
    m.dec_out = Layer::deconv1d(config.width, config.m_spk, 1, 1, true);

    std::mt19937_64 rng(seed);
    m.enc_in.init(rng);
    m.enc_in_norm.init(rng);
    m.enc_rx1.init(rng);
    m.enc_rx2.init(rng);
    m.enc_out.init(rng);
    m.enc_out_norm.init(rng);
    std::uniform_real_distribution<double> cb(-1.0, 1.0);
    for (double& c : m.codebook->v) c = cb(rng);
    m.dec_in.init(rng);
    m.dec_in_norm.init(rng);
    m.dec_r1.init(rng);
    m.dec_r2.init(rng);
    m.dec_out.init(rng);
    return m;
}

TensorPtr CaeModel::encode(Tape* tape, const TensorPtr& x, bool training) const {
    if (x->ndim() != 3 || x->dim(1) != config.m_spk || x->dim(2) != config.d_samples)
        throw std::invalid_argument("encode: expected [N, " + std::to_string(config.m_spk) +
                                    ", " + std::to_string(config.d_samples) + "], got " +
                                    Tensor::shape_str(x->shape));
    auto h = enc_in.forward(tape, x, training);
    h = nn::relu(tape, enc_in_norm.forward(tape, h, training));
    h = enc_rx1.forward(tape, h, training);
    h = nn::avg_pool2(tape, h);
    h = enc_rx2.forward(tape, h, training);
    h = nn::avg_pool2(tape, h);
    h = enc_out.forward(tape, h, training);
    return enc_out_norm.forward(tape, h, training);  // no activation on the latent
}

LatentBlock CaeModel::quantize(const TensorPtr& y) const {
    const int d = config.latent_dim();
    const int K = config.k_codewords;
    if (!codebook || codebook->numel() == 0) throw std::invalid_argument("quantize: empty codebook");
    if (y->ndim() != 3 || y->dim(1) != config.n_feat || y->dim(2) != d)
        throw std::invalid_argument("quantize: latent shape mismatch " + Tensor::shape_str(y->shape));
    if (!y->all_finite()) throw std::invalid_argument("quantize: non-finite latents");

    LatentBlock out;
    out.y = y;
    const int64_t rows = y->numel() / d;
    out.indexes.resize(rows);
    out.y_hat = Tensor::zeros(y->shape);
    for (int64_t r = 0; r < rows; ++r) {
        const double* vec = y->v.data() + r * d;
        int best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int kk = 0; kk < K; ++kk) {
            const double* row = codebook->v.data() + static_cast<int64_t>(kk) * d;
            double d2 = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = vec[j] - row[j];
                d2 += diff * diff;
            }
            if (d2 < best_d2) {  // strict: ties keep the lowest index
                best_d2 = d2;
                best = kk;
            }
        }
        out.indexes[r] = best;
        std::copy_n(codebook->v.data() + static_cast<int64_t>(best) * d, d,
                    out.y_hat->v.data() + r * d);
    }
    return out;
}

TensorPtr CaeModel::decode(Tape* tape, const TensorPtr& y_hat, bool training) const {
    if (y_hat->ndim() != 3 || y_hat->dim(1) != config.n_feat ||
        y_hat->dim(2) != config.latent_dim())
        throw std::invalid_argument("decode: expected [N, " + std::to_string(config.n_feat) +
                                    ", " + std::to_string(config.latent_dim()) + "], got " +
                                    Tensor::shape_str(y_hat->shape));
    auto h = dec_in.forward(tape, y_hat, training);
    h = nn::relu(tape, dec_in_norm.forward(tape, h, training));
    h = nn::upsample2(tape, h);
    h = dec_r1.forward(tape, h, training);
    h = nn::upsample2(tape, h);
    h = dec_r2.forward(tape, h, training);
    return dec_out.forward(tape, h, training);  // linear output with bias
}

TensorPtr CaeModel::loss(Tape* tape, const TensorPtr& x, const TensorPtr& target) {
    auto y = encode(tape, x, true);
    auto lb = quantize(y);
    // Straight-through: forward uses the codeword values, backward copies the
    // decoder-input gradient to the encoder output unchanged.
    std::vector<double> offset(y->numel());
    for (int64_t i = 0; i < y->numel(); ++i) offset[i] = lb.y_hat->v[i] - y->v[i];
    auto y_st = nn::add_offset(tape, y, offset);
    auto x_hat = decode(tape, y_st, true);
    auto rec = nn::mse(tape, x_hat, target);
    // Latent Euclidean term: pulls the selected codewords toward the encoder
    // outputs and the encoder outputs toward the codewords.
    const int d = config.latent_dim();
    auto rows = nn::gather_rows(tape, codebook, lb.indexes);
    auto y_flat = nn::reshape(tape, y, {static_cast<int>(lb.indexes.size()), d});
    auto commit = nn::mse(tape, y_flat, rows);
    return nn::add(tape, rec, commit);
}

TensorPtr CaeModel::plain_loss(Tape* tape, const TensorPtr& x, const TensorPtr& target) {
    auto y = encode(tape, x, true);
    auto x_hat = decode(tape, y, true);
    return nn::mse(tape, x_hat, target);
}

TensorPtr CaeModel::reconstruct(const TensorPtr& raw, std::vector<int>* indexes) const {
    auto scaled = Tensor::zeros(raw->shape);
    for (int64_t i = 0; i < raw->numel(); ++i) scaled->v[i] = raw->v[i] / input_scale;
    auto y = encode(nullptr, scaled, false);
    auto lb = quantize(y);
    if (indexes) *indexes = lb.indexes;
    auto x_hat = decode(nullptr, lb.y_hat, false);
    for (double& v : x_hat->v) v *= input_scale;
    return x_hat;
}

TensorPtr CaeModel::decode_indexes(const std::vector<int>& indexes) const {
    const int nf = config.n_feat;
    const int d = config.latent_dim();
    if (indexes.empty() || indexes.size() % static_cast<size_t>(nf) != 0)
        throw std::invalid_argument("index stream does not divide into spikes");
    const int n = static_cast<int>(indexes.size()) / nf;
    auto y_hat = Tensor::zeros({n, nf, d});
    for (size_t i = 0; i < indexes.size(); ++i) {
        if (indexes[i] < 0 || indexes[i] >= config.k_codewords)
            throw std::invalid_argument("codeword index out of range");
        const double* row = codebook->v.data() + static_cast<size_t>(indexes[i]) * d;
        std::copy(row, row + d, y_hat->v.data() + i * static_cast<size_t>(d));
    }
    auto x_hat = decode(nullptr, y_hat, false);
    for (double& v : x_hat->v) v *= input_scale;
    return x_hat;
}

std::vector<TensorPtr> CaeModel::params() const {
    std::vector<TensorPtr> out;
    auto append = [&out](const std::vector<TensorPtr>& ps) {
        out.insert(out.end(), ps.begin(), ps.end());
    };
    append(enc_in.params());
    append(enc_in_norm.params());
    append(enc_rx1.params());
    append(enc_rx2.params());
    append(enc_out.params());
    append(enc_out_norm.params());
    out.push_back(codebook);
    append(dec_in.params());
    append(dec_in_norm.params());
    append(dec_r1.params());
    append(dec_r2.params());
    append(dec_out.params());
    return out;
}

std::vector<TensorPtr> CaeModel::norm_buffers() const {
    std::vector<TensorPtr> out;
    auto append = [&out](const std::vector<TensorPtr>& bs) {
        out.insert(out.end(), bs.begin(), bs.end());
    };
    append(enc_in_norm.buffers());
    append(enc_rx1.buffers());
    append(enc_rx2.buffers());
    append(enc_out_norm.buffers());
    append(dec_in_norm.buffers());
    append(dec_r1.buffers());
    append(dec_r2.buffers());
    return out;
}

int64_t CaeModel::encoder_param_count() const {
    return enc_in.param_count() + enc_in_norm.param_count() + enc_rx1.param_count() +
           enc_rx2.param_count() + enc_out.param_count() + enc_out_norm.param_count() +
           codebook->numel();
}

int64_t CaeModel::decoder_param_count() const {
    return dec_in.param_count() + dec_in_norm.param_count() + dec_r1.param_count() +
           dec_r2.param_count() + dec_out.param_count();
}

int64_t CaeModel::encoder_macs_per_spike() const {
    const int D = config.d_samples;
    const int64_t vq = static_cast<int64_t>(config.n_feat) * config.k_codewords *
                       config.latent_dim();
    const int64_t total = enc_in.macs(D) + enc_rx1.macs(D) + enc_rx2.macs(D / 2) +
                          enc_out.macs(D / 4) + vq;
    return total / config.m_spk;
}

int64_t CaeModel::decoder_macs_per_spike() const {
    const int D = config.d_samples;
    const int64_t total = dec_in.macs(D / 4) + dec_r1.macs(D / 2) + dec_r2.macs(D) +
                          dec_out.macs(D);
    return total / config.m_spk;
}

void CaeModel::save(const std::string& path) const {
    io::ByteWriter w;
    w.magic("CAE1");
    w.u16(kCheckpointVersion);
    w.u32(static_cast<uint32_t>(config.m_spk));
    w.u32(static_cast<uint32_t>(config.d_samples));
    w.u32(static_cast<uint32_t>(config.w_bits));
    w.u32(static_cast<uint32_t>(config.n_feat));
    w.u32(static_cast<uint32_t>(config.k_codewords));
    w.u32(static_cast<uint32_t>(config.width));
    w.u32(static_cast<uint32_t>(config.groups));
    w.u8(config.denoising ? 1 : 0);
    w.f64(input_scale);
    w.u32(static_cast<uint32_t>(trained_epochs));
    w.u64(build_seed);
    for (const auto& p : params())
        for (double v : p->v) w.f32(static_cast<float>(v));
    for (const auto& b : norm_buffers())
        for (double v : b->v) w.f32(static_cast<float>(v));
    w.u32(static_cast<uint32_t>(loss_history.size()));
    for (double l : loss_history) w.f32(static_cast<float>(l));
    io::write_file_with_crc(path, w);
}

CaeModel CaeModel::load(const std::string& path) {
    auto r = io::read_file_with_crc(path, "checkpoint");
    r.expect_magic("CAE1", "checkpoint");
    const uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    CaeConfig c;
    c.m_spk = static_cast<int>(r.u32());
    c.d_samples = static_cast<int>(r.u32());
    c.w_bits = static_cast<int>(r.u32());
    c.n_feat = static_cast<int>(r.u32());
    c.k_codewords = static_cast<int>(r.u32());
    c.width = static_cast<int>(r.u32());
    c.groups = static_cast<int>(r.u32());
    c.denoising = r.u8() != 0;
    const double scale = r.f64();
    const int epochs = static_cast<int>(r.u32());
    const uint64_t seed = r.u64();

    CaeModel m = build(c, seed);
    m.input_scale = scale;
    m.trained_epochs = epochs;
    for (auto& p : m.params())
        for (double& v : p->v) v = static_cast<double>(r.f32());
    for (auto& b : m.norm_buffers())
        for (double& v : b->v) v = static_cast<double>(r.f32());
    const uint32_t hist = r.u32();
    m.loss_history.resize(hist);
    for (uint32_t i = 0; i < hist; ++i) m.loss_history[i] = static_cast<double>(r.f32());
    return m;
}

double fit_input_scale(const TensorPtr& raw) {
    if (!raw || raw->numel() == 0) return 1.0;
    std::vector<double> mags(raw->v.size());
    for (size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(raw->v[i]);
    std::sort(mags.begin(), mags.end());
    const auto n = static_cast<int64_t>(mags.size());
    int64_t idx = static_cast<int64_t>(std::ceil(0.999 * static_cast<double>(n))) - 1;
    idx = std::clamp<int64_t>(idx, 0, n - 1);
    const double p = mags[static_cast<size_t>(idx)];
    return p > 0.0 ? p : 1.0;
}

void train(CaeModel& model, const TensorPtr& raw_spikes, const TensorPtr& raw_clean,
           const TrainOptions& opts) {
    if (!raw_spikes || raw_spikes->ndim() != 3 || raw_spikes->dim(0) == 0)
        throw std::invalid_argument("train: empty dataset");
    if (raw_spikes->dim(1) != model.config.m_spk ||
        raw_spikes->dim(2) != model.config.d_samples)
        throw std::invalid_argument("train: dataset shape mismatches the model config");
    if (model.config.denoising && !raw_clean)
        throw std::invalid_argument("train: denoising mode requires clean targets");
    if (raw_clean && raw_clean->shape != raw_spikes->shape)
        throw std::invalid_argument("train: clean targets must match the input shape");
    if (opts.epochs < 0 || opts.batch_size < 1)
        throw std::invalid_argument("train: bad epochs/batch size");

    const int n = raw_spikes->dim(0);
    const int M = model.config.m_spk, D = model.config.d_samples;
    model.input_scale = fit_input_scale(raw_spikes);
    const double inv = 1.0 / model.input_scale;
    const bool denoise = model.config.denoising;

    nn::Adam opt(model.params(), opts.lr);
    std::mt19937_64 rng(opts.seed);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += opts.batch_size) {
            const int b = std::min(opts.batch_size, n - start);
            auto xb = Tensor::zeros({b, M, D});
            auto tb = denoise ? Tensor::zeros({b, M, D}) : xb;
            for (int i = 0; i < b; ++i) {
                const int64_t src = static_cast<int64_t>(order[static_cast<size_t>(start + i)]) * M * D;
                for (int64_t j = 0; j < static_cast<int64_t>(M) * D; ++j) {
                    xb->v[static_cast<int64_t>(i) * M * D + j] = raw_spikes->v[src + j] * inv;
                    if (denoise)
                        tb->v[static_cast<int64_t>(i) * M * D + j] = raw_clean->v[src + j] * inv;
                }
            }
            Tape tape;
            TensorPtr l;
            // Inputs were validated before the loop, so an invalid-argument
            // error escaping a step means the parameters blew up.
            try {
                l = opts.quantize_latents ? model.loss(&tape, xb, tb)
                                          : model.plain_loss(&tape, xb, tb);
            } catch (const std::invalid_argument& e) {
                throw DivergenceError("training diverged: " + std::string(e.what()) +
                                      " at epoch " + std::to_string(epoch));
            }
            if (!std::isfinite(l->v[0]))
                throw DivergenceError("training diverged: non-finite loss at epoch " +
                                      std::to_string(epoch));
            opt.zero_grad();
            tape.backward(l);
            opt.step();
            loss_sum += l->item();
            ++batches;
        }
        model.loss_history.push_back(loss_sum / std::max(1, batches));
        ++model.trained_epochs;
    }
}

}  // namespace spikezip
