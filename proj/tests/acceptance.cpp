// Release gate: twelve end-to-end checks covering parameter accounting,
// gradient correctness, rate-quality behaviour, codeword usage, sorting
// robustness, denoising, entropy coding, formula identities, quantizer
// equivalence, spatial structure, and MAC accounting.  Prints one verdict
// line per check and exits nonzero if any fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grad_check.hpp"
#include "spikezip/baselines.hpp"
#include "spikezip/cae.hpp"
#include "spikezip/cli.hpp"
#include "spikezip/entropy.hpp"
#include "spikezip/evaluation.hpp"
#include "spikezip/spike_data.hpp"

using namespace spikezip;
using testutil::grad_check;
using testutil::rand_tensor;
using testutil::rand_tensor_off_kink;

namespace {

struct Outcome {
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

std::string fmt(double v, int prec = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
}

std::string fmt_sci(double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(1) << v;
    return s.str();
}

/// Generates a labeled synthetic recording and cuts aligned windows from it.
SpikeBatch synth_batch(int templates, int channels, int d, double sigma, double duration_s,
                       double rate_hz, uint64_t seed) {
    GenOptions g;
    g.noise_sigma = sigma;
    g.duration_seconds = duration_s;
    g.firing_rates_hz = {rate_hz};
    g.channels = channels;
    g.seed = seed;
    auto seq = generate(make_templates(templates, d), g);
    auto batch = extract_align(seq, detect_events(seq, d), d);
    label_events(batch, seq);
    return batch;
}

/// Desk-scale architecture: same topology as the full model, narrower trunk.
CaeConfig desk_config(int m_spk, int d, int n_feat, int k) {
    CaeConfig c;
    c.m_spk = m_spk;
    c.d_samples = d;
    c.n_feat = n_feat;
    c.k_codewords = k;
    c.width = 32;
    c.groups = 4;
    c.w_bits = 16;
    return c;
}

CaeModel train_on(CaeConfig config, const nn::TensorPtr& spikes, const nn::TensorPtr& clean,
                  int epochs, uint64_t seed) {
    auto model = CaeModel::build(config, seed);
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = 48;
    t.seed = seed + 1;
    train(model, spikes, clean, t);
    return model;
}

// ---------------------------------------------------------------------------
// 1. Exact parameter accounting at the published scale.
Outcome check_parameter_counts() {
    Outcome o{"parameter accounting at full scale"};
    CaeConfig c;  // defaults: M_spk=4, D=48, N_feat=16, K=256, width 256, groups 32
    auto model = CaeModel::build(c, 1);
    const int64_t enc = model.encoder_param_count();
    const int64_t dec = model.decoder_param_count();
    o.pass = enc == 17952 && dec == 794116;
    o.detail = "encoder+vq " + std::to_string(enc) + ", decoder " + std::to_string(dec) +
               " (expected 17952 / 794116, tolerance 0)";
    return o;
}

// ---------------------------------------------------------------------------
// 2. Central finite differences agree with the analytic gradients for every
//    layer kind and for the end-to-end loss, across 20 seeds, within a minute.
Outcome check_gradients() {
    Outcome o{"analytic gradients vs central differences"};
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    auto track = [&worst](double err) { worst = std::max(worst, err); };

    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);

        {  // grouped convolution with bias
            auto layer = nn::Layer::conv1d(4, 6, 3, 2, true);
            layer.init(rng);
            auto x = rand_tensor({2, 4, 8}, rng, true);
            auto target = rand_tensor({2, 6, 8}, rng, false);
            std::vector<nn::TensorPtr> leaves = layer.params();
            leaves.push_back(x);
            track(grad_check(
                [&](nn::Tape* t) { return nn::mse(t, layer.forward(t, x, true), target); },
                leaves));
        }
        {  // grouped transposed convolution with bias
            auto layer = nn::Layer::deconv1d(4, 6, 3, 2, true);
            layer.init(rng);
            auto x = rand_tensor({2, 4, 8}, rng, true);
            auto target = rand_tensor({2, 6, 8}, rng, false);
            std::vector<nn::TensorPtr> leaves = layer.params();
            leaves.push_back(x);
            track(grad_check(
                [&](nn::Tape* t) { return nn::mse(t, layer.forward(t, x, true), target); },
                leaves));
        }
        {  // normalization in training mode (batch statistics)
            auto layer = nn::Layer::norm(5);
            layer.init(rng);
            auto x = rand_tensor({3, 5, 7}, rng, true);
            auto target = rand_tensor({3, 5, 7}, rng, false);
            std::vector<nn::TensorPtr> leaves = layer.params();
            leaves.push_back(x);
            track(grad_check(
                [&](nn::Tape* t) { return nn::mse(t, layer.forward(t, x, true), target); },
                leaves));
        }
        {  // activation, away from the kink
            auto layer = nn::Layer::relu();
            auto x = rand_tensor_off_kink({2, 3, 6}, rng, true);
            auto target = rand_tensor({2, 3, 6}, rng, false);
            track(grad_check(
                [&](nn::Tape* t) { return nn::mse(t, layer.forward(t, x, true), target); },
                {x}));
        }
        {  // average pooling by two
            auto layer = nn::Layer::downsample2();
            auto x = rand_tensor({2, 3, 8}, rng, true);
            auto target = rand_tensor({2, 3, 4}, rng, false);
            track(grad_check(
                [&](nn::Tape* t) { return nn::mse(t, layer.forward(t, x, true), target); },
                {x}));
        }
        {  // nearest-neighbor upsampling by two
            auto layer = nn::Layer::upsample2();
            auto x = rand_tensor({2, 3, 4}, rng, true);
            auto target = rand_tensor({2, 3, 8}, rng, false);
            track(grad_check(
                [&](nn::Tape* t) { return nn::mse(t, layer.forward(t, x, true), target); },
                {x}));
        }
        {  // end-to-end loss with the quantizer assignments frozen: plain
            // reconstruction plus the latent Euclidean term, the
            // differentiable surrogate of the training objective
            auto m = CaeModel::build(CaeConfig{1, 8, 16, 2, 8, 4, 1, false}, 50 + seed);
            auto x = rand_tensor({2, 1, 8}, rng, false);
            auto target = rand_tensor({2, 1, 8}, rng, false);
            const auto frozen = m.quantize(m.encode(nullptr, x, true)).indexes;
            const int d = m.config.latent_dim();
            auto build = [&](nn::Tape* t) {
                auto y = m.encode(t, x, true);
                auto xh = m.decode(t, y, true);
                auto rows = nn::gather_rows(t, m.codebook, frozen);
                auto yf = nn::reshape(t, y, {static_cast<int>(frozen.size()), d});
                return nn::add(t, nn::mse(t, xh, target), nn::mse(t, yf, rows));
            };
            // Gradient coordinates below 3e-5 are compared absolutely: central
            // differences through the deep graph carry that much cancellation
            // noise regardless of the analytic value.
            track(grad_check(build, m.params(), 1e-5, 3e-5));
        }
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.pass = worst < 1e-4 && elapsed < 60.0;
    o.detail = "worst relative error " + fmt_sci(worst) + " over 20 seeds in " +
               fmt(elapsed, 1) + " s (require < 1e-4 and < 60 s)";
    return o;
}

// ---------------------------------------------------------------------------
// Shared artifacts for the rate-quality checks (3 and 4).
struct SweepArtifacts {
    int spike_count = 0;
    int epochs = 0;
    std::vector<RateQualityPoint> points;
};

SweepArtifacts run_desk_sweep() {
    SweepArtifacts art;
    auto batch = synth_batch(2, 1, 64, 0.1, 120.0, 10.0, 101);
    art.spike_count = batch.count();
    SweepOptions opts;
    opts.baseline_ms = {1, 2, 4, 8, 16};
    opts.cae_configs = {desk_config(1, 64, 4, 128)};
    opts.repeats = 5;
    opts.seed = 1;
    opts.w_bits = 16;
    art.epochs = 60;
    opts.train.epochs = art.epochs;
    opts.train.batch_size = 48;
    opts.train.lr = 1e-3;
    art.points = sweep(batch, opts);
    return art;
}

const RateQualityPoint* find_cae_point(const SweepArtifacts& art) {
    for (const auto& p : art.points)
        if (p.method == "cae") return &p;
    return nullptr;
}

// 3. The desk-scale autoencoder clears 8 dB at a >= 20x entropy-based ratio.
Outcome check_rate_quality(const SweepArtifacts& art) {
    Outcome o{"desk-scale rate-quality floor"};
    const auto* cae = find_cae_point(art);
    if (!cae) {
        o.detail = "no autoencoder point in the sweep";
        return o;
    }
    o.pass = art.spike_count >= 2000 && art.epochs <= 300 && cae->sndr_db >= 8.0 &&
             cae->cr >= 20.0;
    o.detail = fmt(cae->sndr_db) + " dB at " + fmt(cae->cr, 1) + "x (need >= 8 dB at >= 20x; " +
               std::to_string(art.spike_count) + " spikes, " + std::to_string(art.epochs) +
               " epochs, 5 repeats)";
    return o;
}

// 4. At every autoencoder ratio above 16x, the autoencoder beats each linear
//    baseline at its nearest ratio at or below, on >= 4 of the 5 repeats.
Outcome check_baseline_dominance(const SweepArtifacts& art) {
    Outcome o{"autoencoder dominance over linear baselines"};
    const auto* cae = find_cae_point(art);
    if (!cae) {
        o.detail = "no autoencoder point in the sweep";
        return o;
    }
    const char* methods[3] = {"pca", "dct", "dwt"};
    int held = 0, considered = 0;
    for (int r = 0; r < cae->repeats; ++r) {
        if (cae->cr_samples[static_cast<size_t>(r)] <= 16.0) continue;
        ++considered;
        bool beats_all = true;
        for (const char* method : methods) {
            const RateQualityPoint* best = nullptr;
            for (const auto& p : art.points) {
                if (p.method != method) continue;
                if (p.cr_samples[static_cast<size_t>(r)] >
                    cae->cr_samples[static_cast<size_t>(r)])
                    continue;
                if (!best || p.cr_samples[static_cast<size_t>(r)] >
                                 best->cr_samples[static_cast<size_t>(r)])
                    best = &p;
            }
            if (best && cae->sndr_samples[static_cast<size_t>(r)] <=
                            best->sndr_samples[static_cast<size_t>(r)])
                beats_all = false;
        }
        if (beats_all) ++held;
    }
    o.pass = considered == cae->repeats && held >= 4;
    o.detail = "strict ordering held on " + std::to_string(held) + "/" +
               std::to_string(considered) + " repeats (need >= 4/5)";
    return o;
}

// ---------------------------------------------------------------------------
// Shared artifacts for the codeword-usage checks (5, reused by 8).
struct UniformityArtifacts {
    SpikeBatch batch;
    std::vector<int> ks = {32, 64, 128};
    std::vector<CaeModel> models;            // parallel to ks
    std::vector<CodewordStats> stats;        // parallel to ks
    int epochs = 200;
};

UniformityArtifacts run_uniformity_trainings() {
    // Uniform codebook usage needs a waveform population that actually fills
    // the latent space: many units, a wide amplitude range, slow gain drift,
    // overlapping pairs, and sub-threshold events (extracted at ground-truth
    // times rather than by threshold crossing).
    UniformityArtifacts art;
    const auto templates = make_templates(8, 16);
    GenOptions g;
    g.noise_sigma = 0.3;
    g.duration_seconds = 200.0;
    g.firing_rates_hz = {4.0};
    g.amplitudes = {0.6, 0.85, 1.1, 1.35, 1.6, 0.7, 0.95, 1.2};
    g.seed = 41;
    auto seq = generate(templates, g);
    seq = drift(seq, 1.35, 0.6);
    art.batch = extract_align(seq, seq.truth_times, 16);
    art.batch = overlap(art.batch, templates, 0.3, 42);

    std::vector<std::future<CaeModel>> jobs;
    for (size_t i = 0; i < art.ks.size(); ++i) {
        const int k = art.ks[i];
        jobs.push_back(std::async(std::launch::async, [&art, k, i] {
            CaeConfig c;
            c.m_spk = 1;
            c.d_samples = 16;
            c.n_feat = 16;
            c.k_codewords = k;
            c.width = 32;
            c.groups = 4;
            return train_on(c, art.batch.spikes, nullptr, art.epochs,
                            300 + static_cast<uint64_t>(i));
        }));
    }
    for (auto& j : jobs) art.models.push_back(j.get());
    for (const auto& m : art.models) art.stats.push_back(codeword_stats(m, art.batch.spikes));
    return art;
}

// 5. Trained codeword-index entropy stays within 90% of the uniform maximum.
Outcome check_codeword_uniformity(const UniformityArtifacts& art) {
    Outcome o{"codeword usage uniformity"};
    o.pass = true;
    for (size_t i = 0; i < art.ks.size(); ++i) {
        const double max_bits = std::log2(static_cast<double>(art.ks[i]));
        const double ratio = art.stats[i].entropy_bits / max_bits;
        if (ratio < 0.90) o.pass = false;
        o.detail += (i ? ", " : "") + fmt(art.stats[i].entropy_bits) + "/" + fmt(max_bits, 0) +
                    " bits (K=" + std::to_string(art.ks[i]) + ")";
    }
    o.detail += " — need >= 0.90 of log2 K each";
    return o;
}

// ---------------------------------------------------------------------------
// 6. Sorting accuracy survives compression at a ~64x operating point.
Outcome check_sorting_robustness() {
    Outcome o{"sorting accuracy under compression"};
    auto batch = synth_batch(3, 1, 64, 0.05, 100.0, 4.0, 61);
    const int n = batch.count();
    auto [train_half, test_half] = split_first_last(batch, n / 2, n - n / 2);

    auto config = desk_config(1, 64, 4, 16);  // 4 latents at <= 4 bits: >= 64x
    auto model = train_on(config, train_half.spikes, nullptr, 80, 601);

    std::vector<int> indexes;
    auto recon = model.reconstruct(test_half.spikes, &indexes);
    const auto hist = SymbolHistogram::from_indexes(indexes, config.k_codewords);
    const double bits = std::max(entropy(hist), 0.01);
    const double cr = compression_ratio(config, bits);

    // Score only spikes with a ground-truth label, as the sort-eval command does.
    const auto raw = to_matrix(test_half.spikes);
    const auto compressed = to_matrix(recon);
    std::vector<int> labels;
    std::vector<int> keep;
    for (size_t i = 0; i < test_half.labels.size(); ++i)
        if (test_half.labels[i] >= 0) {
            keep.push_back(static_cast<int>(i));
            labels.push_back(test_half.labels[i]);
        }
    Eigen::MatrixXd raw_kept(keep.size(), raw.cols());
    Eigen::MatrixXd compressed_kept(keep.size(), raw.cols());
    for (size_t r = 0; r < keep.size(); ++r) {
        raw_kept.row(static_cast<Eigen::Index>(r)) = raw.row(keep[r]);
        compressed_kept.row(static_cast<Eigen::Index>(r)) = compressed.row(keep[r]);
    }

    const double before = sorting_accuracy(raw_kept, labels, 3);
    const double after = sorting_accuracy(compressed_kept, labels, 3);

    o.pass = cr >= 56.0 && (before - after) <= 0.05;
    o.detail = "accuracy " + fmt(before, 3) + " -> " + fmt(after, 3) + " at " + fmt(cr, 1) +
               "x (drop " + fmt(std::max(0.0, before - after) * 100, 1) +
               " pp, allow 5 pp at ~64x)";
    return o;
}

// ---------------------------------------------------------------------------
// 7. Training against clean targets recovers >= 1 dB on jittered inputs.
Outcome check_denoising_gain() {
    Outcome o{"denoising training gain on jittered spikes"};
    auto batch = synth_batch(2, 1, 64, 0.05, 80.0, 6.0, 71);
    const int n = batch.count();
    auto [train_half, test_half] = split_first_last(batch, n / 2, n - n / 2);

    const auto jit_train = jitter(train_half, 8, 701);
    const auto jit_test = jitter(test_half, 8, 702);

    auto std_config = desk_config(1, 64, 4, 32);
    auto dn_config = std_config;
    dn_config.denoising = true;
    const int epochs = 80;

    auto std_job = std::async(std::launch::async, [&] {
        return train_on(std_config, jit_train.jittered.spikes, nullptr, epochs, 711);
    });
    auto dn_job = std::async(std::launch::async, [&] {
        return train_on(dn_config, jit_train.jittered.spikes, jit_train.clean.spikes, epochs,
                        711);
    });
    auto std_model = std_job.get();
    auto dn_model = dn_job.get();

    const double std_sndr =
        sndr(jit_test.clean.spikes, std_model.reconstruct(jit_test.jittered.spikes));
    const double dn_sndr =
        sndr(jit_test.clean.spikes, dn_model.reconstruct(jit_test.jittered.spikes));

    o.pass = dn_sndr - std_sndr >= 1.0;
    o.detail = "clean-target " + fmt(dn_sndr) + " dB vs " + fmt(std_sndr) + " dB standard (+" +
               fmt(dn_sndr - std_sndr) + " dB, need >= 1, jitter width 8, equal epochs)";
    return o;
}

// ---------------------------------------------------------------------------
// 8. Entropy coder: exact round trips at the million-symbol scale, mean code
//    length within one bit of the empirical entropy, Kraft sum exactly one.
bool kraft_equality(const HuffmanTable& table) {
    uint8_t max_len = 0;
    for (uint8_t l : table.lengths) max_len = std::max(max_len, l);
    if (max_len == 0) return false;
    unsigned __int128 sum = 0;
    const unsigned __int128 one = 1;
    for (uint8_t l : table.lengths)
        if (l > 0) sum += one << (max_len - l);
    return sum == one << max_len;
}

Outcome check_entropy_coder(const UniformityArtifacts& uni) {
    Outcome o{"entropy coder at the million-symbol scale"};
    if (uni.models.size() < 2) {
        o.detail = "trained index stream unavailable (upstream training failed)";
        return o;
    }

    struct Stream {
        std::string name;
        std::vector<int> indexes;
        CaeConfig config;
    };
    std::vector<Stream> streams;

    {  // uniform random indexes
        Stream s{"uniform", {}, desk_config(1, 64, 4, 128)};
        std::mt19937_64 rng(81);
        std::uniform_int_distribution<int> pick(0, 127);
        s.indexes.resize(1'000'000);
        for (auto& v : s.indexes) v = pick(rng);
        streams.push_back(std::move(s));
    }
    {  // heavily skewed random indexes
        Stream s{"skewed", {}, desk_config(1, 64, 4, 64)};
        std::mt19937_64 rng(82);
        std::geometric_distribution<int> pick(0.5);
        s.indexes.resize(1'000'000);
        for (auto& v : s.indexes) v = std::min(pick(rng), 63);
        streams.push_back(std::move(s));
    }
    {  // indexes produced by a trained model, tiled to a million symbols
        Stream s{"trained", {}, uni.models[1].config};
        std::vector<int> base;
        uni.models[1].reconstruct(uni.batch.spikes, &base);
        while (s.indexes.size() < 1'000'000)
            s.indexes.insert(s.indexes.end(), base.begin(), base.end());
        streams.push_back(std::move(s));
    }

    o.pass = true;
    for (const auto& s : streams) {
        const auto hist = SymbolHistogram::from_indexes(s.indexes, s.config.k_codewords);
        const auto table = huffman_build(hist);
        const auto block = encode_block(s.indexes, table, s.config);
        const auto bytes = block.serialize();
        const auto decoded = decode_block(CompressedBlock::deserialize(bytes));
        const double h = entropy(hist);
        const double bps = block.payload_bits_per_symbol();
        const bool round_trip = decoded == s.indexes;
        const bool tight = bps >= h - 1e-9 && bps < h + 1.0;
        const bool kraft = kraft_equality(table);
        if (!(round_trip && tight && kraft)) o.pass = false;
        o.detail += s.name + " " + std::to_string(s.indexes.size()) + " syms: " +
                    (round_trip ? "round trip ok" : "ROUND TRIP FAILED") + ", " + fmt(bps, 3) +
                    " b/sym vs H=" + fmt(h, 3) + (kraft ? ", kraft=1; " : ", KRAFT!=1; ");
    }
    return o;
}

// ---------------------------------------------------------------------------
// 9. Closed-form identities reproduce hand-derived values to 1e-9 relative.
Outcome check_formula_exactness() {
    Outcome o{"closed-form identities vs hand-derived values"};
    double worst = 0.0;
    auto expect = [&worst](double got, double want) {
        worst = std::max(worst, std::abs(got - want) / std::abs(want));
    };

    CaeConfig table_scale;  // M_spk=4, D=48, W=16, N_feat=16
    expect(compression_ratio(table_scale, 8.0), 24.0);

    auto fig_scale = desk_config(1, 64, 4, 128);
    expect(compression_ratio(fig_scale, 6.78), 1024.0 / 27.12);

    CaeConfig unity = desk_config(1, 4, 4, 16);  // bits = W and N_feat = M_spk*D/1
    expect(compression_ratio(unity, 16.0), 1.0);

    std::mt19937_64 rng(91);
    Eigen::MatrixXd spikes(20, 48);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < spikes.rows(); ++i)
        for (int j = 0; j < spikes.cols(); ++j) spikes(i, j) = noise(rng);
    expect(pca_codec(pca_fit(spikes, 8), spikes).cr, 6.0);
    expect(dct_codec(spikes, 4).cr, 12.0);
    expect(dwt_codec(spikes, 6, 16).cr, 768.0 / 144.0);

    expect(detection_threshold({-0.6745, 0.6745, 0.6745}), 5.0);

    auto x = nn::Tensor::from({1, 1, 2}, {3.0, 4.0});
    auto x_hat = nn::Tensor::from({1, 1, 2}, {3.0, 3.0});
    expect(sndr(x, x_hat), 20.0 * std::log10(5.0));

    o.pass = worst <= 1e-9;
    o.detail = "worst relative error " + fmt_sci(worst) + " across 9 identities (allow 1e-9)";
    return o;
}

// ---------------------------------------------------------------------------
// 10. The quantizer agrees with exhaustive nearest-neighbor search, ties
//     included, on 10^4 random (latents, codebook) instances.
Outcome check_vq_equivalence() {
    Outcome o{"quantizer vs exhaustive nearest-neighbor search"};
    // Values on a 0.25 grid make every squared distance exactly representable,
    // so ties are exact and the comparison is order-independent.
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> grid(-4, 4);

    std::vector<CaeModel> models;
    models.push_back(CaeModel::build(desk_config(1, 4, 4, 4), 1));
    models.push_back(CaeModel::build(desk_config(1, 8, 4, 8), 2));
    models.push_back(CaeModel::build(desk_config(1, 16, 4, 16), 3));
    models.push_back(CaeModel::build(desk_config(1, 24, 4, 2), 4));

    const int instances = 10000;
    int mismatches = 0;
    int64_t ties = 0;
    for (int trial = 0; trial < instances; ++trial) {
        auto& m = models[static_cast<size_t>(trial) % models.size()];
        const int k = m.config.k_codewords;
        const int d = m.config.latent_dim();
        for (auto& v : m.codebook->v) v = grid(rng) * 0.25;
        auto y = nn::Tensor::zeros({2, m.config.n_feat, d});
        for (auto& v : y->v) v = grid(rng) * 0.25;

        const auto got = m.quantize(y);
        const int rows = 2 * m.config.n_feat;
        for (int r = 0; r < rows; ++r) {
            int best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            int at_best = 0;
            for (int c = 0; c < k; ++c) {
                double dist = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double diff = y->v[r * d + j] - m.codebook->v[c * d + j];
                    dist += diff * diff;
                }
                if (dist < best_dist) {
                    best_dist = dist;
                    best = c;
                    at_best = 1;
                } else if (dist == best_dist) {
                    ++at_best;
                }
            }
            if (at_best > 1) ++ties;
            if (got.indexes[static_cast<size_t>(r)] != best) ++mismatches;
        }
    }
    o.pass = mismatches == 0 && ties > 100;
    o.detail = std::to_string(instances) + " instances, " + std::to_string(mismatches) +
               " mismatches, " + std::to_string(ties) + " exact ties exercised";
    return o;
}

// ---------------------------------------------------------------------------
// 11. Keeping the probe's channel order beats per-spike channel shuffling.
Outcome check_spatial_proximity() {
    Outcome o{"channel order vs shuffled channels"};
    auto batch = synth_batch(4, 4, 48, 0.1, 60.0, 4.0, 111);
    const int n = batch.count();
    auto [train_half, test_half] = split_first_last(batch, n / 2, n - n / 2);
    const auto config = desk_config(4, 48, 4, 64);
    const int epochs = 50;

    struct Arm {
        double preserved = 0.0;
        double shuffled = 0.0;
    };
    std::vector<std::future<Arm>> jobs;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        jobs.push_back(std::async(std::launch::async, [&, seed] {
            Arm arm;
            auto preserved_train = preserve_channels(train_half);
            auto model_p = train_on(config, preserved_train.spikes, nullptr, epochs, 1100 + seed);
            arm.preserved = sndr(test_half.spikes, model_p.reconstruct(test_half.spikes));

            auto shuffled_train = shuffle_channels(train_half, 1200 + seed);
            auto shuffled_test = shuffle_channels(test_half, 1300 + seed);
            auto model_s =
                train_on(config, shuffled_train.batch.spikes, nullptr, epochs, 1100 + seed);
            arm.shuffled =
                sndr(shuffled_test.batch.spikes, model_s.reconstruct(shuffled_test.batch.spikes));
            return arm;
        }));
    }
    double mean_margin = 0.0;
    std::string per_seed;
    for (auto& j : jobs) {
        const Arm arm = j.get();
        const double margin = arm.preserved - arm.shuffled;
        mean_margin += margin / 3.0;
        per_seed += (per_seed.empty() ? "" : "/") + fmt(margin);
    }
    o.pass = mean_margin > 0.3;
    o.detail = "margins " + per_seed + " dB, mean +" + fmt(mean_margin) +
               " dB over 3 seeds (need > 0.3)";
    return o;
}

// ---------------------------------------------------------------------------
// 12. The stats command reports MACs under a stated convention and stays
//     within 2x of the 79.25K reference figure.
Outcome check_mac_accounting() {
    Outcome o{"encoder MAC accounting vs reference"};
    std::ostringstream out, err;
    const int code = run_cli({"stats"}, out, err);
    const std::string text = out.str();

    auto value_of = [&text](const std::string& key) -> std::string {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line))
            if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
        return "";
    };
    const std::string macs_str = value_of("encoder_macs_per_spike");
    const std::string ref_str = value_of("reference_encoder_macs_per_spike");
    const std::string convention = value_of("macs_convention");
    if (code != 0 || macs_str.empty() || ref_str.empty() || convention.empty()) {
        o.detail = "stats output incomplete (exit " + std::to_string(code) + ")";
        return o;
    }
    const double macs = std::stod(macs_str);
    const double ref = std::stod(ref_str);
    const double ratio = macs / ref;
    o.pass = ref == 79250.0 && ratio >= 0.5 && ratio <= 2.0;
    o.detail = macs_str + " MACs/spike vs " + ref_str + " reference (ratio " + fmt(ratio) +
               ", allow [0.5, 2]; convention stated)";
    return o;
}

}  // namespace

int main() {
    std::array<Outcome, 12> results;
    const auto wall0 = std::chrono::steady_clock::now();

    auto timed = [](const std::string& title, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.title = title;
            o.pass = false;
            o.detail = std::string("unexpected exception: ") + e.what();
        }
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return o;
    };

    std::cerr << "[acceptance] fast checks...\n";
    results[0] = timed("parameter accounting", check_parameter_counts);
    results[1] = timed("gradient checks", check_gradients);
    results[8] = timed("formula identities", check_formula_exactness);
    results[9] = timed("quantizer equivalence", check_vq_equivalence);
    results[11] = timed("mac accounting", check_mac_accounting);

    std::cerr << "[acceptance] rate-quality sweep (5 repeats)...\n";
    {
        SweepArtifacts art;
        results[2] = timed("desk-scale rate-quality floor", [&art] {
            art = run_desk_sweep();
            return check_rate_quality(art);
        });
        results[3] = timed("autoencoder dominance over linear baselines",
                           [&art] { return check_baseline_dominance(art); });
    }

    std::cerr << "[acceptance] codeword-usage trainings (K=32/64/128)...\n";
    {
        UniformityArtifacts art;
        results[4] = timed("codeword usage uniformity", [&art] {
            art = run_uniformity_trainings();
            return check_codeword_uniformity(art);
        });
        results[7] = timed("entropy coder at the million-symbol scale",
                           [&art] { return check_entropy_coder(art); });
    }

    std::cerr << "[acceptance] sorting robustness...\n";
    results[5] = timed("sorting accuracy under compression", check_sorting_robustness);
    std::cerr << "[acceptance] denoising gain...\n";
    results[6] = timed("denoising training gain", check_denoising_gain);
    std::cerr << "[acceptance] channel-order margin (3 seeds)...\n";
    results[10] = timed("channel order vs shuffled channels", check_spatial_proximity);

    int passed = 0;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        passed += r.pass ? 1 : 0;
        std::cout << (i + 1 < 10 ? " " : "") << i + 1 << ". "
                  << (r.pass ? "PASS" : "FAIL") << "  [" << fmt(r.seconds, 1) << "s] "
                  << r.title << ": " << r.detail << "\n";
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    std::cout << "acceptance: " << passed << "/12 criteria passed in " << fmt(wall, 1)
              << " s\n";
    return passed == 12 ? 0 : 1;
}
