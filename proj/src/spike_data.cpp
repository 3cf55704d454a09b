#include "spikezip/spike_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "spikezip/io_util.hpp"

namespace spikezip {

using nn::Tensor;
using nn::TensorPtr;

int SpikeTemplate::peak_index() const {
    if (waveform.empty()) throw std::invalid_argument("empty template");
    int best = 0;
    for (int j = 1; j < static_cast<int>(waveform.size()); ++j)
        if (std::abs(waveform[static_cast<size_t>(j)]) >
            std::abs(waveform[static_cast<size_t>(best)]))
            best = j;
    return best;
}

std::vector<SpikeTemplate> make_templates(int count, int d_samples) {
    if (count < 1) throw std::invalid_argument("need at least one template");
    if (d_samples < 12) throw std::invalid_argument("window too short for a spike shape");
    const int d = d_samples;
    const int peak_at = d / 3;
    const int support_lo = d / 6;
    const int support_hi = 2 * d / 3;  // exclusive; support length <= d/2

    static const double kTrough[5] = {0.55, 0.70, 0.85, 0.60, 0.75};
    std::vector<SpikeTemplate> out;
    out.reserve(static_cast<size_t>(count));
    for (int id = 0; id < count; ++id) {
        const double s1 = d * (0.030 + 0.012 * (id % 5));
        const double s2 = 1.6 * s1;
        const double delta = 2.2 * s1;
        const double k = kTrough[id % 5];
        const bool triphasic = id % 2 == 1;

        std::vector<double> w(static_cast<size_t>(d), 0.0);
        const double mu = peak_at;
        const int len = support_hi - support_lo;
        for (int j = support_lo; j < support_hi; ++j) {
            double v = std::exp(-0.5 * (j - mu) * (j - mu) / (s1 * s1)) -
                       k * std::exp(-0.5 * (j - mu - delta) * (j - mu - delta) / (s2 * s2));
            if (triphasic)
                v -= 0.3 * std::exp(-0.5 * (j - mu + 1.8 * s1) * (j - mu + 1.8 * s1) /
                                    (0.64 * s1 * s1));
            const double win =
                std::sin(std::numbers::pi * (j - support_lo + 1) / (len + 1.0));
            w[static_cast<size_t>(j)] = v * win * win;
        }

        // Pin the dominant extremum at D/3 with value exactly +1.
        SpikeTemplate t;
        t.id = id;
        t.waveform = std::move(w);
        const int p = t.peak_index();
        if (p != peak_at) {
            std::vector<double> shifted(static_cast<size_t>(d), 0.0);
            const int offset = peak_at - p;
            for (int j = 0; j < d; ++j) {
                const int src = j - offset;
                if (src >= 0 && src < d)
                    shifted[static_cast<size_t>(j)] = t.waveform[static_cast<size_t>(src)];
            }
            t.waveform = std::move(shifted);
        }
        const double peak_value = t.waveform[static_cast<size_t>(peak_at)];
        for (auto& v : t.waveform) v /= peak_value;
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

double pick(const std::vector<double>& values, int i, const char* what) {
    if (values.empty()) throw std::invalid_argument(std::string(what) + " must not be empty");
    return values[std::min(static_cast<size_t>(i), values.size() - 1)];
}

}  // namespace

SpikeSequence generate(const std::vector<SpikeTemplate>& templates, const GenOptions& opts) {
    if (templates.empty()) throw std::invalid_argument("need at least one template");
    if (opts.noise_sigma < 0) throw std::invalid_argument("noise level must be non-negative");
    if (opts.sample_rate <= 0 || opts.duration_seconds <= 0 || opts.channels < 1)
        throw std::invalid_argument("bad generation options");
    const int d = static_cast<int>(templates[0].waveform.size());
    for (const auto& t : templates)
        if (static_cast<int>(t.waveform.size()) != d)
            throw std::invalid_argument("templates must share one window length");

    const int64_t total = static_cast<int64_t>(std::llround(opts.sample_rate * opts.duration_seconds));
    if (total < 4 * d) throw std::invalid_argument("recording too short for the spike window");
    const int refractory = opts.refractory_samples >= 0
                               ? opts.refractory_samples
                               : std::max(static_cast<int>(0.002 * opts.sample_rate), d);

    std::mt19937_64 rng(opts.seed);

    // Poisson arrivals per template, then a global dead-time sweep.
    std::vector<std::pair<int64_t, int>> events;
    const int64_t margin_lo = d;
    const int64_t margin_hi = total - d;
    for (int t = 0; t < static_cast<int>(templates.size()); ++t) {
        const double rate = pick(opts.firing_rates_hz, t, "firing rates");
        if (rate <= 0) continue;
        std::exponential_distribution<double> gap(rate);
        double tau = static_cast<double>(margin_lo);
        for (;;) {
            tau += std::max(1.0, gap(rng) * opts.sample_rate);
            if (tau >= static_cast<double>(margin_hi)) break;
            events.push_back({static_cast<int64_t>(tau), t});
        }
    }
    std::sort(events.begin(), events.end());
    std::vector<std::pair<int64_t, int>> kept;
    for (const auto& e : events)
        if (kept.empty() || e.first - kept.back().first >= refractory) kept.push_back(e);

    SpikeSequence seq;
    seq.sample_rate = opts.sample_rate;
    seq.noise_sigma = opts.noise_sigma;
    seq.d_samples = d;
    seq.templates = templates;
    seq.channels.assign(static_cast<size_t>(opts.channels),
                        std::vector<double>(static_cast<size_t>(total), 0.0));

    // Effective insertion gain per (template, channel): per-template amplitude
    // times a deterministic spatial falloff from the template's home channel.
    seq.gains.assign(templates.size(), std::vector<double>(static_cast<size_t>(opts.channels)));
    for (size_t t = 0; t < templates.size(); ++t) {
        const double amp = pick(opts.amplitudes, static_cast<int>(t), "amplitudes");
        const int home = static_cast<int>(t) % opts.channels;
        for (int c = 0; c < opts.channels; ++c)
            seq.gains[t][static_cast<size_t>(c)] = amp / (1.0 + std::abs(c - home));
    }

    // Background: Gaussian noise ...
    if (opts.noise_sigma > 0) {
        std::normal_distribution<double> noise(0.0, opts.noise_sigma);
        for (auto& channel : seq.channels)
            for (auto& v : channel) v = noise(rng);

        // ... plus low-amplitude template fragments (multi-unit hash).
        if (opts.noise_spike_rate_hz > 0) {
            std::exponential_distribution<double> gap(opts.noise_spike_rate_hz);
            std::uniform_int_distribution<int> which(0, static_cast<int>(templates.size()) - 1);
            std::uniform_int_distribution<int> port(0, opts.channels - 1);
            std::uniform_int_distribution<int> start(0, d / 2);
            std::uniform_real_distribution<double> amp(0.2 * opts.noise_sigma,
                                                       0.5 * opts.noise_sigma);
            std::uniform_int_distribution<int> flip(0, 1);
            double tau = 0.0;
            for (;;) {
                tau += std::max(1.0, gap(rng) * opts.sample_rate);
                if (tau >= static_cast<double>(total - d)) break;
                const auto& w = templates[static_cast<size_t>(which(rng))].waveform;
                auto& channel = seq.channels[static_cast<size_t>(port(rng))];
                const int from = start(rng);
                const double a = (flip(rng) ? 1.0 : -1.0) * amp(rng);
                const int64_t at = static_cast<int64_t>(tau);
                for (int j = 0; j < d / 2 && from + j < d; ++j)
                    channel[static_cast<size_t>(at + j)] += a * w[static_cast<size_t>(from + j)];
            }
        }
    }

    // Insert the ground-truth spikes, peak at the recorded time.
    for (const auto& [tau, label] : kept) {
        const auto& w = templates[static_cast<size_t>(label)].waveform;
        const int peak = templates[static_cast<size_t>(label)].peak_index();
        for (int c = 0; c < opts.channels; ++c) {
            const double g = seq.gains[static_cast<size_t>(label)][static_cast<size_t>(c)];
            auto& channel = seq.channels[static_cast<size_t>(c)];
            for (int j = 0; j < d; ++j)
                channel[static_cast<size_t>(tau - peak + j)] += g * w[static_cast<size_t>(j)];
        }
        seq.truth_times.push_back(tau);
        seq.truth_labels.push_back(label);
    }
    return seq;
}

double detection_threshold(const std::vector<double>& signal) {
    if (signal.empty()) throw std::invalid_argument("empty signal");
    std::vector<double> mag(signal.size());
    for (size_t i = 0; i < signal.size(); ++i) mag[i] = std::abs(signal[i]);
    const size_t mid = mag.size() / 2;
    std::nth_element(mag.begin(), mag.begin() + static_cast<ptrdiff_t>(mid), mag.end());
    double median = mag[mid];
    if (mag.size() % 2 == 0) {
        const double lower = *std::max_element(mag.begin(), mag.begin() + static_cast<ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return 5.0 * median / 0.6745;
}

std::vector<int64_t> detect(const std::vector<double>& signal, int d_samples) {
    if (d_samples < 2) throw std::invalid_argument("window too short");
    const double thr = detection_threshold(signal);
    const int64_t dead = d_samples / 2;
    std::vector<int64_t> out;
    int64_t last = std::numeric_limits<int64_t>::min() / 2;
    for (int64_t t = 0; t < static_cast<int64_t>(signal.size()); ++t) {
        const bool above = std::abs(signal[static_cast<size_t>(t)]) > thr;
        const bool was_above = t > 0 && std::abs(signal[static_cast<size_t>(t - 1)]) > thr;
        if (above && !was_above && t - last >= dead) {
            out.push_back(t);
            last = t;
        }
    }
    return out;
}

std::vector<int64_t> detect_events(const SpikeSequence& seq, int d_samples) {
    std::vector<int64_t> merged;
    for (const auto& channel : seq.channels) {
        auto ev = detect(channel, d_samples);
        merged.insert(merged.end(), ev.begin(), ev.end());
    }
    std::sort(merged.begin(), merged.end());
    std::vector<int64_t> out;
    const int64_t dead = d_samples / 2;
    for (int64_t t : merged)
        if (out.empty() || t - out.back() >= dead) out.push_back(t);
    return out;
}

SpikeBatch extract_align(const SpikeSequence& seq, const std::vector<int64_t>& timestamps,
                         int d_samples) {
    if (seq.channels.empty()) throw std::invalid_argument("sequence has no channels");
    const int d = d_samples;
    if (d < 3) throw std::invalid_argument("window too short");
    const int c_count = seq.channel_count();
    const int64_t total = seq.length();
    const int center = d / 3;

    SpikeBatch batch;
    std::vector<double> rows;
    for (int64_t ts : timestamps) {
        int64_t start = ts - center;
        bool ok = true;
        for (int iter = 0; iter < 1 + d; ++iter) {
            if (start < 0 || start + d > total) {
                ok = false;
                break;
            }
            // Strongest sample across channels inside the window.
            int best_j = 0;
            double best_mag = -1.0;
            for (int j = 0; j < d; ++j)
                for (int c = 0; c < c_count; ++c) {
                    const double m =
                        std::abs(seq.channels[static_cast<size_t>(c)][static_cast<size_t>(start + j)]);
                    if (m > best_mag) {
                        best_mag = m;
                        best_j = j;
                    }
                }
            if (best_j == center) break;
            double center_mag = 0.0;
            for (int c = 0; c < c_count; ++c)
                center_mag = std::max(center_mag,
                                      std::abs(seq.channels[static_cast<size_t>(c)]
                                                           [static_cast<size_t>(start + center)]));
            if (best_mag <= center_mag) break;  // only move toward strictly larger peaks
            start += best_j - center;
        }
        if (!ok) {
            ++batch.dropped_events;
            continue;
        }
        for (int c = 0; c < c_count; ++c)
            for (int j = 0; j < d; ++j)
                rows.push_back(seq.channels[static_cast<size_t>(c)][static_cast<size_t>(start + j)]);
        batch.timestamps.push_back(start + center);
        batch.labels.push_back(-1);
        batch.overlapped.push_back(0);
    }
    const int n = static_cast<int>(batch.timestamps.size());
    batch.spikes = Tensor::from({n, c_count, d}, std::move(rows));
    batch.channel_map.resize(static_cast<size_t>(c_count));
    for (int c = 0; c < c_count; ++c) batch.channel_map[static_cast<size_t>(c)] = c;
    return batch;
}

void label_events(SpikeBatch& batch, const SpikeSequence& seq, int tolerance) {
    const int tol = tolerance >= 0 ? tolerance : batch.window() / 4;
    for (size_t i = 0; i < batch.timestamps.size(); ++i) {
        const int64_t ts = batch.timestamps[i];
        auto it = std::lower_bound(seq.truth_times.begin(), seq.truth_times.end(), ts);
        int64_t best_gap = std::numeric_limits<int64_t>::max();
        int best_label = -1;
        for (auto cand : {it, it == seq.truth_times.begin() ? it : std::prev(it)}) {
            if (cand == seq.truth_times.end()) continue;
            const int64_t gap = std::llabs(*cand - ts);
            if (gap < best_gap) {
                best_gap = gap;
                best_label =
                    seq.truth_labels[static_cast<size_t>(cand - seq.truth_times.begin())];
            }
        }
        batch.labels[i] = best_gap <= tol ? best_label : -1;
    }
}

namespace {

SpikeBatch copy_batch(const SpikeBatch& batch) {
    SpikeBatch out = batch;
    out.spikes = Tensor::from(batch.spikes->shape, batch.spikes->v);
    return out;
}

SpikeBatch take_rows(const SpikeBatch& batch, const std::vector<int>& rows) {
    const int c = batch.ports();
    const int d = batch.window();
    SpikeBatch out;
    out.channel_map = batch.channel_map;
    out.dropped_events = 0;
    std::vector<double> values;
    values.reserve(rows.size() * static_cast<size_t>(c) * static_cast<size_t>(d));
    for (int r : rows) {
        const auto* src = batch.spikes->v.data() + static_cast<size_t>(r) * c * d;
        values.insert(values.end(), src, src + static_cast<size_t>(c) * d);
        out.labels.push_back(batch.labels[static_cast<size_t>(r)]);
        out.timestamps.push_back(batch.timestamps[static_cast<size_t>(r)]);
        out.overlapped.push_back(batch.overlapped[static_cast<size_t>(r)]);
    }
    out.spikes = Tensor::from({static_cast<int>(rows.size()), c, d}, std::move(values));
    return out;
}

}  // namespace

JitterResult jitter(const SpikeBatch& batch, int width, uint64_t seed) {
    if (width != 0 && (width % 2 != 0 || width < 2 || width > 10))
        throw std::invalid_argument("jitter width must be 0 or an even value in [2, 10]");
    const int d = batch.window();
    if (width >= d) throw std::invalid_argument("jitter width exceeds the spike window");

    JitterResult out;
    out.clean = copy_batch(batch);
    out.jittered = copy_batch(batch);
    out.shifts.assign(static_cast<size_t>(batch.count()), 0);
    if (width == 0) return out;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> shift(-width / 2, width / 2);
    const int c_count = batch.ports();
    for (int r = 0; r < batch.count(); ++r) {
        const int s = shift(rng);
        out.shifts[static_cast<size_t>(r)] = s;
        if (s == 0) continue;
        for (int c = 0; c < c_count; ++c) {
            double* row = out.jittered.spikes->v.data() +
                          (static_cast<size_t>(r) * c_count + static_cast<size_t>(c)) * d;
            const double* src = batch.spikes->v.data() +
                                (static_cast<size_t>(r) * c_count + static_cast<size_t>(c)) * d;
            for (int j = 0; j < d; ++j) row[(j + s % d + d) % d] = src[j];
        }
    }
    return out;
}

SpikeSequence drift(const SpikeSequence& seq, const std::vector<double>& start_scales,
                    const std::vector<double>& end_scales) {
    if (start_scales.size() != seq.templates.size() || end_scales.size() != seq.templates.size())
        throw std::invalid_argument("drift schedule needs one scale pair per template");
    SpikeSequence out = seq;
    const double duration = static_cast<double>(std::max<int64_t>(seq.length() - 1, 1));
    for (size_t i = 0; i < seq.truth_times.size(); ++i) {
        const int label = seq.truth_labels[i];
        const int64_t tau = seq.truth_times[i];
        const double progress = static_cast<double>(tau) / duration;
        const double scale = start_scales[static_cast<size_t>(label)] +
                             (end_scales[static_cast<size_t>(label)] -
                              start_scales[static_cast<size_t>(label)]) *
                                 progress;
        if (scale == 1.0) continue;
        const auto& w = seq.templates[static_cast<size_t>(label)].waveform;
        const int peak = seq.templates[static_cast<size_t>(label)].peak_index();
        const int d = static_cast<int>(w.size());
        for (int c = 0; c < seq.channel_count(); ++c) {
            const double g = seq.gains[static_cast<size_t>(label)][static_cast<size_t>(c)];
            auto& channel = out.channels[static_cast<size_t>(c)];
            for (int j = 0; j < d; ++j) {
                const int64_t at = tau - peak + j;
                if (at >= 0 && at < out.length())
                    channel[static_cast<size_t>(at)] += (scale - 1.0) * g * w[static_cast<size_t>(j)];
            }
        }
    }
    return out;
}

SpikeSequence drift(const SpikeSequence& seq, double start_scale, double end_scale) {
    return drift(seq, std::vector<double>(seq.templates.size(), start_scale),
                 std::vector<double>(seq.templates.size(), end_scale));
}

std::pair<SpikeBatch, SpikeBatch> split_first_last(const SpikeBatch& batch, int n_first,
                                                   int n_last) {
    if (n_first < 0 || n_last < 0 || n_first + n_last > batch.count())
        throw std::invalid_argument("split sizes exceed the batch");
    std::vector<int> order(static_cast<size_t>(batch.count()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return batch.timestamps[static_cast<size_t>(a)] < batch.timestamps[static_cast<size_t>(b)];
    });
    const std::vector<int> first(order.begin(), order.begin() + n_first);
    const std::vector<int> last(order.end() - n_last, order.end());
    return {take_rows(batch, first), take_rows(batch, last)};
}

SpikeBatch overlap(const SpikeBatch& batch, const std::vector<SpikeTemplate>& templates,
                   double fraction, uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in [0, 1]");
    if (templates.empty()) throw std::invalid_argument("need templates to overlap with");
    SpikeBatch out = copy_batch(batch);
    const int n = batch.count();
    const int hit = static_cast<int>(std::llround(fraction * n));
    if (hit == 0) return out;

    std::mt19937_64 rng(seed);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const int d = batch.window();
    const int c_count = batch.ports();
    std::uniform_int_distribution<int> which(0, static_cast<int>(templates.size()) - 1);
    std::uniform_int_distribution<int> lag(-d / 4, d / 4);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    for (int i = 0; i < hit; ++i) {
        const int r = order[static_cast<size_t>(i)];
        const auto& tpl = templates[static_cast<size_t>(which(rng))];
        const int peak = tpl.peak_index();
        const int at = d / 3 + lag(rng);
        const double a = amp(rng);
        for (int c = 0; c < c_count; ++c) {
            double* row = out.spikes->v.data() +
                          (static_cast<size_t>(r) * c_count + static_cast<size_t>(c)) * d;
            for (int j = 0; j < static_cast<int>(tpl.waveform.size()); ++j) {
                const int q = at - peak + j;
                if (q >= 0 && q < d) row[q] += a * tpl.waveform[static_cast<size_t>(j)];
            }
        }
        out.overlapped[static_cast<size_t>(r)] = 1;
    }
    return out;
}

ShuffleResult shuffle_channels(const SpikeBatch& batch, uint64_t seed) {
    ShuffleResult out;
    out.batch = copy_batch(batch);
    const int c_count = batch.ports();
    const int d = batch.window();
    std::mt19937_64 rng(seed);
    out.permutations.assign(static_cast<size_t>(batch.count()), {});
    for (int r = 0; r < batch.count(); ++r) {
        std::vector<int> perm(static_cast<size_t>(c_count));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int p = 0; p < c_count; ++p) {
            const double* src = batch.spikes->v.data() +
                                (static_cast<size_t>(r) * c_count +
                                 static_cast<size_t>(perm[static_cast<size_t>(p)])) *
                                    d;
            double* dst = out.batch.spikes->v.data() +
                          (static_cast<size_t>(r) * c_count + static_cast<size_t>(p)) * d;
            std::copy(src, src + d, dst);
        }
        out.permutations[static_cast<size_t>(r)] = std::move(perm);
    }
    return out;
}

SpikeBatch unshuffle_channels(const SpikeBatch& batch,
                              const std::vector<std::vector<int>>& permutations) {
    if (permutations.size() != static_cast<size_t>(batch.count()))
        throw std::invalid_argument("one permutation per spike required");
    SpikeBatch out = copy_batch(batch);
    const int c_count = batch.ports();
    const int d = batch.window();
    for (int r = 0; r < batch.count(); ++r) {
        const auto& perm = permutations[static_cast<size_t>(r)];
        if (static_cast<int>(perm.size()) != c_count)
            throw std::invalid_argument("permutation size mismatch");
        for (int p = 0; p < c_count; ++p) {
            const double* src = batch.spikes->v.data() +
                                (static_cast<size_t>(r) * c_count + static_cast<size_t>(p)) * d;
            double* dst = out.spikes->v.data() +
                          (static_cast<size_t>(r) * c_count +
                           static_cast<size_t>(perm[static_cast<size_t>(p)])) *
                              d;
            std::copy(src, src + d, dst);
        }
    }
    return out;
}

SpikeBatch preserve_channels(const SpikeBatch& batch) { return copy_batch(batch); }

void save_sequence(const std::string& path, const SpikeSequence& seq) {
    io::ByteWriter w;
    w.magic("SPKD");
    w.u16(1);
    w.u32(static_cast<uint32_t>(seq.channel_count()));
    w.u32(static_cast<uint32_t>(seq.d_samples));
    w.f64(seq.sample_rate);
    w.f64(seq.noise_sigma);
    w.u64(static_cast<uint64_t>(seq.length()));
    w.u32(static_cast<uint32_t>(seq.templates.size()));
    w.u64(seq.truth_times.size());
    for (const auto& t : seq.templates) {
        w.u32(static_cast<uint32_t>(t.id));
        if (static_cast<int>(t.waveform.size()) != seq.d_samples)
            throw std::invalid_argument("template length does not match the header");
        for (double v : t.waveform) w.f32(static_cast<float>(v));
    }
    for (const auto& per_template : seq.gains)
        for (double g : per_template) w.f32(static_cast<float>(g));
    for (const auto& channel : seq.channels)
        for (double v : channel) w.f32(static_cast<float>(v));
    for (int64_t t : seq.truth_times) w.u64(static_cast<uint64_t>(t));
    for (int label : seq.truth_labels) w.u32(static_cast<uint32_t>(label));
    io::write_file_with_crc(path, w);
}

SpikeSequence load_sequence(const std::string& path) {
    auto r = io::read_file_with_crc(path, "spike dataset");
    r.expect_magic("SPKD", "spike dataset");
    if (r.u16() != 1) throw std::runtime_error("spike dataset: unsupported version");
    SpikeSequence seq;
    const uint32_t c_count = r.u32();
    seq.d_samples = static_cast<int>(r.u32());
    seq.sample_rate = r.f64();
    seq.noise_sigma = r.f64();
    const uint64_t total = r.u64();
    const uint32_t n_templates = r.u32();
    const uint64_t n_events = r.u64();
    if (c_count < 1 || seq.d_samples < 4 || seq.d_samples > 4096 || seq.sample_rate <= 0)
        throw std::runtime_error("spike dataset: bad header");

    seq.templates.resize(n_templates);
    for (auto& t : seq.templates) {
        t.id = static_cast<int>(r.u32());
        t.waveform.resize(static_cast<size_t>(seq.d_samples));
        for (auto& v : t.waveform) v = r.f32();
    }
    seq.gains.assign(n_templates, std::vector<double>(c_count));
    for (auto& per_template : seq.gains)
        for (auto& g : per_template) g = r.f32();
    seq.channels.assign(c_count, std::vector<double>(total));
    for (auto& channel : seq.channels)
        for (auto& v : channel) v = r.f32();
    seq.truth_times.resize(n_events);
    for (auto& t : seq.truth_times) t = static_cast<int64_t>(r.u64());
    seq.truth_labels.resize(n_events);
    for (auto& label : seq.truth_labels) {
        label = static_cast<int>(r.u32());
        if (label < 0 || label >= static_cast<int>(n_templates))
            throw std::runtime_error("spike dataset: label out of range");
    }
    if (!std::is_sorted(seq.truth_times.begin(), seq.truth_times.end()))
        throw std::runtime_error("spike dataset: ground truth times not sorted");
    return seq;
}

void write_batch_csv(const std::string& path, const SpikeBatch& batch) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    const int c_count = batch.ports();
    const int d = batch.window();
    out << "label,timestamp,overlapped";
    for (int c = 0; c < c_count; ++c)
        for (int j = 0; j < d; ++j) out << ",s" << c << "_" << j;
    out << "\n";
    char buf[64];
    for (int r = 0; r < batch.count(); ++r) {
        out << batch.labels[static_cast<size_t>(r)] << ','
            << batch.timestamps[static_cast<size_t>(r)] << ','
            << static_cast<int>(batch.overlapped[static_cast<size_t>(r)]);
        const double* row = batch.spikes->v.data() + static_cast<size_t>(r) * c_count * d;
        for (int i = 0; i < c_count * d; ++i) {
            std::snprintf(buf, sizeof buf, "%.9g", row[i]);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

SpikeBatch read_batch_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv");

    // Infer [C, D] from the header column names.
    int c_count = 0, d = 0;
    {
        std::stringstream header(line);
        std::string col;
        for (int i = 0; std::getline(header, col, ','); ++i) {
            if (i < 3) continue;
            int c = 0, j = 0;
            if (std::sscanf(col.c_str(), "s%d_%d", &c, &j) != 2)
                throw std::runtime_error("bad csv header column: " + col);
            c_count = std::max(c_count, c + 1);
            d = std::max(d, j + 1);
        }
    }
    if (c_count == 0 || d == 0) throw std::runtime_error("csv has no sample columns");

    SpikeBatch batch;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) != 3 + c_count * d)
            throw std::runtime_error("csv row has wrong arity");
        batch.labels.push_back(std::stoi(cells[0]));
        batch.timestamps.push_back(std::stoll(cells[1]));
        batch.overlapped.push_back(static_cast<uint8_t>(std::stoi(cells[2])));
        for (int i = 0; i < c_count * d; ++i) values.push_back(std::stod(cells[static_cast<size_t>(3 + i)]));
    }
    batch.spikes =
        Tensor::from({static_cast<int>(batch.labels.size()), c_count, d}, std::move(values));
    batch.channel_map.resize(static_cast<size_t>(c_count));
    for (int c = 0; c < c_count; ++c) batch.channel_map[static_cast<size_t>(c)] = c;
    return batch;
}

}  // namespace spikezip
