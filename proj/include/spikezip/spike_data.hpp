#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spikezip/tensor.hpp"

namespace spikezip {

/// A unit-peak spike shape: |waveform| attains its maximum of exactly 1 at
/// peak_index(), and the waveform is identically zero outside a compact
/// support so isolated firings produce isolated threshold crossings.
struct SpikeTemplate {
    int id = 0;
    std::vector<double> waveform;  // D samples

    int peak_index() const;
};

/// Deterministic family of biphasic/triphasic shapes (difference of
/// Gaussians, tapered to compact support, peak pinned at D/3).
std::vector<SpikeTemplate> make_templates(int count, int d_samples);

/// Continuous multichannel recording with ground truth.
struct SpikeSequence {
    double sample_rate = 24000.0;
    double noise_sigma = 0.0;  // relative to unit template peak
    int d_samples = 64;
    std::vector<std::vector<double>> channels;  // [C][T]
    std::vector<int64_t> truth_times;           // peak sample per event, sorted
    std::vector<int> truth_labels;              // template id per event
    std::vector<SpikeTemplate> templates;       // the shapes that were mixed in
    std::vector<std::vector<double>> gains;     // [template][channel] insertion gain

    int channel_count() const { return static_cast<int>(channels.size()); }
    int64_t length() const { return channels.empty() ? 0 : static_cast<int64_t>(channels[0].size()); }
};

struct GenOptions {
    double sample_rate = 24000.0;
    double duration_seconds = 10.0;
    double noise_sigma = 0.1;
    std::vector<double> firing_rates_hz = {10.0};  // per template; last value repeats
    std::vector<double> amplitudes = {1.0};        // per template; last value repeats
    double noise_spike_rate_hz = 100.0;  // low-amplitude template fragments in the background
    int channels = 1;
    int refractory_samples = -1;  // default max(2 ms, D) so event windows stay disjoint
    uint64_t seed = 1;
};

/// Poisson spike trains per template with an enforced dead time, on top of
/// Gaussian background noise mixed with scaled template fragments.
/// Deterministic per seed.
SpikeSequence generate(const std::vector<SpikeTemplate>& templates, const GenOptions& opts);

/// Detection threshold: 5 * median(|x|) / 0.6745.
double detection_threshold(const std::vector<double>& signal);

/// Threshold-crossing detector with a dead time of d_samples/2.
std::vector<int64_t> detect(const std::vector<double>& signal, int d_samples);

/// Per-channel detection merged across channels with the same dead time.
std::vector<int64_t> detect_events(const SpikeSequence& seq, int d_samples);

/// Aligned spike windows cut from a sequence.
struct SpikeBatch {
    nn::TensorPtr spikes;             // [N, C, D], peak aligned at D/3
    std::vector<int> labels;          // -1 when unknown
    std::vector<int64_t> timestamps;  // absolute sample of the aligned peak
    std::vector<uint8_t> overlapped;  // set by the overlap transform
    std::vector<int> channel_map;     // physical channel feeding each port
    int dropped_events = 0;           // windows that fell outside the recording

    int count() const { return spikes ? spikes->dim(0) : 0; }
    int ports() const { return spikes ? spikes->dim(1) : 0; }
    int window() const { return spikes ? spikes->dim(2) : 0; }
};

/// Cuts D-sample windows and recenters each on its maximum-magnitude sample
/// (across channels) at index D/3.  Out-of-bound windows are dropped and
/// counted.
SpikeBatch extract_align(const SpikeSequence& seq, const std::vector<int64_t>& timestamps,
                         int d_samples);

/// Assigns each batch entry the label of the nearest ground-truth event
/// within `tolerance` samples (default D/4), or -1.
void label_events(SpikeBatch& batch, const SpikeSequence& seq, int tolerance = -1);

/// Random per-spike misalignment, paired with the untouched batch.
struct JitterResult {
    SpikeBatch jittered;
    SpikeBatch clean;
    std::vector<int> shifts;  // per spike, in [-width/2, width/2]
};

/// Circularly shifts every spike by an integer offset drawn uniformly from
/// [-width/2, width/2].  Width must be 0 (identity) or an even value in
/// [2, 10].
JitterResult jitter(const SpikeBatch& batch, int width, uint64_t seed);

/// Rescales the inserted spikes along the recording: event at progress p
/// (time / duration) gets amplitude start + (end - start) * p for its
/// template.  The background noise is untouched.
SpikeSequence drift(const SpikeSequence& seq, const std::vector<double>& start_scales,
                    const std::vector<double>& end_scales);
SpikeSequence drift(const SpikeSequence& seq, double start_scale, double end_scale);

/// First/last split by timestamp order (train-early / test-late protocol).
std::pair<SpikeBatch, SpikeBatch> split_first_last(const SpikeBatch& batch, int n_first,
                                                   int n_last);

/// Adds a second template to ~fraction of the spikes at a random lag within
/// +-D/4 and amplitude 0.5..1.0, flagging the collided entries.
SpikeBatch overlap(const SpikeBatch& batch, const std::vector<SpikeTemplate>& templates,
                   double fraction, uint64_t seed);

/// Random per-spike permutation of the port dimension, with the permutations
/// returned so the operation can be undone.
struct ShuffleResult {
    SpikeBatch batch;
    std::vector<std::vector<int>> permutations;  // port p reads original perm[p]
};
ShuffleResult shuffle_channels(const SpikeBatch& batch, uint64_t seed);
SpikeBatch unshuffle_channels(const SpikeBatch& batch,
                              const std::vector<std::vector<int>>& permutations);
/// Keeps the recorded channel order (identity copy; the semantic counterpart
/// of shuffle_channels).
SpikeBatch preserve_channels(const SpikeBatch& batch);

/// Versioned binary container (little-endian, float32 samples, CRC32).
void save_sequence(const std::string& path, const SpikeSequence& seq);
SpikeSequence load_sequence(const std::string& path);

/// CSV interop: one row per spike, metadata then port-major samples.
void write_batch_csv(const std::string& path, const SpikeBatch& batch);
SpikeBatch read_batch_csv(const std::string& path);

}  // namespace spikezip
