#include "spikezip/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "spikezip/baselines.hpp"

namespace spikezip {

using nn::Tensor;
using nn::TensorPtr;

namespace {

double sndr_from_norms(double signal, double error) {
    if (signal <= 0.0) throw std::invalid_argument("sndr: reference signal is all zero");
    if (error == 0.0) return kSndrCapDb;
    return std::min(kSndrCapDb, 20.0 * std::log10(signal / error));
}

uint64_t mix_seed(uint64_t seed, uint64_t salt_a, uint64_t salt_b) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt_a + 1) + 0xbf58476d1ce4e5b9ull * (salt_b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void run_pool(const std::vector<std::function<void()>>& tasks, int threads) {
    const int n = std::min<int>(worker_count(threads), static_cast<int>(tasks.size()));
    if (n <= 1) {
        for (const auto& task : tasks) task();
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i)
        pool.emplace_back([&] {
            for (;;) {
                const size_t k = next.fetch_add(1);
                if (k >= tasks.size()) break;
                try {
                    tasks[k]();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& worker : pool) worker.join();
    if (failure) std::rethrow_exception(failure);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stdev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

TensorPtr rows_of(const TensorPtr& t, const std::vector<int>& rows) {
    const int c = t->dim(1);
    const int d = t->dim(2);
    std::vector<double> values;
    values.reserve(rows.size() * static_cast<size_t>(c) * static_cast<size_t>(d));
    for (int r : rows) {
        const double* src = t->v.data() + static_cast<size_t>(r) * c * d;
        values.insert(values.end(), src, src + static_cast<size_t>(c) * d);
    }
    return Tensor::from({static_cast<int>(rows.size()), c, d}, std::move(values));
}

Eigen::MatrixXd matrix_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

double matrix_sndr(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
    return sndr_from_norms(x.norm(), (x - x_hat).norm());
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << body;
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

double sndr(const std::vector<double>& x, const std::vector<double>& x_hat) {
    if (x.size() != x_hat.size()) throw std::invalid_argument("sndr: shape mismatch");
    if (x.empty()) throw std::invalid_argument("sndr: empty input");
    double sig = 0.0, err = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sig += x[i] * x[i];
        const double e = x[i] - x_hat[i];
        err += e * e;
    }
    return sndr_from_norms(std::sqrt(sig), std::sqrt(err));
}

double sndr(const nn::TensorPtr& x, const nn::TensorPtr& x_hat) {
    if (x->shape != x_hat->shape) throw std::invalid_argument("sndr: shape mismatch");
    return sndr(x->v, x_hat->v);
}

int worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPIKEZIP_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Eigen::MatrixXd to_matrix(const nn::TensorPtr& spikes) {
    const int n = spikes->dim(0);
    const int len = spikes->dim(1) * spikes->dim(2);
    Eigen::MatrixXd out(n, len);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < len; ++i) out(r, i) = spikes->v[static_cast<size_t>(r) * len + i];
    return out;
}

std::vector<RateQualityPoint> sweep(const SpikeBatch& batch, const SweepOptions& opts) {
    if (opts.repeats < 1) throw std::invalid_argument("sweep: repeats must be positive");
    const int n = batch.count();
    if (n < 4) throw std::invalid_argument("sweep: need at least 4 spikes");
    for (const auto& config : opts.cae_configs) {
        config.validate();
        if (config.m_spk != batch.ports() || config.d_samples != batch.window())
            throw std::invalid_argument("sweep: config does not match the batch geometry");
    }
    for (int m : opts.baseline_ms)
        if (m < 1) throw std::invalid_argument("sweep: baseline m must be positive");

    // One split per repeat, shared across every method so per-repeat
    // comparisons are paired.
    std::vector<std::vector<int>> train_rows(static_cast<size_t>(opts.repeats));
    std::vector<std::vector<int>> test_rows(static_cast<size_t>(opts.repeats));
    for (int r = 0; r < opts.repeats; ++r) {
        std::vector<int> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(mix_seed(opts.seed, 0x51, static_cast<uint64_t>(r)));
        std::shuffle(order.begin(), order.end(), rng);
        train_rows[static_cast<size_t>(r)].assign(order.begin(), order.begin() + n / 2);
        test_rows[static_cast<size_t>(r)].assign(order.begin() + n / 2, order.end());
    }

    const Eigen::MatrixXd flat = to_matrix(batch.spikes);
    struct Slot {
        double cr = 0.0, quality = 0.0;
    };
    const size_t baseline_points = 3 * opts.baseline_ms.size();
    const size_t total_points = baseline_points + opts.cae_configs.size();
    std::vector<std::vector<Slot>> slots(total_points,
                                         std::vector<Slot>(static_cast<size_t>(opts.repeats)));

    std::vector<std::function<void()>> tasks;
    static const char* kBaselineNames[3] = {"pca", "dct", "dwt"};
    for (size_t b = 0; b < 3; ++b)
        for (size_t mi = 0; mi < opts.baseline_ms.size(); ++mi)
            for (int r = 0; r < opts.repeats; ++r)
                tasks.push_back([&, b, mi, r] {
                    const int m = opts.baseline_ms[mi];
                    const auto train_half = matrix_rows(flat, train_rows[static_cast<size_t>(r)]);
                    const auto test_half = matrix_rows(flat, test_rows[static_cast<size_t>(r)]);
                    Slot slot;
                    if (b == 0) {
                        const auto fitted = pca_fit(train_half, m);
                        const auto res = pca_codec(fitted, test_half);
                        slot = {res.cr, matrix_sndr(test_half, res.reconstruction)};
                    } else if (b == 1) {
                        const auto res = dct_codec(test_half, m);
                        slot = {res.cr, matrix_sndr(test_half, res.reconstruction)};
                    } else {
                        const auto res = dwt_codec(test_half, m, opts.w_bits);
                        slot = {res.cr, matrix_sndr(test_half, res.reconstruction)};
                    }
                    slots[b * opts.baseline_ms.size() + mi][static_cast<size_t>(r)] = slot;
                });
    for (size_t ci = 0; ci < opts.cae_configs.size(); ++ci)
        for (int r = 0; r < opts.repeats; ++r)
            tasks.push_back([&, ci, r] {
                const auto& config = opts.cae_configs[ci];
                auto model =
                    CaeModel::build(config, mix_seed(opts.seed, 0xb0 + ci, static_cast<uint64_t>(r)));
                TrainOptions topt = opts.train;
                topt.seed = mix_seed(opts.seed, 0xc0 + ci, static_cast<uint64_t>(r));
                train(model, rows_of(batch.spikes, train_rows[static_cast<size_t>(r)]), nullptr,
                      topt);
                const auto test_half = rows_of(batch.spikes, test_rows[static_cast<size_t>(r)]);
                std::vector<int> indexes;
                const auto rebuilt = model.reconstruct(test_half, &indexes);
                const auto hist = SymbolHistogram::from_indexes(indexes, config.k_codewords);
                // A degenerate stream that always picks one codeword codes at
                // ~0 bits; floor the rate so the ratio stays finite.
                const double bits = std::max(entropy(hist), 0.01);
                slots[baseline_points + ci][static_cast<size_t>(r)] = {
                    compression_ratio(config, bits), sndr(test_half, rebuilt)};
            });
    run_pool(tasks, opts.threads);

    std::vector<RateQualityPoint> out;
    auto aggregate = [&](size_t slot_index, std::string method, std::string setting,
                         uint32_t digest) {
        RateQualityPoint p;
        p.method = std::move(method);
        p.setting = std::move(setting);
        p.config_digest = digest;
        p.repeats = opts.repeats;
        for (const auto& s : slots[slot_index]) {
            p.cr_samples.push_back(s.cr);
            p.sndr_samples.push_back(s.quality);
        }
        p.cr = mean_of(p.cr_samples);
        p.cr_std = stdev_of(p.cr_samples);
        p.sndr_db = mean_of(p.sndr_samples);
        p.sndr_std = stdev_of(p.sndr_samples);
        out.push_back(std::move(p));
    };
    for (size_t b = 0; b < 3; ++b)
        for (size_t mi = 0; mi < opts.baseline_ms.size(); ++mi)
            aggregate(b * opts.baseline_ms.size() + mi, kBaselineNames[b],
                      "m=" + std::to_string(opts.baseline_ms[mi]), 0);
    for (size_t ci = 0; ci < opts.cae_configs.size(); ++ci)
        aggregate(baseline_points + ci, "cae",
                  "K=" + std::to_string(opts.cae_configs[ci].k_codewords),
                  opts.cae_configs[ci].digest());
    return out;
}

CodewordStats codeword_stats(const CaeModel& model, const nn::TensorPtr& raw_spikes) {
    std::vector<int> indexes;
    model.reconstruct(raw_spikes, &indexes);
    CodewordStats stats;
    stats.histogram = SymbolHistogram::from_indexes(indexes, model.config.k_codewords);
    stats.entropy_bits = entropy(stats.histogram);
    stats.usage_fraction = static_cast<double>(stats.histogram.nonzero_symbols()) /
                           static_cast<double>(model.config.k_codewords);
    return stats;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, uint64_t seed) {
    const int n = static_cast<int>(points.rows());
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: k must be in [1, #points]");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be positive");

    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::vector<int> order(static_cast<size_t>(n));
    for (int attempt = 0; attempt < restarts; ++attempt) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Eigen::MatrixXd centroids(k, points.cols());
        for (int c = 0; c < k; ++c) centroids.row(c) = points.row(order[static_cast<size_t>(c)]);

        std::vector<int> labels(static_cast<size_t>(n), -1);
        std::vector<int> members(static_cast<size_t>(k), 0);
        for (int iter = 0; iter < 300; ++iter) {
            bool changed = false;
            std::fill(members.begin(), members.end(), 0);
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double dist = (points.row(i) - centroids.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    const double cand = (points.row(i) - centroids.row(c)).squaredNorm();
                    if (cand < dist) {
                        dist = cand;
                        arg = c;
                    }
                }
                if (labels[static_cast<size_t>(i)] != arg) changed = true;
                labels[static_cast<size_t>(i)] = arg;
                ++members[static_cast<size_t>(arg)];
            }
            // Re-seed empty clusters with the worst-fitted point.
            for (int c = 0; c < k; ++c) {
                if (members[static_cast<size_t>(c)] != 0) continue;
                int worst = -1;
                double worst_dist = -1.0;
                for (int i = 0; i < n; ++i) {
                    if (members[static_cast<size_t>(labels[static_cast<size_t>(i)])] < 2) continue;
                    const double dist =
                        (points.row(i) - centroids.row(labels[static_cast<size_t>(i)])).squaredNorm();
                    if (dist > worst_dist) {
                        worst_dist = dist;
                        worst = i;
                    }
                }
                if (worst < 0) break;
                --members[static_cast<size_t>(labels[static_cast<size_t>(worst)])];
                labels[static_cast<size_t>(worst)] = c;
                members[static_cast<size_t>(c)] = 1;
                changed = true;
            }
            if (!changed && iter > 0) break;
            centroids.setZero();
            for (int i = 0; i < n; ++i) centroids.row(labels[static_cast<size_t>(i)]) += points.row(i);
            for (int c = 0; c < k; ++c)
                if (members[static_cast<size_t>(c)] > 0) centroids.row(c) /= members[static_cast<size_t>(c)];
        }
        double inertia = 0.0;
        for (int i = 0; i < n; ++i)
            inertia += (points.row(i) - centroids.row(labels[static_cast<size_t>(i)])).squaredNorm();
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centroids = centroids;
        }
    }
    return best;
}

namespace {

/// Maximum-weight one-to-one assignment on a square score matrix
/// (Hungarian algorithm with potentials, O(k^3)).
double hungarian_max(const Eigen::MatrixXd& score) {
    const int n = static_cast<int>(score.rows());
    const double top = score.maxCoeff();
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, top) - score;
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1,
                                 std::numeric_limits<double>::infinity());
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = match[static_cast<size_t>(j0)];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        if (match[static_cast<size_t>(j)] > 0) total += score(match[static_cast<size_t>(j)] - 1, j - 1);
    return total;
}

}  // namespace

double match_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted, int k) {
    if (truth.size() != predicted.size() || truth.empty())
        throw std::invalid_argument("match_accuracy: label vectors must align");
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
            throw std::invalid_argument("match_accuracy: label out of range");
        counts(truth[i], predicted[i]) += 1.0;
    }
    double agreement;
    if (k <= 6) {
        std::vector<int> perm(static_cast<size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        agreement = 0.0;
        do {
            double sum = 0.0;
            for (int p = 0; p < k; ++p) sum += counts(perm[static_cast<size_t>(p)], p);
            agreement = std::max(agreement, sum);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        agreement = hungarian_max(counts);
    }
    return agreement / static_cast<double>(truth.size());
}

double sorting_accuracy(const Eigen::MatrixXd& spikes, const std::vector<int>& labels, int k,
                        int restarts, uint64_t seed) {
    if (static_cast<size_t>(spikes.rows()) != labels.size())
        throw std::invalid_argument("sorting_accuracy: one label per spike required");
    const int feat = std::min<int>(3, static_cast<int>(spikes.cols()));
    const auto basis = pca_fit(spikes, feat);
    const auto coded = pca_codec(basis, spikes);
    const auto clusters = kmeans(coded.coefficients, k, restarts, seed);
    return match_accuracy(labels, clusters.labels, k);
}

GeneralizationMatrix generalization_matrix(const std::vector<SpikeBatch>& sequences,
                                           const std::vector<std::string>& ids,
                                           const CaeConfig& config, const TrainOptions& topt,
                                           int threads) {
    if (sequences.empty() || sequences.size() != ids.size())
        throw std::invalid_argument("generalization_matrix: one id per sequence required");
    config.validate();
    const int n = static_cast<int>(sequences.size());
    std::vector<TensorPtr> train_half(static_cast<size_t>(n)), test_half(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& batch = sequences[static_cast<size_t>(i)];
        if (batch.ports() != config.m_spk || batch.window() != config.d_samples)
            throw std::invalid_argument("generalization_matrix: batch does not match the config");
        const int count = batch.count();
        auto [first, last] = split_first_last(batch, count / 2, count - count / 2);
        train_half[static_cast<size_t>(i)] = first.spikes;
        test_half[static_cast<size_t>(i)] = last.spikes;
    }

    GeneralizationMatrix out;
    out.ids = ids;
    out.sndr_db = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::function<void()>> tasks;
    for (int i = 0; i < n; ++i)
        tasks.push_back([&, i] {
            auto model = CaeModel::build(config, mix_seed(topt.seed, 0xe0, static_cast<uint64_t>(i)));
            TrainOptions row_opt = topt;
            row_opt.seed = mix_seed(topt.seed, 0xe1, static_cast<uint64_t>(i));
            train(model, train_half[static_cast<size_t>(i)], nullptr, row_opt);
            for (int j = 0; j < n; ++j) {
                const auto rebuilt = model.reconstruct(test_half[static_cast<size_t>(j)]);
                out.sndr_db(i, j) = sndr(test_half[static_cast<size_t>(j)], rebuilt);
            }
        });
    run_pool(tasks, threads);
    return out;
}

void write_rate_quality_csv(const std::string& path, const std::vector<RateQualityPoint>& points) {
    std::string body = "method,setting,cr,cr_std,sndr_db,sndr_std,repeats,config_digest\n";
    for (const auto& p : points) {
        body += p.method + "," + p.setting + "," + fmt(p.cr) + "," + fmt(p.cr_std) + "," +
                fmt(p.sndr_db) + "," + fmt(p.sndr_std) + "," + std::to_string(p.repeats) + "," +
                std::to_string(p.config_digest) + "\n";
    }
    write_text_file(path, body);
}

void write_sorting_csv(const std::string& path, const SortingReport& report) {
    if (report.crs.size() != report.accuracy_after.size())
        throw std::invalid_argument("sorting report: one accuracy per ratio required");
    std::string body = "sequence,noise_sigma,cr,accuracy_before,accuracy_after\n";
    for (size_t i = 0; i < report.crs.size(); ++i) {
        body += report.sequence_id + "," + fmt(report.noise_sigma) + "," + fmt(report.crs[i]) +
                "," + fmt(report.accuracy_before) + "," + fmt(report.accuracy_after[i]) + "\n";
    }
    write_text_file(path, body);
}

void write_codewords_csv(const std::string& path, const CodewordStats& stats) {
    std::string body = "symbol,count,frequency\n";
    const double total = std::max<double>(1.0, static_cast<double>(stats.histogram.total));
    for (size_t s = 0; s < stats.histogram.counts.size(); ++s) {
        body += std::to_string(s) + "," + std::to_string(stats.histogram.counts[s]) + "," +
                fmt(static_cast<double>(stats.histogram.counts[s]) / total) + "\n";
    }
    write_text_file(path, body);
}

void write_generalization_csv(const std::string& path, const GeneralizationMatrix& matrix) {
    std::string body = "train_id";
    for (const auto& id : matrix.ids) body += "," + id;
    body += "\n";
    for (Eigen::Index i = 0; i < matrix.sndr_db.rows(); ++i) {
        body += matrix.ids[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < matrix.sndr_db.cols(); ++j)
            body += "," + fmt(matrix.sndr_db(i, j));
        body += "\n";
    }
    write_text_file(path, body);
}

void write_rate_quality_svg(const std::string& path, const std::vector<RateQualityPoint>& points) {
    if (points.empty()) throw std::invalid_argument("svg: no points");
    const double width = 640, height = 440;
    const double left = 70, right = 20, top = 20, bottom = 50;

    double cr_lo = std::numeric_limits<double>::infinity(), cr_hi = 0;
    double q_lo = std::numeric_limits<double>::infinity(), q_hi = -q_lo;
    for (const auto& p : points) {
        cr_lo = std::min(cr_lo, p.cr);
        cr_hi = std::max(cr_hi, p.cr);
        q_lo = std::min(q_lo, p.sndr_db);
        q_hi = std::max(q_hi, p.sndr_db);
    }
    if (cr_hi <= cr_lo) cr_hi = cr_lo * 2 + 1;
    if (q_hi <= q_lo) q_hi = q_lo + 1;
    q_lo -= 0.05 * (q_hi - q_lo);
    q_hi += 0.05 * (q_hi - q_lo);
    const double lx_lo = std::log10(std::max(cr_lo, 1e-6));
    const double lx_hi = std::log10(std::max(cr_hi, cr_lo + 1e-6));

    auto x_of = [&](double cr) {
        return left + (std::log10(std::max(cr, 1e-6)) - lx_lo) / (lx_hi - lx_lo) *
                          (width - left - right);
    };
    auto y_of = [&](double q) {
        return height - bottom - (q - q_lo) / (q_hi - q_lo) * (height - top - bottom);
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt(width) +
                      " " + fmt(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(height - bottom) + "\" x2=\"" +
           fmt(width - right) + "\" y2=\"" + fmt(height - bottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) +
           "\" y2=\"" + fmt(height - bottom) + "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double cr = std::pow(10.0, lx_lo + (lx_hi - lx_lo) * tick / 4.0);
        const double q = q_lo + (q_hi - q_lo) * tick / 4.0;
        svg += "<text x=\"" + fmt(x_of(cr)) + "\" y=\"" + fmt(height - bottom + 18) +
               "\" text-anchor=\"middle\">" + fmt(cr) + "</text>\n";
        svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(y_of(q) + 4) +
               "\" text-anchor=\"end\">" + fmt(q) + "</text>\n";
    }
    svg += "<text x=\"" + fmt((left + width - right) / 2) + "\" y=\"" + fmt(height - 12) +
           "\" text-anchor=\"middle\">compression ratio</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt((top + height - bottom) / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt((top + height - bottom) / 2) + ")\">SNDR (dB)</text>\n";

    std::vector<std::string> methods;
    for (const auto& p : points)
        if (std::find(methods.begin(), methods.end(), p.method) == methods.end())
            methods.push_back(p.method);
    static const char* kPalette[5] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#7f7f7f"};
    for (size_t mi = 0; mi < methods.size(); ++mi) {
        const char* color = kPalette[mi % 5];
        std::vector<const RateQualityPoint*> line;
        for (const auto& p : points)
            if (p.method == methods[mi]) line.push_back(&p);
        std::sort(line.begin(), line.end(),
                  [](const auto* a, const auto* b) { return a->cr < b->cr; });
        std::string poly;
        for (const auto* p : line) {
            poly += fmt(x_of(p->cr)) + "," + fmt(y_of(p->sndr_db)) + " ";
            svg += "<circle cx=\"" + fmt(x_of(p->cr)) + "\" cy=\"" + fmt(y_of(p->sndr_db)) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        }
        if (line.size() > 1)
            svg += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"" + color +
                   "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + fmt(width - right - 100) + "\" y=\"" + fmt(top + 16 + 16 * mi) +
               "\" fill=\"" + color + "\">" + methods[mi] + "</text>\n";
    }
    svg += "</svg>\n";
    write_text_file(path, svg);
}

}  // namespace spikezip
