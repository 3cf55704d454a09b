#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "spikezip/baselines.hpp"
#include "spikezip/evaluation.hpp"

using namespace spikezip;

namespace {

CaeConfig tiny_config() {
    CaeConfig c;
    c.m_spk = 1;
    c.d_samples = 8;
    c.w_bits = 16;
    c.n_feat = 2;
    c.k_codewords = 8;
    c.width = 4;
    c.groups = 1;
    return c;
}

SpikeBatch synthetic_batch(int n, int d, int seed, double noise) {
    auto tpls = make_templates(2, d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> eps(0.0, noise);
    std::uniform_real_distribution<double> amp(0.8, 1.2);
    SpikeBatch batch;
    std::vector<double> values;
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        const double a = amp(rng);
        for (int j = 0; j < d; ++j) values.push_back(a * tpls[label].waveform[j] + eps(rng));
        batch.labels.push_back(label);
        batch.timestamps.push_back(100 * i);
        batch.overlapped.push_back(0);
    }
    batch.spikes = nn::Tensor::from({n, 1, d}, std::move(values));
    batch.channel_map = {0};
    return batch;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("sndr matches hand-derived values and rails") {
    CHECK(sndr(std::vector<double>{3, 4}, {3, 3}) ==
          doctest::Approx(20.0 * std::log10(5.0)).epsilon(1e-12));
    CHECK(sndr(std::vector<double>{3, 4}, {3, 3}) == doctest::Approx(13.9794000867).epsilon(1e-9));

    // Perfect reconstruction hits the cap; an all-zero guess scores 0 dB.
    CHECK(sndr(std::vector<double>{1, 2, 3}, {1, 2, 3}) == kSndrCapDb);
    CHECK(sndr(std::vector<double>{3, 4}, {0, 0}) == doctest::Approx(0.0).epsilon(1e-12));

    // Halving the error adds exactly 20*log10(2) dB.
    const double coarse = sndr(std::vector<double>{3, 4}, {3, 3});
    const double fine = sndr(std::vector<double>{3, 4}, {3, 3.5});
    CHECK(fine - coarse == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(sndr(std::vector<double>{0, 0}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(sndr(std::vector<double>{1}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(sndr(std::vector<double>{}, {}), std::invalid_argument);
}

TEST_CASE("kmeans separates blobs and matches brute force on small instances") {
    SUBCASE("two well-separated blobs") {
        Eigen::MatrixXd pts(40, 2);
        std::mt19937_64 rng(4);
        std::normal_distribution<double> eps(0.0, 0.05);
        for (int i = 0; i < 40; ++i) {
            const double cx = i < 20 ? 0.0 : 10.0;
            pts(i, 0) = cx + eps(rng);
            pts(i, 1) = eps(rng);
        }
        auto res = kmeans(pts, 2, 5, 1);
        std::vector<int> truth(40);
        for (int i = 20; i < 40; ++i) truth[i] = 1;
        CHECK(match_accuracy(truth, res.labels, 2) == 1.0);
    }

    SUBCASE("k equal to the point count gives zero inertia") {
        Eigen::MatrixXd pts(5, 3);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) pts(i, j) = u(rng);
        auto res = kmeans(pts, 5, 3, 2);
        CHECK(res.inertia == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("eight points, k=2: optimum verified by exhaustive partition") {
        Eigen::MatrixXd pts(8, 2);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 2; ++j) pts(i, j) = u(rng);

        double best = std::numeric_limits<double>::infinity();
        for (int mask = 1; mask < 255; ++mask) {  // proper nonempty bipartitions
            Eigen::RowVector2d m0 = Eigen::RowVector2d::Zero(), m1 = m0;
            int n0 = 0, n1 = 0;
            for (int i = 0; i < 8; ++i)
                if (mask & (1 << i)) {
                    m0 += pts.row(i);
                    ++n0;
                } else {
                    m1 += pts.row(i);
                    ++n1;
                }
            m0 /= n0;
            m1 /= n1;
            double inertia = 0.0;
            for (int i = 0; i < 8; ++i)
                inertia += (pts.row(i) - (mask & (1 << i) ? m0 : m1)).squaredNorm();
            best = std::min(best, inertia);
        }
        auto res = kmeans(pts, 2, 30, 3);
        CHECK(res.inertia == doctest::Approx(best).epsilon(1e-12));
    }

    SUBCASE("restarts only improve the objective, determinism holds") {
        Eigen::MatrixXd pts(30, 2);
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 2; ++j) pts(i, j) = u(rng);
        auto one = kmeans(pts, 4, 1, 9);
        auto many = kmeans(pts, 4, 25, 9);
        CHECK(many.inertia <= one.inertia);
        auto again = kmeans(pts, 4, 25, 9);
        CHECK(again.labels == many.labels);
        CHECK(again.inertia == many.inertia);
    }

    SUBCASE("argument validation") {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(3, 2);
        CHECK_THROWS_AS(kmeans(pts, 4, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(kmeans(pts, 0, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(kmeans(pts, 2, 0, 1), std::invalid_argument);
    }
}

TEST_CASE("best-permutation matching: exhaustive and Hungarian agree") {
    SUBCASE("identity and relabeled predictions score 1") {
        std::vector<int> truth = {0, 1, 2, 0, 1, 2};
        CHECK(match_accuracy(truth, truth, 3) == 1.0);
        std::vector<int> relabeled = {2, 0, 1, 2, 0, 1};  // same partition, new ids
        CHECK(match_accuracy(truth, relabeled, 3) == 1.0);
    }

    SUBCASE("hand-checked 3-cluster instance") {
        // counts: truth 0 -> pred {0,0,1}, truth 1 -> pred {1,1}, truth 2 -> {2}
        std::vector<int> truth = {0, 0, 0, 1, 1, 2};
        std::vector<int> pred = {0, 0, 1, 1, 1, 2};
        CHECK(match_accuracy(truth, pred, 3) == doctest::Approx(5.0 / 6.0));
    }

    SUBCASE("k=7 routes through the assignment solver and matches brute force") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 20; ++trial) {
            std::uniform_int_distribution<int> lab(0, 6);
            std::vector<int> truth(60), pred(60);
            for (int i = 0; i < 60; ++i) {
                truth[i] = lab(rng);
                pred[i] = lab(rng);
            }
            const double fast = match_accuracy(truth, pred, 7);

            Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(7, 7);
            for (int i = 0; i < 60; ++i) counts(truth[i], pred[i]) += 1.0;
            std::vector<int> perm(7);
            std::iota(perm.begin(), perm.end(), 0);
            double brute = 0.0;
            do {
                double sum = 0.0;
                for (int p = 0; p < 7; ++p) sum += counts(perm[p], p);
                brute = std::max(brute, sum);
            } while (std::next_permutation(perm.begin(), perm.end()));
            CHECK(fast == doctest::Approx(brute / 60.0).epsilon(1e-12));
        }
    }

    SUBCASE("validation") {
        CHECK_THROWS_AS(match_accuracy({0, 1}, {0}, 2), std::invalid_argument);
        CHECK_THROWS_AS(match_accuracy({0, 5}, {0, 1}, 2), std::invalid_argument);
        CHECK_THROWS_AS(match_accuracy({}, {}, 2), std::invalid_argument);
    }
}

TEST_CASE("sorting accuracy: separable templates sort perfectly, noise floors at chance") {
    const int d = 48;
    auto batch = synthetic_batch(120, d, 5, 0.02);
    const auto flat = to_matrix(batch.spikes);
    CHECK(sorting_accuracy(flat, batch.labels, 2, 10, 1) == 1.0);

    // Structureless data with random labels: best permutation can only
    // exploit chance fluctuations, so accuracy sits just above 1/2.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_int_distribution<int> coin(0, 1);
    double total = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd blob(400, 6);
        std::vector<int> labels(400);
        for (int i = 0; i < 400; ++i) {
            for (int j = 0; j < 6; ++j) blob(i, j) = u(rng);
            labels[i] = coin(rng);
        }
        total += sorting_accuracy(blob, labels, 2, 5, 100 + trial);
    }
    const double chance = total / 5.0;
    CHECK(chance >= 0.5);  // permutation matching never scores below chance
    CHECK(chance < 0.60);
}

TEST_CASE("codeword stats stay within the information-theoretic rails") {
    auto config = tiny_config();
    auto model = CaeModel::build(config, 3);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> values(200 * 8);
    for (auto& v : values) v = u(rng);
    auto spikes = nn::Tensor::from({200, 1, 8}, std::move(values));

    auto stats = codeword_stats(model, spikes);
    CHECK(stats.histogram.total == 200 * 2);  // n_feat indexes per spike
    CHECK(stats.entropy_bits <= std::log2(8.0) + 1e-12);
    CHECK(stats.entropy_bits >= 0.0);
    CHECK(stats.usage_fraction > 0.0);
    CHECK(stats.usage_fraction <= 1.0);

    // A single spike with a single latent vector is a degenerate stream.
    auto one_config = tiny_config();
    one_config.n_feat = 1;
    auto one_model = CaeModel::build(one_config, 3);
    auto one = codeword_stats(one_model, nn::Tensor::from({1, 1, 8}, std::vector<double>(8, 0.5)));
    CHECK(one.histogram.total == 1);
    CHECK(one.entropy_bits == 0.0);
    CHECK(one.usage_fraction == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("rate-quality sweep: frozen ratios, ordering, reproducibility") {
    const int d = 48;
    auto batch = synthetic_batch(80, d, 6, 0.05);

    SweepOptions opts;
    opts.baseline_ms = {2, 4, 8};
    opts.repeats = 3;
    opts.seed = 11;

    auto points = sweep(batch, opts);
    REQUIRE(points.size() == 9);  // 3 methods x 3 settings

    auto find = [&](const std::string& method, const std::string& setting) {
        for (const auto& p : points)
            if (p.method == method && p.setting == setting) return p;
        FAIL("missing point ", method, " ", setting);
        return points[0];
    };

    // Linear-basis ratios are exact: D/m, independent of the split.
    CHECK(find("pca", "m=8").cr == 6.0);
    CHECK(find("pca", "m=8").cr_std == 0.0);
    CHECK(find("dct", "m=4").cr == 12.0);
    CHECK(find("dwt", "m=4").cr == doctest::Approx(48.0 * 16 / (16 * 4 + 48)).epsilon(1e-12));

    // Nested coefficient sets: quality is non-increasing as m drops.
    for (const std::string method : {"pca", "dct", "dwt"}) {
        CHECK(find(method, "m=8").sndr_db >= find(method, "m=4").sndr_db);
        CHECK(find(method, "m=4").sndr_db >= find(method, "m=2").sndr_db);
    }

    // On template data a fitted basis beats the fixed transforms.
    CHECK(find("pca", "m=2").sndr_db > find("dct", "m=2").sndr_db);

    for (const auto& p : points) {
        CHECK(p.repeats == 3);
        CHECK(p.cr_samples.size() == 3);
        CHECK(std::isfinite(p.sndr_db));
        CHECK(p.sndr_std >= 0.0);
    }

    // Bitwise reproducibility, including across worker counts.
    auto again = sweep(batch, opts);
    SweepOptions serial = opts;
    serial.threads = 1;
    auto one_thread = sweep(batch, serial);
    for (size_t i = 0; i < points.size(); ++i) {
        CHECK(again[i].sndr_samples == points[i].sndr_samples);
        CHECK(again[i].cr_samples == points[i].cr_samples);
        CHECK(one_thread[i].sndr_samples == points[i].sndr_samples);
    }

    SUBCASE("validation") {
        SweepOptions bad = opts;
        bad.repeats = 0;
        CHECK_THROWS_AS(sweep(batch, bad), std::invalid_argument);
        bad = opts;
        bad.baseline_ms = {0};
        CHECK_THROWS_AS(sweep(batch, bad), std::invalid_argument);
        bad = opts;
        bad.cae_configs = {tiny_config()};  // window 8 != batch window 48
        CHECK_THROWS_AS(sweep(batch, bad), std::invalid_argument);
    }
}

TEST_CASE("sweep trains the autoencoder and reports entropy-based ratios") {
    const int d = 8;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> eps(0.0, 0.05);
    SpikeBatch batch;
    std::vector<double> values;
    const double patterns[2][8] = {{0.1, 0.6, 1.0, 0.5, -0.4, -0.7, -0.2, 0.0},
                                   {-0.2, -0.8, -1.0, 0.3, 0.9, 0.4, 0.1, 0.0}};
    for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < d; ++j) values.push_back(patterns[i % 2][j] + eps(rng));
        batch.labels.push_back(i % 2);
        batch.timestamps.push_back(50 * i);
        batch.overlapped.push_back(0);
    }
    batch.spikes = nn::Tensor::from({64, 1, d}, std::move(values));
    batch.channel_map = {0};

    SweepOptions opts;
    opts.cae_configs = {tiny_config()};
    opts.repeats = 2;
    opts.seed = 4;
    opts.train.epochs = 400;
    opts.train.batch_size = 16;

    auto points = sweep(batch, opts);
    REQUIRE(points.size() == 1);
    const auto& p = points[0];
    CHECK(p.method == "cae");
    CHECK(p.setting == "K=8");
    CHECK(p.config_digest == tiny_config().digest());
    CHECK(p.repeats == 2);
    CHECK(std::isfinite(p.sndr_db));
    CHECK(p.sndr_db > 0.0);
    // CR = (M*D*W) / (N_feat * H) with H measured on the held-out half,
    // H <= log2 K = 3, so CR >= 8*16/(2*3).
    CHECK(p.cr >= 8.0 * 16 / (2 * 3) - 1e-9);
    for (double cr : p.cr_samples) CHECK(cr > 0.0);
}

TEST_CASE("generalization matrix follows the first-half/last-half protocol") {
    const int d = 8;
    auto make_batch = [&](int n, int seed, double scale) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> eps(0.0, 0.05);
        const double pattern[8] = {0.1, 0.6, 1.0, 0.5, -0.4, -0.7, -0.2, 0.0};
        SpikeBatch batch;
        std::vector<double> values;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) values.push_back(scale * pattern[j] + eps(rng));
            batch.labels.push_back(0);
            batch.timestamps.push_back(40 * i);
            batch.overlapped.push_back(0);
        }
        batch.spikes = nn::Tensor::from({n, 1, d}, std::move(values));
        batch.channel_map = {0};
        return batch;
    };

    TrainOptions topt;
    topt.epochs = 250;
    topt.batch_size = 16;
    topt.seed = 6;

    SUBCASE("square output with ids") {
        std::vector<SpikeBatch> seqs = {make_batch(48, 1, 1.0), make_batch(48, 2, 0.7)};
        auto result = generalization_matrix(seqs, {"a", "b"}, tiny_config(), topt);
        CHECK(result.ids == std::vector<std::string>{"a", "b"});
        REQUIRE(result.sndr_db.rows() == 2);
        REQUIRE(result.sndr_db.cols() == 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::isfinite(result.sndr_db(i, j)));

        const std::string path = "generalization.csv";
        write_generalization_csv(path, result);
        auto lines = read_lines(path);
        REQUIRE(lines.size() == 3);
        CHECK(lines[0] == "train_id,a,b");
        CHECK(lines[1].substr(0, 2) == "a,");
    }

    SUBCASE("1x1 matrix equals a plain train/evaluate run") {
        auto batch = make_batch(48, 3, 1.0);
        auto result = generalization_matrix({batch}, {"solo"}, tiny_config(), topt);
        REQUIRE(result.sndr_db.rows() == 1);
        CHECK(std::isfinite(result.sndr_db(0, 0)));
        CHECK(result.sndr_db(0, 0) > 0.0);

        auto rerun = generalization_matrix({batch}, {"solo"}, tiny_config(), topt);
        CHECK(rerun.sndr_db(0, 0) == result.sndr_db(0, 0));  // bitwise reproducible
    }

    SUBCASE("validation") {
        CHECK_THROWS_AS(generalization_matrix({}, {}, tiny_config(), topt),
                        std::invalid_argument);
        CHECK_THROWS_AS(generalization_matrix({make_batch(48, 1, 1.0)}, {"a", "b"}, tiny_config(),
                                              topt),
                        std::invalid_argument);
    }
}

TEST_CASE("csv and svg artifacts are well-formed") {
    std::vector<RateQualityPoint> points;
    RateQualityPoint a;
    a.method = "pca";
    a.setting = "m=4";
    a.cr = 12.0;
    a.sndr_db = 9.5;
    a.repeats = 5;
    RateQualityPoint b = a;
    b.method = "cae";
    b.setting = "K=64";
    b.cr = 40.0;
    b.sndr_db = 12.25;
    b.config_digest = 77;
    points = {a, b};

    write_rate_quality_csv("rq.csv", points);
    auto lines = read_lines("rq.csv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "method,setting,cr,cr_std,sndr_db,sndr_std,repeats,config_digest");
    CHECK(lines[1].substr(0, 9) == "pca,m=4,1");
    CHECK(lines[2].find("cae,K=64,40,") == 0);
    CHECK(lines[2].find(",77") != std::string::npos);

    SortingReport report;
    report.accuracy_before = 0.96;
    report.crs = {24.0, 64.0};
    report.accuracy_after = {0.95, 0.93};
    report.noise_sigma = 0.1;
    report.sequence_id = "seq1";
    write_sorting_csv("sorting.csv", report);
    lines = read_lines("sorting.csv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "sequence,noise_sigma,cr,accuracy_before,accuracy_after");
    CHECK(lines[1] == "seq1,0.1,24,0.96,0.95");

    CodewordStats stats;
    stats.histogram.counts = {3, 0, 1};
    stats.histogram.total = 4;
    write_codewords_csv("codewords.csv", stats);
    lines = read_lines("codewords.csv");
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] == "0,3,0.75");
    CHECK(lines[2] == "1,0,0");

    write_rate_quality_svg("rq.svg", points);
    std::ifstream svg_in("rq.svg");
    std::stringstream ss;
    ss << svg_in.rdbuf();
    const std::string svg = ss.str();
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("circle") != std::string::npos);
    CHECK(svg.find("pca") != std::string::npos);
    CHECK(svg.find("cae") != std::string::npos);
    CHECK(svg.find("SNDR") != std::string::npos);

    CHECK_THROWS_AS(write_rate_quality_svg("bad.svg", {}), std::invalid_argument);

    SortingReport bad = report;
    bad.accuracy_after.pop_back();
    CHECK_THROWS_AS(write_sorting_csv("bad.csv", bad), std::invalid_argument);
}

TEST_CASE("worker count respects the environment override") {
    CHECK(worker_count(3) == 3);
    setenv("SPIKEZIP_THREADS", "2", 1);
    CHECK(worker_count() == 2);
    setenv("SPIKEZIP_THREADS", "0", 1);
    CHECK(worker_count() >= 1);
    unsetenv("SPIKEZIP_THREADS");
    CHECK(worker_count() >= 1);
}
