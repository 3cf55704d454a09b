#include "spikezip/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace spikezip {

PcaBasis pca_fit(const Eigen::MatrixXd& spikes, int m) {
    const auto n = spikes.rows();
    const auto d = spikes.cols();
    if (m < 1 || m > d) throw std::invalid_argument("component count must be in [1, D]");
    if (n < m) throw std::invalid_argument("need at least m training spikes");

    PcaBasis out;
    out.mean = spikes.colwise().mean();
    Eigen::MatrixXd centered = spikes.rowwise() - out.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    Eigen::MatrixXd cov = centered.transpose() * centered / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    out.basis.resize(m, d);
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd v = es.eigenvectors().col(d - 1 - i);  // descending eigenvalue
        Eigen::Index peak = 0;
        v.cwiseAbs().maxCoeff(&peak);
        if (v[peak] < 0.0) v = -v;
        out.basis.row(i) = v.transpose();
    }
    return out;
}

BaselineResult pca_codec(const PcaBasis& basis, const Eigen::MatrixXd& spikes) {
    if (spikes.cols() != basis.dim())
        throw std::invalid_argument("spike length does not match the fitted basis");
    BaselineResult r;
    Eigen::MatrixXd centered = spikes.rowwise() - basis.mean.transpose();
    r.coefficients = centered * basis.basis.transpose();
    r.reconstruction = r.coefficients * basis.basis;
    r.reconstruction.rowwise() += basis.mean.transpose();
    r.cr = static_cast<double>(basis.dim()) / basis.m();
    return r;
}

namespace {

/// Rows of the orthonormal DCT-II matrix: T(k, n) = s_k cos(pi (2n+1) k / 2D).
Eigen::MatrixXd dct_matrix(int d) {
    Eigen::MatrixXd t(d, d);
    const double scale0 = std::sqrt(1.0 / d);
    const double scale = std::sqrt(2.0 / d);
    for (int k = 0; k < d; ++k)
        for (int n = 0; n < d; ++n)
            t(k, n) = (k == 0 ? scale0 : scale) *
                      std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / (2.0 * d));
    return t;
}

}  // namespace

BaselineResult dct_codec(const Eigen::MatrixXd& spikes, int m) {
    const auto d = spikes.cols();
    if (m < 1 || m > d) throw std::invalid_argument("coefficient count must be in [1, D]");
    const Eigen::MatrixXd t = dct_matrix(static_cast<int>(d));
    BaselineResult r;
    r.coefficients = spikes * t.topRows(m).transpose();
    r.reconstruction = r.coefficients * t.topRows(m);
    r.cr = static_cast<double>(d) / m;
    return r;
}

namespace wavelet {

const std::array<double, 8> kSym4Lo = {
    -0.07576571478927333,  -0.02963552764599851, 0.49761866763201545,
    0.8037387518059161,    0.29785779560527736,  -0.09921954357684722,
    -0.012603967262037833, 0.0322231006040427,
};

std::array<double, 8> sym4_hi() {
    std::array<double, 8> g{};
    for (int n = 0; n < 8; ++n)
        g[static_cast<size_t>(n)] = (n % 2 == 0 ? 1.0 : -1.0) * kSym4Lo[static_cast<size_t>(7 - n)];
    return g;
}

void analyze_level(const double* signal, int length, double* approx, double* detail) {
    if (length < 2 || length % 2 != 0)
        throw std::invalid_argument("analysis level needs an even signal length");
    const auto g = sym4_hi();
    const int half = length / 2;
    for (int i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (int n = 0; n < 8; ++n) {
            const double s = signal[(2 * i + n) % length];
            a += kSym4Lo[static_cast<size_t>(n)] * s;
            d += g[static_cast<size_t>(n)] * s;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

void synthesize_level(const double* approx, const double* detail, int half, double* signal) {
    const auto g = sym4_hi();
    const int length = 2 * half;
    std::fill(signal, signal + length, 0.0);
    for (int i = 0; i < half; ++i)
        for (int n = 0; n < 8; ++n)
            signal[(2 * i + n) % length] +=
                approx[i] * kSym4Lo[static_cast<size_t>(n)] + detail[i] * g[static_cast<size_t>(n)];
}

std::vector<double> analyze_full(const std::vector<double>& signal) {
    const size_t p = signal.size();
    if (p == 0 || (p & (p - 1)) != 0)
        throw std::invalid_argument("full analysis needs a power-of-two length");
    std::vector<double> coeffs(p);
    std::vector<double> approx = signal;
    // Details land at the tail, coarsest first after the scaling coefficient.
    size_t detail_end = p;
    while (approx.size() >= 2) {
        const int half = static_cast<int>(approx.size()) / 2;
        std::vector<double> a(static_cast<size_t>(half)), d(static_cast<size_t>(half));
        analyze_level(approx.data(), static_cast<int>(approx.size()), a.data(), d.data());
        std::copy(d.begin(), d.end(), coeffs.begin() + (detail_end - d.size()));
        detail_end -= d.size();
        approx = std::move(a);
    }
    coeffs[0] = approx[0];
    return coeffs;
}

std::vector<double> synthesize_full(const std::vector<double>& coefficients) {
    const size_t p = coefficients.size();
    if (p == 0 || (p & (p - 1)) != 0)
        throw std::invalid_argument("full synthesis needs a power-of-two length");
    std::vector<double> approx{coefficients[0]};
    size_t detail_begin = 1;
    while (approx.size() < p) {
        const size_t half = approx.size();
        std::vector<double> signal(2 * half);
        synthesize_level(approx.data(), coefficients.data() + detail_begin,
                         static_cast<int>(half), signal.data());
        detail_begin += half;
        approx = std::move(signal);
    }
    return approx;
}

}  // namespace wavelet

DwtResult dwt_codec(const Eigen::MatrixXd& spikes, int m, int w_bits) {
    const auto n = spikes.rows();
    const auto d = spikes.cols();
    if (d < 1) throw std::invalid_argument("empty spikes");
    if (w_bits < 1) throw std::invalid_argument("bit width must be positive");
    size_t p = 1;
    while (p < static_cast<size_t>(d)) p *= 2;
    if (m < 1 || static_cast<size_t>(m) > p)
        throw std::invalid_argument("kept coefficient count must be in [1, padded length]");

    DwtResult r;
    r.coefficients.setZero(n, static_cast<Eigen::Index>(p));
    r.reconstruction.resize(n, d);
    r.kept.resize(static_cast<size_t>(n));
    std::vector<double> padded(p);
    for (Eigen::Index row = 0; row < n; ++row) {
        std::fill(padded.begin(), padded.end(), 0.0);
        for (Eigen::Index c = 0; c < d; ++c) padded[static_cast<size_t>(c)] = spikes(row, c);
        auto coeffs = wavelet::analyze_full(padded);

        // Largest magnitudes win; ties go to the lower index so kept sets are
        // nested as m grows.
        std::vector<int> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ma = std::abs(coeffs[static_cast<size_t>(a)]);
            const double mb = std::abs(coeffs[static_cast<size_t>(b)]);
            return ma != mb ? ma > mb : a < b;
        });
        auto& kept = r.kept[static_cast<size_t>(row)];
        kept.assign(order.begin(), order.begin() + m);
        std::sort(kept.begin(), kept.end());

        std::vector<double> sparse(p, 0.0);
        for (int idx : kept) {
            sparse[static_cast<size_t>(idx)] = coeffs[static_cast<size_t>(idx)];
            r.coefficients(row, idx) = coeffs[static_cast<size_t>(idx)];
        }
        auto rec = wavelet::synthesize_full(sparse);
        for (Eigen::Index c = 0; c < d; ++c) r.reconstruction(row, c) = rec[static_cast<size_t>(c)];
    }
    r.cr = (static_cast<double>(d) * w_bits) / (static_cast<double>(w_bits) * m + d);
    return r;
}

}  // namespace spikezip
