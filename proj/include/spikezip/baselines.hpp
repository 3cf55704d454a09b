#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace spikezip {

/// Linear basis fitted by principal component analysis.  Rows of `basis` are
/// the leading eigenvectors of the sample covariance, orthonormal and sorted
/// by descending eigenvalue, with a deterministic sign convention (the
/// largest-magnitude entry of each row is positive).
struct PcaBasis {
    Eigen::VectorXd mean;   // D
    Eigen::MatrixXd basis;  // m x D

    int m() const { return static_cast<int>(basis.rows()); }
    int dim() const { return static_cast<int>(basis.cols()); }
};

/// Fits the top-m principal components of `spikes` (rows = observations).
/// Requires 1 <= m <= D and at least m rows.
PcaBasis pca_fit(const Eigen::MatrixXd& spikes, int m);

/// Output of the linear baseline codecs.
struct BaselineResult {
    Eigen::MatrixXd coefficients;    // N x m transmitted values
    Eigen::MatrixXd reconstruction;  // N x D
    double cr = 0.0;
};

/// Projects each spike on the fitted basis and reconstructs; CR = D/m.
BaselineResult pca_codec(const PcaBasis& basis, const Eigen::MatrixXd& spikes);

/// Orthonormal DCT-II keeping the m leading coefficients; CR = D/m.
BaselineResult dct_codec(const Eigen::MatrixXd& spikes, int m);

/// Symmlet-4 wavelet codec: full-depth periodized analysis after zero-padding
/// to the next power of two, keep the m largest-magnitude coefficients.
struct DwtResult {
    Eigen::MatrixXd coefficients;        // N x P, zero except kept entries
    std::vector<std::vector<int>> kept;  // per spike: sorted kept positions
    Eigen::MatrixXd reconstruction;      // N x D (padding stripped)
    double cr = 0.0;
};

/// CR = D*W / (W*m + D): m coefficients at W bits plus D bits of positions.
DwtResult dwt_codec(const Eigen::MatrixXd& spikes, int m, int w_bits);

namespace wavelet {

/// Symmlet-4 analysis low-pass filter (8 taps).  The high-pass mate is the
/// quadrature mirror g[n] = (-1)^n h[7-n].
extern const std::array<double, 8> kSym4Lo;
std::array<double, 8> sym4_hi();

/// One periodized analysis level: `signal` (even length L) -> L/2 approx +
/// L/2 detail coefficients.
void analyze_level(const double* signal, int length, double* approx, double* detail);

/// Adjoint/inverse of analyze_level.
void synthesize_level(const double* approx, const double* detail, int half, double* signal);

/// Full dyadic analysis of a power-of-two-length signal, down to a single
/// scaling coefficient.  Layout: [scaling, coarsest detail, ..., finest
/// detail]; total length equals the input length.
std::vector<double> analyze_full(const std::vector<double>& signal);
std::vector<double> synthesize_full(const std::vector<double>& coefficients);

}  // namespace wavelet

}  // namespace spikezip
