#pragma once

#include "spikezip/tensor.hpp"

namespace spikezip::nn {

// All ops take an optional tape. With tape == nullptr the forward value is
// computed and nothing is recorded; a frozen model can run inference
// concurrently this way. Convolutions use symmetric zero padding of (k-1)/2
// so the temporal length is preserved (odd kernels only).

/// x: [N, C_in, L], w: [C_out, C_in/groups, k] -> [N, C_out, L]
TensorPtr conv1d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& bias, int groups);

/// Transposed convolution, the adjoint of conv1d with the same weight layout
/// transposed: x: [N, C_in, L], w: [C_in, C_out/groups, k] -> [N, C_out, L].
TensorPtr deconv1d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                   const TensorPtr& bias, int groups);

/// Per-channel standardization over the (N, L) axes. Training mode uses batch
/// statistics and updates the running buffers in place; eval mode uses the
/// running buffers. x: [N, C, L]; gamma/beta/run_mean/run_var: [C].
TensorPtr batch_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                     const TensorPtr& beta, const TensorPtr& run_mean,
                     const TensorPtr& run_var, bool training,
                     double momentum = 0.1, double eps = 1e-5);

TensorPtr relu(Tape* tape, const TensorPtr& x);

/// Average of each non-overlapping temporal pair: [N, C, L] -> [N, C, L/2].
TensorPtr avg_pool2(Tape* tape, const TensorPtr& x);

/// Nearest-neighbor repetition: [N, C, L] -> [N, C, 2L].
TensorPtr upsample2(Tape* tape, const TensorPtr& x);

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);

/// y = x + offset with offset treated as a constant: the gradient passes to x
/// verbatim. This is the straight-through path across the quantizer.
TensorPtr add_offset(Tape* tape, const TensorPtr& x, const std::vector<double>& offset);

/// rows: [K, d], idx: n entries in [0, K) -> [n, d]. Backward scatter-adds.
TensorPtr gather_rows(Tape* tape, const TensorPtr& rows, const std::vector<int>& idx);

/// Same elements, new shape (equal element counts). Gradient passes through.
TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape shape);

/// Mean squared error over all elements -> scalar.
TensorPtr mse(Tape* tape, const TensorPtr& a, const TensorPtr& b);

/// Sum of all elements -> scalar.
TensorPtr sum_all(Tape* tape, const TensorPtr& x);

}  // namespace spikezip::nn
