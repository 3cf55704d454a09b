#include "spikezip/ops.hpp"

#include <cmath>
#include <cstring>

namespace spikezip::nn {

namespace {

// The three convolution kernels below cover forward and backward of both
// conv1d and deconv1d. Weight layout is W[A, B/groups, k]; channel a is a
// global index on the A side, channel b is group-local on the B side. The
// innermost loops run over the contiguous temporal axis so they vectorize.

// V(n, a, t) += sum_{b_l, dt} W(a, b_l, dt) * U(n, g(a)*Bpg + b_l, t + dt - pad)
void kernel_correlate(const double* W, const double* U, double* V,
                      int N, int A, int B, int groups, int k, int L) {
    const int Apg = A / groups, Bpg = B / groups, pad = (k - 1) / 2;
    for (int n = 0; n < N; ++n) {
        const double* Un = U + static_cast<int64_t>(n) * B * L;
        double* Vn = V + static_cast<int64_t>(n) * A * L;
        for (int a = 0; a < A; ++a) {
            const int g = a / Apg;
            double* out = Vn + static_cast<int64_t>(a) * L;
            for (int bl = 0; bl < Bpg; ++bl) {
                const double* in = Un + static_cast<int64_t>(g * Bpg + bl) * L;
                const double* wr = W + (static_cast<int64_t>(a) * Bpg + bl) * k;
                for (int dt = 0; dt < k; ++dt) {
                    const double wv = wr[dt];
                    const int off = dt - pad;
                    const int t0 = off < 0 ? -off : 0;
                    const int t1 = off > 0 ? L - off : L;
                    const double* src = in + off;
                    for (int t = t0; t < t1; ++t) out[t] += wv * src[t];
                }
            }
        }
    }
}

// V(n, g*Bpg + b_l, s) += sum_{a in group, dt} W(a, b_l, dt) * U(n, a, s - dt + pad)
void kernel_scatter(const double* W, const double* U, double* V,
                    int N, int A, int B, int groups, int k, int L) {
    const int Apg = A / groups, Bpg = B / groups, pad = (k - 1) / 2;
    for (int n = 0; n < N; ++n) {
        const double* Un = U + static_cast<int64_t>(n) * A * L;
        double* Vn = V + static_cast<int64_t>(n) * B * L;
        for (int g = 0; g < groups; ++g) {
            for (int bl = 0; bl < Bpg; ++bl) {
                double* out = Vn + static_cast<int64_t>(g * Bpg + bl) * L;
                for (int al = 0; al < Apg; ++al) {
                    const int a = g * Apg + al;
                    const double* in = Un + static_cast<int64_t>(a) * L;
                    const double* wr = W + (static_cast<int64_t>(a) * Bpg + bl) * k;
                    for (int dt = 0; dt < k; ++dt) {
                        const double wv = wr[dt];
                        const int off = pad - dt;
                        const int s0 = off < 0 ? -off : 0;
                        const int s1 = off > 0 ? L - off : L;
                        const double* src = in + off;
                        for (int s = s0; s < s1; ++s) out[s] += wv * src[s];
                    }
                }
            }
        }
    }
}

// G(a, b_l, dt) += sum_{n, t} U(n, g(a)*Bpg + b_l, t + dt - pad) * Q(n, a, t)
// The reduction runs over eight independent partial sums so the compiler can
// vectorize it without reassociating a single serial chain; the combination
// order is fixed, keeping results bit-deterministic.
void kernel_weight_grad(const double* U, const double* Q, double* G,
                        int N, int A, int B, int groups, int k, int L) {
    const int Apg = A / groups, Bpg = B / groups, pad = (k - 1) / 2;
    for (int n = 0; n < N; ++n) {
        const double* Un = U + static_cast<int64_t>(n) * B * L;
        const double* Qn = Q + static_cast<int64_t>(n) * A * L;
        for (int a = 0; a < A; ++a) {
            const int g = a / Apg;
            const double* q = Qn + static_cast<int64_t>(a) * L;
            for (int bl = 0; bl < Bpg; ++bl) {
                const double* in = Un + static_cast<int64_t>(g * Bpg + bl) * L;
                double* gr = G + (static_cast<int64_t>(a) * Bpg + bl) * k;
                for (int dt = 0; dt < k; ++dt) {
                    const int off = dt - pad;
                    const int t0 = off < 0 ? -off : 0;
                    const int t1 = off > 0 ? L - off : L;
                    const double* src = in + off;
                    double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
                    int t = t0;
                    for (; t + 8 <= t1; t += 8)
                        for (int j = 0; j < 8; ++j) lanes[j] += src[t + j] * q[t + j];
                    double tail = 0.0;
                    for (; t < t1; ++t) tail += src[t] * q[t];
                    gr[dt] += ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                              ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
                }
            }
        }
    }
}

void check_conv_args(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                     int groups, bool transposed) {
    if (!x || !w) throw std::invalid_argument("conv: null tensor");
    if (x->ndim() != 3 || w->ndim() != 3)
        throw std::invalid_argument("conv: expected x[N,C,L], w[.,.,k], got " +
                                    Tensor::shape_str(x->shape) + " / " + Tensor::shape_str(w->shape));
    const int k = w->dim(2);
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("conv: kernel must be odd and >= 1");
    if (groups < 1) throw std::invalid_argument("conv: groups must be >= 1");
    const int c_in = x->dim(1);
    const int w0 = w->dim(0), w1 = w->dim(1);
    if (transposed) {
        // w: [C_in, C_out/groups, k]
        if (w0 != c_in || c_in % groups != 0)
            throw std::invalid_argument("deconv: weight/input channel mismatch");
        if (bias && bias->numel() != static_cast<int64_t>(w1) * groups)
            throw std::invalid_argument("deconv: bias length mismatch");
    } else {
        // w: [C_out, C_in/groups, k]
        if (c_in % groups != 0 || w1 != c_in / groups || w0 % groups != 0)
            throw std::invalid_argument("conv: channels not divisible by groups or weight mismatch");
        if (bias && bias->numel() != w0)
            throw std::invalid_argument("conv: bias length mismatch");
    }
}

void add_channel_bias(Tensor& y, const Tensor& bias) {
    const int N = y.dim(0), C = y.dim(1), L = y.dim(2);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double* row = y.v.data() + (static_cast<int64_t>(n) * C + c) * L;
            const double b = bias.v[c];
            for (int t = 0; t < L; ++t) row[t] += b;
        }
}

void bias_grad(const Tensor& dy, Tensor& bias) {
    const int N = dy.dim(0), C = dy.dim(1), L = dy.dim(2);
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
            const double* row = dy.g.data() + (static_cast<int64_t>(n) * C + c) * L;
            for (int t = 0; t < L; ++t) acc += row[t];
        }
        bias.g[c] += acc;
    }
}

bool wants_grad(Tape* tape, std::initializer_list<const TensorPtr*> ts) {
    if (!tape) return false;
    for (auto* t : ts)
        if (*t && (*t)->requires_grad) return true;
    return false;
}

}  // namespace

TensorPtr conv1d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& bias, int groups) {
    check_conv_args(x, w, bias, groups, false);
    const int N = x->dim(0), C_in = x->dim(1), L = x->dim(2);
    const int C_out = w->dim(0), k = w->dim(2);
    auto y = Tensor::zeros({N, C_out, L});
    kernel_correlate(w->v.data(), x->v.data(), y->v.data(), N, C_out, C_in, groups, k, L);
    if (bias) add_channel_bias(*y, *bias);

    if (wants_grad(tape, {&x, &w, &bias})) {
        y->require_grad();
        tape->push([=]() {
            if (x->requires_grad)
                kernel_scatter(w->v.data(), y->g.data(), x->g.data(), N, C_out, C_in, groups, k, L);
            if (w->requires_grad)
                kernel_weight_grad(x->v.data(), y->g.data(), w->g.data(), N, C_out, C_in, groups, k, L);
            if (bias && bias->requires_grad) bias_grad(*y, *bias);
        });
    }
    return y;
}

TensorPtr deconv1d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                   const TensorPtr& bias, int groups) {
    check_conv_args(x, w, bias, groups, true);
    const int N = x->dim(0), C_in = x->dim(1), L = x->dim(2);
    const int C_out = w->dim(1) * groups, k = w->dim(2);
    auto y = Tensor::zeros({N, C_out, L});
    kernel_scatter(w->v.data(), x->v.data(), y->v.data(), N, C_in, C_out, groups, k, L);
    if (bias) add_channel_bias(*y, *bias);

    if (wants_grad(tape, {&x, &w, &bias})) {
        y->require_grad();
        tape->push([=]() {
            if (x->requires_grad)
                kernel_correlate(w->v.data(), y->g.data(), x->g.data(), N, C_in, C_out, groups, k, L);
            if (w->requires_grad)
                kernel_weight_grad(y->g.data(), x->v.data(), w->g.data(), N, C_in, C_out, groups, k, L);
            if (bias && bias->requires_grad) bias_grad(*y, *bias);
        });
    }
    return y;
}

TensorPtr batch_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                     const TensorPtr& beta, const TensorPtr& run_mean,
                     const TensorPtr& run_var, bool training, double momentum, double eps) {
    if (x->ndim() != 3) throw std::invalid_argument("batch_norm: expected [N,C,L]");
    const int N = x->dim(0), C = x->dim(1), L = x->dim(2);
    if (gamma->numel() != C || beta->numel() != C || run_mean->numel() != C || run_var->numel() != C)
        throw std::invalid_argument("batch_norm: affine/buffer length != channel count");
    const int64_t m = static_cast<int64_t>(N) * L;

    auto mean = std::vector<double>(C), var = std::vector<double>(C);
    if (training) {
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* row = x->v.data() + (static_cast<int64_t>(n) * C + c) * L;
                for (int t = 0; t < L; ++t) s += row[t];
            }
            mean[c] = s / static_cast<double>(m);
            double sq = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* row = x->v.data() + (static_cast<int64_t>(n) * C + c) * L;
                for (int t = 0; t < L; ++t) {
                    const double d = row[t] - mean[c];
                    sq += d * d;
                }
            }
            var[c] = sq / static_cast<double>(m);  // biased, also used for the running buffer
            run_mean->v[c] = (1.0 - momentum) * run_mean->v[c] + momentum * mean[c];
            run_var->v[c] = (1.0 - momentum) * run_var->v[c] + momentum * var[c];
        }
    } else {
        mean = run_mean->v;
        var = run_var->v;
    }

    auto y = Tensor::zeros({N, C, L});
    // xhat is needed by the backward pass; share it via the closure.
    auto xhat = std::make_shared<std::vector<double>>(x->v.size());
    auto inv_std = std::make_shared<std::vector<double>>(C);
    for (int c = 0; c < C; ++c) (*inv_std)[c] = 1.0 / std::sqrt(var[c] + eps);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const int64_t base = (static_cast<int64_t>(n) * C + c) * L;
            const double mu = mean[c], is = (*inv_std)[c], ga = gamma->v[c], be = beta->v[c];
            for (int t = 0; t < L; ++t) {
                const double xh = (x->v[base + t] - mu) * is;
                (*xhat)[base + t] = xh;
                y->v[base + t] = ga * xh + be;
            }
        }

    if (wants_grad(tape, {&x, &gamma, &beta})) {
        y->require_grad();
        tape->push([=]() {
            for (int c = 0; c < C; ++c) {
                double sum_dy = 0.0, sum_dy_xh = 0.0;
                for (int n = 0; n < N; ++n) {
                    const int64_t base = (static_cast<int64_t>(n) * C + c) * L;
                    for (int t = 0; t < L; ++t) {
                        sum_dy += y->g[base + t];
                        sum_dy_xh += y->g[base + t] * (*xhat)[base + t];
                    }
                }
                if (gamma->requires_grad) gamma->g[c] += sum_dy_xh;
                if (beta->requires_grad) beta->g[c] += sum_dy;
                if (!x->requires_grad) continue;
                const double ga_is = gamma->v[c] * (*inv_std)[c];
                if (training) {
                    const double inv_m = 1.0 / static_cast<double>(m);
                    for (int n = 0; n < N; ++n) {
                        const int64_t base = (static_cast<int64_t>(n) * C + c) * L;
                        for (int t = 0; t < L; ++t)
                            x->g[base + t] += ga_is * (y->g[base + t] - inv_m * sum_dy -
                                                       (*xhat)[base + t] * inv_m * sum_dy_xh);
                    }
                } else {
                    for (int n = 0; n < N; ++n) {
                        const int64_t base = (static_cast<int64_t>(n) * C + c) * L;
                        for (int t = 0; t < L; ++t) x->g[base + t] += ga_is * y->g[base + t];
                    }
                }
            }
        });
    }
    return y;
}

TensorPtr relu(Tape* tape, const TensorPtr& x) {
    auto y = Tensor::zeros(x->shape);
    const int64_t n = x->numel();
    for (int64_t i = 0; i < n; ++i) y->v[i] = x->v[i] > 0.0 ? x->v[i] : 0.0;
    if (wants_grad(tape, {&x})) {
        y->require_grad();
        tape->push([=]() {
            for (int64_t i = 0; i < n; ++i)
                if (x->v[i] > 0.0) x->g[i] += y->g[i];
        });
    }
    return y;
}

TensorPtr avg_pool2(Tape* tape, const TensorPtr& x) {
    if (x->ndim() != 3) throw std::invalid_argument("avg_pool2: expected [N,C,L]");
    const int N = x->dim(0), C = x->dim(1), L = x->dim(2);
    if (L % 2 != 0) throw std::invalid_argument("avg_pool2: odd temporal length " + std::to_string(L));
    const int H = L / 2;
    auto y = Tensor::zeros({N, C, H});
    for (int64_t r = 0; r < static_cast<int64_t>(N) * C; ++r) {
        const double* in = x->v.data() + r * L;
        double* out = y->v.data() + r * H;
        for (int t = 0; t < H; ++t) out[t] = 0.5 * (in[2 * t] + in[2 * t + 1]);
    }
    if (wants_grad(tape, {&x})) {
        y->require_grad();
        tape->push([=]() {
            for (int64_t r = 0; r < static_cast<int64_t>(N) * C; ++r) {
                double* gin = x->g.data() + r * L;
                const double* gout = y->g.data() + r * H;
                for (int t = 0; t < H; ++t) {
                    gin[2 * t] += 0.5 * gout[t];
                    gin[2 * t + 1] += 0.5 * gout[t];
                }
            }
        });
    }
    return y;
}

TensorPtr upsample2(Tape* tape, const TensorPtr& x) {
    if (x->ndim() != 3) throw std::invalid_argument("upsample2: expected [N,C,L]");
    const int N = x->dim(0), C = x->dim(1), L = x->dim(2);
    auto y = Tensor::zeros({N, C, 2 * L});
    for (int64_t r = 0; r < static_cast<int64_t>(N) * C; ++r) {
        const double* in = x->v.data() + r * L;
        double* out = y->v.data() + r * 2 * L;
        for (int t = 0; t < L; ++t) out[2 * t] = out[2 * t + 1] = in[t];
    }
    if (wants_grad(tape, {&x})) {
        y->require_grad();
        tape->push([=]() {
            for (int64_t r = 0; r < static_cast<int64_t>(N) * C; ++r) {
                double* gin = x->g.data() + r * L;
                const double* gout = y->g.data() + r * 2 * L;
                for (int t = 0; t < L; ++t) gin[t] += gout[2 * t] + gout[2 * t + 1];
            }
        });
    }
    return y;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw std::invalid_argument("add: shape mismatch " + Tensor::shape_str(a->shape) +
                                    " vs " + Tensor::shape_str(b->shape));
    auto y = Tensor::zeros(a->shape);
    const int64_t n = a->numel();
    for (int64_t i = 0; i < n; ++i) y->v[i] = a->v[i] + b->v[i];
    if (wants_grad(tape, {&a, &b})) {
        y->require_grad();
        tape->push([=]() {
            if (a->requires_grad)
                for (int64_t i = 0; i < n; ++i) a->g[i] += y->g[i];
            if (b->requires_grad)
                for (int64_t i = 0; i < n; ++i) b->g[i] += y->g[i];
        });
    }
    return y;
}

TensorPtr add_offset(Tape* tape, const TensorPtr& x, const std::vector<double>& offset) {
    if (static_cast<int64_t>(offset.size()) != x->numel())
        throw std::invalid_argument("add_offset: offset length mismatch");
    auto y = Tensor::zeros(x->shape);
    const int64_t n = x->numel();
    for (int64_t i = 0; i < n; ++i) y->v[i] = x->v[i] + offset[i];
    if (wants_grad(tape, {&x})) {
        y->require_grad();
        tape->push([=]() {
            for (int64_t i = 0; i < n; ++i) x->g[i] += y->g[i];
        });
    }
    return y;
}

TensorPtr gather_rows(Tape* tape, const TensorPtr& rows, const std::vector<int>& idx) {
    if (rows->ndim() != 2) throw std::invalid_argument("gather_rows: expected [K,d]");
    const int K = rows->dim(0), d = rows->dim(1);
    auto y = Tensor::zeros({static_cast<int>(idx.size()), d});
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= K) throw std::invalid_argument("gather_rows: index out of range");
        std::memcpy(y->v.data() + i * d, rows->v.data() + static_cast<int64_t>(idx[i]) * d,
                    sizeof(double) * d);
    }
    if (wants_grad(tape, {&rows})) {
        y->require_grad();
        auto indices = idx;
        tape->push([=]() {
            for (size_t i = 0; i < indices.size(); ++i) {
                double* dst = rows->g.data() + static_cast<int64_t>(indices[i]) * d;
                const double* src = y->g.data() + i * d;
                for (int j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }
    return y;
}

TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape shape) {
    if (Tensor::shape_numel(shape) != x->numel())
        throw std::invalid_argument("reshape: element count mismatch " +
                                    Tensor::shape_str(x->shape) + " -> " +
                                    Tensor::shape_str(shape));
    auto y = Tensor::from(std::move(shape), x->v);
    if (wants_grad(tape, {&x})) {
        y->require_grad();
        const int64_t n = x->numel();
        tape->push([=]() {
            for (int64_t i = 0; i < n; ++i) x->g[i] += y->g[i];
        });
    }
    return y;
}

TensorPtr mse(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw std::invalid_argument("mse: shape mismatch " + Tensor::shape_str(a->shape) +
                                    " vs " + Tensor::shape_str(b->shape));
    const int64_t n = a->numel();
    if (n == 0) throw std::invalid_argument("mse: empty tensors");
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = a->v[i] - b->v[i];
        acc += d * d;
    }
    auto y = Tensor::scalar(acc / static_cast<double>(n));
    if (wants_grad(tape, {&a, &b})) {
        y->require_grad();
        tape->push([=]() {
            const double s = 2.0 * y->g[0] / static_cast<double>(n);
            if (a->requires_grad)
                for (int64_t i = 0; i < n; ++i) a->g[i] += s * (a->v[i] - b->v[i]);
            if (b->requires_grad)
                for (int64_t i = 0; i < n; ++i) b->g[i] += s * (b->v[i] - a->v[i]);
        });
    }
    return y;
}

TensorPtr sum_all(Tape* tape, const TensorPtr& x) {
    double acc = 0.0;
    for (double xv : x->v) acc += xv;
    auto y = Tensor::scalar(acc);
    const int64_t n = x->numel();
    if (wants_grad(tape, {&x})) {
        y->require_grad();
        tape->push([=]() {
            for (int64_t i = 0; i < n; ++i) x->g[i] += y->g[0];
        });
    }
    return y;
}

}  // namespace spikezip::nn
