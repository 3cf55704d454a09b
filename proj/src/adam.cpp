#include "spikezip/adam.hpp"

#include <cmath>

namespace spikezip::nn {

Adam::Adam(std::vector<TensorPtr> params, double lr) : lr(lr), params_(std::move(params)) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        if (!p || !p->requires_grad)
            throw std::invalid_argument("adam: parameters must have gradient buffers");
        m_.emplace_back(p->numel(), 0.0);
        v_.emplace_back(p->numel(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        auto& m = m_[i];
        auto& v = v_[i];
        const int64_t n = p.numel();
        for (int64_t j = 0; j < n; ++j) {
            const double grad = p.g[j];
            m[j] = beta1 * m[j] + (1.0 - beta1) * grad;
            v[j] = beta2 * v[j] + (1.0 - beta2) * grad * grad;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p.v[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

}  // namespace spikezip::nn
