#include "spikezip/tensor.hpp"

#include <cmath>

namespace spikezip::nn {

int64_t Tensor::shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

std::string Tensor::shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

TensorPtr Tensor::zeros(Shape shape, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->v.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
    t->shape = std::move(shape);
    if (requires_grad) t->require_grad();
    return t;
}

TensorPtr Tensor::full(Shape shape, double value, bool requires_grad) {
    auto t = zeros(std::move(shape), requires_grad);
    for (auto& x : t->v) x = value;
    return t;
}

TensorPtr Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != static_cast<int64_t>(values.size()))
        throw std::invalid_argument("value count does not match shape " + shape_str(shape));
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->v = std::move(values);
    if (requires_grad) t->require_grad();
    return t;
}

TensorPtr Tensor::scalar(double value) { return from({1}, {value}); }

void Tensor::require_grad() {
    requires_grad = true;
    g.assign(v.size(), 0.0);
}

void Tensor::zero_grad() {
    if (requires_grad) g.assign(v.size(), 0.0);
}

bool Tensor::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool Tensor::grad_finite() const {
    for (double x : g)
        if (!std::isfinite(x)) return false;
    return true;
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape));
    return v[0];
}

void Tape::backward(const TensorPtr& loss) {
    if (!loss || loss->numel() != 1)
        throw std::invalid_argument("backward requires a scalar loss");
    if (!std::isfinite(loss->v[0]))
        throw std::runtime_error("backward on non-finite loss");
    if (!loss->requires_grad)
        throw std::invalid_argument("loss is detached from the graph");
    loss->g[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace spikezip::nn
