#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikezip::nn {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;
using Shape = std::vector<int>;

/// Dense row-major tensor of doubles with an optional gradient buffer.
/// Values are kept at 64-bit precision during training and gradient checks;
/// checkpoints quantize to 32-bit on write.
class Tensor {
public:
    Shape shape;
    std::vector<double> v;
    std::vector<double> g;  // empty unless requires_grad
    bool requires_grad = false;

    static TensorPtr zeros(Shape shape, bool requires_grad = false);
    static TensorPtr full(Shape shape, double value, bool requires_grad = false);
    static TensorPtr from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static TensorPtr scalar(double value);

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int dim(size_t i) const { return shape.at(i); }
    int ndim() const { return static_cast<int>(shape.size()); }

    void require_grad();          // allocates (and zeroes) the gradient buffer
    void zero_grad();
    bool all_finite() const;      // values only
    bool grad_finite() const;

    double item() const;          // scalar tensors only

    static int64_t shape_numel(const Shape& s);
    static std::string shape_str(const Shape& s);
};

/// Records backward closures during forward passes. Nodes run in reverse
/// construction order, which is a valid topological order for graphs built
/// forward. Construction and backward are single-threaded per tape.
class Tape {
public:
    void push(std::function<void()> back) { nodes_.push_back(std::move(back)); }

    /// Seeds d(loss)/d(loss)=1 and propagates to every recorded input.
    /// The loss must be a finite scalar.
    void backward(const TensorPtr& loss);

    void clear() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

private:
    std::vector<std::function<void()>> nodes_;
};

}  // namespace spikezip::nn
