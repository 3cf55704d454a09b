#pragma once

#include "spikezip/tensor.hpp"

namespace spikezip::nn {

/// Bias-corrected ADAM over a fixed parameter list. Moment buffers are owned
/// here, matched to the parameter shapes at construction.
class Adam {
public:
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit Adam(std::vector<TensorPtr> params, double lr = 1e-3);

    /// One update from the gradients currently in each parameter's buffer.
    void step();
    void zero_grad();
    int64_t steps() const { return step_; }

private:
    std::vector<TensorPtr> params_;
    std::vector<std::vector<double>> m_, v_;
    int64_t step_ = 0;
};

}  // namespace spikezip::nn
