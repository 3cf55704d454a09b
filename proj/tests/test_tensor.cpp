#include <cmath>
#include <limits>

#include "doctest.h"
#include "spikezip/ops.hpp"
#include "spikezip/tensor.hpp"

using namespace spikezip::nn;

TEST_CASE("factories produce consistent shape/value layouts") {
    auto z = Tensor::zeros({2, 3});
    CHECK(z->numel() == 6);
    CHECK(z->ndim() == 2);
    CHECK(z->dim(1) == 3);
    for (double x : z->v) CHECK(x == 0.0);

    auto f = Tensor::full({4}, 2.5);
    for (double x : f->v) CHECK(x == 2.5);

    auto t = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK(t->v[3] == 4.0);

    CHECK(Tensor::scalar(7.0)->item() == 7.0);
}

TEST_CASE("from rejects mismatched value counts") {
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::zeros({-1, 2}), std::invalid_argument);
}

TEST_CASE("gradient buffers track requires_grad") {
    auto t = Tensor::zeros({3});
    CHECK(t->g.empty());
    t->require_grad();
    CHECK(t->g.size() == 3);
    t->g[0] = 5.0;
    t->zero_grad();
    CHECK(t->g[0] == 0.0);
}

TEST_CASE("item rejects non-scalars") {
    CHECK_THROWS_AS(Tensor::zeros({2})->item(), std::invalid_argument);
}

TEST_CASE("finiteness checks scan values and gradients") {
    auto t = Tensor::from({2}, {1.0, 2.0}, true);
    CHECK(t->all_finite());
    CHECK(t->grad_finite());
    t->v[1] = std::nan("");
    CHECK_FALSE(t->all_finite());
}

TEST_CASE("backward validates the loss") {
    Tape tape;
    CHECK_THROWS_AS(tape.backward(Tensor::zeros({2}, true)), std::invalid_argument);
    CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), std::invalid_argument);  // detached
    auto bad = Tensor::zeros({1}, true);
    bad->v[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(tape.backward(bad), std::runtime_error);
}

TEST_CASE("backward seeds the loss gradient and runs nodes in reverse") {
    auto x = Tensor::from({4}, {1, 2, 3, 4}, true);
    Tape tape;
    auto loss = sum_all(&tape, x);
    tape.backward(loss);
    for (double gx : x->g) CHECK(gx == 1.0);
    CHECK(tape.size() == 1);
    tape.clear();
    CHECK(tape.size() == 0);
}

TEST_CASE("mse gradient matches the analytic derivative") {
    auto x = Tensor::from({1}, {2.0}, true);
    auto zero = Tensor::zeros({1});
    Tape tape;
    auto loss = mse(&tape, x, zero);
    tape.backward(loss);
    CHECK(x->g[0] == doctest::Approx(4.0));  // d/dx mean((x-0)^2) = 2x
}
