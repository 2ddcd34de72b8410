#include <doctest.h>

#include <cmath>
#include <limits>

#include "diffirm/gradcheck_suite.hpp"
#include "diffirm/optim.hpp"
#include "diffirm/rng.hpp"
#include "diffirm/tensor.hpp"

using namespace diffirm;

TEST_CASE("matmul basics") {
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1}, false);
    Tensor m = Tensor::from_data({2, 2}, {1, 2, 3, 4}, false);
    Tensor out = matmul(eye, m);
    CHECK(out.at(0, 0) == 1);
    CHECK(out.at(0, 1) == 2);
    CHECK(out.at(1, 0) == 3);
    CHECK(out.at(1, 1) == 4);

    Tensor col = Tensor::from_data({2, 1}, {1, 1}, false);
    Tensor prod = matmul(m, col);
    CHECK(prod.at(0, 0) == 3);
    CHECK(prod.at(1, 0) == 7);

    Tensor bad = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(matmul(bad, bad), dimension_error);
}

TEST_CASE("elementwise basics") {
    Tensor x = Tensor::from_data({2}, {1.25, -2.5}, false);
    Tensor ones = Tensor::full({2}, 1.0);
    auto out = mul(x, ones);
    CHECK(out.data()[0] == 1.25);
    CHECK(out.data()[1] == -2.5);

    Tensor a = Tensor::from_data({2}, {1, 2}, false);
    Tensor b = Tensor::from_data({2}, {3, 4}, false);
    auto s = add(a, b);
    CHECK(s.data()[0] == 4);
    CHECK(s.data()[1] == 6);

    Tensor c = Tensor::from_data({2}, {0, 5}, false);
    auto p = mul(a, c);
    CHECK(p.data()[0] == 0);
    CHECK(p.data()[1] == 10);

    CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), dimension_error);
}

TEST_CASE("activations") {
    Tensor x = Tensor::from_data({2}, {-1, 2}, false);
    auto r = relu(x);
    CHECK(r.data()[0] == 0);
    CHECK(r.data()[1] == 2);
    CHECK(sigmoid(Tensor::scalar(0)).value() == 0.5);
    CHECK(activation(Tensor::scalar(0), Act::tanh).value() == 0.0);
    // sigmoid output stays inside (0, 1)
    CHECK(sigmoid(Tensor::scalar(40)).value() < 1.0);
    CHECK(sigmoid(Tensor::scalar(-40)).value() > 0.0);
}

TEST_CASE("mse loss values and gradient") {
    Tensor p = Tensor::from_data({2}, {1, 2}, false);
    CHECK(mse_loss(p, p).value() == 0.0);

    Tensor zeros = Tensor::from_data({2}, {0, 0}, false);
    Tensor t = Tensor::from_data({2}, {1, 3}, false);
    CHECK(mse_loss(zeros, t).value() == doctest::Approx(5.0)); // (1 + 9) / 2

    Tensor pred = Tensor::from_data({1}, {2}, true);
    Tensor target = Tensor::from_data({1}, {0}, false);
    backward(mse_loss(pred, target));
    CHECK(pred.grad()[0] == doctest::Approx(4.0)); // d/dp (p - t)^2 = 2 (p - t)

    CHECK_THROWS_AS(mse_loss(Tensor::zeros({2}), Tensor::zeros({3})), dimension_error);
}

TEST_CASE("backward chain rule and contract") {
    Tensor x = Tensor::from_data({1}, {3}, true);
    Tensor loss = mul(x, x);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(6.0));
    CHECK_THROWS_AS(backward(loss), contract_error); // one pass per forward

    Tensor w = Tensor::from_data({2, 2}, {1, 0, 0, 1}, false);
    Tensor v = Tensor::from_data({2, 1}, {1, 1}, true);
    Tensor l2 = sum(matmul(w, v));
    backward(l2);
    CHECK(v.grad()[0] == doctest::Approx(1.0));
    CHECK(v.grad()[1] == doctest::Approx(1.0));
}

TEST_CASE("backward rejects non-scalar loss") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tensor y = mul(x, x);
    CHECK_THROWS_AS(backward(y), contract_error);
}

TEST_CASE("backward is linear in the loss") {
    auto run = [](double a, double b) {
        Tensor x = Tensor::from_data({3}, {0.5, -1.0, 2.0}, true);
        Tensor f = sum(mul(x, x));
        Tensor g = sum(mul(x, Tensor::from_data({3}, {1, 2, 3}, false)));
        backward(add(scale(f, a), scale(g, b)));
        return std::vector<double>(x.grad().begin(), x.grad().end());
    };
    auto combined = run(2.5, -1.25);
    auto fa = run(2.5, 0.0);
    auto gb = run(0.0, -1.25);
    for (std::size_t i = 0; i < combined.size(); ++i) {
        CHECK(std::abs(combined[i] - (fa[i] + gb[i])) < 1e-10);
    }
}

TEST_CASE("gradient accumulates on leaves across backward passes") {
    Tensor x = Tensor::from_data({1}, {2}, true);
    backward(mul(x, x));
    backward(mul(x, x)); // fresh graph, same leaf
    CHECK(x.grad()[0] == doctest::Approx(8.0));
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("non-finite construction is rejected") {
    CHECK_THROWS_AS(Tensor::from_data({1}, {std::numeric_limits<double>::quiet_NaN()}, false), contract_error);
    CHECK_THROWS_AS(Tensor::from_data({1}, {std::numeric_limits<double>::infinity()}, false), contract_error);
    Tensor x = Tensor::scalar(1.0);
    CHECK_THROWS_AS(x.set_data(std::vector<double>{std::nan("")}), contract_error);
}

TEST_CASE("adam zero gradient is the identity") {
    Tensor p = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
    std::vector<Tensor> params{p};
    Adam opt(AdamConfig{.lr = 0.1}, params);
    opt.step_with(params, {{0.0, 0.0, 0.0}});
    CHECK(p.data()[0] == 1.0);
    CHECK(p.data()[1] == -2.0);
    CHECK(p.data()[2] == 0.5);
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
    Tensor p = Tensor::from_data({1}, {0.0}, true);
    std::vector<Tensor> params{p};
    Adam opt(AdamConfig{.lr = 0.1}, params);
    opt.step_with(params, {{1.0}});
    CHECK(p.data()[0] == doctest::Approx(-0.1).epsilon(1e-6)); // mhat/sqrt(vhat) = sign(g)

    Tensor q = Tensor::from_data({1}, {0.0}, true);
    std::vector<Tensor> params2{q};
    Adam opt2(AdamConfig{.lr = 0.1}, params2);
    opt2.step_with(params2, {{-1.0}});
    CHECK(q.data()[0] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("adam rejects mismatched shapes") {
    Tensor p = Tensor::from_data({2}, {0.0, 0.0}, true);
    std::vector<Tensor> params{p};
    Adam opt(AdamConfig{}, params);
    CHECK_THROWS_AS(opt.step_with(params, {{1.0}}), dimension_error);
}

TEST_CASE("grad_check on known functions") {
    Tensor x = Tensor::from_data({3}, {1, 2, 3}, false);
    double e = grad_check([](const Tensor& t) { return sum(mul(t, t)); }, x, 1e-5);
    CHECK(e < 1e-6);

    // composite sigmoid net
    Tensor w1 = Tensor::from_data({3, 2}, {0.3, -0.2, 0.5, 0.1, -0.4, 0.25}, false);
    Tensor x2 = Tensor::from_data({1, 3}, {0.2, -0.7, 1.1}, false);
    double e3 = grad_check([&](const Tensor& t) { return sum(sigmoid(matmul(t, w1))); }, x2, 1e-5);
    CHECK(e3 < 1e-4);

    double e4 = grad_check([](const Tensor&) { return Tensor::scalar(2.0); }, x, 1e-5);
    CHECK(e4 == 0.0);

    CHECK_THROWS_AS(grad_check([](const Tensor& t) { return sum(t); }, x, 1e-2), contract_error);
}

TEST_CASE("gradcheck suite covers every primitive") {
    auto results = run_gradcheck_suite(3, 99);
    for (const auto& r : results) {
        INFO(r.name, " max error ", r.max_error);
        CHECK(r.max_error < 1e-4);
    }
}
