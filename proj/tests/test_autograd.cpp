#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hydra/adam.hpp"
#include "hydra/autograd.hpp"
#include "hydra/gradcheck.hpp"
#include "test_support.hpp"

using namespace hydra;
using hydra::testing::random_tensor;

TEST_CASE("mse_masked examples") {
    Tape t(false);
    const Tensor ones = Tensor::full({2, 2}, 1.0);
    const Tensor identity = Tensor::from_rows({{1, 0}, {0, 1}});

    CHECK(t.scalar(t.mse_masked(t.leaf(identity), identity, ones)) == 0.0);
    // Two unit errors over four cells.
    CHECK(t.scalar(t.mse_masked(t.leaf(Tensor::zeros({2, 2})), identity, ones)) == 0.5);
    // (0.25 + 0.25) / 4 by hand.
    Tensor half = identity;
    for (double& v : half.data) v *= 0.5;
    CHECK(t.scalar(t.mse_masked(t.leaf(half), identity, ones)) == 0.125);

    CHECK_THROWS_AS(t.mse_masked(t.leaf(identity), identity, Tensor::zeros({2, 2})),
                    std::invalid_argument);
    CHECK_THROWS_AS(t.mse_masked(t.leaf(identity), identity, Tensor::full({2, 2}, 0.5)),
                    std::invalid_argument);
}

TEST_CASE("mse_masked gradient flows only through unmasked pred cells") {
    std::mt19937_64 rng(3);
    Parameter pred("pred", random_tensor({3, 3}, rng));
    Tensor target = random_tensor({3, 3}, rng);
    Tensor mask = Tensor::zeros({3, 3});
    mask.at(0, 1) = 1.0;
    mask.at(2, 2) = 1.0;

    Tape t;
    Value loss = t.mse_masked(t.param(pred), target, mask);
    t.backward(loss);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (mask.at(i, j) == 0.0) CHECK(pred.grad.at(i, j) == 0.0);
        }
    CHECK(pred.grad.at(0, 1) != 0.0);
}

TEST_CASE("cross_entropy examples") {
    Tape t(false);
    CHECK(t.scalar(t.cross_entropy(t.leaf(Tensor::from_rows({{0, 0}})), {0})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(t.scalar(t.cross_entropy(t.leaf(Tensor::from_rows({{1000, 0}})), {0})) ==
          doctest::Approx(0.0).epsilon(1e-9));
    // Closed-form softmax: -ln 0.75.
    CHECK(t.scalar(t.cross_entropy(t.leaf(Tensor::from_rows({{0.0, std::log(3.0)}})), {1})) ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-12));
    CHECK_THROWS_AS(t.cross_entropy(t.leaf(Tensor::from_rows({{0, 0}})), {2}),
                    std::out_of_range);
}

TEST_CASE("adam: frozen parameter stays bit-identical") {
    std::mt19937_64 rng(11);
    Parameter frozen("f", random_tensor({3, 2}, rng), false);
    Parameter live("l", random_tensor({3, 2}, rng), true);
    const Tensor before = frozen.value;
    AdamState adam({&frozen, &live}, {});
    for (int step = 0; step < 5; ++step) {
        frozen.grad = random_tensor({3, 2}, rng);
        live.grad = random_tensor({3, 2}, rng);
        adam.step();
    }
    CHECK(frozen.value == before);
    CHECK(live.value != before);
    CHECK(adam.step_count() == 5);
}

TEST_CASE("adam: hand-evaluated first step on a scalar") {
    Parameter p("p", Tensor::full({1}, 0.5));
    p.grad = Tensor::full({1}, 1.0);
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    AdamState adam({&p}, cfg);
    adam.step();
    // Bias-corrected first step moves by ~lr.
    CHECK(std::fabs((0.5 - p.value.data[0]) - 0.1) < 1e-6);
    CHECK(p.grad.data[0] == 0.0);
}

TEST_CASE("adam: zero gradient is a fixed point; moments decay") {
    Parameter p("p", Tensor::full({1}, 2.0));
    AdamState adam({&p}, {});
    adam.step();  // zero grad from fresh state
    CHECK(p.value.data[0] == 2.0);

    p.grad = Tensor::full({1}, 1.0);
    adam.step();
    double prev_m = std::fabs(adam.first_moment(0).data[0]);
    CHECK(prev_m > 0.0);
    for (int i = 0; i < 4; ++i) {
        adam.step();  // grad zeroed by the previous step
        const double cur = std::fabs(adam.first_moment(0).data[0]);
        CHECK(cur < prev_m);
        prev_m = cur;
    }
}

TEST_CASE("gradient clipping caps the global norm") {
    Parameter a("a", Tensor::zeros({4}));
    Parameter b("b", Tensor::zeros({3}));
    a.grad = Tensor::full({4}, 10.0);
    b.grad = Tensor::full({3}, -10.0);
    CHECK(global_grad_norm({&a, &b}) > 1.0);
    clip_global_grad_norm({&a, &b}, 1.0);
    CHECK(global_grad_norm({&a, &b}) == doctest::Approx(1.0).epsilon(1e-12));
    // Already-small gradients are untouched.
    a.grad = Tensor::full({4}, 1e-3);
    b.grad = Tensor::zeros({3});
    const Tensor small = a.grad;
    clip_global_grad_norm({&a, &b}, 1.0);
    CHECK(a.grad == small);
}

TEST_CASE("grad_check: mse at random 3x3 inputs passes at 1e-6") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        Parameter pred("pred", random_tensor({3, 3}, rng));
        const Tensor target = random_tensor({3, 3}, rng);
        const Tensor mask = Tensor::full({3, 3}, 1.0);
        auto fn = [&](Tape& t) { return t.mse_masked(t.param(pred), target, mask); };
        const GradCheckReport r = grad_check(fn, {&pred}, 1e-6);
        CHECK(r.pass);
        CHECK(r.elements_checked == 9);
    }
}

TEST_CASE("grad_check covers every differentiable op") {
    const Tensor mask22 = Tensor::full({2, 2}, 1.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed * 7 + 1);
        {
            Parameter a("a", random_tensor({2, 3}, rng));
            Parameter b("b", random_tensor({3, 2}, rng));
            const Tensor target = random_tensor({2, 2}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.matmul(t.param(a), t.param(b)), target, mask22);
            };
            CHECK(grad_check(fn, {&a, &b}, 1e-5).pass);
        }
        {
            Parameter a("a", random_tensor({2, 2}, rng));
            const Tensor target = random_tensor({2, 2}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.transpose(t.param(a)), target, mask22);
            };
            CHECK(grad_check(fn, {&a}, 1e-5).pass);
        }
        {
            Parameter x("x", random_tensor({2, 4}, rng));
            Parameter bias("bias", random_tensor({4}, rng));
            const Tensor target = random_tensor({2, 4}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.add_row_bias(t.param(x), t.param(bias)), target,
                                    Tensor::full({2, 4}, 1.0));
            };
            CHECK(grad_check(fn, {&x, &bias}, 1e-5).pass);
        }
        {
            Parameter x("x", random_tensor({2, 2}, rng, -2.0, 2.0));
            const Tensor target = random_tensor({2, 2}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.softmax_rows(t.param(x)), target, mask22);
            };
            CHECK(grad_check(fn, {&x}, 1e-5).pass);
        }
        {
            Parameter x("x", random_tensor({3, 5}, rng));
            Parameter gain("gain", random_tensor({5}, rng, 0.5, 1.5));
            Parameter bias("bias", random_tensor({5}, rng));
            const Tensor target = random_tensor({3, 5}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.layer_norm(t.param(x), t.param(gain), t.param(bias)),
                                    target, Tensor::full({3, 5}, 1.0));
            };
            CHECK(grad_check(fn, {&x, &gain, &bias}, 1e-5).pass);
        }
        {
            Parameter x("x", random_tensor({2, 2}, rng, -2.0, 2.0));
            const Tensor target = random_tensor({2, 2}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.gelu(t.param(x)), target, mask22);
            };
            CHECK(grad_check(fn, {&x}, 1e-5).pass);
        }
        {
            Parameter table("table", random_tensor({6, 3}, rng));
            const std::vector<int> ids = {0, 4, 4, 5};
            const Tensor target = random_tensor({4, 3}, rng);
            auto fn = [&](Tape& t) {
                return t.mse_masked(t.embedding_rows(t.param(table), ids), target,
                                    Tensor::full({4, 3}, 1.0));
            };
            CHECK(grad_check(fn, {&table}, 1e-5).pass);
        }
        {
            Parameter x("x", random_tensor({3, 6}, rng));
            const Tensor target = random_tensor({2, 4}, rng);
            auto fn = [&](Tape& t) {
                Value v = t.param(x);
                Value joined = t.concat_cols({t.slice_cols(v, 0, 2), t.slice_cols(v, 4, 2)});
                return t.mse_masked(t.slice_rows(joined, 1, 2), target,
                                    Tensor::full({2, 4}, 1.0));
            };
            CHECK(grad_check(fn, {&x}, 1e-5).pass);
        }
        {
            Parameter logits("logits", random_tensor({3, 4}, rng, -2.0, 2.0));
            const std::vector<int> labels = {2, 0, 3};
            auto fn = [&](Tape& t) { return t.cross_entropy(t.param(logits), labels); };
            CHECK(grad_check(fn, {&logits}, 1e-5).pass);
        }
        {
            Parameter x("x", random_tensor({2, 2}, rng));
            const Tensor target = random_tensor({2, 2}, rng);
            auto fn = [&](Tape& t) {
                Value scaled = t.scale(t.param(x), -1.7);
                Value summed = t.add(scaled, t.add_const(t.param(x), target));
                Value a = t.mse_masked(summed, target, mask22);
                Value b = t.mse_masked(t.param(x), target, mask22);
                return t.mean({a, b});
            };
            CHECK(grad_check(fn, {&x}, 1e-5).pass);
        }
    }
}

TEST_CASE("grad_check: a corrupted analytic gradient fails the tolerance") {
    std::mt19937_64 rng(5);
    Parameter p("p", random_tensor({2, 2}, rng));
    const Tensor target = Tensor::full({2, 2}, 1.0);
    const Tensor mask = Tensor::full({2, 2}, 1.0);
    auto fn = [&](Tape& t) { return t.mse_masked(t.param(p), target, mask); };
    CHECK(grad_check(fn, {&p}, 1e-6).pass);

    // +10% on one backward term must trip the same comparison.
    p.zero_grad();
    Tape t;
    t.backward(fn(t));
    const double corrupted = p.grad.data[0] * 1.1;
    const double h = 1e-5;
    const double saved = p.value.data[0];
    p.value.data[0] = saved + h;
    Tape tp(false);
    const double f_plus = tp.scalar(fn(tp));
    p.value.data[0] = saved - h;
    Tape tm(false);
    const double f_minus = tm.scalar(fn(tm));
    p.value.data[0] = saved;
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    CHECK(grad_rel_error(corrupted, numeric) > 1e-6);
}

TEST_CASE("grad_check rejects non-scalar computations") {
    Parameter p("p", Tensor::full({2, 2}, 1.0));
    auto fn = [&](Tape& t) { return t.param(p); };
    CHECK_THROWS_AS(grad_check(fn, {&p}, 1e-5), std::invalid_argument);
}

TEST_CASE("detach stops gradients") {
    Parameter p("p", Tensor::full({2, 2}, 0.7));
    auto fn_loss = [&](Tape& t) {
        Value v = t.detach(t.param(p));
        return t.mse_masked(v, Tensor::zeros({2, 2}), Tensor::full({2, 2}, 1.0));
    };
    Tape t;
    Value loss = fn_loss(t);
    t.backward(loss);
    CHECK(t.scalar(loss) == doctest::Approx(0.49));
    CHECK(p.grad == Tensor::zeros({2, 2}));
}
