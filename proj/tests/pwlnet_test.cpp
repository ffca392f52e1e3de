#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include "support.hpp"
#include "tsc/brelu.hpp"
#include "tsc/errors.hpp"
#include "tsc/mlp.hpp"
#include "tsc/optim.hpp"
#include "tsc/rng.hpp"

using namespace tsc;

namespace {

// Random test net: 4 -> 8 (BReLU) -> 3, used by the gradient and PWL checks.
BreluMlp random_net(std::uint64_t seed) {
    Rng rng(seed);
    return MlpBuilder(4).affine_brelu(8).affine_relu(6).affine(3).build(rng);
}

// x sampled away from every kink so finite differences are valid.
Vec sample_off_kink(const BreluMlp& net, Rng& rng, double margin = 1e-3) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Vec x(net.input_width());
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        MlpTrace trace;
        net.forward(x, trace);
        bool ok = true;
        for (std::size_t l = 0; l < net.layers().size() && ok; ++l) {
            const auto& layer = net.layers()[l];
            const Vec& pre = trace.pre_activations[l];
            if (layer.act == Activation::Relu) {
                for (double v : pre)
                    if (std::fabs(v) < margin) ok = false;
            } else if (layer.act == Activation::Brelu) {
                for (std::size_t i = 0; i < pre.size(); ++i)
                    for (double beta : layer.grid.biases_for(i))
                        if (std::fabs(pre[i] - beta) < margin) ok = false;
            }
        }
        if (ok) return x;
    }
    FAIL("could not sample a point away from kinks");
    return {};
}

bool bits_equal(const Vec& a, const Vec& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("bias grid matches the printed placement") {
    const auto row = brelu_bias_row(1.0, 0.0);
    REQUIRE(row.size() == 5);
    CHECK(row[0] == -3.0);
    CHECK(row[1] == -0.824);
    CHECK(row[2] == -0.248);
    CHECK(row[3] == 0.248);
    CHECK(row[4] == 0.834);

    const auto scaled = brelu_bias_row(2.0, 1.0);
    CHECK(scaled[0] == doctest::Approx(-5.0).epsilon(1e-12));
    CHECK(scaled[1] == doctest::Approx(-0.648).epsilon(1e-12));
    CHECK(scaled[2] == doctest::Approx(0.504).epsilon(1e-12));
    CHECK(scaled[3] == doctest::Approx(1.496).epsilon(1e-12));
    CHECK(scaled[4] == doctest::Approx(2.668).epsilon(1e-12));

    CHECK_THROWS_AS(brelu_bias_row(0.0, 0.0), NumericError);
    CHECK_THROWS_AS(brelu_bias_row(-1.0, 0.0), NumericError);
}

TEST_CASE("bias grid invariants") {
    CHECK_THROWS_AS(BiasGrid({{1.0, 1.0}}), ConfigError);   // not strictly increasing
    CHECK_THROWS_AS(BiasGrid({{2.0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(BiasGrid(std::vector<std::vector<double>>{{}}),
                    ConfigError);  // q_i >= 1
    const BiasGrid g({{-1.0, 0.0}, {0.5}});
    CHECK(g.input_dims() == 2);
    CHECK(g.output_dims() == 3);
}

TEST_CASE("brelu forward: direct substitution and kinks") {
    const BiasGrid grid = brelu_bias_grid(1, 1.0, 0.0);
    const Vec y = brelu_forward({0.5}, grid);
    REQUIRE(y.size() == 5);
    CHECK(y[0] == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(1.324).epsilon(1e-15));
    CHECK(y[2] == doctest::Approx(0.748).epsilon(1e-15));
    CHECK(y[3] == doctest::Approx(0.252).epsilon(1e-15));
    CHECK(y[4] == 0.0);

    // exactly at a bias the output entry is 0
    const Vec at_kink = brelu_forward({0.248}, grid);
    CHECK(at_kink[3] == 0.0);

    CHECK_THROWS_AS(brelu_forward({1.0, 2.0}, grid), ShapeError);
}

TEST_CASE("brelu with a single zero bias degenerates to relu") {
    const BiasGrid grid = BiasGrid::uniform(3, {0.0});
    Rng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        Vec x(3);
        for (double& v : x) v = rng.uniform(-5.0, 5.0);
        const Vec y = brelu_forward(x, grid);
        REQUIRE(y.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(y[i] == std::max(0.0, x[i]));
        }
    }
}

TEST_CASE("mlp forward basics") {
    // identity affine + BReLU{0} acts as ReLU
    {
        MlpLayer layer;
        layer.weight = Tensor::matrix(2, 2);
        layer.weight.at(0, 0) = 1.0;
        layer.weight.at(1, 1) = 1.0;
        layer.bias = Tensor::vector(2);
        layer.act = Activation::Brelu;
        layer.grid = BiasGrid::uniform(2, {0.0});
        BreluMlp net({layer});
        const Vec y = net.forward({-1.0, 2.0});
        CHECK(y == Vec{0.0, 2.0});
    }
    // zero weights, bias b: constant map
    {
        BreluMlp net = MlpBuilder(3).affine(2).build_zero();
        auto& layers = const_cast<std::vector<MlpLayer>&>(net.layers());
        layers[0].bias.values = {4.0, -1.5};
        CHECK(net.forward({9.0, -3.0, 0.5}) == Vec{4.0, -1.5});
        CHECK(net.forward({0.0, 0.0, 0.0}) == Vec{4.0, -1.5});
    }
    // y = 2x + 1
    {
        BreluMlp net = MlpBuilder(1).affine(1).build_zero();
        auto& layers = const_cast<std::vector<MlpLayer>&>(net.layers());
        layers[0].weight.values = {2.0};
        layers[0].bias.values = {1.0};
        CHECK(net.forward({3.0}) == Vec{7.0});
    }
    BreluMlp net = random_net(5);
    CHECK_THROWS_AS(net.forward({1.0, 2.0}), ShapeError);
}

TEST_CASE("mlp forward determinism") {
    const BreluMlp net = random_net(17);
    Rng rng(99);
    Vec x(net.input_width());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    CHECK(bits_equal(net.forward(x), net.forward(x)));
}

TEST_CASE("backprop on the scalar hinge") {
    // y = max{0, x - 1}
    MlpLayer layer;
    layer.weight = Tensor::matrix(1, 1);
    layer.weight.at(0, 0) = 1.0;
    layer.bias = Tensor::vector(1);
    layer.act = Activation::Brelu;
    layer.grid = BiasGrid::uniform(1, {1.0});
    BreluMlp net({layer});

    MlpTrace trace;
    MlpGradients grads = net.zero_gradients();
    net.forward({2.0}, trace);
    CHECK(net.backward(trace, {1.0}, grads) == Vec{1.0});  // active slope 1
    net.forward({0.0}, trace);
    CHECK(net.backward(trace, {1.0}, grads) == Vec{0.0});  // inactive region
    net.forward({1.0}, trace);
    CHECK(net.backward(trace, {1.0}, grads) == Vec{0.0});  // subgradient 0 at kink

    MlpTrace empty;
    CHECK_THROWS_AS(net.backward(empty, {1.0}, grads), StateError);
}

TEST_CASE("backprop matches central finite differences away from kinks") {
    Rng rng(123);
    for (int rep = 0; rep < 8; ++rep) {
        BreluMlp net = random_net(1000 + static_cast<std::uint64_t>(rep));
        const Vec x = sample_off_kink(net, rng);
        Vec weights(net.output_width());
        for (double& v : weights) v = rng.uniform(-1.0, 1.0);
        auto loss = [&](const BreluMlp& n, const Vec& input) {
            const Vec y = n.forward(input);
            double acc = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) acc += weights[i] * y[i];
            return acc;
        };

        MlpTrace trace;
        net.forward(x, trace);
        MlpGradients grads = net.zero_gradients();
        const Vec dx = net.backward(trace, weights, grads);

        // input gradient
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double fd = testing::central_difference(
                [&](const Vec& xi) { return loss(net, xi); }, x, i);
            CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-4));
        }
        // parameter gradients
        auto params = net.parameters();
        std::vector<const Tensor*> gptrs = gradient_ptrs(grads);
        for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t k = 0; k < params[p]->size(); ++k) {
                const double h = 1e-5;
                const double saved = params[p]->values[k];
                params[p]->values[k] = saved + h;
                const double up = loss(net, x);
                params[p]->values[k] = saved - h;
                const double down = loss(net, x);
                params[p]->values[k] = saved;
                const double fd = (up - down) / (2.0 * h);
                const double analytic = gptrs[p]->values[k];
                if (std::fabs(fd) > 1e-8) {
                    CHECK(analytic == doctest::Approx(fd).epsilon(1e-4));
                } else {
                    CHECK(std::fabs(analytic - fd) < 1e-7);
                }
            }
        }
    }
}

TEST_CASE("backward determinism is bit exact") {
    const BreluMlp net = random_net(77);
    Rng rng(7);
    Vec x(net.input_width());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    MlpTrace t1, t2;
    net.forward(x, t1);
    net.forward(x, t2);
    MlpGradients g1 = net.zero_gradients();
    MlpGradients g2 = net.zero_gradients();
    const Vec d1 = net.backward(t1, {1.0, -1.0, 0.5}, g1);
    const Vec d2 = net.backward(t2, {1.0, -1.0, 0.5}, g2);
    CHECK(bits_equal(d1, d2));
    for (std::size_t l = 0; l < g1.weights.size(); ++l) {
        CHECK(bits_equal(g1.weights[l].values, g2.weights[l].values));
        CHECK(bits_equal(g1.biases[l].values, g2.biases[l].values));
    }
}

TEST_CASE("segment sampling shows a continuous piecewise-linear map") {
    Rng rng(31);
    const BreluMlp net = random_net(404);
    for (int rep = 0; rep < 5; ++rep) {
        Vec a(net.input_width()), b(net.input_width());
        for (double& v : a) v = rng.uniform(-2.0, 2.0);
        for (double& v : b) v = rng.uniform(-2.0, 2.0);
        const auto check = testing::segment_pwl_check(
            [&](const Vec& x) { return net.forward(x)[0]; }, a, b);
        CHECK(check.continuous);
        CHECK(check.piecewise_linear);
    }
}

TEST_CASE("sgd step") {
    Tensor p = Tensor::vector(1, 1.0);
    Tensor g = Tensor::vector(1, 0.5);
    Optimizer opt({OptimMethod::Sgd, 0.01});
    opt.step({&p}, {&g}, {"p"});
    CHECK(p.values[0] == doctest::Approx(0.995).epsilon(1e-15));

    Tensor zero_g = Tensor::vector(1, 0.0);
    opt.step({&p}, {&zero_g}, {"p"});
    CHECK(p.values[0] == doctest::Approx(0.995).epsilon(1e-15));
}

TEST_CASE("adam first step is the bias-corrected unit move") {
    Tensor p = Tensor::vector(1, 0.0);
    Tensor g = Tensor::vector(1, 1.0);
    Optimizer opt({OptimMethod::Adam, 0.001});
    opt.step({&p}, {&g}, {"p"});
    // m_hat = 1, v_hat = 1 after the first update
    CHECK(std::fabs(p.values[0] - (-0.001)) < 1e-9);
}

TEST_CASE("non-finite gradients name the offending parameter") {
    Tensor p = Tensor::vector(2, 0.0);
    Tensor g = Tensor::vector(2, 0.0);
    g.values[1] = std::numeric_limits<double>::quiet_NaN();
    Optimizer opt({OptimMethod::Sgd, 0.1});
    try {
        opt.step({&p}, {&g}, {"critic.layer0.weight"});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("critic.layer0.weight") != std::string::npos);
    }
}

TEST_CASE("tensor invariants") {
    Tensor t = Tensor::matrix(2, 3);
    t.check_invariants("t");
    t.values.pop_back();
    CHECK_THROWS_AS(t.check_invariants("t"), ShapeError);
    Tensor u = Tensor::vector(4);
    u.grad = {1.0};
    CHECK_THROWS_AS(u.check_invariants("u"), ShapeError);
}

TEST_CASE("checkpoint json round trip is value exact") {
    BreluMlp net = random_net(20250810);
    const nlohmann::json j = nlohmann::json::parse(net.to_json().dump());
    const BreluMlp back = BreluMlp::from_json(j);
    auto p1 = net.parameters();
    auto p2 = back.parameters();
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        CHECK(bits_equal(p1[i]->values, p2[i]->values));
    }
    // grids survive too
    CHECK(back.layers()[0].grid.biases() == net.layers()[0].grid.biases());
}
