#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "support.hpp"
#include "tsc/anova.hpp"
#include "tsc/ehh.hpp"
#include "tsc/errors.hpp"
#include "tsc/rng.hpp"

using namespace tsc;

namespace {

// Single-output network over the given grids with all cross-dimension
// order-2 min nodes.
EhhNetwork small_net(const std::vector<std::vector<double>>& grids,
                     std::uint64_t seed = 1) {
    return ehh_generate(BiasGrid(grids), 2, kEhhNoCap, 1, seed);
}

// Brute-force ANOVA oracle: evaluates every node from its definition and
// computes two-pass population variances per term. Independent of the
// library's Welford/term bookkeeping.
struct OracleReport {
    Vec sigma_main;
    std::map<std::pair<std::size_t, std::size_t>, double> sigma_pairs;
};

OracleReport anova_oracle(const EhhNetwork& net, const std::vector<Vec>& samples) {
    const std::size_t M = net.input_dim();
    const std::size_t out = net.output_dim();
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Vec>> pair_values;
    std::vector<std::vector<Vec>> main_values(M);

    for (const auto& x : samples) {
        std::vector<Vec> main_acc(M, Vec(out, 0.0));
        std::map<std::pair<std::size_t, std::size_t>, Vec> pair_acc;
        for (std::size_t s = 0; s < net.sources().size(); ++s) {
            const auto& src = net.sources()[s];
            const double z = std::max(0.0, x[src.dim] - src.bias);
            for (std::size_t o = 0; o < out; ++o)
                main_acc[src.dim][o] += net.alpha().at(s, o) * z;
        }
        for (std::size_t m = 0; m < net.min_nodes().size(); ++m) {
            const auto& node = net.min_nodes()[m];
            double z = std::numeric_limits<double>::infinity();
            for (std::size_t s : node.sources) {
                const auto& src = net.sources()[s];
                z = std::min(z, std::max(0.0, x[src.dim] - src.bias));
            }
            std::size_t a = net.sources()[node.sources[0]].dim;
            std::size_t b = net.sources()[node.sources[1]].dim;
            if (a > b) std::swap(a, b);
            auto& acc = pair_acc.try_emplace(std::make_pair(a, b), Vec(out, 0.0))
                            .first->second;
            for (std::size_t o = 0; o < out; ++o)
                acc[o] += net.alpha().at(net.sources().size() + m, o) * z;
        }
        for (std::size_t m = 0; m < M; ++m) main_values[m].push_back(main_acc[m]);
        for (auto& [key, acc] : pair_acc) pair_values[key].push_back(acc);
    }

    auto total_sigma = [&](const std::vector<Vec>& vals) {
        const double n = static_cast<double>(vals.size());
        double var = 0.0;
        for (std::size_t o = 0; o < out; ++o) {
            double mean = 0.0;
            for (const auto& v : vals) mean += v[o];
            mean /= n;
            double acc = 0.0;
            for (const auto& v : vals) acc += (v[o] - mean) * (v[o] - mean);
            var += acc / n;
        }
        return std::sqrt(var);
    };

    OracleReport r;
    for (std::size_t m = 0; m < M; ++m)
        r.sigma_main.push_back(total_sigma(main_values[m]));
    for (const auto& [key, vals] : pair_values) r.sigma_pairs[key] = total_sigma(vals);
    return r;
}

}  // namespace

TEST_CASE("structure generation counts") {
    {
        const EhhNetwork net = small_net({{0.0, 1.0}, {-1.0, 0.5}});
        CHECK(net.source_count() == 4);
        CHECK(net.min_node_count() == 4);  // 2x2 cross-dimension pairs
    }
    {
        const EhhNetwork net = small_net({{0.0, 1.0, 2.0}});
        CHECK(net.source_count() == 3);
        CHECK(net.min_node_count() == 0);  // no cross-dimension pair exists
    }
    {
        const EhhNetwork net =
            ehh_generate(BiasGrid({{0.0}, {0.0}, {0.0}}), 2, 2, 1, 42);
        CHECK(net.source_count() == 3);
        CHECK(net.min_node_count() == 2);  // cap binds
    }
    CHECK_THROWS_AS(
        ehh_generate(BiasGrid(std::vector<std::vector<double>>{{0.0}}), 2, -1, 1, 0),
        ConfigError);
}

TEST_CASE("generation is deterministic per seed and weights start at zero") {
    const EhhNetwork a = ehh_generate(BiasGrid({{0.0, 1.0}, {0.0}}), 2, 1, 2, 9);
    const EhhNetwork b = ehh_generate(BiasGrid({{0.0, 1.0}, {0.0}}), 2, 1, 2, 9);
    CHECK(a.to_json() == b.to_json());
    for (double v : a.alpha().values) CHECK(v == 0.0);
    for (double v : a.alpha0()) CHECK(v == 0.0);
}

TEST_CASE("min nodes must mix distinct dimensions") {
    CHECK_THROWS_AS(EhhNetwork(BiasGrid({{0.0, 1.0}}), {{{0, 1}}}, 1), ConfigError);
}

TEST_CASE("forward evaluation") {
    {
        EhhNetwork net = small_net({{0.0}});
        net.alpha().at(0, 0) = 1.0;
        CHECK(net.forward({2.0}) == Vec{2.0});
        CHECK(net.forward({-2.0}) == Vec{0.0});
    }
    {
        EhhNetwork net = small_net({{0.0}, {0.0}});
        REQUIRE(net.min_node_count() == 1);
        net.alpha().at(2, 0) = 1.0;  // sources 0,1 then the min node
        CHECK(net.forward({2.0, 1.0}) == Vec{1.0});
        CHECK(net.forward({2.0, -1.0}) == Vec{0.0});
    }
    {
        EhhNetwork net = small_net({{0.0}, {0.0}});
        net.alpha0()[0] = 3.25;
        CHECK(net.forward({5.0, -5.0}) == Vec{3.25});
        CHECK(net.forward({0.0, 0.0}) == Vec{3.25});
    }
    EhhNetwork net = small_net({{0.0}, {0.0}});
    CHECK_THROWS_AS(net.forward({1.0}), ShapeError);
}

TEST_CASE("ehh forward passes the segment continuity and linearity probe") {
    Rng rng(5);
    EhhNetwork net = small_net({{-1.0, 0.0, 1.0}, {-0.5, 0.5}, {0.0}}, 3);
    for (double& v : net.alpha().values) v = rng.uniform(-1.0, 1.0);
    net.alpha0()[0] = rng.uniform(-1.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        Vec a(3), b(3);
        for (double& v : a) v = rng.uniform(-2.0, 2.0);
        for (double& v : b) v = rng.uniform(-2.0, 2.0);
        const auto check = testing::segment_pwl_check(
            [&](const Vec& x) { return net.forward(x)[0]; }, a, b);
        CHECK(check.continuous);
        CHECK(check.piecewise_linear);
    }
}

TEST_CASE("training recovers a realizable target") {
    Rng rng(21);
    EhhNetwork teacher = small_net({{-0.5, 0.5}, {0.0}}, 11);
    for (double& v : teacher.alpha().values) v = rng.uniform(-1.0, 1.0);
    teacher.alpha0()[0] = 0.3;

    std::vector<Vec> xs, ys;
    for (int i = 0; i < 60; ++i) {
        Vec x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        ys.push_back(teacher.forward(x));
        xs.push_back(std::move(x));
    }
    EhhNetwork student = small_net({{-0.5, 0.5}, {0.0}}, 11);
    const EhhTrainResult result = ehh_train(student, xs, ys, 0.0);
    CHECK(result.mse <= 1e-6);
}

TEST_CASE("huge l1 drives all weights to zero and predicts the mean") {
    Rng rng(22);
    std::vector<Vec> xs, ys;
    double mean = 0.0;
    for (int i = 0; i < 40; ++i) {
        Vec x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double y = 2.0 * x[0] - x[1] + 0.5;
        ys.push_back({y});
        xs.push_back(std::move(x));
        mean += y;
    }
    mean /= 40.0;
    EhhNetwork net = small_net({{-0.5, 0.5}, {0.0}});
    ehh_train(net, xs, ys, 1e6);
    for (double a : net.alpha().values) CHECK(std::fabs(a) < 1e-9);
    CHECK(net.forward({0.3, -0.4})[0] == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("single sample is interpolated exactly") {
    EhhNetwork net = small_net({{0.0}, {0.0}});
    const EhhTrainResult result = ehh_train(net, {{1.0, 2.0}}, {{5.0}}, 0.0);
    CHECK(result.mse <= 1e-12);
    CHECK(std::fabs(net.forward({1.0, 2.0})[0] - 5.0) <= 1e-6);
}

TEST_CASE("training rejects bad datasets") {
    EhhNetwork net = small_net({{0.0}});
    CHECK_THROWS_AS(ehh_train(net, {}, {}, 0.0), DataError);
    CHECK_THROWS_AS(ehh_train(net, {{1.0}}, {{1.0, 2.0}}, 0.0), ShapeError);
}

TEST_CASE("sparsity never grows with the penalty") {
    Rng rng(77);
    std::vector<Vec> xs, ys;
    for (int i = 0; i < 80; ++i) {
        Vec x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        ys.push_back({std::max(0.0, x[0]) - 0.5 * std::max(0.0, x[2] - 0.5) +
                      0.2 * rng.normal()});
        xs.push_back(std::move(x));
    }
    std::size_t prev = SIZE_MAX;
    for (double lambda : {0.0, 1e-3, 1e-2, 1e-1, 1.0, 1e2}) {
        EhhNetwork net = small_net({{-0.5, 0.0, 0.5}, {0.0}, {-0.5, 0.5}}, 4);
        ehh_train(net, xs, ys, lambda);
        std::size_t nonzero = 0;
        for (double a : net.alpha().values)
            if (std::fabs(a) > 1e-6) ++nonzero;
        CHECK(nonzero <= prev);
        prev = nonzero;
    }
}

TEST_CASE("anova: hand-computed three-point fixture") {
    EhhNetwork net = small_net({{0.0}, {0.0}});
    net.alpha().at(0, 0) = 1.0;  // f = max{0, x1}
    const AnovaReport report =
        anova_decompose(net, {{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}});
    // f1 values {0, 0, 1}: population sigma = sqrt(2/9)
    CHECK(report.sigma_main[0] ==
          doctest::Approx(std::sqrt(2.0 / 9.0)).epsilon(1e-12));
    CHECK(report.sigma_main[1] == 0.0);
}

TEST_CASE("anova: constants have zero variance and duplication changes nothing") {
    Rng rng(3);
    EhhNetwork net = small_net({{-0.5, 0.5}, {0.0}}, 2);
    SUBCASE("all-zero weights") {
        const AnovaReport report = anova_decompose(net, {{0.1, 0.2}, {1.0, -1.0}});
        for (double s : report.sigma_main) CHECK(s == 0.0);
    }
    SUBCASE("duplication invariance") {
        for (double& v : net.alpha().values) v = rng.uniform(-1.0, 1.0);
        std::vector<Vec> samples;
        for (int i = 0; i < 7; ++i)
            samples.push_back({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
        const AnovaReport once = anova_decompose(net, samples);
        std::vector<Vec> doubled = samples;
        doubled.insert(doubled.end(), samples.begin(), samples.end());
        const AnovaReport twice = anova_decompose(net, doubled);
        for (std::size_t m = 0; m < once.sigma_main.size(); ++m)
            CHECK(once.sigma_main[m] ==
                  doctest::Approx(twice.sigma_main[m]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(anova_decompose(net, {}), DataError);
}

TEST_CASE("anova equals the brute-force oracle on small fixtures") {
    Rng rng(99);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t M = 1 + rep % 3;
        std::vector<std::vector<double>> grids;
        for (std::size_t m = 0; m < M; ++m) {
            grids.push_back(m % 2 == 0 ? std::vector<double>{-0.5, 0.3}
                                       : std::vector<double>{0.0});
        }
        EhhNetwork net = ehh_generate(BiasGrid(grids), 2, kEhhNoCap, 2,
                                      static_cast<std::uint64_t>(rep));
        for (double& v : net.alpha().values) v = rng.uniform(-1.0, 1.0);
        net.alpha0() = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};

        std::vector<Vec> samples;
        const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform_index(18));
        for (std::size_t i = 0; i < n; ++i) {
            Vec x(M);
            for (double& v : x) v = rng.uniform(-2.0, 2.0);
            samples.push_back(std::move(x));
        }

        const AnovaReport report = anova_decompose(net, samples);
        const OracleReport oracle = anova_oracle(net, samples);
        for (std::size_t m = 0; m < M; ++m) {
            CHECK(std::fabs(report.sigma_main[m] - oracle.sigma_main[m]) < 1e-10);
        }
        for (const auto& [pair, sigma] : report.sigma_pairs) {
            REQUIRE(oracle.sigma_pairs.count(pair) == 1);
            CHECK(std::fabs(sigma - oracle.sigma_pairs.at(pair)) < 1e-10);
        }
    }
}

TEST_CASE("decomposition is complete: terms sum to prediction minus alpha0") {
    Rng rng(13);
    EhhNetwork net = small_net({{-0.5, 0.5}, {0.0}, {-1.0, 1.0}}, 6);
    for (double& v : net.alpha().values) v = rng.uniform(-1.0, 1.0);
    net.alpha0()[0] = 0.7;

    for (int rep = 0; rep < 20; ++rep) {
        Vec x(3);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        double total = 0.0;
        for (std::size_t s = 0; s < net.sources().size(); ++s) {
            const auto& src = net.sources()[s];
            total += net.alpha().at(s, 0) * std::max(0.0, x[src.dim] - src.bias);
        }
        for (std::size_t m = 0; m < net.min_nodes().size(); ++m) {
            double z = std::numeric_limits<double>::infinity();
            for (std::size_t s : net.min_nodes()[m].sources) {
                const auto& src = net.sources()[s];
                z = std::min(z, std::max(0.0, x[src.dim] - src.bias));
            }
            total += net.alpha().at(net.sources().size() + m, 0) * z;
        }
        CHECK(net.forward(x)[0] - net.alpha0()[0] ==
              doctest::Approx(total).epsilon(1e-9));
    }
}

TEST_CASE("importance inverse") {
    SUBCASE("identity transform") {
        Tensor w = Tensor::matrix(3, 3);
        for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
        const auto inv = importance_inverse(w, {0.5, 1.0, 2.0});
        CHECK(inv.sigma_in[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(inv.sigma_in[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(inv.sigma_in[2] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(inv.clamped_count == 0);
    }
    SUBCASE("scalar inverse") {
        Tensor w = Tensor::matrix(2, 2);
        w.at(0, 0) = 2.0;
        w.at(1, 1) = 2.0;
        const auto inv = importance_inverse(w, {1.0, 1.0});
        CHECK(inv.sigma_in[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(inv.sigma_in[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("reconstruction on a well-conditioned 4x4 transform") {
        Rng rng(55);
        Tensor w = Tensor::matrix(4, 4);
        Vec truth(4);
        for (std::size_t r = 0; r < 4; ++r) {
            truth[r] = rng.uniform(0.1, 2.0);
            for (std::size_t c = 0; c < 4; ++c)
                w.at(r, c) = (r == c ? 3.0 : 0.0) + rng.uniform(0.0, 0.5);
        }
        Vec sigma_m(4, 0.0);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) sigma_m[r] += w.at(r, c) * truth[c];
        const auto inv = importance_inverse(w, sigma_m);
        Vec reconstructed(4, 0.0);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                reconstructed[r] += w.at(r, c) * inv.sigma_in[c];
        for (std::size_t r = 0; r < 4; ++r)
            CHECK(std::fabs(reconstructed[r] - sigma_m[r]) < 1e-9);
    }
    SUBCASE("negative entries clamp with a counter") {
        Tensor w = Tensor::matrix(2, 2);
        w.at(0, 0) = 1.0;
        w.at(1, 1) = -1.0;
        const auto inv = importance_inverse(w, {1.0, 1.0});
        CHECK(inv.sigma_in == Vec{1.0, 0.0});
        CHECK(inv.clamped_count == 1);
    }
    SUBCASE("rank deficiency names the dependent columns") {
        Tensor w = Tensor::matrix(2, 2);
        w.at(0, 0) = 1.0;
        w.at(0, 1) = 1.0;
        w.at(1, 0) = 2.0;
        w.at(1, 1) = 2.0;
        CHECK_THROWS_AS(importance_inverse(w, {1.0, 1.0}), SingularityError);
    }
    SUBCASE("wide transform uses the pseudo-inverse") {
        Tensor w = Tensor::matrix(2, 4);
        w.at(0, 0) = 1.0;
        w.at(1, 1) = 1.0;
        w.at(0, 2) = 0.3;
        w.at(1, 3) = 0.4;
        const auto inv = importance_inverse(w, {1.0, 2.0});
        CHECK(inv.sigma_in.size() == 4);
        Vec reconstructed(2, 0.0);
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                reconstructed[r] += w.at(r, c) * inv.sigma_in[c];
        CHECK(reconstructed[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(reconstructed[1] == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("ehh checkpoint json round trip") {
    Rng rng(1234);
    EhhNetwork net = ehh_generate(BiasGrid({{-1.0, 0.0, 2.0}, {0.5}}), 2, 3, 2, 5);
    for (double& v : net.alpha().values) v = rng.uniform(-1.0, 1.0);
    net.alpha0() = {0.25, -0.5};
    const EhhNetwork back =
        EhhNetwork::from_json(nlohmann::json::parse(net.to_json().dump()));
    CHECK(back.to_json() == net.to_json());
    CHECK(back.forward({0.3, 0.7}) == net.forward({0.3, 0.7}));
}
