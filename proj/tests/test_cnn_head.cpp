#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "segclass/cnn_head.hpp"
#include "segclass/rng.hpp"

using namespace segclass;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double scale = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = scale * rng::normal(gen);
    }
    return m;
}

HeadConfig tiny_config() {
    HeadConfig config;
    config.segment_count = 3;
    config.hidden_size = 4;
    config.kernel_widths = {2};
    config.filters_per_width = 2;
    config.dense_dim = 3;
    config.n_labels = 18;
    config.dropout_p = 0.1;
    return config;
}

LabelVector random_target(std::size_t n, std::mt19937_64& gen) {
    LabelVector target;
    target.bits.assign(n, 0);
    bool any = false;
    for (auto& bit : target.bits) {
        bit = rng::uniform01(gen) < 0.3 ? 1 : 0;
        any = any || bit;
    }
    if (!any) target.bits[rng::bounded(gen, n)] = 1;
    return target;
}

} // namespace

TEST_CASE("init_parameters") {
    HeadConfig config;
    config.segment_count = 5;
    config.hidden_size = 8;
    config.kernel_widths = {2};
    config.filters_per_width = 4;
    config.dense_dim = 6;
    config.n_labels = 18;

    SUBCASE("same seed reproduces bitwise") {
        CHECK(init_parameters(config, 11) == init_parameters(config, 11));
        CHECK_FALSE(init_parameters(config, 11) == init_parameters(config, 12));
    }
    SUBCASE("kernel shape is filters x (width * H)") {
        const auto params = init_parameters(config, 1);
        REQUIRE(params.conv.size() == 1);
        CHECK(params.conv[0].kernel.rows() == 4);
        CHECK(params.conv[0].kernel.cols() == 2 * 8);
        CHECK(params.dense_weight.rows() == 6);
        CHECK(params.dense_weight.cols() == 4);
        CHECK(params.out_weight.rows() == 18);
        CHECK(params.out_weight.cols() == 6);
    }
    SUBCASE("every bias starts at zero") {
        const auto params = init_parameters(config, 5);
        for (double b : params.conv[0].bias) CHECK(b == 0.0);
        for (double b : params.dense_bias) CHECK(b == 0.0);
        for (double b : params.out_bias) CHECK(b == 0.0);
    }
    SUBCASE("weights respect the Glorot bound") {
        const auto params = init_parameters(config, 5);
        const double bound = std::sqrt(6.0 / (16 + 4));
        for (double v : params.conv[0].kernel.values()) {
            CHECK(std::abs(v) <= bound);
        }
    }
    SUBCASE("kernel width beyond K is rejected") {
        HeadConfig bad = config;
        bad.kernel_widths = {7};
        CHECK_THROWS_AS(init_parameters(bad, 1), ConfigError);
        bad = config;
        bad.dropout_p = 1.0;
        CHECK_THROWS_AS(init_parameters(bad, 1), ConfigError);
    }
}

TEST_CASE("forward analytic cases") {
    SUBCASE("all-zero parameters give sigmoid of the output bias") {
        HeadConfig config = tiny_config();
        config.dropout_p = 0.0;
        auto params = HeadParameters::zeros(config);
        const Matrix zeros(3, 4);
        auto probs = head_forward(zeros, params, config, RunMode::infer);
        for (double p : probs) CHECK(p == doctest::Approx(0.5));

        params.out_bias.assign(config.n_labels, 1.5);
        probs = head_forward(zeros, params, config, RunMode::infer);
        for (double p : probs) CHECK(p == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))));
    }
    SUBCASE("infer mode ignores dropout and repeats exactly") {
        HeadConfig config = tiny_config();
        config.dropout_p = 0.9;
        const auto params = init_parameters(config, 3);
        std::mt19937_64 gen(17);
        const Matrix input = random_matrix(3, 4, gen);
        const auto a = head_forward(input, params, config, RunMode::infer, 1);
        const auto b = head_forward(input, params, config, RunMode::infer, 2);
        CHECK(a == b);
    }
    SUBCASE("hand-computed convolution: kernel of ones sums row pairs") {
        HeadConfig config;
        config.segment_count = 3;
        config.hidden_size = 2;
        config.kernel_widths = {2};
        config.filters_per_width = 1;
        config.dense_dim = 2;
        config.n_labels = 2;
        config.dropout_p = 0.0;
        auto params = HeadParameters::zeros(config);
        for (auto& v : params.conv[0].kernel.values()) v = 1.0;

        Matrix input(3, 2);
        input(0, 0) = 1.0;  input(0, 1) = -2.0;
        input(1, 0) = 3.0;  input(1, 1) = 0.5;
        input(2, 0) = -1.0; input(2, 1) = 0.25;

        ForwardCache cache;
        head_forward(input, params, config, RunMode::train, 0, &cache);
        // position 0: relu(1 - 2 + 3 + 0.5) = 2.5; position 1: relu(3 + 0.5 - 1 + 0.25) = 2.75
        CHECK(cache.conv_pre[0](0, 0) == doctest::Approx(2.5));
        CHECK(cache.conv_pre[0](1, 0) == doctest::Approx(2.75));
        CHECK(cache.pooled[0] == doctest::Approx(2.75));
        CHECK(cache.pool_argmax[0][0] == 1);
    }
    SUBCASE("probabilities stay strictly inside (0,1)") {
        HeadConfig config = tiny_config();
        std::mt19937_64 gen(23);
        const auto params = init_parameters(config, 9);
        for (int trial = 0; trial < 50; ++trial) {
            const Matrix input = random_matrix(3, 4, gen, 3.0);
            for (double p : head_forward(input, params, config, RunMode::infer)) {
                CHECK(p > 0.0);
                CHECK(p < 1.0);
            }
        }
    }
    SUBCASE("shape and finiteness guards") {
        HeadConfig config = tiny_config();
        const auto params = init_parameters(config, 1);
        CHECK_THROWS_AS(head_forward(Matrix(2, 4), params, config, RunMode::infer),
                        ValidationError);
        Matrix bad(3, 4);
        bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(head_forward(bad, params, config, RunMode::infer), ValidationError);
    }
}

TEST_CASE("backward") {
    HeadConfig config = tiny_config();
    std::mt19937_64 gen(29);
    const auto params = init_parameters(config, 7);
    const Matrix input = random_matrix(3, 4, gen);
    const LabelVector target = random_target(config.n_labels, gen);

    SUBCASE("gradients are finite for random inputs") {
        ForwardCache cache;
        head_forward(input, params, config, RunMode::train, 5, &cache);
        const auto grads = head_backward(cache, params, config, target, 0.7);
        CHECK(grads.all_finite());
    }
    SUBCASE("zero upstream gradient zeroes every parameter gradient") {
        ForwardCache cache;
        head_forward(input, params, config, RunMode::train, 5, &cache);
        auto grads = head_backward(cache, params, config, target, 0.0);
        for (const double* v : oracle::parameter_scalars(grads)) CHECK(*v == 0.0);
    }
    SUBCASE("stale cache is rejected") {
        ForwardCache cache;
        CHECK_THROWS_AS(head_backward(cache, params, config, target, 1.0), ValidationError);
        head_forward(input, params, config, RunMode::infer, 0, &cache);
        CHECK_THROWS_AS(head_backward(cache, params, config, target, 1.0), ValidationError);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    HeadConfig config;
    config.segment_count = 3;
    config.hidden_size = 4;
    config.kernel_widths = {2};
    config.filters_per_width = 2;
    config.dense_dim = 3;
    config.n_labels = 18;

    std::mt19937_64 gen(101);
    for (int draw = 0; draw < 5; ++draw) {
        config.dropout_p = draw % 2 == 0 ? 0.0 : 0.2;
        const LabelVector target = random_target(config.n_labels, gen);
        const double w_s = 0.25 + rng::uniform01(gen);
        const std::uint64_t mask_seed = 4242 + draw;

        // Resample until the draw sits clear of every ReLU kink and pooling
        // tie; finite differences are only meaningful at differentiable points.
        HeadParameters params;
        Matrix input;
        ForwardCache cache;
        for (int attempt = 0;; ++attempt) {
            REQUIRE(attempt < 50);
            params = init_parameters(config, 1000 + draw + 97 * attempt);
            for (auto& b : params.conv[0].bias) b = 0.05;
            for (auto& b : params.dense_bias) b = 0.05;
            input = random_matrix(3, 4, gen);
            head_forward(input, params, config, RunMode::train, mask_seed, &cache);
            if (oracle::kink_safe(cache, 1e-3)) break;
        }
        auto analytic = head_backward(cache, params, config, target, w_s);
        const auto analytic_flat = oracle::parameter_scalars(analytic);
        const auto numeric =
            oracle::finite_difference_gradient(input, params, config, target, w_s, mask_seed, 1e-5);

        REQUIRE(analytic_flat.size() == numeric.size());
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            const double a = *analytic_flat[i];
            const double f = numeric[i];
            const double rel = std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-4});
            INFO("draw ", draw, " param ", i, ": analytic ", a, " numeric ", f);
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("per-label weighted gradients match finite differences") {
    HeadConfig config = tiny_config();
    config.dropout_p = 0.0;
    std::mt19937_64 gen(55);
    auto params = init_parameters(config, 8);
    const Matrix input = random_matrix(3, 4, gen);
    const LabelVector target = random_target(config.n_labels, gen);
    std::vector<double> label_weights(config.n_labels);
    double sum = 0.0;
    for (auto& w : label_weights) {
        w = 0.05 + rng::uniform01(gen);
        sum += w;
    }
    for (auto& w : label_weights) w /= sum;

    ForwardCache cache;
    head_forward(input, params, config, RunMode::train, 0, &cache);
    auto analytic = head_backward(cache, params, config, target, 1.0, &label_weights);
    const auto analytic_flat = oracle::parameter_scalars(analytic);

    auto loss_of = [&](const HeadParameters& p) {
        const auto probs = head_forward(input, p, config, RunMode::train, 0);
        return per_label_weighted_loss(probs, target, label_weights);
    };
    auto scalars = oracle::parameter_scalars(params);
    for (std::size_t i = 0; i < scalars.size(); i += 7) { // spot-check a spread of params
        const double original = *scalars[i];
        *scalars[i] = original + 1e-5;
        const double up = loss_of(params);
        *scalars[i] = original - 1e-5;
        const double down = loss_of(params);
        *scalars[i] = original;
        const double fd = (up - down) / 2e-5;
        const double a = *analytic_flat[i];
        CHECK(std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4}) < 1e-4);
    }
}

TEST_CASE("dropout averaging recovers the no-dropout dense pre-activations") {
    HeadConfig config;
    config.segment_count = 5;
    config.hidden_size = 16;
    config.kernel_widths = {2, 3};
    config.filters_per_width = 8;
    config.dense_dim = 12;
    config.n_labels = 18;
    config.dropout_p = 0.1;

    std::mt19937_64 gen(77);
    const auto params = init_parameters(config, 4);
    const Matrix input = random_matrix(5, 16, gen);

    ForwardCache infer_cache;
    head_forward(input, params, config, RunMode::infer, 0, &infer_cache);

    std::vector<double> mean(config.dense_dim, 0.0);
    const int runs = 10000;
    for (int i = 0; i < runs; ++i) {
        ForwardCache cache;
        head_forward(input, params, config, RunMode::train, 1000 + i, &cache);
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += cache.dense_pre[d];
    }
    double diff_norm = 0.0, ref_norm = 0.0;
    for (std::size_t d = 0; d < mean.size(); ++d) {
        mean[d] /= runs;
        diff_norm += (mean[d] - infer_cache.dense_pre[d]) * (mean[d] - infer_cache.dense_pre[d]);
        ref_norm += infer_cache.dense_pre[d] * infer_cache.dense_pre[d];
    }
    CHECK(std::sqrt(diff_norm) < 0.02 * std::sqrt(ref_norm));
}
