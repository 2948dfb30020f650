#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fedae/autodiff.hpp"
#include "gradcheck.hpp"

using namespace fedae;
using fedae::testing::random_tensor;

TEST_CASE("output length arithmetic") {
    CHECK(conv1d_output_length(128, 5, 2, 2) == 64);
    CHECK(conv1d_output_length(64, 5, 2, 2) == 32);
    CHECK(conv1d_output_length(32, 5, 2, 2) == 16);
    CHECK(conv1d_output_length(16, 5, 2, 2) == 8);
    CHECK(conv1d_transposed_output_length(8, 5, 2, 2, 1) == 16);
    CHECK(conv1d_transposed_output_length(16, 5, 2, 2, 1) == 32);
    CHECK(conv1d_transposed_output_length(32, 5, 2, 2, 1) == 64);
    CHECK(conv1d_transposed_output_length(64, 5, 2, 2, 1) == 128);
    CHECK_THROWS_AS(conv1d_transposed_output_length(8, 5, 2, 2, 2), ShapeError);
    CHECK_THROWS_AS(conv1d_output_length(2, 7, 1, 0), ShapeError);
}

TEST_CASE("conv1d matches a direct sum") {
    Rng rng(11);
    const Tensor64 x = random_tensor({2, 3, 9}, rng), w = random_tensor({4, 3, 5}, rng), b = random_tensor({4}, rng);
    Tape<double> tape;
    const auto y = ops::conv1d(tape.constant(x), tape.constant(w), tape.constant(b), 2, 2).value();
    REQUIRE(y.shape() == Shape{2, 4, 5});
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t o = 0; o < 4; ++o) {
            for (std::size_t t = 0; t < 5; ++t) {
                double acc = b[o];
                for (std::size_t c = 0; c < 3; ++c) {
                    for (std::size_t k = 0; k < 5; ++k) {
                        const long pos = static_cast<long>(t * 2 + k) - 2;
                        if (pos >= 0 && pos < 9) acc += w[(o * 3 + c) * 5 + k] * x[(n * 3 + c) * 9 + pos];
                    }
                }
                CHECK(y[(n * 4 + o) * 5 + t] == doctest::Approx(acc).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("transposed convolution is the adjoint of convolution") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t stride = 1 + rng.below(2), k = 1 + 2 * rng.below(3), pad = rng.below(k / 2 + 1);
        const std::size_t len = k + rng.below(8), cin = 1 + rng.below(3), cout = 1 + rng.below(3), b = 1 + rng.below(2);
        const std::size_t len_out = conv1d_output_length(len, k, stride, pad);
        // Output padding recovers the lengths the strided convolution drops.
        const std::size_t opad = len - ((len_out - 1) * stride + k - 2 * pad);
        if (opad >= stride) continue;

        const Tensor64 x = random_tensor({b, cin, len}, rng);
        const Tensor64 y = random_tensor({b, cout, len_out}, rng);
        const Tensor64 w = random_tensor({cout, cin, k}, rng);
        Tape<double> tape;
        const Tensor64 zero_out(Shape{cout}), zero_in(Shape{cin});
        const auto cx = ops::conv1d(tape.constant(x), tape.constant(w), tape.constant(zero_out), stride, pad).value();
        const auto ty =
            ops::conv1d_transposed(tape.constant(y), tape.constant(w), tape.constant(zero_in), stride, pad, opad).value();
        REQUIRE(ty.shape() == x.shape());
        const double lhs = std::inner_product(cx.values().begin(), cx.values().end(), y.values().begin(), 0.0);
        const double rhs = std::inner_product(x.values().begin(), x.values().end(), ty.values().begin(), 0.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("mse gradient by hand") {
    Tape<double> tape;
    Tensor64 w = Tensor64::scalar(1.0);
    w.set_requires_grad(true);
    const auto wv = tape.leaf(w);
    const auto pred = ops::mul(wv, tape.constant(Tensor64::scalar(2.0)));
    const auto loss = ops::mse_loss(pred, tape.constant(Tensor64::scalar(0.0)));
    CHECK(loss.value().item() == 4.0);
    tape.backward(loss);
    CHECK(tape.grad(wv)[0] == 8.0);
}

TEST_CASE("cross-entropy saturates and respects weights") {
    Tape<double> tape;
    Tensor64 logits(Shape{2, 3}, std::vector<double>{1000, 0, 0, 0, 0, 1000});
    const std::vector<int> labels{0, 2};
    const std::vector<double> weights{1, 1, 1};
    const auto loss = ops::weighted_softmax_cross_entropy(tape.constant(logits), std::span<const int>(labels),
                                                          std::span<const double>(weights));
    CHECK(loss.value().item() == doctest::Approx(0.0).epsilon(1e-12));

    Tensor64 flat(Shape{1, 4}, 0.0);
    const std::vector<int> one{1};
    const std::vector<double> w2{0, 2, 0, 0};
    const auto l2 = ops::weighted_softmax_cross_entropy(tape.constant(flat), std::span<const int>(one),
                                                        std::span<const double>(w2));
    CHECK(l2.value().item() == doctest::Approx(2.0 * std::log(4.0)));

    const std::vector<int> out_of_range{4};
    CHECK_THROWS(ops::weighted_softmax_cross_entropy(tape.constant(flat), std::span<const int>(out_of_range),
                                                     std::span<const double>(w2)));
    const std::vector<double> negative{0, -1, 0, 0};
    CHECK_THROWS(ops::weighted_softmax_cross_entropy(tape.constant(flat), std::span<const int>(one),
                                                     std::span<const double>(negative)));
}

TEST_CASE("backward requires a scalar loss") {
    Tape<double> tape;
    Tensor64 x(Shape{3}, 1.0);
    x.set_requires_grad(true);
    const auto v = tape.leaf(x);
    CHECK_THROWS_AS(tape.backward(ops::relu(v)), ShapeError);
}

TEST_CASE("constants receive no gradient") {
    Tape<double> tape;
    Tensor64 x(Shape{3}, 1.0);
    x.set_requires_grad(true);
    const auto a = tape.leaf(x);
    const auto c = tape.constant(Tensor64(Shape{3}, 2.0));
    tape.backward(ops::sum(ops::mul(a, c)));
    CHECK(tape.grad(a)[0] == 2.0);
    CHECK(tape.grad(c).empty());
}

TEST_CASE("float and double tapes agree") {
    Rng rng(5);
    const Tensor64 x = random_tensor({2, 2, 8}, rng), w = random_tensor({3, 2, 5}, rng), b = random_tensor({3}, rng);
    Tape<double> td;
    Tape<float> tf;
    const auto yd = ops::relu(ops::conv1d(td.constant(x), td.constant(w), td.constant(b), 2, 2)).value();
    const auto yf = ops::relu(ops::conv1d(tf.constant(x.cast<float>()), tf.constant(w.cast<float>()),
                                          tf.constant(b.cast<float>()), 2, 2))
                        .value();
    for (std::size_t i = 0; i < yd.size(); ++i) CHECK(yf[i] == doctest::Approx(yd[i]).epsilon(1e-5));
}

TEST_CASE("gradients match central differences for every layer") {
    for (const auto& layer : fedae::testing::layer_cases()) {
        CAPTURE(layer.name);
        const auto s = fedae::testing::run_layer(layer, 100, 2024);
        CHECK(s.cases == 100);
        CHECK(s.failures == 0);
        CHECK(s.worst_relative < 1e-3);
        CHECK(s.worst_absolute < 1e-6);
    }
}
