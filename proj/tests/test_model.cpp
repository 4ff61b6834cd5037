#include <doctest.h>

#include <cmath>

#include "csr/error.hpp"
#include "csr/model.hpp"
#include "csr/noise.hpp"
#include "helpers.hpp"

using namespace csr;

namespace {

// Straightforward re-implementation of the forward pass used as an oracle.
std::vector<double> naive_forward(const Mlp& m, const std::vector<double>& x) {
    std::vector<double> h = x;
    const auto& w = m.widths();
    const auto p = m.params();
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        std::vector<double> out(w[l + 1]);
        for (std::size_t j = 0; j < w[l + 1]; ++j) {
            double z = p[m.bias_offset(l) + j];
            for (std::size_t i = 0; i < w[l]; ++i) z += h[i] * p[m.weight_offset(l) + i * w[l + 1] + j];
            out[j] = l + 2 < w.size() ? std::tanh(z) : z;
        }
        h = out;
    }
    double mx = h[0];
    for (double z : h) mx = std::max(mx, z);
    double s = 0.0;
    for (double& z : h) s += (z = std::exp(z - mx));
    for (double& z : h) z /= s;
    return h;
}

}  // namespace

TEST_CASE("softmax closed forms") {
    const std::vector<double> zeros(5, 0.0);
    for (double p : softmax(zeros)) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
    const std::vector<double> two{0.0, std::log(3.0)};
    const auto p = softmax(two);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("zero-weight model predicts uniform") {
    Mlp m({3, 4});
    const auto p = forward(m, std::vector<double>{1.0, -2.0, 0.5});
    for (double v : p) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("forward matches an independent evaluator") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        Mlp m = Mlp::random({5, 7, 6, 4}, static_cast<std::uint64_t>(rep));
        std::uniform_real_distribution<double> d(-0.3, 0.3);
        for (std::size_t l = 0; l < m.num_layers(); ++l)
            for (std::size_t j = 0; j < m.widths()[l + 1]; ++j) m.params()[m.bias_offset(l) + j] = d(rng);
        std::vector<double> x(5);
        for (double& v : x) v = d(rng) * 5;
        const auto a = forward(m, x);
        const auto b = naive_forward(m, x);
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-13));
    }
}

TEST_CASE("forward rejects a wrong input width") {
    Mlp m({3, 2});
    CHECK_THROWS_AS(forward(m, std::vector<double>{1.0, 2.0}), ContractViolation);
}

TEST_CASE("cross-entropy examples") {
    CHECK(ce_loss(std::vector<double>{0, 1, 0}, std::vector<double>{0, 1, 0}) == 0.0);
    CHECK(ce_loss(std::vector<double>(10, 0.1), one_hot(3, 10)) == doctest::Approx(2.302585).epsilon(1e-6));
    CHECK(ce_loss(std::vector<double>{0.25, 0.75}, std::vector<double>{0, 1}) ==
          doctest::Approx(0.287682).epsilon(1e-6));
    // clamp keeps the loss finite
    CHECK(ce_loss(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(ce_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}), ContractViolation);
}

TEST_CASE("mse examples") {
    CHECK(mse_loss(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}) == 0.0);
    CHECK(mse_loss(std::vector<double>{0, 0, 0}, std::vector<double>{0, 1, 0}) == 1.0);
    CHECK(mse_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("sgd step arithmetic") {
    Mlp m({1, 1});
    m.params()[0] = 1.0;  // w
    m.params()[1] = 1.0;  // b
    GradientSet g(m);
    SUBCASE("zero gradient, no decay") {
        sgd_step(m, g, 0.1, 0.0);
        CHECK(m.params()[0] == 1.0);
        CHECK(m.params()[1] == 1.0);
    }
    SUBCASE("gradient step") {
        g.values = {0.5, 0.0};
        sgd_step(m, g, 0.1, 0.0);
        CHECK(m.params()[0] == doctest::Approx(0.95).epsilon(1e-15));
    }
    SUBCASE("weight decay") {
        sgd_step(m, g, 0.1, 0.5);
        CHECK(m.params()[0] == doctest::Approx(0.95).epsilon(1e-15));
    }
    SUBCASE("non-finite gradient") {
        g.values = {std::nan(""), 0.0};
        CHECK_THROWS_AS(sgd_step(m, g, 0.1, 0.0, 4), NonFiniteError);
    }
}

TEST_CASE("gradient check: linear model under cross-entropy") {
    std::mt19937_64 rng(5);
    Mlp m = Mlp::random({6, 4}, 3);
    const auto x = testing::random_matrix(8, 6, rng);
    const LossFn loss = [&](const Mlp& model, GradientSet* g) {
        double total = 0.0;
        Activations acts;
        for (std::size_t i = 0; i < x.rows; ++i) {
            forward(model, x.row(i), acts);
            const auto y = one_hot(i % 4, 4);
            total += ce_loss(acts.probs, y);
            if (g) {
                std::vector<double> dz(4);
                for (std::size_t k = 0; k < 4; ++k) dz[k] = acts.probs[k] - y[k];
                backward(model, acts, dz, g->values);
            }
        }
        return total;
    };
    CHECK(grad_check(m, loss, 1e-6) < 1e-5);
}

TEST_CASE("gradient check: two hidden layers under the corrected-prediction loss") {
    std::mt19937_64 rng(9);
    const std::size_t K = 3;
    Mlp m = Mlp::random({4, 5, 5, K}, 8);
    const auto x = testing::random_matrix(6, 4, rng);
    const auto u = testing::random_matrix(6, K, rng, -0.4, 0.4);
    const auto v = testing::random_matrix(6, K, rng, -0.3, 0.3);
    Matrix mbar = testing::random_matrix(K, K, rng, 0.2, 1.0);
    for (std::size_t k = 0; k < K; ++k) mbar(k, k) = 1.0;
    const LossFn loss = [&](const Mlp& model, GradientSet* g) {
        double total = 0.0;
        Activations acts;
        for (std::size_t i = 0; i < x.rows; ++i) {
            forward(model, x.row(i), acts);
            const auto y = one_hot(i % K, K);
            const auto sg = csr_sample_gradients(acts.probs, mbar, u.row(i), v.row(i), y, false);
            total += sg.ce;
            if (g) backward(model, acts, softmax_backward(acts.probs, sg.d_f), g->values);
        }
        return total;
    };
    CHECK(grad_check(m, loss, 1e-6) < 1e-4);
}

TEST_CASE("gradient check edge cases") {
    Mlp empty;
    CHECK(grad_check(empty, [](const Mlp&, GradientSet*) { return 0.0; }, 1e-6) == 0.0);
    Mlp m({2, 2});
    CHECK_THROWS_AS(grad_check(m, [](const Mlp&, GradientSet*) { return 0.0; }, 1e-2), ContractViolation);
}
