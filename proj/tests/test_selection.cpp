#include <doctest.h>

#include <random>

#include "csr/error.hpp"
#include "csr/selection.hpp"

using namespace csr;

namespace {

std::vector<double> two_clusters(double a, double b, double sd, std::size_t n_a, std::size_t n_b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> da(a, sd), db(b, sd);
    std::vector<double> v;
    for (std::size_t i = 0; i < n_a; ++i) v.push_back(da(rng));
    for (std::size_t i = 0; i < n_b; ++i) v.push_back(db(rng));
    return v;
}

}  // namespace

TEST_CASE("EM recovers a well separated mixture") {
    const auto v = two_clusters(0.0, 5.0, 0.1, 500, 500, 42);
    const Gmm1D g = gmm_fit(v);
    CHECK_FALSE(g.degenerate);
    CHECK(std::abs(g.mean[0] - 0.0) < 0.1);
    CHECK(std::abs(g.mean[1] - 5.0) < 0.1);
    CHECK(std::abs(g.weight[0] - 0.5) < 0.05);
    CHECK(std::abs(g.weight[1] - 0.5) < 0.05);
    for (std::size_t i = 1; i < g.loglik_trace.size(); ++i) CHECK(g.loglik_trace[i] >= g.loglik_trace[i - 1] - 1e-9);
    CHECK(g.loglik_trace.back() == doctest::Approx(gmm_log_likelihood(g, v)).epsilon(1e-9));
}

TEST_CASE("EM log-likelihood never decreases on overlapping mixtures") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto v = two_clusters(0.0, 1.0 + 0.1 * static_cast<double>(seed), 0.7, 300, 150, seed);
        const Gmm1D g = gmm_fit(v, 200, 1e-12, seed);
        for (std::size_t i = 1; i < g.loglik_trace.size(); ++i)
            CHECK(g.loglik_trace[i] >= g.loglik_trace[i - 1] - 1e-9);
        CHECK(g.var[0] >= kGmmVarFloor);
        CHECK(g.var[1] >= kGmmVarFloor);
        CHECK(g.mean[0] <= g.mean[1]);
    }
}

TEST_CASE("degenerate inputs") {
    const std::vector<double> same(30, 2.5);
    const Gmm1D g = gmm_fit(same);
    CHECK(g.degenerate);
    CHECK(posterior_clean(g, 2.5) == 0.5);
    std::vector<double> post;
    CHECK(gmm_select(same, 0.5, &post).size() == 30);
    CHECK(post.size() == 30);
    CHECK_THROWS_AS(gmm_fit(std::vector<double>{}), ContractViolation);
}

TEST_CASE("posterior closed forms") {
    Gmm1D g;
    g.mean = {0.0, 5.0};
    g.var = {0.01, 0.01};
    g.weight = {0.5, 0.5};
    CHECK(posterior_clean(g, 0.0) > 0.99);
    CHECK(posterior_clean(g, 5.0) < 0.01);
    CHECK(posterior_clean(g, 2.5) == doctest::Approx(0.5));
}

TEST_CASE("small-u selection picks the low cluster") {
    const std::size_t N = 60, K = 3;
    NoiseParams n;
    n.u = Matrix(N, K);
    n.v = Matrix(N, K);
    std::vector<int> y(N);
    for (std::size_t i = 0; i < N; ++i) {
        y[i] = static_cast<int>(i % K);
        // u_hat = u_y^2 in {0, 0.8}
        n.u(i, static_cast<std::size_t>(y[i])) = i < 40 ? 0.0 : std::sqrt(0.8);
    }
    // a little spread so both components have variance
    for (std::size_t i = 0; i < N; ++i) n.u(i, static_cast<std::size_t>(y[i])) += 1e-3 * static_cast<double>(i % 5);
    const auto sel = small_u_select(n, y, 0.5);
    CHECK(sel == full_range(40));

    NoiseParams zero;
    zero.u = Matrix(N, K);
    zero.v = Matrix(N, K);
    CHECK(small_u_select(zero, y, 0.5).size() == N);
}

TEST_CASE("small-loss selection") {
    auto v = two_clusters(0.1, 3.0, 0.2, 70, 30, 5);
    const auto sel = small_loss_select(v, 0.5);
    CHECK(sel == full_range(70));
}

TEST_CASE("joint partition set algebra") {
    const IndexSet omega{1, 2, 3, 4, 5};
    SUBCASE("overlap") {
        const auto p = joint_partition({1, 2, 3}, {2, 3, 4}, omega);
        CHECK(p.clean == IndexSet{2, 3});
        CHECK(p.hard == IndexSet{1, 4});
        CHECK(p.noisy == IndexSet{5});
        CHECK(is_exact_partition(p, omega));
    }
    SUBCASE("both select everything") {
        const auto p = joint_partition(omega, omega, omega);
        CHECK(p.clean == omega);
        CHECK(p.hard.empty());
        CHECK(p.noisy.empty());
    }
    SUBCASE("disjoint selections") {
        const auto p = joint_partition({1, 2}, {4}, omega);
        CHECK(p.clean.empty());
        CHECK(p.hard == IndexSet{1, 2, 4});
    }
    SUBCASE("selection outside the universe") {
        CHECK_THROWS_AS(joint_partition({9}, {1}, omega), ContractViolation);
    }
}

TEST_CASE("joint partition is exact for random selections") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rng() % 60;
        const IndexSet omega = full_range(n);
        IndexSet a, b;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 2) a.push_back(i);
            if (rng() % 3 == 0) b.push_back(i);
        }
        CHECK(is_exact_partition(joint_partition(a, b, omega), omega));
    }
    SamplePartition broken{{1}, {1}, {}};
    CHECK_FALSE(is_exact_partition(broken, {1}));
}
