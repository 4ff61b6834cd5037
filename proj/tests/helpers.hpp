#pragma once

#include <random>
#include <vector>

#include "csr/matrix.hpp"

namespace testing {

inline csr::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    csr::Matrix m(r, c);
    for (double& x : m.data) x = d(rng);
    return m;
}

inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(0.05, 1.0);
    std::vector<double> p(k);
    double s = 0.0;
    for (double& x : p) s += (x = d(rng));
    for (double& x : p) x /= s;
    return p;
}

}  // namespace testing
