#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csr/matrix.hpp"

namespace csr {

struct CorruptionRecord {
    std::vector<int> clean;
    std::vector<int> noisy;
    std::vector<std::size_t> mislabeled;  // {i : noisy_i != clean_i}
    double target_rate = 0.0;
    double achieved_rate = 0.0;
    std::uint64_t seed = 0;
};

// Each label flips with probability `rate` to a uniformly drawn other class.
CorruptionRecord symmetric_noise(std::span<const int> labels, double rate, int num_classes, std::uint64_t seed);

// Per-class random projections W[c] (d x K) that score candidate wrong
// classes for a sample of clean class c.
struct IdnProjection {
    std::size_t dim = 0;
    int num_classes = 0;
    std::vector<double> w;  // K x d x K

    static IdnProjection random(std::size_t dim, int num_classes, std::uint64_t seed);
    std::vector<double> scores(std::span<const double> x, int clean_label) const;
};

// Instance-dependent noise: flip probability q_i ~ N(rate, flip_std^2)
// truncated to [0, 1] (q_i = rate when flip_std == 0); the flip target is
// drawn from softmax of the projection scores over the wrong classes.
CorruptionRecord idn_noise(const Matrix& x, std::span<const int> labels, double rate, int num_classes,
                           std::uint64_t seed, double flip_std = 0.1);

// Rebuilds mislabeled/achieved_rate from clean and noisy.
void refresh_record(CorruptionRecord& rec);

}  // namespace csr
