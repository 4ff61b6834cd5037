#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csr {

// g_t = |z_t| / sum_t |z_t|. Throws DegenerateError on an all-zero series.
std::vector<double> grad_proportion(std::span<const double> series);

// I = sum_t |a_t - b_t| / sum_t (a_t + b_t). Throws ContractViolation on length mismatch.
double incoordination(std::span<const double> a, std::span<const double> b);

// Fraction of mislabeled samples whose predicted class equals the noisy label.
// Throws DegenerateError if the mislabeled set is empty.
double noise_fitting_rate(std::span<const int> predictions, std::span<const int> noisy_labels,
                          std::span<const std::size_t> mislabeled);

struct SelectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    bool precision_defined = true;  // false when nothing was selected (precision is NaN)
};

// Both index sets sorted ascending.
SelectionMetrics selection_metrics(std::span<const std::size_t> selected, std::span<const std::size_t> true_clean);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace csr
