#include "csr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>

#include "csr/error.hpp"

namespace csr {

std::vector<double> grad_proportion(std::span<const double> series) {
    double total = 0.0;
    for (double z : series) total += std::abs(z);
    if (!(total > 0.0)) throw DegenerateError("grad_proportion: series sums to zero");
    std::vector<double> g(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) g[t] = std::abs(series[t]) / total;
    return g;
}

double incoordination(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractViolation("incoordination: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        num += std::abs(a[t] - b[t]);
        den += a[t] + b[t];
    }
    if (!(den > 0.0)) throw DegenerateError("incoordination: empty distributions");
    return num / den;
}

double noise_fitting_rate(std::span<const int> predictions, std::span<const int> noisy_labels,
                          std::span<const std::size_t> mislabeled) {
    if (predictions.size() != noisy_labels.size()) throw ContractViolation("noise_fitting_rate: length mismatch");
    if (mislabeled.empty()) throw DegenerateError("noise_fitting_rate: no mislabeled samples");
    std::size_t fitted = 0;
    for (std::size_t i : mislabeled) {
        if (i >= predictions.size()) throw ContractViolation("noise_fitting_rate: index out of range");
        if (predictions[i] == noisy_labels[i]) ++fitted;
    }
    return static_cast<double>(fitted) / static_cast<double>(mislabeled.size());
}

SelectionMetrics selection_metrics(std::span<const std::size_t> selected, std::span<const std::size_t> true_clean) {
    std::vector<std::size_t> both;
    std::set_intersection(selected.begin(), selected.end(), true_clean.begin(), true_clean.end(),
                          std::back_inserter(both));
    SelectionMetrics m;
    const double hits = static_cast<double>(both.size());
    if (selected.empty()) {
        m.precision = std::numeric_limits<double>::quiet_NaN();
        m.precision_defined = false;
    } else {
        m.precision = hits / static_cast<double>(selected.size());
    }
    m.recall = true_clean.empty() ? 0.0 : hits / static_cast<double>(true_clean.size());
    return m;
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ContractViolation("spearman: need two equal-length series");
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace csr
