#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csr/noise.hpp"

namespace csr {

// Two-component 1-D Gaussian mixture. Component 0 has the smaller mean.
struct Gmm1D {
    std::array<double, 2> mean{};
    std::array<double, 2> var{};
    std::array<double, 2> weight{0.5, 0.5};
    bool degenerate = false;              // all inputs (numerically) equal
    std::vector<double> loglik_trace;     // per EM iteration, best restart
    int iterations = 0;
};

inline constexpr double kGmmVarFloor = 1e-8;

// EM with two restarts (median split, seeded random pair), best final
// log-likelihood kept. Stops when the improvement drops below tol.
Gmm1D gmm_fit(std::span<const double> values, int max_iters = 100, double tol = 1e-10, std::uint64_t seed = 0);

double gmm_log_likelihood(const Gmm1D& model, std::span<const double> values);

// Posterior probability of the low-mean component. 0.5 for degenerate fits.
double posterior_clean(const Gmm1D& model, double value);

using IndexSet = std::vector<std::size_t>;  // sorted, unique

// {i : posterior_clean(fit(values), values_i) > sigma}; degenerate fits select all.
IndexSet gmm_select(std::span<const double> values, double sigma, std::vector<double>* posteriors = nullptr);

IndexSet small_loss_select(std::span<const double> losses, double sigma, std::vector<double>* posteriors = nullptr);

// Scalarizes each sample as (u_i at its labeled class)^2 before fitting.
std::vector<double> u_scores(const NoiseParams& noise, std::span<const int> labels);
IndexSet small_u_select(const NoiseParams& noise, std::span<const int> labels, double sigma,
                        std::vector<double>* posteriors = nullptr);

struct SamplePartition {
    IndexSet clean;
    IndexSet hard;
    IndexSet noisy;
};

// clean = S_loss & S_u, hard = (S_loss | S_u) - clean, noisy = universe - (S_loss | S_u).
// Throws ContractViolation if either selection is not a subset of universe.
SamplePartition joint_partition(const IndexSet& s_loss, const IndexSet& s_u, const IndexSet& universe);

// True when the three sets are pairwise disjoint and their union is universe.
bool is_exact_partition(const SamplePartition& part, const IndexSet& universe);

IndexSet full_range(std::size_t n);

}  // namespace csr
