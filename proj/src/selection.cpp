#include "csr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>

#include "csr/error.hpp"
#include "csr/rng.hpp"

namespace csr {

namespace {

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == -std::numeric_limits<double>::infinity()) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double safe_log(double w) { return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity(); }

void mean_var(std::span<const double> xs, double& mean, double& var) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = std::max(var / static_cast<double>(xs.size()), kGmmVarFloor);
}

Gmm1D run_em(std::span<const double> xs, Gmm1D g, int max_iters, double tol) {
    const std::size_t n = xs.size();
    std::vector<double> r0(n);
    for (int it = 0; it < max_iters; ++it) {
        // E-step at the current parameters; its log-likelihood goes on the trace.
        double ll = 0.0;
        const double lw0 = safe_log(g.weight[0]), lw1 = safe_log(g.weight[1]);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = lw0 + log_normal_pdf(xs[i], g.mean[0], g.var[0]);
            const double b = lw1 + log_normal_pdf(xs[i], g.mean[1], g.var[1]);
            const double lse = log_sum_exp(a, b);
            ll += lse;
            r0[i] = std::exp(a - lse);
        }
        g.loglik_trace.push_back(ll);
        g.iterations = it + 1;
        const std::size_t m = g.loglik_trace.size();
        if (m >= 2 && g.loglik_trace[m - 1] - g.loglik_trace[m - 2] < tol) break;

        // M-step.
        double n0 = 0.0, s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            n0 += r0[i];
            s0 += r0[i] * xs[i];
            s1 += (1.0 - r0[i]) * xs[i];
        }
        const double n1 = static_cast<double>(n) - n0;
        if (n0 > 0.0) g.mean[0] = s0 / n0;
        if (n1 > 0.0) g.mean[1] = s1 / n1;
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = xs[i] - g.mean[0], d1 = xs[i] - g.mean[1];
            v0 += r0[i] * d0 * d0;
            v1 += (1.0 - r0[i]) * d1 * d1;
        }
        if (n0 > 0.0) g.var[0] = std::max(v0 / n0, kGmmVarFloor);
        if (n1 > 0.0) g.var[1] = std::max(v1 / n1, kGmmVarFloor);
        g.weight[0] = n0 / static_cast<double>(n);
        g.weight[1] = 1.0 - g.weight[0];
    }
    return g;
}

void order_components(Gmm1D& g) {
    if (g.mean[0] > g.mean[1]) {
        std::swap(g.mean[0], g.mean[1]);
        std::swap(g.var[0], g.var[1]);
        std::swap(g.weight[0], g.weight[1]);
    }
}

}  // namespace

Gmm1D gmm_fit(std::span<const double> values, int max_iters, double tol, std::uint64_t seed) {
    if (values.size() < 4) throw ContractViolation("gmm_fit: need at least 4 values");
    for (double x : values)
        if (!std::isfinite(x)) throw ContractViolation("gmm_fit: non-finite value");

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
        Gmm1D g;
        g.mean = {lo, lo};
        g.var = {kGmmVarFloor, kGmmVarFloor};
        g.degenerate = true;
        return g;
    }

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t half = sorted.size() / 2;

    Gmm1D split;
    mean_var(std::span<const double>(sorted).first(half), split.mean[0], split.var[0]);
    mean_var(std::span<const double>(sorted).subspan(half), split.mean[1], split.var[1]);

    Gmm1D pair;
    {
        auto rng = make_rng(seed, Stream::gmm);
        std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
        double a = values[pick(rng)], b = values[pick(rng)];
        for (int tries = 0; a == b && tries < 16; ++tries) b = values[pick(rng)];
        if (a == b) b = hi;
        double overall_mean = 0.0, overall_var = 0.0;
        mean_var(values, overall_mean, overall_var);
        pair.mean = {std::min(a, b), std::max(a, b)};
        pair.var = {overall_var, overall_var};
    }

    Gmm1D best = run_em(values, split, max_iters, tol);
    Gmm1D other = run_em(values, pair, max_iters, tol);
    if (other.loglik_trace.back() > best.loglik_trace.back()) best = std::move(other);
    order_components(best);
    return best;
}

double gmm_log_likelihood(const Gmm1D& g, std::span<const double> values) {
    double ll = 0.0;
    for (double x : values)
        ll += log_sum_exp(safe_log(g.weight[0]) + log_normal_pdf(x, g.mean[0], g.var[0]),
                          safe_log(g.weight[1]) + log_normal_pdf(x, g.mean[1], g.var[1]));
    return ll;
}

double posterior_clean(const Gmm1D& g, double value) {
    if (g.degenerate) return 0.5;
    const double a = safe_log(g.weight[0]) + log_normal_pdf(value, g.mean[0], g.var[0]);
    const double b = safe_log(g.weight[1]) + log_normal_pdf(value, g.mean[1], g.var[1]);
    return std::exp(a - log_sum_exp(a, b));
}

IndexSet gmm_select(std::span<const double> values, double sigma, std::vector<double>* posteriors) {
    const Gmm1D g = gmm_fit(values);
    IndexSet out;
    if (posteriors) posteriors->assign(values.size(), 0.5);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double post = posterior_clean(g, values[i]);
        if (posteriors) (*posteriors)[i] = post;
        if (g.degenerate || post > sigma) out.push_back(i);
    }
    return out;
}

IndexSet small_loss_select(std::span<const double> losses, double sigma, std::vector<double>* posteriors) {
    return gmm_select(losses, sigma, posteriors);
}

std::vector<double> u_scores(const NoiseParams& noise, std::span<const int> labels) {
    if (labels.size() != noise.u.rows) throw ContractViolation("u_scores: label count mismatch");
    std::vector<double> scores(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double u = noise.u(i, static_cast<std::size_t>(labels[i]));
        scores[i] = u * u;
    }
    return scores;
}

IndexSet small_u_select(const NoiseParams& noise, std::span<const int> labels, double sigma,
                        std::vector<double>* posteriors) {
    return gmm_select(u_scores(noise, labels), sigma, posteriors);
}

SamplePartition joint_partition(const IndexSet& s_loss, const IndexSet& s_u, const IndexSet& universe) {
    if (!std::includes(universe.begin(), universe.end(), s_loss.begin(), s_loss.end()) ||
        !std::includes(universe.begin(), universe.end(), s_u.begin(), s_u.end()))
        throw ContractViolation("joint_partition: selections must be subsets of the sample set");
    SamplePartition part;
    IndexSet either;
    std::set_intersection(s_loss.begin(), s_loss.end(), s_u.begin(), s_u.end(), std::back_inserter(part.clean));
    std::set_union(s_loss.begin(), s_loss.end(), s_u.begin(), s_u.end(), std::back_inserter(either));
    std::set_difference(either.begin(), either.end(), part.clean.begin(), part.clean.end(),
                        std::back_inserter(part.hard));
    std::set_difference(universe.begin(), universe.end(), either.begin(), either.end(),
                        std::back_inserter(part.noisy));
    return part;
}

bool is_exact_partition(const SamplePartition& part, const IndexSet& universe) {
    IndexSet merged;
    merged.reserve(part.clean.size() + part.hard.size() + part.noisy.size());
    merged.insert(merged.end(), part.clean.begin(), part.clean.end());
    merged.insert(merged.end(), part.hard.begin(), part.hard.end());
    merged.insert(merged.end(), part.noisy.begin(), part.noisy.end());
    std::sort(merged.begin(), merged.end());
    return merged == universe;  // equal multisets: disjoint and covering
}

IndexSet full_range(std::size_t n) {
    IndexSet all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
}

}  // namespace csr
