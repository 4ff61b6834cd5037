#include "csr/noise_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "csr/error.hpp"
#include "csr/rng.hpp"

namespace csr {

namespace {

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ContractViolation("noise rate must lie in [0, 1)");
}

}  // namespace

void refresh_record(CorruptionRecord& rec) {
    rec.mislabeled.clear();
    for (std::size_t i = 0; i < rec.clean.size(); ++i)
        if (rec.noisy[i] != rec.clean[i]) rec.mislabeled.push_back(i);
    rec.achieved_rate =
        rec.clean.empty() ? 0.0 : static_cast<double>(rec.mislabeled.size()) / static_cast<double>(rec.clean.size());
}

CorruptionRecord symmetric_noise(std::span<const int> labels, double rate, int num_classes, std::uint64_t seed) {
    check_rate(rate);
    if (num_classes < 2 && rate > 0.0) throw ContractViolation("symmetric_noise: need at least two classes");
    CorruptionRecord rec{{labels.begin(), labels.end()}, {labels.begin(), labels.end()}, {}, rate, 0.0, seed};
    auto rng = make_rng(seed, Stream::corrupt);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> other(0, std::max(num_classes - 2, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (coin(rng) >= rate) continue;
        int c = other(rng);
        if (c >= labels[i]) ++c;  // skip the clean class
        rec.noisy[i] = c;
    }
    refresh_record(rec);
    return rec;
}

IdnProjection IdnProjection::random(std::size_t dim, int num_classes, std::uint64_t seed) {
    IdnProjection p{dim, num_classes, {}};
    const std::size_t k = static_cast<std::size_t>(num_classes);
    p.w.resize(k * dim * k);
    auto rng = make_rng(seed ^ 0x9e3779b97f4a7c15ULL, Stream::corrupt);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : p.w) x = normal(rng);
    return p;
}

std::vector<double> IdnProjection::scores(std::span<const double> x, int clean_label) const {
    const std::size_t k = static_cast<std::size_t>(num_classes);
    if (x.size() != dim) throw ContractViolation("IdnProjection: feature width mismatch");
    const double* w_c = w.data() + static_cast<std::size_t>(clean_label) * dim * k;
    std::vector<double> s(k, 0.0);
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t c = 0; c < k; ++c) s[c] += x[j] * w_c[j * k + c];
    return s;
}

CorruptionRecord idn_noise(const Matrix& x, std::span<const int> labels, double rate, int num_classes,
                           std::uint64_t seed, double flip_std) {
    check_rate(rate);
    if (x.rows != labels.size()) throw ContractViolation("idn_noise: feature/label count mismatch");
    if (flip_std < 0.0) throw ContractViolation("idn_noise: flip_std must be >= 0");
    const std::size_t k = static_cast<std::size_t>(num_classes);
    const auto proj = IdnProjection::random(x.cols, num_classes, seed);
    auto rng = make_rng(seed, Stream::corrupt);
    std::normal_distribution<double> normal(rate, flip_std);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    CorruptionRecord rec{{labels.begin(), labels.end()}, {labels.begin(), labels.end()}, {}, rate, 0.0, seed};
    std::vector<double> mass(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double q = rate;
        if (flip_std > 0.0) {
            do q = normal(rng);
            while (q < 0.0 || q > 1.0);
        }
        const int y = labels[i];
        auto s = proj.scores(x.row(i), y);
        s[static_cast<std::size_t>(y)] = -std::numeric_limits<double>::infinity();
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            mass[c] = std::exp(s[c] - mx);
            z += mass[c];
        }
        for (std::size_t c = 0; c < k; ++c) mass[c] *= q / z;
        mass[static_cast<std::size_t>(y)] += 1.0 - q;

        double draw = unit(rng), acc = 0.0;
        int pick = y;
        for (std::size_t c = 0; c < k; ++c) {
            acc += mass[c];
            if (draw < acc) {
                pick = static_cast<int>(c);
                break;
            }
        }
        rec.noisy[i] = pick;
    }
    refresh_record(rec);
    return rec;
}

}  // namespace csr
