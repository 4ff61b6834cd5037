#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csr/matrix.hpp"

namespace csr {

enum class Split { train, test };

struct Dataset {
    Matrix x;                                   // N x d
    std::vector<int> y;                         // labels used for training
    std::optional<std::vector<int>> y_clean;    // ground truth when known
    int num_classes = 0;
    Split split = Split::train;

    std::size_t size() const { return y.size(); }
    std::size_t dim() const { return x.cols; }

    // Indices where y differs from y_clean; empty without ground truth.
    std::vector<std::size_t> mislabeled() const;
    std::vector<std::size_t> truly_clean() const;

    // Throws ContractViolation when labels fall outside [0, K) or shapes disagree.
    void validate() const;
};

// K isotropic Gaussian clusters whose centers sit pairwise `separation` apart
// (scaled orthonormal directions under a random rotation; requires K <= d).
// Balanced classes, shuffled, 80/20 train/test split. y_clean == y.
std::pair<Dataset, Dataset> make_gaussian_clusters(std::size_t n, int k, std::size_t d, double separation,
                                                   double within_std, std::uint64_t seed);

// CSV schema: header f0,...,f{d-1},label[,clean_label].
// Throws ParseError carrying the 1-based line number on malformed input.
Dataset load_csv(const std::string& path, std::optional<int> num_classes = std::nullopt);
void save_csv(const Dataset& data, const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace csr
