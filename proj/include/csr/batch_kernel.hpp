#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "csr/matrix.hpp"
#include "csr/model.hpp"

namespace csr {

// Loss head for one input row. Receives the forward activations and writes
// d(batch loss)/d(logits) for that row. Must only touch state owned by `row`:
// the parallel kernel calls heads concurrently.
using LossHead = std::function<void(std::size_t row, const Activations& acts, std::span<double> dlogits)>;

// Reference kernel: rows processed one after another.
void batch_gradient_serial(const Mlp& model, const Matrix& inputs, const LossHead& head,
                           GradientSet& out);

// OpenMP kernel: per-row gradients in parallel, then a per-parameter reduction
// over rows in row order. Bit-identical to the serial kernel for any thread count.
void batch_gradient_parallel(const Mlp& model, const Matrix& inputs, const LossHead& head,
                             GradientSet& out, std::vector<double>& workspace);

class BatchGradientKernel {
public:
    explicit BatchGradientKernel(bool parallel = true) : parallel_(parallel) {}

    // out += sum over rows of the per-row parameter gradient.
    void accumulate(const Mlp& model, const Matrix& inputs, const LossHead& head, GradientSet& out);

private:
    bool parallel_;
    std::vector<double> workspace_;
};

// Row-wise softmax outputs (N x K). Parallel over rows.
Matrix predict(const Mlp& model, const Matrix& inputs);

}  // namespace csr
