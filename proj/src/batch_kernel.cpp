#include "csr/batch_kernel.hpp"

#include <omp.h>

#include "csr/error.hpp"

namespace csr {

namespace {

void check_inputs(const Mlp& model, const Matrix& inputs, const GradientSet& out) {
    if (inputs.cols != model.input_dim()) throw ContractViolation("batch gradient: input width mismatch");
    if (out.values.size() != model.num_params()) throw ContractViolation("batch gradient: gradient shape mismatch");
}

}  // namespace

void batch_gradient_serial(const Mlp& model, const Matrix& inputs, const LossHead& head, GradientSet& out) {
    check_inputs(model, inputs, out);
    const std::size_t P = model.num_params();
    const std::size_t K = model.num_classes();
    std::vector<double> row_grad(P);
    std::vector<double> dlogits(K);
    Activations acts;
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        forward(model, inputs.row(r), acts);
        std::fill(dlogits.begin(), dlogits.end(), 0.0);
        head(r, acts, dlogits);
        std::fill(row_grad.begin(), row_grad.end(), 0.0);
        backward(model, acts, dlogits, row_grad);
        for (std::size_t p = 0; p < P; ++p) out.values[p] += row_grad[p];
    }
}

void batch_gradient_parallel(const Mlp& model, const Matrix& inputs, const LossHead& head, GradientSet& out,
                             std::vector<double>& workspace) {
    check_inputs(model, inputs, out);
    const std::size_t P = model.num_params();
    const std::size_t K = model.num_classes();
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(inputs.rows);
    workspace.assign(inputs.rows * P, 0.0);

#pragma omp parallel
    {
        Activations acts;
        std::vector<double> dlogits(K);
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const auto row = static_cast<std::size_t>(r);
            forward(model, inputs.row(row), acts);
            std::fill(dlogits.begin(), dlogits.end(), 0.0);
            head(row, acts, dlogits);
            backward(model, acts, dlogits, std::span<double>(workspace.data() + row * P, P));
        }
    }

    // Reduction in row order for every parameter.
    const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(P);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
        double acc = out.values[static_cast<std::size_t>(p)];
        for (std::size_t r = 0; r < inputs.rows; ++r) acc += workspace[r * P + static_cast<std::size_t>(p)];
        out.values[static_cast<std::size_t>(p)] = acc;
    }
}

void BatchGradientKernel::accumulate(const Mlp& model, const Matrix& inputs, const LossHead& head,
                                     GradientSet& out) {
    // a single thread gains nothing from the staged reduction; results are identical either way
    if (parallel_ && omp_get_max_threads() > 1) batch_gradient_parallel(model, inputs, head, out, workspace_);
    else batch_gradient_serial(model, inputs, head, out);
}

Matrix predict(const Mlp& model, const Matrix& inputs) {
    if (inputs.cols != model.input_dim()) throw ContractViolation("predict: input width mismatch");
    Matrix out(inputs.rows, model.num_classes());
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(inputs.rows);
#pragma omp parallel
    {
        Activations acts;
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const auto row = static_cast<std::size_t>(r);
            forward(model, inputs.row(row), acts);
            std::copy(acts.probs.begin(), acts.probs.end(), out.row(row).begin());
        }
    }
    return out;
}

}  // namespace csr
