#pragma once

// Single-channel 2-D convolutions lowered to explicit matrices acting on
// row-major flattened images (stride 1, cross-correlation orientation).
// Valid padding shrinks the output to (n1-k1+1) x (n2-k2+1); same padding
// zero-pads so the output keeps the input shape. On top of the lowering:
// kernel nullities, joint null spaces across kernels, and a statistical
// survey of the full-rank property of random kernels.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nullnet/linalg.hpp"
#include "nullnet/rng.hpp"

namespace nullnet::conv {

enum class Padding { valid, same };

struct Kernel {
    Matrix weights;  // k1 x k2

    std::size_t k1() const { return weights.rows; }
    std::size_t k2() const { return weights.cols; }
};

struct ConvOperator {
    Kernel kernel;
    std::size_t input_rows = 0;  // n1
    std::size_t input_cols = 0;  // n2
    Padding padding = Padding::valid;
    Matrix matrix;  // the lowered operator
};

/// Lower a kernel acting on n1 x n2 images to its matrix representation.
inline ConvOperator lower(const Kernel& kernel, std::size_t n1, std::size_t n2, Padding padding) {
    const std::size_t k1 = kernel.k1(), k2 = kernel.k2();
    if (k1 == 0 || k2 == 0) throw std::invalid_argument("lower: empty kernel");
    require_finite(kernel.weights, "lower");
    if (n1 < k1 || n2 < k2)
        throw std::invalid_argument("lower: image must be at least as large as the kernel");

    ConvOperator op;
    op.kernel = kernel;
    op.input_rows = n1;
    op.input_cols = n2;
    op.padding = padding;

    if (padding == Padding::valid) {
        const std::size_t out1 = n1 - k1 + 1, out2 = n2 - k2 + 1;
        op.matrix = Matrix(out1 * out2, n1 * n2);
        for (std::size_t r = 0; r < out1; ++r)
            for (std::size_t c = 0; c < out2; ++c)
                for (std::size_t i = 0; i < k1; ++i)
                    for (std::size_t j = 0; j < k2; ++j)
                        op.matrix(r * out2 + c, (r + i) * n2 + (c + j)) = kernel.weights(i, j);
    } else {
        const std::size_t pad1 = (k1 - 1) / 2, pad2 = (k2 - 1) / 2;
        op.matrix = Matrix(n1 * n2, n1 * n2);
        for (std::size_t r = 0; r < n1; ++r)
            for (std::size_t c = 0; c < n2; ++c)
                for (std::size_t i = 0; i < k1; ++i)
                    for (std::size_t j = 0; j < k2; ++j) {
                        const std::ptrdiff_t src_r = std::ptrdiff_t(r + i) - std::ptrdiff_t(pad1);
                        const std::ptrdiff_t src_c = std::ptrdiff_t(c + j) - std::ptrdiff_t(pad2);
                        if (src_r < 0 || src_c < 0 || src_r >= std::ptrdiff_t(n1) ||
                            src_c >= std::ptrdiff_t(n2))
                            continue;  // zero padding
                        op.matrix(r * n2 + c, std::size_t(src_r) * n2 + std::size_t(src_c)) =
                            kernel.weights(i, j);
                    }
    }
    return op;
}

/// Null-space dimension of a kernel's lowered operator.
inline std::size_t kernel_nullity(const Kernel& kernel, std::size_t n1, std::size_t n2,
                                  Padding padding, double tol = -1.0) {
    const ConvOperator op = lower(kernel, n1, n2, padding);
    return op.matrix.cols - rank(op.matrix, tol);
}

/// Basis of the joint null space of several operators: the null space of the
/// vertically stacked matrices.
inline OrthonormalBasis intersect_null_spaces(const std::vector<ConvOperator>& operators,
                                              double tol = -1.0) {
    if (operators.empty())
        throw std::invalid_argument("intersect_null_spaces: need at least one operator");
    const std::size_t n1 = operators.front().input_rows, n2 = operators.front().input_cols;
    const Padding padding = operators.front().padding;
    std::size_t total_rows = 0;
    for (const ConvOperator& op : operators) {
        if (op.input_rows != n1 || op.input_cols != n2 || op.padding != padding)
            throw std::invalid_argument(
                "intersect_null_spaces: operators must share input shape and padding");
        total_rows += op.matrix.rows;
    }
    Matrix stacked(total_rows, n1 * n2);
    std::size_t row = 0;
    for (const ConvOperator& op : operators) {
        std::copy(op.matrix.data.begin(), op.matrix.data.end(),
                  stacked.data.begin() + row * stacked.cols);
        row += op.matrix.rows;
    }
    return null_basis(stacked, tol);
}

/// Fraction of random kernels (entries uniform in [-1, 1]) whose lowered
/// operator has full rank. Trial streams derive from (seed, trial index).
inline double full_rank_survey(std::size_t n1, std::size_t n2, std::size_t k1, std::size_t k2,
                               Padding padding, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("full_rank_survey: need trials >= 1");
    std::size_t full = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng = Rng::substream(seed, t);
        Kernel kernel{Matrix(k1, k2)};
        for (double& w : kernel.weights.data) w = rng.uniform(-1.0, 1.0);
        const ConvOperator op = lower(kernel, n1, n2, padding);
        if (rank(op.matrix) == std::min(op.matrix.rows, op.matrix.cols)) ++full;
    }
    return static_cast<double>(full) / static_cast<double>(trials);
}

}  // namespace nullnet::conv
