#pragma once

// Null space of a fully connected network. The network's null directions are
// the null space of the first-layer weight matrix: adding any multiple of
// such a direction to any input leaves every later layer's input, and hence
// the output, unchanged. This header extracts that space, splits vectors
// into null and complement parts, and checks the defining property and its
// consequences empirically.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nullnet/linalg.hpp"
#include "nullnet/network.hpp"
#include "nullnet/rng.hpp"

namespace nullnet {

struct NetworkNullSpace {
    OrthonormalBasis basis;  // orthonormal basis of the network null space
    Matrix row_projector;    // P, onto the row space of W_1
    Matrix null_projector;   // I - P
    std::size_t source_layer = 1;

    std::size_t dimension() const { return basis.size(); }
    std::size_t ambient_dim() const { return basis.ambient_dim; }
};

/// Extract the null space of f from its first-layer weight matrix.
inline NetworkNullSpace extract_null_space(const Network& f) {
    validate_network(f);
    const Matrix& w1 = f.layers.front().weights;
    NetworkNullSpace ns;
    ns.basis = null_basis(w1);
    ns.row_projector = row_space_projector(w1);
    ns.null_projector = Matrix(w1.cols, w1.cols);
    for (std::size_t i = 0; i < w1.cols; ++i)
        for (std::size_t j = 0; j < w1.cols; ++j)
            ns.null_projector(i, j) = (i == j ? 1.0 : 0.0) - ns.row_projector(i, j);
    ns.source_layer = 1;
    return ns;
}

/// x split into its null-space component and the orthogonal complement;
/// the parts sum back to x and are mutually orthogonal.
struct DecompositionPair {
    Vector null_part;  // (I - P) x
    Vector perp_part;  // P x
};

inline DecompositionPair decompose(const NetworkNullSpace& ns, const Vector& x) {
    if (x.size() != ns.ambient_dim())
        throw std::invalid_argument("decompose: dimension mismatch");
    DecompositionPair pair;
    pair.null_part = matvec(ns.null_projector, x);
    pair.perp_part = matvec(ns.row_projector, x);
    return pair;
}

namespace detail {

/// Random vector in span(basis) with coefficients uniform in [-1, 1].
inline Vector random_null_combination(const OrthonormalBasis& basis, Rng& rng) {
    Vector v(basis.ambient_dim, 0.0);
    for (const Vector& b : basis.vectors) {
        const double c = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += c * b[i];
    }
    return v;
}

inline Vector random_null_unit(const OrthonormalBasis& basis, Rng& rng) {
    for (;;) {
        Vector v = random_null_combination(basis, rng);
        const double n = norm2(v);
        if (n > 1e-12) {
            for (double& x : v) x /= n;
            return v;
        }
    }
}

inline int argmax_index(const Vector& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

}  // namespace detail

struct NullPropertyReport {
    double max_output_deviation = 0.0;  // max over samples of ||f(x+av) - f(x)||_inf
    std::size_t argmax_flips = 0;
    bool trivial_null_space = false;
    std::size_t samples = 0;
};

/// Sample random inputs x in [-1,1]^n, scalars a in [a_lo, a_hi], and unit
/// null directions v; report how much f(x + a v) deviates from f(x).
inline NullPropertyReport verify_null_property(const Network& f, const NetworkNullSpace& ns,
                                               std::size_t n_samples, double a_lo, double a_hi,
                                               std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("verify_null_property: need n_samples >= 1");
    NullPropertyReport report;
    if (ns.basis.empty()) {
        report.trivial_null_space = true;
        return report;
    }
    Rng rng(seed);
    const std::size_t n = ns.ambient_dim();
    for (std::size_t s = 0; s < n_samples; ++s) {
        Vector x(n);
        for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
        const double a = rng.uniform(a_lo, a_hi);
        const Vector v = detail::random_null_unit(ns.basis, rng);
        Vector shifted(n);
        for (std::size_t i = 0; i < n; ++i) shifted[i] = x[i] + a * v[i];
        const Vector y0 = forward(f, x);
        const Vector y1 = forward(f, shifted);
        report.max_output_deviation = std::max(report.max_output_deviation, inf_norm(sub(y1, y0)));
        if (detail::argmax_index(y0) != detail::argmax_index(y1)) ++report.argmax_flips;
    }
    report.samples = n_samples;
    return report;
}

struct SinglePointReport {
    double max_pair_deviation = 0.0;  // max ||f(u) - f(w)||_inf over sampled pairs
    double max_vs_zero = 0.0;         // max ||f(u) - f(0)||_inf
    bool trivial_null_space = false;
    std::size_t samples = 0;
};

/// All null-space vectors map to the same output as the zero vector; sample
/// random pairs from span(basis) and measure the worst deviation.
inline SinglePointReport check_mapped_to_single_point(const Network& f,
                                                      const NetworkNullSpace& ns,
                                                      std::size_t n_samples, std::uint64_t seed) {
    SinglePointReport report;
    if (ns.basis.empty()) {
        report.trivial_null_space = true;
        return report;
    }
    Rng rng(seed);
    const Vector f0 = forward(f, Vector(ns.ambient_dim(), 0.0));
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Vector u = detail::random_null_combination(ns.basis, rng);
        const Vector w = detail::random_null_combination(ns.basis, rng);
        const Vector fu = forward(f, u);
        const Vector fw = forward(f, w);
        report.max_pair_deviation = std::max(report.max_pair_deviation, inf_norm(sub(fu, fw)));
        report.max_vs_zero = std::max(report.max_vs_zero, inf_norm(sub(fu, f0)));
        report.max_vs_zero = std::max(report.max_vs_zero, inf_norm(sub(fw, f0)));
    }
    report.samples = n_samples;
    return report;
}

}  // namespace nullnet
