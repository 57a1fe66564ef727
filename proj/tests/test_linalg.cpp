#include <gtest/gtest.h>

#include <cmath>

#include "nullnet/linalg.hpp"
#include "nullnet/rng.hpp"
#include "support/oracles.hpp"

using namespace nullnet;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& x : m.data) x = rng.uniform(lo, hi);
    return m;
}

// Exact-rank construction: product of random thin factors.
Matrix random_rank_deficient(std::size_t rows, std::size_t cols, std::size_t r, Rng& rng) {
    return matmul(random_matrix(rows, r, rng), random_matrix(r, cols, rng));
}

}  // namespace

TEST(Rank, IdentityIsFull) { EXPECT_EQ(rank(Matrix::identity(3)), 3u); }

TEST(Rank, ZeroMatrixIsZero) { EXPECT_EQ(rank(Matrix(2, 2)), 0u); }

TEST(Rank, AgreesWithGaussianEliminationOracle) {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = random_matrix(5, 7, rng);
        const double tol = default_rank_tol(m);
        EXPECT_EQ(rank(m, tol), oracles::gauss_rank(m, tol));
    }
    for (std::size_t r = 1; r <= 4; ++r) {
        const Matrix m = random_rank_deficient(5, 7, r, rng);
        const double tol = default_rank_tol(m);
        EXPECT_EQ(rank(m, tol), r);
        EXPECT_EQ(oracles::gauss_rank(m, tol), r);
    }
}

TEST(Rank, RejectsNonFinite) {
    Matrix m(2, 2);
    m(0, 0) = std::nan("");
    EXPECT_THROW(rank(m), std::invalid_argument);
}

TEST(NullBasis, SingleRowSpansTheComplement) {
    Matrix m(1, 3);
    m(0, 0) = 1.0;
    const OrthonormalBasis basis = null_basis(m);
    ASSERT_EQ(basis.size(), 2u);
    // Each basis vector annihilated by M and orthogonal to e_1.
    for (const Vector& v : basis.vectors) {
        EXPECT_NEAR(v[0], 0.0, 1e-14);
        EXPECT_NEAR(norm2(v), 1.0, 1e-12);
    }
    // The span reproduces e_2 and e_3.
    for (std::size_t axis = 1; axis < 3; ++axis) {
        Vector e(3, 0.0);
        e[axis] = 1.0;
        Vector recon(3, 0.0);
        for (const Vector& v : basis.vectors) {
            const double c = dot(v, e);
            for (std::size_t i = 0; i < 3; ++i) recon[i] += c * v[i];
        }
        EXPECT_NEAR(norm2(sub(recon, e)), 0.0, 1e-12);
    }
}

TEST(NullBasis, IdentityHasEmptyBasis) {
    EXPECT_EQ(null_basis(Matrix::identity(3)).size(), 0u);
}

TEST(NullBasis, FullRowRank32x784Gives752) {
    Rng rng(7);
    const Matrix m = random_matrix(32, 784, rng, -0.1, 0.1);
    ASSERT_EQ(rank(m), 32u);
    const OrthonormalBasis basis = null_basis(m);
    EXPECT_EQ(basis.size(), 752u);
    const double scale = frobenius_norm(m);
    for (const Vector& v : basis.vectors) EXPECT_LE(norm2(matvec(m, v)), 1e-9 * scale);
}

TEST(NullBasis, RankNullityAndOrthonormality) {
    Rng rng(3);
    const std::pair<std::size_t, std::size_t> shapes[] = {{5, 7}, {7, 5}, {6, 6},
                                                          {1, 9}, {9, 1}, {32, 10}};
    for (auto [rows, cols] : shapes) {
        for (int deficient = 0; deficient < 2; ++deficient) {
            Matrix m = deficient
                           ? random_rank_deficient(rows, cols, std::min(rows, cols) / 2 + 1, rng)
                           : random_matrix(rows, cols, rng);
            const double tol = default_rank_tol(m);
            const OrthonormalBasis basis = null_basis(m, tol);
            EXPECT_EQ(basis.size() + rank(m, tol), cols);
            const double scale = frobenius_norm(m);
            for (std::size_t a = 0; a < basis.size(); ++a) {
                EXPECT_LE(std::abs(norm2(basis.vectors[a]) - 1.0), 1e-10);
                EXPECT_LE(norm2(matvec(m, basis.vectors[a])), 1e-9 * scale);
                for (std::size_t b = a + 1; b < basis.size(); ++b)
                    EXPECT_LE(std::abs(dot(basis.vectors[a], basis.vectors[b])), 1e-10);
            }
        }
    }
}

TEST(RowSpaceProjector, SingleRowAxis) {
    Matrix m(1, 3);
    m(0, 0) = 1.0;
    const Matrix p = row_space_projector(m);
    const Matrix expected = [] {
        Matrix d(3, 3);
        d(0, 0) = 1.0;
        return d;
    }();
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(p.data[i], expected.data[i], 1e-14);
}

TEST(RowSpaceProjector, ZeroMatrixGivesZeroProjector) {
    const Matrix p = row_space_projector(Matrix(2, 4));
    EXPECT_EQ(p.rows, 4u);
    EXPECT_EQ(p.cols, 4u);
    for (double x : p.data) EXPECT_EQ(x, 0.0);
}

TEST(RowSpaceProjector, MatchesGramSchmidtOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix m = random_matrix(2, 4, rng);
        const Matrix p = row_space_projector(m);
        const Matrix oracle = oracles::gs_row_projector(m, 1e-12);
        ASSERT_EQ(p.rows, oracle.rows);
        for (std::size_t i = 0; i < p.data.size(); ++i)
            EXPECT_NEAR(p.data[i], oracle.data[i], 1e-9);
    }
}

TEST(RowSpaceProjector, SymmetricIdempotentAndOrthogonalResidual) {
    Rng rng(13);
    for (int trial = 0; trial < 8; ++trial) {
        const Matrix m = random_matrix(3, 6, rng);
        const Matrix p = row_space_projector(m);
        // exact symmetry by construction
        const Matrix pt = transpose(p);
        for (std::size_t i = 0; i < p.data.size(); ++i) EXPECT_EQ(p.data[i], pt.data[i]);
        // idempotent within 1e-9
        const Matrix pp = matmul(p, p);
        double worst = 0.0;
        for (std::size_t i = 0; i < p.data.size(); ++i)
            worst = std::max(worst, std::abs(pp.data[i] - p.data[i]));
        EXPECT_LE(worst, 1e-9);
        // (I - P)x orthogonal to every row of m, relative to the row scale
        Vector x(6);
        for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
        const Vector px = project(p, x);
        const Vector residual = sub(x, px);
        for (std::size_t r = 0; r < m.rows; ++r) {
            Vector row(m.cols);
            for (std::size_t j = 0; j < m.cols; ++j) row[j] = m(r, j);
            EXPECT_LE(std::abs(dot(row, residual)), 1e-9 * norm2(row) * norm2(x) + 1e-12);
        }
        // reconstruction: P x + (I - P) x = x to 1e-12 relative
        const Vector recon = add(px, residual);
        EXPECT_LE(norm2(sub(recon, x)), 1e-12 * (1.0 + norm2(x)));
    }
}

TEST(Project, IdentityZeroAndAxisCases) {
    const Vector x = {3.0, 4.0};
    const Vector px_id = project(Matrix::identity(2), x);
    EXPECT_EQ(px_id[0], 3.0);
    EXPECT_EQ(px_id[1], 4.0);

    const Vector px_zero = project(Matrix(2, 2), x);
    EXPECT_EQ(px_zero[0], 0.0);
    EXPECT_EQ(px_zero[1], 0.0);

    Matrix axis(2, 2);
    axis(0, 0) = 1.0;
    const Vector px_axis = project(axis, x);
    EXPECT_EQ(px_axis[0], 3.0);
    EXPECT_EQ(px_axis[1], 0.0);
}

TEST(Project, RejectsBadShapes) {
    EXPECT_THROW(project(Matrix(2, 3), Vector(3, 0.0)), std::invalid_argument);
    EXPECT_THROW(project(Matrix::identity(3), Vector(2, 0.0)), std::invalid_argument);
}
