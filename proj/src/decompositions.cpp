// SPDX-License-Identifier: Apache-2.0
//
// sdrsma - simultaneous diagonalization precoding and rate optimization
// for downlink MIMO rate-splitting multiple access
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "sdrsma/decompositions.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

namespace sdrsma
{

namespace
{

// Solve gram * X = rhs for a Hermitian positive-definite gram matrix,
// adding a small ridge when gram is badly conditioned (cond > 1e12). The
// ridge is 1e-12 * tr(gram)/n, i.e. negligible for well-conditioned input.
arma::cx_mat solve_gram(const arma::cx_mat &gram, const arma::cx_mat &rhs)
{
    const arma::uword n = gram.n_rows;
    arma::cx_mat lhs = gram;
    const double condition = arma::cond(gram);
    if (!(condition <= 1e12))
    {
        const double ridge = 1e-12 * arma::trace(gram).real() / static_cast<double>(n);
        lhs.diag() += ridge;
    }
    arma::cx_mat x;
    if (!arma::solve(x, lhs, rhs))
        throw NumericalError("quotient-mean solve failed on a Gram matrix");
    return x;
}

// Scale each column to unit norm and rotate its phase so that the
// largest-magnitude entry is real positive.
void normalize_columns(arma::cx_mat &m)
{
    for (arma::uword c = 0; c < m.n_cols; ++c)
    {
        const double nrm = arma::norm(m.col(c));
        if (nrm > 0.0)
            m.col(c) /= nrm;
        arma::uword pivot = arma::abs(m.col(c)).index_max();
        const std::complex<double> entry = m(pivot, c);
        const double mag = std::abs(entry);
        if (mag > 0.0)
            m.col(c) *= std::conj(entry) / mag;
    }
}

// Unit vector orthogonal to the columns of `others` (m x c, c < m).
arma::cx_vec orthogonal_unit_vector(const arma::cx_mat &others)
{
    if (others.n_cols == 0)
    {
        arma::cx_vec e(others.n_rows, arma::fill::zeros);
        e(0) = 1.0;
        return e;
    }
    arma::cx_mat complement = arma::null(others.t());
    if (complement.n_cols == 0)
        throw NumericalError("no orthogonal direction left for a degenerate column");
    return complement.col(0);
}

} // namespace

HoGsvdResult ho_gsvd(const std::vector<arma::cx_mat> &matrices)
{
    if (matrices.empty())
        throw DimensionMismatch("ho_gsvd: input list is empty");

    const arma::uword n = matrices.front().n_cols;
    const std::size_t count = matrices.size();

    for (std::size_t i = 0; i < count; ++i)
    {
        if (matrices[i].n_cols != n)
            throw DimensionMismatch("ho_gsvd: matrix " + std::to_string(i) +
                                    " has a different column count");
        if (matrices[i].n_rows < n)
            throw DimensionMismatch("ho_gsvd: matrix " + std::to_string(i) +
                                    " has fewer rows than columns");
        arma::vec sv;
        if (!arma::svd(sv, matrices[i]))
            throw NumericalError("ho_gsvd: singular value computation failed");
        if (sv.min() <= kRankTolerance * sv.max())
            throw RankDeficiency("ho_gsvd: matrix " + std::to_string(i) +
                                     " is numerically column-rank deficient",
                                 i);
    }

    std::vector<arma::cx_mat> gram(count);
    for (std::size_t i = 0; i < count; ++i)
        gram[i] = matrices[i].t() * matrices[i];

    // Shared right basis from the eigenvectors of the pairwise quotient mean.
    arma::cx_mat right(n, n);
    if (count == 1)
    {
        // Single matrix: eigenvectors of A^H A are the right singular
        // vectors, so the factorization reduces to an SVD.
        arma::vec eigval;
        arma::cx_mat eigvec;
        if (!arma::eig_sym(eigval, eigvec, gram[0]))
            throw NumericalError("ho_gsvd: eigendecomposition failed");
        right = arma::fliplr(eigvec); // descending eigenvalue order
    }
    else
    {
        arma::cx_mat quotient_mean(n, n, arma::fill::zeros);
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = i + 1; j < count; ++j)
            {
                // S_i S_j^{-1} = (S_j^{-1} S_i)^H for Hermitian S_i, S_j.
                quotient_mean += solve_gram(gram[j], gram[i]).t();
                quotient_mean += solve_gram(gram[i], gram[j]).t();
            }
        quotient_mean /= static_cast<double>(count * (count - 1));

        arma::cx_vec eigval;
        arma::cx_mat eigvec;
        if (!arma::eig_gen(eigval, eigvec, quotient_mean))
            throw NumericalError("ho_gsvd: eigendecomposition failed");

        for (arma::uword l = 0; l < n; ++l)
        {
            const double tol = 1e-8 * std::max(1.0, std::abs(eigval(l)));
            if (std::abs(eigval(l).imag()) > tol)
                throw NumericalError("ho_gsvd: quotient-mean eigenvalue " + std::to_string(l) +
                                     " is not numerically real");
        }

        // Deterministic stream order: descending eigenvalue.
        arma::uvec order = arma::sort_index(arma::real(eigval), "descend");
        right = eigvec.cols(order);
    }

    normalize_columns(right);

    if (arma::rcond(right) < 1e-14)
        throw NumericalError("ho_gsvd: shared right basis is numerically singular");

    arma::cx_mat right_inv;
    if (!arma::inv(right_inv, right))
        throw NumericalError("ho_gsvd: shared right basis inversion failed");
    const arma::cx_mat right_inv_herm = right_inv.t(); // V^{-H}

    HoGsvdResult result;
    result.right = right;
    result.left.resize(count);
    result.values.resize(count);
    result.clamped.resize(count);

    for (std::size_t i = 0; i < count; ++i)
    {
        arma::cx_mat b = matrices[i] * right_inv_herm;
        arma::vec sigma(n);
        std::vector<arma::uword> clamped;
        for (arma::uword l = 0; l < n; ++l)
        {
            sigma(l) = arma::norm(b.col(l));
            if (sigma(l) < 1e-12)
            {
                sigma(l) = 0.0;
                clamped.push_back(l);
            }
            else
                b.col(l) /= sigma(l);
        }
        // Degenerate columns get an arbitrary unit direction orthogonal to
        // the remaining ones so the left factor keeps full column rank.
        for (arma::uword l : clamped)
        {
            arma::cx_mat others = b;
            others.shed_col(l);
            b.col(l) = orthogonal_unit_vector(others);
        }
        result.left[i] = std::move(b);
        result.values[i] = std::move(sigma);
        result.clamped[i] = arma::uvec(clamped);
        result.any_clamped |= !clamped.empty();
    }

    return result;
}

SubspaceBasis row_space_intersection(const std::vector<arma::cx_mat> &matrices,
                                     arma::uword target_dim)
{
    if (matrices.empty())
        throw DimensionMismatch("row_space_intersection: input list is empty");
    if (target_dim < 1)
        throw DimensionMismatch("row_space_intersection: target dimension must be positive");

    const arma::uword n = matrices.front().n_cols;
    arma::uword total_rows = 0;
    for (std::size_t i = 0; i < matrices.size(); ++i)
    {
        if (matrices[i].n_cols != n)
            throw DimensionMismatch("row_space_intersection: matrix " + std::to_string(i) +
                                    " has a different column count");
        total_rows += matrices[i].n_rows;
    }
    if (target_dim > std::min(total_rows, n))
        throw DimensionMismatch("row_space_intersection: requested dimension exceeds "
                                "min(total rows, columns)");

    arma::cx_mat stacked(total_rows, n);
    arma::uword row = 0;
    for (const auto &m : matrices)
    {
        stacked.rows(row, row + m.n_rows - 1) = m;
        row += m.n_rows;
    }

    arma::cx_mat u, v;
    arma::vec s;
    if (!arma::svd_econ(u, s, v, stacked, "right"))
        throw NumericalError("row_space_intersection: SVD failed");

    return {v.cols(0, target_dim - 1), SubspaceRole::RowSpaceIntersection};
}

SubspaceBasis null_space_basis(const arma::cx_mat &stacked, arma::uword dim)
{
    const arma::uword n = stacked.n_cols;
    if (dim < 1 || n == 0 || dim > n)
        throw DimensionMismatch("null_space_basis: requested dimension out of range");

    // No constraining rows: the null space is the whole ambient space.
    if (stacked.n_rows == 0)
        return {arma::cx_mat(arma::eye<arma::cx_mat>(n, dim)), SubspaceRole::NullSpace};

    arma::cx_mat u, v;
    arma::vec s;
    if (!arma::svd(u, s, v, stacked))
        throw NumericalError("null_space_basis: SVD failed");

    const double smax = s.max();
    arma::uword rank = 0;
    for (arma::uword l = 0; l < s.n_elem; ++l)
        if (smax > 0.0 && s(l) > kRankTolerance * smax)
            ++rank;

    if (rank < stacked.n_rows)
        throw RankDeficiency("null_space_basis: stacked matrix is row-rank deficient");
    if (dim > n - rank)
        throw RankDeficiency("null_space_basis: null space smaller than requested dimension");

    return {v.cols(n - dim, n - 1), SubspaceRole::NullSpace};
}

arma::cx_mat left_pseudo_inverse(const arma::cx_mat &tall)
{
    if (tall.n_rows < tall.n_cols || tall.n_cols == 0)
        throw DimensionMismatch("left_pseudo_inverse: matrix must be tall (rows >= cols >= 1)");

    arma::cx_mat u, v;
    arma::vec s;
    if (!arma::svd_econ(u, s, v, tall, "both"))
        throw NumericalError("left_pseudo_inverse: SVD failed");
    if (s.max() <= 0.0 || s.min() <= kRankTolerance * s.max())
        throw RankDeficiency("left_pseudo_inverse: matrix is numerically column-rank deficient");

    return v * arma::diagmat(1.0 / s) * u.t();
}

} // namespace sdrsma
