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

#ifndef sdrsma_decompositions_H
#define sdrsma_decompositions_H

#include <armadillo>
#include <vector>

#include "sdrsma/errors.hpp"

namespace sdrsma
{

// Joint factorization A_i = U_i * diag(sigma_i) * V^H of a set of matrices
// sharing one right basis V (higher-order generalized SVD). Columns of every
// U_i and of V have unit Euclidean norm; V is invertible; sigma_i >= 0.
struct HoGsvdResult
{
    std::vector<arma::cx_mat> left;  // U_i, m_i x n, unit-norm columns
    arma::cx_mat right;              // V, n x n, unit-norm columns, invertible
    std::vector<arma::vec> values;   // sigma_i, length n, nonnegative
    std::vector<arma::uvec> clamped; // per matrix: value indices clamped to zero
    bool any_clamped = false;        // true if any degenerate value was clamped
};

enum class SubspaceRole
{
    RowSpaceIntersection, // dominant shared row-space directions of a channel stack
    NullSpace             // null space of a stacked matrix
};

// Orthonormal basis of a subspace, tagged with how it was obtained.
struct SubspaceBasis
{
    arma::cx_mat basis; // orthonormal columns
    SubspaceRole role;
};

// Relative singular-value threshold below which a matrix counts as rank
// deficient throughout this module.
constexpr double kRankTolerance = 1e-10;

// Higher-order generalized SVD of S matrices A_i (m_i x n, m_i >= n, full
// column rank, shared n).
//
// Construction: form the Gram matrices S_i = A_i^H A_i and the pairwise
// quotient mean T = 1/(S(S-1)) * sum_{i<j} (S_i S_j^{-1} + S_j S_i^{-1});
// the eigenvectors of T give the shared right basis V (for S = 1, T = S_1,
// which reduces the factorization to an ordinary SVD up to column phase).
// Eigenpairs are sorted by descending eigenvalue, each column of V is scaled
// to unit norm with its largest-magnitude entry made real positive, and
// U_i / sigma_i follow from the columns of B_i = A_i V^{-H}.
//
// Throws DimensionMismatch on inconsistent column counts or m_i < n,
// RankDeficiency(i) if matrix i is numerically column-rank deficient, and
// NumericalError if the quotient-mean eigenvalues are not numerically real
// or V is numerically singular.
HoGsvdResult ho_gsvd(const std::vector<arma::cx_mat> &matrices);

// Orthonormal basis (n x target_dim) of the dominant shared row-space
// directions of a set of matrices with common column count n: the right
// singular vectors of the vertically stacked matrix that belong to the
// target_dim largest singular values.
SubspaceBasis row_space_intersection(const std::vector<arma::cx_mat> &matrices,
                                     arma::uword target_dim);

// Orthonormal basis (n x dim) of the null space of a full-row-rank stacked
// matrix ((n - dim) x n in the critically loaded case). The returned basis B
// satisfies ||stacked * B||_F <= 1e-10 * ||stacked||_F.
// Throws RankDeficiency if the stack is row-rank deficient or its null space
// is smaller than dim.
SubspaceBasis null_space_basis(const arma::cx_mat &stacked, arma::uword dim);

// Left pseudo-inverse P (n x m) of a full-column-rank tall matrix (m x n,
// m >= n) with P * tall = I_n.
arma::cx_mat left_pseudo_inverse(const arma::cx_mat &tall);

} // namespace sdrsma

#endif
