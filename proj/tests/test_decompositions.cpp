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

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "sdrsma/decompositions.hpp"

using namespace sdrsma;

namespace
{

// Independent reconstruction oracle: ||A - U diag(s) V^H||_F / ||A||_F.
double reconstruction_residual(const arma::cx_mat &a, const arma::cx_mat &u, const arma::vec &s,
                               const arma::cx_mat &v)
{
    return arma::norm(a - u * arma::diagmat(s) * v.t(), "fro") / arma::norm(a, "fro");
}

double max_column_norm_error(const arma::cx_mat &m)
{
    double worst = 0.0;
    for (arma::uword c = 0; c < m.n_cols; ++c)
        worst = std::max(worst, std::abs(arma::norm(m.col(c)) - 1.0));
    return worst;
}

// Largest sine of a principal angle between the column spans of two
// orthonormal bases (well conditioned for tiny angles, unlike acos).
double max_principal_angle_sin(const arma::cx_mat &q, const arma::cx_mat &b)
{
    const arma::cx_mat residual = b - q * (q.t() * b);
    return arma::norm(residual, 2);
}

} // namespace

TEST_CASE("ho_gsvd on a single matrix reduces to an SVD")
{
    const arma::cx_mat a = test::random_complex(6, 4, 11);
    const HoGsvdResult res = ho_gsvd({a});

    REQUIRE(reconstruction_residual(a, res.left[0], res.values[0], res.right) <= 1e-12);
    REQUIRE(max_column_norm_error(res.left[0]) <= 1e-10);
    REQUIRE(max_column_norm_error(res.right) <= 1e-10);

    arma::cx_mat u, v;
    arma::vec s;
    REQUIRE(arma::svd_econ(u, s, v, a));
    // Same singular values in the same (descending) order.
    REQUIRE(arma::abs(res.values[0] - s).max() <= 1e-10);
    // Right vectors match up to a unit phase per column.
    for (arma::uword c = 0; c < 4; ++c)
        REQUIRE(std::abs(arma::cdot(res.right.col(c), v.col(c))) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("ho_gsvd of identical identity matrices is trivial")
{
    const arma::cx_mat eye = arma::eye<arma::cx_mat>(4, 4);
    const HoGsvdResult res = ho_gsvd({eye, eye, eye});

    for (int i = 0; i < 3; ++i)
    {
        REQUIRE(res.values[i].n_elem == 4);
        REQUIRE(arma::abs(res.values[i] - 1.0).max() <= 1e-12);
    }
    // Shared basis is unitary here.
    REQUIRE(arma::norm(res.right.t() * res.right - eye, "fro") <= 1e-10);
    REQUIRE_FALSE(res.any_clamped);
}

TEST_CASE("ho_gsvd reconstructs three random matrices")
{
    std::vector<arma::cx_mat> mats;
    for (std::uint64_t i = 0; i < 3; ++i)
        mats.push_back(test::random_complex(6, 4, 100 + i));
    const HoGsvdResult res = ho_gsvd(mats);
    for (std::size_t i = 0; i < 3; ++i)
        REQUIRE(reconstruction_residual(mats[i], res.left[i], res.values[i], res.right) <= 1e-8);
}

TEST_CASE("ho_gsvd rejects bad inputs")
{
    arma::cx_mat good = test::random_complex(5, 3, 7);

    SECTION("rank-deficient matrix names the offending index")
    {
        arma::cx_mat bad = test::random_complex(5, 3, 8);
        bad.col(2) = bad.col(1); // duplicate column
        try
        {
            ho_gsvd({good, bad});
            FAIL("expected RankDeficiency");
        }
        catch (const RankDeficiency &e)
        {
            REQUIRE(e.index() == 1);
        }
    }

    SECTION("mismatched column counts")
    {
        REQUIRE_THROWS_AS(ho_gsvd({good, test::random_complex(5, 4, 9)}), DimensionMismatch);
    }

    SECTION("wide matrix")
    {
        REQUIRE_THROWS_AS(ho_gsvd({test::random_complex(3, 5, 10)}), DimensionMismatch);
    }

    SECTION("empty list")
    {
        REQUIRE_THROWS_AS(ho_gsvd({}), DimensionMismatch);
    }
}

TEST_CASE("ho_gsvd invariants hold over randomized sizes and counts")
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 60; ++trial)
    {
        const arma::uword n = 2 + (rng() % 5);     // 2..6
        const std::size_t count = 1 + (rng() % 5); // 1..5
        std::vector<arma::cx_mat> mats;
        for (std::size_t i = 0; i < count; ++i)
            mats.push_back(test::random_complex(n + (rng() % 3), n, rng()));

        const HoGsvdResult res = ho_gsvd(mats);
        REQUIRE(max_column_norm_error(res.right) <= 1e-10);
        REQUIRE(arma::rcond(res.right) > 0.0);
        for (std::size_t i = 0; i < count; ++i)
        {
            REQUIRE(reconstruction_residual(mats[i], res.left[i], res.values[i], res.right) <=
                    1e-8);
            REQUIRE(max_column_norm_error(res.left[i]) <= 1e-10);
            REQUIRE(res.values[i].min() >= 0.0);
        }
    }
}

TEST_CASE("row_space_intersection spans a single matrix's row space")
{
    const arma::cx_mat h = test::random_complex(4, 10, 21);
    const SubspaceBasis basis = row_space_intersection({h}, 4);
    REQUIRE(basis.role == SubspaceRole::RowSpaceIntersection);
    REQUIRE(basis.basis.n_rows == 10);
    REQUIRE(basis.basis.n_cols == 4);

    // Row space of h = column space of h^H: projecting onto the basis must
    // leave h^H unchanged.
    const arma::cx_mat rows = h.t();
    const arma::cx_mat projected = basis.basis * (basis.basis.t() * rows);
    REQUIRE(arma::norm(rows - projected, "fro") <= 1e-10 * arma::norm(rows, "fro"));
}

TEST_CASE("row_space_intersection of four stacked channels is orthonormal")
{
    std::vector<arma::cx_mat> mats;
    for (std::uint64_t i = 0; i < 4; ++i)
        mats.push_back(test::random_complex(4, 16, 31 + i));
    const SubspaceBasis basis = row_space_intersection(mats, 4);
    REQUIRE(basis.basis.n_rows == 16);
    REQUIRE(basis.basis.n_cols == 4);
    REQUIRE(arma::norm(basis.basis.t() * basis.basis - arma::eye<arma::cx_mat>(4, 4), "fro") <=
            1e-10);
}

TEST_CASE("row_space_intersection recovers an exactly shared subspace")
{
    // Two channels sharing a 2-dim row subspace, with much weaker energy in
    // mutually orthogonal complements. The per-channel mixing coefficients
    // are orthonormal blocks of a unitary, so the stacked Gram matrix splits
    // exactly between the shared span and the complements.
    arma::cx_mat q, r;
    arma::vec s;
    REQUIRE(arma::svd(q, s, r, test::random_complex(16, 16, 41)));
    const arma::cx_mat shared = q.cols(0, 1);
    const arma::cx_mat rest1 = q.cols(2, 3);
    const arma::cx_mat rest2 = q.cols(4, 5);

    arma::cx_mat u1, u2, dummy;
    REQUIRE(arma::svd(u1, s, dummy, test::random_complex(4, 4, 42)));
    REQUIRE(arma::svd(u2, s, dummy, test::random_complex(4, 4, 44)));

    const arma::cx_mat h1 = u1.cols(0, 1) * shared.t() + 0.1 * u1.cols(2, 3) * rest1.t();
    const arma::cx_mat h2 = u2.cols(0, 1) * shared.t() + 0.1 * u2.cols(2, 3) * rest2.t();

    const SubspaceBasis basis = row_space_intersection({h1, h2}, 2);
    REQUIRE(max_principal_angle_sin(shared, basis.basis) <= 1e-8);
}

TEST_CASE("row_space_intersection is invariant under row permutations")
{
    const arma::cx_mat stack = test::random_complex(12, 16, 51);
    const SubspaceBasis a = row_space_intersection({stack}, 4);

    arma::uvec perm = arma::randperm(12);
    const arma::cx_mat shuffled = stack.rows(perm);
    const SubspaceBasis b = row_space_intersection({shuffled}, 4);

    REQUIRE(max_principal_angle_sin(a.basis, b.basis) <= 1e-8);
}

TEST_CASE("row_space_intersection rejects an oversized dimension")
{
    REQUIRE_THROWS_AS(row_space_intersection({test::random_complex(3, 8, 61)}, 4),
                      DimensionMismatch);
}

TEST_CASE("null_space_basis on a coordinate slab")
{
    arma::cx_mat stacked(3, 4, arma::fill::zeros);
    stacked(0, 0) = 1.0;
    stacked(1, 1) = 1.0;
    stacked(2, 2) = 1.0;
    const SubspaceBasis basis = null_space_basis(stacked, 1);
    REQUIRE(basis.role == SubspaceRole::NullSpace);
    REQUIRE(std::abs(std::abs(basis.basis(3, 0)) - 1.0) <= 1e-12);
}

TEST_CASE("null_space_basis annihilates the stacked matrix")
{
    const arma::cx_mat stacked = test::random_complex(12, 16, 71);
    const SubspaceBasis basis = null_space_basis(stacked, 4);
    REQUIRE(arma::norm(stacked * basis.basis, "fro") <= 1e-10 * arma::norm(stacked, "fro"));
    REQUIRE(arma::norm(basis.basis.t() * basis.basis - arma::eye<arma::cx_mat>(4, 4), "fro") <=
            1e-10);
}

TEST_CASE("null_space_basis rejects a rank-deficient stack")
{
    arma::cx_mat stacked = test::random_complex(6, 8, 81);
    stacked.row(5) = stacked.row(0); // duplicate row
    REQUIRE_THROWS_AS(null_space_basis(stacked, 2), RankDeficiency);
}

TEST_CASE("null_space_basis is invariant under invertible row mixing")
{
    const arma::cx_mat stacked = test::random_complex(5, 9, 91);
    const arma::cx_mat mix = test::random_complex(5, 5, 92) + 3.0 * arma::eye<arma::cx_mat>(5, 5);
    const SubspaceBasis a = null_space_basis(stacked, 4);
    const SubspaceBasis b = null_space_basis(mix * stacked, 4);
    REQUIRE(max_principal_angle_sin(a.basis, b.basis) <= 1e-8);
}

TEST_CASE("left_pseudo_inverse basics")
{
    SECTION("unitary input: equals the Hermitian transpose")
    {
        arma::cx_mat q, r;
        arma::vec s;
        REQUIRE(arma::svd(q, s, r, test::random_complex(5, 5, 101)));
        REQUIRE(arma::norm(left_pseudo_inverse(q) - q.t(), "fro") <= 1e-10);
    }

    SECTION("tall input: left inverse property")
    {
        const arma::cx_mat a = test::random_complex(6, 4, 102);
        const arma::cx_mat pinv = left_pseudo_inverse(a);
        REQUIRE(arma::norm(pinv * a - arma::eye<arma::cx_mat>(4, 4), "fro") <= 1e-10);
    }

    SECTION("square invertible input: matches the inverse")
    {
        const arma::cx_mat a =
            test::random_complex(4, 4, 103) + 2.0 * arma::eye<arma::cx_mat>(4, 4);
        REQUIRE(arma::norm(left_pseudo_inverse(a) - arma::inv(a), "fro") <= 1e-9);
    }

    SECTION("rank-deficient input is rejected")
    {
        arma::cx_mat a = test::random_complex(6, 3, 104);
        a.col(2) = a.col(0);
        REQUIRE_THROWS_AS(left_pseudo_inverse(a), RankDeficiency);
    }

    SECTION("wide input is rejected")
    {
        REQUIRE_THROWS_AS(left_pseudo_inverse(test::random_complex(3, 5, 105)),
                          DimensionMismatch);
    }
}
