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

#ifndef sdrsma_precoder_H
#define sdrsma_precoder_H

#include <armadillo>
#include <vector>

#include "sdrsma/channel.hpp"
#include "sdrsma/decompositions.hpp"
#include "sdrsma/errors.hpp"

namespace sdrsma
{

// Ordered subset of users that decode the common message. Empty represents
// the no-common-message baseline (plain block-diagonalization precoding).
struct CommonGroup
{
    std::vector<arma::uword> users; // sorted ascending, unique, 0-based

    static CommonGroup none() { return {}; }
    static CommonGroup all(arma::uword num_users);
    static CommonGroup of(std::vector<arma::uword> members);

    bool empty() const { return users.empty(); }
    std::size_t size() const { return users.size(); }
    bool contains(arma::uword user) const;

    // Common-message stream count: min over members of their antenna count.
    // Zero for the empty group.
    arma::uword stream_count(const std::vector<arma::uword> &rx_antennas) const;

    // Common-message bit fractions: 1/|group| for members, 0 otherwise.
    arma::vec bit_fractions(arma::uword num_users) const;

    void validate(arma::uword num_users) const; // throws ConfigError

    bool operator==(const CommonGroup &other) const { return users == other.users; }

    // Lexicographic order on the sorted member lists (deterministic
    // tie-breaking in subset searches).
    bool operator<(const CommonGroup &other) const { return users < other.users; }

    std::string to_string() const; // "none" or 1-based "1+3+4"
};

// Per-stream transmit powers for the common and private messages (linear mW).
struct PowerAllocation
{
    arma::vec common;                // length M (common stream count)
    std::vector<arma::vec> per_user; // per user, length M_k

    static PowerAllocation zeros(arma::uword cm_streams,
                                 const std::vector<arma::uword> &rx_antennas);

    // Budget usage sum_l c_l p_c,l + sum_k sum_l p_k,l for the given
    // common-stream power costs.
    double weighted_total(const arma::vec &common_cost) const;
};

// Common-message factors: shared-subspace basis, joint diagonalizing bases,
// detection operators and effective scalar gains.
struct CommonPrecoderParts
{
    arma::cx_mat intersection_basis;     // G_c, N x M, orthonormal columns
    arma::cx_mat right_basis;            // V_c, M x M
    arma::cx_mat right_basis_inv;        // V_c^{-1}
    std::vector<arma::cx_mat> detection; // E_k^+ (M x M_k); empty for non-members
    std::vector<arma::vec> gains;        // diag of D_k (length M); empty for non-members
    arma::vec power_cost;                // c_l = squared norm of row l of V_c^{-1}
    double right_basis_cond = 0.0;       // cond(V_c) diagnostic
};

// Private-message factors from block diagonalization.
struct PrivatePrecoderParts
{
    std::vector<arma::cx_mat> null_basis;  // N_k, N x M_k
    std::vector<arma::cx_mat> left_basis;  // U_k, M_k x M_k unitary
    std::vector<arma::cx_mat> right_basis; // V_k, M_k x M_k unitary
    std::vector<arma::vec> gains;          // singular values of H_k N_k, descending
};

// Fully assembled precoding/detection state for one channel set, common
// group and power loading. Immutable after assembly.
struct PrecoderSet
{
    CommonGroup group;
    arma::uword cm_streams = 0; // M
    bool built_from_estimate = false;

    CommonPrecoderParts common;
    PrivatePrecoderParts priv;

    std::vector<arma::cx_mat> cm_interference; // W_k = E_k^+ (H_k N_k) V_k, members only
    std::vector<arma::cx_mat> pm_interference; // W_c,k = U_k^H (H_k G_c) V_c^{-H};
                                               // exact zero for members

    arma::cx_mat common_precoder;               // P_c = G_c V_c^{-H} diag(p_c)^{1/2}, N x M
    std::vector<arma::cx_mat> private_precoder; // P_k = N_k V_k diag(p_k)^{1/2}, N x M_k

    PowerAllocation powers;
    double power_budget = 0.0; // P_T used for the constraint check
};

// Common-message precoder construction: G_c spans the dominant shared
// row-space directions of the member channels; the joint factorization of
// {H_k G_c} yields V_c, the detection operators E_k^+ and the diagonal
// gains D_k; c_l are the common-stream power costs.
CommonPrecoderParts build_common_precoder(const ChannelSet &channels, const CommonGroup &group,
                                          bool use_estimated);

// Private-message precoders by block diagonalization: N_k spans the null
// space of the other users' stacked channels; the SVD of H_k N_k gives the
// per-user detection basis and effective gains.
PrivatePrecoderParts build_private_precoders(const ChannelSet &channels, bool use_estimated);

// Full assembly with power loading, interference matrices and the transmit
// power constraint check (throws ConstraintViolation beyond 1e-6 relative).
PrecoderSet assemble(const ChannelSet &channels, const CommonGroup &group,
                     const CommonPrecoderParts &common, const PrivatePrecoderParts &priv,
                     const PowerAllocation &powers, bool use_estimated, double power_budget);

// Convenience overload that builds the parts itself.
PrecoderSet assemble(const ChannelSet &channels, const CommonGroup &group,
                     const PowerAllocation &powers, bool use_estimated, double power_budget);

} // namespace sdrsma

#endif
