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

#include "sdrsma/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sdrsma
{

CommonGroup CommonGroup::all(arma::uword num_users)
{
    CommonGroup g;
    g.users.resize(num_users);
    std::iota(g.users.begin(), g.users.end(), arma::uword(0));
    return g;
}

CommonGroup CommonGroup::of(std::vector<arma::uword> members)
{
    CommonGroup g;
    g.users = std::move(members);
    std::sort(g.users.begin(), g.users.end());
    return g;
}

bool CommonGroup::contains(arma::uword user) const
{
    return std::binary_search(users.begin(), users.end(), user);
}

arma::uword CommonGroup::stream_count(const std::vector<arma::uword> &rx_antennas) const
{
    arma::uword m = 0;
    for (arma::uword k : users)
    {
        if (k >= rx_antennas.size())
            throw ConfigError("common group: user index out of range");
        m = (m == 0) ? rx_antennas[k] : std::min(m, rx_antennas[k]);
    }
    return m;
}

arma::vec CommonGroup::bit_fractions(arma::uword num_users) const
{
    arma::vec v(num_users, arma::fill::zeros);
    if (!users.empty())
        for (arma::uword k : users)
            v(k) = 1.0 / static_cast<double>(users.size());
    return v;
}

void CommonGroup::validate(arma::uword num_users) const
{
    for (std::size_t i = 0; i < users.size(); ++i)
    {
        if (users[i] >= num_users)
            throw ConfigError("common group: user index out of range");
        if (i > 0 && users[i] <= users[i - 1])
            throw ConfigError("common group: user indices must be strictly ascending");
    }
}

std::string CommonGroup::to_string() const
{
    if (users.empty())
        return "none";
    std::string s;
    for (std::size_t i = 0; i < users.size(); ++i)
    {
        if (i > 0)
            s += '+';
        s += std::to_string(users[i] + 1);
    }
    return s;
}

PowerAllocation PowerAllocation::zeros(arma::uword cm_streams,
                                       const std::vector<arma::uword> &rx_antennas)
{
    PowerAllocation p;
    p.common.zeros(cm_streams);
    p.per_user.resize(rx_antennas.size());
    for (std::size_t k = 0; k < rx_antennas.size(); ++k)
        p.per_user[k].zeros(rx_antennas[k]);
    return p;
}

double PowerAllocation::weighted_total(const arma::vec &common_cost) const
{
    double total = arma::dot(common_cost, common);
    for (const auto &q : per_user)
        total += arma::accu(q);
    return total;
}

CommonPrecoderParts build_common_precoder(const ChannelSet &channels, const CommonGroup &group,
                                          bool use_estimated)
{
    group.validate(channels.num_users);
    if (group.empty())
        throw ConfigError("build_common_precoder: group is empty; use the no-CM baseline path");

    const arma::uword cm_streams = group.stream_count(channels.rx_antennas);

    std::vector<arma::cx_mat> member_channels;
    member_channels.reserve(group.size());
    for (arma::uword k : group.users)
        member_channels.push_back(channels.design_channel(k, use_estimated));

    CommonPrecoderParts parts;
    parts.intersection_basis = row_space_intersection(member_channels, cm_streams).basis;

    std::vector<arma::cx_mat> effective;
    effective.reserve(group.size());
    for (arma::uword k : group.users)
        effective.push_back(channels.design_channel(k, use_estimated) * parts.intersection_basis);

    HoGsvdResult joint = ho_gsvd(effective);

    parts.right_basis = std::move(joint.right);
    parts.right_basis_cond = arma::cond(parts.right_basis);
    if (!arma::inv(parts.right_basis_inv, parts.right_basis))
        throw NumericalError("build_common_precoder: shared right basis inversion failed");

    parts.power_cost.set_size(cm_streams);
    for (arma::uword l = 0; l < cm_streams; ++l)
        parts.power_cost(l) = std::pow(arma::norm(parts.right_basis_inv.row(l)), 2);

    parts.detection.resize(channels.num_users);
    parts.gains.resize(channels.num_users);
    for (std::size_t i = 0; i < group.size(); ++i)
    {
        const arma::uword k = group.users[i];
        parts.detection[k] = left_pseudo_inverse(joint.left[i]);
        parts.gains[k] = std::move(joint.values[i]);
    }

    return parts;
}

PrivatePrecoderParts build_private_precoders(const ChannelSet &channels, bool use_estimated)
{
    const arma::uword users = channels.num_users;
    arma::uword total = 0;
    for (arma::uword m : channels.rx_antennas)
        total += m;
    if (total != channels.tx_antennas)
        throw DimensionMismatch("build_private_precoders: channel set is not critically loaded");

    PrivatePrecoderParts parts;
    parts.null_basis.resize(users);
    parts.left_basis.resize(users);
    parts.right_basis.resize(users);
    parts.gains.resize(users);

    for (arma::uword k = 0; k < users; ++k)
    {
        const arma::uword own = channels.rx_antennas[k];

        arma::cx_mat stacked(channels.tx_antennas - own, channels.tx_antennas);
        arma::uword row = 0;
        for (arma::uword j = 0; j < users; ++j)
        {
            if (j == k)
                continue;
            const arma::cx_mat &h = channels.design_channel(j, use_estimated);
            stacked.rows(row, row + h.n_rows - 1) = h;
            row += h.n_rows;
        }

        parts.null_basis[k] = null_space_basis(stacked, own).basis;

        arma::cx_mat effective =
            channels.design_channel(k, use_estimated) * parts.null_basis[k];
        arma::cx_mat u, v;
        arma::vec s;
        if (!arma::svd(u, s, v, effective))
            throw NumericalError("build_private_precoders: SVD failed for user " +
                                 std::to_string(k));
        parts.left_basis[k] = std::move(u);
        parts.right_basis[k] = std::move(v);
        parts.gains[k] = std::move(s);
    }

    return parts;
}

PrecoderSet assemble(const ChannelSet &channels, const CommonGroup &group,
                     const CommonPrecoderParts &common, const PrivatePrecoderParts &priv,
                     const PowerAllocation &powers, bool use_estimated, double power_budget)
{
    group.validate(channels.num_users);
    const arma::uword users = channels.num_users;
    const arma::uword cm_streams = group.stream_count(channels.rx_antennas);

    if (powers.common.n_elem != cm_streams)
        throw DimensionMismatch("assemble: common power vector has wrong length");
    if (powers.per_user.size() != users)
        throw DimensionMismatch("assemble: per-user power list has wrong length");
    for (arma::uword k = 0; k < users; ++k)
        if (powers.per_user[k].n_elem != channels.rx_antennas[k])
            throw DimensionMismatch("assemble: private power vector has wrong length for user " +
                                    std::to_string(k));
    if (powers.common.n_elem > 0 && powers.common.min() < 0.0)
        throw DomainError("assemble: negative common stream power");
    for (const auto &q : powers.per_user)
        if (q.n_elem > 0 && q.min() < 0.0)
            throw DomainError("assemble: negative private stream power");

    PrecoderSet set;
    set.group = group;
    set.cm_streams = cm_streams;
    set.built_from_estimate = use_estimated;
    set.common = common;
    set.priv = priv;
    set.powers = powers;
    set.power_budget = power_budget;

    const arma::vec common_cost = group.empty() ? arma::vec() : common.power_cost;
    const double used = powers.weighted_total(common_cost);
    if (used > power_budget * (1.0 + 1e-6) + 1e-15)
        throw ConstraintViolation("assemble: power allocation exceeds the transmit budget (" +
                                  std::to_string(used) + " > " + std::to_string(power_budget) +
                                  " mW)");

    // P_c = G_c V_c^{-H} diag(p_c)^{1/2}
    arma::cx_mat common_direction;
    if (!group.empty())
    {
        common_direction = common.intersection_basis * common.right_basis_inv.t();
        set.common_precoder = common_direction * arma::diagmat(arma::sqrt(powers.common));
    }
    else
        set.common_precoder.set_size(channels.tx_antennas, 0);

    // P_k = N_k V_k diag(p_k)^{1/2}
    set.private_precoder.resize(users);
    for (arma::uword k = 0; k < users; ++k)
        set.private_precoder[k] = priv.null_basis[k] * priv.right_basis[k] *
                                  arma::diagmat(arma::sqrt(powers.per_user[k]));

    set.cm_interference.resize(users);
    set.pm_interference.resize(users);
    for (arma::uword k = 0; k < users; ++k)
    {
        const arma::cx_mat &h = channels.design_channel(k, use_estimated);
        if (group.contains(k))
        {
            set.cm_interference[k] =
                common.detection[k] * (h * priv.null_basis[k]) * priv.right_basis[k];
            set.pm_interference[k].zeros(channels.rx_antennas[k], cm_streams);
        }
        else if (!group.empty())
        {
            set.pm_interference[k] = priv.left_basis[k].t() * (h * common_direction);
        }
        else
            set.pm_interference[k].set_size(channels.rx_antennas[k], 0);
    }

    return set;
}

PrecoderSet assemble(const ChannelSet &channels, const CommonGroup &group,
                     const PowerAllocation &powers, bool use_estimated, double power_budget)
{
    CommonPrecoderParts common;
    if (!group.empty())
        common = build_common_precoder(channels, group, use_estimated);
    PrivatePrecoderParts priv = build_private_precoders(channels, use_estimated);
    return assemble(channels, group, common, priv, powers, use_estimated, power_budget);
}

} // namespace sdrsma
