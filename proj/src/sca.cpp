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

#include "sdrsma/sca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace sdrsma
{

namespace
{

constexpr double kLn2 = 0.6931471805599453;

arma::vec row_norms_sq(const arma::cx_mat &m)
{
    return arma::sum(arma::square(arma::abs(m)), 1);
}

} // namespace

arma::uword WsrInstance::total_pm() const
{
    arma::uword total = 0;
    for (arma::uword m : pm_streams)
        total += m;
    return total;
}

arma::vec WsrInstance::pack(const PowerAllocation &p) const
{
    if (p.common.n_elem != cm_streams || p.per_user.size() != num_users)
        throw DimensionMismatch("power allocation does not match the instance layout");
    arma::vec x(dimension());
    if (cm_streams > 0)
        x.subvec(0, cm_streams - 1) = p.common;
    for (arma::uword k = 0; k < num_users; ++k)
    {
        if (p.per_user[k].n_elem != pm_streams[k])
            throw DimensionMismatch("power allocation does not match the instance layout");
        if (pm_streams[k] > 0)
            x.subvec(offsets[k], offsets[k] + pm_streams[k] - 1) = p.per_user[k];
    }
    return x;
}

PowerAllocation WsrInstance::unpack(const arma::vec &x) const
{
    PowerAllocation p;
    p.common = (cm_streams > 0) ? arma::vec(x.subvec(0, cm_streams - 1)) : arma::vec();
    p.per_user.resize(num_users);
    for (arma::uword k = 0; k < num_users; ++k)
        p.per_user[k] = (pm_streams[k] > 0)
                            ? arma::vec(x.subvec(offsets[k], offsets[k] + pm_streams[k] - 1))
                            : arma::vec();
    return p;
}

WsrInstance WsrInstance::build(const PrecoderSet &pre, const ChannelSet &channels,
                               const arma::vec &weights, double total_power)
{
    if (weights.n_elem != channels.num_users)
        throw ConfigError("wsr instance: weights must list one entry per user");
    if (weights.n_elem == 0 || weights.min() < 0.0 || !(weights.max() > 0.0))
        throw ConfigError("wsr instance: weights must be nonnegative with a positive entry");
    if (!(total_power >= 0.0) || !std::isfinite(total_power))
        throw DomainError("wsr instance: total power must be nonnegative and finite");

    WsrInstance inst;
    inst.num_users = channels.num_users;
    inst.cm_streams = pre.cm_streams;
    inst.pm_streams = channels.rx_antennas;
    inst.members = pre.group.users;
    inst.noise_power = channels.noise_power;
    inst.total_power = total_power;
    inst.weights = weights;
    inst.fractions = pre.group.bit_fractions(channels.num_users);
    inst.cm_weight = arma::dot(weights, inst.fractions);

    inst.offsets.resize(inst.num_users);
    arma::uword offset = inst.cm_streams;
    for (arma::uword k = 0; k < inst.num_users; ++k)
    {
        inst.offsets[k] = offset;
        offset += inst.pm_streams[k];
    }

    for (arma::uword k : inst.members)
    {
        const double inv_loss = 1.0 / channels.path_loss[k];
        inst.cm_signal.push_back(inv_loss * arma::square(pre.common.gains[k]));
        inst.cm_coupling.push_back(inv_loss *
                                   arma::square(arma::abs(pre.cm_interference[k])));
        inst.cm_noise.push_back(channels.noise_power * row_norms_sq(pre.common.detection[k]));
    }

    inst.pm_signal.resize(inst.num_users);
    inst.pm_coupling.resize(inst.num_users);
    for (arma::uword k = 0; k < inst.num_users; ++k)
    {
        const double inv_loss = 1.0 / channels.path_loss[k];
        inst.pm_signal[k] = inv_loss * arma::square(pre.priv.gains[k]);
        inst.pm_coupling[k] = inv_loss * arma::square(arma::abs(pre.pm_interference[k]));
    }

    inst.cost.set_size(inst.dimension());
    if (inst.cm_streams > 0)
        inst.cost.subvec(0, inst.cm_streams - 1) = pre.common.power_cost;
    if (inst.total_pm() > 0)
        inst.cost.subvec(inst.cm_streams, inst.dimension() - 1).ones();

    return inst;
}

WsrInstance::Anchor WsrInstance::make_anchor(const arma::vec &x_anchor) const
{
    if (x_anchor.n_elem != dimension())
        throw DimensionMismatch("anchor does not match the instance layout");
    if (x_anchor.n_elem > 0 && x_anchor.min() < 0.0)
        throw DomainError("anchor has negative powers");

    Anchor anchor;
    const arma::vec pc =
        (cm_streams > 0) ? arma::vec(x_anchor.subvec(0, cm_streams - 1)) : arma::vec();

    anchor.cm_lin.resize(members.size());
    anchor.cm_const.resize(members.size());
    for (std::size_t m = 0; m < members.size(); ++m)
    {
        const arma::uword k = members[m];
        const arma::vec q = (pm_streams[k] > 0)
                                ? arma::vec(x_anchor.subvec(offsets[k],
                                                            offsets[k] + pm_streams[k] - 1))
                                : arma::vec();
        const arma::vec i_hat = cm_coupling[m] * q;
        const arma::vec denom = i_hat + cm_noise[m];
        anchor.cm_lin[m] = 1.0 / (kLn2 * denom);
        anchor.cm_const[m] = -arma::log2(denom) + i_hat % anchor.cm_lin[m];
    }

    anchor.pm_lin.resize(num_users);
    anchor.pm_const.resize(num_users);
    for (arma::uword k = 0; k < num_users; ++k)
    {
        const arma::vec j_hat = pm_coupling[k] * pc;
        const arma::vec denom = j_hat + noise_power;
        anchor.pm_lin[k] = 1.0 / (kLn2 * denom);
        anchor.pm_const[k] = -arma::log2(denom) + j_hat % anchor.pm_lin[k];
    }

    return anchor;
}

double WsrInstance::surrogate_objective(const arma::vec &x, const Anchor &anchor,
                                        arma::vec *gradient) const
{
    const arma::vec pc =
        (cm_streams > 0) ? arma::vec(x.subvec(0, cm_streams - 1)) : arma::vec();
    if (gradient)
        gradient->zeros(dimension());

    double objective = 0.0;

    if (cm_streams > 0 && !members.empty())
    {
        // Per-member surrogate values and the interference totals needed for
        // the gradient of the active member per stream.
        std::vector<arma::vec> values(members.size()), totals(members.size());
        for (std::size_t m = 0; m < members.size(); ++m)
        {
            const arma::uword k = members[m];
            const arma::vec q = (pm_streams[k] > 0)
                                    ? arma::vec(x.subvec(offsets[k],
                                                         offsets[k] + pm_streams[k] - 1))
                                    : arma::vec();
            const arma::vec interference = cm_coupling[m] * q;
            totals[m] = interference + cm_noise[m] + cm_signal[m] % pc;
            values[m] =
                arma::log2(totals[m]) - anchor.cm_lin[m] % interference + anchor.cm_const[m];
        }

        for (arma::uword l = 0; l < cm_streams; ++l)
        {
            std::size_t active = 0;
            for (std::size_t m = 1; m < members.size(); ++m)
                if (values[m](l) < values[active](l))
                    active = m;
            objective += cm_weight * values[active](l);

            if (gradient)
            {
                const arma::uword k = members[active];
                const double inv_total = 1.0 / (kLn2 * totals[active](l));
                (*gradient)(l) += cm_weight * cm_signal[active](l) * inv_total;
                if (pm_streams[k] > 0)
                    gradient->subvec(offsets[k], offsets[k] + pm_streams[k] - 1) +=
                        cm_weight * (inv_total - anchor.cm_lin[active](l)) *
                        cm_coupling[active].row(l).t();
            }
        }
    }

    for (arma::uword k = 0; k < num_users; ++k)
    {
        if (pm_streams[k] == 0)
            continue;
        const arma::vec q = x.subvec(offsets[k], offsets[k] + pm_streams[k] - 1);
        const arma::vec interference = pm_coupling[k] * pc;
        const arma::vec total = interference + noise_power + pm_signal[k] % q;
        const arma::vec value =
            arma::log2(total) - anchor.pm_lin[k] % interference + anchor.pm_const[k];
        objective += weights(k) * arma::accu(value);

        if (gradient)
        {
            const arma::vec inv_total = 1.0 / (kLn2 * total);
            gradient->subvec(offsets[k], offsets[k] + pm_streams[k] - 1) +=
                weights(k) * (pm_signal[k] % inv_total);
            if (cm_streams > 0 && pm_coupling[k].n_elem > 0)
                gradient->subvec(0, cm_streams - 1) +=
                    weights(k) * (pm_coupling[k].t() * (inv_total - anchor.pm_lin[k]));
        }
    }

    return objective;
}

double WsrInstance::true_wsr(const arma::vec &x) const
{
    const arma::vec pc =
        (cm_streams > 0) ? arma::vec(x.subvec(0, cm_streams - 1)) : arma::vec();

    double value = 0.0;
    if (cm_streams > 0 && !members.empty())
    {
        arma::vec stream_min(cm_streams, arma::fill::value(std::numeric_limits<double>::max()));
        for (std::size_t m = 0; m < members.size(); ++m)
        {
            const arma::uword k = members[m];
            const arma::vec q = (pm_streams[k] > 0)
                                    ? arma::vec(x.subvec(offsets[k],
                                                         offsets[k] + pm_streams[k] - 1))
                                    : arma::vec();
            const arma::vec denom = cm_coupling[m] * q + cm_noise[m];
            for (arma::uword l = 0; l < cm_streams; ++l)
                stream_min(l) = std::min(stream_min(l),
                                         rate_from_sinr(cm_signal[m](l) * pc(l) / denom(l)));
        }
        value += cm_weight * arma::accu(stream_min);
    }

    for (arma::uword k = 0; k < num_users; ++k)
    {
        if (pm_streams[k] == 0)
            continue;
        const arma::vec q = x.subvec(offsets[k], offsets[k] + pm_streams[k] - 1);
        const arma::vec denom = pm_coupling[k] * pc + noise_power;
        for (arma::uword l = 0; l < pm_streams[k]; ++l)
            value += weights(k) * rate_from_sinr(pm_signal[k](l) * q(l) / denom(l));
    }
    return value;
}

namespace
{

std::size_t member_position(const WsrInstance &instance, arma::uword user)
{
    for (std::size_t m = 0; m < instance.members.size(); ++m)
        if (instance.members[m] == user)
            return m;
    throw IndexError("user " + std::to_string(user) + " is not in the common group");
}

void check_nonnegative(const PowerAllocation &p)
{
    if (p.common.n_elem > 0 && p.common.min() < 0.0)
        throw DomainError("negative common stream power");
    for (const auto &q : p.per_user)
        if (q.n_elem > 0 && q.min() < 0.0)
            throw DomainError("negative private stream power");
}

} // namespace

double surrogate_common_rate(const WsrInstance &instance, const PowerAllocation &powers,
                             const PowerAllocation &anchor, arma::uword user, arma::uword stream)
{
    check_nonnegative(powers);
    check_nonnegative(anchor);
    if (stream >= instance.cm_streams)
        throw IndexError("common stream index out of range");
    const std::size_t m = member_position(instance, user);

    const arma::vec &q = powers.per_user[user];
    const arma::vec &q_hat = anchor.per_user[user];
    const double interference = arma::dot(instance.cm_coupling[m].row(stream), q);
    const double i_hat = arma::dot(instance.cm_coupling[m].row(stream), q_hat);
    const double denom_hat = i_hat + instance.cm_noise[m](stream);
    const double total = interference + instance.cm_noise[m](stream) +
                         instance.cm_signal[m](stream) * powers.common(stream);

    return std::log2(total) - (interference - i_hat) / (kLn2 * denom_hat) -
           std::log2(denom_hat);
}

double surrogate_private_rate(const WsrInstance &instance, const PowerAllocation &powers,
                              const PowerAllocation &anchor, arma::uword user,
                              arma::uword stream)
{
    check_nonnegative(powers);
    check_nonnegative(anchor);
    if (user >= instance.num_users)
        throw IndexError("user index out of range");
    if (stream >= instance.pm_streams[user])
        throw IndexError("private stream index out of range");

    double interference = 0.0, j_hat = 0.0;
    if (instance.cm_streams > 0 && instance.pm_coupling[user].n_elem > 0)
    {
        interference = arma::dot(instance.pm_coupling[user].row(stream), powers.common);
        j_hat = arma::dot(instance.pm_coupling[user].row(stream), anchor.common);
    }
    const double denom_hat = j_hat + instance.noise_power;
    const double total = interference + instance.noise_power +
                         instance.pm_signal[user](stream) * powers.per_user[user](stream);

    return std::log2(total) - (interference - j_hat) / (kLn2 * denom_hat) -
           std::log2(denom_hat);
}

namespace
{

// Euclidean projection onto { x >= 0, dot(cost, x) <= budget } by bisection
// on the budget multiplier (weighted clipping).
arma::vec project_budget(const arma::vec &y, const arma::vec &cost, double budget)
{
    arma::vec p = arma::clamp(y, 0.0, std::numeric_limits<double>::max());
    if (arma::dot(cost, p) <= budget)
        return p;

    double lo = 0.0;
    double hi = (y / cost).max(); // multiplier at which the projection is all-zero
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + hi); ++it)
    {
        const double mid = 0.5 * (lo + hi);
        const arma::vec candidate =
            arma::clamp(y - mid * cost, 0.0, std::numeric_limits<double>::max());
        if (arma::dot(cost, candidate) > budget)
            lo = mid;
        else
            hi = mid;
    }
    return arma::clamp(y - hi * cost, 0.0, std::numeric_limits<double>::max());
}

// Surrogate objective with the per-stream min over members replaced by an
// overflow-safe softmin of sharpness tau (exact min for tau <= 0 or a single
// member). The softmin is concave, smooth, a lower bound of the exact min,
// and within log(members)/tau of it, which lets ascent steps walk through
// the kinks of the exact objective. Optionally accumulates the gradient and
// the negated Hessian (a positive semidefinite matrix, since every log term
// contributes a rank-one outer product and the softmin adds a share-weighted
// gradient covariance).
double smoothed_surrogate(const WsrInstance &inst, const arma::vec &x,
                          const WsrInstance::Anchor &anchor, double tau,
                          arma::vec *gradient = nullptr, arma::mat *neg_hessian = nullptr)
{
    const arma::vec pc =
        (inst.cm_streams > 0) ? arma::vec(x.subvec(0, inst.cm_streams - 1)) : arma::vec();
    if (gradient)
        gradient->zeros(inst.dimension());
    if (neg_hessian)
        neg_hessian->zeros(inst.dimension(), inst.dimension());

    double objective = 0.0;

    if (inst.cm_streams > 0 && !inst.members.empty())
    {
        const std::size_t count = inst.members.size();
        std::vector<arma::vec> values(count), totals(count);
        for (std::size_t m = 0; m < count; ++m)
        {
            const arma::uword k = inst.members[m];
            const arma::vec q =
                (inst.pm_streams[k] > 0)
                    ? arma::vec(x.subvec(inst.offsets[k],
                                         inst.offsets[k] + inst.pm_streams[k] - 1))
                    : arma::vec();
            const arma::vec interference = inst.cm_coupling[m] * q;
            totals[m] = interference + inst.cm_noise[m] + inst.cm_signal[m] % pc;
            values[m] = arma::log2(totals[m]) - anchor.cm_lin[m] % interference +
                        anchor.cm_const[m];
        }

        for (arma::uword l = 0; l < inst.cm_streams; ++l)
        {
            double lowest = values[0](l);
            for (std::size_t m = 1; m < count; ++m)
                lowest = std::min(lowest, values[m](l));

            arma::vec share(count, arma::fill::zeros);
            if (tau > 0.0 && count > 1)
            {
                double partition = 0.0;
                for (std::size_t m = 0; m < count; ++m)
                {
                    share(m) = std::exp(-tau * (values[m](l) - lowest));
                    partition += share(m);
                }
                share /= partition;
                objective += inst.cm_weight * (lowest - std::log(partition) / tau);
            }
            else
            {
                std::size_t active = 0;
                for (std::size_t m = 1; m < count; ++m)
                    if (values[m](l) < values[active](l))
                        active = m;
                share(active) = 1.0;
                objective += inst.cm_weight * lowest;
            }

            if (!gradient && !neg_hessian)
                continue;

            // Member-term gradients live on the support {l} + user k's block.
            std::vector<arma::vec> term_grad(count);
            std::vector<arma::uvec> term_index(count);
            for (std::size_t m = 0; m < count; ++m)
            {
                if (share(m) == 0.0 && !(neg_hessian && tau > 0.0 && count > 1))
                    continue;
                const arma::uword k = inst.members[m];
                const arma::uword block = inst.pm_streams[k];
                arma::uvec idx(1 + block);
                idx(0) = l;
                for (arma::uword i = 0; i < block; ++i)
                    idx(1 + i) = inst.offsets[k] + i;
                term_index[m] = std::move(idx);

                const double inv_total = 1.0 / (kLn2 * totals[m](l));
                arma::vec g(1 + block);
                g(0) = inst.cm_signal[m](l) * inv_total;
                for (arma::uword i = 0; i < block; ++i)
                    g(1 + i) = inst.cm_coupling[m](l, i) * (inv_total - anchor.cm_lin[m](l));
                term_grad[m] = std::move(g);
            }

            for (std::size_t m = 0; m < count; ++m)
            {
                if (share(m) == 0.0)
                    continue;
                const double scale = inst.cm_weight * share(m);
                if (gradient)
                    gradient->elem(term_index[m]) += scale * term_grad[m];
                if (neg_hessian)
                {
                    // Curvature of the log term: rank-one in the total's
                    // gradient direction.
                    const arma::uword k = inst.members[m];
                    const arma::uword block = inst.pm_streams[k];
                    const double inv_sq =
                        1.0 / (kLn2 * totals[m](l) * totals[m](l));
                    arma::vec dt(1 + block);
                    dt(0) = inst.cm_signal[m](l);
                    for (arma::uword i = 0; i < block; ++i)
                        dt(1 + i) = inst.cm_coupling[m](l, i);
                    neg_hessian->submat(term_index[m], term_index[m]) +=
                        (scale * inv_sq) * (dt * dt.t());
                }
            }

            // Softmin curvature: tau times the share-weighted covariance of
            // the member gradients.
            if (neg_hessian && tau > 0.0 && count > 1)
            {
                arma::vec mean(inst.dimension(), arma::fill::zeros);
                for (std::size_t m = 0; m < count; ++m)
                    if (share(m) > 0.0)
                        mean.elem(term_index[m]) += share(m) * term_grad[m];
                arma::mat cov = -(mean * mean.t());
                for (std::size_t m = 0; m < count; ++m)
                    if (share(m) > 0.0)
                        cov.submat(term_index[m], term_index[m]) +=
                            share(m) * (term_grad[m] * term_grad[m].t());
                *neg_hessian += (inst.cm_weight * tau * kLn2) * cov;
            }
        }
    }

    for (arma::uword k = 0; k < inst.num_users; ++k)
    {
        if (inst.pm_streams[k] == 0)
            continue;
        const arma::uword block = inst.pm_streams[k];
        const arma::vec q = x.subvec(inst.offsets[k], inst.offsets[k] + block - 1);
        const arma::vec interference = inst.pm_coupling[k] * pc;
        const arma::vec total = interference + inst.noise_power + inst.pm_signal[k] % q;
        objective += inst.weights(k) *
                     arma::accu(arma::log2(total) - anchor.pm_lin[k] % interference +
                                anchor.pm_const[k]);

        if (!gradient && !neg_hessian)
            continue;

        const arma::vec inv_total = 1.0 / (kLn2 * total);
        if (gradient)
        {
            gradient->subvec(inst.offsets[k], inst.offsets[k] + block - 1) +=
                inst.weights(k) * (inst.pm_signal[k] % inv_total);
            if (inst.cm_streams > 0 && inst.pm_coupling[k].n_elem > 0)
                gradient->subvec(0, inst.cm_streams - 1) +=
                    inst.weights(k) * (inst.pm_coupling[k].t() * (inv_total - anchor.pm_lin[k]));
        }
        if (neg_hessian)
        {
            const bool coupled = inst.cm_streams > 0 && inst.pm_coupling[k].n_elem > 0 &&
                                 arma::any(arma::vectorise(inst.pm_coupling[k]) > 0.0);
            for (arma::uword l = 0; l < block; ++l)
            {
                const double inv_sq = 1.0 / (kLn2 * total(l) * total(l));
                if (coupled)
                {
                    arma::uvec idx(1 + inst.cm_streams);
                    idx(0) = inst.offsets[k] + l;
                    for (arma::uword i = 0; i < inst.cm_streams; ++i)
                        idx(1 + i) = i;
                    arma::vec dt(1 + inst.cm_streams);
                    dt(0) = inst.pm_signal[k](l);
                    for (arma::uword i = 0; i < inst.cm_streams; ++i)
                        dt(1 + i) = inst.pm_coupling[k](l, i);
                    neg_hessian->submat(idx, idx) +=
                        (inst.weights(k) * inv_sq) * (dt * dt.t());
                }
                else
                {
                    const double d = inst.pm_signal[k](l);
                    (*neg_hessian)(inst.offsets[k] + l, inst.offsets[k] + l) +=
                        inst.weights(k) * inv_sq * d * d;
                }
            }
        }
    }

    return objective;
}

// One smoothing stage: projected Newton steps (equality-handling for the
// power budget through its multiplier) with an Armijo line search on the
// projection arc, falling back to curvature-scaled gradient steps when the
// Newton system is unusable. The problem is concave and at most a few dozen
// variables, so exact Newton systems are cheap and the stage converges in a
// handful of iterations. Returns the iterations spent.
arma::uword ascend_stage(const WsrInstance &instance, const WsrInstance::Anchor &lin, double tau,
                         arma::vec &x, arma::uword budget, double improvement_tolerance)
{
    const arma::uword dim = instance.dimension();
    arma::vec grad;
    arma::mat curve;
    double value = smoothed_surrogate(instance, x, lin, tau, &grad, &curve);

    arma::uword it = 0;
    int stalled = 0;

    for (; it < budget; ++it)
    {
        // Active bounds: variables pinned at zero whose gradient pushes
        // outward (net of the budget multiplier estimated below).
        const double x_edge = 1e-12 * (1.0 + arma::norm(x, 1));
        const bool budget_tight =
            arma::dot(instance.cost, x) >= instance.total_power * (1.0 - 1e-10) - 1e-300;

        arma::uvec free = arma::regspace<arma::uvec>(0, dim - 1);
        {
            std::vector<arma::uword> keep;
            for (arma::uword i = 0; i < dim; ++i)
                if (x(i) > x_edge || grad(i) > 0.0)
                    keep.push_back(i);
            free = arma::uvec(keep);
        }

        arma::vec direction(dim, arma::fill::zeros);
        bool have_newton = false;
        if (free.n_elem > 0)
        {
            arma::mat a = curve.submat(free, free);
            a.diag() += 1e-12 * (1.0 + arma::trace(a) / static_cast<double>(free.n_elem));
            const arma::vec g_free = grad.elem(free);
            arma::vec u, w;
            const bool ok_u = arma::solve(u, a, g_free, arma::solve_opts::likely_sympd);
            if (ok_u)
            {
                double multiplier = 0.0;
                if (budget_tight)
                {
                    const arma::vec c_free = instance.cost.elem(free);
                    if (arma::solve(w, a, c_free, arma::solve_opts::likely_sympd))
                    {
                        const double denom = arma::dot(c_free, w);
                        if (denom > 0.0)
                            multiplier = std::max(0.0, arma::dot(c_free, u) / denom);
                    }
                }
                arma::vec d_free = u;
                if (multiplier > 0.0)
                    d_free -= multiplier * w;
                direction.elem(free) = d_free;
                have_newton = arma::dot(grad, direction) > 0.0;
            }
        }
        if (!have_newton)
        {
            // Curvature-scaled gradient fallback.
            arma::vec diag = curve.diag();
            const double floor = std::max(diag.max() * 1e-18, 1e-300);
            direction = grad / arma::clamp(diag, floor, 1e300);
        }

        bool accepted = false;
        double s = 1.0;
        for (int bt = 0; bt < 80 && !accepted; ++bt, s *= 0.5)
        {
            const arma::vec candidate = project_budget(x + s * direction, instance.cost,
                                                       instance.total_power);
            const arma::vec move = candidate - x;
            if (arma::norm(move) == 0.0)
                break;
            const double predicted = arma::dot(grad, move);
            const double cand_value = smoothed_surrogate(instance, candidate, lin, tau);
            if (cand_value >= value + 1e-4 * std::max(predicted, 0.0) && cand_value > value)
            {
                x = candidate;
                const double improvement = cand_value - value;
                value = smoothed_surrogate(instance, x, lin, tau, &grad, &curve);
                accepted = true;
                if (improvement <= improvement_tolerance * (1.0 + std::abs(value)))
                    ++stalled;
                else
                    stalled = 0;
            }
        }

        if (!accepted || stalled >= 2)
        {
            ++it;
            break;
        }
    }
    return it;
}

// True when, at x, every common stream has a strict gap between its
// smallest and second-smallest member surrogate relative to the smoothing
// scale: the softmin then coincides with the exact min around x and sharper
// smoothing stages cannot move the optimum.
bool min_strictly_resolved(const WsrInstance &inst, const arma::vec &x,
                           const WsrInstance::Anchor &anchor, double tau)
{
    if (inst.members.size() <= 1 || inst.cm_streams == 0)
        return true;
    const arma::vec pc = arma::vec(x.subvec(0, inst.cm_streams - 1));

    std::vector<arma::vec> values(inst.members.size());
    for (std::size_t m = 0; m < inst.members.size(); ++m)
    {
        const arma::uword k = inst.members[m];
        const arma::vec q =
            (inst.pm_streams[k] > 0)
                ? arma::vec(x.subvec(inst.offsets[k], inst.offsets[k] + inst.pm_streams[k] - 1))
                : arma::vec();
        const arma::vec interference = inst.cm_coupling[m] * q;
        values[m] = arma::log2(interference + inst.cm_noise[m] + inst.cm_signal[m] % pc) -
                    anchor.cm_lin[m] % interference + anchor.cm_const[m];
    }

    for (arma::uword l = 0; l < inst.cm_streams; ++l)
    {
        double smallest = std::numeric_limits<double>::max();
        double second = std::numeric_limits<double>::max();
        for (std::size_t m = 0; m < inst.members.size(); ++m)
        {
            const double v = values[m](l);
            if (v < smallest)
            {
                second = smallest;
                smallest = v;
            }
            else
                second = std::min(second, v);
        }
        if (second - smallest < 40.0 / tau)
            return false;
    }
    return true;
}

} // namespace

InnerSolution solve_inner(const WsrInstance &instance, const PowerAllocation &anchor,
                          const InnerOptions &options)
{
    const arma::vec x_anchor = instance.pack(anchor);
    if (x_anchor.n_elem == 0)
        return {anchor, 0.0, 0};
    if (x_anchor.min() < 0.0)
        throw DomainError("solve_inner: anchor has negative powers");
    if (arma::dot(instance.cost, x_anchor) >
        instance.total_power * (1.0 + 1e-8) + 1e-15)
        throw DomainError("solve_inner: anchor violates the power budget");

    const WsrInstance::Anchor lin = instance.make_anchor(x_anchor);

    arma::vec x = project_budget(x_anchor, instance.cost, instance.total_power);

    // Smoothing homotopy: only needed when the per-stream min has more than
    // one member; a single stage with the exact objective suffices otherwise.
    // Sharpening stops early once the per-stream minima are strictly
    // resolved at the current smoothing scale.
    std::vector<double> stages;
    if (instance.members.size() > 1 && instance.cm_streams > 0)
        stages = {1e2, 1e5, 1e8};
    else
        stages = {0.0};

    arma::uword iterations = 0;
    for (double tau : stages)
    {
        const arma::uword budget = options.max_iterations / stages.size();
        iterations += ascend_stage(instance, lin, tau, x, budget, options.improvement_tolerance);
        if (iterations >= options.max_iterations)
            break;
        if (tau > 0.0 && min_strictly_resolved(instance, x, lin, tau))
            break;
    }

    // Exact objective at the final point; never return worse than the
    // anchor (keeps the outer iteration monotone by construction).
    double value = instance.surrogate_objective(x, lin);
    const arma::vec x_start = project_budget(x_anchor, instance.cost, instance.total_power);
    const double anchor_value = instance.surrogate_objective(x_start, lin);
    if (anchor_value > value)
    {
        x = x_start;
        value = anchor_value;
    }

    return {instance.unpack(x), value, iterations};
}

ScaRun run_sca(const ChannelSet &channels, const CommonGroup &group,
               const CommonPrecoderParts &common, const PrivatePrecoderParts &priv,
               const arma::vec &weights, double total_power, const ScaOptions &options,
               bool use_estimated)
{
    if (!(options.tolerance > 0.0))
        throw ConfigError("run_sca: tolerance must be positive");
    if (!(total_power >= 0.0))
        throw DomainError("run_sca: total power must be nonnegative");

    const PowerAllocation zero =
        PowerAllocation::zeros(group.stream_count(channels.rx_antennas), channels.rx_antennas);
    const PrecoderSet directions =
        assemble(channels, group, common, priv, zero, use_estimated, total_power);
    const WsrInstance instance = WsrInstance::build(directions, channels, weights, total_power);

    ScaRun run;
    PowerAllocation current = zero;
    double previous_opt = -std::numeric_limits<double>::infinity();
    bool converged = false;

    for (arma::uword n = 1; n <= options.max_iterations; ++n)
    {
        InnerSolution sol = solve_inner(instance, current, options.inner);
        run.surrogate_trace.push_back(sol.objective);
        run.true_wsr_trace.push_back(instance.true_wsr(instance.pack(sol.powers)));
        run.iterations = n;

        const bool fixed_point =
            arma::norm(instance.pack(sol.powers) - instance.pack(current)) == 0.0;
        current = sol.powers;

        if (std::abs(sol.objective - previous_opt) <= options.tolerance || fixed_point)
        {
            converged = true;
            break;
        }
        previous_opt = sol.objective;
    }

    if (!converged)
    {
        std::ostringstream oss;
        oss << "run_sca: no convergence within " << options.max_iterations
            << " iterations; last surrogate optima:";
        const std::size_t tail = std::min<std::size_t>(run.surrogate_trace.size(), 5);
        for (std::size_t i = run.surrogate_trace.size() - tail; i < run.surrogate_trace.size();
             ++i)
            oss << ' ' << run.surrogate_trace[i];
        throw SolverFailure(oss.str());
    }

    run.powers = current;
    run.precoder = assemble(channels, group, common, priv, current, use_estimated, total_power);
    run.report = compute_report(run.precoder, channels, weights);
    return run;
}

ScaRun run_sca(const ChannelSet &channels, const CommonGroup &group, const arma::vec &weights,
               double total_power, const ScaOptions &options, bool use_estimated)
{
    CommonPrecoderParts common;
    if (!group.empty())
        common = build_common_precoder(channels, group, use_estimated);
    PrivatePrecoderParts priv = build_private_precoders(channels, use_estimated);
    return run_sca(channels, group, common, priv, weights, total_power, options, use_estimated);
}

SubsetSearchResult subset_search(const ChannelSet &channels, const arma::vec &weights,
                                 double total_power, const ScaOptions &options,
                                 bool use_estimated, bool include_no_cm)
{
    if (channels.num_users > 12)
        throw ConfigError("subset_search: enumeration guarded to at most 12 users");

    const PrivatePrecoderParts priv = build_private_precoders(channels, use_estimated);

    std::vector<CommonGroup> candidates;
    if (include_no_cm)
        candidates.push_back(CommonGroup::none());
    const arma::uword count = arma::uword(1) << channels.num_users;
    for (arma::uword mask = 1; mask < count; ++mask)
    {
        std::vector<arma::uword> users;
        for (arma::uword k = 0; k < channels.num_users; ++k)
            if (mask & (arma::uword(1) << k))
                users.push_back(k);
        candidates.push_back(CommonGroup::of(std::move(users)));
    }

    SubsetSearchResult result;
    double best = -std::numeric_limits<double>::infinity();
    bool first = true;

    for (const CommonGroup &candidate : candidates)
    {
        CommonPrecoderParts common;
        if (!candidate.empty())
            common = build_common_precoder(channels, candidate, use_estimated);
        ScaRun run = run_sca(channels, candidate, common, priv, weights, total_power, options,
                             use_estimated);

        // Evaluated sum rate: against the true channels (coincides with the
        // design-channel rates when the precoder was built from them).
        RateReport evaluated = evaluate_mismatched(run.precoder, channels, weights);
        const double sum_rate = evaluated.sum_rate;
        result.table.push_back({candidate, sum_rate});

        const bool wins = first || sum_rate > best + 1e-9 ||
                          (sum_rate >= best - 1e-9 && candidate < result.winner);
        if (wins)
        {
            result.winner = candidate;
            result.powers = run.powers;
            result.report = std::move(evaluated);
        }
        best = std::max(best, sum_rate);
        first = false;
    }

    return result;
}

} // namespace sdrsma
