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

#ifndef sdrsma_sca_H
#define sdrsma_sca_H

#include <armadillo>
#include <utility>
#include <vector>

#include "sdrsma/channel.hpp"
#include "sdrsma/precoder.hpp"
#include "sdrsma/rate_engine.hpp"

namespace sdrsma
{

// Power-free coefficients of the weighted-sum-rate problem for one channel
// set and common group: everything the per-stream SINRs depend on except the
// stream powers themselves.
//
// Packed power layout used by the solver: x = [p_c (M); p_1 (M_1); ...],
// with budget constraint dot(cost, x) <= total_power, x >= 0.
struct WsrInstance
{
    arma::uword num_users = 0;
    arma::uword cm_streams = 0;            // M
    std::vector<arma::uword> pm_streams;   // M_k
    std::vector<arma::uword> members;      // users decoding the common message

    // Common message, one entry per member (same order as `members`):
    // signal coefficient a(l) = D_k(l)^2 / L_k, private self-interference
    // couplings |W_k|^2 / L_k (M x M_k) and per-stream noise
    // sigma^2 * diag(E_k^+ E_k^{+H}).
    std::vector<arma::vec> cm_signal;
    std::vector<arma::mat> cm_coupling;
    std::vector<arma::vec> cm_noise;

    // Private messages, one entry per user: signal coefficient
    // Sigma_k(l)^2 / L_k and common-message couplings |W_c,k|^2 / L_k
    // (M_k x M, all-zero for members).
    std::vector<arma::vec> pm_signal;
    std::vector<arma::mat> pm_coupling;
    double noise_power = 0.0;

    arma::vec cost;          // packed budget weights: [c_l; 1; ...; 1]
    double total_power = 0;  // P_T (linear mW)
    arma::vec weights;       // w_k (any nonnegative scale)
    arma::vec fractions;     // v_k
    double cm_weight = 0.0;  // sum_k w_k v_k

    std::vector<arma::uword> offsets; // packed index of p_k per user

    // Coefficients from an assembled precoder set (its power loading is
    // irrelevant; the stored interference matrices and gains are power-free).
    static WsrInstance build(const PrecoderSet &pre, const ChannelSet &channels,
                             const arma::vec &weights, double total_power);

    arma::uword dimension() const { return cm_streams + total_pm(); }
    arma::uword total_pm() const;

    arma::vec pack(const PowerAllocation &p) const;
    PowerAllocation unpack(const arma::vec &x) const;

    // Anchor-dependent linearization constants of the concave surrogate.
    struct Anchor
    {
        std::vector<arma::vec> cm_lin;   // per member: 1/(ln2 * (I_hat + noise)) per stream
        std::vector<arma::vec> cm_const; // per member: -log2(I_hat+noise) + I_hat * cm_lin
        std::vector<arma::vec> pm_lin;   // per user: 1/(ln2 * (J_hat + sigma^2)) per stream
        std::vector<arma::vec> pm_const;
    };
    Anchor make_anchor(const arma::vec &x_anchor) const;

    // Tight concave surrogate objective (exact at the anchor, a lower bound
    // of the true weighted sum rate everywhere); optionally its gradient
    // (at kinks of the per-stream min: gradient of the active member).
    double surrogate_objective(const arma::vec &x, const Anchor &anchor,
                               arma::vec *gradient = nullptr) const;

    // True weighted sum rate at x from the same coefficients.
    double true_wsr(const arma::vec &x) const;
};

// Tight concave surrogate of the rate of common stream `stream` at member
// `user`: the log term with the interference linearized around the anchor,
// including the anchor constant, so that the value is exact at the anchor
// and a lower bound elsewhere. Throws DomainError on negative powers.
double surrogate_common_rate(const WsrInstance &instance, const PowerAllocation &powers,
                             const PowerAllocation &anchor, arma::uword user,
                             arma::uword stream);

// Same for the private stream of any user; coincides with the exact rate for
// members (zero common-message coupling).
double surrogate_private_rate(const WsrInstance &instance, const PowerAllocation &powers,
                              const PowerAllocation &anchor, arma::uword user,
                              arma::uword stream);

struct InnerOptions
{
    arma::uword max_iterations = 50000;
    double improvement_tolerance = 1e-13; // relative objective improvement floor per stage
};

struct InnerSolution
{
    PowerAllocation powers;
    double objective = 0.0; // surrogate optimum
    arma::uword iterations = 0;
};

// Maximizes the surrogate objective over the power budget via projected
// gradient ascent with Barzilai-Borwein steps and backtracking. The
// per-stream min over members is handled through the active member's
// gradient with an averaged fallback near kinks. The anchor must be
// feasible; the iteration starts there, so the result never falls below the
// anchor value.
InnerSolution solve_inner(const WsrInstance &instance, const PowerAllocation &anchor,
                          const InnerOptions &options = {});

struct ScaOptions
{
    double tolerance = 1e-6;        // epsilon on successive surrogate optima
    arma::uword max_iterations = 500;
    InnerOptions inner;
};

struct ScaRun
{
    PowerAllocation powers;
    RateReport report;                  // true rates at the returned powers
    PrecoderSet precoder;               // assembled with the returned powers
    std::vector<double> surrogate_trace; // optimum per iteration
    std::vector<double> true_wsr_trace;  // true WSR at each iterate
    arma::uword iterations = 0;
};

// Successive convex approximation from zero initial powers: repeatedly
// linearize around the previous solution and maximize the surrogate until
// successive optima differ by at most the tolerance (SolverFailure past the
// iteration cap). The final report uses the true rate expressions.
ScaRun run_sca(const ChannelSet &channels, const CommonGroup &group,
               const CommonPrecoderParts &common, const PrivatePrecoderParts &priv,
               const arma::vec &weights, double total_power, const ScaOptions &options,
               bool use_estimated);

ScaRun run_sca(const ChannelSet &channels, const CommonGroup &group, const arma::vec &weights,
               double total_power, const ScaOptions &options = {}, bool use_estimated = false);

struct SubsetScore
{
    CommonGroup group;
    double sum_rate = 0.0;
};

struct SubsetSearchResult
{
    CommonGroup winner;
    std::vector<SubsetScore> table; // every candidate subset with its sum rate
    PowerAllocation powers;         // winning allocation
    RateReport report;              // winning evaluated rates
};

// Runs the power optimization for every candidate common group (all nonempty
// subsets, plus the no-CM baseline when include_no_cm is set) and returns
// the candidate with the maximum evaluated sum rate. Sum rates are evaluated
// against the true channels (identical to the design-channel rates when
// use_estimated is false). Ties are broken towards the lexicographically
// smallest subset at 1e-9 resolution. Guarded to num_users <= 12.
SubsetSearchResult subset_search(const ChannelSet &channels, const arma::vec &weights,
                                 double total_power, const ScaOptions &options = {},
                                 bool use_estimated = false, bool include_no_cm = true);

} // namespace sdrsma

#endif
