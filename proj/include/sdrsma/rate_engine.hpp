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

#ifndef sdrsma_rate_engine_H
#define sdrsma_rate_engine_H

#include <armadillo>
#include <cstdint>
#include <vector>

#include "sdrsma/channel.hpp"
#include "sdrsma/precoder.hpp"

namespace sdrsma
{

// SINRs above this value are treated as effectively infinite and capped
// before taking logs.
constexpr double kSinrCap = 1e9;

inline double rate_from_sinr(double sinr) { return std::log2(1.0 + std::min(sinr, kSinrCap)); }

// Per-stream SINRs: cm[k] holds the common-stream SINRs seen by member user
// k (empty for non-members); pm[k] the private-stream SINRs of user k.
struct SinrReport
{
    std::vector<arma::vec> cm;
    std::vector<arma::vec> pm;
};

// Achievable rates in bits per channel use.
struct RateReport
{
    std::vector<arma::vec> cm_user_rates; // per member user, length M; empty otherwise
    arma::vec cm_rates;                   // length M, min over member users
    std::vector<arma::vec> pm_rates;      // per user, length M_k
    arma::vec user_totals;                // v_k * sum(cm_rates) + sum(pm_rates[k])
    double sum_rate = 0.0;                // sum(cm_rates) + sum over users of sum(pm_rates)
    double weighted_sum_rate = 0.0;       // with the weights/fractions below
    arma::vec weights;                    // w_k as supplied
    arma::vec fractions;                  // v_k from the common group
};

// Closed-form rate of common stream `stream` as seen by member user `user`
// (matched design/evaluation channels).
double common_stream_rate(const PrecoderSet &pre, const ChannelSet &channels, arma::uword user,
                          arma::uword stream);

// Rate of common stream `stream`: min over member users; 0 for the empty
// group.
double common_rate(const PrecoderSet &pre, const ChannelSet &channels, arma::uword stream);

// Closed-form rate of private stream `stream` of user `user` (matched
// channels; the common-message interference term vanishes for members).
double private_stream_rate(const PrecoderSet &pre, const ChannelSet &channels, arma::uword user,
                           arma::uword stream);

// Weighted sum rate from per-stream rates. Requires w_k >= 0, sum w_k = 1
// (ConfigError otherwise) and fractions consistent with a common group.
double wsr(const arma::vec &cm_rates, const std::vector<arma::vec> &pm_rates,
           const arma::vec &weights, const arma::vec &fractions);

// Full matched-CSI report via the closed forms above. Weights need not be
// normalized here; they enter the weighted sum as given.
RateReport compute_report(const PrecoderSet &pre, const ChannelSet &channels,
                          const arma::vec &weights);

// General linear-model SINRs: evaluates the assembled precoders against the
// true channels in `channels`, including all leakage terms that appear when
// the design channels differ from the true ones. Detection matrices come
// from `detection_source` when given (e.g. a precoder set built from the
// true channels), else from `pre`. Members cancel the common message
// exactly before private decoding.
SinrReport analytic_sinrs(const PrecoderSet &pre, const ChannelSet &channels,
                          const PrecoderSet *detection_source = nullptr);

// Rate report under channel mismatch: precoders from `pre` (typically built
// from estimated channels), evaluation against the true channels. With
// matched channels this coincides with compute_report to ~1e-10.
RateReport evaluate_mismatched(const PrecoderSet &pre, const ChannelSet &channels,
                               const arma::vec &weights,
                               const PrecoderSet *detection_source = nullptr);

// Symbol-level transmission oracle: simulates Gaussian symbol transmissions
// through the true channels, applies the detection operators and exact
// common-message cancellation for members, and measures per-stream SINRs
// empirically. Streams with zero measured interference-plus-noise report the
// cap sentinel.
SinrReport symbol_oracle(const PrecoderSet &pre, const ChannelSet &channels,
                         std::size_t n_symbols, std::uint64_t seed,
                         const PrecoderSet *detection_source = nullptr);

} // namespace sdrsma

#endif
