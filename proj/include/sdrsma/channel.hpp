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

#ifndef sdrsma_channel_H
#define sdrsma_channel_H

#include <armadillo>
#include <cstdint>
#include <vector>

#include "sdrsma/errors.hpp"

namespace sdrsma
{

// Declarative description of one channel draw. All powers are in dBm at this
// boundary and converted to linear mW internally.
struct ChannelConfig
{
    arma::uword num_users = 4;
    std::vector<arma::uword> rx_antennas; // M_k per user; sum must equal tx_antennas
    arma::uword tx_antennas = 16;         // N
    std::vector<double> distances_m;      // d_k, path loss L_k = d_k^2
    double correlation = 0.0;             // alpha in [0, 1]; > 0 needs the 4-user pairing
    double csi_error_var = 0.0;           // mu^2, per-entry estimation error variance
    double noise_dbm = -35.0;             // noise power
    std::uint64_t seed = 1;               // master seed for this draw
};

// True and estimated per-user MIMO channels with path loss and noise power.
// Small-scale fading matrices are stored unscaled; the 1/sqrt(L_k) path loss
// factor is applied where the signal model prescribes it, never here.
struct ChannelSet
{
    arma::uword num_users = 0;
    std::vector<arma::uword> rx_antennas;
    arma::uword tx_antennas = 0;
    std::vector<arma::cx_mat> channel;  // H_k, M_k x N, true small-scale fading
    std::vector<arma::cx_mat> estimate; // estimated channels; equals channel when csi_error_var = 0
    std::vector<double> path_loss;      // L_k = d_k^2, dimensionless
    double noise_power = 0.0;           // sigma^2, linear mW

    const arma::cx_mat &design_channel(arma::uword user, bool use_estimated) const
    {
        return use_estimated ? estimate[user] : channel[user];
    }
};

// dBm -> linear mW.
inline double dbm_to_linear(double dbm) { return std::pow(10.0, dbm / 10.0); }

// Derived sub-stream seed (splitmix64 finalizer). Stream ids: k for the
// fading matrix of user k, num_users + k for its estimation error, and any
// caller-chosen ids for trial splitting.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream);

// Validates config invariants; throws ConfigError or UnsupportedTopology.
void validate(const ChannelConfig &cfg);

// Draws one channel set. Entries of the fading matrices are i.i.d. standard
// circularly symmetric complex Gaussian; with correlation alpha > 0 the
// 4-user pairing H_3 = alpha H_1 + sqrt(1-alpha^2) G_3 (and 2<->4) is used.
// Estimated channels add i.i.d. complex Gaussian errors of variance mu^2.
// Deterministic given the config (including the seed).
ChannelSet generate_channels(const ChannelConfig &cfg);

} // namespace sdrsma

#endif
