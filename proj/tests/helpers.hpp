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

#ifndef sdrsma_tests_helpers_H
#define sdrsma_tests_helpers_H

#include <armadillo>
#include <random>

#include "sdrsma/channel.hpp"
#include "sdrsma/precoder.hpp"

namespace sdrsma::test
{

// Random complex matrix with i.i.d. standard circular Gaussian entries,
// deterministic in the seed and independent of the library RNG streams.
inline arma::cx_mat random_complex(arma::uword rows, arma::uword cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, std::sqrt(0.5));
    arma::cx_mat m(rows, cols);
    for (arma::uword c = 0; c < cols; ++c)
        for (arma::uword r = 0; r < rows; ++r)
            m(r, c) = std::complex<double>(dist(rng), dist(rng));
    return m;
}

// Small critically loaded channel set with uncorrelated users.
inline ChannelConfig small_config(std::uint64_t seed, arma::uword users, arma::uword per_user,
                                  double mu2 = 0.0)
{
    ChannelConfig cfg;
    cfg.num_users = users;
    cfg.rx_antennas.assign(users, per_user);
    cfg.tx_antennas = users * per_user;
    cfg.distances_m.assign(users, 50.0);
    cfg.correlation = 0.0;
    cfg.csi_error_var = mu2;
    cfg.noise_dbm = -35.0;
    cfg.seed = seed;
    return cfg;
}

// The simulation-scale scenario: 4 users, 4 antennas each, 16 BS antennas.
inline ChannelConfig paper_config(std::uint64_t seed, double alpha, double mu2 = 0.0,
                                  std::vector<double> distances = {50, 50, 50, 50})
{
    ChannelConfig cfg;
    cfg.num_users = 4;
    cfg.rx_antennas = {4, 4, 4, 4};
    cfg.tx_antennas = 16;
    cfg.distances_m = std::move(distances);
    cfg.correlation = alpha;
    cfg.csi_error_var = mu2;
    cfg.noise_dbm = -35.0;
    cfg.seed = seed;
    return cfg;
}

// Strictly positive random powers scaled to use the full budget.
inline PowerAllocation random_powers(const ChannelSet &channels, const CommonGroup &group,
                                     const arma::vec &common_cost, double budget,
                                     std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    PowerAllocation p =
        PowerAllocation::zeros(group.stream_count(channels.rx_antennas), channels.rx_antennas);
    for (arma::uword l = 0; l < p.common.n_elem; ++l)
        p.common(l) = unit(rng);
    for (auto &q : p.per_user)
        for (arma::uword l = 0; l < q.n_elem; ++l)
            q(l) = unit(rng);
    const double used = p.weighted_total(group.empty() ? arma::vec() : common_cost);
    const double scale = budget / used;
    p.common *= scale;
    for (auto &q : p.per_user)
        q *= scale;
    return p;
}

} // namespace sdrsma::test

#endif
