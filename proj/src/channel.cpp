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

#include "sdrsma/channel.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace sdrsma
{

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream)
{
    std::uint64_t x = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

namespace
{

// Matrix of i.i.d. circularly symmetric complex Gaussian entries with the
// given per-entry variance. Column-major fill order, fixed for determinism.
arma::cx_mat complex_gaussian(arma::uword rows, arma::uword cols, double variance,
                              std::mt19937_64 &rng)
{
    arma::cx_mat m(rows, cols);
    std::normal_distribution<double> dist(0.0, std::sqrt(variance / 2.0));
    for (arma::uword c = 0; c < cols; ++c)
        for (arma::uword r = 0; r < rows; ++r)
            m(r, c) = std::complex<double>(dist(rng), dist(rng));
    return m;
}

} // namespace

void validate(const ChannelConfig &cfg)
{
    if (cfg.num_users == 0)
        throw ConfigError("channel config: need at least one user");
    if (cfg.rx_antennas.size() != cfg.num_users)
        throw ConfigError("channel config: rx_antennas must list one entry per user");
    if (cfg.distances_m.size() != cfg.num_users)
        throw ConfigError("channel config: distances_m must list one entry per user");

    arma::uword total = 0;
    for (arma::uword m : cfg.rx_antennas)
    {
        if (m == 0)
            throw ConfigError("channel config: every user needs at least one antenna");
        total += m;
    }
    if (total != cfg.tx_antennas)
        throw ConfigError("channel config: sum of user antennas must equal BS antennas "
                          "(critically loaded)");

    for (double d : cfg.distances_m)
        if (!(d > 0.0) || !std::isfinite(d))
            throw ConfigError("channel config: distances must be positive and finite");

    if (!(cfg.correlation >= 0.0 && cfg.correlation <= 1.0))
        throw ConfigError("channel config: correlation must lie in [0, 1]");
    if (!(cfg.csi_error_var >= 0.0) || !std::isfinite(cfg.csi_error_var))
        throw ConfigError("channel config: CSI error variance must be nonnegative");
    if (!std::isfinite(cfg.noise_dbm))
        throw ConfigError("channel config: noise power must be finite");

    if (cfg.correlation > 0.0)
    {
        if (cfg.num_users != 4)
            throw UnsupportedTopology("correlated channel construction requires exactly 4 users");
        if (cfg.rx_antennas[0] != cfg.rx_antennas[2] || cfg.rx_antennas[1] != cfg.rx_antennas[3])
            throw UnsupportedTopology("correlated channel construction pairs users 1<->3 and "
                                      "2<->4; paired users need equal antenna counts");
    }
}

ChannelSet generate_channels(const ChannelConfig &cfg)
{
    validate(cfg);

    const arma::uword users = cfg.num_users;

    std::vector<arma::cx_mat> fading(users);
    for (arma::uword k = 0; k < users; ++k)
    {
        std::mt19937_64 rng(derive_stream_seed(cfg.seed, k));
        fading[k] = complex_gaussian(cfg.rx_antennas[k], cfg.tx_antennas, 1.0, rng);
    }

    ChannelSet set;
    set.num_users = users;
    set.rx_antennas = cfg.rx_antennas;
    set.tx_antennas = cfg.tx_antennas;
    set.noise_power = dbm_to_linear(cfg.noise_dbm);
    set.path_loss.resize(users);
    for (arma::uword k = 0; k < users; ++k)
        set.path_loss[k] = cfg.distances_m[k] * cfg.distances_m[k];

    set.channel.resize(users);
    if (users == 4 && cfg.correlation > 0.0)
    {
        const double a = cfg.correlation;
        const double b = std::sqrt(1.0 - a * a);
        set.channel[0] = fading[0];
        set.channel[1] = fading[1];
        set.channel[2] = a * fading[0] + b * fading[2];
        set.channel[3] = a * fading[1] + b * fading[3];
    }
    else
    {
        for (arma::uword k = 0; k < users; ++k)
            set.channel[k] = fading[k];
    }

    set.estimate.resize(users);
    if (cfg.csi_error_var > 0.0)
    {
        for (arma::uword k = 0; k < users; ++k)
        {
            std::mt19937_64 rng(derive_stream_seed(cfg.seed, users + k));
            set.estimate[k] = set.channel[k] + complex_gaussian(cfg.rx_antennas[k],
                                                                cfg.tx_antennas,
                                                                cfg.csi_error_var, rng);
        }
    }
    else
    {
        for (arma::uword k = 0; k < users; ++k)
            set.estimate[k] = set.channel[k];
    }

    return set;
}

} // namespace sdrsma
