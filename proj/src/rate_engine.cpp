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

#include "sdrsma/rate_engine.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sdrsma
{

namespace
{

void check_member_stream(const PrecoderSet &pre, arma::uword user, arma::uword stream)
{
    if (user >= pre.priv.null_basis.size())
        throw IndexError("user index out of range");
    if (!pre.group.contains(user))
        throw IndexError("user " + std::to_string(user) + " does not decode the common message");
    if (stream >= pre.cm_streams)
        throw IndexError("common stream index out of range");
}

// Squared row norms, i.e. diag(M M^H).
arma::vec row_norms_sq(const arma::cx_mat &m)
{
    return arma::sum(arma::square(arma::abs(m)), 1);
}

const arma::cx_mat &cm_detection(const PrecoderSet &pre, const PrecoderSet *detection_source,
                                 arma::uword user)
{
    return detection_source ? detection_source->common.detection[user]
                            : pre.common.detection[user];
}

const arma::cx_mat &pm_detection(const PrecoderSet &pre, const PrecoderSet *detection_source,
                                 arma::uword user)
{
    return detection_source ? detection_source->priv.left_basis[user]
                            : pre.priv.left_basis[user];
}

void check_detection_source(const PrecoderSet &pre, const PrecoderSet *detection_source)
{
    if (!detection_source)
        return;
    if (!(detection_source->group == pre.group) ||
        detection_source->cm_streams != pre.cm_streams)
        throw DimensionMismatch("detection source was built for a different common group");
}

} // namespace

double common_stream_rate(const PrecoderSet &pre, const ChannelSet &channels, arma::uword user,
                          arma::uword stream)
{
    check_member_stream(pre, user, stream);

    const double inv_loss = 1.0 / channels.path_loss[user];
    const double gain = pre.common.gains[user](stream);
    const double signal = inv_loss * gain * gain * pre.powers.common(stream);

    const arma::cx_mat &w = pre.cm_interference[user];
    double interference = 0.0;
    for (arma::uword i = 0; i < w.n_cols; ++i)
        interference += std::norm(w(stream, i)) * pre.powers.per_user[user](i);
    interference *= inv_loss;

    const double noise =
        channels.noise_power * std::pow(arma::norm(pre.common.detection[user].row(stream)), 2);

    return rate_from_sinr(signal / (interference + noise));
}

double common_rate(const PrecoderSet &pre, const ChannelSet &channels, arma::uword stream)
{
    if (pre.group.empty())
        return 0.0;
    if (stream >= pre.cm_streams)
        throw IndexError("common stream index out of range");
    double r = std::numeric_limits<double>::infinity();
    for (arma::uword k : pre.group.users)
        r = std::min(r, common_stream_rate(pre, channels, k, stream));
    return r;
}

double private_stream_rate(const PrecoderSet &pre, const ChannelSet &channels, arma::uword user,
                           arma::uword stream)
{
    if (user >= pre.priv.null_basis.size())
        throw IndexError("user index out of range");
    if (stream >= channels.rx_antennas[user])
        throw IndexError("private stream index out of range");

    const double inv_loss = 1.0 / channels.path_loss[user];
    const double gain = pre.priv.gains[user](stream);
    const double signal = inv_loss * gain * gain * pre.powers.per_user[user](stream);

    const arma::cx_mat &w = pre.pm_interference[user];
    double interference = 0.0;
    for (arma::uword i = 0; i < w.n_cols; ++i)
        interference += std::norm(w(stream, i)) * pre.powers.common(i);
    interference *= inv_loss;

    return rate_from_sinr(signal / (interference + channels.noise_power));
}

double wsr(const arma::vec &cm_rates, const std::vector<arma::vec> &pm_rates,
           const arma::vec &weights, const arma::vec &fractions)
{
    if (weights.n_elem != pm_rates.size() || fractions.n_elem != pm_rates.size())
        throw ConfigError("wsr: weights and fractions must list one entry per user");
    if (weights.n_elem == 0)
        throw ConfigError("wsr: need at least one user");
    if (weights.min() < 0.0)
        throw ConfigError("wsr: weights must be nonnegative");
    if (std::abs(arma::accu(weights) - 1.0) > 1e-9)
        throw ConfigError("wsr: weights must sum to one");

    const double cm_sum = arma::accu(cm_rates);
    double value = arma::dot(weights, fractions) * cm_sum;
    for (std::size_t k = 0; k < pm_rates.size(); ++k)
        value += weights(k) * arma::accu(pm_rates[k]);
    return value;
}

namespace
{

RateReport report_from_sinrs(const PrecoderSet &pre, const SinrReport &sinrs,
                             const arma::vec &weights)
{
    const arma::uword users = static_cast<arma::uword>(sinrs.pm.size());
    RateReport report;
    report.weights = weights;
    report.fractions = pre.group.bit_fractions(users);

    report.cm_user_rates.resize(users);
    report.cm_rates.zeros(pre.cm_streams);
    if (!pre.group.empty())
    {
        report.cm_rates.fill(std::numeric_limits<double>::infinity());
        for (arma::uword k : pre.group.users)
        {
            arma::vec rates(pre.cm_streams);
            for (arma::uword l = 0; l < pre.cm_streams; ++l)
                rates(l) = rate_from_sinr(sinrs.cm[k](l));
            report.cm_rates = arma::min(report.cm_rates, rates);
            report.cm_user_rates[k] = std::move(rates);
        }
    }

    report.pm_rates.resize(users);
    for (arma::uword k = 0; k < users; ++k)
    {
        report.pm_rates[k].set_size(sinrs.pm[k].n_elem);
        for (arma::uword l = 0; l < sinrs.pm[k].n_elem; ++l)
            report.pm_rates[k](l) = rate_from_sinr(sinrs.pm[k](l));
    }

    const double cm_sum = arma::accu(report.cm_rates);
    report.user_totals.set_size(users);
    report.sum_rate = cm_sum;
    report.weighted_sum_rate = arma::dot(weights, report.fractions) * cm_sum;
    for (arma::uword k = 0; k < users; ++k)
    {
        const double pm_sum = arma::accu(report.pm_rates[k]);
        report.user_totals(k) = report.fractions(k) * cm_sum + pm_sum;
        report.sum_rate += pm_sum;
        report.weighted_sum_rate += weights(k) * pm_sum;
    }
    return report;
}

} // namespace

RateReport compute_report(const PrecoderSet &pre, const ChannelSet &channels,
                          const arma::vec &weights)
{
    if (weights.n_elem != channels.num_users)
        throw ConfigError("compute_report: weights must list one entry per user");

    SinrReport sinrs;
    sinrs.cm.resize(channels.num_users);
    sinrs.pm.resize(channels.num_users);

    for (arma::uword k : pre.group.users)
    {
        sinrs.cm[k].set_size(pre.cm_streams);
        const double inv_loss = 1.0 / channels.path_loss[k];
        const arma::vec noise =
            channels.noise_power * row_norms_sq(pre.common.detection[k]);
        const arma::vec interference =
            inv_loss * (arma::square(arma::abs(pre.cm_interference[k])) * pre.powers.per_user[k]);
        for (arma::uword l = 0; l < pre.cm_streams; ++l)
        {
            const double gain = pre.common.gains[k](l);
            const double signal = inv_loss * gain * gain * pre.powers.common(l);
            sinrs.cm[k](l) = signal / (interference(l) + noise(l));
        }
    }

    for (arma::uword k = 0; k < channels.num_users; ++k)
    {
        const arma::uword streams = channels.rx_antennas[k];
        sinrs.pm[k].set_size(streams);
        const double inv_loss = 1.0 / channels.path_loss[k];
        arma::vec interference(streams, arma::fill::zeros);
        if (!pre.group.empty())
            interference =
                inv_loss * (arma::square(arma::abs(pre.pm_interference[k])) * pre.powers.common);
        for (arma::uword l = 0; l < streams; ++l)
        {
            const double gain = pre.priv.gains[k](l);
            const double signal = inv_loss * gain * gain * pre.powers.per_user[k](l);
            sinrs.pm[k](l) = signal / (interference(l) + channels.noise_power);
        }
    }

    return report_from_sinrs(pre, sinrs, weights);
}

SinrReport analytic_sinrs(const PrecoderSet &pre, const ChannelSet &channels,
                          const PrecoderSet *detection_source)
{
    check_detection_source(pre, detection_source);
    const arma::uword users = channels.num_users;

    SinrReport sinrs;
    sinrs.cm.resize(users);
    sinrs.pm.resize(users);

    for (arma::uword k = 0; k < users; ++k)
    {
        const arma::cx_mat &h = channels.channel[k];
        const double inv_loss = 1.0 / channels.path_loss[k];
        const bool member = pre.group.contains(k);

        // Effective post-detection matrices against the true channel,
        // power loading included.
        if (member)
        {
            const arma::cx_mat &det = cm_detection(pre, detection_source, k);
            const arma::cx_mat cm_eff = det * (h * pre.common_precoder); // M x M
            const arma::mat cm_pow = arma::square(arma::abs(cm_eff));

            std::vector<arma::mat> pm_pow(users);
            for (arma::uword j = 0; j < users; ++j)
                pm_pow[j] = arma::square(arma::abs(det * (h * pre.private_precoder[j])));

            const arma::vec noise = channels.noise_power * row_norms_sq(det);

            sinrs.cm[k].set_size(pre.cm_streams);
            for (arma::uword l = 0; l < pre.cm_streams; ++l)
            {
                const double signal = inv_loss * cm_pow(l, l);
                double interference = arma::accu(cm_pow.row(l)) - cm_pow(l, l);
                for (arma::uword j = 0; j < users; ++j)
                    interference += arma::accu(pm_pow[j].row(l));
                interference *= inv_loss;
                sinrs.cm[k](l) = signal / (interference + noise(l));
            }
        }

        // Private decoding: members first cancel the common message exactly
        // (true channel, decoded common symbols), so only private leakage
        // remains; non-members see the common precoder as interference.
        const arma::cx_mat &det = pm_detection(pre, detection_source, k);
        const arma::uword streams = channels.rx_antennas[k];

        std::vector<arma::mat> pm_pow(users);
        for (arma::uword j = 0; j < users; ++j)
            pm_pow[j] = arma::square(arma::abs(det.t() * (h * pre.private_precoder[j])));
        arma::mat cm_pow;
        if (!member && !pre.group.empty())
            cm_pow = arma::square(arma::abs(det.t() * (h * pre.common_precoder)));

        // U_k has unit-norm columns, so the post-detection noise power per
        // stream is sigma^2 * ||column l||^2 = sigma^2.
        sinrs.pm[k].set_size(streams);
        for (arma::uword l = 0; l < streams; ++l)
        {
            const double signal = inv_loss * pm_pow[k](l, l);
            double interference = -pm_pow[k](l, l);
            for (arma::uword j = 0; j < users; ++j)
                interference += arma::accu(pm_pow[j].row(l));
            if (cm_pow.n_elem > 0)
                interference += arma::accu(cm_pow.row(l));
            interference *= inv_loss;
            sinrs.pm[k](l) = signal / (interference + channels.noise_power);
        }
    }

    return sinrs;
}

RateReport evaluate_mismatched(const PrecoderSet &pre, const ChannelSet &channels,
                               const arma::vec &weights, const PrecoderSet *detection_source)
{
    if (weights.n_elem != channels.num_users)
        throw ConfigError("evaluate_mismatched: weights must list one entry per user");
    return report_from_sinrs(pre, analytic_sinrs(pre, channels, detection_source), weights);
}

SinrReport symbol_oracle(const PrecoderSet &pre, const ChannelSet &channels,
                         std::size_t n_symbols, std::uint64_t seed,
                         const PrecoderSet *detection_source)
{
    check_detection_source(pre, detection_source);
    if (n_symbols == 0)
        throw DomainError("symbol_oracle: need at least one symbol");

    const arma::uword users = channels.num_users;
    const arma::uword cm_streams = pre.cm_streams;
    const arma::uword n = static_cast<arma::uword>(n_symbols);

    std::mt19937_64 rng(derive_stream_seed(seed, 0));
    std::normal_distribution<double> unit(0.0, std::sqrt(0.5));
    auto draw = [&](arma::uword rows, arma::uword cols, double variance) {
        arma::cx_mat m(rows, cols);
        const double scale = std::sqrt(variance);
        for (arma::uword c = 0; c < cols; ++c)
            for (arma::uword r = 0; r < rows; ++r)
                m(r, c) = scale * std::complex<double>(unit(rng), unit(rng));
        return m;
    };

    // Unit-variance Gaussian symbol blocks, one column per channel use.
    const arma::cx_mat cm_symbols = draw(cm_streams, n, 1.0);
    std::vector<arma::cx_mat> pm_symbols(users);
    for (arma::uword k = 0; k < users; ++k)
        pm_symbols[k] = draw(channels.rx_antennas[k], n, 1.0);

    auto measure = [](const arma::cx_mat &received, const arma::cx_vec &desired_coef,
                      const arma::cx_mat &desired_symbols) {
        arma::vec sinr(received.n_rows);
        for (arma::uword l = 0; l < received.n_rows; ++l)
        {
            const arma::cx_rowvec wanted = desired_coef(l) * desired_symbols.row(l);
            const double sig = arma::accu(arma::square(arma::abs(wanted)));
            const double err = arma::accu(arma::square(arma::abs(received.row(l) - wanted)));
            sinr(l) = (err > 0.0) ? std::min(sig / err, kSinrCap) : kSinrCap;
        }
        return sinr;
    };

    SinrReport sinrs;
    sinrs.cm.resize(users);
    sinrs.pm.resize(users);

    for (arma::uword k = 0; k < users; ++k)
    {
        const arma::cx_mat &h = channels.channel[k];
        const double amp = 1.0 / std::sqrt(channels.path_loss[k]);
        const bool member = pre.group.contains(k);

        // Received block y_k for all channel uses at once.
        arma::cx_mat transmitted = pre.common_precoder * cm_symbols;
        for (arma::uword j = 0; j < users; ++j)
            transmitted += pre.private_precoder[j] * pm_symbols[j];
        const arma::cx_mat noise = draw(channels.rx_antennas[k], n, channels.noise_power);
        const arma::cx_mat received = amp * (h * transmitted) + noise;

        if (member)
        {
            const arma::cx_mat &det = cm_detection(pre, detection_source, k);
            const arma::cx_mat processed = det * received;
            const arma::cx_vec coef = amp * arma::diagvec(det * (h * pre.common_precoder));
            sinrs.cm[k] = measure(processed, coef, cm_symbols);
        }

        const arma::cx_mat &det = pm_detection(pre, detection_source, k);
        arma::cx_mat cleaned = received;
        if (member) // exact cancellation with the true channel and known symbols
            cleaned -= amp * (h * (pre.common_precoder * cm_symbols));
        const arma::cx_mat processed = det.t() * cleaned;
        const arma::cx_vec coef = amp * arma::diagvec(det.t() * (h * pre.private_precoder[k]));
        sinrs.pm[k] = measure(processed, coef, pm_symbols[k]);
    }

    return sinrs;
}

} // namespace sdrsma
