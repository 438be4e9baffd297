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

#include "sdrsma/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sdrsma
{

namespace
{

using nlohmann::json;

json matrix_to_json(const arma::cx_mat &m)
{
    json data = json::array();
    for (arma::uword r = 0; r < m.n_rows; ++r)
        for (arma::uword c = 0; c < m.n_cols; ++c)
            data.push_back({m(r, c).real(), m(r, c).imag()});
    return {{"rows", m.n_rows}, {"cols", m.n_cols}, {"data", std::move(data)}};
}

arma::cx_mat matrix_from_json(const json &j)
{
    const arma::uword rows = j.at("rows").get<arma::uword>();
    const arma::uword cols = j.at("cols").get<arma::uword>();
    const json &data = j.at("data");
    if (data.size() != rows * cols)
        throw ConfigError("matrix JSON: data length does not match rows*cols");
    arma::cx_mat m(rows, cols);
    std::size_t idx = 0;
    for (arma::uword r = 0; r < rows; ++r)
        for (arma::uword c = 0; c < cols; ++c, ++idx)
            m(r, c) = std::complex<double>(data[idx].at(0).get<double>(),
                                           data[idx].at(1).get<double>());
    return m;
}

json vec_to_json(const arma::vec &v)
{
    json a = json::array();
    for (arma::uword i = 0; i < v.n_elem; ++i)
        a.push_back(v(i));
    return a;
}

} // namespace

std::string channel_set_to_json(const ChannelSet &set)
{
    json j;
    j["users"] = set.num_users;
    j["tx_antennas"] = set.tx_antennas;
    j["rx_antennas"] = set.rx_antennas;
    j["path_loss"] = set.path_loss;
    j["noise_power_mw"] = set.noise_power;
    j["channels"] = json::array();
    j["estimates"] = json::array();
    for (arma::uword k = 0; k < set.num_users; ++k)
    {
        j["channels"].push_back(matrix_to_json(set.channel[k]));
        j["estimates"].push_back(matrix_to_json(set.estimate[k]));
    }
    return j.dump(2);
}

ChannelSet channel_set_from_json(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::exception &e)
    {
        throw ConfigError(std::string("channel set JSON parse error: ") + e.what());
    }

    ChannelSet set;
    set.num_users = j.at("users").get<arma::uword>();
    set.tx_antennas = j.at("tx_antennas").get<arma::uword>();
    set.rx_antennas = j.at("rx_antennas").get<std::vector<arma::uword>>();
    set.path_loss = j.at("path_loss").get<std::vector<double>>();
    set.noise_power = j.at("noise_power_mw").get<double>();
    for (const auto &m : j.at("channels"))
        set.channel.push_back(matrix_from_json(m));
    for (const auto &m : j.at("estimates"))
        set.estimate.push_back(matrix_from_json(m));
    if (set.channel.size() != set.num_users || set.estimate.size() != set.num_users ||
        set.rx_antennas.size() != set.num_users || set.path_loss.size() != set.num_users)
        throw ConfigError("channel set JSON: inconsistent per-user list lengths");
    return set;
}

void save_channel_set(const ChannelSet &set, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open for writing: " + path);
    out << channel_set_to_json(set) << '\n';
}

ChannelSet load_channel_set(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return channel_set_from_json(ss.str());
}

std::string precoder_set_to_json(const PrecoderSet &set)
{
    json j;
    j["group"] = set.group.users;
    j["cm_streams"] = set.cm_streams;
    j["built_from_estimate"] = set.built_from_estimate;
    j["power_budget_mw"] = set.power_budget;
    j["common_powers"] = vec_to_json(set.powers.common);
    j["private_powers"] = json::array();
    for (const auto &q : set.powers.per_user)
        j["private_powers"].push_back(vec_to_json(q));

    if (!set.group.empty())
    {
        j["intersection_basis"] = matrix_to_json(set.common.intersection_basis);
        j["right_basis"] = matrix_to_json(set.common.right_basis);
        j["right_basis_cond"] = set.common.right_basis_cond;
        j["power_cost"] = vec_to_json(set.common.power_cost);
        j["common_precoder"] = matrix_to_json(set.common_precoder);
        j["detection"] = json::array();
        j["cm_gains"] = json::array();
        j["cm_interference"] = json::array();
        for (arma::uword k : set.group.users)
        {
            j["detection"].push_back(matrix_to_json(set.common.detection[k]));
            j["cm_gains"].push_back(vec_to_json(set.common.gains[k]));
            j["cm_interference"].push_back(matrix_to_json(set.cm_interference[k]));
        }
    }

    j["null_basis"] = json::array();
    j["pm_left_basis"] = json::array();
    j["pm_gains"] = json::array();
    j["pm_interference"] = json::array();
    j["private_precoder"] = json::array();
    for (std::size_t k = 0; k < set.priv.null_basis.size(); ++k)
    {
        j["null_basis"].push_back(matrix_to_json(set.priv.null_basis[k]));
        j["pm_left_basis"].push_back(matrix_to_json(set.priv.left_basis[k]));
        j["pm_gains"].push_back(vec_to_json(set.priv.gains[k]));
        j["pm_interference"].push_back(matrix_to_json(set.pm_interference[k]));
        j["private_precoder"].push_back(matrix_to_json(set.private_precoder[k]));
    }
    return j.dump(2);
}

std::string rate_report_to_json(const RateReport &report)
{
    json j;
    j["cm_rates"] = vec_to_json(report.cm_rates);
    j["cm_user_rates"] = json::array();
    for (const auto &r : report.cm_user_rates)
        j["cm_user_rates"].push_back(vec_to_json(r));
    j["pm_rates"] = json::array();
    for (const auto &r : report.pm_rates)
        j["pm_rates"].push_back(vec_to_json(r));
    j["user_totals"] = vec_to_json(report.user_totals);
    j["sum_rate"] = report.sum_rate;
    j["weighted_sum_rate"] = report.weighted_sum_rate;
    j["weights"] = vec_to_json(report.weights);
    j["fractions"] = vec_to_json(report.fractions);
    return j.dump(2);
}

namespace
{

void append_streams(std::ofstream &out, const std::string &prefix,
                    const std::vector<arma::vec> &analytic, const std::vector<arma::vec> &measured)
{
    char line[160];
    for (std::size_t k = 0; k < analytic.size(); ++k)
        for (arma::uword l = 0; l < analytic[k].n_elem; ++l)
        {
            std::snprintf(line, sizeof(line), "%s_u%zu_s%llu,%.12g,%.12g\n", prefix.c_str(), k,
                          static_cast<unsigned long long>(l), analytic[k](l), measured[k](l));
            out << line;
        }
}

} // namespace

void write_oracle_csv(const std::string &path, const SinrReport &analytic,
                      const SinrReport &measured)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open for writing: " + path);
    out << "stream,analytic_sinr,measured_sinr\n";
    append_streams(out, "cm", analytic.cm, measured.cm);
    append_streams(out, "pm", analytic.pm, measured.pm);
}

void write_trace_csv(const std::string &path, const std::vector<double> &surrogate_trace,
                     const std::vector<double> &true_wsr_trace)
{
    if (surrogate_trace.size() != true_wsr_trace.size())
        throw DimensionMismatch("trace CSV: trace lengths differ");
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open for writing: " + path);
    out << "iteration,surrogate_optimum,true_wsr\n";
    char line[96];
    for (std::size_t n = 0; n < surrogate_trace.size(); ++n)
    {
        std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g\n", n + 1, surrogate_trace[n],
                      true_wsr_trace[n]);
        out << line;
    }
}

} // namespace sdrsma
