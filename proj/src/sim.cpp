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

#include "sdrsma/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

namespace sdrsma
{

std::string to_string(Scheme scheme)
{
    switch (scheme)
    {
    case Scheme::SdRsmaExclusion:
        return "sd-rsma-exclusion";
    case Scheme::SdRsmaFull:
        return "sd-rsma-full";
    case Scheme::BdBaseline:
        return "bd-baseline";
    }
    return "unknown";
}

std::string to_string(CsiMode mode)
{
    return mode == CsiMode::Perfect ? "perfect" : "imperfect";
}

Scheme scheme_from_string(const std::string &name)
{
    if (name == "sd-rsma-exclusion")
        return Scheme::SdRsmaExclusion;
    if (name == "sd-rsma-full")
        return Scheme::SdRsmaFull;
    if (name == "bd-baseline")
        return Scheme::BdBaseline;
    throw ConfigError("unknown scheme: " + name);
}

CsiMode csi_mode_from_string(const std::string &name)
{
    if (name == "perfect")
        return CsiMode::Perfect;
    if (name == "imperfect")
        return CsiMode::Imperfect;
    throw ConfigError("unknown CSI mode: " + name);
}

void validate(const SimConfig &cfg)
{
    sdrsma::validate(cfg.channel);
    if (cfg.pt_dbm.empty())
        throw ConfigError("sim config: need at least one transmit power");
    if (cfg.schemes.empty())
        throw ConfigError("sim config: need at least one scheme");
    if (cfg.csi_modes.empty())
        throw ConfigError("sim config: need at least one CSI mode");
    if (!(cfg.ci_halfwidth > 0.0))
        throw ConfigError("sim config: CI half-width target must be positive");
    if (!(cfg.ci_confidence > 0.0 && cfg.ci_confidence < 1.0))
        throw ConfigError("sim config: confidence level must lie in (0, 1)");
    if (cfg.min_trials < 2)
        throw ConfigError("sim config: need at least two trials for a CI");
    if (cfg.max_trials < cfg.min_trials)
        throw ConfigError("sim config: max trials below min trials");
    if (!cfg.weights.empty() && cfg.weights.size() != cfg.channel.num_users)
        throw ConfigError("sim config: weights must list one entry per user");
    if (cfg.threads == 0)
        throw ConfigError("sim config: thread count must be positive");
}

double student_t_halfwidth(const std::vector<double> &samples, double confidence)
{
    const std::size_t n = samples.size();
    if (n < 2)
        return std::numeric_limits<double>::infinity();
    double mean = 0.0;
    for (double s : samples)
        mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double s : samples)
        var += (s - mean) * (s - mean);
    var /= static_cast<double>(n - 1);

    boost::math::students_t dist(static_cast<double>(n - 1));
    const double quantile = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    return quantile * std::sqrt(var / static_cast<double>(n));
}

namespace
{

struct TrialOutcome
{
    double sr_exclusion = 0.0;
    double sr_full = 0.0;
    double sr_baseline = 0.0;
    std::string winner;
};

TrialOutcome run_trial(const SimConfig &cfg, double pt_dbm, CsiMode csi, std::size_t trial)
{
    ChannelConfig channel_cfg = cfg.channel;
    channel_cfg.seed = derive_stream_seed(cfg.master_seed, trial);
    if (csi == CsiMode::Perfect)
        channel_cfg.csi_error_var = 0.0;

    const ChannelSet channels = generate_channels(channel_cfg);

    arma::vec weights;
    if (cfg.weights.empty())
        weights = arma::vec(cfg.channel.num_users,
                            arma::fill::value(1.0 / static_cast<double>(cfg.channel.num_users)));
    else
        weights = arma::vec(cfg.weights);

    ScaOptions options;
    options.tolerance = cfg.sca_tolerance;
    options.max_iterations = cfg.sca_max_iterations;

    const bool use_estimated = (csi == CsiMode::Imperfect);
    SubsetSearchResult search =
        subset_search(channels, weights, dbm_to_linear(pt_dbm), options, use_estimated, true);

    TrialOutcome outcome;
    outcome.winner = search.winner.to_string();
    const CommonGroup full = CommonGroup::all(channels.num_users);
    const CommonGroup none = CommonGroup::none();
    bool found_full = false, found_none = false, found_winner = false;
    for (const SubsetScore &score : search.table)
    {
        if (score.group == full)
        {
            outcome.sr_full = score.sum_rate;
            found_full = true;
        }
        if (score.group == none)
        {
            outcome.sr_baseline = score.sum_rate;
            found_none = true;
        }
        if (score.group == search.winner)
        {
            outcome.sr_exclusion = score.sum_rate;
            found_winner = true;
        }
    }
    if (!found_full || !found_none || !found_winner)
        throw Error("subset search table is missing a required candidate");
    return outcome;
}

} // namespace

SimResult run_experiment(const SimConfig &cfg)
{
    validate(cfg);

    SimResult result;
    result.config = cfg;

    for (double pt : cfg.pt_dbm)
        for (CsiMode csi : cfg.csi_modes)
        {
            const auto started = std::chrono::steady_clock::now();

            std::vector<TrialOutcome> outcomes;
            outcomes.reserve(cfg.max_trials);
            std::string failure;

            auto cells_done = [&]() {
                if (outcomes.size() < cfg.min_trials)
                    return false;
                for (Scheme scheme : cfg.schemes)
                {
                    std::vector<double> samples;
                    samples.reserve(outcomes.size());
                    for (const TrialOutcome &o : outcomes)
                        samples.push_back(scheme == Scheme::SdRsmaExclusion ? o.sr_exclusion
                                          : scheme == Scheme::SdRsmaFull    ? o.sr_full
                                                                            : o.sr_baseline);
                    if (student_t_halfwidth(samples, cfg.ci_confidence) > cfg.ci_halfwidth)
                        return false;
                }
                return true;
            };

            try
            {
                while (outcomes.size() < cfg.max_trials && !cells_done())
                {
                    const std::size_t batch =
                        std::min<std::size_t>(cfg.threads, cfg.max_trials - outcomes.size());
                    if (batch == 1)
                        outcomes.push_back(run_trial(cfg, pt, csi, outcomes.size()));
                    else
                    {
                        std::vector<std::future<TrialOutcome>> futures;
                        futures.reserve(batch);
                        const std::size_t base = outcomes.size();
                        for (std::size_t b = 0; b < batch; ++b)
                            futures.push_back(std::async(std::launch::async, run_trial,
                                                         std::cref(cfg), pt, csi, base + b));
                        for (auto &f : futures)
                            outcomes.push_back(f.get());
                    }
                }
            }
            catch (const std::exception &e)
            {
                failure = e.what();
            }

            const double runtime =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                    .count();

            for (Scheme scheme : cfg.schemes)
            {
                CellResult cell;
                cell.scheme = scheme;
                cell.pt_dbm = pt;
                cell.csi = csi;
                cell.runtime_seconds = runtime;
                cell.error = failure;

                for (const TrialOutcome &o : outcomes)
                {
                    cell.samples.push_back(scheme == Scheme::SdRsmaExclusion ? o.sr_exclusion
                                           : scheme == Scheme::SdRsmaFull    ? o.sr_full
                                                                             : o.sr_baseline);
                    if (scheme == Scheme::SdRsmaExclusion)
                        ++cell.subset_wins[o.winner];
                }
                cell.trials = cell.samples.size();
                if (cell.trials > 0)
                {
                    double mean = 0.0;
                    for (double s : cell.samples)
                        mean += s;
                    cell.mean_sr = mean / static_cast<double>(cell.trials);
                    cell.ci_halfwidth = student_t_halfwidth(cell.samples, cfg.ci_confidence);
                    cell.ci_target_met = cell.ci_halfwidth <= cfg.ci_halfwidth;
                }

                switch (scheme)
                {
                case Scheme::SdRsmaExclusion:
                {
                    std::size_t best = 0;
                    for (const auto &[name, count] : cell.subset_wins)
                        if (count > best ||
                            (count == best && name < cell.subset_winner_mode))
                        {
                            best = count;
                            cell.subset_winner_mode = name;
                        }
                    if (cell.subset_wins.empty())
                        cell.subset_winner_mode = "none";
                    break;
                }
                case Scheme::SdRsmaFull:
                    cell.subset_winner_mode =
                        CommonGroup::all(cfg.channel.num_users).to_string();
                    break;
                case Scheme::BdBaseline:
                    cell.subset_winner_mode = "none";
                    break;
                }

                result.cells.push_back(std::move(cell));
            }
        }

    return result;
}

void write_csv(const SimResult &result, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open for writing: " + path);
    out << "scheme,pt_dbm,csi_mode,mean_sr_bpcu,ci_halfwidth,trials,subset_winner_mode\n";
    char line[256];
    for (const CellResult &cell : result.cells)
    {
        std::snprintf(line, sizeof(line), "%s,%.12g,%s,%.12g,%.12g,%zu,%s\n",
                      to_string(cell.scheme).c_str(), cell.pt_dbm,
                      to_string(cell.csi).c_str(), cell.mean_sr, cell.ci_halfwidth, cell.trials,
                      cell.subset_winner_mode.c_str());
        out << line;
    }
}

void write_plot_json(const SimResult &result, const std::string &path)
{
    nlohmann::json series = nlohmann::json::array();
    for (Scheme scheme : result.config.schemes)
        for (CsiMode csi : result.config.csi_modes)
        {
            nlohmann::json s;
            s["scheme"] = to_string(scheme);
            s["csi_mode"] = to_string(csi);
            s["x_pt_dbm"] = nlohmann::json::array();
            s["y_mean_sr_bpcu"] = nlohmann::json::array();
            s["ci_halfwidth"] = nlohmann::json::array();
            for (const CellResult &cell : result.cells)
                if (cell.scheme == scheme && cell.csi == csi)
                {
                    s["x_pt_dbm"].push_back(cell.pt_dbm);
                    s["y_mean_sr_bpcu"].push_back(cell.mean_sr);
                    s["ci_halfwidth"].push_back(cell.ci_halfwidth);
                }
            series.push_back(std::move(s));
        }
    nlohmann::json j;
    j["series"] = std::move(series);

    std::ofstream out(path);
    if (!out)
        throw Error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

void emit_outputs(const SimResult &result, const std::string &out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw Error("cannot create output directory " + out_dir + ": " + ec.message());
    write_csv(result, out_dir + "/results.csv");
    write_plot_json(result, out_dir + "/plot_data.json");
}

SimConfig load_sim_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError("config file " + path + ": " + e.what());
    }

    SimConfig cfg;
    try
    {
        if (j.contains("channel"))
        {
            const auto &c = j["channel"];
            if (c.contains("users"))
                cfg.channel.num_users = c["users"].get<arma::uword>();
            if (c.contains("rx_antennas"))
                cfg.channel.rx_antennas = c["rx_antennas"].get<std::vector<arma::uword>>();
            if (c.contains("tx_antennas"))
                cfg.channel.tx_antennas = c["tx_antennas"].get<arma::uword>();
            if (c.contains("distances_m"))
                cfg.channel.distances_m = c["distances_m"].get<std::vector<double>>();
            if (c.contains("correlation"))
                cfg.channel.correlation = c["correlation"].get<double>();
            if (c.contains("csi_error_var"))
                cfg.channel.csi_error_var = c["csi_error_var"].get<double>();
            if (c.contains("noise_dbm"))
                cfg.channel.noise_dbm = c["noise_dbm"].get<double>();
        }
        if (j.contains("pt_dbm"))
            cfg.pt_dbm = j["pt_dbm"].get<std::vector<double>>();
        if (j.contains("schemes"))
        {
            cfg.schemes.clear();
            for (const auto &name : j["schemes"])
                cfg.schemes.push_back(scheme_from_string(name.get<std::string>()));
        }
        if (j.contains("csi"))
        {
            const std::string mode = j["csi"].get<std::string>();
            if (mode == "both")
                cfg.csi_modes = {CsiMode::Perfect, CsiMode::Imperfect};
            else
                cfg.csi_modes = {csi_mode_from_string(mode)};
        }
        if (j.contains("weights"))
            cfg.weights = j["weights"].get<std::vector<double>>();
        if (j.contains("sca_tolerance"))
            cfg.sca_tolerance = j["sca_tolerance"].get<double>();
        if (j.contains("sca_max_iterations"))
            cfg.sca_max_iterations = j["sca_max_iterations"].get<arma::uword>();
        if (j.contains("max_trials"))
            cfg.max_trials = j["max_trials"].get<std::size_t>();
        if (j.contains("min_trials"))
            cfg.min_trials = j["min_trials"].get<std::size_t>();
        if (j.contains("ci_halfwidth_bpcu"))
            cfg.ci_halfwidth = j["ci_halfwidth_bpcu"].get<double>();
        if (j.contains("ci_confidence"))
            cfg.ci_confidence = j["ci_confidence"].get<double>();
        if (j.contains("seed"))
            cfg.master_seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads"))
            cfg.threads = j["threads"].get<unsigned>();
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    return cfg;
}

std::string sim_config_to_json(const SimConfig &cfg)
{
    nlohmann::json j;
    j["channel"]["users"] = cfg.channel.num_users;
    j["channel"]["rx_antennas"] = cfg.channel.rx_antennas;
    j["channel"]["tx_antennas"] = cfg.channel.tx_antennas;
    j["channel"]["distances_m"] = cfg.channel.distances_m;
    j["channel"]["correlation"] = cfg.channel.correlation;
    j["channel"]["csi_error_var"] = cfg.channel.csi_error_var;
    j["channel"]["noise_dbm"] = cfg.channel.noise_dbm;
    j["pt_dbm"] = cfg.pt_dbm;
    j["schemes"] = nlohmann::json::array();
    for (Scheme s : cfg.schemes)
        j["schemes"].push_back(to_string(s));
    if (cfg.csi_modes.size() == 2)
        j["csi"] = "both";
    else
        j["csi"] = to_string(cfg.csi_modes.front());
    j["weights"] = cfg.weights;
    j["sca_tolerance"] = cfg.sca_tolerance;
    j["sca_max_iterations"] = cfg.sca_max_iterations;
    j["max_trials"] = cfg.max_trials;
    j["min_trials"] = cfg.min_trials;
    j["ci_halfwidth_bpcu"] = cfg.ci_halfwidth;
    j["ci_confidence"] = cfg.ci_confidence;
    j["seed"] = cfg.master_seed;
    j["threads"] = cfg.threads;
    return j.dump(2);
}

} // namespace sdrsma
