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

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdrsma/sim.hpp"

namespace
{

std::vector<std::string> split_list(const std::string &text)
{
    std::vector<std::string> items;
    std::string current;
    for (char c : text)
    {
        if (c == ',')
        {
            if (!current.empty())
                items.push_back(current);
            current.clear();
        }
        else
            current += c;
    }
    if (!current.empty())
        items.push_back(current);
    return items;
}

void print_summary(const sdrsma::SimResult &result)
{
    std::printf("%-20s %8s %-10s %12s %10s %7s %-12s\n", "scheme", "pt_dbm", "csi",
                "mean_sr_bpcu", "ci", "trials", "winner_mode");
    for (const auto &cell : result.cells)
    {
        if (!cell.error.empty())
        {
            std::printf("%-20s %8.6g %-10s aborted: %s\n", sdrsma::to_string(cell.scheme).c_str(),
                        cell.pt_dbm, sdrsma::to_string(cell.csi).c_str(), cell.error.c_str());
            continue;
        }
        std::printf("%-20s %8.6g %-10s %12.4f %10.4f %7zu %-12s%s\n",
                    sdrsma::to_string(cell.scheme).c_str(), cell.pt_dbm,
                    sdrsma::to_string(cell.csi).c_str(), cell.mean_sr, cell.ci_halfwidth,
                    cell.trials, cell.subset_winner_mode.c_str(),
                    cell.ci_target_met ? "" : "  [trial cap]");
    }
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Monte-Carlo sum-rate study for simultaneously diagonalized MIMO "
                 "rate-splitting multiple access"};

    std::string config_path, out_dir = "results", schemes_arg, csi_arg;
    std::vector<double> pt_dbm;
    std::uint64_t seed = 0;
    bool seed_set = false, have_max_trials = false, have_ci = false, have_threads = false;
    std::size_t max_trials = 0;
    double ci_bpcu = 0.0;
    unsigned threads = 0;

    app.add_option("--config", config_path, "JSON config file (flags override its keys)");
    app.add_option("--out", out_dir, "output directory for results.csv and plot_data.json");
    app.add_option("--seed", seed, "master seed")->each([&](const std::string &) {
        seed_set = true;
    });
    app.add_option("--schemes", schemes_arg,
                   "comma list: sd-rsma-exclusion,sd-rsma-full,bd-baseline");
    app.add_option("--pt-dbm", pt_dbm, "transmit power sweep in dBm")->expected(-1);
    app.add_option("--csi", csi_arg, "perfect, imperfect, or both");
    app.add_option("--max-trials", max_trials, "trial cap per cell")
        ->each([&](const std::string &) { have_max_trials = true; });
    app.add_option("--ci-bpcu", ci_bpcu, "target confidence half-width in bits per channel use")
        ->each([&](const std::string &) { have_ci = true; });
    app.add_option("--threads", threads, "worker threads for independent trials")
        ->each([&](const std::string &) { have_threads = true; });

    CLI11_PARSE(app, argc, argv);

    try
    {
        sdrsma::SimConfig cfg;
        if (!config_path.empty())
            cfg = sdrsma::load_sim_config(config_path);
        else
        {
            // Paper-style default scenario: 4 users, 4 antennas each, 16 BS
            // antennas, equal 50 m distances, correlated channels.
            cfg.channel.num_users = 4;
            cfg.channel.rx_antennas = {4, 4, 4, 4};
            cfg.channel.tx_antennas = 16;
            cfg.channel.distances_m = {50, 50, 50, 50};
            cfg.channel.correlation = 0.8;
            cfg.channel.csi_error_var = 0.1;
        }

        if (seed_set)
            cfg.master_seed = seed;
        if (!pt_dbm.empty())
            cfg.pt_dbm = pt_dbm;
        if (!schemes_arg.empty())
        {
            cfg.schemes.clear();
            for (const std::string &name : split_list(schemes_arg))
                cfg.schemes.push_back(sdrsma::scheme_from_string(name));
        }
        if (!csi_arg.empty())
        {
            if (csi_arg == "both")
                cfg.csi_modes = {sdrsma::CsiMode::Perfect, sdrsma::CsiMode::Imperfect};
            else
                cfg.csi_modes = {sdrsma::csi_mode_from_string(csi_arg)};
        }
        if (have_max_trials)
            cfg.max_trials = max_trials;
        if (have_ci)
            cfg.ci_halfwidth = ci_bpcu;
        if (have_threads)
            cfg.threads = threads;

        sdrsma::SimResult result = sdrsma::run_experiment(cfg);
        sdrsma::emit_outputs(result, out_dir);
        print_summary(result);
        std::printf("wrote %s/results.csv and %s/plot_data.json\n", out_dir.c_str(),
                    out_dir.c_str());

        for (const auto &cell : result.cells)
            if (!cell.error.empty())
            {
                nlohmann::json err{{"error", "cell aborted"},
                                   {"scheme", sdrsma::to_string(cell.scheme)},
                                   {"pt_dbm", cell.pt_dbm},
                                   {"csi", sdrsma::to_string(cell.csi)},
                                   {"detail", cell.error}};
                std::cerr << err.dump() << '\n';
                return 2;
            }
        return 0;
    }
    catch (const std::exception &e)
    {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << '\n';
        return 1;
    }
}
