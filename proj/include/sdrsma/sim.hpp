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

#ifndef sdrsma_sim_H
#define sdrsma_sim_H

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sdrsma/channel.hpp"
#include "sdrsma/sca.hpp"

namespace sdrsma
{

enum class Scheme
{
    SdRsmaExclusion, // subset search over common groups, no-CM candidate included
    SdRsmaFull,      // all users decode the common message
    BdBaseline       // no common message (plain block diagonalization)
};

enum class CsiMode
{
    Perfect,
    Imperfect
};

std::string to_string(Scheme scheme);
std::string to_string(CsiMode mode);
Scheme scheme_from_string(const std::string &name);     // throws ConfigError
CsiMode csi_mode_from_string(const std::string &name);  // throws ConfigError

// Declarative Monte-Carlo experiment over transmit powers, schemes and CSI
// modes. Stopping per cell: Student-t confidence half-width at the given
// level below the target, after at least min_trials trials, capped at
// max_trials (capped cells are flagged in the result).
struct SimConfig
{
    ChannelConfig channel;          // its seed field is ignored; see master_seed
    std::vector<double> pt_dbm = {10, 15, 20, 25, 30, 35, 40};
    std::vector<Scheme> schemes = {Scheme::SdRsmaExclusion, Scheme::SdRsmaFull,
                                   Scheme::BdBaseline};
    std::vector<CsiMode> csi_modes = {CsiMode::Perfect};
    std::vector<double> weights;    // empty: uniform 1/K
    double sca_tolerance = 1e-6;
    arma::uword sca_max_iterations = 500;
    std::size_t max_trials = 200;
    std::size_t min_trials = 10;
    double ci_halfwidth = 0.5;      // target half-width, bits per channel use
    double ci_confidence = 0.95;
    std::uint64_t master_seed = 1;
    unsigned threads = 1;
};

void validate(const SimConfig &cfg); // throws ConfigError

struct CellResult
{
    Scheme scheme = Scheme::BdBaseline;
    double pt_dbm = 0.0;
    CsiMode csi = CsiMode::Perfect;

    double mean_sr = 0.0;       // bits per channel use
    double ci_halfwidth = 0.0;  // at the configured confidence level
    std::size_t trials = 0;
    bool ci_target_met = false; // false: stopped by the trial cap instead
    std::vector<double> samples;                 // per-trial sum rates
    std::map<std::string, std::size_t> subset_wins; // winning-group histogram
    std::string subset_winner_mode;              // modal winning group
    double runtime_seconds = 0.0;
    std::string error;                           // nonempty: cell aborted
};

struct SimResult
{
    SimConfig config;
    std::vector<CellResult> cells;
};

// Student-t confidence half-width of the sample mean.
double student_t_halfwidth(const std::vector<double> &samples, double confidence);

// Runs the full sweep. Per trial one subset search covers all three schemes:
// the exclusion scheme takes the winner, the full and baseline schemes read
// their table entries. Per-trial seeds are pre-assigned from the master
// seed, so single-threaded reruns are bit-identical and thread counts only
// affect scheduling. Errors abort the affected cells with a diagnostic, not
// the whole run.
SimResult run_experiment(const SimConfig &cfg);

// CSV: scheme,pt_dbm,csi_mode,mean_sr_bpcu,ci_halfwidth,trials,subset_winner_mode
void write_csv(const SimResult &result, const std::string &path);

// Plot data: one JSON series per (scheme, csi_mode) with x = P_T dBm and
// y = mean sum rate.
void write_plot_json(const SimResult &result, const std::string &path);

// Writes results.csv and plot_data.json under out_dir (created when absent).
void emit_outputs(const SimResult &result, const std::string &out_dir);

// Config file I/O (JSON; documented in the README). CLI flags override.
SimConfig load_sim_config(const std::string &path);
std::string sim_config_to_json(const SimConfig &cfg);

} // namespace sdrsma

#endif
