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

#ifndef sdrsma_serialize_H
#define sdrsma_serialize_H

#include <string>
#include <vector>

#include "sdrsma/channel.hpp"
#include "sdrsma/precoder.hpp"
#include "sdrsma/rate_engine.hpp"

namespace sdrsma
{

// JSON conventions: complex entries as [re, im] pairs, matrices row-major as
// {"rows": r, "cols": c, "data": [[re, im], ...]}.

std::string channel_set_to_json(const ChannelSet &set);
ChannelSet channel_set_from_json(const std::string &text);

void save_channel_set(const ChannelSet &set, const std::string &path);
ChannelSet load_channel_set(const std::string &path);

std::string precoder_set_to_json(const PrecoderSet &set);
std::string rate_report_to_json(const RateReport &report);

// One row per stream: stream id, analytic SINR, measured SINR.
void write_oracle_csv(const std::string &path, const SinrReport &analytic,
                      const SinrReport &measured);

// One row per iteration: iteration, surrogate optimum, true WSR.
void write_trace_csv(const std::string &path, const std::vector<double> &surrogate_trace,
                     const std::vector<double> &true_wsr_trace);

} // namespace sdrsma

#endif
