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

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "sdrsma/sca.hpp"

using namespace sdrsma;

namespace
{

struct Built
{
    ChannelSet channels;
    CommonGroup group;
    CommonPrecoderParts common;
    PrivatePrecoderParts priv;
    WsrInstance instance;
};

Built build_instance(const ChannelConfig &cfg, const CommonGroup &group, const arma::vec &weights,
                     double total_power)
{
    Built b;
    b.channels = generate_channels(cfg);
    b.group = group;
    if (!group.empty())
        b.common = build_common_precoder(b.channels, group, false);
    b.priv = build_private_precoders(b.channels, false);
    const PowerAllocation zero =
        PowerAllocation::zeros(group.stream_count(b.channels.rx_antennas), b.channels.rx_antennas);
    const PrecoderSet directions =
        assemble(b.channels, group, b.common, b.priv, zero, false, total_power);
    b.instance = WsrInstance::build(directions, b.channels, weights, total_power);
    return b;
}

PowerAllocation feasible_point(const Built &b, double budget_share, std::uint64_t seed)
{
    return test::random_powers(b.channels, b.group, b.common.power_cost,
                               budget_share * b.instance.total_power, seed);
}

} // namespace

TEST_CASE("surrogate is tight at the anchor and a lower bound elsewhere")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        const Built b = build_instance(test::paper_config(200 + seed, 0.8),
                                       (seed % 2) ? CommonGroup::all(4) : CommonGroup::of({0, 2}),
                                       w, 1000.0);
        const PowerAllocation anchor = feasible_point(b, 0.5, 300 + seed);
        const PowerAllocation point = feasible_point(b, 0.9, 400 + seed);

        const arma::vec x_anchor = b.instance.pack(anchor);
        const arma::vec x_point = b.instance.pack(point);
        const WsrInstance::Anchor lin = b.instance.make_anchor(x_anchor);

        const double at_anchor = b.instance.surrogate_objective(x_anchor, lin);
        const double truth_anchor = b.instance.true_wsr(x_anchor);
        REQUIRE(std::abs(at_anchor - truth_anchor) <= 1e-9 * (1.0 + std::abs(truth_anchor)));

        const double at_point = b.instance.surrogate_objective(x_point, lin);
        const double truth_point = b.instance.true_wsr(x_point);
        REQUIRE(at_point <= truth_point + 1e-9 * (1.0 + std::abs(truth_point)));
    }
}

TEST_CASE("per-stream surrogates reduce to closed forms in degenerate cases")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    const Built b = build_instance(test::paper_config(210, 0.8), CommonGroup::of({0, 1}), w,
                                   1000.0);
    const PowerAllocation zero = PowerAllocation::zeros(4, b.channels.rx_antennas);

    SECTION("zero anchor: linearization denominator is noise-only")
    {
        PowerAllocation point = feasible_point(b, 0.8, 211);
        const std::size_t m = 0; // member position of user 0
        for (arma::uword l = 0; l < 4; ++l)
        {
            const double interference =
                arma::dot(b.instance.cm_coupling[m].row(l), point.per_user[0]);
            const double noise = b.instance.cm_noise[m](l);
            const double total =
                interference + noise + b.instance.cm_signal[m](l) * point.common(l);
            const double expected =
                std::log2(total) - interference / (std::log(2.0) * noise) - std::log2(noise);
            REQUIRE(surrogate_common_rate(b.instance, point, zero, 0, l) ==
                    Catch::Approx(expected).epsilon(1e-12));
        }
    }

    SECTION("no private interference anywhere: surrogate equals the true rate")
    {
        PowerAllocation point = feasible_point(b, 0.8, 212);
        for (auto &q : point.per_user)
            q.zeros();
        for (arma::uword l = 0; l < 4; ++l)
        {
            const double expected = std::log2(
                1.0 + b.instance.cm_signal[0](l) * point.common(l) / b.instance.cm_noise[0](l));
            REQUIRE(surrogate_common_rate(b.instance, point, zero, 0, l) ==
                    Catch::Approx(expected).epsilon(1e-12));
        }
    }

    SECTION("member private surrogate equals the exact rate")
    {
        const PowerAllocation anchor = feasible_point(b, 0.4, 213);
        const PowerAllocation point = feasible_point(b, 0.8, 214);
        for (arma::uword k : b.group.users)
            for (arma::uword l = 0; l < 2; ++l)
            {
                const double expected =
                    std::log2(1.0 + b.instance.pm_signal[k](l) * point.per_user[k](l) /
                                        b.instance.noise_power);
                REQUIRE(surrogate_private_rate(b.instance, point, anchor, k, l) ==
                        Catch::Approx(expected).epsilon(1e-12));
            }
    }

    SECTION("zero common power at anchor and point: non-member surrogate is exact")
    {
        PowerAllocation point = feasible_point(b, 0.8, 215);
        point.common.zeros();
        for (arma::uword k : {arma::uword(2), arma::uword(3)})
            for (arma::uword l = 0; l < 2; ++l)
            {
                const double expected =
                    std::log2(1.0 + b.instance.pm_signal[k](l) * point.per_user[k](l) /
                                        b.instance.noise_power);
                REQUIRE(surrogate_private_rate(b.instance, point, zero, k, l) ==
                        Catch::Approx(expected).epsilon(1e-12));
            }
    }

    SECTION("negative powers are rejected")
    {
        PowerAllocation bad = feasible_point(b, 0.5, 216);
        bad.common(1) = -1.0;
        REQUIRE_THROWS_AS(surrogate_common_rate(b.instance, bad, zero, 0, 0), DomainError);
    }
}

TEST_CASE("surrogate objective gradient matches finite differences")
{
    // Singleton group keeps the objective smooth (no min kinks).
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    const Built b =
        build_instance(test::paper_config(220, 0.0), CommonGroup::of({1}), w, 1000.0);
    const PowerAllocation anchor = feasible_point(b, 0.3, 221);
    const arma::vec x_anchor = b.instance.pack(anchor);
    const WsrInstance::Anchor lin = b.instance.make_anchor(x_anchor);

    const arma::vec x = b.instance.pack(feasible_point(b, 0.6, 222));
    arma::vec grad;
    b.instance.surrogate_objective(x, lin, &grad);

    for (arma::uword i = 0; i < x.n_elem; ++i)
    {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        arma::vec hi = x, lo = x;
        hi(i) += h;
        lo(i) -= h;
        const double fd = (b.instance.surrogate_objective(hi, lin) -
                           b.instance.surrogate_objective(lo, lin)) /
                          (2.0 * h);
        REQUIRE(grad(i) == Catch::Approx(fd).epsilon(1e-5).margin(1e-10));
    }
}

TEST_CASE("surrogate objective is concave along random directions")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    const Built b =
        build_instance(test::paper_config(230, 0.8), CommonGroup::all(4), w, 1000.0);
    const PowerAllocation anchor = feasible_point(b, 0.3, 231);
    const arma::vec x_anchor = b.instance.pack(anchor);
    const WsrInstance::Anchor lin = b.instance.make_anchor(x_anchor);

    std::mt19937_64 rng(232);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const arma::vec x = b.instance.pack(feasible_point(b, 0.5, 233));
    for (int trial = 0; trial < 50; ++trial)
    {
        arma::vec direction(x.n_elem);
        for (auto &d : direction)
            d = unit(rng) - 0.5;
        direction /= arma::norm(direction);
        const double h = 1.0;
        const double mid = b.instance.surrogate_objective(x, lin);
        const double plus = b.instance.surrogate_objective(
            arma::clamp(x + h * direction, 0.0, 1e12), lin);
        const double minus = b.instance.surrogate_objective(
            arma::clamp(x - h * direction, 0.0, 1e12), lin);
        // Second difference of a concave function is nonpositive. Clamping
        // only makes the test direction piecewise linear, which preserves
        // concavity along it.
        REQUIRE(plus + minus - 2.0 * mid <= 1e-9);
    }
}

TEST_CASE("inner solver puts all power on a lone private stream")
{
    ChannelConfig cfg = test::small_config(240, 1, 1);
    const arma::vec w{1.0};
    const Built b = build_instance(cfg, CommonGroup::none(), w, 25.0);

    const PowerAllocation zero = PowerAllocation::zeros(0, b.channels.rx_antennas);
    const InnerSolution sol = solve_inner(b.instance, zero);

    REQUIRE(sol.powers.per_user[0](0) == Catch::Approx(25.0).epsilon(1e-8));
    const double expected =
        std::log2(1.0 + b.instance.pm_signal[0](0) * 25.0 / b.instance.noise_power);
    REQUIRE(sol.objective == Catch::Approx(expected).epsilon(1e-8));
}

TEST_CASE("inner solver matches a dense grid on a two-variable problem")
{
    // One user, one common stream, one private stream.
    ChannelConfig cfg = test::small_config(241, 1, 1);
    const arma::vec w{1.0};
    const double budget = 10.0;
    const Built b = build_instance(cfg, CommonGroup::of({0}), w, budget);

    const PowerAllocation zero = PowerAllocation::zeros(1, b.channels.rx_antennas);
    const InnerSolution sol = solve_inner(b.instance, zero);

    // Independent surrogate formula around the zero anchor, maximized on a
    // grid with resolution 1e-4 * budget along each axis.
    const double cost = b.instance.cost(0);
    const double a = b.instance.cm_signal[0](0);
    const double coupling = b.instance.cm_coupling[0](0, 0);
    const double noise_cm = b.instance.cm_noise[0](0);
    const double s = b.instance.pm_signal[0](0);
    const double noise = b.instance.noise_power;
    const double vc = b.instance.cm_weight;

    double best = -1e300;
    const double step = 1e-4 * budget;
    for (double pc = 0.0; pc * cost <= budget + 1e-12; pc += step / cost)
    {
        const double q_max = budget - pc * cost;
        for (double q = 0.0; q <= q_max + 1e-12; q += step)
        {
            const double cm = std::log2(coupling * q + noise_cm + a * pc) -
                              coupling * q / (std::log(2.0) * noise_cm) - std::log2(noise_cm);
            const double pm = std::log2(1.0 + s * q / noise);
            best = std::max(best, vc * cm + 1.0 * pm);
        }
    }
    REQUIRE(sol.objective == Catch::Approx(best).margin(1e-3));
    REQUIRE(sol.objective >= best - 1e-3);
}

TEST_CASE("inner solver keeps the returned point feasible")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const Built b = build_instance(test::paper_config(250 + seed, 0.8),
                                       CommonGroup::all(4), w, 1000.0);
        const PowerAllocation anchor = feasible_point(b, 0.2, 260 + seed);
        const InnerSolution sol = solve_inner(b.instance, anchor);
        const double used = arma::dot(b.instance.cost, b.instance.pack(sol.powers));
        REQUIRE(used <= 1000.0 * (1.0 + 1e-8));
        REQUIRE(b.instance.pack(sol.powers).min() >= 0.0);
        // Warm start from the anchor: never below the anchor value.
        const WsrInstance::Anchor lin = b.instance.make_anchor(b.instance.pack(anchor));
        REQUIRE(sol.objective >=
                b.instance.surrogate_objective(b.instance.pack(anchor), lin) - 1e-12);
    }
}

TEST_CASE("successive approximation converges with a monotone trace")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const double alpha = (seed % 2) ? 0.8 : 0.0;
        const ChannelSet channels = generate_channels(test::paper_config(270 + seed, alpha));
        ScaOptions options;
        options.tolerance = 1e-6;
        const ScaRun run = run_sca(channels, CommonGroup::all(4), w, 1000.0, options, false);

        REQUIRE(run.iterations <= 500);
        for (std::size_t n = 1; n < run.surrogate_trace.size(); ++n)
            REQUIRE(run.surrogate_trace[n] >= run.surrogate_trace[n - 1] - 1e-9);

        // Lower-bound sandwich at the returned point.
        REQUIRE(run.true_wsr_trace.back() >= run.surrogate_trace.back() - 1e-6);
        REQUIRE(run.report.weighted_sum_rate ==
                Catch::Approx(run.true_wsr_trace.back()).epsilon(1e-9));

        // The returned precoder satisfies the budget.
        const double used = run.powers.weighted_total(run.precoder.common.power_cost);
        REQUIRE(used <= 1000.0 * (1.0 + 1e-6));
    }
}

TEST_CASE("zero budget terminates in one iteration with zero rates")
{
    const arma::vec w{0.5, 0.5};
    const ChannelSet channels = generate_channels(test::small_config(280, 2, 2));
    const ScaRun run = run_sca(channels, CommonGroup::of({0, 1}), w, 0.0);
    REQUIRE(run.iterations == 1);
    REQUIRE(run.report.sum_rate == 0.0);
    REQUIRE(arma::accu(run.powers.common) == 0.0);
}

TEST_CASE("tiny instance reaches the grid-search optimum within one percent")
{
    // Two single-antenna users, both decoding the common message: three
    // power variables in total.
    ChannelConfig cfg = test::small_config(281, 2, 1);
    const arma::vec w{0.5, 0.5};
    const double budget = 10.0;
    const Built b = build_instance(cfg, CommonGroup::of({0, 1}), w, budget);

    ScaOptions options;
    options.tolerance = 1e-8;
    const ScaRun run = run_sca(b.channels, b.group, b.common, b.priv, w, budget, options, false);

    // Independent true-WSR oracle on a refining grid.
    const double cost = b.instance.cost(0);
    auto truth = [&](double pc, double q0, double q1) {
        double cm = 1e300;
        const double qs[2] = {q0, q1};
        for (std::size_t m = 0; m < 2; ++m)
        {
            const double denom =
                b.instance.cm_coupling[m](0, 0) * qs[m] + b.instance.cm_noise[m](0);
            cm = std::min(cm, std::log2(1.0 + b.instance.cm_signal[m](0) * pc / denom));
        }
        const double pm0 = std::log2(1.0 + b.instance.pm_signal[0](0) * q0 / b.instance.noise_power);
        const double pm1 = std::log2(1.0 + b.instance.pm_signal[1](0) * q1 / b.instance.noise_power);
        return b.instance.cm_weight * cm + 0.5 * pm0 + 0.5 * pm1;
    };

    double best = -1e300;
    double c_pc = budget / (2.0 * cost), c_q0 = budget / 2.0, c_q1 = budget / 2.0;
    double radius = budget;
    for (int pass = 0; pass < 4; ++pass)
    {
        const int samples = 48;
        double best_pc = c_pc, best_q0 = c_q0, best_q1 = c_q1;
        for (int i = 0; i <= samples; ++i)
            for (int j = 0; j <= samples; ++j)
                for (int k = 0; k <= samples; ++k)
                {
                    const double pc =
                        std::max(0.0, c_pc + radius * (2.0 * i / samples - 1.0) / cost);
                    const double q0 = std::max(0.0, c_q0 + radius * (2.0 * j / samples - 1.0));
                    const double q1 = std::max(0.0, c_q1 + radius * (2.0 * k / samples - 1.0));
                    if (cost * pc + q0 + q1 > budget)
                        continue;
                    const double value = truth(pc, q0, q1);
                    if (value > best)
                    {
                        best = value;
                        best_pc = pc;
                        best_q0 = q0;
                        best_q1 = q1;
                    }
                }
        c_pc = best_pc;
        c_q0 = best_q0;
        c_q1 = best_q1;
        radius *= 0.15;
    }

    REQUIRE(run.report.weighted_sum_rate >= best * 0.99);
}

TEST_CASE("scaling the weights leaves the allocation unchanged")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    const ChannelSet channels = generate_channels(test::paper_config(282, 0.8));
    const ScaRun a = run_sca(channels, CommonGroup::all(4), w, 1000.0);
    const ScaRun c = run_sca(channels, CommonGroup::all(4), arma::vec(3.0 * w), 1000.0);

    REQUIRE(arma::abs(a.powers.common - c.powers.common).max() <= 1e-4 * 1000.0);
    for (arma::uword k = 0; k < 4; ++k)
        REQUIRE(arma::abs(a.powers.per_user[k] - c.powers.per_user[k]).max() <= 1e-4 * 1000.0);
}

TEST_CASE("subset search covers the single-user system")
{
    const ChannelSet channels = generate_channels(test::small_config(283, 1, 2));
    const arma::vec w{1.0};
    const SubsetSearchResult result = subset_search(channels, w, 10.0);

    REQUIRE(result.table.size() == 2); // none and {1}
    const ScaRun direct = run_sca(channels, CommonGroup::of({0}), w, 10.0);
    for (const SubsetScore &score : result.table)
        if (score.group == CommonGroup::of({0}))
            REQUIRE(score.sum_rate == Catch::Approx(direct.report.sum_rate).epsilon(1e-6));

    // The winner attains the table maximum.
    double best = -1e300;
    for (const SubsetScore &score : result.table)
        best = std::max(best, score.sum_rate);
    for (const SubsetScore &score : result.table)
        if (score.group == result.winner)
            REQUIRE(score.sum_rate >= best - 1e-9);
}

TEST_CASE("full set never beats the subset-search winner")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    for (std::uint64_t seed = 0; seed < 3; ++seed)
    {
        ChannelConfig cfg;
        cfg.num_users = 4;
        cfg.rx_antennas = {2, 2, 2, 2};
        cfg.tx_antennas = 8;
        cfg.distances_m = {50, 50, 50, 50};
        cfg.correlation = 0.0;
        cfg.csi_error_var = 0.0;
        cfg.noise_dbm = -35.0;
        cfg.seed = 290 + seed;
        const ChannelSet channels = generate_channels(cfg);
        const SubsetSearchResult result = subset_search(channels, w, 100.0);

        double full_rate = -1.0, winner_rate = -1.0;
        for (const SubsetScore &score : result.table)
        {
            if (score.group == CommonGroup::all(4))
                full_rate = score.sum_rate;
            if (score.group == result.winner)
                winner_rate = score.sum_rate;
        }
        REQUIRE(full_rate <= winner_rate + 1e-9);
        REQUIRE(result.report.sum_rate == Catch::Approx(winner_rate).epsilon(1e-12));
    }
}

TEST_CASE("zero budget breaks ties towards the smallest subset")
{
    const ChannelSet channels = generate_channels(test::small_config(295, 2, 1));
    const arma::vec w{0.5, 0.5};
    const SubsetSearchResult result = subset_search(channels, w, 0.0);
    REQUIRE(result.winner == CommonGroup::none());
}

TEST_CASE("far users are usually excluded from the common message")
{
    const arma::vec w{0.25, 0.25, 0.25, 0.25};
    int exclusions = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t)
    {
        ChannelConfig cfg;
        cfg.num_users = 4;
        cfg.rx_antennas = {2, 2, 2, 2};
        cfg.tx_antennas = 8;
        cfg.distances_m = {250, 250, 50, 50};
        cfg.correlation = 0.0;
        cfg.csi_error_var = 0.0;
        cfg.noise_dbm = -35.0;
        cfg.seed = 1000 + t;
        const ChannelSet channels = generate_channels(cfg);
        const SubsetSearchResult result = subset_search(channels, w, 1000.0);
        if (!result.winner.contains(0) || !result.winner.contains(1))
            ++exclusions;
    }
    REQUIRE(exclusions > trials / 2);
}

TEST_CASE("guards and failure modes")
{
    SECTION("subset search enumeration guard")
    {
        ChannelSet channels = generate_channels(test::small_config(296, 2, 1));
        channels.num_users = 13; // simulate an oversized system
        REQUIRE_THROWS_AS(subset_search(channels, arma::vec(13, arma::fill::ones), 1.0),
                          ConfigError);
    }

    SECTION("nonpositive tolerance")
    {
        const ChannelSet channels = generate_channels(test::small_config(297, 2, 1));
        ScaOptions options;
        options.tolerance = 0.0;
        REQUIRE_THROWS_AS(run_sca(channels, CommonGroup::none(), arma::vec{0.5, 0.5}, 1.0,
                                  options, false),
                          ConfigError);
    }

    SECTION("infeasible anchor")
    {
        const arma::vec w{0.5, 0.5};
        const Built b = build_instance(test::small_config(298, 2, 1), CommonGroup::none(), w,
                                       1.0);
        PowerAllocation anchor = PowerAllocation::zeros(0, b.channels.rx_antennas);
        anchor.per_user[0](0) = 100.0;
        REQUIRE_THROWS_AS(solve_inner(b.instance, anchor), DomainError);
    }
}
