#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "assortknap/errors.hpp"
#include "assortknap/fluid.hpp"
#include "assortknap/model.hpp"
#include "assortknap/policy.hpp"
#include "assortknap/rng.hpp"

namespace assortknap {

/// Per-epoch record of the resolving policy's trace quantities.
struct EpochTrace {
    int tau = 0;
    int t_tau = 0;                 // periods remaining at epoch start
    std::vector<double> gamma_tau; // remaining inventory / t_tau
    double s_tau = 0.0;            // t_tau / tau (definitional, unclamped)
    bool s_clamped = false;        // re-solve ran at max(s_tau, 1)
    std::vector<double> x_tau;
    Assortment support;
    std::vector<int> purchases; // n(i)
    int length = 0;             // m, periods spent in the epoch
    double revenue = 0.0;       // beta = sum r_i n(i)
    std::vector<double> delta_i;
    double delta = 0.0;
    std::vector<double> eps_j;
    bool eps_valid = false;
    bool complete = false; // ended at a no-purchase
};

enum class Termination { horizon, inventory_depleted };

struct TrajectoryResult {
    double total_revenue = 0.0;
    int periods_used = 0;
    Termination termination = Termination::horizon;
    std::vector<EpochTrace> epochs; // resolving policy only
    double fluid_benchmark = 0.0;   // T * Phi(gamma_0)
    double regret = 0.0;
    std::uint64_t seed = 0;
    int epochs_completed = 0; // no-purchase events
};

/// Samples one period: the customer buys a member of the assortment or
/// nothing, per the MNL probabilities. On a purchase, inventory is depleted
/// and the member must have been individually feasible. Advances the period
/// counter. Returns the product index or kNoPurchase.
inline int simulate_period(const ModelInstance& instance, const Assortment& assortment,
                           InventoryState& inventory, Rng& rng) {
    int outcome = kNoPurchase;
    if (!assortment.empty()) {
        double mass = 1.0;
        for (int i : assortment.members) {
            instance.check_product_index(i);
            if (!product_feasible(instance, inventory.remaining, i))
                throw SimulationError("offered product " + std::to_string(i + 1) +
                                      " lacks per-product inventory");
            mass += instance.preference(i);
        }
        const double u = rng.uniform() * mass;
        double acc = 1.0; // no-purchase block first
        for (int i : assortment.members) {
            acc += instance.preference(i);
            if (u < acc) {
                outcome = i;
                break;
            }
        }
    }
    if (outcome != kNoPurchase) {
        for (int j = 0; j < instance.n_resources(); ++j) {
            double& c = inventory.remaining[static_cast<std::size_t>(j)];
            c -= instance.consumption_at(outcome, j);
            if (c < 0.0) c = 0.0; // only boundary-tolerance dust can land here
        }
    }
    ++inventory.periods_elapsed;
    return outcome;
}

struct TrajectoryOptions {
    std::optional<double> fluid_benchmark; // pass to reuse a per-instance solve
    bool record_traces = true;
    double benchmark_epsilon = 1e-9;
};

namespace detail {

inline EpochTrace open_trace(const Policy::EpochInfo& info, int n_products) {
    EpochTrace trace;
    trace.tau = info.tau;
    trace.t_tau = info.t_remaining;
    trace.gamma_tau = info.gamma;
    trace.s_tau = info.s_definitional;
    trace.s_clamped = info.s_clamped;
    trace.x_tau = info.x;
    trace.support = info.support;
    trace.purchases.assign(static_cast<std::size_t>(n_products), 0);
    return trace;
}

inline void finalize_trace(EpochTrace& trace, const ModelInstance& instance,
                           double a0b0k, bool complete) {
    trace.complete = complete;
    trace.delta_i.resize(static_cast<std::size_t>(instance.n_products()));
    trace.delta = 0.0;
    trace.revenue = 0.0;
    for (int i = 0; i < instance.n_products(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        trace.revenue += instance.revenue(i) * trace.purchases[idx];
        trace.delta_i[idx] = trace.purchases[idx] - instance.preference(i) * trace.x_tau[idx];
        trace.delta += trace.delta_i[idx];
    }
    const int t_next = trace.t_tau - trace.length;
    trace.eps_valid = complete && trace.tau > 1 && t_next >= 1;
    if (trace.eps_valid) {
        trace.eps_j.assign(static_cast<std::size_t>(instance.n_resources()), 0.0);
        for (int j = 0; j < instance.n_resources(); ++j) {
            double num = 0.0;
            for (int i = 0; i < instance.n_products(); ++i)
                num += instance.consumption_at(i, j) * trace.delta_i[static_cast<std::size_t>(i)];
            num -= std::min(trace.gamma_tau[static_cast<std::size_t>(j)], a0b0k) * trace.delta;
            trace.eps_j[static_cast<std::size_t>(j)] = num / t_next;
        }
    }
}

} // namespace detail

/// Runs one full trajectory: T periods of per-period MNL draws under the
/// given policy. Deterministic in (instance, kind, seed). Epoch traces are
/// captured for the resolving policy when requested.
inline TrajectoryResult run_trajectory(const ModelInstance& instance, PolicyKind kind,
                                       std::uint64_t seed, const TrajectoryOptions& options = {}) {
    Rng rng(seed);
    Policy policy(instance, kind, rng);
    InventoryState inventory{instance.initial_inventory(), 0};

    TrajectoryResult result;
    result.seed = seed;
    const bool tracing = options.record_traces && kind == PolicyKind::resolving;
    const AssumptionReport bounds = validate_assumptions(instance);
    const double a0b0k = bounds.a0_bound * bounds.b0_bound * instance.cardinality_cap();

    std::optional<EpochTrace> trace;
    int last_serial = policy.epoch().serial;
    if (tracing) trace = detail::open_trace(policy.epoch(), instance.n_products());

    bool depleted = false;
    for (int t = 0; t < instance.horizon(); ++t) {
        const Assortment offered = policy.select_assortment(inventory, rng);
        if (tracing && policy.epoch().serial != last_serial) {
            // epoch ended early inside select (a member became infeasible)
            detail::finalize_trace(*trace, instance, a0b0k, false);
            result.epochs.push_back(std::move(*trace));
            trace = detail::open_trace(policy.epoch(), instance.n_products());
            last_serial = policy.epoch().serial;
        }
        if (offered.empty() && !depleted) {
            bool any = false;
            for (int i = 0; i < instance.n_products() && !any; ++i)
                any = product_feasible(instance, inventory.remaining, i);
            depleted = !any;
        }
        const int outcome = simulate_period(instance, offered, inventory, rng);
        if (trace) ++trace->length;
        if (outcome != kNoPurchase) {
            result.total_revenue += instance.revenue(outcome);
            if (trace) ++trace->purchases[static_cast<std::size_t>(outcome)];
        }
        policy.notify_outcome(outcome, inventory, rng);
        if (outcome == kNoPurchase) {
            ++result.epochs_completed;
            if (tracing) {
                detail::finalize_trace(*trace, instance, a0b0k, true);
                result.epochs.push_back(std::move(*trace));
                if (policy.epoch().serial != last_serial) {
                    trace = detail::open_trace(policy.epoch(), instance.n_products());
                    last_serial = policy.epoch().serial;
                } else {
                    trace.reset(); // horizon reached; no further epoch
                }
            }
        }
    }
    if (tracing && trace && trace->length > 0) {
        detail::finalize_trace(*trace, instance, a0b0k, false);
        result.epochs.push_back(std::move(*trace));
    }

    result.periods_used = inventory.periods_elapsed;
    result.termination = depleted ? Termination::inventory_depleted : Termination::horizon;
    result.fluid_benchmark =
        options.fluid_benchmark
            ? *options.fluid_benchmark
            : instance.horizon() *
                  solve_phi(instance, instance.normalized_inventory(), options.benchmark_epsilon)
                      .objective;
    result.regret = result.fluid_benchmark - result.total_revenue;
    return result;
}

/// Pathwise check of the epoch recursion inequalities over consecutive
/// complete epochs. Pairs whose re-solve ran with a clamped denominator
/// budget are skipped: the inequality is derived from the constraint
/// 1 + sum v_i x_i <= s^tau, which the clamp deliberately relaxes.
struct RecursionReport {
    int pairs_checked = 0;
    int pairs_skipped_clamped = 0;
    std::optional<int> first_violation; // index into the trace list
    bool all_pass() const { return !first_violation.has_value(); }
};

inline RecursionReport check_recursion(const std::vector<EpochTrace>& traces,
                                       const ModelInstance& instance) {
    constexpr double kSlack = 1e-8;
    RecursionReport report;
    for (std::size_t k = 0; k + 1 < traces.size(); ++k) {
        const EpochTrace& cur = traces[k];
        const EpochTrace& next = traces[k + 1];
        if (!cur.complete || cur.tau <= 1 || next.tau != cur.tau - 1) continue;
        if (cur.s_clamped) {
            ++report.pairs_skipped_clamped;
            continue;
        }
        ++report.pairs_checked;
        bool ok = next.s_tau >= cur.s_tau - cur.delta / (cur.tau - 1) - kSlack;
        if (ok && cur.eps_valid) {
            for (int j = 0; j < instance.n_resources() && ok; ++j)
                ok = next.gamma_tau[static_cast<std::size_t>(j)] >=
                     cur.gamma_tau[static_cast<std::size_t>(j)] -
                         cur.eps_j[static_cast<std::size_t>(j)] - kSlack;
        }
        if (!ok && !report.first_violation) report.first_violation = static_cast<int>(k);
    }
    return report;
}

/// Sample mean and standard error of Delta^tau(i) over complete epochs,
/// grouped by (tau, product). The conditional-centering lemma makes every
/// group mean zero in expectation.
struct DeltaStat {
    int tau = 0;
    int product = 0;
    long long count = 0;
    double mean = 0.0;
    double se = 0.0;
};

inline std::vector<DeltaStat> check_delta_centered(const std::vector<TrajectoryResult>& results) {
    struct Acc {
        long long n = 0;
        double sum = 0.0, sumsq = 0.0;
    };
    std::map<std::pair<int, int>, Acc> groups;
    for (const TrajectoryResult& result : results) {
        for (const EpochTrace& trace : result.epochs) {
            if (!trace.complete) continue;
            for (std::size_t i = 0; i < trace.delta_i.size(); ++i) {
                Acc& acc = groups[{trace.tau, static_cast<int>(i)}];
                ++acc.n;
                acc.sum += trace.delta_i[i];
                acc.sumsq += trace.delta_i[i] * trace.delta_i[i];
            }
        }
    }
    std::vector<DeltaStat> stats;
    stats.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        DeltaStat s;
        s.tau = key.first;
        s.product = key.second;
        s.count = acc.n;
        s.mean = acc.sum / acc.n;
        if (acc.n > 1) {
            const double var = std::max(0.0, (acc.sumsq - acc.n * s.mean * s.mean) / (acc.n - 1));
            s.se = std::sqrt(var / acc.n);
        }
        stats.push_back(s);
    }
    return stats;
}

/// Exact optimal expected revenue by backward induction over discretized
/// inventory. Only for toy instances: the state space is exponential in M
/// and the consumption grid must be exact.
inline double tiny_dp_value(const ModelInstance& instance) {
    const int n = instance.n_products();
    const int m = instance.n_resources();
    const int horizon = instance.horizon();
    if (n > 3 || m > 2 || horizon > 10)
        throw InputError("tiny_dp_value only handles N<=3, M<=2, T<=10");

    // Find a common grid 1/q on which consumption and inventory are integral.
    int q = 0;
    for (int cand = 1; cand <= 64 && q == 0; ++cand) {
        bool ok = true;
        for (double a : instance.consumption())
            ok = ok && std::fabs(a * cand - std::llround(a * cand)) <= 1e-6;
        for (double c : instance.initial_inventory())
            ok = ok && std::fabs(c * cand - std::llround(c * cand)) <= 1e-6;
        if (ok) q = cand;
    }
    if (q == 0) throw InputError("consumption entries are not on a small rational grid");

    std::vector<long long> capacity(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        capacity[static_cast<std::size_t>(j)] =
            std::llround(instance.initial_inventory()[static_cast<std::size_t>(j)] * q);
        if (capacity[static_cast<std::size_t>(j)] > 20)
            throw InputError("discretized inventory exceeds 20 units per resource");
    }
    std::vector<std::vector<long long>> cost(static_cast<std::size_t>(n),
                                             std::vector<long long>(static_cast<std::size_t>(m)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                std::llround(instance.consumption_at(i, j) * q);

    const long long dim1 = capacity[0] + 1;
    const long long dim2 = (m == 2 ? capacity[1] : 0) + 1;
    const auto states = static_cast<std::size_t>(dim1 * dim2);
    auto index = [&](long long u1, long long u2) {
        return static_cast<std::size_t>(u1 * dim2 + u2);
    };

    std::vector<double> next(states, 0.0), cur(states, 0.0);
    for (int t = horizon; t >= 1; --t) {
        for (long long u1 = 0; u1 < dim1; ++u1) {
            for (long long u2 = 0; u2 < dim2; ++u2) {
                double best = next[index(u1, u2)]; // offer nothing
                for (int mask = 1; mask < (1 << n); ++mask) {
                    if (__builtin_popcount(static_cast<unsigned>(mask)) > instance.cardinality_cap())
                        continue;
                    bool feasible = true;
                    double mass = 1.0, value = 0.0;
                    for (int i = 0; i < n && feasible; ++i) {
                        if (!(mask & (1 << i))) continue;
                        const auto& ci = cost[static_cast<std::size_t>(i)];
                        if (ci[0] > u1 || (m == 2 && ci[1] > u2)) feasible = false;
                        else mass += instance.preference(i);
                    }
                    if (!feasible) continue;
                    value = next[index(u1, u2)] / mass; // no-purchase branch
                    for (int i = 0; i < n; ++i) {
                        if (!(mask & (1 << i))) continue;
                        const auto& ci = cost[static_cast<std::size_t>(i)];
                        const long long w2 = m == 2 ? u2 - ci[1] : 0;
                        value += instance.preference(i) / mass *
                                 (instance.revenue(i) + next[index(u1 - ci[0], w2)]);
                    }
                    best = std::max(best, value);
                }
                cur[index(u1, u2)] = best;
            }
        }
        std::swap(cur, next);
    }
    return next[index(capacity[0], m == 2 ? capacity[1] : 0)];
}

} // namespace assortknap
