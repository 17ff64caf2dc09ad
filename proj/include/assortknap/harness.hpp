#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "assortknap/errors.hpp"
#include "assortknap/fluid.hpp"
#include "assortknap/model.hpp"
#include "assortknap/policy.hpp"
#include "assortknap/rng.hpp"
#include "assortknap/sim.hpp"

namespace assortknap {

struct ExperimentConfig {
    int n_products = 10;
    int n_resources = 5;
    int cardinality_cap = 3;
    std::vector<int> horizons;
    int n_trials = 100;
    std::vector<PolicyKind> policies;
    std::uint64_t master_seed = 0;
    std::string output_path = "out";

    void normalize() {
        std::sort(horizons.begin(), horizons.end());
        horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
        if (horizons.empty()) throw InputError("config needs at least one horizon");
        if (n_trials < 1) throw InputError("config needs n_trials >= 1");
        if (policies.empty()) throw InputError("config needs at least one policy");
    }
};

struct ExperimentRow {
    PolicyKind policy = PolicyKind::resolving;
    int n_products = 0;
    int n_resources = 0;
    int cardinality_cap = 0;
    int horizon = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    double revenue = 0.0;
    double fluid_value = 0.0; // Phi(gamma_0)
    double regret = 0.0;
    int epochs_completed = 0;
    std::string status = "ok";
};

/// Synthetic instance following the experimental setup: v ~ U[0,1],
/// C_0/T ~ U[0,0.1], A ~ U[0,1/K], r ~ U[0,1].
inline ModelInstance generate_instance(int n, int m, int k, int horizon, Rng& rng) {
    std::vector<double> preferences(static_cast<std::size_t>(n));
    for (double& v : preferences) v = rng.uniform();
    std::vector<double> revenues(static_cast<std::size_t>(n));
    for (double& r : revenues) r = rng.uniform();
    std::vector<double> inventory(static_cast<std::size_t>(m));
    for (double& c : inventory) {
        double g = rng.uniform(0.0, 0.1);
        while (g <= 0.0) g = rng.uniform(0.0, 0.1); // C_0 must be positive
        c = g * horizon;
    }
    std::vector<double> consumption(static_cast<std::size_t>(n) * m);
    for (double& a : consumption) a = rng.uniform(0.0, 1.0 / k);
    return ModelInstance(n, m, k, horizon, std::move(revenues), std::move(preferences),
                         std::move(consumption), std::move(inventory));
}

namespace detail {

inline constexpr std::uint64_t kInstanceTag = 0x696e7374616e6365ULL;

inline std::uint64_t instance_seed(const ExperimentConfig& cfg, int horizon, int trial) {
    return derive_stream_seed(cfg.master_seed,
                              {kInstanceTag, static_cast<std::uint64_t>(cfg.n_products),
                               static_cast<std::uint64_t>(cfg.n_resources),
                               static_cast<std::uint64_t>(cfg.cardinality_cap),
                               static_cast<std::uint64_t>(horizon),
                               static_cast<std::uint64_t>(trial)});
}

inline std::uint64_t demand_seed(const ExperimentConfig& cfg, PolicyKind policy, int horizon,
                                 int trial) {
    return derive_stream_seed(cfg.master_seed,
                              {static_cast<std::uint64_t>(policy) + 1,
                               static_cast<std::uint64_t>(cfg.n_products),
                               static_cast<std::uint64_t>(cfg.n_resources),
                               static_cast<std::uint64_t>(cfg.cardinality_cap),
                               static_cast<std::uint64_t>(horizon),
                               static_cast<std::uint64_t>(trial)});
}

} // namespace detail

/// Runs every (T, trial, policy) cell of a config. One fresh instance per
/// (T, trial), shared across policies; each (policy, T, trial) gets its own
/// demand stream. Work is distributed over `jobs` threads; output order is
/// fixed (T ascending, then trial, then config policy order) regardless of
/// scheduling. Per-cell solver failures are recorded in the status column.
inline std::vector<ExperimentRow> run_experiment(
    ExperimentConfig config, int jobs = 0,
    const std::function<void(std::size_t, std::size_t)>& progress = {}) {
    config.normalize();
    const std::size_t n_items =
        config.horizons.size() * static_cast<std::size_t>(config.n_trials);
    const std::size_t n_policies = config.policies.size();
    std::vector<ExperimentRow> rows(n_items * n_policies);

    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t item = next.fetch_add(1);
            if (item >= n_items) return;
            const int horizon =
                config.horizons[item / static_cast<std::size_t>(config.n_trials)];
            const int trial = static_cast<int>(item % static_cast<std::size_t>(config.n_trials));

            Rng instance_rng(detail::instance_seed(config, horizon, trial));
            const ModelInstance instance =
                generate_instance(config.n_products, config.n_resources, config.cardinality_cap,
                                  horizon, instance_rng);
            double phi = std::numeric_limits<double>::quiet_NaN();
            std::string instance_status = "ok";
            try {
                phi = solve_phi(instance, instance.normalized_inventory(), 1e-9).objective;
            } catch (const std::exception&) {
                instance_status = "solver_failure";
            }

            for (std::size_t p = 0; p < n_policies; ++p) {
                ExperimentRow& row = rows[item * n_policies + p];
                row.policy = config.policies[p];
                row.n_products = config.n_products;
                row.n_resources = config.n_resources;
                row.cardinality_cap = config.cardinality_cap;
                row.horizon = horizon;
                row.trial = trial;
                row.seed = detail::demand_seed(config, row.policy, horizon, trial);
                row.fluid_value = phi;
                row.status = instance_status;
                if (instance_status != "ok") continue;
                try {
                    TrajectoryOptions options;
                    options.fluid_benchmark = horizon * phi;
                    options.record_traces = false;
                    const TrajectoryResult res =
                        run_trajectory(instance, row.policy, row.seed, options);
                    row.revenue = res.total_revenue;
                    row.regret = res.regret;
                    row.epochs_completed = res.epochs_completed;
                } catch (const std::exception&) {
                    row.status = "solver_failure";
                    row.revenue = std::numeric_limits<double>::quiet_NaN();
                    row.regret = std::numeric_limits<double>::quiet_NaN();
                }
            }
            const std::size_t finished = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(finished, n_items);
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

struct AggregateRow {
    PolicyKind policy = PolicyKind::resolving;
    int n_products = 0;
    int n_resources = 0;
    int cardinality_cap = 0;
    int horizon = 0;
    int trials = 0;
    int failures = 0;
    double revenue_mean = 0.0;
    double revenue_se = 0.0;
    double regret_mean = 0.0;
    double regret_se = 0.0;
    double rate_gap_mean = 0.0; // Phi(gamma_0) - revenue/T
    double rate_gap_se = 0.0;
};

/// Per-(policy, shape, T) means and standard errors over ok rows.
inline std::vector<AggregateRow> aggregate(const std::vector<ExperimentRow>& rows) {
    struct Acc {
        int n = 0, failures = 0;
        double rev = 0, rev2 = 0, reg = 0, reg2 = 0, gap = 0, gap2 = 0;
    };
    std::map<std::tuple<int, int, int, int, int>, Acc> groups;
    for (const ExperimentRow& row : rows) {
        Acc& acc = groups[{static_cast<int>(row.policy), row.n_products, row.n_resources,
                           row.cardinality_cap, row.horizon}];
        if (row.status != "ok") {
            ++acc.failures;
            continue;
        }
        const double gap = row.fluid_value - row.revenue / row.horizon;
        ++acc.n;
        acc.rev += row.revenue;
        acc.rev2 += row.revenue * row.revenue;
        acc.reg += row.regret;
        acc.reg2 += row.regret * row.regret;
        acc.gap += gap;
        acc.gap2 += gap * gap;
    }
    auto finish = [](double sum, double sumsq, int n, double& mean, double& se) {
        mean = n > 0 ? sum / n : 0.0;
        se = 0.0;
        if (n > 1) {
            const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1));
            se = std::sqrt(var / n);
        }
    };
    std::vector<AggregateRow> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        AggregateRow r;
        r.policy = static_cast<PolicyKind>(std::get<0>(key));
        r.n_products = std::get<1>(key);
        r.n_resources = std::get<2>(key);
        r.cardinality_cap = std::get<3>(key);
        r.horizon = std::get<4>(key);
        r.trials = acc.n;
        r.failures = acc.failures;
        finish(acc.rev, acc.rev2, acc.n, r.revenue_mean, r.revenue_se);
        finish(acc.reg, acc.reg2, acc.n, r.regret_mean, r.regret_se);
        finish(acc.gap, acc.gap2, acc.n, r.rate_gap_mean, r.rate_gap_se);
        out.push_back(r);
    }
    return out;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Tidy per-trial CSV. The leading '#' timestamp line is informational and
/// excluded from byte-level comparisons; everything below it is a pure
/// function of the config.
inline void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows,
                           const std::string& timestamp) {
    if (!timestamp.empty()) out << "# generated_at=" << timestamp << "\n";
    out << "policy,N,M,K,T,trial,seed,revenue,fluid_value,regret,epochs_completed,status\n";
    std::size_t index = 0;
    for (const ExperimentRow& row : rows) {
        if (row.status == "ok" && index % 100 == 0) {
            const double expected = row.horizon * row.fluid_value - row.revenue;
            if (std::fabs(row.regret - expected) > 1e-9)
                throw InternalError("regret column inconsistent with T*Phi - revenue");
        }
        ++index;
        out << policy_name(row.policy) << ',' << row.n_products << ',' << row.n_resources << ','
            << row.cardinality_cap << ',' << row.horizon << ',' << row.trial << ',' << row.seed
            << ',' << detail::fmt_double(row.revenue) << ',' << detail::fmt_double(row.fluid_value)
            << ',' << detail::fmt_double(row.regret) << ',' << row.epochs_completed << ','
            << row.status << "\n";
    }
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "policy,N,M,K,T,trials,failures,revenue_mean,revenue_se,regret_mean,regret_se,"
           "rate_gap_mean,rate_gap_se\n";
    for (const AggregateRow& r : rows) {
        out << policy_name(r.policy) << ',' << r.n_products << ',' << r.n_resources << ','
            << r.cardinality_cap << ',' << r.horizon << ',' << r.trials << ',' << r.failures << ','
            << detail::fmt_double(r.revenue_mean) << ',' << detail::fmt_double(r.revenue_se) << ','
            << detail::fmt_double(r.regret_mean) << ',' << detail::fmt_double(r.regret_se) << ','
            << detail::fmt_double(r.rate_gap_mean) << ',' << detail::fmt_double(r.rate_gap_se)
            << "\n";
    }
}

/// gnuplot-friendly blocks: one indexed block per (policy, shape), horizon as
/// the abscissa.
inline void write_aggregate_dat(std::ostream& out, const std::vector<AggregateRow>& rows) {
    std::tuple<int, int, int, int> last{-1, -1, -1, -1};
    bool first = true;
    for (const AggregateRow& r : rows) {
        const std::tuple<int, int, int, int> key{static_cast<int>(r.policy), r.n_products,
                                                 r.n_resources, r.cardinality_cap};
        if (key != last) {
            if (!first) out << "\n\n";
            out << "# policy=" << policy_name(r.policy) << " N=" << r.n_products
                << " M=" << r.n_resources << " K=" << r.cardinality_cap << "\n";
            out << "# T revenue_mean revenue_se regret_mean regret_se rate_gap_mean\n";
            last = key;
            first = false;
        }
        out << r.horizon << ' ' << detail::fmt_double(r.revenue_mean) << ' '
            << detail::fmt_double(r.revenue_se) << ' ' << detail::fmt_double(r.regret_mean) << ' '
            << detail::fmt_double(r.regret_se) << ' ' << detail::fmt_double(r.rate_gap_mean)
            << "\n";
    }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    static const char* known[] = {"n_products", "n_resources", "cardinality_cap", "horizons",
                                  "n_trials",   "policies",    "master_seed",     "output_path"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || (it.key() == k);
        if (!ok) throw InputError("config has unknown key '" + it.key() + "'");
    }
    ExperimentConfig cfg;
    cfg.n_products = j.at("n_products").get<int>();
    cfg.n_resources = j.at("n_resources").get<int>();
    cfg.cardinality_cap = j.at("cardinality_cap").get<int>();
    cfg.horizons = j.at("horizons").get<std::vector<int>>();
    cfg.n_trials = j.at("n_trials").get<int>();
    for (const auto& p : j.at("policies")) cfg.policies.push_back(parse_policy(p.get<std::string>()));
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("output_path")) cfg.output_path = j.at("output_path").get<std::string>();
    cfg.normalize();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed config file " + path + ": " + e.what());
    }
    return config_from_json(j);
}

/// Built-in experiment profiles. The desk profile keeps a laptop run in the
/// minutes range; the full profile matches the reported study layout.
inline std::vector<ExperimentConfig> builtin_profile(const std::string& name,
                                                     std::uint64_t master_seed) {
    const std::vector<PolicyKind> all = {PolicyKind::resolving, PolicyKind::sampling_per_epoch,
                                         PolicyKind::sampling_per_period};
    auto horizons = [](int max_pow) {
        std::vector<int> h;
        for (int p = 5; p <= max_pow; ++p) h.push_back(1 << p);
        return h;
    };
    std::vector<ExperimentConfig> configs;
    auto add = [&](int n, int m, int k, int max_pow, int trials) {
        ExperimentConfig cfg;
        cfg.n_products = n;
        cfg.n_resources = m;
        cfg.cardinality_cap = k;
        cfg.horizons = horizons(max_pow);
        cfg.n_trials = trials;
        cfg.policies = all;
        cfg.master_seed = master_seed;
        configs.push_back(std::move(cfg));
    };
    if (name == "desk") {
        add(10, 5, 3, 13, 100);
        add(20, 10, 5, 13, 100);
    } else if (name == "full") {
        for (int m : {5, 10, 15}) add(10, m, 3, 15, 500);
        for (int m : {10, 20, 30}) add(20, m, 5, 15, 500);
    } else {
        throw InputError("unknown profile '" + name + "' (expected desk|full)");
    }
    return configs;
}

} // namespace assortknap
