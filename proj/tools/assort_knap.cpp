// Command-line front end: instance generation, fluid solves, decomposition
// inspection, single-trajectory simulation, and batched experiments.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "assortknap/bvn.hpp"
#include "assortknap/errors.hpp"
#include "assortknap/fluid.hpp"
#include "assortknap/harness.hpp"
#include "assortknap/instance_io.hpp"
#include "assortknap/model.hpp"
#include "assortknap/policy.hpp"
#include "assortknap/sim.hpp"

namespace ak = assortknap;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<double> parse_comma_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ak::InputError("empty --x list");
    return out;
}

std::string utc_timestamp() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_gen(int n, int m, int k, int t, std::uint64_t seed, const std::string& out) {
    ak::Rng rng(seed);
    const ak::ModelInstance instance = ak::generate_instance(n, m, k, t, rng);
    ak::save_instance(instance, out);
    const ak::AssumptionReport report = ak::validate_assumptions(instance);
    std::cout << "wrote " << out << "  N=" << n << " M=" << m << " K=" << k << " T=" << t
              << "  A0=" << fmt(report.a0_bound) << " B0=" << fmt(report.b0_bound)
              << " gamma_min=" << fmt(report.gamma_min)
              << " a2=" << (report.passes_a2 ? "pass" : "fail") << "\n";
    return 0;
}

int cmd_solve_fluid(const std::string& path, double epsilon) {
    const ak::ModelInstance instance = ak::load_instance(path);
    const auto gamma = instance.normalized_inventory();
    int lp_solves = 0;
    const ak::FractionalSolution phi = ak::solve_phi(instance, gamma, epsilon, &lp_solves);
    std::cout << "phi = " << fmt(phi.objective) << "\n";
    std::cout << "x_F = [";
    for (std::size_t i = 0; i < phi.x.size(); ++i)
        std::cout << (i ? ", " : "") << fmt(phi.x[i]);
    std::cout << "]\n";
    std::cout << "s = " << fmt(phi.denominator) << "\n";
    std::cout << "lemma1_discrepancy = " << fmt(ak::lemma1_check(instance, gamma, epsilon))
              << "\n";
    std::cout << "lp_solves = " << lp_solves << "\n";
    return 0;
}

int cmd_decompose(const std::string& xs, int k, const std::string& method) {
    const std::vector<double> x = parse_comma_list(xs);
    ak::BvnDecomposition d;
    if (method == "reduced") {
        d = ak::reduced_bvn_decompose(x, k);
    } else if (method == "generic") {
        d = ak::generic_bvn_decompose(ak::build_doubly_stochastic(x, k), k);
    } else {
        throw ak::InputError("--method must be reduced or generic");
    }
    double weight_sum = 0.0;
    for (std::size_t l = 0; l < d.weights.size(); ++l) {
        weight_sum += d.weights[l];
        std::cout << "alpha[" << l + 1 << "] = " << fmt(d.weights[l]) << "  Z = {";
        for (std::size_t i = 0; i < d.supports[l].size(); ++i)
            std::cout << (i ? "," : "") << d.supports[l][i] + 1; // 1-based outside
        std::cout << "}\n";
    }
    const auto marg = ak::decomposition_marginals(d, static_cast<int>(x.size()));
    double err = std::fabs(weight_sum - 1.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        err = std::max(err, std::fabs(marg[i] - std::clamp(x[i], 0.0, 1.0)));
    std::cout << "supports = " << d.weights.size() << "  reconstruction_error = " << fmt(err)
              << "\n";
    return err > 1e-9 ? 1 : 0;
}

int cmd_simulate(const std::string& path, const std::string& policy, std::uint64_t seed,
                 const std::string& trace_path) {
    const ak::ModelInstance instance = ak::load_instance(path);
    const ak::PolicyKind kind = ak::parse_policy(policy);
    ak::TrajectoryOptions options;
    options.record_traces = kind == ak::PolicyKind::resolving;
    const ak::TrajectoryResult result = ak::run_trajectory(instance, kind, seed, options);
    std::cout << "policy=" << ak::policy_name(kind) << " T=" << instance.horizon()
              << " revenue=" << fmt(result.total_revenue)
              << " fluid_benchmark=" << fmt(result.fluid_benchmark)
              << " regret=" << fmt(result.regret) << " periods=" << result.periods_used
              << " epochs_completed=" << result.epochs_completed << " termination="
              << (result.termination == ak::Termination::horizon ? "horizon"
                                                                 : "inventory_depleted")
              << " seed=" << seed << "\n";
    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) throw ak::InputError("cannot write trace file: " + trace_path);
        out << "tau,t_tau,s_tau,m_tau,beta_tau,delta_tau";
        for (int j = 1; j <= instance.n_resources(); ++j) out << ",gamma_tau_" << j;
        out << "\n";
        for (const ak::EpochTrace& e : result.epochs) {
            out << e.tau << ',' << e.t_tau << ',' << fmt(e.s_tau) << ',' << e.length << ','
                << fmt(e.revenue) << ',' << fmt(e.delta);
            for (double g : e.gamma_tau) out << ',' << fmt(g);
            out << "\n";
        }
        std::cout << "trace: " << result.epochs.size() << " epochs -> " << trace_path << "\n";
    }
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& profile, int jobs,
                   std::string out_dir, std::uint64_t seed, bool seed_given, bool quiet) {
    std::vector<ak::ExperimentConfig> configs;
    if (!config_path.empty()) {
        configs.push_back(ak::load_experiment_config(config_path));
        if (seed_given) configs.back().master_seed = seed;
    } else {
        configs = ak::builtin_profile(profile, seed_given ? seed : 424242ULL);
    }
    if (out_dir.empty()) out_dir = configs.front().output_path;
    std::filesystem::create_directories(out_dir);

    std::vector<ak::ExperimentRow> rows;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const auto& cfg = configs[c];
        if (!quiet)
            std::cout << "config " << c + 1 << "/" << configs.size() << ": N=" << cfg.n_products
                      << " M=" << cfg.n_resources << " K=" << cfg.cardinality_cap << " trials="
                      << cfg.n_trials << " horizons=" << cfg.horizons.size() << std::endl;
        auto progress = [&](std::size_t done, std::size_t total) {
            if (quiet) return;
            if (done % 64 == 0 || done == total)
                std::cout << "  " << done << "/" << total << " cells\r" << std::flush;
        };
        auto part = ak::run_experiment(cfg, jobs, progress);
        rows.insert(rows.end(), part.begin(), part.end());
        if (!quiet) std::cout << "\n";
    }

    const std::string results_path = out_dir + "/results.csv";
    {
        std::ofstream out(results_path);
        if (!out) throw ak::InputError("cannot write " + results_path);
        ak::write_rows_csv(out, rows, utc_timestamp());
    }
    const auto agg = ak::aggregate(rows);
    {
        std::ofstream out(out_dir + "/aggregate.csv");
        ak::write_aggregate_csv(out, agg);
    }
    {
        std::ofstream out(out_dir + "/aggregate.dat");
        ak::write_aggregate_dat(out, agg);
    }

    std::size_t failures = 0;
    for (const auto& row : rows) failures += row.status != "ok";
    if (!quiet) {
        for (const auto& r : agg)
            std::cout << ak::policy_name(r.policy) << " N=" << r.n_products << " M="
                      << r.n_resources << " K=" << r.cardinality_cap << " T=" << r.horizon
                      << "  revenue=" << fmt(r.revenue_mean) << "+-" << fmt(r.revenue_se)
                      << "  regret=" << fmt(r.regret_mean) << "+-" << fmt(r.regret_se) << "\n";
        std::cout << rows.size() << " rows (" << failures << " failures) -> " << results_path
                  << "\n";
    }
    if (failures * 100 > rows.size()) return 3; // more than 1% of rows failed
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Epoch-based re-solving for dynamic assortment optimization under MNL demand "
                 "and resource knapsack constraints"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic instance file");
    int gen_n = 10, gen_m = 5, gen_k = 3, gen_t = 1024;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "instance.json";
    gen->add_option("--n", gen_n, "number of products");
    gen->add_option("--m", gen_m, "number of resources");
    gen->add_option("--k", gen_k, "cardinality cap");
    gen->add_option("--t", gen_t, "horizon length");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output path");

    auto* fluid = app.add_subcommand("solve-fluid", "Solve the fluid approximation");
    std::string fluid_instance;
    double fluid_eps = 1e-9;
    fluid->add_option("--instance", fluid_instance, "instance file")->required();
    fluid->add_option("--epsilon", fluid_eps, "bisection tolerance");

    auto* dec = app.add_subcommand("decompose", "Decompose a fractional vector into assortments");
    std::string dec_x, dec_method = "reduced";
    int dec_k = 1;
    dec->add_option("--x", dec_x, "comma-separated fractional vector")->required();
    dec->add_option("--k", dec_k, "cardinality cap")->required();
    dec->add_option("--method", dec_method, "reduced|generic");

    auto* sim = app.add_subcommand("simulate", "Simulate one trajectory");
    std::string sim_instance, sim_policy = "resolving", sim_trace;
    std::uint64_t sim_seed = 1;
    sim->add_option("--instance", sim_instance, "instance file")->required();
    sim->add_option("--policy", sim_policy, "resolving|per-period|per-epoch");
    sim->add_option("--seed", sim_seed, "demand stream seed");
    sim->add_option("--trace", sim_trace, "write per-epoch trace CSV here");

    auto* exp = app.add_subcommand("experiment", "Run a batched experiment");
    std::string exp_config, exp_profile = "desk", exp_out;
    int exp_jobs = 0;
    std::uint64_t exp_seed = 0;
    bool exp_quiet = false;
    exp->add_option("--config", exp_config, "experiment config JSON");
    exp->add_option("--profile", exp_profile, "desk|full (used when no --config)");
    exp->add_option("--jobs", exp_jobs, "worker threads (default: all cores)");
    exp->add_option("--out", exp_out, "output directory");
    auto* seed_opt = exp->add_option("--seed", exp_seed, "master seed override");
    exp->add_flag("--quiet", exp_quiet, "suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_n, gen_m, gen_k, gen_t, gen_seed, gen_out);
        if (fluid->parsed()) return cmd_solve_fluid(fluid_instance, fluid_eps);
        if (dec->parsed()) return cmd_decompose(dec_x, dec_k, dec_method);
        if (sim->parsed()) return cmd_simulate(sim_instance, sim_policy, sim_seed, sim_trace);
        if (exp->parsed())
            return cmd_experiment(exp_config, exp_profile, exp_jobs, exp_out, exp_seed,
                                  seed_opt->count() > 0, exp_quiet);
    } catch (const ak::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ak::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
