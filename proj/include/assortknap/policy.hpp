#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "assortknap/bvn.hpp"
#include "assortknap/errors.hpp"
#include "assortknap/fluid.hpp"
#include "assortknap/model.hpp"
#include "assortknap/rng.hpp"

namespace assortknap {

inline constexpr int kNoPurchase = -1;

enum class PolicyKind { resolving, sampling_per_period, sampling_per_epoch };

inline const char* policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::resolving: return "resolving";
        case PolicyKind::sampling_per_period: return "per-period";
        case PolicyKind::sampling_per_epoch: return "per-epoch";
    }
    return "?";
}

inline PolicyKind parse_policy(const std::string& name) {
    if (name == "resolving") return PolicyKind::resolving;
    if (name == "per-period" || name == "sampling-per-period") return PolicyKind::sampling_per_period;
    if (name == "per-epoch" || name == "sampling-per-epoch") return PolicyKind::sampling_per_epoch;
    throw InputError("unknown policy '" + name + "' (expected resolving|per-period|per-epoch)");
}

/// Admissible assortment policies behind one interface. Construction solves
/// the fluid approximation with epsilon = 1/T; the resolving policy then
/// re-optimizes the denominator-budget LP at every epoch boundary while the
/// baselines keep sampling from the initial fluid solution. One instance per
/// trajectory; never shared across threads.
class Policy {
public:
    /// Snapshot of the current epoch, refreshed at every epoch begin.
    /// For the resolving policy this carries the re-solve inputs/outputs the
    /// trace checks need; baselines only maintain the support.
    struct EpochInfo {
        int serial = 0; // increments at each epoch begin
        int tau = 0;
        int t_remaining = 0;
        std::vector<double> gamma;
        double s_definitional = 0.0; // t^tau / tau
        bool s_clamped = false;      // LP solved at max(s, 1)
        std::vector<double> x;
        Assortment support;
    };

    Policy(const ModelInstance& instance, PolicyKind kind, Rng& rng)
        : instance_(instance), kind_(kind) {
        const double eps = 1.0 / instance.horizon();
        initial_fluid_ = solve_phi(instance, instance.normalized_inventory(), eps);
        tau0_ = static_cast<int>(
            std::max<long long>(1, std::llround(instance.horizon() / initial_fluid_.denominator)));
        tau_ = tau0_;
        if (kind_ == PolicyKind::resolving) {
            InventoryState fresh{instance.initial_inventory(), 0};
            begin_epoch(fresh, rng);
        } else {
            fluid_sampler_.emplace(initial_fluid_.x, instance.cardinality_cap());
            raw_support_ = draw_from(*fluid_sampler_, rng);
        }
    }

    PolicyKind kind() const { return kind_; }
    const FractionalSolution& initial_fluid() const { return initial_fluid_; }
    int tau0() const { return tau0_; }
    int epoch_index() const { return tau_; }
    int resolve_count() const { return resolve_count_; }
    const EpochInfo& epoch() const { return epoch_; }
    const std::optional<FractionalSolution>& current_resolve() const { return current_resolve_; }

    /// Assortment to offer this period. Every returned member is individually
    /// feasible against the given remaining inventory. For the resolving
    /// policy, a member turning infeasible mid-epoch ends the epoch here and
    /// triggers a re-solve.
    Assortment select_assortment(const InventoryState& inventory, Rng& rng) {
        switch (kind_) {
            case PolicyKind::resolving: {
                if (!epoch_open_) return {};
                if (!all_feasible(epoch_.support.members, inventory.remaining)) {
                    tau_ = std::max(tau_ - 1, 1);
                    begin_epoch(inventory, rng);
                    if (!epoch_open_) return {};
                }
                return epoch_.support;
            }
            case PolicyKind::sampling_per_period: {
                return filter_feasible(draw_from(*fluid_sampler_, rng), inventory.remaining);
            }
            case PolicyKind::sampling_per_epoch: {
                return filter_feasible(raw_support_, inventory.remaining);
            }
        }
        return {};
    }

    /// Reports the period outcome (product index or kNoPurchase) together
    /// with the inventory state after the period. A no-purchase closes the
    /// epoch: the resolving policy re-solves, the per-epoch baseline redraws.
    void notify_outcome(int outcome, const InventoryState& inventory_after, Rng& rng) {
        if (outcome == kNoPurchase) {
            if (kind_ == PolicyKind::resolving) {
                tau_ = std::max(tau_ - 1, 1);
                begin_epoch(inventory_after, rng);
            } else if (kind_ == PolicyKind::sampling_per_epoch &&
                       inventory_after.periods_elapsed < instance_.horizon()) {
                raw_support_ = draw_from(*fluid_sampler_, rng);
            }
        }
    }

private:
    Assortment draw_from(const AssortmentSampler& sampler, Rng& rng) const {
        return Assortment{sampler.draw_support(rng)};
    }

    bool all_feasible(const std::vector<int>& members, const std::vector<double>& remaining) const {
        for (int i : members)
            if (!product_feasible(instance_, remaining, i)) return false;
        return true;
    }

    Assortment filter_feasible(const Assortment& raw, const std::vector<double>& remaining) const {
        Assortment out;
        for (int i : raw.members)
            if (product_feasible(instance_, remaining, i)) out.members.push_back(i);
        return out;
    }

    void begin_epoch(const InventoryState& inventory, Rng& rng) {
        const int t = instance_.horizon() - inventory.periods_elapsed;
        if (t <= 0) {
            epoch_open_ = false;
            return;
        }
        std::vector<double> gamma(inventory.remaining);
        for (double& g : gamma) g = std::max(g, 0.0) / t;
        const double s_def = static_cast<double>(t) / tau_;
        const double s_lp = std::max(s_def, 1.0);
        FractionalSolution resolve = solve_psi(instance_, gamma, s_lp);
        ++resolve_count_;
        AssortmentSampler sampler(resolve.x, instance_.cardinality_cap());
        const Assortment raw = draw_from(sampler, rng);

        ++epoch_.serial;
        epoch_.tau = tau_;
        epoch_.t_remaining = t;
        epoch_.gamma = std::move(gamma);
        epoch_.s_definitional = s_def;
        epoch_.s_clamped = s_def < 1.0;
        epoch_.x = resolve.x;
        epoch_.support = filter_feasible(raw, inventory.remaining);
        current_resolve_ = std::move(resolve);
        epoch_open_ = true;
    }

    const ModelInstance& instance_;
    PolicyKind kind_;
    FractionalSolution initial_fluid_;
    int tau0_ = 1;
    int tau_ = 1;
    int resolve_count_ = 0;
    bool epoch_open_ = false;
    EpochInfo epoch_;
    std::optional<FractionalSolution> current_resolve_;
    std::optional<AssortmentSampler> fluid_sampler_; // baselines only
    Assortment raw_support_;                         // per-epoch baseline
};

} // namespace assortknap
