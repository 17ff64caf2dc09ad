#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "assortknap/errors.hpp"

namespace assortknap {

/// Clipping slack for values that should sit in [0,1] but carry LP noise.
inline constexpr double kBoundaryTol = 1e-12;

/// An assortment: the set of product indices (0-based) offered in one period.
struct Assortment {
    std::vector<int> members; // sorted, unique

    bool empty() const { return members.empty(); }
    int size() const { return static_cast<int>(members.size()); }
    bool contains(int i) const {
        return std::binary_search(members.begin(), members.end(), i);
    }
};

/// Remaining inventory during a trajectory. Confined to a single trajectory;
/// everything else in this header is immutable after construction.
struct InventoryState {
    std::vector<double> remaining; // C_t, one entry per resource
    int periods_elapsed = 0;
};

struct AssumptionReport {
    double a0_bound = 0.0;  // max consumption entry
    double b0_bound = 0.0;  // max preference score
    double gamma_min = 0.0; // min normalized initial inventory
    bool passes_a1 = false;
    bool passes_a2 = false;
};

/// All parameters of one problem instance: N substitutable products, M
/// resources, assortments of size at most K over a horizon of T periods.
/// Validated on construction; immutable afterwards (share freely across
/// threads).
class ModelInstance {
public:
    ModelInstance(int n_products, int n_resources, int cardinality_cap, int horizon,
                  std::vector<double> revenues, std::vector<double> preferences,
                  std::vector<double> consumption, std::vector<double> initial_inventory)
        : n_products_(n_products),
          n_resources_(n_resources),
          cardinality_cap_(cardinality_cap),
          horizon_(horizon),
          revenues_(std::move(revenues)),
          preferences_(std::move(preferences)),
          consumption_(std::move(consumption)),
          initial_inventory_(std::move(initial_inventory)) {
        validate();
    }

    int n_products() const { return n_products_; }
    int n_resources() const { return n_resources_; }
    int cardinality_cap() const { return cardinality_cap_; }
    int horizon() const { return horizon_; }

    const std::vector<double>& revenues() const { return revenues_; }
    const std::vector<double>& preferences() const { return preferences_; }
    const std::vector<double>& initial_inventory() const { return initial_inventory_; }
    const std::vector<double>& consumption() const { return consumption_; }

    double revenue(int i) const { return revenues_[static_cast<std::size_t>(i)]; }
    double preference(int i) const { return preferences_[static_cast<std::size_t>(i)]; }

    /// Units of resource j consumed by one sale of product i.
    double consumption_at(int i, int j) const {
        return consumption_[static_cast<std::size_t>(i) * n_resources_ + j];
    }

    /// Normalized initial inventory, gamma_0 = C_0 / T.
    std::vector<double> normalized_inventory() const {
        std::vector<double> g(initial_inventory_);
        for (double& v : g) v /= horizon_;
        return g;
    }

    void check_product_index(int i) const {
        if (i < 0 || i >= n_products_)
            throw InputError("product index " + std::to_string(i) + " out of range");
    }

private:
    void validate() const {
        if (n_products_ <= 0 || n_resources_ <= 0 || horizon_ <= 0)
            throw InputError("N, M, T must be positive");
        if (cardinality_cap_ <= 0 || cardinality_cap_ > n_products_)
            throw InputError("cardinality cap must satisfy 1 <= K <= N");
        const auto n = static_cast<std::size_t>(n_products_);
        const auto m = static_cast<std::size_t>(n_resources_);
        if (revenues_.size() != n) throw InputError("revenues must have N entries");
        if (preferences_.size() != n) throw InputError("preferences must have N entries");
        if (consumption_.size() != n * m)
            throw InputError("consumption must have N*M entries (row-major)");
        if (initial_inventory_.size() != m)
            throw InputError("initial_inventory must have M entries");
        for (double r : revenues_) {
            if (!std::isfinite(r) || r < 0.0 || r > 1.0)
                throw InputError("revenues must lie in [0,1]");
        }
        for (double v : preferences_) {
            if (!std::isfinite(v) || v < 0.0)
                throw InputError("preference scores must be nonnegative");
        }
        for (double a : consumption_) {
            if (!std::isfinite(a) || a < 0.0)
                throw InputError("consumption entries must be nonnegative");
        }
        for (double c : initial_inventory_) {
            if (!std::isfinite(c) || c <= 0.0)
                throw InputError("initial inventory levels must be positive");
        }
    }

    int n_products_;
    int n_resources_;
    int cardinality_cap_;
    int horizon_;
    std::vector<double> revenues_;
    std::vector<double> preferences_;
    std::vector<double> consumption_;       // row-major N x M
    std::vector<double> initial_inventory_; // size M
};

namespace detail {

/// Validates x in [0,1]^N up to kBoundaryTol and returns a clipped copy.
inline std::vector<double> clip_unit_box(const ModelInstance& instance,
                                         const std::vector<double>& x) {
    if (x.size() != static_cast<std::size_t>(instance.n_products()))
        throw InputError("fractional vector must have N entries");
    std::vector<double> out(x);
    for (double& xi : out) {
        if (!(xi >= -kBoundaryTol && xi <= 1.0 + kBoundaryTol))
            throw InputError("fractional vector component outside [0,1]");
        xi = std::clamp(xi, 0.0, 1.0);
    }
    return out;
}

} // namespace detail

/// MNL purchase probabilities for an offered assortment. Entry 0 is the
/// no-purchase option; entry k >= 1 corresponds to assortment.members[k-1].
inline std::vector<double> choice_probabilities(const ModelInstance& instance,
                                                const Assortment& assortment) {
    double mass = 1.0; // no-purchase preference score
    for (int i : assortment.members) {
        instance.check_product_index(i);
        mass += instance.preference(i);
    }
    std::vector<double> probs;
    probs.reserve(assortment.members.size() + 1);
    probs.push_back(1.0 / mass);
    for (int i : assortment.members) probs.push_back(instance.preference(i) / mass);
    return probs;
}

/// Expected one-period revenue of an assortment.
inline double assortment_revenue(const ModelInstance& instance,
                                 const Assortment& assortment) {
    double num = 0.0, den = 1.0;
    for (int i : assortment.members) {
        instance.check_product_index(i);
        num += instance.revenue(i) * instance.preference(i);
        den += instance.preference(i);
    }
    return num / den;
}

/// Fractional extension R(x) = sum r_i v_i x_i / (1 + sum v_i x_i).
inline double fractional_revenue(const ModelInstance& instance,
                                 const std::vector<double>& x) {
    const auto xc = detail::clip_unit_box(instance, x);
    double num = 0.0, den = 1.0;
    for (int i = 0; i < instance.n_products(); ++i) {
        num += instance.revenue(i) * instance.preference(i) * xc[static_cast<std::size_t>(i)];
        den += instance.preference(i) * xc[static_cast<std::size_t>(i)];
    }
    return num / den;
}

/// Expected per-period resource consumption A^T nu(x), where
/// [nu(x)]_i = v_i x_i / (1 + sum v_k x_k).
inline std::vector<double> consumption_rates(const ModelInstance& instance,
                                             const std::vector<double>& x) {
    const auto xc = detail::clip_unit_box(instance, x);
    double den = 1.0;
    for (int i = 0; i < instance.n_products(); ++i)
        den += instance.preference(i) * xc[static_cast<std::size_t>(i)];
    std::vector<double> rates(static_cast<std::size_t>(instance.n_resources()), 0.0);
    for (int i = 0; i < instance.n_products(); ++i) {
        const double w = instance.preference(i) * xc[static_cast<std::size_t>(i)] / den;
        if (w == 0.0) continue;
        for (int j = 0; j < instance.n_resources(); ++j)
            rates[static_cast<std::size_t>(j)] += instance.consumption_at(i, j) * w;
    }
    return rates;
}

/// Instance diagnostics for the boundedness and scaling assumptions.
inline AssumptionReport validate_assumptions(const ModelInstance& instance) {
    AssumptionReport report;
    for (double a : instance.consumption()) report.a0_bound = std::max(report.a0_bound, a);
    for (double v : instance.preferences()) report.b0_bound = std::max(report.b0_bound, v);
    report.gamma_min = std::numeric_limits<double>::infinity();
    for (double g : instance.normalized_inventory())
        report.gamma_min = std::min(report.gamma_min, g);
    report.passes_a1 = std::isfinite(report.a0_bound) && std::isfinite(report.b0_bound);
    report.passes_a2 = report.gamma_min > 0.0;
    return report;
}

/// True when one unit of product i can be sold from the remaining stock.
inline bool product_feasible(const ModelInstance& instance,
                             const std::vector<double>& remaining, int i) {
    for (int j = 0; j < instance.n_resources(); ++j) {
        if (instance.consumption_at(i, j) > remaining[static_cast<std::size_t>(j)] + kBoundaryTol)
            return false;
    }
    return true;
}

} // namespace assortknap
