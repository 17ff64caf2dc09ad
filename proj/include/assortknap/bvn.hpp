#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "assortknap/errors.hpp"
#include "assortknap/rng.hpp"

namespace assortknap {

/// Convex combination of size-<=K index sets with exact marginals:
/// sum over supports containing i of weights[l] equals x_i. Only real
/// products are listed; implicit dummies pad each support to size K.
struct BvnDecomposition {
    std::vector<double> weights;
    std::vector<std::vector<int>> supports; // sorted 0-based product indices
};

struct DoublyStochasticMatrix {
    int dim = 0;
    std::vector<double> entries; // row-major dim x dim

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
};

/// Reconstructed marginals sum_{l: i in Z_l} alpha_l for products 0..N-1.
inline std::vector<double> decomposition_marginals(const BvnDecomposition& d, int n_products) {
    std::vector<double> m(static_cast<std::size_t>(n_products), 0.0);
    for (std::size_t l = 0; l < d.weights.size(); ++l)
        for (int i : d.supports[l]) m[static_cast<std::size_t>(i)] += d.weights[l];
    return m;
}

namespace detail {

inline std::vector<double> check_marginal_vector(const std::vector<double>& x, int k) {
    if (k <= 0) throw InputError("cardinality cap must be positive");
    std::vector<double> xc(x);
    double sum = 0.0;
    for (double& v : xc) {
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
            throw InputError("marginal vector component outside [0,1]");
        v = std::clamp(v, 0.0, 1.0);
        sum += v;
    }
    if (sum > k + 1e-9) throw InputError("marginal vector mass exceeds the cardinality cap");
    return xc;
}

} // namespace detail

/// The (N+K)x(N+K) doubly stochastic matrix whose first K rows carry x/K and
/// whose last N rows carry (1-x)/N, after extending x with K dummy entries of
/// value 1 - |x|_1/K.
inline DoublyStochasticMatrix build_doubly_stochastic(const std::vector<double>& x, int k) {
    const auto xc = detail::check_marginal_vector(x, k);
    const int n = static_cast<int>(xc.size());
    const double mass = std::accumulate(xc.begin(), xc.end(), 0.0);
    std::vector<double> ext(xc);
    ext.resize(static_cast<std::size_t>(n + k), std::clamp(1.0 - mass / k, 0.0, 1.0));
    DoublyStochasticMatrix m;
    m.dim = n + k;
    m.entries.assign(static_cast<std::size_t>(m.dim) * m.dim, 0.0);
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j)
            m.at(i, j) = i < k ? ext[static_cast<std::size_t>(j)] / k
                               : (1.0 - ext[static_cast<std::size_t>(j)]) / n;
    return m;
}

/// Reduced decomposition specialized to the structure above: runs directly on
/// the counter pair (y_i, 1-y_i) and emits at most N+K supports in O((N+K)^2)
/// time. Selection takes the K largest remaining counters each round (ties to
/// the lowest index) so that every round drains at least one counter.
inline BvnDecomposition reduced_bvn_decompose(const std::vector<double>& x, int k) {
    constexpr double kSnap = 1e-12;
    const auto xc = detail::check_marginal_vector(x, k);
    const int n = static_cast<int>(xc.size());
    const double mass = std::accumulate(xc.begin(), xc.end(), 0.0);
    const double dummy = std::clamp(1.0 - mass / k, 0.0, 1.0);

    // Components: real products then K dummies. Entries at the 0/1 boundary
    // are handled outside the counter loop (always-in / always-out).
    std::vector<int> ids;      // product index, or -1 for a dummy slot
    std::vector<double> y;     // fractional components only
    std::vector<int> forced;   // real products pinned into every support
    int pinned_slots = 0;      // forced members, real or dummy
    auto classify = [&](int id, double v) {
        if (v >= 1.0 - kSnap) {
            if (id >= 0) forced.push_back(id);
            ++pinned_slots;
        } else if (v > kSnap) {
            ids.push_back(id);
            y.push_back(v);
        }
    };
    for (int i = 0; i < n; ++i) classify(i, xc[static_cast<std::size_t>(i)]);
    for (int d = 0; d < k; ++d) classify(-1, dummy);

    const int slots = k - pinned_slots;
    if (slots < 0) throw InternalError("inconsistent pinned slot count in decomposition");

    BvnDecomposition out;
    const int nc = static_cast<int>(y.size());
    if (slots == 0 || nc == 0) {
        std::sort(forced.begin(), forced.end());
        out.weights.push_back(1.0);
        out.supports.push_back(std::move(forced));
        return out;
    }

    std::vector<double> ybar(static_cast<std::size_t>(nc));
    for (int c = 0; c < nc; ++c) ybar[static_cast<std::size_t>(c)] = 1.0 - y[static_cast<std::size_t>(c)];
    std::vector<int> order(static_cast<std::size_t>(nc));
    std::vector<char> selected(static_cast<std::size_t>(nc));
    double total_weight = 0.0;

    for (int round = 0; round < nc + 2; ++round) {
        int active = 0;
        for (int c = 0; c < nc; ++c)
            if (y[static_cast<std::size_t>(c)] > 0.0) order[static_cast<std::size_t>(active++)] = c;
        if (active == 0) break;
        const int take = std::min(slots, active);
        // A drained complement counter pins its component into every
        // remaining support; rank those ahead of the plain largest-y order so
        // floating-point ties cannot leave one out.
        std::partial_sort(order.begin(), order.begin() + take, order.begin() + active,
                          [&](int a, int b) {
                              const bool pa = ybar[static_cast<std::size_t>(a)] == 0.0;
                              const bool pb = ybar[static_cast<std::size_t>(b)] == 0.0;
                              if (pa != pb) return pa;
                              if (y[static_cast<std::size_t>(a)] != y[static_cast<std::size_t>(b)])
                                  return y[static_cast<std::size_t>(a)] > y[static_cast<std::size_t>(b)];
                              return a < b;
                          });
        std::fill(selected.begin(), selected.end(), 0);
        double alpha = std::numeric_limits<double>::infinity();
        for (int s = 0; s < take; ++s) {
            selected[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])] = 1;
            alpha = std::min(alpha, y[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])]);
        }
        for (int c = 0; c < nc; ++c)
            if (!selected[static_cast<std::size_t>(c)] && ybar[static_cast<std::size_t>(c)] > 0.0)
                alpha = std::min(alpha, ybar[static_cast<std::size_t>(c)]);
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw InternalError("reduced decomposition produced a non-positive weight");

        std::vector<int> support(forced);
        for (int c = 0; c < nc; ++c) {
            if (selected[static_cast<std::size_t>(c)]) {
                y[static_cast<std::size_t>(c)] -= alpha;
                if (y[static_cast<std::size_t>(c)] < kSnap) y[static_cast<std::size_t>(c)] = 0.0;
                if (ids[static_cast<std::size_t>(c)] >= 0) support.push_back(ids[static_cast<std::size_t>(c)]);
            } else {
                ybar[static_cast<std::size_t>(c)] -= alpha;
                if (ybar[static_cast<std::size_t>(c)] < kSnap) ybar[static_cast<std::size_t>(c)] = 0.0;
            }
        }
        std::sort(support.begin(), support.end());
        out.weights.push_back(alpha);
        out.supports.push_back(std::move(support));
        total_weight += alpha;
        if (total_weight >= 1.0 - kSnap) break;
    }
    for (int c = 0; c < nc; ++c)
        if (std::fabs(y[static_cast<std::size_t>(c)]) > 1e-9 ||
            std::fabs(ybar[static_cast<std::size_t>(c)]) > 1e-9)
            throw InternalError("reduced decomposition failed to drain its counters");
    return out;
}

namespace detail {

// Augmenting-path search for the perfect-matching step of the classical
// Birkhoff construction. Deterministic: rows and columns scanned in order.
inline bool bvn_augment(const DoublyStochasticMatrix& m, int row, double tol,
                        std::vector<int>& col_match, std::vector<char>& visited) {
    for (int c = 0; c < m.dim; ++c) {
        if (visited[static_cast<std::size_t>(c)] || m.at(row, c) <= tol) continue;
        visited[static_cast<std::size_t>(c)] = 1;
        if (col_match[static_cast<std::size_t>(c)] < 0 ||
            bvn_augment(m, col_match[static_cast<std::size_t>(c)], tol, col_match, visited)) {
            col_match[static_cast<std::size_t>(c)] = row;
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Classical Birkhoff-von-Neumann decomposition via repeated perfect
/// matchings on the positive entries; at most dim^2 permutation matrices.
/// Supports are read off the first K rows of each permutation, dummy columns
/// stripped. Retained for cross-validation of the reduced algorithm.
inline BvnDecomposition generic_bvn_decompose(const DoublyStochasticMatrix& matrix, int k) {
    constexpr double kTol = 1e-12;
    const int dim = matrix.dim;
    if (k <= 0 || k >= dim) throw InputError("invalid cardinality cap for the matrix size");
    const int n = dim - k;
    for (int i = 0; i < dim; ++i) {
        double row = 0.0, col = 0.0;
        for (int j = 0; j < dim; ++j) {
            if (matrix.at(i, j) < -1e-9) throw InputError("matrix entries must be nonnegative");
            row += matrix.at(i, j);
            col += matrix.at(j, i);
        }
        if (std::fabs(row - 1.0) > 1e-9 || std::fabs(col - 1.0) > 1e-9)
            throw InputError("matrix is not doubly stochastic");
    }

    DoublyStochasticMatrix residual = matrix;
    BvnDecomposition out;
    double remaining = 1.0;
    std::vector<int> col_match(static_cast<std::size_t>(dim));
    std::vector<char> visited(static_cast<std::size_t>(dim));
    const int cap = dim * dim + 8;
    for (int round = 0; round < cap && remaining > kTol; ++round) {
        std::fill(col_match.begin(), col_match.end(), -1);
        for (int r = 0; r < dim; ++r) {
            std::fill(visited.begin(), visited.end(), 0);
            if (!detail::bvn_augment(residual, r, kTol, col_match, visited))
                throw InputError("no perfect matching on positive entries; matrix is not doubly stochastic");
        }
        std::vector<int> row_match(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c) row_match[static_cast<std::size_t>(col_match[static_cast<std::size_t>(c)])] = c;
        double alpha = remaining;
        for (int r = 0; r < dim; ++r)
            alpha = std::min(alpha, residual.at(r, row_match[static_cast<std::size_t>(r)]));
        std::vector<int> support;
        for (int r = 0; r < k; ++r)
            if (row_match[static_cast<std::size_t>(r)] < n) support.push_back(row_match[static_cast<std::size_t>(r)]);
        std::sort(support.begin(), support.end());
        for (int r = 0; r < dim; ++r) residual.at(r, row_match[static_cast<std::size_t>(r)]) -= alpha;
        out.weights.push_back(alpha);
        out.supports.push_back(std::move(support));
        remaining -= alpha;
    }
    if (remaining > kTol)
        throw InternalError("generic decomposition failed to exhaust the matrix");
    return out;
}

/// Caches the decomposition of a fractional solution and draws supports from
/// it. One sampler per fractional vector; the rng is owned by the caller.
class AssortmentSampler {
public:
    enum class Method { reduced, generic };

    AssortmentSampler(const std::vector<double>& x, int k, Method method = Method::reduced)
        : n_products_(static_cast<int>(x.size())) {
        if (method == Method::reduced) {
            decomposition_ = reduced_bvn_decompose(x, k);
        } else {
            decomposition_ = generic_bvn_decompose(build_doubly_stochastic(x, k), k);
        }
        cdf_.reserve(decomposition_.weights.size());
        double acc = 0.0;
        for (double w : decomposition_.weights) cdf_.push_back(acc += w);
    }

    const BvnDecomposition& decomposition() const { return decomposition_; }
    int n_products() const { return n_products_; }

    const std::vector<int>& draw_support(Rng& rng) const {
        return decomposition_.supports[static_cast<std::size_t>(rng.categorical_from_cdf(cdf_))];
    }

private:
    int n_products_;
    BvnDecomposition decomposition_;
    std::vector<double> cdf_;
};

/// One-shot sample with exact marginals E[z_i] = x_i and |z|_1 <= K surely.
inline std::vector<int> sample_assortment(const std::vector<double>& x, int k, Rng& rng) {
    const AssortmentSampler sampler(x, k);
    std::vector<int> z(x.size(), 0);
    for (int i : sampler.draw_support(rng)) z[static_cast<std::size_t>(i)] = 1;
    return z;
}

} // namespace assortknap
