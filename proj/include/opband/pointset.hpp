#pragma once
//
// Finite relatively separated index sets X in R^d and the counting
// quantities used by the decay-algebra estimates.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "random.hpp"

namespace opband {

// Integer-lattice metadata: point i equals spacing * z_i with z_i in the box
// 0 <= z_j < extent_j. Only sets built from an exact lattice carry it.
struct LatticeInfo {
    double spacing = 1.0;
    std::vector<std::int64_t> extent;
};

class PointSet {
public:
    PointSet(std::size_t dim, std::vector<double> coords, std::optional<LatticeInfo> lattice = {})
        : dim_(dim), coords_(std::move(coords)), lattice_(std::move(lattice)) {
        if (dim_ == 0) throw UsageError("PointSet: dimension must be >= 1");
        if (coords_.empty()) throw UsageError("PointSet: point list must be nonempty");
        if (coords_.size() % dim_ != 0) throw UsageError("PointSet: coordinate count not a multiple of dim");
        for (double c : coords_)
            if (!std::isfinite(c)) throw UsageError("PointSet: non-finite coordinate");
        if (lattice_) {
            if (lattice_->extent.size() != dim_) throw UsageError("PointSet: lattice extent rank mismatch");
            std::int64_t total = 1;
            for (auto e : lattice_->extent) total *= e;
            if (static_cast<std::size_t>(total) != size())
                throw UsageError("PointSet: lattice extent does not match point count");
        }
        check_distinct();
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return coords_.size() / dim_; }
    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    double coord(std::size_t i, std::size_t j) const { return coords_[i * dim_ + j]; }
    const std::vector<double>& coords() const noexcept { return coords_; }

    bool is_lattice() const noexcept { return lattice_.has_value(); }
    const std::optional<LatticeInfo>& lattice() const noexcept { return lattice_; }

    // Integer lattice coordinate z_i (requires a lattice flag).
    std::vector<std::int64_t> lattice_coord(std::size_t i) const {
        if (!lattice_) throw UsageError("PointSet: index set is not lattice-flagged");
        std::vector<std::int64_t> z(dim_);
        for (std::size_t j = 0; j < dim_; ++j) z[j] = std::llround(coord(i, j) / lattice_->spacing);
        return z;
    }

    // Euclidean distance |x_k - x_l|; every weight evaluation on index
    // differences goes through the same arithmetic.
    double distance(std::size_t k, std::size_t l) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            const double t = coord(k, j) - coord(l, j);
            acc += t * t;
        }
        return std::sqrt(acc);
    }

    double max_distance(std::size_t k, std::size_t l) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) acc = std::max(acc, std::abs(coord(k, j) - coord(l, j)));
        return acc;
    }

    std::vector<double> difference(std::size_t k, std::size_t l) const {
        std::vector<double> d(dim_);
        for (std::size_t j = 0; j < dim_; ++j) d[j] = coord(k, j) - coord(l, j);
        return d;
    }

    double diameter() const {
        double best = 0.0;
        for (std::size_t k = 0; k < size(); ++k)
            for (std::size_t l = k + 1; l < size(); ++l) best = std::max(best, distance(k, l));
        return best;
    }

    friend bool operator==(const PointSet& a, const PointSet& b) {
        return a.dim_ == b.dim_ && a.coords_ == b.coords_;
    }

private:
    void check_distinct() const {
        std::vector<std::size_t> order(size());
        std::iota(order.begin(), order.end(), 0);
        auto lex_less = [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(point(a).begin(), point(a).end(), point(b).begin(), point(b).end());
        };
        std::sort(order.begin(), order.end(), lex_less);
        for (std::size_t i = 1; i < order.size(); ++i)
            if (std::equal(point(order[i - 1]).begin(), point(order[i - 1]).end(), point(order[i]).begin()))
                throw UsageError("PointSet: points must be distinct");
    }

    std::size_t dim_;
    std::vector<double> coords_;
    std::optional<LatticeInfo> lattice_;
};

inline constexpr std::size_t default_max_points = 100000;

namespace detail {
inline std::size_t lattice_count(const std::vector<std::int64_t>& extent, std::size_t max_points) {
    std::size_t total = 1;
    for (auto e : extent) {
        if (e < 1) throw UsageError("lattice extent must be >= 1 on every axis");
        if (total > max_points / static_cast<std::size_t>(e))
            throw UsageError("lattice extent exceeds the maximum point count");
        total *= static_cast<std::size_t>(e);
    }
    if (total > max_points) throw UsageError("lattice extent exceeds the maximum point count");
    return total;
}

// Lexicographic enumeration with the first axis slowest.
inline std::vector<std::int64_t> lattice_digits(std::size_t i, const std::vector<std::int64_t>& extent) {
    std::vector<std::int64_t> z(extent.size());
    for (std::size_t j = extent.size(); j-- > 0;) {
        z[j] = static_cast<std::int64_t>(i % static_cast<std::size_t>(extent[j]));
        i /= static_cast<std::size_t>(extent[j]);
    }
    return z;
}
} // namespace detail

// spacing * z for integer z with 0 <= z_j < extent_j, lexicographic order.
inline PointSet make_lattice(std::size_t d, double spacing, std::vector<std::int64_t> extent,
                             std::size_t max_points = default_max_points) {
    if (d == 0) throw UsageError("make_lattice: d must be >= 1");
    if (!(spacing > 0.0)) throw UsageError("make_lattice: spacing must be > 0");
    if (extent.size() == 1 && d > 1) extent.assign(d, extent.front());
    if (extent.size() != d) throw UsageError("make_lattice: extent rank mismatch");
    const std::size_t n = detail::lattice_count(extent, max_points);
    std::vector<double> coords;
    coords.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (auto z : detail::lattice_digits(i, extent)) coords.push_back(spacing * static_cast<double>(z));
    return PointSet(d, std::move(coords), LatticeInfo{spacing, std::move(extent)});
}

inline PointSet make_lattice(std::size_t d, double spacing, std::int64_t extent,
                             std::size_t max_points = default_max_points) {
    return make_lattice(d, spacing, std::vector<std::int64_t>(d, extent), max_points);
}

// Lattice points perturbed by offsets uniform in [-jitter, jitter]^d drawn from
// a splitmix64 stream. jitter == 0 reproduces make_lattice, lattice flag included.
inline PointSet make_jittered(std::size_t d, double spacing, double jitter, std::uint64_t seed,
                              std::vector<std::int64_t> extent, std::size_t max_points = default_max_points) {
    if (!(jitter >= 0.0) || !(jitter < spacing / 2.0))
        throw UsageError("make_jittered: jitter must lie in [0, spacing/2)");
    PointSet base = make_lattice(d, spacing, std::move(extent), max_points);
    if (jitter == 0.0) return base;
    SplitMix64 rng(seed);
    std::vector<double> coords = base.coords();
    for (double& c : coords) c += jitter * (2.0 * rng.uniform() - 1.0);
    return PointSet(d, std::move(coords));
}

inline PointSet make_jittered(std::size_t d, double spacing, double jitter, std::uint64_t seed, std::int64_t extent,
                              std::size_t max_points = default_max_points) {
    return make_jittered(d, spacing, jitter, seed, std::vector<std::int64_t>(d, extent), max_points);
}

struct SeparationReport {
    double min_gap = std::numeric_limits<double>::infinity();
    std::size_t cube_count = 1;
};

namespace detail {
// Max number of points of `subset` inside a closed unit cube, axes >= axis free.
// An optimal cube can be slid up until each lower face touches a contained
// point, so anchors range over the subset's own coordinates.
inline std::size_t max_in_unit_cube(const PointSet& X, std::vector<std::size_t> subset, std::size_t axis) {
    if (axis == X.dim() || subset.size() <= 1) return subset.size();
    std::sort(subset.begin(), subset.end(),
              [&](std::size_t a, std::size_t b) { return X.coord(a, axis) < X.coord(b, axis); });
    std::size_t best = 0;
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < subset.size(); ++lo) {
        if (lo > 0 && X.coord(subset[lo], axis) == X.coord(subset[lo - 1], axis)) continue;
        const double top = X.coord(subset[lo], axis) + 1.0;
        hi = std::max(hi, lo);
        while (hi < subset.size() && X.coord(subset[hi], axis) <= top) ++hi;
        if (hi - lo <= best) continue;
        std::vector<std::size_t> slab(subset.begin() + static_cast<std::ptrdiff_t>(lo),
                                      subset.begin() + static_cast<std::ptrdiff_t>(hi));
        best = std::max(best, max_in_unit_cube(X, std::move(slab), axis + 1));
    }
    return best;
}
} // namespace detail

inline SeparationReport separation_report(const PointSet& X) {
    SeparationReport r;
    for (std::size_t k = 0; k < X.size(); ++k)
        for (std::size_t l = k + 1; l < X.size(); ++l) r.min_gap = std::min(r.min_gap, X.distance(k, l));
    std::vector<std::size_t> all(X.size());
    std::iota(all.begin(), all.end(), 0);
    r.cube_count = std::max<std::size_t>(1, detail::max_in_unit_cube(X, std::move(all), 0));
    return r;
}

namespace detail {
// Kernel matrix W_{kl} = (1 + |x_k - x_l|)^{-s}.
inline Eigen::MatrixXd polynomial_kernel(const PointSet& X, double s) {
    const std::size_t n = X.size();
    Eigen::MatrixXd W(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
            W(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = std::pow(1.0 + X.distance(k, l), -s);
    return W;
}

inline void require_s_above_dim(const PointSet& X, double s, const char* who) {
    if (!(s > static_cast<double>(X.dim()))) throw UsageError(std::string(who) + ": requires s > dim");
}

// max_{k,l} (W W)_{kl} / W_{kl}, ties broken lexicographically.
struct RatioMax {
    double value = 0.0;
    std::size_t k = 0;
    std::size_t l = 0;
};

inline RatioMax convolution_ratio(const Eigen::MatrixXd& W) {
    const Eigen::MatrixXd W2 = W * W;
    RatioMax best;
    bool first = true;
    for (Eigen::Index k = 0; k < W.rows(); ++k)
        for (Eigen::Index l = 0; l < W.cols(); ++l) {
            const double r = W2(k, l) / W(k, l);
            if (first || r > best.value) {
                best = {r, static_cast<std::size_t>(k), static_cast<std::size_t>(l)};
                first = false;
            }
        }
    return best;
}
} // namespace detail

// max_{k in X} sum_{l in X} (1 + |k - l|)^{-s}. The supremum over all of R^d is
// restricted to anchors in X; the value lower-bounds the true supremum.
inline double neighbor_sum_sup(const PointSet& X, double s) {
    detail::require_s_above_dim(X, s, "neighbor_sum_sup");
    double best = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) {
        double acc = 0.0;
        for (std::size_t l = 0; l < X.size(); ++l) acc += std::pow(1.0 + X.distance(k, l), -s);
        best = std::max(best, acc);
    }
    return best;
}

struct ConvolutionBound {
    double constant = 1.0;
    std::size_t k = 0; // maximizing pair
    std::size_t l = 0;
};

// Smallest C with sum_n (1+|k-n|)^{-s} (1+|l-n|)^{-s} <= C (1+|k-l|)^{-s} on X.
inline ConvolutionBound convolution_bound(const PointSet& X, double s) {
    detail::require_s_above_dim(X, s, "convolution_bound_constant");
    const auto r = detail::convolution_ratio(detail::polynomial_kernel(X, s));
    return {r.value, r.k, r.l};
}

inline double convolution_bound_constant(const PointSet& X, double s) { return convolution_bound(X, s).constant; }

struct TauPartition {
    std::vector<std::size_t> near; // M1: max-norm distance <= ceil(tau)
    std::vector<std::size_t> far;  // M2: the complement
};

inline TauPartition tau_partition(const PointSet& X, std::size_t k, double tau) {
    if (k >= X.size()) throw UsageError("tau_partition: index out of range");
    if (!(tau > 0.0)) throw UsageError("tau_partition: tau must be > 0");
    const double radius = std::ceil(tau);
    TauPartition p;
    for (std::size_t n = 0; n < X.size(); ++n) (X.max_distance(k, n) <= radius ? p.near : p.far).push_back(n);
    return p;
}

// Measured constant of the tau-counting lemma: the smallest C with
// |M1| <= C tau^d and sum_{n in M2} (1+|k-n|)^{-s} <= C tau^{d-s}
// over all k in X and all sampled tau > tau0.
struct TauCountingConstant {
    double count_constant = 0.0; // max |M1| / tau^d
    double tail_constant = 0.0;  // max tail / tau^{d-s}
    double proof_count_bound = 0.0; // 2^d * gamma * (1/tau0 + 1)^d
    double constant() const { return std::max(count_constant, tail_constant); }
};

inline TauCountingConstant tau_counting_constant(const PointSet& X, double s, double tau0,
                                                 std::span<const double> taus) {
    detail::require_s_above_dim(X, s, "tau_counting_constant");
    if (!(tau0 > 0.0)) throw UsageError("tau_counting_constant: tau0 must be > 0");
    const double d = static_cast<double>(X.dim());
    TauCountingConstant c;
    const auto sep = separation_report(X);
    c.proof_count_bound = std::pow(2.0, d) * static_cast<double>(sep.cube_count) * std::pow(1.0 / tau0 + 1.0, d);
    for (double tau : taus) {
        if (!(tau > tau0)) continue;
        for (std::size_t k = 0; k < X.size(); ++k) {
            const auto part = tau_partition(X, k, tau);
            c.count_constant = std::max(c.count_constant, static_cast<double>(part.near.size()) / std::pow(tau, d));
            double tail = 0.0;
            for (auto n : part.far) tail += std::pow(1.0 + X.distance(k, n), -s);
            c.tail_constant = std::max(c.tail_constant, tail / std::pow(tau, d - s));
        }
    }
    return c;
}

} // namespace opband
