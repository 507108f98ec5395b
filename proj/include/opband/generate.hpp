#pragma once
//
// Seeded random matrices with a prescribed off-diagonal envelope, and the
// experiment configuration shared by the CLI and the verify suite.
//

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blockmat.hpp"
#include "parallel.hpp"
#include "pointset.hpp"
#include "random.hpp"
#include "weights.hpp"

namespace opband {

struct GeneratorSpec {
    WeightSpec weight = WeightSpec::polynomial(3.0);
    double amplitude = 1.0;
    std::size_t m = 2;
    bool symmetrize = false;
    std::optional<double> shift;          // A <- I + shift * A
    bool exact_envelope = false;          // g_{k,l} = 1 instead of uniform [0,1]
    std::optional<double> max_distance;   // drop entries with |k-l| above this
};

// Pseudo-random m x m block with entries uniform in [-1,1] + i[-1,1],
// normalized to unit spectral norm.
inline Block random_unit_block(SplitMix64& g, std::size_t m) {
    const auto mi = static_cast<Eigen::Index>(m);
    Block R(mi, mi);
    for (Eigen::Index j = 0; j < mi; ++j)
        for (Eigen::Index i = 0; i < mi; ++i) {
            const double re = g.uniform(-1.0, 1.0);
            R(i, j) = Complex(re, g.uniform(-1.0, 1.0));
        }
    const double n = block_norm(R);
    if (n == 0.0) R(0, 0) = 1.0;
    else R /= n;
    return R;
}

// A_{k,l} = amplitude g_{k,l} w(k-l)^{-1} R_{k,l}; entry (k,l) draws from its own
// stream derived from (seed, k n + l), so the result is independent of threading.
inline BlockMatrix generate_matrix(std::shared_ptr<const PointSet> X, const GeneratorSpec& spec, std::uint64_t seed) {
    if (spec.m == 0) throw UsageError("generate_matrix: block dimension must be >= 1");
    if (!(spec.amplitude >= 0.0) || !std::isfinite(spec.amplitude)) throw UsageError("generate_matrix: amplitude must be >= 0");
    const std::size_t n = X->size();
    const std::size_t m = spec.m;
    BlockMatrix A(X, m);
    if (spec.amplitude > 0.0) {
        std::vector<std::vector<Block>> rows(n);
        std::vector<std::vector<std::size_t>> cols(n);
        parallel_for(n, [&](std::size_t k) {
            for (std::size_t l = 0; l < n; ++l) {
                if (spec.max_distance && X->distance(k, l) > *spec.max_distance) continue;
                SplitMix64 g(derive_seed(seed, static_cast<std::uint64_t>(k * n + l)));
                const double gk = spec.exact_envelope ? 1.0 : g.uniform();
                const double c = spec.amplitude * gk / spec.weight.at(*X, k, l);
                Block R = random_unit_block(g, m);
                if (c == 0.0) continue;
                rows[k].push_back(R * c);
                cols[k].push_back(l);
            }
        });
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < cols[k].size(); ++i) A.set(k, cols[k][i], rows[k][i]);
    }
    if (spec.symmetrize) A = linear_combination(0.5, A, 0.5, adjoint(A));
    if (spec.shift) A = BlockMatrix::identity(X, m) + A.scaled(*spec.shift);
    return A;
}

struct PointSetSpec {
    std::string kind = "jittered"; // lattice | jittered
    std::size_t dim = 1;
    std::vector<std::int64_t> extent{128};
    double spacing = 1.0;
    double jitter = 0.3;
};

inline PointSet make_pointset(const PointSetSpec& p, std::uint64_t seed) {
    std::vector<std::int64_t> ext = p.extent;
    if (ext.size() == 1 && p.dim > 1) ext.assign(p.dim, ext[0]);
    if (p.kind == "lattice") return make_lattice(p.dim, p.spacing, ext);
    if (p.kind == "jittered") return make_jittered(p.dim, p.spacing, p.jitter, seed, ext);
    throw UsageError("unknown point set kind '" + p.kind + "' (expected lattice or jittered)");
}

struct ExperimentConfig {
    std::uint64_t seed = 42;
    PointSetSpec pointset;
    std::string weight = "polynomial:3";
    double amplitude = 1.0;
    std::size_t m = 2;
    std::map<std::string, int> instances; // per-check instance counts
    std::optional<std::vector<std::string>> pipeline; // check names; absent = full suite
    std::string report_path;
};

} // namespace opband
