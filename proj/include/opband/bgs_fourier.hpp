#pragma once
//
// Side diagonals, modulation and operator-valued Fourier series on integer
// lattice sections (d <= 2).
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blockmat.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "spectral.hpp"
#include "weights.hpp"

namespace opband {

// e^{2 pi i x}, exact at quarter turns.
inline Complex unit_phase(double x) {
    double f = x - std::floor(x);
    const double q = 4.0 * f;
    if (q == std::floor(q)) {
        switch (static_cast<int>(q) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
        }
    }
    if (f > 0.5) f -= 1.0;
    const double a = 2.0 * std::numbers::pi * f;
    return {std::cos(a), std::sin(a)};
}

// e^{2 pi i p / G} for integer p.
inline Complex root_of_unity(std::int64_t p, std::int64_t G) {
    std::int64_t r = p % G;
    if (r < 0) r += G;
    return unit_phase(static_cast<double>(r) / static_cast<double>(G));
}

namespace detail {
inline double dot_offset(const Offset& n, std::span<const double> t) {
    double s = 0.0;
    for (std::size_t j = 0; j < n.size(); ++j) s += static_cast<double>(n[j]) * t[j];
    return s;
}
inline void require_t(const PointSet& X, std::span<const double> t, const char* who) {
    if (t.size() != X.dim()) throw UsageError(std::string(who) + ": t must have dim components");
}
} // namespace detail

// M_t = diag(e^{2 pi i z_k . t} I_m).
inline BlockMatrix modulation(std::span<const double> t, std::shared_ptr<const PointSet> X, std::size_t m) {
    require_lattice(*X, "modulation");
    detail::require_t(*X, t, "modulation");
    BlockMatrix M(X, m);
    const auto mi = static_cast<Eigen::Index>(m);
    for (std::size_t k = 0; k < M.size(); ++k) {
        const Complex c = unit_phase(detail::dot_offset(X->lattice_coord(k), t));
        M.set(k, k, Block(Block::Identity(mi, mi) * c));
    }
    return M;
}

// f_A(t) = M_t A M_{-t}: entry (k,l) times e^{2 pi i (z_k - z_l) . t}.
inline BlockMatrix conjugated_symbol(const BlockMatrix& A, std::span<const double> t) {
    const PointSet& X = A.index_set();
    require_lattice(X, "conjugated_symbol");
    detail::require_t(X, t, "conjugated_symbol");
    BlockMatrix F = A;
    F.transform([&](std::size_t k, std::size_t l, Complex* b) {
        const Complex c = unit_phase(detail::dot_offset(lattice_offset(X, k, l), t));
        for (std::size_t i = 0; i < F.block_stride(); ++i) b[i] *= c;
    });
    return F;
}

struct SideDiagonal {
    Offset offset;
    BlockMatrix matrix; // entries with z_k - z_l = offset only
    double sup = 0.0;   // d_A(offset)
};

// D_A(n) for every occurring offset, ascending lexicographic.
inline std::vector<SideDiagonal> side_diagonals(const BlockMatrix& A) {
    const PointSet& X = A.index_set();
    require_lattice(X, "side_diagonals");
    std::map<Offset, std::size_t> slot;
    std::vector<SideDiagonal> out;
    A.for_each([&](std::size_t k, std::size_t l, const Complex*) { slot.emplace(lattice_offset(X, k, l), 0); });
    out.reserve(slot.size());
    std::size_t i = 0;
    for (auto& [n, s] : slot) {
        s = i++;
        out.push_back({n, BlockMatrix(A.index_set_ptr(), A.block_dim()), 0.0});
    }
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        SideDiagonal& d = out[slot.at(lattice_offset(X, k, l))];
        d.matrix.set(k, l, std::span<const Complex>(b, A.block_stride()));
        d.sup = std::max(d.sup, block_norm(b, A.block_dim()));
    });
    return out;
}

// Largest |z_k - z_l|_j over stored nonzero entries, per axis.
inline std::vector<std::int64_t> lattice_bandwidth(const BlockMatrix& A) {
    const PointSet& X = A.index_set();
    require_lattice(X, "lattice_bandwidth");
    std::vector<std::int64_t> bw(X.dim(), 0);
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        if (block_norm(b, A.block_dim()) == 0.0) return;
        const Offset n = lattice_offset(X, k, l);
        for (std::size_t j = 0; j < n.size(); ++j) bw[j] = std::max(bw[j], std::abs(n[j]));
    });
    return bw;
}

using Symbol = std::function<BlockMatrix(std::span<const double>)>;

// Uniform-grid quadrature of int_{T^d} symbol(t) e^{-2 pi i n . t} dt for each
// requested n. Requires grid even with grid >= 2 bandwidth + 2 per axis and
// |n_j| <= grid - bandwidth - 1 so no alias of the symbol support lands on n.
inline std::vector<BlockMatrix> fourier_coefficients(const Symbol& symbol, std::shared_ptr<const PointSet> X, std::size_t m,
                                                     const std::vector<Offset>& offsets, std::int64_t grid,
                                                     const std::vector<std::int64_t>& bandwidth) {
    require_lattice(*X, "fourier_coefficients");
    const std::size_t d = X->dim();
    if (d > 2) throw UsageError("fourier_coefficients: only d = 1 and d = 2 are supported");
    if (grid <= 0 || grid % 2 != 0) throw UsageError("fourier_coefficients: grid must be a positive even integer");
    if (bandwidth.size() != d) throw UsageError("fourier_coefficients: bandwidth rank must equal dim");
    for (std::size_t j = 0; j < d; ++j) {
        if (grid < 2 * bandwidth[j] + 2)
            throw UsageError("fourier_coefficients: grid " + std::to_string(grid) + " aliases symbol bandwidth " +
                             std::to_string(bandwidth[j]) + " (need grid >= 2*bandwidth + 2)");
    }
    for (const auto& n : offsets) {
        if (n.size() != d) throw UsageError("fourier_coefficients: offset rank must equal dim");
        for (std::size_t j = 0; j < d; ++j)
            if (std::abs(n[j]) > grid - bandwidth[j] - 1)
                throw UsageError("fourier_coefficients: requested offset aliases onto the symbol support");
    }
    const auto N = static_cast<Eigen::Index>(X->size() * m);
    std::vector<Eigen::MatrixXcd> acc(offsets.size(), Eigen::MatrixXcd::Zero(N, N));
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= static_cast<std::size_t>(grid);
    std::vector<double> t(d);
    std::vector<std::int64_t> g(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (std::size_t j = d; j-- > 0;) {
            g[j] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(grid));
            rem /= static_cast<std::size_t>(grid);
            t[j] = static_cast<double>(g[j]) / static_cast<double>(grid);
        }
        const Eigen::MatrixXcd S = symbol(t).dense();
        if (S.rows() != N) throw UsageError("fourier_coefficients: symbol returned a matrix of the wrong size");
        parallel_for(offsets.size(), [&](std::size_t o) {
            std::int64_t p = 0;
            for (std::size_t j = 0; j < d; ++j) p += offsets[o][j] * g[j];
            acc[o] += root_of_unity(-p, grid) * S;
        });
    }
    const double inv = 1.0 / static_cast<double>(total);
    std::vector<BlockMatrix> out;
    out.reserve(offsets.size());
    for (auto& a : acc) out.push_back(BlockMatrix::from_dense(X, m, a * inv));
    return out;
}

inline BlockMatrix fourier_coefficient(const Symbol& symbol, std::shared_ptr<const PointSet> X, std::size_t m, const Offset& n,
                                       std::int64_t grid, const std::vector<std::int64_t>& bandwidth) {
    return fourier_coefficients(symbol, std::move(X), m, {n}, grid, bandwidth).front();
}

struct BochnerPhillipsReport {
    bool weight_submultiplicative = false;
    bool weight_symmetric = false;
    bool weight_grs = false;
    double coefficient_deviation = 0.0; // max_n max block diff, coefficient vs D_{A^-1}(n)
    Offset deviation_witness;
    std::size_t offsets_checked = 0;
    double inverse_bgs_norm = 0.0;
    double sup_symbol_norm = 0.0;       // max over sampled t of ||f_A(t)||
    double bgs_norm_unweighted = 0.0;   // ||A||_{C_1}
    bool absconv_holds = false;
    double op_norm = 0.0;
    double young_constant = 0.0;
    double bgs_norm_weighted = 0.0;
    bool young_holds = false;
    std::vector<Offset> boundary_offsets; // |n_j| > extent_j / 2
    bool passed = false;
};

// Inverts A, compares quadrature coefficients of t -> f_{A^-1}(t) with the side
// diagonals of A^-1, and checks ||f_A(t)|| <= ||A||_{C_1} and the Young bound.
inline BochnerPhillipsReport verify_bochner_phillips(const BlockMatrix& A, const WeightSpec& nu, std::int64_t grid,
                                                     int t_samples = 32, std::uint64_t seed = 42) {
    const auto X = A.index_set_ptr();
    require_lattice(*X, "verify_bochner_phillips");
    const std::size_t d = X->dim();
    BochnerPhillipsReport r;

    const auto pairs = grid_pairs(d, -8, 8);
    r.weight_submultiplicative = check_submultiplicative(nu, pairs).passed;
    r.weight_symmetric = check_symmetric(nu, pairs).passed;
    r.weight_grs = true;
    for (std::size_t j = 0; j < d; ++j) {
        Point z(d, 0.0);
        z[j] = 1.0;
        if (!grs_trend_ok(grs_profile(nu, z, 1000))) r.weight_grs = false;
    }

    const BlockMatrix Ainv = invert_finite_section(A);
    const auto bw = lattice_bandwidth(Ainv);
    std::vector<Offset> offsets;
    {
        Offset n(d);
        std::function<void(std::size_t)> rec = [&](std::size_t j) {
            if (j == d) {
                offsets.push_back(n);
                return;
            }
            for (std::int64_t v = -bw[j]; v <= bw[j]; ++v) {
                n[j] = v;
                rec(j + 1);
            }
        };
        rec(0);
    }
    const Symbol sym = [&](std::span<const double> t) { return conjugated_symbol(Ainv, t); };
    const auto coef = fourier_coefficients(sym, X, A.block_dim(), offsets, grid, bw);
    std::map<Offset, const SideDiagonal*> by_offset;
    const auto diags = side_diagonals(Ainv);
    for (const auto& sd : diags) by_offset[sd.offset] = &sd;
    const BlockMatrix zero(X, A.block_dim());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        auto it = by_offset.find(offsets[i]);
        const double dev = max_block_diff(coef[i], it == by_offset.end() ? zero : it->second->matrix);
        if (r.deviation_witness.empty() || dev > r.coefficient_deviation) {
            r.coefficient_deviation = dev;
            r.deviation_witness = offsets[i];
        }
    }
    r.offsets_checked = offsets.size();
    r.inverse_bgs_norm = bgs_norm(Ainv, nu).value;

    r.bgs_norm_unweighted = bgs_norm(A, WeightSpec::one()).value;
    SplitMix64 g(seed);
    std::vector<double> t(d, 0.0);
    for (int s = 0; s < t_samples; ++s) {
        if (s > 0)
            for (auto& tj : t) tj = g.uniform();
        r.sup_symbol_norm = std::max(r.sup_symbol_norm, op_norm_l2(conjugated_symbol(A, t)));
    }
    r.absconv_holds = r.sup_symbol_norm <= r.bgs_norm_unweighted * (1.0 + 1e-10);

    r.op_norm = op_norm_l2(A);
    r.young_constant = check_moderate(WeightSpec::one(), nu, pairs).constant;
    r.bgs_norm_weighted = bgs_norm(A, nu).value;
    r.young_holds = r.op_norm <= r.young_constant * r.bgs_norm_weighted * (1.0 + 1e-10);

    const auto& ext = X->lattice()->extent;
    for (const auto& sd : diags) {
        for (std::size_t j = 0; j < d; ++j)
            if (2 * std::abs(sd.offset[j]) > ext[j]) {
                r.boundary_offsets.push_back(sd.offset);
                break;
            }
    }
    r.passed = r.weight_submultiplicative && r.weight_symmetric && r.weight_grs && r.coefficient_deviation <= 1e-8 &&
               std::isfinite(r.inverse_bgs_norm) && r.absconv_holds && r.young_holds;
    return r;
}

} // namespace opband
