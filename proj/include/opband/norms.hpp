#pragma once
//
// Norm functionals on finite BlockMatrix instances: Jaffard, J_nu, Schur S^p_nu,
// BGS (C_nu), B_{u,s} and anisotropic derivation norms.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "blockmat.hpp"
#include "pointset.hpp"
#include "weights.hpp"

namespace opband {

struct NormReport {
    std::string tag;
    double value = 0.0;
    std::map<std::string, double> params;
    std::string weight; // weight name where one applies
    // Witness: "pair" -> {k,l}; "row"/"column" -> {index}; "offset" -> lattice offset.
    std::string witness_kind;
    std::vector<std::int64_t> witness;
};

using NormFn = std::function<NormReport(const BlockMatrix&)>;

inline NormReport j_nu_norm(const BlockMatrix& A, const WeightSpec& nu) {
    NormReport r;
    r.tag = "j_nu";
    r.weight = nu.name();
    r.witness_kind = "pair";
    const PointSet& X = A.index_set();
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        const double bn = block_norm(b, A.block_dim());
        if (bn == 0.0) return;
        const double v = bn * nu.at(X, k, l);
        if (v > r.value) {
            r.value = v;
            r.witness = {static_cast<std::int64_t>(k), static_cast<std::int64_t>(l)};
        }
    });
    if (!std::isfinite(r.value)) throw NumericalError("j_nu_norm: non-finite value", r.value);
    return r;
}

// sup ||A_{k,l}|| (1+|k-l|)^s
inline NormReport jaffard_norm(const BlockMatrix& A, double s) {
    if (!(s >= 0.0)) throw UsageError("jaffard_norm: s must be >= 0");
    NormReport r = j_nu_norm(A, WeightSpec::polynomial(s));
    r.tag = "jaffard";
    r.weight.clear();
    r.params["s"] = s;
    return r;
}

inline NormReport schur_p_norm(const BlockMatrix& A, const WeightSpec& nu, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("schur_p_norm: p must lie in [1, inf)");
    const PointSet& X = A.index_set();
    const std::size_t n = A.size();
    auto term = [&](double bn, std::size_t k, std::size_t l) {
        const double v = bn * nu.at(X, k, l);
        return p == 1.0 ? v : std::pow(v, p);
    };
    std::vector<double> rows(n, 0.0), cols(n, 0.0);
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        const double bn = block_norm(b, A.block_dim());
        if (bn == 0.0) return;
        const double t = term(bn, k, l);
        rows[k] += t;
        cols[l] += t;
    });
    NormReport r;
    r.tag = "schur_p";
    r.weight = nu.name();
    r.params["p"] = p;
    r.witness_kind = "row";
    r.witness = {0};
    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (rows[k] > best) {
            best = rows[k];
            r.witness_kind = "row";
            r.witness = {static_cast<std::int64_t>(k)};
        }
    for (std::size_t l = 0; l < n; ++l)
        if (cols[l] > best) {
            best = cols[l];
            r.witness_kind = "column";
            r.witness = {static_cast<std::int64_t>(l)};
        }
    r.value = p == 1.0 ? best : std::pow(best, 1.0 / p);
    if (!std::isfinite(r.value)) throw NumericalError("schur_p_norm: non-finite value", r.value);
    return r;
}

using Offset = std::vector<std::int64_t>;

struct SideDiagonalSup {
    double sup = 0.0;
    std::size_t witness_k = 0; // row attaining the sup (first in index order)
};

inline void require_lattice(const PointSet& X, const char* who) {
    if (!X.is_lattice())
        throw UsageError(std::string(who) +
                         ": index set is not lattice-flagged; side diagonals are only defined on integer lattice sections");
}

// Offset n = z_k - z_l of entry (k,l) in lattice coordinates.
inline Offset lattice_offset(const PointSet& X, std::size_t k, std::size_t l) {
    Offset zk = X.lattice_coord(k);
    const Offset zl = X.lattice_coord(l);
    for (std::size_t j = 0; j < zk.size(); ++j) zk[j] -= zl[j];
    return zk;
}

// d_A(n) = sup_k ||A_{k,k-n}|| over every occurring offset n (nonzero blocks only).
inline std::map<Offset, SideDiagonalSup> side_diagonal_sups(const BlockMatrix& A) {
    const PointSet& X = A.index_set();
    require_lattice(X, "side_diagonal_sups");
    std::map<Offset, SideDiagonalSup> d;
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        const double bn = block_norm(b, A.block_dim());
        if (bn == 0.0) return;
        auto& e = d[lattice_offset(X, k, l)];
        if (bn > e.sup) {
            e.sup = bn;
            e.witness_k = k;
        }
    });
    return d;
}

// sum_n d_A(n) nu(n), with nu evaluated at the spatial displacement spacing * n.
inline NormReport bgs_norm(const BlockMatrix& A, const WeightSpec& nu) {
    const PointSet& X = A.index_set();
    require_lattice(X, "bgs_norm");
    const double h = X.lattice()->spacing;
    NormReport r;
    r.tag = "bgs";
    r.weight = nu.name();
    r.witness_kind = "offset";
    double best = 0.0;
    std::vector<double> terms;
    for (const auto& [n, e] : side_diagonal_sups(A)) {
        Point x(n.size());
        for (std::size_t j = 0; j < n.size(); ++j) x[j] = h * static_cast<double>(n[j]);
        const double t = e.sup * nu(x);
        terms.push_back(t);
        if (t > best) {
            best = t;
            r.witness = n;
        }
    }
    // ascending order: the sum then depends only on the multiset of terms, so
    // reflecting every offset (A -> A*) leaves it bit-identical
    std::sort(terms.begin(), terms.end());
    for (double t : terms) r.value += t;
    if (!std::isfinite(r.value)) throw NumericalError("bgs_norm: non-finite value", r.value);
    return r;
}

// 2^s ||A||_{S^1_u} + ||A||_{J_{u nu_s}}
inline NormReport bus_norm(const BlockMatrix& A, const WeightSpec& u, double s) {
    if (!(s > 0.0)) throw UsageError("bus_norm: s must be > 0");
    const NormReport schur = schur_p_norm(A, u, 1.0);
    const NormReport jn = j_nu_norm(A, WeightSpec::product(u, WeightSpec::polynomial(s)));
    NormReport r;
    r.tag = "bus";
    r.weight = u.name();
    r.params["s"] = s;
    r.value = std::exp2(s) * schur.value + jn.value;
    r.witness_kind = jn.witness_kind;
    r.witness = jn.witness;
    return r;
}

// All beta <= alpha componentwise, lexicographic order.
inline std::vector<MultiIndex> multi_indices_below(const MultiIndex& alpha) {
    std::vector<MultiIndex> out;
    MultiIndex beta(alpha.size(), 0);
    while (true) {
        out.push_back(beta);
        std::size_t j = alpha.size();
        while (j-- > 0) {
            if (beta[j] < alpha[j]) {
                ++beta[j];
                break;
            }
            beta[j] = 0;
        }
        if (j == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

// sum_{beta <= alpha} base(delta^beta A)
inline NormReport aniso_norm(const BlockMatrix& A, const NormFn& base, const MultiIndex& alpha) {
    if (alpha.size() != A.index_set().dim()) throw UsageError("aniso_norm: multi-index rank must equal dim");
    NormReport r;
    r.tag = "aniso";
    double best = -1.0;
    for (const auto& beta : multi_indices_below(alpha)) {
        const NormReport b = base(derivation_multi(A, beta));
        if (r.weight.empty()) r.weight = b.tag;
        r.value += b.value;
        if (b.value > best) {
            best = b.value;
            r.witness_kind = b.witness_kind;
            r.witness = b.witness;
        }
        for (const auto& [key, v] : b.params) r.params[key] = v;
    }
    for (std::size_t j = 0; j < alpha.size(); ++j) r.params["alpha" + std::to_string(j)] = alpha[j];
    return r;
}

// Selects one of the norm functionals above by tag.
struct NormSpec {
    std::string tag = "jaffard";
    double s = 3.0;
    double p = 1.0;
    std::optional<WeightSpec> weight; // nu for j_nu/schur_p/bgs, u for bus
    MultiIndex alpha;                 // aniso only
    std::string base_tag = "jaffard"; // aniso only
};

inline NormFn make_norm_fn(const NormSpec& spec) {
    const WeightSpec w = spec.weight.value_or(WeightSpec::one());
    const std::string& t = spec.tag;
    if (t == "jaffard") return [s = spec.s](const BlockMatrix& A) { return jaffard_norm(A, s); };
    if (t == "j_nu") return [w](const BlockMatrix& A) { return j_nu_norm(A, w); };
    if (t == "schur_p") return [w, p = spec.p](const BlockMatrix& A) { return schur_p_norm(A, w, p); };
    if (t == "bgs") return [w](const BlockMatrix& A) { return bgs_norm(A, w); };
    if (t == "bus") return [w, s = spec.s](const BlockMatrix& A) { return bus_norm(A, w, s); };
    if (t == "aniso") {
        if (spec.base_tag == "aniso") throw UsageError("aniso base norm cannot itself be aniso");
        NormSpec b = spec;
        b.tag = spec.base_tag;
        NormFn base = make_norm_fn(b);
        return [base, alpha = spec.alpha](const BlockMatrix& A) { return aniso_norm(A, base, alpha); };
    }
    throw UsageError("unknown norm tag '" + t + "' (expected jaffard, j_nu, schur_p, bgs, bus, aniso)");
}

struct EquivalentNormBounds {
    double lower = 0.0;
    double upper = 0.0;
    double constant = 0.0;           // C in ||AB||_J <= C ||A||_J ||B||_J
    std::size_t lower_witness = 0;   // probe index attaining the lower bound
};

// lower = max_B ||A B||_{J_s} over probes rescaled to ||B||_{J_s} = 1;
// upper = C ||A||_{J_s}.
inline EquivalentNormBounds jaffard_opnorm_equivalent_bounds(const BlockMatrix& A, double s,
                                                            const std::vector<BlockMatrix>& probes) {
    if (probes.empty()) throw UsageError("jaffard_opnorm_equivalent_bounds: probe list is empty");
    detail::require_s_above_dim(A.index_set(), s, "jaffard_opnorm_equivalent_bounds");
    EquivalentNormBounds b;
    b.constant = convolution_bound_constant(A.index_set(), s);
    b.upper = b.constant * jaffard_norm(A, s).value;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        require_same_shape(A, probes[i], "jaffard_opnorm_equivalent_bounds");
        const double pn = jaffard_norm(probes[i], s).value;
        if (pn == 0.0) throw UsageError("jaffard_opnorm_equivalent_bounds: zero probe cannot be normalized");
        const double v = jaffard_norm(A * probes[i], s).value / pn;
        if (v > b.lower) {
            b.lower = v;
            b.lower_witness = i;
        }
    }
    return b;
}

} // namespace opband
