#pragma once
//
// Operator norms on l^p(X; C^m), Gelfand-formula spectral radii, finite-section
// inversion and decay profiling.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blockmat.hpp"
#include "norms.hpp"
#include "random.hpp"
#include "weights.hpp"

namespace opband {

inline constexpr double default_power_tol = 1e-10;
inline constexpr int default_power_max_iter = 10000;
inline constexpr std::uint64_t power_start_seed = 0x0b5eed5eedULL;

namespace detail {
inline BlockVector seeded_unit_vector(const BlockMatrix& A, std::uint64_t seed) {
    SplitMix64 g(seed);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(A.size() * A.block_dim()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double re = g.uniform(-1.0, 1.0);
        const double im = g.uniform(-1.0, 1.0);
        v(i) = Complex(re, im);
    }
    v /= v.norm();
    return BlockVector(A.index_set_ptr(), A.block_dim(), std::move(v));
}
} // namespace detail

// Largest singular value by power iteration on A*A. Stops when the projected
// remaining error of the Rayleigh quotient rho = ||A x||^2 is <= tol relative
// and the squared relative residual ||A*A x - rho x||^2 / rho^2 <= tol.
// The projection uses the observed contraction r of successive changes:
// remaining ~ change * r / (1 - r), so a slowly converging run is not cut
// off just because one step moved little.
inline double op_norm_l2(const BlockMatrix& A, double tol = default_power_tol, int max_iter = default_power_max_iter) {
    if (!(tol > 0.0)) throw UsageError("op_norm_l2: tol must be > 0");
    if (max_abs_entry(A) == 0.0) return 0.0;
    // well-filled matrices iterate on the dense Gram matrix A*A
    const double nb = static_cast<double>(A.size());
    const bool use_gram = static_cast<double>(A.stored_blocks()) >= nb * nb / 4;
    Eigen::MatrixXcd G;
    if (use_gram) {
        const Eigen::MatrixXcd D = A.dense();
        G.noalias() = D.adjoint() * D;
    }
    Eigen::VectorXcd x = detail::seeded_unit_vector(A, power_start_seed).data();
    double rho_prev = -1.0;
    double rho = 0.0;
    double change_prev = -1.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd z;
        if (use_gram) {
            z.noalias() = G.selfadjointView<Eigen::Lower>() * x;
            rho = x.dot(z).real();
        } else {
            const Eigen::VectorXcd y = apply(A, BlockVector(A.index_set_ptr(), A.block_dim(), x)).data();
            rho = y.squaredNorm();
            z = apply_adjoint(A, BlockVector(A.index_set_ptr(), A.block_dim(), y)).data();
        }
        if (rho == 0.0) {
            // start vector in the kernel; restart from a different seed
            x = detail::seeded_unit_vector(A, power_start_seed + static_cast<std::uint64_t>(it) + 1).data();
            continue;
        }
        const double res = (z - rho * x).squaredNorm() / (rho * rho);
        bool settled = false;
        if (rho_prev > 0.0) {
            const double change = std::abs(rho - rho_prev);
            double remaining = change;
            if (change_prev > 0.0 && change > 0.0) {
                const double r = std::min(change / change_prev, 0.999999);
                remaining = std::max(change, change * r / (1.0 - r));
            }
            // changes at rounding level carry no rate information
            settled = remaining <= tol * rho || change <= 64 * std::numeric_limits<double>::epsilon() * rho;
            change_prev = change;
        }
        if (settled && res <= tol) return std::sqrt(rho);
        rho_prev = rho;
        z /= z.norm();
        x = std::move(z);
    }
    throw NumericalError("op_norm_l2: power iteration did not converge within the iteration cap", std::sqrt(rho));
}

// Entrywise l^1 -> l^1 and l^inf -> l^inf norms of the densified matrix.
inline double scalar_l1_norm(const BlockMatrix& A) {
    return A.dense().cwiseAbs().colwise().sum().maxCoeff();
}
inline double scalar_linf_norm(const BlockMatrix& A) {
    return A.dense().cwiseAbs().rowwise().sum().maxCoeff();
}

struct LpBound {
    double bound = 0.0;
    double moderate_constant = 0.0;
    double schur_norm = 0.0;
    double p = 2.0;
};

// C ||A||_{S^1_nu} with C the measured nu-moderateness constant of m_weight.
inline LpBound op_norm_bound_lp(const BlockMatrix& A, const WeightSpec& nu, const WeightSpec& m_weight, double p) {
    if (!(p >= 1.0)) throw UsageError("op_norm_bound_lp: p must be >= 1 (inf allowed)");
    const auto mod = check_moderate(m_weight, nu, default_weight_samples(A.index_set()));
    if (!mod.report.passed)
        throw Error(ExitCode::property_failure, "op_norm_bound_lp: m_weight is not nu-moderate on the sampled pairs");
    LpBound b;
    b.p = p;
    b.moderate_constant = mod.constant;
    b.schur_norm = schur_p_norm(A, nu, 1.0).value;
    b.bound = b.moderate_constant * b.schur_norm;
    return b;
}

struct ColumnBoundReport {
    double max_block_norm = 0.0;
    double max_column_sum = 0.0; // sup over l and sampled unit f of (sum_k ||A_{k,l} f||^2)^{1/2}
    double op_norm = 0.0;
    std::int64_t witness_l = -1;
    bool passed = true;
};

// Checks sup ||A_{k,l}|| <= ||A|| and (sum_k ||A_{k,l} f||^2)^{1/2} <= ||A|| for
// sampled unit vectors f (p = 2 only).
inline ColumnBoundReport column_lp_bound_check(const BlockMatrix& A, double p = 2.0, int samples_per_column = 8,
                                               std::uint64_t seed = 7) {
    if (p != 2.0) throw UsageError("column_lp_bound_check: only p = 2 is supported (compared against op_norm_l2)");
    const std::size_t m = A.block_dim();
    const auto mi = static_cast<Eigen::Index>(m);
    ColumnBoundReport r;
    r.op_norm = op_norm_l2(A);
    r.max_block_norm = max_block_norm(A);
    const BlockMatrix At = adjoint(A); // row l of A* lists column l of A
    SplitMix64 g(seed);
    for (std::size_t l = 0; l < A.size(); ++l) {
        for (int s = 0; s < samples_per_column; ++s) {
            Eigen::VectorXcd f(mi);
            for (Eigen::Index i = 0; i < mi; ++i) {
                const double re = g.uniform(-1.0, 1.0);
                f(i) = Complex(re, g.uniform(-1.0, 1.0));
            }
            f /= f.norm();
            double acc = 0.0;
            const auto& row = At.row(l);
            for (std::size_t i = 0; i < row.cols.size(); ++i)
                acc += (ConstBlockMap(row.vals.data() + i * m * m, mi, mi).adjoint() * f).squaredNorm();
            const double v = std::sqrt(acc);
            if (v > r.max_column_sum) {
                r.max_column_sum = v;
                r.witness_l = static_cast<std::int64_t>(l);
            }
        }
    }
    const double slack = 1e-9 * std::max(1.0, r.op_norm);
    r.passed = r.max_block_norm <= r.op_norm + slack && r.max_column_sum <= r.op_norm + slack;
    return r;
}

struct SpectralReport {
    double op_norm_l2 = 0.0;
    std::vector<std::pair<std::size_t, double>> gelfand_sequence; // (n, ||A^n||^{1/n})
    double radius_estimate = 0.0;
    // v_n^2 / v_{n/2} from the last two terms; cancels a C^{1/n} prefactor.
    double extrapolated_estimate = 0.0;
    std::string norm_name;
    std::string method = "repeated squaring with power-of-two rescaling";
};

using ScalarNormFn = std::function<double(const BlockMatrix&)>;

// ||A^{2^j}||^{1/2^j} for 2^j <= n_max. Iterates are kept as P_j 2^{E_j}
// with P_j rescaled by an exact power of two after each squaring.
inline SpectralReport gelfand_radius(const BlockMatrix& A, const ScalarNormFn& norm_fn, std::size_t n_max,
                                     std::string norm_name = "custom", bool with_op_norm = true) {
    if (n_max < 2 || (n_max & (n_max - 1)) != 0) throw UsageError("gelfand_radius: n_max must be a power of two >= 2");
    SpectralReport r;
    r.norm_name = std::move(norm_name);
    if (with_op_norm) r.op_norm_l2 = op_norm_l2(A);
    BlockMatrix P = A;
    double E = 0.0; // log2 of the accumulated scale
    bool zero = false;
    for (std::size_t n = 1; n <= n_max; n *= 2) {
        if (n > 1 && !zero) {
            P = P * P;
            E *= 2.0;
            const double mx = max_abs_entry(P);
            if (mx == 0.0) {
                zero = true;
            } else {
                const int e = std::ilogb(mx);
                P.transform([&](std::size_t, std::size_t, Complex* b) {
                    for (std::size_t i = 0; i < P.block_stride(); ++i)
                        b[i] = Complex(std::ldexp(b[i].real(), -e), std::ldexp(b[i].imag(), -e));
                });
                E += e;
            }
        }
        double v = 0.0;
        if (!zero) {
            const double nv = norm_fn(P);
            if (!std::isfinite(nv)) throw NumericalError("gelfand_radius: norm overflow despite rescaling", nv);
            if (nv > 0.0) v = std::exp((std::log(nv) + E * std::log(2.0)) / static_cast<double>(n));
            else zero = true;
        }
        r.gelfand_sequence.emplace_back(n, v);
    }
    r.radius_estimate = r.gelfand_sequence.back().second;
    const double prev = r.gelfand_sequence[r.gelfand_sequence.size() - 2].second;
    r.extrapolated_estimate = prev > 0.0 ? r.radius_estimate * r.radius_estimate / prev : 0.0;
    return r;
}

inline SpectralReport gelfand_radius(const BlockMatrix& A, const NormFn& norm_fn, std::size_t n_max, std::string name) {
    return gelfand_radius(
        A, ScalarNormFn([&](const BlockMatrix& B) { return norm_fn(B).value; }), n_max, std::move(name));
}

inline constexpr double default_cond_cap = 1e8;

// Dense LU inverse re-blocked over X; rejects condition estimates above cond_cap
// and verifies A A^{-1} = I to 1e-9 in max block norm.
inline BlockMatrix invert_finite_section(const BlockMatrix& A, double cond_cap = default_cond_cap) {
    const Eigen::MatrixXcd D = A.dense();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(D);
    const double rc = lu.rcond();
    if (!(rc > 0.0)) throw NumericalError("invert_finite_section: matrix is singular", std::numeric_limits<double>::infinity());
    const double cond = 1.0 / rc;
    if (cond > cond_cap)
        throw NumericalError("invert_finite_section: condition estimate " + std::to_string(cond) + " exceeds cap", cond);
    const Eigen::MatrixXcd Dinv = lu.inverse();
    BlockMatrix Ainv = BlockMatrix::from_dense(A.index_set_ptr(), A.block_dim(), Dinv);
    const double err = max_block_diff(A * Ainv, BlockMatrix::identity(A.index_set_ptr(), A.block_dim()));
    if (!(err <= 1e-9)) throw NumericalError("invert_finite_section: residual ||A A^-1 - I|| too large", err);
    return Ainv;
}

struct NeumannResult {
    BlockMatrix inverse;
    double q = 0.0;          // ||I - A||
    std::size_t terms = 0;   // N, the last power summed
};

// sum_{n=0}^{N} (I-A)^n with q^{N+1}/(1-q) < tol. N is rounded up to 2^k - 1 and
// the sum built by doubling: S_{2K} = S_K + B^K S_K.
inline NeumannResult neumann_inverse_detailed(const BlockMatrix& A, double tol = 1e-12) {
    if (!(tol > 0.0)) throw UsageError("neumann_inverse: tol must be > 0");
    const auto X = A.index_set_ptr();
    const BlockMatrix I = BlockMatrix::identity(X, A.block_dim());
    const BlockMatrix B = I - A;
    const double q = op_norm_l2(B);
    if (!(q < 1.0)) throw UsageError("neumann_inverse: precondition ||I - A|| < 1 violated (q = " + std::to_string(q) + ")");
    std::size_t N = 0;
    if (q > 0.0) {
        while (std::pow(q, static_cast<double>(N + 1)) / (1.0 - q) >= tol) ++N;
    }
    BlockMatrix S = I;
    BlockMatrix Bk = B; // B^K with K terms in S
    std::size_t K = 1;
    while (K - 1 < N) {
        S = S + Bk * S;
        K *= 2;
        if (K - 1 < N) Bk = Bk * Bk;
    }
    S.prune_zeros();
    return {std::move(S), q, K - 1};
}

inline BlockMatrix neumann_inverse(const BlockMatrix& A, double tol = 1e-12) {
    return neumann_inverse_detailed(A, tol).inverse;
}

struct DecayProfile {
    std::vector<double> bucket_edges;   // nb + 1 edges, i * width
    std::vector<double> bucket_sup;     // sup block norm per bucket
    std::vector<double> bucket_radius;  // radius attaining the sup (0 when empty)
    std::optional<double> fitted_exponent;
    std::optional<std::pair<std::size_t, std::size_t>> fit_range; // first, last bucket used
    std::size_t fit_points = 0;
};

// Buckets |k-l| into [i w, (i+1) w). The fit regresses log sup on log(1 + r*)
// with r* the radius attaining each bucket sup, over nonzero buckets whose lower
// edge lies below 0.8 diameter.
inline DecayProfile decay_profile(const BlockMatrix& A, double bucket_width) {
    if (!(bucket_width > 0.0)) throw UsageError("decay_profile: bucket_width must be > 0");
    const PointSet& X = A.index_set();
    const double diam = X.diameter();
    const auto nb = static_cast<std::size_t>(std::floor(diam / bucket_width)) + 1;
    DecayProfile p;
    p.bucket_edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) p.bucket_edges[i] = static_cast<double>(i) * bucket_width;
    p.bucket_sup.assign(nb, 0.0);
    p.bucket_radius.assign(nb, 0.0);
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        const double r = X.distance(k, l);
        const auto i = std::min(nb - 1, static_cast<std::size_t>(std::floor(r / bucket_width)));
        const double bn = block_norm(b, A.block_dim());
        if (bn > p.bucket_sup[i]) {
            p.bucket_sup[i] = bn;
            p.bucket_radius[i] = r;
        }
    });
    std::vector<double> xs, ys;
    std::size_t first = 0, last = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        if (p.bucket_sup[i] <= 0.0 || p.bucket_edges[i] >= 0.8 * diam) continue;
        if (xs.empty()) first = i;
        last = i;
        xs.push_back(std::log1p(p.bucket_radius[i]));
        ys.push_back(std::log(p.bucket_sup[i]));
    }
    p.fit_points = xs.size();
    if (xs.size() >= 3) {
        const auto n = static_cast<double>(xs.size());
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= n;
        my /= n;
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        if (sxx > 0.0) {
            p.fitted_exponent = sxy / sxx;
            p.fit_range = std::make_pair(first, last);
        }
    }
    return p;
}

// ||A^2||_{J_s} / (||A||_{J_s}^{2-g} ||A||_{B(l2)}^g), g = 1 - d/s.
// Same ratio with the operator norm of A supplied by the caller.
inline double lemma_gamma_ratio(const BlockMatrix& A, double s, double op) {
    const PointSet& X = A.index_set();
    detail::require_s_above_dim(X, s, "lemma_gamma_ratio");
    if (!(op >= 0.0)) throw UsageError("lemma_gamma_ratio: operator norm must be >= 0");
    const double j1 = jaffard_norm(A, s).value;
    if (j1 == 0.0) throw UsageError("lemma_gamma_ratio: zero matrix");
    const double gamma = 1.0 - static_cast<double>(X.dim()) / s;
    const double j2 = jaffard_norm(A * A, s).value;
    return j2 / (std::pow(j1, 2.0 - gamma) * std::pow(op, gamma));
}

inline double lemma_gamma_ratio(const BlockMatrix& A, double s) {
    detail::require_s_above_dim(A.index_set(), s, "lemma_gamma_ratio");
    if (max_abs_entry(A) == 0.0) throw UsageError("lemma_gamma_ratio: zero matrix");
    return lemma_gamma_ratio(A, s, op_norm_l2(A));
}

struct QuotientRuleReport {
    double deviation = 0.0;          // max ||delta(A^-1) + A^-1 delta(A) A^-1||_block
    double relative_deviation = 0.0; // deviation / max block norm of delta(A^-1)
    double inverse_graph_norm = 0.0; // ||A^-1||_J + ||delta A^-1||_J
    double graph_norm = 0.0;         // ||A||_J + ||delta A||_J
    double inverse_jaffard = 0.0;
    double constant = 0.0;           // C with ||AB||_J <= C ||A||_J ||B||_J
    double bound = 0.0;              // (C ||A^-1||_J)^2 ||A||_{D}
    bool estimate_holds = true;
};

// delta_j(A^{-1}) against -A^{-1} delta_j(A) A^{-1}, plus the graph-norm
// estimate with base norm J_s; the algebra constant C comes from the
// convolution bound so the estimate is certified.
inline QuotientRuleReport quotient_rule_check(const BlockMatrix& A, std::size_t j, double s = 3.0,
                                              double cond_cap = default_cond_cap) {
    const BlockMatrix Ainv = invert_finite_section(A, cond_cap);
    const BlockMatrix lhs = derivation(Ainv, j);
    const BlockMatrix rhs = (Ainv * derivation(A, j) * Ainv).scaled(-1.0);
    QuotientRuleReport r;
    r.deviation = max_block_diff(lhs, rhs);
    const double scale = max_block_norm(lhs);
    r.relative_deviation = scale > 0.0 ? r.deviation / scale : r.deviation;
    r.inverse_jaffard = jaffard_norm(Ainv, s).value;
    r.inverse_graph_norm = r.inverse_jaffard + jaffard_norm(lhs, s).value;
    r.graph_norm = jaffard_norm(A, s).value + jaffard_norm(derivation(A, j), s).value;
    r.constant = A.index_set().dim() < s ? convolution_bound_constant(A.index_set(), s) : 0.0;
    if (r.constant > 0.0) {
        const double c = r.constant * r.inverse_jaffard;
        r.bound = c * c * r.graph_norm;
        r.estimate_holds = r.inverse_graph_norm <= r.bound * (1.0 + 1e-12);
    }
    return r;
}

} // namespace opband
