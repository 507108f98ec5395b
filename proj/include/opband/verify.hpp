#pragma once
//
// Property-check suite: seeded random instances, one JSON record per check.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bgs_fourier.hpp"
#include "blockmat.hpp"
#include "generate.hpp"
#include "json_io.hpp"
#include "norms.hpp"
#include "pointset.hpp"
#include "spectral.hpp"
#include "weights.hpp"

namespace opband {

struct VerifyHooks {
    // Adjoint used by every involution-based check; tests swap in a corrupted one.
    std::function<BlockMatrix(const BlockMatrix&)> adjoint = [](const BlockMatrix& A) { return opband::adjoint(A); };
};

struct CheckResult {
    std::string name;
    bool passed = true;
    int instances = 0;
    double margin = std::numeric_limits<double>::infinity(); // min normalized slack; negative on failure
    Json witness = nullptr;
};

struct VerifyOutcome {
    bool passed = true;
    Json report;
};

namespace detail {

struct SuiteContext {
    const ExperimentConfig& cfg;
    const VerifyHooks& hooks;
    std::shared_ptr<const PointSet> X;
    std::shared_ptr<const PointSet> L; // lattice section with the same dim and extent
    WeightSpec weight;

    BlockMatrix random(const std::string& tag, int i, std::shared_ptr<const PointSet> on = nullptr,
                       std::size_t m = 0) const {
        GeneratorSpec g;
        g.weight = weight;
        g.amplitude = cfg.amplitude;
        g.m = m ? m : cfg.m;
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
        return generate_matrix(on ? on : X, g, derive_seed(cfg.seed, h + static_cast<std::uint64_t>(i)));
    }
};

// Records one instance: slack >= 0 passes; the most negative (or smallest) slack is kept.
inline void record(CheckResult& r, double slack, const Json& witness) {
    if (slack < r.margin) {
        r.margin = slack;
        r.witness = witness;
    }
    if (!(slack >= 0.0)) r.passed = false;
}

inline double rel_slack(double lhs, double rhs, double rel_tol) {
    const double scale = std::max(std::abs(rhs), std::numeric_limits<double>::min());
    return (rhs * (1.0 + rel_tol) - lhs) / scale;
}

inline double identity_slack(const BlockMatrix& a, const BlockMatrix& b, double tol) {
    const double scale = std::max({max_block_norm(a), max_block_norm(b), std::numeric_limits<double>::min()});
    return tol - max_block_diff(a, b) / scale;
}

using CheckFn = std::function<void(const SuiteContext&, CheckResult&, int)>;

inline const std::vector<std::pair<std::string, CheckFn>>& registry() {
    static const std::vector<std::pair<std::string, CheckFn>> checks = {
        {"adjoint_involution",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("adj", i);
                 const bool eq = c.hooks.adjoint(c.hooks.adjoint(A)) == A;
                 record(r, eq ? 0.0 : -1.0, {{"instance", i}});
             }
         }},
        {"adjoint_product",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("adjp.a", i), B = c.random("adjp.b", i);
                 record(r, identity_slack(c.hooks.adjoint(A * B), c.hooks.adjoint(B) * c.hooks.adjoint(A), 1e-12),
                        {{"instance", i}});
             }
         }},
        {"leibniz",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("leib.a", i), B = c.random("leib.b", i);
                 for (std::size_t j = 0; j < c.X->dim(); ++j)
                     record(r, identity_slack(derivation(A * B, j), A * derivation(B, j) + derivation(A, j) * B, 1e-12),
                            {{"instance", i}, {"axis", j}});
             }
         }},
        {"generalized_leibniz",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const std::size_t d = c.X->dim();
             std::vector<MultiIndex> alphas;
             for (const auto& a : multi_indices_below(MultiIndex(d, 3))) {
                 unsigned tot = 0;
                 for (auto v : a) tot += v;
                 if (tot >= 1 && tot <= 3) alphas.push_back(a);
             }
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("gl.a", i), B = c.random("gl.b", i);
                 const auto& alpha = alphas[static_cast<std::size_t>(i) % alphas.size()];
                 BlockMatrix rhs(c.X, A.block_dim());
                 for (const auto& beta : multi_indices_below(alpha)) {
                     double binom = 1.0;
                     MultiIndex rest(d);
                     for (std::size_t j = 0; j < d; ++j) {
                         rest[j] = alpha[j] - beta[j];
                         for (unsigned q = 1; q <= beta[j]; ++q) binom = binom * (alpha[j] - beta[j] + q) / q;
                     }
                     rhs = rhs + (derivation_multi(A, beta) * derivation_multi(B, rest)).scaled(binom);
                 }
                 record(r, identity_slack(derivation_multi(A * B, alpha), rhs, 1e-12),
                        {{"instance", i}, {"alpha", alpha}});
             }
         }},
        {"symmetric_derivation",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("symd", i);
                 for (std::size_t j = 0; j < c.X->dim(); ++j) {
                     // [M_j, A]^* = -[M_j, A^*]; i delta_j is the symmetric derivation
                     const bool eq = derivation(c.hooks.adjoint(A), j) == c.hooks.adjoint(derivation(A, j)).scaled(-1.0);
                     record(r, eq ? 0.0 : -1.0, {{"instance", i}, {"axis", j}});
                 }
             }
         }},
        {"quotient_rule",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix K = c.random("quot", i);
                 const auto I = BlockMatrix::identity(c.X, K.block_dim());
                 const BlockMatrix A = I + K.scaled(0.2 / op_norm_l2(K));
                 for (std::size_t j = 0; j < c.X->dim(); ++j) {
                     const auto q = quotient_rule_check(A, j);
                     record(r, 1e-12 - q.relative_deviation, {{"instance", i}, {"axis", j}, {"deviation", q.deviation}});
                 }
             }
         }},
        {"involution_isometry",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const std::vector<std::pair<std::string, NormFn>> norms = {
                 {"jaffard:3", [](const BlockMatrix& A) { return jaffard_norm(A, 3.0); }},
                 {"j_nu:subexp:0.5,0.5",
                  [](const BlockMatrix& A) { return j_nu_norm(A, WeightSpec::subexponential(0.5, 0.5)); }},
                 {"schur_p:polynomial:2,p=1",
                  [](const BlockMatrix& A) { return schur_p_norm(A, WeightSpec::polynomial(2.0), 1.0); }},
                 {"schur_p:polynomial:2,p=2",
                  [](const BlockMatrix& A) { return schur_p_norm(A, WeightSpec::polynomial(2.0), 2.0); }},
             };
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("iso", i);
                 const BlockMatrix As = c.hooks.adjoint(A);
                 for (const auto& [name, f] : norms) {
                     const double a = f(A).value, b = f(As).value;
                     record(r, a == b ? 0.0 : -std::abs(a - b) / std::max(a, b),
                            {{"instance", i}, {"norm", name}, {"norm_A", a}, {"norm_A_star", b}});
                 }
                 const BlockMatrix B = c.random("iso.lat", i, c.L);
                 const double a = bgs_norm(B, WeightSpec::polynomial(1.0)).value;
                 const double b = bgs_norm(c.hooks.adjoint(B), WeightSpec::polynomial(1.0)).value;
                 record(r, a == b ? 0.0 : -std::abs(a - b) / std::max(a, b),
                        {{"instance", i}, {"norm", "bgs:polynomial:1"}, {"norm_A", a}, {"norm_A_star", b}});
             }
         }},
        {"side_diagonal_adjoint",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("sda", i, c.L);
                 const auto dA = side_diagonal_sups(A);
                 const auto dS = side_diagonal_sups(c.hooks.adjoint(A));
                 bool ok = dA.size() == dS.size();
                 Json w = {{"instance", i}};
                 for (const auto& [off, e] : dA) {
                     Offset neg = off;
                     for (auto& v : neg) v = -v;
                     auto it = dS.find(neg);
                     if (it == dS.end() || it->second.sup != e.sup) {
                         ok = false;
                         w["offset"] = off;
                         break;
                     }
                 }
                 record(r, ok ? 0.0 : -1.0, w);
             }
         }},
        {"schur_submultiplicative",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const std::vector<WeightSpec> ws = {WeightSpec::one(), WeightSpec::polynomial(2.0),
                                                 WeightSpec::subexponential(0.5, 0.5)};
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("ssm.a", i), B = c.random("ssm.b", i);
                 const BlockMatrix AB = A * B;
                 for (const auto& w : ws) {
                     const double lhs = schur_p_norm(AB, w, 1.0).value;
                     const double rhs = schur_p_norm(A, w, 1.0).value * schur_p_norm(B, w, 1.0).value;
                     record(r, rel_slack(lhs, rhs, 1e-10), {{"instance", i}, {"weight", w.name()}});
                 }
             }
         }},
        {"bgs_submultiplicative",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const std::vector<WeightSpec> ws = {WeightSpec::one(), WeightSpec::polynomial(1.0)};
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("bsm.a", i, c.L), B = c.random("bsm.b", i, c.L);
                 const BlockMatrix AB = A * B;
                 for (const auto& w : ws) {
                     const double lhs = bgs_norm(AB, w).value;
                     const double rhs = bgs_norm(A, w).value * bgs_norm(B, w).value;
                     record(r, rel_slack(lhs, rhs, 1e-10), {{"instance", i}, {"weight", w.name()}});
                 }
             }
         }},
        {"jaffard_submultiplicative",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (double s : {2.0, 3.0, 6.0}) {
                 if (!(s > static_cast<double>(c.X->dim()))) continue;
                 const double C = convolution_bound_constant(*c.X, s);
                 for (int i = 0; i < n; ++i) {
                     const BlockMatrix A = c.random("jsm.a", i), B = c.random("jsm.b", i);
                     const double lhs = jaffard_norm(A * B, s).value;
                     const double rhs = C * jaffard_norm(A, s).value * jaffard_norm(B, s).value;
                     record(r, rel_slack(lhs, rhs, 1e-10), {{"instance", i}, {"s", s}, {"constant", C}});
                 }
             }
         }},
        {"embedding",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const double s = 3.0;
             if (!(s > static_cast<double>(c.X->dim()))) return;
             const double C = neighbor_sum_sup(*c.X, s);
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("emb", i);
                 record(r, rel_slack(op_norm_l2(A), C * jaffard_norm(A, s).value, 1e-10), {{"instance", i}, {"s", s}});
             }
         }},
        {"schur_bound",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const WeightSpec nu = WeightSpec::polynomial(1.0);
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("sb", i);
                 const auto b = op_norm_bound_lp(A, nu, WeightSpec::one(), 2.0);
                 record(r, rel_slack(op_norm_l2(A), b.bound, 1e-10), {{"instance", i}, {"constant", b.moderate_constant}});
             }
         }},
        {"riesz_thorin",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("rt", i, nullptr, 1);
                 const double rhs = std::max(scalar_l1_norm(A), scalar_linf_norm(A));
                 const double lhs = op_norm_l2(A);
                 record(r, (rhs + 1e-9 - lhs) / std::max(rhs, 1e-300), {{"instance", i}});
             }
         }},
        {"column_bound",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const auto rep = column_lp_bound_check(c.random("cb", i));
                 const double worst = std::max(rep.max_block_norm, rep.max_column_sum);
                 record(r, (rep.op_norm * (1.0 + 1e-9) - worst) / rep.op_norm, {{"instance", i}, {"column", rep.witness_l}});
             }
         }},
        {"solidity",
         [](const SuiteContext& c, CheckResult& r, int n) {
             const std::vector<std::pair<std::string, NormFn>> norms = {
                 {"jaffard:3", [](const BlockMatrix& A) { return jaffard_norm(A, 3.0); }},
                 {"schur_p:polynomial:1,p=1",
                  [](const BlockMatrix& A) { return schur_p_norm(A, WeightSpec::polynomial(1.0), 1.0); }},
                 {"bus:polynomial:0.5,s=2",
                  [](const BlockMatrix& A) { return bus_norm(A, WeightSpec::polynomial(0.5), 2.0); }},
             };
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("sol", i);
                 BlockMatrix B = A;
                 SplitMix64 g(derive_seed(c.cfg.seed, 0x501d + static_cast<std::uint64_t>(i)));
                 B.transform([&](std::size_t, std::size_t, Complex* b) {
                     const double f = g.uniform();
                     for (std::size_t e = 0; e < B.block_stride(); ++e) b[e] *= f;
                 });
                 for (const auto& [name, f] : norms)
                     record(r, rel_slack(f(B).value, f(A).value, 0.0), {{"instance", i}, {"norm", name}});
             }
         }},
        {"side_diagonal_convolution",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix A = c.random("sdc.a", i, c.L), B = c.random("sdc.b", i, c.L);
                 const auto dA = side_diagonal_sups(A), dB = side_diagonal_sups(B), dAB = side_diagonal_sups(A * B);
                 for (const auto& [off, e] : dAB) {
                     double conv = 0.0;
                     for (const auto& [p, ea] : dA) {
                         Offset q = off;
                         for (std::size_t j = 0; j < q.size(); ++j) q[j] -= p[j];
                         auto it = dB.find(q);
                         if (it != dB.end()) conv += ea.sup * it->second.sup;
                     }
                     record(r, rel_slack(e.sup, conv, 1e-10), {{"instance", i}, {"offset", off}});
                 }
             }
         }},
        {"gelfand_monotone",
         [](const SuiteContext& c, CheckResult& r, int n) {
             for (int i = 0; i < n; ++i) {
                 const BlockMatrix K = c.random("gm", i);
                 const BlockMatrix A = linear_combination(0.5, K, 0.5, opband::adjoint(K));
                 const auto rep = gelfand_radius(A, ScalarNormFn([](const BlockMatrix& B) { return op_norm_l2(B); }), 16,
                                                 "op_norm_l2", false);
                 for (const auto& [k, v] : rep.gelfand_sequence)
                     record(r, (v - rep.radius_estimate + 1e-9) / std::max(rep.radius_estimate, 1e-300),
                            {{"instance", i}, {"n", k}});
             }
         }},
    };
    return checks;
}

} // namespace detail

inline constexpr int default_instances = 4;

inline std::vector<std::string> verify_check_names() {
    std::vector<std::string> names;
    for (const auto& [n, f] : detail::registry()) names.push_back(n);
    return names;
}

inline Json config_to_json(const ExperimentConfig& c) {
    Json j;
    j["seed"] = c.seed;
    j["pointset"] = {{"kind", c.pointset.kind},
                     {"dim", c.pointset.dim},
                     {"extent", c.pointset.extent},
                     {"spacing", c.pointset.spacing},
                     {"jitter", c.pointset.jitter}};
    j["generator"] = {{"weight", c.weight}, {"amplitude", c.amplitude}, {"m", c.m}};
    return j;
}

// Runs the configured checks (all registered checks when the pipeline is absent).
inline VerifyOutcome run_verify_suite(const ExperimentConfig& cfg, const VerifyHooks& hooks = {}) {
    std::vector<std::string> names = cfg.pipeline.value_or(verify_check_names());
    for (const auto& n : names) {
        const auto& reg = detail::registry();
        if (std::none_of(reg.begin(), reg.end(), [&](const auto& e) { return e.first == n; }))
            throw UsageError("verify: unknown check '" + n + "'");
    }
    VerifyOutcome out;
    Json checks = Json::array();
    if (!names.empty()) {
        auto X = std::make_shared<const PointSet>(make_pointset(cfg.pointset, cfg.seed));
        PointSetSpec lat = cfg.pointset;
        lat.kind = "lattice";
        lat.spacing = 1.0;
        auto L = std::make_shared<const PointSet>(make_pointset(lat, cfg.seed));
        const detail::SuiteContext ctx{cfg, hooks, X, L, parse_weight(cfg.weight)};
        for (const auto& [name, fn] : detail::registry()) {
            if (std::find(names.begin(), names.end(), name) == names.end()) continue;
            CheckResult r;
            r.name = name;
            auto it = cfg.instances.find(name);
            r.instances = it == cfg.instances.end() ? default_instances : it->second;
            if (r.instances < 0) throw UsageError("verify: negative instance count for '" + name + "'");
            fn(ctx, r, r.instances);
            if (!std::isfinite(r.margin)) r.margin = 0.0;
            out.passed = out.passed && r.passed;
            checks.push_back({{"name", r.name},
                              {"passed", r.passed},
                              {"instances", r.instances},
                              {"margin", r.margin},
                              {"witness", r.witness}});
        }
    }
    out.report["schema"] = report_schema;
    out.report["config"] = config_to_json(cfg);
    out.report["checks"] = checks;
    out.report["passed"] = out.passed;
    return out;
}

} // namespace opband
