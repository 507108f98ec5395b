#pragma once
//
// Parametric weight functions on R^d and sampled predicates for the weight
// classes (submultiplicative, moderate, GRS, subconvolutive).
//

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "pointset.hpp"

namespace opband {

using Point = std::vector<double>;

inline double euclidean_norm(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc);
}

class WeightSpec {
public:
    struct Polynomial { double s; };                       // (1+|x|)^s
    struct Subexponential { double alpha, beta; };         // e^{alpha |x|^beta}
    struct Mixed { double alpha, beta, s, t; };            // e^{alpha|x|^beta} (1+|x|)^s log(e+|x|)^t
    struct EpsilonScaled { double delta, eps; };           // (1+eps|x|)^delta
    struct ConstantOne {};
    struct Custom {
        std::string name;
        std::function<double(std::span<const double>)> fn;
    };
    struct Product {
        std::shared_ptr<const WeightSpec> a, b;
    };
    using Kind = std::variant<Polynomial, Subexponential, Mixed, EpsilonScaled, ConstantOne, Custom, Product>;

    static WeightSpec polynomial(double s) {
        if (!(s >= 0.0)) throw UsageError("polynomial weight: s must be >= 0");
        return WeightSpec(Polynomial{s});
    }
    static WeightSpec subexponential(double alpha, double beta) {
        if (!(alpha > 0.0) || !(beta > 0.0 && beta < 1.0))
            throw UsageError("subexponential weight: need alpha > 0 and beta in (0,1)");
        return WeightSpec(Subexponential{alpha, beta});
    }
    static WeightSpec mixed(double alpha, double beta, double s, double t) {
        if (!(alpha > 0.0) || !(beta > 0.0 && beta < 1.0) || !(s >= 0.0) || !(t >= 0.0))
            throw UsageError("mixed weight: need alpha > 0, beta in (0,1), s >= 0, t >= 0");
        return WeightSpec(Mixed{alpha, beta, s, t});
    }
    static WeightSpec epsilon_scaled(double delta, double eps) {
        if (!(delta > 0.0 && delta <= 1.0) || !(eps > 0.0 && eps <= 1.0))
            throw UsageError("epsilon-scaled weight: need delta, eps in (0,1]");
        return WeightSpec(EpsilonScaled{delta, eps});
    }
    static WeightSpec one() { return WeightSpec(ConstantOne{}); }
    static WeightSpec custom(std::string name, std::function<double(std::span<const double>)> fn) {
        return WeightSpec(Custom{std::move(name), std::move(fn)});
    }
    static WeightSpec product(const WeightSpec& a, const WeightSpec& b) {
        return WeightSpec(Product{std::make_shared<const WeightSpec>(a), std::make_shared<const WeightSpec>(b)});
    }

    const Kind& kind() const noexcept { return kind_; }

    // Built-in radial kinds are submultiplicative and symmetric by construction;
    // custom weights are opaque.
    bool is_builtin() const {
        if (auto* p = std::get_if<Product>(&kind_)) return p->a->is_builtin() && p->b->is_builtin();
        return !std::holds_alternative<Custom>(kind_);
    }

    // Radial profile value at r = |x| (built-in kinds only).
    double radial(double r) const { return std::exp(log_radial(r)); }

    double log_radial(double r) const {
        return std::visit(
            [&](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Polynomial>) {
                    return k.s * std::log1p(r);
                } else if constexpr (std::is_same_v<K, Subexponential>) {
                    return k.alpha * std::pow(r, k.beta);
                } else if constexpr (std::is_same_v<K, Mixed>) {
                    return k.alpha * std::pow(r, k.beta) + k.s * std::log1p(r) + k.t * std::log(std::log(M_E + r));
                } else if constexpr (std::is_same_v<K, EpsilonScaled>) {
                    return k.delta * std::log1p(k.eps * r);
                } else if constexpr (std::is_same_v<K, ConstantOne>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<K, Product>) {
                    return k.a->log_radial(r) + k.b->log_radial(r);
                } else {
                    throw UsageError("weight '" + k.name + "' has no radial profile");
                }
            },
            kind_);
    }

    // log nu(x); never overflows for built-in kinds.
    double log_value(std::span<const double> x) const {
        if (auto* c = std::get_if<Custom>(&kind_)) return std::log(c->fn(x));
        if (auto* p = std::get_if<Product>(&kind_)) return p->a->log_value(x) + p->b->log_value(x);
        return log_radial(euclidean_norm(x));
    }

    // nu(x); values above 1e300 signal a weight/extent mismatch.
    double operator()(std::span<const double> x) const {
        double v = 0.0;
        if (auto* c = std::get_if<Custom>(&kind_)) {
            v = c->fn(x);
        } else if (auto* p = std::get_if<Product>(&kind_)) {
            v = (*p->a)(x) * (*p->b)(x);
        } else if (auto* poly = std::get_if<Polynomial>(&kind_)) {
            v = std::pow(1.0 + euclidean_norm(x), poly->s);
        } else if (std::holds_alternative<ConstantOne>(kind_)) {
            v = 1.0;
        } else if (auto* e = std::get_if<EpsilonScaled>(&kind_)) {
            v = std::pow(1.0 + e->eps * euclidean_norm(x), e->delta);
        } else {
            v = std::exp(log_value(x));
        }
        if (!(v > 0.0)) throw NumericalError("weight '" + name() + "' is not positive", v);
        if (!(v <= 1e300)) throw NumericalError("weight '" + name() + "' overflow (value above 1e300)", v);
        return v;
    }

    double operator()(std::initializer_list<double> x) const {
        return (*this)(std::span<const double>(x.begin(), x.size()));
    }

    // Value at the index difference x_k - x_l; for polynomial weights this is
    // bit-identical to (1 + X.distance(k,l))^s.
    double at(const PointSet& X, std::size_t k, std::size_t l) const {
        if (auto* poly = std::get_if<Polynomial>(&kind_)) {
            const double v = std::pow(1.0 + X.distance(k, l), poly->s);
            if (!(v <= 1e300)) throw NumericalError("weight overflow (value above 1e300)", v);
            return v;
        }
        if (std::holds_alternative<ConstantOne>(kind_)) return 1.0;
        const auto diff = X.difference(k, l);
        return (*this)(std::span<const double>(diff));
    }

    std::string name() const {
        std::ostringstream os;
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Polynomial>) os << "polynomial:" << k.s;
                else if constexpr (std::is_same_v<K, Subexponential>) os << "subexp:" << k.alpha << "," << k.beta;
                else if constexpr (std::is_same_v<K, Mixed>) os << "mixed:" << k.alpha << "," << k.beta << "," << k.s << "," << k.t;
                else if constexpr (std::is_same_v<K, EpsilonScaled>) os << "eps:" << k.delta << "," << k.eps;
                else if constexpr (std::is_same_v<K, ConstantOne>) os << "one";
                else if constexpr (std::is_same_v<K, Custom>) os << "custom:" << k.name;
                else os << "(" << k.a->name() << ")*(" << k.b->name() << ")";
            },
            kind_);
        return os.str();
    }

private:
    explicit WeightSpec(Kind k) : kind_(std::move(k)) {}
    Kind kind_;
};

// "polynomial:2.5", "subexp:1,0.5", "mixed:a,b,s,t", "eps:delta,eps", "one".
inline WeightSpec parse_weight(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                args.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw UsageError("weight spec '" + text + "': bad number '" + item + "'");
            }
        }
    }
    auto need = [&](std::size_t n) {
        if (args.size() != n) throw UsageError("weight spec '" + text + "': expected " + std::to_string(n) + " parameters");
    };
    if (head == "polynomial" || head == "poly") { need(1); return WeightSpec::polynomial(args[0]); }
    if (head == "subexp" || head == "subexponential") { need(2); return WeightSpec::subexponential(args[0], args[1]); }
    if (head == "mixed") { need(4); return WeightSpec::mixed(args[0], args[1], args[2], args[3]); }
    if (head == "eps" || head == "epsilon_scaled") { need(2); return WeightSpec::epsilon_scaled(args[0], args[1]); }
    if (head == "one" || head == "constant_one") { need(0); return WeightSpec::one(); }
    throw UsageError("unknown weight kind '" + head + "'");
}

struct WeightPredicateReport {
    std::string predicate;
    double worst_ratio = 0.0;
    Point witness_x;
    Point witness_y;
    std::size_t witness_index = 0;
    bool passed = true;
};

inline constexpr double exact_predicate_tolerance = 1e-12;

using PointPair = std::pair<Point, Point>;

// Sample pairs (x, x'): differences x_k0 - x_l from the first point of X plus
// a dyadic ray +-2^j e_i per axis, paired exhaustively.
inline std::vector<PointPair> default_weight_samples(const PointSet& X, int dyadic_levels = 12) {
    std::vector<Point> base;
    for (std::size_t l = 0; l < X.size(); ++l) {
        base.push_back(X.difference(0, l));
        base.push_back(X.difference(l, 0));
    }
    for (std::size_t i = 0; i < X.dim(); ++i)
        for (int j = 0; j <= dyadic_levels; ++j)
            for (double sign : {1.0, -1.0}) {
                Point p(X.dim(), 0.0);
                p[i] = sign * std::ldexp(1.0, j);
                base.push_back(std::move(p));
            }
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    std::vector<PointPair> pairs;
    pairs.reserve(base.size() * base.size());
    for (const auto& a : base)
        for (const auto& b : base) pairs.emplace_back(a, b);
    return pairs;
}

// All pairs from an integer grid {lo..hi}^d.
inline std::vector<PointPair> grid_pairs(std::size_t d, int lo, int hi) {
    std::vector<Point> pts;
    const int w = hi - lo + 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(w);
    for (std::size_t i = 0; i < total; ++i) {
        Point p(d);
        std::size_t r = i;
        for (std::size_t j = d; j-- > 0;) {
            p[j] = lo + static_cast<int>(r % static_cast<std::size_t>(w));
            r /= static_cast<std::size_t>(w);
        }
        pts.push_back(std::move(p));
    }
    std::vector<PointPair> pairs;
    for (const auto& a : pts)
        for (const auto& b : pts) pairs.emplace_back(a, b);
    return pairs;
}

namespace detail {
inline Point add_points(const Point& a, const Point& b) {
    Point c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

template <typename Ratio>
WeightPredicateReport worst_over(std::string name, const std::vector<PointPair>& samples, Ratio&& ratio) {
    if (samples.empty()) throw UsageError(name + ": samples must be nonempty");
    WeightPredicateReport r;
    r.predicate = std::move(name);
    r.worst_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double q = ratio(samples[i].first, samples[i].second);
        if (q > r.worst_ratio) {
            r.worst_ratio = q;
            r.witness_x = samples[i].first;
            r.witness_y = samples[i].second;
            r.witness_index = i;
        }
    }
    return r;
}
} // namespace detail

// worst ratio nu(x+x') / (nu(x) nu(x')); passes iff <= 1 + 1e-12.
inline WeightPredicateReport check_submultiplicative(const WeightSpec& w, const std::vector<PointPair>& samples) {
    auto r = detail::worst_over("submultiplicative", samples, [&](const Point& x, const Point& y) {
        return std::exp(w.log_value(detail::add_points(x, y)) - w.log_value(x) - w.log_value(y));
    });
    r.passed = r.worst_ratio <= 1.0 + exact_predicate_tolerance;
    return r;
}

// nu(x) == nu(-x) up to 1e-12 relative.
inline WeightPredicateReport check_symmetric(const WeightSpec& w, const std::vector<PointPair>& samples) {
    auto r = detail::worst_over("symmetric", samples, [&](const Point& x, const Point&) {
        Point neg(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
        return std::exp(std::abs(w.log_value(x) - w.log_value(neg)));
    });
    r.passed = r.worst_ratio <= 1.0 + exact_predicate_tolerance;
    return r;
}

struct ModerateEstimate {
    double constant = 0.0;
    WeightPredicateReport report;
};

// C = max m(x+x') / (m(x) nu(x')) over the samples.
inline ModerateEstimate check_moderate(const WeightSpec& m, const WeightSpec& nu, const std::vector<PointPair>& samples) {
    auto r = detail::worst_over("moderate", samples, [&](const Point& x, const Point& y) {
        return std::exp(m.log_value(detail::add_points(x, y)) - m.log_value(x) - nu.log_value(y));
    });
    r.passed = std::isfinite(r.worst_ratio);
    return {r.worst_ratio, r};
}

// a_n = nu(n z)^{1/n}, n = 1..N.
inline std::vector<double> grs_profile(const WeightSpec& w, std::span<const double> z, int N) {
    if (N < 2) throw UsageError("grs_profile: N must be >= 2");
    std::vector<double> a;
    a.reserve(static_cast<std::size_t>(N));
    Point x(z.size());
    for (int n = 1; n <= N; ++n) {
        for (std::size_t i = 0; i < z.size(); ++i) x[i] = n * z[i];
        a.push_back(std::exp(w.log_value(x) / n));
    }
    return a;
}

// Trend test standing in for the GRS limit: last < first and last < 1.05.
inline bool grs_trend_ok(const std::vector<double>& profile) {
    if (profile.size() < 2) return false;
    if (profile.front() == 1.0 && profile.back() == 1.0) return true; // constant weight
    return profile.back() < profile.front() && profile.back() < 1.05;
}

struct SandwichReport {
    double worst_lower_slack = std::numeric_limits<double>::infinity(); // min nu - nu_eps
    double worst_upper_slack = std::numeric_limits<double>::infinity(); // min eps^-delta nu_eps - nu
    double worst_upper_radius = 0.0;
    bool passed = true;
};

// (1+eps r)^delta <= (1+r)^delta <= eps^{-delta} (1+eps r)^delta on sampled radii.
inline SandwichReport epsilon_sandwich_check(double delta, double eps, std::span<const double> radii) {
    if (!(delta > 0.0 && delta <= 1.0) || !(eps > 0.0 && eps <= 1.0))
        throw UsageError("epsilon_sandwich_check: delta and eps must lie in (0,1]");
    SandwichReport rep;
    const double scale = std::pow(eps, -delta);
    for (double r : radii) {
        const double nu_eps = std::pow(1.0 + eps * r, delta);
        const double nu = std::pow(1.0 + r, delta);
        const double upper = scale * nu_eps;
        const double lo_slack = nu - nu_eps;
        const double hi_slack = upper - nu;
        rep.worst_lower_slack = std::min(rep.worst_lower_slack, lo_slack);
        if (hi_slack < rep.worst_upper_slack) {
            rep.worst_upper_slack = hi_slack;
            rep.worst_upper_radius = r;
        }
        const double tol = exact_predicate_tolerance * std::max(1.0, nu);
        if (lo_slack < -tol || hi_slack < -tol) rep.passed = false;
    }
    return rep;
}

struct GeneralvConditions {
    double sup_sum = 0.0;       // max_k sum_l nu(k-l)^{-1}
    double conv_constant = 0.0; // max_{k,l} sum_n nu(k-n)^{-1} nu(n-l)^{-1} / nu(k-l)^{-1}
    std::size_t witness_k = 0;
    std::size_t witness_l = 0;
};

// Summability and subconvolutivity of nu^{-1} on X (the nu^{-1} * nu^{-1} <= C nu^{-1} reading).
inline GeneralvConditions check_conditions_generalv(const WeightSpec& nu, const PointSet& X) {
    const std::size_t n = X.size();
    Eigen::MatrixXd W(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
            W(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = 1.0 / nu.at(X, k, l);
    GeneralvConditions g;
    g.sup_sum = W.rowwise().sum().maxCoeff();
    const auto r = detail::convolution_ratio(W);
    g.conv_constant = r.value;
    g.witness_k = r.k;
    g.witness_l = r.l;
    return g;
}

} // namespace opband
