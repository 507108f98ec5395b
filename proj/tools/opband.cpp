// opband: experiment runner over the operator-valued matrix library.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <opband/opband.hpp>

namespace fs = std::filesystem;
using namespace opband;

namespace {

void emit(const Json& j, const std::string& out) {
    if (out.empty()) std::cout << j.dump(2) << "\n";
    else write_json_file(out, j);
}

Json with_schema(Json j) {
    Json h;
    h["schema"] = report_schema;
    for (auto it = j.begin(); it != j.end(); ++it) h[it.key()] = it.value();
    return h;
}

MultiIndex parse_alpha(const std::string& s) {
    MultiIndex a;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            const long v = std::stol(item);
            if (v < 0) throw std::invalid_argument(item);
            a.push_back(static_cast<unsigned>(v));
        } catch (const std::exception&) {
            throw UsageError("bad multi-index '" + s + "'");
        }
    }
    return a;
}

struct NormArgs {
    std::string tag = "jaffard";
    double s = 3.0;
    double p = 1.0;
    std::string weight;
    std::string alpha;
    std::string base = "jaffard";

    void add(CLI::App* c, const std::string& tag_flag) {
        c->add_option(tag_flag, tag, "norm tag: jaffard, j_nu, schur_p, bgs, bus, aniso")->capture_default_str();
        c->add_option("--s", s, "decay exponent (jaffard, bus)")->capture_default_str();
        c->add_option("--p", p, "Schur exponent p >= 1")->capture_default_str();
        c->add_option("--weight", weight, "weight spec, e.g. polynomial:2, subexp:0.5,0.5, one (nu, or u for bus)");
        c->add_option("--alpha", alpha, "multi-index for aniso, comma separated");
        c->add_option("--base", base, "base norm tag for aniso")->capture_default_str();
    }

    NormSpec spec(std::size_t dim) const {
        NormSpec n;
        n.tag = tag;
        n.s = s;
        n.p = p;
        n.base_tag = base;
        if (!weight.empty()) n.weight = parse_weight(weight);
        if (tag == "aniso") {
            n.alpha = alpha.empty() ? MultiIndex(dim, 1) : parse_alpha(alpha);
            if (n.alpha.size() != dim) throw UsageError("--alpha must have dim components");
        }
        return n;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"opband: operator-valued matrix algebras at finite section"};
    app.require_subcommand(1);
    unsigned threads = 0;
    std::string workdir;
    app.add_option("--threads", threads, "worker thread cap (default: OPBAND_THREADS or 1)");
    app.add_option("--workdir", workdir, "directory all relative paths are resolved against");

    // gen
    auto* gen = app.add_subcommand("gen", "generate point sets and matrices");
    gen->require_subcommand(1);

    PointSetSpec ps;
    std::uint64_t ps_seed = 42;
    std::string ps_out;
    auto* gen_points = gen->add_subcommand("points", "generate a lattice or jittered point set");
    gen_points->add_option("--kind", ps.kind, "lattice or jittered")->capture_default_str();
    gen_points->add_option("--dim", ps.dim, "dimension d")->capture_default_str();
    gen_points->add_option("--extent", ps.extent, "points per axis (one value or one per axis)")->capture_default_str();
    gen_points->add_option("--spacing", ps.spacing, "lattice spacing")->capture_default_str();
    gen_points->add_option("--jitter", ps.jitter, "jitter amplitude, < spacing/2")->capture_default_str();
    gen_points->add_option("--seed", ps_seed, "seed")->capture_default_str();
    gen_points->add_option("--out", ps_out, "output JSON (stdout if absent)");

    std::string gm_pointset, gm_weight = "polynomial:3", gm_out;
    GeneratorSpec gm;
    std::uint64_t gm_seed = 42;
    double gm_shift = 0.0, gm_maxdist = -1.0;
    auto* gen_matrix = gen->add_subcommand("matrix", "generate a random matrix with a weight envelope");
    gen_matrix->add_option("--pointset", gm_pointset, "point set JSON")->required();
    gen_matrix->add_option("--weight", gm_weight, "envelope weight w; entries scale like 1/w(k-l)")->capture_default_str();
    gen_matrix->add_option("--amplitude", gm.amplitude, "overall amplitude")->capture_default_str();
    gen_matrix->add_option("--m", gm.m, "block dimension")->capture_default_str();
    gen_matrix->add_option("--seed", gm_seed, "seed")->capture_default_str();
    gen_matrix->add_flag("--symmetrize", gm.symmetrize, "replace A by (A + A*)/2");
    auto* shift_opt = gen_matrix->add_option("--shift", gm_shift, "replace A by I + shift*A");
    gen_matrix->add_flag("--exact-envelope", gm.exact_envelope, "use g = 1 so block norms equal the envelope");
    auto* md_opt = gen_matrix->add_option("--max-distance", gm_maxdist, "drop entries with |k-l| above this");
    gen_matrix->add_option("--out", gm_out, "output JSON (stdout if absent)");

    // norm
    NormArgs na;
    std::string norm_matrix, norm_out;
    auto* norm = app.add_subcommand("norm", "evaluate a norm functional");
    na.add(norm, "--tag");
    norm->add_option("--matrix", norm_matrix, "matrix JSON")->required();
    norm->add_option("--out", norm_out, "output JSON (stdout if absent)");

    // spectral
    auto* spectral = app.add_subcommand("spectral", "operator norm and spectral radius");
    spectral->require_subcommand(1);
    NormArgs ra;
    std::string rad_matrix, rad_out;
    std::size_t nmax = 256;
    auto* radius = spectral->add_subcommand("radius", "Gelfand sequence ||A^n||^{1/n} by repeated squaring");
    ra.add(radius, "--norm");
    radius->add_option("--matrix", rad_matrix, "matrix JSON")->required();
    radius->add_option("--nmax", nmax, "largest power, a power of two")->capture_default_str();
    radius->add_option("--out", rad_out, "output JSON (stdout if absent)");
    std::string op_matrix, op_out;
    double op_tol = default_power_tol;
    auto* opnorm = spectral->add_subcommand("opnorm", "l2 operator norm by power iteration");
    opnorm->add_option("--matrix", op_matrix, "matrix JSON")->required();
    opnorm->add_option("--tol", op_tol, "relative tolerance")->capture_default_str();
    opnorm->add_option("--out", op_out, "output JSON (stdout if absent)");

    // invert
    std::string inv_matrix, inv_out, inv_profile, inv_method = "lu";
    double cond_cap = default_cond_cap, bucket = 1.0, neumann_tol = 1e-12;
    auto* invert = app.add_subcommand("invert", "finite-section inverse and decay profile");
    invert->add_option("--matrix", inv_matrix, "matrix JSON")->required();
    invert->add_option("--out", inv_out, "inverse matrix JSON");
    invert->add_option("--profile", inv_profile, "decay profile CSV (r_lo,r_hi,sup_norm)");
    invert->add_option("--bucket-width", bucket, "decay profile bucket width")->capture_default_str();
    invert->add_option("--cond-cap", cond_cap, "reject condition estimates above this")->capture_default_str();
    invert->add_option("--method", inv_method, "lu or neumann")->capture_default_str();
    invert->add_option("--tol", neumann_tol, "Neumann tail tolerance")->capture_default_str();

    // bgs
    auto* bgs = app.add_subcommand("bgs", "side diagonals and operator-valued Fourier series");
    bgs->require_subcommand(1);
    std::string bgs_matrix, bgs_weight = "polynomial:1", bgs_out;
    std::int64_t grid = 256;
    int tsamples = 32;
    auto* bgs_verify = bgs->add_subcommand("verify", "invert, Fourier-expand and compare with side diagonals");
    bgs_verify->add_option("--matrix", bgs_matrix, "matrix JSON on a lattice point set")->required();
    bgs_verify->add_option("--weight", bgs_weight, "weight nu")->capture_default_str();
    bgs_verify->add_option("--grid", grid, "quadrature points per axis (even)")->capture_default_str();
    bgs_verify->add_option("--samples", tsamples, "sampled t for the absolute-convergence check")->capture_default_str();
    bgs_verify->add_option("--out", bgs_out, "output JSON (stdout if absent)");

    // weights
    auto* weights = app.add_subcommand("weights", "weight predicates");
    weights->require_subcommand(1);
    std::string w_kind = "polynomial", w_spec, w_pointset, w_out;
    double w_s = 1.0, w_alpha = 1.0, w_beta = 0.5, w_t = 0.0, w_delta = 1.0, w_eps = 1.0;
    int grs_n = 1000;
    auto* wcheck = weights->add_subcommand("check", "submultiplicativity, symmetry, GRS and summability");
    wcheck->add_option("--kind", w_kind, "polynomial, subexp, mixed, eps, one")->capture_default_str();
    wcheck->add_option("--weight", w_spec, "full weight spec (overrides --kind and parameters)");
    wcheck->add_option("--s", w_s, "polynomial / mixed exponent")->capture_default_str();
    wcheck->add_option("--alpha", w_alpha, "subexponential alpha")->capture_default_str();
    wcheck->add_option("--beta", w_beta, "subexponential beta")->capture_default_str();
    wcheck->add_option("--t", w_t, "mixed log exponent")->capture_default_str();
    wcheck->add_option("--delta", w_delta, "eps-scaled delta")->capture_default_str();
    wcheck->add_option("--eps", w_eps, "eps-scaled eps")->capture_default_str();
    wcheck->add_option("--grs-n", grs_n, "GRS profile length")->capture_default_str();
    wcheck->add_option("--pointset", w_pointset, "point set JSON supplying sample differences")->required();
    wcheck->add_option("--out", w_out, "output JSON (stdout if absent)");

    // verify
    std::string v_config, v_out;
    std::uint64_t v_seed = 0;
    auto* verify = app.add_subcommand("verify", "run the property-check suite");
    verify->add_option("--config", v_config, "experiment config JSON (defaults if absent)");
    auto* vseed_opt = verify->add_option("--seed", v_seed, "override the config seed");
    verify->add_option("--out", v_out, "report JSON (stdout if absent)");

    // report
    std::string rep_in, rep_csv;
    auto* report = app.add_subcommand("report", "summarize a verify report as a table");
    report->add_option("--in", rep_in, "verify report JSON")->required();
    report->add_option("--csv", rep_csv, "also write name,passed,instances,margin CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    if (threads > 0) set_thread_count(threads);
    if (!workdir.empty()) {
        std::error_code ec;
        fs::current_path(workdir, ec);
        if (ec) throw UsageError("--workdir '" + workdir + "': " + ec.message());
    }

    if (*gen_points) {
        emit(pointset_to_json(make_pointset(ps, ps_seed)), ps_out);
        return 0;
    }
    if (*gen_matrix) {
        auto X = std::make_shared<const PointSet>(load_pointset(gm_pointset));
        gm.weight = parse_weight(gm_weight);
        if (*shift_opt) gm.shift = gm_shift;
        if (*md_opt) gm.max_distance = gm_maxdist;
        emit(matrix_to_json(generate_matrix(X, gm, gm_seed)), gm_out);
        return 0;
    }
    if (*norm) {
        const BlockMatrix A = load_matrix(norm_matrix);
        emit(with_schema(to_json(make_norm_fn(na.spec(A.index_set().dim()))(A))), norm_out);
        return 0;
    }
    if (*radius) {
        const BlockMatrix A = load_matrix(rad_matrix);
        const NormSpec spec = ra.spec(A.index_set().dim());
        std::string name = ra.tag;
        SpectralReport r;
        if (ra.tag == "op_norm_l2" || ra.tag == "l2") {
            r = gelfand_radius(A, ScalarNormFn([](const BlockMatrix& B) { return op_norm_l2(B); }), nmax, "op_norm_l2");
        } else {
            r = gelfand_radius(A, make_norm_fn(spec), nmax, name);
        }
        emit(with_schema(to_json(r)), rad_out);
        return 0;
    }
    if (*opnorm) {
        const BlockMatrix A = load_matrix(op_matrix);
        emit(with_schema({{"op_norm_l2", op_norm_l2(A, op_tol)}, {"tol", op_tol}}), op_out);
        return 0;
    }
    if (*invert) {
        const BlockMatrix A = load_matrix(inv_matrix);
        Json summary;
        BlockMatrix Ainv(A.index_set_ptr(), A.block_dim());
        if (inv_method == "lu") {
            Ainv = invert_finite_section(A, cond_cap);
        } else if (inv_method == "neumann") {
            auto nr = neumann_inverse_detailed(A, neumann_tol);
            summary["neumann"] = {{"q", nr.q}, {"terms", nr.terms}};
            Ainv = std::move(nr.inverse);
        } else {
            throw UsageError("--method must be lu or neumann");
        }
        const DecayProfile prof = decay_profile(Ainv, bucket);
        if (!inv_out.empty()) write_json_file(inv_out, matrix_to_json(Ainv));
        if (!inv_profile.empty()) write_text_file(inv_profile, decay_profile_csv(prof));
        summary["method"] = inv_method;
        summary["decay_profile"] = to_json(prof);
        summary["residual"] = max_block_diff(A * Ainv, BlockMatrix::identity(A.index_set_ptr(), A.block_dim()));
        std::cout << with_schema(summary).dump(2) << "\n";
        return 0;
    }
    if (*bgs_verify) {
        const BlockMatrix A = load_matrix(bgs_matrix);
        const auto r = verify_bochner_phillips(A, parse_weight(bgs_weight), grid, tsamples);
        emit(with_schema(to_json(r)), bgs_out);
        return r.passed ? 0 : static_cast<int>(ExitCode::property_failure);
    }
    if (*wcheck) {
        const PointSet X = load_pointset(w_pointset);
        WeightSpec w = WeightSpec::one();
        if (!w_spec.empty()) w = parse_weight(w_spec);
        else if (w_kind == "polynomial") w = WeightSpec::polynomial(w_s);
        else if (w_kind == "subexp" || w_kind == "subexponential") w = WeightSpec::subexponential(w_alpha, w_beta);
        else if (w_kind == "mixed") w = WeightSpec::mixed(w_alpha, w_beta, w_s, w_t);
        else if (w_kind == "eps" || w_kind == "epsilon_scaled") w = WeightSpec::epsilon_scaled(w_delta, w_eps);
        else if (w_kind == "one") w = WeightSpec::one();
        else throw UsageError("unknown --kind '" + w_kind + "'");
        const auto samples = default_weight_samples(X);
        const auto sub = check_submultiplicative(w, samples);
        const auto sym = check_symmetric(w, samples);
        Json grs = Json::array();
        bool grs_ok = true;
        for (std::size_t j = 0; j < X.dim(); ++j) {
            Point z(X.dim(), 0.0);
            z[j] = 1.0;
            const auto prof = grs_profile(w, z, grs_n);
            const bool ok = grs_trend_ok(prof);
            grs_ok = grs_ok && ok;
            grs.push_back({{"axis", j}, {"first", prof.front()}, {"last", prof.back()}, {"passed", ok}});
        }
        Json out = {{"weight", w.name()}, {"submultiplicative", to_json(sub)}, {"symmetric", to_json(sym)}, {"grs", grs}};
        const auto gv = check_conditions_generalv(w, X);
        out["conditions"] = {{"sup_sum", gv.sup_sum},
                             {"conv_constant", gv.conv_constant},
                             {"witness", {gv.witness_k, gv.witness_l}}};
        const bool passed = sub.passed && sym.passed && grs_ok;
        out["passed"] = passed;
        emit(with_schema(out), w_out);
        return passed ? 0 : static_cast<int>(ExitCode::property_failure);
    }
    if (*verify) {
        ExperimentConfig cfg;
        if (!v_config.empty()) cfg = config_from_json(read_json_file(v_config));
        if (*vseed_opt) cfg.seed = v_seed;
        const auto outcome = run_verify_suite(cfg);
        std::string out = v_out.empty() ? cfg.report_path : v_out;
        emit(outcome.report, out);
        return outcome.passed ? 0 : static_cast<int>(ExitCode::property_failure);
    }
    if (*report) {
        const Json r = read_json_file(rep_in);
        if (!r.contains("checks")) throw UsageError("report: not a verify report (no 'checks')");
        std::ostringstream csv;
        csv.precision(17);
        csv << "name,passed,instances,margin\n";
        std::printf("%-28s %-6s %9s %14s\n", "check", "status", "instances", "margin");
        for (const auto& c : r["checks"]) {
            const std::string name = c.value("name", "");
            const bool ok = c.value("passed", false);
            const int inst = c.value("instances", 0);
            const double margin = c.value("margin", 0.0);
            std::printf("%-28s %-6s %9d %14.6g\n", name.c_str(), ok ? "pass" : "FAIL", inst, margin);
            csv << name << ',' << (ok ? "true" : "false") << ',' << inst << ',' << margin << '\n';
        }
        if (!rep_csv.empty()) write_text_file(rep_csv, csv.str());
        return r.value("passed", false) ? 0 : static_cast<int>(ExitCode::property_failure);
    }
    return static_cast<int>(ExitCode::usage);
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const opband::Error& e) {
        std::cerr << "opband: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "opband: " << e.what() << "\n";
        return static_cast<int>(ExitCode::numerical);
    }
}
