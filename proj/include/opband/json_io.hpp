#pragma once
//
// JSON and CSV formats for point sets, matrices and reports.
//

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgs_fourier.hpp"
#include "blockmat.hpp"
#include "error.hpp"
#include "generate.hpp"
#include "norms.hpp"
#include "pointset.hpp"
#include "spectral.hpp"

namespace opband {

using Json = nlohmann::json;

inline constexpr const char* report_schema = "opband/1";

inline Json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw UsageError("cannot open '" + p.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw UsageError("'" + p.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + p.string() + "'");
    out << text;
}

inline void write_json_file(const std::filesystem::path& p, const Json& j) { write_text_file(p, j.dump(2) + "\n"); }

namespace detail {
template <typename T>
T json_get(const Json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key)) throw UsageError(std::string(what) + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw UsageError(std::string(what) + ": bad field '" + key + "': " + e.what());
    }
}
} // namespace detail

// {"dim": d, "points": [[x...], ...], "lattice": {"spacing": h, "extent": [...]}}
inline Json pointset_to_json(const PointSet& X) {
    Json j;
    j["dim"] = X.dim();
    Json pts = Json::array();
    for (std::size_t i = 0; i < X.size(); ++i) {
        auto p = X.point(i);
        pts.push_back(std::vector<double>(p.begin(), p.end()));
    }
    j["points"] = std::move(pts);
    if (X.is_lattice()) j["lattice"] = {{"spacing", X.lattice()->spacing}, {"extent", X.lattice()->extent}};
    return j;
}

inline PointSet pointset_from_json(const Json& j) {
    const auto d = detail::json_get<std::size_t>(j, "dim", "pointset");
    const auto pts = detail::json_get<std::vector<std::vector<double>>>(j, "points", "pointset");
    std::vector<double> coords;
    coords.reserve(pts.size() * d);
    for (const auto& p : pts) {
        if (p.size() != d) throw UsageError("pointset: point with wrong number of coordinates");
        coords.insert(coords.end(), p.begin(), p.end());
    }
    std::optional<LatticeInfo> lat;
    if (j.contains("lattice") && !j["lattice"].is_null()) {
        LatticeInfo li;
        li.spacing = detail::json_get<double>(j["lattice"], "spacing", "pointset.lattice");
        li.extent = detail::json_get<std::vector<std::int64_t>>(j["lattice"], "extent", "pointset.lattice");
        lat = li;
    }
    return PointSet(d, std::move(coords), std::move(lat));
}

inline PointSet load_pointset(const std::filesystem::path& p) { return pointset_from_json(read_json_file(p)); }

// {"pointset": <inline or path>, "m": m, "entries": [{"k","l","re","im"}]}; re/im are row-major m x m.
inline Json matrix_to_json(const BlockMatrix& A, const std::optional<std::string>& pointset_path = {}) {
    Json j;
    if (pointset_path) j["pointset"] = *pointset_path;
    else j["pointset"] = pointset_to_json(A.index_set());
    j["m"] = A.block_dim();
    Json entries = Json::array();
    const std::size_t m = A.block_dim();
    A.for_each([&](std::size_t k, std::size_t l, const Complex* b) {
        std::vector<std::vector<double>> re(m, std::vector<double>(m)), im(m, std::vector<double>(m));
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) {
                re[r][c] = b[r + c * m].real();
                im[r][c] = b[r + c * m].imag();
            }
        entries.push_back({{"k", k}, {"l", l}, {"re", re}, {"im", im}});
    });
    j["entries"] = std::move(entries);
    return j;
}

inline BlockMatrix matrix_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object() || !j.contains("pointset")) throw UsageError("matrix: missing field 'pointset'");
    std::shared_ptr<const PointSet> X;
    if (j["pointset"].is_string()) {
        std::filesystem::path p = j["pointset"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        X = std::make_shared<const PointSet>(load_pointset(p));
    } else {
        X = std::make_shared<const PointSet>(pointset_from_json(j["pointset"]));
    }
    const auto m = detail::json_get<std::size_t>(j, "m", "matrix");
    BlockMatrix A(X, m);
    const auto mi = static_cast<Eigen::Index>(m);
    for (const auto& e : detail::json_get<Json>(j, "entries", "matrix")) {
        const auto k = detail::json_get<std::size_t>(e, "k", "matrix entry");
        const auto l = detail::json_get<std::size_t>(e, "l", "matrix entry");
        const auto re = detail::json_get<std::vector<std::vector<double>>>(e, "re", "matrix entry");
        const auto im = detail::json_get<std::vector<std::vector<double>>>(e, "im", "matrix entry");
        if (re.size() != m || im.size() != m) throw UsageError("matrix entry: block has wrong dimensions");
        Block b(mi, mi);
        for (std::size_t r = 0; r < m; ++r) {
            if (re[r].size() != m || im[r].size() != m) throw UsageError("matrix entry: block has wrong dimensions");
            for (std::size_t c = 0; c < m; ++c)
                b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Complex(re[r][c], im[r][c]);
        }
        if (k >= A.size() || l >= A.size()) throw UsageError("matrix entry: index out of range");
        A.set(k, l, b);
    }
    return A;
}

inline BlockMatrix load_matrix(const std::filesystem::path& p) {
    return matrix_from_json(read_json_file(p), p.parent_path());
}

inline Json to_json(const NormReport& r) {
    Json j;
    j["norm_tag"] = r.tag;
    j["value"] = r.value;
    Json params = Json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    if (!r.weight.empty()) params["weight"] = r.weight;
    j["parameters"] = params;
    j["witness"] = {{"kind", r.witness_kind}, {"index", r.witness}};
    return j;
}

inline Json to_json(const SpectralReport& r) {
    Json j;
    j["op_norm_l2"] = r.op_norm_l2;
    Json seq = Json::array();
    for (const auto& [n, v] : r.gelfand_sequence) seq.push_back({{"n", n}, {"value", v}});
    j["gelfand_sequence"] = seq;
    j["radius_estimate"] = r.radius_estimate;
    j["extrapolated_estimate"] = r.extrapolated_estimate;
    j["method"] = {{"norm", r.norm_name}, {"algorithm", r.method}};
    return j;
}

inline Json to_json(const DecayProfile& p) {
    Json j;
    j["bucket_edges"] = p.bucket_edges;
    j["bucket_sup"] = p.bucket_sup;
    j["fitted_exponent"] = p.fitted_exponent ? Json(*p.fitted_exponent) : Json(nullptr);
    if (p.fit_range) j["fit_range"] = {p.fit_range->first, p.fit_range->second};
    else j["fit_range"] = nullptr;
    return j;
}

// r_lo,r_hi,sup_norm
inline std::string decay_profile_csv(const DecayProfile& p) {
    std::ostringstream os;
    os.precision(17);
    os << "r_lo,r_hi,sup_norm\n";
    for (std::size_t i = 0; i < p.bucket_sup.size(); ++i)
        os << p.bucket_edges[i] << ',' << p.bucket_edges[i + 1] << ',' << p.bucket_sup[i] << '\n';
    return os.str();
}

inline Json to_json(const WeightPredicateReport& r) {
    return {{"predicate", r.predicate}, {"worst_ratio", r.worst_ratio}, {"passed", r.passed},
            {"witness", {{"x", r.witness_x}, {"y", r.witness_y}, {"index", r.witness_index}}}};
}

inline Json to_json(const BochnerPhillipsReport& r) {
    Json j;
    j["weight"] = {{"submultiplicative", r.weight_submultiplicative},
                   {"symmetric", r.weight_symmetric},
                   {"grs", r.weight_grs}};
    j["coefficient_deviation"] = r.coefficient_deviation;
    j["deviation_witness"] = r.deviation_witness;
    j["offsets_checked"] = r.offsets_checked;
    j["inverse_bgs_norm"] = r.inverse_bgs_norm;
    j["absolute_convergence"] = {{"sup_symbol_norm", r.sup_symbol_norm},
                                 {"bgs_norm_unweighted", r.bgs_norm_unweighted},
                                 {"holds", r.absconv_holds}};
    j["young_bound"] = {{"op_norm_l2", r.op_norm},
                        {"constant", r.young_constant},
                        {"bgs_norm", r.bgs_norm_weighted},
                        {"holds", r.young_holds}};
    j["boundary_offsets"] = r.boundary_offsets;
    j["passed"] = r.passed;
    return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    if (!j.is_object()) throw UsageError("config: expected a JSON object");
    try {
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("pointset")) {
            const Json& p = j["pointset"];
            if (p.contains("kind")) c.pointset.kind = p["kind"].get<std::string>();
            if (p.contains("dim")) c.pointset.dim = p["dim"].get<std::size_t>();
            if (p.contains("extent")) {
                if (p["extent"].is_array()) c.pointset.extent = p["extent"].get<std::vector<std::int64_t>>();
                else c.pointset.extent = {p["extent"].get<std::int64_t>()};
            }
            if (p.contains("spacing")) c.pointset.spacing = p["spacing"].get<double>();
            if (p.contains("jitter")) c.pointset.jitter = p["jitter"].get<double>();
        }
        if (j.contains("generator")) {
            const Json& g = j["generator"];
            if (g.contains("weight")) c.weight = g["weight"].get<std::string>();
            if (g.contains("amplitude")) c.amplitude = g["amplitude"].get<double>();
            if (g.contains("m")) c.m = g["m"].get<std::size_t>();
        }
        if (j.contains("instances")) c.instances = j["instances"].get<std::map<std::string, int>>();
        if (j.contains("pipeline")) c.pipeline = j["pipeline"].get<std::vector<std::string>>();
        if (j.contains("report")) c.report_path = j["report"].get<std::string>();
    } catch (const Json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    if (c.m == 0) throw UsageError("config: m must be >= 1");
    return c;
}

} // namespace opband
