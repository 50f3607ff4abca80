#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freematrix/bounds.hpp"
#include "freematrix/dyson.hpp"
#include "freematrix/ensemble.hpp"
#include "freematrix/ensembles.hpp"
#include "freematrix/montecarlo.hpp"

namespace freematrix {

using Json = nlohmann::json;

namespace detail {

inline void require_finite(double x, const char* where) {
    if (!std::isfinite(x)) throw ParseError(std::string(where) + ": non-finite number rejected");
}

}  // namespace detail

/// Matrix wire format: flat row-major array of [re, im] pairs.
inline Json matrix_to_json(const Matrix& m) {
    Json arr = Json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            arr.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    return arr;
}

inline Matrix matrix_from_json(const Json& arr, Index rows, Index cols) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != rows * cols)
        throw ParseError("matrix array has wrong length: expected " + std::to_string(rows * cols));
    Matrix m(rows, cols);
    Index k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j, ++k) {
            const Json& entry = arr[k];
            if (!entry.is_array() || entry.size() != 2)
                throw ParseError("matrix entries must be [re, im] pairs");
            double re = entry[0].get<double>();
            double im = entry[1].get<double>();
            detail::require_finite(re, "matrix entry");
            detail::require_finite(im, "matrix entry");
            m(i, j) = Complex(re, im);
        }
    return m;
}

/// Real matrix wire format: flat row-major array of numbers.
inline Json real_matrix_to_json(const RealMatrix& m) {
    Json arr = Json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

inline RealMatrix real_matrix_from_json(const Json& arr, Index rows, Index cols) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != rows * cols)
        throw ParseError("matrix array has wrong length: expected " + std::to_string(rows * cols));
    RealMatrix m(rows, cols);
    Index k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j, ++k) {
            double x = arr[k].get<double>();
            detail::require_finite(x, "matrix entry");
            m(i, j) = x;
        }
    return m;
}

inline Json ensemble_to_json(const CoefficientEnsemble& e) {
    Json j;
    j["dim"] = e.dim();
    j["selfadjoint"] = e.selfadjoint;
    j["a0"] = matrix_to_json(e.a0);
    Json coeffs = Json::array();
    for (const Matrix& a : e.coeffs) coeffs.push_back(matrix_to_json(a));
    j["coeffs"] = std::move(coeffs);
    return j;
}

inline CoefficientEnsemble ensemble_from_json(const Json& j) {
    if (!j.contains("dim") || !j.contains("a0") || !j.contains("coeffs"))
        throw ParseError("ensemble JSON needs keys dim, a0, coeffs");
    const Index d = j["dim"].get<Index>();
    if (d < 1) throw ParseError("ensemble dim must be >= 1");
    CoefficientEnsemble e;
    e.a0 = matrix_from_json(j["a0"], d, d);
    e.selfadjoint = j.value("selfadjoint", false);
    for (const Json& a : j["coeffs"]) e.coeffs.push_back(matrix_from_json(a, d, d));
    validate(e);
    return e;
}

/// Generator wire format: {"kind": ..., kind-specific payload}. Expands to a
/// concrete ensemble.
inline CoefficientEnsemble generate_from_json(const Json& j) {
    if (!j.contains("kind")) throw ParseError("generator JSON needs a kind");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "independent_entries") {
        const Index d = j.at("dim").get<Index>();
        VarianceProfile profile{d, real_matrix_from_json(j.at("b2"), d, d)};
        return independent_entries(profile);
    }
    if (kind == "independent_rect") {
        const Index rows = j.at("rows").get<Index>();
        const Index cols = j.at("cols").get<Index>();
        return independent_rectangular(real_matrix_from_json(j.at("b2"), rows, cols));
    }
    if (kind == "sparse_wigner") {
        const Index d = j.at("dim").get<Index>();
        Adjacency g{d, {}};
        if (j.contains("graph")) {
            const std::string name = j["graph"].get<std::string>();
            if (name == "complete_with_loops") {
                g = complete_graph_with_loops(d);
            } else if (name == "cycle") {
                g = cycle_graph(d);
            } else if (name == "circulant") {
                std::vector<Index> offsets;
                for (const Json& o : j.at("offsets")) offsets.push_back(o.get<Index>());
                g = circulant_graph(d, offsets);
            } else {
                throw ParseError("unknown graph '" + name + "'");
            }
        } else {
            for (const Json& edge : j.at("edges")) {
                if (!edge.is_array() || edge.size() != 2) throw ParseError("edges must be [i, j]");
                g.add_edge(edge[0].get<Index>(), edge[1].get<Index>());
            }
        }
        return sparse_wigner(g);
    }
    if (kind == "pattern") {
        PatternPartition part;
        part.d = j.at("dim").get<Index>();
        part.m = j.value("cols", part.d);
        part.scale = j.value("scale", 0.0);
        if (j.contains("pattern") && j["pattern"].get<std::string>() == "toeplitz") {
            part = toeplitz_pattern(part.d);
        } else {
            for (const Json& block : j.at("blocks")) {
                std::vector<std::pair<Index, Index>> b;
                for (const Json& cell : block) {
                    if (!cell.is_array() || cell.size() != 2)
                        throw ParseError("pattern cells must be [row, col]");
                    b.emplace_back(cell[0].get<Index>(), cell[1].get<Index>());
                }
                part.blocks.push_back(std::move(b));
            }
        }
        return pattern(part);
    }
    if (kind == "independent_columns") {
        const Index d = j.at("dim").get<Index>();
        std::vector<Matrix> covs;
        for (const Json& c : j.at("covariances")) covs.push_back(matrix_from_json(c, d, d));
        return independent_columns(covs);
    }
    if (kind == "block_iid") {
        CoefficientEnsemble block = ensemble_from_json(j.at("block"));
        return block_iid(block, j.at("m").get<Index>());
    }
    if (kind == "subspace") {
        const Index d = j.at("dim").get<Index>();
        std::vector<Matrix> basis;
        for (const Json& b : j.at("basis")) basis.push_back(matrix_from_json(b, d, d));
        return subspace_isotropic(basis);
    }
    throw ParseError("unknown generator kind '" + kind + "'");
}

/// Either a raw ensemble or a generator spec, by the presence of "kind".
inline CoefficientEnsemble ensemble_or_generator_from_json(const Json& j) {
    return j.contains("kind") ? generate_from_json(j) : ensemble_from_json(j);
}

inline Json bound_report_to_json(const BoundReport& rep) {
    Json terms = Json::object();
    for (const BoundTerm& t : rep.terms) terms[t.name] = {{"value", t.value}, {"ref", t.ref}};
    return Json{{"kind", to_string(rep.kind)},
                {"terms", std::move(terms)},
                {"constant_c", rep.constant_c},
                {"notes", rep.notes}};
}

inline Json support_to_json(const SupportResult& s) {
    Json intervals = Json::array();
    for (auto [a, b] : s.intervals) intervals.push_back(Json::array({a, b}));
    Json j{{"intervals", std::move(intervals)},
           {"eta_schedule", s.options.eta_schedule},
           {"threshold", s.options.threshold_coeff}};
    Json per_eta = Json::array();
    for (const auto& [eta, ivs] : s.per_eta) {
        Json row{{"eta", eta}};
        Json arr = Json::array();
        for (auto [a, b] : ivs) arr.push_back(Json::array({a, b}));
        row["intervals"] = std::move(arr);
        per_eta.push_back(std::move(row));
    }
    j["per_eta"] = std::move(per_eta);
    return j;
}

inline Json stats_to_json(const SampleStats& s) {
    return Json{{"trials", s.trials}, {"mean", s.mean},   {"std_error", s.std_error},
                {"min", s.min},       {"max", s.max},     {"seed", s.seed}};
}

inline std::string stats_to_csv(const SampleStats& s) {
    std::ostringstream out;
    out.precision(17);
    out << "trial,value\n";
    for (std::size_t t = 0; t < s.per_trial.size(); ++t) out << t << "," << s.per_trial[t] << "\n";
    return out.str();
}

/// Density export: columns lambda, eta, rho.
inline std::string density_to_csv(const DysonSolution& sol) {
    std::ostringstream out;
    out.precision(17);
    out << "lambda,eta,rho\n";
    for (std::size_t k = 0; k < sol.grid.size(); ++k)
        out << sol.grid[k].real() << "," << sol.grid[k].imag() << "," << sol.density[k] << "\n";
    return out.str();
}

inline std::string freeness_to_csv(const FreenessTable& table) {
    std::ostringstream out;
    out.precision(17);
    out << "N,d,word,empirical,target,stderr,v_diagnostic\n";
    for (const FreenessRow& row : table) {
        out << row.n_param << "," << row.dim << ",";
        for (std::size_t i = 0; i < row.word.size(); ++i) {
            if (i) out << ".";
            out << row.word[i];
        }
        out << "," << row.empirical << "," << row.target << "," << row.std_error << ","
            << row.v_diagnostic << "\n";
    }
    return out.str();
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& ex) {
        throw ParseError("invalid JSON in " + path + ": " + ex.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

}  // namespace freematrix
