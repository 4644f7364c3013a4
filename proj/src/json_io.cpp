#include "mmt/json_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mmt/errors.hpp"

namespace mmt {

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                        const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw InvalidArgument(std::string(what) + ": wrong row count");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw InvalidArgument(std::string(what) + ": wrong column count");
        for (Eigen::Index jj = 0; jj < cols; ++jj) {
            const auto& cell = row[static_cast<std::size_t>(jj)];
            if (!cell.is_number())
                throw InvalidArgument(std::string(what) + ": non-numeric entry");
            const double v = cell.get<double>();
            if (!std::isfinite(v))
                throw InvalidArgument(std::string(what) + ": non-finite entry");
            m(i, jj) = v;
        }
    }
    return m;
}

Vector vector_from_json(const nlohmann::json& j, Eigen::Index size, const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw InvalidArgument(std::string(what) + ": wrong length");
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        const double value = j[static_cast<std::size_t>(i)].get<double>();
        if (!std::isfinite(value)) throw InvalidArgument(std::string(what) + ": non-finite entry");
        v(i) = value;
    }
    return v;
}

nlohmann::json vector_to_json(const Vector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

int positive_int_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw InvalidArgument(std::string("decomposition JSON: missing integer field ") + key);
    const int v = j[key].get<int>();
    if (v < 1) throw InvalidArgument(std::string("decomposition JSON: field not positive: ") + key);
    return v;
}

}  // namespace

nlohmann::json decomposition_to_json(const Decomposition& dec) {
    check_shapes(dec);
    nlohmann::json j;
    j["m"] = dec.m;
    j["p"] = dec.p;
    j["n"] = dec.n;
    j["F"] = dec.rank();
    for (const char* key : {"U", "V", "W"}) j[key] = nlohmann::json::array();
    for (int r = 0; r < dec.rank(); ++r) {
        j["U"].push_back(matrix_to_json(dec.U[static_cast<std::size_t>(r)]));
        j["V"].push_back(matrix_to_json(dec.V[static_cast<std::size_t>(r)]));
        j["W"].push_back(matrix_to_json(dec.W[static_cast<std::size_t>(r)]));
    }
    return j;
}

Decomposition decomposition_from_json(const nlohmann::json& j) {
    Decomposition dec;
    dec.m = positive_int_field(j, "m");
    dec.p = positive_int_field(j, "p");
    dec.n = positive_int_field(j, "n");
    const int F = positive_int_field(j, "F");
    for (const char* key : {"U", "V", "W"})
        if (!j.contains(key) || !j[key].is_array() || static_cast<int>(j[key].size()) != F)
            throw InvalidArgument(std::string("decomposition JSON: bad factor list ") + key);
    for (int r = 0; r < F; ++r) {
        dec.U.push_back(matrix_from_json(j["U"][static_cast<std::size_t>(r)], dec.p, dec.m, "U"));
        dec.V.push_back(matrix_from_json(j["V"][static_cast<std::size_t>(r)], dec.n, dec.p, "V"));
        dec.W.push_back(matrix_from_json(j["W"][static_cast<std::size_t>(r)], dec.m, dec.n, "W"));
    }
    return dec;
}

nlohmann::json transform_to_json(const InvarianceTransform& t) {
    nlohmann::json j;
    nlohmann::json sigma = nlohmann::json::array();
    for (int s : t.sigma) sigma.push_back(s + 1);
    j["sigma"] = std::move(sigma);
    j["lambda"] = vector_to_json(t.lambda);
    j["mu"] = vector_to_json(t.mu);
    j["nu"] = vector_to_json(t.nu);
    j["P"] = matrix_to_json(t.P);
    j["Q"] = matrix_to_json(t.Q);
    j["R"] = matrix_to_json(t.R);
    return j;
}

InvarianceTransform transform_from_json(const nlohmann::json& j) {
    InvarianceTransform t;
    if (!j.contains("sigma") || !j["sigma"].is_array())
        throw InvalidArgument("transform JSON: missing sigma");
    const int F = static_cast<int>(j["sigma"].size());
    for (const auto& s : j["sigma"]) {
        const int v = s.get<int>();
        if (v < 1 || v > F) throw InvalidArgument("transform JSON: sigma entry out of range");
        t.sigma.push_back(v - 1);
    }
    t.lambda = vector_from_json(j.at("lambda"), F, "lambda");
    t.mu = vector_from_json(j.at("mu"), F, "mu");
    t.nu = vector_from_json(j.at("nu"), F, "nu");
    const auto square = [&](const char* key) {
        const auto& block = j.at(key);
        const auto size = static_cast<Eigen::Index>(block.size());
        return matrix_from_json(block, size, size, key);
    };
    t.P = square("P");
    t.Q = square("Q");
    t.R = square("R");
    return t;
}

nlohmann::json certificate_to_json(const EquivalenceCertificate& cert) {
    nlohmann::json j;
    switch (cert.verdict) {
        case Verdict::equivalent: j["verdict"] = "equivalent"; break;
        case Verdict::inequivalent: j["verdict"] = "inequivalent"; break;
        case Verdict::inconclusive: j["verdict"] = "inconclusive"; break;
    }
    j["residual"] = cert.residual;
    j["rotation_shift"] = cert.rotation_shift;
    j["stats"] = {{"visited", cert.stats.visited},
                  {"leaf_solves", cert.stats.leaf_solves},
                  {"max_rejected_depth", cert.stats.max_rejected_depth},
                  {"millis", cert.stats.millis}};
    if (cert.transform.has_value()) j["transform"] = transform_to_json(*cert.transform);
    return j;
}

nlohmann::json clustering_report_to_json(const ClusteringReport& report) {
    nlohmann::json j;
    j["value"] = report.value;
    j["method"] = report.method == ClusteringMethod::graph ? "graph" : "nullspace";
    if (report.method == ClusteringMethod::graph) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& c : report.components) comps.push_back(c);
        j["components"] = std::move(comps);
    } else {
        j["rank"] = report.rank;
        j["zero_columns"] = report.zero_columns;
        j["nullspace_dim"] = report.nullspace_dim;
    }
    return j;
}

nlohmann::json discretizability_report_to_json(const DiscretizabilityReport& report) {
    nlohmann::json j;
    j["q"] = report.q;
    j["nd_score"] = report.nd_score;
    j["draws"] = report.draws;
    j["beta_range"] = report.beta_range;
    nlohmann::json per_draw = nlohmann::json::array();
    for (const auto& d : report.per_draw) {
        nlohmann::json dj;
        dj["beta"] = d.beta;
        dj["coeffs"] = vector_to_json(d.coeffs);
        dj["max_deviation"] = d.max_deviation;
        per_draw.push_back(std::move(dj));
    }
    j["per_draw"] = std::move(per_draw);
    return j;
}

Decomposition read_decomposition(const std::string& path) {
    nlohmann::json j;
    try {
        if (path == "-") {
            std::ostringstream buffer;
            buffer << std::cin.rdbuf();
            j = nlohmann::json::parse(buffer.str());
        } else {
            std::ifstream in(path);
            if (!in) throw InvalidArgument("cannot open file: " + path);
            j = nlohmann::json::parse(in);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("JSON parse error in " + path + ": " + e.what());
    }
    try {
        return decomposition_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed decomposition in " + path + ": " + e.what());
    }
}

void write_decomposition(const std::string& path, const Decomposition& dec) {
    const nlohmann::json j = decomposition_to_json(dec);
    if (path == "-") {
        std::cout << j.dump() << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open file for writing: " + path);
    out << j.dump() << "\n";
}

}  // namespace mmt
