#ifndef MMT_JSON_IO_HPP
#define MMT_JSON_IO_HPP

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mmt/clustering.hpp"
#include "mmt/discretize.hpp"
#include "mmt/equivalence.hpp"
#include "mmt/transforms.hpp"

namespace mmt {

// Decomposition JSON: {"m","p","n","F","U","V","W"}; "U" is a length-F array
// of p x m row-major 2-D arrays of finite doubles (V: n x p, W: m x n).
// Non-finite values and shape mismatches are rejected.
nlohmann::json decomposition_to_json(const Decomposition& dec);
Decomposition decomposition_from_json(const nlohmann::json& j);

// Transform JSON: {"sigma" (1-based), "lambda", "mu", "nu", "P", "Q", "R"}.
nlohmann::json transform_to_json(const InvarianceTransform& t);
InvarianceTransform transform_from_json(const nlohmann::json& j);

nlohmann::json certificate_to_json(const EquivalenceCertificate& cert);
nlohmann::json clustering_report_to_json(const ClusteringReport& report);
nlohmann::json discretizability_report_to_json(const DiscretizabilityReport& report);

// Path helpers; "-" reads stdin / writes stdout.
Decomposition read_decomposition(const std::string& path);
void write_decomposition(const std::string& path, const Decomposition& dec);

}  // namespace mmt

#endif
