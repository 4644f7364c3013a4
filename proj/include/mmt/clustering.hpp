#ifndef MMT_CLUSTERING_HPP
#define MMT_CLUSTERING_HPP

#include <array>
#include <vector>

#include "mmt/decomposition.hpp"

namespace mmt {

enum class ClusteringMethod { graph, nullspace };

struct ClusteringReport {
    int value = 0;
    ClusteringMethod method = ClusteringMethod::nullspace;

    // Graph method: connected components as sets of the original column
    // indices of the selected basis columns.
    std::vector<std::vector<int>> components;

    // Nullspace method: dim(S) = value + (m-1)(m-rank) + zero_columns.
    int rank = 0;
    int zero_columns = 0;
    int nullspace_dim = 0;

    // Singular spectrum of the linearized operator, for auditing borderline
    // rank gaps (nullspace method).
    std::vector<double> spectrum;
};

// Graph characterization. Requires full row-rank and no zero columns; throws
// PreconditionViolation otherwise (use clustering_general instead). Basis
// columns are chosen greedily from the left, so reported components use the
// earliest admissible column indices.
ClusteringReport clustering_graph(const Matrix& a, double rank_tol = 1e-8,
                                  double entry_tol = 1e-8);

// Nullspace characterization; works for any real matrix. Solves
// M A = A diag(xi) and subtracts the rank/zero-column corrections.
ClusteringReport clustering_general(const Matrix& a, double rank_tol = 1e-8);

// Clustering numbers of the three stacked factor matrices.
std::array<int, 3> clustering_vector(const Decomposition& dec, double rank_tol = 1e-8);

}  // namespace mmt

#endif
