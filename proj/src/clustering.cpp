#include "mmt/clustering.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmt/errors.hpp"

namespace mmt {

namespace {

std::vector<int> find_zero_columns(const Matrix& a, double rank_tol) {
    std::vector<int> zeros;
    const double amax = a.size() > 0 ? a.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (a.col(j).cwiseAbs().maxCoeff() <= rank_tol * amax) zeros.push_back(static_cast<int>(j));
    return zeros;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int x, int y) { parent[static_cast<std::size_t>(find(x))] = find(y); }
};

// Greedy left-to-right basis selection (modified Gram-Schmidt with
// reorthogonalization); keeps the earliest columns that extend the span.
std::vector<int> greedy_basis(const Matrix& a, double rank_tol) {
    std::vector<int> picked;
    std::vector<Vector> ortho;
    const double scale = a.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < a.cols() && static_cast<Eigen::Index>(picked.size()) < a.rows(); ++j) {
        Vector v = a.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : ortho) v -= q.dot(v) * q;
        if (v.norm() > rank_tol * scale * std::sqrt(static_cast<double>(a.rows()))) {
            ortho.push_back(v.normalized());
            picked.push_back(static_cast<int>(j));
        }
    }
    return picked;
}

}  // namespace

ClusteringReport clustering_graph(const Matrix& a, double rank_tol, double entry_tol) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    if (m == 0 || n == 0) throw InvalidArgument("clustering_graph: empty matrix");
    if (!find_zero_columns(a, rank_tol).empty())
        throw PreconditionViolation(
            "clustering_graph: zero column present; use clustering_general");

    const std::vector<int> basis = greedy_basis(a, rank_tol);
    if (static_cast<int>(basis.size()) < m)
        throw PreconditionViolation(
            "clustering_graph: matrix is not full row-rank; use clustering_general");

    Matrix basis_block(m, m);
    for (int i = 0; i < m; ++i) basis_block.col(i) = a.col(basis[static_cast<std::size_t>(i)]);
    const Eigen::PartialPivLU<Matrix> lu(basis_block);

    UnionFind uf(m);
    for (int j = 0; j < n; ++j) {
        if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
        const Vector q = lu.solve(a.col(j));
        const double qmax = q.cwiseAbs().maxCoeff();
        std::vector<int> support;
        for (int i = 0; i < m; ++i)
            if (std::abs(q(i)) > entry_tol * qmax) support.push_back(i);
        for (std::size_t s = 1; s < support.size(); ++s) uf.unite(support[0], support[s]);
    }

    ClusteringReport report;
    report.method = ClusteringMethod::graph;
    report.rank = m;
    report.zero_columns = 0;
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        groups[static_cast<std::size_t>(uf.find(i))].push_back(basis[static_cast<std::size_t>(i)]);
    for (auto& g : groups)
        if (!g.empty()) report.components.push_back(std::move(g));
    std::sort(report.components.begin(), report.components.end());
    report.value = static_cast<int>(report.components.size());
    return report;
}

ClusteringReport clustering_general(const Matrix& a, double rank_tol) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    if (m == 0 || n == 0) throw InvalidArgument("clustering_general: empty matrix");

    // Linear system M A = A diag(xi): mn equations over m^2 + n unknowns,
    // unknown vector [vec(M); xi].
    Matrix system = Matrix::Zero(m * n, m * m + n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) {
            const int row = i + m * j;
            for (int k = 0; k < m; ++k) system(row, i + m * k) = a(k, j);
            system(row, m * m + j) = -a(i, j);
        }

    const NullspaceResult ns = nullspace(system, rank_tol);
    ClusteringReport report;
    report.method = ClusteringMethod::nullspace;
    report.nullspace_dim = m * m + n - ns.rank;
    report.spectrum = ns.singular_values;
    report.rank = numerical_rank(a, rank_tol);
    report.zero_columns = static_cast<int>(find_zero_columns(a, rank_tol).size());
    report.value =
        report.nullspace_dim - (m - 1) * (m - report.rank) - report.zero_columns;
    if (report.value < 1)
        throw NumericalRankAmbiguity(
            "clustering_general: computed clustering number below 1; the singular "
            "spectrum does not separate rank cleanly",
            ns.singular_values);
    return report;
}

std::array<int, 3> clustering_vector(const Decomposition& dec, double rank_tol) {
    const StackedFactors s = stack_factors(dec);
    return {clustering_general(s.Ut, rank_tol).value, clustering_general(s.Vt, rank_tol).value,
            clustering_general(s.Wt, rank_tol).value};
}

}  // namespace mmt
