#include "mmt/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>

#include "mmt/errors.hpp"

namespace mmt {

Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

int numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    const double cut = tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++rank;
    return rank;
}

NullspaceResult nullspace(const Matrix& m, double tol) {
    NullspaceResult result;
    const Eigen::Index cols = m.cols();
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    result.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double cut = tol * smax;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv(i) > cut) ++rank;
    result.rank = rank;
    result.basis = svd.matrixV().rightCols(cols - rank);
    return result;
}

double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

double smallest_singular_value(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    return sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

namespace {

// Jonker-Volgenant style shortest augmenting path assignment (min-sum).
std::vector<int> min_cost_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row (1-based)
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(static_cast<std::size_t>(n) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return row_to_col;
}

}  // namespace

double eigenvalue_matching_distance(const std::vector<std::complex<double>>& a,
                                    const std::vector<std::complex<double>>& b) {
    if (a.size() != b.size())
        throw InvalidArgument("eigenvalue_matching_distance: size mismatch");
    const int n = static_cast<int>(a.size());
    if (n == 0) return 0.0;
    Matrix cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost(i, j) = std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]);
    const auto assignment = min_cost_assignment(cost);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        worst = std::max(worst, cost(i, assignment[static_cast<std::size_t>(i)]));
    return worst;
}

Matrix kronecker_rearrangement(const Matrix& m, Eigen::Index r, Eigen::Index c,
                               Eigen::Index p, Eigen::Index q) {
    if (m.rows() != r * p || m.cols() != c * q)
        throw InvalidArgument("kronecker_rearrangement: shape mismatch");
    Matrix out(r * c, p * q);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i)
            out.row(i + r * j) = vectorize(m.block(i * p, j * q, p, q)).transpose();
    return out;
}

KroneckerFactors nearest_kronecker(const Matrix& m, Eigen::Index r, Eigen::Index c,
                                   Eigen::Index p, Eigen::Index q) {
    const Matrix rearranged = kronecker_rearrangement(m, r, c, p, q);
    Eigen::JacobiSVD<Matrix> svd(rearranged, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    KroneckerFactors out;
    out.rank1_defect = (sv.size() > 1 && sv(0) > 0.0) ? sv(1) / sv(0) : 0.0;
    Vector va = svd.matrixU().col(0) * sv(0);
    Vector vb = svd.matrixV().col(0);
    // Canonical sign: largest-magnitude entry of the first factor positive.
    Eigen::Index imax = 0;
    va.cwiseAbs().maxCoeff(&imax);
    if (va(imax) < 0.0) {
        va = -va;
        vb = -vb;
    }
    out.a = unvectorize(va, r, c);
    out.b = unvectorize(vb, p, q);
    return out;
}

}  // namespace mmt
