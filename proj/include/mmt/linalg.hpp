#ifndef MMT_LINALG_HPP
#define MMT_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace mmt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Column-stacking vectorization and its inverse.
inline Vector vectorize(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvectorize(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kronecker(const Matrix& a, const Matrix& b);

// Numerical rank: number of singular values above tol * sigma_max.
int numerical_rank(const Matrix& m, double tol);

// Orthonormal basis of the (right) nullspace at the given relative tolerance,
// one column per nullspace dimension. Also reports the singular spectrum.
struct NullspaceResult {
    Matrix basis;
    std::vector<double> singular_values;
    int rank = 0;
};
NullspaceResult nullspace(const Matrix& m, double tol);

double condition_number(const Matrix& m);
double smallest_singular_value(const Matrix& m);

// Eigenvalues of a real square matrix, as complex numbers.
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

// Cost of the optimal one-to-one matching between two equally sized complex
// multisets, reported as the largest matched distance (min-sum assignment).
double eigenvalue_matching_distance(const std::vector<std::complex<double>>& a,
                                    const std::vector<std::complex<double>>& b);

// Nearest Kronecker product factorization of an (rp x cq) matrix viewed as an
// (r x c) grid of (p x q) blocks: m ~ a (x) b. Returns the ratio of the second
// to the first singular value of the block rearrangement as a rank-1 defect.
struct KroneckerFactors {
    Matrix a;
    Matrix b;
    double rank1_defect = 0.0;
};
KroneckerFactors nearest_kronecker(const Matrix& m, Eigen::Index r, Eigen::Index c,
                                   Eigen::Index p, Eigen::Index q);

// Rearrangement R(m) with R(a (x) b) = vec(a) vec(b)^T; rows indexed by the
// (r x c) block grid in column-stacking order, columns by vec of each block.
Matrix kronecker_rearrangement(const Matrix& m, Eigen::Index r, Eigen::Index c,
                               Eigen::Index p, Eigen::Index q);

}  // namespace mmt

#endif
