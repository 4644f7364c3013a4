#include "mmt/discretize.hpp"

#include <cmath>
#include <cstdint>

#include "mmt/errors.hpp"

namespace mmt {

namespace {

bool is_integer_matrix(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, j);
            if (v != std::round(v) || std::abs(v) > 1e15) return false;
        }
    return true;
}

// Trace with compensated (Kahan) summation.
double compensated_trace(const Matrix& m) {
    double sum = 0.0, comp = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double y = m(i, i) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

Vector char_poly_double(const Matrix& m) {
    const Eigen::Index dim = m.rows();
    Vector coeffs(dim);  // coeffs(0) = alpha_{m-1}, ..., coeffs(dim-1) = alpha_0
    Matrix b = m;
    double c = -compensated_trace(b);
    coeffs(0) = c;
    for (Eigen::Index k = 2; k <= dim; ++k) {
        b = m * (b + c * Matrix::Identity(dim, dim));
        c = -compensated_trace(b) / static_cast<double>(k);
        coeffs(k - 1) = c;
    }
    return coeffs;
}

// Exact path for integer matrices: the recursion stays in Z (the division by
// k is exact), so int64 arithmetic gives exact coefficients.
Vector char_poly_integer(const Matrix& m) {
    const Eigen::Index dim = m.rows();
    using IMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
    IMatrix a = m.cast<std::int64_t>();
    IMatrix b = a;
    Vector coeffs(dim);
    std::int64_t c = -b.trace();
    coeffs(0) = static_cast<double>(c);
    for (Eigen::Index k = 2; k <= dim; ++k) {
        b = a * (b + c * IMatrix::Identity(dim, dim));
        c = -b.trace() / static_cast<std::int64_t>(k);
        coeffs(k - 1) = static_cast<double>(c);
    }
    return coeffs;
}

}  // namespace

Vector char_poly(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw InvalidArgument("char_poly: matrix must be square and nonempty");
    if (is_integer_matrix(m)) return char_poly_integer(m);
    return char_poly_double(m);
}

DiscretizabilityReport nd_score(const Decomposition& dec, double q, int draws,
                                int beta_bound, std::mt19937_64& rng) {
    if (q <= 0.0) throw InvalidArgument("nd_score: q must be positive");
    if (draws < 1 || beta_bound < 0) throw InvalidArgument("nd_score: bad sampling parameters");
    const std::vector<Matrix> ms = triple_products(dec);
    const int F = dec.rank();
    const double scale = 1.0 / (q * q * q);

    DiscretizabilityReport report;
    report.q = q;
    report.draws = draws;
    report.beta_range = beta_bound;
    std::uniform_int_distribution<int> beta_dist(-beta_bound, beta_bound);
    for (int d = 0; d < draws; ++d) {
        DiscretizabilityReport::Draw draw;
        draw.beta.resize(static_cast<std::size_t>(F));
        Matrix combo = Matrix::Zero(dec.m, dec.m);
        for (int r = 0; r < F; ++r) {
            draw.beta[static_cast<std::size_t>(r)] = beta_dist(rng);
            combo += draw.beta[static_cast<std::size_t>(r)] * ms[static_cast<std::size_t>(r)];
        }
        draw.coeffs = char_poly(scale * combo);
        for (Eigen::Index i = 0; i < draw.coeffs.size(); ++i)
            draw.max_deviation =
                std::max(draw.max_deviation, std::abs(draw.coeffs(i) - std::round(draw.coeffs(i))));
        report.nd_score = std::max(report.nd_score, draw.max_deviation);
        report.per_draw.push_back(std::move(draw));
    }
    return report;
}

bool discretizability_criterion(const Decomposition& dec, double q, int draws, int beta_bound,
                                std::mt19937_64& rng, double threshold,
                                DiscretizabilityReport* report_out) {
    const DiscretizabilityReport report = nd_score(dec, q, draws, beta_bound, rng);
    if (report_out) *report_out = report;
    return report.nd_score < threshold;
}

}  // namespace mmt
