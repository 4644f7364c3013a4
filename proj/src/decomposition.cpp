#include "mmt/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <sstream>

#include "mmt/errors.hpp"

namespace mmt {

MatMulTensor build_tensor(int m, int p, int n) {
    if (m < 1 || p < 1 || n < 1)
        throw InvalidArgument("build_tensor: dimensions must be positive");
    MatMulTensor t;
    t.m = m;
    t.p = p;
    t.n = n;
    t.entries.assign(static_cast<std::size_t>(m * p) * (p * n) * (n * m), 0.0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < p; ++b)
            for (int c = 0; c < n; ++c)
                t.at(b + p * a, c + n * b, a + m * c) = 1.0;
    return t;
}

Matrix contract(const MatMulTensor& t, const Matrix& a, const Matrix& b) {
    if (a.rows() != t.m || a.cols() != t.p || b.rows() != t.p || b.cols() != t.n)
        throw InvalidArgument("contract: operand shapes do not match the tensor");
    Matrix out = Matrix::Zero(t.m, t.n);
    for (int i = 0; i < t.dim0(); ++i) {
        const double av = a(i / t.p, i % t.p);
        if (av == 0.0) continue;
        for (int j = 0; j < t.dim1(); ++j) {
            const double bv = b(j / t.n, j % t.n);
            if (bv == 0.0) continue;
            for (int k = 0; k < t.dim2(); ++k) {
                const double e = t(i, j, k);
                if (e != 0.0) out(k % t.m, k / t.m) += e * av * bv;
            }
        }
    }
    return out;
}

void check_shapes(const Decomposition& dec) {
    if (dec.m < 1 || dec.p < 1 || dec.n < 1)
        throw InvalidArgument("decomposition: dimensions must be positive");
    if (dec.U.size() != dec.V.size() || dec.U.size() != dec.W.size())
        throw InvalidArgument("decomposition: factor lists differ in length");
    if (dec.U.empty()) throw InvalidArgument("decomposition: empty term list");
    for (int r = 0; r < dec.rank(); ++r) {
        if (dec.U[r].rows() != dec.p || dec.U[r].cols() != dec.m)
            throw InvalidArgument("decomposition: U factor has wrong shape");
        if (dec.V[r].rows() != dec.n || dec.V[r].cols() != dec.p)
            throw InvalidArgument("decomposition: V factor has wrong shape");
        if (dec.W[r].rows() != dec.m || dec.W[r].cols() != dec.n)
            throw InvalidArgument("decomposition: W factor has wrong shape");
    }
}

StackedFactors stack_factors(const Decomposition& dec) {
    check_shapes(dec);
    const int F = dec.rank();
    StackedFactors s;
    s.Ut.resize(dec.p * dec.m, F);
    s.Vt.resize(dec.n * dec.p, F);
    s.Wt.resize(dec.m * dec.n, F);
    for (int r = 0; r < F; ++r) {
        s.Ut.col(r) = vectorize(dec.U[r]);
        s.Vt.col(r) = vectorize(dec.V[r]);
        s.Wt.col(r) = vectorize(dec.W[r]);
    }
    return s;
}

Matrix stack_mode(const Decomposition& dec, FactorMode mode) {
    const auto& list = mode == FactorMode::U ? dec.U : (mode == FactorMode::V ? dec.V : dec.W);
    const int F = dec.rank();
    Matrix out(list[0].size(), F);
    for (int r = 0; r < F; ++r) out.col(r) = vectorize(list[static_cast<std::size_t>(r)]);
    return out;
}

VerificationReport verify_decomposition(const Decomposition& dec, double tol) {
    const StackedFactors s = stack_factors(dec);
    const MatMulTensor t = build_tensor(dec.m, dec.p, dec.n);
    VerificationReport report;
    double fro2 = 0.0;
    for (int k = 0; k < t.dim2(); ++k)
        for (int j = 0; j < t.dim1(); ++j)
            for (int i = 0; i < t.dim0(); ++i) {
                double value = 0.0;
                for (int r = 0; r < dec.rank(); ++r)
                    value += s.Ut(i, r) * s.Vt(j, r) * s.Wt(k, r);
                const double d = std::abs(value - t(i, j, k));
                report.max_residual = std::max(report.max_residual, d);
                fro2 += d * d;
            }
    report.frobenius_residual = std::sqrt(fro2);
    report.pass = report.max_residual < tol;
    return report;
}

Decomposition cyclic_rotate(const Decomposition& dec, int shift) {
    check_shapes(dec);
    shift = ((shift % 3) + 3) % 3;
    if (shift == 0) return dec;
    Decomposition out;
    if (shift == 1) {
        out.m = dec.n;
        out.p = dec.m;
        out.n = dec.p;
        out.U = dec.W;
        out.V = dec.U;
        out.W = dec.V;
    } else {
        out.m = dec.p;
        out.p = dec.n;
        out.n = dec.m;
        out.U = dec.V;
        out.V = dec.W;
        out.W = dec.U;
    }
    return out;
}

Decomposition permute_terms(const Decomposition& dec, const std::vector<int>& sigma) {
    if (static_cast<int>(sigma.size()) != dec.rank())
        throw InvalidArgument("permute_terms: permutation length mismatch");
    Decomposition out;
    out.m = dec.m;
    out.p = dec.p;
    out.n = dec.n;
    out.U.reserve(sigma.size());
    out.V.reserve(sigma.size());
    out.W.reserve(sigma.size());
    for (int s : sigma) {
        if (s < 0 || s >= dec.rank())
            throw InvalidArgument("permute_terms: index out of range");
        out.U.push_back(dec.U[static_cast<std::size_t>(s)]);
        out.V.push_back(dec.V[static_cast<std::size_t>(s)]);
        out.W.push_back(dec.W[static_cast<std::size_t>(s)]);
    }
    return out;
}

namespace {

struct Entry {
    int row, col;
    double value;
};

Matrix sparse(int rows, int cols, std::initializer_list<Entry> entries) {
    Matrix m = Matrix::Zero(rows, cols);
    for (const auto& e : entries) m(e.row - 1, e.col - 1) = e.value;
    return m;
}

// One product: f(A) = sum coef * A(a,b)  ->  U(b,a) = coef
//              g(B) = sum coef * B(b,c)  ->  V(c,b) = coef
//              contributions to C(a,c)   ->  W(a,c) = coef
struct Product {
    std::vector<Entry> a_coeffs;  // {a, b, coef}
    std::vector<Entry> b_coeffs;  // {b, c, coef}
};

void add_product(Decomposition& dec, const Product& prod) {
    Matrix u = Matrix::Zero(dec.p, dec.m);
    for (const auto& e : prod.a_coeffs) u(e.col - 1, e.row - 1) = e.value;
    Matrix v = Matrix::Zero(dec.n, dec.p);
    for (const auto& e : prod.b_coeffs) v(e.col - 1, e.row - 1) = e.value;
    dec.U.push_back(std::move(u));
    dec.V.push_back(std::move(v));
    dec.W.push_back(Matrix::Zero(dec.m, dec.n));
}

}  // namespace

Decomposition strassen_fixture() {
    Decomposition dec;
    dec.m = dec.p = dec.n = 2;
    add_product(dec, {{{1, 1, 1}, {2, 2, 1}}, {{1, 1, 1}, {2, 2, 1}}});
    add_product(dec, {{{2, 1, 1}, {2, 2, 1}}, {{1, 1, 1}}});
    add_product(dec, {{{1, 1, 1}}, {{1, 2, 1}, {2, 2, -1}}});
    add_product(dec, {{{2, 2, 1}}, {{2, 1, 1}, {1, 1, -1}}});
    add_product(dec, {{{1, 1, 1}, {1, 2, 1}}, {{2, 2, 1}}});
    add_product(dec, {{{2, 1, 1}, {1, 1, -1}}, {{1, 1, 1}, {1, 2, 1}}});
    add_product(dec, {{{1, 2, 1}, {2, 2, -1}}, {{2, 1, 1}, {2, 2, 1}}});
    dec.W[0] = sparse(2, 2, {{1, 1, 1}, {2, 2, 1}});
    dec.W[1] = sparse(2, 2, {{2, 1, 1}, {2, 2, -1}});
    dec.W[2] = sparse(2, 2, {{1, 2, 1}, {2, 2, 1}});
    dec.W[3] = sparse(2, 2, {{1, 1, 1}, {2, 1, 1}});
    dec.W[4] = sparse(2, 2, {{1, 1, -1}, {1, 2, 1}});
    dec.W[5] = sparse(2, 2, {{2, 2, 1}});
    dec.W[6] = sparse(2, 2, {{1, 1, 1}});
    return dec;
}

Decomposition laderman_fixture() {
    Decomposition dec;
    dec.m = dec.p = dec.n = 3;
    const Product products[23] = {
        {{{1, 1, 1}, {1, 2, 1}, {1, 3, 1}, {2, 1, -1}, {2, 2, -1}, {3, 2, -1}, {3, 3, -1}}, {{2, 2, 1}}},
        {{{1, 1, 1}, {2, 1, -1}}, {{2, 2, 1}, {1, 2, -1}}},
        {{{2, 2, 1}}, {{1, 1, -1}, {1, 2, 1}, {2, 1, 1}, {2, 2, -1}, {2, 3, -1}, {3, 1, -1}, {3, 3, 1}}},
        {{{1, 1, -1}, {2, 1, 1}, {2, 2, 1}}, {{1, 1, 1}, {1, 2, -1}, {2, 2, 1}}},
        {{{2, 1, 1}, {2, 2, 1}}, {{1, 1, -1}, {1, 2, 1}}},
        {{{1, 1, 1}}, {{1, 1, 1}}},
        {{{1, 1, -1}, {3, 1, 1}, {3, 2, 1}}, {{1, 1, 1}, {1, 3, -1}, {2, 3, 1}}},
        {{{1, 1, -1}, {3, 1, 1}}, {{1, 3, 1}, {2, 3, -1}}},
        {{{3, 1, 1}, {3, 2, 1}}, {{1, 1, -1}, {1, 3, 1}}},
        {{{1, 1, 1}, {1, 2, 1}, {1, 3, 1}, {2, 2, -1}, {2, 3, -1}, {3, 1, -1}, {3, 2, -1}}, {{2, 3, 1}}},
        {{{3, 2, 1}}, {{1, 1, -1}, {1, 3, 1}, {2, 1, 1}, {2, 2, -1}, {2, 3, -1}, {3, 1, -1}, {3, 2, 1}}},
        {{{1, 3, -1}, {3, 2, 1}, {3, 3, 1}}, {{2, 2, 1}, {3, 1, 1}, {3, 2, -1}}},
        {{{1, 3, 1}, {3, 3, -1}}, {{2, 2, 1}, {3, 2, -1}}},
        {{{1, 3, 1}}, {{3, 1, 1}}},
        {{{3, 2, 1}, {3, 3, 1}}, {{3, 1, -1}, {3, 2, 1}}},
        {{{1, 3, -1}, {2, 2, 1}, {2, 3, 1}}, {{2, 3, 1}, {3, 1, 1}, {3, 3, -1}}},
        {{{1, 3, 1}, {2, 3, -1}}, {{2, 3, 1}, {3, 3, -1}}},
        {{{2, 2, 1}, {2, 3, 1}}, {{3, 1, -1}, {3, 3, 1}}},
        {{{1, 2, 1}}, {{2, 1, 1}}},
        {{{2, 3, 1}}, {{3, 2, 1}}},
        {{{2, 1, 1}}, {{1, 3, 1}}},
        {{{3, 1, 1}}, {{1, 2, 1}}},
        {{{3, 3, 1}}, {{3, 3, 1}}},
    };
    for (const auto& prod : products) add_product(dec, prod);
    const std::vector<int> sums[3][3] = {
        {{6, 14, 19}, {1, 4, 5, 6, 12, 14, 15}, {6, 7, 9, 10, 14, 16, 18}},
        {{2, 3, 4, 6, 14, 16, 17}, {2, 4, 5, 6, 20}, {14, 16, 17, 18, 21}},
        {{6, 7, 8, 11, 12, 13, 14}, {12, 13, 14, 15, 22}, {6, 7, 8, 9, 23}},
    };
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c)
            for (int r : sums[a][c]) dec.W[static_cast<std::size_t>(r - 1)](a, c) = 1.0;
    return dec;
}

Decomposition naive_fixture(int m, int p, int n) {
    if (m < 1 || p < 1 || n < 1)
        throw InvalidArgument("naive_fixture: dimensions must be positive");
    Decomposition dec;
    dec.m = m;
    dec.p = p;
    dec.n = n;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < p; ++b)
            for (int c = 0; c < n; ++c) {
                Matrix u = Matrix::Zero(p, m);
                u(b, a) = 1.0;
                Matrix v = Matrix::Zero(n, p);
                v(c, b) = 1.0;
                Matrix w = Matrix::Zero(m, n);
                w(a, c) = 1.0;
                dec.U.push_back(std::move(u));
                dec.V.push_back(std::move(v));
                dec.W.push_back(std::move(w));
            }
    return dec;
}

Decomposition dotprod121_fixture() {
    Decomposition dec;
    dec.m = 1;
    dec.p = 2;
    dec.n = 1;
    dec.U = {sparse(2, 1, {{1, 1, 1}}), sparse(2, 1, {{2, 1, 1}})};
    dec.V = {sparse(1, 2, {{1, 1, 1}}), sparse(1, 2, {{1, 2, 1}})};
    dec.W = {sparse(1, 1, {{1, 1, 1}}), sparse(1, 1, {{1, 1, 1}})};
    return dec;
}

Decomposition fixture(const std::string& name) {
    if (name == "strassen") return strassen_fixture();
    if (name == "laderman") return laderman_fixture();
    if (name == "dotprod121") return dotprod121_fixture();
    if (name.rfind("naive(", 0) == 0 && name.back() == ')') {
        std::istringstream in(name.substr(6, name.size() - 7));
        int m = 0, p = 0, n = 0;
        char c1 = 0, c2 = 0;
        if ((in >> m >> c1 >> p >> c2 >> n) && c1 == ',' && c2 == ',')
            return naive_fixture(m, p, n);
    }
    throw InvalidArgument("fixture: unknown name '" + name + "'");
}

SpanCheck factor_span_check(const Decomposition& dec, FactorMode mode,
                            const std::vector<int>& index_set, double rank_tol) {
    check_shapes(dec);
    const int F = dec.rank();
    const int bound = mode == FactorMode::U ? dec.n : (mode == FactorMode::V ? dec.m : dec.p);
    if (static_cast<int>(index_set.size()) + bound < F + 1)
        throw InvalidArgument("factor_span_check: index set too small for the span guarantee");
    const Matrix stacked = stack_mode(dec, mode);
    Matrix sub(stacked.rows(), static_cast<Eigen::Index>(index_set.size()));
    for (std::size_t i = 0; i < index_set.size(); ++i) {
        const int r = index_set[i];
        if (r < 0 || r >= F) throw InvalidArgument("factor_span_check: index out of range");
        sub.col(static_cast<Eigen::Index>(i)) = stacked.col(r);
    }
    Eigen::JacobiSVD<Matrix> svd(sub);
    const auto& sv = svd.singularValues();
    SpanCheck check;
    const int full = static_cast<int>(stacked.rows());
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rank_tol * sv(0)) ++rank;
    check.spans = rank == full;
    check.sigma_min = sv.size() >= full ? sv(full - 1) : 0.0;
    return check;
}

std::vector<Matrix> triple_products(const Decomposition& dec) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(dec.rank()));
    for (int r = 0; r < dec.rank(); ++r)
        out.push_back(dec.W[static_cast<std::size_t>(r)] * dec.V[static_cast<std::size_t>(r)] *
                      dec.U[static_cast<std::size_t>(r)]);
    return out;
}

int rank1_term_rank(const Decomposition& dec, double tol) {
    const StackedFactors s = stack_factors(dec);
    const int F = dec.rank();
    Matrix terms(s.Ut.rows() * s.Vt.rows() * s.Wt.rows(), F);
    for (int r = 0; r < F; ++r) {
        Vector uv = kronecker(s.Vt.col(r), s.Ut.col(r));
        terms.col(r) = kronecker(s.Wt.col(r), uv);
    }
    return numerical_rank(terms, tol);
}

}  // namespace mmt
