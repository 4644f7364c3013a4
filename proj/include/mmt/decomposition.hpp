#ifndef MMT_DECOMPOSITION_HPP
#define MMT_DECOMPOSITION_HPP

#include <string>
#include <vector>

#include "mmt/linalg.hpp"

namespace mmt {

// The (m,p,n) matrix multiplication tensor materialized as a dense 0/1 array
// of shape (mp) x (pn) x (nm). Slot indices follow the trace pairing
// f(A) = trace(U A): the A-slot index of entry A(a,b) is b + p*a, the B-slot
// index of B(b,c) is c + n*b, and the C-slot index of C(a,c) is a + m*c.
struct MatMulTensor {
    int m = 0, p = 0, n = 0;
    std::vector<double> entries;

    int dim0() const { return m * p; }
    int dim1() const { return p * n; }
    int dim2() const { return n * m; }

    double operator()(int i, int j, int k) const {
        return entries[static_cast<std::size_t>(i + dim0() * (j + dim1() * k))];
    }
    double& at(int i, int j, int k) {
        return entries[static_cast<std::size_t>(i + dim0() * (j + dim1() * k))];
    }
};

MatMulTensor build_tensor(int m, int p, int n);

// Contract the tensor against concrete inputs A (m x p) and B (p x n); equals
// A*B when the tensor is exact.
Matrix contract(const MatMulTensor& tensor, const Matrix& a, const Matrix& b);

// An F-term decomposition: U[r] is p x m, V[r] is n x p, W[r] is m x n.
struct Decomposition {
    int m = 0, p = 0, n = 0;
    std::vector<Matrix> U, V, W;

    int rank() const { return static_cast<int>(U.size()); }
};

// Stacked factor matrices; column r is the vectorization of the r-th factor.
struct StackedFactors {
    Matrix Ut;  // (pm) x F
    Matrix Vt;  // (np) x F
    Matrix Wt;  // (mn) x F
};

enum class FactorMode { U, V, W };

void check_shapes(const Decomposition& dec);
StackedFactors stack_factors(const Decomposition& dec);
Matrix stack_mode(const Decomposition& dec, FactorMode mode);

struct VerificationReport {
    double max_residual = 0.0;
    double frobenius_residual = 0.0;
    bool pass = false;
};

// Entrywise comparison of the reconstructed tensor against build_tensor.
VerificationReport verify_decomposition(const Decomposition& dec, double tol = 1e-9);

// shift=1 maps (U,V,W) of (m,p,n) to (W,U,V) of (n,m,p); shift=2 to (V,W,U)
// of (p,n,m); shift=0 is the identity.
Decomposition cyclic_rotate(const Decomposition& dec, int shift);

Decomposition permute_terms(const Decomposition& dec, const std::vector<int>& sigma);

// Named fixtures: "strassen", "laderman", "dotprod121", "naive(m,p,n)".
Decomposition fixture(const std::string& name);
Decomposition strassen_fixture();
Decomposition laderman_fixture();
Decomposition naive_fixture(int m, int p, int n);
Decomposition dotprod121_fixture();

struct SpanCheck {
    bool spans = false;
    double sigma_min = 0.0;
    explicit operator bool() const { return spans; }
};

// Whether the factors of `mode` indexed by `index_set` (0-based) span the
// full factor space. The precondition |I| + d >= F + 1 (d = n, m, p for modes
// U, V, W) must hold; violating it is an error, not a false return.
SpanCheck factor_span_check(const Decomposition& dec, FactorMode mode,
                            const std::vector<int>& index_set, double rank_tol = 1e-8);

// Triple products M_r = W_r V_r U_r (m x m), invariant under scalings and
// conjugated by P under trace transformations.
std::vector<Matrix> triple_products(const Decomposition& dec);

// Rank of the stacked rank-1 terms; below F means the terms are linearly
// dependent and the decomposition is reducible.
int rank1_term_rank(const Decomposition& dec, double tol = 1e-8);

}  // namespace mmt

#endif
