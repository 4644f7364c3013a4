#include "mmt/equivalence.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mmt/clustering.hpp"
#include "mmt/errors.hpp"

namespace mmt {

namespace {

constexpr std::uint64_t kNullspaceSampleSeed = 0x2545f4914f6cdd1dULL;

double max_abs_entry(const Decomposition& dec) {
    double scale = 0.0;
    for (int r = 0; r < dec.rank(); ++r) {
        scale = std::max(scale, dec.U[static_cast<std::size_t>(r)].cwiseAbs().maxCoeff());
        scale = std::max(scale, dec.V[static_cast<std::size_t>(r)].cwiseAbs().maxCoeff());
        scale = std::max(scale, dec.W[static_cast<std::size_t>(r)].cwiseAbs().maxCoeff());
    }
    return scale;
}

double max_entry_difference(const Decomposition& a, const Decomposition& b) {
    double diff = 0.0;
    for (int r = 0; r < a.rank(); ++r) {
        diff = std::max(diff, (a.U[static_cast<std::size_t>(r)] - b.U[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff());
        diff = std::max(diff, (a.V[static_cast<std::size_t>(r)] - b.V[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff());
        diff = std::max(diff, (a.W[static_cast<std::size_t>(r)] - b.W[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff());
    }
    return diff;
}

// Undo the cyclic rotation: t' connects the shift-rotated decompositions,
// the result connects the originals.
InvarianceTransform unrotate_transform(const InvarianceTransform& t, int shift) {
    if (shift == 0) return t;
    InvarianceTransform out;
    out.sigma = t.sigma;
    if (shift == 1) {
        out.lambda = t.mu;
        out.mu = t.nu;
        out.nu = t.lambda;
        out.P = t.Q;
        out.Q = t.R;
        out.R = t.P;
    } else {
        out.lambda = t.nu;
        out.mu = t.lambda;
        out.nu = t.mu;
        out.P = t.R;
        out.Q = t.P;
        out.R = t.Q;
    }
    return out;
}

// Linearized first system: M Ut = Ut' diag(lambda), unknowns [vec(M); lambda].
Matrix first_system(const Matrix& ut1, const Matrix& ut2) {
    const Eigen::Index d = ut1.rows();
    const Eigen::Index F = ut1.cols();
    Matrix sys = Matrix::Zero(d * F, d * d + F);
    for (Eigen::Index r = 0; r < F; ++r)
        for (Eigen::Index i = 0; i < d; ++i) {
            const Eigen::Index row = i + d * r;
            for (Eigen::Index k = 0; k < d; ++k) sys(row, i + d * k) = ut1(k, r);
            sys(row, d * d + r) = -ut2(i, r);
        }
    return sys;
}

// Second system: R V'_r = mu~_r V_r Q  and  W_r R = nu~_r P W'_r,
// unknowns [vec(R); mu~; nu~].
Matrix second_system(const Decomposition& d1, const Decomposition& d2, const Matrix& P,
                     const Matrix& Q) {
    const int n = d1.n;
    const int F = d1.rank();
    const Eigen::Index rows_v = static_cast<Eigen::Index>(n) * d1.p;
    const Eigen::Index rows_w = static_cast<Eigen::Index>(d1.m) * n;
    Matrix sys = Matrix::Zero((rows_v + rows_w) * F, static_cast<Eigen::Index>(n) * n + 2 * F);
    Eigen::Index row0 = 0;
    for (int r = 0; r < F; ++r) {
        const Matrix coeff = kronecker(d2.V[static_cast<std::size_t>(r)].transpose(), Matrix::Identity(n, n));
        const Vector rhs = vectorize(d1.V[static_cast<std::size_t>(r)] * Q);
        sys.block(row0, 0, rows_v, static_cast<Eigen::Index>(n) * n) = coeff;
        sys.block(row0, static_cast<Eigen::Index>(n) * n + r, rows_v, 1) = -rhs;
        row0 += rows_v;
    }
    for (int r = 0; r < F; ++r) {
        const Matrix coeff = kronecker(Matrix::Identity(n, n), d1.W[static_cast<std::size_t>(r)]);
        const Vector rhs = vectorize(P * d2.W[static_cast<std::size_t>(r)]);
        sys.block(row0, 0, rows_w, static_cast<Eigen::Index>(n) * n) = coeff;
        sys.block(row0, static_cast<Eigen::Index>(n) * n + F + r, rows_w, 1) = -rhs;
        row0 += rows_w;
    }
    return sys;
}

bool all_nonzero(const Vector& v, double zero_tol) {
    const double vmax = v.cwiseAbs().maxCoeff();
    if (vmax <= 0.0) return false;
    return v.cwiseAbs().minCoeff() > zero_tol * vmax;
}

// Sylvester-style simultaneous-similarity system: X M2_r = M1_r X for all r,
// unknown X (the conjugator P).
Matrix similarity_system(const std::vector<Matrix>& m1, const std::vector<Matrix>& m2) {
    const Eigen::Index dim = m1[0].rows();
    const Eigen::Index F = static_cast<Eigen::Index>(m1.size());
    Matrix sys(F * dim * dim, dim * dim);
    const Matrix id = Matrix::Identity(dim, dim);
    for (Eigen::Index r = 0; r < F; ++r)
        sys.block(r * dim * dim, 0, dim * dim, dim * dim) =
            kronecker(m2[static_cast<std::size_t>(r)].transpose(), id) -
            kronecker(id, m1[static_cast<std::size_t>(r)]);
    return sys;
}

// Candidate elements of a nullspace: the basis vectors (most-null direction
// first, so a spurious near-null direction cannot shadow the true solution)
// plus seeded random unit combinations when the dimension exceeds one.
std::vector<Vector> nullspace_elements(const Matrix& basis, int random_extra) {
    std::vector<Vector> out;
    for (Eigen::Index i = basis.cols(); i-- > 0;) out.push_back(basis.col(i));
    if (basis.cols() > 1) {
        std::mt19937_64 rng(kNullspaceSampleSeed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int k = 0; k < random_extra; ++k) {
            Vector c(basis.cols());
            for (Eigen::Index i = 0; i < basis.cols(); ++i) c(i) = gauss(rng);
            out.push_back(basis * c.normalized());
        }
    }
    return out;
}

struct FirstStage {
    Matrix P, Q;
    Vector lambda_hat;  // lambda_hat_r U'_r = Q^{-1} U_r P
};

bool invertible(const Matrix& m) {
    return smallest_singular_value(m) > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

// Fallback when the linearized system has a nullspace of dimension > 1
// (clustering number above one): recover P from the simultaneous-similarity
// system on the triple products, then (Q^{-1}, lambda) from the now-linear
// factor equations. Every candidate is verified downstream, so spurious
// solutions are harmless.
void similarity_route_candidates(const Decomposition& d1, const Decomposition& d2,
                                 const EquivalenceTolerances& tols,
                                 std::vector<FirstStage>& out) {
    const int m = d1.m, p = d1.p;
    const int F = d1.rank();
    const std::vector<Matrix> m1 = triple_products(d1);
    const std::vector<Matrix> m2 = triple_products(d2);
    const NullspaceResult nsx = nullspace(similarity_system(m1, m2), tols.nstol);
    if (nsx.basis.cols() == 0) return;

    std::vector<std::pair<double, Matrix>> conjugators;  // (condition, P)
    for (const Vector& x : nullspace_elements(nsx.basis, 16)) {
        const Matrix cand = unvectorize(x, m, m);
        if (!invertible(cand)) continue;
        conjugators.emplace_back(condition_number(cand), cand);
    }
    std::sort(conjugators.begin(), conjugators.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    int tried = 0;
    for (const auto& [cond, P] : conjugators) {
        if (++tried > 4) break;
        // lambda_r U'_r = G U_r P with G = Q^{-1}: linear in (G, lambda).
        Matrix sys = Matrix::Zero(static_cast<Eigen::Index>(p) * m * F,
                                  static_cast<Eigen::Index>(p) * p + F);
        for (int r = 0; r < F; ++r) {
            const Matrix k = d1.U[static_cast<std::size_t>(r)] * P;
            sys.block(static_cast<Eigen::Index>(r) * p * m, 0, static_cast<Eigen::Index>(p) * m,
                      static_cast<Eigen::Index>(p) * p) =
                kronecker(k.transpose(), Matrix::Identity(p, p));
            sys.block(static_cast<Eigen::Index>(r) * p * m, static_cast<Eigen::Index>(p) * p + r,
                      static_cast<Eigen::Index>(p) * m, 1) =
                -vectorize(d2.U[static_cast<std::size_t>(r)]);
        }
        const NullspaceResult nsq = nullspace(sys, tols.nstol);
        if (nsq.basis.cols() == 0) continue;
        std::vector<std::pair<double, Vector>> picks;  // (-lambda quality, element)
        for (const Vector& y : nullspace_elements(nsq.basis, 16)) {
            const Vector lambda_hat = y.tail(F);
            const double lmax = lambda_hat.cwiseAbs().maxCoeff();
            if (lmax <= 0.0) continue;
            picks.emplace_back(-lambda_hat.cwiseAbs().minCoeff() / lmax, y);
        }
        std::sort(picks.begin(), picks.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        int used = 0;
        for (const auto& [quality, y] : picks) {
            if (++used > 4) break;
            const Matrix g = unvectorize(y.head(static_cast<Eigen::Index>(p) * p), p, p);
            const Vector lambda_hat = y.tail(F);
            if (!all_nonzero(lambda_hat, tols.zero_tol) || !invertible(g)) continue;
            out.push_back({P, g.partialPivLu().inverse(), lambda_hat});
        }
    }
}

// Block-coordinate least-squares polish of a candidate transform, working on
// the linear forms G U1_r P = a_r U2_r, R V2_r = mu_r V1_r Q and
// P W2_r = nu_r W1_r R (G = Q^{-1}, a_r = 1/lambda_r). Each pass solves the
// scalars in closed form and each matrix as a small linear least squares, so
// residuals inherited from an ill-conditioned nullspace shrink toward
// machine precision.
void refine_transform(const Decomposition& d1, const Decomposition& d2,
                      InvarianceTransform& t) {
    const int m = d1.m, p = d1.p, n = d1.n;
    const int F = d1.rank();
    Matrix G = t.Q.partialPivLu().inverse();
    Matrix P = t.P;
    Matrix R = t.R;
    Vector a = t.lambda.cwiseInverse();
    Vector mu = t.mu;
    Vector nu = t.nu.cwiseInverse();  // nu_hat: P W2_r = nu_hat_r W1_r R

    const auto lstsq = [](const Matrix& lhs, const Vector& rhs, Eigen::Index rows,
                          Eigen::Index cols) {
        return unvectorize(lhs.colPivHouseholderQr().solve(rhs), rows, cols);
    };

    for (int sweep = 0; sweep < 2; ++sweep) {
        for (int r = 0; r < F; ++r) {
            const Matrix gu = G * d1.U[static_cast<std::size_t>(r)] * P;
            a(r) = vectorize(gu).dot(vectorize(d2.U[static_cast<std::size_t>(r)])) /
                   vectorize(d2.U[static_cast<std::size_t>(r)]).squaredNorm();
        }
        {
            Matrix lhs(static_cast<Eigen::Index>(p) * m * F, static_cast<Eigen::Index>(p) * p);
            Vector rhs(lhs.rows());
            for (int r = 0; r < F; ++r) {
                const Matrix k = d1.U[static_cast<std::size_t>(r)] * P;
                lhs.middleRows(static_cast<Eigen::Index>(r) * p * m, static_cast<Eigen::Index>(p) * m) =
                    kronecker(k.transpose(), Matrix::Identity(p, p));
                rhs.segment(static_cast<Eigen::Index>(r) * p * m, static_cast<Eigen::Index>(p) * m) =
                    a(r) * vectorize(d2.U[static_cast<std::size_t>(r)]);
            }
            G = lstsq(lhs, rhs, p, p);
        }
        for (int r = 0; r < F; ++r) {
            const Matrix q = G.partialPivLu().inverse();
            const Matrix vq = d1.V[static_cast<std::size_t>(r)] * q;
            mu(r) = vectorize(R * d2.V[static_cast<std::size_t>(r)]).dot(vectorize(vq)) /
                    vectorize(vq).squaredNorm();
        }
        {
            const Matrix q = G.partialPivLu().inverse();
            Matrix lhs(static_cast<Eigen::Index>(F) * (n * p + m * n),
                       static_cast<Eigen::Index>(n) * n);
            Vector rhs(lhs.rows());
            Eigen::Index row = 0;
            for (int r = 0; r < F; ++r) {
                lhs.middleRows(row, static_cast<Eigen::Index>(n) * p) =
                    kronecker(d2.V[static_cast<std::size_t>(r)].transpose(),
                              Matrix::Identity(n, n));
                rhs.segment(row, static_cast<Eigen::Index>(n) * p) =
                    mu(r) * vectorize(d1.V[static_cast<std::size_t>(r)] * q);
                row += static_cast<Eigen::Index>(n) * p;
            }
            for (int r = 0; r < F; ++r) {
                lhs.middleRows(row, static_cast<Eigen::Index>(m) * n) =
                    nu(r) * kronecker(Matrix::Identity(n, n), d1.W[static_cast<std::size_t>(r)]);
                rhs.segment(row, static_cast<Eigen::Index>(m) * n) =
                    vectorize(P * d2.W[static_cast<std::size_t>(r)]);
                row += static_cast<Eigen::Index>(m) * n;
            }
            R = lstsq(lhs, rhs, n, n);
        }
        for (int r = 0; r < F; ++r) {
            const Matrix wr = d1.W[static_cast<std::size_t>(r)] * R;
            nu(r) = vectorize(P * d2.W[static_cast<std::size_t>(r)]).dot(vectorize(wr)) /
                    vectorize(wr).squaredNorm();
        }
        {
            Matrix lhs(static_cast<Eigen::Index>(F) * (p * m + m * n),
                       static_cast<Eigen::Index>(m) * m);
            Vector rhs(lhs.rows());
            Eigen::Index row = 0;
            for (int r = 0; r < F; ++r) {
                lhs.middleRows(row, static_cast<Eigen::Index>(p) * m) =
                    kronecker(Matrix::Identity(m, m), G * d1.U[static_cast<std::size_t>(r)]);
                rhs.segment(row, static_cast<Eigen::Index>(p) * m) =
                    a(r) * vectorize(d2.U[static_cast<std::size_t>(r)]);
                row += static_cast<Eigen::Index>(p) * m;
            }
            for (int r = 0; r < F; ++r) {
                lhs.middleRows(row, static_cast<Eigen::Index>(m) * n) =
                    kronecker(d2.W[static_cast<std::size_t>(r)].transpose(),
                              Matrix::Identity(m, m));
                rhs.segment(row, static_cast<Eigen::Index>(m) * n) =
                    nu(r) * vectorize(d1.W[static_cast<std::size_t>(r)] * R);
                row += static_cast<Eigen::Index>(m) * n;
            }
            P = lstsq(lhs, rhs, m, m);
        }
    }

    t.P = P;
    t.Q = G.partialPivLu().inverse();
    t.R = R;
    t.lambda = a.cwiseInverse();
    t.mu = mu;
    t.nu = (t.lambda.cwiseProduct(t.mu)).cwiseInverse();
}

// Scaling+trace solve for decompositions already rotated so the clustering
// assumption (or its best-effort substitute) applies to the U mode. The
// returned transform has the identity permutation; apply(t, d1) == d2 is
// verified entrywise before returning.
std::optional<InvarianceTransform> solve_rotated(const Decomposition& d1,
                                                 const Decomposition& d2,
                                                 const EquivalenceTolerances& tols,
                                                 SolveFailure* failure) {
    const int m = d1.m, p = d1.p, n = d1.n;
    const int F = d1.rank();
    const int pm = p * m;
    const Matrix ut1 = stack_mode(d1, FactorMode::U);
    const Matrix ut2 = stack_mode(d2, FactorMode::U);

    const Matrix sys1 = first_system(ut1, ut2);
    const NullspaceResult ns1 = nullspace(sys1, tols.nstol);
    const int dim1 = static_cast<int>(ns1.basis.cols());
    if (dim1 == 0) {
        if (failure) *failure = {"first system has no nullspace", ns1.singular_values};
        return std::nullopt;
    }

    std::string last_reason = "no candidate admissible";
    std::vector<double> last_spectrum = ns1.singular_values;
    std::vector<FirstStage> stages;
    if (dim1 == 1) {
        const Vector x = ns1.basis.col(0);
        const Matrix mmat = unvectorize(x.head(pm * pm), pm, pm);
        const Vector lambda_hat = x.tail(F);
        if (!all_nonzero(lambda_hat, tols.zero_tol)) {
            last_reason = "zero scaling coefficient in first system";
        } else {
            const KroneckerFactors kf = nearest_kronecker(mmat, m, m, p, p);
            if (kf.rank1_defect > tols.kron_tol) {
                last_reason = "nullspace element is not a Kronecker product";
            } else if (!invertible(kf.a) || !invertible(kf.b)) {
                last_reason = "extracted trace factor numerically singular";
            } else {
                stages.push_back(
                    {kf.a.transpose(), kf.b.partialPivLu().inverse(), lambda_hat});
            }
        }
    } else {
        last_reason = "first-system nullspace dimension " + std::to_string(dim1) + " != 1";
    }
    if (stages.empty())
        similarity_route_candidates(d1, d2, tols, stages);
    if (stages.empty()) {
        if (failure) *failure = {last_reason, last_spectrum};
        return std::nullopt;
    }

    const double scale2 = std::max(1.0, max_abs_entry(d2));
    std::optional<InvarianceTransform> best;
    double best_residual = tols.residual_tol * scale2;
    for (const FirstStage& stage : stages) {
        const Matrix sys2 = second_system(d1, d2, stage.P, stage.Q);
        const NullspaceResult ns2 = nullspace(sys2, tols.nstol);
        if (ns2.basis.cols() == 0) {
            last_reason = "second system has no nullspace";
            last_spectrum = ns2.singular_values;
            continue;
        }
        for (const Vector& y : nullspace_elements(ns2.basis, 16)) {
            const Matrix R = unvectorize(y.head(static_cast<Eigen::Index>(n) * n), n, n);
            const Vector mu_tilde = y.segment(static_cast<Eigen::Index>(n) * n, F);
            const Vector nu_tilde = y.tail(F);
            if (!all_nonzero(mu_tilde, tols.zero_tol) || !all_nonzero(nu_tilde, tols.zero_tol)) {
                last_reason = "zero scaling coefficient in second system";
                last_spectrum = ns2.singular_values;
                continue;
            }
            if (!invertible(R)) {
                last_reason = "extracted R numerically singular";
                continue;
            }
            InvarianceTransform t;
            t.sigma.resize(static_cast<std::size_t>(F));
            std::iota(t.sigma.begin(), t.sigma.end(), 0);
            t.lambda = stage.lambda_hat.cwiseInverse();
            t.mu = mu_tilde;
            t.nu = (t.lambda.cwiseProduct(t.mu)).cwiseInverse();
            t.P = stage.P;
            t.Q = stage.Q;
            t.R = R;
            InvarianceTransform polished = t;
            try {
                refine_transform(d1, d2, polished);
            } catch (const std::exception&) {
                polished = t;
            }
            for (const InvarianceTransform& candidate : {polished, t}) {
                Decomposition image;
                try {
                    image = apply(candidate, d1);
                } catch (const InvalidArgument&) {
                    last_reason = "candidate transform failed validation";
                    continue;
                }
                const double residual = max_entry_difference(image, d2);
                if (residual < best_residual) {
                    best_residual = residual;
                    best = candidate;
                } else if (!best.has_value()) {
                    last_reason = "candidate transform residual too large";
                }
            }
        }
        if (best.has_value()) break;  // stages are ordered by quality
    }
    if (best.has_value()) return best;
    if (failure) *failure = {last_reason, last_spectrum};
    return std::nullopt;
}

struct RotationPlan {
    int shift = 0;
    bool assumption_ok = true;
    bool vectors_differ = false;
};

RotationPlan plan_rotation(const std::array<int, 3>& cv1, const std::array<int, 3>& cv2) {
    RotationPlan plan;
    // Mode order U, V, W; shift 1 moves W into the U slot, shift 2 moves V.
    const int shift_for_mode[3] = {0, 2, 1};
    for (int mode = 0; mode < 3; ++mode)
        if (cv1[static_cast<std::size_t>(mode)] == 1 && cv2[static_cast<std::size_t>(mode)] == 1) {
            plan.shift = shift_for_mode[mode];
            return plan;
        }
    if (cv1 != cv2) {
        plan.vectors_differ = true;
        return plan;
    }
    plan.assumption_ok = false;
    int best_mode = 0;
    for (int mode = 1; mode < 3; ++mode)
        if (cv1[static_cast<std::size_t>(mode)] < cv1[static_cast<std::size_t>(best_mode)]) best_mode = mode;
    plan.shift = shift_for_mode[best_mode];
    return plan;
}

void check_pair(const Decomposition& dec1, const Decomposition& dec2) {
    check_shapes(dec1);
    check_shapes(dec2);
    if (dec1.m != dec2.m || dec1.p != dec2.p || dec1.n != dec2.n)
        throw InvalidArgument("equivalence: tensor dimensions differ");
    if (dec1.rank() != dec2.rank())
        throw InvalidArgument("equivalence: term counts differ");
}

// Parallel-column classes per factor mode; columns in the same class are
// scalar multiples of each other. A connecting transform maps classes to
// classes, so mismatched class patterns are sound pruning evidence.
std::vector<int> parallel_classes(const Matrix& stacked) {
    const Eigen::Index F = stacked.cols();
    std::vector<int> cls(static_cast<std::size_t>(F), -1);
    std::vector<Vector> reps;
    for (Eigen::Index j = 0; j < F; ++j) {
        const Vector v = stacked.col(j);
        const double nv = v.norm();
        for (std::size_t k = 0; k < reps.size() && nv > 0.0; ++k) {
            const double dot = std::abs(reps[k].dot(v));
            if (dot >= (1.0 - 1e-12) * nv) {
                cls[static_cast<std::size_t>(j)] = static_cast<int>(k);
                break;
            }
        }
        if (cls[static_cast<std::size_t>(j)] < 0) {
            reps.push_back(v / (nv > 0.0 ? nv : 1.0));
            cls[static_cast<std::size_t>(j)] = static_cast<int>(reps.size()) - 1;
        }
    }
    return cls;
}

// The three cyclic triple-product families of a decomposition: W_r V_r U_r
// (m x m, conjugated by P under a connecting transform), V_r U_r W_r (n x n,
// conjugated by R), and U_r W_r V_r (p x p, conjugated by Q).
std::array<std::vector<Matrix>, 3> cyclic_triple_products(const Decomposition& dec) {
    std::array<std::vector<Matrix>, 3> out;
    for (int r = 0; r < dec.rank(); ++r) {
        const auto i = static_cast<std::size_t>(r);
        out[0].push_back(dec.W[i] * dec.V[i] * dec.U[i]);
        out[1].push_back(dec.V[i] * dec.U[i] * dec.W[i]);
        out[2].push_back(dec.U[i] * dec.W[i] * dec.V[i]);
    }
    return out;
}

// Trace words are conjugation invariants of the triple-product families:
// tr(M^j) per term fixes the single-term spectrum (Newton's identities) and
// tr(M_a M_b) constrains pairs, both computed to machine precision. They
// prune placements that random-combination eigenvalue probes would only
// catch with looser, eigensolver-limited tolerances. All three cyclic
// families contribute; structured decompositions often have coincident
// spectra in one mode but not in the others.
struct TraceInvariants {
    Matrix term_keys;                  // stacked tr(M^j) rows over the three families
    std::array<Matrix, 3> pair_table;  // per family: (a, b) -> tr(M_a M_b)
};

TraceInvariants trace_invariants(const std::array<std::vector<Matrix>, 3>& families) {
    TraceInvariants inv;
    const int F = static_cast<int>(families[0].size());
    Eigen::Index key_rows = 0;
    for (const auto& ms : families) key_rows += ms[0].rows();
    inv.term_keys.resize(key_rows, F);
    for (int r = 0; r < F; ++r) {
        Eigen::Index row = 0;
        for (const auto& ms : families) {
            const Eigen::Index dim = ms[0].rows();
            Matrix power = ms[static_cast<std::size_t>(r)];
            for (Eigen::Index j = 0; j < dim; ++j) {
                inv.term_keys(row++, r) = power.trace();
                if (j + 1 < dim) power = power * ms[static_cast<std::size_t>(r)];
            }
        }
    }
    for (int mode = 0; mode < 3; ++mode) {
        const auto& ms = families[static_cast<std::size_t>(mode)];
        Matrix& table = inv.pair_table[static_cast<std::size_t>(mode)];
        table.resize(F, F);
        for (int a = 0; a < F; ++a)
            for (int b = 0; b < F; ++b)
                table(a, b) =
                    (ms[static_cast<std::size_t>(a)] * ms[static_cast<std::size_t>(b)]).trace();
    }
    return inv;
}

struct SearchContext {
    const Decomposition* d1 = nullptr;  // rotated
    const Decomposition* d2 = nullptr;  // rotated
    std::array<std::vector<Matrix>, 3> fam1, fam2;  // cyclic triple products
    TraceInvariants inv1, inv2;
    double trace_scale = 1.0;
    std::array<std::vector<int>, 3> cls1, cls2;
    const EquivalenceOptions* options = nullptr;
    std::mt19937_64 rng;
    ProbeStats stats;
    std::vector<int> pi;
    std::vector<char> used;
    InvarianceTransform found;  // valid when the search returns with a transform
};

bool prefix_probe(SearchContext& ctx) {
    const int k = static_cast<int>(ctx.pi.size());
    if (k < 2) return true;  // single terms are fully decided by the trace key
    for (int mode = 0; mode < 3; ++mode) {
        std::vector<Matrix> a, b;
        a.reserve(static_cast<std::size_t>(k));
        b.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            a.push_back(ctx.fam1[static_cast<std::size_t>(mode)]
                                [static_cast<std::size_t>(ctx.pi[static_cast<std::size_t>(i)])]);
            b.push_back(ctx.fam2[static_cast<std::size_t>(mode)][static_cast<std::size_t>(i)]);
        }
        if (!similarity_probe(a, b, ctx.rng, ctx.options->trials, ctx.options->tols.eig_tol))
            return false;
    }
    return true;
}

// Largest violation of the trace invariants when `candidate` fills position
// k = |pi|: the per-term key mismatch plus pairwise tr(M_a M_b) mismatches
// against all placed terms. Zero (up to noise) is necessary for candidacy.
double trace_mismatch(const SearchContext& ctx, int candidate) {
    const int k = static_cast<int>(ctx.pi.size());
    double worst =
        (ctx.inv1.term_keys.col(candidate) - ctx.inv2.term_keys.col(k)).cwiseAbs().maxCoeff();
    for (int i = 0; i < k; ++i) {
        const int placed = ctx.pi[static_cast<std::size_t>(i)];
        for (int mode = 0; mode < 3; ++mode)
            worst = std::max(
                worst,
                std::abs(ctx.inv1.pair_table[static_cast<std::size_t>(mode)](candidate, placed) -
                         ctx.inv2.pair_table[static_cast<std::size_t>(mode)](k, i)));
    }
    return worst;
}

bool class_pattern_ok(const SearchContext& ctx, int candidate) {
    const int k = static_cast<int>(ctx.pi.size());
    for (int i = 0; i < k; ++i) {
        const int placed = ctx.pi[static_cast<std::size_t>(i)];
        for (int mode = 0; mode < 3; ++mode) {
            const auto& c1 = ctx.cls1[static_cast<std::size_t>(mode)];
            const auto& c2 = ctx.cls2[static_cast<std::size_t>(mode)];
            const bool same1 = c1[static_cast<std::size_t>(candidate)] == c1[static_cast<std::size_t>(placed)];
            const bool same2 = c2[static_cast<std::size_t>(k)] == c2[static_cast<std::size_t>(i)];
            if (same1 != same2) return false;
        }
    }
    return true;
}

void note_rejection(SearchContext& ctx, int length) {
    ctx.stats.max_rejected_depth = std::max(ctx.stats.max_rejected_depth, length);
}

// Algorithm: depth-first extension of partial permutations, pruned by the
// trace invariants, the parallel-class pattern, and the similarity probe; at
// full length the scaling+trace solve decides. Returns true once an answer
// is final.
bool search(SearchContext& ctx) {
    const int F = ctx.d1->rank();
    const int k = static_cast<int>(ctx.pi.size());
    if (k == F) {
        ++ctx.stats.leaf_solves;
        if (ctx.options->mode == EquivalenceMode::no_assumption) return true;
        const Decomposition permuted = permute_terms(*ctx.d1, ctx.pi);
        auto t = solve_rotated(permuted, *ctx.d2, ctx.options->tols, nullptr);
        if (t.has_value()) {
            ctx.found = *t;
            ctx.found.sigma = ctx.pi;
            return true;
        }
        note_rejection(ctx, F);
        return false;
    }
    std::vector<std::pair<double, int>> candidates;
    for (int l = 0; l < F; ++l)
        if (!ctx.used[static_cast<std::size_t>(l)])
            candidates.emplace_back(trace_mismatch(ctx, l), l);
    std::sort(candidates.begin(), candidates.end());
    const double trace_tol = 1e-6 * ctx.trace_scale;
    for (const auto& [mismatch, l] : candidates) {
        ++ctx.stats.visited;
        const bool traces_ok = mismatch <= trace_tol;
        const bool classes_ok = traces_ok && class_pattern_ok(ctx, l);
        ctx.pi.push_back(l);
        const bool ok = classes_ok && prefix_probe(ctx);
        if (ctx.options->observer) ctx.options->observer(ctx.pi, ok);
        if (!ok) {
            note_rejection(ctx, k + 1);
            ctx.pi.pop_back();
            if (!traces_ok) break;  // candidates are sorted by trace mismatch
            continue;
        }
        ctx.used[static_cast<std::size_t>(l)] = 1;
        if (search(ctx)) return true;
        ctx.used[static_cast<std::size_t>(l)] = 0;
        ctx.pi.pop_back();
    }
    return false;
}

}  // namespace

std::optional<InvarianceTransform> solve_scaling_trace(const Decomposition& dec1,
                                                       const Decomposition& dec2,
                                                       const EquivalenceTolerances& tols,
                                                       int rotation_shift,
                                                       SolveFailure* failure) {
    check_pair(dec1, dec2);
    int shift = rotation_shift;
    if (shift < 0) {
        const auto cv1 = clustering_vector(dec1, tols.rank_tol);
        const auto cv2 = clustering_vector(dec2, tols.rank_tol);
        const RotationPlan plan = plan_rotation(cv1, cv2);
        if (plan.vectors_differ) {
            if (failure) *failure = {"clustering vectors differ", {}};
            return std::nullopt;
        }
        if (!plan.assumption_ok)
            throw AssumptionViolation(
                "solve_scaling_trace: no factor mode has clustering number one");
        shift = plan.shift;
    }
    const Decomposition d1 = cyclic_rotate(dec1, shift);
    const Decomposition d2 = cyclic_rotate(dec2, shift);
    auto t = solve_rotated(d1, d2, tols, failure);
    if (!t.has_value()) return std::nullopt;
    InvarianceTransform out = unrotate_transform(*t, shift);
    const double residual = max_entry_difference(apply(out, dec1), dec2);
    if (residual >= tols.residual_tol * std::max(1.0, max_abs_entry(dec2))) {
        if (failure) *failure = {"rotated solution failed original-frame verification", {}};
        return std::nullopt;
    }
    return out;
}

bool similarity_probe(std::span<const Matrix> ms1, std::span<const Matrix> ms2,
                      std::mt19937_64& rng, int trials, double eig_tol) {
    if (ms1.size() != ms2.size())
        throw InvalidArgument("similarity_probe: family sizes differ");
    if (ms1.empty()) return true;
    const Eigen::Index dim = ms1[0].rows();
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < trials; ++trial) {
        Matrix a = Matrix::Zero(dim, dim);
        Matrix b = Matrix::Zero(dim, dim);
        for (std::size_t i = 0; i < ms1.size(); ++i) {
            const double alpha = gauss(rng);
            a += alpha * ms1[i];
            b += alpha * ms2[i];
        }
        const auto ea = eigenvalues(a);
        const auto eb = eigenvalues(b);
        double radius = 0.0;
        for (const auto& z : ea) radius = std::max(radius, std::abs(z));
        for (const auto& z : eb) radius = std::max(radius, std::abs(z));
        const double dist = eigenvalue_matching_distance(ea, eb);
        if (dist > eig_tol * std::max(1.0, radius)) return false;
    }
    return true;
}

EquivalenceCertificate check_equivalence(const Decomposition& dec1, const Decomposition& dec2,
                                         const EquivalenceOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    check_pair(dec1, dec2);
    const int F = dec1.rank();
    if (rank1_term_rank(dec1, options.tols.rank_tol) < F ||
        rank1_term_rank(dec2, options.tols.rank_tol) < F)
        throw DegenerateTerms(
            "check_equivalence: linearly dependent rank-1 terms; reduce the "
            "decomposition first");

    EquivalenceCertificate cert;
    const auto cv1 = clustering_vector(dec1, options.tols.rank_tol);
    const auto cv2 = clustering_vector(dec2, options.tols.rank_tol);
    const RotationPlan plan = plan_rotation(cv1, cv2);
    const auto finish = [&](EquivalenceCertificate& c) -> EquivalenceCertificate& {
        c.stats.millis =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        return c;
    };
    if (plan.vectors_differ) {
        cert.verdict = Verdict::inequivalent;
        return finish(cert);
    }
    cert.rotation_shift = plan.shift;

    SearchContext ctx;
    const Decomposition d1 = cyclic_rotate(dec1, plan.shift);
    const Decomposition d2 = cyclic_rotate(dec2, plan.shift);
    ctx.d1 = &d1;
    ctx.d2 = &d2;
    ctx.fam1 = cyclic_triple_products(d1);
    ctx.fam2 = cyclic_triple_products(d2);
    ctx.inv1 = trace_invariants(ctx.fam1);
    ctx.inv2 = trace_invariants(ctx.fam2);
    ctx.trace_scale = std::max({1.0, ctx.inv1.term_keys.cwiseAbs().maxCoeff(),
                                ctx.inv2.term_keys.cwiseAbs().maxCoeff()});
    for (int mode = 0; mode < 3; ++mode)
        ctx.trace_scale = std::max(
            {ctx.trace_scale,
             ctx.inv1.pair_table[static_cast<std::size_t>(mode)].cwiseAbs().maxCoeff(),
             ctx.inv2.pair_table[static_cast<std::size_t>(mode)].cwiseAbs().maxCoeff()});
    ctx.cls1 = {parallel_classes(stack_mode(d1, FactorMode::U)),
                parallel_classes(stack_mode(d1, FactorMode::V)),
                parallel_classes(stack_mode(d1, FactorMode::W))};
    ctx.cls2 = {parallel_classes(stack_mode(d2, FactorMode::U)),
                parallel_classes(stack_mode(d2, FactorMode::V)),
                parallel_classes(stack_mode(d2, FactorMode::W))};
    ctx.options = &options;
    ctx.rng.seed(options.seed);
    ctx.used.assign(static_cast<std::size_t>(F), 0);

    const bool answered = search(ctx);
    cert.stats = ctx.stats;
    if (answered) {
        if (options.mode == EquivalenceMode::no_assumption) {
            cert.verdict = Verdict::inconclusive;
            return finish(cert);
        }
        InvarianceTransform t = unrotate_transform(ctx.found, plan.shift);
        cert.residual = max_entry_difference(apply(t, dec1), dec2);
        cert.transform = std::move(t);
        cert.verdict = Verdict::equivalent;
        return finish(cert);
    }
    if (options.mode == EquivalenceMode::full && !plan.assumption_ok)
        throw AssumptionViolation(
            "check_equivalence: no factor mode has clustering number one and no "
            "connecting transform was found");
    cert.verdict = Verdict::inequivalent;
    return finish(cert);
}

EquivalenceCertificate check_equivalence_bruteforce(const Decomposition& dec1,
                                                    const Decomposition& dec2,
                                                    const EquivalenceTolerances& tols) {
    const auto t0 = std::chrono::steady_clock::now();
    check_pair(dec1, dec2);
    const int F = dec1.rank();
    if (F > 8)
        throw InvalidArgument("check_equivalence_bruteforce: refused for F > 8");

    EquivalenceCertificate cert;
    const auto cv1 = clustering_vector(dec1, tols.rank_tol);
    const auto cv2 = clustering_vector(dec2, tols.rank_tol);
    const RotationPlan plan = plan_rotation(cv1, cv2);
    const auto finish = [&](EquivalenceCertificate& c) -> EquivalenceCertificate& {
        c.stats.millis =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        return c;
    };
    if (plan.vectors_differ) {
        cert.verdict = Verdict::inequivalent;
        return finish(cert);
    }
    cert.rotation_shift = plan.shift;
    const Decomposition d1 = cyclic_rotate(dec1, plan.shift);
    const Decomposition d2 = cyclic_rotate(dec2, plan.shift);

    std::vector<int> sigma(static_cast<std::size_t>(F));
    std::iota(sigma.begin(), sigma.end(), 0);
    do {
        ++cert.stats.leaf_solves;
        auto t = solve_rotated(permute_terms(d1, sigma), d2, tols, nullptr);
        if (t.has_value()) {
            t->sigma = sigma;
            InvarianceTransform full = unrotate_transform(*t, plan.shift);
            cert.residual = max_entry_difference(apply(full, dec1), dec2);
            cert.transform = std::move(full);
            cert.verdict = Verdict::equivalent;
            return finish(cert);
        }
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    if (!plan.assumption_ok)
        throw AssumptionViolation(
            "check_equivalence_bruteforce: no factor mode has clustering number one "
            "and no connecting transform was found");
    cert.verdict = Verdict::inequivalent;
    return finish(cert);
}

}  // namespace mmt
