#include "mmt/cpd.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

#include "mmt/errors.hpp"

namespace mmt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Factors {
    Matrix Ut, Vt, Wt;  // stacked, columns are vectorized factor matrices
};

struct Problem {
    int m, p, n, F;
    int d0, d1, d2;          // tensor mode sizes mp, pn, nm
    Matrix unfold0;          // d0 x (d1*d2), model = Ut * kr(Wt, Vt)^T
    Matrix unfold1;          // d1 x (d0*d2)
    Matrix unfold2;          // d2 x (d0*d1)
    std::vector<double> t;   // dense entries, index i + d0*(j + d1*k)
};

Problem make_problem(const MatMulTensor& tensor, int F) {
    Problem pr;
    pr.m = tensor.m;
    pr.p = tensor.p;
    pr.n = tensor.n;
    pr.F = F;
    pr.d0 = tensor.dim0();
    pr.d1 = tensor.dim1();
    pr.d2 = tensor.dim2();
    pr.t = tensor.entries;
    pr.unfold0.resize(pr.d0, pr.d1 * pr.d2);
    pr.unfold1.resize(pr.d1, pr.d0 * pr.d2);
    pr.unfold2.resize(pr.d2, pr.d0 * pr.d1);
    for (int k = 0; k < pr.d2; ++k)
        for (int j = 0; j < pr.d1; ++j)
            for (int i = 0; i < pr.d0; ++i) {
                const double v = tensor(i, j, k);
                pr.unfold0(i, j + pr.d1 * k) = v;
                pr.unfold1(j, i + pr.d0 * k) = v;
                pr.unfold2(k, i + pr.d0 * j) = v;
            }
    return pr;
}

// Khatri-Rao (columnwise Kronecker) product.
Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.cols(); ++r)
        out.col(r) = kronecker(Matrix(a.col(r)), Matrix(b.col(r)));
    return out;
}

double max_residual(const Problem& pr, const Factors& f) {
    double worst = 0.0;
    for (int k = 0; k < pr.d2; ++k)
        for (int j = 0; j < pr.d1; ++j)
            for (int i = 0; i < pr.d0; ++i) {
                double v = 0.0;
                for (int r = 0; r < pr.F; ++r) v += f.Ut(i, r) * f.Vt(j, r) * f.Wt(k, r);
                worst = std::max(
                    worst, std::abs(v - pr.t[static_cast<std::size_t>(i + pr.d0 * (j + pr.d1 * k))]));
            }
    return worst;
}

// Ridge-regularized least squares solve of X * Z^T = T_mode for X.
Matrix als_update(const Matrix& unfolded, const Matrix& z, double ridge) {
    const Matrix gram = z.transpose() * z +
                        ridge * Matrix::Identity(z.cols(), z.cols());
    return gram.ldlt().solve(z.transpose() * unfolded.transpose()).transpose();
}

Vector pack(const Factors& f) {
    Vector x(f.Ut.size() + f.Vt.size() + f.Wt.size());
    x << Eigen::Map<const Vector>(f.Ut.data(), f.Ut.size()),
        Eigen::Map<const Vector>(f.Vt.data(), f.Vt.size()),
        Eigen::Map<const Vector>(f.Wt.data(), f.Wt.size());
    return x;
}

Factors unpack(const Problem& pr, const Vector& x) {
    Factors f;
    f.Ut = Eigen::Map<const Matrix>(x.data(), pr.d0, pr.F);
    f.Vt = Eigen::Map<const Matrix>(x.data() + pr.d0 * pr.F, pr.d1, pr.F);
    f.Wt = Eigen::Map<const Matrix>(x.data() + (pr.d0 + pr.d1) * pr.F, pr.d2, pr.F);
    return f;
}

Vector residual_vector(const Problem& pr, const Factors& f) {
    Vector res(static_cast<Eigen::Index>(pr.d0) * pr.d1 * pr.d2);
    Eigen::Index e = 0;
    for (int k = 0; k < pr.d2; ++k)
        for (int j = 0; j < pr.d1; ++j)
            for (int i = 0; i < pr.d0; ++i, ++e) {
                double v = 0.0;
                for (int r = 0; r < pr.F; ++r) v += f.Ut(i, r) * f.Vt(j, r) * f.Wt(k, r);
                res(e) = v - pr.t[static_cast<std::size_t>(e)];
            }
    return res;
}

Matrix jacobian(const Problem& pr, const Factors& f) {
    const Eigen::Index entries = static_cast<Eigen::Index>(pr.d0) * pr.d1 * pr.d2;
    const Eigen::Index vars = static_cast<Eigen::Index>(pr.d0 + pr.d1 + pr.d2) * pr.F;
    Matrix jac = Matrix::Zero(entries, vars);
    Eigen::Index e = 0;
    const Eigen::Index off_v = static_cast<Eigen::Index>(pr.d0) * pr.F;
    const Eigen::Index off_w = off_v + static_cast<Eigen::Index>(pr.d1) * pr.F;
    for (int k = 0; k < pr.d2; ++k)
        for (int j = 0; j < pr.d1; ++j)
            for (int i = 0; i < pr.d0; ++i, ++e)
                for (int r = 0; r < pr.F; ++r) {
                    jac(e, i + pr.d0 * r) = f.Vt(j, r) * f.Wt(k, r);
                    jac(e, off_v + j + pr.d1 * r) = f.Ut(i, r) * f.Wt(k, r);
                    jac(e, off_w + k + pr.d2 * r) = f.Ut(i, r) * f.Vt(j, r);
                }
    return jac;
}

bool run_single(const Problem& pr, const SolveConfig& cfg, std::mt19937_64& rng, Factors& f) {
    std::uniform_real_distribution<double> init(cfg.init_lo, cfg.init_hi);
    f.Ut.resize(pr.d0, pr.F);
    f.Vt.resize(pr.d1, pr.F);
    f.Wt.resize(pr.d2, pr.F);
    for (Matrix* mat : {&f.Ut, &f.Vt, &f.Wt})
        for (Eigen::Index c = 0; c < mat->cols(); ++c)
            for (Eigen::Index r = 0; r < mat->rows(); ++r) (*mat)(r, c) = init(rng);

    for (int sweep = 0; sweep < cfg.als_sweeps; ++sweep) {
        f.Ut = als_update(pr.unfold0, khatri_rao(f.Wt, f.Vt), 1e-10);
        f.Vt = als_update(pr.unfold1, khatri_rao(f.Wt, f.Ut), 1e-10);
        f.Wt = als_update(pr.unfold2, khatri_rao(f.Vt, f.Ut), 1e-10);
    }

    Vector x = pack(f);
    Vector res = residual_vector(pr, unpack(pr, x));
    double cost = 0.5 * res.squaredNorm();
    double damping = cfg.damping_init;
    int stall = 0;
    // Push well past the acceptance target; Gauss-Newton converges
    // quadratically near an exact solution and downstream linear solves
    // inherit whatever residual is left here.
    const double inner_target = std::max(1e-14, 1e-4 * cfg.residual_target);
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const Factors cur = unpack(pr, x);
        if (max_residual(pr, cur) < inner_target) break;
        const Matrix jac = jacobian(pr, cur);
        const Matrix jtj = jac.transpose() * jac;
        const Vector jtr = jac.transpose() * res;
        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            const Matrix lhs =
                jtj + damping * Matrix::Identity(jtj.rows(), jtj.cols());
            const Vector step = lhs.ldlt().solve(jtr);
            const Vector x_new = x - step;
            const Vector res_new = residual_vector(pr, unpack(pr, x_new));
            const double cost_new = 0.5 * res_new.squaredNorm();
            if (cost_new < cost) {
                x = x_new;
                res = res_new;
                stall = cost - cost_new < 1e-16 * (1.0 + cost) ? stall + 1 : 0;
                cost = cost_new;
                damping = std::max(damping * 0.1, 1e-14);
                accepted = true;
                break;
            }
            damping *= 10.0;
        }
        if (!accepted || stall > 20) break;
    }
    f = unpack(pr, x);
    return max_residual(pr, f) < cfg.residual_target;
}

Decomposition to_decomposition(const Problem& pr, const Factors& f) {
    Decomposition dec;
    dec.m = pr.m;
    dec.p = pr.p;
    dec.n = pr.n;
    for (int r = 0; r < pr.F; ++r) {
        dec.U.push_back(unvectorize(f.Ut.col(r), pr.p, pr.m));
        dec.V.push_back(unvectorize(f.Vt.col(r), pr.n, pr.p));
        dec.W.push_back(unvectorize(f.Wt.col(r), pr.m, pr.n));
    }
    return dec;
}

}  // namespace

std::optional<Decomposition> decompose(const MatMulTensor& tensor, int F, const SolveConfig& cfg,
                                       int* restarts_used) {
    if (F < 1) throw InvalidArgument("decompose: F must be positive");
    const Problem pr = make_problem(tensor, F);
    std::mt19937_64 rng(cfg.seed);
    Factors f;
    for (int restart = 0; restart < cfg.max_restarts; ++restart) {
        if (run_single(pr, cfg, rng, f)) {
            if (restarts_used) *restarts_used = restart + 1;
            return to_decomposition(pr, f);
        }
    }
    if (restarts_used) *restarts_used = cfg.max_restarts;
    return std::nullopt;
}

PopulationResult sample_population(const MatMulTensor& tensor, int F, int count,
                                   const SolveConfig& cfg) {
    if (count < 1) throw InvalidArgument("sample_population: count must be positive");
    PopulationResult result;
    for (int index = 0; index < count; ++index) {
        SolveConfig local = cfg;
        local.seed = splitmix64(cfg.seed ^ (0x1234abcdULL + static_cast<std::uint64_t>(index)));
        int used = 0;
        auto dec = decompose(tensor, F, local, &used);
        if (!dec.has_value()) {
            result.complete = false;
            return result;
        }
        result.samples.push_back(std::move(*dec));
        result.trials.push_back(used);
    }
    result.complete = true;
    return result;
}

}  // namespace mmt
