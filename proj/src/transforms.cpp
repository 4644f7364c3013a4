#include "mmt/transforms.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmt/errors.hpp"

namespace mmt {

InvarianceTransform identity_transform(int m, int p, int n, int F) {
    InvarianceTransform t;
    t.sigma.resize(static_cast<std::size_t>(F));
    std::iota(t.sigma.begin(), t.sigma.end(), 0);
    t.lambda = Vector::Ones(F);
    t.mu = Vector::Ones(F);
    t.nu = Vector::Ones(F);
    t.P = Matrix::Identity(m, m);
    t.Q = Matrix::Identity(p, p);
    t.R = Matrix::Identity(n, n);
    return t;
}

InvarianceTransform permutation_transform(int m, int p, int n, const std::vector<int>& sigma) {
    InvarianceTransform t = identity_transform(m, p, n, static_cast<int>(sigma.size()));
    t.sigma = sigma;
    return t;
}

void validate_transform(const InvarianceTransform& t, int m, int p, int n, int F,
                        double singular_floor) {
    const int terms = t.terms();
    if (terms != F || t.lambda.size() != F || t.mu.size() != F || t.nu.size() != F)
        throw InvalidArgument("transform: term count mismatch");
    if (t.P.rows() != m || t.P.cols() != m || t.Q.rows() != p || t.Q.cols() != p ||
        t.R.rows() != n || t.R.cols() != n)
        throw InvalidArgument("transform: P/Q/R shape mismatch");
    std::vector<char> seen(static_cast<std::size_t>(F), 0);
    for (int s : t.sigma) {
        if (s < 0 || s >= F || seen[static_cast<std::size_t>(s)])
            throw InvalidArgument("transform: sigma is not a permutation");
        seen[static_cast<std::size_t>(s)] = 1;
    }
    for (int r = 0; r < F; ++r)
        if (std::abs(t.lambda(r) * t.mu(r) * t.nu(r) - 1.0) > 1e-12)
            throw InvalidArgument("transform: lambda*mu*nu != 1");
    for (const Matrix* mat : {&t.P, &t.Q, &t.R})
        if (smallest_singular_value(*mat) <= singular_floor)
            throw InvalidArgument("transform: singular trace factor");
}

Decomposition apply(const InvarianceTransform& t, const Decomposition& dec) {
    check_shapes(dec);
    validate_transform(t, dec.m, dec.p, dec.n, dec.rank());
    const Matrix Pinv = t.P.partialPivLu().inverse();
    const Matrix Qinv = t.Q.partialPivLu().inverse();
    const Matrix Rinv = t.R.partialPivLu().inverse();
    Decomposition out;
    out.m = dec.m;
    out.p = dec.p;
    out.n = dec.n;
    const int F = dec.rank();
    out.U.reserve(F);
    out.V.reserve(F);
    out.W.reserve(F);
    for (int r = 0; r < F; ++r) {
        const auto s = static_cast<std::size_t>(t.sigma[static_cast<std::size_t>(r)]);
        out.U.push_back(t.lambda(r) * (Qinv * dec.U[s] * t.P));
        out.V.push_back(t.mu(r) * (Rinv * dec.V[s] * t.Q));
        out.W.push_back(t.nu(r) * (Pinv * dec.W[s] * t.R));
    }
    return out;
}

InvarianceTransform compose(const InvarianceTransform& t2, const InvarianceTransform& t1) {
    const int F = t1.terms();
    if (t2.terms() != F || t1.P.rows() != t2.P.rows() || t1.Q.rows() != t2.Q.rows() ||
        t1.R.rows() != t2.R.rows())
        throw InvalidArgument("compose: shape mismatch");
    InvarianceTransform t;
    t.sigma.resize(static_cast<std::size_t>(F));
    t.lambda.resize(F);
    t.mu.resize(F);
    t.nu.resize(F);
    for (int r = 0; r < F; ++r) {
        const int s2 = t2.sigma[static_cast<std::size_t>(r)];
        t.sigma[static_cast<std::size_t>(r)] = t1.sigma[static_cast<std::size_t>(s2)];
        t.lambda(r) = t2.lambda(r) * t1.lambda(s2);
        t.mu(r) = t2.mu(r) * t1.mu(s2);
        t.nu(r) = t2.nu(r) * t1.nu(s2);
    }
    t.P = t1.P * t2.P;
    t.Q = t1.Q * t2.Q;
    t.R = t1.R * t2.R;
    return t;
}

InvarianceTransform inverse(const InvarianceTransform& t) {
    const int F = t.terms();
    InvarianceTransform inv;
    inv.sigma.resize(static_cast<std::size_t>(F));
    inv.lambda.resize(F);
    inv.mu.resize(F);
    inv.nu.resize(F);
    for (int r = 0; r < F; ++r)
        inv.sigma[static_cast<std::size_t>(t.sigma[static_cast<std::size_t>(r)])] = r;
    for (int r = 0; r < F; ++r) {
        const int s = inv.sigma[static_cast<std::size_t>(r)];
        inv.lambda(r) = 1.0 / t.lambda(s);
        inv.mu(r) = 1.0 / t.mu(s);
        inv.nu(r) = 1.0 / t.nu(s);
    }
    inv.P = t.P.partialPivLu().inverse();
    inv.Q = t.Q.partialPivLu().inverse();
    inv.R = t.R.partialPivLu().inverse();
    return inv;
}

namespace {

Matrix well_conditioned_gaussian(int size, std::mt19937_64& rng, double condition_cap) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        Matrix m(size, size);
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) m(i, j) = gauss(rng);
        if (condition_number(m) > condition_cap) continue;
        // Normalize the overall scale; a tiny 1x1 draw would otherwise blow
        // up the entries of the transformed decomposition (the condition
        // number of a scalar is always 1). Rescaling a trace factor still
        // yields a valid invariance transform.
        return m * (std::sqrt(static_cast<double>(size)) / m.norm());
    }
}

}  // namespace

InvarianceTransform random_transform(int m, int p, int n, int F, std::mt19937_64& rng,
                                     const RandomTransformOptions& options) {
    InvarianceTransform t;
    t.sigma.resize(static_cast<std::size_t>(F));
    std::iota(t.sigma.begin(), t.sigma.end(), 0);
    std::shuffle(t.sigma.begin(), t.sigma.end(), rng);
    std::uniform_real_distribution<double> log_scale(std::log(options.scale_min),
                                                     std::log(options.scale_max));
    t.lambda.resize(F);
    t.mu.resize(F);
    t.nu.resize(F);
    for (int r = 0; r < F; ++r) {
        t.lambda(r) = std::exp(log_scale(rng));
        t.mu(r) = std::exp(log_scale(rng));
        t.nu(r) = 1.0 / (t.lambda(r) * t.mu(r));
    }
    t.P = well_conditioned_gaussian(m, rng, options.condition_cap);
    t.Q = well_conditioned_gaussian(p, rng, options.condition_cap);
    t.R = well_conditioned_gaussian(n, rng, options.condition_cap);
    return t;
}

}  // namespace mmt
