#ifndef MMT_TRANSFORMS_HPP
#define MMT_TRANSFORMS_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "mmt/decomposition.hpp"

namespace mmt {

// A combined invariance transformation in normal form: permutation first,
// then per-term scaling, then the trace transformation:
//   U'_r = lambda_r Q^{-1} U_{sigma(r)} P
//   V'_r = mu_r     R^{-1} V_{sigma(r)} Q
//   W'_r = nu_r     P^{-1} W_{sigma(r)} R
// sigma is stored 0-based; lambda_r * mu_r * nu_r = 1 for every r.
struct InvarianceTransform {
    std::vector<int> sigma;
    Vector lambda, mu, nu;
    Matrix P, Q, R;

    int terms() const { return static_cast<int>(sigma.size()); }
};

InvarianceTransform identity_transform(int m, int p, int n, int F);
InvarianceTransform permutation_transform(int m, int p, int n, const std::vector<int>& sigma);

// Throws InvalidArgument on shape mismatch, broken scaling products, or
// numerically singular P/Q/R (smallest singular value below the floor).
void validate_transform(const InvarianceTransform& t, int m, int p, int n, int F,
                        double singular_floor = 1e-10);

Decomposition apply(const InvarianceTransform& t, const Decomposition& dec);

// apply(compose(t2, t1), dec) == apply(t2, apply(t1, dec)).
InvarianceTransform compose(const InvarianceTransform& t2, const InvarianceTransform& t1);
InvarianceTransform inverse(const InvarianceTransform& t);

struct RandomTransformOptions {
    double scale_min = 0.25;
    double scale_max = 4.0;
    double condition_cap = 1e4;
};

// sigma uniform over S_F; lambda, mu log-uniform in [scale_min, scale_max]
// with nu = 1/(lambda*mu); P, Q, R standard normal, resampled until the
// condition number is below the cap.
InvarianceTransform random_transform(int m, int p, int n, int F, std::mt19937_64& rng,
                                     const RandomTransformOptions& options = {});

}  // namespace mmt

#endif
