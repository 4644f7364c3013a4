#ifndef MMT_DISCRETIZE_HPP
#define MMT_DISCRETIZE_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "mmt/decomposition.hpp"

namespace mmt {

// Coefficients (alpha_{m-1}, ..., alpha_0) of det(tI - M) = t^m + alpha_{m-1}
// t^{m-1} + ... + alpha_0, by the Faddeev-LeVerrier trace recursion. Integer
// matrices take an exact integer path.
Vector char_poly(const Matrix& m);

struct DiscretizabilityReport {
    double q = 1.0;
    double nd_score = 0.0;
    int draws = 0;
    int beta_range = 0;

    struct Draw {
        std::vector<int> beta;
        Vector coeffs;
        double max_deviation = 0.0;
    };
    std::vector<Draw> per_draw;
};

// Max distance of the characteristic-polynomial coefficients of
// (1/q^3) sum_r beta_r M_r from the nearest integers, over `draws` random
// integer vectors beta in {-beta_bound..beta_bound}^F.
DiscretizabilityReport nd_score(const Decomposition& dec, double q, int draws,
                                int beta_bound, std::mt19937_64& rng);

// Necessary criterion for equivalence to a decomposition with entries in
// q*Z: fails iff the score is at or above the threshold, certifying the
// decomposition is NOT discretizable with this q. Passing proves nothing.
bool discretizability_criterion(const Decomposition& dec, double q, int draws,
                                int beta_bound, std::mt19937_64& rng,
                                double threshold = 0.1,
                                DiscretizabilityReport* report = nullptr);

}  // namespace mmt

#endif
