#ifndef MMT_TESTS_HELPERS_HPP
#define MMT_TESTS_HELPERS_HPP

#include <cmath>
#include <random>

#include "mmt/decomposition.hpp"
#include "mmt/transforms.hpp"

namespace mmt::testing {

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = gauss(rng);
    return m;
}

// Rank-2 decompositions of the (1,2,1) tensor from an invertible stacked
// factor matrix: Ut arbitrary invertible, Vt its inverse transpose, W = 1.
inline Decomposition random_121_decomposition(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix ut(2, 2);
    do {
        ut = random_matrix(2, 2, rng);
    } while (std::abs(ut.determinant()) < 0.2);
    const Matrix vt = ut.inverse().transpose();
    Decomposition dec;
    dec.m = 1;
    dec.p = 2;
    dec.n = 1;
    for (int c = 0; c < 2; ++c) {
        dec.U.push_back(ut.col(c));
        dec.V.push_back(vt.col(c).transpose());
        dec.W.push_back(Matrix::Ones(1, 1));
    }
    return dec;
}

// The worked clustering example: identity basis block plus the three extra
// columns (1,1,0), (0,0,1), (1,2,0).
inline Matrix worked_example_matrix() {
    Matrix a(3, 6);
    a << 1, 0, 0, 1, 0, 1,
         0, 1, 0, 1, 0, 2,
         0, 0, 1, 0, 1, 0;
    return a;
}

inline const Decomposition& fixture_cycle(int index) {
    static const Decomposition fixtures[4] = {strassen_fixture(), laderman_fixture(),
                                              dotprod121_fixture(), naive_fixture(2, 3, 2)};
    return fixtures[static_cast<std::size_t>(index % 4)];
}

}  // namespace mmt::testing

#endif
