#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "mmt/cpd.hpp"
#include "mmt/equivalence.hpp"
#include "mmt/errors.hpp"

using namespace mmt;
using mmt::testing::random_121_decomposition;
using mmt::testing::random_matrix;

namespace {

double reconstruction_residual(const InvarianceTransform& t, const Decomposition& a,
                               const Decomposition& b) {
    const auto image = apply(t, a);
    double d = 0.0;
    for (int r = 0; r < a.rank(); ++r) {
        d = std::max(d, (image.U[r] - b.U[r]).cwiseAbs().maxCoeff());
        d = std::max(d, (image.V[r] - b.V[r]).cwiseAbs().maxCoeff());
        d = std::max(d, (image.W[r] - b.W[r]).cwiseAbs().maxCoeff());
    }
    return d;
}

}  // namespace

TEST_SUITE_BEGIN("equivalence");

TEST_CASE("solve_scaling_trace recovers a scaling+trace connection") {
    std::mt19937_64 rng(17);
    const auto dec = strassen_fixture();
    auto t = random_transform(2, 2, 2, 7, rng);
    std::iota(t.sigma.begin(), t.sigma.end(), 0);  // no permutation component
    const auto image = apply(t, dec);
    const auto solution = solve_scaling_trace(dec, image);
    REQUIRE(solution.has_value());
    CHECK(reconstruction_residual(*solution, dec, image) < 1e-8);
}

TEST_CASE("self equivalence yields an identity-class transform") {
    const auto dec = strassen_fixture();
    const auto solution = solve_scaling_trace(dec, dec);
    REQUIRE(solution.has_value());
    const Matrix p_normalized = solution->P / solution->P(0, 0);
    CHECK((p_normalized - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(reconstruction_residual(*solution, dec, dec) < 1e-10);
}

TEST_CASE("dot-product decompositions connect by a trace transformation") {
    const auto fixture = dotprod121_fixture();
    const auto random_pd = random_121_decomposition(2024);
    REQUIRE(verify_decomposition(random_pd, 1e-9).pass);
    const auto solution = solve_scaling_trace(fixture, random_pd);
    REQUIRE(solution.has_value());
    CHECK(reconstruction_residual(*solution, fixture, random_pd) < 1e-8);
}

TEST_CASE("solve_scaling_trace reports failure diagnostics") {
    // Two inequivalent 4-PDs of the (2,1,2) tensor.
    const auto tensor = build_tensor(2, 1, 2);
    SolveConfig cfg;
    cfg.seed = 5;
    const auto a = decompose(tensor, 4, cfg);
    cfg.seed = 6;
    const auto b = decompose(tensor, 4, cfg);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    SolveFailure failure;
    const auto solution = solve_scaling_trace(*a, *b, {}, -1, &failure);
    CHECK_FALSE(solution.has_value());
    CHECK_FALSE(failure.reason.empty());
}

TEST_CASE("similarity probe") {
    std::mt19937_64 rng(31);
    std::vector<Matrix> ms;
    for (int i = 0; i < 4; ++i) ms.push_back(random_matrix(3, 3, rng));
    Matrix x;
    do {
        x = random_matrix(3, 3, rng);
    } while (std::abs(x.determinant()) < 1e-2);
    const Matrix xinv = x.inverse();
    std::vector<Matrix> conjugated;
    for (const auto& m : ms) conjugated.push_back(xinv * m * x);

    std::mt19937_64 probe_rng(1);
    CHECK(similarity_probe(ms, conjugated, probe_rng));

    auto tampered = conjugated;
    tampered[2] = tampered[2].transpose() + Matrix::Identity(3, 3);
    std::mt19937_64 probe_rng2(1);
    CHECK_FALSE(similarity_probe(ms, tampered, probe_rng2));

    const std::vector<Matrix> zero = {Matrix::Zero(2, 2)};
    std::mt19937_64 probe_rng3(1);
    CHECK(similarity_probe(zero, zero, probe_rng3));
}

TEST_CASE("round-trip pairs are equivalent with sound certificates") {
    std::mt19937_64 rng(404);
    for (int i = 0; i < 12; ++i) {
        const auto& dec = mmt::testing::fixture_cycle(i);
        const auto t = random_transform(dec.m, dec.p, dec.n, dec.rank(), rng);
        const auto image = apply(t, dec);
        EquivalenceOptions options;
        options.seed = 1000 + static_cast<std::uint64_t>(i);
        const auto cert = check_equivalence(dec, image, options);
        REQUIRE(cert.verdict == Verdict::equivalent);
        REQUIRE(cert.transform.has_value());
        CHECK(cert.residual < 1e-8);
        CHECK(reconstruction_residual(*cert.transform, dec, image) < 1e-8);
    }
}

TEST_CASE("self equivalence uses the identity permutation") {
    const auto dec = laderman_fixture();
    const auto cert = check_equivalence(dec, dec, {});
    REQUIRE(cert.verdict == Verdict::equivalent);
    std::vector<int> identity(23);
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(cert.transform->sigma == identity);
}

TEST_CASE("independently computed (2,1,2) decompositions are inequivalent") {
    const auto tensor = build_tensor(2, 1, 2);
    SolveConfig cfg;
    cfg.seed = 21;
    const auto a = decompose(tensor, 4, cfg);
    cfg.seed = 22;
    const auto b = decompose(tensor, 4, cfg);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    EquivalenceOptions options;
    options.seed = 3;
    CHECK(check_equivalence(*a, *b, options).verdict == Verdict::inequivalent);
    CHECK(check_equivalence(*b, *a, options).verdict == Verdict::inequivalent);
    CHECK(check_equivalence_bruteforce(*a, *b).verdict == Verdict::inequivalent);
}

TEST_CASE("no-assumption mode reports inconclusive, never equivalent") {
    std::mt19937_64 rng(88);
    const auto dec = strassen_fixture();
    const auto image = apply(random_transform(2, 2, 2, 7, rng), dec);
    EquivalenceOptions options;
    options.mode = EquivalenceMode::no_assumption;
    options.seed = 77;
    CHECK(check_equivalence(dec, image, options).verdict == Verdict::inconclusive);

    const auto tensor = build_tensor(2, 1, 2);
    SolveConfig cfg;
    cfg.seed = 31;
    const auto a = decompose(tensor, 4, cfg);
    cfg.seed = 32;
    const auto b = decompose(tensor, 4, cfg);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(check_equivalence(*a, *b, options).verdict == Verdict::inequivalent);
}

TEST_CASE("brute force agrees with the pruned search") {
    std::mt19937_64 rng(2718);
    for (int i = 0; i < 6; ++i) {
        const auto dec = strassen_fixture();
        const auto image = apply(random_transform(2, 2, 2, 7, rng), dec);
        EquivalenceOptions options;
        options.seed = static_cast<std::uint64_t>(i);
        const auto fast = check_equivalence(dec, image, options);
        const auto slow = check_equivalence_bruteforce(dec, image);
        CHECK(fast.verdict == slow.verdict);
    }
    for (int i = 0; i < 6; ++i) {
        const auto a = random_121_decomposition(static_cast<std::uint64_t>(500 + i));
        const auto b = random_121_decomposition(static_cast<std::uint64_t>(900 + i));
        const auto fast = check_equivalence(a, b, {});
        const auto slow = check_equivalence_bruteforce(a, b);
        CHECK(fast.verdict == slow.verdict);
        CHECK(fast.verdict == Verdict::equivalent);
    }
}

TEST_CASE("brute force refuses large term counts") {
    const auto dec = laderman_fixture();
    CHECK_THROWS_AS(check_equivalence_bruteforce(dec, dec), InvalidArgument);
}

TEST_CASE("naive(1,2,1) and dotprod121 coincide") {
    const auto a = naive_fixture(1, 2, 1);
    const auto b = dotprod121_fixture();
    const auto cert = check_equivalence_bruteforce(a, b);
    CHECK(cert.verdict == Verdict::equivalent);
}

TEST_CASE("degenerate rank-1 terms are rejected") {
    auto dec = naive_fixture(2, 2, 2);
    // Split the last term into two parallel halves: still a valid
    // decomposition, but its rank-1 terms are linearly dependent.
    dec.U.push_back(dec.U.back());
    dec.V.push_back(dec.V.back());
    dec.W.push_back(0.5 * dec.W.back());
    dec.W[dec.W.size() - 2] *= 0.5;
    REQUIRE(verify_decomposition(dec, 1e-12).pass);
    CHECK_THROWS_AS(check_equivalence(dec, dec, {}), DegenerateTerms);
}

TEST_CASE("assumption violation surfaces when nothing connects") {
    // naive(2,3,2) has clustering vector (6,6,4): no mode equals one.
    // Negating every W keeps the clustering vector but no invariance
    // transform connects the two, so full mode cannot certify either way.
    const auto a = naive_fixture(2, 3, 2);
    auto b = a;
    for (auto& w : b.W) w = -w;
    CHECK_THROWS_AS(check_equivalence(a, b, {}), AssumptionViolation);
}

TEST_CASE("probe rejections are monotone under extension") {
    const auto tensor = build_tensor(2, 1, 2);
    SolveConfig cfg;
    cfg.seed = 41;
    const auto a = decompose(tensor, 4, cfg);
    cfg.seed = 42;
    const auto b = decompose(tensor, 4, cfg);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());

    std::vector<std::vector<int>> rejected;
    EquivalenceOptions options;
    options.seed = 9;
    options.observer = [&](const std::vector<int>& pi, bool accepted) {
        if (!accepted && pi.size() < 4) rejected.push_back(pi);
    };
    check_equivalence(*a, *b, options);

    const auto m1 = triple_products(*a);
    const auto m2 = triple_products(*b);
    const auto probe_on = [&](const std::vector<int>& pi, std::uint64_t seed) {
        std::vector<Matrix> fam1, fam2;
        for (std::size_t i = 0; i < pi.size(); ++i) {
            fam1.push_back(m1[static_cast<std::size_t>(pi[i])]);
            fam2.push_back(m2[i]);
        }
        std::mt19937_64 probe_rng(seed);
        return similarity_probe(fam1, fam2, probe_rng, 6);
    };
    int tested = 0;
    for (const auto& prefix : rejected) {
        // The search may have rejected via the trace invariants; the
        // monotonicity property is about the probe itself.
        if (probe_on(prefix, 17)) continue;
        for (int extension = 0; extension < 4 && tested < 50; ++extension) {
            if (std::find(prefix.begin(), prefix.end(), extension) != prefix.end()) continue;
            auto longer = prefix;
            longer.push_back(extension);
            CHECK_FALSE(probe_on(longer, 1234 + static_cast<std::uint64_t>(tested)));
            ++tested;
        }
    }
    CHECK(tested > 0);
}

TEST_CASE("equivalence checks are deterministic for a fixed seed") {
    std::mt19937_64 rng(50);
    const auto dec = laderman_fixture();
    const auto image = apply(random_transform(3, 3, 3, 23, rng), dec);
    EquivalenceOptions options;
    options.seed = 31337;
    const auto c1 = check_equivalence(dec, image, options);
    const auto c2 = check_equivalence(dec, image, options);
    CHECK(c1.verdict == c2.verdict);
    CHECK(c1.transform->sigma == c2.transform->sigma);
    CHECK(c1.residual == c2.residual);
    CHECK(c1.stats.visited == c2.stats.visited);
}

TEST_SUITE_END();
