#ifndef MMT_EQUIVALENCE_HPP
#define MMT_EQUIVALENCE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "mmt/transforms.hpp"

namespace mmt {

struct EquivalenceTolerances {
    double nstol = 1e-8;         // nullspace dimension decision, relative
    double kron_tol = 1e-6;      // rank-1 defect cap in the Kronecker test
    double zero_tol = 1e-8;      // per-term scaling coefficients, relative
    double eig_tol = 1e-6;       // eigenvalue matching, relative
    double residual_tol = 1e-8;  // entrywise reconstruction residual
    double rank_tol = 1e-8;      // clustering / degeneracy rank decisions
};

enum class Verdict { equivalent, inequivalent, inconclusive };

struct ProbeStats {
    long long visited = 0;         // partial permutations examined
    long long leaf_solves = 0;     // scaling+trace solves at full length
    int max_rejected_depth = 0;    // longest rejected partial permutation
    double millis = 0.0;
};

struct EquivalenceCertificate {
    Verdict verdict = Verdict::inequivalent;
    std::optional<InvarianceTransform> transform;
    double residual = 0.0;
    ProbeStats stats;
    int rotation_shift = 0;  // cyclic shift used to place a cl=1 mode first
};

// Diagnostics attached to a failed scaling+trace solve.
struct SolveFailure {
    std::string reason;
    std::vector<double> spectrum;
};

// Scaling+trace connection between two decompositions with matched term
// order. Internally rotates both decompositions so that a mode with
// clustering number one sits in the U slot (the shift can be supplied by the
// caller to skip recomputation; -1 means "choose from clustering vectors").
// On success the returned transform has the identity permutation and
// apply(t, dec1) reproduces dec2 within the residual tolerance.
std::optional<InvarianceTransform> solve_scaling_trace(
    const Decomposition& dec1, const Decomposition& dec2,
    const EquivalenceTolerances& tols = {}, int rotation_shift = -1,
    SolveFailure* failure = nullptr);

// Necessary similarity test: for each trial, draws random coefficients and
// compares the eigenvalue multisets of the two linear combinations by
// minimum-cost matching. False certifies non-similarity up to tolerance.
bool similarity_probe(std::span<const Matrix> ms1, std::span<const Matrix> ms2,
                      std::mt19937_64& rng, int trials = 3, double eig_tol = 1e-6);

enum class EquivalenceMode { full, no_assumption };

struct EquivalenceOptions {
    int trials = 3;
    EquivalenceTolerances tols;
    EquivalenceMode mode = EquivalenceMode::full;
    std::uint64_t seed = 0;
    // Test hook: called with each examined partial permutation (0-based
    // images) and whether it survived the pruning checks.
    std::function<void(const std::vector<int>&, bool)> observer;
};

// Backtracking search over partial permutations with eigenvalue-probe
// pruning; at full length runs the scaling+trace solve. In no_assumption
// mode a completed permutation yields `inconclusive` instead.
EquivalenceCertificate check_equivalence(const Decomposition& dec1,
                                         const Decomposition& dec2,
                                         const EquivalenceOptions& options = {});

// Oracle: enumerate all F! permutations (F <= 8) and test each one.
EquivalenceCertificate check_equivalence_bruteforce(const Decomposition& dec1,
                                                    const Decomposition& dec2,
                                                    const EquivalenceTolerances& tols = {});

}  // namespace mmt

#endif
