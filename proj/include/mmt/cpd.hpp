#ifndef MMT_CPD_HPP
#define MMT_CPD_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "mmt/decomposition.hpp"

namespace mmt {

struct SolveConfig {
    int max_restarts = 200;
    int max_iters = 300;          // Gauss-Newton iterations per restart
    int als_sweeps = 30;          // warm-up sweeps before Gauss-Newton
    double init_lo = -1.0;        // uniform init range for the factors
    double init_hi = 1.0;
    double damping_init = 1e-3;   // Levenberg damping, x10 on reject, /10 on accept
    double residual_target = 1e-9;
    std::uint64_t seed = 0;
};

// Alternating least squares warm-up followed by damped Gauss-Newton on the
// entrywise tensor residual. Returns a decomposition whose max residual is
// below the target, or nullopt once the restart budget is exhausted.
// Deterministic for a fixed config.
std::optional<Decomposition> decompose(const MatMulTensor& tensor, int F,
                                       const SolveConfig& cfg = {},
                                       int* restarts_used = nullptr);

struct PopulationResult {
    std::vector<Decomposition> samples;
    std::vector<int> trials;  // restarts consumed per returned sample
    bool complete = false;
};

// `count` verified decompositions from independently seeded solves. If the
// restart budget runs out the list is partial and `complete` is false.
PopulationResult sample_population(const MatMulTensor& tensor, int F, int count,
                                   const SolveConfig& cfg = {});

}  // namespace mmt

#endif
