#ifndef MMT_BATCH_HPP
#define MMT_BATCH_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmt/equivalence.hpp"

namespace mmt {

struct BatchOptions {
    int pairs = 100;            // sampled without replacement, capped at C(k,2)
    std::uint64_t seed = 0;
    int jobs = 1;
    double q = 0.5;             // discretizability parameter for the ND sweep
    int nd_draws = 16;
    int beta_bound = 5;
    double nd_threshold = 0.1;
    EquivalenceOptions equivalence;
};

struct PairResult {
    int idx1 = 0, idx2 = 0;
    Verdict verdict = Verdict::inequivalent;
    double millis = 0.0;
    int depth = 0;
};

struct BatchReport {
    int m = 0, p = 0, n = 0, F = 0;
    int sample_count = 0;
    int pair_count = 0;
    double equivalent_pair_percentage = 0.0;
    std::vector<double> nd_histogram_edges;
    std::vector<int> nd_histogram_counts;  // one entry per decomposition
    std::map<std::array<int, 3>, int> clustering_vector_tally;
    double mean_equivalence_millis = 0.0;
    int max_rejected_depth = 0;
    double mean_rejected_depth = 0.0;
    std::vector<PairResult> pair_results;
    std::vector<double> nd_scores;
};

// Runs pairwise equivalence checks and per-decomposition ND scores over a
// directory of decomposition JSON files (one case per directory).
BatchReport run_batch(const std::string& population_dir, const BatchOptions& options);

nlohmann::json batch_report_to_json(const BatchReport& report);
std::string batch_report_to_csv(const BatchReport& report);

}  // namespace mmt

#endif
