#include "mmt/batch.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "mmt/clustering.hpp"
#include "mmt/discretize.hpp"
#include "mmt/errors.hpp"
#include "mmt/json_io.hpp"

namespace mmt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<Decomposition> load_population(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().filename() != "manifest.json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Decomposition> population;
    for (const auto& f : files) population.push_back(read_decomposition(f.string()));
    if (population.empty()) throw InvalidArgument("batch: no decomposition files in " + dir);
    for (const auto& dec : population)
        if (dec.m != population[0].m || dec.p != population[0].p || dec.n != population[0].n ||
            dec.rank() != population[0].rank())
            throw InvalidArgument("batch: mixed tensor dimensions in " + dir);
    return population;
}

std::vector<std::pair<int, int>> sample_pairs(int count, int requested, std::uint64_t seed) {
    std::vector<std::pair<int, int>> all;
    for (int i = 0; i < count; ++i)
        for (int j = i + 1; j < count; ++j) all.emplace_back(i, j);
    std::mt19937_64 rng(splitmix64(seed ^ 0x5bd1e995ULL));
    std::shuffle(all.begin(), all.end(), rng);
    if (requested < static_cast<int>(all.size()))
        all.resize(static_cast<std::size_t>(requested));
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

BatchReport run_batch(const std::string& population_dir, const BatchOptions& options) {
    const std::vector<Decomposition> population = load_population(population_dir);
    BatchReport report;
    report.m = population[0].m;
    report.p = population[0].p;
    report.n = population[0].n;
    report.F = population[0].rank();
    report.sample_count = static_cast<int>(population.size());

    report.nd_histogram_edges = {0.0, 1e-9, 1e-6, 1e-3, 0.1, 0.2, 0.3, 0.4, 0.5};
    report.nd_histogram_counts.assign(report.nd_histogram_edges.size() - 1, 0);
    for (std::size_t i = 0; i < population.size(); ++i) {
        std::mt19937_64 rng(splitmix64(options.seed ^ (0xabcd0000ULL + i)));
        const auto nd =
            nd_score(population[i], options.q, options.nd_draws, options.beta_bound, rng);
        report.nd_scores.push_back(nd.nd_score);
        for (std::size_t bin = 0; bin + 1 < report.nd_histogram_edges.size(); ++bin) {
            const bool last = bin + 2 == report.nd_histogram_edges.size();
            if (nd.nd_score >= report.nd_histogram_edges[bin] &&
                (nd.nd_score < report.nd_histogram_edges[bin + 1] ||
                 (last && nd.nd_score <= report.nd_histogram_edges[bin + 1]))) {
                ++report.nd_histogram_counts[bin];
                break;
            }
        }
        ++report.clustering_vector_tally[clustering_vector(population[i],
                                                           options.equivalence.tols.rank_tol)];
    }

    const auto pairs =
        sample_pairs(report.sample_count, options.pairs, options.seed);
    report.pair_count = static_cast<int>(pairs.size());
    report.pair_results.resize(pairs.size());

    const int jobs = std::max(1, options.jobs);
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= pairs.size()) break;
            const auto [i, j] = pairs[idx];
            EquivalenceOptions eq = options.equivalence;
            eq.seed = splitmix64(options.seed ^ (0xfeed0000ULL + idx));
            PairResult pr;
            pr.idx1 = i;
            pr.idx2 = j;
            const auto cert = check_equivalence(population[static_cast<std::size_t>(i)],
                                                population[static_cast<std::size_t>(j)], eq);
            pr.verdict = cert.verdict;
            pr.millis = cert.stats.millis;
            pr.depth = cert.stats.max_rejected_depth;
            report.pair_results[idx] = pr;
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    int equivalent = 0;
    double millis = 0.0;
    long long depth_sum = 0;
    for (const auto& pr : report.pair_results) {
        if (pr.verdict == Verdict::equivalent) ++equivalent;
        millis += pr.millis;
        depth_sum += pr.depth;
        report.max_rejected_depth = std::max(report.max_rejected_depth, pr.depth);
    }
    if (!report.pair_results.empty()) {
        report.equivalent_pair_percentage =
            100.0 * equivalent / static_cast<double>(report.pair_results.size());
        report.mean_equivalence_millis = millis / static_cast<double>(report.pair_results.size());
        report.mean_rejected_depth =
            static_cast<double>(depth_sum) / static_cast<double>(report.pair_results.size());
    }
    return report;
}

nlohmann::json batch_report_to_json(const BatchReport& report) {
    nlohmann::json j;
    j["case"] = {{"m", report.m}, {"p", report.p}, {"n", report.n}, {"F", report.F}};
    j["sample_count"] = report.sample_count;
    j["pair_count"] = report.pair_count;
    j["equivalent_pair_percentage"] = report.equivalent_pair_percentage;
    j["nd_histogram"] = {{"edges", report.nd_histogram_edges},
                         {"counts", report.nd_histogram_counts}};
    nlohmann::json tally = nlohmann::json::array();
    for (const auto& [vec, count] : report.clustering_vector_tally)
        tally.push_back({{"vector", {vec[0], vec[1], vec[2]}}, {"count", count}});
    j["clustering_vector_tally"] = std::move(tally);
    j["mean_equivalence_millis"] = report.mean_equivalence_millis;
    j["max_rejected_depth"] = report.max_rejected_depth;
    j["mean_rejected_depth"] = report.mean_rejected_depth;
    return j;
}

std::string batch_report_to_csv(const BatchReport& report) {
    std::ostringstream out;
    out << "idx1,idx2,verdict,millis,depth\n";
    for (const auto& pr : report.pair_results) {
        const char* verdict = pr.verdict == Verdict::equivalent
                                  ? "equivalent"
                                  : (pr.verdict == Verdict::inequivalent ? "inequivalent"
                                                                         : "inconclusive");
        out << pr.idx1 << "," << pr.idx2 << "," << verdict << "," << pr.millis << ","
            << pr.depth << "\n";
    }
    return out.str();
}

}  // namespace mmt
