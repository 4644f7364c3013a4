#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "mmt/batch.hpp"
#include "mmt/clustering.hpp"
#include "mmt/cpd.hpp"
#include "mmt/discretize.hpp"
#include "mmt/equivalence.hpp"
#include "mmt/errors.hpp"
#include "mmt/json_io.hpp"
#include "mmt/transforms.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitInternal = 70;

struct MpnDims {
    int m = 0, p = 0, n = 0;
};

MpnDims parse_mpn(const std::string& text) {
    MpnDims d;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> d.m >> c1 >> d.p >> c2 >> d.n) || c1 != ',' || c2 != ',' || d.m < 1 ||
        d.p < 1 || d.n < 1)
        throw mmt::InvalidArgument("expected --mpn M,P,N with positive integers");
    return d;
}

int cmd_verify(const std::string& file, double tol) {
    const auto dec = mmt::read_decomposition(file);
    const auto report = mmt::verify_decomposition(dec, tol);
    std::cout << "max_residual " << report.max_residual << " frobenius "
              << report.frobenius_residual << " " << (report.pass ? "pass" : "fail") << "\n";
    return report.pass ? 0 : 1;
}

int cmd_cluster(const std::string& file, double rank_tol) {
    const auto dec = mmt::read_decomposition(file);
    const auto stacked = mmt::stack_factors(dec);
    nlohmann::json j;
    const auto vec = mmt::clustering_vector(dec, rank_tol);
    j["clustering_vector"] = {vec[0], vec[1], vec[2]};
    const char* names[3] = {"U", "V", "W"};
    const mmt::Matrix* mats[3] = {&stacked.Ut, &stacked.Vt, &stacked.Wt};
    for (int mode = 0; mode < 3; ++mode) {
        nlohmann::json evidence;
        evidence["nullspace"] =
            mmt::clustering_report_to_json(mmt::clustering_general(*mats[mode], rank_tol));
        try {
            evidence["graph"] =
                mmt::clustering_report_to_json(mmt::clustering_graph(*mats[mode], rank_tol));
        } catch (const mmt::PreconditionViolation& e) {
            evidence["graph"] = {{"error", e.what()}};
        }
        j[names[mode]] = std::move(evidence);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_equiv(const std::string& file1, const std::string& file2, const std::string& mode,
              std::uint64_t seed, bool json_output) {
    const auto dec1 = mmt::read_decomposition(file1);
    const auto dec2 = mmt::read_decomposition(file2);
    mmt::EquivalenceOptions options;
    options.seed = seed;
    options.mode =
        mode == "no-assumption" ? mmt::EquivalenceMode::no_assumption : mmt::EquivalenceMode::full;
    const auto cert = mmt::check_equivalence(dec1, dec2, options);
    if (json_output) {
        std::cout << mmt::certificate_to_json(cert).dump(2) << "\n";
    } else {
        const char* verdict = cert.verdict == mmt::Verdict::equivalent
                                  ? "equivalent"
                                  : (cert.verdict == mmt::Verdict::inequivalent ? "inequivalent"
                                                                                : "inconclusive");
        std::cout << verdict << " residual " << cert.residual << " visited "
                  << cert.stats.visited << " depth " << cert.stats.max_rejected_depth << "\n";
    }
    switch (cert.verdict) {
        case mmt::Verdict::equivalent: return 0;
        case mmt::Verdict::inequivalent: return 1;
        case mmt::Verdict::inconclusive: return 2;
    }
    return kExitInternal;
}

int cmd_discretize(const std::string& file, double q, int draws, int beta_bound,
                   std::uint64_t seed, double threshold) {
    const auto dec = mmt::read_decomposition(file);
    std::mt19937_64 rng(seed);
    mmt::DiscretizabilityReport report;
    const bool passes =
        mmt::discretizability_criterion(dec, q, draws, beta_bound, rng, threshold, &report);
    nlohmann::json j = mmt::discretizability_report_to_json(report);
    j["passes"] = passes;
    j["threshold"] = threshold;
    std::cout << j.dump(2) << "\n";
    return passes ? 0 : 1;
}

int cmd_decompose(const MpnDims& dims, int F, int count, std::uint64_t seed,
                  const std::string& out_dir) {
    const auto tensor = mmt::build_tensor(dims.m, dims.p, dims.n);
    mmt::SolveConfig cfg;
    cfg.seed = seed;
    const auto population = mmt::sample_population(tensor, F, count, cfg);
    std::filesystem::create_directories(out_dir);
    nlohmann::json manifest;
    manifest["case"] = {{"m", dims.m}, {"p", dims.p}, {"n", dims.n}, {"F", F}};
    manifest["seed"] = seed;
    manifest["requested"] = count;
    manifest["complete"] = population.complete;
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t i = 0; i < population.samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "dec_%04zu.json", i);
        const std::string path = out_dir + "/" + name;
        mmt::write_decomposition(path, population.samples[i]);
        const auto verify = mmt::verify_decomposition(population.samples[i], cfg.residual_target);
        samples.push_back({{"file", name},
                           {"trials", population.trials[i]},
                           {"max_residual", verify.max_residual}});
    }
    manifest["samples"] = std::move(samples);
    std::ofstream out(out_dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
    if (!population.complete)
        std::cerr << "warning: restart budget exhausted after " << population.samples.size()
                  << " samples\n";
    return population.complete ? 0 : 1;
}

int cmd_gen(const std::string& file, std::uint64_t seed, const std::string& out,
            const std::string& transform_out) {
    const auto dec = mmt::read_decomposition(file);
    std::mt19937_64 rng(seed);
    const auto t = mmt::random_transform(dec.m, dec.p, dec.n, dec.rank(), rng);
    const auto transformed = mmt::apply(t, dec);
    mmt::write_decomposition(out, transformed);
    if (!transform_out.empty()) {
        std::ofstream tf(transform_out);
        if (!tf) throw mmt::InvalidArgument("cannot open " + transform_out);
        tf << mmt::transform_to_json(t).dump() << "\n";
    }
    return 0;
}

int cmd_batch(const std::string& dir, const mmt::BatchOptions& options,
              const std::string& out_prefix) {
    const auto report = mmt::run_batch(dir, options);
    const nlohmann::json j = mmt::batch_report_to_json(report);
    {
        std::ofstream out(out_prefix + ".json");
        out << j.dump(2) << "\n";
        std::ofstream csv(out_prefix + ".csv");
        csv << mmt::batch_report_to_csv(report);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_fixture(const std::string& name, const std::string& out) {
    mmt::write_decomposition(out, mmt::fixture(name));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix multiplication tensor decompositions: verification, clustering, "
                 "equivalence, discretizability"};
    app.require_subcommand(1);

    std::string file1, file2, mode = "full", out = "-", transform_out, out_dir = "population";
    std::string mpn_text = "2,2,2", out_prefix = "batch_report", fixture_name;
    double tol = 1e-9, rank_tol = 1e-8, q = 0.5, threshold = 0.1;
    int draws = 16, beta_bound = 5, rank = 7, count = 20, pairs = 100, jobs = 1;
    std::uint64_t seed = 0;
    bool json_output = false;

    auto* verify = app.add_subcommand("verify", "check a decomposition against its tensor");
    verify->add_option("file", file1)->required();
    verify->add_option("--tol", tol, "max-entry residual bound");

    auto* cluster = app.add_subcommand("cluster", "clustering vector with per-mode evidence");
    cluster->add_option("file", file1)->required();
    cluster->add_option("--rank-tol", rank_tol);

    auto* equiv = app.add_subcommand("equiv", "decide equivalence of two decompositions");
    equiv->add_option("file1", file1)->required();
    equiv->add_option("file2", file2)->required();
    equiv->add_option("--mode", mode)->check(CLI::IsMember({"full", "no-assumption"}));
    equiv->add_option("--seed", seed);
    equiv->add_flag("--json", json_output);

    auto* discretize = app.add_subcommand("discretize", "necessary discretizability criterion");
    discretize->add_option("file", file1)->required();
    discretize->add_option("--q", q)->required();
    discretize->add_option("--draws", draws);
    discretize->add_option("--beta-bound", beta_bound);
    discretize->add_option("--seed", seed);
    discretize->add_option("--threshold", threshold);

    auto* decompose = app.add_subcommand("decompose", "sample numerical decompositions");
    decompose->add_option("--mpn", mpn_text)->required();
    decompose->add_option("--rank", rank)->required();
    decompose->add_option("--count", count);
    decompose->add_option("--seed", seed);
    decompose->add_option("--out", out_dir)->required();

    auto* gen = app.add_subcommand("gen", "apply a random invariance transform");
    gen->add_option("file", file1)->required();
    gen->add_option("--seed", seed);
    gen->add_option("--out", out, "transformed decomposition (default stdout)");
    gen->add_option("--transform-out", transform_out);

    auto* batch = app.add_subcommand("batch", "pairwise equivalence and ND sweep over a directory");
    batch->add_option("dir", file1)->required();
    batch->add_option("--pairs", pairs);
    batch->add_option("--seed", seed);
    batch->add_option("--jobs", jobs);
    batch->add_option("--q", q);
    batch->add_option("--draws", draws);
    batch->add_option("--beta-bound", beta_bound);
    batch->add_option("--out", out_prefix);

    auto* fixture = app.add_subcommand("fixture", "write a named fixture decomposition");
    fixture->add_option("name", fixture_name)->required();
    fixture->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (verify->parsed()) return cmd_verify(file1, tol);
        if (cluster->parsed()) return cmd_cluster(file1, rank_tol);
        if (equiv->parsed()) return cmd_equiv(file1, file2, mode, seed, json_output);
        if (discretize->parsed())
            return cmd_discretize(file1, q, draws, beta_bound, seed, threshold);
        if (decompose->parsed())
            return cmd_decompose(parse_mpn(mpn_text), rank, count, seed, out_dir);
        if (gen->parsed()) return cmd_gen(file1, seed, out, transform_out);
        if (batch->parsed()) {
            mmt::BatchOptions options;
            options.pairs = pairs;
            options.seed = seed;
            options.jobs = jobs;
            options.q = q;
            options.nd_draws = draws;
            options.beta_bound = beta_bound;
            return cmd_batch(file1, options, out_prefix);
        }
        if (fixture->parsed()) return cmd_fixture(fixture_name, out);
    } catch (const mmt::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mmt::AssumptionViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const mmt::PreconditionViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const mmt::NumericalRankAmbiguity& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const mmt::DegenerateTerms& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
