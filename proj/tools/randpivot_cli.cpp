// Command-line front end: factor a matrix from a MatrixMarket file, run one
// of the statistical studies, or run the built-in self-check sweeps.
//
// Exit codes: 0 success/converged, 2 iteration budget exhausted, 1 error or
// self-check violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <randpivot/randpivot.hpp>

using nlohmann::json;
using namespace randpivot;

namespace {

struct FactorOptions {
    std::string input;
    std::string mode = "two-sided";
    std::string kind = "evd";
    std::string pivot = "random:k=2";
    std::size_t k = 0;
    double delta = 1e-8;
    std::size_t max_iters = 0;
    std::uint64_t seed = 0;
    std::size_t cadence = 0;
    std::string trace_path, out_q, out_t, summary_path;
};

// --k is a convenience spelling for the size in "random:k=K"; pair rules are
// always size 2.
std::string resolve_pivot(const std::string& pivot, std::size_t k) {
    if (k == 0) return pivot;
    if (pivot == "random") return "random:k=" + std::to_string(k);
    if (pivot.rfind("random:k=", 0) == 0) {
        if (pivot != "random:k=" + std::to_string(k))
            throw std::invalid_argument("--k conflicts with --pivot '" + pivot + "'");
        return pivot;
    }
    if (k != 2)
        throw std::invalid_argument("--k must be 2 for pivot rule '" + pivot + "'");
    return pivot;
}

int run_factor(const FactorOptions& opt) {
    const KindSpec kind = parse_kind_spec(opt.kind);
    RunConfig cfg;
    cfg.kind = kind.kind;
    cfg.pair_rule = kind.rule;
    cfg.pivot = resolve_pivot(opt.pivot, opt.k);
    cfg.delta = opt.delta;
    cfg.max_iters = opt.max_iters;
    cfg.seed = opt.seed;
    cfg.trace_cadence = opt.cadence;

    const io::MmMatrix input = io::read_matrix_market(opt.input);
    RunResult res;
    if (opt.mode == "one-sided") {
        cfg.mode = RunConfig::Mode::one_sided;
        res = run_one_sided(input.values, cfg);
    } else if (opt.mode == "two-sided") {
        cfg.mode = RunConfig::Mode::two_sided;
        res = run_two_sided(SymmetricMatrix::from_matrix(input.values), cfg);
    } else {
        throw std::invalid_argument("--mode must be one-sided or two-sided");
    }

    if (!opt.out_q.empty()) io::write_matrix_market(opt.out_q, res.output);
    if (!opt.out_t.empty()) io::write_matrix_market(opt.out_t, res.t_acc);
    if (!opt.trace_path.empty()) io::write_trace_csv(opt.trace_path, res.trace);
    if (!opt.summary_path.empty()) {
        json summary = {
            {"iters_used", res.iters_used},
            {"converged", res.converged},
            {"final_off_hat", res.final_off_hat},
            {"final_gamma", res.final_gamma},
            {"residual", res.reconstruction_residual},
            {"sup_kappa_hat", res.sup_kappa_hat},
        };
        std::ofstream out(opt.summary_path);
        if (!out) throw std::runtime_error("cannot write '" + opt.summary_path + "'");
        out << summary.dump(2) << "\n";
    }
    std::cout << (res.converged ? "converged" : "budget exhausted") << " after " << res.iters_used
              << " iterations; off_hat=" << io::format_shortest(res.final_off_hat)
              << " gamma=" << io::format_shortest(res.final_gamma)
              << " residual=" << io::format_shortest(res.reconstruction_residual) << "\n";
    return res.converged ? 0 : 2;
}

struct StudyOptions {
    std::string study = "convergence";
    std::string family = "haar";
    std::string input;  // family=file
    std::size_t d = 50, n = 50;
    double kappa = 100.0, spread = 100.0;
    std::size_t trials = 1;
    std::string mode = "one-sided";
    std::string kind = "qr";
    std::string pivot = "random:k=2";
    std::size_t k = 0;
    double delta = 1e-6;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;
    std::size_t record_cadence = 0;
    std::string csv_path, summary_path;
};

lab::StudyConfig build_study_config(const StudyOptions& opt) {
    lab::StudyConfig cfg;
    if (opt.family == "haar")
        cfg.family = lab::StudyConfig::Family::haar_columns;
    else if (opt.family == "spd-kappahat")
        cfg.family = lab::StudyConfig::Family::spd_kappahat;
    else if (opt.family == "graded")
        cfg.family = lab::StudyConfig::Family::graded;
    else if (opt.family == "file")
        cfg.family = lab::StudyConfig::Family::file;
    else
        throw std::invalid_argument("--family must be haar, spd-kappahat, graded, or file");
    cfg.d = opt.d;
    cfg.n = opt.n;
    cfg.kappa = opt.kappa;
    cfg.spread = opt.spread;
    cfg.trials = opt.trials;
    cfg.horizon = opt.horizon;
    cfg.record_cadence = opt.record_cadence;
    if (cfg.family == lab::StudyConfig::Family::file) {
        if (opt.input.empty()) throw std::invalid_argument("--family file requires --input");
        cfg.file_input = io::read_matrix_market(opt.input).values;
        cfg.n = cfg.file_input.cols();
        cfg.d = cfg.file_input.rows();
    }
    const KindSpec kind = parse_kind_spec(opt.kind);
    cfg.run.kind = kind.kind;
    cfg.run.pair_rule = kind.rule;
    cfg.run.pivot = resolve_pivot(opt.pivot, opt.k);
    cfg.run.delta = opt.delta;
    cfg.run.seed = opt.seed;
    cfg.run.mode =
        opt.mode == "one-sided" ? RunConfig::Mode::one_sided : RunConfig::Mode::two_sided;
    return cfg;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

void write_summary(const std::string& path, const json& j) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

int run_study(const StudyOptions& opt) {
    lab::StudyConfig cfg = build_study_config(opt);
    const auto fs = [](double v) { return io::format_shortest(v); };

    if (opt.study == "convergence") {
        if (cfg.horizon == 0) throw std::invalid_argument("convergence study requires --horizon");
        cfg.run.delta = std::min(cfg.run.delta, 1e-13);  // run the full horizon
        const auto res = lab::convergence_study(cfg);
        std::vector<std::vector<std::string>> rows;
        double worst_band = 0.0;
        for (const auto& r : res.rows) {
            rows.push_back({std::to_string(r.t), fs(r.mean_ratio), fs(r.predicted), fs(r.q10),
                            fs(r.q50), fs(r.q90)});
            if (r.predicted > 0.0)
                worst_band = std::max(worst_band, std::fabs(std::log(r.mean_ratio / r.predicted)));
        }
        if (!opt.csv_path.empty())
            write_csv(opt.csv_path, "t,mean_ratio,predicted,q10,q50,q90", rows);
        write_summary(opt.summary_path,
                      {{"study", "convergence"},
                       {"trials", res.trials},
                       {"rows", res.rows.size()},
                       {"max_abs_log_band", worst_band}});
        std::cout << "convergence: " << res.rows.size() << " checkpoints, worst |log(mean/pred)| = "
                  << fs(worst_band) << "\n";
        return 0;
    }
    if (opt.study == "martingale") {
        if (cfg.horizon == 0) throw std::invalid_argument("martingale study requires --horizon");
        cfg.run.delta = std::min(cfg.run.delta, 1e-13);
        const auto res = lab::martingale_study(cfg);
        std::vector<std::vector<std::string>> rows;
        double worst_dev = 0.0;
        for (const auto& r : res.rows) {
            rows.push_back(
                {std::to_string(r.t), fs(r.mean), fs(r.stderr_mean), fs(r.min), fs(r.max)});
            if (r.stderr_mean > 0.0)
                worst_dev = std::max(worst_dev, std::fabs(r.mean - 1.0) / r.stderr_mean);
        }
        if (!opt.csv_path.empty()) write_csv(opt.csv_path, "t,mean_scaled,stderr,min,max", rows);
        write_summary(opt.summary_path, {{"study", "martingale"},
                                         {"trials", res.trials},
                                         {"max_deviation_in_stderrs", worst_dev}});
        std::cout << "martingale: max |mean-1| = " << fs(worst_dev) << " standard errors\n";
        return 0;
    }
    if (opt.study == "stability") {
        const auto res = lab::stability_study(cfg);
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : res.rows)
            rows.push_back({std::to_string(r.trial), fs(r.input_kappa_hat), fs(r.sup_kappa_hat),
                            fs(r.kappa_bound), fs(r.final_dist2), fs(r.max_rel_eigenvalue_error),
                            fs(r.scaled_eigenvalue_bound)});
        if (!opt.csv_path.empty())
            write_csv(opt.csv_path,
                      "trial,input_kappa_hat,sup_kappa_hat,kappa_bound,final_dist2,"
                      "max_rel_eig_error,scaled_eig_bound",
                      rows);
        write_summary(opt.summary_path, {{"study", "stability"},
                                         {"trials", res.rows.size()},
                                         {"tau", res.tau},
                                         {"kappa_violations", res.kappa_violations},
                                         {"dist2_passes", res.dist2_passes}});
        std::cout << "stability: tau=" << res.tau << ", kappa bound violations "
                  << res.kappa_violations << "/" << res.rows.size() << ", dist2 passes "
                  << res.dist2_passes << "/" << res.rows.size() << "\n";
        return 0;
    }
    if (opt.study == "orthogonalization") {
        cfg.run.mode = RunConfig::Mode::one_sided;
        const auto res = lab::orthogonalization_acceptance(cfg, opt.delta);
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : res.rows)
            rows.push_back({std::to_string(r.trial), fs(r.orthogonality_error),
                            fs(r.subspace_error), r.pass ? "1" : "0"});
        if (!opt.csv_path.empty())
            write_csv(opt.csv_path, "trial,orthogonality_error,subspace_error,pass", rows);
        write_summary(opt.summary_path, {{"study", "orthogonalization"},
                                         {"trials", res.rows.size()},
                                         {"pass_fraction", res.pass_fraction}});
        std::cout << "orthogonalization: pass fraction " << fs(res.pass_fraction) << "\n";
        return 0;
    }
    throw std::invalid_argument(
        "--study must be convergence, martingale, stability, or orthogonalization");
}

// Self-check sweeps with fixed internal seeds; any violation is a build error.
int run_check(const std::string& suite) {
    const bool lemmas = suite == "lemmas" || suite == "all";
    const bool updates = suite == "updates" || suite == "all";
    if (!lemmas && !updates)
        throw std::invalid_argument("--suite must be lemmas, updates, or all");
    std::size_t violations = 0;

    if (lemmas) {
        RngState rng(20260810);
        std::size_t cases = 0;
        for (std::size_t trial = 0; trial < 10000; ++trial) {
            const std::size_t n = 2 + trial % 15;  // 2..16
            const SymmetricMatrix b = gen_random_correlation(n, rng);
            const double g = gamma(b);
            const double off = off_frobenius(diagonal_normalize(b));
            const PotentialReport rep = potential_report(b);
            const auto [klo, khi] = bound_kappa_from_gamma(g, n);
            const double nb = bound_norm_from_gamma(g);
            const double norm_max =
                std::max(rep.kappa_hat * rep.sigma_min_hat, 1.0 / rep.sigma_min_hat);
            const auto ok = [](double lhs, double rhs) { return lhs <= rhs + 1e-9 * (1.0 + rhs); };
            if (!ok(off, bound_off_from_gamma(g))) ++violations;
            if (!ok(klo, rep.kappa_hat) || !ok(rep.kappa_hat, khi)) ++violations;
            if (!ok(norm_max, nb)) ++violations;
            ++cases;
        }
        std::cout << "lemma sweep: " << cases << " cases, " << violations << " violations\n";
    }

    if (updates) {
        RngState rng(8102026);
        std::size_t cases = 0;
        std::size_t before = violations;
        const FactorizationKind kinds[] = {
            FactorizationKind::unitary, FactorizationKind::upper_triangular,
            FactorizationKind::unit_upper, FactorizationKind::lower_triangular,
            FactorizationKind::general};
        for (std::size_t trial = 0; trial < 2000; ++trial) {
            const std::size_t n = 3 + trial % 8;  // 3..10
            const SymmetricMatrix b = gen_random_correlation(n, rng);
            const std::size_t k = 2 + rng.next_below(std::min<std::size_t>(n, 4) - 1);
            const auto j = sample_uniform_subset(rng, n, k);
            const auto kind = kinds[rng.next_below(5)];
            if (lab::deterministic_update_check(b, j, kind) > 1e-9 * (1.0 + gamma(b)))
                ++violations;
            ++cases;
        }
        for (std::size_t trial = 0; trial < 60; ++trial) {
            const std::size_t n = 3 + trial % 8;
            const SymmetricMatrix b = gen_random_correlation(n, rng);
            for (std::size_t k = 2; k <= std::min<std::size_t>(n, 4); ++k)
                for (const auto kind : kinds) {
                    const auto [measured, predicted] = lab::expected_update_oracle(b, k, kind);
                    if (std::fabs(measured - predicted) > 1e-10 * std::max(gamma(b), 1e-12))
                        ++violations;
                    ++cases;
                }
        }
        std::cout << "update sweep: " << cases << " cases, " << (violations - before)
                  << " violations\n";
    }
    return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized-pivot matrix factorization"};
    app.require_subcommand(1);

    FactorOptions fopt;
    CLI::App* factor = app.add_subcommand("factor", "Factor a MatrixMarket matrix");
    factor->add_option("input", fopt.input, "MatrixMarket input file")->required();
    factor->add_option("--mode", fopt.mode, "one-sided or two-sided");
    factor->add_option("--kind", fopt.kind,
                       "evd|svd|cholesky|qr|ldl|ql|orth, optionally ,rule=gs2|nsvd2|nsvd2x2");
    factor->add_option("--pivot", fopt.pivot,
                       "random:k=K | greedy-offdiag | greedy-gamma | row-cyclic | column-cyclic");
    factor->add_option("--k", fopt.k, "pivot size (shortcut for random:k=K)");
    factor->add_option("--delta", fopt.delta, "target normalized off-diagonal RMS");
    factor->add_option("--max-iters", fopt.max_iters, "iteration cap (default: budget formula)");
    factor->add_option("--seed", fopt.seed, "RNG seed");
    factor->add_option("--cadence", fopt.cadence, "trace sampling stride (default: one sweep)");
    factor->add_option("--trace", fopt.trace_path, "trace CSV output path");
    factor->add_option("--out-q", fopt.out_q, "Q (or D) MatrixMarket output path");
    factor->add_option("--out-t", fopt.out_t, "T_acc MatrixMarket output path");
    factor->add_option("--summary", fopt.summary_path, "JSON summary output path");

    StudyOptions sopt;
    CLI::App* study = app.add_subcommand("study", "Run a statistical study");
    study->add_option("--study", sopt.study,
                      "convergence | martingale | stability | orthogonalization");
    study->add_option("--family", sopt.family, "haar | spd-kappahat | graded | file");
    study->add_option("--input", sopt.input, "MatrixMarket input (family=file)");
    study->add_option("--d", sopt.d, "rows (haar family)");
    study->add_option("--n", sopt.n, "columns / order");
    study->add_option("--kappa", sopt.kappa, "target normalized condition number");
    study->add_option("--spread", sopt.spread, "diagonal grading spread");
    study->add_option("--trials", sopt.trials, "number of trials");
    study->add_option("--mode", sopt.mode, "one-sided or two-sided");
    study->add_option("--kind", sopt.kind, "factorization kind (as in factor)");
    study->add_option("--pivot", sopt.pivot, "pivot rule (as in factor)");
    study->add_option("--k", sopt.k, "pivot size");
    study->add_option("--delta", sopt.delta, "study tolerance");
    study->add_option("--seed", sopt.seed, "base seed; trial i uses seed+i");
    study->add_option("--horizon", sopt.horizon, "iterations per trial");
    study->add_option("--record-cadence", sopt.record_cadence, "observable sampling stride");
    study->add_option("--out-csv", sopt.csv_path, "CSV output path");
    study->add_option("--summary", sopt.summary_path, "JSON summary output path");

    std::string suite = "all";
    CLI::App* check = app.add_subcommand("check", "Run self-check sweeps");
    check->add_option("--suite", suite, "lemmas | updates | all");

    CLI11_PARSE(app, argc, argv);

    try {
        if (factor->parsed()) return run_factor(fopt);
        if (study->parsed()) return run_study(sopt);
        if (check->parsed()) return run_check(suite);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
