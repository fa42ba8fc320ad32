#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "driver.hpp"
#include "generators.hpp"
#include "local_transform.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "pivoting.hpp"

namespace randpivot::lab {

/// Contraction factor per iteration under uniform size-k pivoting.
inline double contraction_factor(std::size_t n, std::size_t k) {
    return 1.0 - static_cast<double>(k) * static_cast<double>(k - 1) /
                     (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Visits every size-k subset of {0,...,n-1} in lexicographic order.
inline void for_each_subset(std::size_t n, std::size_t k,
                            const std::function<void(const PivotSet&)>& fn) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(PivotSet(idx));
        std::size_t i = k;
        while (i-- > 0) {
            if (idx[i] + (k - i) < n) {
                ++idx[i];
                for (std::size_t m = i + 1; m < k; ++m) idx[m] = idx[m - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
    }
}

/// Checks the one-step identity: the potential after a pivot update equals
/// the old potential plus sum_{i != j in J} b_ij (B^{-1})_ji, independent of
/// which kind of transform performed the update. Returns the absolute
/// residual between the two sides.
inline double deterministic_update_check(const SymmetricMatrix& b, const PivotSet& j,
                                         FactorizationKind kind) {
    const double g0 = gamma(b);
    const SymmetricMatrix inv = spd_inverse(b);
    double correction = 0.0;
    for (std::size_t a = 0; a < j.size(); ++a)
        for (std::size_t c = 0; c < j.size(); ++c)
            if (a != c) correction += b(j[a], j[c]) * inv(j[c], j[a]);
    const LocalTransform lt = make_local_transform(kind, extract_principal_submatrix(b, j));
    SymmetricMatrix updated = b;
    apply_two_sided_update(updated, j, lt.s);
    return std::fabs(gamma(updated) - (g0 + correction));
}

/// Exact enumeration of the expected one-step potential: averages the
/// post-update potential over all C(n,k) pivots and returns it next to the
/// closed-form prediction (1 - k(k-1)/(n(n-1))) * Gamma(B).
inline std::pair<double, double> expected_update_oracle(const SymmetricMatrix& b, std::size_t k,
                                                        FactorizationKind kind) {
    const std::size_t n = b.order();
    if (n > 14) throw std::invalid_argument("expected_update_oracle: n too large to enumerate");
    if (k < 2 || k > n) throw std::invalid_argument("expected_update_oracle: need 2 <= k <= n");
    double sum = 0.0;
    std::size_t count = 0;
    for_each_subset(n, k, [&](const PivotSet& j) {
        const LocalTransform lt = make_local_transform(kind, extract_principal_submatrix(b, j));
        SymmetricMatrix updated = b;
        apply_two_sided_update(updated, j, lt.s);
        sum += gamma(updated);
        ++count;
    });
    const double measured = sum / static_cast<double>(count);
    const double predicted = contraction_factor(n, k) * gamma(b);
    return {measured, predicted};
}

struct StudyConfig {
    enum class Family { haar_columns, spd_kappahat, graded, file };

    Family family = Family::haar_columns;
    std::size_t d = 50;
    std::size_t n = 50;
    double kappa = 100.0;   // spd_kappahat / graded families
    double spread = 100.0;  // graded family
    Matrix file_input;      // file family: every trial reuses this input
    std::size_t trials = 1;
    RunConfig run;                   // kind / pivot / delta / seed base
    std::size_t horizon = 0;         // iterations per trial (0 -> run's own budget)
    std::size_t record_cadence = 0;  // observable sampling stride (0 -> one sweep)
};

namespace detail {

inline Matrix make_one_sided_input(const StudyConfig& cfg, RngState& rng) {
    if (cfg.family == StudyConfig::Family::file) return cfg.file_input;
    if (cfg.family != StudyConfig::Family::haar_columns)
        throw std::invalid_argument("study: one-sided studies use the haar_columns family");
    return gen_haar_columns(cfg.d, cfg.n, rng);
}

inline SymmetricMatrix make_two_sided_input(const StudyConfig& cfg, RngState& rng) {
    switch (cfg.family) {
        case StudyConfig::Family::haar_columns:
            return gram(gen_haar_columns(cfg.d, cfg.n, rng));
        case StudyConfig::Family::spd_kappahat:
            return gen_spd_kappahat(cfg.n, cfg.kappa, rng);
        case StudyConfig::Family::graded:
            return gen_graded(cfg.n, cfg.spread, cfg.kappa, rng);
        case StudyConfig::Family::file:
            return SymmetricMatrix::from_matrix(cfg.file_input);
    }
    throw std::logic_error("study: unreachable");
}

inline double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace detail

struct ConvergenceRow {
    std::size_t t = 0;
    double mean_ratio = 0.0;  // mean over trials of Gamma_t / Gamma_0
    double predicted = 0.0;   // contraction_factor^t
    double q10 = 0.0, q50 = 0.0, q90 = 0.0;
};

struct ConvergenceStudyResult {
    std::vector<ConvergenceRow> rows;
    std::size_t trials = 0;
};

/// Tracks the trial-averaged decay of the potential against the closed-form
/// expectation curve. The potential is sampled through an observer at the
/// study's own cadence, so the driver's heavier trace stays off the hot path.
inline ConvergenceStudyResult convergence_study(const StudyConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("convergence_study: trials must be >= 1");
    if (cfg.horizon == 0) throw std::invalid_argument("convergence_study: horizon required");
    RunConfig rc = cfg.run;
    rc.max_iters = cfg.horizon;
    rc.trace_cadence = cfg.horizon;  // endpoints only
    const std::size_t cadence =
        cfg.record_cadence ? cfg.record_cadence : std::max<std::size_t>(1, cfg.horizon / 30);

    std::vector<std::size_t> ts;
    for (std::size_t t = 0; t <= cfg.horizon; t += cadence) ts.push_back(t);
    std::vector<std::vector<double>> ratios(ts.size());

    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        rc.seed = cfg.run.seed + trial;
        RngState rng(rc.seed ^ 0x5eedb00bcafef00dull);
        double gamma0 = -1.0;
        std::size_t slot = 0;
        const RunObserver observer = [&](std::size_t t, const Matrix* a,
                                         const SymmetricMatrix* b) {
            if (slot >= ts.size() || t != ts[slot]) return;
            const double g = a ? gamma(gram(*a)) : gamma(*b);
            if (t == 0) {
                gamma0 = g;
                if (gamma0 <= 0.0)
                    throw std::domain_error("convergence_study: vanishing initial potential");
            }
            ratios[slot++].push_back(g / gamma0);
        };
        if (cfg.run.mode == RunConfig::Mode::one_sided)
            run_one_sided(detail::make_one_sided_input(cfg, rng), rc, observer);
        else
            run_two_sided(detail::make_two_sided_input(cfg, rng), rc, observer);
    }

    const std::size_t k = PivotRule::parse(cfg.run.pivot, 0).pivot_size();
    const double factor = contraction_factor(cfg.n, k);
    ConvergenceStudyResult out;
    out.trials = cfg.trials;
    for (std::size_t s = 0; s < ts.size(); ++s) {
        if (ratios[s].size() != cfg.trials) continue;  // unequal tails across trials
        ConvergenceRow row;
        row.t = ts[s];
        double sum = 0.0;
        for (double r : ratios[s]) sum += r;
        row.mean_ratio = sum / static_cast<double>(cfg.trials);
        row.predicted = std::pow(factor, static_cast<double>(ts[s]));
        row.q10 = detail::quantile(ratios[s], 0.1);
        row.q50 = detail::quantile(ratios[s], 0.5);
        row.q90 = detail::quantile(ratios[s], 0.9);
        out.rows.push_back(row);
    }
    return out;
}

/// Per-trial multiplicative history of the potential.
struct MartingaleTrace {
    std::vector<double> x;       // X_t = Gamma_{t+1} / Gamma_t
    std::vector<double> scaled;  // C^{-t} Gamma_t / Gamma_0, index t
};

struct MartingaleRow {
    std::size_t t = 0;
    double mean = 0.0;  // mean of the scaled process, expected to sit at 1
    double stderr_mean = 0.0;
    double min = 0.0, max = 0.0;
};

struct MartingaleStudyResult {
    std::vector<MartingaleRow> rows;
    std::size_t trials = 0;
    MartingaleTrace sample_trace;  // trial 0, for single-path inspection
};

/// Watches C^{-t} Gamma_t / Gamma_0 across trials: a flat line at 1 is the
/// martingale signature of the one-step expectation.
inline MartingaleStudyResult martingale_study(const StudyConfig& cfg) {
    if (cfg.horizon == 0) throw std::invalid_argument("martingale_study: horizon required");
    RunConfig rc = cfg.run;
    rc.max_iters = cfg.horizon;
    rc.trace_cadence = cfg.horizon;  // potential is sampled by the observer below

    const std::size_t k = PivotRule::parse(cfg.run.pivot, 0).pivot_size();
    const double c = contraction_factor(cfg.n, k);
    std::vector<std::vector<double>> scaled(cfg.horizon + 1);
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        rc.seed = cfg.run.seed + trial;
        RngState rng(rc.seed ^ 0x5eedb00bcafef00dull);
        double gamma0 = -1.0;
        const RunObserver observer = [&](std::size_t t, const Matrix*,
                                         const SymmetricMatrix* b) {
            if (t > cfg.horizon) return;
            const double g = gamma(*b);
            if (t == 0) {
                gamma0 = g;
                if (gamma0 <= 0.0)
                    throw std::domain_error("martingale_study: vanishing potential");
            }
            scaled[t].push_back(g / gamma0 / std::pow(c, static_cast<double>(t)));
        };
        run_two_sided(detail::make_two_sided_input(cfg, rng), rc, observer);
    }

    MartingaleStudyResult out;
    out.trials = cfg.trials;
    for (std::size_t t = 0; t < scaled.size(); ++t) {
        if (!scaled[t].empty()) {
            out.sample_trace.scaled.push_back(scaled[t][0]);
            if (t > 0 && !scaled[t - 1].empty() && scaled[t - 1][0] > 0.0)
                out.sample_trace.x.push_back(c * scaled[t][0] / scaled[t - 1][0]);
        }
        if (scaled[t].size() != cfg.trials) continue;
        MartingaleRow row;
        row.t = t;
        double sum = 0.0;
        for (double v : scaled[t]) sum += v;
        row.mean = sum / static_cast<double>(cfg.trials);
        double var = 0.0;
        for (double v : scaled[t]) var += (v - row.mean) * (v - row.mean);
        var /= std::max<std::size_t>(cfg.trials - 1, 1);
        row.stderr_mean = std::sqrt(var / static_cast<double>(cfg.trials));
        row.min = *std::min_element(scaled[t].begin(), scaled[t].end());
        row.max = *std::max_element(scaled[t].begin(), scaled[t].end());
        out.rows.push_back(row);
    }
    return out;
}

struct StabilityRow {
    std::size_t trial = 0;
    double input_kappa_hat = 0.0;
    double sup_kappa_hat = 0.0;
    double kappa_bound = 0.0;  // n^3 kappa_hat(B) + 3n
    double final_dist2 = 0.0;  // dist_two(B_hat^(tau), I)
    double max_rel_eigenvalue_error = 0.0;
    double scaled_eigenvalue_bound = 0.0;  // 1e3 * eps * sup kappa_hat
};

struct StabilityStudyResult {
    std::vector<StabilityRow> rows;
    std::size_t tau = 0;
    std::size_t kappa_violations = 0;  // sup exceeded the polynomial bound
    std::size_t dist2_passes = 0;      // final dist2 <= sqrt(delta)
};

/// Long-horizon diagnostics on the normalized condition number, final
/// normalized distance to diagonal, and relative eigenvalue error against a
/// dense reference eigensolve of the input.
inline StabilityStudyResult stability_study(const StudyConfig& cfg) {
    const std::size_t n = cfg.n;
    RunConfig rc = cfg.run;
    const std::size_t k = PivotRule::parse(rc.pivot, 0).pivot_size();
    const double delta = rc.delta;

    StabilityStudyResult out;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        rc.seed = cfg.run.seed + trial;
        RngState rng(rc.seed ^ 0x5eedb00bcafef00dull);
        const SymmetricMatrix b = detail::make_two_sided_input(cfg, rng);

        StabilityRow row;
        row.trial = trial;
        row.input_kappa_hat = kappa_hat(b);
        row.kappa_bound = static_cast<double>(n) * static_cast<double>(n) *
                              static_cast<double>(n) * row.input_kappa_hat +
                          3.0 * static_cast<double>(n);

        // tau with the O(.) constant set to 1 and a natural log.
        const double sweep = static_cast<double>(n) * static_cast<double>(n - 1) /
                             (static_cast<double>(k) * static_cast<double>(k - 1));
        const std::size_t tau = static_cast<std::size_t>(
            std::ceil(sweep * std::log(static_cast<double>(n) * row.input_kappa_hat / delta)));
        out.tau = tau;

        rc.max_iters = tau;
        rc.delta = 1e-14;  // no early exit; the study runs the full horizon
        const std::size_t cadence = cfg.record_cadence
                                        ? cfg.record_cadence
                                        : std::max<std::size_t>(1, tau / 200);
        row.sup_kappa_hat = 0.0;
        const RunObserver observer = [&](std::size_t t, const Matrix*, const SymmetricMatrix* bt) {
            if (t % cadence != 0 && t != tau) return;
            row.sup_kappa_hat = std::max(row.sup_kappa_hat, kappa_hat(*bt));
        };
        const RunResult res = run_two_sided(b, rc, observer);

        const SymmetricMatrix final_b = SymmetricMatrix::from_matrix(res.output);
        row.final_dist2 = dist_two(final_b, SymmetricMatrix::identity(n));

        const EigenDecomposition ref = jacobi_eigensolver(b);
        std::vector<double> approx = res.d_prime;
        std::sort(approx.rbegin(), approx.rend());
        for (std::size_t i = 0; i < n; ++i)
            row.max_rel_eigenvalue_error =
                std::max(row.max_rel_eigenvalue_error,
                         std::fabs(ref.values[i] - approx[i]) / std::fabs(ref.values[i]));
        row.scaled_eigenvalue_bound =
            1e3 * std::numeric_limits<double>::epsilon() * row.sup_kappa_hat;

        if (row.sup_kappa_hat > row.kappa_bound) ++out.kappa_violations;
        if (row.final_dist2 <= std::sqrt(delta)) ++out.dist2_passes;
        out.rows.push_back(row);
    }
    return out;
}

struct OrthogonalizationRow {
    std::size_t trial = 0;
    double orthogonality_error = 0.0;  // ||Q^T Q - I||
    double subspace_error = 0.0;       // gap between col(A) and col(Q)
    bool pass = false;
};

struct OrthogonalizationReport {
    std::vector<OrthogonalizationRow> rows;
    std::size_t passes = 0;
    double pass_fraction = 0.0;
};

/// Runs the one-sided engine for its budget and checks both stability
/// conclusions per trial: near-orthonormal output columns and preservation
/// of the input column space.
inline OrthogonalizationReport orthogonalization_acceptance(const StudyConfig& cfg, double delta) {
    if (cfg.run.mode != RunConfig::Mode::one_sided)
        throw std::invalid_argument("orthogonalization_acceptance: one-sided mode required");
    RunConfig rc = cfg.run;
    rc.delta = delta;
    OrthogonalizationReport out;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        rc.seed = cfg.run.seed + trial;
        RngState rng(rc.seed ^ 0x5eedb00bcafef00dull);
        const Matrix a = detail::make_one_sided_input(cfg, rng);
        const RunResult res = run_one_sided(a, rc);

        OrthogonalizationRow row;
        row.trial = trial;
        const EigenDecomposition eig = jacobi_eigensolver(gram(res.output));
        for (double v : eig.values)
            row.orthogonality_error = std::max(row.orthogonality_error, std::fabs(v - 1.0));
        row.subspace_error = subspace_distance(a, res.output);
        row.pass = row.orthogonality_error <= 3.0 * std::sqrt(delta) && row.subspace_error <= delta;
        if (row.pass) ++out.passes;
        out.rows.push_back(row);
    }
    out.pass_fraction = static_cast<double>(out.passes) / static_cast<double>(cfg.trials);
    return out;
}

}  // namespace randpivot::lab
