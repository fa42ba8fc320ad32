#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <randpivot/generators.hpp>
#include <randpivot/linalg.hpp>
#include <randpivot/local_transform.hpp>
#include <randpivot/metrics.hpp>
#include <randpivot/pivoting.hpp>

using namespace randpivot;

namespace {

SymmetricMatrix random_spd(std::size_t n, RngState& rng) {
    Matrix g(2 * n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < 2 * n; ++i) g(i, j) = rng.next_gaussian();
    return gram(g);
}

}  // namespace

TEST_CASE("off_frobenius") {
    CHECK(off_frobenius(SymmetricMatrix::diagonal({3, -1, 7})) == 0.0);
    // Graded 2x2 family at t = 2: off is 2 t^2 = 8 raw, 2 t^{-2} = 0.5 normalized.
    const SymmetricMatrix t2 = SymmetricMatrix::from_rows({{4, 2}, {2, 4}});
    CHECK(off_frobenius(t2) == 8.0);
    CHECK(off_frobenius(diagonal_normalize(t2)) == 0.5);
}

TEST_CASE("gamma on worked examples") {
    CHECK(gamma(SymmetricMatrix::diagonal({0.5, 2, 7})) ==
          Catch::Approx(0.0).margin(3 * 1e-14));

    // Graded 2x2 family at t = 2: gamma = 2 / (t^2 - 1) = 2/3.
    const SymmetricMatrix t2 = SymmetricMatrix::from_rows({{4, 2}, {2, 4}});
    CHECK(gamma(t2) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));

    // Indefinite matrix with zero potential: zero potential does not imply
    // diagonal without positive definiteness.
    const SymmetricMatrix counter = SymmetricMatrix::from_rows({{1, 2, 1}, {2, 1, 1}, {1, 1, 1}});
    CHECK(gamma(counter) == Catch::Approx(0.0).margin(1e-12));

    const SymmetricMatrix singular = SymmetricMatrix::from_rows({{1, 1}, {1, 1}});
    CHECK_THROWS_AS(gamma(singular), std::domain_error);
}

TEST_CASE("gamma is nonnegative on SPD and zero only for diagonal") {
    RngState rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(9);
        const SymmetricMatrix b = random_spd(n, rng);
        const double g = gamma(b);
        CHECK(g >= -1e-12 * static_cast<double>(n));
        if (off_frobenius(diagonal_normalize(b)) > 1e-10) CHECK(g > 1e-10);
    }
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> d(3 + rng.next_below(6));
        for (double& v : d) v = 0.1 + rng.next_double() * 9.0;
        CHECK(gamma(SymmetricMatrix::diagonal(d)) == Catch::Approx(0.0).margin(1e-10));
    }
}

TEST_CASE("gamma matches the Jensen gap of the normalized spectrum") {
    RngState rng(103);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.next_below(11);
        const SymmetricMatrix b = random_spd(n, rng);
        const EigenDecomposition eig = jacobi_eigensolver(diagonal_normalize(b));
        double mean_inv = 0.0, mean = 0.0;
        for (double v : eig.values) {
            mean_inv += 1.0 / v;
            mean += v;
        }
        mean_inv /= static_cast<double>(n);
        mean /= static_cast<double>(n);
        CHECK(mean == Catch::Approx(1.0).epsilon(1e-12));  // unit trace after normalization
        const double jensen_gap = mean_inv - 1.0 / mean;
        CHECK(gamma(b) / static_cast<double>(n) ==
              Catch::Approx(jensen_gap).epsilon(1e-10).margin(1e-12));
    }
}

TEST_CASE("gamma is invariant under diagonal scaling and symmetric permutation") {
    RngState rng(107);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + rng.next_below(6);
        const SymmetricMatrix b = random_spd(n, rng);
        const double g = gamma(b);

        SymmetricMatrix scaled(n);
        std::vector<double> d(n);
        for (double& v : d) v = 0.1 + 5.0 * rng.next_double();
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i <= j; ++i) scaled.set(i, j, d[i] * b(i, j) * d[j]);
        CHECK(gamma(scaled) == Catch::Approx(g).epsilon(1e-10).margin(1e-12));

        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        for (std::size_t i = 0; i + 1 < n; ++i)
            std::swap(perm[i], perm[i + rng.next_below(n - i)]);
        SymmetricMatrix permuted(n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i <= j; ++i) permuted.set(i, j, b(perm[i], perm[j]));
        CHECK(gamma(permuted) == Catch::Approx(g).epsilon(1e-10).margin(1e-12));
    }
}

TEST_CASE("kappa_hat on worked examples") {
    CHECK(kappa_hat(SymmetricMatrix::diagonal({5, 0.2, 3})) == Catch::Approx(1.0).epsilon(1e-12));
    const SymmetricMatrix half = SymmetricMatrix::from_rows({{1, 0.5}, {0.5, 1}});
    CHECK(kappa_hat(half) == Catch::Approx(3.0).epsilon(1e-13));  // eigenvalues 1.5, 0.5
    CHECK_THROWS_AS(kappa_hat(SymmetricMatrix::from_rows({{1, 3}, {3, 1}})), std::domain_error);
}

TEST_CASE("kappa_hat is at most n times kappa") {
    RngState rng(109);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.next_below(9);
        const SymmetricMatrix b = random_spd(n, rng);
        const EigenDecomposition eig = jacobi_eigensolver(b);
        const double kappa = eig.values.front() / eig.values.back();
        CHECK(kappa_hat(b) <= static_cast<double>(n) * kappa + 1e-10);
    }
}

TEST_CASE("closed-form bounds at pinned points") {
    CHECK(bound_off_from_gamma(0.0) == 0.0);
    CHECK(bound_off_from_gamma(2.0 / 3.0) == Catch::Approx(1.4768336246810201).epsilon(1e-14));

    const auto [lo0, hi0] = bound_kappa_from_gamma(0.0, 5);
    CHECK(lo0 == 1.0);
    CHECK(hi0 == 1.0);
    const auto [lo, hi] = bound_kappa_from_gamma(2.0, 4);
    CHECK(lo == Catch::Approx(1.5).epsilon(1e-15));
    CHECK(hi == Catch::Approx(9.0).epsilon(1e-14));

    CHECK(bound_norm_from_gamma(0.0) == 1.0);
    CHECK(bound_norm_from_gamma(2.0 / 3.0) == Catch::Approx(2.2152504370215302).epsilon(1e-14));

    CHECK_THROWS_AS(bound_off_from_gamma(-1.0), std::invalid_argument);
    // The t = 2 family satisfies the off bound: off_hat = 0.5 <= 1.4768...
    const SymmetricMatrix t2 = SymmetricMatrix::from_rows({{4, 2}, {2, 4}});
    CHECK(off_frobenius(diagonal_normalize(t2)) <= bound_off_from_gamma(gamma(t2)));
}

TEST_CASE("all three bounds hold across a random SPD sweep") {
    RngState rng(113);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 2 + trial % 7;  // 2..8
        const SymmetricMatrix b = random_spd(n, rng);
        const double g = gamma(b);
        const PotentialReport rep = potential_report(b);
        const double off_hat = off_frobenius(diagonal_normalize(b));
        const auto ok = [](double lhs, double rhs) { return lhs <= rhs + 1e-9 * (1.0 + rhs); };
        CHECK(ok(off_hat, bound_off_from_gamma(g)));
        const auto [lo, hi] = bound_kappa_from_gamma(g, n);
        CHECK(ok(lo, rep.kappa_hat));
        CHECK(ok(rep.kappa_hat, hi));
        const double norm_max =
            std::max(rep.kappa_hat * rep.sigma_min_hat, 1.0 / rep.sigma_min_hat);
        CHECK(ok(norm_max, bound_norm_from_gamma(g)));
    }
}

TEST_CASE("dist_one") {
    RngState rng(127);
    Matrix a(4, 3);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 4; ++i) a(i, j) = rng.next_gaussian();
    Matrix scaled = a;
    for (std::size_t j = 0; j < 3; ++j) {
        const double c = 0.1 + 3.0 * rng.next_double();
        for (std::size_t i = 0; i < 4; ++i) scaled(i, j) *= c;
    }
    CHECK(dist_one(a, scaled) == Catch::Approx(0.0).margin(1e-15));

    const Matrix e1 = Matrix::from_rows({{1}, {0}});
    const Matrix e2 = Matrix::from_rows({{0}, {1}});
    CHECK(dist_one(e1, e2) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));

    Matrix zero(2, 1);
    CHECK_THROWS_AS(dist_one(e1, zero), std::domain_error);
}

TEST_CASE("dist_two") {
    RngState rng(131);
    const SymmetricMatrix b = random_spd(5, rng);
    SymmetricMatrix rescaled(5);
    std::vector<double> d(5);
    for (double& v : d) v = 0.2 + 4.0 * rng.next_double();
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t i = 0; i <= j; ++i) rescaled.set(i, j, d[i] * b(i, j) * d[j]);
    CHECK(dist_two(b, rescaled) == Catch::Approx(0.0).margin(1e-14));

    const SymmetricMatrix eye = SymmetricMatrix::identity(2);
    const SymmetricMatrix nudged = SymmetricMatrix::from_rows({{1, 1e-3}, {1e-3, 1}});
    CHECK(dist_two(eye, nudged) == Catch::Approx(1e-3).epsilon(1e-12));

    // Against the identity it reads off the largest normalized off-diagonal.
    const SymmetricMatrix bh = diagonal_normalize(b);
    double largest = 0.0;
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t i = 0; i < j; ++i) largest = std::max(largest, std::fabs(bh(i, j)));
    CHECK(dist_two(b, SymmetricMatrix::identity(5)) == Catch::Approx(largest).epsilon(1e-13));

    CHECK_THROWS_AS(dist_two(SymmetricMatrix::from_rows({{-1.0, 0.0}, {0.0, 1.0}}), eye),
                    std::domain_error);
}

TEST_CASE("column drift controls Gram drift") {
    RngState rng(137);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.next_below(5);
        Matrix a(n + 3, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n + 3; ++i) a(i, j) = rng.next_gaussian();
        Matrix a2 = a;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n + 3; ++i) a2(i, j) += 1e-4 * rng.next_gaussian();
        const double d1 = dist_one(a, a2);
        const double d2 = dist_two(gram(a), gram(a2));
        CHECK(d2 <= 2.0 * d1 + d1 * d1 + 1e-14);
    }
}

TEST_CASE("subspace_distance") {
    RngState rng(139);
    Matrix a(6, 3);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 6; ++i) a(i, j) = rng.next_gaussian();

    // Right-multiplying by a nonsingular matrix preserves the column space.
    Matrix m(3, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < 3; ++i) m(i, j) = rng.next_gaussian();
        m(j, j) += 2.0;
    }
    CHECK(subspace_distance(a, multiply(a, m)) == Catch::Approx(0.0).margin(1e-12));

    const Matrix e1 = Matrix::from_rows({{1}, {0}});
    const Matrix e2 = Matrix::from_rows({{0}, {1}});
    CHECK(subspace_distance(e1, e2) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(subspace_distance(e1, e2) == subspace_distance(e2, e1));

    // A single pivot update is an exact column operation: the span is kept.
    Matrix updated = a;
    SymmetricMatrix bjj(2);
    bjj.set(0, 0, gram(a)(0, 0));
    bjj.set(0, 1, gram(a)(0, 2));
    bjj.set(1, 1, gram(a)(2, 2));
    apply_one_sided_update(updated, PivotSet({0, 2}),
                           make_local_transform(FactorizationKind::general, bjj).s);
    CHECK(subspace_distance(a, updated) < 1e-12);

    Matrix rank_def(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        rank_def(i, 0) = 1.0;
        rank_def(i, 1) = 2.0;
    }
    CHECK_THROWS_AS(subspace_distance(rank_def, rank_def), std::domain_error);
}
