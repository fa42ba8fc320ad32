#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <randpivot/linalg.hpp>
#include <randpivot/local_transform.hpp>
#include <randpivot/pivoting.hpp>

using namespace randpivot;

namespace {

SymmetricMatrix random_spd(std::size_t n, RngState& rng) {
    Matrix g(2 * n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < 2 * n; ++i) g(i, j) = rng.next_gaussian();
    return gram(g);
}

constexpr FactorizationKind kAllKinds[] = {
    FactorizationKind::unitary, FactorizationKind::upper_triangular,
    FactorizationKind::unit_upper, FactorizationKind::lower_triangular,
    FactorizationKind::general};

void check_structure(const LocalTransform& t, double tol) {
    const std::size_t k = t.s.rows();
    const LocalDiagnostics d = verify_local(t, SymmetricMatrix::identity(k));
    switch (t.kind) {
        case FactorizationKind::unitary:
            break;  // orthogonality checked against the actual block below
        case FactorizationKind::upper_triangular:
            CHECK(d.below_diag_max == 0.0);
            break;
        case FactorizationKind::unit_upper:
            CHECK(d.below_diag_max == 0.0);
            CHECK(d.unit_diag_deviation == 0.0);
            break;
        case FactorizationKind::lower_triangular:
            CHECK(d.above_diag_max == 0.0);
            break;
        case FactorizationKind::general:
            break;
    }
    (void)tol;
}

}  // namespace

TEST_CASE("unit upper transform of a diagonal block is the identity") {
    const SymmetricMatrix d = SymmetricMatrix::diagonal({3, 7, 11});
    const LocalTransform t = make_local_transform(FactorizationKind::unit_upper, d);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t r = 0; r < 3; ++r) CHECK(t.s(r, c) == (r == c ? 1.0 : 0.0));
    CHECK(t.diag_out == std::vector<double>{3, 7, 11});
}

TEST_CASE("upper transform is the inverse Cholesky factor") {
    const double alpha = 0.37;
    const SymmetricMatrix b = SymmetricMatrix::from_rows({{1, alpha}, {alpha, 1}});
    const LocalTransform t = make_local_transform(FactorizationKind::upper_triangular, b);
    const double w = std::sqrt(1.0 - alpha * alpha);
    CHECK(t.s(0, 0) == 1.0);
    CHECK(t.s(0, 1) == Catch::Approx(-alpha / w).epsilon(1e-15));
    CHECK(t.s(1, 1) == Catch::Approx(1.0 / w).epsilon(1e-15));
    CHECK(t.s(1, 0) == 0.0);
    const LocalDiagnostics diag = verify_local(t, b);
    CHECK(diag.off_result < 1e-28);
    CHECK(diag.diag_residual < 1e-14);
}

TEST_CASE("2x2 unitary transform on the forced example") {
    const SymmetricMatrix b = SymmetricMatrix::from_rows({{2, 1}, {1, 2}});
    const LocalTransform t = make_local_transform(FactorizationKind::unitary, b);
    const double c = std::sqrt(0.5);
    // Rotation by pi/4 with the larger value leading.
    CHECK(t.s(0, 0) == Catch::Approx(c).epsilon(1e-15));
    CHECK(t.s(1, 0) == Catch::Approx(c).epsilon(1e-15));
    CHECK(t.s(0, 1) == Catch::Approx(-c).epsilon(1e-15));
    CHECK(t.s(1, 1) == Catch::Approx(c).epsilon(1e-15));
    CHECK(t.diag_out[0] == Catch::Approx(3.0).epsilon(1e-15));
    CHECK(t.diag_out[1] == Catch::Approx(1.0).epsilon(1e-15));
    // det +1 and |angle| <= pi/4
    CHECK(t.s(0, 0) * t.s(1, 1) - t.s(0, 1) * t.s(1, 0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(t.s(0, 0) >= std::sqrt(0.5) - 1e-12);
}

TEST_CASE("non-SPD pivot blocks are rejected with a domain error") {
    const SymmetricMatrix indef = SymmetricMatrix::from_rows({{1, 2}, {2, 1}});
    for (const auto kind : kAllKinds)
        CHECK_THROWS_AS(make_local_transform(kind, indef), std::domain_error);
    const SymmetricMatrix indef3 =
        SymmetricMatrix::from_rows({{1, 0, 3}, {0, 1, 0}, {3, 0, 1}});
    for (const auto kind : kAllKinds)
        CHECK_THROWS_AS(make_local_transform(kind, indef3), std::domain_error);
}

TEST_CASE("every kind diagonalizes random SPD blocks with exact structural zeros") {
    RngState rng(211);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t k = 2 + trial % 7;  // 2..8
        const SymmetricMatrix b = random_spd(k, rng);
        const auto kind = kAllKinds[trial % 5];
        const LocalTransform t = make_local_transform(kind, b);
        REQUIRE(t.kind == kind);
        check_structure(t, 0.0);
        const LocalDiagnostics d = verify_local(t, b);
        const double scale = b.frobenius_norm();
        CHECK(d.off_result <= 1e-24 * scale * scale);
        if (kind == FactorizationKind::unitary)
            CHECK(d.orthogonality_residual <= 1e-12 * static_cast<double>(k));
        if (kind == FactorizationKind::upper_triangular ||
            kind == FactorizationKind::lower_triangular || kind == FactorizationKind::general)
            CHECK(d.diag_residual <= 1e-12);
        for (double v : t.diag_out) CHECK(v > 0.0);
    }
}

TEST_CASE("one-sided and two-sided local applications agree") {
    RngState rng(223);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + trial % 5;
        Matrix a(k + 3, k);
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i < k + 3; ++i) a(i, j) = rng.next_gaussian();
        SymmetricMatrix b = gram(a);
        const auto kind = kAllKinds[trial % 5];
        const LocalTransform t = make_local_transform(kind, b);
        apply_one_sided_update(a, PivotSet::full(k), t.s);
        apply_two_sided_update(b, PivotSet::full(k), t.s);
        const SymmetricMatrix g = gram(a);
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i <= j; ++i)
                CHECK(g(i, j) == Catch::Approx(b(i, j)).margin(1e-12 * (1.0 + b.frobenius_norm())));
    }
}

TEST_CASE("gs2 rule") {
    const LocalTransform id = rule_gs2(0.0);
    CHECK(id.s(0, 0) == 1.0);
    CHECK(id.s(1, 1) == 1.0);
    CHECK(id.s(0, 1) == 0.0);
    CHECK(id.s(1, 0) == 0.0);

    // Unit vectors at 60 degrees: the second column becomes e2.
    const double alpha = 0.5;
    Matrix a = Matrix::from_rows({{1.0, 0.5}, {0.0, std::sqrt(3.0) / 2.0}});
    const LocalTransform t = rule_gs2(alpha);
    apply_one_sided_update(a, PivotSet({0, 1}), t.s);
    CHECK(a(0, 1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(a(1, 1) == Catch::Approx(1.0).epsilon(1e-15));

    // Exactly the upper-kind construction on the unit-diagonal block.
    RngState rng(227);
    for (int trial = 0; trial < 100; ++trial) {
        const double al = 2.0 * rng.next_double() - 1.0;
        if (std::fabs(al) >= 1.0 - 1e-12) continue;
        const SymmetricMatrix b = SymmetricMatrix::from_rows({{1, al}, {al, 1}});
        const LocalTransform viakind = make_local_transform(FactorizationKind::upper_triangular, b);
        const LocalTransform viarule = rule_gs2(al);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t r = 0; r < 2; ++r)
                CHECK(viarule.s(r, c) == Catch::Approx(viakind.s(r, c)).epsilon(1e-14));
    }

    CHECK_THROWS_AS(rule_gs2(1.0), std::domain_error);
    CHECK_THROWS_AS(rule_gs2(-1.0 + 1e-16), std::domain_error);
}

TEST_CASE("nsvd2 rule") {
    // Orthogonal unit inputs stay orthonormal (rotated to the bisector frame).
    const LocalTransform t0 = rule_nsvd2(0.0);
    const SymmetricMatrix id2 = SymmetricMatrix::identity(2);
    CHECK(verify_local(t0, id2).off_result < 1e-30);
    CHECK(verify_local(t0, id2).diag_residual < 1e-15);

    // 60 degrees: first output is the 30-degree bisector direction.
    Matrix a = Matrix::from_rows({{1.0, 0.5}, {0.0, std::sqrt(3.0) / 2.0}});
    const LocalTransform t = rule_nsvd2(0.5);
    apply_one_sided_update(a, PivotSet({0, 1}), t.s);
    CHECK(a(0, 0) == Catch::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-15));
    CHECK(a(1, 0) == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("nsvd2x2 closed form equals applying nsvd2 twice") {
    RngState rng(229);
    for (int trial = 0; trial < 500; ++trial) {
        const double alpha = 1.9 * (rng.next_double() - 0.5);
        const LocalTransform once = rule_nsvd2(alpha);
        // After one application of the rule the pair is orthonormal, so the
        // second application sees alpha = 0.
        const LocalTransform again = rule_nsvd2(0.0);
        const Matrix composed = multiply(once.s, again.s);
        const LocalTransform closed = rule_nsvd2_twice(alpha);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t r = 0; r < 2; ++r)
                CHECK(closed.s(r, c) == Catch::Approx(composed(r, c)).margin(1e-12));
    }
    const LocalTransform t0 = rule_nsvd2_twice(0.0);
    // alpha = 0 gives the identity up to column signs.
    CHECK(std::fabs(t0.s(0, 0)) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(std::fabs(t0.s(1, 1)) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(t0.s(1, 0) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("pair rules output orthonormal columns across the alpha range") {
    RngState rng(233);
    for (int trial = 0; trial < 10000; ++trial) {
        const double alpha = 1.98 * (rng.next_double() - 0.5);
        const SymmetricMatrix b = SymmetricMatrix::from_rows({{1, alpha}, {alpha, 1}});
        for (const LocalTransform& t : {rule_gs2(alpha), rule_nsvd2(alpha), rule_nsvd2_twice(alpha)}) {
            const LocalDiagnostics d = verify_local(t, b);
            CHECK(d.off_result < 1e-28);
            CHECK(d.diag_residual < 1e-14);
        }
    }
}

TEST_CASE("verify_local reports injected faults") {
    const SymmetricMatrix d = SymmetricMatrix::diagonal({2, 5});
    LocalTransform t{Matrix::identity(2), FactorizationKind::unit_upper, {2, 5}};
    CHECK(verify_local(t, d).off_result == 0.0);
    CHECK(verify_local(t, d).diag_residual == 0.0);

    t.s(0, 1) = 1e-3;  // inject an off-diagonal perturbation
    const LocalDiagnostics diag = verify_local(t, d);
    CHECK(diag.above_diag_max == 1e-3);
    // (S^T D S)_{01} = 1e-3 * d_00 = 2e-3, so off = 2 * (2e-3)^2.
    CHECK(diag.off_result == Catch::Approx(2.0 * 4e-6).epsilon(1e-12));
}

TEST_CASE("kind grammar") {
    CHECK(parse_kind("evd") == FactorizationKind::unitary);
    CHECK(parse_kind("svd") == FactorizationKind::unitary);
    CHECK(parse_kind("cholesky") == FactorizationKind::upper_triangular);
    CHECK(parse_kind("qr") == FactorizationKind::upper_triangular);
    CHECK(parse_kind("ldl") == FactorizationKind::unit_upper);
    CHECK(parse_kind("ql") == FactorizationKind::lower_triangular);
    CHECK(parse_kind("orth") == FactorizationKind::general);
    CHECK_THROWS_AS(parse_kind("lu"), std::invalid_argument);

    const KindSpec plain = parse_kind_spec("qr");
    CHECK(plain.kind == FactorizationKind::upper_triangular);
    CHECK(plain.rule == PairRule::none);
    const KindSpec gs = parse_kind_spec("qr,rule=gs2");
    CHECK(gs.rule == PairRule::gs2);
    const KindSpec nsvd = parse_kind_spec("orth,rule=nsvd2");
    CHECK(nsvd.rule == PairRule::nsvd2);
    CHECK(parse_kind_spec("orth,rule=nsvd2x2").rule == PairRule::nsvd2x2);
    CHECK_THROWS_AS(parse_kind_spec("evd,rule=gs2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kind_spec("qr,rule=nsvd2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kind_spec("qr,rule=banana"), std::invalid_argument);
}
