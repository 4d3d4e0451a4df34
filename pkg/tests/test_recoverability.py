import math

import numpy as np
import pytest

from peribond.linalg import INF, random_rotation
from peribond.potentials import (
    ScalarProfile,
    affine_frobenius_squared,
    frobenius_power,
    frobenius_squared,
    make_incompressible_mr,
    make_mooney_rivlin,
)
from peribond.quadrature import build_circle_rule, build_sphere_rule, sphere_measure
from peribond.recoverability import (
    IndeterminateResidualError,
    cubic_mean_lower_constant,
    default_test_matrices,
    extract_candidate,
    jensen_counterexample_suite,
    mooney_rivlin_inequality_check,
    recoverability_residual,
    roundtrip_check,
)

RULE3 = build_sphere_rule(32)
RULE2 = build_circle_rule(64)

# Frozen from the closed-form angular integral (1 + 3 sin^2)^2 -> 59/8:
# lhs = 25, rhs = 4 * 59/8 = 29.5 for W = |A|^4 at diag(1, 2).
QUARTIC_RESIDUAL = -4.5

# Frozen from order-64 and order-128 rules agreeing to 4e-12.
MR_RESIDUAL_AT_STRETCH = -14.319531092277245


def test_residual_zero_for_frobenius_squared():
    rng = np.random.default_rng(21)
    density = frobenius_squared()
    for _ in range(20):
        a = rng.standard_normal((3, 3))
        assert abs(recoverability_residual(density, a, RULE3)) < 1e-9


def test_residual_quartic_reference():
    got = recoverability_residual(frobenius_power(4.0), np.diag([1.0, 2.0]), RULE2)
    assert got == pytest.approx(QUARTIC_RESIDUAL, abs=1e-6)


def test_residual_incompressible_one_sided_infinity():
    density = make_incompressible_mr(1.0, 1.0)
    a = np.diag([2.0, 0.5, 1.0])  # det 1: finite value, infinite sphere mean
    got = recoverability_residual(density, a, RULE3)
    assert got == -INF


def test_residual_indeterminate_when_both_sides_infinite():
    density = make_incompressible_mr(1.0, 0.0)
    with pytest.raises(IndeterminateResidualError):
        recoverability_residual(density, np.diag([2.0, 1.0, 1.0]), RULE3)


def test_residual_requires_square():
    with pytest.raises(ValueError):
        recoverability_residual(frobenius_squared(), np.ones((3, 2)), RULE2)


def test_residual_vanishes_on_identity_multiples():
    # |t I z| = t up to the 1e-14 node normalization, so both sides agree to
    # floating-point noise (exact equality is not attainable in floats)
    density = make_mooney_rivlin(1.0, 1.0, ScalarProfile.well())
    for t in (0.0, 0.5, 1.0, 2.0, 3.5):
        res = recoverability_residual(density, t * np.eye(3), RULE3)
        assert abs(res) < 5e-13 * (1.0 + abs(density(t * np.eye(3))))


def test_residual_rotation_invariance():
    density = make_mooney_rivlin(1.0, 1.0, ScalarProfile.well())
    a = np.diag([1.0, 2.0, 0.5])
    base = recoverability_residual(density, a, RULE3)
    for k in range(10):
        r1 = random_rotation(3, 2 * k)
        r2 = random_rotation(3, 2 * k + 1)
        got = recoverability_residual(density, r1 @ a @ r2, RULE3)
        assert abs(got - base) < 1e-8 * (1.0 + abs(base))


def test_extract_candidate_formulas():
    cand2 = extract_candidate(frobenius_squared(), 2)
    for t in (0.0, 0.5, 1.0, 2.0):
        assert cand2(t) == pytest.approx(2.0 * t * t / (2 * math.pi))
    cand3 = extract_candidate(frobenius_squared(), 3)
    assert cand3(2.0) == pytest.approx(3.0 * 4.0 / (4 * math.pi))
    assert cand3(0.0) == 0.0


def test_default_battery_composition():
    mats = default_test_matrices(3, seed=0)
    assert len(mats) == 27
    assert any(np.allclose(m, 2.0 * np.eye(3)) for m in mats)
    assert any(np.allclose(m, np.diag([2.0, 0.5, 1.0])) for m in mats)
    assert any(np.allclose(m, np.diag([1.0, 2.0, 3.0])) for m in mats)
    # deterministic battery
    again = default_test_matrices(3, seed=0)
    assert all(np.array_equal(a, b) for a, b in zip(mats, again))


def test_roundtrip_consistent_for_affine_frobenius():
    report = roundtrip_check(affine_frobenius_squared(1.0, 2.0), RULE3)
    assert report.verdict == "consistent"
    assert report.max_abs_residual <= 1e-8
    assert all(r.within_tol for r in report.rows)


def test_roundtrip_residuals_stay_small_under_refinement():
    for order in (8, 16, 32):
        report = roundtrip_check(
            affine_frobenius_squared(1.0, 2.0), build_sphere_rule(order)
        )
        assert report.max_abs_residual <= 1e-9


def test_roundtrip_violated_for_mooney_rivlin():
    density = make_mooney_rivlin(1.0, 1.0, ScalarProfile.well())
    stretch = np.diag([2.0, 0.5, 1.0])
    report = roundtrip_check(density, RULE3, test_set=[stretch])
    assert report.verdict == "violated"
    row = report.rows[0]
    assert abs(row.residual) > 0.1
    assert row.residual == pytest.approx(MR_RESIDUAL_AT_STRETCH, abs=1e-6)


def test_roundtrip_infinite_violation_verdict():
    density = make_incompressible_mr(1.0, 1.0)
    report = roundtrip_check(density, RULE3)
    assert report.verdict == "infinite-violation"
    kinds = {r.classification for r in report.rows}
    assert "infinite-violation" in kinds
    assert any("det A - 1" in note for note in report.notes)


def test_roundtrip_workers_match_serial():
    density = make_mooney_rivlin(1.0, 1.0, ScalarProfile.well())
    serial = roundtrip_check(density, RULE3, workers=1)
    threaded = roundtrip_check(density, RULE3, workers=4)
    for a, b in zip(serial.rows, threaded.rows):
        assert a.residual == b.residual or (
            math.isnan(a.residual) and math.isnan(b.residual)
        )


def test_report_serialization(tmp_path):
    report = roundtrip_check(make_incompressible_mr(1.0, 0.0), RULE3)
    blob = report.to_dict()
    assert blob["verdict"] == report.verdict
    assert any(
        row["residual"] in ("inf", "-inf") or row["classification"] == "indeterminate"
        for row in blob["rows"]
    )
    path = tmp_path / "rows.csv"
    report.write_csv(path)
    text = path.read_text().splitlines()
    assert text[0].startswith("index,matrix_row_major")
    assert len(text) == 1 + len(report.rows)


def test_jensen_suite_margins():
    report = jensen_counterexample_suite(3, RULE3)
    assert report.all_ok
    by_key = {(r.case, r.profile, tuple(np.diag(r.matrix))): r for r in report.rows}
    strict = by_key[("frobenius", "t^2", (1.0, 2.0, 1.0))]
    # closed form: 9 * mean (1 + 3 z2^2)^2 - 36 = 9 * 24/5 - 36 = 7.2
    assert strict.margin == pytest.approx(7.2, abs=1e-9)
    flat = by_key[("frobenius", "t^2", (1.0, 1.0, 1.0))]
    assert abs(flat.margin) <= 1e-10
    concave = by_key[("frobenius", "-t^2", (1.0, 2.0, 1.0))]
    assert concave.margin == pytest.approx(-7.2, abs=1e-9)
    cof = by_key[("cofactor", "t^2", (2.0, 0.5, 1.0))]
    assert cof.margin > 0.0


def test_jensen_suite_two_dimensional():
    report = jensen_counterexample_suite(2, RULE2)
    assert report.all_ok
    assert all(r.case == "frobenius" for r in report.rows)


def test_cubic_mean_constant_close_to_isotropic_floor():
    c = cubic_mean_lower_constant(RULE3)
    floor = 3.0**-1.5  # attained at the isotropic unit matrix
    assert floor - 1e-9 <= c <= floor + 1e-2


def test_stretch_scan_cof_branch_finds_failure():
    lams = np.linspace(1.0, 100.0, 200)
    scan = mooney_rivlin_inequality_check(
        1.0, 1.0, ScalarProfile.power(0.0, 0.0), lams, rule=RULE3
    )
    assert scan.branch == "cof-term"
    assert scan.found and scan.lambda_star <= 100.0
    assert scan.lhs_at_failure < scan.rhs_at_failure


def test_stretch_scan_growth_branch_finds_failure():
    lams = np.linspace(1.0, 100.0, 200)
    scan = mooney_rivlin_inequality_check(
        1.0, 0.0, ScalarProfile.well(), lams, rule=RULE3
    )
    assert scan.branch == "growth"
    assert scan.found and scan.lambda_star <= 100.0


def test_stretch_scan_symmetric_point_no_violation():
    # with a/c = 1 the test matrix at lam = 1 is the identity and the
    # inequality holds with equality; nothing fails there
    scan = mooney_rivlin_inequality_check(
        1.0, 1.0, ScalarProfile.power(0.0, 0.0), [1.0], rule=RULE3, c_value=1.0
    )
    assert not scan.found


def test_stretch_scan_constant_profile_inconclusive():
    scan = mooney_rivlin_inequality_check(
        1.0, 0.0, ScalarProfile.power(0.0, 0.0), np.linspace(1, 50, 50), rule=RULE3
    )
    assert scan.inconclusive


def test_scan_report_serializes():
    scan = mooney_rivlin_inequality_check(
        1.0, 1.0, ScalarProfile.power(0.0, 0.0), [1.0, 2.0], rule=RULE3
    )
    blob = scan.to_dict()
    assert blob["branch"] == "cof-term"
    assert len(blob["rows"]) == 2


def test_candidate_reproduces_mean_route():
    # integrating the extracted profile over directions equals the sphere
    # mean of the density on scaled identities, by construction
    density = make_mooney_rivlin(1.0, 1.0, ScalarProfile.well())
    a = np.diag([1.5, 1.0, 0.5])
    cand = extract_candidate(density, 3)
    stretches = np.linalg.norm(RULE3.nodes @ a.T, axis=-1)
    integral = RULE3.integrate(np.asarray(cand(stretches)))
    direct = density(a) - recoverability_residual(density, a, RULE3)
    assert integral == pytest.approx(direct, rel=1e-12)
