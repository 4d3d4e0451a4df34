import math

import numpy as np
import pytest

from peribond.pipeline import (
    BlowupError,
    blowup,
    compute_blowup,
    estimate_beta,
    local_density,
    verify_limit_invariances,
)
from peribond.potentials import PairwisePotential, make_power_bond
from peribond.quadrature import build_circle_rule, build_rule, build_sphere_rule, mean_over_sphere


def quadratic_bond(dim):
    sigma = 2 * math.pi if dim == 2 else 4 * math.pi
    return make_power_bond(dim / sigma, 2.0, 2.0, dim=dim)


def test_blowup_homogeneous_is_identity():
    w = quadratic_bond(3)
    x = np.array([1.0, 0.5, -0.25])
    y = np.array([0.5, 2.0, 1.0])
    assert blowup(w, 0.0, x, y) == pytest.approx(w(x, y), rel=1e-12)
    w21 = make_power_bond(1.5, 2.0, 1.0, dim=2)
    x2, y2 = np.array([2.0, 0.0]), np.array([1.0, 1.0])
    assert blowup(w21, 1.0, x2, y2) == pytest.approx(1.5 * 2.0 / 2.0, rel=1e-12)


def test_blowup_wrong_degree_diverges():
    w = quadratic_bond(2)
    with pytest.raises(BlowupError):
        blowup(w, 1.0, np.array([1.0, 0.0]), np.array([2.0, 0.0]))


def test_blowup_slow_tail_needs_depth():
    # w(t x, t y) = t^2 |y|^2 (1 + t |x|): degree 2 with an O(t) correction.
    # The default grid still moves by ~2^-12 at its finest t and is rejected;
    # a deeper grid converges and the Aitken step removes the remaining tail.
    w = PairwisePotential.from_radial_profile(
        lambda r, s: s * s * (1.0 + r), beta=2.0, ref_dim=2, def_dim=2
    )
    x, y = np.array([1.0, 0.0]), np.array([2.0, 0.0])
    with pytest.raises(BlowupError):
        blowup(w, 2.0, x, y)
    assert blowup(w, 2.0, x, y, k_range=(20, 44)) == pytest.approx(4.0, abs=1e-9)


def test_estimate_beta_powers():
    assert estimate_beta(make_power_bond(1.0, 4.0, 2.0)) == pytest.approx(2.0, abs=1e-6)
    assert estimate_beta(quadratic_bond(2)) == pytest.approx(0.0, abs=1e-6)


def test_estimate_beta_rejects_mixed_powers():
    w = PairwisePotential.from_radial_profile(
        lambda r, s: s * s / (r * r) + s**4 / (r * r), ref_dim=3, def_dim=3
    )
    with pytest.raises(ValueError):
        estimate_beta(w)


def test_compute_blowup_degree_conflict():
    w = quadratic_bond(2)
    with pytest.raises(ValueError):
        compute_blowup(w, beta=1.0)


def test_compute_blowup_estimates_when_unknown():
    w = PairwisePotential.from_radial_profile(
        lambda r, s: s**4 / r**2, ref_dim=2, def_dim=2
    )
    limit = compute_blowup(w)
    assert limit.beta_hat == pytest.approx(2.0, abs=1e-6)
    assert limit.diagnostics["extrapolation_residual"] < 1e-10


def test_blowup_result_homogeneity():
    limit = compute_blowup(quadratic_bond(3))
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    base = limit.evaluate(x, y)
    for t in (0.5, 0.25):
        scaled = limit.evaluate(t * x, t * y)
        assert scaled == pytest.approx(t**limit.beta_hat * base, rel=1e-6)


@pytest.mark.parametrize("dim", [2, 3])
def test_local_density_recovers_frobenius_squared(dim):
    limit = compute_blowup(quadratic_bond(dim))
    rule = build_rule(dim, 32)
    rng = np.random.default_rng(17)
    for _ in range(25):
        a = rng.standard_normal((dim, dim))
        assert local_density(limit, a, rule) == pytest.approx(
            float(np.sum(a * a)), abs=1e-8
        )


def test_local_density_rectangular_gradient():
    # 3x2 gradient: directions live on the circle, images in R^3
    w = PairwisePotential.from_radial_profile(
        lambda r, s: s * s / (r * r), beta=0.0, ref_dim=2, def_dim=3
    )
    limit = compute_blowup(w)
    a = np.array([[1.0, 0.0], [0.0, 2.0], [0.5, 0.5]])
    got = local_density(limit, a, build_circle_rule(64))
    assert got == pytest.approx(2 * math.pi * mean_over_sphere(
        build_circle_rule(64), lambda z: np.sum((z @ a.T) ** 2, axis=-1)
    ), rel=1e-12)


def test_local_density_quartic_profile():
    # oracle: closed-form angular integral of (1 + 3 sin^2)^2 gives 59/8,
    # so the surface integral is 2*pi * 59/8 = 59*pi/4
    w = PairwisePotential.from_radial_profile(
        lambda r, s: s**4, beta=4.0, ref_dim=2, def_dim=2
    )
    limit = compute_blowup(w)
    got = local_density(limit, np.diag([1.0, 2.0]), build_circle_rule(64))
    assert got == pytest.approx(59.0 * math.pi / 4.0, rel=1e-12)


def test_local_density_at_zero_matrix():
    limit = compute_blowup(quadratic_bond(2))
    assert local_density(limit, np.zeros((2, 2)), build_circle_rule(16)) == 0.0


def test_local_density_dimension_guard():
    limit = compute_blowup(quadratic_bond(2))
    with pytest.raises(ValueError):
        local_density(limit, np.eye(3), build_circle_rule(16))


def test_local_density_matches_sigma_times_mean():
    w = PairwisePotential.from_radial_profile(
        lambda r, s: s**4, beta=4.0, ref_dim=3, def_dim=3
    )
    limit = compute_blowup(w)
    rule = build_sphere_rule(32)
    a = np.diag([1.0, 2.0, 0.5])
    integral = local_density(limit, a, rule)
    mean = mean_over_sphere(
        rule, lambda z: np.linalg.norm(z @ a.T, axis=-1) ** 4
    )
    assert integral == pytest.approx(rule.measure * mean, rel=1e-12)


def test_local_density_scaling_in_gradient():
    # Scaling A only rescales the deformed offsets, so the density inherits
    # the deformed-slot degree p of the bond (not the pair degree p - q).
    p = 3.0
    w = make_power_bond(0.7, p, 1.0, dim=2)
    limit = compute_blowup(w)
    rule = build_circle_rule(64)
    a = np.array([[1.0, 0.3], [-0.2, 1.5]])
    base = local_density(limit, a, rule)
    for t in (0.5, 2.0):
        got = local_density(limit, t * a, rule)
        assert got == pytest.approx(t**p * base, rel=1e-7)


def test_local_density_quadrature_refinement():
    limit = compute_blowup(quadratic_bond(3))
    a = np.diag([1.0, 2.0, 3.0]) * (4.0 / math.sqrt(14.0))  # |A| = 4
    coarse = local_density(limit, a, build_sphere_rule(32))
    fine = local_density(limit, a, build_sphere_rule(64))
    assert abs(coarse - fine) < 1e-8


def test_invariance_check_passes_for_radial_bond():
    limit = compute_blowup(quadratic_bond(3))
    rule = build_sphere_rule(32)
    report = verify_limit_invariances(limit, np.diag([1.0, 2.0, 3.0]), 20, 0, rule)
    assert report.passed
    assert report.max_abs_deviation <= report.tolerance


def test_invariance_exact_at_identity_rotations():
    limit = compute_blowup(quadratic_bond(3))
    rule = build_sphere_rule(16)
    a = np.diag([1.0, 2.0, 3.0])
    eye = np.eye(3)
    assert local_density(limit, eye @ a @ eye, rule) == local_density(limit, a, rule)


def test_invariance_check_fails_for_anisotropic_control():
    def aniso(x, y):
        return x[..., 0] ** 2 * np.sum(y * y, axis=-1)

    w = PairwisePotential.from_evaluator(aniso, beta=4.0, ref_dim=3, def_dim=3)
    limit = compute_blowup(w)
    report = verify_limit_invariances(
        limit, np.diag([1.0, 2.0, 3.0]), 20, 0, build_sphere_rule(32)
    )
    assert not report.passed
