"""Recoverability screening of stored-energy densities.

A density is recoverable from an isotropic, frame-indifferent bond model
exactly when it satisfies the mean-value identity: its value at A equals
the sphere mean of its values on the scaled identities |Az| I. The module
evaluates that identity on batteries of test matrices, extracts the
candidate radial bond profile W(tI)/sigma, reproduces the classical
counterexample inequalities (Jensen margins for profiles of |A|^2 and of
|cof A|), and runs the large-stretch scan that rules out Mooney-Rivlin
densities.

Sampling refutes or accumulates consistency evidence; it cannot certify
the identity for every matrix.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import INF
from .potentials import DET_TOL, ScalarProfile, StoredEnergy
from .quadrature import SphereQuadrature, build_rule, sphere_measure

#: residual tolerance |W(A)| -> 1e-6 * (1 + |W(A)|); quadrature error at the
#: default orders is below 1e-8 on the built-in zoo, two orders of margin.
RESIDUAL_REL_TOL = 1e-6


class IndeterminateResidualError(ArithmeticError):
    """Both sides of the mean-value identity are infinite at this matrix."""


def scaled_identity_mean(density: StoredEnergy, a, rule: SphereQuadrature) -> float:
    """Sphere mean of W(|Az| I); +inf as soon as one node is infinite."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    if n != rule.dim:
        raise ValueError(f"matrix is {n}-column but rule lives on S^{rule.dim - 1}")
    stretches = np.linalg.norm(rule.nodes @ a.T, axis=-1)
    mats = stretches[:, None, None] * np.eye(n)
    total = rule.integrate(np.asarray(density(mats), dtype=float))
    return total if math.isinf(total) else total / rule.measure


def recoverability_residual(density: StoredEnergy, a, rule: SphereQuadrature) -> float:
    """W(A) minus the sphere mean of W(|Az| I).

    Zero (up to quadrature error) at every matrix characterizes densities
    that come from a radial bond profile. A single infinite side returns
    an infinite residual; two infinite sides raise
    :class:`IndeterminateResidualError`.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[-2] != a.shape[-1]:
        raise ValueError("the mean-value identity is evaluated on square matrices")
    lhs = float(density(a))
    rhs = scaled_identity_mean(density, a, rule)
    if math.isinf(lhs) and math.isinf(rhs):
        raise IndeterminateResidualError(
            "density is infinite at the matrix and on the scaled identities"
        )
    return lhs - rhs


@dataclass(frozen=True)
class CandidateProfile:
    """Radial bond profile t -> W(tI)/sigma extracted from a density."""

    density: StoredEnergy
    dim: int

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        mats = t[..., None, None] * np.eye(self.dim)
        return self.density(mats) / sphere_measure(self.dim)


def extract_candidate(density: StoredEnergy, dim: int) -> CandidateProfile:
    """The only radial profile that can reproduce the density, if any does."""
    return CandidateProfile(density, dim)


def default_test_matrices(dim: int, seed: int = 0, randoms: int = 20) -> list[np.ndarray]:
    """Battery: identity multiples, volume-preserving stretches diag(l, 1/l, 1),
    a distinct-diagonal matrix, and seeded random matrices."""
    mats = [t * np.eye(dim) for t in (0.5, 1.0, 2.0)]
    for lam in (1.5, 2.0, 4.0):
        stretch = np.diag([lam, 1.0 / lam, 1.0][:dim])
        mats.append(stretch)
    mats.append(np.diag(np.arange(1.0, dim + 1.0)))
    rng = np.random.default_rng(seed)
    for _ in range(randoms):
        mats.append(rng.standard_normal((dim, dim)))
    return mats


@dataclass(frozen=True)
class ResidualRow:
    matrix: np.ndarray
    lhs: float
    rhs: float
    residual: float
    classification: str  # finite | infinite-violation | indeterminate
    within_tol: bool

    def to_dict(self) -> dict:
        return {
            "matrix": [[_plain(x) for x in row] for row in self.matrix.tolist()],
            "lhs": _plain(self.lhs),
            "rhs": _plain(self.rhs),
            "residual": _plain(self.residual),
            "classification": self.classification,
            "within_tol": self.within_tol,
        }


def _plain(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return x


@dataclass(frozen=True)
class RecoverabilityReport:
    """Residual table of the mean-value identity over a matrix battery."""

    density: dict
    rows: list
    max_abs_residual: float
    verdict: str  # consistent | violated | infinite-violation
    quadrature: dict
    rel_tol: float
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "density": self.density,
            "verdict": self.verdict,
            "max_abs_residual": _plain(self.max_abs_residual),
            "rel_tol": self.rel_tol,
            "quadrature": self.quadrature,
            "notes": list(self.notes),
            "rows": [row.to_dict() for row in self.rows],
        }

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["index", "matrix_row_major", "lhs", "rhs", "residual",
                 "classification", "within_tol"]
            )
            for i, row in enumerate(self.rows):
                entries = " ".join(repr(float(x)) for x in row.matrix.ravel())
                writer.writerow(
                    [i, entries, _plain(row.lhs), _plain(row.rhs),
                     _plain(row.residual), row.classification, int(row.within_tol)]
                )


def _residual_row(density, candidate, a, rule, rel_tol) -> ResidualRow:
    lhs = float(density(a))
    stretches = np.linalg.norm(rule.nodes @ a.T, axis=-1)
    rhs = rule.integrate(np.asarray(candidate(stretches), dtype=float))
    if math.isinf(lhs) and math.isinf(rhs):
        return ResidualRow(a, lhs, rhs, math.nan, "indeterminate", False)
    residual = lhs - rhs
    if math.isinf(residual):
        return ResidualRow(a, lhs, rhs, residual, "infinite-violation", False)
    ok = abs(residual) <= rel_tol * (1.0 + abs(lhs))
    return ResidualRow(a, lhs, rhs, residual, "finite", ok)


def roundtrip_check(
    density: StoredEnergy,
    rule: SphereQuadrature,
    test_set=None,
    rel_tol: float = RESIDUAL_REL_TOL,
    seed: int = 0,
    workers: int = 1,
) -> RecoverabilityReport:
    """Extract the candidate profile and test whether it reproduces the density.

    The candidate's sphere integral at each test matrix is compared with the
    density value; residuals beyond rel_tol * (1 + |W(A)|) flip the verdict
    to 'violated', any one-sided infinity to 'infinite-violation'.
    """
    dim = rule.dim
    if test_set is None:
        test_set = default_test_matrices(dim, seed=seed)
    test_set = [np.asarray(a, dtype=float) for a in test_set]
    candidate = extract_candidate(density, dim)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(
                    lambda a: _residual_row(density, candidate, a, rule, rel_tol),
                    test_set,
                )
            )
    else:
        rows = [_residual_row(density, candidate, a, rule, rel_tol) for a in test_set]

    finite = [abs(r.residual) for r in rows if r.classification == "finite"]
    max_abs = max(finite) if finite else 0.0
    if any(r.classification == "infinite-violation" for r in rows):
        verdict = "infinite-violation"
    elif any(r.classification == "finite" and not r.within_tol for r in rows):
        verdict = "violated"
    else:
        verdict = "consistent"
    notes = []
    if density.kind in ("incompressible-mr",) or "indicator" in str(density.params):
        notes.append(f"incompressibility resolved with |det A - 1| <= {DET_TOL}")
    return RecoverabilityReport(
        density.describe(),
        rows,
        max_abs,
        verdict,
        {"dim": rule.dim, "order": rule.order, "nodes": len(rule)},
        rel_tol,
        tuple(notes),
    )


@dataclass(frozen=True)
class JensenRow:
    case: str
    profile: str
    matrix: np.ndarray
    margin: float
    expected: str  # positive | negative | zero | nonnegative
    ok: bool

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "profile": self.profile,
            "matrix": [[float(x) for x in row] for row in self.matrix.tolist()],
            "margin": _plain(self.margin),
            "expected": self.expected,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class JensenReport:
    rows: list
    all_ok: bool

    def to_dict(self) -> dict:
        return {"all_ok": self.all_ok, "rows": [r.to_dict() for r in self.rows]}


def jensen_counterexample_suite(
    dim: int, rule: SphereQuadrature, zero_tol: float = 1e-10
) -> JensenReport:
    """Counterexample margins that block whole families of densities.

    For profiles of the squared Frobenius norm the identity forces
    mean g(n |Az|^2) = g(|A|^2); a strictly convex g makes the left side
    strictly larger whenever z -> |Az| is nonconstant (and strictly smaller
    for strictly concave g), with equality at identity multiples. For
    profiles of |cof A| on 3x3 matrices the corresponding mean dominates
    g(|A|^2 / sqrt(3)) on the volume-preserving stretches.
    """
    if dim != rule.dim:
        raise ValueError("suite dimension must match the quadrature rule")
    rows = []
    sq = ScalarProfile.power(1.0, 2.0)
    neg_sq = ScalarProfile.power(-1.0, 2.0)
    stretch = np.diag([1.0, 2.0, 1.0][:dim])
    eye = np.eye(dim)
    mean_w = rule.weights / rule.measure

    def frob_margin(profile, a):
        s2 = np.sum((rule.nodes @ a.T) ** 2, axis=-1)
        lhs = float(np.dot(mean_w, profile(dim * s2)))
        frob2 = float(np.sum(a * a))
        return lhs - profile(frob2)

    for profile, label, sign in ((sq, "t^2", 1.0), (neg_sq, "-t^2", -1.0)):
        m = frob_margin(profile, stretch)
        expected = "positive" if sign > 0 else "negative"
        rows.append(
            JensenRow("frobenius", label, stretch, m, expected, sign * m > 0.0)
        )
        m0 = frob_margin(profile, eye)
        rows.append(
            JensenRow("frobenius", label, eye, m0, "zero", abs(m0) <= zero_tol)
        )

    if dim == 3:
        lam = 2.0
        a = np.diag([lam, 1.0 / lam, 1.0])
        s2 = np.sum((rule.nodes @ a.T) ** 2, axis=-1)
        lhs = float(np.dot(mean_w, sq(math.sqrt(3.0) * s2)))
        margin = lhs - sq(float(np.sum(a * a)) / math.sqrt(3.0))
        rows.append(JensenRow("cofactor", "t^2", a, margin, "nonnegative", margin >= 0.0))

    return JensenReport(rows, all(r.ok for r in rows))


def cubic_mean_lower_constant(
    rule: SphereQuadrature, grid: int = 96, seed: int = 0, randoms: int = 200
) -> float:
    """Smallest sphere mean of |Az|^3 over unit-Frobenius 3x3 matrices.

    The mean is unchanged by A -> R1 A R2, so nonnegative diagonal matrices
    exhaust the range; a seeded batch of random full matrices cross-checks
    that reduction numerically.
    """
    if rule.dim != 3:
        raise ValueError("the cubic-mean constant is a 3x3 quantity")
    mean_w = rule.weights / rule.measure
    z2 = rule.nodes**2  # (N, 3)

    # nonnegative diagonal family: s on the unit-sphere octant
    theta = np.linspace(0.0, math.pi / 2.0, grid)
    phi = np.linspace(0.0, math.pi / 2.0, grid)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    s = np.stack(
        [np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1
    ).reshape(-1, 3)
    means = mean_w @ (z2 @ (s * s).T) ** 1.5
    best = float(means.min())

    rng = np.random.default_rng(seed)
    for _ in range(randoms):
        a = rng.standard_normal((3, 3))
        a /= np.linalg.norm(a)
        m = float(np.dot(mean_w, np.linalg.norm(rule.nodes @ a.T, axis=-1) ** 3))
        best = min(best, m)
    return best


@dataclass(frozen=True)
class StretchScanReport:
    """Outcome of the large-stretch necessary-inequality scan."""

    branch: str  # cof-term | growth
    c_value: float
    a_value: float
    lambda_star: float | None
    lhs_at_failure: float | None
    rhs_at_failure: float | None
    inconclusive: bool
    rows: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.lambda_star is not None

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "c_value": self.c_value,
            "a_value": self.a_value,
            "lambda_star": self.lambda_star,
            "lhs_at_failure": _plain(self.lhs_at_failure),
            "rhs_at_failure": _plain(self.rhs_at_failure),
            "inconclusive": self.inconclusive,
            "rows": [
                {"lam": lam, "lhs": _plain(l), "rhs": _plain(r)}
                for (lam, l, r) in self.rows
            ],
        }


def mooney_rivlin_inequality_check(
    alpha: float,
    beta: float,
    g: ScalarProfile,
    lambda_list,
    a_value: float = 1.0,
    rule: SphereQuadrature | None = None,
    c_value: float | None = None,
) -> StretchScanReport:
    """Scan the stretch family diag(l, 1/l, (a/c)^(1/3)) for the inequality
    every recoverable Mooney-Rivlin-type density would have to satisfy.

    With beta > 0 the cofactor term must dominate a quartic in |A|, which
    fails at a finite stretch; with beta = 0 the scan looks for growth of g
    beyond its value at the reference point (g must not be eventually
    constant for this branch to conclude). ``a_value`` is a point past which
    g is nondecreasing; 1.0 covers every profile in the zoo. The constant c
    is the least sphere mean of |Az|^3 on the unit Frobenius sphere, capped
    at 1/a^2.
    """
    rule = rule if rule is not None else build_rule(3, 32)
    if c_value is None:
        c_value = min(cubic_mean_lower_constant(rule), 1.0 / (a_value * a_value))
    ac = a_value / c_value
    rows = []
    lam_star = None
    lhs_fail = rhs_fail = None
    branch = "cof-term" if beta > 0 else "growth"
    for lam in lambda_list:
        lam = float(lam)
        if branch == "cof-term":
            lhs = beta * (1.0 + lam**2 * ac ** (2.0 / 3.0) + ac ** (2.0 / 3.0) / lam**2)
            lhs += float(g(ac ** (1.0 / 3.0)))
            rhs = (beta / 3.0) * (lam**2 + lam**-2 + ac ** (2.0 / 3.0)) ** 2
        else:
            lhs = float(g(ac ** (1.0 / 3.0)))
            rhs = float(g(c_value * (lam**2 + lam**-2 + ac ** (2.0 / 3.0)) ** 1.5))
        rows.append((lam, lhs, rhs))
        if lam_star is None and lhs < rhs:
            lam_star, lhs_fail, rhs_fail = lam, lhs, rhs
    return StretchScanReport(
        branch, c_value, a_value, lam_star, lhs_fail, rhs_fail,
        inconclusive=lam_star is None, rows=rows,
    )
