"""Computable envelope machinery: lattice rank-one convexification.

The quasiconvex envelope itself is not computable in general; the rank-one
convex envelope on a matrix lattice is, and it sandwiches the quasiconvex
envelope from above while coinciding with the density exactly when the
density is already quasiconvex. That fixed-point behaviour is all the
toolkit needs from the envelope stage, and every report carries the caveat
explicitly (see ``SURROGATE_NOTE``).

Each sweep replaces the stored values along every lattice segment in a
rank-one direction by their lower convex hull, which exhausts all pairwise
convex-combination updates along that segment at once; +inf values never
serve as hull endpoints, so convex combinations with an infinite endpoint
are never used.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .linalg import INF
from .potentials import StoredEnergy

#: Caveat attached to every envelope report: agreement of the rank-one
#: envelope with the density on the lattice is numerical evidence for, not a
#: proof of, the density being its own quasiconvexification.
SURROGATE_NOTE = (
    "rank-one convex envelope used as a computable upper surrogate of the "
    "quasiconvex envelope; a lattice fixed point is evidence, not proof"
)


@dataclass(frozen=True)
class MatrixLattice:
    """Regular grid of square matrices on [-bound, bound] per varying entry.

    mode 'full' varies all dim*dim entries (kept coarse: the point count is
    resolution^(dim^2)); mode 'diagonal' varies the diagonal only and fixes
    the rest at zero, which covers every counterexample matrix the checks
    use. 1x1 lattices are plain intervals. ``bound`` and ``step`` must place
    0 and +-1 exactly on the grid.
    """

    dim: int
    bound: float
    step: float
    mode: str = "full"

    def __post_init__(self):
        if self.mode not in ("full", "diagonal"):
            raise ValueError(f"unknown lattice mode {self.mode!r}")
        for value, name in ((self.bound / self.step, "bound"), (1.0 / self.step, "1")):
            if abs(value - round(value)) > 1e-9:
                raise ValueError(
                    f"{name} must be an integer multiple of step so the lattice "
                    "contains 0 and the identity exactly"
                )
        if self.dim > 1 and self.mode == "full" and self.dim**2 > 4:
            raise ValueError("full lattices are only tractable for dim <= 2")

    @property
    def axes(self) -> int:
        """Number of varying matrix entries."""
        return self.dim if self.mode == "diagonal" else self.dim * self.dim

    @property
    def points_per_axis(self) -> int:
        return 2 * int(round(self.bound / self.step)) + 1

    @property
    def coordinates(self) -> np.ndarray:
        half = int(round(self.bound / self.step))
        return self.step * np.arange(-half, half + 1)

    def matrices(self) -> np.ndarray:
        """All lattice matrices, shape (*grid_shape, dim, dim)."""
        coords = self.coordinates
        grids = np.meshgrid(*([coords] * self.axes), indexing="ij")
        flat = np.stack([g.ravel() for g in grids], axis=-1)  # (P, axes)
        mats = np.zeros(flat.shape[:-1] + (self.dim, self.dim))
        if self.mode == "diagonal":
            for k in range(self.dim):
                mats[..., k, k] = flat[..., k]
        else:
            mats = flat.reshape(flat.shape[:-1] + (self.dim, self.dim))
        return mats.reshape((self.points_per_axis,) * self.axes + (self.dim, self.dim))

    def fill(self, density: StoredEnergy) -> np.ndarray:
        """Density values at every lattice matrix; NaN is rejected."""
        values = np.asarray(density(self.matrices()), dtype=float)
        if np.any(np.isnan(values)):
            raise ValueError("density produced NaN on the lattice")
        return values

    def directions(self) -> list[np.ndarray]:
        """Integer rank-one steps, as index-space vectors of length ``axes``.

        Full mode: all dyads a (x) b with a, b in {-1,0,1}^dim, deduplicated
        up to sign and scaling. Diagonal mode: only the axis dyads
        e_k (x) e_k survive, because no other dyad stays inside the diagonal
        sublattice.
        """
        if self.mode == "diagonal" or self.dim == 1:
            out = []
            for k in range(self.axes):
                d = np.zeros(self.axes, dtype=int)
                d[k] = 1
                out.append(d)
            return out
        vecs = [
            np.array(v)
            for v in itertools.product((-1, 0, 1), repeat=self.dim)
            if any(v)
        ]
        seen = set()
        out = []
        for a in vecs:
            for b in vecs:
                d = np.outer(a, b).ravel()
                key_pos = tuple(d)
                key_neg = tuple(-d)
                if key_pos in seen or key_neg in seen:
                    continue
                seen.add(key_pos)
                out.append(d)
        return out


@dataclass(frozen=True)
class EnvelopeResult:
    """Lattice values of the rank-one convex envelope.

    ``values`` is the converged (or last) sweep, ``interior_mask`` marks the
    points at least one lattice step from the boundary along every axis,
    where boundary truncation cannot have touched the result.
    """

    lattice: MatrixLattice
    values: np.ndarray
    initial: np.ndarray
    sweeps: int
    last_decrement: float
    converged: bool
    note: str = SURROGATE_NOTE

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.values.shape, dtype=bool)
        for ax in range(self.values.ndim):
            idx = [slice(None)] * self.values.ndim
            idx[ax] = [0, -1]
            mask[tuple(idx)] = False
        return mask

    def max_change_on_interior(self) -> float:
        diff = np.abs(self.initial - self.values)[self.interior_mask]
        diff = diff[np.isfinite(diff)]
        return float(diff.max()) if diff.size else 0.0

    def write_csv(self, path) -> None:
        import csv

        coords = self.lattice.coordinates
        mask = self.interior_mask
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [f"x{k}" for k in range(self.lattice.axes)] + ["value", "interior"]
            )
            for idx in np.ndindex(self.values.shape):
                row = [repr(float(coords[i])) for i in idx]
                v = self.values[idx]
                row.append("inf" if math.isinf(v) else repr(float(v)))
                row.append(int(mask[idx]))
                writer.writerow(row)


def _hull_envelope_1d(values: np.ndarray) -> np.ndarray:
    """Lower convex hull of equispaced samples, +inf entries allowed.

    Infinite entries never become hull vertices; positions strictly between
    two finite vertices receive the chord value, everything outside the
    finite range keeps its own value.
    """
    n = len(values)
    finite = np.flatnonzero(np.isfinite(values))
    if len(finite) < 2:
        return values.copy()
    # Andrew monotone chain on (index, value), lower hull only.
    hull: list[int] = []
    for i in finite:
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            # drop k if it lies on or above chord (j, i)
            if (values[i] - values[j]) * (k - j) <= (values[k] - values[j]) * (i - j):
                hull.pop()
            else:
                break
        hull.append(int(i))
    out = values.copy()
    for (j, k) in zip(hull[:-1], hull[1:]):
        if k - j > 1:
            t = np.arange(1, k - j) / (k - j)
            chord = values[j] * (1 - t) + values[k] * t
            seg = out[j + 1 : k]
            np.minimum(chord, seg, out=seg)
    return out


def _iter_lines(shape: tuple[int, ...], step: np.ndarray):
    """Maximal lattice chains along an integer step vector.

    Yields index tuples (one per point of the chain, in order). Chains start
    at points whose backward neighbour falls outside the grid.
    """
    step = np.asarray(step, dtype=int)
    dims = len(shape)
    for start in np.ndindex(shape):
        prev = tuple(start[d] - step[d] for d in range(dims))
        if all(0 <= prev[d] < shape[d] for d in range(dims)):
            continue  # not a chain head
        chain = []
        cur = start
        while all(0 <= cur[d] < shape[d] for d in range(dims)):
            chain.append(cur)
            cur = tuple(cur[d] + step[d] for d in range(dims))
        if len(chain) >= 2:
            yield chain


def _sweep_step(values: np.ndarray, step: np.ndarray) -> None:
    """In-place hull pass along every lattice chain in one direction."""
    nonzero = np.flatnonzero(step)
    if len(nonzero) == 1 and abs(step[nonzero[0]]) == 1:
        # axis-aligned direction: every 1D slice along that axis is a chain
        view = np.moveaxis(values, nonzero[0], -1)
        flat = np.ascontiguousarray(view).reshape(-1, view.shape[-1])
        for row in range(flat.shape[0]):
            flat[row] = _hull_envelope_1d(flat[row])
        view[...] = flat.reshape(view.shape)
        return
    for chain in _iter_lines(values.shape, step):
        idx = tuple(np.array(chain).T)
        values[idx] = _hull_envelope_1d(values[idx])


def _random_direction_pass(
    values: np.ndarray, lattice: MatrixLattice, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Extra coverage from random rank-one dyads via multilinear interpolation.

    Off-lattice endpoints are read from the linear interpolant of the current
    values; interpolation along single-entry axes happens along rank-one
    lines, so it never undershoots the true envelope. Only meaningful in
    full mode; diagonal sublattices admit no off-axis rank-one moves.
    """
    if lattice.mode == "diagonal" or lattice.dim == 1 or count <= 0:
        return values
    shape = values.shape
    grid_idx = np.indices(shape, dtype=float).reshape(len(shape), -1)
    work = values.copy()
    filled = np.where(np.isfinite(work), work, np.nan)
    for _ in range(count):
        a = rng.standard_normal(lattice.dim)
        b = rng.standard_normal(lattice.dim)
        d = np.outer(a / np.linalg.norm(a), b / np.linalg.norm(b)).ravel()
        for i, j in ((1, 1), (1, 2), (2, 1)):
            lo = grid_idx - j * d[:, None]
            hi = grid_idx + i * d[:, None]
            ok = np.all((lo >= 0) & (lo <= np.array(shape)[:, None] - 1), axis=0)
            ok &= np.all((hi >= 0) & (hi <= np.array(shape)[:, None] - 1), axis=0)
            if not np.any(ok):
                continue
            f_lo = map_coordinates(filled, lo[:, ok], order=1, mode="nearest")
            f_hi = map_coordinates(filled, hi[:, ok], order=1, mode="nearest")
            combo = (i * f_lo + j * f_hi) / (i + j)
            good = ~np.isnan(combo)
            flat = work.reshape(-1)
            target = np.flatnonzero(ok)[good]
            flat[target] = np.minimum(flat[target], combo[good])
    return work


def rank_one_convexify(
    density: StoredEnergy,
    lattice: MatrixLattice,
    directions: int = 0,
    tol: float = 1e-6,
    max_sweeps: int = 40,
    seed: int = 0,
) -> EnvelopeResult:
    """Iterated rank-one sweep until no lattice point decreases by more than tol.

    Parameters
    ----------
    density : StoredEnergy
        Must be evaluable (finite or +inf) at every lattice matrix.
    directions : int
        Extra random rank-one dyads per sweep on top of the integer dyad
        set (full mode only).
    tol, max_sweeps
        Stop when the largest pointwise decrement of a sweep drops to tol;
        running out of sweeps first leaves ``converged`` False.
    """
    initial = lattice.fill(density)
    values = initial.copy()
    steps = lattice.directions()
    rng = np.random.default_rng(seed)
    decrement = INF
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        before = values.copy()
        for step in steps:
            _sweep_step(values, step)
        values = _random_direction_pass(values, lattice, directions, rng)
        both_finite = np.isfinite(before) & np.isfinite(values)
        decrement = (
            float((before[both_finite] - values[both_finite]).max())
            if both_finite.any()
            else 0.0
        )
        if np.any(np.isinf(before) & np.isfinite(values)):
            decrement = INF  # a point left the infinite set; keep sweeping
        if decrement <= tol:
            break
    converged = decrement <= tol
    return EnvelopeResult(lattice, values, initial, sweeps, decrement, converged)


@dataclass(frozen=True)
class ProbeReport:
    """Sampled necessary-condition check for strict polyconvexity."""

    trials: int
    convexity_violations: int
    strictness_violations: int
    min_gap: float
    worst_case: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return self.convexity_violations == 0 and self.strictness_violations == 0


def strict_polyconvexity_probe(
    density: StoredEnergy, trials: int, seed: int, dim: int = 3
) -> ProbeReport:
    """Midpoint tests along random segments whose minors combine affinely.

    Pairs differing by a rank-one matrix have midpoints whose minors are the
    exact average of the endpoint minors, so strict polyconvexity forces a
    strictly convex midpoint inequality there. This is a refutation sampler,
    not a decision procedure: a clean report is evidence only.
    """
    if dim not in (2, 3):
        raise ValueError("probe supports square dimensions 2 and 3")
    rng = np.random.default_rng(seed)
    conv = 0
    strict = 0
    min_gap = INF
    worst: dict = {}
    for _ in range(trials):
        a = rng.standard_normal((dim, dim))
        u = rng.standard_normal(dim)
        v = rng.standard_normal(dim)
        d = np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
        d *= rng.uniform(0.2, 1.0)
        f_mid = density(a)
        f_lo = density(a - d)
        f_hi = density(a + d)
        if math.isinf(f_lo) or math.isinf(f_hi) or math.isinf(f_mid):
            continue  # an infinite endpoint makes the combination vacuous
        gap = 0.5 * (f_lo + f_hi) - f_mid
        scale = 1e-10 * (1.0 + abs(f_lo) + abs(f_hi) + abs(f_mid))
        if gap < min_gap:
            min_gap = gap
            worst = {"matrix": a.tolist(), "direction": d.tolist(), "gap": gap}
        if gap < -scale:
            conv += 1
        elif gap <= scale:
            strict += 1
    return ProbeReport(trials, conv, strict, min_gap, worst)


def jensen_gap(density: StoredEnergy, a, measure) -> float:
    """Integral of the density against a discrete measure minus the value at
    its barycenter.

    ``measure`` is a sequence of (weight, matrix) pairs with positive
    weights summing to one; the weighted matrices must average back to ``a``
    within 1e-10 or the call is rejected.
    """
    a = np.asarray(a, dtype=float)
    weights = np.array([w for w, _ in measure], dtype=float)
    mats = np.stack([np.asarray(m, dtype=float) for _, m in measure])
    if np.any(weights <= 0.0):
        raise ValueError("measure weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("measure weights must sum to one")
    bary = np.tensordot(weights, mats, axes=(0, 0))
    if np.max(np.abs(bary - a)) > 1e-10:
        raise ValueError("barycenter mismatch between measure and matrix")
    values = np.asarray(density(mats), dtype=float)
    if np.any(np.isposinf(values)):
        return INF
    return float(np.dot(weights, values) - density(a))
