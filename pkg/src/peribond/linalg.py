"""Small dense matrix arithmetic for energy densities.

Matrices are plain numpy arrays with at most 3 rows/columns; cofactor and
determinant use explicit minor expansion (exact for these sizes, no
factorization). All functions accept stacked inputs of shape (..., m, n)
and broadcast over the leading axes. Extended-real values are IEEE floats
with ``math.inf`` as the infinity marker, so absorption under addition and
multiplication by positive reals is exact.
"""

import math

import numpy as np

INF = math.inf

MAX_DIM = 3


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim < 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    m, n = a.shape[-2], a.shape[-1]
    if not (1 <= m <= MAX_DIM and 1 <= n <= MAX_DIM):
        raise ValueError(f"matrix dimensions must lie in 1..{MAX_DIM}, got {m}x{n}")
    return a


def _require_square(a: np.ndarray) -> int:
    if a.shape[-2] != a.shape[-1]:
        raise ValueError(f"expected a square matrix, got {a.shape[-2]}x{a.shape[-1]}")
    return a.shape[-1]


def frobenius(a) -> float | np.ndarray:
    """Frobenius norm sqrt(sum of squared entries)."""
    a = _as_matrix(a)
    out = np.sqrt(np.sum(a * a, axis=(-2, -1)))
    return float(out) if out.ndim == 0 else out


def determinant(a) -> float | np.ndarray:
    """Determinant by explicit cofactor expansion, square n <= 3 only."""
    a = _as_matrix(a)
    n = _require_square(a)
    if n == 1:
        out = a[..., 0, 0]
    elif n == 2:
        out = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    else:
        out = (
            a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
        )
    return float(out) if out.ndim == 0 else np.asarray(out)


def cofactor(a) -> np.ndarray:
    """Cofactor matrix of signed (n-1)-minors; satisfies cof(A) A^T = det(A) I.

    For 1x1 input the cofactor is [[1]] (the empty minor).
    """
    a = _as_matrix(a)
    n = _require_square(a)
    out = np.empty_like(a)
    if n == 1:
        out[..., 0, 0] = 1.0
        return out
    if n == 2:
        out[..., 0, 0] = a[..., 1, 1]
        out[..., 0, 1] = -a[..., 1, 0]
        out[..., 1, 0] = -a[..., 0, 1]
        out[..., 1, 1] = a[..., 0, 0]
        return out
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            # cyclic index choice absorbs the (-1)^(i+j) sign
            out[..., i, j] = (
                a[..., i1, j1] * a[..., i2, j2] - a[..., i1, j2] * a[..., i2, j1]
            )
    return out


def rotation_from_angle(angle: float) -> np.ndarray:
    """2x2 rotation by the given angle."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotation_from_quaternion(q) -> np.ndarray:
    """3x3 rotation from a unit quaternion (w, x, y, z)."""
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_from_rng(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation drawn from an existing generator."""
    if dim == 2:
        return rotation_from_angle(rng.uniform(0.0, 2.0 * math.pi))
    if dim == 3:
        # normalized 4-gaussian = uniform quaternion = Haar on SO(3)
        return rotation_from_quaternion(rng.standard_normal(4))
    raise ValueError(f"rotations supported for dim 2 and 3 only, got {dim}")


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed rotation, deterministic per seed."""
    return rotation_from_rng(dim, np.random.default_rng(seed))


def is_rotation(r, tol: float = 1e-12) -> bool:
    """True if R R^T = I and det R = 1 within tol."""
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        return False
    eye = np.eye(r.shape[0])
    return bool(
        np.max(np.abs(r @ r.T - eye)) <= tol and abs(determinant(r) - 1.0) <= tol
    )
