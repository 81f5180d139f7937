"""Thin-plate spline fitting and evaluation in 2-D.

The fitted map is::

    f(p) = a0 + a1 * p.x + a2 * p.y + sum_j c_j * phi(|p - r_j|)

with ``phi(r) = r**2 * ln(r)``. Coefficients come from the augmented system::

    [ K + lam*I   P ] [c]   [t]
    [ P^T         0 ] [a] = [0]

where ``K_ij = phi(|r_i - r_j|)`` and the rows of ``P`` are ``(1, x_j, y_j)``.
``lam = 0`` interpolates the targets exactly; ``lam > 0`` trades residual
error against bending energy ``sum over dims of c^T K c``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .landmarks import ControlPairs, DegenerateControlPoints, check_nondegenerate

DEFAULT_LAMBDA = 0.01
MAX_CONDITION = 1e12


class SingularSystemError(DegenerateControlPoints):
    """The TPS linear system is singular or too ill-conditioned to solve."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


def kernel_phi(r):
    """``r**2 * ln(r)`` with the continuous extension ``phi(0) = 0``.

    Accepts scalars or arrays; negative distances raise ``ValueError``.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("kernel_phi is defined for nonnegative distances only")
    safe = np.where(r > 0, r, 1.0)
    out = np.where(r > 0, r * r * np.log(safe), 0.0)
    return float(out) if out.ndim == 0 else out


def pairwise_distances(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True)
class TpsTransform:
    """A fitted thin-plate spline.

    ``affine`` is ``(2, 3)``: row ``d`` holds ``(a0, a1, a2)`` for output
    dimension ``d``. ``rbf_coeffs`` is ``(N, 2)``.
    """

    affine: np.ndarray
    rbf_coeffs: np.ndarray
    control_points: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        for name in ("affine", "rbf_coeffs", "control_points"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.affine.shape != (2, 3):
            raise ValueError(f"affine must be 2x3, got {self.affine.shape}")
        n = len(self.control_points)
        if self.rbf_coeffs.shape != (n, 2) or self.control_points.shape != (n, 2):
            raise ValueError("rbf_coeffs and control_points must both be (N, 2)")

    @classmethod
    def identity(cls) -> "TpsTransform":
        return cls(
            affine=np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            rbf_coeffs=np.zeros((0, 2)),
            control_points=np.zeros((0, 2)),
            lam=0.0,
        )

    def __call__(self, points) -> np.ndarray:
        return evaluate_tps(self, points)

    def to_json(self) -> str:
        def r6(a):
            return np.round(np.asarray(a, dtype=np.float64), 6).tolist()

        return json.dumps(
            {
                "affine": r6(self.affine),
                "rbf_coeffs": r6(self.rbf_coeffs),
                "control_points": r6(self.control_points),
                "lambda": round(float(self.lam), 6),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> "TpsTransform":
        obj = json.loads(text)
        return cls(
            affine=np.asarray(obj["affine"], dtype=np.float64),
            rbf_coeffs=np.asarray(obj["rbf_coeffs"], dtype=np.float64).reshape(-1, 2),
            control_points=np.asarray(obj["control_points"], dtype=np.float64).reshape(-1, 2),
            lam=float(obj["lambda"]),
        )


def system_matrix(points, lam: float) -> np.ndarray:
    """The ``(N+3, N+3)`` augmented matrix for control points ``points``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = kernel_phi(pairwise_distances(pts, pts)) + lam * np.eye(n)
    L[:n, n] = 1.0
    L[:n, n + 1 :] = pts
    L[n, :n] = 1.0
    L[n + 1 :, :n] = pts.T
    return L


def _equilibrate(L: np.ndarray, iters: int = 8) -> np.ndarray:
    """Symmetric Ruiz scaling vector ``d`` making ``diag(d) L diag(d)`` unit-max per row."""
    d = np.ones(len(L))
    for _ in range(iters):
        scaled = np.abs(L) * d[:, None] * d[None, :]
        row = scaled.max(axis=1)
        row[row == 0] = 1.0
        d /= np.sqrt(row)
    return d


def fit_tps(pairs: ControlPairs, lam: float = DEFAULT_LAMBDA) -> TpsTransform:
    """Fit a TPS mapping ``pairs.source`` onto ``pairs.target``.

    The system is equilibrated before factorization; :class:`SingularSystemError`
    (carrying the condition number of the scaled system) is raised when it
    exceeds 1e12, e.g. for duplicated control points with ``lam == 0``.
    """
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be a nonnegative finite number, got {lam}")
    src, dst = pairs.source, pairs.target
    check_nondegenerate(src)
    n = len(src)
    L = system_matrix(src, lam)
    d = _equilibrate(L)
    Ls = L * d[:, None] * d[None, :]
    cond = np.linalg.cond(Ls)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularSystemError(
            f"TPS system is singular or ill-conditioned (cond={cond:.3g}, N={n}, lambda={lam})",
            condition=cond,
        )
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = dst
    lu = linalg.lu_factor(Ls, check_finite=False)
    sol = d[:, None] * linalg.lu_solve(lu, d[:, None] * rhs, check_finite=False)
    return TpsTransform(
        affine=sol[n:].T.copy(),
        rbf_coeffs=sol[:n].copy(),
        control_points=src.copy(),
        lam=lam,
    )


def evaluate_tps(t: TpsTransform, points) -> np.ndarray:
    """Apply ``t`` to a point ``(2,)`` or an array of points ``(..., 2)``."""
    pts = np.asarray(points, dtype=np.float64)
    shape = pts.shape
    flat = pts.reshape(-1, 2)
    out = t.affine[:, 0] + flat @ t.affine[:, 1:].T
    if len(t.control_points):
        out = out + kernel_phi(pairwise_distances(flat, t.control_points)) @ t.rbf_coeffs
    return out.reshape(shape)


def bending_energy(t: TpsTransform) -> float:
    if not len(t.control_points):
        return 0.0
    K = kernel_phi(pairwise_distances(t.control_points, t.control_points))
    c = t.rbf_coeffs
    return float(np.einsum("id,ij,jd->", c, K, c))


def residuals(t: TpsTransform, pairs: ControlPairs) -> np.ndarray:
    """Per-pair Euclidean residual ``|f(r_j) - t_j|``."""
    return np.linalg.norm(evaluate_tps(t, pairs.source) - pairs.target, axis=1)


def side_conditions(t: TpsTransform) -> np.ndarray:
    """``P^T c`` as a ``(3, 2)`` array; zero for every valid fit."""
    pts = t.control_points
    P = np.column_stack([np.ones(len(pts)), pts])
    return P.T @ t.rbf_coeffs
