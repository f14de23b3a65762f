"""Discrete rectifiable varifolds: weighted (point, tangent plane) atoms.

The first variation of ``V = sum_i w_i delta_(p_i, W_i)`` along a vector
field ``Z`` is ``sum_i w_i div^(W_i) Z(p_i)`` with the tangential divergence
``div^W Z = sum_j <D_(e_j) Z, e_j>`` over an orthonormal frame of ``W``.
"""

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, HypothesisError

FRAME_TOL = 1e-8


@dataclass
class DiscreteVarifold:
    points: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    boundary_mask: np.ndarray
    ell: int
    rectifiable: bool = True
    frame_tol: float = FRAME_TOL
    _tree: cKDTree | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.frames = np.asarray(self.frames, dtype=float)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool)
        n, m = self.points.shape
        if self.weights.shape != (n,) or self.boundary_mask.shape != (n,):
            raise DomainError("weights and boundary mask must have one entry per point")
        if self.frames.shape != (n, self.ell, m):
            raise DomainError(f"frames must have shape {(n, self.ell, m)}, got {self.frames.shape}")
        if not self.ell < m:
            raise DomainError("ell must be smaller than the ambient dimension")
        if np.any(self.weights <= 0):
            raise DomainError("weights must be positive")
        err = frame_defect(self.frames)
        if err > self.frame_tol:
            raise DomainError(f"frames are not orthonormal (defect {err:.3e})")

    @classmethod
    def from_sample(cls, sample):
        return cls(sample.points, sample.weights, sample.frames, sample.boundary_mask, sample.ell)

    @property
    def m(self):
        return self.points.shape[1]

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def mass(self):
        return float(self.weights.sum())

    @property
    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def bbox_diagonal(self):
        return float(np.linalg.norm(self.points.max(0) - self.points.min(0)))

    def scaled(self, lam):
        """Image under ``p -> lam p`` (weights scale by ``lam^ell``)."""
        return DiscreteVarifold(lam * self.points, self.weights * lam ** self.ell,
                                self.frames, self.boundary_mask, self.ell, self.rectifiable,
                                self.frame_tol)


def frame_defect(frames):
    G = np.einsum("nim,njm->nij", frames, frames)
    return float(np.max(np.abs(G - np.eye(frames.shape[1])))) if len(frames) else 0.0


@dataclass
class TestField:
    """Vector field ``Z`` vanishing outside ``B(center, support_radius)``.

    ``Z`` maps an ``(N, m)`` array of points to an ``(N, m)`` array.
    ``jacobian``, when given, maps points to ``(N, m, m)`` arrays of ``DZ``.
    ``support`` optionally returns a boolean mask of points where ``Z`` may be
    nonzero (defaults to the ball).
    """

    __test__ = False  # not a pytest class

    Z: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    center: np.ndarray | None = None
    jacobian: Callable | None = None
    support: Callable | None = None

    def __call__(self, x):
        return self.Z(np.atleast_2d(x))

    def support_mask(self, x):
        x = np.atleast_2d(x)
        c = np.zeros(x.shape[1]) if self.center is None else np.asarray(self.center)
        mask = np.linalg.norm(x - c, axis=1) < self.support_radius
        if self.support is not None:
            mask &= self.support(x)
        return mask


def tangential_divergence(Z, points, frames, fd_step, jacobian=None):
    """``div^W Z`` at each point by central differences along frame vectors."""
    if jacobian is not None:
        DZ = jacobian(points)
        return np.einsum("nim,nkm,nik->n", frames, DZ, frames)
    if fd_step <= 0:
        raise DomainError("fd_step must be positive")
    div = np.zeros(len(points))
    for j in range(frames.shape[1]):
        e = frames[:, j, :]
        dz = (Z(points + fd_step * e) - Z(points - fd_step * e)) / (2 * fd_step)
        div += np.einsum("nm,nm->n", dz, e)
    return div


def first_variation(V, Z, fd_step=None, pointwise=False):
    """``delta V(Z) = sum_i w_i div^(W_i) Z(p_i)``.

    Only atoms within ``support_radius + fd_step`` of the field centre are
    visited. ``fd_step`` defaults to ``1e-5`` times the bounding-box diagonal.
    """
    if fd_step is None:
        fd_step = 1e-5 * V.bbox_diagonal()
    if fd_step <= 0:
        raise DomainError("fd_step must be positive")
    idx = _support_indices(V, Z, fd_step)
    div = tangential_divergence(Z.Z, V.points[idx], V.frames[idx], fd_step, Z.jacobian)
    val = float(np.dot(V.weights[idx], div))
    if pointwise:
        return val, idx, div
    return val


def _support_indices(V, Z, pad=0.0):
    c = np.zeros(V.m) if Z.center is None else np.asarray(Z.center, dtype=float)
    if math.isinf(Z.support_radius):
        idx = np.arange(V.n)
    else:
        idx = np.asarray(sorted(V.tree.query_ball_point(c, Z.support_radius + pad)), dtype=int)
    return idx


def mean_curvature_pairing(V, Z, H):
    """``-ell sum_i w_i <H(p_i), Z(p_i)>``: the first variation predicted by a
    known mean-curvature field ``H`` (normalized, shape ``(N, m)``)."""
    return float(-V.ell * np.einsum("n,nm,nm->", V.weights, H, Z(V.points)))


def boundary_neighbourhood(V, k=8):
    """Boundary atoms dilated by one ring of ``k`` nearest neighbours."""
    mask = V.boundary_mask.copy()
    if not mask.any():
        return mask
    _, nb = V.tree.query(V.points[mask], k=min(k + 1, V.n))
    mask[np.asarray(nb).ravel()] = True
    return mask


def check_field_support(V, Z, k=8):
    """Reject ``Z`` if it is nonzero near the boundary support."""
    near = boundary_neighbourhood(V, k)
    if not near.any():
        return
    pts = V.points[near]
    vals = Z(pts)
    touching = Z.support_mask(pts) & (np.linalg.norm(vals, axis=1) > 0)
    if touching.any():
        raise HypothesisError(
            f"test field is supported on {int(touching.sum())} atoms next to the boundary")


@dataclass
class BoundReport:
    values: list            # delta V(Z) + ell sum w h |Z| per field
    min_value: float
    tol: float
    consistent: bool


def check_mean_curvature_bound(V, h, fields, tol=None, fd_step=None, k=8):
    """Evaluate ``delta V(Z) + ell sum_i w_i h |Z(p_i)|`` for every field.

    A negative minimum (below ``-tol``) shows that ``|H| <= h`` fails; a
    non-negative one is consistent with it on the tested family. ``tol``
    defaults to ``1e-2 * mass``.
    """
    tol = 1e-2 * V.mass if tol is None else tol
    vals = []
    for Z in fields:
        check_field_support(V, Z, k)
        dv = first_variation(V, Z, fd_step)
        idx = _support_indices(V, Z)
        zn = np.linalg.norm(Z(V.points[idx]), axis=1)
        vals.append(dv + V.ell * h * float(np.dot(V.weights[idx], zn)))
    mn = min(vals)
    return BoundReport(vals, mn, tol, mn >= -tol)


# ---------------------------------------------------------------------------
# smooth test fields


def bump(t):
    """``C^infinity`` profile equal to 1 on ``t <= 0.5`` and 0 on ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    s = np.clip(2.0 * t - 1.0, 0.0, 1.0)

    def g(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)

    a, b = g(1.0 - s), g(s)
    return a / (a + b)


def truncated_field(F, radius, center=None):
    """``Z(x) = bump(|x - center|/radius) F(x)``."""
    c = None if center is None else np.asarray(center, dtype=float)

    def Z(x):
        d = x if c is None else x - c
        return bump(np.linalg.norm(d, axis=1) / radius)[:, None] * F(x)

    return TestField(Z, radius, c)


def random_smooth_field(m, rng, radius=2.0, n_modes=3, center=None):
    """Random trigonometric field ``sum_k a_k sin(<w_k, x> + phi_k)`` truncated to a ball."""
    A = rng.standard_normal((n_modes, m))
    W = rng.standard_normal((n_modes, m))
    ph = rng.uniform(0, 2 * np.pi, n_modes)

    def F(x):
        return np.sin(x @ W.T + ph) @ A

    return truncated_field(F, radius, center)


# ---------------------------------------------------------------------------
# mass growth


def mass_in_balls(V, radii, center=None):
    """``||V||(B_r) = sum_(|p_i - c| < r) w_i`` for each radius (ascending)."""
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) < 0):
        raise DomainError("radii must be sorted ascending")
    c = np.zeros(V.m) if center is None else np.asarray(center, dtype=float)
    d = np.linalg.norm(V.points - c, axis=1)
    order = np.argsort(d, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum(V.weights[order])])
    k = np.searchsorted(d[order], radii, side="left")
    return cum[k]


def fit_growth_exponent(radii, masses):
    """Least-squares slope of ``log mass`` against ``log r``."""
    radii = np.asarray(radii, dtype=float)
    masses = np.asarray(masses, dtype=float)
    ok = masses > 0
    return float(np.polyfit(np.log(radii[ok]), np.log(masses[ok]), 1)[0])


@dataclass
class Verdict:
    value: bool
    confidence: str   # "extrapolated" for growth-model based decisions
    detail: dict = field(default_factory=dict)


@dataclass
class GrowthReport:
    d0_estimate: float
    exponent: float
    parabolic: Verdict
    stochastically_complete: Verdict
    radii: np.ndarray
    masses: np.ndarray


def d0_estimate(radii, masses, sigma=0.0, alpha=0.0):
    """``min`` over the upper half of the radii of ``log M(r) / r^(2 - sigma - alpha)``
    (``/ log r`` when ``alpha = 2 - sigma``)."""
    radii = np.asarray(radii, dtype=float)
    masses = np.asarray(masses, dtype=float)
    half = radii >= np.median(radii)
    r, M = radii[half], masses[half]
    if np.any(M <= 0):
        raise DomainError("empty balls in the upper half of the radii")
    p = 2.0 - sigma - alpha
    if abs(p) < 1e-14:
        den = np.log(r)
    else:
        den = r ** p
    return float(np.min(np.log(M) / den))


def growth_diagnostics(V, sigma=0.0, alpha=0.0, radii=None, center=None,
                       masses=None, parabolic_slack=0.05, sc_slack=0.05):
    """Growth exponent ``d0``, parabolicity and stochastic completeness verdicts.

    Parabolicity uses the fitted exponent ``k`` of ``M(r) ~ r^k``: the
    integral ``int^oo r dr / M(r)`` diverges iff ``k <= 2``, so the verdict is
    ``k <= 2 + parabolic_slack``. Stochastic completeness uses the growth
    condition ``liminf log M(r) / r^2 < oo``; it is decided from the slope of
    ``log log M`` against ``log r`` (finite ``d0`` iff that slope is ``<= 2``).
    Both verdicts are extrapolations of finite data and labeled as such.
    """
    if not 0 <= sigma <= 2:
        raise DomainError("sigma must lie in [0, 2]")
    if alpha > 2 - sigma:
        raise DomainError("alpha must not exceed 2 - sigma")
    radii = np.asarray(radii, dtype=float)
    if radii.min() <= 0 or radii.max() / radii.min() < 10 - 1e-9:
        raise DomainError("radii must span at least one decade")
    if masses is None:
        masses = mass_in_balls(V, radii, center)
    masses = np.asarray(masses, dtype=float)
    k = fit_growth_exponent(radii, masses)
    d0 = d0_estimate(radii, masses, sigma, alpha)
    parab = Verdict(k <= 2.0 + parabolic_slack, "extrapolated",
                    {"exponent": k, "criterion": "int r dr / M(r) diverges iff exponent <= 2"})
    big = masses > math.e
    if big.sum() >= 2:
        slope = fit_growth_exponent(radii[big], np.log(masses[big]))
    else:
        slope = 0.0
    d0_sc = d0 if (sigma == 0 and alpha == 0) else d0_estimate(radii, masses, 0.0, 0.0)
    sc = Verdict(slope <= 2.0 + sc_slack and math.isfinite(d0_sc), "extrapolated",
                 {"loglog_slope": slope, "d0_sigma0_alpha0": d0_sc})
    return GrowthReport(d0, k, parab, sc, radii, masses)


def radial_growth_varifold(mass_fn, r_max, n=10_000, m=2):
    """Curve-like (``ell = 1``) atoms in ``R^m`` whose mass in ``B_r`` follows
    ``mass_fn``: atom ``i`` sits at distance ``r_i = i r_max / n`` from the
    origin and carries ``mass_fn(r_i) - mass_fn(r_(i-1))``.

    Since balls are open, ``||V||(B_r)`` at a grid radius equals
    ``mass_fn`` at the previous grid radius.
    """
    r = r_max * np.arange(1, n + 1) / n
    M = np.asarray(mass_fn(np.concatenate([[0.0], r])), dtype=float)
    w = np.diff(M)
    if np.any(w <= 0):
        raise DomainError("mass_fn must be strictly increasing")
    # spread the atoms over directions on a golden-angle spiral
    phi = np.pi * (1.0 + math.sqrt(5.0)) * np.arange(n)
    dirs = np.zeros((n, m))
    dirs[:, 0], dirs[:, 1] = np.cos(phi), np.sin(phi)
    tang = np.zeros((n, 1, m))
    tang[:, 0, 0], tang[:, 0, 1] = -np.sin(phi), np.cos(phi)
    return DiscreteVarifold(r[:, None] * dirs, w, tang, np.zeros(n, bool), 1)
