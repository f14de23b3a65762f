"""Maximum principles at infinity for varifolds: constants, test fields, audits.

The weak maximum principle bounds

    K = ess inf_{u > gamma} (1 + r)^alpha [p_minus(Hess u, l) - h |grad u|]

by ``C(sigma, alpha, d0) / l * max(u_hat, 0)`` when ``u`` grows at most like
``r^sigma`` and the mass grows like ``exp(d0 r^(2 - sigma - alpha))`` (or like
``r^d0`` when ``alpha = 2 - sigma``). The audits below evaluate both sides on
sampled varifolds; they are necessary-condition checks, not proofs.
"""

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from scipy import integrate as sp_integrate
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, HypothesisError
from .meshes import boundary_vertices, cotan_laplacian, sphere_cap_mesh
from .spectral import p_minus_batch
from .varifold import TestField, first_variation

# ---------------------------------------------------------------------------
# constant table


@dataclass(frozen=True)
class GrowthParams:
    sigma: float
    alpha: float
    d0: float

    def validate(self):
        if not 0.0 <= self.sigma <= 2.0:
            raise DomainError("sigma must lie in [0, 2]")
        if self.alpha > 2.0 - self.sigma + 1e-15:
            raise DomainError("alpha must not exceed 2 - sigma")
        if self.d0 < 0:
            raise DomainError("d0 must be non-negative")
        return self

    @property
    def polynomial(self):
        """True in the ``alpha = 2 - sigma`` (polynomial growth) regime."""
        return abs(self.alpha - (2.0 - self.sigma)) <= 1e-15


def constant_branch(sigma, alpha, d0, I_positive=True):
    gp = GrowthParams(sigma, alpha, d0).validate()
    if not I_positive:
        return "I=0"
    if gp.polynomial:
        return "poly" if sigma + d0 >= 2 else "poly-small"
    if sigma == 0:
        return "sigma=0"
    return "exp-1" if alpha < 2 * (1 - sigma) else "exp-2"


def constant_C(sigma, alpha, d0, I_positive=True):
    """The constant ``C(sigma, alpha, d0)`` of the maximum principle."""
    br = constant_branch(sigma, alpha, d0, I_positive)
    if br in ("I=0", "sigma=0", "poly-small"):
        return 0.0
    if br == "exp-1":
        return d0 * (2 - sigma - alpha) ** 2
    if br == "exp-2":
        return d0 * sigma * (2 - sigma - alpha)
    return sigma * (sigma + d0 - 2)


# ---------------------------------------------------------------------------
# cutoffs and ramps


def cutoff_profile(t, theta, R):
    """``psi(t)``: 1 on ``[0, theta R]``, 0 on ``[R, oo)``, quadratic taper between.

    With ``s = (t - theta R)/((1 - theta) R)`` the taper is ``1 - 2 s^2`` for
    ``s <= 1/2`` and ``2 (1 - s)^2`` beyond; it is ``C^1`` with
    ``|psi'| <= 2 / ((1 - theta) R)``. Returns ``(psi, psi')``.
    """
    t = np.asarray(t, dtype=float)
    w = (1.0 - theta) * R
    s = np.clip((t - theta * R) / w, 0.0, 1.0)
    psi = np.where(s <= 0.5, 1.0 - 2.0 * s * s, 2.0 * (1.0 - s) ** 2)
    dpsi = np.where(s <= 0.5, -4.0 * s, -4.0 * (1.0 - s)) / w
    dpsi = np.where((s <= 0) | (s >= 1), 0.0, dpsi)
    return psi, dpsi


def ramp(t, gamma, eps):
    """``lambda(t)``: 0 up to ``gamma + eps/2``, 1 from ``gamma + eps``, cubic
    smoothstep between. Returns ``(lambda, lambda')``."""
    t = np.asarray(t, dtype=float)
    a, w = gamma + 0.5 * eps, 0.5 * eps
    x = np.clip((t - a) / w, 0.0, 1.0)
    lam = x * x * (3.0 - 2.0 * x)
    dlam = np.where((x <= 0) | (x >= 1), 0.0, 6.0 * x * (1.0 - x) / w)
    return lam, dlam


# ---------------------------------------------------------------------------
# test fields


@dataclass(frozen=True)
class TestFieldSpec:
    """Parameters of ``Z = -psi^2 lambda(u) F(v, r) grad u``, ``v = beta (1+r)^sigma - u``."""

    __test__ = False

    case: str           # "i", "ii", "iii", "iv"
    sigma: float
    alpha: float
    K: float
    ell: int
    beta: float
    b: float
    gamma_level: float
    theta: float
    R: float
    ramp_eps: float
    tau: float = 0.5

    @property
    def eta(self):
        return self.alpha + 2.0 * (self.sigma - 1.0)

    @property
    def q(self):
        s, a, K, l, be, b, t = (self.sigma, self.alpha, self.K, self.ell,
                                self.beta, self.b, self.tau)
        if self.case in ("i", "ii"):
            return t * 4 * l * K / (be ** 2 * (2 - s - a) ** 2)
        if self.case == "iii":
            return t * 4 * l * K * (be - b) ** (self.eta / s) / (be ** 2 * s * (2 - s - a))
        return t * 4 * (be - b) * l * K / (be ** 2 * s ** 2)

    def validate(self):
        if self.case not in ("i", "ii", "iii", "iv"):
            raise DomainError(f"unknown case {self.case!r}")
        if not self.beta > self.b > 0:
            raise DomainError("need beta > b > 0")
        if not 0.5 < self.theta < 1:
            raise DomainError("theta must lie in (1/2, 1)")
        if not (self.R > 0 and self.ramp_eps > 0 and self.K > 0 and 0 < self.tau < 1):
            raise DomainError("R, ramp_eps, K must be positive and tau in (0, 1)")
        expected = field_case(self.sigma, self.alpha)
        if expected != self.case:
            raise DomainError(f"case {self.case} does not match (sigma, alpha); expected {expected}")
        return self


def field_case(sigma, alpha):
    if abs(alpha - (2 - sigma)) <= 1e-15:
        return "iv"
    if sigma == 0:
        return "ii"
    return "i" if alpha + 2 * (sigma - 1) < 0 else "iii"


def F_weight(spec, v, r):
    """``F(v, r)`` for the case of ``spec`` (positive, decreasing in ``v``)."""
    q, s, eta = spec.q, spec.sigma, spec.eta
    if spec.case in ("i", "ii"):
        return np.exp(-q * v * (1.0 + r) ** (-eta))
    if spec.case == "iii":
        return np.exp(-q * v ** ((s - eta) / s))
    return v ** (-q)


def _radius(x, center):
    c = np.zeros(x.shape[1]) if center is None else np.asarray(center, dtype=float)
    d = x - c
    return np.linalg.norm(d, axis=1), d


def build_test_field(spec, u, grad_u, center=None, samples=None):
    """The vector field ``-psi(r)^2 lambda(u) F(v, r) grad u``.

    ``u`` and ``grad_u`` map ``(N, m)`` points to ``(N,)`` values and
    ``(N, m)`` gradients; ``r`` is the distance from ``center``. When
    ``samples`` are given, positivity of ``v`` and the bracket
    ``(beta - b)(1+r)^sigma <= v <= beta (1+r)^sigma`` are checked on the
    samples in ``{u > gamma}``.
    """
    spec.validate()

    def v_of(x):
        r, _ = _radius(x, center)
        return spec.beta * (1.0 + r) ** spec.sigma - u(x), r

    if samples is not None:
        uu = u(samples)
        sel = uu > spec.gamma_level
        if sel.any():
            v, r = v_of(samples[sel])
            lo = (spec.beta - spec.b) * (1 + r) ** spec.sigma
            if np.any(v <= 0):
                raise HypothesisError("v = beta (1+r)^sigma - u is not positive on the samples")
            if np.any(v < lo - 1e-12) or np.any(uu[sel] < -1e-12):
                raise HypothesisError("v leaves the bracket [(beta-b)(1+r)^sigma, beta(1+r)^sigma]")

    def Z(x):
        v, r = v_of(x)
        psi, _ = cutoff_profile(r, spec.theta, spec.R)
        lam, _ = ramp(u(x), spec.gamma_level, spec.ramp_eps)
        w = psi ** 2 * lam
        out = np.zeros_like(x, dtype=float)
        on = w > 0
        if on.any():
            out[on] = -(w[on] * F_weight(spec, v[on], r[on]))[:, None] * grad_u(x[on])
        return out

    return TestField(Z, spec.R, center)


@dataclass
class ParabolicField:
    """``Z = -psi^2 lambda(u) e^u grad u`` with the pieces needed to expand
    its tangential divergence."""

    u: Callable
    grad_u: Callable
    hess_u: Callable
    gamma: float
    ramp_eps: float
    theta: float
    R: float
    center: np.ndarray | None = None

    def Z(self, x):
        r, _ = _radius(x, self.center)
        psi, _ = cutoff_profile(r, self.theta, self.R)
        uu = self.u(x)
        lam, _ = ramp(uu, self.gamma, self.ramp_eps)
        return -(psi ** 2 * lam * np.exp(uu))[:, None] * self.grad_u(x)

    def as_test_field(self):
        return TestField(self.Z, self.R, self.center)

    def expansion(self, V):
        """Right-hand side of ``div^W Z`` expanded by the product rule, integrated:

        ``-sum w [2 psi lam e^u <grad^W psi, grad^W u>
                  + psi^2 (lam' + lam) e^u |grad^W u|^2
                  + psi^2 lam e^u div^W grad u]``.

        Returns a dict with the three integrals and their sum.
        """
        x, fr, w = V.points, V.frames, V.weights
        r, d = _radius(x, self.center)
        psi, dpsi = cutoff_profile(r, self.theta, self.R)
        with np.errstate(invalid="ignore", divide="ignore"):
            gpsi = np.where(r[:, None] > 0, dpsi[:, None] * d / r[:, None], 0.0)
        uu = self.u(x)
        g = self.grad_u(x)
        Hs = self.hess_u(x)
        lam, dlam = ramp(uu, self.gamma, self.ramp_eps)
        eu = np.exp(uu)
        # tangential projections
        gW = np.einsum("nim,nm->ni", fr, g)
        pW = np.einsum("nim,nm->ni", fr, gpsi)
        divW = np.einsum("nim,nmk,nik->n", fr, Hs, fr)
        cross = float(np.sum(w * 2 * psi * lam * eu * np.einsum("ni,ni->n", pW, gW)))
        energy = float(np.sum(w * psi ** 2 * (lam + dlam) * eu * np.einsum("ni,ni->n", gW, gW)))
        hess = float(np.sum(w * psi ** 2 * lam * eu * divW))
        return {"cross": cross, "energy": energy, "hessian": hess,
                "total": -(cross + energy + hess)}


# ---------------------------------------------------------------------------
# audits


@dataclass
class PrincipleReport:
    K_estimate: float
    C_value: float
    u_hat: float
    bound_rhs: float
    verdict: str             # "consistent" | "violated"
    tolerance: float
    I_estimate: float
    I_positive: bool
    I_borderline: bool
    branch: str
    hessian_mode: str        # "ambient" | "tangent"
    n_level_points: int
    argmin_point: list
    inputs: dict = field(default_factory=dict)

    def as_dict(self):
        d = dict(self.__dict__)
        return d


def _batched(fn, x):
    out = np.asarray(fn(x), dtype=float)
    return out


def audit_max_principle(V, u, grad_u, hess_u, h, gp, gamma, center=None,
                        I_threshold=None, tol=1e-9, hessian_mode="ambient",
                        mean_curvature=None):
    """Compare the sampled ``K`` with ``C(sigma, alpha, d0)/l * max(u_hat, 0)``.

    ``u``, ``grad_u`` and ``hess_u`` act on ``(N, m)`` arrays. In the default
    ``"ambient"`` mode ``p_minus`` of the ambient Hessian is used. In
    ``"tangent"`` mode the normalized trace of the Hessian over each atom's
    plane plus ``<H, grad u>`` is used instead (needs ``mean_curvature``).
    ``u_hat`` is the maximum of ``u / r^sigma`` over the outer half of the
    level set (by distance from ``center``). ``I`` is ``sum w |grad^W u|^2``
    over the level set, judged positive above ``I_threshold``
    (default ``1e-12 * mass``); values within a factor 100 of the threshold
    are flagged borderline.
    """
    gp.validate()
    x = V.points
    uu = _batched(u, x)
    sel = uu > gamma
    if not sel.any():
        raise HypothesisError(f"the level set {{u > {gamma}}} contains no sample points")
    if np.any(V.boundary_mask[sel]):
        raise HypothesisError("the level set meets the boundary support")
    xs = x[sel]
    r, _ = _radius(xs, center)
    g = _batched(grad_u, xs)
    Hs = _batched(hess_u, xs)
    gnorm = np.linalg.norm(g, axis=1)
    if hessian_mode == "ambient":
        P = p_minus_batch(Hs, V.ell)
    elif hessian_mode == "tangent":
        if mean_curvature is None:
            raise DomainError("tangent mode needs the mean curvature of the samples")
        fr = V.frames[sel]
        P = np.einsum("nim,nmk,nik->n", fr, Hs, fr) / V.ell
        P = P + np.einsum("nm,nm->n", mean_curvature[sel], g)
    else:
        raise DomainError(f"unknown hessian mode {hessian_mode!r}")
    vals = (1.0 + r) ** gp.alpha * (P - h * gnorm)
    k = int(np.argmin(vals))
    K = float(vals[k])

    outer = r >= np.median(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = uu[sel][outer] / np.where(r[outer] > 0, r[outer], np.nan) ** gp.sigma
    u_hat = float(np.nanmax(ratio)) if np.any(np.isfinite(ratio)) else float(np.max(uu[sel]))

    gW = np.einsum("nim,nm->ni", V.frames[sel], g)
    I_est = float(np.sum(V.weights[sel] * np.einsum("ni,ni->n", gW, gW)))
    thr = 1e-12 * V.mass if I_threshold is None else I_threshold
    I_pos = I_est > thr
    borderline = thr / 100 < I_est < thr * 100
    C = constant_C(gp.sigma, gp.alpha, gp.d0, I_pos)
    rhs = C / V.ell * max(u_hat, 0.0)
    verdict = "consistent" if K <= rhs + tol else "violated"
    return PrincipleReport(
        K, C, u_hat, rhs, verdict, tol, I_est, bool(I_pos), bool(borderline),
        constant_branch(gp.sigma, gp.alpha, gp.d0, I_pos), hessian_mode, int(sel.sum()),
        xs[k].tolist(),
        {"h": h, "sigma": gp.sigma, "alpha": gp.alpha, "d0": gp.d0, "gamma": gamma,
         "I_threshold": thr})


@dataclass
class EnclosureBound:
    bound: float
    case: str            # "A" or "B"
    nonexistence: bool   # no boundaryless varifold fits in the domain


def enclosure_bounds(Lambda_ell, H_norm, c, dist_boundary_Sigma):
    """Guaranteed lower bound on ``dist(spt ||Sigma||, boundary of Omega)``.

    Case A (``Lambda^2 >= c``): the support cannot come closer to the boundary
    than its own boundary does; with no boundary at all (``dist = inf``) there
    is no such varifold. Case B (``Lambda^2 < c``): the bound is
    ``min((Lambda - |H|)/c, dist)``.
    """
    if H_norm < 0:
        raise DomainError("H_norm must be non-negative")
    if H_norm >= Lambda_ell:
        raise DomainError("need |H| < Lambda_ell (the equality case is handled by the parabolic audit)")
    if c > Lambda_ell ** 2:
        return EnclosureBound(min((Lambda_ell - H_norm) / c, dist_boundary_Sigma), "B", False)
    return EnclosureBound(dist_boundary_Sigma, "A", math.isinf(dist_boundary_Sigma))


def knn_components(points, k=8, link_factor=3.0):
    """Connected components of the ``k``-nearest-neighbour graph, keeping only
    edges shorter than ``link_factor`` times the median nearest-neighbour
    distance."""
    from scipy.spatial import cKDTree

    n = len(points)
    if n == 1:
        return 1, np.zeros(1, dtype=int)
    kk = min(k + 1, n)
    dist, nb = cKDTree(points).query(points, k=kk)
    link = link_factor * np.median(dist[:, 1])
    rows = np.repeat(np.arange(n), kk - 1)
    cols = nb[:, 1:].ravel()
    keep = dist[:, 1:].ravel() <= link
    A = coo_matrix((np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(n, n))
    return connected_components(A, directed=False)


@dataclass
class ParabolicReport:
    passed: bool
    hypothesis_ok: bool
    conclusion_ok: bool
    parabolic: bool | None
    n_components: int
    component_spread: list     # max |u - mean| per component
    hypothesis_failures: list  # (eps, n_failures, worst margin, sample points)
    min_margins: list          # min of P - h|grad u| + eps per eps
    deviation_points: list     # points of largest |u - component mean|
    note: str = ""


def audit_parabolic(V, u_sequence, h, gamma, parabolic=None, spread_tol=1e-6,
                    k=8, n_report=5):
    """Audit the parabolic maximum principle on a sampled varifold.

    ``u_sequence`` is a list of ``(u, grad_u, hess_u, eps)`` tuples; the entry
    with the smallest ``eps`` stands for the limit function. The hypothesis
    ``p_minus(Hess u_eps, l) - h |grad u_eps| >= -eps`` is checked on the
    level set, failures are localized. When the hypotheses hold and ``V`` is
    parabolic the conclusion (``u`` constant on every connected component of
    the level set) is checked.
    """
    if not V.rectifiable:
        raise HypothesisError("the parabolic audit needs a rectifiable varifold")
    if not u_sequence:
        raise DomainError("empty function sequence")
    seq = sorted(u_sequence, key=lambda item: item[3])
    u0 = seq[0][0]
    uu = np.asarray(u0(V.points), dtype=float)
    sel = uu > gamma
    if not sel.any():
        raise HypothesisError("empty level set")
    if np.any(V.boundary_mask[sel]):
        raise HypothesisError("the level set meets the boundary support")
    xs = V.points[sel]
    failures, margins = [], []
    for u, gu, hu, eps in seq:
        Hs = np.asarray(hu(xs), dtype=float)
        gn = np.linalg.norm(np.asarray(gu(xs), dtype=float), axis=1)
        m = p_minus_batch(Hs, V.ell) - h * gn + eps
        margins.append(float(m.min()))
        bad = m < 0
        if bad.any():
            order = np.argsort(m)[:n_report]
            failures.append((eps, int(bad.sum()), float(m.min()), xs[order].tolist()))
    hyp_ok = not failures
    ncomp, labels = knn_components(xs, k)
    spread, dev_pts = [], []
    us = uu[sel]
    worst_idx = []
    for cidx in range(ncomp):
        idx = np.nonzero(labels == cidx)[0]
        dev = np.abs(us[idx] - us[idx].mean())
        spread.append(float(dev.max()))
        worst_idx.extend(idx[np.argsort(dev)[::-1][:n_report]].tolist())
    concl_ok = max(spread) <= spread_tol
    if worst_idx:
        devs = np.abs(us - np.array([us[labels == labels[i]].mean() for i in range(len(us))]))
        top = np.argsort(devs)[::-1][:n_report]
        dev_pts = xs[top].tolist()
    if parabolic is False:
        note = "growth test does not certify parabolicity; conclusion not implied"
        passed = True
    elif not hyp_ok:
        note = "hypothesis fails at the listed points; conclusion not implied"
        passed = True
    else:
        note = ("hypotheses hold and u is constant on each component" if concl_ok else
                "hypotheses hold but u is not constant on a component: no varifold with "
                "these properties can sit in the domain")
        passed = concl_ok
    return ParabolicReport(bool(passed), hyp_ok, bool(concl_ok), parabolic, int(ncomp),
                           spread, failures, margins, dev_pts, note)


# ---------------------------------------------------------------------------
# Rigoli-Setti inequality


@dataclass
class RigoliSettiReport:
    lhs: float   # int_r0^r (s - r0) / M(s) ds
    rhs: float   # 2 int_r0^r ds / M'(s)
    margin: float


def rigoli_setti(M, dM, r0, r1):
    """Both sides of ``int (s - r0)/M(s) ds <= 2 int ds / M'(s)`` on ``[r0, r1]``."""
    if not r1 > r0:
        raise DomainError("need r1 > r0")
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=500)
    lhs = sp_integrate.quad(lambda s: (s - r0) / M(s), r0, r1, **opts)[0]
    rhs = 2.0 * sp_integrate.quad(lambda s: 1.0 / dM(s), r0, r1, **opts)[0]
    return RigoliSettiReport(lhs, rhs, rhs - lhs)


# ---------------------------------------------------------------------------
# Barta bound


@dataclass
class BartaReport:
    discrete_inf: float
    analytic_inf: float | None
    floor: float
    delta_bar: float
    eps: float
    n_region: int
    passed: bool
    slack: float


def barta_quotient(V, F, u, u_star, eps, interior=None):
    """``-Delta(u* - u)/(u* - u) = Delta u / (u* - u)`` at interior vertices of
    ``{u > u* - eps}`` with the cotangent Laplacian."""
    u = np.asarray(u, dtype=float)
    if np.any(u >= u_star):
        raise DomainError("u must stay below u_star on the mesh")
    L, M = cotan_laplacian(V, F)
    lap = -(L @ u) / M
    if interior is None:
        interior = ~boundary_vertices(F, len(V))
    region = interior & (u > u_star - eps)
    if not region.any():
        raise DomainError("empty exterior region")
    return lap[region] / (u_star - u[region]), region, lap


def barta_bound(V, F, u, u_star, delta_bar, ell, eps, slack=0.05, analytic_lap=None):
    """Discrete Barta quotient on ``U_eps = {u > u* - eps}`` against the floor
    ``l delta_bar / (6 eps)``. Passes when the discrete infimum is at least
    ``(1 - slack)`` times the floor."""
    if ell != 2:
        raise DomainError("the cotangent Laplacian supports ell = 2 only")
    q, region, _ = barta_quotient(V, F, u, u_star, eps)
    floor = ell * delta_bar / (6.0 * eps)
    ana = None
    if analytic_lap is not None:
        ana = float(np.min(analytic_lap[region] / (u_star - np.asarray(u)[region])))
    dinf = float(q.min())
    return BartaReport(dinf, ana, floor, delta_bar, eps, int(region.sum()),
                       dinf >= (1 - slack) * floor, slack)


def sphere_cap_example(eps, r_cap=math.pi / 5, level=6, ell=2):
    """Cap of the unit sphere with ``u = 1 - exp(-r)`` (``r`` = geodesic
    distance from the pole), ``u* = u(r_cap)`` and
    ``delta_bar = (2/l) min_cap Delta u`` with ``Delta u = e^{-r}(cot r - 1)``."""
    V, F = sphere_cap_mesh(r_cap, level)
    r = np.arccos(np.clip(V[:, 2], -1.0, 1.0))
    u = 1.0 - np.exp(-r)
    u_star = 1.0 - math.exp(-r_cap)
    with np.errstate(divide="ignore"):
        lap = np.exp(-r) * (1.0 / np.tan(r) - 1.0)
    delta_bar = 2.0 / ell * (math.exp(-r_cap) * (1.0 / math.tan(r_cap) - 1.0))
    return barta_bound(V, F, u, u_star, delta_bar, ell, eps, analytic_lap=lap)
