"""Model domains with closed-form distance functions, and sampled submanifolds.

Conventions
-----------
* ``r`` is the distance to the boundary, positive inside the domain.
* ``II`` is the second fundamental form of the boundary with respect to the
  inward normal, so a round ball of radius ``rho`` has ``II = I/rho``. On the
  boundary the Hessian of ``r`` restricted to tangent vectors is ``-II``.
* Hessians are expressed in an orthonormal frame of the ambient space. For
  the Euclidean kinds this is the standard frame. ``space_form_ball`` works
  in geodesic normal coordinates around the centre; the frame is
  ``(x/|x|, orthonormal complement)`` transported by the exponential map,
  which is orthonormal by the Gauss lemma. ``horoball`` uses the upper
  half-space model ``{x_m > 0}`` with metric ``|dx|^2 / x_m^2``, the
  horoball ``{x_m > 1}`` (centred at infinity), ``r = log x_m`` and the
  orthonormal frame ``x_m d/dx_i``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _ode
from .errors import DomainError
from .modelspace import cn, sn
from .spectral import p_minus

KINDS = ("euclidean_ball", "space_form_ball", "cylinder", "euclidean_cone",
         "horoball", "slab", "ds_cone_region")


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    m: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.m < 2:
            raise DomainError("ambient dimension must be at least 2")

    def __getitem__(self, key):
        return self.params[key]

    @property
    def curvature(self):
        """``c`` of the ambient lower bound (sectional curvature ``-c``)."""
        if self.kind == "space_form_ball":
            return self["c"]
        if self.kind == "horoball":
            return 1.0
        if self.kind == "cylinder":
            return max(self["c_fiber"], 0.0)
        return 0.0


def _cot_c(c, t):
    return cn(c, t) / sn(c, t)


def euclidean_ball(rho, m=3):
    if not rho > 0:
        raise DomainError("rho must be positive")
    return DomainSpec("euclidean_ball", m, {"rho": float(rho)})


def space_form_ball(c, rho, m=3):
    if not rho > 0:
        raise DomainError("rho must be positive")
    if c < 0 and rho >= math.pi / (2 * math.sqrt(-c)):
        # beyond a hemisphere the boundary is no longer mean convex
        raise DomainError("rho must be below pi/(2 sqrt(-c)) for c < 0")
    return DomainSpec("space_form_ball", m, {"c": float(c), "rho": float(rho)})


def cylinder(s, rho, c_fiber=0.0, m=3):
    """``R^s x B_rho`` with the ball taken in the ``(m-s)``-dimensional space
    form of sectional curvature ``-c_fiber``."""
    if not (1 <= s < m - 1):
        raise DomainError("need 1 <= s < m - 1 for a cylinder with a nontrivial fiber")
    if not rho > 0:
        raise DomainError("rho must be positive")
    if c_fiber < 0 and rho >= math.pi / (2 * math.sqrt(-c_fiber)):
        raise DomainError("rho must be below pi/(2 sqrt(-c_fiber))")
    return DomainSpec("cylinder", m, {"s": int(s), "rho": float(rho), "c_fiber": float(c_fiber)})


def euclidean_cone(theta, m=3, v=None):
    """``{x : <x, v> >= |x| cos(theta)}``, ``theta`` in ``(0, pi/2)``."""
    if not 0 < theta < math.pi / 2:
        raise DomainError("theta must lie in (0, pi/2)")
    v = np.eye(m)[-1] if v is None else np.asarray(v, dtype=float)
    if v.shape != (m,):
        raise DomainError("axis has the wrong dimension")
    v = v / np.linalg.norm(v)
    return DomainSpec("euclidean_cone", m, {"theta": float(theta), "v": tuple(v)})


def horoball(m=3):
    return DomainSpec("horoball", m, {})


def slab(width, m=3, offset=None):
    """``{offset < x_m < offset + width}``; centred at 0 by default."""
    if not width > 0:
        raise DomainError("width must be positive")
    offset = -0.5 * width if offset is None else float(offset)
    return DomainSpec("slab", m, {"width": float(width), "offset": offset})


def ds_cone_region(m, s, c_ds):
    if not (1 <= s < m):
        raise DomainError("need 1 <= s < m")
    if not c_ds > 0:
        raise DomainError("c_ds must be positive")
    return DomainSpec("ds_cone_region", m, {"s": int(s), "c_ds": float(c_ds)})


def reach(d):
    """Largest ``r`` at which the closed-form distance stays smooth."""
    k = d.kind
    if k in ("euclidean_ball", "space_form_ball", "cylinder"):
        return d["rho"]
    if k == "slab":
        return 0.5 * d["width"]
    if k in ("euclidean_cone", "horoball"):
        return math.inf
    raise DomainError(f"{k} has no closed-form distance function")


def _radial_jet(xf, rho, c):
    """Distance ``rho - |xf|`` in a (model) ball and its Hessian in the frame."""
    q = np.linalg.norm(xf)
    k = len(xf)
    if q == 0:
        raise DomainError("the centre of the ball is a cut point of the distance")
    xh = xf / q
    grad = -xh
    H = -_cot_c(c, q) * (np.eye(k) - np.outer(xh, xh))
    return rho - q, grad, H


def distance_jet(d, x, tol=1e-12):
    """Return ``(r, grad r, Hess r)`` at ``x`` (see module conventions)."""
    x = np.asarray(x, dtype=float)
    m = d.m
    if x.shape != (m,):
        raise DomainError(f"point has shape {x.shape}, expected {(m,)}")
    k = d.kind
    if k == "euclidean_ball":
        r, g, H = _radial_jet(x, d["rho"], 0.0)
    elif k == "space_form_ball":
        r, g, H = _radial_jet(x, d["rho"], d["c"])
    elif k == "cylinder":
        s = d["s"]
        rf, gf, Hf = _radial_jet(x[s:], d["rho"], d["c_fiber"])
        r = rf
        g = np.concatenate([np.zeros(s), gf])
        H = np.zeros((m, m))
        H[s:, s:] = Hf
    elif k == "euclidean_cone":
        th = d["theta"]
        v = np.asarray(d["v"])
        a = x @ v
        xp = x - a * v
        q = np.linalg.norm(xp)
        if q == 0:
            raise DomainError("the cone axis is a cut point of the distance")
        w = xp / q
        r = math.sin(th) * a - math.cos(th) * q
        g = math.sin(th) * v - math.cos(th) * w
        P = np.eye(m) - np.outer(v, v) - np.outer(w, w)
        H = -math.cos(th) * P / q
        if math.cos(th) * a + math.sin(th) * q < -tol:
            # foot point would lie beyond the vertex
            raise DomainError("point lies behind the cone vertex")
    elif k == "horoball":
        if x[-1] <= 0:
            raise DomainError("point outside the upper half-space")
        r = math.log(x[-1])
        g = np.zeros(m)
        g[-1] = 1.0
        H = -(np.eye(m) - np.outer(g, g))
    elif k == "slab":
        lo = x[-1] - d["offset"]
        hi = d["offset"] + d["width"] - x[-1]
        g = np.zeros(m)
        if lo <= hi:
            r, g[-1] = lo, 1.0
        else:
            r, g[-1] = hi, -1.0
        H = np.zeros((m, m))
    else:
        raise DomainError(f"{k} has no closed-form distance function")
    if r < -tol:
        raise DomainError(f"point lies outside the domain (r = {r:.3e})")
    if r > reach(d) + tol:
        raise DomainError(f"point lies beyond the reach {reach(d)} (r = {r:.3e})")
    return float(r), g, H


def distance_hessian(d, x):
    r, _, H = distance_jet(d, x)
    return r, H


def signed_distance(d, x):
    return distance_jet(d, x)[0]


def distance_values(d, X, tol=1e-12):
    """Closed-form distance to the boundary at the rows of ``X``.

    Unlike :func:`distance_jet` this is defined on cut points too (the ball
    centre, the cone axis) and beyond the reach; it only needs the points to
    lie in the domain.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != d.m:
        raise DomainError(f"points have dimension {X.shape[1]}, expected {d.m}")
    k = d.kind
    if k in ("euclidean_ball", "space_form_ball"):
        r = d["rho"] - np.linalg.norm(X, axis=1)
    elif k == "cylinder":
        r = d["rho"] - np.linalg.norm(X[:, d["s"]:], axis=1)
    elif k == "euclidean_cone":
        th, v = d["theta"], np.asarray(d["v"])
        a = X @ v
        q = np.linalg.norm(X - np.outer(a, v), axis=1)
        r = math.sin(th) * a - math.cos(th) * q
    elif k == "horoball":
        if np.any(X[:, -1] <= 0):
            raise DomainError("point outside the upper half-space")
        r = np.log(X[:, -1])
    elif k == "slab":
        r = np.minimum(X[:, -1] - d["offset"], d["offset"] + d["width"] - X[:, -1])
    else:
        raise DomainError(f"{k} has no closed-form distance function")
    if np.any(r < -tol):
        raise DomainError(f"point lies outside the domain (r = {r.min():.3e})")
    return r


def tangent_basis(normal):
    """Orthonormal basis (rows) of ``normal``-perp, built from the coordinate
    axes in order so that product structure is kept visible."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    m = len(n)
    P = np.eye(m) - np.outer(n, n)
    basis = []
    for j in range(m):
        w = P[:, j].copy()
        for b in basis:
            w -= (b @ w) * b
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == m - 1:
            break
    return np.array(basis)


def ds_cone_function(m, s, c_ds, x):
    """``u = |x''|^2 - c_ds |x'|^2`` for ``x = (x', x'')`` in ``R^s x R^(m-s)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m,):
        raise DomainError("point has the wrong dimension")
    if not 1 <= s < m:
        raise DomainError("need 1 <= s < m")
    xs, xo = x[:s], x[s:]
    u = xo @ xo - c_ds * (xs @ xs)
    grad = np.concatenate([-2 * c_ds * xs, 2 * xo])
    hess = np.diag(np.concatenate([np.full(s, -2.0 * c_ds), np.full(m - s, 2.0)]))
    return float(u), grad, hess


def boundary_shape_operator(d, y, tol=1e-9):
    """Second fundamental form of the boundary at ``y`` (inward normal).

    Returned as an ``(m-1) x (m-1)`` matrix in the tangent basis produced by
    :func:`tangent_basis` applied to the inward normal.
    """
    y = np.asarray(y, dtype=float)
    if d.kind == "ds_cone_region":
        u, g, Hu = ds_cone_function(d.m, d["s"], d["c_ds"], y)
        gn = np.linalg.norm(g)
        if gn == 0:
            raise DomainError("the vertex of the cone is a singular boundary point")
        if abs(u) > tol * max(1.0, y @ y):
            raise DomainError(f"point is not on the boundary (u = {u:.3e})")
        E = tangent_basis(-g / gn)
        return E @ Hu @ E.T / gn
    r, g, H = distance_jet(d, y)
    if abs(r) > tol:
        raise DomainError(f"point is not on the boundary (r = {r:.3e})")
    E = tangent_basis(g)
    return -(E @ H @ E.T)


def boundary_point(d, rng=None):
    """A sample point on the boundary (deterministic unless ``rng`` given)."""
    m = d.m
    rng = rng or np.random.default_rng(0)
    k = d.kind
    if k in ("euclidean_ball", "space_form_ball"):
        w = rng.standard_normal(m)
        return d["rho"] * w / np.linalg.norm(w)
    if k == "cylinder":
        s = d["s"]
        w = rng.standard_normal(m - s)
        return np.concatenate([rng.standard_normal(s), d["rho"] * w / np.linalg.norm(w)])
    if k == "euclidean_cone":
        v = np.asarray(d["v"])
        w = rng.standard_normal(m)
        w -= (w @ v) * v
        w /= np.linalg.norm(w)
        t = rng.uniform(0.5, 2.0)
        return t * (math.cos(d["theta"]) * v + math.sin(d["theta"]) * w)
    if k == "horoball":
        y = rng.standard_normal(m)
        y[-1] = 1.0
        return y
    if k == "slab":
        y = rng.standard_normal(m)
        y[-1] = d["offset"]
        return y
    if k == "ds_cone_region":
        s, c = d["s"], d["c_ds"]
        xs = rng.standard_normal(s)
        w = rng.standard_normal(m - s)
        return np.concatenate([xs, math.sqrt(c) * np.linalg.norm(xs) * w / np.linalg.norm(w)])
    raise DomainError(k)


def boundary_pminus(d, ell, y=None):
    """``p_minus(II, ell)`` at a boundary point (the ``Lambda_ell`` of the domain)."""
    y = boundary_point(d) if y is None else y
    return p_minus(boundary_shape_operator(d, y), ell)


def cylinder_min_mean_curvature(ell, s, c, r):
    """``((ell - s)/ell) cn_c(r)/sn_c(r)``: the least normalized mean curvature
    of an ``ell``-dimensional minimal-candidate inside ``R^s x B_r``."""
    if not ell > s >= 1:
        raise DomainError("need ell > s >= 1")
    if not r > 0:
        raise DomainError("r must be positive")
    if c < 0 and r >= math.pi / (2 * math.sqrt(-c)):
        raise DomainError("r must be below pi/(2 sqrt(-c)) for c < 0")
    return (ell - s) / ell * _cot_c(c, r)


def ds_threshold(ell, s, m=None, lo=0.0, hi=None, tol=1e-12):
    """Bisection for the ``c_ds`` where ``p_minus(Hess u, ell)`` changes sign."""
    if not 1 <= s < ell:
        raise DomainError("need 1 <= s < ell")
    m = ell + 1 if m is None else m
    hi = float(ell) if hi is None else hi
    x0 = np.zeros(m)

    def g(c):
        return p_minus(ds_cone_function(m, s, c, x0)[2], ell)

    if not (g(lo) >= 0 > g(hi)):
        raise DomainError("threshold not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# sampled submanifolds


@dataclass
class SubmanifoldSample:
    kind: str
    ell: int
    points: np.ndarray        # (N, m)
    frames: np.ndarray        # (N, ell, m), orthonormal rows
    weights: np.ndarray       # (N,) ell-area quadrature
    boundary_mask: np.ndarray  # (N,) bool
    mean_curvature: np.ndarray | None = None  # (N, m) normalized mean curvature vector
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.points.shape[1]

    @property
    def mass(self):
        return float(self.weights.sum())


def _sphere_tangents(x):
    """Two orthonormal tangent vectors at unit vectors ``x`` (rows)."""
    a = np.where(np.abs(x[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = np.cross(x, a)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(x, e1)
    return e1, e2


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + math.sqrt(5.0)) * i
    rr = np.sqrt(1.0 - z * z)
    return np.column_stack([rr * np.cos(phi), rr * np.sin(phi), z])


def sample_round_sphere(rho=1.0, n=10_000):
    x = fibonacci_sphere(n)
    e1, e2 = _sphere_tangents(x)
    pts = rho * x
    return SubmanifoldSample(
        "round_sphere", 2, pts, np.stack([e1, e2], axis=1),
        np.full(n, 4 * math.pi * rho * rho / n), np.zeros(n, bool),
        -pts / rho ** 2, {"rho": rho})


def sample_plane(extent=10.0, spacing=0.1, m=3, boundary=True):
    """Flat unit-density disk ``{|p| < extent}`` in the ``x_1 x_2`` plane.

    Points on the outermost ring (within 1.5 spacings of the rim) carry the
    boundary flag when ``boundary`` is set.
    """
    k = int(math.ceil(extent / spacing))
    g = (np.arange(-k, k + 1)) * spacing
    X, Y = np.meshgrid(g, g, indexing="ij")
    keep = X ** 2 + Y ** 2 < extent ** 2
    n = int(keep.sum())
    pts = np.zeros((n, m))
    pts[:, 0], pts[:, 1] = X[keep], Y[keep]
    frames = np.zeros((n, 2, m))
    frames[:, 0, 0] = 1.0
    frames[:, 1, 1] = 1.0
    rad = np.hypot(pts[:, 0], pts[:, 1])
    bmask = (rad > extent - 1.5 * spacing) if boundary else np.zeros(n, bool)
    return SubmanifoldSample("plane", 2, pts, frames, np.full(n, spacing * spacing), bmask,
                             np.zeros((n, m)), {"extent": extent, "spacing": spacing})


def _profile_mean_curvature(rho, z, ds, ell):
    """Scalar normalized mean curvature of a rotation hypersurface from its
    sampled profile, by second-order finite differences (unit normal
    ``(z' omega, -rho')/|T|``)."""
    r1 = np.gradient(rho, ds, edge_order=2)
    z1 = np.gradient(z, ds, edge_order=2)
    r2 = np.gradient(r1, ds, edge_order=2)
    z2 = np.gradient(z1, ds, edge_order=2)
    speed = np.hypot(r1, z1)
    k_mer = (r2 * z1 - z2 * r1) / speed ** 3
    k_rot = -z1 / (speed * rho)
    return (k_mer + (ell - 1) * k_rot) / ell, r1 / speed, z1 / speed


def _assemble_rotational(kind, ell, rho, z, ds, dirs, dir_w, Hs, tr, tz, meta):
    """Points, frames and weights of a rotation hypersurface in R^(ell+1)."""
    L, K = len(rho), len(dirs)
    m = ell + 1
    pts = np.zeros((L, K, m))
    pts[..., :ell] = rho[:, None, None] * dirs[None]
    pts[..., ell] = z[:, None]
    frames = np.zeros((L, K, ell, m))
    frames[:, :, 0, :ell] = tr[:, None, None] * dirs[None]
    frames[:, :, 0, ell] = tz[:, None]
    if ell == 2:
        tang = np.column_stack([-dirs[:, 1], dirs[:, 0]])[:, None, :]
    else:
        e1, e2 = _sphere_tangents(dirs)
        tang = np.stack([e1, e2], axis=1)
    frames[:, :, 1:, :ell] = tang[None]
    w = (rho ** (ell - 1) * ds)[:, None] * dir_w[None]
    normal = np.zeros((L, K, m))
    normal[..., :ell] = tz[:, None, None] * dirs[None]
    normal[..., ell] = -tr[:, None]
    H = Hs[:, None, None] * normal
    N = L * K
    return SubmanifoldSample(kind, ell, pts.reshape(N, m), frames.reshape(N, ell, m),
                             w.reshape(N), np.zeros(N, bool), H.reshape(N, m), meta)


def sample_catenoid2d(a=1.0, s_max=150.0, levels=1200, n_phi=64):
    """Catenoid ``(a cosh(t/a) cos phi, a cosh(t/a) sin phi, t)``.

    The meridian is sampled uniformly in arclength ``s = a sinh(t/a)`` on
    ``[-s_max, s_max]`` so that the weights ``rho ds dphi`` stay balanced.
    """
    s = np.linspace(-s_max, s_max, 2 * levels + 1)
    ds = s[1] - s[0]
    t = a * np.arcsinh(s / a)
    rho = a * np.cosh(t / a)
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    dirs = np.column_stack([np.cos(phi), np.sin(phi)])
    Hs, tr, tz = _profile_mean_curvature(rho, t, ds, 2)
    return _assemble_rotational("catenoid2d", 2, rho, t, ds, dirs,
                                np.full(n_phi, 2 * np.pi / n_phi), Hs, tr, tz,
                                {"a": a, "s_max": s_max})


def catenoid3d_profile(a=1.0, s_max=150.0, levels=1200, rtol=1e-11):
    """Meridian of the minimal rotation hypersurface in R^4 with neck ``a``.

    Arclength parametrization ``rho' = sin psi, z' = cos psi,
    psi' = 2 cos(psi)/rho`` from the neck ``(a, 0)`` with vertical tangent;
    the first integral ``rho^2 cos psi = a^2`` is returned as a check.
    """
    s_pos = np.linspace(0.0, s_max, levels + 1)

    def f(t, y):
        rho, z, psi = y
        return np.array([math.sin(psi), math.cos(psi), 2 * math.cos(psi) / rho])

    res = _ode.integrate(f, 0.0, np.array([a, 0.0, 0.0]), s_max, rtol=rtol,
                         atol=rtol, t_eval=s_pos)
    rho, z, psi = res.y.T
    invariant = np.max(np.abs(rho ** 2 * np.cos(psi) - a * a))
    s = np.concatenate([-s_pos[:0:-1], s_pos])
    rho = np.concatenate([rho[:0:-1], rho])
    z = np.concatenate([-z[:0:-1], z])
    return s, rho, z, invariant


def sample_catenoid3d(a=1.0, s_max=150.0, levels=1200, n_sphere=64):
    s, rho, z, inv = catenoid3d_profile(a, s_max, levels)
    ds = s[1] - s[0]
    dirs = fibonacci_sphere(n_sphere)
    Hs, tr, tz = _profile_mean_curvature(rho, z, ds, 3)
    return _assemble_rotational("catenoid3d", 3, rho, z, ds, dirs,
                                np.full(n_sphere, 4 * np.pi / n_sphere), Hs, tr, tz,
                                {"a": a, "s_max": s_max, "first_integral_defect": inv,
                                 "height": float(z.max())})


def sample_graph(fn, extent=5.0, spacing=0.1):
    """Graph ``x_3 = fn(x_1, x_2)`` over a disk; frames from finite differences."""
    base = sample_plane(extent, spacing, 3, boundary=True)
    x, y = base.points[:, 0], base.points[:, 1]
    hstep = 1e-5 * max(1.0, extent)
    fx = (fn(x + hstep, y) - fn(x - hstep, y)) / (2 * hstep)
    fy = (fn(x, y + hstep) - fn(x, y - hstep)) / (2 * hstep)
    pts = np.column_stack([x, y, fn(x, y)])
    t1 = np.column_stack([np.ones_like(x), np.zeros_like(x), fx])
    t2 = np.column_stack([np.zeros_like(x), np.ones_like(x), fy])
    frames = np.empty((len(x), 2, 3))
    for i in range(len(x)):
        Q, _ = np.linalg.qr(np.column_stack([t1[i], t2[i]]))
        frames[i] = Q.T
    w = np.sqrt(1 + fx ** 2 + fy ** 2) * spacing ** 2
    return SubmanifoldSample("graph", 2, pts, frames, w, base.boundary_mask, None,
                             {"extent": extent, "spacing": spacing})


SAMPLERS = {
    "round_sphere": sample_round_sphere,
    "plane": sample_plane,
    "catenoid2d": sample_catenoid2d,
    "catenoid3d": sample_catenoid3d,
}


def sample_submanifold(kind, resolution=None, **kw):
    """Dispatch to a sampler. ``resolution`` is the point count for the sphere,
    the spacing for the plane and the number of meridian levels per half for
    the catenoids."""
    if kind == "graph":
        return sample_graph(**kw)
    if kind not in SAMPLERS:
        raise DomainError(f"unsupported submanifold kind {kind!r}")
    if resolution is not None:
        if kind == "round_sphere":
            if not 10 <= resolution <= 2_000_000:
                raise DomainError("sphere resolution out of range")
            kw["n"] = int(resolution)
        elif kind == "plane":
            if not resolution > 0:
                raise DomainError("plane spacing must be positive")
            kw["spacing"] = float(resolution)
        else:
            if not 10 <= resolution <= 100_000:
                raise DomainError("catenoid resolution out of range")
            kw["levels"] = int(resolution)
    return SAMPLERS[kind](**kw)
