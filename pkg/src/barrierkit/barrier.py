"""Exponential barrier ``u = exp(-C2 r)`` in a collar of the boundary.

Given a boundary with ``p_minus(II, l-1) >= Lambda_{l-1}`` and
``p_minus(II, l) >= Lambda_l``, an ambient bound ``Ric^(l-1) >= -c`` and a
target ``h <= Lambda_l``, the function ``u = eta(r)``, ``eta(t) = exp(-C2 t)``
satisfies on ``{0 < r < R}``

    p_minus(Hess u, l) - h |grad u| >= delta_bar      (h < Lambda_l)
    p_minus(Hess u, l) - h |grad u| >= 0              (h = Lambda_l)

with the constants computed by :func:`build_barrier`.
"""

from dataclasses import dataclass, asdict
import math

import numpy as np

from .domains import distance_jet, distance_values, reach, boundary_pminus
from .errors import DomainError
from .spectral import p_minus

DEFAULT_GRID = 200


@dataclass(frozen=True)
class BarrierParams:
    c: float
    ell: int
    Lambda_ell_minus_1: float
    Lambda_ell: float
    h: float
    R: float

    def validate(self):
        if self.ell < 2 or int(self.ell) != self.ell:
            raise DomainError("ell must be an integer >= 2")
        for name in ("c", "Lambda_ell_minus_1", "Lambda_ell", "h", "R"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.Lambda_ell < 0:
            raise DomainError("Lambda_ell must be non-negative")
        if self.h < 0:
            raise DomainError("h must be non-negative")
        if self.h > self.Lambda_ell:
            raise DomainError(f"h = {self.h} exceeds Lambda_ell = {self.Lambda_ell}")
        if self.R <= 0:
            raise DomainError("R must be positive")
        if self.Lambda_ell ** 2 < self.c:
            if self.h == self.Lambda_ell:
                raise DomainError("h = Lambda_ell is not allowed when Lambda_ell^2 < c")
            bound = (self.Lambda_ell - self.h) / self.c
            if self.R >= bound:
                raise DomainError(
                    f"R = {self.R} must be below (Lambda_ell - h)/c = {bound:.6g}")
        return self


@dataclass(frozen=True)
class BarrierCertificate:
    case_tag: str   # "A1" (Lambda^2 > c), "A2" (Lambda^2 = c), "B" (Lambda^2 < c)
    C1: float
    delta: float
    C2: float
    delta_bar: float
    R: float
    ell: int
    h: float
    strict: bool    # False in the degenerate branch h = Lambda_ell

    def eta(self, t):
        return np.exp(-self.C2 * np.asarray(t, dtype=float))

    def as_dict(self):
        return asdict(self)


def case_tag(Lambda_ell, c):
    d = Lambda_ell ** 2 - c
    if d > 0:
        return "A1"
    if d == 0:
        return "A2"
    return "B"


def build_barrier(p: BarrierParams) -> BarrierCertificate:
    p.validate()
    ell = int(p.ell)
    tag = case_tag(p.Lambda_ell, p.c)
    C1 = ell * p.h + (ell - 1) * max(-p.Lambda_ell_minus_1 + 1.0, math.sqrt(max(p.c, 0.0)))
    if p.h == p.Lambda_ell:
        delta = 0.0
    elif tag == "B":
        delta = ell * (p.Lambda_ell - p.h - p.c * p.R) / 2.0
    else:
        delta = ell * (p.Lambda_ell - p.h) / 2.0
    C2 = C1 + delta
    delta_bar = C2 * math.exp(-C2 * p.R) * delta / ell
    return BarrierCertificate(tag, C1, delta, C2, delta_bar, p.R, ell, p.h, delta > 0)


def eval_barrier(cert, r):
    """Return ``(u, |grad u|) = (exp(-C2 r), C2 exp(-C2 r))``."""
    r = float(r)
    if not 0.0 <= r <= cert.R:
        raise DomainError(f"r = {r} outside [0, R = {cert.R}]")
    u = math.exp(-cert.C2 * r)
    return u, cert.C2 * u


def barrier_hessian(cert, grad_r, hess_r, r):
    """``Hess u = eta'' dr (x) dr + eta' Hess r`` for ``u = eta(r)``."""
    u = math.exp(-cert.C2 * r)
    return cert.C2 ** 2 * u * np.outer(grad_r, grad_r) - cert.C2 * u * hess_r, cert.C2 * u


@dataclass
class CertificateReport:
    min_margin: float
    required: float        # delta_bar, or 0 in the degenerate branch
    slack: float
    passed: bool
    r_grid: np.ndarray
    margins: np.ndarray
    message: str = ""


def _ray(d, n):
    """Points at distance ``t`` from the boundary along an inward normal ray."""
    from .domains import boundary_point
    y = boundary_point(d)
    _, g, _ = distance_jet(d, y)
    if d.kind == "horoball":
        # normal geodesics are vertical lines, r = log x_m
        return lambda t: np.concatenate([y[:-1], [math.exp(t)]])
    return lambda t: y + t * g


def certify_on_model(cert, domain, n_grid=DEFAULT_GRID, slack=1e-8, r_grid=None):
    """Check ``p_minus(Hess u, l) - h |grad u|`` against ``delta_bar`` on ``(0, min(R, reach))``.

    The Hessian of the distance comes from the closed form of ``domain``;
    samples are taken along one inward normal ray (the model kinds are
    homogeneous along the boundary). Returns the minimum margin over the grid.
    """
    top = min(cert.R, reach(domain))
    if r_grid is None:
        # open interval: drop the endpoints, where the reach may be singular
        r_grid = np.linspace(0.0, top, n_grid + 2)[1:-1]
    point = _ray(domain, n_grid)
    margins = np.empty(len(r_grid))
    for i, t in enumerate(r_grid):
        x = point(t)
        r, g, H = distance_jet(domain, x)
        Hu, gn = barrier_hessian(cert, g, H, r)
        margins[i] = p_minus(Hu, cert.ell) - cert.h * gn
    required = cert.delta_bar if cert.strict else 0.0
    mn = float(margins.min())
    ok = mn >= required - slack
    msg = "" if cert.strict else "no strict certificate (h = Lambda_ell, delta_bar = 0)"
    return CertificateReport(mn, required, slack, bool(ok), np.asarray(r_grid), margins, msg)


def params_for_domain(domain, ell, h=0.0, R=None, c=None):
    """``BarrierParams`` read off a model domain: ``Lambda`` from its boundary
    shape operator and ``c`` from its ambient curvature."""
    c = domain.curvature if c is None else c
    lam1 = boundary_pminus(domain, ell - 1)
    lam = boundary_pminus(domain, ell)
    if R is None:
        R = min(1.0, 0.5 * reach(domain)) if math.isfinite(reach(domain)) else 1.0
    return BarrierParams(c, ell, lam1, lam, h, R)


def barrier_functions(cert, domain):
    """``u = exp(-C2 r)``, its gradient and Hessian as functions of ``(N, m)``
    point arrays, with ``r`` the closed-form distance of ``domain``. The
    derivatives need points inside the reach, away from cut points."""

    def jets(x):
        x = np.atleast_2d(x)
        r = np.empty(len(x))
        g = np.empty_like(x, dtype=float)
        H = np.empty((len(x), x.shape[1], x.shape[1]))
        for i, p in enumerate(x):
            r[i], g[i], H[i] = distance_jet(domain, p)
        return r, g, H

    def u(x):
        return np.exp(-cert.C2 * distance_values(domain, x))

    def grad(x):
        r, g, _ = jets(x)
        return -(cert.C2 * np.exp(-cert.C2 * r))[:, None] * g

    def hess(x):
        r, g, H = jets(x)
        e = np.exp(-cert.C2 * r)[:, None, None]
        return cert.C2 ** 2 * e * np.einsum("ni,nj->nij", g, g) - cert.C2 * e * H

    return u, grad, hess
