"""Model-space Jacobi functions and the scalar Riccati comparison solution.

``sn_c`` solves ``x'' - c x = 0`` with ``x(0) = 0, x'(0) = 1`` and
``cn_c = sn_c'``. With the sign convention used throughout the package a
lower bound ``Ric >= -c`` compares with the space form of sectional
curvature ``-c``; ``c > 0`` is hyperbolic-like, ``c < 0`` spherical-like.

The comparison solution

    f(tau, t) = (tau cn_c(t) + c sn_c(t)) / (cn_c(t) + tau sn_c(t))

solves ``theta' + theta**2 - c = 0`` with ``theta(0) = tau``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError

SERIES_THRESHOLD = 1e-8
DENOM_RTOL = 1e-10


@dataclass(frozen=True)
class ModelCurvature:
    """The constant ``c`` of a curvature bound ``Ric^(l-1) >= -c``."""

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise DomainError(f"curvature parameter must be finite, got {self.c}")

    def __float__(self):
        return float(self.c)

    def sn(self, t):
        return sn(self.c, t)

    def cn(self, t):
        return cn(self.c, t)


def _c(c):
    return float(c)


def _sn_cn(c, t):
    c = _c(c)
    t = np.asarray(t, dtype=float)
    x = c * t * t
    small = np.abs(x) < SERIES_THRESHOLD
    s = np.empty_like(t)
    k = np.empty_like(t)
    if np.any(small):
        ts, xs = t[small], x[small]
        s[small] = ts * (1.0 + xs / 6.0 + xs * xs / 120.0)
        k[small] = 1.0 + xs / 2.0 + xs * xs / 24.0
    big = ~small
    if np.any(big):
        tb = t[big]
        if c > 0:
            rc = math.sqrt(c)
            s[big] = np.sinh(rc * tb) / rc
            k[big] = np.cosh(rc * tb)
        else:
            rc = math.sqrt(-c)
            s[big] = np.sin(rc * tb) / rc
            k[big] = np.cos(rc * tb)
    return s, k


def sn(c, t):
    """Jacobi function ``sn_c(t)``; scalar in, scalar out."""
    s, _ = _sn_cn(c, t)
    return float(s) if np.ndim(t) == 0 else s


def cn(c, t):
    """``cn_c(t) = sn_c'(t)``."""
    _, k = _sn_cn(c, t)
    return float(k) if np.ndim(t) == 0 else k


def _denominator(tau0, c, t):
    s, k = _sn_cn(c, t)
    return k + tau0 * s, k, s


def _check_denominator(den, k, s, tau0, t):
    scale = np.abs(k) + np.abs(tau0 * s)
    bad = den <= DENOM_RTOL * scale
    if np.any(bad):
        where = np.asarray(t, dtype=float)[bad] if np.ndim(t) else t
        raise DomainError(
            f"comparison solution blows up: cn + tau*sn <= 0 at t={where}")


def riccati_closed_form(tau0, c, t):
    """Solution of ``theta' + theta^2 - c = 0``, ``theta(0) = tau0``, at ``t``.

    Raises ``DomainError`` once ``t`` reaches the first zero of the
    denominator ``cn_c + tau0 sn_c`` (the solution has gone to minus infinity).
    """
    c = _c(c)
    den, k, s = _denominator(tau0, c, t)
    _check_denominator(den, k, s, tau0, t)
    val = (tau0 * k + c * s) / den
    return float(val) if np.ndim(t) == 0 else val


def riccati_partials(tau0, c, t):
    """Return ``(f_tau, f_t)`` of the comparison solution.

    ``f_tau = 1 / den**2`` (the Wronskian ``cn^2 - c sn^2 = 1`` collapses the
    quotient rule), ``f_t = (c - tau0**2) / den**2``.
    """
    c = _c(c)
    den, k, s = _denominator(tau0, c, t)
    _check_denominator(den, k, s, tau0, t)
    d2 = den * den
    # f_tau = (cn^2 - c sn^2) / den^2; written out to avoid relying on the identity
    f_tau = (k * k - c * s * s) / d2
    f_t = (c - tau0 * tau0) / d2
    if np.ndim(t) == 0:
        return float(f_tau), float(f_t)
    return f_tau, f_t


@dataclass(frozen=True)
class RiccatiState:
    """Initial slope, curvature and the end of the interval of existence."""

    tau0: float
    c: float
    domain_end: float

    def __call__(self, t):
        return riccati_closed_form(self.tau0, self.c, t)


def riccati_domain_end(tau0, c, horizon, tol=1e-12):
    """Largest ``T <= horizon`` with ``cn_c + tau0 sn_c > 0`` on ``[0, T)``.

    The denominator is scanned on a grid fine enough to resolve one quarter
    period when ``c < 0`` and the first sign change is refined by bisection.
    Returns ``horizon`` when no zero is found.
    """
    c = _c(c)
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    n = 2000
    if c < 0:
        n = max(n, int(math.ceil(horizon * math.sqrt(-c) / (math.pi / 16))))
    grid = np.linspace(0.0, horizon, n + 1)
    den, _, _ = _denominator(tau0, c, grid)
    bad = np.nonzero(den <= 0.0)[0]
    if bad.size == 0:
        return float(horizon)
    j = bad[0]
    lo, hi = grid[j - 1], grid[j]
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _denominator(tau0, c, mid)[0] > 0.0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def riccati_state(tau0, c, horizon):
    return RiccatiState(float(tau0), _c(c), riccati_domain_end(tau0, c, horizon))
