"""Matrix Riccati and Jacobi tensors along a unit-speed geodesic.

Along a geodesic leaving a hypersurface ``S`` with shape operator ``II_S``
the Hessian of the distance from ``S`` restricted to the normal complement
is the solution ``B`` of

    B' + B^2 + R(t) = 0,      B(0) = -II_S,

and ``B = J' J^{-1}`` for the Jacobi tensor ``J'' + R J = 0``, ``J(0) = I``,
``J'(0) = B(0)``. Focal points are the zeros of ``det J`` (more precisely,
the parameters where ``J`` becomes singular).
"""

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np

from . import _ode
from .errors import DomainError, HypothesisError, IntegratorError
from .modelspace import riccati_closed_form, riccati_domain_end
from .spectral import extremal_frame, p_minus, random_frame, symmetric

FOCAL_BISECT_TOL = 1e-8


@dataclass(frozen=True)
class CurvatureProfile:
    """``R(t)``: the curvature operator ``v -> R(v, g') g'`` in a parallel frame."""

    dim: int
    R_of_t: Callable[[float], np.ndarray]
    horizon: float

    def __call__(self, t):
        return self.R_of_t(t)


def constant_profile(R, horizon=np.inf):
    R = symmetric(np.atleast_2d(R))
    return CurvatureProfile(R.shape[0], lambda t: R, horizon)


def flat_profile(dim, horizon=np.inf):
    return constant_profile(np.zeros((dim, dim)), horizon)


def model_profile(dim, c, horizon=np.inf):
    """Constant curvature with ``R = -c I`` (``Ric >= -c`` saturated)."""
    return constant_profile(-float(c) * np.eye(dim), horizon)


def random_profile(dim, c, rng, horizon=1.0, spread=2.0):
    """Smooth profile with every eigenvalue of ``R(t)`` in ``[-c, -c + spread]``.

    ``R(t) = Q(t) diag(-c + spread/2 (1 + sin(w_i t + phi_i))) Q(t)^T`` with
    ``Q(t) = exp(t K)`` for a random skew ``K``.
    """
    K = rng.standard_normal((dim, dim))
    K = 0.5 * (K - K.T)
    # exp(tK) through the eigendecomposition of the Hermitian matrix iK
    w, U = np.linalg.eigh(1j * K)
    omega = rng.uniform(0.5, 4.0, dim)
    phase = rng.uniform(0, 2 * np.pi, dim)
    half = 0.5 * spread

    def R_of_t(t):
        Q = (U @ np.diag(np.exp(-1j * w * t)) @ U.conj().T).real
        lam = -c + half * (1.0 + np.sin(omega * t + phase))
        return (Q * lam) @ Q.T

    return CurvatureProfile(dim, R_of_t, horizon)


def _check_square(A, dim, name):
    A = np.asarray(A, dtype=float)
    if A.shape != (dim, dim):
        raise DomainError(f"{name} has shape {A.shape}, expected {(dim, dim)}")
    return A


@dataclass
class RiccatiTrajectory:
    times: np.ndarray
    B: np.ndarray  # (n_samples, dim, dim)
    blowup_time: float | None = None

    def max_norm(self):
        return float(np.max(np.linalg.norm(self.B, ord=2, axis=(1, 2))))


@dataclass
class JacobiTrajectory:
    times: np.ndarray
    J: np.ndarray
    Jprime: np.ndarray
    first_focal: float | None = None
    focal_candidates: list = field(default_factory=list)

    def lagrange_defect(self):
        """max_t || J'^T J - J^T J' || (zero for symmetric J'(0))."""
        W = np.einsum("nji,njk->nik", self.Jprime, self.J)
        return float(np.max(np.linalg.norm(W - np.swapaxes(W, 1, 2), axis=(1, 2))))


def integrate_riccati(profile, B0, T, tol=1e-8, t_eval=None):
    """Integrate ``B' = -B^2 - R(t)`` from ``B(0) = B0`` up to ``T``.

    The state is symmetrized after every accepted step. Integration halts
    with ``blowup_time`` set once the spectral norm exceeds ``1/tol``.
    """
    n = profile.dim
    B0 = symmetric(_check_square(B0, n, "B0"))
    if T > profile.horizon:
        raise DomainError(f"T={T} exceeds the profile horizon {profile.horizon}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    limit = 1.0 / tol

    def f(t, y):
        B = y.reshape(n, n)
        return (-(B @ B) - profile(t)).ravel()

    def sym(t, y):
        return symmetric(y.reshape(n, n)).ravel()

    def stop(t, y):
        return np.linalg.norm(y.reshape(n, n), 2) > limit

    res = _ode.integrate(f, 0.0, B0.ravel(), T, rtol=tol, atol=tol,
                         post_step=sym, stop=stop, t_eval=t_eval)
    B = res.y.reshape(-1, n, n)
    return RiccatiTrajectory(res.t, B, res.t_stop if res.status == "stopped" else None)


def _sigma_min_and_slope(J, Jp):
    U, s, Vt = np.linalg.svd(J)
    u, v = U[:, -1], Vt[-1]
    return s[-1], float(u @ Jp @ v)


def _bisect(g, lo, hi, g_lo, tol=FOCAL_BISECT_TOL):
    """Locate the sign change of ``g`` on ``[lo, hi]`` (``g(lo)`` has sign of g_lo)."""
    s_lo = np.sign(g_lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if np.sign(gm) == s_lo and gm != 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def integrate_jacobi(profile, Jprime0, T, tol=1e-8, t_eval=None, focal_tol=None):
    """Integrate ``J'' + R J = 0``, ``J(0) = I``, ``J'(0) = Jprime0`` on ``[0, T]``.

    ``first_focal`` is the first parameter where ``J`` becomes singular. It is
    found on each accepted step either from a sign change of ``det J`` or from
    a local minimum of the smallest singular value (caught by a sign change of
    its derivative ``u^T J' v``) at which that singular value is below
    ``focal_tol`` (default ``1e-6 max(1, |J|)``). Both are refined by bisection
    on single Runge-Kutta steps from the last accepted state.
    """
    n = profile.dim
    Jp0 = _check_square(Jprime0, n, "Jprime0")
    if T > profile.horizon:
        raise DomainError(f"T={T} exceeds the profile horizon {profile.horizon}")

    def f(t, y):
        J = y[: n * n].reshape(n, n)
        Jp = y[n * n:].reshape(n, n)
        return np.concatenate([Jp.ravel(), (-profile(t) @ J).ravel()])

    def split(y):
        return y[: n * n].reshape(n, n), y[n * n:].reshape(n, n)

    y0 = np.concatenate([np.eye(n).ravel(), Jp0.ravel()])
    state = {"t": 0.0, "y": y0.copy(), "det": 1.0,
             "slope": _sigma_min_and_slope(*split(y0))[1]}
    candidates = []

    def at(t_a, y_a, s):
        # single step of length s from the stored accepted state
        if s == 0:
            return y_a
        return _ode.rk_step(f, t_a, y_a, s)[0]

    def watch(t, y):
        t_a, y_a = state["t"], state["y"]
        J, Jp = split(y)
        d = np.linalg.det(J)
        smin, slope = _sigma_min_and_slope(J, Jp)
        if state["det"] > 0 and d <= 0:
            g = lambda tm: np.linalg.det(split(at(t_a, y_a, tm - t_a))[0])
            tf = t if d == 0 else _bisect(g, t_a, t, state["det"])
            candidates.append(("det", tf))
        elif state["slope"] < 0 <= slope:
            g = lambda tm: _sigma_min_and_slope(*split(at(t_a, y_a, tm - t_a)))[1]
            tm = _bisect(g, t_a, t, state["slope"])
            Jm = split(at(t_a, y_a, tm - t_a))[0]
            sm = np.linalg.svd(Jm, compute_uv=False)[-1]
            ftol = focal_tol if focal_tol is not None else 1e-6 * max(1.0, np.linalg.norm(Jm, 2))
            if sm <= ftol:
                candidates.append(("sigma", tm))
        state.update(t=t, y=y.copy(), det=d, slope=slope)
        return False

    res = _ode.integrate(f, 0.0, y0, T, rtol=tol, atol=tol, stop=watch, t_eval=t_eval)
    J = res.y[:, : n * n].reshape(-1, n, n)
    Jp = res.y[:, n * n:].reshape(-1, n, n)
    first = min((tf for _, tf in candidates), default=None)
    return JacobiTrajectory(res.t, J, Jp, first, candidates)


def epsilon_bend(II_S, eps):
    """Shape operator of the supporting hypersurface bent by ``eps``: ``II - eps I``.

    The Riccati initial condition becomes ``B_eps(0) = -II_S + eps I``.
    """
    if eps < 0:
        raise DomainError("eps must be non-negative")
    II = symmetric(II_S)
    return II - eps * np.eye(II.shape[0])


@dataclass
class SecondVariation:
    index_form: float     # <B0 v, v> + int |V'|^2 - <R V, V>
    closed_form: float    # -eps + eps^2 int |V|^2
    int_V2: float
    sup_V: float
    kernel_residual: float

    @property
    def value(self):
        return self.index_form

    @property
    def discrepancy(self):
        return abs(self.index_form - self.closed_form)


def second_variation(profile, B0, eps, T, v, tol=1e-12, kernel_tol=1e-6):
    """Second variation of energy along the modified field ``V = J_eps v e^{-eps t}``.

    ``J_eps`` is the Jacobi tensor with ``J_eps'(0) = B0 + eps I`` and ``v`` is
    a unit vector in the kernel of ``J_eps(T)``. Two quadratures of the same
    quantity are returned: the index form
    ``<B0 v, v> + int_0^T (|V'|^2 - <R V, V>)`` and the closed form
    ``-eps + eps^2 int_0^T |V|^2`` obtained by integrating by parts against
    the Jacobi equation.
    """
    n = profile.dim
    B0 = symmetric(_check_square(B0, n, "B0"))
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise DomainError("v must be a unit vector")
    if eps < 0:
        raise DomainError("eps must be non-negative")

    # state: y (n), y' (n), int(|V'|^2 - <RV,V>), int |V|^2
    def f(t, z):
        y, yp = z[:n], z[n:2 * n]
        R = profile(t)
        e = math.exp(-eps * t)
        V = y * e
        Vp = (yp - eps * y) * e
        return np.concatenate([yp, -R @ y, [Vp @ Vp - V @ (R @ V), V @ V]])

    z0 = np.concatenate([v, (B0 + eps * np.eye(n)) @ v, [0.0, 0.0]])
    sup = {"V": 1.0}

    def track(t, z):
        sup["V"] = max(sup["V"], float(np.linalg.norm(z[:n])) * math.exp(-eps * t))
        return False

    res = _ode.integrate(f, 0.0, z0, T, rtol=tol, atol=tol, stop=track)
    zT = res.y[-1]
    resid = float(np.linalg.norm(zT[:n]))
    if resid > kernel_tol:
        raise HypothesisError(
            f"v is not in the kernel of J_eps(T): |J_eps(T) v| = {resid:.3e}")
    a = float(v @ B0 @ v + zT[2 * n])
    b = float(-eps + eps * eps * zT[2 * n + 1])
    return SecondVariation(a, b, float(zT[2 * n + 1]), sup["V"], resid)


def kernel_direction(J):
    """Unit right singular vector of the smallest singular value of ``J``."""
    _, s, Vt = np.linalg.svd(np.asarray(J, dtype=float))
    return Vt[-1], float(s[-1])


@dataclass
class ComparisonReport:
    max_violation: float      # max over samples/frames of ((1/l) tr_W B - f)/max(1,|f|), clipped at 0
    max_abs_violation: float
    max_saturation_gap: float  # max |P_l^+(B) - f| (zero in the model case)
    n_samples: int
    n_frames: int
    T_checked: float
    blowup_time: float | None


def verify_comparison(profile, II_S, Lambda_ell, c, ell, T, tol=1e-10,
                      n_random_frames=8, n_samples=101, seed=0, hyp_tol=1e-12):
    """Check ``(1/l) tr_W B(t) <= f(-Lambda_l, c, t)`` on sampled ``l``-frames.

    Hypotheses checked first: ``p_minus(R(t), l) >= -c`` at every sample and
    ``p_minus(II_S, l) >= Lambda_l``. Frames tested at every sample are the
    eigenframes of the ``l`` largest eigenvalues of ``B(t)`` (where the
    supremum of the normalized trace is attained), of the ``l`` smallest, and
    ``n_random_frames`` random frames.
    """
    n = profile.dim
    II = symmetric(_check_square(II_S, n, "II_S"))
    c = float(c)
    if not 1 <= ell <= n:
        raise DomainError(f"ell must lie in [1, {n}]")
    if p_minus(II, ell) < Lambda_ell - hyp_tol:
        raise HypothesisError(
            f"p_minus(II_S, {ell}) = {p_minus(II, ell):.6g} < Lambda = {Lambda_ell}")
    ts = np.linspace(0.0, T, n_samples)
    for t in ts:
        pm = p_minus(profile(t), ell)
        if pm < -c - hyp_tol:
            raise HypothesisError(f"p_minus(R({t:.4g}), {ell}) = {pm:.6g} < -c = {-c}")
    end = riccati_domain_end(-Lambda_ell, c, T)
    if end < T:
        raise DomainError(f"comparison solution blows up at t={end:.6g} < T")

    traj = integrate_riccati(profile, -II, T, tol=tol, t_eval=ts)
    rng = np.random.default_rng(seed)
    worst = worst_abs = gap = 0.0
    for t, B in zip(traj.times, traj.B):
        fval = riccati_closed_form(-Lambda_ell, c, t)
        frames = [extremal_frame(B, ell, largest=True), extremal_frame(B, ell)]
        frames += [random_frame(n, ell, rng) for _ in range(n_random_frames)]
        vals = [np.einsum("ij,jk,ik->", E, B, E) / ell for E in frames]
        over = max(vals) - fval
        worst_abs = max(worst_abs, over)
        worst = max(worst, over / max(1.0, abs(fval)))
        gap = max(gap, abs(vals[0] - fval))
    return ComparisonReport(max(worst, 0.0), max(worst_abs, 0.0), gap, len(traj.times),
                            2 + n_random_frames, float(traj.times[-1]), traj.blowup_time)


def hessian_bound_audit(trajectories):
    """Empirical ``max_t ||B(t)||`` over a collection of Riccati trajectories.

    A numerical stand-in for uniform two-sided distance-Hessian bounds; no
    claim is made about the constant of any particular compactness argument.
    """
    return max(tr.max_norm() for tr in trajectories)
