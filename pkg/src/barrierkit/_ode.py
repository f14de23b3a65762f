"""Dormand-Prince 5(4) integrator with step hooks.

A small explicit adaptive Runge-Kutta stepper. It exists (rather than
``scipy.integrate.solve_ivp``) because the Riccati flow needs a projection
after every accepted step (symmetrization) and a stop test on the state
norm, and the focal search needs single steps of prescribed length from a
stored state.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import IntegratorError

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def rk_step(f, t, y, h, k1=None):
    """One Dormand-Prince step of length ``h``.

    Returns ``(y_new, err_vec, k_last)``; ``k_last`` is f(t+h, y_new) (FSAL).
    """
    k = np.empty((7,) + y.shape)
    k[0] = f(t, y) if k1 is None else k1
    for i in range(1, 7):
        dy = sum(a * k[j] for j, a in enumerate(_A[i]) if a != 0.0)
        k[i] = f(t + _C[i] * h, y + h * dy)
    y_new = y + h * np.tensordot(_B5, k, axes=1)
    err = h * np.tensordot(_E, k, axes=1)
    return y_new, err, k[6]


@dataclass
class ODEResult:
    t: np.ndarray
    y: np.ndarray
    status: str  # "done" | "stopped"
    t_stop: float | None = None
    n_steps: int = 0
    n_rejected: int = 0
    hs: list = field(default_factory=list)


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate(f, t0, y0, t_end, rtol=1e-8, atol=1e-10, h0=None,
              post_step=None, stop=None, t_eval=None, max_steps=200_000,
              h_max=None):
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    Parameters
    ----------
    post_step : callable(t, y) -> y, optional
        Applied to every accepted state (projection onto a constraint set).
    stop : callable(t, y) -> bool, optional
        Checked after every accepted step; integration halts when it returns
        True and ``status`` is ``"stopped"``.
    t_eval : array, optional
        If given, the returned samples are exactly these times (every one of
        them is hit by a step end); otherwise all accepted step ends are
        returned.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t_end = float(t_end)
    span = t_end - t
    if span < 0:
        raise ValueError("t_end must not precede t0")
    if post_step is not None:
        y = post_step(t, y)
    if h_max is None:
        h_max = abs(span) if span > 0 else 1.0
    targets = None
    if t_eval is not None:
        targets = [float(s) for s in np.asarray(t_eval, dtype=float) if s > t]
    ts, ys = [t], [y.copy()]
    if span == 0:
        return ODEResult(np.array(ts), np.array(ys), "done")

    k1 = f(t, y)
    if h0 is None:
        d0 = np.linalg.norm(y) + 1e-300
        d1 = np.linalg.norm(k1) + 1e-300
        h = min(0.01 * d0 / d1, 0.1 * span) if d1 > 1e-12 else 0.1 * span
        h = max(h, 1e-6 * span)
    else:
        h = h0
    h = min(h, h_max)
    n_steps = n_rej = 0
    hs = []
    next_target = targets.pop(0) if targets else t_end
    while t < t_end:
        if n_steps >= max_steps:
            raise IntegratorError(f"maximum number of steps ({max_steps}) exceeded at t={t}")
        land = False
        if t + h >= next_target:
            h_try = next_target - t
            land = True
        else:
            h_try = h
        if h_try < 1e-14 * max(1.0, abs(t)):
            if land:
                # consumed by rounding; treat as reached
                t = next_target
                if targets is not None:
                    ts.append(t)
                    ys.append(y.copy())
                next_target = targets.pop(0) if targets else t_end
                continue
            raise IntegratorError(f"step size underflow at t={t}")
        y_new, err, k_last = rk_step(f, t, y, h_try, k1)
        if not np.all(np.isfinite(y_new)):
            en = np.inf
        else:
            en = _error_norm(err, y, y_new, rtol, atol)
        if en <= 1.0:
            t = next_target if land else t + h_try
            if post_step is not None:
                y_new = post_step(t, y_new)
                k_last = f(t, y_new)
            y = y_new
            k1 = k_last
            n_steps += 1
            hs.append(h_try)
            record = targets is None or land
            if record:
                ts.append(t)
                ys.append(y.copy())
            if land:
                next_target = targets.pop(0) if targets else t_end
            fac = _MAX_FACTOR if en == 0 else min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * en ** -0.2))
            if not land:
                h = min(h_try * fac, h_max)
            else:
                # keep the unconstrained proposal when the landing step was short
                h = min(max(h, h_try * fac), h_max)
            if stop is not None and stop(t, y):
                if not record:
                    ts.append(t)
                    ys.append(y.copy())
                return ODEResult(np.array(ts), np.array(ys), "stopped", t, n_steps, n_rej, hs)
        else:
            n_rej += 1
            fac = _MIN_FACTOR if not np.isfinite(en) else max(_MIN_FACTOR, _SAFETY * en ** -0.2)
            h = h_try * fac
    return ODEResult(np.array(ts), np.array(ys), "done", None, n_steps, n_rej, hs)
