import math

import numpy as np
import pytest

from barrierkit import _ode


def test_exponential_decay_hits_eval_points():
    res = _ode.integrate(lambda t, y: -y, 0.0, np.array([1.0]), 2.0, rtol=1e-10, atol=1e-12,
                         t_eval=np.array([0.5, 1.0, 2.0]))
    np.testing.assert_array_equal(res.t, [0.0, 0.5, 1.0, 2.0])  # t0 is always kept
    np.testing.assert_allclose(res.y[:, 0], np.exp(-res.t), rtol=1e-9)


def test_harmonic_oscillator_energy():
    f = lambda t, y: np.array([y[1], -y[0]])
    res = _ode.integrate(f, 0.0, np.array([0.0, 1.0]), 10.0, rtol=1e-10, atol=1e-12)
    assert res.y[-1][0] == pytest.approx(math.sin(10.0), abs=1e-8)


def test_stop_callback_halts():
    res = _ode.integrate(lambda t, y: np.ones(1), 0.0, np.zeros(1), 10.0,
                         stop=lambda t, y: y[0] > 1.0)
    assert res.t_stop < 10.0 and res.y[-1][0] > 1.0
