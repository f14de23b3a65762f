"""Averages of the smallest eigenvalues and traces over subspaces.

``p_minus(A, l)`` is the mean of the ``l`` smallest eigenvalues of a
symmetric form. By Ky Fan's principle it is also the minimum of the
normalized trace ``(1/l) tr_W A`` over ``l``-dimensional subspaces ``W``;
``min_trace_subspace`` computes that minimum by a direct search so the two
can be compared.
"""

import numpy as np
from scipy import optimize

from .errors import DomainError

ORTHO_TOL = 1e-10


class SymmetricForm(np.ndarray):
    """A square float array symmetrized on construction."""

    def __new__(cls, entries):
        a = np.array(entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"symmetric form must be square, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        return a.view(cls)

    @property
    def dim(self):
        return self.shape[0]


def symmetric(a):
    """Return a plain ndarray copy of ``(a + a^T)/2``."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def _check_ell(n, ell):
    if not (1 <= int(ell) <= n) or int(ell) != ell:
        raise DomainError(f"ell must be an integer in [1, {n}], got {ell}")
    return int(ell)


def eigvals_sorted(A):
    return np.linalg.eigvalsh(symmetric(A))


def p_minus(A, ell):
    """Mean of the ``ell`` algebraically smallest eigenvalues of ``A``."""
    A = symmetric(A)
    ell = _check_ell(A.shape[0], ell)
    return float(np.mean(np.linalg.eigvalsh(A)[:ell]))


def p_minus_batch(A, ell):
    """``p_minus`` over a stack of matrices of shape (..., n, n)."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    ell = _check_ell(A.shape[-1], ell)
    return np.mean(np.linalg.eigvalsh(A)[..., :ell], axis=-1)


def check_orthonormal(basis, tol=ORTHO_TOL):
    E = np.atleast_2d(np.asarray(basis, dtype=float))
    G = E @ E.T
    err = np.max(np.abs(G - np.eye(E.shape[0])))
    if err > tol:
        raise DomainError(f"basis is not orthonormal (max |G - I| = {err:.3e})")
    return E


def trace_over_subspace(T, basis):
    """``sum_i e_i^T T e_i`` for an orthonormal list ``basis`` (rows)."""
    T = symmetric(T)
    E = check_orthonormal(basis)
    if E.shape[1] != T.shape[0]:
        raise DomainError("basis vectors do not match the dimension of T")
    return float(np.einsum("ij,jk,ik->", E, T, E))


def _rayleigh_trace(T, ell, rng, starts):
    """Minimize ``tr((Y^T Y)^{-1} Y^T T Y) / ell`` over full-rank n x ell ``Y``.

    The objective only depends on the column span of ``Y``, so this is a
    search over the Grassmannian that never looks at an eigendecomposition.
    """
    n = T.shape[0]

    def fun(y):
        Y = y.reshape(n, ell)
        G = Y.T @ Y
        Gi = np.linalg.inv(G)
        TY = T @ Y
        M = Gi @ (Y.T @ TY)
        f = np.trace(M) / ell
        grad = 2.0 / ell * (TY - Y @ M) @ Gi
        return f, grad.ravel()

    best = np.inf
    for _ in range(starts):
        y0 = rng.standard_normal(n * ell)
        res = optimize.minimize(fun, y0, jac=True, method="BFGS",
                                options={"gtol": 1e-13, "maxiter": 2000})
        # re-orthonormalize and evaluate the trace exactly
        Q, _ = np.linalg.qr(res.x.reshape(n, ell))
        best = min(best, trace_over_subspace(T, Q.T) / ell)
    return best


def min_trace_subspace(T, ell, method="auto", seed=0, starts=2):
    """Minimum of ``(1/ell) tr_W T`` over ``ell``-dimensional subspaces ``W``.

    ``method="search"`` runs a quasi-Newton search on the Grassmannian from
    random starts (used by default for ``dim <= 5``); ``method="frame"``
    evaluates the trace on the frame spanned by the eigenvectors of the
    ``ell`` smallest eigenvalues.
    """
    T = symmetric(T)
    n = T.shape[0]
    ell = _check_ell(n, ell)
    if ell == n:
        return float(np.trace(T) / n)
    if method == "auto":
        method = "search" if n <= 5 else "frame"
    if method == "frame":
        _, V = np.linalg.eigh(T)
        return trace_over_subspace(T, V[:, :ell].T) / ell
    if method == "search":
        rng = np.random.default_rng(seed)
        return _rayleigh_trace(T, ell, rng, starts)
    raise ValueError(f"unknown method {method!r}")


def extremal_frame(A, ell, largest=False):
    """Orthonormal rows spanning the eigenvectors of the ``ell`` smallest
    (or largest) eigenvalues."""
    _, V = np.linalg.eigh(symmetric(A))
    cols = V[:, -ell:] if largest else V[:, :ell]
    return cols.T.copy()


def random_frame(n, ell, rng):
    Q, _ = np.linalg.qr(rng.standard_normal((n, ell)))
    return Q.T.copy()


def ricci_ell(R, ell):
    """``l``-th normalized Ricci proxy of a curvature operator along a geodesic:
    the mean of its ``ell`` smallest eigenvalues."""
    return p_minus(R, ell)
