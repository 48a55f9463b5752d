"""Test objectives with analytic derivatives.

All objectives expose ``value``, ``gradient``, ``hessian`` and a fused
``value_grad_hess``. ``value_difference(x, h)`` returns ``f(x + h) - f(x)``
computed without forming the two large values first, so that per-step
decreases stay resolvable after ``f`` has converged to many digits.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from scipy.special import expit

from .data import Dataset
from .linalg import cholesky


class Objective(ABC):
    """Convex C^2 function on R^dim."""

    dim: int

    @abstractmethod
    def value(self, x) -> float: ...

    @abstractmethod
    def gradient(self, x) -> np.ndarray: ...

    @abstractmethod
    def hessian(self, x) -> np.ndarray: ...

    def value_grad_hess(self, x):
        return self.value(x), self.gradient(x), self.hessian(x)

    def value_difference(self, x, h) -> float:
        x = np.asarray(x, dtype=float)
        return self.value(x + h) - self.value(x)

    def taylor_remainder(self, x, h) -> float:
        """``f(x+h) - f(x) - <g(x), h> - <H(x) h, h> / 2``."""
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        return self.value_difference(x, h) - self.gradient(x) @ h - 0.5 * h @ self.hessian(x) @ h

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x


class QuadraticObjective(Objective):
    """``f(x) = 1/2 x^T H x - b^T x``; the minimizer solves ``H x = b``."""

    def __init__(self, H, b=None):
        H = np.asarray(H, dtype=float)
        self.H = 0.5 * (H + H.T)
        self.dim = self.H.shape[0]
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)

    @classmethod
    def centered(cls, center):
        """``1/2 ||x - center||^2`` up to a constant."""
        center = np.asarray(center, dtype=float)
        return cls(np.eye(center.size), center)

    def value(self, x):
        x = self._check(x)
        return float(0.5 * x @ self.H @ x - self.b @ x)

    def gradient(self, x):
        x = self._check(x)
        return self.H @ x - self.b

    def hessian(self, x):
        return self.H.copy()

    def value_difference(self, x, h):
        x = self._check(x)
        h = np.asarray(h, dtype=float)
        return float((self.H @ x - self.b) @ h + 0.5 * h @ self.H @ h)

    def taylor_remainder(self, x, h):
        return 0.0

    def minimizer(self):
        return np.linalg.solve(self.H, self.b)


def _logistic_loss(z):
    # log(1 + exp(-z)), large -z handled by the z + log1p(e^-z) branch
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = -z > 30.0
    out[big] = -z[big] + np.log1p(np.exp(z[big]))
    out[~big] = np.log1p(np.exp(-z[~big]))
    return out


class LogisticObjective(Objective):
    """Ridge-regularized logistic loss over a labelled dataset.

    ``f(x) = (1/m) sum_i log(1 + exp(-b_i a_i^T x)) + (mu/2) ||x||^2``
    """

    def __init__(self, data: Dataset, mu: float = 0.0):
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        self.data = data
        self.mu = float(mu)
        # rows pre-multiplied by labels: z = BA x
        self._BA = data.features * data.labels[:, None]
        self.m, self.dim = data.features.shape

    def _margins(self, x):
        return self._BA @ self._check(x)

    def value(self, x):
        z = self._margins(x)
        return float(np.mean(_logistic_loss(z)) + 0.5 * self.mu * (x @ x))

    def gradient(self, x):
        z = self._margins(x)
        return -(self._BA.T @ expit(-z)) / self.m + self.mu * x

    def hessian(self, x):
        z = self._margins(x)
        w = expit(z) * expit(-z)
        H = (self._BA.T * w) @ self._BA / self.m
        H[np.diag_indices_from(H)] += self.mu
        return 0.5 * (H + H.T)

    def value_grad_hess(self, x):
        z = self._margins(x)
        s = expit(-z)
        f = float(np.mean(_logistic_loss(z)) + 0.5 * self.mu * (x @ x))
        g = -(self._BA.T @ s) / self.m + self.mu * x
        H = (self._BA.T * (s * (1.0 - s))) @ self._BA / self.m
        H[np.diag_indices_from(H)] += self.mu
        return f, g, 0.5 * (H + H.T)

    def value_difference(self, x, h):
        x = self._check(x)
        h = np.asarray(h, dtype=float)
        z = self._BA @ x
        dz = self._BA @ h
        # loss(z + dz) - loss(z) = log1p(expm1(-dz) * sigmoid(-z))
        diff = np.empty_like(z)
        safe = np.abs(dz) < 30.0
        diff[safe] = np.log1p(np.expm1(-dz[safe]) * expit(-z[safe]))
        diff[~safe] = _logistic_loss(z[~safe] + dz[~safe]) - _logistic_loss(z[~safe])
        return float(np.mean(diff) + self.mu * (x @ h + 0.5 * (h @ h)))

    def taylor_remainder(self, x, h):
        x = self._check(x)
        h = np.asarray(h, dtype=float)
        z = self._BA @ x
        dz = self._BA @ h
        s = expit(-z)
        safe = np.abs(dz) < 30.0
        diff = np.empty_like(z)
        diff[safe] = np.log1p(np.expm1(-dz[safe]) * s[safe])
        diff[~safe] = _logistic_loss(z[~safe] + dz[~safe]) - _logistic_loss(z[~safe])
        # the ridge term is quadratic and drops out
        rem = diff + s * dz - 0.5 * s * (1.0 - s) * dz * dz
        return float(np.mean(rem))


def bidiagonal_matrix(d: int) -> np.ndarray:
    """Ones on the diagonal, minus ones on the superdiagonal."""
    return np.eye(d) - np.eye(d, k=1)


class LowerBoundObjective(Objective):
    """Nesterov's second-order lower-bound function with a ridge term.

    ``f(x) = (1/d) sum_j |[A x]_j|^3 - x_1 + (mu/2) ||x||^2`` where ``A`` is
    upper bidiagonal with 1 on the diagonal and -1 above it.
    """

    def __init__(self, d: int, mu: float = 0.0):
        if d < 1:
            raise ValueError("d must be positive")
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        self.dim = int(d)
        self.mu = float(mu)
        self.A = bidiagonal_matrix(self.dim)

    def _apply_A(self, x):
        y = x.copy()
        y[:-1] -= x[1:]
        return y

    def _apply_At(self, v):
        out = v.copy()
        out[1:] -= v[:-1]
        return out

    def value(self, x):
        x = self._check(x)
        y = self._apply_A(x)
        return float(np.sum(np.abs(y) ** 3) / self.dim - x[0] + 0.5 * self.mu * (x @ x))

    def gradient(self, x):
        x = self._check(x)
        y = self._apply_A(x)
        g = (3.0 / self.dim) * self._apply_At(np.abs(y) * y) + self.mu * x
        g[0] -= 1.0
        return g

    def hessian(self, x):
        x = self._check(x)
        y = self._apply_A(x)
        H = (6.0 / self.dim) * (self.A.T * np.abs(y)) @ self.A
        H[np.diag_indices_from(H)] += self.mu
        return H

    def value_difference(self, x, h):
        x = self._check(x)
        h = np.asarray(h, dtype=float)
        y = self._apply_A(x)
        dy = self._apply_A(h)
        yn = y + dy
        a, b = np.abs(y), np.abs(yn)
        same = (y * yn) > 0
        # |yn| - |y| is exactly sign(y) * dy when no sign change happens
        dabs = np.where(same, np.sign(y) * dy, b - a)
        cubic = np.sum(dabs * (b * b + a * b + a * a)) / self.dim
        return float(cubic - h[0] + self.mu * (x @ h + 0.5 * (h @ h)))

    def taylor_remainder(self, x, h):
        x = self._check(x)
        y = self._apply_A(x)
        dy = self._apply_A(np.asarray(h, dtype=float))
        yn = y + dy
        same = (y * yn) > 0
        # without a sign change |y|^3 is a cubic polynomial in dy: remainder (s dy)^3
        exact = (np.sign(y) * dy) ** 3
        a = np.abs(y)
        direct = np.abs(yn) ** 3 - a ** 3 - 3 * a * y * dy - 3 * a * dy * dy
        return float(np.sum(np.where(same, exact, direct)) / self.dim)


class AffineSubstitution(Objective):
    """``phi(y) = f(A y)`` for a nondegenerate square ``A``."""

    def __init__(self, base: Objective, A):
        A = np.asarray(A, dtype=float)
        if A.shape != (base.dim, base.dim):
            raise ValueError(f"A must be {base.dim}x{base.dim}")
        self.base = base
        self.A = A
        self.dim = base.dim

    def value(self, y):
        return self.base.value(self.A @ self._check(y))

    def gradient(self, y):
        return self.A.T @ self.base.gradient(self.A @ self._check(y))

    def hessian(self, y):
        H = self.A.T @ self.base.hessian(self.A @ self._check(y)) @ self.A
        return 0.5 * (H + H.T)

    def value_grad_hess(self, y):
        f, g, H = self.base.value_grad_hess(self.A @ self._check(y))
        H = self.A.T @ H @ self.A
        return f, self.A.T @ g, 0.5 * (H + H.T)

    def value_difference(self, y, h):
        y = self._check(y)
        return self.base.value_difference(self.A @ y, self.A @ np.asarray(h, dtype=float))

    def taylor_remainder(self, y, h):
        y = self._check(y)
        return self.base.taylor_remainder(self.A @ y, self.A @ np.asarray(h, dtype=float))


def finite_diff_check(obj: Objective, x, step: float = 1e-5):
    """Compare analytic derivatives with central differences.

    Returns ``(grad_err, hess_err)``, each the max-abs deviation divided by
    ``max(1, max-abs analytic entry)``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size
    g = obj.gradient(x)
    H = obj.hessian(x)
    g_fd = np.empty(n)
    H_fd = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        g_fd[i] = (obj.value(x + e) - obj.value(x - e)) / (2 * step)
        H_fd[:, i] = (obj.gradient(x + e) - obj.gradient(x - e)) / (2 * step)
    grad_err = np.max(np.abs(g_fd - g)) / max(1.0, np.max(np.abs(g)))
    hess_err = np.max(np.abs(H_fd - H)) / max(1.0, np.max(np.abs(H)))
    return float(grad_err), float(hess_err)


def is_positive_definite(obj: Objective, x) -> bool:
    try:
        cholesky(obj.hessian(x))
    except ValueError:
        return False
    return True
