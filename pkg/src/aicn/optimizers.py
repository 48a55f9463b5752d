"""AICN and the baseline second-order methods.

Every method here has the damped/regularized Newton form

    x_{k+1} = x_k - alpha_k (H_k + lambda_k I)^{-1} g_k

and differs only in how ``alpha_k`` and ``lambda_k`` are picked:

==================  ======================================  ===================
method              alpha_k                                 lambda_k
==================  ======================================  ===================
aicn                2 / (1 + sqrt(1 + 2 L_est ||g||*_x))    0
cubic_newton        1                                       L2 ||h*||_2 / 2
glob_reg_newton     1                                       sqrt(L2 ||g||_2)
damped_fixed        alpha (constant)                        0
newton              1                                       0
==================  ======================================  ===================
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import AICNError, ConfigError, NumericalError, SubproblemNotConverged
from .linalg import CholeskyFactor, cholesky, dual_norm, hessian_norm, solve
from .objectives import Objective

METHODS = ("aicn", "cubic_newton", "glob_reg_newton", "damped_fixed", "newton")

# constant each method needs, if any
METHOD_PARAM = {
    "aicn": "L_est",
    "cubic_newton": "L2",
    "glob_reg_newton": "L2",
    "damped_fixed": "alpha",
    "newton": None,
}


@dataclass(frozen=True)
class MethodConfig:
    method: str
    L_est: float | None = None
    L2: float | None = None
    alpha: float | None = None
    subproblem_tol: float = 1e-10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        param = METHOD_PARAM[self.method]
        if param is None:
            return
        value = getattr(self, param)
        if value is None:
            raise ConfigError(f"method {self.method!r} requires {param}")
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(f"{param} must be a positive number, got {value!r}")
        if param == "alpha" and value > 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {value}")
        if not self.subproblem_tol > 0:
            raise ConfigError("subproblem_tol must be positive")

    @property
    def param_name(self):
        return METHOD_PARAM[self.method]

    @property
    def param_value(self):
        return None if self.param_name is None else getattr(self, self.param_name)

    def with_param(self, value) -> "MethodConfig":
        return MethodConfig(**{**self.to_dict(), self.param_name: value})

    @property
    def label(self) -> str:
        if self.param_name is None:
            return self.method
        return f"{self.method} {self.param_name}={self.param_value:g}"

    def to_dict(self) -> dict:
        d = {"method": self.method}
        if self.param_name is not None:
            d[self.param_name] = self.param_value
        if self.method == "cubic_newton":
            d["subproblem_tol"] = self.subproblem_tol
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MethodConfig":
        if not isinstance(d, dict) or "method" not in d:
            raise ConfigError(f"method entry must be an object with a 'method' key, got {d!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown method keys {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 500
    grad_tol: float = 1e-10
    time_budget: float | None = None

    def __post_init__(self):
        if not (isinstance(self.max_iters, int) and self.max_iters >= 1):
            raise ConfigError(f"max_iters must be an integer >= 1, got {self.max_iters!r}")
        if not self.grad_tol >= 0:
            raise ConfigError("grad_tol must be nonnegative")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ConfigError("time_budget must be positive")


CSV_FIELDS = ("k", "time_s", "f", "grad_l2", "grad_dual", "alpha", "lambda", "step_norm_x")


@dataclass
class TraceRecord:
    """State at ``x_k`` plus the step that produced it.

    ``alpha``, ``lam`` and ``step_norm_x`` describe the move from ``x_{k-1}``
    to ``x_k`` (``step_norm_x`` measured in the Hessian norm at ``x_{k-1}``);
    they are zero for ``k = 0``.
    """

    k: int
    time_s: float
    f: float
    grad_l2: float
    grad_dual: float
    alpha: float = 0.0
    lam: float = 0.0
    step_norm_x: float = 0.0
    x: np.ndarray | None = field(default=None, repr=False, compare=False)

    def row(self) -> tuple:
        return (self.k, self.time_s, self.f, self.grad_l2, self.grad_dual,
                self.alpha, self.lam, self.step_norm_x)


@dataclass
class Point:
    """Cached first and second order information at ``x``."""

    x: np.ndarray
    f: float
    g: np.ndarray
    H: np.ndarray
    factor: CholeskyFactor
    grad_dual: float

    @property
    def grad_l2(self) -> float:
        return float(np.linalg.norm(self.g))


def evaluate(obj: Objective, x) -> Point:
    x = np.array(x, dtype=float)
    f, g, H = obj.value_grad_hess(x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericalError(f"non-finite value or gradient at x (f={f})")
    F = cholesky(H)
    return Point(x, float(f), g, H, F, dual_norm(g, F))


@dataclass(frozen=True)
class StepInfo:
    alpha: float
    lam: float
    step_norm_x: float
    subproblem_iters: int = 0


def _point(obj, x, point):
    return point if point is not None else evaluate(obj, x)


def _finish(p: Point, h, alpha, lam, iters=0):
    x_next = p.x + h
    if not np.all(np.isfinite(x_next)):
        raise NumericalError("step produced non-finite iterate")
    return x_next, StepInfo(float(alpha), float(lam), hessian_norm(h, p.factor), iters)


def aicn_stepsize(G: float) -> float:
    """Positive root of ``(G/2) a^2 + a - 1 = 0``.

    Written as ``2 / (1 + sqrt(1 + 2G))``, which equals
    ``(sqrt(1 + 2G) - 1) / G`` without the cancellation at small ``G``.
    """
    if G < 0:
        raise ValueError("G must be nonnegative")
    return 2.0 / (1.0 + math.sqrt(1.0 + 2.0 * G))


def aicn_step(obj: Objective, x, L_est: float, point: Point | None = None):
    p = _point(obj, x, point)
    alpha = aicn_stepsize(L_est * p.grad_dual)
    h = -alpha * solve(p.factor, p.g)
    return _finish(p, h, alpha, 0.0)


def damped_fixed_step(obj: Objective, x, alpha: float, point: Point | None = None):
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    p = _point(obj, x, point)
    h = -alpha * solve(p.factor, p.g)
    return _finish(p, h, alpha, 0.0)


def newton_step(obj: Objective, x, point: Point | None = None):
    return damped_fixed_step(obj, x, 1.0, point)


def _shifted_solve(H, g, lam):
    F = cholesky(H + lam * np.eye(H.shape[0]))
    return solve(F, g), F


def glob_reg_newton_step(obj: Objective, x, L2: float, point: Point | None = None):
    p = _point(obj, x, point)
    lam = math.sqrt(L2 * p.grad_l2)
    v, _ = _shifted_solve(p.H, p.g, lam)
    return _finish(p, -v, 1.0, lam)


def solve_cubic_subproblem(H, g, L2: float, tol: float = 1e-10,
                           bisect_iters: int = 60, newton_iters: int = 10):
    """Minimize ``<g,h> + <Hh,h>/2 + (L2/6) ||h||^3`` for positive definite H.

    The minimizer is ``h(r) = -(H + (L2 r / 2) I)^{-1} g`` at the root of
    ``phi(r) = ||h(r)|| - r``. ``phi`` is strictly decreasing, so the root is
    bracketed by bisection and polished with safeguarded Newton steps.

    Returns ``(h, r, iterations)``.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros_like(g), 0.0, 0

    def h_of(r):
        v, F = _shifted_solve(H, g, 0.5 * L2 * r)
        return -v, F

    def residual(h):
        return float(np.linalg.norm(g + H @ h + 0.5 * L2 * np.linalg.norm(h) * h))

    h0, _ = h_of(0.0)
    lo, hi = 0.0, 2.0 * float(np.linalg.norm(h0)) * (1.0 + L2 * gnorm)
    iters = 0
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        h, _ = h_of(mid)
        iters += 1
        if np.linalg.norm(h) > mid:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * hi:
            break
    r = 0.5 * (lo + hi)
    h, F = h_of(r)
    for _ in range(newton_iters):
        if residual(h) <= tol * gnorm:
            return h, r, iters
        hn = float(np.linalg.norm(h))
        w = solve(F, h)
        dphi = -0.5 * L2 * float(h @ w) / hn - 1.0
        r_new = r - (hn - r) / dphi
        if not lo <= r_new <= hi:
            r_new = 0.5 * (lo + hi)
        r = r_new
        h, F = h_of(r)
        iters += 1
        if np.linalg.norm(h) > r:
            lo = r
        else:
            hi = r
    res = residual(h)
    if res > tol * gnorm:
        raise SubproblemNotConverged(
            f"cubic subproblem residual {res:.3e} > {tol:g} * ||g|| after {iters} iterations"
        )
    return h, r, iters


def cubic_newton_step(obj: Objective, x, L2: float, tol: float = 1e-10,
                      point: Point | None = None):
    p = _point(obj, x, point)
    h, r, iters = solve_cubic_subproblem(p.H, p.g, L2, tol)
    return _finish(p, h, 1.0, 0.5 * L2 * r, iters)


def nesterov_damped_stepsizes(G1: float):
    """The two classical self-concordant damped Newton stepsizes."""
    if G1 < 0:
        raise ValueError("G1 must be nonnegative")
    return 1.0 / (1.0 + G1), (1.0 + G1) / (1.0 + G1 + G1 * G1)


def take_step(obj: Objective, point: Point, config: MethodConfig):
    m = config.method
    if m == "aicn":
        return aicn_step(obj, point.x, config.L_est, point)
    if m == "cubic_newton":
        return cubic_newton_step(obj, point.x, config.L2, config.subproblem_tol, point)
    if m == "glob_reg_newton":
        return glob_reg_newton_step(obj, point.x, config.L2, point)
    if m == "damped_fixed":
        return damped_fixed_step(obj, point.x, config.alpha, point)
    return newton_step(obj, point.x, point)


def _record(k, t, p: Point, info: StepInfo | None = None):
    info = info or StepInfo(0.0, 0.0, 0.0)
    return TraceRecord(k, t, p.f, p.grad_l2, p.grad_dual,
                       info.alpha, info.lam, info.step_norm_x, p.x.copy())


def run(obj: Objective, x0, config: MethodConfig, stop: StopRule | None = None,
        timed: bool = True) -> list[TraceRecord]:
    """Iterate ``config.method`` from ``x0``.

    Stops once ``||g||*_x <= stop.grad_tol``, the time budget is spent, or
    ``stop.max_iters`` steps were taken. The returned trace starts with the
    record for ``x0`` (``k = 0``). With ``timed=False`` the time column is
    zero, which makes traces bit-reproducible.

    Errors raised by a step carry ``iteration`` (the k being computed) and
    ``trace`` (the records gathered so far).
    """
    stop = stop or StopRule()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (obj.dim,):
        raise ConfigError(f"x0 has shape {x0.shape}, objective dimension is {obj.dim}")
    trace: list[TraceRecord] = []
    k = 0
    try:
        point = evaluate(obj, x0)
        t0 = time.perf_counter()
        trace.append(_record(0, 0.0, point))
        for k in range(1, stop.max_iters + 1):
            if point.grad_dual <= stop.grad_tol:
                break
            if stop.time_budget is not None and time.perf_counter() - t0 >= stop.time_budget:
                break
            x_next, info = take_step(obj, point, config)
            point = evaluate(obj, x_next)
            elapsed = time.perf_counter() - t0 if timed else 0.0
            trace.append(_record(k, elapsed, point, info))
    except AICNError as exc:
        exc.iteration = k
        exc.trace = trace
        raise
    return trace
