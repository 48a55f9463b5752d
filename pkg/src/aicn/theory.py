"""Executable versions of the convergence analysis.

Schedules and constants from the global and local rate proofs, sampling
probes for the smoothness constants, and checks that scan a finished
trace for the inequalities the analysis guarantees.

The probes only ever see finitely many points, so they produce lower
estimates of the true constants. A violated guarantee with ``L_est`` above
a probed value therefore points at a bug or at an undersampled probe, and a
satisfied one proves nothing global.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import cholesky, hessian_norm, metric_operator_norm
from .objectives import Objective
from .optimizers import TraceRecord

# ---------------------------------------------------------------- schedules


def eta(t: int) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return 3.0 / (t + 3)


def A_seq(t: int) -> float:
    """``prod_{i=1}^t (1 - eta_i)`` in closed form, with ``A_0 = 1``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return 6.0 / ((t + 1) * (t + 2) * (t + 3))


def A_seq_product(t: int) -> float:
    out = 1.0
    for i in range(1, t + 1):
        out *= 1.0 - eta(i)
    return out


def weighted_eta_sum(k: int) -> float:
    """``sum_{t=0}^k A_k eta_t^3 / A_t`` by direct summation."""
    Ak = A_seq(k)
    return math.fsum(Ak * eta(t) ** 3 / A_seq(t) for t in range(k + 1))


def weighted_eta_sum_bound(k: int) -> float:
    return 27.0 * (k + 1) / (k + 3) ** 3


def global_envelope(L_est: float, D_hat: float, k: int) -> float:
    """``9 L_est D^3 / k^2``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return 9.0 * L_est * D_hat ** 3 / k ** 2


def neighborhood_branches(c: float):
    """The two radii (times ``2 L_est``) whose minimum bounds the local region."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    return (2 - c) ** 2 - 1, (2 * c + 1) ** 2 - 1


def local_neighborhood(L_est: float, c: float | None = None) -> float:
    """Radius in ``||g||*_x`` of quadratic convergence.

    With ``c`` omitted this is the optimum ``8 / (9 L_est)``, attained at
    ``c = 1/3`` where both branches equal 16/9.
    """
    if L_est <= 0:
        raise ValueError("L_est must be positive")
    if c is None:
        return 8.0 / (9.0 * L_est)
    return min(neighborhood_branches(c)) / (2.0 * L_est)


def one_step_global_cases(G: float, c1: float = 1.0, L_est: float = 1.0) -> float:
    """Guaranteed decrease ``f(x_k) - f(x_{k+1})`` when ``||g||*_x = G / L_est``.

    Takes the largest of the three case bounds whose condition holds:
    ``||g||*^{3/2} / (2 sqrt(L))`` for ``G >= 4``, ``||g||*^2 / 4`` for
    ``G <= 4``, and ``sqrt(c1)`` times the first for ``G >= 4 c1``.
    """
    if G < 0:
        raise ValueError("G must be nonnegative")
    if not 0 < c1 <= 1:
        raise ValueError("c1 must lie in (0, 1]")
    gd = G / L_est
    candidates = []
    if G >= 4:
        candidates.append(gd ** 1.5 / (2 * math.sqrt(L_est)))
    if G <= 4:
        candidates.append(gd * gd / 4)
    if G >= 4 * c1:
        candidates.append(math.sqrt(c1) * gd ** 1.5 / (2 * math.sqrt(L_est)))
    return max(candidates)


def ag_gap(c):
    """``1 + c - sqrt(1 + 2c)``, nonnegative for ``c >= 0``."""
    c = np.asarray(c, dtype=float)
    return 1 + c - np.sqrt(1 + 2 * c)


def jensen_sqrt_bounds(c):
    """``(lower, middle, upper) = ((sqrt(c)+1)/sqrt(2), sqrt(c+1), sqrt(c)+1)``."""
    c = np.asarray(c, dtype=float)
    return (np.sqrt(c) + 1) / math.sqrt(2), np.sqrt(c + 1), np.sqrt(c) + 1


# ---------------------------------------------------------------- probes


@dataclass
class ConcordanceEstimate:
    L_semi_hat: float = 0.0
    L_alt_hat: float = 0.0
    samples: int = 0
    sandwich_ok: bool = True
    sandwich_worst: float = 0.0  # max |f(y) - Q_f(y;x)| / ((L_semi_hat/6) ||y-x||_x^3)
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"L_semi_hat": self.L_semi_hat, "L_alt_hat": self.L_alt_hat,
                "samples": self.samples, "sandwich_ok": self.sandwich_ok,
                "sandwich_worst": self.sandwich_worst}


SEGMENT = tuple(i / 8 for i in range(1, 9))


def box_pairs(lo, hi, n: int = 256, seed: int = 0, radii=(1e-3, 1.0), pad: float = 0.1):
    """Deterministic ``(x, y)`` pairs around a bounding box.

    ``x`` is uniform in the box widened by ``pad`` times its extent (and at
    least ``pad`` absolutely); ``y = x + r u`` with ``u`` a random unit vector
    and ``r`` log-spaced over ``radii``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    widen = np.maximum(pad * (hi - lo), pad)
    lo, hi = lo - widen, hi + widen
    rng = np.random.default_rng(seed)
    rs = np.geomspace(radii[0], radii[1], n)
    pairs = []
    for r in rs:
        x = lo + (hi - lo) * rng.random(lo.size)
        u = rng.standard_normal(lo.size)
        u /= np.linalg.norm(u)
        pairs.append((x, x + r * u))
    return pairs


def trace_pairs(trace, n: int = 256, seed: int = 0, radii=(1e-3, 1.0), pad: float = 0.1):
    """Pairs around a trajectory (a trace or an array of iterates).

    Half of the base points are iterates (evenly spread along the trace,
    always including ``x_0``), the rest are uniform in the widened bounding
    box of the iterates. Radii are log-spaced over ``radii``.
    """
    X = np.array([getattr(r, "x", r) for r in trace], dtype=float)
    n_anchor = n // 2
    box = box_pairs(X.min(axis=0), X.max(axis=0), n=n - n_anchor, seed=seed, radii=radii, pad=pad)
    rng = np.random.default_rng([seed, 1])
    idx = np.linspace(0, len(X) - 1, n_anchor).round().astype(int)
    rs = np.geomspace(radii[0], radii[1], n_anchor)
    anchored = []
    for i, r in zip(idx, rng.permutation(rs)):
        u = rng.standard_normal(X.shape[1])
        u /= np.linalg.norm(u)
        anchored.append((X[i], X[i] + r * u))
    return anchored + box


def probe_semi_strong(obj: Objective, sampler, n: int | None = None,
                      segment=SEGMENT, slack: float = 1.001) -> ConcordanceEstimate:
    """Sampled lower estimate of the semi-strong self-concordance constant.

    For every pair ``(x, y)`` and every ``tau`` in ``segment`` the ratio
    ``||H(x + tau (y-x)) - H(x)||_op / (tau ||y - x||_x)`` is measured; the
    maximum is ``L_semi_hat``. Afterwards the cubic sandwich
    ``|f(y) - Q_f(y;x)| <= slack * (L_semi_hat / 6) ||y - x||_x^3`` is
    checked on the same pairs and ``L_alt_hat`` is filled in.
    """
    pairs = list(sampler)[:n] if n is not None else list(sampler)
    est = ConcordanceEstimate()
    cache = []
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        h = np.asarray(y, dtype=float) - x
        Hx = obj.hessian(x)
        F = cholesky(Hx)
        hn = hessian_norm(h, F)
        cache.append((x, h, F, hn))
        if hn == 0:
            continue
        for tau in segment:
            Hy = obj.hessian(x + tau * h)
            ratio = metric_operator_norm(Hy - Hx, F) / (tau * hn)
            est.L_semi_hat = max(est.L_semi_hat, ratio)
        est.samples += 1
        est.history.append(est.L_semi_hat)

    bound_scale = est.L_semi_hat / 6.0
    for x, h, F, hn in cache:
        if hn == 0:
            continue
        rem = obj.taylor_remainder(x, h)
        est.L_alt_hat = max(est.L_alt_hat, 6.0 * rem / hn ** 3)
        bound = bound_scale * hn ** 3
        if abs(rem) > slack * bound:
            est.sandwich_ok = False
        if bound > 0:
            est.sandwich_worst = max(est.sandwich_worst, abs(rem) / bound)
        elif rem != 0:
            est.sandwich_worst = math.inf
    return est


def probe_alt_smoothness(obj: Objective, sampler, n: int | None = None) -> float:
    """Smallest ``L`` with ``f(x+h) - f(x) <= <g,h> + ||h||_x^2/2 + L ||h||_x^3/6`` on the samples."""
    pairs = list(sampler)[:n] if n is not None else list(sampler)
    best = 0.0
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        h = np.asarray(y, dtype=float) - x
        hn = hessian_norm(h, obj.hessian(x))
        if hn == 0:
            continue
        best = max(best, 6.0 * obj.taylor_remainder(x, h) / hn ** 3)
    return best


# ---------------------------------------------------------------- trace checks


def step_decreases(obj: Objective, trace: list[TraceRecord]) -> np.ndarray:
    """``f(x_k) - f(x_{k+1})`` for consecutive records, computed stably."""
    return np.array([-obj.value_difference(a.x, b.x - a.x) for a, b in zip(trace, trace[1:])])


def is_monotone(obj: Objective, trace: list[TraceRecord]) -> bool:
    return bool(np.all(step_decreases(obj, trace) >= 0))


def stepsize_root_residuals(trace: list[TraceRecord], L_est: float) -> np.ndarray:
    """``|(G/2) a^2 + a - 1|`` for each AICN step, ``G = L_est ||g_k||*``."""
    out = []
    for prev, cur in zip(trace, trace[1:]):
        G = L_est * prev.grad_dual
        a = cur.alpha
        out.append(abs(0.5 * G * a * a + a - 1.0))
    return np.array(out)


@dataclass
class RateEnvelope:
    L_est: float
    D_hat: float
    R_hat: float
    f_star: float
    gaps: np.ndarray = field(repr=False)
    bounds: np.ndarray = field(repr=False)

    @property
    def holds(self) -> bool:
        return bool(np.all(self.gaps <= self.bounds))

    @property
    def worst_ratio(self) -> float:
        return float(np.max(self.gaps / self.bounds)) if self.gaps.size else 0.0

    def to_dict(self):
        return {"L_est": self.L_est, "D_hat": self.D_hat, "R_hat": self.R_hat,
                "f_star": self.f_star, "holds": self.holds,
                "worst_ratio": self.worst_ratio}


def envelope_check(obj: Objective, trace: list[TraceRecord], x_star, f_star: float,
                   L_est: float) -> RateEnvelope:
    """Compare ``f(x_k) - f*`` with ``9 L_est D^3 / k^2`` for every ``k >= 1``.

    ``D_hat = max_t ||x_t - x*||_{x_t}`` over the trace;
    ``R_hat = max_t (||x_t - x*||_{x*}^2 + L_est ||x_t - x*||_{x*}^3)^{1/2}``
    is the level-set variant evaluated on the same points.
    """
    x_star = np.asarray(x_star, dtype=float)
    F_star = cholesky(obj.hessian(x_star))
    D_hat = R_hat = 0.0
    for rec in trace:
        d = rec.x - x_star
        D_hat = max(D_hat, hessian_norm(d, obj.hessian(rec.x)))
        ds = hessian_norm(d, F_star)
        R_hat = max(R_hat, math.sqrt(ds ** 2 + L_est * ds ** 3))
    gaps = np.array([obj.value_difference(x_star, rec.x - x_star) for rec in trace[1:]])
    bounds = np.array([global_envelope(L_est, D_hat, rec.k) for rec in trace[1:]])
    return RateEnvelope(L_est, D_hat, R_hat, f_star, gaps, bounds)


@dataclass
class LocalRateReport:
    """``entry_k`` is None when the trace never enters the neighbourhood;
    the contraction claims then hold vacuously."""

    entry_k: int | None
    contraction_ok: bool
    worst_ratio: float  # max ||g_{k+1}||* / (1.5 L ||g_k||*^2) after entry
    monotone: bool
    iters_to_tol: int | None

    @property
    def entered(self) -> bool:
        return self.entry_k is not None

    def to_dict(self):
        return {**self.__dict__, "entered": self.entered}


def local_rate_check(trace: list[TraceRecord], L_est: float, tol: float = 1e-12) -> LocalRateReport:
    """Quadratic contraction of ``||g||*_x`` once inside ``8 / (9 L_est)``."""
    radius = local_neighborhood(L_est)
    gd = np.array([r.grad_dual for r in trace])
    inside = np.flatnonzero(gd <= radius)
    if inside.size == 0:
        return LocalRateReport(None, True, 0.0, True, None)
    k0 = int(inside[0])
    worst = 0.0
    ok = mono = True
    for k in range(k0, len(gd) - 1):
        if gd[k] == 0:
            continue
        ratio = gd[k + 1] / (1.5 * L_est * gd[k] ** 2)
        worst = max(worst, ratio)
        ok &= bool(gd[k + 1] <= 1.5 * L_est * gd[k] ** 2)
        mono &= bool(gd[k + 1] <= gd[k])
    hit = np.flatnonzero(gd[k0:] <= tol)
    return LocalRateReport(k0, ok, worst, mono, int(hit[0]) if hit.size else None)


def global_decrease_check(obj: Objective, trace: list[TraceRecord], L_est: float,
                          c1: float = 1.0):
    """Measured per-step decrease versus the three-case lower bound.

    Returns ``(decreases, bounds)``; the guarantee is ``decreases >= bounds``.
    """
    dec = step_decreases(obj, trace)
    bounds = np.array([one_step_global_cases(L_est * r.grad_dual, c1, L_est) for r in trace[:-1]])
    return dec, bounds


def model_upper_bound_check(obj: Objective, x, x_next, L_est: float, ys) -> float:
    """Smallest slack of ``f(x_next) <= f(y) + (L_est/3) ||y - x||_x^3`` over ``ys``.

    Values are taken relative to ``f(x)`` to keep the comparison exact-ish.
    """
    x = np.asarray(x, dtype=float)
    F = cholesky(obj.hessian(x))
    lhs = obj.value_difference(x, np.asarray(x_next) - x)
    worst = math.inf
    for y in ys:
        d = np.asarray(y, dtype=float) - x
        rhs = obj.value_difference(x, d) + L_est / 3.0 * hessian_norm(d, F) ** 3
        worst = min(worst, rhs - lhs)
    return worst


def aicn_model(g, H, L_est: float):
    """The cubic model ``h -> <g,h> + <Hh,h>/2 + (L_est/6) ||h||_H^3``."""
    g = np.asarray(g, dtype=float)
    H = np.asarray(H, dtype=float)

    def m(h):
        h = np.asarray(h, dtype=float)
        q = float(h @ H @ h)
        return float(g @ h) + 0.5 * q + L_est / 6.0 * max(q, 0.0) ** 1.5

    return m

