"""Running experiments, tuning constants and computing reference optima."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import theory
from ..errors import AICNError, NoMonotonePoint, NotPositiveDefinite, NumericalError
from ..objectives import Objective
from ..optimizers import (
    CSV_FIELDS,
    MethodConfig,
    StopRule,
    TraceRecord,
    aicn_step,
    aicn_stepsize,
    evaluate,
    nesterov_damped_stepsizes,
    run,
)
from .config import RunConfig, SweepConfig, build_objective, initial_point

log = logging.getLogger(__name__)

# ------------------------------------------------------------------ csv io


def write_trace_csv(trace: list[TraceRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in trace:
            k, *rest = rec.row()
            w.writerow([k, *(repr(float(v)) for v in rest)])
    return path


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"unexpected header {header}")
        return [TraceRecord(int(row[0]), *(float(v) for v in row[1:])) for row in reader]


def _slug(cfg: MethodConfig) -> str:
    if cfg.param_name is None:
        return cfg.method
    return f"{cfg.method}_{cfg.param_name}_{cfg.param_value:g}"


# ------------------------------------------------------------------ reference


def reference_solution(obj: Objective, x0=None, tol: float = 1e-13, L_est: float = 1.0,
                       max_iters: int = 20000, return_path: bool = False):
    """High-accuracy minimizer ``(x*, f*)`` by safeguarded AICN.

    A step is accepted only if it does not increase ``f``; otherwise
    ``L_est`` is doubled and the step retried, so a too-small starting
    constant only costs rejected steps. Stops at ``||g||*_x <= tol`` or when
    rejections pile up at the roundoff floor. With ``return_path`` the
    accepted iterates are returned as a third element.
    """
    x = np.zeros(obj.dim) if x0 is None else np.asarray(x0, dtype=float)
    p = evaluate(obj, x)
    path = [p.x]
    L = float(L_est)
    rejects = 0
    for _ in range(max_iters):
        if p.grad_dual <= tol:
            break
        x_next, _ = aicn_step(obj, p.x, L, p)
        try:
            q = evaluate(obj, x_next)
            increased = obj.value_difference(p.x, x_next - p.x) > 0
        except (NotPositiveDefinite, NumericalError):
            increased = True
        if increased:
            L *= 2.0
            rejects += 1
            if rejects > 60:
                break
            continue
        rejects = 0
        p = q
        path.append(p.x)
    log.debug("reference: ||g||* = %.3e, L_est = %g", p.grad_dual, L)
    if return_path:
        return p.x, p.f, np.array(path)
    return p.x, p.f


# ------------------------------------------------------------------ run


@dataclass
class MethodResult:
    config: MethodConfig
    trace: list[TraceRecord]
    error: str | None = None
    error_iteration: int | None = None
    csv_path: Path | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def label(self) -> str:
        return self.config.label


@dataclass
class ExperimentResult:
    results: list[MethodResult]
    f_star: float | None
    summary: dict
    files: list[Path] = field(default_factory=list)


def _run_one(obj, x0, mcfg: MethodConfig, stop: StopRule, timed: bool) -> MethodResult:
    try:
        return MethodResult(mcfg, run(obj, x0, mcfg, stop, timed=timed))
    except AICNError as exc:
        log.warning("%s failed at k=%s: %s", mcfg.label, getattr(exc, "iteration", None), exc)
        return MethodResult(mcfg, getattr(exc, "trace", []), f"{type(exc).__name__}: {exc}",
                            getattr(exc, "iteration", None))


def method_checks(obj: Objective, res: MethodResult) -> dict:
    """Invariant checks recorded in the summary for one finished run."""
    tr = res.trace
    checks = {"monotone_f": theory.is_monotone(obj, tr) if len(tr) > 1 else True}
    if res.config.method == "aicn" and len(tr) > 1:
        resid = theory.stepsize_root_residuals(tr, res.config.L_est)
        checks["stepsize_root_max"] = float(resid.max())
        checks["stepsize_root_ok"] = bool(resid.max() <= 1e-12)
        checks["alpha_in_unit_interval"] = all(0 < r.alpha <= 1 for r in tr[1:])
    return checks


def run_experiment(cfg: RunConfig, out_dir=None, with_reference: bool = True) -> ExperimentResult:
    """Run every configured method; write one CSV each, SVG panels and ``summary.json``.

    A numerical failure in one method is recorded in the summary and does
    not stop the others.
    """
    out = cfg.resolved_output_dir(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obj = build_objective(cfg)
    x0 = initial_point(cfg, obj)

    def job(m):
        return _run_one(obj, x0, m, cfg.stop, cfg.timed)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(job, cfg.methods))
    else:
        results = [job(m) for m in cfg.methods]

    files = []
    for res in results:
        res.csv_path = write_trace_csv(res.trace, out / f"trace_{_slug(res.config)}.csv")
        files.append(res.csv_path)

    f_star = x_star = None
    ref_error = None
    if with_reference and cfg.objective.mu > 0:
        try:
            x_star, f_star = reference_solution(obj, x0)
        except AICNError as exc:
            ref_error = str(exc)
    if f_star is None:
        observed = [r.f for res in results for r in res.trace]
        f_star = min(observed) if observed else None

    summary = {
        "name": cfg.name,
        "config": cfg.to_dict(),
        "f_star": f_star,
        "f_star_source": "reference" if x_star is not None else "min_observed",
        "methods": [],
    }
    if ref_error:
        summary["reference_error"] = ref_error
    for res in results:
        entry = {
            "label": res.label,
            **res.config.to_dict(),
            "status": "ok" if res.ok else "error",
            "iterations": len(res.trace) - 1 if res.trace else 0,
            "csv": res.csv_path.name,
            "csv_rows": len(res.trace),
        }
        if res.trace:
            last = res.trace[-1]
            entry.update(final_f=last.f, final_grad_dual=last.grad_dual, final_grad_l2=last.grad_l2)
            entry["checks"] = method_checks(obj, res)
        if not res.ok:
            entry.update(error=res.error, error_iteration=res.error_iteration)
        summary["methods"].append(entry)

    if cfg.plots:
        from .plotting import emit_plots

        ok = {res.label: res.trace for res in results if res.trace}
        pics = emit_plots(ok, f_star, out)
        files.extend(pics)
        summary["plots"] = [p.name for p in pics]

    spath = out / "summary.json"
    spath.write_text(json.dumps(summary, indent=2, default=json_default) + "\n", encoding="utf-8")
    files.append(spath)
    return ExperimentResult(results, f_star, summary, files)


def json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o)}")


# ------------------------------------------------------------------ tuning


@dataclass
class TuneResult:
    sweep: SweepConfig
    chosen: float
    verdicts: list[dict]

    def to_dict(self):
        return {"method": self.sweep.method, "param": self.sweep.param,
                "metric": self.sweep.metric, "chosen": self.chosen,
                "rule": "largest monotone" if self.sweep.param == "alpha" else "smallest monotone",
                "verdicts": self.verdicts}


def _monotone_in(obj, trace, metric) -> bool:
    if len(trace) < 2:
        return True
    if metric == "f":
        return theory.is_monotone(obj, trace)
    gd = np.array([r.grad_dual for r in trace])
    return bool(np.all(np.diff(gd) <= 0))


def tune_monotone(cfg: RunConfig, sweep: SweepConfig, obj: Objective | None = None) -> TuneResult:
    """Pick the most aggressive constant on the grid whose trace is monotone.

    For ``alpha`` that is the largest monotone value; for ``L_est`` and
    ``L2`` (larger means smaller steps) it is the smallest one. A run that
    fails numerically counts as non-monotone.
    """
    obj = obj or build_objective(cfg)
    x0 = initial_point(cfg, obj)
    base = cfg.method(sweep.method)
    verdicts = []
    for v in sweep.points():
        mcfg = (MethodConfig(sweep.method, **{sweep.param: v}) if base is None
                else base.with_param(v))
        res = _run_one(obj, x0, mcfg, cfg.stop, timed=False)
        mono = res.ok and _monotone_in(obj, res.trace, sweep.metric)
        verdicts.append({"value": v, "monotone": bool(mono),
                         "iterations": len(res.trace) - 1 if res.trace else 0,
                         "final_grad_dual": res.trace[-1].grad_dual if res.trace else None,
                         "error": res.error})
    good = [d["value"] for d in verdicts if d["monotone"]]
    if not good:
        raise NoMonotonePoint(f"no monotone {sweep.param} for {sweep.method} on the grid", verdicts)
    chosen = max(good) if sweep.param == "alpha" else min(good)
    return TuneResult(sweep, chosen, verdicts)


# ------------------------------------------------------------------ stepsizes


STEPSIZE_FIELDS = ("grad_dual", "aicn", "nesterov_1", "nesterov_2")


def stepsize_comparison(L: float = 5.0, lo: float = 1e-3, hi: float = 1e3, points: int = 200):
    """Rows ``(||g||*, alpha_aicn, alpha_1, alpha_2)`` with ``G = G_1 = L ||g||*``."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    rows = []
    for gd in np.geomspace(lo, hi, points):
        G = L * float(gd)
        a1, a2 = nesterov_damped_stepsizes(G)
        rows.append((float(gd), aicn_stepsize(G), a1, a2))
    return rows


def write_stepsize_csv(rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STEPSIZE_FIELDS)
        for row in rows:
            w.writerow([repr(v) for v in row])
    return path


# ------------------------------------------------------------------ probe


def probe_report(cfg: RunConfig, samples: int = 256, seed: int | None = None,
                 obj: Objective | None = None) -> dict:
    """Probe smoothness constants around a reference trajectory and check
    the AICN guarantees with ``L_est = 2 * L_semi_hat``."""
    obj = obj or build_objective(cfg)
    x0 = initial_point(cfg, obj)
    seed = cfg.seed if seed is None else seed
    x_star, f_star, path = reference_solution(obj, x0, return_path=True)
    est = theory.probe_semi_strong(obj, theory.trace_pairs(path, samples, seed))
    L = 2.0 * est.L_semi_hat if est.L_semi_hat > 0 else 1.0
    report = {"name": cfg.name, "samples": samples, "seed": seed,
              "estimates": est.to_dict(), "L_est": L, "f_star": f_star}
    try:
        trace = run(obj, x0, MethodConfig("aicn", L_est=L),
                    StopRule(max_iters=cfg.stop.max_iters, grad_tol=1e-12), timed=False)
    except AICNError as exc:
        report["error"] = str(exc)
        return report
    env = theory.envelope_check(obj, trace, x_star, f_star, L)
    dec, bounds = theory.global_decrease_check(obj, trace, L)
    local = theory.local_rate_check(trace, L)
    report["checks"] = {
        "iterations": len(trace) - 1,
        "monotone_f": theory.is_monotone(obj, trace),
        "stepsize_root_max": float(theory.stepsize_root_residuals(trace, L).max()) if len(trace) > 1 else 0.0,
        "envelope": env.to_dict(),
        "R_hat_ge_D_hat": env.R_hat >= env.D_hat,
        "one_step_global_ok": bool(np.all(dec >= bounds)),
        "L_est_ge_L_alt_hat": L >= est.L_alt_hat,
        "local_rate": local.to_dict(),
        "sandwich_ok": est.sandwich_ok,
    }
    return report

