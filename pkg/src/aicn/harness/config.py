"""Experiment configuration: a JSON document mirroring ``RunConfig``."""

from __future__ import annotations

import json
from importlib import resources
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import load_libsvm, normalize_rows, synth_logistic
from ..errors import ConfigError
from ..objectives import LogisticObjective, LowerBoundObjective, Objective, QuadraticObjective
from ..optimizers import METHOD_PARAM, MethodConfig, StopRule

OUTPUT_ENV = "AICN_OUTPUT_DIR"
OBJECTIVE_KINDS = ("logistic", "lower_bound", "quadratic")


def _require(d, key, where):
    if key not in d:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return d[key]


def _number(v, what, *, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"{what} must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{what} must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"{what} must be nonnegative, got {v!r}")
    return v


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    dim: int | None = None
    normalize: bool = True
    one_vs_rest: float | None = None


@dataclass(frozen=True)
class SynthSpec:
    m: int
    d: int
    seed: int = 0


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str
    mu: float = 0.0
    dataset: DatasetSpec | None = None
    synthetic: SynthSpec | None = None
    d: int | None = None
    # quadratic only: explicit matrix and linear term
    H: list | None = None
    b: list | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectiveSpec":
        if not isinstance(d, dict):
            raise ConfigError("objective must be an object")
        kind = _require(d, "kind", "objective")
        if kind not in OBJECTIVE_KINDS:
            raise ConfigError(f"objective.kind must be one of {OBJECTIVE_KINDS}, got {kind!r}")
        mu = _number(d.get("mu", 0.0), "objective.mu", nonneg=True)
        ds = synth = None
        if kind == "logistic":
            if ("dataset" in d) == ("synthetic" in d):
                raise ConfigError("logistic objective needs exactly one of 'dataset' or 'synthetic'")
            if "dataset" in d:
                raw = d["dataset"]
                dim = raw.get("dim")
                if dim is not None and (not isinstance(dim, int) or dim < 1):
                    raise ConfigError(f"dataset.dim must be a positive integer, got {dim!r}")
                ds = DatasetSpec(str(_require(raw, "path", "dataset")), dim,
                                 bool(raw.get("normalize", True)), raw.get("one_vs_rest"))
            else:
                raw = d["synthetic"]
                synth = SynthSpec(int(_require(raw, "m", "synthetic")),
                                  int(_require(raw, "d", "synthetic")), int(raw.get("seed", 0)))
                if synth.m < 1 or synth.d < 1:
                    raise ConfigError("synthetic.m and synthetic.d must be positive")
        dim = None
        if kind == "lower_bound":
            dim = _require(d, "d", "objective")
            if not isinstance(dim, int) or dim < 1:
                raise ConfigError(f"objective.d must be a positive integer, got {dim!r}")
        if kind == "quadratic":
            H = np.asarray(_require(d, "H", "objective"), dtype=float)
            if H.ndim != 2 or H.shape[0] != H.shape[1]:
                raise ConfigError("objective.H must be a square matrix")
            b = d.get("b")
            if b is not None and len(b) != H.shape[0]:
                raise ConfigError("objective.b must match objective.H")
            return cls(kind, mu, H=d["H"], b=b, d=H.shape[0])
        return cls(kind, mu, ds, synth, dim)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "mu": self.mu}
        if self.dataset is not None:
            out["dataset"] = {k: v for k, v in self.dataset.__dict__.items() if v is not None}
        if self.synthetic is not None:
            out["synthetic"] = dict(self.synthetic.__dict__)
        if self.kind == "lower_bound":
            out["d"] = self.d
        if self.kind == "quadratic":
            out["H"] = self.H
            if self.b is not None:
                out["b"] = self.b
        return out


@dataclass(frozen=True)
class X0Spec:
    kind: str = "zeros"
    value: float = 0.0

    @classmethod
    def from_dict(cls, d) -> "X0Spec":
        if d is None:
            return cls()
        kind = d.get("kind", "constant")
        if kind == "zeros":
            return cls("zeros", 0.0)
        if kind != "constant":
            raise ConfigError(f"x0.kind must be 'zeros' or 'constant', got {kind!r}")
        return cls("constant", float(_number(_require(d, "value", "x0"), "x0.value")))

    def resolve(self, dim: int) -> np.ndarray:
        return np.full(dim, self.value if self.kind == "constant" else 0.0)

    def to_dict(self):
        return {"kind": self.kind, "value": self.value} if self.kind == "constant" else {"kind": "zeros"}


@dataclass(frozen=True)
class RunConfig:
    objective: ObjectiveSpec
    methods: tuple[MethodConfig, ...]
    x0: X0Spec = X0Spec()
    stop: StopRule = StopRule()
    output_dir: str = "results"
    seed: int = 0
    name: str = "experiment"
    plots: bool = True
    timed: bool = True
    workers: int = 1
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"name", "objective", "x0", "methods", "stop", "output_dir", "seed",
                 "plots", "timed", "workers"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        methods = _require(d, "methods", "config")
        if not isinstance(methods, list):
            raise ConfigError("methods must be a list")
        stop = d.get("stop") or {}
        try:
            stop_rule = StopRule(int(stop.get("max_iters", 500)), float(stop.get("grad_tol", 1e-10)),
                                 stop.get("time_budget"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad stop rule: {exc}") from None
        return cls(
            objective=ObjectiveSpec.from_dict(_require(d, "objective", "config")),
            methods=tuple(MethodConfig.from_dict(m) for m in methods),
            x0=X0Spec.from_dict(d.get("x0")),
            stop=stop_rule,
            output_dir=str(d.get("output_dir", "results")),
            seed=int(d.get("seed", 0)),
            name=str(d.get("name", "experiment")),
            plots=bool(d.get("plots", True)),
            timed=bool(d.get("timed", True)),
            workers=int(d.get("workers", 1)),
            base_dir=Path(base_dir),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "objective": self.objective.to_dict(),
            "x0": self.x0.to_dict(),
            "methods": [m.to_dict() for m in self.methods],
            "stop": {"max_iters": self.stop.max_iters, "grad_tol": self.stop.grad_tol,
                     "time_budget": self.stop.time_budget},
            "output_dir": self.output_dir,
            "seed": self.seed,
            "plots": self.plots,
            "timed": self.timed,
            "workers": self.workers,
        }

    def resolved_output_dir(self, override=None) -> Path:
        """``override`` beats ``$AICN_OUTPUT_DIR`` beats ``output_dir``."""
        if override is not None:
            return Path(override)
        env = os.environ.get(OUTPUT_ENV)
        if env:
            return Path(env)
        out = Path(self.output_dir)
        return out if out.is_absolute() else self.base_dir / out

    def method(self, method_id: str) -> MethodConfig | None:
        for m in self.methods:
            if m.method == method_id:
                return m
        return None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return RunConfig.from_dict(raw, base_dir=path.parent)


def build_objective(cfg: RunConfig) -> Objective:
    spec = cfg.objective
    if spec.kind == "lower_bound":
        return LowerBoundObjective(spec.d, spec.mu)
    if spec.kind == "quadratic":
        H = np.asarray(spec.H, dtype=float) + spec.mu * np.eye(spec.d)
        return QuadraticObjective(H, spec.b)
    if spec.synthetic is not None:
        s = spec.synthetic
        data = synth_logistic(s.m, s.d, s.seed)
    else:
        path = Path(spec.dataset.path)
        if not path.is_absolute():
            path = cfg.base_dir / path
        data = load_libsvm(path, spec.dataset.dim, spec.dataset.one_vs_rest)
        if spec.dataset.normalize:
            data = normalize_rows(data)
    return LogisticObjective(data, spec.mu)


def initial_point(cfg: RunConfig, obj: Objective) -> np.ndarray:
    return cfg.x0.resolve(obj.dim)


@dataclass(frozen=True)
class SweepConfig:
    method: str
    param: str
    lo: float
    hi: float
    factor: float
    metric: str = "f"

    def __post_init__(self):
        if not self.lo > 0:
            raise ConfigError("grid lo must be positive")
        if not self.hi >= self.lo:
            raise ConfigError("grid hi must be >= lo")
        if not self.factor > 1:
            raise ConfigError("grid factor must exceed 1")
        if self.metric not in ("f", "grad_dual"):
            raise ConfigError("metric must be 'f' or 'grad_dual'")
        if self.method not in METHOD_PARAM:
            raise ConfigError(f"unknown method {self.method!r}")
        if METHOD_PARAM[self.method] != self.param:
            raise ConfigError(
                f"method {self.method!r} is tuned through {METHOD_PARAM[self.method]!r}, not {self.param!r}"
            )

    @classmethod
    def parse_grid(cls, method, param, grid: str, metric="f") -> "SweepConfig":
        try:
            lo, hi, factor = (float(p) for p in grid.split(":"))
        except ValueError:
            raise ConfigError(f"grid must look like lo:hi:factor, got {grid!r}") from None
        return cls(method, param, lo, hi, factor, metric)

    def points(self) -> list[float]:
        pts = []
        i = 0
        while self.lo * self.factor ** i <= self.hi * (1 + 1e-9):
            pts.append(self.lo * self.factor ** i)
            i += 1
        return pts


def bundled_configs() -> list[str]:
    """Names of the configs shipped with the package."""
    root = resources.files("aicn") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config(arg) -> RunConfig:
    """Load ``arg`` as a path, or as the name of a bundled config.

    Bundled configs resolve relative dataset and output paths against the
    current directory, so ``data/a9a`` is looked up where the user runs.
    """
    path = Path(arg)
    if path.exists() or str(arg).endswith(".json"):
        return load_config(path)
    if str(arg) not in bundled_configs():
        raise ConfigError(f"no config file {arg!r} and no bundled config of that name "
                          f"(bundled: {', '.join(bundled_configs())})")
    text = (resources.files("aicn") / "configs" / f"{arg}.json").read_text(encoding="utf-8")
    return RunConfig.from_dict(json.loads(text), base_dir=Path.cwd())
