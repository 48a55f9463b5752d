"""LIBSVM text datasets, stored densely with +-1 labels."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = ""
    normalized: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("one label per row required")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")

    @property
    def shape(self):
        return self.features.shape


def _map_labels(raw):
    distinct = sorted(set(raw))
    if set(distinct) <= {-1.0, 1.0}:
        return np.array(raw, dtype=np.int64)
    if len(distinct) != 2:
        raise ParseError(f"cannot map a single label {distinct} onto two classes", 1)
    low = distinct[0]
    return np.array([-1 if r == low else 1 for r in raw], dtype=np.int64)


def parse_libsvm(stream, dim=None, name="", one_vs_rest=None) -> Dataset:
    """Parse ``label idx:val ...`` lines into a dense Dataset.

    ``stream`` is a text stream or a string holding the file contents.
    Indices are 1-based and must increase strictly within a line. The
    feature width is the largest index seen, or ``dim`` if that is larger.
    Labels already in {-1, +1} are kept; any other two-valued labelling
    maps its smaller value to -1. With ``one_vs_rest`` set, that raw label
    becomes +1 and every other label -1, so multi-class files are accepted.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    raw_labels = []
    rows, cols, vals = [], [], []
    width = 0
    distinct = set()
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        distinct.add(label)
        if one_vs_rest is None and len(distinct) > 2:
            raise ParseError(f"more than two distinct labels ({sorted(distinct)})", lineno)
        row = len(raw_labels)
        raw_labels.append(label)
        prev = 0
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                j = int(idx)
                v = float(val)
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", lineno) from None
            if j <= prev:
                raise ParseError(f"index {j} not strictly increasing", lineno)
            if not np.isfinite(v):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            prev = j
            rows.append(row)
            cols.append(j - 1)
            vals.append(v)
        width = max(width, prev)

    if dim is not None:
        width = max(width, int(dim))
    X = np.zeros((len(raw_labels), width))
    if vals:
        X[np.array(rows), np.array(cols)] = np.array(vals)
    if one_vs_rest is not None:
        labels = np.where(np.array(raw_labels) == float(one_vs_rest), 1, -1).astype(np.int64)
    else:
        labels = _map_labels(raw_labels)
    return Dataset(X, labels, name=name)


def load_libsvm(path, dim=None, one_vs_rest=None) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            return parse_libsvm(fh, dim=dim, name=path.name, one_vs_rest=one_vs_rest)
        except ParseError as exc:
            exc.args = (f"{path}: {exc}",)
            raise


def write_libsvm(ds: Dataset, stream) -> None:
    """Serialize a Dataset; values use ``repr`` so parsing back is exact."""
    for x, y in zip(ds.features, ds.labels):
        nz = np.flatnonzero(x)
        parts = [f"{'+1' if y > 0 else '-1'}"]
        parts += [f"{j + 1}:{float(x[j])!r}" for j in nz]
        stream.write(" ".join(parts) + "\n")


def normalize_rows(ds: Dataset) -> Dataset:
    """Scale every nonzero row to unit Euclidean norm."""
    norms = np.linalg.norm(ds.features, axis=1)
    scale = np.where(norms > 0, norms, 1.0)
    return Dataset(ds.features / scale[:, None], ds.labels.copy(), ds.name, normalized=True)


def synth_logistic(m: int, d: int, seed: int = 0, flip: float = 0.1) -> Dataset:
    """Linearly separable data with a fraction ``flip`` of labels flipped.

    Rows are drawn from a standard normal and normalized to unit length.
    """
    if m < 1 or d < 1:
        raise ValueError("m and d must be positive")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    A = rng.standard_normal((m, d))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = np.where(A @ w >= 0, 1, -1)
    flips = rng.random(m) < flip
    b[flips] = -b[flips]
    return Dataset(A, b.astype(np.int64), name=f"synth-{m}x{d}-s{seed}", normalized=True)
