"""Validity masks, NArw markers, and infill strategies.

Infill works on a *group*: the one or more columns returned by a single
transform, viewed as an (n, k) matrix, plus a boolean vector of flagged rows.
Fill values are always derived from train data; ``adj`` is the exception and
copies neighbours within whatever data it is applied to.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import forest
from .data_model import ColumnData, NArowMask, is_missing, to_float_array

log = logging.getLogger(__name__)

STRATEGIES = ("stdrd", "zero", "one", "adj", "mean", "median", "mode", "negzero", "lc", "nan", "ml")

# accepted spellings from assigninfill-style configs
STRATEGY_ALIASES = {
    "stdrdinfill": "stdrd",
    "zeroinfill": "zero",
    "oneinfill": "one",
    "adjinfill": "adj",
    "meaninfill": "mean",
    "medianinfill": "median",
    "modeinfill": "mode",
    "negzeroinfill": "negzero",
    "lcinfill": "lc",
    "naninfill": "nan",
    "MLinfill": "ml",
}

ML_MIN_ROWS = 8


def canonical_strategy(name: str) -> str:
    name = STRATEGY_ALIASES.get(name, name)
    if name not in STRATEGIES:
        raise ValueError(f"unknown infill strategy {name!r}")
    return name


def compute_narw_mask(column, narowtype: str) -> NArowMask:
    """Flag entries that are not valid input under ``narowtype``."""
    if isinstance(column, ColumnData):
        header, cells = column.header, column.cells
    else:
        header, cells = "<array>", np.asarray(column)
    if narowtype == "any":
        if cells.dtype.kind == "f":
            flags = np.isnan(cells)
        elif cells.dtype.kind in "iub":
            flags = np.zeros(len(cells), dtype=bool)
        else:
            flags = np.array([is_missing(c) for c in cells], dtype=bool)
        return NArowMask(header, flags)
    x = to_float_array(cells)
    flags = ~np.isfinite(x)
    with np.errstate(invalid="ignore"):
        if narowtype == "nonnegative-numeric":
            flags |= x < 0
        elif narowtype == "nonzero-numeric":
            flags |= x == 0
        elif narowtype == "positive-numeric":
            flags |= x <= 0
        elif narowtype == "integer":
            flags |= x != np.round(x)
        elif narowtype != "numeric":
            raise ValueError(f"unknown NArowtype {narowtype!r}")
    return NArowMask(header, flags)


def narw_column(mask: NArowMask) -> np.ndarray:
    return mask.flags.astype(np.float64)


# --- simple strategies ----------------------------------------------------


def _patterns(matrix: np.ndarray, rows: np.ndarray):
    sub = matrix[rows]
    if sub.shape[0] == 0:
        return None, None
    return np.unique(sub, axis=0, return_counts=True)


def fit_fill(strategy: str, matrix: np.ndarray, flags: np.ndarray, mlinfilltype: str) -> dict:
    """Derive train-side fill values for one group.  Returns a JSON-ready dict."""
    if mlinfilltype == "exclude" or strategy in ("adj", "nan", "ml"):
        return {}
    if strategy == "stdrd":
        if mlinfilltype != "numeric":
            return {}  # categoric encoders already emit their reserved representation
        strategy = "mean"
    if strategy in ("zero", "one", "negzero"):
        value = {"zero": 0.0, "one": 1.0, "negzero": -0.0}[strategy]
        return {"fill": [value] * matrix.shape[1]}
    good = ~flags
    if not good.any():
        warnings.warn(f"no valid train rows for {strategy} infill; falling back to zero")
        return {"fill": [0.0] * matrix.shape[1]}
    if strategy in ("mean", "median") and mlinfilltype == "numeric":
        reducer = np.nanmean if strategy == "mean" else np.nanmedian
        sub = matrix[good]
        fill = []
        for j in range(matrix.shape[1]):
            col = sub[:, j]
            col = col[np.isfinite(col)]
            fill.append(float(reducer(col)) if col.size else 0.0)
        return {"fill": fill}
    # mode / lc, and mean / median on categoric groups (row-pattern mode)
    finite_rows = good & np.all(np.isfinite(matrix), axis=1)
    patterns, counts = _patterns(matrix, finite_rows)
    if patterns is None:
        return {"fill": [0.0] * matrix.shape[1]}
    pick = np.argmin(counts) if strategy == "lc" else np.argmax(counts)
    return {"fill": [float(v) for v in patterns[pick]]}


def adjacent_fill(matrix: np.ndarray, flags: np.ndarray) -> np.ndarray:
    """Copy the nearest prior unflagged row; leading flagged rows use the nearest following one."""
    out = matrix.copy()
    n = len(flags)
    if not flags.any():
        return out
    good = ~flags
    if not good.any():
        warnings.warn("adj infill on a column with no valid rows; falling back to zero")
        out[flags] = 0.0
        return out
    idx = np.arange(n)
    prior = np.maximum.accumulate(np.where(good, idx, -1))
    following = np.minimum.accumulate(np.where(good, idx, n)[::-1])[::-1]
    source = np.where(prior >= 0, prior, following)
    out[flags] = matrix[source[flags]]
    return out


def apply_fill(strategy: str, matrix: np.ndarray, flags: np.ndarray, stats: dict) -> np.ndarray:
    out = np.array(matrix, dtype=np.float64, copy=True)
    if not flags.any():
        return out
    if strategy == "adj":
        return adjacent_fill(out, flags)
    if strategy == "nan":
        out[flags] = np.nan
        return out
    fill = stats.get("fill")
    if fill is None:
        return out
    out[flags] = np.asarray(fill, dtype=np.float64)
    return out


# --- ML infill ------------------------------------------------------------


def _classes(matrix: np.ndarray, rows: np.ndarray):
    patterns, inverse = np.unique(matrix[rows], axis=0, return_inverse=True)
    return patterns, inverse.reshape(-1)


def ml_infill(target: np.ndarray, flags: np.ndarray, features: np.ndarray, mlinfilltype: str,
              rng: np.random.Generator):
    """Fit a forest on unflagged rows and predict the flagged ones.

    Returns ``(model, filled)``; ``model`` is None when there were too few rows,
    in which case the caller keeps its standard fill.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 1:
        target = target[:, None]
    good = ~flags & np.all(np.isfinite(target), axis=1)
    if good.sum() < ML_MIN_ROWS:
        warnings.warn(f"ML infill needs >= {ML_MIN_ROWS} unflagged rows, got {int(good.sum())}; using stdrd")
        return None, target.copy()
    X = np.asarray(features, dtype=np.float64)
    if mlinfilltype == "numeric":
        models = [forest.fit_forest(X[good], target[good, j], "regression", rng) for j in range(target.shape[1])]
        model = {"kind": "regression", "forests": models}
    else:
        patterns, labels = _classes(target, good)
        model = {
            "kind": "classification",
            "forests": [forest.fit_forest(X[good], labels, "classification", rng)],
            "classes": patterns.tolist(),
        }
    return model, ml_predict(model, target, flags, X)


def ml_predict(model: dict, target: np.ndarray, flags: np.ndarray, features: np.ndarray) -> np.ndarray:
    out = np.array(target, dtype=np.float64, copy=True)
    if out.ndim == 1:
        out = out[:, None]
    if model is None or not flags.any():
        return out
    X = np.asarray(features, dtype=np.float64)[flags]
    if model["kind"] == "regression":
        for j, f in enumerate(model["forests"]):
            out[flags, j] = forest.predict_forest(f, X)
    else:
        classes = np.asarray(model["classes"], dtype=np.float64)
        out[flags] = classes[forest.predict_forest(model["forests"][0], X)]
    return out


@dataclass
class InfillPlan:
    """Strategy plus per-group fitted fill values (and forests for ``ml``) for one source column."""

    strategy: str
    groups: dict = field(default_factory=dict)
    iterations: int = 1

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "groups": self.groups, "iterations": self.iterations}

    @classmethod
    def from_dict(cls, data: dict) -> "InfillPlan":
        if not data:
            return cls("stdrd")
        return cls(data["strategy"], data.get("groups", {}), data.get("iterations", 1))


def mae(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.mean(np.abs(a - b))) if a.size else math.nan
