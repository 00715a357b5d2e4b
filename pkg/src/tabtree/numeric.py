"""Numeric normalizations and sequential deltas.

Normalization variants and their formulas::

    nmbr   (x - mu) / sigma
    mnmx   (x - min) / (max - min)
    mean   (x - mean) / (max - min)
    MAD3   (x - max) / MAD          (center="median" gives (x - median) / MAD)
    lgnm   (ln x - mu_ln) / sigma_ln
    retn   x / (max - min)          if min <= 0 <= max
           (x - min) / (max - min)  if min > 0
           (x - max) / (max - min)  if max < 0

sigma is the population standard deviation; MAD is the median absolute deviation
about the median.  A zero denominator is replaced by 1.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .data_model import ColumnData, to_float_array
from .errors import FitError, ParamError

NORM_VARIANTS = ("nmbr", "mnmx", "mean", "MAD3", "lgnm", "retn")

_NAROWTYPE = {
    "nmbr": "numeric",
    "mnmx": "numeric",
    "mean": "numeric",
    "MAD3": "numeric",
    "retn": "numeric",
    "lgnm": "positive-numeric",
}


@dataclass(frozen=True)
class NormBasis:
    variant: str
    mu: float | None = None
    sigma: float | None = None
    min: float | None = None
    max: float | None = None
    mad: float | None = None
    median: float | None = None
    cap_enabled: bool = False
    floor_enabled: bool = False
    center: str = "max"

    def to_stats(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_stats(cls, stats: dict) -> "NormBasis":
        return cls(**stats)


def _values_and_name(column):
    if isinstance(column, ColumnData):
        return column.to_float(), column.header
    return to_float_array(column), "<array>"


def _nonzero(denominator: float) -> float:
    return denominator if denominator != 0 else 1.0


def _pstd(x: np.ndarray) -> float:
    # the mean of identical values can round away from them; keep sigma exactly 0
    return 0.0 if x.min() == x.max() else float(np.std(x))


def fit_norm(variant: str, column, params: dict | None = None, valid: np.ndarray | None = None) -> NormBasis:
    """Derive normalization statistics from the valid train entries of ``column``."""
    if variant not in NORM_VARIANTS:
        raise ParamError(f"unknown normalization variant {variant!r}")
    params = params or {}
    x, name = _values_and_name(column)
    ok = np.isfinite(x)
    if valid is not None:
        ok &= valid
    if variant == "lgnm":
        ok &= x > 0
    x = x[ok]
    if x.size == 0:
        raise FitError(f"column {name!r} has no valid entries for {variant} (NArowtype {_NAROWTYPE[variant]})")

    cap = bool(params.get("cap", False))
    floor = bool(params.get("floor", False))
    if variant == "nmbr":
        return NormBasis(variant, mu=float(np.mean(x)), sigma=_pstd(x))
    if variant == "lgnm":
        logged = np.log(x)
        return NormBasis(variant, mu=float(np.mean(logged)), sigma=_pstd(logged))
    if variant == "mnmx":
        return NormBasis(variant, min=float(x.min()), max=float(x.max()), cap_enabled=cap, floor_enabled=floor)
    if variant == "mean":
        return NormBasis(variant, mu=float(np.mean(x)), min=float(x.min()), max=float(x.max()))
    if variant == "MAD3":
        center = params.get("center", "max")
        if center not in ("max", "median"):
            raise ParamError(f"MAD3 center must be 'max' or 'median', got {center!r}")
        median = float(np.median(x))
        mad = float(np.median(np.abs(x - median)))
        return NormBasis(variant, max=float(x.max()), median=median, mad=mad, center=center)
    return NormBasis(variant, min=float(x.min()), max=float(x.max()))


def _retn_case(lo: float, hi: float) -> str:
    if lo <= 0 <= hi:
        return "span"
    if lo > 0:
        return "positive"
    return "negative"


def apply_norm(basis: NormBasis, column) -> np.ndarray:
    """Apply a fitted normalization.  Entries invalid for the variant become NaN."""
    x, _ = _values_and_name(column)
    v = basis.variant
    with np.errstate(invalid="ignore", divide="ignore"):
        if v == "nmbr":
            return (x - basis.mu) / _nonzero(basis.sigma)
        if v == "lgnm":
            logged = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), np.nan)
            return (logged - basis.mu) / _nonzero(basis.sigma)
        if v == "mnmx":
            out = (x - basis.min) / _nonzero(basis.max - basis.min)
            if basis.floor_enabled:
                out = np.where(out < 0, 0.0, out)
            if basis.cap_enabled:
                out = np.where(out > 1, 1.0, out)
            return out
        if v == "mean":
            return (x - basis.mu) / _nonzero(basis.max - basis.min)
        if v == "MAD3":
            center = basis.max if basis.center == "max" else basis.median
            return (x - center) / _nonzero(basis.mad)
        # retn
        span = _nonzero(basis.max - basis.min)
        case = _retn_case(basis.min, basis.max)
        if case == "span":
            return x / span
        if case == "positive":
            return (x - basis.min) / span
        return (x - basis.max) / span


def invert_norm(basis: NormBasis, values) -> np.ndarray:
    y = np.asarray(values, dtype=np.float64)
    v = basis.variant
    if v == "nmbr":
        return y * _nonzero(basis.sigma) + basis.mu
    if v == "lgnm":
        return np.exp(y * _nonzero(basis.sigma) + basis.mu)
    if v == "mnmx":
        return y * _nonzero(basis.max - basis.min) + basis.min
    if v == "mean":
        return y * _nonzero(basis.max - basis.min) + basis.mu
    if v == "MAD3":
        center = basis.max if basis.center == "max" else basis.median
        return y * _nonzero(basis.mad) + center
    span = _nonzero(basis.max - basis.min)
    case = _retn_case(basis.min, basis.max)
    if case == "span":
        return y * span
    if case == "positive":
        return y * span + basis.min
    return y * span + basis.max


def _check_positive_int(name, value):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ParamError(f"{name} must be a positive integer, got {value!r}")


def compute_dxdt(column, periods: int = 1, order: int = 1) -> np.ndarray:
    """Delta between each entry and the entry ``periods`` steps prior, chained ``order`` times.

    The first ``periods`` entries of each pass have no predecessor and are NaN.
    """
    _check_positive_int("periods", periods)
    _check_positive_int("order", order)
    x, name = _values_and_name(column)
    n = len(x)
    if periods >= n:
        warnings.warn(f"dxdt periods={periods} >= length {n} of {name!r}; output is all missing")
        return np.full(n, np.nan)
    out = x
    for _ in range(order):
        nxt = np.full(n, np.nan)
        nxt[periods:] = out[periods:] - out[:-periods]
        out = nxt
    return out


def compute_dxd2(column, periods: int = 2, window: int = 2) -> np.ndarray:
    """Delta between the trailing ``window``-mean at i and the one ``periods`` steps prior."""
    _check_positive_int("periods", periods)
    _check_positive_int("window", window)
    x, name = _values_and_name(column)
    n = len(x)
    if periods + window - 1 >= n:
        warnings.warn(f"dxd2 periods={periods}, window={window} leave no defined entries in {name!r}")
        return np.full(n, np.nan)
    m = n - window + 1
    acc = np.zeros(m)
    # sequential left-to-right accumulation, same order as a plain running sum
    for j in range(window):
        acc = acc + x[j : m + j]
    means = acc / window  # means[k] covers x[k .. k+window-1]
    out = np.full(n, np.nan)
    start = periods + window - 1
    idx = np.arange(start, n)
    out[start:] = means[idx - window + 1] - means[idx - periods - window + 1]
    return out

