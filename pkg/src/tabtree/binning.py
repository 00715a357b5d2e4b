"""Numeric binning families with one-hot, ordinal, or binary output.

Intervals are left-closed and right-open, so a boundary value lands in the upper
bin.  Open variants carry -inf/+inf end edges; bounded variants (powers of ten
and user-bounded buckets) send entries outside their edges to infill.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .categoric import binary_width, bits_of, code_from_bits
from .data_model import ColumnData, to_float_array
from .errors import FitError, ParamError

BIN_VARIANTS = ("stdev", "pwrs", "pwr2", "fixed_width", "equal_population", "user_open", "user_bounded")
OUTPUT_MODES = ("onehot", "ordinal", "binary")

DEFAULT_BINCOUNT = 6
DEFAULT_WIDTH = 1.0
DEFAULT_BUCKETS = (0.0, 1.0, 2.0)
MAX_BINS = 10_000


@dataclass(frozen=True)
class BinBasis:
    variant: str
    edges: tuple
    labels: tuple
    output_mode: str
    bounded: bool

    @property
    def bin_count(self) -> int:
        return sum(1 for lab in self.labels if lab is not None)

    @property
    def column_count(self) -> int:
        if self.output_mode == "onehot":
            return self.bin_count
        if self.output_mode == "binary":
            return binary_width(self.bin_count + 1)
        return 1

    def to_stats(self) -> dict:
        stats = {
            "variant": self.variant,
            "edges": list(self.edges),
            "labels": list(self.labels),
            "output_mode": self.output_mode,
            "bounded": self.bounded,
        }
        if self.output_mode != "ordinal":
            stats["column_count"] = self.column_count
        return stats

    @classmethod
    def from_stats(cls, stats: dict) -> "BinBasis":
        return cls(stats["variant"], tuple(stats["edges"]), tuple(stats["labels"]),
                   stats["output_mode"], stats["bounded"])


def _decade_floor(a: float) -> int:
    """d with 10**d <= a < 10**(d+1), for a > 0."""
    d = math.floor(math.log10(a))
    while 10.0 ** d > a:
        d -= 1
    while 10.0 ** (d + 1) <= a:
        d += 1
    return d


def _decade_below(a: float) -> int:
    """d with 10**d < a <= 10**(d+1), for a > 0 (negative side of signed decades)."""
    d = math.ceil(math.log10(a)) - 1
    while 10.0 ** d >= a:
        d -= 1
    while 10.0 ** (d + 1) < a:
        d += 1
    return d


def _values(column):
    if isinstance(column, ColumnData):
        return column.to_float()
    return to_float_array(column)


def _bincount(params: dict, even: bool) -> int:
    b = params.get("bincount", DEFAULT_BINCOUNT)
    if not isinstance(b, (int, np.integer)) or isinstance(b, bool) or b < 2:
        raise ParamError(f"bincount must be an integer >= 2, got {b!r}")
    if even and b % 2:
        raise ParamError(f"standard deviation bins need an even bincount, got {b}")
    return int(b)


def _buckets(params: dict) -> list:
    buckets = [float(v) for v in params.get("buckets", DEFAULT_BUCKETS)]
    if len(buckets) < 2 or any(b >= a for a, b in zip(buckets[1:], buckets)) or not all(map(math.isfinite, buckets)):
        raise ParamError(f"buckets must be >= 2 finite strictly increasing values, got {buckets}")
    return buckets


def fit_bins(variant: str, column, params: dict | None = None, valid: np.ndarray | None = None,
             output_mode: str = "onehot") -> BinBasis:
    if variant not in BIN_VARIANTS:
        raise ParamError(f"unknown bin variant {variant!r}")
    if output_mode not in OUTPUT_MODES:
        raise ParamError(f"unknown output mode {output_mode!r}")
    params = params or {}
    x = _values(column)
    ok = np.isfinite(x)
    if valid is not None:
        ok &= valid
    if variant == "pwrs":
        ok &= x > 0
    elif variant == "pwr2":
        ok &= x != 0
    x = x[ok]
    user = variant in ("user_open", "user_bounded")
    if x.size == 0 and not user:
        raise FitError(f"no valid numeric entries to fit {variant} bins")

    if variant == "stdev":
        b = _bincount(params, even=True)
        mu, sigma = float(np.mean(x)), float(np.std(x))
        sigma = sigma if sigma > 0 else 1.0
        half = b // 2 - 1
        edges = [-math.inf] + [mu + k * sigma for k in range(-half, half + 1)] + [math.inf]
        return _make(variant, edges, output_mode, bounded=False)

    if variant == "pwrs":
        lo, hi = _decade_floor(float(x.min())), _decade_floor(float(x.max()))
        edges = [10.0 ** d for d in range(lo, hi + 2)]
        labels = [f"10^{d}" for d in range(lo, hi + 1)]
        return BinBasis(variant, tuple(edges), tuple(labels), output_mode, True)

    if variant == "pwr2":
        neg, pos = -x[x < 0], x[x > 0]
        edges, labels = [], []
        if neg.size:
            dlo, dhi = _decade_below(float(neg.min())), _decade_below(float(neg.max()))
            edges += [-(10.0 ** (d + 1)) for d in range(dhi, dlo - 1, -1)] + [-(10.0 ** dlo)]
            labels += [f"-10^{d}" for d in range(dhi, dlo - 1, -1)]
        if pos.size:
            plo, phi = _decade_floor(float(pos.min())), _decade_floor(float(pos.max()))
            if neg.size:
                labels.append(None)  # gap between the negative and positive decades
            edges += [10.0 ** d for d in range(plo, phi + 2)]
            labels += [f"10^{d}" for d in range(plo, phi + 1)]
        return BinBasis(variant, tuple(edges), tuple(labels), output_mode, True)

    if variant == "fixed_width":
        w = float(params.get("width", DEFAULT_WIDTH))
        if not w > 0:
            raise ParamError(f"width must be positive, got {w}")
        lo, hi = float(x.min()), float(x.max())
        nbins = int(math.floor((hi - lo) / w)) + 1
        if nbins > MAX_BINS:
            raise ParamError(f"width {w} gives {nbins} bins over [{lo}, {hi}]; limit is {MAX_BINS}")
        edges = [-math.inf] + [lo + i * w for i in range(1, nbins)] + [math.inf]
        return _make(variant, edges, output_mode, bounded=False)

    if variant == "equal_population":
        b = _bincount(params, even=False)
        qs = np.quantile(x, [i / b for i in range(1, b)])
        inner = [float(q) for q in np.unique(qs)]
        return _make(variant, [-math.inf] + inner + [math.inf], output_mode, bounded=False)

    buckets = _buckets(params)
    if variant == "user_open":
        return _make(variant, [-math.inf] + buckets[1:-1] + [math.inf], output_mode, bounded=False)
    return _make(variant, buckets, output_mode, bounded=True)


def _make(variant, edges, output_mode, bounded) -> BinBasis:
    labels = [f"[{lo}, {hi})" for lo, hi in zip(edges[:-1], edges[1:])]
    return BinBasis(variant, tuple(float(e) for e in edges), tuple(labels), output_mode, bounded)


def bin_index(basis: BinBasis, column, valid: np.ndarray | None = None) -> np.ndarray:
    """Bin number per entry; -1 for missing, invalid, or out-of-range entries."""
    x = _values(column)
    edges = np.asarray(basis.edges, dtype=np.float64)
    interval = np.searchsorted(edges, np.nan_to_num(x, nan=0.0), side="right") - 1
    bin_of_interval = np.full(len(basis.labels), -1, dtype=np.int64)
    k = 0
    for i, lab in enumerate(basis.labels):
        if lab is not None:
            bin_of_interval[i] = k
            k += 1
    inside = (interval >= 0) & (interval < len(basis.labels)) & np.isfinite(x)
    idx = np.full(len(x), -1, dtype=np.int64)
    idx[inside] = bin_of_interval[interval[inside]]
    if valid is not None:
        idx[~np.asarray(valid, dtype=bool)] = -1
    return idx


def apply_bins(basis: BinBasis, column, valid: np.ndarray | None = None):
    """Encode bins per ``basis.output_mode``.

    Returns ``(columns, flagged)`` where ``flagged`` marks entries that fell
    outside every bin (infill targets).
    """
    idx = bin_index(basis, column, valid)
    flagged = idx < 0
    n_bins = basis.bin_count
    if basis.output_mode == "onehot":
        cols = [(idx == j).astype(np.float64) for j in range(n_bins)]
    else:
        code = np.where(flagged, n_bins, idx)
        if basis.output_mode == "ordinal":
            cols = [code.astype(np.float64)]
        else:
            cols = bits_of(code, basis.column_count)
    return cols, flagged


def decode_bins(basis: BinBasis, columns) -> np.ndarray:
    """Bin indices recovered from encoded columns (-1 where no bin is active)."""
    n_bins = basis.bin_count
    if basis.output_mode == "onehot":
        mat = np.column_stack(columns)
        idx = np.argmax(mat, axis=1)
        idx[~(mat.max(axis=1) > 0)] = -1
        return idx
    if basis.output_mode == "binary":
        code = code_from_bits(columns)
    else:
        code = np.rint(np.asarray(columns[0], dtype=np.float64)).astype(np.int64)
    code[(code < 0) | (code >= n_bins)] = -1
    return code
