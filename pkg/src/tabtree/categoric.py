"""Categoric encodings: bnry, ordl, ord3, onht, 1010.

Levels are the distinct valid train values: numbers compare numerically and
sort before text, text sorts lexicographically.  Every encoder reserves a
representation for unseen or missing entries so ``apply_encoding`` is total:
``ordl``/``ord3``/``1010`` use code K (one past the last level), ``onht`` emits
an all-zero row and ``bnry`` falls back to its most frequent level.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import numeric
from .data_model import ColumnData, is_missing
from .errors import FitError, ParamError

ENCODINGS = ("bnry", "ordl", "ord3", "onht", "1010")


def level_key(cell):
    """Canonical level for a cell, or None when the cell is missing."""
    if is_missing(cell):
        return None
    if isinstance(cell, (bool, np.bool_, int, float, np.integer, np.floating)):
        value = float(cell)
        return value if math.isfinite(value) else None
    return str(cell)


def _sort_key(level):
    return (0, level, "") if isinstance(level, float) else (1, 0.0, level)


def binary_width(n_codes: int) -> int:
    """Bits needed to give ``n_codes`` distinct patterns (at least one bit)."""
    return max(1, math.ceil(math.log2(max(n_codes, 2))))


def bits_of(codes: np.ndarray, width: int) -> list:
    """Most-significant-bit-first binary expansion of integer codes."""
    codes = codes.astype(np.int64)
    return [((codes >> (width - 1 - j)) & 1).astype(np.float64) for j in range(width)]


def code_from_bits(columns) -> np.ndarray:
    width = len(columns)
    code = np.zeros(len(columns[0]), dtype=np.int64)
    for j, col in enumerate(columns):
        bit = (np.asarray(col, dtype=np.float64) >= 0.5).astype(np.int64)
        code |= bit << (width - 1 - j)
    return code


@dataclass(frozen=True)
class CatBasis:
    variant: str
    levels: tuple
    column_count: int
    unseen_code: int

    @property
    def category_map(self) -> dict:
        return {level: code for code, level in enumerate(self.levels)}

    @property
    def inverse_map(self) -> dict:
        return dict(enumerate(self.levels))

    def to_stats(self) -> dict:
        stats = {"variant": self.variant, "levels": list(self.levels), "unseen_code": self.unseen_code}
        if self.variant in ("onht", "1010"):
            stats["column_count"] = self.column_count
        return stats

    @classmethod
    def from_stats(cls, stats: dict) -> "CatBasis":
        return cls(stats["variant"], tuple(stats["levels"]), stats.get("column_count", 1), stats["unseen_code"])


def _keys(column) -> list:
    cells = column.cells if isinstance(column, ColumnData) else column
    return [level_key(c) for c in cells]


def _name(column) -> str:
    return column.header if isinstance(column, ColumnData) else "<array>"


def fit_encoding(variant: str, column, valid: np.ndarray | None = None) -> CatBasis:
    if variant not in ENCODINGS:
        raise ParamError(f"unknown encoding {variant!r}")
    keys = _keys(column)
    if valid is not None:
        keys = [k if ok else None for k, ok in zip(keys, valid)]
    counts = Counter(k for k in keys if k is not None)
    if not counts:
        raise FitError(f"column {_name(column)!r} has no valid entries for {variant} (NArowtype any)")
    by_value = sorted(counts, key=_sort_key)

    if variant == "ord3":
        levels = sorted(counts, key=lambda lv: (-counts[lv], _sort_key(lv)))
        return CatBasis(variant, tuple(levels), 1, len(levels))
    if variant == "ordl":
        return CatBasis(variant, tuple(by_value), 1, len(by_value))
    if variant == "bnry":
        if len(by_value) > 2:
            raise FitError(
                f"bnry needs at most 2 levels, column {_name(column)!r} has {len(by_value)}; use onht or 1010"
            )
        mode = min(range(len(by_value)), key=lambda c: (-counts[by_value[c]], c))
        return CatBasis(variant, tuple(by_value), 1, mode)
    if variant == "onht":
        return CatBasis(variant, tuple(by_value), len(by_value), len(by_value))
    return CatBasis(variant, tuple(by_value), binary_width(len(by_value) + 1), len(by_value))


def encode_codes(basis: CatBasis, column, valid: np.ndarray | None = None) -> np.ndarray:
    lookup = basis.category_map
    keys = _keys(column)
    codes = np.array([lookup.get(k, basis.unseen_code) if k is not None else basis.unseen_code for k in keys],
                     dtype=np.int64)
    if valid is not None:
        codes[~np.asarray(valid, dtype=bool)] = basis.unseen_code
    return codes


def apply_encoding(basis: CatBasis, column, valid: np.ndarray | None = None) -> list:
    """Encode ``column``; returns a list of float arrays (one per output column)."""
    codes = encode_codes(basis, column, valid)
    if basis.variant == "onht":
        return [(codes == j).astype(np.float64) for j in range(basis.column_count)]
    if basis.variant == "1010":
        return bits_of(codes, basis.column_count)
    return [codes.astype(np.float64)]


def decode_codes(basis: CatBasis, outputs) -> np.ndarray:
    """Recover integer codes from encoded (possibly soft) outputs; -1 marks unrecoverable rows."""
    k = len(basis.levels)
    if basis.variant == "onht":
        mat = np.column_stack([np.asarray(o, dtype=np.float64) for o in outputs])
        code = np.argmax(mat, axis=1)
        code[~(mat.max(axis=1) > 0)] = -1
        return code
    if basis.variant == "1010":
        code = code_from_bits(outputs)
    else:
        y = np.asarray(outputs[0], dtype=np.float64)
        code = np.where(np.isfinite(y), np.rint(np.nan_to_num(y)), -1).astype(np.int64)
        if basis.variant == "bnry":
            code = np.clip(code, 0, max(k - 1, 0))
    code[(code < 0) | (code >= k)] = -1
    return code


def invert_encoding(basis: CatBasis, outputs) -> np.ndarray:
    code = decode_codes(basis, outputs)
    out = np.empty(len(code), dtype=object)
    for i, c in enumerate(code):
        out[i] = basis.levels[c] if c >= 0 else None
    return out


def ord3_mnmx(column, valid: np.ndarray | None = None) -> np.ndarray:
    """Frequency-ranked ordinal codes min-max scaled into [0, 1]."""
    basis = fit_encoding("ord3", column, valid)
    codes = encode_codes(basis, column, valid).astype(np.float64)
    fit_valid = None if valid is None else np.asarray(valid, dtype=bool)
    norm = numeric.fit_norm("mnmx", codes, valid=fit_valid)
    return numeric.apply_norm(norm, codes)
