"""Transform functions addressable by id from a category's process entry.

Each entry of :data:`TRANSFORMS` bundles

``fit(x, valid, params) -> stats``
    derive a JSON-ready basis from train input;
``apply(x, valid, stats, params, ctx) -> (columns, flagged)``
    produce output columns (list of float or object arrays) plus a boolean
    vector of rows that should become infill targets (or None);
``invert(columns, stats, params) -> values``
    recover the input, when the transform supports it.

``x`` is a 1-D array (object cells for source columns, float64 downstream) and
``valid`` the rows that are valid input.  ``ctx`` carries ``rng`` and
``traindata`` for the noise transforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import binning, categoric, noise, numeric
from .data_model import to_float_array


@dataclass(frozen=True)
class ApplyContext:
    traindata: bool = False
    rng: Optional[np.random.Generator] = None


@dataclass(frozen=True)
class Transform:
    fit: Callable
    apply: Callable
    invert: Optional[Callable] = None
    multi_column: bool = False
    noise: bool = False


def _masked_float(x, valid):
    v = to_float_array(x)
    if valid is not None:
        v = v.copy()
        v[~valid] = np.nan
    return v


def _float_columns(columns):
    return [to_float_array(c) for c in columns]


# --- normalizations -------------------------------------------------------


def _norm(variant):
    def fit(x, valid, params):
        return numeric.fit_norm(variant, _masked_float(x, valid), params).to_stats()

    def apply(x, valid, stats, params, ctx):
        return [numeric.apply_norm(numeric.NormBasis.from_stats(stats), _masked_float(x, valid))], None

    def invert(columns, stats, params):
        return numeric.invert_norm(numeric.NormBasis.from_stats(stats), _float_columns(columns)[0])

    return Transform(fit, apply, invert)


def _passthrough_numeric():
    def apply(x, valid, stats, params, ctx):
        return [_masked_float(x, valid)], None

    return Transform(lambda x, valid, params: {}, apply, lambda columns, stats, params: _float_columns(columns)[0])


def _narw():
    def apply(x, valid, stats, params, ctx):
        flags = np.zeros(len(x), dtype=bool) if valid is None else ~np.asarray(valid, dtype=bool)
        return [flags.astype(np.float64)], None

    return Transform(lambda x, valid, params: {}, apply)


# --- sequential deltas ----------------------------------------------------


def _dxdt():
    def apply(x, valid, stats, params, ctx):
        out = numeric.compute_dxdt(_masked_float(x, valid), int(params.get("periods", 1)), int(params.get("order", 1)))
        return [out], None

    return Transform(lambda x, valid, params: {}, apply)


def _dxd2():
    def apply(x, valid, stats, params, ctx):
        out = numeric.compute_dxd2(_masked_float(x, valid), int(params.get("periods", 2)), int(params.get("window", 2)))
        return [out], None

    return Transform(lambda x, valid, params: {}, apply)


# --- categoric encodings --------------------------------------------------


def _cat_cells(x, valid):
    if valid is None:
        return x
    cells = np.array(x, dtype=object)
    cells[~np.asarray(valid, dtype=bool)] = None
    return cells


def _encoding(variant):
    def fit(x, valid, params):
        return categoric.fit_encoding(variant, _cat_cells(x, valid)).to_stats()

    def apply(x, valid, stats, params, ctx):
        basis = categoric.CatBasis.from_stats(stats)
        return categoric.apply_encoding(basis, _cat_cells(x, valid)), None

    def invert(columns, stats, params):
        return categoric.invert_encoding(categoric.CatBasis.from_stats(stats), _float_columns(columns))

    return Transform(fit, apply, invert, multi_column=variant in ("onht", "1010"))


# --- bins -----------------------------------------------------------------


def _bins(variant, mode):
    def fit(x, valid, params):
        return binning.fit_bins(variant, _masked_float(x, valid), params, output_mode=mode).to_stats()

    def apply(x, valid, stats, params, ctx):
        return binning.apply_bins(binning.BinBasis.from_stats(stats), _masked_float(x, valid))

    return Transform(fit, apply, multi_column=mode != "ordinal")


# --- noise ----------------------------------------------------------------


def _numeric_noise(kind):
    def fit(x, valid, params):
        noise.NoiseParams.from_params(params)  # validate early
        if kind != "retn_range":
            return {}
        v = _masked_float(x, valid)
        v = v[np.isfinite(v)]
        lo, hi = (float(v.min()), float(v.max())) if v.size else (0.0, 0.0)
        return {"lower": lo, "upper": hi}

    def apply(x, valid, stats, params, ctx):
        if kind == "unbounded":
            range_info = None
        elif kind == "unit":
            range_info = noise.UNIT_INTERVAL
        else:
            range_info = (stats["lower"], stats["upper"])
        out = noise.inject_numeric(to_float_array(x), range_info, noise.NoiseParams.from_params(params),
                                   ctx.rng, ctx.traindata, valid)
        return [out], None

    return Transform(fit, apply, lambda columns, stats, params: _float_columns(columns)[0], noise=True)


def _flip():
    def fit(x, valid, params):
        noise.NoiseParams.from_params(params)
        v = _masked_float(x, valid)
        v = v[np.isfinite(v)]
        return {"k": int(v.max()) + 1 if v.size else 1}

    def apply(x, valid, stats, params, ctx):
        out = noise.inject_categoric_flip(to_float_array(x), stats["k"], noise.NoiseParams.from_params(params),
                                          ctx.rng, ctx.traindata, valid)
        return [out], None

    return Transform(fit, apply, lambda columns, stats, params: _float_columns(columns)[0], noise=True)


TRANSFORMS = {
    **{v: _norm(v) for v in numeric.NORM_VARIANTS},
    **{v: _encoding(v) for v in categoric.ENCODINGS},
    "exc2": _passthrough_numeric(),
    "NArw": _narw(),
    "dxdt": _dxdt(),
    "dxd2": _dxd2(),
    "DPnb": _numeric_noise("unbounded"),
    "DPmm": _numeric_noise("unit"),
    "DPrt": _numeric_noise("retn_range"),
    "DPod": _flip(),
}

# one transform id per (bin family, output mode)
BIN_IDS = {
    "stdev": ("bins", "bsor", "bsbn"),
    "pwrs": ("pwrs", "pwor", "pwbn"),
    "pwr2": ("pwr2", "por2", "por3"),
    "fixed_width": ("bnwd", "bnwo", "bnwb"),
    "equal_population": ("bnep", "bneo", "bneb"),
    "user_open": ("bkt1", "bkt3", "bkb3"),
    "user_bounded": ("bkt2", "bkt4", "bkb4"),
}
for _variant, _ids in BIN_IDS.items():
    for _id, _mode in zip(_ids, binning.OUTPUT_MODES):
        TRANSFORMS[_id] = _bins(_variant, _mode)
