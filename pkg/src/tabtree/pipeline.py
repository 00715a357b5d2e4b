"""Fit/apply orchestration over whole tables.

``fit`` assigns a root category to every column, fits its family tree on the
train rows, derives infill, and records everything in a :class:`PipelineStore`.
``apply`` replays the store on new data.  Tables are pandas DataFrames; a
missing cell is ``None`` or NaN.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np
import pandas as pd

from . import infill as inf
from .data_model import ColumnData, PipelineStore, SourceFit, is_missing, parse_number
from .errors import ConfigError, ContractError
from .registry import builtin_registry
from .tree import RngStreams, TreeResult, apply_tree, fit_tree

log = logging.getLogger(__name__)

NUMERIC_THRESHOLD = 0.8
IGNORED_OPTIONS = ("eval_ratio", "numbercategoryheuristic")
FIT_TAG = "fit"


@dataclass
class PipelineConfig:
    labels_column: str | None = None
    assigncat: dict = field(default_factory=dict)
    assignparam: dict = field(default_factory=dict)
    assigninfill: dict = field(default_factory=dict)
    valpercent: float = 0.0
    shuffletrain: bool = False
    noise_augment: int = 0
    master_seed: int = 0
    traindata: bool = True
    default_numeric_root: str = "retn"
    default_categoric_root: str = "1010"
    default_label_numeric_root: str = "exc2"
    default_label_categoric_root: str = "1010"
    numeric_threshold: float = NUMERIC_THRESHOLD
    infill_iterations: int = 1

    def __post_init__(self):
        if not 0.0 <= self.valpercent < 1.0:
            raise ConfigError(f"valpercent must be in [0, 1), got {self.valpercent}")
        if int(self.noise_augment) != self.noise_augment or self.noise_augment < 0:
            raise ConfigError(f"noise_augment must be a nonnegative integer, got {self.noise_augment}")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ConfigError(f"master_seed must be a nonnegative integer, got {self.master_seed}")
        if self.infill_iterations < 1:
            raise ConfigError("infill_iterations must be >= 1")
        self.assigninfill = {inf.canonical_strategy(k): list(v) for k, v in self.assigninfill.items()}
        self.assigncat = {k: list(v) for k, v in self.assigncat.items()}
        seen = {}
        for root, headers in self.assigncat.items():
            for h in headers:
                if h in seen and seen[h] != root:
                    raise ConfigError(f"column {h!r} assigned to both {seen[h]!r} and {root!r}")
                seen[h] = root
        seen = {}
        for strategy, headers in self.assigninfill.items():
            for h in headers:
                if h in seen and seen[h] != strategy:
                    raise ConfigError(f"column {h!r} assigned infill {seen[h]!r} and {strategy!r}")
                seen[h] = strategy

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        for key in IGNORED_OPTIONS:
            if key in data:
                warnings.warn(f"option {key!r} is accepted but has no effect")
                data.pop(key)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown pipeline options: {sorted(unknown)}")
        return cls(**data)


class FitResult(NamedTuple):
    train: pd.DataFrame
    labels: pd.DataFrame | None
    val: pd.DataFrame
    val_labels: pd.DataFrame | None
    store: PipelineStore


# --- column preparation --------------------------------------------------


def _cells(series: pd.Series) -> np.ndarray:
    values = series.to_numpy(dtype=object)
    return np.array([None if (is_missing(v) or v is pd.NA or v is pd.NaT) else v for v in values], dtype=object)


def sniff_numeric(cells, threshold: float = NUMERIC_THRESHOLD) -> bool:
    """True when at least ``threshold`` of the non-missing cells parse as numbers."""
    present = [c for c in cells if c is not None]
    if not present:
        return False
    parsed = sum(1 for c in present if not np.isnan(parse_number(c)))
    return parsed / len(present) >= threshold


def prepare_column(series: pd.Series, kind: str, role: str) -> ColumnData:
    """Cells of a numeric column become floats where they parse; others keep their text."""
    cells = _cells(series)
    if kind == "numeric":
        parsed = np.array([parse_number(c) for c in cells], dtype=np.float64)
        if all(c is None or not np.isnan(p) for c, p in zip(cells, parsed)):
            cells = parsed
        else:
            cells = np.array([c if c is not None and np.isnan(p) else (None if c is None else p)
                              for c, p in zip(cells, parsed)], dtype=object)
    return ColumnData(str(series.name), cells, role)


def column_params(assignparam: dict, header: str, registry: dict) -> dict:
    """Per-category parameters for one column: global, then category defaults, then column-specific."""
    glob = assignparam.get("global_assignparam", {})
    defaults = assignparam.get("default_assignparam", {})
    out = {}
    for cat in registry:
        merged = {**glob, **defaults.get(cat, {}), **assignparam.get(cat, {}).get(header, {})}
        if merged:
            out[cat] = merged
    return out


# --- infill ----------------------------------------------------------------


def _group_matrix(group) -> np.ndarray:
    return np.column_stack([np.asarray(c, dtype=np.float64) for c in group.columns])


def _set_group(group, matrix):
    group.columns = [matrix[:, j].copy() for j in range(matrix.shape[1])]


def _infillable(group, registry) -> bool:
    return group.basis.retained and registry[group.basis.category_id].process.mlinfilltype != "exclude" \
        and group.basis.slot != "source"


def _feature_matrix(results: dict, exclude: str, headers=None):
    """Numeric returned columns of every other feature source (NaN read as 0)."""
    cols, names = [], []
    for src, res in results.items():
        if src == exclude:
            continue
        for g in res.retained:
            for h, c in zip(g.headers, g.columns):
                if c.dtype.kind == "f":
                    names.append(h)
                    cols.append(c)
    if headers is not None:
        lookup = dict(zip(names, cols))
        cols, names = [lookup[h] for h in headers], list(headers)
    n = len(next(iter(results.values())).mask.flags) if results else 0
    X = np.column_stack(cols) if cols else np.zeros((n, 0))
    return np.nan_to_num(X, nan=0.0, posinf=0.0, neginf=0.0), names


def _fit_infill(results: dict, strategies: dict, registry, label: str | None, config: PipelineConfig) -> dict:
    plans = {}
    for src, res in results.items():
        strategy = strategies.get(src, "stdrd")
        if src == label and strategy == "ml":
            strategy = "stdrd"
        plan = inf.InfillPlan(strategy, {}, config.infill_iterations)
        for g in res.groups:
            if not _infillable(g, registry):
                continue
            mlt = registry[g.basis.category_id].process.mlinfilltype
            initial = "stdrd" if strategy == "ml" else strategy
            mat = _group_matrix(g)
            stats = inf.fit_fill(initial, mat, g.flags, mlt)
            plan.groups[g.basis.returned_header] = stats
            _set_group(g, inf.apply_fill(initial, mat, g.flags, stats))
        plans[src] = plan

    features = {s: r for s, r in results.items() if s != label}
    for it in range(config.infill_iterations):
        for src, res in features.items():
            plan = plans[src]
            if plan.strategy != "ml":
                continue
            X, names = _feature_matrix(features, src)
            for g in res.groups:
                if not _infillable(g, registry):
                    continue
                mlt = registry[g.basis.category_id].process.mlinfilltype
                rng = RngStreams(config.master_seed, f"ml:{it}").generator(src, g.basis.returned_header)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    model, filled = inf.ml_infill(_group_matrix(g), g.flags, X, mlt, rng)
                if model is None:
                    warnings.warn(f"ML infill for {g.basis.returned_header!r} needs >= {inf.ML_MIN_ROWS} "
                                  "unflagged rows; kept standard infill")
                else:
                    model["features"] = names
                    _set_group(g, filled)
                plan.groups[g.basis.returned_header].setdefault("models", []).append(model)
    return {src: plan.to_dict() for src, plan in plans.items()}


def _apply_infill(results: dict, store: PipelineStore, label: str | None):
    registry = store.registry
    for src, res in results.items():
        plan = inf.InfillPlan.from_dict(store.sources[src].infill)
        initial = "stdrd" if plan.strategy == "ml" else plan.strategy
        for g in res.groups:
            if not _infillable(g, registry):
                continue
            stats = plan.groups.get(g.basis.returned_header, {})
            _set_group(g, inf.apply_fill(initial, _group_matrix(g), g.flags, stats))
    features = {s: r for s, r in results.items() if s != label}
    for it in range(max((inf.InfillPlan.from_dict(store.sources[s].infill).iterations for s in features), default=0)):
        for src, res in features.items():
            plan = inf.InfillPlan.from_dict(store.sources[src].infill)
            if plan.strategy != "ml":
                continue
            for g in res.groups:
                models = plan.groups.get(g.basis.returned_header, {}).get("models", [])
                if it >= len(models) or models[it] is None:
                    continue
                X, _ = _feature_matrix(features, src, models[it]["features"])
                _set_group(g, inf.ml_predict(models[it], _group_matrix(g), g.flags, X))


# --- reporting -------------------------------------------------------------


def columntype_report(store: PipelineStore) -> dict:
    """Classify every returned feature column; ``*_sets`` group multi-column outputs of one transform."""
    report = {k: [] for k in ("continuous", "boolean", "ordinal", "onehot", "onehot_sets",
                               "binary", "binary_sets", "passthrough")}
    for source in store.feature_sources:
        for basis in source.retained:
            if basis.slot == "source":
                report["passthrough"].append(basis.returned_header)
                continue
            kind = store.registry[basis.category_id].process.columntype
            headers = basis.output_headers
            report[kind].extend(headers)
            if basis.multi_column and kind in ("onehot", "binary"):
                report[f"{kind}_sets"].append(headers)
    return report


# --- fit / apply -----------------------------------------------------------


def _frame(results: dict, index) -> pd.DataFrame:
    data = {}
    for res in results.values():
        data.update(res.columns())
    return pd.DataFrame(data, index=index)


def _check_config(table: pd.DataFrame, config: PipelineConfig, registry: dict):
    headers = set(map(str, table.columns))
    problems = []
    if config.labels_column is not None and config.labels_column not in headers:
        problems.append(f"labels_column {config.labels_column!r} not in table")
    for root, cols in config.assigncat.items():
        if root not in registry:
            problems.append(f"assigncat root {root!r} is not a known category")
        problems += [f"assigncat[{root!r}] names unknown column {c!r}" for c in cols if c not in headers]
    for strategy, cols in config.assigninfill.items():
        problems += [f"assigninfill[{strategy!r}] names unknown column {c!r}" for c in cols if c not in headers]
    for key, value in config.assignparam.items():
        if key in ("global_assignparam", "default_assignparam"):
            continue
        if not isinstance(value, dict):
            problems.append(f"assignparam[{key!r}] must map column headers to parameters")
            continue
        problems += [f"assignparam[{key!r}] names unknown column {c!r}" for c in value if c not in headers]
    for root in (config.default_numeric_root, config.default_categoric_root,
                 config.default_label_numeric_root, config.default_label_categoric_root):
        if root not in registry:
            problems.append(f"default root {root!r} is not a known category")
    if problems:
        raise ConfigError("; ".join(problems))


def fit(train: pd.DataFrame, config: PipelineConfig | None = None, registry: dict | None = None) -> FitResult:
    """Fit a pipeline on ``train``; returns train/label/validation outputs and the store."""
    config = config or PipelineConfig()
    registry = dict(registry) if registry is not None else builtin_registry()
    if len(train) == 0 or train.shape[1] == 0:
        raise ContractError("train table is empty")
    train = train.copy()
    train.columns = [str(c) for c in train.columns]
    _check_config(train, config, registry)

    order = np.arange(len(train))
    split_rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, 0x5EED]))
    n_val = int(round(config.valpercent * len(train)))
    if n_val:
        val_rows = np.sort(split_rng.permutation(len(train))[:n_val])
        order = np.setdiff1d(order, val_rows)
    else:
        val_rows = np.array([], dtype=np.int64)
    if config.shuffletrain:
        order = split_rng.permutation(order)
    fit_rows, val_part = train.iloc[order], train.iloc[val_rows]

    label = config.labels_column
    assigned = {h: root for root, hs in config.assigncat.items() for h in hs}
    strategies = {h: s for s, hs in config.assigninfill.items() for h in hs}
    kinds, roots, results = {}, {}, {}
    rng = RngStreams(config.master_seed, FIT_TAG)
    headers = [h for h in fit_rows.columns if h != label] + ([label] if label is not None else [])
    for h in headers:
        is_label = h == label
        kinds[h] = "numeric" if sniff_numeric(_cells(fit_rows[h]), config.numeric_threshold) else "categoric"
        if h in assigned:
            roots[h] = assigned[h]
        elif is_label:
            roots[h] = config.default_label_numeric_root if kinds[h] == "numeric" \
                else config.default_label_categoric_root
        else:
            roots[h] = config.default_numeric_root if kinds[h] == "numeric" else config.default_categoric_root
        column = prepare_column(fit_rows[h], kinds[h], "train")
        results[h] = fit_tree(column, roots[h], registry, column_params(config.assignparam, h, registry), rng,
                              traindata=config.traindata, skip=("NArw",) if is_label else ())

    plans = _fit_infill(results, strategies, registry, label, config)
    sources = {h: SourceFit(h, roots[h], results[h].bases, plans[h], h == label) for h in headers}
    stored_config = {**config.to_dict(), "column_kinds": kinds}
    features = {h: r for h, r in results.items() if h != label}
    feature_headers = [c for r in features.values() for c in r.returned_headers]
    store = PipelineStore(registry, sources, stored_config, config.master_seed, label, {}, feature_headers)
    store = PipelineStore(registry, sources, stored_config, config.master_seed, label,
                          columntype_report(store), feature_headers)

    index = fit_rows.index
    if config.noise_augment:
        train_out, labels_out = apply(store, fit_rows, traindata=False, noise_augment=config.noise_augment)
    else:
        train_out = _frame(features, index)
        labels_out = _frame({label: results[label]}, index) if label is not None else None
    if n_val:
        val_out, val_labels = apply(store, val_part, traindata=False)
    else:
        val_out = pd.DataFrame(columns=feature_headers)
        val_labels = pd.DataFrame(columns=sources[label].returned_headers) if label is not None else None
    return FitResult(train_out, labels_out, val_out, val_labels, store)


def _apply_once(store: PipelineStore, table: pd.DataFrame, traindata: bool, tag: str, with_labels: bool):
    kinds = store.config["column_kinds"]
    rng = RngStreams(store.master_seed, tag)
    results = {}
    for h, source in store.sources.items():
        if source.is_label and not with_labels:
            continue
        column = prepare_column(table[h], kinds[h], "test")
        results[h] = apply_tree(source.bases, column, store.registry, source.root, traindata, rng)
    label = store.labels_column
    _apply_infill(results, store, label)
    features = {h: r for h, r in results.items() if h != label}
    out = _frame(features, table.index)
    labels = _frame({label: results[label]}, table.index) if with_labels else None
    return out, labels


def apply(store: PipelineStore, table: pd.DataFrame, traindata: bool = False, noise_augment: int = 0):
    """Apply a fitted pipeline.  Returns ``(features, labels)``; labels is None when absent.

    With ``noise_augment=n`` the output stacks one clean copy and ``n``
    noise-injected copies (labels repeated alongside).  The first noisy copy
    uses the same random streams as fit, so ``noise_augment=1`` on the train
    data equals the clean output followed by the noisy fit output.
    """
    if int(noise_augment) != noise_augment or noise_augment < 0:
        raise ContractError(f"noise_augment must be a nonnegative integer, got {noise_augment}")
    table = table.copy()
    table.columns = [str(c) for c in table.columns]
    missing = [s.header for s in store.feature_sources if s.header not in table.columns]
    if missing:
        raise ContractError(f"table is missing source columns: {missing}")
    with_labels = store.labels_column is not None and store.labels_column in table.columns
    if not noise_augment:
        return _apply_once(store, table, traindata, FIT_TAG, with_labels)
    copies = [_apply_once(store, table, False, FIT_TAG, with_labels)]
    for k in range(1, noise_augment + 1):
        tag = FIT_TAG if k == 1 else f"augment:{k}"
        copies.append(_apply_once(store, table, True, tag, with_labels))
    out = pd.concat([c[0] for c in copies], ignore_index=True)
    labels = pd.concat([c[1] for c in copies], ignore_index=True) if with_labels else None
    return out, labels
