"""Core value types: columns, family trees, categories, fitted bases, pipeline store.

Cells are plain Python values: a ``float`` (or int), a ``str``, or ``None`` for
missing.  ``None`` never compares equal to a number, so missing cells can't be
confused with zero.  Numeric kernels work on float64 arrays internally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Union

import numpy as np
import pandas as pd

from .errors import PipelineParseError

SEPARATOR = "_"
FORMAT_VERSION = "tabtree-pipeline/1"

CellValue = Union[float, str, None]

UPSTREAM = ("parents", "siblings", "auntsuncles", "cousins")
DOWNSTREAM = ("children", "niecesnephews", "coworkers", "friends")
SLOTS = UPSTREAM + DOWNSTREAM
REPLACE_SLOTS = frozenset({"parents", "auntsuncles", "children", "coworkers"})
OFFSPRING_SLOTS = frozenset({"parents", "siblings", "children", "niecesnephews"})

NAROWTYPES = (
    "numeric",
    "nonnegative-numeric",
    "nonzero-numeric",
    "integer",
    "positive-numeric",
    "any",
)
MLINFILLTYPES = ("numeric", "binary", "ordinal", "multicolumn-categoric", "exclude")
COLUMNTYPES = ("continuous", "boolean", "ordinal", "onehot", "binary", "passthrough")


def is_missing(cell: Any) -> bool:
    """True for the missing variant (``None``) and for float NaN."""
    if cell is None:
        return True
    if isinstance(cell, float) and math.isnan(cell):
        return True
    return False


def to_float_array(values: Iterable[Any]) -> np.ndarray:
    """Parse cells to float64; missing, text that doesn't parse, and inf become NaN."""
    arr = np.asarray(values)
    if arr.dtype.kind in "fiub":
        out = arr.astype(np.float64, copy=True)
        out[~np.isfinite(out)] = np.nan
        return out
    out = np.empty(len(arr), dtype=np.float64)
    for i, cell in enumerate(arr):
        out[i] = parse_number(cell)
    return out


def parse_number(cell: Any) -> float:
    if cell is None:
        return math.nan
    if isinstance(cell, (bool, np.bool_)):
        return float(cell)
    if isinstance(cell, (int, float, np.integer, np.floating)):
        value = float(cell)
    elif isinstance(cell, str):
        try:
            value = float(cell.strip())
        except ValueError:
            return math.nan
    else:
        return math.nan
    return value if math.isfinite(value) else math.nan


def join_header(source_header: str, suffix_chain: Iterable[str]) -> str:
    return SEPARATOR.join([source_header, *suffix_chain])


@dataclass(frozen=True)
class ColumnData:
    """One feature column.  Cell order is significant."""

    header: str
    cells: np.ndarray
    role: str = "train"

    def __post_init__(self):
        if not isinstance(self.header, str) or not self.header:
            raise ValueError("column header must be a nonempty string")
        if self.role not in ("train", "test"):
            raise ValueError(f"role must be 'train' or 'test', got {self.role!r}")
        cells = self.cells
        if not isinstance(cells, np.ndarray):
            cells = np.asarray(list(cells), dtype=object)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_series(cls, series: pd.Series, role: str = "train") -> "ColumnData":
        values = series.to_numpy()
        if values.dtype.kind not in "fiub":
            values = np.array([None if is_missing(v) else v for v in values], dtype=object)
        return cls(str(series.name), values, role)

    def __len__(self):
        return len(self.cells)

    def to_float(self) -> np.ndarray:
        return to_float_array(self.cells)


@dataclass(frozen=True)
class FamilyTree:
    parents: tuple = ()
    siblings: tuple = ()
    auntsuncles: tuple = ()
    cousins: tuple = ()
    children: tuple = ()
    niecesnephews: tuple = ()
    coworkers: tuple = ()
    friends: tuple = ()

    def __post_init__(self):
        for slot in SLOTS:
            object.__setattr__(self, slot, tuple(getattr(self, slot)))

    def slot(self, name: str) -> tuple:
        return getattr(self, name)

    def entries(self):
        for slot in SLOTS:
            for cat in getattr(self, slot):
                yield slot, cat

    def to_dict(self) -> dict:
        return {slot: list(getattr(self, slot)) for slot in SLOTS}

    @classmethod
    def from_dict(cls, data: Mapping[str, Iterable[str]]) -> "FamilyTree":
        unknown = set(data) - set(SLOTS)
        if unknown:
            raise ValueError(f"unknown family tree primitives: {sorted(unknown)}")
        return cls(**{slot: tuple(data.get(slot, ())) for slot in SLOTS})


@dataclass(frozen=True)
class ProcessEntry:
    """Which transform functions a category runs and how its output is treated.

    ``fit_fn`` derives a basis from train data; ``apply_fn`` replays a basis on
    new data; ``invert_fn`` (optional) recovers the input.  All three are ids in
    :data:`tabtree.transforms.TRANSFORMS`.
    """

    fit_fn: str
    apply_fn: str
    suffix: str
    narowtype: str = "numeric"
    mlinfilltype: str = "numeric"
    columntype: str = "continuous"
    invert_fn: str | None = None
    full_information: bool = False
    default_params: dict = field(default_factory=dict)
    labelctgy: str | None = None

    def to_dict(self) -> dict:
        return {
            "fit_fn": self.fit_fn,
            "apply_fn": self.apply_fn,
            "suffix": self.suffix,
            "narowtype": self.narowtype,
            "mlinfilltype": self.mlinfilltype,
            "columntype": self.columntype,
            "invert_fn": self.invert_fn,
            "full_information": self.full_information,
            "default_params": jsonable(self.default_params),
            "labelctgy": self.labelctgy,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ProcessEntry":
        return cls(**dict(data))


@dataclass(frozen=True)
class TransformCategory:
    id: str
    tree: FamilyTree
    process: ProcessEntry

    def to_dict(self) -> dict:
        return {"id": self.id, "tree": self.tree.to_dict(), "process": self.process.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TransformCategory":
        return cls(
            data["id"],
            FamilyTree.from_dict(data["tree"]),
            ProcessEntry.from_dict(data["process"]),
        )


@dataclass(frozen=True)
class FittedColumnBasis:
    """Fitted state of one transform application within a family tree.

    ``returned_header`` names the output; multi-column outputs (``stats`` holds
    ``column_count``) are emitted as ``returned_header_0 .. _{k-1}``.  The
    retained source column is recorded with an empty suffix chain and slot
    ``"source"``.
    """

    returned_header: str
    source_header: str
    category_id: str
    suffix_chain: tuple
    stats: dict
    params: dict
    retained: bool
    generation: int
    input_header: str
    slot: str

    def __post_init__(self):
        object.__setattr__(self, "suffix_chain", tuple(self.suffix_chain))
        object.__setattr__(self, "stats", jsonable(self.stats))
        object.__setattr__(self, "params", jsonable(self.params))

    @property
    def multi_column(self) -> bool:
        return "column_count" in self.stats

    @property
    def output_headers(self) -> list:
        if self.multi_column:
            return [f"{self.returned_header}{SEPARATOR}{i}" for i in range(self.stats["column_count"])]
        return [self.returned_header]

    def to_dict(self) -> dict:
        return {
            "returned_header": self.returned_header,
            "source_header": self.source_header,
            "category_id": self.category_id,
            "suffix_chain": list(self.suffix_chain),
            "stats": self.stats,
            "params": self.params,
            "retained": self.retained,
            "generation": self.generation,
            "input_header": self.input_header,
            "slot": self.slot,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FittedColumnBasis":
        return cls(**dict(data))


@dataclass(frozen=True)
class NArowMask:
    header: str
    flags: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return ~self.flags


@dataclass(frozen=True)
class SourceFit:
    """Everything fitted for one source column: root, tree bases, infill plan."""

    header: str
    root: str
    bases: tuple
    infill: dict = field(default_factory=dict)
    is_label: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        object.__setattr__(self, "infill", jsonable(self.infill))

    @property
    def retained(self) -> list:
        return [b for b in self.bases if b.retained]

    @property
    def returned_headers(self) -> list:
        return [h for b in self.retained for h in b.output_headers]

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "root": self.root,
            "bases": [b.to_dict() for b in self.bases],
            "infill": self.infill,
            "is_label": self.is_label,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SourceFit":
        return cls(
            data["header"],
            data["root"],
            tuple(FittedColumnBasis.from_dict(b) for b in data["bases"]),
            data["infill"],
            data["is_label"],
        )


@dataclass(frozen=True)
class PipelineStore:
    """Serializable record of a fitted pipeline; apply needs nothing else."""

    registry: dict
    sources: dict
    config: dict
    master_seed: int
    labels_column: str | None
    columntype_report: dict
    feature_headers: tuple
    version: str = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "feature_headers", tuple(self.feature_headers))

    @property
    def feature_sources(self) -> list:
        return [s for s in self.sources.values() if not s.is_label]

    @property
    def label_source(self) -> SourceFit | None:
        if self.labels_column is None:
            return None
        return self.sources.get(self.labels_column)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "registry": {k: v.to_dict() for k, v in self.registry.items()},
            "sources": [s.to_dict() for s in self.sources.values()],
            "config": jsonable(self.config),
            "master_seed": self.master_seed,
            "labels_column": self.labels_column,
            "columntype_report": jsonable(self.columntype_report),
            "feature_headers": list(self.feature_headers),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineStore":
        sources = [SourceFit.from_dict(s) for s in data["sources"]]
        return cls(
            registry={k: TransformCategory.from_dict(v) for k, v in data["registry"].items()},
            sources={s.header: s for s in sources},
            config=data["config"],
            master_seed=data["master_seed"],
            labels_column=data["labels_column"],
            columntype_report=data["columntype_report"],
            feature_headers=tuple(data["feature_headers"]),
            version=data["version"],
        )


# --- registry validation -------------------------------------------------


def validate_registry(registry: Mapping[str, TransformCategory]) -> list:
    """Return a list of human-readable violations; empty means valid."""
    from .transforms import TRANSFORMS

    problems = []
    for cat_id, cat in registry.items():
        if cat.id != cat_id:
            problems.append(f"{cat_id}: registered under a different id than its own ({cat.id!r})")
        for slot, ref in cat.tree.entries():
            if ref not in registry:
                problems.append(f"{cat_id}: {slot} references undefined category {ref!r}")
        proc = cat.process
        if not proc.suffix or SEPARATOR in proc.suffix:
            problems.append(f"{cat_id}: suffix {proc.suffix!r} must be nonempty without {SEPARATOR!r}")
        if proc.narowtype not in NAROWTYPES:
            problems.append(f"{cat_id}: unknown NArowtype {proc.narowtype!r}")
        if proc.mlinfilltype not in MLINFILLTYPES:
            problems.append(f"{cat_id}: unknown MLinfilltype {proc.mlinfilltype!r}")
        if proc.columntype not in COLUMNTYPES:
            problems.append(f"{cat_id}: unknown columntype {proc.columntype!r}")
        fns = {"fit_fn": proc.fit_fn, "apply_fn": proc.apply_fn}
        if proc.invert_fn is not None:
            fns["invert_fn"] = proc.invert_fn
        for role, fn in fns.items():
            if fn not in TRANSFORMS:
                problems.append(f"{cat_id}: {role} {fn!r} is not a known transform function")
        if proc.fit_fn in TRANSFORMS and proc.apply_fn in TRANSFORMS:
            if TRANSFORMS[proc.fit_fn].multi_column != TRANSFORMS[proc.apply_fn].multi_column:
                problems.append(f"{cat_id}: fit_fn and apply_fn disagree on output column count")
        if proc.full_information and proc.invert_fn is None:
            problems.append(f"{cat_id}: full_information requires an invert_fn")
    return problems


# --- serialization -------------------------------------------------------

_FLOAT_TAG = "$float"


def jsonable(obj: Any) -> Any:
    """Convert tuples, numpy scalars and arrays to plain JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode_floats(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return {_FLOAT_TAG: repr(obj)}
    if isinstance(obj, dict):
        return {k: _encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_encode_floats(v) for v in obj]
    return obj


def _decode_floats(obj: dict) -> Any:
    if len(obj) == 1 and _FLOAT_TAG in obj:
        return float(obj[_FLOAT_TAG])
    return obj


def serialize_pipeline(store: PipelineStore) -> bytes:
    """Canonical JSON: sorted keys, compact separators, non-finite floats tagged."""
    payload = _encode_floats(store.to_dict())
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    return text.encode("utf-8")


def deserialize_pipeline(data: bytes) -> PipelineStore:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise PipelineParseError(f"invalid UTF-8: {exc.reason}", exc.start) from exc
    try:
        payload = json.loads(text, object_hook=_decode_floats)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise PipelineParseError(f"malformed pipeline JSON: {exc.msg}", offset) from exc
    if not isinstance(payload, dict):
        raise PipelineParseError("pipeline payload must be a JSON object", 0)
    if payload.get("version") != FORMAT_VERSION:
        raise PipelineParseError(f"unsupported pipeline version {payload.get('version')!r}", 0)
    try:
        return PipelineStore.from_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise PipelineParseError(f"pipeline structure invalid: {exc!r}", 0) from exc
