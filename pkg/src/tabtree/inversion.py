"""Recover source columns from returned columns.

Every retained group of a source column is traced back through its inputs to
the source.  Chains whose every step is exactly invertible are preferred,
shortest first; ties keep traversal order.  Chains through noise steps invert
them as identity and are reported as not full-information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data_model import PipelineStore, SourceFit
from .errors import ContractError, InversionError
from .transforms import TRANSFORMS


@dataclass(frozen=True)
class InversionPath:
    source_header: str
    steps: tuple  # bases from the returned group back to the source
    full_information: bool

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def headers(self) -> list:
        """Returned headers the path reads from."""
        if not self.steps:
            return [self.source_header]
        return self.steps[0].output_headers

    @property
    def categories(self) -> list:
        return [b.category_id for b in self.steps]


def _chain(source: SourceFit, leaf) -> list:
    by_header = {b.returned_header: b for b in source.bases}
    chain = [leaf]
    while chain[-1].generation > 0:
        chain.append(by_header[chain[-1].input_header])
    return chain


def _source(store: PipelineStore, header: str) -> SourceFit:
    try:
        return store.sources[header]
    except KeyError:
        raise InversionError(f"no fitted source column {header!r}") from None


def build_inversion_paths(store: PipelineStore, source_header: str) -> list:
    """Invertible paths for one source column: full-information ones by length, then the rest."""
    source = _source(store, source_header)
    full, partial, blocking = [], [], []
    for leaf in source.retained:
        if leaf.slot == "source":
            full.append(InversionPath(source_header, (), True))
            continue
        steps = _chain(source, leaf)
        procs = [store.registry[b.category_id].process for b in steps]
        blocked = [b.category_id for b, p in zip(steps, procs) if p.invert_fn is None]
        if blocked:
            blocking.append(blocked[0])
            continue
        is_full = all(p.full_information for p in procs)
        (full if is_full else partial).append(InversionPath(source_header, tuple(steps), is_full))
    paths = sorted(full, key=lambda p: p.length) + sorted(partial, key=lambda p: p.length)
    if not paths:
        raise InversionError(
            f"no invertible path for {source_header!r}; blocked by categories {sorted(set(blocking))}"
        )
    return paths


def invert_path(store: PipelineStore, path: InversionPath, data: pd.DataFrame) -> np.ndarray:
    columns = [data[h].to_numpy() for h in path.headers]
    if not path.steps:
        return np.asarray(columns[0], dtype=object)
    values = None
    for basis in path.steps:
        fn = TRANSFORMS[store.registry[basis.category_id].process.invert_fn]
        values = fn.invert(columns, basis.stats, basis.params)
        columns = [values]
    return values


def invert(store: PipelineStore, data: pd.DataFrame, target: str = "test"):
    """Invert returned columns in ``data`` back to source form.

    Returns ``(recovered, recovered_list, info)`` where ``info`` maps each
    source header to the categories along the path used, the headers read,
    and whether the path was full-information.
    """
    if target == "labels":
        if store.label_source is None:
            raise ContractError("pipeline was fitted without a labels column")
        sources = [store.label_source]
    elif target == "test":
        sources = store.feature_sources
    else:
        raise ContractError(f"target must be 'labels' or 'test', got {target!r}")

    present = set(data.columns)
    recovered, info = {}, {}
    for source in sources:
        returned = set(source.returned_headers)
        if not returned & present:
            continue
        paths = build_inversion_paths(store, source.header)
        usable = [p for p in paths if set(p.headers) <= present]
        if not usable:
            partial = [p for p in paths if set(p.headers) & present]
            if partial:
                absent = sorted(set(partial[0].headers) - present)
                raise InversionError(f"cannot invert {source.header!r}: missing columns {absent}")
            blocked = sorted({b.category_id for b in source.retained
                              if set(b.output_headers) & present
                              and store.registry[b.category_id].process.invert_fn is None})
            needed = sorted({h for p in paths for h in p.headers})
            raise InversionError(f"cannot invert {source.header!r}: present columns are blocked by categories "
                                 f"{blocked}; an invertible path needs {needed}")
        path = usable[0]
        recovered[source.header] = invert_path(store, path, data)
        info[source.header] = {
            "path": path.categories,
            "headers": path.headers,
            "full_information": path.full_information,
        }
    frame = pd.DataFrame(recovered, index=data.index)
    return frame, list(recovered), info
