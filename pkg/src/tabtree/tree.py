"""Family tree traversal in fit mode (train) and apply mode (test).

The root category's upstream slots are applied to the source column.  When an
entry sits in a slot with offspring, that entry's own downstream slots are
applied to its output, recursively.  A column stays in the returned set unless
a ``children`` or ``coworkers`` entry consumed it; the source column itself is
returned only when the root has no ``parents`` or ``auntsuncles``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .data_model import (
    DOWNSTREAM,
    OFFSPRING_SLOTS,
    REPLACE_SLOTS,
    UPSTREAM,
    ColumnData,
    FittedColumnBasis,
    NArowMask,
    join_header,
)
from .errors import ContractError, CycleError, FitError, RegistryError
from .infill import compute_narw_mask
from .transforms import TRANSFORMS, ApplyContext

MAX_DEPTH = 16


class RngStreams:
    """Independent generators per (source header, returned header) pair.

    Each substream is seeded from the master seed plus a SHA-256 digest of the
    two headers and ``tag``, so results don't depend on processing order.
    """

    def __init__(self, master_seed: int, tag: str = "fit"):
        if master_seed < 0:
            raise ValueError("master seed must be nonnegative")
        self.master_seed = int(master_seed)
        self.tag = tag

    def generator(self, source_header: str, returned_header: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{source_header}\x00{returned_header}\x00{self.tag}".encode("utf-8")).digest()
        words = np.frombuffer(digest[:16], dtype="<u4").tolist()
        return np.random.default_rng(np.random.SeedSequence([self.master_seed, *words]))

    def with_tag(self, tag: str) -> "RngStreams":
        return RngStreams(self.master_seed, tag)


@dataclass
class Group:
    """Output of one transform application: its basis, columns, and infill targets."""

    basis: FittedColumnBasis
    columns: list
    flags: np.ndarray

    @property
    def headers(self) -> list:
        return self.basis.output_headers


@dataclass
class TreeResult:
    source_header: str
    groups: list
    mask: NArowMask
    root: str = ""

    @property
    def bases(self) -> list:
        return [g.basis for g in self.groups]

    @property
    def retained(self) -> list:
        return [g for g in self.groups if g.basis.retained]

    @property
    def returned_headers(self) -> list:
        return [h for g in self.retained for h in g.headers]

    def columns(self) -> dict:
        """Returned columns by header, in traversal order."""
        out = {}
        for g in self.retained:
            out.update(zip(g.headers, g.columns))
        return out


def _category(registry, cat_id):
    try:
        return registry[cat_id]
    except KeyError:
        raise RegistryError(f"unknown transformation category {cat_id!r}") from None


def _input_flags(x, parent_flags, narowtype):
    return parent_flags | compute_narw_mask(x, narowtype).flags


def _group_flags(columns, flags_in, flagged):
    flags = flags_in.copy()
    if flagged is not None:
        flags |= flagged
    for col in columns:
        if col.dtype.kind == "f":
            flags |= np.isnan(col)
    return flags


def _source_basis(header, root_id):
    return FittedColumnBasis(header, header, root_id, (), {}, {}, True, 0, header, "source")


@dataclass
class _Walk:
    source: ColumnData
    registry: dict
    params: dict
    rng: RngStreams
    traindata: bool
    max_depth: int
    skip: frozenset
    root_id: str = ""
    groups: list = field(default_factory=list)

    def resolved_params(self, cat):
        # overrides keyed by the root reach every category in its tree
        return {**cat.process.default_params, **self.params.get(self.root_id, {}), **self.params.get(cat.id, {})}

    def apply(self, cat_id, slot, x, input_header, chain, parent_flags, generation, path):
        if generation >= self.max_depth:
            raise CycleError([*path, cat_id])
        cat = _category(self.registry, cat_id)
        proc = cat.process
        fit_fn, apply_fn = TRANSFORMS[proc.fit_fn], TRANSFORMS[proc.apply_fn]
        flags_in = _input_flags(x, parent_flags, proc.narowtype)
        params = self.resolved_params(cat)
        suffix_chain = (*chain, proc.suffix)
        header = join_header(self.source.header, suffix_chain)
        rng = self.rng.generator(self.source.header, header) if apply_fn.noise and self.traindata else None
        try:
            stats = fit_fn.fit(x, ~flags_in, params)
        except FitError as exc:
            raise FitError(f"fitting {cat_id} for {header!r}: {exc}") from exc
        columns, flagged = apply_fn.apply(x, ~flags_in, stats, params, ApplyContext(self.traindata, rng))
        if apply_fn.multi_column:
            stats = {**stats, "column_count": len(columns)}
        flags = _group_flags(columns, flags_in, flagged)
        basis = FittedColumnBasis(header, self.source.header, cat_id, suffix_chain, stats, params,
                                  True, generation, input_header, slot)
        index = len(self.groups)
        self.groups.append(Group(basis, columns, flags))

        replaced = False
        if slot in OFFSPRING_SLOTS:
            downstream = [(s, d) for s in DOWNSTREAM for d in cat.tree.slot(s) if d not in self.skip]
            if downstream and len(columns) != 1:
                raise ContractError(f"{cat_id} returns {len(columns)} columns; downstream transforms need one")
            for dslot, dcat in downstream:
                self.apply(dcat, dslot, columns[0], header, suffix_chain, flags, generation + 1, (*path, cat_id))
                replaced |= dslot in REPLACE_SLOTS
        if replaced:
            self.groups[index].basis = replace(basis, retained=False)


def fit_tree(source: ColumnData, root_id: str, registry: dict, params: dict | None = None,
             rng: RngStreams | None = None, traindata: bool = True, max_depth: int = MAX_DEPTH,
             skip=()) -> TreeResult:
    """Fit the family tree of ``root_id`` on a train column.

    ``params`` maps category id to parameter overrides for this column;
    overrides under ``root_id`` apply to every category in the tree.
    ``skip`` lists category ids to leave out (labels omit ``NArw``).
    With ``traindata`` False, noise categories pass their input through.
    """
    root = _category(registry, root_id)
    mask = compute_narw_mask(source, root.process.narowtype)
    walk = _Walk(source, registry, params or {}, rng or RngStreams(0), traindata, max_depth, frozenset(skip),
                 root_id)
    if not root.tree.parents and not root.tree.auntsuncles:
        walk.groups.append(Group(_source_basis(source.header, root_id), [source.cells], mask.flags.copy()))
    for slot in UPSTREAM:
        for cat_id in root.tree.slot(slot):
            if cat_id in walk.skip:
                continue
            walk.apply(cat_id, slot, source.cells, source.header, (), mask.flags, 0, (root_id,))
    seen = set()
    for g in walk.groups:
        for h in g.headers:
            if h in seen:
                raise RegistryError(f"tree of {root_id!r} returns header {h!r} twice")
            seen.add(h)
    return TreeResult(source.header, walk.groups, mask, root_id)


def apply_tree(bases, column: ColumnData, registry: dict, root_id: str, traindata: bool = False,
               rng: RngStreams | None = None) -> TreeResult:
    """Replay fitted ``bases`` on new data using the stored statistics."""
    root = _category(registry, root_id)
    for b in bases:
        if b.source_header != column.header:
            raise ContractError(
                f"bases were fitted on column {b.source_header!r}, got column {column.header!r}"
            )
    rng = rng or RngStreams(0, "apply")
    mask = compute_narw_mask(column, root.process.narowtype)
    groups, by_header = [], {}
    for b in bases:
        if b.slot == "source":
            group = Group(b, [column.cells], mask.flags.copy())
        else:
            if b.generation == 0:
                x, parent_flags = column.cells, mask.flags
            else:
                parent = by_header[b.input_header]
                x, parent_flags = parent.columns[0], parent.flags
            proc = _category(registry, b.category_id).process
            fn = TRANSFORMS[proc.apply_fn]
            flags_in = _input_flags(x, parent_flags, proc.narowtype)
            gen = rng.generator(column.header, b.returned_header) if fn.noise and traindata else None
            columns, flagged = fn.apply(x, ~flags_in, b.stats, b.params, ApplyContext(traindata, gen))
            group = Group(b, columns, _group_flags(columns, flags_in, flagged))
        groups.append(group)
        by_header[b.returned_header] = group
    return TreeResult(column.header, groups, mask, root_id)
