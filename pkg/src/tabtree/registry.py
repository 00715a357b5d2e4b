"""The builtin category registry.

Most user-facing categories are roots whose tree applies their own transform
(``auntsuncles``) and supplements it with an ``NArw`` marker (``cousins``).
Noise and integer-set roots are wired through helper categories so that the
intermediate encodings are replaced downstream.
"""

from __future__ import annotations

from .data_model import FamilyTree, ProcessEntry, TransformCategory
from .transforms import BIN_IDS

_BIN_NAROWTYPE = {"pwrs": "positive-numeric", "pwr2": "nonzero-numeric"}
_BIN_COLUMNTYPE = {"onehot": ("multicolumn-categoric", "onehot"),
                   "ordinal": ("ordinal", "ordinal"),
                   "binary": ("multicolumn-categoric", "binary")}

_ENCODING_TYPES = {
    "bnry": ("binary", "boolean"),
    "ordl": ("ordinal", "ordinal"),
    "ord3": ("ordinal", "ordinal"),
    "onht": ("multicolumn-categoric", "onehot"),
    "1010": ("multicolumn-categoric", "binary"),
}

NOISE_DEFAULTS = {"mu": 0.0, "sigma": 0.03, "flip_prob": 0.03}


def _proc(fn, suffix=None, *, narowtype="numeric", mlinfilltype="numeric", columntype="continuous",
          invertible=True, full_information=True, params=None) -> ProcessEntry:
    return ProcessEntry(
        fit_fn=fn,
        apply_fn=fn,
        suffix=suffix or fn,
        narowtype=narowtype,
        mlinfilltype=mlinfilltype,
        columntype=columntype,
        invert_fn=fn if invertible else None,
        full_information=full_information and invertible,
        default_params=dict(params or {}),
    )


def _standalone(cat_id, process, narw=True) -> TransformCategory:
    tree = FamilyTree(auntsuncles=(cat_id,), cousins=("NArw",) if narw else ())
    return TransformCategory(cat_id, tree, process)


def builtin_registry() -> dict:
    """Return a fresh mapping of category id to :class:`TransformCategory`."""
    reg = {}

    def add(cat):
        reg[cat.id] = cat

    add(TransformCategory("NArw", FamilyTree(), _proc("NArw", narowtype="any", mlinfilltype="exclude",
                                                      columntype="boolean", invertible=False)))
    add(TransformCategory("excl", FamilyTree(), _proc("exc2", "excl", narowtype="any", mlinfilltype="exclude",
                                                      columntype="passthrough")))
    add(TransformCategory("exc2", FamilyTree(auntsuncles=("exc2",)), _proc("exc2", columntype="passthrough")))

    for variant in ("nmbr", "mnmx", "mean", "MAD3", "retn"):
        add(_standalone(variant, _proc(variant)))
    add(_standalone("lgnm", _proc("lgnm", narowtype="positive-numeric")))

    for variant, (ml, ct) in _ENCODING_TYPES.items():
        add(_standalone(variant, _proc(variant, narowtype="any", mlinfilltype=ml, columntype=ct)))

    for family, ids in BIN_IDS.items():
        for cat_id, mode in zip(ids, ("onehot", "ordinal", "binary")):
            ml, ct = _BIN_COLUMNTYPE[mode]
            add(_standalone(cat_id, _proc(cat_id, narowtype=_BIN_NAROWTYPE.get(ids[0], "numeric"),
                                          mlinfilltype=ml, columntype=ct, invertible=False)))

    # numeric noise: normalize, then a replacing noise coworker
    noise = dict(invertible=True, full_information=False, params=NOISE_DEFAULTS)
    for root, helper, norm in (("DPnb", "DPn3", "nmbr"), ("DPmm", "DPm2", "mnmx"), ("DPrt", "DPr2", "retn")):
        add(TransformCategory(root, FamilyTree(parents=(helper,), cousins=("NArw",)), _proc(root, **noise)))
        add(TransformCategory(helper, FamilyTree(coworkers=(root,)), _proc(norm)))

    # categoric noise: ordinal encode, flip, then (for onht / 1010) re-encode
    flip = dict(mlinfilltype="ordinal", columntype="ordinal", **noise)
    add(TransformCategory("DPod", FamilyTree(parents=("DPo4",), cousins=("NArw",)),
                          _proc("DPod", narowtype="any", **flip)))
    add(TransformCategory("DPo4", FamilyTree(coworkers=("DPod",)), _proc("ord3", narowtype="any",
                                                                        mlinfilltype="ordinal", columntype="ordinal")))
    for root, encode_helper, flip_helper, encoding in (("DP10", "DPo6", "DPo3", "1010"),
                                                      ("DPoh", "DPo7", "DPo8", "onht")):
        add(TransformCategory(root, FamilyTree(parents=(encode_helper,), cousins=("NArw",)),
                              _proc("DPod", root, narowtype="any", **flip)))
        add(TransformCategory(encode_helper, FamilyTree(children=(flip_helper,)),
                              _proc("ord3", narowtype="any", mlinfilltype="ordinal", columntype="ordinal")))
        add(TransformCategory(flip_helper, FamilyTree(coworkers=(encoding,)),
                              _proc("DPod", "DPod", narowtype="any", **flip)))
    add(TransformCategory("DPbn", FamilyTree(parents=("DPb2",), cousins=("NArw",)),
                          _proc("DPod", "DPbn", narowtype="any", mlinfilltype="binary", columntype="boolean",
                                **noise)))
    add(TransformCategory("DPb2", FamilyTree(coworkers=("DPbn",)),
                          _proc("bnry", narowtype="any", mlinfilltype="binary", columntype="boolean")))

    # sequential deltas: normalized source plus a retn-normalized delta
    for cat_id, fn, params in (("dxdt", "dxdt", {"periods": 1, "order": 1}),
                               ("d2dt", "dxdt", {"periods": 1, "order": 2}),
                               ("d3dt", "dxdt", {"periods": 1, "order": 3}),
                               ("dxd2", "dxd2", {"periods": 2, "window": 2})):
        tree = FamilyTree(parents=(cat_id,), auntsuncles=("retn",), cousins=("NArw",), children=("retn",))
        add(TransformCategory(cat_id, tree, _proc(fn, cat_id, invertible=False, params=params)))

    # integer sets: redundant encodings of one integer column
    integer = dict(narowtype="integer")
    add(TransformCategory("ntgr", FamilyTree(parents=("ntgo",), auntsuncles=("retn", "pwr2", "ordl", "1010"),
                                             cousins=("NArw",)), _proc("retn", "ntgr", **integer)))
    add(TransformCategory("ntgo", FamilyTree(coworkers=("mnmx",)),
                          _proc("ord3", narowtype="any", mlinfilltype="ordinal", columntype="ordinal")))
    add(TransformCategory("ntg2", FamilyTree(auntsuncles=("retn", "pwr2"), cousins=("NArw",)),
                          _proc("retn", "ntg2", **integer)))
    add(TransformCategory("ntg3", FamilyTree(auntsuncles=("retn", "ordl", "1010"), cousins=("NArw",)),
                          _proc("retn", "ntg3", **integer)))
    return reg
