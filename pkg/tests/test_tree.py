import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tabtree.data_model import DOWNSTREAM, UPSTREAM, ColumnData, FamilyTree, ProcessEntry, TransformCategory
from tabtree.errors import ContractError, CycleError, RegistryError
from tabtree.tree import RngStreams, apply_tree, fit_tree

NOISE_ROOTS = {"DPnb", "DPmm", "DPrt", "DPod", "DP10", "DPoh", "DPbn"}
CATEGORIC_ROOTS = {"bnry", "ordl", "ord3", "onht", "1010", "excl", "DPod", "DP10", "DPoh", "DPbn"}
HELPERS = {"DPn3", "DPm2", "DPr2", "DPo4", "DPo6", "DPo3", "DPo7", "DPo8", "DPb2", "ntgo", "NArw"}


def column_for(root, seed, n=60):
    rng = np.random.default_rng(seed)
    if root in ("bnry", "DPbn"):
        cells = rng.choice(["no", "yes"], n).astype(object)
    elif root in CATEGORIC_ROOTS:
        cells = rng.choice(["a", "b", "c", "d", "e"], n).astype(object)
    elif root.startswith("ntg"):
        cells = rng.integers(-20, 300, n).astype(object)
    elif root in ("lgnm", "pwrs", "pwor", "pwbn"):
        cells = np.exp(rng.normal(2, 2, n)).astype(object)
    else:
        cells = (rng.normal(0, 5, n) * 10.0 ** rng.integers(-1, 3)).astype(object)
    missing = rng.choice(n, 3, replace=False)
    for i in missing:
        if i >= 3:  # keep the first delta windows defined
            cells[i] = None
    return ColumnData("column", cells)


def _same(a, b):
    assert list(a) == list(b)
    for h in a:
        x, y = np.asarray(a[h]), np.asarray(b[h])
        if x.dtype.kind == "f":
            np.testing.assert_array_equal(x, y)
        else:
            assert list(x) == list(y)


def test_dpmm_headers(registry):
    result = fit_tree(ColumnData("column", np.linspace(0, 1, 20)), "DPmm", registry)
    assert set(result.returned_headers) == {"column_mnmx_DPmm", "column_NArw"}
    dropped = [b.returned_header for b in result.bases if not b.retained]
    assert dropped == ["column_mnmx"]


def test_dp10_headers(registry):
    result = fit_tree(column_for("DP10", 0), "DP10", registry)
    assert result.returned_headers == ["column_ord3_DPod_1010_0", "column_ord3_DPod_1010_1",
                                       "column_ord3_DPod_1010_2", "column_NArw"]
    assert "column_ord3" not in result.returned_headers
    assert "column_ord3_DPod" not in result.returned_headers


def test_supplement_only_keeps_source(registry):
    reg = dict(registry)
    reg["sup"] = TransformCategory("sup", FamilyTree(cousins=("NArw",)), registry["retn"].process)
    result = fit_tree(ColumnData("column", [1.0, None, 3.0]), "sup", reg)
    assert result.returned_headers == ["column", "column_NArw"]


def test_ntgr_groups(registry):
    result = fit_tree(column_for("ntgr", 1), "ntgr", registry)
    groups = [g.basis.returned_header for g in result.retained]
    assert groups == ["column_ord3_mnmx", "column_retn", "column_pwr2", "column_ordl", "column_1010",
                      "column_NArw"]


def test_dxdt_composition(registry):
    result = fit_tree(column_for("dxdt", 2), "dxdt", registry)
    assert result.returned_headers == ["column_dxdt_retn", "column_retn", "column_NArw"]


def test_unknown_root_and_cycle(registry):
    with pytest.raises(RegistryError):
        fit_tree(ColumnData("c", [1.0]), "nope", registry)
    proc = ProcessEntry("mnmx", "mnmx", "loop")
    reg = {"loop": TransformCategory("loop", FamilyTree(parents=("loop",), children=("loop",)), proc)}
    with pytest.raises(CycleError):
        fit_tree(ColumnData("c", [1.0, 2.0]), "loop", reg)


def test_apply_header_mismatch(registry):
    result = fit_tree(ColumnData("a", [1.0, 2.0]), "retn", registry)
    with pytest.raises(ContractError):
        apply_tree(result.bases, ColumnData("b", [1.0, 2.0]), registry, "retn")


def test_dprt_testdata_is_plain_retn(registry):
    col = column_for("DPrt", 3)
    fitted = fit_tree(col, "DPrt", registry, rng=RngStreams(4))
    out = apply_tree(fitted.bases, col, registry, "DPrt", traindata=False).columns()
    plain = fit_tree(col, "retn", registry).columns()
    np.testing.assert_array_equal(out["column_retn_DPrt"], plain["column_retn"])


def test_dprt_zero_noise_is_plain_retn(registry):
    col = column_for("DPrt", 3)
    params = {"DPrt": {"sigma": 0.0, "flip_prob": 1.0, "mu": 0.0}}
    fitted = fit_tree(col, "DPrt", registry, params, RngStreams(4))
    plain = fit_tree(col, "retn", registry).columns()
    np.testing.assert_array_equal(fitted.columns()["column_retn_DPrt"], plain["column_retn"])


def _roots(registry):
    return sorted(k for k in registry if k not in HELPERS)


@pytest.mark.parametrize("seed", range(3))
def test_apply_reproduces_fit_every_root(registry, seed):
    for root in _roots(registry):
        col = column_for(root, seed)
        traindata = root not in NOISE_ROOTS
        fitted = fit_tree(col, root, registry, rng=RngStreams(seed), traindata=traindata)
        again = apply_tree(fitted.bases, col, registry, root, traindata=False)
        _same(fitted.columns(), again.columns())


def test_noise_replays_with_fit_stream(registry):
    for root in sorted(NOISE_ROOTS):
        col = column_for(root, 9)
        fitted = fit_tree(col, root, registry, rng=RngStreams(5))
        again = apply_tree(fitted.bases, col, registry, root, traindata=True, rng=RngStreams(5, "fit"))
        _same(fitted.columns(), again.columns())


def test_fit_deterministic(registry):
    for root in sorted(NOISE_ROOTS):
        col = column_for(root, 4)
        a = fit_tree(col, root, registry, {root: {"flip_prob": 0.5}}, RngStreams(8))
        b = fit_tree(col, root, registry, {root: {"flip_prob": 0.5}}, RngStreams(8))
        _same(a.columns(), b.columns())


def test_noise_differs_across_seeds(registry):
    col = column_for("DPmm", 4)
    a = fit_tree(col, "DPmm", registry, {"DPmm": {"flip_prob": 1.0}}, RngStreams(1)).columns()
    b = fit_tree(col, "DPmm", registry, {"DPmm": {"flip_prob": 1.0}}, RngStreams(2)).columns()
    assert not np.array_equal(a["column_mnmx_DPmm"], b["column_mnmx_DPmm"])


# --- random trees --------------------------------------------------------

N_CATS = 5


@st.composite
def random_registry(draw):
    reg = {}
    for i in range(N_CATS):
        slots = {}
        for j in range(i + 1, N_CATS):
            slot = draw(st.sampled_from([None, *DOWNSTREAM]))
            if slot:
                slots.setdefault(slot, []).append(f"T{j}")
        reg[f"T{i}"] = TransformCategory(f"T{i}", FamilyTree.from_dict(slots),
                                         ProcessEntry("mnmx", "mnmx", f"T{i}"))
    root_slots = {}
    for j in range(N_CATS):
        slot = draw(st.sampled_from([None, *UPSTREAM]))
        if slot:
            root_slots.setdefault(slot, []).append(f"T{j}")
    reg["R"] = TransformCategory("R", FamilyTree.from_dict(root_slots), ProcessEntry("mnmx", "mnmx", "R"))
    return reg


@given(random_registry())
def test_slot_semantics(reg):
    result = fit_tree(ColumnData("c", np.arange(10.0)), "R", reg)
    fed = {}
    for b in result.bases:
        if b.generation > 0:
            fed.setdefault(b.input_header, set()).add(b.slot)
    root = reg["R"].tree
    for b in result.bases:
        if b.slot == "source":
            assert not root.parents and not root.auntsuncles
            continue
        slots = fed.get(b.returned_header, set())
        if slots & {"children", "coworkers"}:
            assert not b.retained
        else:
            assert b.retained
    has_source = any(b.slot == "source" for b in result.bases)
    assert has_source == (not root.parents and not root.auntsuncles)
