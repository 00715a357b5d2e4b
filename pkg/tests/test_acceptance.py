"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import math

import numpy as np
import pandas as pd
import pytest

from tabtree import bench, pipeline
from tabtree.binning import apply_bins, bin_index, decode_bins, fit_bins
from tabtree.csvio import read_csv_text, write_csv_text
from tabtree.data_model import ColumnData, deserialize_pipeline, serialize_pipeline
from tabtree.inversion import invert
from tabtree.numeric import apply_norm, compute_dxd2, compute_dxdt, fit_norm
from tabtree.tree import RngStreams, apply_tree, fit_tree

from .test_tree import HELPERS, NOISE_ROOTS, column_for

pytestmark = pytest.mark.acceptance


def _random_column(rng, n=1000):
    kind = rng.integers(0, 4)
    scale = 10.0 ** rng.uniform(-4, 5)
    if kind == 0:
        x = rng.normal(0, scale, n)
    elif kind == 1:
        x = rng.uniform(0.1, 3, n) * scale
    elif kind == 2:
        x = -rng.exponential(scale, n) - scale
    else:
        x = np.round(rng.normal(0, 3, n)) * scale
    return x


def test_ac01_normalization_statistics(verdict):
    rng = np.random.default_rng(2024)
    worst_mean = worst_std = 0.0
    bad, spanning, constant = [], 0, 0
    for i in range(200):
        x = _random_column(rng)
        z = apply_norm(fit_norm("nmbr", x), x)
        worst_mean = max(worst_mean, abs(z.mean()))
        if np.std(x) > 0:
            worst_std = max(worst_std, abs(z.std() - 1.0))
        else:
            constant += 1
        m = apply_norm(fit_norm("mnmx", x), x)
        if not (m.min() >= 0.0 and m.max() <= 1.0):
            bad.append((i, "mnmx range"))
        b = fit_norm("retn", x)
        r = apply_norm(b, x)
        if not np.all(np.abs(r) <= 1.0):
            bad.append((i, "retn range"))
        if np.any(np.sign(r) * np.sign(x) < 0) or np.any(r[x == 0] != 0):
            bad.append((i, "retn sign flip or zero moved"))
        if b.min <= 0 <= b.max:
            spanning += 1
            if not np.array_equal(np.sign(r), np.sign(x)):
                bad.append((i, "retn strict sign"))
    ok = worst_mean < 1e-9 and worst_std < 1e-9 and not bad
    verdict("AC01 normalization statistics", ok,
            f"200 columns, max|mean|={worst_mean:.1e}, max|std-1|={worst_std:.1e}, "
            f"{spanning} zero-spanning retn columns with exact signs, violations={bad[:3]}")


def test_ac02_tree_walkthrough_goldens(verdict, registry):
    dpmm = fit_tree(ColumnData("column", np.linspace(-3, 7, 25)), "DPmm", registry)
    dp10 = fit_tree(ColumnData("column", np.array(list("abcabcaab"), dtype=object)), "DP10", registry)
    dp10_headers = dp10.returned_headers
    ok = (set(dpmm.returned_headers) == {"column_mnmx_DPmm", "column_NArw"}
          and "column_ord3" not in dp10_headers and "column_ord3_DPod" not in dp10_headers
          and dp10_headers == ["column_ord3_DPod_1010_0", "column_ord3_DPod_1010_1", "column_NArw"])
    verdict("AC02 tree walkthrough goldens", ok, f"DPmm -> {sorted(dpmm.returned_headers)}; DP10 -> {dp10_headers}")


def _frames_equal(a, b):
    if list(a) != list(b):
        return False
    for h in a:
        x, y = np.asarray(a[h]), np.asarray(b[h])
        if x.dtype.kind == "f":
            if x.tobytes() != y.tobytes():
                return False
        elif list(x) != list(y):
            return False
    return True


def test_ac03_train_test_consistency(verdict, registry):
    roots = sorted(k for k in registry if k not in HELPERS)
    failures = []
    for seed in range(5):
        for root in roots:
            col = column_for(root, seed)
            fitted = fit_tree(col, root, registry, rng=RngStreams(seed), traindata=root not in NOISE_ROOTS)
            again = apply_tree(fitted.bases, col, registry, root, traindata=False)
            if not _frames_equal(fitted.columns(), again.columns()):
                failures.append((root, seed))
    rng = np.random.default_rng(3)
    frame = pd.DataFrame({"a": rng.normal(size=120), "b": rng.choice(list("pqrs"), 120).astype(object),
                          "c": rng.integers(0, 40, 120).astype(float), "y": rng.choice(["u", "v"], 120)})
    frame.loc[[4, 9], "a"] = None
    cfg = pipeline.PipelineConfig(labels_column="y", assigncat={"DPrt": ["a"], "DP10": ["b"], "ntgr": ["c"]},
                                  assigninfill={"ml": ["a"]}, traindata=False)
    out = pipeline.fit(frame, cfg)
    test, labels = pipeline.apply(out.store, frame)
    same = test.equals(out.train) and labels.equals(out.labels)
    verdict("AC03 train/test consistency", not failures and same,
            f"{len(roots)} builtin roots x 5 columns bit-identical on apply; pipeline replay identical={same}; "
            f"failures={failures[:5]}")


FULL_INFO = ["nmbr", "mnmx", "mean", "retn", "lgnm", "ordl", "ord3", "onht", "1010", "bnry"]


def _inversion_column(root, rng, n=40):
    if root == "bnry":
        return rng.choice(["no", "yes"], n).astype(object)
    if root in ("ordl", "ord3", "onht", "1010"):
        k = rng.integers(1, 12)
        return rng.choice([f"lv{i}" for i in range(k)], n).astype(object)
    if root == "lgnm":
        return np.exp(rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), n))
    return rng.normal(rng.uniform(-100, 100), 10.0 ** rng.uniform(-3, 3), n)


def test_ac04_inversion_round_trips(verdict):
    rng = np.random.default_rng(404)
    worst, mismatched = 0.0, []
    for root in FULL_INFO:
        for i in range(100):
            x = _inversion_column(root, rng)
            out = pipeline.fit(pd.DataFrame({"x": x}), pipeline.PipelineConfig(assigncat={root: ["x"]}))
            recovered, _, info = invert(out.store, out.train)
            got = recovered["x"].to_numpy()
            if x.dtype == object:
                if list(got) != list(x) or not info["x"]["full_information"]:
                    mismatched.append((root, i))
            else:
                worst = max(worst, float(np.max(np.abs(got.astype(float) - x))))
    ok = worst < 1e-9 and not mismatched
    verdict("AC04 inversion round trips", ok,
            f"10 categories x 100 columns, max abs numeric error={worst:.2e}, categoric mismatches={mismatched[:5]}")


def test_ac05_noise_statistics(verdict, registry):
    n = 100_000
    rng = np.random.default_rng(5)
    col = ColumnData("column", rng.normal(size=n))
    fractions = {}
    within = True
    for p in (0.03, 0.5, 1.0):
        params = {"DPnb": {"flip_prob": p, "sigma": 0.03}}
        result = fit_tree(col, "DPnb", registry, params, RngStreams(11)).columns()
        clean = fit_tree(col, "nmbr", registry).columns()["column_nmbr"]
        frac = float(np.mean(result["column_nmbr_DPnb"] != clean))
        fractions[p] = frac
        within &= abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / n)
    big = ColumnData("column", rng.uniform(-5, 5, 1_000_000))
    dpmm = fit_tree(big, "DPmm", registry, {"DPmm": {"flip_prob": 1.0, "sigma": 0.3}}, RngStreams(12)).columns()
    out = dpmm["column_mnmx_DPmm"]
    bounded = bool(out.min() >= 0.0 and out.max() <= 1.0)
    identity = True
    for root, plain, header in (("DPnb", "nmbr", "column_nmbr_DPnb"), ("DPmm", "mnmx", "column_mnmx_DPmm"),
                                ("DPrt", "retn", "column_retn_DPrt")):
        fitted = fit_tree(col, root, registry, {root: {"flip_prob": 1.0}}, RngStreams(3))
        test = apply_tree(fitted.bases, col, registry, root, traindata=False).columns()[header]
        identity &= test.tobytes() == fit_tree(col, plain, registry).columns()[f"column_{plain}"].tobytes()
    cats = ColumnData("column", rng.choice(list("abcdef"), n).astype(object))
    for root in ("DPod", "DP10", "DPoh"):
        fitted = fit_tree(cats, root, registry, {root: {"flip_prob": 1.0}}, RngStreams(4))
        test = apply_tree(fitted.bases, cats, registry, root, traindata=False)
        clean = fit_tree(cats, root, registry, traindata=False)
        identity &= _frames_equal(test.columns(), clean.columns())
    verdict("AC05 noise statistics", within and bounded and identity,
            f"injected fractions {fractions} within 3 sigma={within}; DPmm 1e6 injections in "
            f"[{out.min():.3g}, {out.max():.3g}]; traindata=false identity={identity}")


def test_ac06_binning(verdict):
    rng = np.random.default_rng(6)
    balance = onehot = decode = True
    for _ in range(100):
        n = int(rng.integers(10, 2000))
        b = int(rng.integers(2, 12))
        x = rng.permutation(rng.normal(size=n) * 10.0 ** rng.integers(-3, 4))
        basis = fit_bins("equal_population", x, {"bincount": b}, output_mode="ordinal")
        counts = np.bincount(bin_index(basis, x), minlength=b)
        balance &= bool(np.all(np.abs(counts - n / b) <= 1))
        for variant in ("stdev", "pwr2", "fixed_width", "equal_population", "user_open", "user_bounded"):
            params = {"bincount": 2 * (b // 2) or 2, "width": float(np.std(x)) or 1.0,
                      "buckets": sorted(rng.choice(x, 3, replace=False).tolist())}
            oh = fit_bins(variant, x, params, output_mode="onehot")
            cols, flagged = apply_bins(oh, x)
            act = np.column_stack(cols).sum(axis=1)
            onehot &= bool(np.all(act[~flagged] == 1) and np.all(act[flagged] == 0))
            ordinal = fit_bins(variant, x, params, output_mode="ordinal")
            binary = fit_bins(variant, x, params, output_mode="binary")
            bcols, _ = apply_bins(binary, x)
            decode &= bool(np.array_equal(decode_bins(binary, bcols), bin_index(ordinal, x)))
    verdict("AC06 binning", balance and onehot and decode,
            f"equal-population within +-1 of n/bincount={balance}; one activation per row={onehot}; "
            f"binary decodes to ordinal={decode} (100 draws x 6 variants)")


def _dxdt_oracle(x, periods, order):
    out = [float(v) for v in x]
    for _ in range(order):
        out = [math.nan if i < periods else out[i] - out[i - periods] for i in range(len(out))]
    return np.array(out)


def _dxd2_oracle(x, periods, window):
    out = []
    for i in range(len(x)):
        if i - periods - window + 1 < 0:
            out.append(math.nan)
            continue
        now = sum(x[i - window + 1:i + 1]) / window
        before = sum(x[i - periods - window + 1:i - periods + 1]) / window
        out.append(now - before)
    return np.array(out)


def test_ac07_dxdt_oracle(verdict):
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(10, 300))
        x = rng.normal(size=n) * 10.0 ** rng.integers(-2, 3)
        periods, order, window = int(rng.integers(1, 5)), int(rng.integers(1, 4)), int(rng.integers(1, 5))
        a = compute_dxdt(x, periods, order)
        b = compute_dxd2(x, periods, window)
        mismatches += not np.array_equal(a, _dxdt_oracle(x, periods, order), equal_nan=True)
        mismatches += not np.array_equal(b, _dxd2_oracle(list(x), periods, window), equal_nan=True)
    verdict("AC07 dxdt oracle equivalence", mismatches == 0,
            f"100 random sequences, exact mismatches={mismatches}")


def test_ac08_augmentation(verdict):
    rng = np.random.default_rng(8)
    n = 90
    frame = pd.DataFrame({"a": rng.normal(size=n), "b": rng.choice(list("xyz"), n).astype(object),
                          "y": np.arange(n, dtype=float)})
    cfg = pipeline.PipelineConfig(labels_column="y", assigncat={"DPrt": ["a"], "DPod": ["b"]})
    out = pipeline.fit(frame, cfg)
    rows, aligned = {}, True
    for k in (1, 2, 4):
        feats, labels = pipeline.apply(out.store, frame, noise_augment=k)
        rows[k] = (len(feats), len(labels))
        expected = np.tile(np.arange(n, dtype=float), k + 1)
        aligned &= bool(np.array_equal(labels["y_exc2"].to_numpy(), expected))
    ok = all(r == ((k + 1) * n, (k + 1) * n) for k, r in rows.items()) and aligned
    verdict("AC08 augmentation", ok, f"input {n} rows -> {rows} for noise_augment 1/2/4; labels aligned={aligned}")


@pytest.mark.slow
def test_ac09_bins_help_linear_model(verdict):
    gains = []
    for seed in range(10):
        data = bench.generate_synthetic(10_000, seed)
        res = bench.run_scenarios(data, fractions=(1.0,), repetitions=1, seed=seed,
                                  scenarios=("retn", "retn+stdev-bins"), learner="svc", metric="acc")
        gains.append(res[1].mean - res[0].mean)
    mean_gain = float(np.mean(gains))
    verdict("AC09 retn+stdev-bins vs retn (linear SVC accuracy)", mean_gain >= 0.02,
            f"10 seeds, mean gain {100 * mean_gain:+.2f} points (min {100 * min(gains):+.2f}, "
            f"max {100 * max(gains):+.2f}); threshold +2.00")


@pytest.mark.slow
def test_ac10_noise_augmentation_direction(verdict):
    data = bench.generate_synthetic(10_000, 0)
    smallest = 0.1
    res = bench.run_scenarios(data, fractions=(smallest,), repetitions=20, seed=0,
                              scenarios=("raw", "noise-full", "augment"))
    by = {r.scenario: r for r in res}
    aug, full = by["augment"].delta, by["noise-full"].delta
    ok = aug >= 0.0 and full <= -0.02
    verdict("AC10 augmentation and full-noise direction (AUC)", ok,
            f"fraction {smallest}, 20 seeds, raw {by['raw'].mean:.4f}, augment delta {aug:+.4f} (>= 0), "
            f"noise-full delta {full:+.4f} (<= -0.02)")


def test_ac11_ml_infill_oracle(verdict):
    ratios = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n = 300
        a = rng.uniform(-3, 3, n)
        truth = np.sin(a) * 5 + a ** 2
        holes = rng.random(n) < 0.1
        frame = pd.DataFrame({"a": a, "b": np.where(holes, np.nan, truth)})
        errs = {}
        for strategy in ("ml", "mean"):
            cfg = pipeline.PipelineConfig(assigncat={"exc2": ["b"]}, assigninfill={strategy: ["b"]}, master_seed=seed)
            out = pipeline.fit(frame, cfg)
            errs[strategy] = float(np.mean(np.abs(out.train["b_exc2"].to_numpy()[holes] - truth[holes])))
        ratios.append(errs["ml"] / errs["mean"])
    verdict("AC11 ML infill oracle", max(ratios) < 0.1,
            f"10 seeds, ML/mean MAE ratio max {max(ratios):.4f}, mean {np.mean(ratios):.4f} (< 0.1)")


def test_ac12_serialization(verdict):
    rng = np.random.default_rng(12)
    n = 60
    frame = pd.DataFrame({"num": rng.normal(size=n), "cat": rng.choice(["α", "b,c", 'q"t'], n).astype(object),
                          "int": rng.integers(0, 30, n).astype(float), "y": rng.choice(["s", "t"], n)})
    frame.loc[[1, 7], "num"] = np.nan
    cfg = pipeline.PipelineConfig(labels_column="y", assigncat={"DP10": ["cat"], "ntgr": ["int"]},
                                  assigninfill={"ml": ["num"]}, valpercent=0.2, master_seed=3)
    store = pipeline.fit(frame, cfg).store
    blob = serialize_pipeline(store)
    again = deserialize_pipeline(blob)
    fields_same = again == store and serialize_pipeline(again) == blob
    text = write_csv_text(pipeline.apply(store, frame)[0].assign(raw=frame["cat"], miss=frame["num"]))
    csv_same = write_csv_text(read_csv_text(text)) == text
    verdict("AC12 serialization", fields_same and csv_same,
            f"pipeline JSON ({len(blob)} bytes) field-identical={fields_same}; CSV byte-identical={csv_same}")
