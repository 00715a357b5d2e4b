"""Desk-scale benchmark of normalization, binning, and noise augmentation.

A synthetic binary classification set with mixed feature scales, V-shaped and
quadratic effects, a heavy-tailed feature, and label noise stands in for a
large physics data set.  Every scenario runs through the real pipeline, then
a small linear learner is trained on the returned columns.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from . import pipeline
from .config import build_registry, parse_config

FEATURES = ("f_large", "f_small", "f_vee", "f_quad", "f_tail", "f_lin")
SCENARIOS = ("raw", "zscore", "retn", "retn+stdev-bins", "noise-full", "noise-partial", "augment")
BIN_CATEGORY = "rtbn"


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    fraction: float
    repetitions: int
    metric: str
    mean: float
    stddev: float
    delta: float
    values: tuple = ()

    def row(self) -> dict:
        d = asdict(self)
        d.pop("values")
        return d


# --- data ----------------------------------------------------------------


def generate_synthetic(n: int, seed: int):
    """Return ``(features, labels)`` for ``n`` rows; deterministic per seed.

    Column scales span about six orders of magnitude.  The label depends on
    |x| (V shape), x squared, the clipped bulk of a Student-t (df 2) column,
    and linear terms; 10% of labels are flipped.  The logit is centered on its
    median so the classes are balanced.
    """
    if n < 100:
        raise ValueError("generate_synthetic needs n >= 100")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 5))
    tail = rng.standard_t(2.0, n)
    frame = pd.DataFrame({
        "f_large": 1000.0 * z[:, 0] + 5000.0,
        "f_small": 0.001 * z[:, 1],
        "f_vee": 10.0 * z[:, 2],
        "f_quad": z[:, 3],
        "f_tail": 50.0 * tail,
        "f_lin": 100.0 * z[:, 4],
    })
    logit = (1.2 * z[:, 0] - 1.0 * z[:, 1] + 2.0 * np.abs(z[:, 2]) - 1.5 * z[:, 3] ** 2
             + 4.0 * np.clip(tail, -2.0, 2.0) + 0.6 * z[:, 4])
    labels = (logit > np.median(logit)).astype(np.int64)
    flip = rng.random(n) < 0.10
    labels[flip] = 1 - labels[flip]
    return frame, labels


# --- learners ------------------------------------------------------------


def _standardize(train, *others):
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    return [(a - mu) / sd for a in (train, *others)]


def _check_loss(loss):
    if not math.isfinite(loss):
        raise FloatingPointError("training loss is not finite; check feature scaling")


def train_logreg(X, y, epochs: int = 3, lr: float = 0.05, batch: int = 32, seed: int = 0, trace=None):
    """Minibatch SGD logistic regression.  Returns weights with the bias last."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    w = np.zeros(d + 1)
    rng = np.random.default_rng(seed)
    Xb = np.hstack([X, np.ones((n, 1))])
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            p = 1.0 / (1.0 + np.exp(-(Xb[idx] @ w)))
            w -= lr * Xb[idx].T @ (p - y[idx]) / len(idx)
        if trace is not None:
            s = Xb @ w
            loss = float(np.mean(np.logaddexp(0.0, s) - y * s))
            _check_loss(loss)
            trace.append(loss)
    return w


def train_linear_svc(X, y, epochs: int = 5, lam: float = 1e-4, seed: int = 0):
    """Linear SVM via Pegasos subgradient steps on the hinge loss.

    Returns the average of the iterates from the final epoch, bias last.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.where(np.asarray(y) > 0, 1.0, -1.0)
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    w = np.zeros(d + 1)
    avg = np.zeros(d + 1)
    rng = np.random.default_rng(seed)
    step = 0
    for epoch in range(epochs):
        for i in rng.permutation(n):
            step += 1
            eta = 1.0 / (lam * (step + 100.0))
            margin = t[i] * (Xb[i] @ w)
            w[:-1] *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * t[i] * Xb[i] / (1.0 + eta)
            if epoch == epochs - 1:
                avg += w
        _check_loss(float(w @ w))
    return avg / n if epochs else w


def scores(w, X) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ w[:-1] + w[-1]


def roc_auc(score, labels) -> float:
    """Probability that a random positive outranks a random negative; ties count half."""
    score = np.asarray(score, dtype=np.float64)
    labels = np.asarray(labels)
    pos, neg = score[labels == 1], score[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("roc_auc needs both classes present")
    allv = np.concatenate([pos, neg])
    order = np.argsort(allv, kind="mergesort")
    ranks = np.empty(len(allv))
    sorted_v = allv[order]
    i = 0
    while i < len(sorted_v):
        j = i
        while j + 1 < len(sorted_v) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return float((ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0) / (pos.size * neg.size))


def accuracy(score, labels) -> float:
    return float(np.mean((np.asarray(score) > 0).astype(np.int64) == np.asarray(labels)))


# --- scenarios -----------------------------------------------------------


def _registry():
    cfg = parse_config({
        "transformdict": {BIN_CATEGORY: {"auntsuncles": ["retn"], "cousins": ["bins", "NArw"]}},
        "processdict": {BIN_CATEGORY: {"functionpointer": "retn"}},
    })
    return build_registry(cfg)


def scenario_config(name: str, headers, seed: int) -> pipeline.PipelineConfig:
    headers = list(headers)
    noise = {"mu": 0.0, "sigma": 0.03}
    if name == "raw":
        assign, param = {"exc2": headers}, {}
    elif name == "zscore":
        assign, param = {"nmbr": headers}, {}
    elif name == "retn":
        assign, param = {"retn": headers}, {}
    elif name == "retn+stdev-bins":
        assign, param = {BIN_CATEGORY: headers}, {}
    elif name == "noise-full":
        assign, param = {"DPrt": headers}, {"default_assignparam": {"DPrt": {**noise, "flip_prob": 1.0}}}
    elif name in ("noise-partial", "augment"):
        assign, param = {"DPrt": headers}, {"default_assignparam": {"DPrt": {**noise, "flip_prob": 0.03}}}
    else:
        raise ValueError(f"unknown scenario {name!r}")
    return pipeline.PipelineConfig(assigncat=assign, assignparam=param, master_seed=seed,
                                   noise_augment=1 if name == "augment" else 0)


def _numeric(frame: pd.DataFrame) -> np.ndarray:
    return frame.to_numpy(dtype=np.float64)


def run_once(name: str, train: pd.DataFrame, y_train, test: pd.DataFrame, seed: int, learner: str = "logreg",
             registry=None) -> np.ndarray:
    """Fit scenario ``name`` on train, apply to test, train a learner; returns test scores."""
    cfg = scenario_config(name, train.columns, seed)
    frame = train.assign(label=y_train)
    cfg.labels_column = "label"
    result = pipeline.fit(frame, cfg, registry if registry is not None else _registry())
    Xtr, ytr = _numeric(result.train), _numeric(result.labels)[:, 0]
    Xte, _ = pipeline.apply(result.store, test)
    Xtr, Xte = _standardize(Xtr, _numeric(Xte))
    if learner == "logreg":
        w = train_logreg(Xtr, ytr, seed=seed)
    else:
        w = train_linear_svc(Xtr, ytr, seed=seed)
    return scores(w, Xte)


def _split(n, rng, test_share=0.3):
    order = rng.permutation(n)
    cut = int(n * (1 - test_share))
    return order[:cut], order[cut:]


def run_scenarios(dataset, fractions=(0.1, 0.3, 1.0), repetitions: int = 5, seed: int = 0,
                  scenarios=SCENARIOS, learner: str = "logreg", metric: str = "auc") -> list:
    """Mean/stddev of the test metric per scenario and train fraction, with delta against ``raw``."""
    frame, labels = dataset
    registry = _registry()
    measure = roc_auc if metric == "auc" else accuracy
    values = {(s, f): [] for s in scenarios for f in fractions}
    for rep in range(repetitions):
        rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
        train_idx, test_idx = _split(len(frame), rng)
        for f in fractions:
            k = max(20, int(round(f * len(train_idx))))
            sub = np.sort(rng.choice(train_idx, size=min(k, len(train_idx)), replace=False))
            if len(np.unique(labels[sub])) < 2:
                continue
            for s in scenarios:
                sc = run_once(s, frame.iloc[sub].reset_index(drop=True), labels[sub],
                              frame.iloc[test_idx].reset_index(drop=True), seed * 1000 + rep, learner, registry)
                values[(s, f)].append(measure(sc, labels[test_idx]))
    results = []
    for f in fractions:
        base = float(np.mean(values[("raw", f)])) if "raw" in scenarios and values[("raw", f)] else math.nan
        for s in scenarios:
            v = np.asarray(values[(s, f)])
            mean = float(v.mean()) if v.size else math.nan
            results.append(ScenarioResult(s, f, int(v.size), metric, mean, float(v.std()) if v.size else math.nan,
                                          mean - base, tuple(float(x) for x in v)))
    return results


def format_table(results) -> str:
    lines = [f"{'scenario':<18}{'fraction':>10}{'reps':>6}{'metric':>8}{'mean':>10}{'stddev':>10}{'delta':>10}"]
    for r in results:
        lines.append(f"{r.scenario:<18}{r.fraction:>10.4g}{r.repetitions:>6}{r.metric:>8}"
                     f"{r.mean:>10.4f}{r.stddev:>10.4f}{r.delta:>+10.4f}")
    return "\n".join(lines)


def results_frame(results) -> pd.DataFrame:
    return pd.DataFrame([r.row() for r in results])
