"""Small bagged decision-tree forest used by ML infill.

Trees are grown greedily (variance reduction for regression, Gini for
classification) on bootstrap samples with a random feature subset of size
about sqrt(d) at every node.  Models are plain dicts of lists so they can be
stored in a pipeline file.
"""

from __future__ import annotations

import math

import numpy as np

N_TREES = 16
MAX_DEPTH = 6
MIN_SAMPLES_LEAF = 5


def _best_split(X, y, idx, features, task, n_classes, min_leaf):
    best = None  # (gain, feature, threshold)
    n = len(idx)
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        if xs[0] == xs[-1]:
            continue
        ys = y[idx][order]
        if task == "regression":
            csum = np.cumsum(ys)
            csq = np.cumsum(ys * ys)
            tot, totsq = csum[-1], csq[-1]
            nl = np.arange(1, n)
            nr = n - nl
            sl, sql = csum[:-1], csq[:-1]
            sr, sqr = tot - sl, totsq - sql
            # sum of squared errors on each side
            score = (sql - sl * sl / nl) + (sqr - sr * sr / nr)
            parent = totsq - tot * tot / n
        else:
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), ys.astype(np.int64)] = 1.0
            cl = np.cumsum(onehot, axis=0)[:-1]
            cr = cl[-1] + onehot[-1] - cl
            nl = np.arange(1, n)
            nr = n - nl
            gini_l = 1.0 - np.sum(cl * cl, axis=1) / (nl * nl)
            gini_r = 1.0 - np.sum(cr * cr, axis=1) / (nr * nr)
            score = nl * gini_l + nr * gini_r
            tot = cl[-1] + onehot[-1]
            parent = n * (1.0 - np.sum(tot * tot) / (n * n))
        allowed = (xs[1:] != xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not allowed.any():
            continue
        score = np.where(allowed, score, np.inf)
        pos = int(np.argmin(score))
        gain = parent - score[pos]
        if gain <= 1e-12:
            continue
        lo, hi = xs[pos], xs[pos + 1]
        thr = lo + (hi - lo) / 2.0
        if not lo <= thr < hi:
            thr = lo
        if best is None or gain > best[0]:
            best = (gain, int(f), float(thr))
    return best


def _grow(X, y, task, n_classes, rng, max_depth, min_leaf, n_feat):
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(idx):
        if task == "regression":
            return [float(np.mean(y[idx]))]
        counts = np.bincount(y[idx].astype(np.int64), minlength=n_classes)
        return (counts / counts.sum()).tolist()

    def build(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(idx))
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return node
        if task == "regression" and np.all(y[idx] == y[idx][0]):
            return node
        if task == "classification" and np.unique(y[idx]).size == 1:
            return node
        feats = rng.permutation(X.shape[1])
        split = _best_split(X, y, idx, feats[:n_feat], task, n_classes, min_leaf)
        if split is None:
            # sampled features were all constant or unsplittable here; widen the search
            split = _best_split(X, y, idx, feats[n_feat:], task, n_classes, min_leaf)
        if split is None:
            return node
        _, f, thr = split
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(idx[go_left], depth + 1)
        right[node] = build(idx[~go_left], depth + 1)
        return node

    build(np.arange(len(y)), 0)
    return {"feature": feature, "threshold": threshold, "left": left, "right": right, "value": value}


def fit_forest(X, y, task: str, rng: np.random.Generator, n_trees: int = N_TREES,
               max_depth: int = MAX_DEPTH, min_samples_leaf: int = MIN_SAMPLES_LEAF) -> dict:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per target value")
    n, d = X.shape
    n_classes = int(y.max()) + 1 if task == "classification" else 0
    n_feat = max(1, int(round(math.sqrt(d)))) if d else 0
    trees = []
    for _ in range(n_trees):
        boot = rng.integers(0, n, n)
        if d == 0:
            trees.append(_grow(np.zeros((n, 1)), y[boot], task, n_classes, rng, 0, min_samples_leaf, 1))
        else:
            trees.append(_grow(X[boot], y[boot], task, n_classes, rng, max_depth, min_samples_leaf, n_feat))
    return {"task": task, "n_classes": n_classes, "n_features": d, "trees": trees}


def _predict_tree(tree, X):
    feature = np.asarray(tree["feature"], dtype=np.int64)
    threshold = np.asarray(tree["threshold"], dtype=np.float64)
    left = np.asarray(tree["left"], dtype=np.int64)
    right = np.asarray(tree["right"], dtype=np.int64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        f = feature[node]
        internal = f >= 0
        if not internal.any():
            break
        rows = np.nonzero(internal)[0]
        xv = X[rows, f[internal]]
        node[rows] = np.where(xv <= threshold[node[rows]], left[node[rows]], right[node[rows]])
    values = tree["value"]
    return np.array([values[i] for i in node], dtype=np.float64)


def predict_forest(model: dict, X) -> np.ndarray:
    """Regression: mean prediction.  Classification: class index with highest mean probability."""
    X = np.asarray(X, dtype=np.float64)
    if model["n_features"] == 0:
        X = np.zeros((X.shape[0], 1))
    preds = np.stack([_predict_tree(t, X) for t in model["trees"]])
    mean = preds.mean(axis=0)
    if model["task"] == "regression":
        return mean[:, 0]
    return np.argmax(mean, axis=1)
