"""From-scratch Random Forest over coalition labels.

Trees are grown CART-style: at each node a random draw of mtry features is
scanned, candidate thresholds sit at midpoints of sorted distinct values, and
the split minimizing weighted Gini impurity wins. Ties break to the first
minimum in (ascending feature index, ascending threshold) order, so training
is deterministic. Growth stops on purity, max_depth, or when a child would
drop below min_leaf samples. Each tree runs on its own bootstrap resample
and a private splitmix64 stream derived from (seed, tree index), which makes
the model independent of tree construction order.

Leaves keep the full class-count vector; predict_proba averages per-leaf
class frequencies across trees and predict takes the argmax (ties to the
lower class index). Classes are the labels observed in training, ascending.

Models persist to JSON as nested node records under a version tag.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from ._rng import mix64
from .data import Dataset
from .errors import ConfigError, DataError

FORMAT_TAG = "padex-forest"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestHyperparams:
    """Forest knobs. mtry=None resolves to ceil(sqrt(d)) at training time."""

    n_trees: int = 100
    max_depth: int = 20
    min_leaf: int = 1
    mtry: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError("mtry must be >= 1 when given")


@dataclass(eq=False)
class _Tree:
    # feature[i] == -1 marks a leaf; leaf_of[i] indexes into leaf_counts
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_of: np.ndarray
    leaf_counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


@dataclass(eq=False)
class ForestModel:
    trees: list
    classes: np.ndarray
    hyperparams: ForestHyperparams
    n_features: int
    _flat: tuple | None = field(default=None, repr=False)

    def flat(self) -> tuple:
        """Trees concatenated into flat arrays for the traversal kernels."""
        if self._flat is None:
            node_off = np.zeros(len(self.trees) + 1, dtype=np.int64)
            leaf_off = np.zeros(len(self.trees) + 1, dtype=np.int64)
            for t, tree in enumerate(self.trees):
                node_off[t + 1] = node_off[t] + tree.n_nodes
                leaf_off[t + 1] = leaf_off[t] + tree.leaf_counts.shape[0]
            feat = np.concatenate([t.feature for t in self.trees])
            thr = np.concatenate([t.threshold for t in self.trees])
            left = np.concatenate([t.left for t in self.trees])
            right = np.concatenate([t.right for t in self.trees])
            leaf_of = np.concatenate([t.leaf_of for t in self.trees])
            counts = np.vstack([t.leaf_counts for t in self.trees]).astype(np.float64)
            freq = counts / counts.sum(axis=1, keepdims=True)
            self._flat = (feat, thr, left, right, leaf_of, freq, node_off, leaf_off)
        return self._flat


@njit(cache=True, nogil=True, inline="always")
def _sm_next(state):
    # splitmix64: wrapping uint64 arithmetic
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, nogil=True)
def _grow_tree(X, y, seed, n_classes, max_depth, min_leaf, mtry, bootstrap):
    n, d = X.shape
    state = seed
    idx = np.empty(n, np.int64)
    if bootstrap:
        for k in range(n):
            state, z = _sm_next(state)
            idx[k] = np.int64(z % np.uint64(n))
    else:
        for k in range(n):
            idx[k] = k

    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    leaf_of = np.full(max_nodes, -1, np.int64)
    leaf_counts = np.zeros((n + 1, n_classes), np.int64)

    stack_node = np.empty(max_nodes, np.int64)
    stack_lo = np.empty(max_nodes, np.int64)
    stack_hi = np.empty(max_nodes, np.int64)
    stack_depth = np.empty(max_nodes, np.int64)
    vals = np.empty(n)
    buf = np.empty(n, np.int64)
    perm = np.empty(d, np.int64)
    counts = np.empty(n_classes, np.int64)
    cl = np.empty(n_classes, np.int64)
    cr = np.empty(n_classes, np.int64)

    n_nodes = 1
    n_leaves = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        depth = stack_depth[sp]
        size = hi - lo
        for c in range(n_classes):
            counts[c] = 0
        for k in range(lo, hi):
            counts[y[idx[k]]] += 1
        top = 0
        for c in range(n_classes):
            if counts[c] > top:
                top = counts[c]

        grown = False
        best_g = np.inf
        best_f = -1
        best_thr = 0.0
        best_nl = 0
        if top < size and depth < max_depth and size >= 2 * min_leaf:
            for f in range(d):
                perm[f] = f
            for t in range(mtry):
                state, z = _sm_next(state)
                r = t + np.int64(z % np.uint64(d - t))
                tmp = perm[t]
                perm[t] = perm[r]
                perm[r] = tmp
            for a in range(1, mtry):  # tried features in ascending order
                v = perm[a]
                b = a - 1
                while b >= 0 and perm[b] > v:
                    perm[b + 1] = perm[b]
                    b -= 1
                perm[b + 1] = v

            for fi in range(mtry):
                f = perm[fi]
                for k in range(size):
                    vals[k] = X[idx[lo + k], f]
                order = np.argsort(vals[:size])
                ssql = 0.0
                ssqr = 0.0
                for c in range(n_classes):
                    cl[c] = 0
                    cr[c] = counts[c]
                    ssqr += counts[c] * counts[c]
                for pos in range(size - 1):
                    c = y[idx[lo + order[pos]]]
                    ssql += 2.0 * cl[c] + 1.0
                    ssqr -= 2.0 * cr[c] - 1.0
                    cl[c] += 1
                    cr[c] -= 1
                    nl = pos + 1
                    nr = size - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    vlo = vals[order[pos]]
                    vhi = vals[order[pos + 1]]
                    if vhi <= vlo:
                        continue
                    g = (nl - ssql / nl) + (nr - ssqr / nr)
                    if g < best_g:
                        best_g = g
                        best_f = f
                        thr = 0.5 * (vlo + vhi)
                        if thr >= vhi:  # midpoint rounded up to vhi
                            thr = vlo
                        best_thr = thr
                        best_nl = nl
            grown = best_f >= 0

        if not grown:
            leaf_of[node] = n_leaves
            for c in range(n_classes):
                leaf_counts[n_leaves, c] = counts[c]
            n_leaves += 1
            continue

        a = 0
        b = best_nl
        for k in range(lo, hi):  # stable partition
            if X[idx[k], best_f] <= best_thr:
                buf[a] = idx[k]
                a += 1
            else:
                buf[b] = idx[k]
                b += 1
        for k in range(size):
            idx[lo + k] = buf[k]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        stack_node[sp] = rid
        stack_lo[sp] = lo + best_nl
        stack_hi[sp] = hi
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = lid
        stack_lo[sp] = lo
        stack_hi[sp] = lo + best_nl
        stack_depth[sp] = depth + 1
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(),
            leaf_of[:n_nodes].copy(), leaf_counts[:n_leaves].copy())


@njit(cache=True, nogil=True)
def _proba_many(Xq, feat, thr, left, right, leaf_of, leaf_freq, node_off, leaf_off):
    nq = Xq.shape[0]
    n_classes = leaf_freq.shape[1]
    n_trees = node_off.shape[0] - 1
    out = np.zeros((nq, n_classes))
    for t in range(n_trees):
        base = node_off[t]
        lbase = leaf_off[t]
        for q in range(nq):
            node = 0
            while feat[base + node] >= 0:
                if Xq[q, feat[base + node]] <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            row = lbase + leaf_of[base + node]
            for c in range(n_classes):
                out[q, c] += leaf_freq[row, c]
    inv = 1.0 / n_trees
    for q in range(nq):
        for c in range(n_classes):
            out[q, c] *= inv
    return out


def resolve_mtry(hp: ForestHyperparams, d: int) -> int:
    mtry = hp.mtry if hp.mtry is not None else math.ceil(math.sqrt(d))
    if mtry > d:
        raise ConfigError(f"mtry={mtry} exceeds feature count d={d}")
    return mtry


def train(ds: Dataset, hp: ForestHyperparams) -> ForestModel:
    """Grow the forest. Deterministic: tree t uses the stream mix(seed, t),
    so the result does not depend on construction order."""
    if ds.n_rows == 0:
        raise DataError("cannot train on an empty dataset")
    classes = np.unique(ds.labels)
    y = np.searchsorted(classes, ds.labels).astype(np.int64)
    d = ds.n_features
    mtry = resolve_mtry(hp, d)
    X = np.ascontiguousarray(ds.features)
    trees = []
    for t in range(hp.n_trees):
        seed_t = np.uint64(mix64("tree", hp.seed, t))
        trees.append(_Tree(*_grow_tree(X, y, seed_t, len(classes), hp.max_depth,
                                       hp.min_leaf, mtry, hp.bootstrap)))
    return ForestModel(trees, classes, hp, d)


def _check_features(model: ForestModel, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ConfigError(f"expected {model.n_features} features, got shape {x.shape}")
    return x


def predict_proba(model: ForestModel, features) -> np.ndarray:
    """Mean over trees of the reached leaf's class frequency vector."""
    x = _check_features(model, features)
    return _proba_many(x[None, :], *model.flat())[0]


def predict(model: ForestModel, features) -> int:
    """Argmax class, ties toward the lower class index."""
    proba = predict_proba(model, features)
    return int(model.classes[int(np.argmax(proba))])


def predict_proba_many(model: ForestModel, features) -> np.ndarray:
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ConfigError(f"expected (*, {model.n_features}) features, got {X.shape}")
    return _proba_many(X, *model.flat())


def predict_many(model: ForestModel, features) -> np.ndarray:
    proba = predict_proba_many(model, features)
    return model.classes[np.argmax(proba, axis=1)]


def accuracy(model: ForestModel, ds: Dataset) -> float:
    """Exact-match fraction over the dataset's rows."""
    if ds.n_rows == 0:
        raise DataError("cannot score an empty dataset")
    return float(np.mean(predict_many(model, ds.features) == ds.labels))


def _node_record(tree: _Tree, i: int) -> dict:
    if tree.feature[i] < 0:
        return {"counts": [int(c) for c in tree.leaf_counts[tree.leaf_of[i]]]}
    return {
        "feature": int(tree.feature[i]),
        "threshold": float(tree.threshold[i]),
        "left": _node_record(tree, int(tree.left[i])),
        "right": _node_record(tree, int(tree.right[i])),
    }


def _tree_from_record(rec: dict, n_features: int, n_classes: int) -> _Tree:
    feature, threshold, left, right, leaf_of = [], [], [], [], []
    leaf_counts = []

    def walk(r) -> int:
        if not isinstance(r, dict):
            raise DataError("model JSON: node record is not an object")
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_of.append(-1)
        if "counts" in r:
            counts = r["counts"]
            if len(counts) != n_classes:
                raise DataError(f"model JSON: leaf count vector length {len(counts)} "
                                f"!= {n_classes} classes")
            leaf_of[node] = len(leaf_counts)
            leaf_counts.append([int(c) for c in counts])
            return node
        try:
            f = int(r["feature"])
            thr = float(r["threshold"])
            lrec, rrec = r["left"], r["right"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"model JSON: malformed node record: {exc}") from exc
        if not (0 <= f < n_features):
            raise DataError(f"model JSON: feature index {f} out of range")
        feature[node] = f
        threshold[node] = thr
        left[node] = walk(lrec)
        right[node] = walk(rrec)
        return node

    walk(rec)
    return _Tree(np.asarray(feature, np.int64), np.asarray(threshold),
                 np.asarray(left, np.int64), np.asarray(right, np.int64),
                 np.asarray(leaf_of, np.int64),
                 np.asarray(leaf_counts, np.int64).reshape(len(leaf_counts), n_classes))


def save_model(model: ForestModel, path) -> None:
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "n_features": model.n_features,
        "classes": [int(c) for c in model.classes],
        "hyperparams": asdict(model.hyperparams),
        "trees": [_node_record(t, 0) for t in model.trees],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
                          newline="\n")


def load_model(path) -> ForestModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise DataError(f"{path}: not a {FORMAT_TAG} model file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: incompatible model version {doc.get('version')!r}, "
                        f"expected {FORMAT_VERSION}")
    try:
        n_features = int(doc["n_features"])
        classes = np.asarray([int(c) for c in doc["classes"]], dtype=np.int64)
        hp = ForestHyperparams(**doc["hyperparams"])
        trees = [_tree_from_record(r, n_features, len(classes)) for r in doc["trees"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed model document: {exc}") from exc
    if len(trees) == 0:
        raise DataError(f"{path}: model has no trees")
    return ForestModel(trees, classes, hp, n_features)
