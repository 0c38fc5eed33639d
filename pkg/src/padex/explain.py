"""Shapley-value attributions over the surrogate forest.

The cooperative game behind an explanation: a feature coalition S "plays" by
fixing the explained sample's values on S while the remaining features are
imputed from a background set drawn from clean training data, and the payout
is the model's mean predicted probability for a target class over those
composites (the interventional value function)

    v(S) = (1/B) * sum_b predict_proba(composite(x on S, bg_b elsewhere))[class].

shapley_exact enumerates all 2^d subset values once per sample and combines
marginal contributions with the usual k!(d-1-k)!/d! weights; it is the
default at d = 10 and guarded to d <= 15. shapley_sampled walks M random
feature permutations instead and accumulates prefix marginals; when M equals
d! (and d <= 8) the permutations are enumerated exhaustively, which makes the
estimator coincide with the exact values.

A fingerprint compresses per-sample attributions of a model's own predicted
class into the aggregates used for diagnosis: per-sample signed mean effects
e_k = mean_j phi_kj and per-feature importances I_j = mean_k |phi_kj|.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from ._rng import mix64
from .data import Dataset
from .errors import ConfigError, DataError, GuardError
from .forest import ForestModel, predict_many
from .stats import label_distribution

EXACT_MAX_FEATURES = 15
_ALL_PERMS_MAX_D = 8  # d! permutations are enumerated only up to here
_MASK63 = (1 << 63) - 1


@dataclass(frozen=True)
class Attribution:
    """Per-feature Shapley values for one sample and one target class."""

    phi: np.ndarray
    base_value: float
    full_value: float
    target_class: int
    method: str
    sample_count: int = 0


@dataclass(frozen=True)
class BackgroundSet:
    rows: np.ndarray
    seed: int


@dataclass(eq=False)
class BehaviorFingerprint:
    """Aggregate attribution statistics characterizing a model's behavior."""

    per_sample_mean_effect: np.ndarray
    per_feature_importance: np.ndarray
    predicted_distribution: dict
    accuracy: float
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.per_sample_mean_effect.shape[0]

    @property
    def n_features(self) -> int:
        return self.per_feature_importance.shape[0]


@njit(cache=True, nogil=True)
def _composite_value(x, bg, in_s, feat, thr, left, right, leaf_of, leaf_freq,
                     node_off, leaf_off, class_idx):
    # v(S): traverse with x[f] where in_s[f], background value elsewhere;
    # composites are never materialized
    n_bg = bg.shape[0]
    n_trees = node_off.shape[0] - 1
    acc = 0.0
    for b in range(n_bg):
        tacc = 0.0
        for t in range(n_trees):
            base = node_off[t]
            node = 0
            while feat[base + node] >= 0:
                f = feat[base + node]
                xv = x[f] if in_s[f] else bg[b, f]
                if xv <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            tacc += leaf_freq[leaf_off[t] + leaf_of[base + node], class_idx]
        acc += tacc / n_trees
    return acc / n_bg


@njit(cache=True, nogil=True)
def _subset_table(x, bg, d, feat, thr, left, right, leaf_of, leaf_freq,
                  node_off, leaf_off, class_idx):
    # All 2^d subset values from one DFS per (tree, background row): a node
    # is tagged with the subset family reaching it (must-contain and
    # must-avoid masks), children both composite sources skip are pruned,
    # and each leaf scatters its frequency over the matching subcube.
    # Equivalent to traversing every composite but visits each tree region
    # once instead of 2^d times.
    full = (1 << d) - 1
    acc = np.zeros(1 << d)
    n_bg = bg.shape[0]
    n_trees = node_off.shape[0] - 1
    max_nodes = 0
    for t in range(n_trees):
        span = node_off[t + 1] - node_off[t]
        if span > max_nodes:
            max_nodes = span
    stack_node = np.empty(max_nodes + 2, np.int64)
    stack_must = np.empty(max_nodes + 2, np.int64)
    stack_forb = np.empty(max_nodes + 2, np.int64)
    for t in range(n_trees):
        base = node_off[t]
        lbase = leaf_off[t]
        for b in range(n_bg):
            stack_node[0] = 0
            stack_must[0] = 0
            stack_forb[0] = 0
            top = 1
            while top > 0:
                top -= 1
                node = stack_node[top]
                must = stack_must[top]
                forb = stack_forb[top]
                f = feat[base + node]
                if f < 0:
                    freq = leaf_freq[lbase + leaf_of[base + node], class_idx]
                    free = full & ~(must | forb)
                    sub = free
                    while True:
                        acc[must | sub] += freq
                        if sub == 0:
                            break
                        sub = (sub - 1) & free
                else:
                    bit = 1 << f
                    xl = x[f] <= thr[base + node]
                    bl = bg[b, f] <= thr[base + node]
                    if xl == bl:
                        # both sources take the same branch, family intact
                        if xl:
                            stack_node[top] = left[base + node]
                        else:
                            stack_node[top] = right[base + node]
                        stack_must[top] = must
                        stack_forb[top] = forb
                        top += 1
                    else:
                        if xl:
                            x_child = left[base + node]
                            b_child = right[base + node]
                        else:
                            x_child = right[base + node]
                            b_child = left[base + node]
                        if forb & bit == 0:
                            stack_node[top] = x_child
                            stack_must[top] = must | bit
                            stack_forb[top] = forb
                            top += 1
                        if must & bit == 0:
                            stack_node[top] = b_child
                            stack_must[top] = must
                            stack_forb[top] = forb | bit
                            top += 1
    return acc / (n_trees * n_bg)


@njit(cache=True, nogil=True)
def _phi_from_table(v, w, d):
    phi = np.zeros(d)
    for s in range(v.shape[0]):
        k = 0
        t = s
        while t:
            k += t & 1
            t >>= 1
        for j in range(d):
            if (s >> j) & 1 == 0:
                phi[j] += w[k] * (v[s | (1 << j)] - v[s])
    return phi


@njit(cache=True, nogil=True)
def _perm_phi_from_table(v, perms):
    n_perm, d = perms.shape
    phi = np.zeros(d)
    for m in range(n_perm):
        s = 0
        vprev = v[0]
        for pos in range(d):
            j = perms[m, pos]
            s |= 1 << j
            phi[j] += v[s] - vprev
            vprev = v[s]
    return phi / n_perm


@njit(cache=True, nogil=True)
def _permutation_phi(x, bg, perms, feat, thr, left, right, leaf_of, leaf_freq,
                     node_off, leaf_off, class_idx):
    n_perm, d = perms.shape
    phi = np.zeros(d)
    in_s = np.zeros(d, np.bool_)
    for m in range(n_perm):
        for f in range(d):
            in_s[f] = False
        vprev = _composite_value(x, bg, in_s, feat, thr, left, right, leaf_of,
                                 leaf_freq, node_off, leaf_off, class_idx)
        for pos in range(d):
            j = perms[m, pos]
            in_s[j] = True
            vcur = _composite_value(x, bg, in_s, feat, thr, left, right, leaf_of,
                                    leaf_freq, node_off, leaf_off, class_idx)
            phi[j] += vcur - vprev
            vprev = vcur
    return phi / n_perm


def sample_background(train: Dataset, size: int, seed: int) -> BackgroundSet:
    """Draw the imputation baseline from the clean rows of a training set."""
    if size < 1:
        raise ConfigError("background size must be >= 1")
    clean = train.features[~train.poisoned_flags]
    if clean.shape[0] == 0:
        raise DataError("no clean rows to sample a background from")
    rng = np.random.default_rng(int(seed) & _MASK63)
    idx = rng.choice(clean.shape[0], size=size, replace=size > clean.shape[0])
    return BackgroundSet(np.ascontiguousarray(clean[idx]), int(seed))


def _class_index(model: ForestModel, target: int) -> int:
    pos = int(np.searchsorted(model.classes, target))
    if pos >= len(model.classes) or model.classes[pos] != target:
        raise ConfigError(f"class {target} not among the model's {len(model.classes)} classes")
    return pos


def _check_inputs(model: ForestModel, x, bg: BackgroundSet):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ConfigError(f"expected {model.n_features} features, got shape {x.shape}")
    if bg.rows.ndim != 2 or bg.rows.shape[1] != model.n_features:
        raise ConfigError("background dimension does not match the model")
    return x


def value_function(subset, x, model: ForestModel, bg: BackgroundSet,
                   target: int) -> float:
    """v(S) for an explicit feature subset."""
    x = _check_inputs(model, x, bg)
    d = model.n_features
    in_s = np.zeros(d, dtype=np.bool_)
    for f in set(subset):
        f = int(f)
        if not (0 <= f < d):
            raise ConfigError(f"feature index {f} out of range for d={d}")
        in_s[f] = True
    return float(_composite_value(x, bg.rows, in_s, *model.flat(),
                                  _class_index(model, target)))


def shapley_exact(x, model: ForestModel, bg: BackgroundSet, target: int) -> Attribution:
    """Exact Shapley attribution by full subset enumeration (2^d values)."""
    x = _check_inputs(model, x, bg)
    d = model.n_features
    if d > EXACT_MAX_FEATURES:
        raise GuardError(f"exact enumeration needs 2^{d} subset values; "
                         f"d > {EXACT_MAX_FEATURES}, use shapley_sampled")
    class_idx = _class_index(model, target)
    v = _subset_table(x, bg.rows, d, *model.flat(), class_idx)
    w = np.array([math.factorial(k) * math.factorial(d - 1 - k) / math.factorial(d)
                  for k in range(d)])
    phi = _phi_from_table(v, w, d)
    return Attribution(phi, float(v[0]), float(v[-1]), int(target), "exact")


def shapley_sampled(x, model: ForestModel, bg: BackgroundSet, target: int,
                    permutations: int, seed: int) -> Attribution:
    """Permutation-sampling Shapley estimate, deterministic per seed.

    With permutations == d! (for d <= 8) all orderings are enumerated instead
    of drawn, and the estimate equals the exact attribution. While d is
    within the exact guard the prefix marginals are looked up in the full
    subset table (same values, one tree pass instead of one per evaluation);
    past the guard each value query walks the composites directly.
    """
    x = _check_inputs(model, x, bg)
    if permutations < 1:
        raise ConfigError("permutations must be >= 1")
    d = model.n_features
    class_idx = _class_index(model, target)
    if d <= _ALL_PERMS_MAX_D and permutations == math.factorial(d):
        perms = np.array(list(itertools.permutations(range(d))), dtype=np.int64)
    else:
        rng = np.random.default_rng(int(seed) & _MASK63)
        perms = np.stack([rng.permutation(d) for _ in range(permutations)]).astype(np.int64)
    flat = model.flat()
    if d <= EXACT_MAX_FEATURES:
        v = _subset_table(x, bg.rows, d, *flat, class_idx)
        phi = _perm_phi_from_table(v, perms)
        base = float(v[0])
        full = float(v[-1])
    else:
        phi = _permutation_phi(x, bg.rows, perms, *flat, class_idx)
        base = float(_composite_value(x, bg.rows, np.zeros(d, np.bool_), *flat, class_idx))
        full = float(_composite_value(x, bg.rows, np.ones(d, np.bool_), *flat, class_idx))
    return Attribution(phi, base, full, int(target), "sampled", int(permutations))


def attribute_samples(model: ForestModel, samples, bg: BackgroundSet,
                      targets=None, method: str = "exact",
                      permutations: int = 200, seed: int = 0) -> list[Attribution]:
    """Attribution per sample row; targets default to the model's own
    predictions. Sampled runs derive a per-sample permutation stream from
    (seed, row index)."""
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != model.n_features:
        raise ConfigError(f"expected (*, {model.n_features}) samples, got {samples.shape}")
    if method not in ("exact", "sampled"):
        raise ConfigError(f"unknown attribution method {method!r}")
    if targets is None:
        targets = predict_many(model, samples)
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (samples.shape[0],):
        raise ConfigError("one target class per sample required")
    out = []
    for k in range(samples.shape[0]):
        if method == "exact":
            out.append(shapley_exact(samples[k], model, bg, int(targets[k])))
        else:
            out.append(shapley_sampled(samples[k], model, bg, int(targets[k]),
                                       permutations, mix64("perm", seed, k)))
    return out


def fingerprint(model: ForestModel, samples, bg: BackgroundSet, labels=None,
                method: str = "exact", permutations: int = 200,
                seed: int = 0) -> BehaviorFingerprint:
    """Explain each sample's own predicted class and aggregate.

    accuracy is NaN when no reference labels are supplied.
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    preds = predict_many(model, samples)
    attrs = attribute_samples(model, samples, bg, targets=preds,
                              method=method, permutations=permutations, seed=seed)
    phi = np.stack([a.phi for a in attrs])
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (samples.shape[0],):
            raise ConfigError("labels must match the sample count")
        acc = float(np.mean(preds == labels))
    else:
        acc = float("nan")
    hp = model.hyperparams
    meta = {
        "method": method,
        "permutations": int(permutations) if method == "sampled" else 0,
        "seed": int(seed),
        "model_seed": hp.seed,
        "n_trees": hp.n_trees,
        "bg_seed": bg.seed,
        "bg_size": int(bg.rows.shape[0]),
        "k": int(samples.shape[0]),
        "d": int(samples.shape[1]),
    }
    return BehaviorFingerprint(
        per_sample_mean_effect=phi.mean(axis=1),
        per_feature_importance=np.abs(phi).mean(axis=0),
        predicted_distribution=label_distribution(preds),
        accuracy=acc,
        meta=meta,
    )


def save_attributions_csv(attrs: list, path) -> None:
    """Flat export: one row per sample, phi columns then base/full/class."""
    if not attrs:
        raise DataError("no attributions to save")
    d = attrs[0].phi.shape[0]
    header = [f"phi{j}" for j in range(d)] + ["base_value", "full_value", "target_class"]
    lines = [",".join(header)]
    for a in attrs:
        cells = [repr(float(v)) for v in a.phi]
        cells.append(repr(float(a.base_value)))
        cells.append(repr(float(a.full_value)))
        cells.append(str(int(a.target_class)))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
