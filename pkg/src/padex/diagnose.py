"""Fingerprint comparison and the poison-severity sweep.

A deployment is judged by holding its behavior fingerprint against the
benign reference: the Mann-Whitney U test on the two per-sample mean-effect
vectors decides the verdict (poisoned iff p < alpha), while the
predicted-distribution shift (total variation) and the accuracy gap are
carried along as corroborating evidence only.

severity_sweep replays the whole attack grid: for each (level, seed) cell the
clean training set is poisoned, the surrogate retrained with identical
hyperparameters, fingerprinted on the same test samples against the same
background, and compared to the clean fingerprint. Cells are independent
jobs; results are assembled in (level, seed) order, so the table is
bit-for-bit reproducible regardless of worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import mix64
from .data import Split
from .errors import ConfigError
from .explain import BehaviorFingerprint, fingerprint, sample_background
from .forest import ForestHyperparams, accuracy, train
from .game import PayoffParams
from .poison import PoisonConfig, poison
from .solver import SolverConfig
from .stats import UTestResult, mann_whitney_u, tv_distance


@dataclass(frozen=True)
class DiagnosisReport:
    u_result: UTestResult
    accuracy_clean: float
    accuracy_deployed: float
    tv_shift: float
    alpha: float
    verdict: str  # "clean" | "poisoned"


@dataclass(frozen=True)
class SweepCell:
    """One (level, seed) grid cell. accuracy is the deployed model's score on
    the full test set; the report's accuracies cover the fingerprint samples."""

    level: float
    seed: int
    accuracy: float
    report: DiagnosisReport

    @property
    def p(self) -> float:
        return self.report.u_result.p_two_sided

    @property
    def u(self) -> float:
        return self.report.u_result.u

    @property
    def verdict(self) -> str:
        return self.report.verdict


def compare(clean_fp: BehaviorFingerprint, deployed_fp: BehaviorFingerprint,
            alpha: float = 0.05) -> DiagnosisReport:
    """Render a verdict for a deployed fingerprint against the benign one."""
    if not (0 < alpha < 1):
        raise ConfigError("alpha must be in (0, 1)")
    if clean_fp.n_samples != deployed_fp.n_samples:
        raise ConfigError("fingerprints cover different sample counts")
    if clean_fp.n_features != deployed_fp.n_features:
        raise ConfigError("fingerprints cover different feature counts")
    u = mann_whitney_u(clean_fp.per_sample_mean_effect,
                       deployed_fp.per_sample_mean_effect)
    tv = tv_distance(clean_fp.predicted_distribution,
                     deployed_fp.predicted_distribution)
    verdict = "poisoned" if u.p_two_sided < alpha else "clean"
    return DiagnosisReport(u, clean_fp.accuracy, deployed_fp.accuracy,
                           tv, alpha, verdict)


def severity_sweep(sp: Split, levels, seeds, params: PayoffParams,
                   solver_cfg: SolverConfig, hp: ForestHyperparams, *,
                   background_size: int = 50, fingerprint_samples: int = 100,
                   alpha: float = 0.05, method: str = "exact",
                   permutations: int = 200, seed: int = 0,
                   jobs: int = 1) -> list[SweepCell]:
    """Poison, retrain, fingerprint, and compare over the (level, seed) grid.

    The cell seed doubles as the poison seed. Level-0 cells reuse the clean
    model and fingerprint outright, since a zero-level attack changes nothing.
    """
    levels = [float(l) for l in levels]
    for l in levels:
        if not (0 <= l < 0.5):
            raise ConfigError(f"poison level {l} outside [0, 0.5)")
    seeds = [int(s) for s in seeds]
    if not levels or not seeds:
        raise ConfigError("need at least one level and one seed")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")

    clean_model = train(sp.train, hp)
    clean_acc = accuracy(clean_model, sp.test)
    bg = sample_background(sp.train, background_size, mix64("background", seed))
    n_test = sp.test.n_rows
    k = min(fingerprint_samples, n_test)
    rng = np.random.default_rng(mix64("fp-rows", seed))
    rows = np.sort(rng.choice(n_test, size=k, replace=False))
    samples = np.ascontiguousarray(sp.test.features[rows])
    sample_labels = sp.test.labels[rows]
    clean_fp = fingerprint(clean_model, samples, bg, labels=sample_labels,
                           method=method, permutations=permutations,
                           seed=mix64("fp", seed, "clean"))

    def run_cell(cell) -> SweepCell:
        level, cell_seed = cell
        if level == 0:
            return SweepCell(level, cell_seed, clean_acc,
                             compare(clean_fp, clean_fp, alpha))
        poisoned = poison(sp.train, PoisonConfig(level, cell_seed),
                          params, solver_cfg)
        deployed = train(poisoned, hp)
        dep_fp = fingerprint(deployed, samples, bg, labels=sample_labels,
                             method=method, permutations=permutations,
                             seed=mix64("fp", seed, cell_seed, format(level, ".6g")))
        return SweepCell(level, cell_seed, accuracy(deployed, sp.test),
                         compare(clean_fp, dep_fp, alpha))

    grid = [(l, s) for l in levels for s in seeds]
    if jobs == 1:
        return [run_cell(c) for c in grid]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, grid))


def save_sweep_csv(cells: list, path) -> None:
    """Plot-ready flat table, one row per cell."""
    lines = ["level,seed,accuracy,U,p,tv,verdict"]
    for c in cells:
        lines.append(",".join([
            repr(float(c.level)), str(int(c.seed)), repr(float(c.accuracy)),
            repr(float(c.u)), repr(float(c.p)),
            repr(float(c.report.tv_shift)), c.verdict,
        ]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def save_reports_json(cells: list, path) -> None:
    """Full per-cell diagnosis reports."""
    docs = []
    for c in cells:
        r = c.report
        u = r.u_result
        docs.append({
            "level": float(c.level),
            "seed": int(c.seed),
            "accuracy": float(c.accuracy),
            "report": {
                "u_result": {
                    "u": float(u.u), "z": float(u.z),
                    "p_two_sided": float(u.p_two_sided),
                    "n1": u.n1, "n2": u.n2,
                    "tie_corrected": u.tie_corrected,
                },
                "accuracy_clean": float(r.accuracy_clean),
                "accuracy_deployed": float(r.accuracy_deployed),
                "tv_shift": float(r.tv_shift),
                "alpha": float(r.alpha),
                "verdict": r.verdict,
            },
        })
    Path(path).write_text(json.dumps(docs, indent=2, sort_keys=True) + "\n",
                          newline="\n")
