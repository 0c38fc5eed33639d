"""Feature-perturbation poisoning: fake coordinates, sub-optimal labels.

The attacker augments a clean training set with m synthetic rows so the
poisoned rows make up the requested fraction of the final set:

    m = ceil(level * n / (1 - level))

which puts the realized fraction in [level, level + 1/(n+m)). Each synthetic
row draws agent positions from the same lattice distribution as clean data
(a stealthy attacker stays in-distribution), then attaches a deliberately bad
label: a coalition different from the solver's answer for those positions
with strictly lower welfare.

Which qualifying label the attacker picks matters a great deal. Random
strictly-worse coalitions scatter the corruption across many labels and a
bagged forest simply averages them away. This attacker instead deploys the
best strictly-worse singleton, a rival rule ("send the runner-up agent
alone") that is as spatially coherent and as learnable as the true labeling,
so the surrogate absorbs it and degrades across the whole grid. When no
singleton qualifies the attacker falls back to the best strictly-worse
coalition of any size (enumerated exactly for small swarms, otherwise the
best of max_resample random candidates), and if nothing qualifies at all,
to any different label, counting the row in the `poison_fallbacks` metadata
entry.

Clean rows are preserved verbatim and in order; poisoning only appends.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rng import mix64
from .data import Dataset, label_seed
from .errors import ConfigError, DataError
from .game import (PayoffParams, SwarmInstance, coalition_welfare,
                   penalty_matrix, quality_vector, welfare_from_parts)
from .solver import SolverConfig, solve

_SOLVE_ATTEMPTS = 1000  # redraws of one synthetic row on non-convergence
_ENUM_MAX_AGENTS = 12  # exhaustive candidate scan up to 2^12 masks


@dataclass(frozen=True)
class PoisonConfig:
    """Attack severity and randomness.

    level is the poisoned fraction of the final training set, capped below
    0.5 (beyond that the attack stops being an augmentation of a mostly-clean
    set and the severity grid tops out at 0.40 anyway).
    """

    level: float
    seed: int
    max_resample: int = 100

    def __post_init__(self):
        if not (0 <= self.level < 0.5):
            raise ConfigError(f"poison level must be in [0, 0.5), got {self.level}")
        if self.max_resample < 1:
            raise ConfigError("max_resample must be >= 1")


def injected_count(n: int, level: float) -> int:
    """Rows to append so poisoned/(n+m) lands in [level, level + 1/(n+m)).

    Exact rational arithmetic on the decimal literal, so e.g. level=0.2 with
    n=800 gives m=200 rather than falling to float rounding.
    """
    frac = Fraction(str(level))
    if frac == 0:
        return 0
    m = frac * n / (1 - frac)
    return int(-(-m.numerator // m.denominator))


def poison(train: Dataset, cfg: PoisonConfig, params: PayoffParams,
           solver_cfg: SolverConfig) -> Dataset:
    """Append cfg.level worth of poisoned rows to a clean training set.

    Deterministic per cfg.seed; synthetic row j depends only on
    (cfg.seed, j), so lower levels produce a prefix of higher ones.
    """
    if train.n_rows == 0:
        raise DataError("cannot poison an empty training set")
    if bool(train.poisoned_flags.any()):
        raise DataError("training set already contains poisoned rows")
    n_agents = train.meta.get("n_agents")
    grid_side = train.meta.get("grid_side")
    if n_agents is None or grid_side is None:
        raise DataError("dataset meta lacks n_agents/grid_side; cannot poison")
    n = train.n_rows
    m = injected_count(n, cfg.level)
    meta = dict(train.meta)
    meta["poison_level"] = float(cfg.level)
    meta["poison_seed"] = int(cfg.seed)
    meta["poison_fallbacks"] = 0
    if m == 0:
        return Dataset(train.features.copy(), train.labels.copy(),
                       train.poisoned_flags.copy(), meta)

    center = ((grid_side - 1) / 2.0, (grid_side - 1) / 2.0)
    fake_features = np.empty((m, 2 * n_agents))
    fake_labels = np.empty(m, dtype=np.int64)
    n_masks = 1 << n_agents
    # label fakes with the same position -> label function used on clean rows
    gen_seed = train.meta.get("seed", cfg.seed)
    fallbacks = 0
    for j in range(m):
        for attempt in range(_SOLVE_ATTEMPTS):
            rng = np.random.default_rng(mix64("poison-row", cfg.seed, j, attempt))
            pos = rng.integers(0, grid_side, size=(n_agents, 2)).astype(np.float64)
            inst = SwarmInstance(pos, center, grid_side)
            sol = solve(inst, params, solver_cfg, label_seed(gen_seed, pos))
            if sol.converged:
                break
        else:
            raise DataError(f"poison row {j}: solver never converged in "
                            f"{_SOLVE_ATTEMPTS} attempts")
        # best strictly-worse singleton first; ties broken by lower mask
        label = -1
        singles = sorted(((coalition_welfare(1 << i, inst, params), -(1 << i))
                          for i in range(n_agents)), reverse=True)
        for w, neg in singles:
            cand = -neg
            if cand != sol.coalition and w < sol.welfare:
                label = cand
                break
        if label < 0 and n_agents <= _ENUM_MAX_AGENTS:
            # no qualifying singleton: all masks by descending welfare, first
            # qualifying candidate is the best sub-optimal coalition. The
            # parts form only orders the scan; acceptance re-checks against
            # the canonical welfare so strictness is exact.
            quality = quality_vector(inst, params)
            penalty = penalty_matrix(inst, params)
            welfares = np.array([welfare_from_parts(c, quality, penalty, params.kappa)
                                 for c in range(n_masks)])
            order = np.argsort(-welfares, kind="stable")
            examined = 0
            for cand in order:
                cand = int(cand)
                if cand == sol.coalition:
                    continue
                examined += 1
                if coalition_welfare(cand, inst, params) < sol.welfare:
                    label = cand
                    break
                if examined >= cfg.max_resample:
                    break
        elif label < 0:
            best_welfare = -np.inf
            for _ in range(cfg.max_resample):
                cand = int(rng.integers(0, n_masks))
                if cand == sol.coalition:
                    continue
                w = coalition_welfare(cand, inst, params)
                if w < sol.welfare and w > best_welfare:
                    label = cand
                    best_welfare = w
        if label < 0:  # no strictly-worse candidate found: any different label
            label = 0 if sol.coalition != 0 else 1
            fallbacks += 1
        fake_features[j] = pos.reshape(-1)
        fake_labels[j] = label
    meta["poison_fallbacks"] = fallbacks
    return Dataset(
        np.vstack([train.features, fake_features]),
        np.concatenate([train.labels, fake_labels]),
        np.concatenate([train.poisoned_flags, np.ones(m, dtype=bool)]),
        meta,
    )


def severity_grid() -> list[float]:
    """The experiment grid: 10% to 40% in 5% increments."""
    return [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40]
