"""Labeled datasets of solved coalition games.

A row is one random swarm layout: N agents dropped independently and
uniformly on the integer lattice {0,...,G-1}^2, the point of interest pinned
to the arena center ((G-1)/2, (G-1)/2). The feature vector is the flattened
agent positions (x0, y0, ..., x_{N-1}, y_{N-1}), d = 2N columns; the label is
the coalition bitmask the solver settled on. Rows whose dynamics fail to
converge, or converge onto a coalition that is not self-enforcing, are
resampled under a global retry budget, so every emitted label is a stable
solver output.

Persistence is plain CSV (17 significant digits, exact float round-trip)
with a JSON sidecar `<name>.meta.json` carrying the generation parameters.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._rng import mix64
from .errors import ConfigError, DataError
from .game import PayoffParams, SwarmInstance
from .solver import SolverConfig, is_nash_stable, solve

_MASK63 = (1 << 63) - 1


@dataclass(eq=False)
class Dataset:
    """Feature matrix plus labels, poison flags, and provenance metadata."""

    features: np.ndarray
    labels: np.ndarray
    poisoned_flags: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.poisoned_flags = np.asarray(self.poisoned_flags, dtype=bool)
        if self.features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n, d = self.features.shape
        if d % 2 != 0 or d == 0:
            raise DataError(f"feature dimension must be a positive even number, got {d}")
        if self.labels.shape != (n,) or self.poisoned_flags.shape != (n,):
            raise DataError("features, labels and poisoned_flags disagree on row count")
        limit = 1 << (d // 2)
        if n and (self.labels.min() < 0 or self.labels.max() >= limit):
            raise DataError(f"labels must be coalition bitmasks below 2^{d // 2}")
        g = self.meta.get("grid_side")
        if g is not None and n:
            if self.features.min() < 0 or self.features.max() > g - 1:
                raise DataError(f"features must lie within [0, {g - 1}]")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_agents(self) -> int:
        return self.features.shape[1] // 2


@dataclass(eq=False)
class Split:
    train: Dataset
    test: Dataset
    test_fraction: float
    seed: int


def label_seed(master_seed: int, positions: np.ndarray) -> int:
    """Solve seed for an instance: master seed mixed with the coordinates,
    so identical layouts always receive identical labels."""
    return mix64("solve", master_seed, np.ascontiguousarray(positions, dtype=np.float64))


def row_instance(ds: Dataset, r: int) -> SwarmInstance:
    """Rebuild the game instance behind row r (PoI at the arena center)."""
    g = ds.meta.get("grid_side")
    if g is None:
        raise DataError("dataset meta lacks grid_side; cannot rebuild instances")
    agents = ds.features[r].reshape(-1, 2)
    center = ((g - 1) / 2.0, (g - 1) / 2.0)
    return SwarmInstance(agents, center, g)


def generate(n: int, n_agents: int, grid_side: int, params: PayoffParams,
             solver_cfg: SolverConfig, seed: int,
             retry_budget: int | None = None) -> Dataset:
    """Sample and solve n instances into a labeled dataset.

    Deterministic per seed: row r draws positions from a stream derived from
    (seed, r, attempt), so the output is independent of evaluation order, and
    the solve seed is derived from (seed, positions), which makes the
    position -> label mapping a pure function of the coordinates. A row is
    accepted once its solve converged and the coalition re-checks as
    Nash-stable; otherwise the row is redrawn. The total attempt budget
    defaults to 10*n.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if n_agents < 1:
        raise ConfigError("n_agents must be >= 1")
    if grid_side < 2:
        raise ConfigError("grid_side must be >= 2")
    budget = 10 * n if retry_budget is None else int(retry_budget)
    features = np.empty((n, 2 * n_agents))
    labels = np.empty(n, dtype=np.int64)
    center = ((grid_side - 1) / 2.0, (grid_side - 1) / 2.0)
    attempts = 0
    for r in range(n):
        attempt = 0
        while True:
            attempts += 1
            if attempts > budget:
                raise DataError(
                    f"retry budget exhausted after {attempts - 1} attempts "
                    f"({r} of {n} rows done)")
            rng = np.random.default_rng(mix64("row", seed, r, attempt))
            pos = rng.integers(0, grid_side, size=(n_agents, 2)).astype(np.float64)
            inst = SwarmInstance(pos, center, grid_side)
            sol = solve(inst, params, solver_cfg, label_seed(seed, pos))
            if sol.converged and is_nash_stable(sol.coalition, inst, params):
                features[r] = pos.reshape(-1)
                labels[r] = sol.coalition
                break
            attempt += 1
    meta = {
        "n_agents": n_agents,
        "grid_side": grid_side,
        "payoff": asdict(params),
        "solver": asdict(solver_cfg),
        "seed": int(seed),
        "poison_level": 0.0,
    }
    return Dataset(features, labels, np.zeros(n, dtype=bool), meta)


def split(ds: Dataset, test_fraction: float, seed: int) -> Split:
    """Uniform random train/test partition, deterministic per seed."""
    if not (0 < test_fraction < 1):
        raise ConfigError("test_fraction must be in (0, 1)")
    n = ds.n_rows
    if n < 2:
        raise DataError("need at least 2 rows to split")
    n_test = int(round(n * test_fraction))
    if n_test == 0 or n_test == n:
        raise DataError(f"fraction {test_fraction} leaves an empty side for {n} rows")
    perm = np.random.default_rng(int(seed) & _MASK63).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])

    def take(idx):
        return Dataset(ds.features[idx], ds.labels[idx],
                       ds.poisoned_flags[idx], dict(ds.meta))

    return Split(take(train_idx), take(test_idx), test_fraction, int(seed))


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def save_csv(ds: Dataset, path) -> None:
    """Write the dataset as CSV plus a `<name>.meta.json` sidecar."""
    path = Path(path)
    n_agents = ds.n_agents
    cols = [c for i in range(n_agents) for c in (f"x{i}", f"y{i}")]
    header = ",".join(cols + ["label", "poisoned"])
    lines = [header]
    for r in range(ds.n_rows):
        cells = [format(v, ".17g") for v in ds.features[r]]
        cells.append(str(int(ds.labels[r])))
        cells.append("1" if ds.poisoned_flags[r] else "0")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    _sidecar(path).write_text(json.dumps(ds.meta, indent=2, sort_keys=True) + "\n",
                              newline="\n")


def load_csv(path) -> Dataset:
    """Inverse of save_csv. Errors name the offending row and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    cols = lines[0].split(",")
    if len(cols) < 4 or cols[-2:] != ["label", "poisoned"]:
        raise DataError(f"{path}: malformed header {lines[0]!r}")
    n_agents, rem = divmod(len(cols) - 2, 2)
    expected = [c for i in range(n_agents) for c in (f"x{i}", f"y{i}")]
    if rem != 0 or cols[:-2] != expected:
        raise DataError(f"{path}: malformed header {lines[0]!r}")
    if len(lines) < 2:
        raise DataError(f"{path}: no data rows")
    n = len(lines) - 1
    features = np.empty((n, 2 * n_agents))
    labels = np.empty(n, dtype=np.int64)
    flags = np.empty(n, dtype=bool)
    for r, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(cols):
            raise DataError(f"{path}: row {r} has {len(cells)} cells, expected {len(cols)}")
        for j in range(2 * n_agents):
            try:
                features[r, j] = float(cells[j])
            except ValueError:
                raise DataError(f"{path}: row {r}, column {cols[j]}: "
                                f"non-numeric cell {cells[j]!r}") from None
        try:
            label = int(cells[-2])
        except ValueError:
            raise DataError(f"{path}: row {r}, column label: "
                            f"non-integer cell {cells[-2]!r}") from None
        if not (0 <= label < (1 << n_agents)):
            raise DataError(f"{path}: row {r}, column label: bitmask {label} "
                            f"out of range for N={n_agents}")
        labels[r] = label
        if cells[-1] not in ("0", "1"):
            raise DataError(f"{path}: row {r}, column poisoned: expected 0 or 1, "
                            f"got {cells[-1]!r}")
        flags[r] = cells[-1] == "1"
    side = _sidecar(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    return Dataset(features, labels, flags, meta)
