"""Coalition-formation game for cooperative point sampling on a grid.

A swarm of agents sits on a G x G grid together with one point of interest
(PoI). Any subset of agents (a coalition, encoded as a bitmask over agent
indices) can jointly sample the PoI. Each member earns an individual payoff

    pi_i(S) = s_i - beta * sum_{j in S, j != i} max(0, cos_ij) - kappa * (|S| - 1)

where s_i = exp(-d_i / lambda) is the member's sampling quality (decaying
with distance d_i to the PoI), cos_ij is the cosine similarity of the two
members' viewing directions from the PoI (overlapping viewpoints are
penalised, opposite ones are not), and kappa charges a coordination overhead
per extra partner. Non-members earn 0. The hinge on the cosine keeps payoffs
bounded: angular diversity is rewarded by the absence of a penalty, never by
a bonus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ConfigError


class Position(NamedTuple):
    """A point on the grid, in grid units."""

    x: float
    y: float


@dataclass(frozen=True)
class PayoffParams:
    """Constants of the payoff function.

    Defaults are calibrated on the default 20x20 grid so that induced
    coalition labels stay diverse (dozens of distinct stable coalitions,
    none dominant) while remaining learnable by the surrogate forest.

    lam      distance-decay length of the sampling quality, grid units
    beta     weight of the pairwise similarity penalty
    kappa    coordination overhead charged per coalition partner
    eps_dist clamp applied to near-zero distances (keeps quality and
             direction vectors defined when an agent sits on the PoI)
    """

    lam: float = 2.0
    beta: float = 0.04
    kappa: float = 0.08
    eps_dist: float = 1e-6

    def __post_init__(self):
        for name in ("lam", "beta", "kappa", "eps_dist"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"payoff parameter {name} must be finite")
        if self.lam <= 0:
            raise ConfigError("lam must be > 0")
        if self.beta < 0 or self.kappa < 0:
            raise ConfigError("beta and kappa must be >= 0")
        if self.eps_dist <= 0:
            raise ConfigError("eps_dist must be > 0")


@dataclass(frozen=True)
class SwarmInstance:
    """One game board: agent positions, the PoI and the grid size.

    Agent order is identity: index i in any coalition bitmask refers to
    ``agents[i]``. Positions are stored as a read-only (N, 2) float array.
    """

    agents: np.ndarray
    poi: np.ndarray
    grid_side: int

    def __init__(self, agents, poi, grid_side: int):
        pos = np.atleast_2d(np.asarray(agents, dtype=np.float64))
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ConfigError("agents must be an (N, 2) array with N >= 1")
        poi_arr = np.asarray(poi, dtype=np.float64).reshape(2)
        grid_side = int(grid_side)
        if grid_side < 2:
            raise ConfigError("grid_side must be >= 2")
        hi = grid_side - 1
        if np.any(pos < 0) or np.any(pos > hi):
            raise ConfigError(f"agent positions must lie within [0, {hi}]^2")
        if np.any(poi_arr < 0) or np.any(poi_arr > hi):
            raise ConfigError(f"poi must lie within [0, {hi}]^2")
        pos.setflags(write=False)
        poi_arr.setflags(write=False)
        object.__setattr__(self, "agents", pos)
        object.__setattr__(self, "poi", poi_arr)
        object.__setattr__(self, "grid_side", grid_side)

    @property
    def n_agents(self) -> int:
        return self.agents.shape[0]


# --- coalition bitmask helpers ---

def coalition_of(indices: Iterable[int]) -> int:
    """Bitmask for the coalition containing exactly the given agent indices."""
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


def coalition_members(mask: int) -> list[int]:
    """Agent indices in the coalition, ascending."""
    out = []
    i = 0
    while mask >> i:
        if (mask >> i) & 1:
            out.append(i)
        i += 1
    return out


def coalition_size(mask: int) -> int:
    return int(mask).bit_count()


# --- payoff ingredients ---

def sampling_quality(agent, poi, params: PayoffParams) -> float:
    """Quality of one agent's view of the PoI: exp(-d / lam), d clamped below.

    Always in (0, 1]; the clamp makes the coincident case well defined.
    """
    a = np.asarray(agent, dtype=np.float64)
    p = np.asarray(poi, dtype=np.float64)
    d = float(np.hypot(a[0] - p[0], a[1] - p[1]))
    d = max(d, params.eps_dist)
    return math.exp(-d / params.lam)


def pairwise_similarity(i: int, j: int, inst: SwarmInstance, params: PayoffParams) -> float:
    """Cosine of the two agents' unit direction vectors from the PoI.

    Returns 0 when either agent is closer to the PoI than eps_dist (its
    direction is undefined there).
    """
    if i == j:
        raise ConfigError("pairwise_similarity needs two distinct agents")
    n = inst.n_agents
    if not (0 <= i < n and 0 <= j < n):
        raise ConfigError(f"agent index out of range for N={n}")
    u = inst.agents[i] - inst.poi
    v = inst.agents[j] - inst.poi
    du = math.hypot(u[0], u[1])
    dv = math.hypot(v[0], v[1])
    if du < params.eps_dist or dv < params.eps_dist:
        return 0.0
    return float((u[0] * v[0] + u[1] * v[1]) / (du * dv))


def agent_payoff(i: int, coalition: int, inst: SwarmInstance, params: PayoffParams) -> float:
    """Payoff of agent i under the given coalition; 0 for non-members."""
    if not (0 <= i < inst.n_agents):
        raise ConfigError(f"agent index out of range for N={inst.n_agents}")
    if not (coalition >> i) & 1:
        return 0.0
    s = sampling_quality(inst.agents[i], inst.poi, params)
    penalty = 0.0
    size = 0
    for j in coalition_members(coalition):
        size += 1
        if j != i:
            penalty += max(0.0, pairwise_similarity(i, j, inst, params))
    return s - params.beta * penalty - params.kappa * (size - 1)


def coalition_welfare(coalition: int, inst: SwarmInstance, params: PayoffParams) -> float:
    """Total payoff over coalition members; the empty coalition is worth 0."""
    return sum(agent_payoff(i, coalition, inst, params) for i in coalition_members(coalition))


# --- vectorised forms used by the solver and the poisoner ---

def quality_vector(inst: SwarmInstance, params: PayoffParams) -> np.ndarray:
    """(N,) sampling qualities of all agents."""
    diff = inst.agents - inst.poi
    d = np.hypot(diff[:, 0], diff[:, 1])
    return np.exp(-np.maximum(d, params.eps_dist) / params.lam)


def penalty_matrix(inst: SwarmInstance, params: PayoffParams) -> np.ndarray:
    """(N, N) matrix of beta * max(0, cos_ij) with a zero diagonal.

    Agents within eps_dist of the PoI contribute zero similarity, matching
    pairwise_similarity.
    """
    diff = inst.agents - inst.poi
    d = np.hypot(diff[:, 0], diff[:, 1])
    safe = d >= params.eps_dist
    inv = np.where(safe, 1.0 / np.where(safe, d, 1.0), 0.0)
    unit = diff * inv[:, None]
    cos = unit @ unit.T
    pen = params.beta * np.maximum(0.0, cos)
    np.fill_diagonal(pen, 0.0)
    return pen


def welfare_from_parts(coalition: int, quality: np.ndarray, penalty: np.ndarray,
                       kappa: float) -> float:
    """coalition_welfare computed from precomputed quality/penalty parts."""
    members = coalition_members(coalition)
    if not members:
        return 0.0
    idx = np.asarray(members)
    k = len(members)
    per_agent = quality[idx] - penalty[np.ix_(idx, idx)].sum(axis=1) - kappa * (k - 1)
    return float(per_agent.sum())
