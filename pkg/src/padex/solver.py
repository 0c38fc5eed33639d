"""Replicator-style coalition solver with inertia and myopia.

Each agent i carries a propensity p_i in [0, 1] to join the coalition. One
revision step draws a Bernoulli(rho) gate per agent (inertia: ungated agents
keep their propensity) and moves gated agents along the replicator direction

    p_i <- clamp(p_i + eta * p_i * (1 - p_i) * g_i, 0, 1)

where g_i is the expected payoff of joining, taken over the other agents
joining independently with their current propensities (myopia: gains are
always evaluated against the present state). The expectation is enumerated
exactly over all 2^(N-1) partner subsets for N <= 12 and estimated by Monte
Carlo above that. Propensity vectors in {0, 1}^N are fixed points.

Besides the dynamics, the module offers a direct self-enforcement check
(is_nash_stable) and an exhaustive search for stable coalitions used as a
test oracle (brute_force_stable).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rng import mix64
from .errors import ConfigError, GuardError
from .game import (
    PayoffParams,
    SwarmInstance,
    agent_payoff,
    coalition_welfare,
    penalty_matrix,
    quality_vector,
)

ENUM_MAX_AGENTS = 12  # exact expectation up to here, Monte Carlo beyond
_MASK63 = (1 << 63) - 1


@dataclass(frozen=True)
class SolverConfig:
    """Revision-dynamics knobs.

    eta         replicator step size
    rho         per-agent revision probability (inertia gate)
    eps_conv    propensities within this distance of {0, 1} count as converged
    max_iters   step budget before giving up
    init_jitter half-width of the uniform jitter around the 0.5 start
    mc_samples  Monte Carlo draws for the expectation fallback (N > 12)
    """

    eta: float = 0.2
    rho: float = 0.5
    eps_conv: float = 1e-3
    max_iters: int = 3000
    init_jitter: float = 0.1
    mc_samples: int = 256

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError("eta must be > 0")
        if not (0 < self.rho <= 1):
            raise ConfigError("rho must be in (0, 1]")
        if not (0 < self.eps_conv < 0.5):
            raise ConfigError("eps_conv must be in (0, 0.5)")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not (0 <= self.init_jitter < 0.5):
            raise ConfigError("init_jitter must be in [0, 0.5)")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")


@dataclass(frozen=True)
class GameSolution:
    """Converged (or abandoned) state of the dynamics on one instance."""

    coalition: int
    converged: bool
    iterations: int
    propensities: np.ndarray
    welfare: float


@njit(cache=True, nogil=True)
def _gain_enum(i, p, quality, penalty, kappa):
    # exact expectation of pi_i(S u {i}) over 2^(N-1) partner subsets
    n = p.shape[0]
    k = n - 1
    acc = 0.0
    for m in range(1 << k):
        w = 1.0
        cost = 0.0
        size = 0
        b = 0
        for j in range(n):
            if j == i:
                continue
            if (m >> b) & 1:
                w *= p[j]
                cost += penalty[i, j]
                size += 1
            else:
                w *= 1.0 - p[j]
            b += 1
        acc += w * (quality[i] - cost - kappa * size)
    return acc


@njit(cache=True, nogil=True)
def _gain_mc(i, p, quality, penalty, kappa, uniforms):
    # uniforms: (samples, N); column i is ignored
    n = p.shape[0]
    samples = uniforms.shape[0]
    acc = 0.0
    for t in range(samples):
        cost = 0.0
        size = 0
        for j in range(n):
            if j == i:
                continue
            if uniforms[t, j] < p[j]:
                cost += penalty[i, j]
                size += 1
        acc += quality[i] - cost - kappa * size
    return acc / samples


@njit(cache=True, nogil=True)
def _step_enum(p, gates, quality, penalty, kappa, eta, rho):
    # synchronous gated update; gains use the pre-step propensities
    n = p.shape[0]
    out = p.copy()
    for i in range(n):
        if gates[i] < rho:
            g = _gain_enum(i, p, quality, penalty, kappa)
            v = p[i] + eta * p[i] * (1.0 - p[i]) * g
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            out[i] = v
    return out


@njit(cache=True, nogil=True)
def _near_pure(p, eps):
    for i in range(p.shape[0]):
        if eps < p[i] < 1.0 - eps:
            return False
    return True


@njit(cache=True, nogil=True)
def _solve_enum(p0, gates, quality, penalty, kappa, eta, rho, eps_conv):
    p = p0.copy()
    iters = 0
    done = _near_pure(p, eps_conv)
    while not done and iters < gates.shape[0]:
        p = _step_enum(p, gates[iters], quality, penalty, kappa, eta, rho)
        iters += 1
        done = _near_pure(p, eps_conv)
    return p, iters, done


def _check_propensities(propensities, n: int) -> np.ndarray:
    p = np.asarray(propensities, dtype=np.float64)
    if p.shape != (n,):
        raise ConfigError(f"expected {n} propensities, got shape {p.shape}")
    if np.any(p < 0) or np.any(p > 1):
        raise ConfigError("propensities must lie in [0, 1]")
    return p


def expected_join_gain(i: int, propensities, inst: SwarmInstance, params: PayoffParams,
                       cfg: SolverConfig | None = None,
                       rng: np.random.Generator | None = None) -> float:
    """Expected payoff agent i would earn by joining, partners joining
    independently with their current propensities.

    Exact enumeration for N <= 12. Beyond that, Monte Carlo with
    cfg.mc_samples draws; the fallback is deterministic, with the stream
    derived from (i, propensities) unless an explicit rng is passed.
    """
    n = inst.n_agents
    if not (0 <= i < n):
        raise ConfigError(f"agent index out of range for N={n}")
    p = _check_propensities(propensities, n)
    quality = quality_vector(inst, params)
    penalty = penalty_matrix(inst, params)
    if n <= ENUM_MAX_AGENTS:
        return float(_gain_enum(i, p, quality, penalty, params.kappa))
    cfg = cfg or SolverConfig()
    if rng is None:
        rng = np.random.default_rng(mix64("join-gain", i, p))
    uniforms = rng.random((cfg.mc_samples, n))
    return float(_gain_mc(i, p, quality, penalty, params.kappa, uniforms))


def step(propensities, inst: SwarmInstance, params: PayoffParams, cfg: SolverConfig,
         rng: np.random.Generator) -> np.ndarray:
    """One revision round. Draws N gate uniforms from rng; gated agents move
    along the replicator direction, the rest keep their propensity."""
    n = inst.n_agents
    p = _check_propensities(propensities, n)
    gates = rng.random(n)
    quality = quality_vector(inst, params)
    penalty = penalty_matrix(inst, params)
    if n <= ENUM_MAX_AGENTS:
        return _step_enum(p, gates, quality, penalty, params.kappa, cfg.eta, cfg.rho)
    out = p.copy()
    for i in range(n):
        if gates[i] < cfg.rho:
            uniforms = rng.random((cfg.mc_samples, n))
            g = _gain_mc(i, p, quality, penalty, params.kappa, uniforms)
            out[i] = min(1.0, max(0.0, p[i] + cfg.eta * p[i] * (1.0 - p[i]) * g))
    return out


def solve(inst: SwarmInstance, params: PayoffParams, cfg: SolverConfig,
          seed: int) -> GameSolution:
    """Run the dynamics from a jittered 0.5 start until every propensity is
    within eps_conv of 0 or 1, or the step budget runs out.

    Deterministic for a fixed (instance, params, cfg, seed). Non-convergence
    is reported through ``converged=False``, not an exception.
    """
    n = inst.n_agents
    rng = np.random.default_rng(int(seed) & _MASK63)
    p0 = 0.5 + rng.uniform(-cfg.init_jitter, cfg.init_jitter, n)
    quality = quality_vector(inst, params)
    penalty = penalty_matrix(inst, params)
    if n <= ENUM_MAX_AGENTS:
        gates = rng.random((cfg.max_iters, n))
        p, iters, done = _solve_enum(p0, gates, quality, penalty,
                                     params.kappa, cfg.eta, cfg.rho, cfg.eps_conv)
    else:
        p = p0
        iters = 0
        done = bool(_near_pure(p, cfg.eps_conv))
        while not done and iters < cfg.max_iters:
            p = step(p, inst, params, cfg, rng)
            iters += 1
            done = bool(_near_pure(p, cfg.eps_conv))
    coalition = 0
    for i in range(n):
        if p[i] > 0.5:
            coalition |= 1 << i
    return GameSolution(
        coalition=coalition,
        converged=bool(done),
        iterations=int(iters),
        propensities=p,
        welfare=coalition_welfare(coalition, inst, params),
    )


def is_nash_stable(coalition: int, inst: SwarmInstance, params: PayoffParams) -> bool:
    """Self-enforcement: no member earns < 0 and no outsider would gain by
    joining."""
    n = inst.n_agents
    for i in range(n):
        if (coalition >> i) & 1:
            if agent_payoff(i, coalition, inst, params) < 0:
                return False
        else:
            if agent_payoff(i, coalition | (1 << i), inst, params) > 0:
                return False
    return True


def brute_force_stable(inst: SwarmInstance, params: PayoffParams) -> list[int]:
    """All Nash-stable coalitions, ascending bitmask order. Exhaustive over
    2^N coalitions; guarded to N <= 16."""
    n = inst.n_agents
    if n > 16:
        raise GuardError(f"brute_force_stable enumerates 2^N coalitions; N={n} > 16")
    return [mask for mask in range(1 << n) if is_nash_stable(mask, inst, params)]
