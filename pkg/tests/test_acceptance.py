"""Acceptance gate: the seven criteria the lab has to clear.

Each test computes its criterion, prints a single PASS/FAIL line, and then
asserts, so the teed pytest log doubles as the acceptance report.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
import scipy.stats

import padex as px
from conftest import random_instance
from padex._rng import mix64
from padex.cli import RunConfig
from padex.forest import predict_many

LEVELS = [0.0, 0.10, 0.20, 0.30, 0.40]
SEEDS = [0, 1, 2]


def report(n: int, ok: bool, detail: str):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def sweep15(pipeline_split, default_params, default_solver, run_forest):
    cells = px.severity_sweep(pipeline_split, LEVELS, SEEDS, default_params,
                              default_solver, run_forest, background_size=50,
                              fingerprint_samples=100, alpha=0.05,
                              method="exact", seed=0, jobs=1)
    return {(c.level, c.seed): c for c in cells}


@pytest.fixture(scope="module")
def bg50(pipeline_split):
    return px.sample_background(pipeline_split.train, 50, mix64("background", 0))


def test_criterion_1_clean_surrogate_quality():
    cfg = RunConfig()  # N=5, G=20, n=10000, 80/20 split, default forest
    started = time.monotonic()
    ds = px.generate(cfg.n_rows, cfg.n_agents, cfg.grid_side, cfg.payoff,
                     cfg.solver, cfg.seed)
    sp = px.split(ds, cfg.test_fraction, mix64("split", cfg.seed))
    model = px.train(sp.train, cfg.forest)
    acc = px.accuracy(model, sp.test)
    elapsed = time.monotonic() - started
    report(1, acc >= 0.80 and elapsed <= 600.0,
           f"test accuracy {acc:.4f}, {elapsed:.1f}s single-threaded")


def test_criterion_2_poisoning_degradation(sweep15):
    min_drop = math.inf
    max_rho = -math.inf
    for s in SEEDS:
        clean_acc = sweep15[(0.0, s)].accuracy
        drop = clean_acc - sweep15[(0.40, s)].accuracy
        min_drop = min(min_drop, drop)
        accs = [sweep15[(l, s)].accuracy for l in LEVELS]
        rho = scipy.stats.spearmanr(LEVELS, accs).statistic
        max_rho = max(max_rho, rho)
    report(2, min_drop >= 0.10 and max_rho <= -0.7,
           f"min accuracy drop at 0.40 is {min_drop:.3f}, "
           f"worst spearman {max_rho:.2f}")


def test_criterion_3_diagnosis_significance(sweep15):
    ok = True
    max_p40 = 0.0
    for s in SEEDS:
        p40 = sweep15[(0.40, s)].p
        p10 = sweep15[(0.10, s)].p
        max_p40 = max(max_p40, p40)
        ok = ok and p40 < 0.05 and p40 < p10
    report(3, ok, f"max p(0.40) over {len(SEEDS)} seeds is {max_p40:.2e}, "
                  f"p(0.40) < p(0.10) per seed")


def test_criterion_4_shapley_correctness(pipeline_split, clean_model, bg50,
                                         default_params, default_solver):
    test_ds = pipeline_split.test
    rng = np.random.default_rng(14)

    # efficiency on 100 random samples
    rows = rng.choice(test_ds.n_rows, size=100, replace=False)
    samples = np.ascontiguousarray(test_ds.features[rows])
    targets = predict_many(clean_model, samples)
    eff_err = 0.0
    for x, c in zip(samples, targets):
        a = px.shapley_exact(x, clean_model, bg50, int(c))
        eff_err = max(eff_err, abs(a.base_value + a.phi.sum() - a.full_value))

    # a constant column can never be split on, so its phi must vanish
    X = rng.integers(0, 6, size=(150, 4)).astype(float)
    X[:, 2] = 3.0
    y = (X[:, 0] > X[:, 1]).astype(int)
    toy_ds = px.Dataset(X, y, np.zeros(150, bool), {})
    toy = px.train(toy_ds, px.ForestHyperparams(n_trees=5, seed=0))
    toy_bg = px.sample_background(toy_ds, 10, seed=1)
    dummy_ok = True
    for r in range(10):
        c = int(predict_many(toy, X[r][None])[0])
        dummy_ok = dummy_ok and px.shapley_exact(X[r], toy, toy_bg, c).phi[2] == 0.0

    # all-permutation sampling collapses onto the exact values at d=4
    ds4 = px.generate(150, 2, 8, default_params, default_solver, seed=3)
    model4 = px.train(ds4, px.ForestHyperparams(n_trees=20, seed=2))
    bg4 = px.sample_background(ds4, 15, seed=4)
    perm_err = 0.0
    for r in range(10):
        x = ds4.features[r]
        c = int(predict_many(model4, x[None])[0])
        exact = px.shapley_exact(x, model4, bg4, c)
        sampled = px.shapley_sampled(x, model4, bg4, c,
                                     permutations=math.factorial(4), seed=0)
        perm_err = max(perm_err, float(np.max(np.abs(sampled.phi - exact.phi))))

    # more permutations must estimate better on a fixed panel at d=10
    panel = np.ascontiguousarray(test_ds.features[rows[:20]])
    exact_phi = np.stack([a.phi for a in px.attribute_samples(
        clean_model, panel, bg50, method="exact")])
    mae = {}
    for m in (50, 500):
        phi = np.stack([a.phi for a in px.attribute_samples(
            clean_model, panel, bg50, method="sampled", permutations=m, seed=2)])
        mae[m] = float(np.mean(np.abs(phi - exact_phi)))

    ok = eff_err <= 1e-9 and dummy_ok and perm_err <= 1e-9 and mae[500] < mae[50]
    report(4, ok, f"efficiency err {eff_err:.1e}, dummy phi exact zero: "
                  f"{dummy_ok}, all-perm gap {perm_err:.1e}, "
                  f"MAE {mae[50]:.5f} -> {mae[500]:.5f}")


def test_criterion_5_solver_soundness(default_params, default_solver):
    rng = np.random.default_rng(42)
    converged = stable = 0
    membership_ok = True
    for i in range(200):
        inst = random_instance(rng, n_agents=5, grid=20)
        sol = px.solve(inst, default_params, default_solver, mix64("acc5", i))
        if not sol.converged:
            continue
        converged += 1
        if px.is_nash_stable(sol.coalition, inst, default_params):
            stable += 1
            membership_ok = membership_ok and (
                sol.coalition in px.brute_force_stable(inst, default_params))

    def stable_by_hand(inst):
        out = []
        for mask in range(1 << inst.n_agents):
            ok = all(px.agent_payoff(i, mask, inst, default_params) >= 0
                     for i in range(inst.n_agents) if (mask >> i) & 1)
            ok = ok and all(
                px.agent_payoff(i, mask | (1 << i), inst, default_params) <= 0
                for i in range(inst.n_agents) if not (mask >> i) & 1)
            if ok:
                out.append(mask)
        return out

    oracle_ok = all(
        px.brute_force_stable(inst, default_params) == stable_by_hand(inst)
        for inst in (random_instance(rng, n_agents=4, grid=12) for _ in range(50)))

    frac = stable / converged if converged else 0.0
    ok = converged > 0 and frac >= 0.90 and membership_ok and oracle_ok
    report(5, ok, f"{stable}/{converged} converged solutions Nash-stable "
                  f"({frac:.1%}), brute-force membership {membership_ok}, "
                  f"N=4 oracle agreement {oracle_ok}")


def test_criterion_6_statistics_oracle():
    rng = np.random.default_rng(12)
    exact = True
    for _ in range(1000):
        n1, n2 = int(rng.integers(1, 31)), int(rng.integers(1, 31))
        if rng.random() < 0.5:
            xs = rng.integers(0, 6, size=n1).astype(float)
            ys = rng.integers(0, 6, size=n2).astype(float)
        else:
            xs = rng.normal(size=n1)
            ys = rng.normal(size=n2) + rng.normal()
        u = sum(1.0 if x > y else 0.5 if x == y else 0.0
                for x in xs for y in ys)
        exact = exact and px.mann_whitney_u(xs, ys).u == u
    same = px.mann_whitney_u([3.0, 1.0, 4.0], [3.0, 1.0, 4.0])
    sep = px.mann_whitney_u([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    ok = (exact and same.p_two_sided == 1.0 and sep.u == 0.0
          and abs(sep.p_two_sided - 0.1) <= 0.03)
    report(6, ok, f"1000 pair-count cases exact: {exact}, identical p = "
                  f"{same.p_two_sided}, separation p = {sep.p_two_sided:.4f}")


def test_criterion_7_pipeline_determinism(tmp_path):
    cfg = {
        "experiment": "determinism",
        "n_agents": 4,
        "grid_side": 12,
        "n_rows": 120,
        "seed": 0,
        "test_fraction": 0.25,
        "background_size": 10,
        "fingerprint_samples": 15,
        "levels": [0.0, 0.25],
        "seeds": [0],
        "forest": {"n_trees": 8, "max_depth": 8, "mtry": 3},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outs = [tmp_path / n for n in ("a", "b", "c")]
    for out, jobs in zip(outs, ("1", "1", "3")):
        res = subprocess.run(
            [sys.executable, "-m", "padex.cli", "pipeline", "--config",
             str(cfg_path), "--out", str(out), "--jobs", jobs],
            capture_output=True, text=True, timeout=600)
        assert res.returncode == 0, res.stderr
    artifacts = ["dataset.csv", "train.csv", "test.csv", "model.json",
                 "sweep.csv", "reports.json"]
    ok = all((outs[0] / a).read_bytes() == (outs[1] / a).read_bytes()
             and (outs[0] / a).read_bytes() == (outs[2] / a).read_bytes()
             for a in artifacts)
    report(7, ok, f"{len(artifacts)} artifacts byte-identical across a rerun "
                  f"and --jobs 3")