"""Watch the replicator dynamics settle on one instance.

Steps the propensity vector by hand to show the trajectory, then lets
solve() run to convergence and cross-checks the answer against brute force.
"""

import numpy as np

import padex as px


def main():
    rng = np.random.default_rng(6)
    pos = rng.integers(0, 12, size=(4, 2)).astype(float)
    inst = px.SwarmInstance(pos, (5.5, 5.5), 12)
    params = px.PayoffParams()
    cfg = px.SolverConfig()

    print("agents:", [(int(x), int(y)) for x, y in pos])
    p = np.full(4, 0.5)
    step_rng = np.random.default_rng(0)
    for it in range(501):
        if it % 50 == 0:
            print(f"  iter {it:3d}: propensities " +
                  " ".join(f"{v:.3f}" for v in p))
        p = px.step(p, inst, params, cfg, step_rng)

    sol = px.solve(inst, params, cfg, seed=0)
    members = px.coalition_members(sol.coalition)
    print(f"\nsolve(): coalition {members} after {sol.iterations} iterations "
          f"(converged={sol.converged})")
    print(f"welfare {sol.welfare:.4f}, nash stable: "
          f"{px.is_nash_stable(sol.coalition, inst, params)}")

    stable = px.brute_force_stable(inst, params)
    print("all stable coalitions by brute force:",
          [px.coalition_members(m) for m in stable])


if __name__ == "__main__":
    main()
