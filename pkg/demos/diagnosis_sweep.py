"""The full diagnosis loop: poison, retrain, fingerprint, test, verdict.

A smaller replica of the CLI pipeline's sweep so it runs in seconds; writes
sweep.csv and reports.json into demo_out/.
"""

from pathlib import Path

import padex as px


def main():
    params = px.PayoffParams()
    solver = px.SolverConfig()
    hp = px.ForestHyperparams(n_trees=40, mtry=3, seed=0)

    ds = px.generate(600, 4, 12, params, solver, seed=0)
    sp = px.split(ds, 0.25, seed=1)

    cells = px.severity_sweep(sp, [0.0, 0.1, 0.2, 0.3, 0.4], [0, 1], params,
                              solver, hp, background_size=20,
                              fingerprint_samples=60, alpha=0.05, seed=0)

    print("level  seed  accuracy      U        p      verdict")
    for c in cells:
        print(f"{c.level:.2f}   {c.seed}     {c.accuracy:.3f}   {c.u:7.1f}  "
              f"{c.p:8.2e}  {c.verdict}")

    out = Path("demo_out")
    out.mkdir(exist_ok=True)
    px.save_sweep_csv(cells, out / "sweep.csv")
    px.save_reports_json(cells, out / "reports.json")
    print(f"\nwrote {out / 'sweep.csv'} and {out / 'reports.json'}")


if __name__ == "__main__":
    main()
