"""Degrade the surrogate with graded label poisoning.

Retrains the same forest on training sets with 0..40% injected rows and
prints the accuracy trajectory, plus a look at what one poisoned row claims.
"""

import padex as px
from padex.data import label_seed, row_instance


def main():
    params = px.PayoffParams()
    solver = px.SolverConfig()
    hp = px.ForestHyperparams(n_trees=50, mtry=3, seed=0)

    ds = px.generate(800, 4, 12, params, solver, seed=0)
    sp = px.split(ds, 0.2, seed=1)

    print("level  rows   test accuracy")
    for level in [0.0, 0.1, 0.2, 0.3, 0.4]:
        dirty = px.poison(sp.train, px.PoisonConfig(level, seed=0), params, solver)
        model = px.train(dirty, hp)
        print(f"{level:.2f}   {dirty.n_rows:5d}  {px.accuracy(model, sp.test):.3f}")

    dirty = px.poison(sp.train, px.PoisonConfig(0.3, seed=0), params, solver)
    r = int(dirty.poisoned_flags.argmax())  # first injected row
    inst = row_instance(dirty, r)
    honest = px.solve(inst, params, solver, label_seed(ds.meta["seed"], inst.agents))
    fake = int(dirty.labels[r])
    print(f"\nrow {r} was injected: label claims {px.coalition_members(fake)} "
          f"(welfare {px.coalition_welfare(fake, inst, params):.3f})")
    print(f"the solver actually picks {px.coalition_members(honest.coalition)} "
          f"(welfare {honest.welfare:.3f})")


if __name__ == "__main__":
    main()
