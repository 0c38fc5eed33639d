"""Generate a labeled dataset of solved games and train the surrogate."""

import time

import padex as px

params = px.PayoffParams()
solver = px.SolverConfig()

t0 = time.time()
ds = px.generate(800, 4, 12, params, solver, seed=0)
print(f"generated {ds.n_rows} solved instances in {time.time() - t0:.1f}s")

dist = px.label_distribution(ds.labels)
print(f"{len(dist)} distinct coalition labels; most common:")
for mask, share in sorted(dist.items(), key=lambda kv: -kv[1])[:5]:
    print(f"  {px.coalition_members(mask)}: {share:.1%}")

sp = px.split(ds, 0.2, seed=1)
model = px.train(sp.train, px.ForestHyperparams(n_trees=50, mtry=3, seed=0))
print(f"\nforest: {model.hyperparams.n_trees} trees over "
      f"{len(model.classes)} classes")
print(f"train accuracy {px.accuracy(model, sp.train):.3f}")
print(f"test accuracy  {px.accuracy(model, sp.test):.3f}")

# a few predictions next to the ground truth
print("\nsample predictions:")
for r in range(4):
    x = sp.test.features[r]
    pred = px.predict(model, x)
    truth = int(sp.test.labels[r])
    mark = "ok " if pred == truth else "MISS"
    print(f"  {mark} agents at {[(int(a), int(b)) for a, b in x.reshape(-1, 2)]}"
          f" -> predicted {px.coalition_members(pred)},"
          f" solver says {px.coalition_members(truth)}")
