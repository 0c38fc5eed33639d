"""Shapley fingerprints of a clean versus a poisoned surrogate.

One attribution close up (with the efficiency identity), then aggregate
fingerprints and the Mann-Whitney verdict on their mean-effect vectors.
"""

import numpy as np

import padex as px

params = px.PayoffParams()
solver = px.SolverConfig()
hp = px.ForestHyperparams(n_trees=50, mtry=3, seed=0)

ds = px.generate(600, 4, 12, params, solver, seed=0)
sp = px.split(ds, 0.25, seed=1)
clean = px.train(sp.train, hp)
dirty_train = px.poison(sp.train, px.PoisonConfig(0.3, seed=0), params, solver)
deployed = px.train(dirty_train, hp)

bg = px.sample_background(sp.train, 25, seed=2)
x = sp.test.features[0]
attr = px.shapley_exact(x, clean, bg, px.predict(clean, x))
print("one exact attribution (8 features = 4 agents x 2 coords):")
print("  phi:", " ".join(f"{v:+.4f}" for v in attr.phi))
print(f"  base {attr.base_value:.4f} + sum(phi) {attr.phi.sum():+.4f} "
      f"= full {attr.full_value:.4f}  (efficiency gap "
      f"{abs(attr.base_value + attr.phi.sum() - attr.full_value):.1e})")

samples = sp.test.features[:60]
labels = sp.test.labels[:60]
fp_clean = px.fingerprint(clean, samples, bg, labels=labels)
fp_dirty = px.fingerprint(deployed, samples, bg, labels=labels)

names = [f"{c}{i}" for i in range(4) for c in ("x", "y")]
print("\nper-feature importance, clean vs deployed:")
for j in np.argsort(-fp_clean.per_feature_importance):
    print(f"  {names[j]}: {fp_clean.per_feature_importance[j]:.4f}  "
          f"{fp_dirty.per_feature_importance[j]:.4f}")

rep = px.compare(fp_clean, fp_dirty, alpha=0.05)
print(f"\nU = {rep.u_result.u:.1f}, p = {rep.u_result.p_two_sided:.2e}, "
      f"tv shift {rep.tv_shift:.3f}")
print(f"accuracy {rep.accuracy_clean:.3f} -> {rep.accuracy_deployed:.3f}")
print(f"verdict: {rep.verdict}")
