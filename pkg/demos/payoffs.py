"""Payoff anatomy on a tiny hand-built swarm.

Five agents on a 10x10 grid, PoI in the middle. Shows how sampling quality,
the crowding penalty and the coordination cost add up to per-agent payoffs
and coalition welfare.
"""

import numpy as np

import padex as px

agents = np.array([
    [4.0, 4.0],   # nearly on top of the PoI
    [5.0, 5.0],   # mirror of agent 0 on the far side of the PoI
    [0.0, 4.0],   # west edge, approaches from agent 0's side
    [9.0, 9.0],   # far corner
    [4.0, 0.0],   # south edge
])
inst = px.SwarmInstance(agents, (4.5, 4.5), 10)
params = px.PayoffParams()

print("quality per agent (exp(-distance/lambda)):")
for i in range(inst.n_agents):
    q = px.sampling_quality(agents[i], inst.poi, params)
    print(f"  agent {i} at ({agents[i][0]:g}, {agents[i][1]:g}): {q:.4f}")

print("\ncosine similarity of PoI-relative positions (crowding driver):")
sim = np.eye(inst.n_agents)
for i in range(inst.n_agents):
    for j in range(inst.n_agents):
        if i != j:
            sim[i, j] = px.pairwise_similarity(i, j, inst, params)
print(np.array_str(sim, precision=3, suppress_small=True))

for members in [(0,), (0, 1), (0, 2), (0, 1, 2), (0, 1, 2, 3, 4)]:
    mask = px.coalition_of(members)
    pays = [px.agent_payoff(i, mask, inst, params) for i in members]
    w = px.coalition_welfare(mask, inst, params)
    print(f"\ncoalition {members} (mask {mask:05b})")
    for i, p in zip(members, pays):
        print(f"  payoff agent {i}: {p:+.4f}")
    print(f"  welfare: {w:+.4f}")

print("\nagents 0 and 1 flank the PoI from opposite sides (cos -1), so pairing")
print("them costs only the coordination fee. agent 2 comes in on agent 0's")
print("side (cos 0.78): crowding plus coordination eats its modest quality and")
print("its payoff goes negative, which is why no stable coalition wants it.")
