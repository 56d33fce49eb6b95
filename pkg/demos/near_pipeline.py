"""Approximate a point cloud by a subcomplex: subdivide below eps/2, then push.

Every point of the result sits within eps of the input, and the final set is
a union of closed simplices of the subdivision (here: flagged vertices and
edges).

Run:  python3 demos/near_pipeline.py
"""

import numpy as np

from polypush import SetModel, SimplicialComplex, approximate_near

V = [[0, 0], [2, 0], [0, 2], [2, 2]]
cx = SimplicialComplex(V, [(0, 1, 2), (1, 2, 3)])

rng = np.random.default_rng(5)
th = rng.uniform(0, np.pi / 2, 60)
circle = np.c_[0.2 + 1.4 * np.cos(th), 0.2 + 1.4 * np.sin(th)]
S = SetModel.from_points(cx, circle, weights=np.full(60, 2.2 / 60), a=1.0)

eps = 0.8
res = approximate_near(cx, S, eps=eps, seed=0)
final = res.result.S_tilde
P = final.point_set(res.complex)
d = np.linalg.norm(circle[:, None, :] - P[None, :, :], axis=2).min(axis=1)

print(f"subdivision rounds: {res.rounds}, thickness t0 = {res.t0:.4f}")
print(f"pushes: {res.result.stats['pushes']}")
print(f"flagged simplices: {len(final.full)}, loose samples left in Q: {len(final.in_q(res.complex))}")
print(f"max distance from an input point to the result's vertices: {d.max():.3f} (eps = {eps})")
