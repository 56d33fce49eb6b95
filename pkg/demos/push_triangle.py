"""Push a cloud of samples out of a small 2D complex and draw before/after scenes.

Run:  python3 demos/push_triangle.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from polypush import SetModel, SimplicialComplex, run
from polypush.measure import K_constants
from polypush.render import render_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

# two triangles sharing the edge (1, 2); Q is the whole complex
V = [[0, 0], [1, 0], [0, 1], [1, 1]]
cx = SimplicialComplex(V, [(0, 1, 2), (1, 2, 3)])
cx = cx.with_q(range(len(cx)))

# a short arc of samples crossing both triangles, each carrying H^1 weight
rng = np.random.default_rng(0)
u = np.sort(rng.uniform(0.15, 0.85, 40))
arc = np.c_[u, 0.3 + 0.4 * u + 0.05 * np.sin(6 * u)]
S = SetModel.from_points(cx, arc, weights=np.full(len(arc), 0.7 / len(arc)), a=1.0)

res = run(cx, S, seed=1)
print(f"pushes: {res.stats['pushes']}")
print(f"H^1 mass in Q: {res.stats['mass_initial']:.4f} -> {res.stats['mass_final']:.4f}")
print(f"bound K: {K_constants(cx, 1.0).K:.1f}")
for rec in res.transport.records:
    print(f"  sigma={cx.simplices[rec.sigma]} rank {rec.rank_before} -> {rec.rank_after}")

first = res.transport.records[0].cone if res.transport.records else None
(out / "before.svg").write_text(render_svg(cx, S, first))
(out / "after.svg").write_text(render_svg(cx, res.S_tilde))
print(f"wrote {out / 'before.svg'} and {out / 'after.svg'}")
