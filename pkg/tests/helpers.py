"""Random complexes, set models and simplices shared by the test modules."""

from functools import lru_cache

import numpy as np
from scipy.spatial import Delaunay

from polypush.complex_core import Simplex, SimplicialComplex
from polypush.pushout import SetModel, cone_build

CRITERIA = {}


def record(key, ok, detail=""):
    """Log one pass/fail line for an acceptance criterion."""
    line = f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[key] = line
    print(line)
    return ok


def random_simplex(rng, n, N=None, min_thickness=0.08, scale=1.0):
    N = n if N is None else N
    while True:
        V = rng.normal(size=(n + 1, N)) * scale
        s = Simplex(tuple(range(n + 1)), V)
        if s.independent() and s.thickness >= min_thickness:
            return s


def random_cone(rng, sigma, k=3, faces=()):
    """Cone from a central-ish apex over k random interior points."""
    n = sigma.dim
    while True:
        z = rng.dirichlet(np.full(n + 1, 4.0)) @ sigma.coords
        A = rng.dirichlet(np.ones(n + 1), k) @ sigma.coords
        if np.linalg.norm(A - z, axis=1).min() > 0.05 * sigma.diameter:
            return cone_build(sigma, z, A, faces)


def _jittered_grid(rng, dim):
    if dim == 2:
        g = np.array([[i, j] for i in range(3) for j in range(3)], float)
    else:
        g = np.array([[i, j, k] for i in range(2) for j in range(2) for k in range(2)], float)
        g = np.vstack([g, [[0.5, 0.5, 0.5]]])
    return g + rng.uniform(-0.15, 0.15, g.shape)


def random_complex(rng, dim, q_frac=0.7):
    """Delaunay triangulation of a jittered grid with a random closed Q."""
    while True:
        P = _jittered_grid(rng, dim)
        tri = Delaunay(P)
        cx = SimplicialComplex.canonical(P, [tuple(s) for s in tri.simplices])
        tops = [i for i in range(len(cx)) if cx.dims[i] == dim]
        if min(cx.simplex(i).thickness for i in tops) < 0.03:
            continue
        q = [i for i in tops if rng.random() < q_frac] or tops[:1]
        return cx.with_q(q)


def random_set(rng, cx, k, a=1.0, n_flags=2, low_flags=True):
    """Samples in the interiors of random simplices of dim >= 1, plus a few low-dimensional flags."""
    ids = [i for i in range(len(cx)) if cx.dims[i] >= 1]
    pts, car, w = [], [], []
    for _ in range(k):
        c = ids[rng.integers(len(ids))]
        s = cx.simplex(c)
        pts.append(rng.dirichlet(np.ones(s.dim + 1)) @ s.coords)
        car.append(c)
        w.append(rng.uniform(0.01, 0.1))
    cap = int(np.floor(a)) if low_flags else cx.dim
    flag_ids = [i for i in range(len(cx)) if cx.dims[i] <= cap]
    flags = [flag_ids[j] for j in rng.choice(len(flag_ids), size=min(n_flags, len(flag_ids)), replace=False)]
    pts = np.array(pts).reshape(-1, cx.ambient_dim)
    return SetModel(a, pts, np.array(car, int), np.array(w), frozenset(flags)).normalized(cx)


@lru_cache(maxsize=None)
def corpus(count=50, seed=2024):
    """(complex, set) pairs: half 2D, half 3D, with up to 200 samples each."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        dim = 2 if i % 2 == 0 else 3
        cx = random_complex(rng, dim)
        k = int(rng.integers(1, 201))
        out.append((cx, random_set(rng, cx, k)))
    return out


def dist_to_simplex(x, coords):
    """Distance from x to conv(coords) by enumerating faces (small simplices only)."""
    import itertools

    best = np.inf
    m = len(coords)
    for r in range(1, m + 1):
        for sub in itertools.combinations(range(m), r):
            Q = coords[list(sub)]
            if r == 1:
                best = min(best, np.linalg.norm(x - Q[0]))
                continue
            D = (Q[1:] - Q[0]).T
            c, *_ = np.linalg.lstsq(D, x - Q[0], rcond=None)
            if c.min() >= 0 and c.sum() <= 1:
                best = min(best, np.linalg.norm(x - Q[0] - D @ c))
    return best
