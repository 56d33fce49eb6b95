"""Finite simplicial complexes embedded in R^N.

Simplices are identified by sorted vertex-id tuples; a complex keeps a table
of them (closed under faces), a boolean mask for the subcomplex Q, and
coface incidence.  Point location is batched with numpy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidInputError,
    NotInPolytopeError,
    NumericError,
    PreconditionError,
)

TOL_RANK = 1e-9
TOL_BARY = 1e-9
TOL_MEMBERSHIP_REL = 1e-8
TOL_INTERIOR = 1e-10


def _as_points(points) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    if arr.size == 0:
        raise InvalidInputError("empty point list")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite coordinate")
    return arr


def geometrically_independent(points) -> bool:
    """True iff v1-v0, ..., vn-v0 are linearly independent (relative SVD pivot)."""
    if points is None or len(points) == 0:
        raise InvalidInputError("empty point list")
    pts = _as_points(points)
    n = pts.shape[0] - 1
    if n == 0:
        return True
    if n > pts.shape[1]:
        return False
    diffs = pts[1:] - pts[0]
    sv = np.linalg.svd(diffs, compute_uv=False)
    if sv[0] == 0.0:
        return False
    return bool(sv[-1] > TOL_RANK * sv[0])


def simplex_volume(coords) -> float:
    """n-dimensional volume of the simplex spanned by the rows of coords."""
    v = np.asarray(coords, dtype=float)
    n = v.shape[0] - 1
    if n == 0:
        return 1.0
    d = v[1:] - v[0]
    gram = d @ d.T
    return float(math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(n))


class Simplex:
    """Geometric simplex: global vertex ids plus coordinates (one row per vertex)."""

    def __init__(self, ids: Sequence[int], coords):
        self.ids = tuple(int(i) for i in ids)
        self.coords = np.array(coords, dtype=float)
        self.coords.setflags(write=False)
        if self.coords.shape[0] != len(self.ids):
            raise InvalidInputError("ids and coords disagree in length")

    def __repr__(self):
        return f"Simplex(ids={self.ids})"

    @property
    def dim(self) -> int:
        return len(self.ids) - 1

    @property
    def ambient_dim(self) -> int:
        return self.coords.shape[1]

    @cached_property
    def barycenter(self) -> np.ndarray:
        return self.coords.mean(axis=0)

    @cached_property
    def diameter(self) -> float:
        if self.dim == 0:
            return 0.0
        d = self.coords[:, None, :] - self.coords[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @cached_property
    def _pinv(self) -> np.ndarray:
        # rows map x - v0 to barycentric weights 1..n
        d = self.coords[1:] - self.coords[0]
        return np.linalg.pinv(d.T)

    @cached_property
    def grad_bary(self) -> np.ndarray:
        """Gradient of each barycentric coordinate inside aff(sigma), shape (n+1, N)."""
        if self.dim == 0:
            return np.zeros((1, self.ambient_dim))
        g = self._pinv
        return np.vstack([-g.sum(axis=0), g])

    @cached_property
    def heights(self) -> np.ndarray:
        """Distance from v(j) to the affine hull of the facet opposite v(j)."""
        if self.dim == 0:
            return np.zeros(1)
        return 1.0 / np.linalg.norm(self.grad_bary, axis=1)

    @cached_property
    def radius(self):
        if self.dim == 0:
            return None
        return float(self.heights.min() / (self.dim + 1))

    @cached_property
    def thickness(self):
        if self.dim == 0:
            return None
        return self.radius / self.diameter

    @cached_property
    def volume(self) -> float:
        return simplex_volume(self.coords)

    def independent(self) -> bool:
        return geometrically_independent(self.coords)

    def bary(self, x):
        """Barycentric weights of x (or rows of x) and the off-hull residual."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        rel = X - self.coords[0]
        if self.dim == 0:
            w = np.ones((X.shape[0], 1))
            res = np.linalg.norm(rel, axis=1)
        else:
            c = rel @ self._pinv.T
            w = np.hstack([1.0 - c.sum(axis=1, keepdims=True), c])
            res = np.linalg.norm(rel - c @ (self.coords[1:] - self.coords[0]), axis=1)
        if single:
            return w[0], float(res[0])
        return w, res

    def point(self, weights) -> np.ndarray:
        return np.asarray(weights, dtype=float) @ self.coords

    def contains(self, x, tol=None) -> bool:
        tol_m = TOL_MEMBERSHIP_REL * max(self.diameter, 1.0) if tol is None else tol
        w, res = self.bary(x)
        return bool(res <= tol_m and w.min() >= -TOL_BARY)

    def is_interior(self, x, tol=TOL_INTERIOR) -> bool:
        w, res = self.bary(x)
        tol_m = TOL_MEMBERSHIP_REL * max(self.diameter, 1.0)
        return bool(res <= tol_m and w.min() > tol)

    def face(self, local: Iterable[int]) -> "Simplex":
        local = sorted(local)
        return Simplex([self.ids[i] for i in local], self.coords[local])

    def local_index(self, vid: int) -> int:
        return self.ids.index(vid)

    def facet(self, j: int) -> "Simplex":
        """Facet opposite local vertex j."""
        return self.face([i for i in range(self.dim + 1) if i != j])

    def opposite(self, tau_ids: Iterable[int]) -> "Simplex":
        return opposite_face(self, tau_ids)

    def sample_interior(self, rng, k: int) -> np.ndarray:
        w = rng.dirichlet(np.ones(self.dim + 1), size=k)
        return w @ self.coords


def opposite_face(sigma: Simplex, tau) -> Simplex:
    """Face of sigma spanned by the vertices not in tau."""
    tau_ids = set(tau.ids if isinstance(tau, Simplex) else tau)
    if not tau_ids.issubset(sigma.ids):
        raise InvalidInputError("tau is not a face of sigma")
    rest = [i for i, v in enumerate(sigma.ids) if v not in tau_ids]
    if not rest:
        raise InvalidInputError("tau equals sigma; no opposite face")
    if len(rest) == len(sigma.ids):
        raise InvalidInputError("tau is empty")
    return sigma.face(rest)


def face_frame(sigma: Simplex, j: int):
    """Orthonormal frame of aff(sigma) adapted to the facet opposite v(j).

    Returns (origin, E) with E of shape (n, N): the first n-1 rows span the
    facet directions, the last row is the unit normal pointing toward v(j).
    Local coordinates of x are E @ (x - origin); the facet sits in
    {last coordinate = 0} and v(j) has positive last coordinate.
    """
    n = sigma.dim
    if n < 1:
        raise InvalidInputError("a vertex has no facets")
    rest = [i for i in range(n + 1) if i != j]
    origin = sigma.coords[rest[0]]
    dirs = sigma.coords[rest[1:]] - origin
    if n > 1:
        qm, _ = np.linalg.qr(dirs.T)
        basis = qm.T[: n - 1]
    else:
        basis = np.zeros((0, sigma.ambient_dim))
    u = sigma.coords[j] - origin
    u = u - basis.T @ (basis @ u)
    u = u / np.linalg.norm(u)
    return origin, np.vstack([basis, u])


@dataclass(frozen=True)
class RayHit:
    t0: float
    point: np.ndarray
    face: tuple          # global vertex ids of the face whose interior holds the hit
    face_local: tuple    # same, as local indices into sigma
    weights: np.ndarray  # barycentric weights of the hit in sigma


def _interior_weights(sigma: Simplex, z) -> np.ndarray:
    w, res = sigma.bary(z)
    tol_m = TOL_MEMBERSHIP_REL * max(sigma.diameter, 1.0)
    if res > tol_m or w.min() <= TOL_INTERIOR:
        raise PreconditionError("apex is not in the interior of sigma")
    return w


def direction_weights(sigma: Simplex, direction) -> np.ndarray:
    """Barycentric differential of a direction vector lying in aff(sigma)."""
    d = np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if not np.isfinite(nd) or nd == 0.0:
        raise InvalidInputError("zero-length direction")
    c = sigma._pinv @ d
    back = c @ (sigma.coords[1:] - sigma.coords[0])
    if np.linalg.norm(back - d) > 1e-9 * nd:
        raise InvalidInputError("direction leaves the affine hull of sigma")
    return np.concatenate([[-c.sum()], c])


def ray_boundary_intersection(sigma: Simplex, z, direction) -> RayHit:
    """Unique exit point of the ray z + t*dir (t > 0) through Bd sigma."""
    if sigma.dim == 0:
        raise PreconditionError("a vertex has no boundary to hit")
    alpha = _interior_weights(sigma, z)
    delta = direction_weights(sigma, direction)
    scale = np.abs(delta).max()
    neg = delta < -1e-14 * scale
    t = np.where(neg, -alpha / np.where(neg, delta, -1.0), np.inf)
    t0 = float(t.min())
    w = alpha + t0 * delta
    w[np.argmin(t)] = 0.0
    w = np.where(w > TOL_INTERIOR, w, 0.0)
    w = w / w.sum()
    local = tuple(int(i) for i in np.flatnonzero(w > 0))
    return RayHit(
        t0=t0,
        point=sigma.point(w),
        face=tuple(sigma.ids[i] for i in local),
        face_local=local,
        weights=w,
    )


def expand_simplex(chi: Simplex, xi) -> Simplex:
    """Enlarge chi keeping the face xi: vertices v of the opposite face move to 2v - barycenter.

    The returned simplex has xi as a face, contains chi, and holds the
    original opposite-face vertices in its interior; these are checked.
    """
    xi_ids = set(xi.ids if isinstance(xi, Simplex) else xi)
    if not xi_ids or not xi_ids.issubset(chi.ids):
        raise InvalidInputError("xi must be a nonempty face of chi")
    if len(xi_ids) == len(chi.ids):
        raise InvalidInputError("xi equals chi")
    c = chi.barycenter
    new = chi.coords.copy()
    zeta = [i for i, v in enumerate(chi.ids) if v not in xi_ids]
    for i in zeta:
        new[i] = 2.0 * chi.coords[i] - c
    out = Simplex(chi.ids, new)
    w, _ = out.bary(chi.coords)
    if w.min() < -TOL_BARY:
        raise NumericError("expanded simplex fails to contain chi")
    if np.any(w[zeta].min(axis=1) <= TOL_INTERIOR):
        raise NumericError("opposite-face vertex not interior to the expansion")
    return out


def faces_of(simplex: tuple, proper: bool = False) -> list:
    """All nonempty faces of a vertex tuple (sorted), optionally excluding itself."""
    s = tuple(sorted(simplex))
    out = []
    top = len(s) - 1 if proper else len(s)
    for k in range(1, top + 1):
        out.extend(itertools.combinations(s, k))
    return out


def _canon_key(s: tuple):
    return (len(s), s)


@dataclass(frozen=True)
class BarycentricCoords:
    carrier: int
    vertex_ids: tuple
    weights: np.ndarray


class SimplicialComplex:
    """Vertex table + face-closed simplex table + subcomplex mask.

    Simplex ids follow the order given at construction (deduplicated), with
    auto-closed missing faces appended in canonical (dim, tuple) order.
    With ``close=False`` the table is kept verbatim so validation can report
    missing faces.
    """

    def __init__(self, vertices, simplices, q=None, close: bool = True):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0:
            raise InvalidInputError("vertices must be a nonempty 2-D array")
        if not np.all(np.isfinite(V)):
            raise InvalidInputError("non-finite vertex coordinate")
        V.setflags(write=False)
        self.vertices = V
        seen = {}
        order = []
        for s in simplices:
            t = tuple(sorted(int(i) for i in s))
            if len(t) == 0 or len(set(t)) != len(t):
                raise InvalidInputError(f"bad simplex {list(s)}")
            if min(t) < 0 or max(t) >= V.shape[0]:
                raise InvalidInputError(f"simplex {list(s)} references unknown vertex")
            if t not in seen:
                seen[t] = len(order)
                order.append(t)
        self.auto_closed = []
        if close:
            missing = set()
            for t in order:
                for f in faces_of(t, proper=True):
                    if f not in seen:
                        missing.add(f)
            for f in sorted(missing, key=_canon_key):
                seen[f] = len(order)
                order.append(f)
            self.auto_closed = sorted(missing, key=_canon_key)
        self.simplices = tuple(order)
        self.index = dict(seen)
        self.dims = np.array([len(s) - 1 for s in order], dtype=int)
        qm = np.zeros(len(order), dtype=bool)
        if q is not None:
            for t in q:
                t = tuple(sorted(int(i) for i in t))
                if t not in self.index:
                    raise InvalidInputError(f"Q simplex {list(t)} not in complex")
                qm[self.index[t]] = True
                if close:
                    for f in faces_of(t, proper=True):
                        qm[self.index[f]] = True
        qm.setflags(write=False)
        self.q_marks = qm

    # construction helpers -------------------------------------------------
    @classmethod
    def canonical(cls, vertices, simplices, q=None) -> "SimplicialComplex":
        """Closure of the given simplices with every id in canonical order."""
        allf = set()
        for s in simplices:
            allf.update(faces_of(tuple(s)))
        order = sorted(allf, key=_canon_key)
        return cls(vertices, order, q=q)

    def with_q(self, q_ids) -> "SimplicialComplex":
        """Same complex, Q replaced by the face closure of the given simplex ids."""
        out = SimplicialComplex(
            self.vertices, self.simplices, q=[self.simplices[i] for i in q_ids]
        )
        out.auto_closed = list(self.auto_closed)
        return out

    # basic queries -------------------------------------------------------------
    def __len__(self):
        return len(self.simplices)

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def dim(self) -> int:
        return int(self.dims.max())

    @property
    def q_dim(self) -> int:
        return int(self.dims[self.q_marks].max()) if self.q_marks.any() else -1

    def id_of(self, vertex_ids) -> int:
        t = tuple(sorted(int(i) for i in vertex_ids))
        try:
            return self.index[t]
        except KeyError:
            raise InvalidInputError(f"no simplex {list(t)}") from None

    def check_id(self, sid: int) -> int:
        if not isinstance(sid, (int, np.integer)) or sid < 0 or sid >= len(self.simplices):
            raise InvalidInputError(f"unknown simplex id {sid}")
        return int(sid)

    def simplex(self, sid: int) -> Simplex:
        return self._simplex_cache(self.check_id(sid))

    @lru_cache(maxsize=None)
    def _simplex_cache(self, sid: int) -> Simplex:
        ids = self.simplices[sid]
        return Simplex(ids, self.vertices[list(ids)])

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other

    @cached_property
    def cofaces(self) -> tuple:
        """For each simplex id, ids of simplices having it as a proper face."""
        out = [[] for _ in self.simplices]
        for j, t in enumerate(self.simplices):
            for f in faces_of(t, proper=True):
                i = self.index.get(f)
                if i is not None:
                    out[i].append(j)
        return tuple(tuple(sorted(c)) for c in out)

    @cached_property
    def maximal(self) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.cofaces) if not c], dtype=int)

    @cached_property
    def diameter(self) -> float:
        V = self.vertices
        if V.shape[0] < 2:
            return 0.0
        lo, hi = V.min(axis=0), V.max(axis=0)
        # exact max pairwise distance for moderate sizes, bbox bound otherwise
        if V.shape[0] <= 4000:
            from scipy.spatial.distance import pdist
            return float(pdist(V).max())
        return float(np.linalg.norm(hi - lo))

    @property
    def tol_membership(self) -> float:
        return TOL_MEMBERSHIP_REL * max(self.diameter, 1e-300)

    def is_face(self, tau: int, sigma: int) -> bool:
        return set(self.simplices[tau]).issubset(self.simplices[sigma])

    def max_simplex_diameter(self) -> float:
        return max(self.simplex(i).diameter for i in range(len(self)))

    # point location ------------------------------------------------------------
    @cached_property
    def _locator(self):
        groups = []
        for n in sorted(set(self.dims[self.maximal].tolist())):
            ids = [int(i) for i in self.maximal if self.dims[i] == n]
            sx = [self.simplex(i) for i in ids]
            v0 = np.array([s.coords[0] for s in sx])
            if n == 0:
                groups.append((ids, v0, None, None))
                continue
            D = np.array([s.coords[1:] - s.coords[0] for s in sx])
            P = np.array([s._pinv for s in sx])
            groups.append((ids, v0, D, P))
        return groups

    def _bary_all(self, X: np.ndarray):
        """Yield (group ids, weights (k,m,n+1), residual (k,m)) for every maximal group."""
        for ids, v0, D, P in self._locator:
            rel = X[:, None, :] - v0[None, :, :]
            if D is None:
                W = np.ones(rel.shape[:2] + (1,))
                res = np.linalg.norm(rel, axis=2)
            else:
                c = np.einsum("mnN,kmN->kmn", P, rel)
                W = np.concatenate([1.0 - c.sum(axis=2, keepdims=True), c], axis=2)
                res = np.linalg.norm(rel - np.einsum("kmn,mnN->kmN", c, D), axis=2)
            yield ids, W, res

    def locate(self, X, strict: bool = True):
        """Carrier ids and carrier-vertex weights for each row of X.

        Returns (carriers, weights) where weights[i] is aligned with
        self.simplices[carriers[i]].  Points outside |P| raise
        NotInPolytopeError (or get carrier -1 when strict is False).
        """
        X = _as_points(X)
        k = X.shape[0]
        tol_m = self.tol_membership
        best_score = np.full(k, -np.inf)
        best_sid = np.full(k, -1, dtype=int)
        best_w = [None] * k
        chunk = max(1, 2_000_000 // max(1, len(self.maximal) * X.shape[1]))
        for start in range(0, k, chunk):
            Xc = X[start:start + chunk]
            for ids, W, res in self._bary_all(Xc):
                wmin = W.min(axis=2)
                ok = (res <= tol_m) & (wmin >= -TOL_BARY)
                score = np.where(ok, wmin, -np.inf)
                j = score.argmax(axis=1)
                rows = np.arange(Xc.shape[0])
                sc = score[rows, j]
                for r in range(Xc.shape[0]):
                    g = start + r
                    if sc[r] > best_score[g]:
                        best_score[g] = sc[r]
                        best_sid[g] = ids[j[r]]
                        best_w[g] = W[r, j[r]]
        carriers = np.full(k, -1, dtype=int)
        weights = [None] * k
        for g in range(k):
            if best_sid[g] < 0:
                if strict:
                    d = [_point_simplex_distance(self.simplex(int(i)).coords, X[g]) for i in self.maximal]
                    i = int(self.maximal[int(np.argmin(d))])
                    raise NotInPolytopeError(
                        f"point {X[g].tolist()} is outside |P|; nearest simplex {i}",
                        nearest=i,
                        distance=float(min(d)),
                    )
                continue
            w = best_w[g]
            verts = self.simplices[best_sid[g]]
            keep = w > TOL_INTERIOR
            face = tuple(v for v, kk in zip(verts, keep) if kk)
            ww = w[keep]
            carriers[g] = self.index[face]
            weights[g] = ww / ww.sum()
        return carriers, weights

    def contains(self, x) -> bool:
        c, _ = self.locate(np.atleast_2d(x), strict=False)
        return bool(c[0] >= 0)


def _point_simplex_distance(coords, x) -> float:
    """Euclidean distance from x to conv(coords), by projecting onto every face."""
    best = np.inf
    m = len(coords)
    for r in range(1, m + 1):
        for sub in itertools.combinations(range(m), r):
            Q = coords[list(sub)]
            if r == 1:
                best = min(best, float(np.linalg.norm(x - Q[0])))
                continue
            D = (Q[1:] - Q[0]).T
            c, *_ = np.linalg.lstsq(D, x - Q[0], rcond=None)
            if c.min() >= 0 and c.sum() <= 1:
                best = min(best, float(np.linalg.norm(x - Q[0] - D @ c)))
    return best


def barycentric_coords(cx: SimplicialComplex, x) -> BarycentricCoords:
    """Carrier simplex of x and the (strictly positive) weights on its vertices."""
    c, w = cx.locate(np.atleast_2d(np.asarray(x, dtype=float)))
    sid = int(c[0])
    return BarycentricCoords(carrier=sid, vertex_ids=cx.simplices[sid], weights=w[0])


def shared_face_points(cx: SimplicialComplex, x, y):
    """Points x~, y~ in Int(rho n tau) for x in Int rho, y in Int tau.

    x lies on the segment from x~ (its weights on the shared vertices,
    renormalised) to a point z0(x) of the face of rho opposite rho n tau.
    Requires rho n tau nonempty with neither simplex containing the other.
    """
    bx, by = barycentric_coords(cx, x), barycentric_coords(cx, y)
    common = set(bx.vertex_ids) & set(by.vertex_ids)
    if not common or common in (set(bx.vertex_ids), set(by.vertex_ids)):
        raise InvalidInputError("carriers must meet with neither containing the other")

    def pull(b):
        m = np.array([v in common for v in b.vertex_ids])
        w = b.weights[m] / b.weights[m].sum()
        return w @ cx.vertices[[v for v in b.vertex_ids if v in common]]

    return pull(bx), pull(by)


RELATIONS = ("faces", "proper_faces", "star", "closed_star", "link")


def incidence(cx: SimplicialComplex, sid: int, relation: str) -> list:
    """Simplex ids related to sid: faces, proper_faces, star, closed_star or link."""
    sid = cx.check_id(sid)
    s = cx.simplices[sid]
    if relation == "faces":
        return sorted(cx.index[f] for f in faces_of(s) if f in cx.index)
    if relation == "proper_faces":
        return sorted(cx.index[f] for f in faces_of(s, proper=True) if f in cx.index)
    star = sorted((sid,) + cx.cofaces[sid])
    if relation == "star":
        return star
    closed = set()
    for j in star:
        closed.update(cx.index[f] for f in faces_of(cx.simplices[j]) if f in cx.index)
    if relation == "closed_star":
        return sorted(closed)
    if relation == "link":
        sv = set(s)
        return sorted(j for j in closed if sv.isdisjoint(cx.simplices[j]))
    raise InvalidInputError(f"unknown relation {relation!r}; expected one of {RELATIONS}")


def simplex_metrics(cx: SimplicialComplex, sid: int) -> dict:
    s = cx.simplex(sid)
    return {
        "barycenter": s.barycenter,
        "diameter": s.diameter,
        "radius": s.radius,
        "thickness": s.thickness,
    }


# subdivision -------------------------------------------------------------------

@lru_cache(maxsize=None)
def kuhn_children(n: int) -> tuple:
    """Freudenthal split of an ordered n-simplex into 2^n children.

    Each child is a tuple of (i, j) pairs, meaning the midpoint of parent
    vertices i and j (i == j for an original vertex), listed in the child's
    own vertex order.
    """
    if n == 0:
        return (((0, 0),),)
    out = []
    for base in itertools.product((0, 1), repeat=n):
        for perm in itertools.permutations(range(n)):
            y = np.array(base)
            path = [y.copy()]
            for p in perm:
                y = y.copy()
                y[p] += 1
                path.append(y)
            if all(np.all(np.diff(v) <= 0) and v[0] <= 2 and v[-1] >= 0 for v in path):
                out.append(tuple(_kuhn_to_pair(v) for v in path))
    assert len(out) == 2 ** n
    return tuple(out)


def _kuhn_to_pair(u) -> tuple:
    # scaled Kuhn coordinates in {0,1,2}, nonincreasing -> barycentric halves
    n = len(u)
    lam = [2 - u[0]] + [u[i] - u[i + 1] for i in range(n - 1)] + [u[-1]]
    idx = [i for i, l in enumerate(lam) for _ in range(int(l))]
    return (idx[0], idx[1])


@dataclass
class Subdivision:
    complex: SimplicialComplex
    rounds: int
    t0: float
    parent: np.ndarray            # new simplex id -> original simplex id containing its interior
    support: list = field(repr=False, default_factory=list)


def _refine_once(V: list, ordered: list, support: list):
    """One Freudenthal round on ordered maximal simplices; returns new (V, ordered, support)."""
    V = list(V)
    support = list(support)
    mid = {}
    new_ordered = []
    for s in ordered:
        n = len(s) - 1
        for child in kuhn_children(n):
            verts = []
            for i, j in child:
                a, b = s[i], s[j]
                if a == b:
                    verts.append(a)
                    continue
                key = (min(a, b), max(a, b))
                if key not in mid:
                    mid[key] = len(V)
                    V.append(0.5 * (V[a] + V[b]))
                    support.append(support[a] | support[b])
                verts.append(mid[key])
            new_ordered.append(tuple(verts))
    return V, new_ordered, support


def subdivide(cx: SimplicialComplex, eps: float, max_rounds: int = 40) -> Subdivision:
    """Edgewise (Freudenthal) refinement until every simplex diameter is below eps."""
    if not (eps > 0):
        raise InvalidInputError("eps must be positive")
    V = [np.array(v) for v in cx.vertices]
    ordered = [cx.simplices[i] for i in cx.maximal]
    support = [frozenset([i]) for i in range(len(V))]
    rounds = 0
    cur = cx
    cur_support = support
    while cur.max_simplex_diameter() >= eps:
        if rounds >= max_rounds:
            raise NumericError("subdivision did not reach the target diameter")
        V, ordered, support = _refine_once(V, ordered, support)
        rounds += 1
        cur = SimplicialComplex.canonical(np.array(V), ordered)
        cur_support = support
    if rounds == 0:
        parent = np.arange(len(cx), dtype=int)
        out = cx
    else:
        parent = np.empty(len(cur), dtype=int)
        for i, s in enumerate(cur.simplices):
            sup = frozenset().union(*(cur_support[v] for v in s))
            parent[i] = cx.index[tuple(sorted(sup))]
        q = [cur.simplices[i] for i in range(len(cur)) if cx.q_marks[parent[i]]]
        out = SimplicialComplex(cur.vertices, cur.simplices, q=q)
    th = [out.simplex(i).thickness for i in range(len(out)) if out.dims[i] >= 1]
    t0 = float(min(th)) if th else float("nan")
    return Subdivision(complex=out, rounds=rounds, t0=t0, parent=parent, support=cur_support)


# validation --------------------------------------------------------------------

@dataclass
class ValidationReport:
    missing_faces: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)
    dependent: list = field(default_factory=list)
    q_not_closed: list = field(default_factory=list)
    auto_closed: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.missing_faces or self.overlaps or self.dependent or self.q_not_closed)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "missing_faces": [list(f) for f in self.missing_faces],
            "overlaps": [list(p) for p in self.overlaps],
            "dependent": [list(f) for f in self.dependent],
            "q_not_closed": [list(f) for f in self.q_not_closed],
            "auto_closed": [list(f) for f in self.auto_closed],
        }


def validate_complex(cx: SimplicialComplex, samples: int = 24, seed: int = 0) -> ValidationReport:
    """Report missing faces, interior overlaps (sampled), dependent vertex sets, open Q."""
    rep = ValidationReport(auto_closed=list(cx.auto_closed))
    present = set(cx.simplices)
    for t in cx.simplices:
        for f in faces_of(t, proper=True):
            if f not in present:
                rep.missing_faces.append(f)
    rep.missing_faces = sorted(set(rep.missing_faces), key=_canon_key)
    for i, t in enumerate(cx.simplices):
        if not cx.simplex(i).independent():
            rep.dependent.append(t)
        if cx.q_marks[i]:
            for f in faces_of(t, proper=True):
                j = cx.index.get(f)
                if j is None or not cx.q_marks[j]:
                    rep.q_not_closed.append(f)
    rep.q_not_closed = sorted(set(rep.q_not_closed), key=_canon_key)
    bad = set(rep.dependent)
    tops = [int(i) for i in cx.maximal if cx.simplices[i] not in bad]
    if not tops:
        return rep
    rng = np.random.default_rng(seed)
    lo = np.array([cx.simplex(i).coords.min(axis=0) for i in tops])
    hi = np.array([cx.simplex(i).coords.max(axis=0) for i in tops])
    tol = cx.tol_membership
    found = set()
    for i, t in enumerate(cx.simplices):
        if t in bad:
            continue
        s = cx.simplex(i)
        if s.dim == 0:
            pts = s.coords
        else:
            pts = np.vstack([s.barycenter, s.sample_interior(rng, samples)])
        plo, phi = pts.min(axis=0), pts.max(axis=0)
        cand = np.flatnonzero(np.all(hi >= plo - tol, axis=1) & np.all(lo <= phi + tol, axis=1))
        for c in cand:
            tau = cx.simplex(tops[c])
            W, res = tau.bary(pts)
            inside = (res <= tol) & (W.min(axis=1) >= -TOL_BARY)
            for r in np.flatnonzero(inside):
                face = tuple(v for v, w in zip(tau.ids, W[r]) if w > 1e-8)
                if face != t:
                    found.add((t, tau.ids))
    rep.overlaps = sorted(found)
    return rep
