"""Pushing a closed set S off the partial simplices of a complex.

S is modelled by weighted sample points (each tagged with the simplex whose
interior holds it) plus flags on simplices contained in S.  A push empties
the interior of one simplex sigma by projecting its samples radially from an
apex z onto Bd sigma; the accompanying map g keeps every simplex that does
not have sigma as a face fixed and deforms the rest.  ``run`` repeats this
until no partial simplex of Q remains and returns the composite transport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import measure
from .complex_core import (
    TOL_BARY,
    TOL_INTERIOR,
    TOL_MEMBERSHIP_REL,
    Simplex,
    _point_simplex_distance,
    SimplicialComplex,
    face_frame,
    faces_of,
    ray_boundary_intersection,
    subdivide,
)
from .errors import (
    ApexTooCloseError,
    DomainError,
    InvalidInputError,
    NumericError,
    PreconditionError,
    ValidationError,
)

TOL_CONE_ANGLE = 1e-6
TOL_FACE = 1e-9


# ---------------------------------------------------------------------------
# set model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetModel:
    """Weighted samples (point, carrier id, H^a weight) plus flagged simplices."""

    a: float
    points: np.ndarray
    carriers: np.ndarray
    weights: np.ndarray
    full: frozenset = frozenset()

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(len(self.carriers), -1) if len(self.carriers) else np.zeros((0, np.asarray(self.points).shape[-1] if np.asarray(self.points).ndim == 2 else 0))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "carriers", np.asarray(self.carriers, dtype=int).reshape(-1))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float).reshape(-1))
        object.__setattr__(self, "full", frozenset(int(i) for i in self.full))
        if len(self.weights) != len(self.carriers):
            raise InvalidInputError("weights and carriers differ in length")
        if np.any(self.weights < 0):
            raise InvalidInputError("negative sample weight")

    def __len__(self):
        return len(self.carriers)

    @classmethod
    def empty(cls, a: float, ambient_dim: int, full=()) -> "SetModel":
        return cls(a, np.zeros((0, ambient_dim)), np.zeros(0, int), np.zeros(0), frozenset(full))

    @classmethod
    def from_points(cls, cx: SimplicialComplex, points, weights=None, a: float = 1.0, full=()) -> "SetModel":
        """Locate carriers for raw points; default weight 1 each."""
        P = np.atleast_2d(np.asarray(points, float)) if len(points) else np.zeros((0, cx.ambient_dim))
        if len(P) == 0:
            return cls.empty(a, cx.ambient_dim, full).normalized(cx)
        car, _ = cx.locate(P)
        w = np.ones(len(P)) if weights is None else np.asarray(weights, float)
        return cls(a, P, car, w, frozenset(full)).normalized(cx)

    def replace(self, **kw) -> "SetModel":
        d = dict(a=self.a, points=self.points, carriers=self.carriers, weights=self.weights, full=self.full)
        d.update(kw)
        return SetModel(**d)

    def normalized(self, cx: SimplicialComplex) -> "SetModel":
        """Close flags under faces, turn vertex samples into flags, drop samples in flagged simplices."""
        full = set()
        for f in self.full:
            full.update(cx.index[t] for t in faces_of(cx.simplices[f]))
        keep = []
        for i, c in enumerate(self.carriers):
            if cx.dims[c] == 0:
                full.add(int(c))
            elif int(c) not in full:
                keep.append(i)
        keep = np.array(keep, dtype=int)
        # a vertex flag added above cannot make a kept sample redundant: samples
        # sit in simplices of dimension >= 1
        return SetModel(self.a, self.points[keep], self.carriers[keep], self.weights[keep], frozenset(full))

    def validate(self, cx: SimplicialComplex) -> None:
        """Each sample must lie in the interior of its declared carrier; flags must exist."""
        for f in self.full:
            if f < 0 or f >= len(cx):
                raise ValidationError(f"flag references unknown simplex {f}")
        for i, (p, c) in enumerate(zip(self.points, self.carriers)):
            if c < 0 or c >= len(cx):
                raise ValidationError(f"sample {i}: unknown carrier {int(c)}", {"sample": i})
            if len(p) != cx.ambient_dim:
                raise ValidationError(f"sample {i}: wrong dimension", {"sample": i})
            s = cx.simplex(int(c))
            w, res = s.bary(p)
            if res > cx.tol_membership or w.min() <= TOL_INTERIOR:
                raise ValidationError(
                    f"sample {i} is not interior to its carrier {int(c)}", {"sample": i, "carrier": int(c)}
                )

    def point_set(self, cx: SimplicialComplex) -> np.ndarray:
        """Sample points together with the coordinates of flagged vertices."""
        verts = sorted(cx.simplices[f][0] for f in self.full if cx.dims[f] == 0)
        return np.vstack([self.points.reshape(-1, cx.ambient_dim), cx.vertices[verts].reshape(-1, cx.ambient_dim)])

    def mass(self, cx: SimplicialComplex, s: float | None = None, in_q: bool = True) -> float:
        """H^s mass: sample weights plus the s-volume of flagged s-simplices."""
        s = self.a if s is None else s
        sel = cx.q_marks[self.carriers] if in_q else np.ones(len(self), bool)
        total = float(self.weights[sel].sum())
        for f in self.full:
            if in_q and not cx.q_marks[f]:
                continue
            d = cx.dims[f]
            if d > s:
                return math.inf
            if d == s:
                total += cx.simplex(f).volume
        return total

    def in_q(self, cx: SimplicialComplex) -> "SetModel":
        keep = cx.q_marks[self.carriers]
        return SetModel(self.a, self.points[keep], self.carriers[keep], self.weights[keep],
                        frozenset(f for f in self.full if cx.q_marks[f]))


# ---------------------------------------------------------------------------
# k and the cone
# ---------------------------------------------------------------------------

def k_fn(beta: float, delta: float, t: float) -> float:
    """exp(-beta (delta + t) / (1 - beta)); zero at beta = 1 unless delta = t = 0."""
    if beta > 1 or delta < 0 or t < 0:
        raise DomainError("k is defined for beta <= 1, delta >= 0, t >= 0")
    if beta == 1:
        if delta + t > 0:
            return 0.0
        raise DomainError("k is undefined at (1, 0, 0)")
    return math.exp(-beta * (delta + t) / (1.0 - beta))


def _dist_to_segments(x, z, ends) -> np.ndarray:
    d = ends - z
    L2 = (d * d).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.clip(((x - z) * d).sum(axis=1) / L2, 0.0, 1.0)
    u = np.where(L2 > 0, u, 0.0)
    return np.linalg.norm(x - (z + u[:, None] * d), axis=1)


class ConeModel:
    """Finite cone C_z over the part A of S lying in sigma.

    ``images`` are the radial images on Bd sigma of the sample points of A;
    ``faces`` (local index tuples) are flagged proper faces of sigma, whose
    cone is conv({z} u face).
    """

    def __init__(self, sigma: Simplex, z, images, faces=(), sid: int | None = None):
        self.sigma = sigma
        self.sid = sid
        self.z = np.asarray(z, dtype=float)
        self.alpha = _interior(sigma, self.z)
        self.images = np.asarray(images, float).reshape(-1, sigma.ambient_dim)
        self.faces = [tuple(sorted(f)) for f in faces]
        self._img_dirs = self.images - self.z
        nrm = np.linalg.norm(self._img_dirs, axis=1, keepdims=True)
        self._img_dirs = self._img_dirs / np.where(nrm > 0, nrm, 1.0)
        # fixed boundary value for hbar at the apex: exit through the
        # barycentre of the facet opposite v(0)
        hit = ray_boundary_intersection(sigma, self.z, sigma.facet(0).barycenter - self.z)
        self.hbar_z = hit.point
        self.hbar_z_weights = hit.weights

    @property
    def diam(self) -> float:
        return self.sigma.diameter

    # radial projection ------------------------------------------------------
    def b_hbar(self, y):
        """(b, hbar, barycentric weights of hbar) with b hbar + (1 - b) z = y."""
        y = np.asarray(y, float)
        w, res = self.sigma.bary(y)
        tol_m = TOL_MEMBERSHIP_REL * max(self.diam, 1.0)
        if res > tol_m or w.min() < -TOL_BARY:
            raise DomainError("point is not in sigma")
        if w.min() <= TOL_INTERIOR:
            w = np.where(w > TOL_INTERIOR, w, 0.0)
            return 1.0, y.copy(), w / w.sum()
        d = y - self.z
        nd = np.linalg.norm(d)
        if nd <= 1e-15 * self.diam:
            return 0.0, self.hbar_z.copy(), self.hbar_z_weights.copy()
        hit = ray_boundary_intersection(self.sigma, self.z, d)
        b = nd / np.linalg.norm(hit.point - self.z)
        return min(float(b), 1.0), hit.point, hit.weights

    def _boundary_in_cone(self, hb, hw) -> bool:
        for f in self.faces:
            mask = np.ones(len(hw), bool)
            mask[list(f)] = False
            if np.all(hw[mask] <= TOL_FACE):
                return True
        if len(self.images) == 0:
            return False
        u = hb - self.z
        u = u / np.linalg.norm(u)
        dots = self._img_dirs @ u
        perp = np.linalg.norm(u[None, :] - dots[:, None] * self._img_dirs, axis=1)
        return bool(np.any((dots > 0) & (np.arctan2(perp, dots) < TOL_CONE_ANGLE)))

    def contains(self, y) -> bool:
        """Finite-sample cone membership: y on a stored ray, in a flagged face cone, or y = z."""
        b, hb, hw = self.b_hbar(y)
        if b == 0.0:
            return True
        return self._boundary_in_cone(hb, hw)

    def delta_bar_hbar(self, hb, hw) -> float:
        if self._boundary_in_cone(hb, hw):
            return 0.0
        best = math.inf
        if len(self.images):
            best = float(_dist_to_segments(hb, self.z, self.images).min())
        for f in self.faces:
            P = np.vstack([self.z, self.sigma.coords[list(f)]])
            best = min(best, _point_simplex_distance(P, hb))
        return best

    def delta_bar(self, y) -> float:
        """dist(hbar(y), C); equals diam(sigma) at the apex."""
        b, hb, hw = self.b_hbar(y)
        if b == 0.0:
            return self.diam
        return self.delta_bar_hbar(hb, hw)

    # s and its inverse --------------------------------------------------------
    def s(self, y, t: float):
        if not (0.0 <= t <= 1.0):
            raise DomainError("t must lie in [0, 1]")
        b, hb, hw = self.b_hbar(y)
        if b == 1.0:
            if t == 0.0 and self._boundary_in_cone(hb, hw):
                raise DomainError("s(., 0) is undefined on C n Bd sigma")
            return np.asarray(y, float).copy()
        dbar = self.diam if b == 0.0 else self.delta_bar_hbar(hb, hw)
        f = k_fn(b, dbar, t)
        return (1.0 - f) * hb + f * self.z

    def s_inv(self, x, t: float, iters: int = 200):
        """The y in Int sigma with s(y, t) = x (t > 0), by bisection on b(y)."""
        if not (0.0 < t <= 1.0):
            raise DomainError("inverse needs t in (0, 1]")
        b, hb, hw = self.b_hbar(x)
        if b == 1.0:
            raise DomainError("x must lie in Int sigma")
        if b == 0.0:
            return self.z.copy()
        dbar = self.delta_bar_hbar(hb, hw)
        target = 1.0 - b
        lo, hi = 0.0, 1.0
        if not (k_fn(lo, dbar, t) >= target >= k_fn(hi, dbar, t)):
            raise NumericError("bisection does not bracket the root")
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if k_fn(mid, dbar, t) > target:
                lo = mid
            else:
                hi = mid
        beta = 0.5 * (lo + hi)
        return hb + (1.0 - beta) * (self.z - hb)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sid,
            "z0": self.z.tolist(),
            "cone_images": self.images.tolist(),
            "cone_faces": [[self.sigma.ids[i] for i in f] for f in self.faces],
        }


def _interior(sigma: Simplex, z) -> np.ndarray:
    w, res = sigma.bary(z)
    if res > TOL_MEMBERSHIP_REL * max(sigma.diameter, 1.0) or w.min() <= TOL_INTERIOR:
        raise PreconditionError("apex must lie in Int sigma")
    return w


def b_and_hbar(sigma: Simplex, z, y):
    """b(y) and hbar(y) for the radial projection from z onto Bd sigma."""
    cone = ConeModel(sigma, z, np.zeros((0, sigma.ambient_dim)))
    b, hb, _ = cone.b_hbar(y)
    return b, hb


def h_to_face(sigma: Simplex, tau, z, y):
    """Projection from z onto the facet tau: z_n/(z_n - y_n) (y - z) + z in the facet frame.

    Returns None when y is not in zeta(z; tau) (including y = z).
    """
    ids = set(tau.ids if isinstance(tau, Simplex) else tau)
    if len(ids) != sigma.dim or not ids.issubset(sigma.ids):
        raise InvalidInputError("tau must be an (n-1)-face of sigma")
    _interior(sigma, z)
    (j,) = [i for i, v in enumerate(sigma.ids) if v not in ids]
    origin, E = face_frame(sigma, j)
    z = np.asarray(z, float)
    y = np.asarray(y, float)
    zl = E @ (z - origin)
    yl = E @ (y - origin)
    scale = max(sigma.diameter, 1e-300)
    zn, yn = zl[-1], yl[-1]
    if np.linalg.norm(yl - zl) <= 1e-14 * scale:
        return None
    if yn < -1e-12 * scale or yn >= zn:
        return None
    hl = zn / (zn - yn) * (yl - zl) + zl
    x = origin + hl[:-1] @ E[:-1]
    fw, _ = sigma.facet(j).bary(x)
    if fw.min() < -1e-9:
        return None
    return x


def cone_build(sigma: Simplex, z, points, faces=(), sid: int | None = None) -> ConeModel:
    """Cone from apex z over the sample points of A (and flagged faces, local indices)."""
    z = np.asarray(z, float)
    P = np.asarray(points, float).reshape(-1, sigma.ambient_dim)
    _interior(sigma, z)
    if len(P):
        gap = np.linalg.norm(P - z, axis=1).min()
        if gap < measure.APEX_GAP_REL * sigma.diameter:
            raise ApexTooCloseError("apex too close to a sample of A")
    probe = ConeModel(sigma, z, np.zeros((0, sigma.ambient_dim)), faces, sid)
    imgs = [probe.b_hbar(p)[1] for p in P]
    return ConeModel(sigma, z, np.array(imgs).reshape(-1, sigma.ambient_dim), faces, sid)


def s_map(cone: ConeModel, y, t: float):
    return cone.s(y, t)


def s_hat_inverse(cone: ConeModel, x, t: float):
    return cone.s_inv(x, t)


# ---------------------------------------------------------------------------
# g and its inverse on cofaces
# ---------------------------------------------------------------------------

def _split(cx: SimplicialComplex, cone: ConeModel, carrier: int, weights):
    ids = cx.simplices[carrier]
    sset = set(cone.sigma.ids)
    coords = cx.vertices[list(ids)]
    m = np.array([v in sset for v in ids])
    mu = float(weights[m].sum())
    sy = weights[m] @ coords[m] / mu
    w = weights[~m] @ coords[~m] / (1.0 - mu)
    return mu, sy, w


def g_map(cx: SimplicialComplex, cone: ConeModel, y, carrier=None, weights=None):
    """Deformation of |P| attached to one push; identity off the cofaces of sigma."""
    y = np.asarray(y, float)
    if carrier is None:
        c, w = cx.locate(y[None, :])
        carrier, weights = int(c[0]), w[0]
    ids = cx.simplices[carrier]
    sset = set(cone.sigma.ids)
    if not sset.issubset(ids):
        if set(ids).issubset(sset):
            _, hb, hw = cone.b_hbar(y)
            if cone._boundary_in_cone(hb, hw):
                raise DomainError("g is undefined on C n Bd sigma")
        return y.copy()
    if len(ids) == len(sset):
        return cone.s(y, 0.0)
    mu, sy, w = _split(cx, cone, carrier, weights)
    return mu * cone.s(sy, 1.0 - mu) + (1.0 - mu) * w


def g_inverse(cx: SimplicialComplex, cone: ConeModel, y, carrier=None, weights=None):
    """Inverse of g on the interiors of proper cofaces of sigma (identity off them)."""
    y = np.asarray(y, float)
    if carrier is None:
        c, w = cx.locate(y[None, :])
        carrier, weights = int(c[0]), w[0]
    ids = cx.simplices[carrier]
    sset = set(cone.sigma.ids)
    if not sset.issubset(ids):
        return y.copy()
    if len(ids) == len(sset):
        raise DomainError("g is not invertible on Int sigma")
    mu, sy, w = _split(cx, cone, carrier, weights)
    x = cone.s_inv(sy, 1.0 - mu)
    return mu * x + (1.0 - mu) * w


# ---------------------------------------------------------------------------
# partial simplices, push, recursion
# ---------------------------------------------------------------------------

@dataclass
class PartialReport:
    partials: dict
    rank: tuple
    q: int

    def top(self):
        """Maximal-dimension partial simplex, lowest id first; None if there is none."""
        for d in sorted(self.partials, reverse=True):
            if self.partials[d]:
                return min(self.partials[d])
        return None


def detect_partial_and_rank(cx: SimplicialComplex, S: SetModel) -> PartialReport:
    q = max(cx.q_dim, 0)
    parts = {d: [] for d in range(1, q + 1)}
    for c in sorted(set(int(c) for c in S.carriers)):
        d = int(cx.dims[c])
        if d >= 1 and cx.q_marks[c] and c not in S.full:
            parts[d].append(c)
    rank = tuple(len(parts[d]) for d in range(q, 0, -1))
    return PartialReport(parts, rank, q)


@dataclass
class PushRecord:
    sigma: int
    z0: np.ndarray
    cone: ConeModel
    rank_before: tuple
    rank_after: tuple
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.cone.to_dict()
        d.update({"rank_before": list(self.rank_before), "rank_after": list(self.rank_after)})
        return d


def _sigma_samples(cx: SimplicialComplex, S: SetModel, sigma: int):
    sset = set(cx.simplices[sigma])
    in_sigma = np.array([set(cx.simplices[c]).issubset(sset) for c in S.carriers], dtype=bool)
    flagged = [f for f in sorted(S.full) if set(cx.simplices[f]).issubset(sset)]
    return in_sigma, flagged


def push(cx: SimplicialComplex, S: SetModel, sigma: int, z, a: float | None = None, check: bool = True):
    """Push S out of the partial simplex sigma from apex z; returns (S', record)."""
    a = S.a if a is None else a
    S = S.normalized(cx)
    sigma = cx.check_id(sigma)
    info = detect_partial_and_rank(cx, S)
    if check:
        top = max((d for d in info.partials if info.partials[d]), default=None)
        if top is None or sigma not in info.partials.get(int(cx.dims[sigma]), []) or cx.dims[sigma] != top:
            raise PreconditionError("sigma must be a partial simplex of maximal dimension")
    sx = cx.simplex(sigma)
    in_sigma, flagged = _sigma_samples(cx, S, sigma)
    local_faces = [tuple(sx.ids.index(v) for v in cx.simplices[f]) for f in flagged]
    cone = cone_build(sx, z, S.points[in_sigma], local_faces, sid=sigma)
    img_of = dict(zip(np.flatnonzero(in_sigma).tolist(), range(len(cone.images))))
    sset = set(sx.ids)
    pts, cars, wts = [], [], []
    full = set(S.full)
    mass_in = emp = 0.0
    added = 0
    for i, (p, c, w) in enumerate(zip(S.points, S.carriers, S.weights)):
        c = int(c)
        if c == sigma:
            img = cone.images[img_of[i]]
            _, hb, hw = cone.b_hbar(p)
            face = tuple(sx.ids[k] for k in np.flatnonzero(hw > 0))
            j = int(np.flatnonzero(hw == 0)[0])
            lam = measure.lambda_eig(sx, sx.facet(j).ids, cone.z, p)
            nw = w * lam ** a
            mass_in += w
            emp += nw
            fid = cx.index[face]
            if cx.dims[fid] == 0:
                if fid not in full:
                    added += 1
                full.add(fid)
            elif fid not in full:
                pts.append(img)
                cars.append(fid)
                wts.append(nw)
            continue
        ids = cx.simplices[c]
        if sset.issubset(ids):
            bw, _ = cx.simplex(c).bary(p)
            p = g_inverse(cx, cone, p, c, bw)
        pts.append(p)
        cars.append(c)
        wts.append(w)
    S2 = SetModel(a if S.a is None else S.a, np.array(pts).reshape(-1, cx.ambient_dim),
                  np.array(cars, int), np.array(wts), frozenset(full)).normalized(cx)
    after = detect_partial_and_rank(cx, S2)
    if check and not after.rank < info.rank:
        raise NumericError("rank failed to decrease")
    stats = {
        "sigma": sigma,
        "dim": int(sx.dim),
        "mass_in": mass_in,
        "empirical": emp,
        "ratio": emp / mass_in if mass_in > 0 else 0.0,
        "vertex_flags_added": added,
    }
    rec = PushRecord(sigma, cone.z.copy(), cone, info.rank, after.rank, stats)
    return S2, rec


@dataclass
class TransportMap:
    complex: SimplicialComplex
    records: list

    def __call__(self, y):
        return transport_eval(self, y)

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records]}


def transport_eval(G: TransportMap, y):
    """G(y) = g_1(g_2(...g_m(y)...)): the last push acts first."""
    y = np.asarray(y, float)
    for rec in reversed(G.records):
        y = g_map(G.complex, rec.cone, y)
    return y


@dataclass
class RunResult:
    S_tilde: SetModel
    transport: TransportMap
    stats: dict
    history: list


def _rank_bound(cx: SimplicialComplex) -> int:
    counts = np.bincount(cx.dims[cx.q_marks], minlength=cx.dim + 1)
    return int(np.prod([c + 1 for c in counts[1:]])) if len(counts) > 1 else 1


def run(cx: SimplicialComplex, S: SetModel, a: float | None = None, seed: int = 0,
        max_pushes: int | None = None, gamma: float | None = None) -> RunResult:
    """Push out of maximal partial simplices until none is left."""
    a = S.a if a is None else a
    S = S.normalized(cx)
    bound = _rank_bound(cx) if max_pushes is None else max_pushes
    mass0 = S.mass(cx, a, in_q=True)
    mass_high = None
    records, history, per_push = [], [S], []
    while True:
        info = detect_partial_and_rank(cx, S)
        sigma = info.top()
        if sigma is None:
            break
        if len(records) >= bound:
            raise NumericError("push count exceeded the rank bound")
        sx = cx.simplex(sigma)
        if mass_high is None and sx.dim <= a:
            mass_high = S.mass(cx, a, in_q=True)
        in_sigma, _ = _sigma_samples(cx, S, sigma)
        inner = S.carriers == sigma
        rng = np.random.default_rng([int(seed), len(records)])
        choice = measure.select_z0(sx, S.points[inner], S.weights[inner], a, rng=rng,
                                   avoid=S.points[in_sigma], gamma=gamma)
        S, rec = push(cx, S, sigma, choice.z, a=a)
        rec.stats.update({"draws": choice.draws, "phi": choice.phi, "gamma": choice.gamma,
                          "vacuous": choice.vacuous,
                          "face_sums": choice.face_sums.tolist()})
        records.append(rec)
        history.append(S)
        per_push.append(rec.stats)
    if mass_high is None:
        mass_high = S.mass(cx, a, in_q=True)
    stats = {
        "pushes": len(records),
        "mass_initial": mass0,
        "mass_after_high_dims": mass_high,
        "mass_final": S.mass(cx, a, in_q=True),
        "per_push": per_push,
    }
    return RunResult(S, TransportMap(cx, records), stats, history)


# ---------------------------------------------------------------------------
# the epsilon-near pipeline
# ---------------------------------------------------------------------------

def map_set_model(old: SimplicialComplex, sub, S: SetModel) -> SetModel:
    """Carry a set model onto a subdivision: relocate samples, flag every child of a flagged simplex."""
    new = sub.complex
    if len(S):
        car, _ = new.locate(S.points)
    else:
        car = np.zeros(0, int)
    full = frozenset(int(i) for i in range(len(new)) if int(sub.parent[i]) in S.full)
    return SetModel(S.a, S.points, car, S.weights, full).normalized(new)


def meeting_ids(cx: SimplicialComplex, S: SetModel) -> list:
    """Simplices whose closure meets S (samples or flagged vertices)."""
    hit = set()
    seeds = set(int(c) for c in S.carriers) | set(f for f in S.full if cx.dims[f] == 0)
    for c in seeds:
        hit.add(c)
        hit.update(cx.cofaces[c])
    return sorted(hit)


@dataclass
class NearResult:
    complex: SimplicialComplex
    S: SetModel
    result: RunResult
    rounds: int
    t0: float


def approximate_near(cx: SimplicialComplex, S: SetModel, a: float | None = None, eps: float = 0.1,
                     seed: int = 0, gamma: float | None = None) -> NearResult:
    """Subdivide below eps/2, take Q = simplices meeting S, and push out."""
    if not (eps > 0):
        raise InvalidInputError("eps must be positive")
    a = S.a if a is None else a
    S = S.normalized(cx)
    sub = subdivide(cx, eps / 2.0)
    S2 = map_set_model(cx, sub, S)
    Pq = sub.complex.with_q(meeting_ids(sub.complex, S2))
    res = run(Pq, S2, a, seed, gamma=gamma)
    return NearResult(Pq, S2, res, sub.rounds, sub.t0)


# ---------------------------------------------------------------------------
# retraction chain
# ---------------------------------------------------------------------------

class RetractionChain:
    """Segment bundles E_m subset ... subset E_0 joining S to S_tilde.

    Level i holds the segments L_i(y) = [y, h_i(y)] for the y in S_i moved by
    h_i: the radial image for samples of Int sigma_i, the inverse deformation
    for samples of proper cofaces.  Points fixed by h_i reappear in S_{i+1}
    and are stored at a later level.  Level m holds the points of S_tilde.  E_i is the union of levels >= i together with the
    flagged simplices of S_tilde.
    """

    def __init__(self, cx, starts, ends, levels, m, flags, tol):
        self.complex = cx
        self.starts = starts
        self.ends = ends
        self.levels = levels
        self.m = m
        self.flags = flags
        self.tol = tol
        self._cache = {}

    def _in_flags(self, Y) -> np.ndarray:
        hit = np.zeros(len(Y), bool)
        for f in self.flags:
            w, res = self.complex.simplex(f).bary(Y)
            hit |= (res <= self.tol) & (w.min(axis=1) >= -TOL_BARY)
        return hit

    def _pieces(self, key):
        """KD-tree over short pieces of the selected segments, cached per selection."""
        if key not in self._cache:
            kind, i = key
            sel = np.flatnonzero(self.levels >= i if kind == "ge" else self.levels == i)
            s, e = self.starts[sel], self.ends[sel]
            L = np.linalg.norm(e - s, axis=1)
            piece = max(self.complex.diameter / 64.0, self.tol)
            nk = np.maximum(1, np.ceil(L / piece)).astype(int)
            seg = np.repeat(np.arange(len(sel)), nk)
            k = np.arange(len(seg)) - np.repeat(np.cumsum(nk) - nk, nk)
            mids = s[seg] + ((k + 0.5) / nk[seg])[:, None] * (e - s)[seg]
            tree = cKDTree(mids) if len(mids) else None
            self._cache[key] = (sel, seg, tree, 0.5 * piece + self.tol)
        return self._cache[key]

    def _nearest(self, Y, key):
        """For each row of Y, the nearest selected segment within tol (index into sel, or -1)."""
        sel, seg, tree, radius = self._pieces(key)
        best = np.full(len(Y), -1)
        if tree is None or len(Y) == 0:
            return sel, best
        lists = tree.query_ball_point(Y, radius)
        yi = np.repeat(np.arange(len(Y)), [len(l) for l in lists])
        if len(yi) == 0:
            return sel, best
        mi = seg[np.concatenate([np.asarray(l, int) for l in lists])]
        s, e = self.starts[sel[mi]], self.ends[sel[mi]]
        d = e - s
        L2 = (d * d).sum(axis=1)
        rel = Y[yi] - s
        u = (rel * d).sum(axis=1) / np.where(L2 > 0, L2, 1.0)
        u = np.where(L2 > 0, np.clip(u, 0.0, 1.0), 0.0)
        dist = np.linalg.norm(rel - u[:, None] * d, axis=1)
        ok = dist <= self.tol
        yi, mi, dist = yi[ok], mi[ok], dist[ok]
        order = np.lexsort((mi, dist, yi))
        yi, mi = yi[order], mi[order]
        first = np.r_[True, yi[1:] != yi[:-1]]
        best[yi[first]] = mi[first]
        return sel, best

    def in_E_many(self, i: int, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, float))
        hit = self._nearest(Y, ("ge", i))[1] >= 0
        rest = ~hit
        if rest.any():
            hit[rest] = self._in_flags(Y[rest])
        return hit

    def in_E(self, i: int, y) -> bool:
        return bool(self.in_E_many(i, y)[0])

    def E(self, i: int, per_segment: int = 5) -> np.ndarray:
        """Sample points of E_i (segment points only)."""
        if not (0 <= i <= self.m):
            raise InvalidInputError("chain index out of range")
        sel = self.levels >= i
        u = np.linspace(0.0, 1.0, per_segment)
        s, e = self.starts[sel], self.ends[sel]
        point = np.all(s == e, axis=1)
        pts = s[~point, None, :] + u[None, :, None] * (e - s)[~point, None, :]
        return np.vstack([pts.reshape(-1, self.complex.ambient_dim), s[point]])

    @property
    def E_sets(self) -> list:
        return [self.E(i) for i in range(self.m + 1)]

    def h_many(self, i: int, Y) -> np.ndarray:
        """Endpoints of the level-i segments through the rows of Y."""
        Y = np.atleast_2d(np.asarray(Y, float))
        sel, k = self._nearest(Y, ("eq", i))
        if np.any(k < 0):
            raise DomainError("y is not on a level-i segment")
        return self.ends[sel[k]].copy()

    def h(self, i: int, y):
        return self.h_many(i, y)[0]

    def F_many(self, i: int, Y, t: float) -> np.ndarray:
        """Straight-line retraction of E_i onto E_{i+1}, row by row."""
        if not (0 <= i < self.m):
            raise InvalidInputError("chain index out of range")
        if not (0.0 <= t <= 1.0):
            raise DomainError("t must lie in [0, 1]")
        Y = np.atleast_2d(np.asarray(Y, float))
        out = Y.copy()
        move = ~self.in_E_many(i + 1, Y)
        if move.any():
            out[move] = (1.0 - t) * Y[move] + t * self.h_many(i, Y[move])
        return out

    def F(self, i: int, y, t: float):
        return self.F_many(i, y, t)[0]


def _push_images(cx, S: SetModel, rec: PushRecord) -> np.ndarray:
    sset = set(cx.simplices[rec.sigma])
    out = []
    for p, c in zip(S.points, S.carriers):
        c = int(c)
        if c == rec.sigma:
            out.append(rec.cone.b_hbar(p)[1])
        elif sset.issubset(cx.simplices[c]):
            bw, _ = cx.simplex(c).bary(p)
            out.append(g_inverse(cx, rec.cone, p, c, bw))
        else:
            out.append(p)
    return np.array(out).reshape(-1, cx.ambient_dim)


def retract_chain(G: TransportMap, S: SetModel, history: list | None = None) -> RetractionChain:
    """Build the chain by replaying the recorded pushes on S."""
    cx = G.complex
    if history is None:
        history = [S.normalized(cx)]
        for rec in G.records:
            nxt, _ = push(cx, history[-1], rec.sigma, rec.z0, check=False)
            history.append(nxt)
    m = len(G.records)
    starts, ends, levels = [], [], []
    for i, rec in enumerate(G.records):
        Si = history[i]
        P = Si.points
        E = _push_images(cx, Si, rec)
        # fixed points of h_i belong to S_{i+1}, so a later level already holds them
        moved = np.any(P != E, axis=1)
        starts.append(P[moved])
        ends.append(E[moved])
        levels.append(np.full(int(moved.sum()), i))
    fin = history[m].point_set(cx)
    starts.append(fin)
    ends.append(fin)
    levels.append(np.full(len(fin), m))
    N = cx.ambient_dim
    tol = 1e-9 * max(cx.diameter, 1e-300)
    return RetractionChain(
        cx,
        np.vstack([x.reshape(-1, N) for x in starts]),
        np.vstack([x.reshape(-1, N) for x in ends]),
        np.concatenate(levels).astype(int),
        m,
        sorted(history[m].full),
        tol,
    )
