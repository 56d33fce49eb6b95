"""Hausdorff-measure estimates, the radial-projection stretch factor and the
constants that bound how much a push can magnify H^a mass.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import gamma as gamma_fn

from .complex_core import Simplex, SimplicialComplex, face_frame
from .errors import DomainError, InvalidInputError, SelectionError

APEX_GAP_REL = 1e-3
TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Hausdorff measure
# ---------------------------------------------------------------------------

def omega(s: float) -> float:
    """Volume of the unit ball in R^s, extended to real s by the Gamma function."""
    return float(math.pi ** (s / 2.0) / gamma_fn(s / 2.0 + 1.0))


@dataclass
class MeasureEstimate:
    s: float
    value: float
    delta_ladder: list
    method: str
    per_delta: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _greedy_cover(X: np.ndarray, radius: float) -> np.ndarray:
    """Farthest-point centres until every point is within radius; returns labels."""
    k = X.shape[0]
    labels = np.zeros(k, dtype=int)
    d = np.linalg.norm(X - X[0], axis=1)
    centres = 1
    while True:
        far = int(d.argmax())
        if d[far] <= radius:
            break
        dn = np.linalg.norm(X - X[far], axis=1)
        closer = dn < d
        labels[closer] = centres
        d = np.minimum(d, dn)
        centres += 1
    return labels


def _cover_sum(X: np.ndarray, delta: float, s: float) -> float:
    labels = _greedy_cover(X, delta / 2.0)
    total = 0.0
    for lab in np.unique(labels):
        pts = X[labels == lab]
        diam = float(pdist(pts).max()) if len(pts) > 1 else 0.0
        total += (diam / 2.0) ** s
    return omega(s) * total


def hausdorff_measure_est(data, s: float, delta_ladder=None, cx: SimplicialComplex | None = None) -> MeasureEstimate:
    """Estimate H^s of a point cloud, or read off the H^s mass of a set model.

    Raw points with s = 0 give the exact count of distinct points.  Raw points
    with s > 0 are covered greedily at each scale of the ladder (default
    d/8, d/16, d/32 with d the cloud diameter); each cluster contributes
    omega_s (diam/2)^s; per_delta holds the running sup from coarse to fine
    and the largest value is reported.  A set model
    contributes its sample weights (plus flagged simplices of dimension s
    when a complex is supplied).
    """
    if s < 0:
        raise InvalidInputError("s must be nonnegative")
    from .pushout import SetModel

    if isinstance(data, SetModel):
        if s == 0:
            pts = data.point_set(cx) if cx is not None else data.points
            n = len(np.unique(np.round(pts, 12), axis=0)) if len(pts) else 0
            return MeasureEstimate(s, float(n), [], "exact-count")
        val = float(np.sum(data.weights))
        if cx is not None:
            val = data.mass(cx, s, in_q=False)
        return MeasureEstimate(s, val, [], "weighted-sum")
    X = np.asarray(data, dtype=float)
    if X.size == 0:
        return MeasureEstimate(s, 0.0, list(delta_ladder or []), "exact-count" if s == 0 else "covering")
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if s == 0:
        return MeasureEstimate(0.0, float(len(np.unique(X, axis=0))), [], "exact-count")
    if delta_ladder is None:
        d = float(pdist(X).max()) if len(X) > 1 else 0.0
        delta_ladder = [d / 8, d / 16, d / 32]
    ladder = [float(x) for x in delta_ladder]
    if len(X) == 1 or not any(x > 0 for x in ladder):
        return MeasureEstimate(s, 0.0, ladder, "covering", [0.0] * len(ladder))
    raw = {dl: _cover_sum(X, dl, s) for dl in set(ladder)}
    # estimate at delta = sup of the greedy sums over scales >= delta, so a
    # finer scale never reports less than a coarser one
    env, run = {}, 0.0
    for dl in sorted(raw, reverse=True):
        run = max(run, raw[dl])
        env[dl] = run
    vals = [env[dl] for dl in ladder]
    return MeasureEstimate(s, float(max(vals)), ladder, "covering", vals)


# ---------------------------------------------------------------------------
# stretch factor of the radial projection onto one face
# ---------------------------------------------------------------------------

def _facet_index(sigma: Simplex, tau) -> int:
    ids = set(tau.ids if isinstance(tau, Simplex) else tau)
    if len(ids) != sigma.dim or not ids.issubset(sigma.ids):
        raise InvalidInputError("tau must be an (n-1)-face of sigma")
    (j,) = [i for i, v in enumerate(sigma.ids) if v not in ids]
    return j


def lambda_eig(sigma: Simplex, tau, z, y) -> float:
    """Largest singular value of D h_{z,tau} at y: |z - x| / (z_n - y_n), x = h(y)."""
    j = _facet_index(sigma, tau)
    origin, E = face_frame(sigma, j)
    zl = E @ (np.asarray(z, float) - origin)
    yl = E @ (np.asarray(y, float) - origin)
    zn, yn = zl[-1], yl[-1]
    scale = max(sigma.diameter, 1e-300)
    if np.linalg.norm(yl - zl) <= 1e-14 * scale or yn < -1e-12 * scale or yn >= zn:
        raise DomainError("y is not in the cone zeta(z; tau)")
    x = zn / (zn - yn) * (yl - zl) + zl
    fw, _ = sigma.facet(j).bary(origin + x[:-1] @ E[:-1])
    if fw.min() < -1e-9:
        raise DomainError("y is not in the cone zeta(z; tau)")
    return float(np.linalg.norm(zl - x) / (zn - yn))


def magnification_bound(sigma: Simplex, tau, z, points, weights, a: float) -> dict:
    """Weighted sums of (diam/(z_n - y_n))^a and of lambda^a over the samples."""
    P = np.atleast_2d(np.asarray(points, float)) if len(points) else np.zeros((0, sigma.ambient_dim))
    w = np.asarray(weights, float)
    if len(P) == 0:
        return {"bound": 0.0, "empirical": 0.0}
    j = _facet_index(sigma, tau)
    origin, E = face_frame(sigma, j)
    zn = (E @ (np.asarray(z, float) - origin))[-1]
    bound = 0.0
    emp = 0.0
    for p, wi in zip(P, w):
        yn = (E @ (p - origin))[-1]
        lam = lambda_eig(sigma, tau, z, p)
        bound += wi * (sigma.diameter / (zn - yn)) ** a
        emp += wi * lam ** a
    return {"bound": float(bound), "empirical": float(emp)}


# ---------------------------------------------------------------------------
# concentric shrunken simplex and the apex search
# ---------------------------------------------------------------------------

def gamma_interval(n: int) -> tuple:
    return (1.0 / (2 * (n + 1)), 1.0)


def sigma_gamma(sigma: Simplex, gamma: float) -> Simplex:
    """Vertices gamma*v(j) + (1 - gamma)*barycenter."""
    lo, hi = gamma_interval(sigma.dim)
    if not (lo < gamma < hi):
        raise InvalidInputError(f"gamma must lie in ({lo}, {hi})")
    return Simplex(sigma.ids, gamma * sigma.coords + (1.0 - gamma) * sigma.barycenter)


def face_sums(sigma: Simplex, Z, Y, W, a: float) -> np.ndarray:
    """For each candidate apex (rows of Z) and facet j, the sum of
    w * (diam / (z_n - y_n))^a over samples y whose ray from z exits through facet j.

    Heights above facet j are read from barycentric coordinates:
    x_n = beta_j(x) * h_j.
    """
    Z = np.atleast_2d(Z)
    m, n1 = Z.shape[0], sigma.dim + 1
    if len(Y) == 0:
        return np.zeros((m, n1))
    alpha, _ = sigma.bary(Z)
    beta, _ = sigma.bary(np.atleast_2d(Y))
    W = np.asarray(W, float)
    ratio = (alpha[:, None, :] - beta[None, :, :]) / alpha[:, None, :]
    top = ratio.max(axis=2, keepdims=True)
    exits = ratio >= top - TIE_TOL
    gap = (alpha[:, None, :] - beta[None, :, :]) * sigma.heights[None, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(exits, (sigma.diameter / gap) ** a, 0.0)
    return np.einsum("mkj,k->mj", term, W)


@dataclass
class ApexChoice:
    z: np.ndarray
    draws: int
    gamma: float
    phi: float | None
    vacuous: bool
    face_sums: np.ndarray
    mass: float


def quantitative(n: int, a: float, has_mass: bool) -> bool:
    return has_mass and n >= a + 1 and (a + 1) / (n + a) < 1.0


def apex_ok(sigma: Simplex, Z, avoid) -> np.ndarray:
    Z = np.atleast_2d(Z)
    if avoid is None or len(avoid) == 0:
        return np.ones(len(Z), dtype=bool)
    d = np.linalg.norm(Z[:, None, :] - np.atleast_2d(avoid)[None, :, :], axis=2).min(axis=1)
    return d >= APEX_GAP_REL * sigma.diameter


def acceptance(sigma: Simplex, Z, Y, W, a: float, phi: float | None, avoid=None) -> np.ndarray:
    """Boolean mask: admissible and every facet sum <= phi * total weight."""
    ok = apex_ok(sigma, Z, avoid)
    if phi is None:
        return ok
    sums = face_sums(sigma, Z, Y, W, a)
    return ok & np.all(sums <= phi * float(np.sum(W)) * (1 + 1e-12), axis=1)


def select_z0(sigma: Simplex, points, weights, a: float, rng=None, avoid=None,
              budget: int | None = None, phi: float | None = None,
              gamma: float | None = None) -> ApexChoice:
    """Uniform draws in sigma_gamma until one satisfies every facet bound.

    ``points``/``weights`` are the samples in Int sigma; ``avoid`` lists every
    sample of S in sigma (apex admissibility).  When the bound is vacuous
    (no interior mass, or dim sigma < a + 1) the first admissible draw wins.
    ``gamma`` overrides the shrink factor; phi then follows phi_tilde(gamma).
    """
    rng = np.random.default_rng(rng)
    n = sigma.dim
    Y = np.atleast_2d(np.asarray(points, float)) if len(points) else np.zeros((0, sigma.ambient_dim))
    W = np.asarray(weights, float)
    mass = float(W.sum())
    quant = quantitative(n, a, mass > 0)
    if quant:
        g = (a + 1.0) / (n + a) if gamma is None else gamma
        if phi is None:
            phi = phi_constants(a, n, sigma.thickness, gamma)["phi_tilde"]
    else:
        g = 0.5 if gamma is None else gamma
        phi = None
    sg = sigma_gamma(sigma, g)
    if avoid is None:
        avoid = Y
    budget = 64 * (n + 2) if budget is None else budget
    for k in range(budget):
        z = sg.sample_interior(rng, 1)
        if acceptance(sigma, z, Y, W, a, phi, avoid)[0]:
            return ApexChoice(z=z[0], draws=k + 1, gamma=g, phi=phi, vacuous=not quant,
                              face_sums=face_sums(sigma, z, Y, W, a)[0], mass=mass)
    raise SelectionError("apex search exhausted its draw budget",
                         {"budget": budget, "gamma": g, "phi": phi, "mass": mass})


# ---------------------------------------------------------------------------
# closed-form constants
# ---------------------------------------------------------------------------

def phi_tilde(a: float, r: int, t: float, gamma: float) -> float:
    num = 2.0 ** (2 * r - a - 2) * r * (r + 1.0) ** (r - a - 1) * (r + 2)
    den = (1.0 - gamma) ** (r - 1) * gamma ** (a + 1) * t ** a
    return num / den


def phi_constants(a: float, r: int, t: float, gamma: float | None = None) -> dict:
    """phi_tilde(a, r, t, gamma) and phi = phi_tilde at gamma* = (a+1)/(r+a)."""
    if a < 0 or r < a + 1:
        raise InvalidInputError("need r >= a + 1 and a >= 0")
    if not (t > 0):
        raise InvalidInputError("thickness must be positive")
    gs = (a + 1.0) / (r + a)
    if float(a).is_integer():
        # at gamma* the closed form has integer factors; one final division keeps it exact
        ai = int(a)
        num = 2 ** (2 * r - ai - 2) * r * (r + 1) ** (r - ai - 1) * (r + 2) * (r + ai) ** (r + ai)
        den = (r - 1) ** (r - 1) * (ai + 1) ** (ai + 1)
        phi = float(Fraction(num, den)) / t ** ai
    else:
        phi = phi_tilde(a, r, t, gs)
    pt = phi if gamma is None else phi_tilde(a, r, t, gamma)
    return {"phi_tilde": pt, "phi": phi, "gamma_star": gs}


def stirling2(n: int, k: int) -> int:
    return sum((-1) ** i * math.comb(k, i) * (k - i) ** n for i in range(k + 1)) // math.factorial(k)


@lru_cache(maxsize=None)
def _chains(j: int, rest: int) -> int:
    # ways to add `rest` new elements in j nonempty ordered batches
    if j == 0:
        return 1 if rest == 0 else 0
    return sum(math.comb(rest, k) * _chains(j - 1, rest - k) for k in range(1, rest + 1))


def N_filtrations(j: int, i: int, a: int) -> int:
    """Number of strict chains V0 < V1 < ... < Vj = {0..i} with V0 = {0..a}."""
    if i < a:
        return 0
    return _chains(j, i - a)


def psi_m(m: int, a: int, phi: float) -> float:
    if m < a:
        return 0.0
    if m == a:
        return 1.0
    return float(sum(N_filtrations(j, m, a) * phi ** j for j in range(0, m - a + 1)))


@dataclass
class ConstantsBundle:
    a: float
    q: int
    t_min: float | None
    gamma_star: float | None
    phi: float | None
    psi: float
    K1: float | None
    K2: float
    K: float

    def to_dict(self) -> dict:
        return {"a": self.a, "q": self.q, "t_min": self.t_min, "phi": self.phi,
                "psi": self.psi, "K1": self.K1, "K2": self.K2, "K": self.K,
                "gamma_star": self.gamma_star}


def t_min(cx: SimplicialComplex, a: float):
    th = [cx.simplex(i).thickness for i in np.flatnonzero(cx.q_marks) if cx.dims[i] > a]
    return float(min(th)) if th else None


def K_constants(cx: SimplicialComplex, a: float) -> ConstantsBundle:
    """Mass-magnification constants of the subcomplex Q for target dimension a."""
    if a < 0:
        raise InvalidInputError("a must be nonnegative")
    q = cx.q_dim
    if q < 0:
        raise InvalidInputError("Q is empty")
    tops = [cx.simplex(i).volume for i in np.flatnonzero(cx.q_marks) if cx.dims[i] == q]
    K1 = float(sum(tops) / min(tops)) if tops and min(tops) > 0 else None
    tm = t_min(cx, a)
    integral = float(a).is_integer()
    if not integral or a >= q or tm is None:
        # mass lands in a skeleton of H^a-measure zero, or a >= q: no chain growth
        K2 = 1.0
        psi = 1.0
        K = max(K1 or 1.0, K2, 1.0)
        return ConstantsBundle(a, q, tm, None, None, psi, K1, K2, K)
    ai = int(a)
    pc = phi_constants(ai, q, tm)
    phi = pc["phi"]
    psi = max(psi_m(m, ai, phi) for m in range(1, q + 1))
    K2 = math.comb(q + 1, ai + 1) * psi
    K = max(K1 or 0.0, K2)
    return ConstantsBundle(float(a), q, tm, pc["gamma_star"], phi, psi, K1, K2, K)
