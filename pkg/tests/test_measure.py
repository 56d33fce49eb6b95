import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polypush.complex_core import Simplex, SimplicialComplex, face_frame, ray_boundary_intersection
from polypush.errors import InvalidInputError, SelectionError
from polypush.measure import (
    K_constants,
    N_filtrations,
    face_sums,
    gamma_interval,
    hausdorff_measure_est,
    lambda_eig,
    magnification_bound,
    omega,
    phi_constants,
    phi_tilde,
    psi_m,
    select_z0,
    sigma_gamma,
    stirling2,
)
from polypush.pushout import SetModel

from helpers import random_simplex

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SIGMA = Simplex((0, 1, 2), TRI)
Z = np.array([1 / 3, 1 / 3])


# measure estimator -----------------------------------------------------------

def test_counting_measure():
    X = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [2, 2]], float)
    assert hausdorff_measure_est(X, 0).value == 5
    assert hausdorff_measure_est(np.vstack([X, X]), 0).value == 5
    assert hausdorff_measure_est(np.zeros((0, 2)), 0.5).value == 0


def test_ball_volumes():
    assert omega(1) == pytest.approx(2.0)
    assert omega(2) == pytest.approx(math.pi)
    assert omega(0) == pytest.approx(1.0)


def test_segment_length_estimate():
    rng = np.random.default_rng(0)
    u = rng.uniform(0, 1, 1000)
    X = np.c_[u, np.zeros_like(u)]
    est = hausdorff_measure_est(X, 1, [0.1, 0.05, 0.02])
    assert est.value == pytest.approx(1.0, abs=0.05)
    assert est.method == "covering"


def test_estimate_stable_under_denser_sampling():
    rng = np.random.default_rng(1)
    a = np.c_[rng.uniform(0, 1, 1000), np.zeros(1000)]
    b = np.c_[rng.uniform(0, 1, 2000), np.zeros(2000)]
    ea = hausdorff_measure_est(a, 1, [0.1, 0.05, 0.02]).value
    eb = hausdorff_measure_est(b, 1, [0.1, 0.05, 0.02]).value
    assert abs(ea - eb) / eb < 0.02


def test_estimate_monotone_in_delta():
    rng = np.random.default_rng(2)
    th = rng.uniform(0, 2 * np.pi, 3000)
    X = np.c_[np.cos(th), np.sin(th)]
    est = hausdorff_measure_est(X, 1, [0.4, 0.2, 0.1, 0.05])
    vals = est.per_delta
    assert all(vals[i] <= vals[i + 1] for i in range(len(vals) - 1))
    assert est.value == pytest.approx(2 * np.pi, rel=0.05)


def test_estimate_rejects_negative_s():
    with pytest.raises(InvalidInputError):
        hausdorff_measure_est(np.zeros((3, 2)), -1)


def test_set_model_measure():
    cx = SimplicialComplex(TRI, [(0, 1, 2)])
    S = SetModel(1.0, [[0.2, 0.2]], [0], [0.3], {cx.id_of((0, 1))}).normalized(cx)
    assert hausdorff_measure_est(S, 1, cx=cx).value == pytest.approx(1.3)
    # two flagged vertices and one sample
    assert hausdorff_measure_est(S, 0, cx=cx).value == 3


# stretch factor ----------------------------------------------------------------

def test_lambda_example():
    assert lambda_eig(SIGMA, (0, 1), Z, [1 / 3, 1 / 6]) == pytest.approx(2.0)


def test_lambda_on_the_face():
    y = np.array([0.6, 0.0])
    assert lambda_eig(SIGMA, (0, 1), Z, y) == pytest.approx(np.linalg.norm(Z - y) / Z[1])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_lambda_bounds(seed):
    rng = np.random.default_rng(seed)
    s = random_simplex(rng, 2)
    z = rng.dirichlet(np.full(3, 3.0)) @ s.coords
    y = rng.dirichlet(np.ones(3)) @ s.coords
    hit = ray_boundary_intersection(s, z, y - z)
    tau = hit.face if len(hit.face) == 2 else s.facet(int(np.argmin(hit.weights))).ids
    j = [i for i, v in enumerate(s.ids) if v not in tau][0]
    origin, E = face_frame(s, j)
    zn = (E @ (z - origin))[-1]
    yn = (E @ (y - origin))[-1]
    lam = lambda_eig(s, tau, z, y)
    assert 1 - 1e-9 <= lam <= s.diameter / (zn - yn) * (1 + 1e-9)


def test_magnification_examples():
    assert magnification_bound(SIGMA, (0, 1), Z, [], [], 1.0) == {"bound": 0.0, "empirical": 0.0}
    out = magnification_bound(SIGMA, (0, 1), Z, [[1 / 3, 1 / 6]], [1.0], 1.0)
    assert out["empirical"] == pytest.approx(2.0)
    assert out["bound"] == pytest.approx(6 * np.sqrt(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_empirical_below_bound(seed, a):
    rng = np.random.default_rng(seed)
    s = random_simplex(rng, 2)
    z = rng.dirichlet(np.full(3, 3.0)) @ s.coords
    j = 0
    tau = s.facet(j).ids
    # samples whose ray from z leaves through the facet opposite v0
    pts = []
    while len(pts) < 10:
        y = rng.dirichlet(np.ones(3)) @ s.coords
        if ray_boundary_intersection(s, z, y - z).weights[j] < 1e-12:
            pts.append(y)
    w = rng.uniform(0, 1, 10)
    out = magnification_bound(s, tau, z, pts, w, a)
    assert out["empirical"] <= out["bound"] * (1 + 1e-9)


# apex selection ------------------------------------------------------------------

def test_sigma_gamma_example():
    sg = sigma_gamma(SIGMA, 2 / 3)
    assert np.allclose(sg.coords, [[1 / 9, 1 / 9], [7 / 9, 1 / 9], [1 / 9, 7 / 9]])


def test_gamma_interval_enforced():
    assert gamma_interval(2) == (1 / 6, 1.0)
    for g in (0.1, 1 / 6, 1.0, 1.2):
        with pytest.raises(InvalidInputError):
            sigma_gamma(SIGMA, g)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 0.99))
def test_shrunken_vertices_interior(seed, g):
    s = random_simplex(np.random.default_rng(seed), 3)
    W, _ = s.bary(sigma_gamma(s, g).coords)
    assert W.min() > 0


def _face_sums_oracle(sigma, z, Y, W, a):
    out = np.zeros(sigma.dim + 1)
    for y, w in zip(Y, W):
        hit = ray_boundary_intersection(sigma, z, y - z)
        for j in np.flatnonzero(hit.weights < 1e-12):
            origin, E = face_frame(sigma, int(j))
            zn = (E @ (z - origin))[-1]
            yn = (E @ (y - origin))[-1]
            out[j] += w * (sigma.diameter / (zn - yn)) ** a
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_face_sums_against_frames(seed):
    rng = np.random.default_rng(seed)
    s = random_simplex(rng, int(rng.integers(2, 4)))
    z = rng.dirichlet(np.full(s.dim + 1, 3.0)) @ s.coords
    Y = rng.dirichlet(np.ones(s.dim + 1), 8) @ s.coords
    W = rng.uniform(0.1, 1, 8)
    got = face_sums(s, z, Y, W, 1.0)[0]
    assert np.allclose(got, _face_sums_oracle(s, z, Y, W, 1.0), rtol=1e-9)


def test_select_with_no_mass():
    ch = select_z0(SIGMA, [], [], 1.0, rng=0)
    assert ch.vacuous and ch.draws == 1
    assert SIGMA.bary(ch.z)[0].min() > 0


def test_select_respects_face_bound():
    rng = np.random.default_rng(3)
    Y = SIGMA.sample_interior(rng, 50)
    W = np.full(50, 0.02)
    ch = select_z0(SIGMA, Y, W, 1.0, rng=4)
    assert not ch.vacuous
    assert np.all(ch.face_sums <= ch.phi * W.sum() * (1 + 1e-12))
    assert np.allclose(ch.face_sums, _face_sums_oracle(SIGMA, ch.z, Y, W, 1.0), rtol=1e-9)
    g = ch.gamma
    assert SIGMA.bary(ch.z)[0].min() >= (1 - g) / 3 - 1e-12


def test_select_gamma_override():
    rng = np.random.default_rng(3)
    Y = SIGMA.sample_interior(rng, 20)
    ch = select_z0(SIGMA, Y, np.ones(20), 1.0, rng=1, gamma=0.5)
    assert ch.gamma == 0.5
    assert ch.phi == pytest.approx(phi_tilde(1.0, 2, SIGMA.thickness, 0.5))


def test_select_budget_exhaustion():
    rng = np.random.default_rng(3)
    Y = SIGMA.sample_interior(rng, 20)
    with pytest.raises(SelectionError) as e:
        select_z0(SIGMA, Y, np.ones(20), 1.0, rng=0, budget=5, phi=1e-9)
    assert e.value.diagnostics["budget"] == 5


# closed-form constants --------------------------------------------------------------

def test_phi_example():
    assert phi_constants(1, 2, 1.0)["phi"] == 108.0
    assert phi_constants(1, 2, 0.25)["phi"] == pytest.approx(432.0)
    assert phi_constants(1, 3, 1.0)["phi"] > 108.0


def test_phi_is_minimum_over_gamma():
    for a, r in [(1, 2), (1, 3), (2, 3), (0.5, 2)]:
        pc = phi_constants(a, r, 0.3)
        lo, _ = gamma_interval(r)
        grid = np.linspace(lo + 1e-3, 1 - 1e-3, 400)
        vals = np.array([phi_tilde(a, r, 0.3, g) for g in grid])
        assert pc["phi"] <= vals.min() * (1 + 1e-12)
        assert abs(grid[vals.argmin()] - pc["gamma_star"]) < 5e-3


def test_phi_preconditions():
    with pytest.raises(InvalidInputError):
        phi_constants(2, 2, 1.0)
    with pytest.raises(InvalidInputError):
        phi_constants(1, 2, 0.0)


def test_filtration_counts():
    assert N_filtrations(0, 1, 1) == 1
    assert N_filtrations(1, 2, 1) == 1
    assert N_filtrations(2, 2, 1) == 0
    assert N_filtrations(2, 3, 1) == 2
    assert N_filtrations(0, 0, 1) == 0


@pytest.mark.parametrize("j,r", [(1, 1), (2, 3), (3, 3), (2, 5), (4, 6)])
def test_filtrations_are_ordered_partitions(j, r):
    assert N_filtrations(j, r + 1, 1) == math.factorial(j) * stirling2(r, j)


def test_psi_values():
    assert psi_m(0, 1, 5.0) == 0.0
    assert psi_m(1, 1, 5.0) == 1.0
    assert psi_m(2, 1, 5.0) == 5.0
    assert psi_m(3, 1, 5.0) == 5.0 + 2 * 25.0
    assert all(psi_m(m, 1, 2.0) >= 1 for m in range(1, 6))


def test_constants_single_top_simplex():
    cx = SimplicialComplex(TRI, [(0, 1, 2)]).with_q([0])
    c = K_constants(cx, 2)
    assert c.K1 == 1.0 and c.K2 == 1.0
    c = K_constants(cx, 1)
    phi = phi_constants(1, 2, SIGMA.thickness)["phi"]
    assert c.phi == pytest.approx(phi)
    assert c.K2 == pytest.approx(3 * phi)
    assert c.K == c.K2


def test_constants_reject_bad_input():
    cx = SimplicialComplex(TRI, [(0, 1, 2)])
    with pytest.raises(InvalidInputError):
        K_constants(cx, 1)
    with pytest.raises(InvalidInputError):
        K_constants(cx.with_q([0]), -1)
