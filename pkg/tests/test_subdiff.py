import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from svebound import RunConfig
from svebound.bifunctions import Affine, Separable, Term, TermMap
from svebound.cones import Generated, Orthant, sample_cone
from svebound.constraints import Box
from svebound.merit import MeritFunction, nu
from svebound.model import ProblemInstance
from svebound.subdiff import (ConvexityRefused, KinkError, b_star_C, b_star_K, gamma_audit,
                              grad_component, min_norm_point, subdiff_nu)

SAMPLED = RunConfig(use_closed_form=False)


def faces_oracle(P):
    """Nearest hull point to 0 by trying every affinely independent face."""
    best = None
    for k in range(1, min(len(P), P.shape[1] + 1) + 1):
        for S in itertools.combinations(range(len(P)), k):
            Q = P[list(S)]
            # minimize |Q^T w| with sum w = 1 through the KKT system
            M = np.block([[Q @ Q.T, np.ones((k, 1))], [np.ones((1, k)), np.zeros((1, 1))]])
            rhs = np.r_[np.zeros(k), 1.0]
            w = np.linalg.lstsq(M, rhs, rcond=None)[0][:k]
            if np.all(w >= -1e-12):
                v = float(np.linalg.norm(w @ Q))
                best = v if best is None else min(best, v)
    return best


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4).flatmap(
    lambda d: st.integers(1, 6).flatmap(
        lambda n: arrays(np.float64, (n, d), elements=st.floats(-5, 5)))))
def test_wolfe_matches_faces(P):
    x, w = min_norm_point(P)
    assert np.all(w >= -1e-12) and abs(w.sum() - 1) <= 1e-9
    np.testing.assert_allclose(w @ P, x, atol=1e-9)
    assert np.linalg.norm(x) == pytest.approx(faces_oracle(P), abs=1e-7)


def test_wolfe_simple():
    x, _ = min_norm_point([[1.0, 1.0], [1.0, -1.0]])
    np.testing.assert_allclose(x, [1, 0], atol=1e-12)
    x, _ = min_norm_point([[-1.0, 0.0], [1.0, 0.0], [0.0, 3.0]])
    np.testing.assert_allclose(x, [0, 0], atol=1e-12)
    with pytest.raises(ValueError):
        min_norm_point(np.zeros((0, 2)))


def two_active_problem():
    # at x = 0 the sup over z1 is attained at z1 = 0 and z1 = 1
    A = Affine(np.eye(2), np.array([[-1.0, 0.0], [1.0, 0.0]]), np.array([0.0, -1.0]))
    return ProblemInstance(A, Orthant(2), Box([0.0, 0.0], [1.0, 1.0]))


def test_grad_component_examples(ex2, cfg):
    g = grad_component(ex2, [math.sqrt(3), 1.0], [0.0, 0.0], cfg)
    np.testing.assert_allclose(g, [math.sqrt(3) / 2, 0.5], atol=1e-12)
    p = ProblemInstance(Affine(np.eye(2), np.zeros((2, 2)), np.zeros(2)), Orthant(2),
                        Box([-5.0, -5.0], [5.0, 5.0]))
    np.testing.assert_allclose(grad_component(p, [-3.0, -4.0], [0.0, 0.0], cfg), [-0.6, -0.8])
    with pytest.raises(KinkError):
        grad_component(p, [1.0, 1.0], [0.0, 0.0], cfg)


def test_grad_component_smooth_vs_fd(ex1, cfg):
    rng = np.random.default_rng(0)
    for _ in range(10):
        # keep f(x, z) outside C so the distance is smooth there
        x, z = -rng.random(2) - 0.5, -5 - rng.random(2)
        g = grad_component(ex1, x, z, cfg)
        phi = lambda y: float(ex1.cone.distance(ex1.bifunction(y, z)))
        h = 1e-6
        fd = [(phi(x + h * e) - phi(x - h * e)) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(g, fd, atol=1e-5)


def test_subdiff_examples(ex2, cfg):
    h = subdiff_nu(ex2, [math.sqrt(3), 1.0], cfg)
    np.testing.assert_allclose(h.generators, [[math.sqrt(3) / 2, 0.5]] * len(h.generators),
                               atol=1e-3)
    h = subdiff_nu(ex2, [0.0, 0.0], cfg)
    assert np.any(np.all(h.generators == 0, axis=1))


def test_subdiff_two_active():
    p = two_active_problem()
    h = subdiff_nu(p, [0.0, 0.0], SAMPLED)
    # refined near-maximizers add generators close to the two exact ones
    E = np.array([[-1.0, 0.0], [0.0, -1.0]])
    d = np.linalg.norm(h.generators[:, None] - E[None], axis=-1)
    assert np.all(d.min(axis=1) <= 1e-3)
    assert np.all(d.min(axis=0) <= 1e-9)
    G = E
    # directional derivatives of nu agree with the max over generators
    m = MeritFunction(p, SAMPLED)
    for u in ([1.0, 0.0], [0.0, 1.0], [0.6, 0.8]):
        u = np.array(u)
        t = 1e-6
        fd = (m.nu(t * u) - m.nu(np.zeros(2))) / t
        assert fd == pytest.approx(max(G @ u), abs=1e-4)


def test_subgradient_inequality(ex2, cfg):
    rng = np.random.default_rng(1)
    m = MeritFunction(ex2, cfg)
    Y = ex2.with_truncation(3.0).constraints.sample(100, 2)
    for x in ex2.with_truncation(2.0).constraints.sample(10, 3)[1:]:
        for g in subdiff_nu(ex2, x, cfg).generators:
            lhs = m.nu_batch(Y)
            rhs = m.nu(x) + (Y - x) @ g
            assert np.all(lhs >= rhs - 1e-6)


def test_subgradient_inequality_two_active():
    p = two_active_problem()
    m = MeritFunction(p, SAMPLED)
    Y = p.constraints.sample(100, 4)
    x = np.zeros(2)
    for g in subdiff_nu(p, x, SAMPLED).generators:
        assert np.all(m.nu_batch(Y) >= m.nu(x) + Y @ g - 1e-6)


def test_concavity_refused(cfg):
    g = TermMap(((Term("power", coef=1.0, var=0, power=2),),), 2)
    h = TermMap(((Term("const", value=0.0),),), 2)
    p = ProblemInstance(Separable(g, h), Orthant(1), Box([-2.0, -2.0], [2.0, 2.0]))
    with pytest.raises(ConvexityRefused) as e:
        subdiff_nu(p, [1.0, 0.0], cfg)
    assert e.value.violation > 1e-9


def test_b_star_K(ex2, box_toy, cfg):
    h = b_star_K(ex2, [1.0, 1.2], cfg)
    np.testing.assert_array_equal(h.generators, [[0.0, 0.0]])
    h = b_star_K(ex2, [-1.0, -1.0], cfg)
    assert h.sphere
    np.testing.assert_allclose(np.linalg.norm(h.generators, axis=1), 1.0)
    K = ex2.with_truncation(5.0).constraints.sample(500, 1)
    # base point is the projection, the origin
    assert np.all(h.generators @ K.T <= 1e-9)
    h = b_star_K(box_toy, [1.0, 0.5], cfg)
    G = h.generators[np.linalg.norm(h.generators, axis=1) > 0]
    np.testing.assert_allclose(G, [[1.0, 0.0]])


def test_b_star_K_normality(box_toy, cfg):
    rng = np.random.default_rng(5)
    K = box_toy.constraints.sample(300, 6)
    for x in 3 * rng.standard_normal((20, 2)):
        w = box_toy.constraints.project(x)
        for g in b_star_K(box_toy, x, cfg).generators:
            assert np.all((K - w) @ g <= 1e-9)


def test_b_star_C(cfg):
    h = b_star_C(Orthant(2), 1.0, cfg)
    assert h.sphere
    G = h.generators
    for v in ([-1.0, 0.0], [0.0, -1.0], [-1 / math.sqrt(2), -1 / math.sqrt(2)]):
        assert np.min(np.linalg.norm(G - v, axis=1)) <= 1e-2
    h0 = b_star_C(Orthant(2), 0.0, cfg)
    assert not h0.sphere
    assert np.any(np.all(h0.generators == 0, axis=1))
    h = b_star_C(Generated(np.array([[1.0, 0.0]])), 1.0, cfg)
    assert np.all(h.generators[:, 0] <= 1e-12)
    np.testing.assert_allclose(np.linalg.norm(h.generators, axis=1), 1.0)


@pytest.mark.parametrize("C", [Orthant(2), Generated(np.array([[1.0, 0.2], [0.0, 1.0]])),
                               Orthant(3)])
def test_b_star_C_polarity(C, cfg):
    members = sample_cone(C, 300, np.random.default_rng(7))
    for v in (0.0, 1.0):
        assert np.all(b_star_C(C, v, cfg).generators @ members.T <= 1e-9)


def test_gamma_examples(ex2, cfg):
    g, _ = gamma_audit(ex2, [[1.0, 1.2], [0.5, 0.4], [2.0, 1.5]], cfg)
    assert g == pytest.approx(1.0, abs=1e-6)
    g, rep = gamma_audit(ex2, [[-1.0, -1.0]], cfg)
    assert 0 < g <= 1
    with pytest.raises(ValueError):
        gamma_audit(ex2, [[0.0, 0.0]], cfg)


def test_gamma_refuted_at_apex_projection(ex2, cfg):
    # (-1, 0) lies in the polar arc of the sector at the apex, and nu vanishes
    # there, so 0 belongs to the sum hull
    g, _ = gamma_audit(ex2, [[1.0, -3.0]], cfg)
    assert g <= 1e-9
