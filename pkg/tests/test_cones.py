import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from svebound import cones
from svebound.cones import Generated, HalfspaceCone, Orthant, Product

SQ2 = math.sqrt(2.0)


def random_cone(rng, dim, kind=None):
    kind = rng.integers(3) if kind is None else kind
    if kind == 0:
        return Orthant(dim)
    while True:
        M = rng.standard_normal((int(rng.integers(1, 2 * dim + 1)), dim))
        try:
            return HalfspaceCone(M) if kind == 1 else Generated(M)
        except ValueError:
            continue  # trivial or whole-space draw


def grid_projection(cone, y, half=3.0, n=1201):
    g = np.linspace(-half, half, n)
    P = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    P = P[np.atleast_1d(cone.contains(P, 1e-12))]
    i = np.argmin(np.linalg.norm(P - y, axis=1))
    return P[i], float(np.linalg.norm(P[i] - y))


class TestExamples:
    def test_orthant_projection(self):
        np.testing.assert_allclose(Orthant(2).project([-1.0, 2.0]), [0, 2])
        np.testing.assert_allclose(Orthant(2).project([3.0, 4.0]), [3, 4])

    def test_orthant_distance(self):
        assert Orthant(2).distance([-3.0, -4.0]) == pytest.approx(5.0)
        assert Orthant(2).distance([2.0, 1.0]) == 0.0

    def test_halfspace_against_grid(self):
        C = HalfspaceCone(np.array([[1.0, 0.0], [1 / SQ2, 1 / SQ2]]))
        y = np.array([-1.0, 0.0])
        q, d = grid_projection(C, y)
        np.testing.assert_allclose(C.project(y), [0, 0], atol=1e-12)
        np.testing.assert_allclose(C.project(y), q, atol=1e-2)
        assert C.distance(y) == pytest.approx(1.0)
        assert C.distance(y) == pytest.approx(d, abs=1e-2)

    def test_polar_examples(self):
        P = cones.polar_neg(Orthant(2))
        np.testing.assert_allclose(cones.cone_generators(P), -np.eye(2))
        P = cones.polar_neg(Generated(np.array([[1.0, 0.0]])))
        assert isinstance(P, HalfspaceCone)
        assert P.contains([-2.0, 7.0]) and not P.contains([0.1, 0.0])

    def test_polar_halfspace_by_definition(self):
        rng = np.random.default_rng(3)
        C = HalfspaceCone(rng.standard_normal((3, 3)))
        P = cones.polar_neg(C)
        members = cones.sample_cone(C, 400, rng)
        Y = rng.standard_normal((2000, 3))
        # y* in polar iff <y*, c> <= 0 for every sampled c; sampling gives one direction only
        inside = np.atleast_1d(P.contains(Y, 1e-9))
        assert np.all(Y[inside] @ members.T <= 1e-8)
        Q = cones.sample_cone(P, 400, rng)
        assert np.all(Q @ members.T <= 1e-8)

    def test_excess(self):
        e = cones.excess([[-3.0, -4.0], [1.0, 1.0]], Orthant(2))
        assert e.value == pytest.approx(5.0)
        np.testing.assert_allclose(e.witness, [-3, -4])
        assert cones.excess([[0.0, 0.0]], Orthant(2)).value == 0.0
        assert cones.excess([[-1.0, 0.0], [0.0, -2.0]], Orthant(2)).value == pytest.approx(2.0)
        with pytest.raises(ValueError):
            cones.excess(np.zeros((0, 2)), Orthant(2))

    def test_c_bounded_probe(self):
        assert cones.c_bounded_probe([[-1.0, 0.0], [5.0, 5.0]], Orthant(2), 2.0)
        assert not cones.c_bounded_probe([[-3.0, 0.0]], Orthant(2), 2.0)
        assert cones.c_bounded_probe(np.zeros((0, 2)), Orthant(2), 0.0)

    def test_depth(self):
        assert cones.depth(Orthant(2), [1 / SQ2, 1 / SQ2]) == pytest.approx(1 / SQ2)
        th = math.pi / 6
        assert cones.depth(Orthant(2), [math.cos(th), math.sin(th)]) == pytest.approx(0.5)
        assert cones.depth(Orthant(2), [-1.0, 5.0]) == pytest.approx(-1.0)

    def test_depth_ball_inclusion(self):
        rng = np.random.default_rng(8)
        ang = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
        B = np.c_[np.cos(ang), np.sin(ang)]
        for C in (Orthant(2), HalfspaceCone(np.array([[1.0, 0.2], [0.1, 1.0]]))):
            for y in cones.sample_cone(C, 30, rng):
                s = cones.depth(C, y)
                if s <= 1e-8:
                    continue  # boundary points: depth is rounding noise
                assert np.all(np.atleast_1d(C.contains(y + s * B, 1e-9)))
                assert not np.all(np.atleast_1d(C.contains(y + 1.01 * s * B, 0.0)))

    def test_product(self):
        C = Product((Orthant(1), HalfspaceCone(np.array([[1.0, 1.0]]))))
        y = np.array([-1.0, -1.0, 0.0])
        np.testing.assert_allclose(C.project(y), [0.0, -0.5, 0.5])


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_moreau_matches_dykstra(dim):
    rng = np.random.default_rng(dim)
    for _ in range(20):
        C = random_cone(rng, dim, kind=1)
        Y = 3 * rng.standard_normal((10, dim))
        a = C.project(Y)
        b = HalfspaceCone(C.normals, method="dykstra").project(Y)
        np.testing.assert_allclose(a, b, atol=1e-7)


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_projection_kkt(dim):
    # y - P(y) lies in the polar cone and is orthogonal to P(y)
    rng = np.random.default_rng(10 + dim)
    for _ in range(30):
        C = random_cone(rng, dim)
        Y = 3 * rng.standard_normal((20, dim))
        P = C.project(Y)
        G = cones.cone_generators(C)
        R = Y - P
        assert np.all(np.atleast_1d(C.contains(P, 1e-8)))
        assert np.all(R @ G.T <= 1e-7)
        np.testing.assert_allclose(np.sum(R * P, axis=1), 0, atol=1e-7)


vectors = st.integers(2, 5).flatmap(
    lambda d: arrays(np.float64, d, elements=st.floats(-50, 50)))


@settings(max_examples=150, deadline=None)
@given(vectors, st.integers(0, 2), st.integers(0, 2**16))
def test_projection_properties(y, kind, seed):
    rng = np.random.default_rng(seed)
    dim = len(y)
    C = random_cone(rng, dim, kind)
    p = C.project(y)
    np.testing.assert_allclose(C.project(p), p, atol=1e-10 * max(1, np.abs(y).max()))
    assert C.distance(y) == pytest.approx(np.linalg.norm(y - p), abs=1e-12)
    assert C.distance(y) <= np.linalg.norm(y) + 1e-12
