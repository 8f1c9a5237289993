import json
import math

import numpy as np
import pytest

from svebound import RunConfig, named_problem
from svebound.bifunctions import Affine, Factorable, Separable, Term, TermMap
from svebound.cones import Generated, Orthant
from svebound.constraints import Box, NegOrthant, Polyhedron, Sector
from svebound.model import (ProblemInstance, b_derivative, evaluate, midpoint_concavity,
                            sample_constraint)
from svebound.serialize import (InputError, problem_from_dict, problem_to_dict, parse_point,
                                to_jsonable)


def test_evaluate_examples(ex1, ex2):
    np.testing.assert_allclose(evaluate(ex1, [-1.0, -1.0], [0.0, 0.0]), [0, 0], atol=1e-15)
    np.testing.assert_allclose(evaluate(ex1, [-1.0, -1.0], [-3.0, -4.0]),
                               [-0.9932621, -0.8333333], atol=1e-7)
    np.testing.assert_allclose(evaluate(ex2, [1.0, 2.0], [3.0, 3.0]), [2, 1])


def test_b_derivative_examples(ex1, ex2, cfg):
    rng = np.random.default_rng(0)
    for _ in range(5):
        x0, z = rng.standard_normal(2), rng.standard_normal(2)
        np.testing.assert_allclose(b_derivative(ex2, x0, z, [1.0, 0.0]), [-1, 0])
    np.testing.assert_allclose(b_derivative(ex1, [-1.0, -1.0], [0.0, 0.0], [1.0, 0.0]), [2, 0])
    u = np.array([0.3, -0.7])
    for p in (ex1, ex2):
        a = b_derivative(p, [-0.4, -1.1], [-0.2, -0.3], u)
        np.testing.assert_allclose(b_derivative(p, [-0.4, -1.1], [-0.2, -0.3], 2 * u), 2 * a)


def test_fd_route_matches_analytic(ex1, cfg):
    x0, z, u = np.array([-0.4, -1.1]), np.array([-0.2, -0.3]), np.array([0.6, 0.8])
    a = b_derivative(ex1, x0, z, u, cfg, analytic=True)
    b = b_derivative(ex1, x0, z, u, cfg, analytic=False)
    np.testing.assert_allclose(a, b, atol=1e-5)


def test_affine_b_derivative_is_A():
    rng = np.random.default_rng(1)
    A, B, c = rng.standard_normal((3, 2)), rng.standard_normal((3, 2)), rng.standard_normal(3)
    p = ProblemInstance(Affine(A, B, c), Orthant(3), Box([-1.0, -1.0], [1.0, 1.0]))
    for _ in range(20):
        x0, z, u = rng.standard_normal((3, 2))
        np.testing.assert_allclose(b_derivative(p, x0, z, u), A @ u, atol=1e-14)


def test_separable_identity():
    rng = np.random.default_rng(2)
    g = TermMap(((Term("power", coef=-2.0, var=0, power=2), Term("linear", coef=(1.0, 0.5))),
                 (Term("exp_norm", coef=0.3),)), 2)
    h = TermMap(((Term("recip_norm", coef=1.0, shift=2.0),), (Term("power", var=1, power=3),)), 2)
    f = Separable(g, h)
    for _ in range(50):
        x, x2, z, z2 = rng.standard_normal((4, 2))
        np.testing.assert_allclose(f(x, z) - f(x, z2), f(x2, z) - f(x2, z2), atol=1e-12)


def test_factorable_identity():
    rng = np.random.default_rng(3)
    lam = TermMap(((Term("const", value=1.5), Term("power", var=0, power=2)),), 2)
    g = TermMap(((Term("linear", coef=(1.0, -1.0)),), (Term("exp_norm", coef=-1.0),)), 2)
    f = Factorable(lam, g)
    for _ in range(50):
        x, z, z2 = rng.standard_normal((3, 2))
        lz, lz2 = lam(z[None])[0], lam(z2[None])[0]
        np.testing.assert_allclose(f(x, z) * lz2, f(x, z2) * lz, atol=1e-12)


def test_sample_constraint(ex2):
    a = sample_constraint(ex2, 100, 7)
    assert len(a) == 100
    assert np.all(ex2.constraints.contains(a))
    assert np.any(np.all(a == 0, axis=1))
    np.testing.assert_array_equal(a, sample_constraint(ex2, 100, 7))
    K = NegOrthant(2, 1e3)
    s = K.sample(200, 0)
    assert np.all(s <= 0) and np.all(np.linalg.norm(s, axis=1) <= 1e3 + 1e-9)


@pytest.mark.parametrize("K", [NegOrthant(2), Sector(0.4), Box([-1.0, 0.0], [2.0, 1.0]),
                               Polyhedron(np.array([[1.0, 1.0], [-1.0, 0.0]]),
                                          np.array([1.0, 0.0]))])
def test_constraint_projection_is_nearest(K):
    rng = np.random.default_rng(4)
    X = 3 * rng.standard_normal((200, 2))
    P = K.project(X)
    assert np.all(K.contains(P, 1e-8))
    S = K.sample(400, 1)
    d = np.linalg.norm(X - P, axis=1)
    nearest_sample = np.min(np.linalg.norm(X[:, None] - S[None], axis=-1), axis=1)
    assert np.all(d <= nearest_sample + 1e-9)


def test_concavity_of_catalog(ex1, cfg):
    viol, _ = midpoint_concavity(ex1, cfg)
    assert viol <= 1e-9
    A = Affine(np.array([[1.0, 2.0]]), np.zeros((1, 2)), np.zeros(1))
    p = ProblemInstance(A, Orthant(1), Box([-2.0, -2.0], [2.0, 2.0]))
    assert midpoint_concavity(p, cfg)[0] <= 1e-9


def test_problem_validation():
    with pytest.raises(ValueError):
        ProblemInstance(Affine(np.eye(2), np.eye(2), np.zeros(2)), Orthant(3), NegOrthant(2))
    with pytest.raises(ValueError):
        named_problem("example-2", 0.0)
    with pytest.raises(ValueError):
        named_problem("example-2", math.pi / 3)


def test_problem_roundtrip(box_toy):
    d = json.loads(json.dumps(to_jsonable(problem_to_dict(box_toy))))
    q = problem_from_dict(d)
    x = np.array([0.3, -0.4])
    np.testing.assert_allclose(q.bifunction(x, x), box_toy.bifunction(x, x))
    assert q.constraints.to_dict() == box_toy.constraints.to_dict()
    p = problem_from_dict({"bifunction": {"variant": "named", "name": "example-2",
                                          "theta": 0.5}})
    assert p.constraints.theta == 0.5


def test_problem_generated_cone_roundtrip():
    d = {"bifunction": {"variant": "affine", "A": [[1, 0], [0, 1]], "B": [[0, 0], [0, 0]],
                        "c": [0, 0]},
         "cone": {"variant": "generated", "rays": [[1, 0], [1, 1]]},
         "constraints": {"variant": "sector", "theta": 0.3}}
    p = problem_from_dict(d)
    assert isinstance(p.cone, Generated)
    assert problem_from_dict(to_jsonable(problem_to_dict(p))).cone.to_dict() == p.cone.to_dict()


@pytest.mark.parametrize("d, path", [
    ({}, "bifunction"),
    ({"bifunction": {"variant": "nope"}}, "bifunction.variant"),
    ({"bifunction": {"variant": "affine", "A": [[1]], "B": [[1]], "c": [0]},
      "cone": {"variant": "orthant", "dim": 1}}, "constraints"),
    ({"bifunction": {"variant": "named", "name": "example-1"}, "dim_x": 3}, "dim_x"),
    ({"bifunction": {"variant": "named", "name": "example-1"},
      "cone": {"variant": "orthant", "dim": 3}}, "cone"),
])
def test_problem_errors_name_the_field(d, path):
    with pytest.raises(InputError) as e:
        problem_from_dict(d)
    assert e.value.path == path


def test_parse_point():
    np.testing.assert_allclose(parse_point("1,-2.5", 2), [1, -2.5])
    with pytest.raises(InputError):
        parse_point("1,x")
    with pytest.raises(InputError):
        parse_point("1,2,3", 2)


def test_to_jsonable_digits():
    assert to_jsonable(1 / 3) == 0.333333333333
    assert to_jsonable([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]
    assert to_jsonable(np.float64(2.0)) == 2.0


def test_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        RunConfig(budget_z=0)
    with pytest.raises(ValueError):
        RunConfig(zero_tol=-1.0)


@pytest.mark.parametrize("name", ["example-2", "example2", "Example_2", "catalog-example-2"])
def test_catalog_names(name):
    assert named_problem(name).name == "example-2"
    with pytest.raises(ValueError):
        named_problem("example-3")
