import math

import numpy as np
import pytest

from svebound import RunConfig
from svebound.certify import BoundCertificate, FORM_K
from svebound.solver import solve, start_points


@pytest.fixture(scope="module")
def run2(ex2, cfg):
    return solve(ex2, cfg, BoundCertificate("sigma", 0.5, FORM_K),
                 1.2 * np.array([math.sqrt(3), 1.0]))


def test_example2(run2, cfg):
    assert run2.status == "solved"
    assert np.linalg.norm(run2.x_star) <= 1e-4
    assert run2.nu_ka_final <= cfg.solve_zero_tol
    assert all(r["evaluations"] <= cfg.max_evals + 16 for r in run2.per_start)


def test_certified_distance(run2):
    assert run2.certified_distance >= np.linalg.norm(run2.x_star) - 1e-12


def test_trace_monotone(run2):
    v = [b for _, b in run2.trace]
    assert all(b <= a for a, b in zip(v, v[1:]))


def test_example1(ex1, cfg):
    r = solve(ex1, cfg, x0=[-1.5, -0.5])
    assert r.nu_ka_final <= 1e-4
    assert np.linalg.norm(r.x_star) <= 1e-2


def test_start_in_solution(ex2, cfg):
    r = solve(ex2, cfg, x0=[0.0, 0.0])
    assert r.iterations == 0 and r.status == "solved" and len(r.per_start) == 1


def test_deterministic(ex1):
    cfg = RunConfig(use_closed_form=False, starts=2, max_evals=400)
    a = solve(ex1, cfg, x0=[-1.0, -0.3])
    b = solve(ex1, cfg, x0=[-1.0, -0.3])
    assert a.trace == b.trace and a.trace_csv() == b.trace_csv()
    np.testing.assert_array_equal(a.x_star, b.x_star)


def test_start_points(ex2, cfg):
    S = start_points(ex2, cfg, [3.0, 4.0])
    assert len(S) == cfg.starts
    np.testing.assert_array_equal(S[0], [3, 4])
    np.testing.assert_array_equal(S, start_points(ex2, cfg, [3.0, 4.0]))
