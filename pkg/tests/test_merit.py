import math

import numpy as np
import pytest

from svebound import RunConfig
from svebound.merit import MeritFunction, active_set, nu, nu_ka

SAMPLED = RunConfig(use_closed_form=False)


def test_example1_values(ex1):
    assert nu(ex1, [-1.0, -1.0], SAMPLED).nu == pytest.approx(math.sqrt(2), abs=2e-3)
    assert nu(ex1, [0.0, 0.0], SAMPLED).nu == pytest.approx(0.0, abs=1e-12)
    assert nu_ka(ex1, [0.0, 0.0], SAMPLED).nu_ka == pytest.approx(0.0, abs=1e-12)


def test_example2_values(ex2):
    r = nu(ex2, [math.sqrt(3), 1.0], SAMPLED)
    assert r.nu == pytest.approx(2.0, abs=2e-2)
    r = nu_ka(ex2, [-1.0, -1.0], SAMPLED)
    assert r.nu == pytest.approx(0.0, abs=1e-12)
    assert r.dist_x_K == pytest.approx(math.sqrt(2))
    assert r.nu_ka == pytest.approx(math.sqrt(2))


def test_nu_ka_equals_nu_on_K(ex2):
    for x in ex2.constraints.sample(20, 3):
        r = nu_ka(ex2, x, SAMPLED)
        assert r.dist_x_K == 0.0 and r.nu_ka == r.nu


def test_sampled_matches_closed_form(ex1, ex2):
    rng = np.random.default_rng(0)
    for p in (ex1, ex2):
        for x in p.constraints.project(2 * rng.standard_normal((15, 2))):
            a = nu(p, x, SAMPLED).nu
            b = nu(p, x).nu
            assert a <= b + 1e-12
            assert b - a <= 2e-3 + (p.truncation_gap or 0.0)


def test_zero_merit_means_images_in_cone(box_toy):
    x = np.zeros(2)
    r = nu(box_toy, x, SAMPLED)
    assert r.nu == 0.0
    Z = box_toy.constraints.sample(200, 1)
    assert np.all(box_toy.cone.contains(box_toy.bifunction(x, Z)))


def test_nonnegative(ex1, ex2, box_toy):
    rng = np.random.default_rng(1)
    for p in (ex1, ex2, box_toy):
        for x in 2 * rng.standard_normal((10, 2)):
            r = nu(p, x, SAMPLED)
            assert r.nu >= 0 and r.nu_ka >= r.nu


def test_budget_monotone(ex1):
    rng = np.random.default_rng(2)
    for x in -2 * rng.random((10, 2)):
        m1 = MeritFunction(ex1, SAMPLED, budget=128)
        m2 = MeritFunction(ex1, SAMPLED, budget=256)
        # same seed: the larger sample extends the smaller one
        assert m2.nu(x) >= m1.nu(x) - 1e-12


def test_midpoint_convexity_of_nu(ex1, ex2):
    rng = np.random.default_rng(3)
    for p in (ex1, ex2):
        m = MeritFunction(p, SAMPLED)
        K = p.with_truncation(2.0).constraints
        P = K.sample(200, 4)
        i, j = rng.integers(len(P), size=(2, 1000))
        mid = m.nu_batch(0.5 * (P[i] + P[j]))
        avg = 0.5 * (m.nu_batch(P[i]) + m.nu_batch(P[j]))
        assert np.all(mid <= avg + 2 * (p.truncation_gap or 0.0) + 1e-9)


def test_active_set(ex1, ex2, box_toy):
    a = active_set(ex2, [0.6, 0.9], cfg=SAMPLED)
    assert np.all(np.linalg.norm(a.members, axis=1) < 1e-3)
    a = active_set(box_toy, [0.0, 0.0], cfg=SAMPLED)
    assert np.all(a.values == 0) and len(a.members) > 10
    a = active_set(ex1, [-1.0, -1.0], 1e-3, SAMPLED)
    assert a.not_attained
    assert np.all(np.linalg.norm(a.members, axis=1) > 100)


def test_report_dict(ex2):
    d = nu(ex2, [1.0, 1.0]).to_dict()
    assert {"x", "nu", "dist_x_K", "nu_ka", "witness_z", "samples_used"} <= set(d)
