import json
import math

import numpy as np
import pytest

from svebound import RunConfig
from svebound.bifunctions import Separable, Term, TermMap
from svebound.certify import (FORM_K, FORM_X, PASSED, REFUTED, BoundCertificate,
                              CertificationFailed, certify, certify_via_gamma,
                              certify_via_sigma, hypothesis_audit, validate_bound)
from svebound.cones import Orthant
from svebound.constraints import Box
from svebound.model import ProblemInstance
from svebound.serialize import to_jsonable


@pytest.fixture(scope="module")
def convex_problem():
    g = TermMap(((Term("power", coef=1.0, var=0, power=2),),), 2)
    h = TermMap(((Term("const", value=0.0),),), 2)
    return ProblemInstance(Separable(g, h), Orthant(1), Box([-2.0, -2.0], [2.0, 2.0]),
                           np.zeros((1, 2)))


@pytest.fixture(scope="module")
def sigma2(ex2, cfg):
    return certify_via_sigma(ex2, cfg)


def test_audit_examples(ex1, cfg):
    a = hypothesis_audit(ex1, cfg)
    assert a.get("c_bounded").status == PASSED
    assert a.get("c_concavity").status == PASSED
    assert a.get("continuity").status == PASSED
    assert not a.refuted()


def test_audit_refutes_convex(convex_problem, cfg):
    c = hypothesis_audit(convex_problem, cfg).get("c_concavity")
    assert c.status == REFUTED
    w = c.evidence["witness"]
    assert abs(w["x1"][0] - w["x2"][0]) > 1.0


def test_sigma_example2(sigma2):
    assert sigma2.constant == pytest.approx(0.5, abs=1e-3)
    assert sigma2.bound_form == FORM_K


def test_sigma_negative_cases(ex1, ex2_flat, cfg):
    for p in (ex1, ex2_flat):
        with pytest.raises(CertificationFailed) as e:
            certify_via_sigma(p, cfg)
        assert e.value.stage == "sigma-search" and not e.value.refuted


def test_gamma_example1_none(ex1, cfg):
    with pytest.raises(CertificationFailed) as e:
        certify_via_gamma(ex1, cfg)
    assert e.value.stage == "gamma-audit"


def test_gamma_example2_refuted_off_K(ex2, cfg):
    # probes off K that project to the apex make 0 reachable in the sum hull
    with pytest.raises(CertificationFailed) as e:
        certify_via_gamma(ex2, cfg)
    assert e.value.stage == "gamma-audit"
    assert e.value.evidence["gamma_hat"] <= cfg.gamma_tol


def test_gamma_blocked_by_audit(convex_problem, cfg):
    with pytest.raises(CertificationFailed) as e:
        certify_via_gamma(convex_problem, cfg)
    assert e.value.refuted and e.value.audit.get("c_concavity").status == REFUTED


def test_gamma_box(box_toy, cfg):
    c = certify_via_gamma(box_toy, cfg)
    assert c.bound_form == FORM_X
    assert c.constant == pytest.approx(0.9, abs=1e-6)
    assert validate_bound(box_toy, c, cfg=cfg).passed


def test_certify_auto(ex2, box_toy, ex1, cfg):
    assert certify(ex2, "auto", cfg).route == "sigma"
    assert certify(box_toy, "auto", cfg).route == "gamma"
    with pytest.raises(CertificationFailed):
        certify(ex1, "auto", cfg)
    with pytest.raises(ValueError):
        certify(ex1, "other", cfg)


def test_validate_sigma(ex2, sigma2, cfg):
    t = validate_bound(ex2, sigma2, cfg=cfg)
    assert len(t.rows) == 100 and t.passed
    # a weaker bound is still a bound
    assert validate_bound(ex2, sigma2.scaled(0.5), cfg=cfg).passed
    t = validate_bound(ex2, sigma2, [[0.0, 0.0]], cfg)
    assert t.passed and t.rows[0].true_dist == 0.0
    with pytest.raises(ValueError):
        validate_bound(ex2, sigma2, [[-1.0, -1.0]], cfg)


def test_forced_fails_example1(ex1, cfg):
    t = validate_bound(ex1, BoundCertificate.forced(1.0), [[-0.1, -0.1]], cfg)
    r = t.rows[0]
    assert not r.passed
    assert r.true_dist == pytest.approx(0.1414, abs=1e-4)
    assert r.bound == pytest.approx(0.0141, abs=1e-4)


def test_certificate_roundtrip(sigma2):
    d = json.loads(json.dumps(to_jsonable(sigma2.to_dict())))
    c = BoundCertificate.from_dict(d)
    assert c.route == "sigma" and c.constant == pytest.approx(sigma2.constant)
    assert [x.name for x in c.audit] == [x.name for x in sigma2.audit]


def test_certificate_validation():
    with pytest.raises(ValueError):
        BoundCertificate("sigma", 0.5, FORM_X)
    with pytest.raises(ValueError):
        BoundCertificate("sigma", 0.0, FORM_K)
    with pytest.raises(ValueError):
        BoundCertificate("magic", 1.0, FORM_K)


def test_issued_certificates_validate(ex2, box_toy, ex2_flat, cfg):
    for p, route in ((ex2, "sigma"), (box_toy, "gamma"), (ex2_flat, "gamma")):
        c = certify(p, route, cfg)
        assert validate_bound(p, c, cfg=cfg).passed


def test_csv(ex2, sigma2, cfg):
    text = validate_bound(ex2, sigma2, [[1.0, 1.0]], cfg).to_csv()
    assert text.splitlines()[0] == "x1,x2,merit,bound,true_dist,pass"
