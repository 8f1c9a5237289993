"""Error-bound certificates and the sampled hypothesis audits behind them.

Two routes issue certificates:

* ``sigma``: B-derivative depth gives incr >= sigma + 1, hence
  dist(x, Solv) <= nu(x) / sigma on K;
* ``gamma``: a positive separation margin of the summed subdifferential and
  capped normal cone gives dist(x, Solv) <= nu_K(x) / gamma on the whole space.

Hypotheses are checked by sampling, which can refute but never prove them,
so every certificate is labeled with sampled provenance.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import cones
from .config import RunConfig
from .increase import sigma_profile, sigma_search
from .merit import MeritFunction, nu
from .model import ProblemInstance, midpoint_concavity, probe_set
from .slope import SsinfReport
from .subdiff import CONCAVITY_TOL, gamma_audit

__all__ = [
    "PASSED",
    "REFUTED",
    "NOT_APPLICABLE",
    "Check",
    "AuditReport",
    "BoundCertificate",
    "CertificationFailed",
    "ValidationRow",
    "ValidationTable",
    "hypothesis_audit",
    "certify_via_sigma",
    "certify_via_gamma",
    "certify",
    "validate_bound",
    "region_probes",
]

PASSED = "passed-sampled"
REFUTED = "refuted"
NOT_APPLICABLE = "not-applicable"

SOUND = "sound given the hypotheses (sampled)"
REFUTABLE = "refutable-only"
FORM_K = "nu/const on K"
FORM_X = "nu_ka/const on X"


@dataclass
class Check:
    name: str
    status: str
    evidence: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "evidence": self.evidence}


@dataclass
class AuditReport:
    checks: list[Check]

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def refuted(self, names=None) -> list[Check]:
        return [c for c in self.checks
                if c.status == REFUTED and (names is None or c.name in names)]

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks]}


class CertificationFailed(RuntimeError):
    """No certificate: ``stage`` names the step that failed."""

    def __init__(self, stage: str, message: str, audit: AuditReport | None = None,
                 evidence: dict | None = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message
        self.audit = audit
        self.evidence = evidence or {}

    @property
    def refuted(self) -> bool:
        return self.stage == "audit"

    def to_dict(self) -> dict:
        return {"certificate": None, "failed_stage": self.stage, "message": self.message,
                "audit": None if self.audit is None else self.audit.to_dict(),
                "evidence": self.evidence}


@dataclass
class BoundCertificate:
    route: str
    constant: float
    bound_form: str
    audit: list[Check] = field(default_factory=list)
    soundness: str = SOUND
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.constant > 0 and math.isfinite(self.constant)):
            raise ValueError("certificate constant must be positive and finite")
        expected = {"sigma": FORM_K, "gamma": FORM_X, "ssinf-upper-only": FORM_K}
        if self.route not in expected:
            raise ValueError(f"unknown route {self.route!r}")
        if self.bound_form != expected[self.route]:
            raise ValueError(f"route {self.route} needs bound form {expected[self.route]!r}")

    @classmethod
    def forced(cls, constant: float) -> "BoundCertificate":
        """Uncertified constant for testing the nu/const bound (refutable only)."""
        return cls("ssinf-upper-only", float(constant), FORM_K, [], REFUTABLE,
                   {"note": "constant supplied by the caller, not certified"})

    @classmethod
    def from_ssinf(cls, report: SsinfReport) -> "BoundCertificate":
        return cls("ssinf-upper-only", report.upper_bound, FORM_K, [], REFUTABLE,
                   {"ssinf": report.to_dict(),
                    "note": "upper bound of ss-inf; the implied bound can only be refuted"})

    def scaled(self, factor: float) -> "BoundCertificate":
        return dataclasses.replace(self, constant=self.constant * factor)

    def to_dict(self) -> dict:
        return {"route": self.route, "constant": self.constant, "bound_form": self.bound_form,
                "audit": [c.to_dict() for c in self.audit], "soundness": self.soundness,
                "details": self.details}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundCertificate":
        audit = [Check(c["name"], c["status"], c.get("evidence", {}))
                 for c in d.get("audit", [])]
        return cls(d["route"], float(d["constant"]), d["bound_form"], audit,
                   d.get("soundness", SOUND), d.get("details", {}))


# -- audits --------------------------------------------------------------------

def _truncated(p: ProblemInstance, radius: float):
    K = p.constraints
    return K if K.is_bounded else dataclasses.replace(K, truncation_radius=radius)


def _audit_c_bounded(p: ProblemInstance, cfg: RunConfig, x0) -> Check:
    K = p.constraints
    x0 = K.anchor if x0 is None else p.check_point(x0)
    f, C = p.bifunction, p.cone
    if K.is_bounded:
        Y = f(x0, K.sample(cfg.budget_z, cfg.seed))
        out = ~np.atleast_1d(C.contains(Y))
        m = float(np.linalg.norm(Y[out], axis=1).max()) if out.any() else 0.0
        ok = math.isfinite(m) and cones.c_bounded_probe(Y, C, m)
        return Check("c_bounded", PASSED if ok else REFUTED,
                     {"x0": x0.tolist(), "m": m, "note": "K bounded"})
    R = K.truncation_radius
    radii = [R / 16, R / 4, R]
    ms, last = [], None
    for r in radii:
        Y = f(x0, _truncated(p, r).sample(cfg.budget_z, cfg.seed))
        out = ~np.atleast_1d(C.contains(Y))
        ms.append(float(np.linalg.norm(Y[out], axis=1).max()) if out.any() else 0.0)
        last = Y
    # a bounded excess stops growing; growth by the factor across a fourfold
    # radius increase, twice in a row, refutes boundedness
    m_ref = cfg.c_bound_growth * ms[1]
    grew = ms[1] > cfg.c_bound_growth * ms[0] and not cones.c_bounded_probe(last, C, m_ref)
    return Check("c_bounded", REFUTED if grew else PASSED,
                 {"x0": x0.tolist(), "radii": radii, "outside_norm_max": ms,
                  "growth_factor": cfg.c_bound_growth})


def _audit_concavity(p: ProblemInstance, cfg: RunConfig) -> Check:
    viol, (x1, x2, z) = midpoint_concavity(p, cfg)
    ev = {"pairs": cfg.concavity_pairs, "max_violation": viol}
    if viol > CONCAVITY_TOL:
        ev["witness"] = {"x1": x1.tolist(), "x2": x2.tolist(), "z": z.tolist()}
        return Check("c_concavity", REFUTED, ev)
    return Check("c_concavity", PASSED, ev)


def _audit_continuity(p: ProblemInstance, cfg: RunConfig) -> Check:
    """Sampled modulus of continuity of f(., z): changes must shrink with the step."""
    rng = np.random.default_rng(cfg.seed + 6)
    K = _truncated(p, cfg.probe_radius)
    X = K.sample(max(16, cfg.probe_budget // 2), cfg.seed + 7)
    Z = p.constraints.sample(min(cfg.budget_z, 64), cfg.seed)
    U = rng.standard_normal(X.shape)
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    f = p.bifunction
    steps = (1e-3, 1e-5, 1e-7)
    mods = []
    for h in steps:
        d = np.linalg.norm(f((X + h * U)[:, None, :], Z[None]) - f(X[:, None, :], Z[None]),
                           axis=-1)
        mods.append(float(d.max()))
    jump = mods[-1] > 1e-3 * max(1.0, mods[0])
    return Check("continuity", REFUTED if jump else PASSED,
                 {"steps": list(steps), "max_change": mods})


def _audit_k_convex(p: ProblemInstance) -> Check:
    return Check("k_convex", PASSED,
                 {"variant": type(p.constraints).__name__,
                  "note": "every supported constraint variant is a convex polyhedron"})


def hypothesis_audit(p: ProblemInstance, cfg: RunConfig | None = None, x0=None) -> AuditReport:
    """Sampled checks of C-boundedness, C-concavity, continuity and convexity of K."""
    cfg = cfg or RunConfig()
    return AuditReport([_audit_c_bounded(p, cfg, x0), _audit_concavity(p, cfg),
                        _audit_continuity(p, cfg), _audit_k_convex(p)])


# -- routes --------------------------------------------------------------------

def region_probes(p: ProblemInstance, cfg: RunConfig) -> np.ndarray:
    """Probe points of K with nu above tolerance."""
    P = probe_set(p, cfg)
    v = MeritFunction(p, cfg).nu_batch(P)
    return P[v > cfg.zero_tol]


def certify_via_sigma(p: ProblemInstance, cfg: RunConfig | None = None, region=None,
                      audit: AuditReport | None = None) -> BoundCertificate:
    cfg = cfg or RunConfig()
    audit = audit or hypothesis_audit(p, cfg)
    bad = audit.refuted(("c_bounded", "continuity"))
    if bad:
        raise CertificationFailed("audit", f"hypothesis {bad[0].name} refuted", audit)
    R = region_probes(p, cfg) if region is None else np.atleast_2d(region)
    if len(R) == 0:
        raise CertificationFailed("region", "no probe point with nu > 0", audit)
    cert = sigma_search(p, R, cfg, region_note="probe points of K with nu > 0")
    if cert is None:
        prof = sigma_profile(p, R, cfg)
        worst = min(prof, key=lambda w: w.value)
        raise CertificationFailed("sigma-search", "no positive sigma on the region", audit,
                                  {"worst_point": worst.to_dict(),
                                   "sigma_tol": cfg.sigma_tol})
    return BoundCertificate("sigma", cert.sigma, FORM_K, audit.checks, SOUND,
                            {"increase": cert.to_dict(),
                             "note": "uniformity in z checked on the z-sample only"})


def certify_via_gamma(p: ProblemInstance, cfg: RunConfig | None = None, probes=None,
                      audit: AuditReport | None = None) -> BoundCertificate:
    cfg = cfg or RunConfig()
    audit = audit or hypothesis_audit(p, cfg)
    bad = audit.refuted(("c_concavity", "k_convex", "c_bounded"))
    if bad:
        raise CertificationFailed("audit", f"hypothesis {bad[0].name} refuted", audit)
    g, rep = gamma_audit(p, probes, cfg, audited=True)
    if not g > cfg.gamma_tol:
        raise CertificationFailed("gamma-audit", "separation margin vanishes at a probe",
                                  audit, {"gamma_hat": g, "probe": rep.to_dict()})
    const = (1.0 - cfg.gamma_safety) * g
    return BoundCertificate("gamma", const, FORM_X, audit.checks, SOUND,
                            {"gamma_hat": g, "safety": cfg.gamma_safety,
                             "minimizing_probe": rep.x.tolist(),
                             "note": "hulls are inner approximations; gamma_hat is an "
                                     "upper estimate at the probes"})


def certify(p: ProblemInstance, route: str = "auto", cfg: RunConfig | None = None
            ) -> BoundCertificate:
    """``route`` is sigma, gamma or auto (sigma first, then gamma)."""
    cfg = cfg or RunConfig()
    if route == "sigma":
        return certify_via_sigma(p, cfg)
    if route == "gamma":
        return certify_via_gamma(p, cfg)
    if route != "auto":
        raise ValueError(f"unknown route {route!r}")
    audit = hypothesis_audit(p, cfg)
    failures = []
    for fn in (certify_via_sigma, certify_via_gamma):
        try:
            return fn(p, cfg, audit=audit)
        except CertificationFailed as e:
            failures.append(e)
    refuted = [e for e in failures if e.refuted]
    last = refuted[0] if len(refuted) == len(failures) else failures[-1]
    raise CertificationFailed(last.stage, "; ".join(str(e) for e in failures), audit,
                              {"routes": [e.to_dict() for e in failures]})


# -- validation ----------------------------------------------------------------

@dataclass
class ValidationRow:
    x: np.ndarray
    merit: float
    bound: float
    true_dist: float
    passed: bool

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "merit": self.merit, "bound": self.bound,
                "true_dist": self.true_dist, "pass": self.passed}


@dataclass
class ValidationTable:
    rows: list[ValidationRow]
    constant: float
    bound_form: str

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failing(self) -> list[ValidationRow]:
        return [r for r in self.rows if not r.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "constant": self.constant,
                "bound_form": self.bound_form, "rows": [r.to_dict() for r in self.rows]}

    def to_csv(self, fmt=repr) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = len(self.rows[0].x) if self.rows else 0
        w.writerow([f"x{i + 1}" for i in range(n)] + ["merit", "bound", "true_dist", "pass"])
        for r in self.rows:
            w.writerow([fmt(float(v)) for v in r.x]
                       + [fmt(r.merit), fmt(r.bound), fmt(r.true_dist), str(r.passed).lower()])
        return buf.getvalue()


def default_validation_points(p: ProblemInstance, cert: BoundCertificate, cfg: RunConfig,
                              n: int = 100) -> np.ndarray:
    K = _truncated(p, cfg.probe_radius)
    if cert.bound_form == FORM_K:
        return K.sample(n, cfg.seed + 5)
    rng = np.random.default_rng(cfg.seed + 5)
    return K.anchor + cfg.probe_radius * (2 * rng.random((n, p.dim_x)) - 1)


def validate_bound(p: ProblemInstance, cert: BoundCertificate, xs=None,
                   cfg: RunConfig | None = None) -> ValidationTable:
    """Compare the certified bound with the true distance to the known solutions."""
    cfg = cfg or RunConfig()
    if p.known_solutions is None:
        raise ValueError("validation needs known solutions")
    X = default_validation_points(p, cert, cfg) if xs is None \
        else np.atleast_2d(np.asarray(xs, dtype=float))
    on_K = cert.bound_form == FORM_K
    rows = []
    for x in X:
        x = p.check_point(x)
        if on_K and not p.constraints.contains(x, cfg.member_tol * 10):
            raise ValueError(f"point {x.tolist()} is outside K; the bound holds on K only")
        rep = nu(p, x, cfg)
        merit = rep.nu if on_K else rep.nu_ka
        bound = merit / cert.constant
        true = float(np.min(np.linalg.norm(p.known_solutions - x, axis=1)))
        ok = bound >= true - cfg.member_tol * max(1.0, true)
        rows.append(ValidationRow(x, merit, bound, true, bool(ok)))
    return ValidationTable(rows, cert.constant, cert.bound_form)
