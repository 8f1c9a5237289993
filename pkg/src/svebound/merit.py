"""Merit functions nu(x) = sup_{z in K} dist(f(x, z), C) and nu_K = nu + dist(., K).

The supremum is estimated from below: a deterministic sample of K, refined
by compass search on z. Catalog problems may carry a closed-form merit, used
in place of the estimate when ``cfg.use_closed_form`` is set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .model import ProblemInstance

__all__ = [
    "MeritReport",
    "ActiveSet",
    "inner_values",
    "nu",
    "nu_ka",
    "active_set",
    "MeritFunction",
]


@dataclass
class MeritReport:
    x: np.ndarray
    nu: float
    dist_x_K: float
    nu_ka: float
    witness_z: np.ndarray
    samples_used: int
    used_closed_form: bool
    truncation_note: str | None = None
    sampled_nu: float = float("nan")
    evaluated_z: np.ndarray = field(default=None, repr=False)
    evaluated_values: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {"x": self.x.tolist(), "nu": self.nu, "dist_x_K": self.dist_x_K,
             "nu_ka": self.nu_ka, "witness_z": self.witness_z.tolist(),
             "samples_used": self.samples_used, "used_closed_form": self.used_closed_form}
        if self.truncation_note:
            d["truncation_note"] = self.truncation_note
        return d


@dataclass
class ActiveSet:
    x: np.ndarray
    epsilon: float
    members: np.ndarray
    values: np.ndarray
    not_attained: bool

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "epsilon": self.epsilon,
                "members": self.members.tolist(), "values": self.values.tolist(),
                "supremum_possibly_not_attained": self.not_attained}


def inner_values(p: ProblemInstance, x, Z) -> np.ndarray:
    """dist(f(x, z), C) for every row z of Z."""
    Y = p.bifunction(np.asarray(x, dtype=float), np.atleast_2d(Z))
    return np.atleast_1d(p.cone.distance(Y))


def _search_scale(p: ProblemInstance) -> float:
    K = p.constraints
    if not K.is_bounded:
        return K.truncation_radius
    B = K.boundary_points()
    return max(1.0, float(np.max(np.linalg.norm(B - K.anchor, axis=1))))


def _refine(p: ProblemInstance, x, z0, v0, cfg: RunConfig):
    """Compass search maximizing z -> dist(f(x, z), C) over K (truncated)."""
    K = p.constraints
    dim = p.dim_x
    E = np.vstack([np.eye(dim), -np.eye(dim)])
    z, v = z0.copy(), v0
    step = 0.1 * _search_scale(p)
    trail_z, trail_v = [], []
    for _ in range(cfg.refine_iters):
        cand = K.clip_to_truncation(K.project(z + step * E))
        vals = inner_values(p, x, cand)
        trail_z.append(cand)
        trail_v.append(vals)
        j = int(np.argmax(vals))
        if vals[j] > v:
            z, v = cand[j], float(vals[j])
        else:
            step *= cfg.refine_shrink
    if trail_z:
        return z, v, np.vstack(trail_z), np.concatenate(trail_v)
    return z, v, np.zeros((0, dim)), np.zeros(0)


def _sampled_sup(p: ProblemInstance, x, cfg: RunConfig, Z: np.ndarray | None = None,
                 refine: bool = True):
    if Z is None:
        Z = p.constraints.sample(cfg.budget_z, cfg.seed)
    vals = inner_values(p, x, Z)
    allZ, allV = [Z], [vals]
    best = int(np.argmax(vals))
    zbest, vbest = Z[best], float(vals[best])
    if refine and cfg.refine_iters > 0:
        order = np.argsort(-vals, kind="stable")
        starts = []
        for i in order:
            if len(starts) >= cfg.refine_starts:
                break
            if all(np.linalg.norm(Z[i] - Z[j]) > 1e-9 for j in starts):
                starts.append(int(i))
        for i in starts:
            z, v, tz, tv = _refine(p, x, Z[i], float(vals[i]), cfg)
            allZ.append(tz)
            allV.append(tv)
            if v > vbest:
                zbest, vbest = z, v
    return zbest, vbest, np.vstack(allZ), np.concatenate(allV)


def _note(p: ProblemInstance) -> str | None:
    K = p.constraints
    if p.truncation_gap:
        return (f"K sampled within radius {K.truncation_radius:g}; sampled sup "
                f"under-estimates nu by at most {p.truncation_gap:.6g}")
    if not K.is_bounded:
        return f"K sampled within radius {K.truncation_radius:g}; value is a lower estimate"
    return None


def nu(p: ProblemInstance, x, cfg: RunConfig | None = None) -> MeritReport:
    cfg = cfg or RunConfig()
    x = p.check_point(x)
    z, v, allZ, allV = _sampled_sup(p, x, cfg)
    used_cf = bool(cfg.use_closed_form and p.has_closed_form_merit)
    value = float(p.closed_form_merit(x)) if used_cf else v
    if value > cfg.value_cap:
        value = math.inf
    dK = float(p.constraints.distance(x))
    return MeritReport(x=x, nu=value, dist_x_K=dK, nu_ka=value + dK, witness_z=z,
                       samples_used=len(allZ), used_closed_form=used_cf,
                       truncation_note=_note(p), sampled_nu=v,
                       evaluated_z=allZ, evaluated_values=allV)


def nu_ka(p: ProblemInstance, x, cfg: RunConfig | None = None) -> MeritReport:
    """Same report as :func:`nu`; ``nu_ka`` vanishes exactly on the solution set."""
    return nu(p, x, cfg)


def active_set(p: ProblemInstance, x, epsilon: float | None = None,
               cfg: RunConfig | None = None, report: MeritReport | None = None) -> ActiveSet:
    """Evaluated z whose inner value is within epsilon of the sampled supremum."""
    cfg = cfg or RunConfig()
    rep = report or nu(p, x, cfg)
    if not math.isfinite(rep.nu):
        raise ValueError("active set needs a finite merit value")
    sup = rep.sampled_nu
    if epsilon is None:
        epsilon = cfg.active_eps or 1e-3 * max(1.0, sup)
    keep = rep.evaluated_values >= sup - epsilon
    members, values = rep.evaluated_z[keep], rep.evaluated_values[keep]
    # dedupe identical points
    _, idx = np.unique(np.round(members, 12), axis=0, return_index=True)
    idx = np.sort(idx)
    members, values = members[idx], values[idx]
    K = p.constraints
    not_attained = False
    if not K.is_bounded and len(members):
        reach = np.linalg.norm(members[np.argmax(values)] - K.anchor)
        # a supremum only met at the truncation sphere is approached, not attained
        not_attained = bool(reach >= 0.99 * K.truncation_radius) and sup > cfg.zero_tol
    return ActiveSet(rep.x, float(epsilon), members, values, not_attained)


class MeritFunction:
    """Fast nu / nu_K on a fixed z-sample, for use inside slope and solver loops.

    Uses the closed form when allowed; otherwise the maximum over a fixed
    sample, optionally augmented with refined witnesses (``add_witnesses``).
    Reusing one sample keeps differences nu(x) - nu(u) free of resampling noise.
    """

    def __init__(self, p: ProblemInstance, cfg: RunConfig | None = None,
                 budget: int | None = None, seed: int | None = None):
        self.p = p
        self.cfg = cfg or RunConfig()
        self.closed = bool(self.cfg.use_closed_form and p.has_closed_form_merit)
        self.Z = None
        if not self.closed:
            self.Z = p.constraints.sample(budget or self.cfg.budget_z,
                                          self.cfg.seed if seed is None else seed)
        self.evals = 0

    def add_witnesses(self, *xs) -> None:
        if self.closed:
            return
        extra = []
        for x in xs:
            z, _, _, _ = _sampled_sup(self.p, x, self.cfg, Z=self.Z)
            extra.append(z)
        self.Z = np.vstack([self.Z] + [np.atleast_2d(e) for e in extra])

    def nu(self, x) -> float:
        self.evals += 1
        if self.closed:
            return float(self.p.closed_form_merit(x))
        v = float(np.max(inner_values(self.p, x, self.Z)))
        return math.inf if v > self.cfg.value_cap else v

    def nu_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        self.evals += len(X)
        if self.closed:
            return np.array([float(self.p.closed_form_merit(x)) for x in X])
        Y = self.p.bifunction(X[:, None, :], self.Z[None, :, :])
        D = self.p.cone.distance(Y.reshape(-1, self.p.dim_y)).reshape(len(X), len(self.Z))
        v = D.max(axis=1)
        v[v > self.cfg.value_cap] = math.inf
        return v

    def nu_ka(self, x) -> float:
        return self.nu(x) + float(self.p.constraints.distance(x))

    __call__ = nu
