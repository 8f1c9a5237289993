"""Metric C-increase: sigma search through B-derivative depth, and definitional checks.

For x0 in K with nu(x0) > 0, a unit feasible direction u0 scores

    min over sampled z of depth(C, D_x f(., z)(x0)(u0))

and sigma is the minimum over the region of the best score per point. A
positive sigma gives the increase estimate incr >= sigma + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bifunctions import fd_b_derivative
from .cones import depth
from .config import RunConfig
from .merit import MeritFunction
from .model import ProblemInstance
from .slope import sphere_directions

__all__ = [
    "depth",
    "IncreaseCertificate",
    "IncreaseCheck",
    "PointScore",
    "feasible_directions",
    "direction_scores",
    "best_direction",
    "sigma_profile",
    "sigma_search",
    "check_increase_at",
    "definitional_certificate",
]

DEDUPE_RESOLUTION = 1e-3
FEASIBLE_TOL = 1e-12


@dataclass
class PointScore:
    x0: np.ndarray
    direction: np.ndarray
    value: float
    directions_tried: int

    def to_dict(self) -> dict:
        return {"x0": self.x0.tolist(), "u0": self.direction.tolist(),
                "value": self.value, "directions_tried": self.directions_tried}


@dataclass
class IncreaseCertificate:
    region: np.ndarray
    sigma: float
    witnesses: list[PointScore]
    mode: str
    z_budget: int
    region_note: str = ""
    largest_r_passed: float | None = None
    incr_lower_bound: float = field(init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("an increase certificate needs sigma > 0")
        self.incr_lower_bound = self.sigma + 1.0

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "sigma": self.sigma,
             "incr_lower_bound": self.incr_lower_bound,
             "z_budget": self.z_budget,
             "region": {"points": self.region.tolist(), "note": self.region_note},
             "witnesses": [w.to_dict() for w in self.witnesses]}
        if self.largest_r_passed is not None:
            d["largest_r_passed"] = self.largest_r_passed
        return d


@dataclass
class IncreaseCheck:
    passed: bool
    witness: np.ndarray | None
    depth: float
    required: float
    candidates: int

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "witness": None if self.witness is None else self.witness.tolist(),
                "depth": self.depth, "required": self.required,
                "candidates": self.candidates}


def _z_sample(p: ProblemInstance, cfg: RunConfig) -> np.ndarray:
    return p.constraints.sample(cfg.budget_z, cfg.seed)


def _check_region_point(p: ProblemInstance, x0, cfg: RunConfig,
                        merit: MeritFunction) -> np.ndarray:
    x0 = p.check_point(x0)
    if not p.constraints.contains(x0, cfg.member_tol * 10):
        raise ValueError(f"point {x0.tolist()} is outside K")
    if merit.nu(x0) <= cfg.zero_tol:
        raise ValueError(f"point {x0.tolist()} is a solution (nu = 0)")
    return x0


def _is_feasible(N: np.ndarray, U: np.ndarray) -> np.ndarray:
    if len(N) == 0:
        return np.ones(len(U), dtype=bool)
    return np.all(U @ N.T <= FEASIBLE_TOL, axis=1)


def _dedupe_sphere(U: np.ndarray) -> np.ndarray:
    _, idx = np.unique(np.round(U / DEDUPE_RESOLUTION), axis=0, return_index=True)
    return U[np.sort(idx)]


def feasible_directions(p: ProblemInstance, x0, cfg: RunConfig,
                        K_sample: np.ndarray | None = None) -> np.ndarray:
    """Unit directions in cone(K - x0): toward constraint samples, then the sphere."""
    K = p.constraints
    x0 = np.asarray(x0, dtype=float)
    if K_sample is None:
        K_sample = K.sample(cfg.budget_z, cfg.seed)
    V = K_sample - x0
    n = np.linalg.norm(V, axis=1)
    toward = V[n > 1e-12] / n[n > 1e-12, None]
    N = K.active_normals(x0)
    sphere = sphere_directions(p.dim_x, cfg.budget_dirs or 64 * p.dim_x)
    sphere = sphere[_is_feasible(N, sphere)]
    return _dedupe_sphere(np.vstack([toward, sphere]))


def direction_scores(p: ProblemInstance, x0, U: np.ndarray, Z: np.ndarray,
                     cfg: RunConfig) -> np.ndarray:
    """min over z in Z of depth(C, D_x f(., z)(x0)(u)) for every row u of U."""
    if len(U) == 0:
        return np.zeros(0)
    f = p.bifunction
    if f.has_analytic_b_derivative:
        D = f.b_derivative(x0, Z, U)
    else:
        D = np.stack([fd_b_derivative(lambda x, z=z: f(x, z), x0, U, cfg.fd_steps, cfg.fd_tol)
                      for z in Z])
    d = np.atleast_1d(depth(p.cone, D.reshape(-1, p.dim_y))).reshape(len(Z), len(U))
    return d.min(axis=0)


def _refine_direction(p, x0, u, v, N, Z, cfg: RunConfig):
    """Compass search on the sphere, staying inside the feasible cone."""
    dim = p.dim_x
    E = np.vstack([np.eye(dim), -np.eye(dim)])
    step = 0.1
    tried = 0
    for _ in range(cfg.sigma_refine_iters):
        C = u + step * E
        C = C / np.linalg.norm(C, axis=1, keepdims=True)
        C = C[_is_feasible(N, C)]
        tried += len(C)
        if len(C) == 0:
            step *= 0.5
            continue
        s = direction_scores(p, x0, C, Z, cfg)
        j = int(np.argmax(s))
        if s[j] > v:
            u, v = C[j], float(s[j])
        else:
            step *= 0.5
    return u, v, tried


def best_direction(p: ProblemInstance, x0, cfg: RunConfig, Z: np.ndarray | None = None,
                   K_sample: np.ndarray | None = None) -> PointScore:
    """Best unit feasible direction at x0 and its depth score."""
    x0 = np.asarray(x0, dtype=float)
    Z = _z_sample(p, cfg) if Z is None else Z
    U = feasible_directions(p, x0, cfg, K_sample)
    if len(U) == 0:
        return PointScore(x0, np.zeros(p.dim_x), -math.inf, 0)
    s = direction_scores(p, x0, U, Z, cfg)
    j = int(np.argmax(s))
    N = p.constraints.active_normals(x0)
    u, v, extra = _refine_direction(p, x0, U[j], float(s[j]), N, Z, cfg)
    return PointScore(x0, u, v, len(U) + extra)


def sigma_profile(p: ProblemInstance, region_points, cfg: RunConfig | None = None
                  ) -> list[PointScore]:
    """Per-point best direction scores (no thresholding)."""
    cfg = cfg or RunConfig()
    merit = MeritFunction(p, cfg)
    X = [_check_region_point(p, x, cfg, merit) for x in np.atleast_2d(region_points)]
    if not X:
        raise ValueError("empty region")
    Z = _z_sample(p, cfg)
    K_sample = p.constraints.sample(cfg.budget_z, cfg.seed)
    return [best_direction(p, x, cfg, Z, K_sample) for x in X]


def sigma_search(p: ProblemInstance, region_points, cfg: RunConfig | None = None,
                 region_note: str = "") -> IncreaseCertificate | None:
    """Certificate with sigma = min over the region of the best depth, or None."""
    cfg = cfg or RunConfig()
    prof = sigma_profile(p, region_points, cfg)
    sigma = min(w.value for w in prof)
    if not sigma > cfg.sigma_tol:
        return None
    R = np.array([w.x0 for w in prof])
    return IncreaseCertificate(R, float(sigma), prof, "b-derivative", cfg.budget_z,
                               region_note)


def check_increase_at(p: ProblemInstance, x0, alpha: float, r: float,
                      cfg: RunConfig | None = None, directions=None) -> IncreaseCheck:
    """Sufficient test for the increase inclusion at x0 with constant alpha and radius r.

    Looks for x in ball(x0, r) with depth(C, f(x, z) - f(x0, z)) >= (alpha - 1) r
    for every sampled z. Given directions are tried first, then the sphere.
    """
    cfg = cfg or RunConfig()
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    if not r > 0:
        raise ValueError("r must be positive")
    merit = MeritFunction(p, cfg)
    x0 = _check_region_point(p, x0, cfg, merit)
    K = p.constraints
    U = sphere_directions(p.dim_x, cfg.budget_dirs or 64 * p.dim_x)
    if directions is not None:
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        U = np.vstack([D / np.linalg.norm(D, axis=1, keepdims=True), U])
    X = x0 + r * U
    X = X[K.contains(X, cfg.member_tol)]
    required = (alpha - 1.0) * r
    if len(X) == 0:
        return IncreaseCheck(False, None, -math.inf, required, 0)
    Z = _z_sample(p, cfg)
    f = p.bifunction
    base = f(x0, Z)
    best, arg = -math.inf, None
    for x in X:
        d = float(np.min(depth(p.cone, f(x, Z) - base)))
        if d > best:
            best, arg = d, x
        if d >= required:
            return IncreaseCheck(True, x, d, required, len(X))
    return IncreaseCheck(False, arg, best, required, len(X))


def definitional_certificate(p: ProblemInstance, region_points, alpha: float, radii,
                             cfg: RunConfig | None = None) -> IncreaseCertificate | None:
    """Increase with constant alpha checked directly at every region point and radius.

    Succeeds only if every point passes at every radius; records the largest
    radius tried since the admissible radius bound is not constructive.
    """
    cfg = cfg or RunConfig()
    radii = sorted(float(r) for r in radii)
    pts = np.atleast_2d(np.asarray(region_points, dtype=float))
    wit = []
    for x0 in pts:
        for r in radii:
            c = check_increase_at(p, x0, alpha, r, cfg)
            if not c.passed:
                return None
        u = (c.witness - x0) / radii[-1]
        wit.append(PointScore(x0, u, c.depth / radii[-1], c.candidates))
    return IncreaseCertificate(pts, alpha - 1.0, wit, "definitional", cfg.budget_z,
                               largest_r_passed=radii[-1])
