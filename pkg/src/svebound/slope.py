"""Strong and restricted slopes, and a sampled upper bound for ss-inf.

The slope of phi at x is the limsup of (phi(x) - phi(u)) / |x - u| as u -> x
(u in K for the restricted slope), and zero at local minimizers. It is
approximated by shell maxima over a shrinking radius schedule; the whole
per-radius table is reported so non-convergence stays visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .config import RunConfig
from .merit import MeritFunction
from .model import ProblemInstance, probe_set

__all__ = ["SlopeEstimate", "SsinfReport", "sphere_directions", "strong_slope",
           "restricted_slope", "ssinf_upper"]


@dataclass
class SlopeEstimate:
    x: np.ndarray
    radii: np.ndarray
    per_radius_max: np.ndarray
    value: float
    restricted: bool
    local_min_detected: bool
    directions_used: np.ndarray

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "radii": self.radii.tolist(),
                "per_radius_max": self.per_radius_max.tolist(),
                "directions_used": self.directions_used.tolist(),
                "value": self.value, "restricted": self.restricted,
                "local_min_detected": self.local_min_detected}

    def table(self) -> list[dict]:
        return [{"radius": r, "max_quotient": q, "directions": int(n)}
                for r, q, n in zip(self.radii, self.per_radius_max, self.directions_used)]


@dataclass
class SsinfReport:
    upper_bound: float
    argmin_witness: np.ndarray | None
    points_probed: int
    points_positive: int

    def to_dict(self) -> dict:
        return {"upper_bound": self.upper_bound,
                "argmin_witness": None if self.argmin_witness is None
                else self.argmin_witness.tolist(),
                "points_probed": self.points_probed,
                "points_positive": self.points_positive}


def sphere_directions(dim: int, n: int) -> np.ndarray:
    """Low-discrepancy unit vectors: equal angles in the plane, Halton otherwise."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = 2 * math.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(t), np.sin(t)])
    U = qmc.Halton(dim, scramble=False).random(n + 1)[1:]
    G = ndtri(np.clip(U, 1e-12, 1 - 1e-12))
    D = G / np.linalg.norm(G, axis=1, keepdims=True)
    # coordinate axes keep axis-aligned descent visible
    return np.vstack([np.eye(dim), -np.eye(dim), D])


MAX_EXTRA_LEVELS = 40
STABLE_RTOL = 0.02


def _stable(maxima: list[float]) -> bool:
    if len(maxima) < 2:
        return False
    a, b = maxima[-2], maxima[-1]
    return b > 0 and abs(a - b) <= STABLE_RTOL * b


def _shell_table(phi_batch: Callable, x: np.ndarray, D: np.ndarray, cfg: RunConfig,
                 feasible: Callable | None):
    """Shell maxima of the descent quotient over the radius schedule.

    The schedule r0 * ratio**k runs for ``cfg.slope_levels`` levels and keeps
    shrinking (up to MAX_EXTRA_LEVELS more) until two consecutive positive
    maxima agree, so points closer to a kink than r0 are still resolved.
    """
    fx = float(phi_batch(x[None])[0])
    if not math.isfinite(fx):
        raise ValueError("slope needs a finite function value at x")
    radii, maxima, raw_max, counts = [], [], [], []
    r = cfg.slope_r0
    for level in range(cfg.slope_levels + MAX_EXTRA_LEVELS):
        if level >= cfg.slope_levels and _stable(maxima):
            break
        U = x + r * D
        if feasible is not None:
            U = U[feasible(U)]
        radii.append(r)
        counts.append(len(U))
        if len(U) == 0:
            maxima.append(0.0)
            raw_max.append(-math.inf)
        else:
            q = float(np.max((fx - phi_batch(U)) / r))
            raw_max.append(q)
            maxima.append(max(0.0, q))
        r *= cfg.slope_ratio
    return np.array(radii), np.array(maxima), np.array(raw_max), np.array(counts)


def _estimate(x, radii, maxima, raw, counts, restricted, zero_tol) -> SlopeEstimate:
    local_min = bool(np.all(raw[-2:] <= zero_tol))
    value = 0.0 if local_min else float(maxima[-1])
    return SlopeEstimate(x, radii, maxima, value, restricted, local_min, counts)


def strong_slope(phi: Callable, x, cfg: RunConfig | None = None) -> SlopeEstimate:
    """Slope of a scalar function over the full sphere of directions."""
    cfg = cfg or RunConfig()
    x = np.asarray(x, dtype=float)
    D = sphere_directions(len(x), cfg.budget_dirs or 64 * len(x))

    def batch(U):
        return np.array([float(phi(u)) for u in np.atleast_2d(U)])

    radii, m, raw, n = _shell_table(batch, x, D, cfg, None)
    return _estimate(x, radii, m, raw, n, False, cfg.zero_tol)


def restricted_slope(p: ProblemInstance, x, cfg: RunConfig | None = None,
                     merit: MeritFunction | None = None) -> SlopeEstimate:
    """Slope of nu at x in K, moving only inside K."""
    cfg = cfg or RunConfig()
    x = p.check_point(x)
    K = p.constraints
    if not K.contains(x, cfg.member_tol * 10):
        raise ValueError("restricted slope needs x in K")
    if merit is None:
        merit = MeritFunction(p, cfg)
        merit.add_witnesses(x)
    D = sphere_directions(p.dim_x, cfg.budget_dirs or 64 * p.dim_x)
    radii, m, raw, n = _shell_table(merit.nu_batch, x, D, cfg,
                                    lambda U: K.contains(U, cfg.member_tol))
    return _estimate(x, radii, m, raw, n, True, cfg.zero_tol)


def ssinf_upper(p: ProblemInstance, cfg: RunConfig | None = None,
                extra_probes=None) -> SsinfReport:
    """Minimum restricted slope over probed points of K with nu > 0.

    This bounds ss-inf from ABOVE only: the infimum over all of K cannot
    exceed the minimum over any finite subset.
    """
    cfg = cfg or RunConfig()
    P = probe_set(p, cfg)
    if extra_probes is not None:
        P = np.vstack([P, np.atleast_2d(np.asarray(extra_probes, dtype=float))])
    merit = MeritFunction(p, cfg)
    vals = merit.nu_batch(P)
    pos = P[vals > cfg.zero_tol]
    best, arg = math.inf, None
    for x in pos:
        s = restricted_slope(p, x, cfg, merit).value
        if s < best:
            best, arg = s, x
    return SsinfReport(best, arg, len(P), len(pos))
