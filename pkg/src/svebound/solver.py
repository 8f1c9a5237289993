"""Solve by minimizing nu_K with a multistart compass search.

nu_K vanishes exactly on the solution set, so a zero of it is a solution.
The search is derivative-free since nu_K is a supremum of nonsmooth
functions plus a distance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .certify import FORM_K, BoundCertificate
from .config import RunConfig
from .merit import MeritFunction, nu
from .model import ProblemInstance

__all__ = ["SolveResult", "solve", "start_points"]

STEP_FLOOR = 1e-13


@dataclass
class SolveResult:
    x_star: np.ndarray
    nu_ka_final: float
    iterations: int
    evaluations: int
    trace: list[tuple[int, float]]
    status: str
    start_index: int
    certified_distance: float | None = None
    per_start: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"x_star": self.x_star.tolist(), "nu_ka_final": self.nu_ka_final,
             "iterations": self.iterations, "evaluations": self.evaluations,
             "status": self.status, "start_index": self.start_index,
             "trace": [[i, v] for i, v in self.trace], "per_start": self.per_start}
        if self.certified_distance is not None:
            d["certified_distance"] = self.certified_distance
        return d

    def trace_csv(self, fmt=repr) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "best_nu_ka"])
        for i, v in self.trace:
            w.writerow([i, fmt(v)])
        return buf.getvalue()


def start_points(p: ProblemInstance, cfg: RunConfig, x0=None) -> np.ndarray:
    """Caller start first, then seeded uniform points of a box around the anchor of K."""
    rng = np.random.default_rng(cfg.seed + 11)
    a = p.constraints.anchor
    S = a + cfg.probe_radius * (2 * rng.random((cfg.starts, p.dim_x)) - 1)
    if x0 is not None:
        S = np.vstack([p.check_point(x0), S[:-1]]) if cfg.starts > 1 else p.check_point(x0)[None]
    return S


def _directions(dim: int) -> np.ndarray:
    diag = np.ones(dim) / math.sqrt(dim)
    return np.vstack([np.eye(dim), -np.eye(dim)] + ([diag, -diag] if dim > 1 else []))


def _compass(p: ProblemInstance, x, cfg: RunConfig, start_index: int):
    E = _directions(p.dim_x)
    stop_at = 1e-3 * cfg.solve_zero_tol
    refresh = 0

    def merit_for(k):
        return MeritFunction(p, cfg, seed=cfg.seed + 101 * start_index + k)

    merit = merit_for(refresh)
    fx = merit.nu_ka(x)
    evals = 1
    step = 0.25 * cfg.probe_radius
    trace = [(0, fx)]
    it = 0
    while evals < cfg.max_evals and fx > stop_at and step > STEP_FLOOR * max(1.0, np.abs(x).max()):
        it += 1
        if not merit.closed and it % cfg.refresh_every == 0:
            refresh += 1
            merit = merit_for(refresh)
            merit.add_witnesses(x)
            fx = min(fx, merit.nu_ka(x))
            evals += 1
        C = x + step * E
        vals = np.array([merit.nu_ka(c) for c in C])
        evals += len(C)
        j = int(np.argmin(vals))
        if vals[j] < fx:
            x, fx = C[j], float(vals[j])
            step *= 2.0
        else:
            step *= 0.5
        trace.append((it, fx))
    return x, fx, it, evals, trace


def solve(p: ProblemInstance, cfg: RunConfig | None = None,
          cert: BoundCertificate | None = None, x0=None) -> SolveResult:
    """Best point over the starts; the final nu_K uses a fresh, larger z-sample."""
    cfg = cfg or RunConfig()
    best = None
    runs = []
    total = 0
    for k, s in enumerate(start_points(p, cfg, x0)):
        x, fx, it, ev, tr = _compass(p, s, cfg, k)
        total += ev
        runs.append({"start": s.tolist(), "x": x.tolist(), "nu_ka": fx,
                     "iterations": it, "evaluations": ev})
        if best is None or fx < best[1]:
            best = (x, fx, it, tr, k)
        if it == 0 and fx <= 1e-3 * cfg.solve_zero_tol:
            break  # start already solves the problem
    x, _, it, tr, k = best
    final_cfg = cfg.with_(budget_z=cfg.budget_z * cfg.final_budget_factor,
                          seed=cfg.seed + 7919)
    final = nu(p, x, final_cfg)
    status = "solved" if final.nu_ka <= cfg.solve_zero_tol else "budget-exhausted"
    dist_bound = None
    if cert is not None:
        if cert.bound_form == FORM_K:
            # bound holds on K: step to the projection first
            w = p.constraints.project(x)
            dist_bound = final.dist_x_K + nu(p, w, final_cfg).nu / cert.constant
        else:
            dist_bound = final.nu_ka / cert.constant
    return SolveResult(x, float(final.nu_ka), it, total, tr, status, k, dist_bound, runs)
