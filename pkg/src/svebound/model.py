"""Problem instances, the bifunction operations, and the built-in catalog."""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import cones
from .bifunctions import (
    Affine,
    Bifunction,
    Named,
    Separable,
    Term,
    TermMap,
    fd_b_derivative,
)
from .config import RunConfig
from .constraints import ConstraintSet, NegOrthant, Sector

__all__ = [
    "ProblemInstance",
    "evaluate",
    "b_derivative",
    "sample_constraint",
    "probe_set",
    "midpoint_concavity",
    "example_1",
    "example_2",
    "named_problem",
]


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Strong vector equilibrium problem: find x in K with f(x, z) in C for all z in K."""

    bifunction: Bifunction
    cone: cones.Cone
    constraints: ConstraintSet
    known_solutions: np.ndarray | None = None
    closed_form_merit: Callable | None = None
    truncation_gap: float | None = None
    name: str = ""

    def __post_init__(self):
        f, C, K = self.bifunction, self.cone, self.constraints
        if f.dim_y != C.dim:
            raise ValueError(f"bifunction maps into R^{f.dim_y} but the cone lives in R^{C.dim}")
        if f.dim_x != K.dim:
            raise ValueError(f"bifunction acts on R^{f.dim_x} but K lives in R^{K.dim}")
        if self.known_solutions is not None:
            S = np.atleast_2d(np.asarray(self.known_solutions, dtype=float))
            if S.shape[1] != f.dim_x:
                raise ValueError("known solutions have the wrong dimension")
            object.__setattr__(self, "known_solutions", S)

    @property
    def dim_x(self) -> int:
        return self.bifunction.dim_x

    @property
    def dim_y(self) -> int:
        return self.bifunction.dim_y

    @property
    def has_closed_form_merit(self) -> bool:
        return self.closed_form_merit is not None

    def with_truncation(self, radius: float) -> "ProblemInstance":
        K = dataclasses.replace(self.constraints, truncation_radius=float(radius))
        gap = self.truncation_gap
        if self.name == "example-1":
            gap = _example1_gap(radius)
        return dataclasses.replace(self, constraints=K, truncation_gap=gap)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_x,) or not np.all(np.isfinite(x)):
            raise ValueError(f"expected a finite point in R^{self.dim_x}, got shape {x.shape}")
        return x


def evaluate(p: ProblemInstance, x, z) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[-1] != p.dim_x or z.shape[-1] != p.dim_x:
        raise ValueError("dimension mismatch between points and the problem")
    return p.bifunction(x, z)


def b_derivative(p: ProblemInstance, x0, z, u, cfg: RunConfig | None = None,
                 analytic: bool | None = None) -> np.ndarray:
    """B-derivative of ``f(., z)`` at ``x0`` along ``u`` (single z, single u).

    Analytic for catalog bifunctions; otherwise one-sided differences with a
    Richardson agreement check (``NonBDifferentiableError`` on disagreement).
    """
    cfg = cfg or RunConfig()
    x0, z, u = (np.asarray(v, dtype=float) for v in (x0, z, u))
    if not np.any(u):
        raise ValueError("direction must be nonzero")
    f = p.bifunction
    if analytic is None:
        analytic = f.has_analytic_b_derivative
    if analytic:
        return f.b_derivative(x0, z[None], u[None])[0, 0]
    return fd_b_derivative(lambda x: f(x, z), x0, u[None], cfg.fd_steps, cfg.fd_tol)[0]


def sample_constraint(p: ProblemInstance, budget: int, seed: int = 0) -> np.ndarray:
    """Deterministic members of K (truncated when K is unbounded)."""
    return p.constraints.sample(budget, seed)


def probe_set(p: ProblemInstance, cfg: RunConfig, in_K: bool = True) -> np.ndarray:
    """Probe points near the anchor of K: a truncated sample plus a geometric
    sequence of points approaching the anchor (where solutions tend to sit)."""
    K = dataclasses.replace(p.constraints, truncation_radius=cfg.probe_radius) \
        if not p.constraints.is_bounded else p.constraints
    base = K.sample(cfg.probe_budget, cfg.seed + 1)
    a = K.anchor
    dirs = base[1:6] - a
    n = np.linalg.norm(dirs, axis=1)
    dirs = dirs[n > 0] / n[n > 0, None]
    near = [a + r * d for r in (1e-1, 1e-2, 1e-3, 1e-4) for d in dirs]
    pts = np.vstack([base] + ([np.array(near)] if near else []))
    if in_K:
        pts = pts[K.contains(pts)]
    else:
        rng = np.random.default_rng(cfg.seed + 2)
        outside = a + cfg.probe_radius * (2 * rng.random((cfg.probe_budget, p.dim_x)) - 1)
        pts = np.vstack([pts, outside])
    return pts


def midpoint_concavity(p: ProblemInstance, cfg: RunConfig, n_pairs: int | None = None):
    """Sampled C-concavity of ``f(., z)`` on K at t = 1/2.

    Returns ``(max_violation, witness)`` where the violation is the distance of
    ``f(mid, z) - (f(x1, z) + f(x2, z)) / 2`` from C and the witness is
    ``(x1, x2, z)`` attaining it.
    """
    n_pairs = n_pairs or cfg.concavity_pairs
    rng = np.random.default_rng(cfg.seed + 3)
    K = dataclasses.replace(p.constraints, truncation_radius=cfg.probe_radius) \
        if not p.constraints.is_bounded else p.constraints
    pool = K.sample(max(64, cfg.probe_budget), cfg.seed + 4)
    Z = p.constraints.sample(cfg.budget_z, cfg.seed)
    X1 = pool[rng.integers(len(pool), size=n_pairs)]
    X2 = pool[rng.integers(len(pool), size=n_pairs)]
    # jitter inside K keeps pairs from collapsing onto the finite pool
    X1 = K.project(X1 + 0.05 * cfg.probe_radius * rng.standard_normal(X1.shape))
    X2 = K.project(X2 + 0.05 * cfg.probe_radius * rng.standard_normal(X2.shape))
    Zs = Z[rng.integers(len(Z), size=n_pairs)]
    f = p.bifunction
    gap = f(0.5 * (X1 + X2), Zs) - 0.5 * (f(X1, Zs) + f(X2, Zs))
    viol = np.atleast_1d(p.cone.distance(gap))
    i = int(np.argmax(viol))
    return float(viol[i]), (X1[i], X2[i], Zs[i])


# -- catalog ----------------------------------------------------------------

def _example1_gap(R: float) -> float:
    return math.exp(-R) + 1.0 / (R + 1.0)


def _example1_bifunction() -> Named:
    g = TermMap(((Term("power", coef=-1.0, var=0, power=2),),
                 (Term("power", coef=-1.0, var=1, power=2),)), 2)
    h = TermMap(((Term("exp_norm", coef=1.0, rate=1.0),),
                 (Term("recip_norm", coef=1.0, shift=1.0),)), 2)
    return Named("example-1", Separable(g, h))


def _example1_merit(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.sum(x ** 4, axis=-1)))


def _example2_merit(x) -> float:
    return float(np.linalg.norm(np.maximum(np.asarray(x, dtype=float), 0.0), axis=-1))


def example_1(truncation_radius: float = 1e3) -> ProblemInstance:
    """``f(x, z) = (-x1^2 + exp(-|z|), -x2^2 + 1/(|z| + 1))``, C = R^2_+, K = -R^2_+.

    The merit is ``sqrt(x1^4 + x2^4)``, approached only as ``|z| -> inf``;
    sampling K inside radius R under-estimates it by at most
    ``exp(-R) + 1/(R + 1)``.
    """
    return ProblemInstance(
        bifunction=_example1_bifunction(),
        cone=cones.Orthant(2),
        constraints=NegOrthant(2, truncation_radius),
        known_solutions=np.zeros((1, 2)),
        closed_form_merit=_example1_merit,
        truncation_gap=_example1_gap(truncation_radius),
        name="example-1",
    )


def example_2(theta: float = math.pi / 6, truncation_radius: float = 1e3,
                    allow_degenerate: bool = False) -> ProblemInstance:
    """``f(x, z) = z - x``, C = R^2_+, K = sector between angles theta and pi/2 - theta.

    Its merit is ``|max(x, 0)|`` everywhere (``|x|`` on K); Solv = {0}.
    ``theta = 0`` (K = R^2_+) is the degenerate case and needs ``allow_degenerate``.
    """
    if not 0.0 < theta < math.pi / 4:
        if not (theta == 0.0 and allow_degenerate):
            raise ValueError("theta must lie in (0, pi/4); theta = 0 needs allow_degenerate")
    f = Named("example-2", Affine(-np.eye(2), np.eye(2), np.zeros(2)),
              {"theta": float(theta)})
    return ProblemInstance(
        bifunction=f,
        cone=cones.Orthant(2),
        constraints=Sector(theta, truncation_radius),
        known_solutions=np.zeros((1, 2)),
        closed_form_merit=_example2_merit,
        truncation_gap=0.0,
        name="example-2",
    )


def _catalog_key(name: str) -> str | None:
    # accepts "example-1", "example1", "example_1" and prefixed forms like "x-example-1"
    m = re.search(r"(?:^|[-_])example[-_]?([12])$", name.strip().lower())
    return None if m is None else f"example-{m.group(1)}"


def named_problem(name: str, theta: float | None = None, truncation_radius: float = 1e3,
                  allow_degenerate: bool = False) -> ProblemInstance:
    key = _catalog_key(name)
    if key == "example-1":
        return example_1(truncation_radius)
    if key == "example-2":
        return example_2(math.pi / 6 if theta is None else theta, truncation_radius,
                         allow_degenerate)
    raise ValueError(f"unknown catalog entry {name!r}")
