"""Convex subdifferential estimates of nu, capped normal cones, and the gamma audit.

Every hull is a finite inner approximation of the true convex set, so the
gamma value at a probe is an upper bound on the separation margin there.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import cones
from .bifunctions import Affine, Named
from .config import RunConfig
from .merit import active_set, nu
from .model import ProblemInstance, midpoint_concavity, probe_set

__all__ = [
    "KinkError",
    "ConvexityRefused",
    "HullDescription",
    "SubdiffReport",
    "min_norm_point",
    "grad_component",
    "subdiff_nu",
    "b_star_K",
    "b_star_C",
    "adjoint_outer",
    "gamma_at",
    "gamma_audit",
]

CONCAVITY_TOL = 1e-9


class KinkError(ArithmeticError):
    """dist(f(., z), C) has zero value at x, where it is not differentiable."""


class ConvexityRefused(RuntimeError):
    def __init__(self, violation: float, witness):
        super().__init__(f"midpoint C-concavity refuted (violation {violation:.3g}); "
                         "the max rule needs convex components")
        self.violation = violation
        self.witness = witness


@dataclass
class HullDescription:
    generators: np.ndarray
    exactness: str  # "exact" | "outer" | "sampled"
    sphere: bool = False  # generators sample a sphere part, not a convex set

    def to_dict(self) -> dict:
        return {"generators": self.generators.tolist(), "exactness": self.exactness,
                "sphere": self.sphere}


@dataclass
class SubdiffReport:
    x: np.ndarray
    nu_hull: HullDescription
    bK_hull: HullDescription
    gamma_value: float
    nearest: np.ndarray

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "nu_hull": self.nu_hull.to_dict(),
                "bK_hull": self.bK_hull.to_dict(), "gamma_value": self.gamma_value,
                "nearest_point": self.nearest.tolist()}


# -- min-norm point ----------------------------------------------------------

def _affine_minnorm(Q: np.ndarray) -> np.ndarray:
    """Weights (summing to 1) of the min-norm point of the affine hull of rows of Q."""
    k = len(Q)
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = Q @ Q.T
    M[:k, k] = M[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return sol[:k]


def min_norm_point(P, tol: float = 1e-9, max_iter: int = 1000):
    """Wolfe's algorithm: nearest point to the origin in the convex hull of rows of P.

    Returns ``(point, weights)``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = len(P)
    if n == 0:
        raise ValueError("empty generator set")
    scale = max(1.0, float(np.max(np.sum(P * P, axis=1))))
    j = int(np.argmin(np.sum(P * P, axis=1)))
    S = [j]
    w = np.array([1.0])
    x = P[j].copy()
    for _ in range(max_iter):
        j = int(np.argmin(P @ x))
        if x @ x - P[j] @ x <= tol * scale or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            v = _affine_minnorm(P[S])
            if np.all(v > tol):
                w = v
                x = v @ P[S]
                break
            dec = v < w
            theta = min(1.0, float(np.min(w[dec] / (w[dec] - v[dec])))) if np.any(dec) else 1.0
            w = w + theta * (v - w)
            keep = w > tol
            S = [s for s, k in zip(S, keep) if k]
            w = w[keep]
            w = w / w.sum()
            x = w @ P[S]
            if len(S) == 1:
                break
    weights = np.zeros(n)
    weights[S] = w
    return x, weights


# -- gradients of the components ----------------------------------------------

def _fd_gradient(fun, x, h):
    g = np.zeros(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def _inner(f):
    return f.inner if isinstance(f, Named) else f


def grad_component(p: ProblemInstance, x, z, cfg: RunConfig | None = None) -> np.ndarray:
    """Gradient of x -> dist(f(x, z), C) where the distance is positive."""
    cfg = cfg or RunConfig()
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    f = p.bifunction
    y = f(x, z)
    d = float(p.cone.distance(y))
    if d <= cfg.zero_tol:
        raise KinkError("kink: subgradient set not a singleton at zero distance")
    res = (y - p.cone.project(y)) / d
    core = _inner(f)
    if isinstance(core, Affine):
        return core.A.T @ res
    if f.has_analytic_b_derivative and f.smooth_at(x):
        J = f.b_derivative(x, z[None], np.eye(p.dim_x))[0].T  # (dim_y, dim_x)
        return J.T @ res
    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    return _fd_gradient(lambda u: float(p.cone.distance(f(u, z))), x, h)


def _require_concavity(p: ProblemInstance, cfg: RunConfig) -> None:
    viol, wit = midpoint_concavity(p, cfg)
    if viol > CONCAVITY_TOL:
        raise ConvexityRefused(viol, wit)


def _dedupe(G: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if len(G) == 0:
        return G
    _, idx = np.unique(np.round(G / tol), axis=0, return_index=True)
    return G[np.sort(idx)]


def subdiff_nu(p: ProblemInstance, x, cfg: RunConfig | None = None,
               audited: bool = False) -> HullDescription:
    """Max-rule estimate of the subdifferential of nu at x.

    Generators are the component gradients over the epsilon-active set. Set
    ``audited`` when the concavity audit already passed for this problem.
    """
    cfg = cfg or RunConfig()
    x = p.check_point(x)
    if not audited:
        _require_concavity(p, cfg)
    rep = nu(p, x, cfg)
    gens = []
    if rep.nu > cfg.zero_tol:
        act = active_set(p, x, cfg=cfg, report=rep)
        for z in act.members:
            try:
                gens.append(grad_component(p, x, z, cfg))
            except KinkError:
                continue
    if rep.nu <= cfg.zero_tol or not gens:
        gens.append(np.zeros(p.dim_x))
    return HullDescription(_dedupe(np.array(gens)), "sampled")


# -- capped normal cones -------------------------------------------------------

def _arc(G: np.ndarray, resolution: float) -> np.ndarray:
    """Unit vectors spanning the planar cone generated by the rows of G."""
    ang = np.sort(np.mod(np.arctan2(G[:, 1], G[:, 0]), 2 * math.pi))
    if len(ang) == 1:
        return np.array([[math.cos(ang[0]), math.sin(ang[0])]])
    gaps = np.diff(np.append(ang, ang[0] + 2 * math.pi))
    k = int(np.argmax(gaps))
    if gaps[k] < math.pi - 1e-12:
        raise ValueError("generators span the whole plane")
    start = ang[(k + 1) % len(ang)]
    width = 2 * math.pi - gaps[k]
    n = max(2, int(math.ceil(width / resolution)) + 1)
    t = start + np.linspace(0.0, width, n)
    return np.column_stack([np.cos(t), np.sin(t)])


def _cone_sphere(G: np.ndarray, resolution: float) -> tuple[np.ndarray, str]:
    """Unit-sphere part of cone(G) as a finite set, with its exactness tag."""
    G = G / np.linalg.norm(G, axis=1, keepdims=True)
    if G.shape[1] == 2:
        return _arc(G, resolution), "sampled"
    if len(G) == 1:
        return G, "exact"
    pairs = [G[i] + G[j] for i, j in itertools.combinations(range(len(G)), 2)]
    mid = np.vstack([G.sum(axis=0)] + pairs)
    n = np.linalg.norm(mid, axis=1)
    mid = mid[n > 1e-12] / n[n > 1e-12, None]
    return np.vstack([G, mid]), "sampled"


def b_star_K(p: ProblemInstance, x, cfg: RunConfig | None = None) -> HullDescription:
    """Normal cone of K capped at the unit ball (x in K) or cut by the sphere (x outside).

    Outside K the normal cone is taken at the projection of x, which is
    unique for convex K.
    """
    cfg = cfg or RunConfig()
    x = p.check_point(x)
    K = p.constraints
    inside = K.contains(x, cfg.member_tol)
    w = x if inside else K.project(x)
    N = K.active_normals(w)
    zero = np.zeros((1, p.dim_x))
    if len(N) == 0:
        if not inside:
            raise ValueError("projection of an outside point has no active constraint")
        return HullDescription(zero, "exact")
    S, tag = _cone_sphere(N, cfg.arc_resolution)
    if len(N) == 1:
        tag = "exact"
    if inside:
        return HullDescription(np.vstack([zero, S]), tag)
    return HullDescription(S, tag, sphere=True)


def b_star_C(cone: cones.Cone, nu_at_x: float, cfg: RunConfig | None = None) -> HullDescription:
    """Negative dual cone of C cut by the unit sphere (nu > 0) or the unit ball (nu = 0)."""
    cfg = cfg or RunConfig()
    G = cones.cone_generators(cones.polar_neg(cone))
    S, tag = _cone_sphere(G, cfg.arc_resolution)
    if nu_at_x > cfg.zero_tol:
        return HullDescription(S, tag, sphere=True)
    return HullDescription(np.vstack([np.zeros((1, cone.dim)), S]), tag)


def adjoint_outer(p: ProblemInstance, x, cfg: RunConfig | None = None) -> HullDescription:
    """Outer estimate A^T B*_C(x) of the subdifferential for affine bifunctions (cross-check)."""
    cfg = cfg or RunConfig()
    core = _inner(p.bifunction)
    if not isinstance(core, Affine):
        raise TypeError("the adjoint outer estimate is implemented for affine bifunctions")
    v = nu(p, x, cfg).nu
    B = b_star_C(p.cone, v, cfg)
    return HullDescription(B.generators @ core.A, "outer", B.sphere)


# -- gamma audit ---------------------------------------------------------------

def gamma_at(p: ProblemInstance, x, cfg: RunConfig | None = None,
             audited: bool = False) -> SubdiffReport:
    """Distance from 0 to the sum of the subdifferential estimate and the capped normal cone."""
    cfg = cfg or RunConfig()
    x = p.check_point(x)
    G = subdiff_nu(p, x, cfg, audited=audited)
    B = b_star_K(p, x, cfg)
    if not B.sphere:
        sums = (G.generators[:, None, :] + B.generators[None, :, :]).reshape(-1, p.dim_x)
        pt, _ = min_norm_point(sums, cfg.minnorm_tol)
    else:
        # the sphere part is not convex: separate hull per sphere point
        best = None
        for s in _with_exact_hits(B.generators, G.generators, p, x):
            q, _ = min_norm_point(G.generators + s, cfg.minnorm_tol)
            if best is None or q @ q < best @ best:
                best = q
        pt = best
    return SubdiffReport(x, G, B, float(np.linalg.norm(pt)), pt)


def _with_exact_hits(S: np.ndarray, G: np.ndarray, p: ProblemInstance, x) -> np.ndarray:
    """Add -g/|g| for generators g whose opposite direction lies in the normal cone.

    Those sphere points are where the sum can reach the origin, and a
    discretized arc would only pass near them.
    """
    K = p.constraints
    N = K.active_normals(K.project(x))
    extra = []
    for g in G:
        n = np.linalg.norm(g)
        if n <= 1e-12:
            continue
        s = -g / n
        lam = cones._nnls(N.T, s)
        if np.linalg.norm(N.T @ lam - s) <= 1e-10:
            extra.append(s)
    return np.vstack([S] + [np.array(extra)]) if extra else S


def default_gamma_probes(p: ProblemInstance, cfg: RunConfig) -> np.ndarray:
    """Probes inside K plus uniform points of a box around the anchor."""
    return probe_set(p, cfg, in_K=False)


def gamma_audit(p: ProblemInstance, probe_points=None, cfg: RunConfig | None = None,
                audited: bool = False):
    """Minimum gamma value over the probes; 0 refutes the subdifferential condition.

    Returns ``(value, report at the minimizing probe)``. Probes must avoid the
    solution set (nu_K above tolerance).
    """
    cfg = cfg or RunConfig()
    if not audited:
        _require_concavity(p, cfg)
    X = default_gamma_probes(p, cfg) if probe_points is None \
        else np.atleast_2d(np.asarray(probe_points, dtype=float))
    best = None
    for x in X:
        r = nu(p, x, cfg)
        if r.nu_ka <= cfg.zero_tol:
            if probe_points is None:
                continue
            raise ValueError(f"probe {x.tolist()} lies in the solution set")
        rep = gamma_at(p, x, cfg, audited=True)
        if best is None or rep.gamma_value < best.gamma_value:
            best = rep
    if best is None:
        raise ValueError("no probe outside the solution set")
    return best.gamma_value, best
