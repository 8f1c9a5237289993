"""Closed convex constraint sets ``K`` (all polyhedral) and their sampling."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import ndtri
from scipy.stats import qmc

from .cones import HalfspaceCone

__all__ = ["ConstraintSet", "Box", "Polyhedron", "Sector", "NegOrthant"]

DEFAULT_TRUNCATION = 1e3


class ConstraintSet:
    """Polyhedron ``{x : A x <= b}`` with variant-specific fast paths.

    Unbounded sets are sampled inside ``ball(anchor, truncation_radius)`` where
    ``anchor`` is the projection of the origin onto the set.
    """

    dim: int
    truncation_radius: float

    # -- geometry -----------------------------------------------------------
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def is_bounded(self) -> bool:
        return False

    @property
    def is_cone(self) -> bool:
        return False

    def contains(self, x, tol: float = 1e-9):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        A, b = self.halfspaces()
        ok = np.all(X @ A.T <= b + tol * (1.0 + np.abs(b)), axis=1)
        return bool(ok[0]) if np.ndim(x) == 1 else ok

    def _project_batch(self, X: np.ndarray) -> np.ndarray:
        return np.array([_hildreth(x, *self.halfspaces()) for x in X])

    def project(self, x) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: set lives in R^{self.dim}, got {X.shape[1]}")
        P = self._project_batch(X)
        return P[0] if np.ndim(x) == 1 else P

    def distance(self, x):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        d = np.linalg.norm(X - self.project(X), axis=1)
        return float(d[0]) if np.ndim(x) == 1 else d

    @property
    def anchor(self) -> np.ndarray:
        """Projection of the origin onto the set."""
        return self.project(np.zeros(self.dim))

    def active_normals(self, w, tol: float = 1e-8) -> np.ndarray:
        """Unit outward normals of constraints active at ``w`` (generators of N(w; K))."""
        A, b = self.halfspaces()
        w = np.asarray(w, dtype=float)
        act = A @ w >= b - tol * (1.0 + np.abs(b))
        N = A[act]
        if len(N) == 0:
            return np.zeros((0, self.dim))
        return N / np.linalg.norm(N, axis=1, keepdims=True)

    def clip_to_truncation(self, X: np.ndarray) -> np.ndarray:
        """Pull points radially toward the anchor so they lie in the truncation ball."""
        if self.is_bounded:
            return X
        a = self.anchor
        D = X - a
        n = np.linalg.norm(D, axis=-1, keepdims=True)
        scale = np.minimum(1.0, self.truncation_radius / np.maximum(n, 1e-300))
        return a + D * scale

    # -- sampling -----------------------------------------------------------
    def _cube_dim(self) -> int:
        return self.dim

    def _from_unit(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def boundary_points(self) -> np.ndarray:
        """Points that should always be probed: anchor, vertices, far ray points."""
        return self.anchor[None, :]

    def sample(self, budget: int, seed: int = 0) -> np.ndarray:
        """Deterministic sample of ``budget`` members of the (truncated) set.

        Boundary points come first, then a Halton block (two thirds of the
        remainder) and a seeded uniform block. Sample lists are nested in the
        budget: the points drawn for ``budget`` are a subset of those for any
        larger budget with the same seed.
        """
        if budget < 1:
            raise ValueError("budget must be >= 1")
        extras = _dedupe(self.boundary_points())
        if len(extras) >= budget:
            return extras[:budget].copy()
        rest = budget - len(extras)
        n_ld = (2 * rest) // 3
        n_rand = rest - n_ld
        blocks = [extras]
        cd = self._cube_dim()
        if n_ld:
            U = qmc.Halton(cd, scramble=False).random(n_ld + 1)[1:]
            blocks.append(self._from_unit(U))
        if n_rand:
            U = np.random.default_rng(seed).random((n_rand, cd))
            blocks.append(self._from_unit(U))
        return np.vstack(blocks)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _dedupe(P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    keep: list[np.ndarray] = []
    for p in P:
        if all(np.linalg.norm(p - q) > tol for q in keep):
            keep.append(p)
    return np.array(keep)


def _hildreth(x, A, b, tol: float = 1e-12, max_sweeps: int = 100_000):
    """Projection onto ``{y : A y <= b}`` by Dykstra/Hildreth dual coordinate ascent."""
    norms2 = np.einsum("ij,ij->i", A, A)
    lam = np.zeros(len(A))
    y = np.array(x, dtype=float)
    for _ in range(max_sweeps):
        moved = 0.0
        for i in range(len(A)):
            viol = (A[i] @ y - b[i]) / norms2[i]
            step = max(viol, -lam[i])
            if step != 0.0:
                lam[i] += step
                y = y - step * A[i]
                moved = max(moved, abs(step) * math.sqrt(norms2[i]))
        if moved <= tol:
            return y
    return y


def _unit_directions(U: np.ndarray) -> np.ndarray:
    G = ndtri(np.clip(U, 1e-12, 1 - 1e-12))
    n = np.linalg.norm(G, axis=1, keepdims=True)
    G = np.where(n > 0, G / np.maximum(n, 1e-300), 1.0 / math.sqrt(G.shape[1]))
    return G


@dataclass(frozen=True, eq=False)
class NegOrthant(ConstraintSet):
    dim: int
    truncation_radius: float = DEFAULT_TRUNCATION

    def halfspaces(self):
        return np.eye(self.dim), np.zeros(self.dim)

    @property
    def is_cone(self):
        return True

    def contains(self, x, tol=1e-9):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        ok = X.max(axis=1) <= tol
        return bool(ok[0]) if np.ndim(x) == 1 else ok

    def _project_batch(self, X):
        return np.minimum(X, 0.0)

    @property
    def anchor(self):
        return np.zeros(self.dim)

    def _cube_dim(self):
        return self.dim + 1

    def _from_unit(self, U):
        dirs = -np.abs(_unit_directions(U[:, 1:]))
        return self.truncation_radius * U[:, :1] * dirs

    def boundary_points(self):
        return np.vstack([np.zeros(self.dim), -self.truncation_radius * np.eye(self.dim)])

    def to_dict(self):
        return {"variant": "neg_orthant", "dim": self.dim,
                "truncation_radius": self.truncation_radius}


@dataclass(frozen=True, eq=False)
class Sector(ConstraintSet):
    """Planar cone ``{(r cos t, r sin t) : r >= 0, theta <= t <= pi/2 - theta}``."""

    theta: float
    truncation_radius: float = DEFAULT_TRUNCATION
    dim: int = field(default=2, init=False)
    _cone: HalfspaceCone = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.theta < math.pi / 4:
            raise ValueError("sector angle must lie in [0, pi/4)")
        s, c = math.sin(self.theta), math.cos(self.theta)
        object.__setattr__(self, "_cone", HalfspaceCone([[-s, c], [c, -s]]))

    def halfspaces(self):
        return -self._cone.normals, np.zeros(2)

    @property
    def is_cone(self):
        return True

    def _project_batch(self, X):
        return self._cone._project_batch(X)

    @property
    def anchor(self):
        return np.zeros(2)

    def _from_unit(self, U):
        t = self.theta + U[:, 1] * (math.pi / 2 - 2 * self.theta)
        r = self.truncation_radius * U[:, 0]
        return np.column_stack([r * np.cos(t), r * np.sin(t)])

    def edge_directions(self) -> np.ndarray:
        s, c = math.sin(self.theta), math.cos(self.theta)
        return np.array([[c, s], [s, c]])

    def boundary_points(self):
        return np.vstack([np.zeros(2), self.truncation_radius * self.edge_directions()])

    def to_dict(self):
        return {"variant": "sector", "theta": self.theta,
                "truncation_radius": self.truncation_radius}


@dataclass(frozen=True, eq=False)
class Box(ConstraintSet):
    lower: np.ndarray
    upper: np.ndarray
    truncation_radius: float = DEFAULT_TRUNCATION
    dim: int = field(init=False)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box needs matching bounds with lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "dim", len(lo))

    def halfspaces(self):
        eye = np.eye(self.dim)
        fin_hi = np.isfinite(self.upper)
        fin_lo = np.isfinite(self.lower)
        A = np.vstack([eye[fin_hi], -eye[fin_lo]])
        b = np.concatenate([self.upper[fin_hi], -self.lower[fin_lo]])
        return A, b

    @property
    def is_bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, tol=1e-9):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        ok = np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=1)
        return bool(ok[0]) if np.ndim(x) == 1 else ok

    def _project_batch(self, X):
        return np.clip(X, self.lower, self.upper)

    def _truncated_bounds(self):
        a = self.anchor
        R = self.truncation_radius
        return np.maximum(self.lower, a - R), np.minimum(self.upper, a + R)

    def _from_unit(self, U):
        lo, hi = self._truncated_bounds()
        return self.clip_to_truncation(lo + U * (hi - lo))

    def boundary_points(self):
        lo, hi = self._truncated_bounds()
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        pts = np.vstack([self.anchor, corners])
        if not self.is_bounded:
            # keep only true vertices inside the truncation ball, plus clipped corners
            pts = self.clip_to_truncation(pts)
        return pts

    def to_dict(self):
        def enc(v):
            return [None if not np.isfinite(t) else float(t) for t in v]
        return {"variant": "box", "lower": enc(self.lower), "upper": enc(self.upper),
                "truncation_radius": self.truncation_radius}


@dataclass(frozen=True, eq=False)
class Polyhedron(ConstraintSet):
    A: np.ndarray
    b: np.ndarray
    truncation_radius: float = DEFAULT_TRUNCATION
    dim: int = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if len(A) != len(b):
            raise ValueError("polyhedron needs one right-hand side per row")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ValueError("polyhedron rows must be nonzero")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "dim", A.shape[1])
        res = linprog(np.zeros(self.dim), A_ub=A, b_ub=b, bounds=[(None, None)] * self.dim,
                      method="highs")
        if res.status != 0:
            raise ValueError("polyhedron is empty")
        object.__setattr__(self, "_anchor", _hildreth(np.zeros(self.dim), A, b))
        object.__setattr__(self, "_bounded", self._check_bounded())

    def _check_bounded(self) -> bool:
        for i, sign in itertools.product(range(self.dim), (1.0, -1.0)):
            c = np.zeros(self.dim)
            c[i] = -sign
            res = linprog(c, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * self.dim,
                          method="highs")
            if res.status == 3:
                return False
        return True

    def halfspaces(self):
        return self.A, self.b

    @property
    def anchor(self):
        return self._anchor.copy()

    @property
    def is_bounded(self):
        return self._bounded

    def _bounding_box(self):
        a, R = self._anchor, self.truncation_radius
        lo, hi = np.empty(self.dim), np.empty(self.dim)
        box = list(zip(a - R, a + R))
        for i in range(self.dim):
            c = np.zeros(self.dim)
            c[i] = 1.0
            lo[i] = linprog(c, A_ub=self.A, b_ub=self.b, bounds=box, method="highs").fun
            hi[i] = -linprog(-c, A_ub=self.A, b_ub=self.b, bounds=box, method="highs").fun
        return lo, hi

    def _from_unit(self, U):
        lo, hi = self._bounding_box()
        P = lo + U * (hi - lo)
        inside = self.contains(P)
        P[~inside] = self._project_batch(P[~inside])
        return self.clip_to_truncation(P)

    def vertices(self, max_combinations: int = 20_000) -> np.ndarray:
        """Vertices of ``K`` intersected with the truncation box around the anchor."""
        a, R = self._anchor, self.truncation_radius
        eye = np.eye(self.dim)
        A = np.vstack([self.A, eye, -eye]) if not self._bounded else self.A
        b = np.concatenate([self.b, a + R, R - a]) if not self._bounded else self.b
        out = []
        for k, rows in enumerate(itertools.combinations(range(len(A)), self.dim)):
            if k >= max_combinations:
                break
            M = A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            v = np.linalg.solve(M, b[list(rows)])
            if np.all(A @ v <= b + 1e-9 * (1 + np.abs(b))):
                out.append(v)
        return np.array(out) if out else np.zeros((0, self.dim))

    def boundary_points(self):
        V = self.vertices()
        pts = np.vstack([self._anchor, V]) if len(V) else self._anchor[None, :]
        return self.clip_to_truncation(pts)

    def to_dict(self):
        return {"variant": "polyhedron", "A": self.A.tolist(), "b": self.b.tolist(),
                "truncation_radius": self.truncation_radius}
