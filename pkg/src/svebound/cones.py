"""Polyhedral ordering cones: membership, projection, distance, polar and depth.

Four variants are supported, all closed convex and nontrivial:

* :class:`Orthant` -- the nonnegative orthant of ``R^dim``;
* :class:`HalfspaceCone` -- ``{y : <a_i, y> >= 0 for all i}``, normals unit-scaled;
* :class:`Generated` -- the conical hull of finitely many rays;
* :class:`Product` -- a Cartesian product of the above.

Every routine accepts a single point of shape ``(dim,)`` or a batch of shape
``(n, dim)`` unless noted otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, lsq_linear, nnls

__all__ = [
    "Cone",
    "Orthant",
    "HalfspaceCone",
    "Generated",
    "Product",
    "ExcessValue",
    "ProjectionError",
    "project",
    "distance",
    "polar_neg",
    "excess",
    "c_bounded_probe",
    "depth",
    "cone_generators",
    "sample_cone",
]

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 100_000


class ProjectionError(RuntimeError):
    """Iterative projection did not reach tolerance within its sweep cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _as_batch(y, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(y, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != dim:
        raise ValueError(f"dimension mismatch: cone lives in R^{dim}, got {arr.shape[-1]}")
    return arr, single


def _null_vectors(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (rows) of the null space of ``M``."""
    if M.size == 0:
        return np.eye(M.shape[1])
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return vt[rank:]


def _is_zero_cone(normals: np.ndarray) -> bool:
    """True when ``{y : normals @ y >= 0}`` reduces to the origin."""
    dim = normals.shape[1]
    for i, sign in itertools.product(range(dim), (1.0, -1.0)):
        c = np.zeros(dim)
        c[i] = -sign
        res = linprog(c, A_ub=-normals, b_ub=np.zeros(len(normals)),
                      bounds=[(-1.0, 1.0)] * dim, method="highs")
        if res.status == 0 and -res.fun > 1e-9:
            return False
    return True


def _halfspace_rays(normals: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Extreme rays and lineality basis of ``{y : normals @ y >= 0}``.

    Brute-force enumeration over (rank - 1)-subsets of the constraints,
    intended for the low dimensions used here.
    """
    dim = normals.shape[1]
    lineality = _null_vectors(normals, tol)
    rank = dim - len(lineality)
    if rank == 0:
        return np.zeros((0, dim)), lineality
    # complement of the lineality space
    comp = _null_vectors(lineality, tol) if len(lineality) else np.eye(dim)
    reduced = normals @ comp.T  # constraints expressed in complement coords
    rays = []
    if rank == 1:
        row = reduced[np.argmax(np.linalg.norm(reduced, axis=1))]
        rays.append(row / np.linalg.norm(row))
    else:
        for subset in itertools.combinations(range(len(reduced)), rank - 1):
            ns = _null_vectors(reduced[list(subset)], tol)
            if len(ns) != 1:
                continue
            v = ns[0]
            for cand in (v, -v):
                if np.all(reduced @ cand >= -1e-9):
                    rays.append(cand)
    if not rays:
        return np.zeros((0, dim)), lineality
    full = np.array(rays) @ comp
    full /= np.linalg.norm(full, axis=1, keepdims=True)
    # deduplicate
    keep: list[np.ndarray] = []
    for r in full:
        if all(np.linalg.norm(r - k) > 1e-8 for k in keep):
            keep.append(r)
    return np.array(keep), lineality


def _nnls(G: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Nonnegative least squares with an optimality check.

    ``scipy.optimize.nnls`` can stop at a non-optimal point on some inputs,
    so its KKT conditions are verified and BVLS is used when they fail.
    """
    lam, _ = nnls(G, y)
    grad = G.T @ (y - G @ lam)
    tol = 1e-9 * max(1.0, float(np.abs(y).max()))
    if grad.max() <= tol and np.all(np.abs(grad[lam > 0]) <= tol):
        return lam
    return lsq_linear(G, y, bounds=(0.0, np.inf), method="bvls", tol=1e-14).x


class Cone:
    """Base class. Subclasses implement ``project`` for a batch."""

    dim: int

    def _project_batch(self, Y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, y) -> np.ndarray:
        Y, single = _as_batch(y, self.dim)
        P = self._project_batch(Y)
        return P[0] if single else P

    def distance(self, y) -> np.ndarray | float:
        Y, single = _as_batch(y, self.dim)
        d = np.linalg.norm(Y - self._project_batch(Y), axis=1)
        return float(d[0]) if single else d

    def contains(self, y, tol: float = 1e-9):
        Y, single = _as_batch(y, self.dim)
        out = self._contains_batch(Y, tol)
        return bool(out[0]) if single else out

    def _contains_batch(self, Y: np.ndarray, tol: float) -> np.ndarray:
        return np.linalg.norm(Y - self._project_batch(Y), axis=1) <= tol

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Orthant(Cone):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("orthant dimension must be >= 1")

    def _project_batch(self, Y):
        return np.maximum(Y, 0.0)

    def _contains_batch(self, Y, tol):
        return Y.min(axis=1) >= -tol

    def to_dict(self):
        return {"variant": "orthant", "dim": self.dim}


@dataclass(frozen=True, eq=False)
class HalfspaceCone(Cone):
    """``{y : <a_i, y> >= 0}``; normals are rescaled to unit length.

    ``method`` selects the projection route: ``"moreau"`` (default) projects
    onto the polar cone by nonnegative least squares and subtracts; ``"dykstra"``
    runs alternating halfspace projections with Dykstra corrections.
    """

    normals: np.ndarray
    method: str = "moreau"
    tol: float = DYKSTRA_TOL
    max_sweeps: int = DYKSTRA_MAX_SWEEPS
    dim: int = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        norms = np.linalg.norm(A, axis=1)
        if A.size == 0 or np.any(norms == 0) or not np.all(np.isfinite(A)):
            raise ValueError("halfspace cone needs at least one finite nonzero normal")
        A = A / norms[:, None]
        A.setflags(write=False)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "dim", A.shape[1])
        if self.method not in ("moreau", "dykstra"):
            raise ValueError(f"unknown projection method {self.method!r}")
        if _is_zero_cone(A):
            raise ValueError("halfspace cone is trivial (only the origin)")

    def _contains_batch(self, Y, tol):
        return (Y @ self.normals.T).min(axis=1) >= -tol

    def _project_batch(self, Y):
        if self.method == "dykstra":
            return np.array([self._dykstra(y) for y in Y])
        # Moreau: y = P_C(y) + P_{C°}(y), with C° = cone{-a_i}
        A = self.normals
        G = -A.T
        out = Y.copy()
        S = Y @ A.T
        todo = np.flatnonzero(S.min(axis=1) < 0)
        if len(todo):
            # single most violated face: exact whenever the result is feasible
            i = np.argmin(S[todo], axis=1)
            cand = Y[todo] - S[todo, i][:, None] * A[i]
            ok = (cand @ A.T).min(axis=1) >= -1e-14 * (1 + np.abs(Y[todo]).max(axis=1))
            out[todo[ok]] = cand[ok]
            todo = todo[~ok]
        for k in todo:
            lam = _nnls(G, Y[k])
            out[k] = Y[k] - G @ lam
        return out

    def _dykstra(self, y: np.ndarray) -> np.ndarray:
        A = self.normals
        x = y.copy()
        incr = np.zeros_like(A)
        for _ in range(self.max_sweeps):
            x_prev = x.copy()
            for i, a in enumerate(A):
                v = x + incr[i]
                x = v - min(0.0, a @ v) * a
                incr[i] = v - x
            if np.linalg.norm(x - x_prev) <= self.tol and (A @ x).min() >= -self.tol:
                return x
        raise ProjectionError("Dykstra projection hit sweep cap",
                              float(max(0.0, -(A @ x).min())))

    def to_dict(self):
        return {"variant": "halfspaces", "normals": self.normals.tolist()}


@dataclass(frozen=True, eq=False)
class Generated(Cone):
    """Conical hull of ``rays`` (rows). Projection is an NNLS active-set solve."""

    rays: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.rays, dtype=float))
        if R.size == 0 or not np.all(np.isfinite(R)):
            raise ValueError("generated cone needs at least one finite ray")
        R = R[np.linalg.norm(R, axis=1) > 0]
        if len(R) == 0:
            raise ValueError("generated cone is trivial (all rays zero)")
        R.setflags(write=False)
        object.__setattr__(self, "rays", R)
        object.__setattr__(self, "dim", R.shape[1])
        # whole space iff the polar cone {y*: R y* <= 0} is trivial
        if _is_zero_cone(-R):
            raise ValueError("generated cone is the whole space")

    def _project_batch(self, Y):
        G = self.rays.T
        out = np.empty_like(Y)
        for k, y in enumerate(Y):
            lam = _nnls(G, y)
            out[k] = G @ lam
        return out

    def to_dict(self):
        return {"variant": "generated", "rays": self.rays.tolist()}


@dataclass(frozen=True, eq=False)
class Product(Cone):
    parts: tuple
    dim: int = field(init=False)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("product cone needs at least one part")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "dim", sum(p.dim for p in parts))

    def _slices(self):
        start = 0
        for p in self.parts:
            yield p, slice(start, start + p.dim)
            start += p.dim

    def _project_batch(self, Y):
        out = np.empty_like(Y)
        for p, s in self._slices():
            out[:, s] = p._project_batch(Y[:, s])
        return out

    def _contains_batch(self, Y, tol):
        ok = np.ones(len(Y), dtype=bool)
        for p, s in self._slices():
            ok &= p._contains_batch(Y[:, s], tol)
        return ok

    def to_dict(self):
        return {"variant": "product", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class ExcessValue:
    value: float
    witness: np.ndarray
    index: int


def project(cone: Cone, y) -> np.ndarray:
    return cone.project(y)


def distance(cone: Cone, y):
    return cone.distance(y)


def polar_neg(cone: Cone) -> Cone:
    """Negative dual cone ``{y* : <y*, y> <= 0 for all y in C}``."""
    if isinstance(cone, Orthant):
        return Generated(-np.eye(cone.dim))
    if isinstance(cone, HalfspaceCone):
        return Generated(-cone.normals)
    if isinstance(cone, Generated):
        return HalfspaceCone(-cone.rays)
    if isinstance(cone, Product):
        return Product(tuple(polar_neg(p) for p in cone.parts))
    raise TypeError(f"polar not supported for {type(cone).__name__}")


def excess(points, cone: Cone) -> ExcessValue:
    """Largest distance to ``cone`` over a finite nonempty list of points."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        raise ValueError("excess of an empty set is not defined here")
    d = np.atleast_1d(cone.distance(P))
    i = int(np.argmax(d))
    return ExcessValue(float(d[i]), P[i].copy(), i)


def c_bounded_probe(points, cone: Cone, m: float) -> bool:
    """Sampled check of ``S \\ C within m * ball``: refutes, never proves."""
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return True
    P = np.atleast_2d(P)
    outside = ~np.atleast_1d(cone.contains(P))
    return bool(np.all(np.linalg.norm(P[outside], axis=1) <= m))


def _facet_normals(cone: Generated) -> np.ndarray | None:
    """Inward unit facet normals of a full-dimensional generated cone (dim <= 3)."""
    if cone.dim > 3:
        raise ValueError("depth for generated cones is only enumerated up to dimension 3")
    rays, lineality = _halfspace_rays(cone.rays)  # dual cone {n : R n >= 0}
    if len(lineality):
        return None  # cone is not full-dimensional
    return rays


def depth(cone: Cone, y) -> np.ndarray | float:
    """Largest ``s`` with ``y + s * ball`` inside the cone; negative outside."""
    Y, single = _as_batch(y, cone.dim)
    if isinstance(cone, Orthant):
        d = Y.min(axis=1)
    elif isinstance(cone, HalfspaceCone):
        d = (Y @ cone.normals.T).min(axis=1)
    elif isinstance(cone, Generated):
        N = _facet_normals(cone)
        if N is None:
            d = -np.atleast_1d(cone.distance(Y))
        else:
            d = (Y @ N.T).min(axis=1)
    elif isinstance(cone, Product):
        d = np.full(len(Y), np.inf)
        for p, s in cone._slices():
            d = np.minimum(d, np.atleast_1d(depth(p, Y[:, s])))
    else:
        raise TypeError(f"depth not supported for {type(cone).__name__}")
    return float(d[0]) if single else d


def cone_generators(cone: Cone) -> np.ndarray:
    """Unit vectors whose conical hull is the cone (lineality enters as +-pairs)."""
    if isinstance(cone, Orthant):
        return np.eye(cone.dim)
    if isinstance(cone, Generated):
        return cone.rays / np.linalg.norm(cone.rays, axis=1, keepdims=True)
    if isinstance(cone, HalfspaceCone):
        rays, lin = _halfspace_rays(cone.normals)
        return np.vstack([rays, lin, -lin]) if len(lin) else rays
    if isinstance(cone, Product):
        blocks = []
        for p, s in cone._slices():
            g = cone_generators(p)
            G = np.zeros((len(g), cone.dim))
            G[:, s] = g
            blocks.append(G)
        return np.vstack(blocks)
    raise TypeError(f"generators not supported for {type(cone).__name__}")


def sample_cone(cone: Cone, n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random members: nonnegative combinations of the generators."""
    G = cone_generators(cone)
    W = rng.exponential(size=(n, len(G))) * (rng.random((n, len(G))) < 0.7)
    return scale * W @ G
