"""Vector bifunctions ``f(x, z)`` with first-argument B-derivatives.

All bifunctions broadcast over leading axes: ``f(x, z)`` accepts ``x`` of shape
``(..., dim_x)`` and ``z`` of shape ``(..., dim_x)`` and returns ``(..., dim_y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Term",
    "TermMap",
    "Bifunction",
    "Affine",
    "Separable",
    "Factorable",
    "CallableBifunction",
    "Named",
    "NonBDifferentiableError",
    "fd_b_derivative",
]


class NonBDifferentiableError(ArithmeticError):
    """One-sided difference quotients disagree across the step schedule."""


# -- analytic term catalog -------------------------------------------------

@dataclass(frozen=True)
class Term:
    """One scalar term of a catalog map.

    kinds:
      ``const``       value
      ``linear``      <coef, x>
      ``power``       coef * x[var] ** power
      ``exp_norm``    coef * exp(-rate * |x|)
      ``recip_norm``  coef / (|x| + shift), shift > 0
    """

    kind: str
    coef: float | tuple = 1.0
    var: int = 0
    power: int = 1
    rate: float = 1.0
    shift: float = 1.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("const", "linear", "power", "exp_norm", "recip_norm"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind == "recip_norm" and self.shift <= 0:
            raise ValueError("recip_norm needs a positive shift")
        if self.kind == "power" and (self.power < 0 or int(self.power) != self.power):
            raise ValueError("power terms take nonnegative integer exponents")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        k = self.kind
        if k == "const":
            return np.full(X.shape[:-1], float(self.value))
        if k == "linear":
            return X @ np.asarray(self.coef, dtype=float)
        if k == "power":
            return self.coef * X[..., self.var] ** self.power
        n = np.linalg.norm(X, axis=-1)
        if k == "exp_norm":
            return self.coef * np.exp(-self.rate * n)
        return self.coef / (n + self.shift)

    def b_derivative(self, x: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Directional derivative at the single point ``x`` along each row of ``U``."""
        k = self.kind
        if k == "const":
            return np.zeros(U.shape[:-1])
        if k == "linear":
            return U @ np.asarray(self.coef, dtype=float)
        if k == "power":
            if self.power == 0:
                return np.zeros(U.shape[:-1])
            return self.coef * self.power * x[self.var] ** (self.power - 1) * U[..., self.var]
        n = float(np.linalg.norm(x))
        # directional derivative of |.|: <x/|x|, u>, or |u| at the origin
        dn = U @ (x / n) if n > 0 else np.linalg.norm(U, axis=-1)
        if k == "exp_norm":
            return -self.coef * self.rate * math.exp(-self.rate * n) * dn
        return -self.coef / (n + self.shift) ** 2 * dn

    def smooth_at(self, x: np.ndarray) -> bool:
        return self.kind not in ("exp_norm", "recip_norm") or np.linalg.norm(x) > 0

    def to_dict(self) -> dict:
        d: dict = {"type": self.kind}
        if self.kind == "const":
            d["value"] = self.value
        elif self.kind == "linear":
            d["coef"] = list(self.coef)
        elif self.kind == "power":
            d.update(coef=self.coef, var=self.var, power=self.power)
        elif self.kind == "exp_norm":
            d.update(coef=self.coef, rate=self.rate)
        else:
            d.update(coef=self.coef, shift=self.shift)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Term":
        kind = d["type"]
        if kind == "linear":
            return cls(kind, coef=tuple(float(c) for c in d["coef"]))
        kw = {k: d[k] for k in ("coef", "var", "power", "rate", "shift", "value") if k in d}
        return cls(kind, **kw)


@dataclass(frozen=True)
class TermMap:
    """Map ``R^dim_in -> R^len(components)``; each component is a sum of terms."""

    components: tuple
    dim_in: int

    def __post_init__(self):
        comps = tuple(tuple(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        for comp in comps:
            for t in comp:
                if t.kind == "power" and not 0 <= t.var < self.dim_in:
                    raise ValueError(f"term variable {t.var} out of range")
                if t.kind == "linear" and len(t.coef) != self.dim_in:
                    raise ValueError("linear term length does not match input dimension")

    @property
    def dim_out(self) -> int:
        return len(self.components)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1] + (self.dim_out,))
        for j, comp in enumerate(self.components):
            for t in comp:
                out[..., j] += t(X)
        return out

    def b_derivative(self, x, U) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        U = np.asarray(U, dtype=float)
        out = np.zeros(U.shape[:-1] + (self.dim_out,))
        for j, comp in enumerate(self.components):
            for t in comp:
                out[..., j] += t.b_derivative(x, U)
        return out

    def smooth_at(self, x) -> bool:
        return all(t.smooth_at(x) for comp in self.components for t in comp)

    def to_dict(self) -> dict:
        return {"dim_in": self.dim_in,
                "components": [[t.to_dict() for t in comp] for comp in self.components]}

    @classmethod
    def from_dict(cls, d: dict) -> "TermMap":
        return cls(tuple(tuple(Term.from_dict(t) for t in comp) for comp in d["components"]),
                   int(d["dim_in"]))


# -- bifunctions ------------------------------------------------------------

def fd_b_derivative(fx: Callable, x0, U, steps=(1e-2, 1e-3, 1e-4), tol: float = 1e-4):
    """One-sided difference estimate of the B-derivative of ``fx`` at ``x0``.

    Consecutive steps are combined by Richardson extrapolation; the two most
    refined extrapolants must agree to ``tol`` (relative to their size).
    """
    x0 = np.asarray(x0, dtype=float)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    f0 = np.asarray(fx(x0), dtype=float)
    D = [(np.asarray(fx(x0 + t * U), dtype=float) - f0) / t for t in steps]
    if len(D) < 3:
        return D[-1]
    rich = []
    for (t1, d1), (t2, d2) in zip(zip(steps, D), zip(steps[1:], D[1:])):
        q = t1 / t2
        rich.append((q * d2 - d1) / (q - 1.0))
    diff = np.linalg.norm(rich[-1] - rich[-2], axis=-1)
    scale = 1.0 + np.linalg.norm(rich[-1], axis=-1)
    if np.any(diff > tol * scale):
        raise NonBDifferentiableError(
            f"non-B-differentiable at requested precision (disagreement {diff.max():.3e})")
    return rich[-1]


class Bifunction:
    """Base class; subclasses set ``dim_x``, ``dim_y`` and implement ``__call__``."""

    dim_x: int
    dim_y: int
    has_analytic_b_derivative: bool = True

    def __call__(self, x, z) -> np.ndarray:
        raise NotImplementedError

    def b_derivative(self, x0, Z, U) -> np.ndarray:
        """B-derivative of ``f(., z)`` at ``x0`` for each z (rows) and u (rows).

        Returns shape ``(len(Z), len(U), dim_y)``.
        """
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return np.stack([fd_b_derivative(lambda x, z=z: self(x, z), x0, U) for z in Z])

    def smooth_at(self, x) -> bool:
        return True

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Affine(Bifunction):
    """``f(x, z) = A x + B z + c``."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        if A.shape != B.shape or A.shape[0] != len(c):
            raise ValueError("affine bifunction needs A, B of equal shape and len(c) == rows")
        for name, v in (("A", A), ("B", B), ("c", c)):
            object.__setattr__(self, name, v)

    @property
    def dim_x(self):
        return self.A.shape[1]

    @property
    def dim_y(self):
        return self.A.shape[0]

    def __call__(self, x, z):
        return np.asarray(x, float) @ self.A.T + np.asarray(z, float) @ self.B.T + self.c

    def b_derivative(self, x0, Z, U):
        Z = np.atleast_2d(Z)
        DU = np.atleast_2d(U) @ self.A.T
        return np.broadcast_to(DU, (len(Z),) + DU.shape).copy()

    def jacobian(self, x, z) -> np.ndarray:
        return self.A

    def to_dict(self):
        return {"variant": "affine", "A": self.A.tolist(), "B": self.B.tolist(),
                "c": self.c.tolist()}


@dataclass(frozen=True, eq=False)
class Separable(Bifunction):
    """``f(x, z) = g(x) + h(z)``; the B-derivative does not depend on z."""

    g: TermMap
    h: TermMap

    def __post_init__(self):
        if self.g.dim_out != self.h.dim_out or self.g.dim_in != self.h.dim_in:
            raise ValueError("g and h must share input and output dimensions")

    @property
    def dim_x(self):
        return self.g.dim_in

    @property
    def dim_y(self):
        return self.g.dim_out

    def __call__(self, x, z):
        return self.g(x) + self.h(z)

    def b_derivative(self, x0, Z, U):
        Z = np.atleast_2d(Z)
        DU = self.g.b_derivative(x0, np.atleast_2d(U))
        return np.broadcast_to(DU, (len(Z),) + DU.shape).copy()

    def smooth_at(self, x):
        return self.g.smooth_at(x)

    def to_dict(self):
        return {"variant": "separable", "g": self.g.to_dict(), "h": self.h.to_dict()}


@dataclass(frozen=True, eq=False)
class Factorable(Bifunction):
    """``f(x, z) = lam(z) * g(x)`` with scalar ``lam``."""

    lam: TermMap
    g: TermMap

    def __post_init__(self):
        if self.lam.dim_out != 1 or self.lam.dim_in != self.g.dim_in:
            raise ValueError("lam must be scalar-valued on the same space as g")

    @property
    def dim_x(self):
        return self.g.dim_in

    @property
    def dim_y(self):
        return self.g.dim_out

    def __call__(self, x, z):
        return self.lam(z) * self.g(x)

    def b_derivative(self, x0, Z, U):
        Z = np.atleast_2d(Z)
        DU = self.g.b_derivative(x0, np.atleast_2d(U))
        return self.lam(Z)[:, :, None] * DU[None, :, :]

    def smooth_at(self, x):
        return self.g.smooth_at(x)

    def to_dict(self):
        return {"variant": "factorable", "lambda": self.lam.to_dict(), "g": self.g.to_dict()}


@dataclass(frozen=True, eq=False)
class CallableBifunction(Bifunction):
    """Wraps a Python callable ``fn(x, z)`` (1-D inputs); Python-only, not serializable."""

    fn: Callable
    dim_x: int
    dim_y: int
    label: str = "callable"
    has_analytic_b_derivative: bool = field(default=False, init=False)

    def __call__(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], z.shape[:-1])
        X = np.broadcast_to(x, shape + (self.dim_x,)).reshape(-1, self.dim_x)
        Zb = np.broadcast_to(z, shape + (self.dim_x,)).reshape(-1, self.dim_x)
        out = np.array([np.asarray(self.fn(a, b), dtype=float) for a, b in zip(X, Zb)])
        return out.reshape(shape + (self.dim_y,))

    def to_dict(self):
        raise TypeError("callable bifunctions cannot be serialized")


@dataclass(frozen=True, eq=False)
class Named(Bifunction):
    """A catalog entry: delegates to ``inner`` but keeps its name and parameters."""

    name: str
    inner: Bifunction
    params: dict = field(default_factory=dict)

    @property
    def dim_x(self):
        return self.inner.dim_x

    @property
    def dim_y(self):
        return self.inner.dim_y

    @property
    def has_analytic_b_derivative(self):
        return self.inner.has_analytic_b_derivative

    def __call__(self, x, z):
        return self.inner(x, z)

    def b_derivative(self, x0, Z, U):
        return self.inner.b_derivative(x0, Z, U)

    def smooth_at(self, x):
        return self.inner.smooth_at(x)

    def to_dict(self):
        return {"variant": "named", "name": self.name, **self.params}
