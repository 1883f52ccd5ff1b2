"""Real-variable model of the Heisenberg group R^n x R^n x R.

The product is

    (u, v, t) * (xi, eta, tau) = (u + xi, v + eta, t + tau + mu (u.eta - v.xi))

with inverse (-u, -v, -t).  ``mu = 0`` gives the abelian group R^{2n+1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


def _frozen_vector(x) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GroupPoint:
    u: np.ndarray
    v: np.ndarray
    t: float

    def __post_init__(self):
        u = _frozen_vector(self.u)
        v = _frozen_vector(self.v)
        if u.size == 0 or u.size != v.size:
            raise ContractError(f"u and v must have equal positive length, got {u.size} and {v.size}")
        t = float(self.t)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and np.isfinite(t)):
            raise ContractError("group point coordinates must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", t)

    @classmethod
    def from_flat(cls, x) -> "GroupPoint":
        """Build from a flat vector (u_1..u_n, v_1..v_n, t)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size < 3 or x.size % 2 == 0:
            raise ContractError(f"flat coordinates must have odd length 2n+1 >= 3, got {x.size}")
        n = (x.size - 1) // 2
        return cls(x[:n], x[n:2 * n], x[-1])

    @classmethod
    def identity(cls, n: int) -> "GroupPoint":
        return cls(np.zeros(n), np.zeros(n), 0.0)

    @property
    def n(self) -> int:
        return self.u.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.u, self.v, [self.t]])

    def __eq__(self, other):
        if not isinstance(other, GroupPoint):
            return NotImplemented
        return np.array_equal(self.as_array(), other.as_array())

    def __hash__(self):
        return hash(tuple(self.as_array()))

    def __repr__(self):
        return f"GroupPoint(u={self.u.tolist()}, v={self.v.tolist()}, t={self.t})"


@dataclass(frozen=True)
class GroupParams:
    n: int = 1
    mu: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ContractError(f"n must be a positive integer, got {self.n}")
        if not np.isfinite(self.mu):
            raise ContractError("mu must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def dim(self) -> int:
        return 2 * self.n + 1


def _check_dim(p: GroupPoint, params: GroupParams):
    if p.n != params.n:
        raise ContractError(f"point has n={p.n} but params.n={params.n}")


def multiply(p: GroupPoint, q: GroupPoint, params: GroupParams) -> GroupPoint:
    _check_dim(p, params)
    _check_dim(q, params)
    twist = params.mu * (np.dot(p.u, q.v) - np.dot(p.v, q.u))
    return GroupPoint(p.u + q.u, p.v + q.v, p.t + q.t + twist)


def inverse(p: GroupPoint) -> GroupPoint:
    return GroupPoint(-p.u, -p.v, -p.t)


def _positive(**scales):
    for name, x in scales.items():
        if not (np.isfinite(x) and x > 0):
            raise ContractError(f"{name} must be a positive finite real, got {x}")


def zygmund_dilate(p: GroupPoint, r: float, s: float) -> GroupPoint:
    """(u, v, t) -> (r u, s v, r s t); an automorphism of the group for every mu."""
    _positive(r=r, s=s)
    return GroupPoint(r * p.u, s * p.v, r * s * p.t)


def aniso_dilate(p: GroupPoint, r: float, s: float, lam: float) -> GroupPoint:
    """(u, v, t) -> (r u, s v, r s lam t).  Not an automorphism unless lam == 1 or mu == 0."""
    _positive(r=r, s=s, lam=lam)
    return GroupPoint(r * p.u, s * p.v, r * s * lam * p.t)


def multiply_arrays(p: np.ndarray, q: np.ndarray, mu: float) -> np.ndarray:
    """Vectorised product on stacked flat coordinates of shape (..., 2n+1)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1] or p.shape[-1] % 2 == 0:
        raise ContractError("flat coordinate arrays must share an odd last dimension 2n+1")
    n = (p.shape[-1] - 1) // 2
    pu, pv, pt = p[..., :n], p[..., n:2 * n], p[..., -1]
    qu, qv, qt = q[..., :n], q[..., n:2 * n], q[..., -1]
    twist = mu * (np.sum(pu * qv, axis=-1) - np.sum(pv * qu, axis=-1))
    return np.concatenate([pu + qu, pv + qv, (pt + qt + twist)[..., None]], axis=-1)
