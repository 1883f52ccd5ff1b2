"""Closed-form kernels: Riesz, Folland-Stein, the Zygmund kernel and its separable majorant.

Scalar entry points take a :class:`GroupPoint` and raise :class:`SingularityError`
on the singular set.  The ``*_array`` functions work on precomputed block norms
``|u|, |v|, |t|`` and are what the grid operators use; they do no singularity
checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SingularityError
from .group import GroupPoint

# relative slack for the pointwise majorant comparison
BOUND_SLACK = 1e-12


def rho(alpha: float, beta: float, n: int) -> float:
    """Sharp bracket exponent |alpha - n beta| / (n + 1)."""
    return abs(alpha - n * beta) / (n + 1)


@dataclass(frozen=True)
class KernelParams:
    alpha: float
    beta: float
    n: int = 1
    theta: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ContractError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.theta is None:
            object.__setattr__(self, "theta", rho(self.alpha, self.beta, self.n))
        if self.theta < 0 or not np.isfinite(self.theta):
            raise ContractError(f"theta must be finite and nonnegative, got {self.theta}")

    @property
    def rho(self) -> float:
        return rho(self.alpha, self.beta, self.n)

    @property
    def gamma(self) -> float:
        """Homogeneity exponent (alpha + beta) / (n + 1)."""
        return (self.alpha + self.beta) / (self.n + 1)

    @property
    def is_sharp(self) -> bool:
        return abs(self.theta - self.rho) <= 1e-14 * max(1.0, self.rho)

    def with_theta(self, theta: float) -> "KernelParams":
        return KernelParams(self.alpha, self.beta, self.n, theta)


@dataclass(frozen=True)
class RieszParams:
    a: float
    N: int = 1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ContractError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not 0 < self.a < self.N:
            raise ContractError(f"Riesz order must satisfy 0 < a < N, got a={self.a}, N={self.N}")


@dataclass(frozen=True)
class FSParams:
    delta: float
    n: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ContractError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not 0 < self.delta < self.n + 1:
            raise ContractError(f"delta must satisfy 0 < delta < n+1, got {self.delta}")

    @property
    def exponent(self) -> float:
        return self.n + 1 - self.delta


def delta_to_alphabeta(delta: float, n: int) -> tuple[float, float]:
    """Map the isotropic order delta to the Zygmund pair (alpha, beta).

    The result satisfies alpha + beta = delta and alpha - n beta >= 0, with
    equality exactly when n = 1.
    """
    if not 0 < delta < n + 1:
        raise ContractError(f"delta must satisfy 0 < delta < n+1, got {delta}")
    return delta / 2 + (n - 1) / 2, delta / 2 - (n - 1) / 2


# -- vectorised evaluators ---------------------------------------------------

def _log_bracket_of_log(lx):
    lx = np.abs(lx)
    return lx + np.log1p(np.exp(-2.0 * lx))


def log_bracket(x):
    """log(x + 1/x) for x > 0, stable for very large and very small x."""
    return _log_bracket_of_log(np.log(x))


def bracket(x, theta: float):
    """(x + 1/x)^(-theta); invariant under x -> 1/x."""
    return np.exp(-theta * log_bracket(x))


def zygmund_kernel_array(unorm, vnorm, tabs, k: KernelParams):
    unorm = np.asarray(unorm, dtype=float)
    vnorm = np.asarray(vnorm, dtype=float)
    tabs = np.asarray(tabs, dtype=float)
    lu, lv, lt = np.log(unorm), np.log(vnorm), np.log(tabs)
    log_b = _log_bracket_of_log(lu + lv - lt)
    return np.exp((k.alpha - k.n) * (lu + lv) + (k.beta - 1.0) * lt - k.theta * log_b)


def separable_kernel_array(unorm, vnorm, tabs, k: KernelParams):
    g = k.gamma
    n = k.n
    return (np.asarray(unorm, dtype=float) ** (n * g - n)
            * np.asarray(vnorm, dtype=float) ** (n * g - n)
            * np.asarray(tabs, dtype=float) ** (g - 1.0))


def folland_stein_kernel_array(unorm, vnorm, tabs, fs: FSParams):
    base = np.asarray(unorm, dtype=float) ** 2 + np.asarray(vnorm, dtype=float) ** 2 + np.asarray(tabs, dtype=float)
    return base ** (-fs.exponent)


def riesz_kernel_array(xnorm, rp: RieszParams):
    return np.asarray(xnorm, dtype=float) ** (rp.a - rp.N)


# -- scalar evaluators on group points ----------------------------------------

def _norms(p: GroupPoint) -> tuple[float, float, float]:
    return float(np.linalg.norm(p.u)), float(np.linalg.norm(p.v)), abs(p.t)


def _check_n(p: GroupPoint, n: int):
    if p.n != n:
        raise ContractError(f"point has n={p.n} but kernel expects n={n}")


def eval_V(p: GroupPoint, k: KernelParams) -> float:
    _check_n(p, k.n)
    a, b, c = _norms(p)
    if a == 0 or b == 0 or c == 0:
        raise SingularityError(f"Zygmund kernel is singular at {p!r} (u=0, v=0 or t=0)")
    return float(zygmund_kernel_array(a, b, c, k))


def eval_separable(p: GroupPoint, k: KernelParams) -> float:
    _check_n(p, k.n)
    a, b, c = _norms(p)
    if a == 0 or b == 0 or c == 0:
        raise SingularityError(f"separable majorant is singular at {p!r}")
    return float(separable_kernel_array(a, b, c, k))


def eval_Omega(p: GroupPoint, fs: FSParams) -> float:
    _check_n(p, fs.n)
    a, b, c = _norms(p)
    if a == 0 and b == 0 and c == 0:
        raise SingularityError("Folland-Stein kernel is singular at the origin")
    return float(folland_stein_kernel_array(a, b, c, fs))


def eval_riesz(x, rp: RieszParams) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != rp.N:
        raise ContractError(f"point has dimension {x.size} but N={rp.N}")
    r = float(np.linalg.norm(x))
    if r == 0:
        raise SingularityError("Riesz kernel is singular at the origin")
    return float(riesz_kernel_array(r, rp))


def check_separable_bound(p: GroupPoint, k: KernelParams) -> bool:
    """Does V(p) <= |u|^{ng-n} |v|^{ng-n} |t|^{g-1} hold (g = (alpha+beta)/(n+1))?"""
    if not k.is_sharp:
        raise ContractError(f"separable bound requires theta = rho = {k.rho}, got {k.theta}")
    return eval_V(p, k) <= eval_separable(p, k) * (1.0 + BOUND_SLACK)


def delta_chain_terms(p: GroupPoint, fs: FSParams) -> tuple[float, float, float]:
    """Return (Omega, [|u||v|+|t|]^-e, [|u|^2|v|^2+t^2]^-e/2) with e = n+1-delta."""
    a, b, c = _norms(p)
    if a * b == 0 and c == 0:
        raise SingularityError(f"comparison kernels are singular at {p!r}")
    e = fs.exponent
    omega = eval_Omega(p, fs)
    mixed = (a * b + c) ** (-e)
    product = (a * a * b * b + c * c) ** (-e / 2)
    return omega, mixed, product


def check_delta_chain(p: GroupPoint, fs: FSParams) -> bool:
    """Omega <= mixed, and 2^{-e/2} <= mixed/product <= 2^{e/2}."""
    omega, mixed, product = delta_chain_terms(p, fs)
    e = fs.exponent
    ratio = mixed / product
    lo, hi = 2.0 ** (-e / 2), 2.0 ** (e / 2)
    slack = BOUND_SLACK
    return (omega <= mixed * (1 + slack)
            and lo * (1 - slack) <= ratio <= hi * (1 + slack))
