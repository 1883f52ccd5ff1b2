"""Dilation sweeps, bracket-exponent sharpness runs and the weak-type experiment.

A sweep dilates a fixed test function along one axis family, applies an
operator and records Phi(scale) = ||Op f_scale||_q / ||f_scale||_p.  If the
kernel scales like a power of the dilation, log Phi is linear in log scale
with a slope fixed by the kernel's homogeneity and the two Lebesgue
exponents.

By default each sweep point uses the base box dilated together with the
function (``mode="covariant"``), so every point is resolved equally well and a
fitted slope measures the operator rather than the quadrature.  ``"fixed"``
keeps one box for all points and raises :class:`SupportError` when a dilate
leaks out of it.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, SupportError
from .grid import Box, GridField, LpPair, gaussian, lp_norm, sample, scale_function
from .group import GroupParams
from .kernels import FSParams, KernelParams, RieszParams
from .maximal import RectLadder, level_set_measure, strong_frac_maximal
from .operators import (
    DEFAULT_SINGULAR_RULE,
    folland_stein_apply,
    frac_integral_apply,
    riesz_apply,
    separable_majorant_apply,
)

OPERATOR_KINDS = ("zygmund", "majorant", "folland_stein", "riesz")
AXES = ("r", "s", "lambda", "iso")
SUPPORT_TOL = 1e-9
DEFAULT_BASE_HALF_WIDTH = 5.0


@dataclass(frozen=True)
class OperatorChoice:
    """An operator together with its parameters, dispatching to the operators module."""

    kind: str
    params: object
    group: GroupParams | None = None
    rule: str = DEFAULT_SINGULAR_RULE

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise ContractError(f"unknown operator {self.kind!r}; choose from {OPERATOR_KINDS}")
        expected = {"zygmund": KernelParams, "majorant": KernelParams,
                    "folland_stein": FSParams, "riesz": RieszParams}[self.kind]
        if not isinstance(self.params, expected):
            raise ContractError(f"{self.kind} needs {expected.__name__}, got {type(self.params).__name__}")
        if self.kind != "riesz":
            group = self.group if self.group is not None else GroupParams(self.params.n, 0.0)
            if group.n != self.params.n:
                raise ContractError(f"group n={group.n} differs from kernel n={self.params.n}")
            object.__setattr__(self, "group", group)

    @property
    def dim(self) -> int:
        return self.params.N if self.kind == "riesz" else self.group.dim

    def apply(self, f: GridField) -> GridField:
        if self.kind == "zygmund":
            return frac_integral_apply(f, self.params, self.group, self.rule)
        if self.kind == "majorant":
            return separable_majorant_apply(f, self.params, self.group, self.rule)
        if self.kind == "folland_stein":
            return folland_stein_apply(f, self.params, self.group, self.rule)
        return riesz_apply(f, self.params, self.rule)

    def scale_factors(self, axis: str, scale: float) -> np.ndarray:
        """Per-axis factors of the dilation selected by ``axis``."""
        if axis not in AXES:
            raise ContractError(f"unknown sweep axis {axis!r}; choose from {AXES}")
        if not (np.isfinite(scale) and scale > 0):
            raise ContractError(f"scales must be positive, got {scale}")
        if self.kind == "riesz":
            if axis != "r":
                raise ContractError("Riesz sweeps only support the isotropic r axis")
            return np.full(self.dim, scale)
        n = self.group.n
        one = np.ones(n)
        if axis == "r":
            return np.concatenate([scale * one, one, [scale]])
        if axis == "s":
            return np.concatenate([one, scale * one, [scale]])
        if axis == "lambda":
            return np.concatenate([one, one, [scale]])
        return np.concatenate([scale * one, scale * one, [scale * scale]])

    def predicted_slope(self, axis: str, lp: LpPair) -> float | None:
        """Slope of log Phi against log scale implied by exact homogeneity, if any."""
        p, q = lp.p, lp.q
        if self.kind == "riesz":
            N = self.params.N
            return self.params.a + N / q - N / p if axis == "r" else None
        if self.kind == "folland_stein":
            n = self.params.n
            return 2 * self.params.delta + (2 * n + 2) * (1 / q - 1 / p) if axis == "iso" else None
        k = self.params
        n = k.n
        if axis in ("r", "s"):
            return (k.alpha + k.beta) + (n + 1) / q - (n + 1) / p
        if axis == "lambda":
            if self.kind == "majorant":
                return k.gamma + 1 / q - 1 / p
            # the bracket only drops out when its exponent vanishes
            return k.beta + 1 / q - 1 / p if k.theta == 0 else None
        return None


@dataclass(frozen=True)
class SweepReport:
    axis: str
    scales: tuple
    op_norms: tuple
    f_norms: tuple
    ratios: tuple
    slope: float
    intercept: float
    predicted: float | None
    residual: float

    def __post_init__(self):
        if len(self.scales) < 3:
            raise ContractError("a sweep needs at least 3 points")
        if not all(r > 0 for r in self.ratios):
            raise ContractError("norm ratios must be positive")

    @property
    def slope_error(self) -> float | None:
        return None if self.predicted is None else abs(self.slope - self.predicted)

    def one_sided_slope(self, count: int, end: str) -> float:
        """Slope fitted to the first (``end="small"``) or last ``count`` sweep points."""
        sl = slice(0, count) if end == "small" else slice(len(self.scales) - count, None)
        x = np.log(np.asarray(self.scales)[sl])
        y = np.log(np.asarray(self.ratios)[sl])
        return float(np.polyfit(x, y, 1)[0])

    def rows(self) -> list[list[float]]:
        return [[s, a, b, r, float(np.log(r))]
                for s, a, b, r in zip(self.scales, self.op_norms, self.f_norms, self.ratios)]


def fit_loglog(scales, ratios) -> tuple[float, float, float]:
    """Least-squares slope, intercept and max deviation in log units."""
    x = np.log(np.asarray(scales, dtype=float))
    y = np.log(np.asarray(ratios, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), float(np.max(np.abs(y - (slope * x + intercept))))


def check_support(g: GridField, tol: float = SUPPORT_TOL) -> None:
    """Raise SupportError when the sampled function is not negligible on the box faces."""
    a = np.abs(g.samples)
    peak = float(a.max())
    if peak == 0:
        return
    for axis in range(g.dim):
        for face in (0, -1):
            edge = float(np.take(a, face, axis=axis).max())
            if edge > tol * peak:
                raise SupportError(f"test function reaches {edge / peak:.3g} of its peak on face "
                                   f"{'lower' if face == 0 else 'upper'} of axis {axis}; enlarge the box")


def homogeneity_slope(
    op: OperatorChoice,
    f: Callable[..., np.ndarray] | None,
    lp: LpPair,
    axis: str,
    scales: Sequence[float],
    box: Box | None = None,
    resolution=None,
    mode: str = "covariant",
) -> SweepReport:
    """Fit log Phi(scale) against log scale for a dilation family of ``f``."""
    if mode not in ("covariant", "fixed"):
        raise ContractError(f"mode must be 'covariant' or 'fixed', got {mode!r}")
    scales = np.asarray(sorted(float(s) for s in scales))
    if scales.size < 3:
        raise ContractError("a sweep needs at least 3 points")
    dim = op.dim
    if f is None:
        f = gaussian(1.0, dim)
    if box is None:
        box = Box.symmetric(DEFAULT_BASE_HALF_WIDTH, dim)
    if resolution is None:
        resolution = 512 if dim == 1 else 24
    op_norms, f_norms = [], []
    for sc in scales:
        factors = op.scale_factors(axis, sc)
        fs = scale_function(f, factors)
        b = box.scaled(factors) if mode == "covariant" else box
        field = sample(b, resolution, fs)
        check_support(field)
        out = op.apply(field)
        op_norms.append(lp_norm(out, lp.q))
        f_norms.append(lp_norm(field, lp.p))
    ratios = np.array(op_norms) / np.array(f_norms)
    slope, intercept, residual = fit_loglog(scales, ratios)
    return SweepReport(axis, tuple(float(s) for s in scales), tuple(op_norms), tuple(f_norms),
                       tuple(float(r) for r in ratios), slope, intercept, op.predicted_slope(axis, lp), residual)


# -- bracket exponent sharpness -------------------------------------------------

@dataclass(frozen=True)
class NecessityVerdict:
    """Arithmetic necessary conditions for L^p -> L^q boundedness."""

    homogeneity: bool        # (alpha + beta)/(n+1) = 1/p - 1/q
    small_lambda: bool       # beta + theta >= 1/p - 1/q
    large_lambda: bool       # beta - theta <= 1/p - 1/q
    theta_sharp: bool        # theta >= |alpha - n beta|/(n+1)

    @property
    def all_ok(self) -> bool:
        return self.homogeneity and self.small_lambda and self.large_lambda and self.theta_sharp


def constraint_check(alpha: float, beta: float, theta: float, p: float, q: float, n: int = 1,
                     tol: float = 1e-12) -> NecessityVerdict:
    gap = 1 / p - 1 / q
    k = KernelParams(alpha, beta, n, theta)
    return NecessityVerdict(
        homogeneity=abs(k.gamma - gap) <= tol,
        small_lambda=beta + theta >= gap - tol,
        large_lambda=beta - theta <= gap + tol,
        theta_sharp=theta >= k.rho - tol,
    )


@dataclass(frozen=True)
class SharpnessResult:
    theta: float
    report: SweepReport
    slope_small: float       # fitted as lambda -> 0
    slope_large: float       # fitted as lambda -> infinity
    band: tuple              # (beta - theta - gap, beta + theta - gap)
    tol: float

    @property
    def band_ok(self) -> bool:
        lo, hi = self.band
        return all(lo - self.tol <= s <= hi + self.tol for s in (self.slope_small, self.slope_large))

    @property
    def violation(self) -> float:
        """How far Phi grows at either end: max(-slope_small, slope_large, 0)."""
        return max(-self.slope_small, self.slope_large, 0.0)

    @property
    def admissible(self) -> bool:
        """Phi stays bounded at both ends, up to the tolerance."""
        return self.violation <= self.tol


def default_lambdas(lo: float = -7.0, hi: float = 4.0, count: int = 23) -> np.ndarray:
    """Half-decade grid; the small end needs extra decades because s_0 converges slowly."""
    return np.logspace(lo, hi, count)


def theta_sharpness(
    alpha: float,
    beta: float,
    n: int,
    lp: LpPair,
    thetas: Sequence[float],
    lambdas: Sequence[float] | None = None,
    end_points: int = 5,
    resolution=24,
    box: Box | None = None,
    f: Callable[..., np.ndarray] | None = None,
    mu: float = 0.0,
    tol: float = 0.05,
) -> list[SharpnessResult]:
    """lambda-sweeps of the Zygmund-kernel operator for several bracket exponents.

    Requires (alpha + beta)/(n+1) = 1/p - 1/q, so the r and s dilations are
    neutral and the t-dilation isolates the bracket.
    """
    gap = lp.gap
    if abs((alpha + beta) / (n + 1) - gap) > 1e-12:
        raise ContractError(f"need (alpha+beta)/(n+1) = 1/p - 1/q = {gap}, got {(alpha + beta) / (n + 1)}")
    lambdas = default_lambdas() if lambdas is None else np.asarray(lambdas, dtype=float)
    if len(lambdas) < 2 * end_points:
        raise ContractError("need at least two one-sided fits' worth of lambda values")
    results = []
    for theta in thetas:
        op = OperatorChoice("zygmund", KernelParams(alpha, beta, n, theta), GroupParams(n, mu))
        rep = homogeneity_slope(op, f, lp, "lambda", lambdas, box=box, resolution=resolution)
        results.append(SharpnessResult(
            theta=float(theta), report=rep,
            slope_small=rep.one_sided_slope(end_points, "small"),
            slope_large=rep.one_sided_slope(end_points, "large"),
            band=(beta - theta - gap, beta + theta - gap), tol=tol))
    return results


# -- weak type ---------------------------------------------------------------------

@dataclass(frozen=True)
class WeakTypeResult:
    lambdas: tuple
    measures: tuple
    column: tuple            # lambda * measure^{1/q} / ||f||_p
    truncated: tuple         # superlevel set reaches the box boundary
    f_norm: float
    sup: float

    @property
    def bound(self) -> float:
        return max(self.column)

    def rows(self) -> list[list[float]]:
        return [[l, m, c, int(t)] for l, m, c, t in zip(self.lambdas, self.measures, self.column, self.truncated)]


def weak_type_experiment(f: GridField, gamma: float, lp: LpPair, lambdas: Sequence[float],
                         params: GroupParams, ladder: RectLadder | None = None) -> WeakTypeResult:
    """Tabulate lambda |{M_gamma f > lambda}|^{1/q} / ||f||_p over a level grid."""
    if abs(gamma - lp.gap) > 1e-12:
        raise ContractError(f"need gamma = 1/p - 1/q = {lp.gap}, got {gamma}")
    ladder = RectLadder.spanning(f) if ladder is None else ladder
    m = strong_frac_maximal(f, gamma, params, ladder)
    norm = lp_norm(f, lp.p)
    if norm == 0:
        raise ContractError("weak-type column is undefined for f = 0")
    measures, column, truncated = [], [], []
    for lam in lambdas:
        meas = level_set_measure(m, float(lam))
        measures.append(meas)
        column.append(float(lam) * meas ** (1 / lp.q) / norm)
        above = m.samples > lam
        edge = any(np.take(above, face, axis=a).any() for a in range(m.dim) for face in (0, -1))
        truncated.append(bool(edge))
    return WeakTypeResult(tuple(float(l) for l in lambdas), tuple(measures), tuple(column), tuple(truncated),
                          float(norm), float(m.samples.max()))


def rows_to_csv(header_tag: str, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    """CSV with a leading '# verifies = "<tag>"' line and repr-formatted floats."""
    buf = io.StringIO()
    buf.write(f"# verifies = {json.dumps(header_tag)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()
