"""Exact geometry of axis-parallel rectangle families and greedy cover selection.

Volumes of unions and L^p norms of indicator sums are computed exactly by
coordinate compression: the endpoints of all rectangles cut space into cells
on which every indicator is constant.

Selection: sort by t-side length (nonincreasing, stable), keep the first
rectangle, then keep R iff the part of R covered by the t-tripled copies of
the previously kept rectangles has volume < vol(R) / 2.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError

DEFAULT_PS = (1.5, 2.0, 3.0)


@dataclass(frozen=True, eq=False)
class Rect:
    """Axis-parallel rectangle with per-axis half-lengths; the last axis is t."""

    center: np.ndarray
    half_lengths: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        h = np.array(self.half_lengths, dtype=float).reshape(-1)
        if c.size == 0 or c.shape != h.shape:
            raise ContractError("center and half_lengths must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(h))):
            raise ContractError("rectangle extents must be finite")
        if np.any(h <= 0):
            raise ContractError(f"half-lengths must be positive, got {h}")
        c.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_lengths", h)

    @classmethod
    def from_bounds(cls, lower, upper) -> "Rect":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        return cls((lo + hi) / 2, (hi - lo) / 2)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_lengths

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_lengths

    @property
    def volume(self) -> float:
        return float(np.prod(2 * self.half_lengths))

    @property
    def t_interval(self) -> tuple[float, float]:
        return float(self.lower[-1]), float(self.upper[-1])

    def intersects(self, other: "Rect") -> bool:
        """Positive-volume intersection."""
        return bool(np.all(np.minimum(self.upper, other.upper) > np.maximum(self.lower, other.lower)))

    def __eq__(self, other):
        return (isinstance(other, Rect) and np.array_equal(self.center, other.center)
                and np.array_equal(self.half_lengths, other.half_lengths))

    def __hash__(self):
        return hash((tuple(self.center), tuple(self.half_lengths)))

    def __repr__(self):
        return f"Rect(center={self.center.tolist()}, half_lengths={self.half_lengths.tolist()})"


def triple_t(r: Rect) -> Rect:
    """Same centre, t half-length times 3, other half-lengths unchanged."""
    h = r.half_lengths.copy()
    h[-1] *= 3.0
    return Rect(r.center, h)


@dataclass(frozen=True, eq=False)
class RectFamily:
    rects: tuple

    def __post_init__(self):
        rects = tuple(self.rects)
        if not rects:
            raise ContractError("a rectangle family must be nonempty")
        d = rects[0].dim
        if any(r.dim != d for r in rects):
            raise ContractError("all rectangles in a family must share a dimension")
        object.__setattr__(self, "rects", rects)

    def __len__(self):
        return len(self.rects)

    def __iter__(self):
        return iter(self.rects)

    def __getitem__(self, i):
        return self.rects[i]

    @property
    def dim(self) -> int:
        return self.rects[0].dim

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([r.lower for r in self.rects]), np.array([r.upper for r in self.rects]))


def _as_bounds(rects) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(rects, RectFamily):
        return rects.bounds()
    rects = list(rects)
    if not rects:
        return np.zeros((0, 0)), np.zeros((0, 0))
    return np.array([r.lower for r in rects]), np.array([r.upper for r in rects])


def _coverage_counts(lo: np.ndarray, hi: np.ndarray):
    """Per-cell indicator counts on the compressed grid, and per-axis cell widths."""
    d = lo.shape[1]
    edges = [np.unique(np.concatenate([lo[:, a], hi[:, a]])) for a in range(d)]
    counts = np.zeros(tuple(len(e) - 1 for e in edges), dtype=np.int64)
    for r in range(lo.shape[0]):
        sl = tuple(slice(np.searchsorted(edges[a], lo[r, a]), np.searchsorted(edges[a], hi[r, a]))
                   for a in range(d))
        counts[sl] += 1
    return counts, [np.diff(e) for e in edges]


def _integrate_cells(values: np.ndarray, widths: Sequence[np.ndarray]) -> float:
    out = values.astype(float)
    for w in reversed(widths):
        out = out @ w
    return float(out)


def union_volume(rects) -> float:
    """Exact volume of a union of rectangles."""
    lo, hi = _as_bounds(rects)
    if lo.shape[0] == 0:
        return 0.0
    counts, widths = _coverage_counts(lo, hi)
    return _integrate_cells(counts > 0, widths)


def indicator_lp(rects, p: float) -> float:
    """Exact integral of (sum of indicators)^p."""
    if not p > 1:
        raise ContractError(f"p must exceed 1, got {p}")
    lo, hi = _as_bounds(rects)
    if lo.shape[0] == 0:
        return 0.0
    counts, widths = _coverage_counts(lo, hi)
    return _integrate_cells(counts.astype(float) ** p, widths)


def covered_volume(r: Rect, cover: Iterable[Rect]) -> float:
    """vol(r intersected with the union of ``cover``), clipping before compression."""
    lo, hi = [], []
    for c in cover:
        a = np.maximum(r.lower, c.lower)
        b = np.minimum(r.upper, c.upper)
        if np.all(b > a):
            lo.append(a)
            hi.append(b)
    if not lo:
        return 0.0
    return union_volume(list(map(Rect.from_bounds, lo, hi)))


def t_order(family: RectFamily) -> np.ndarray:
    """Original indices sorted by t-side length, nonincreasing, ties in input order."""
    t_half = np.array([r.half_lengths[-1] for r in family])
    return np.argsort(-t_half, kind="stable")


@dataclass(frozen=True)
class CoverReport:
    order: tuple                  # original index at each sorted position
    selected_sorted: tuple        # sorted positions of the kept rectangles, increasing
    covered: tuple                # covered volume tested at each sorted position
    volumes: tuple                # volume of each rectangle, by sorted position
    union_all: float
    union_selected: float
    indicator_pp: dict = field(default_factory=dict)

    @property
    def selected(self) -> tuple:
        """Original indices of the kept rectangles, in selection order."""
        return tuple(self.order[j] for j in self.selected_sorted)

    @property
    def comparability_ratio(self) -> float:
        return self.union_all / self.union_selected

    @property
    def indicator_ratios(self) -> dict:
        return {p: v / self.union_selected for p, v in self.indicator_pp.items()}


def select_cover(family: RectFamily, ps: Sequence[float] = DEFAULT_PS) -> CoverReport:
    order = t_order(family)
    rects = [family[i] for i in order]
    stars: list[Rect] = []
    selected: list[int] = []
    covered, vols = [], []
    for j, r in enumerate(rects):
        hits = [s for s in stars if s.intersects(r)]
        cv = covered_volume(r, hits)
        covered.append(cv)
        vols.append(r.volume)
        if j == 0 or cv < 0.5 * r.volume:
            selected.append(j)
            stars.append(triple_t(r))
    chosen = [rects[j] for j in selected]
    return CoverReport(
        order=tuple(int(i) for i in order),
        selected_sorted=tuple(selected),
        covered=tuple(covered),
        volumes=tuple(vols),
        union_all=union_volume(family),
        union_selected=union_volume(chosen),
        indicator_pp={float(p): indicator_lp(chosen, p) for p in ps},
    )


# -- certificates for rejected rectangles ---------------------------------------

@dataclass(frozen=True)
class RejectionCertificate:
    position: int            # sorted position of the rejected rectangle
    minimal_m: int           # fewest leading kept rectangles whose stars cover half of it, 0 if none
    available_m: int         # kept rectangles preceding it
    half_covered: bool
    t_projection_covered: bool


def _intervals_cover(target: tuple[float, float], intervals: Sequence[tuple[float, float]]) -> bool:
    lo, hi = target
    reach = lo
    for a, b in sorted(intervals):
        if a > reach:
            break
        reach = max(reach, b)
        if reach >= hi:
            return True
    return reach >= hi


def rejection_certificates(family: RectFamily, report: CoverReport) -> list[RejectionCertificate]:
    """For every rejected rectangle find the smallest M with half of it covered.

    The t-projection check uses all kept rectangles before it (the largest
    admissible M), restricted to stars meeting it.
    """
    rects = [family[i] for i in report.order]
    kept = list(report.selected_sorted)
    certs = []
    for j, r in enumerate(rects):
        if j in kept:
            continue
        before = [triple_t(rects[k]) for k in kept if k < j]
        minimal = 0
        for m in range(1, len(before) + 1):
            hits = [s for s in before[:m] if s.intersects(r)]
            if covered_volume(r, hits) >= 0.5 * r.volume:
                minimal = m
                break
        hits = [s for s in before if s.intersects(r)]
        certs.append(RejectionCertificate(
            position=j,
            minimal_m=minimal,
            available_m=len(before),
            half_covered=minimal > 0,
            t_projection_covered=_intervals_cover(r.t_interval, [s.t_interval for s in hits]),
        ))
    return certs


# -- random families and CSV I/O -----------------------------------------------------

def random_family(rng: np.random.Generator, count: int, dim: int = 3, extent: float = 10.0,
                  half_range: tuple[float, float] = (0.2, 3.0)) -> RectFamily:
    """Centres uniform in [0, extent]^dim, half-lengths log-uniform in ``half_range``."""
    if count < 1:
        raise ContractError("count must be positive")
    centers = rng.uniform(0.0, extent, size=(count, dim))
    lo, hi = np.log(half_range[0]), np.log(half_range[1])
    halves = np.exp(rng.uniform(lo, hi, size=(count, dim)))
    return RectFamily(tuple(Rect(c, h) for c, h in zip(centers, halves)))


FAMILY_HEADER_PREFIX = "c"


def family_to_csv(family: RectFamily) -> str:
    d = family.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"c{a}" for a in range(d)] + [f"h{a}" for a in range(d)])
    for r in family:
        w.writerow([repr(float(x)) for x in r.center] + [repr(float(x)) for x in r.half_lengths])
    return buf.getvalue()


def family_from_csv(text: str) -> RectFamily:
    rows = [row for row in csv.reader(io.StringIO(text)) if row and not row[0].startswith("#")]
    if not rows:
        raise ContractError("empty rectangle family file")
    header, body = rows[0], rows[1:]
    if len(header) % 2 or not header[0].startswith(FAMILY_HEADER_PREFIX):
        raise ContractError(f"malformed family header {header}")
    d = len(header) // 2
    rects = []
    for row in body:
        if len(row) != 2 * d:
            raise ContractError(f"family row has {len(row)} fields, expected {2 * d}")
        vals = [float(x) for x in row]
        rects.append(Rect(vals[:d], vals[d:]))
    return RectFamily(tuple(rects))


def report_rows(report: CoverReport) -> list[list]:
    """One row per sorted position: original index, volume, covered volume, kept flag."""
    kept = set(report.selected_sorted)
    return [[j, report.order[j], report.volumes[j], report.covered[j], int(j in kept)]
            for j in range(len(report.order))]
