"""Cell-centred sampled fields on axis-aligned boxes, discrete L^p norms and file I/O.

Axis order for Heisenberg fields is (u_1..u_n, v_1..v_n, t).  With an
origin-symmetric box and even resolution no cell centre lies on a coordinate
plane, so singular kernels can be sampled directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, SamplingError

DEFAULT_RESOLUTION = 64


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ContractError("box bounds must be nonempty vectors of equal length")
        if not np.all(lo < hi):
            raise ContractError(f"box needs lower < upper on every axis, got {lo} / {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, half_widths: Sequence[float] | float, dim: int | None = None) -> "Box":
        h = np.atleast_1d(np.asarray(half_widths, dtype=float))
        if dim is not None and h.size == 1:
            h = np.full(dim, h[0])
        return cls(-h, h)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def scaled(self, factors) -> "Box":
        f = np.broadcast_to(np.asarray(factors, dtype=float), self.lower.shape)
        return Box(self.lower * f, self.upper * f)

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


def _as_resolution(resolution, dim: int) -> tuple[int, ...]:
    res = np.atleast_1d(np.asarray(resolution))
    if res.size == 1:
        res = np.full(dim, res[0])
    if res.size != dim or np.any(res < 1) or np.any(res != np.round(res)):
        raise ContractError(f"resolution must be {dim} positive integers, got {resolution}")
    return tuple(int(r) for r in res)


@dataclass(frozen=True, eq=False)
class GridField:
    box: Box
    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != self.box.dim:
            raise ContractError(f"samples have {s.ndim} axes but box has {self.box.dim}")
        if not np.all(np.isfinite(s)):
            raise SamplingError("grid samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.samples.shape

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def n(self) -> int:
        """Heisenberg sub-dimension implied by the axis count 2n+1."""
        if self.dim % 2 == 0:
            raise ContractError(f"a {self.dim}-axis field is not a Heisenberg field")
        return (self.dim - 1) // 2

    @property
    def spacing(self) -> np.ndarray:
        return self.box.widths / np.asarray(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return self.box.lower[axis] + (np.arange(self.resolution[axis]) + 0.5) * h

    def mesh(self, sparse: bool = True) -> list[np.ndarray]:
        return np.meshgrid(*[self.centers(i) for i in range(self.dim)], indexing="ij", sparse=sparse)

    def with_samples(self, samples) -> "GridField":
        return GridField(self.box, samples)

    def __add__(self, other: "GridField") -> "GridField":
        _check_same_grid(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "GridField") -> "GridField":
        _check_same_grid(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c: float) -> "GridField":
        return self.with_samples(self.samples * float(c))

    __rmul__ = __mul__

    def __abs__(self) -> "GridField":
        return self.with_samples(np.abs(self.samples))

    def nearest_index(self, point) -> tuple[int, ...]:
        x = np.asarray(point, dtype=float).reshape(-1)
        idx = np.floor((x - self.box.lower) / self.spacing).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.resolution)):
            raise ContractError(f"point {x} lies outside {self.box!r}")
        return tuple(int(i) for i in idx)

    def center_of(self, index) -> np.ndarray:
        return self.box.lower + (np.asarray(index, dtype=float) + 0.5) * self.spacing


def _check_same_grid(a: GridField, b: GridField):
    if a.box != b.box or a.resolution != b.resolution:
        raise ContractError("fields live on different grids")


def sample(box: Box, resolution, f: Callable[..., np.ndarray]) -> GridField:
    """Sample ``f(x_0, ..., x_{d-1})`` (broadcasting coordinate arrays) at cell centres."""
    res = _as_resolution(resolution, box.dim)
    h = box.widths / np.asarray(res)
    axes = [box.lower[i] + (np.arange(res[i]) + 0.5) * h[i] for i in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(f(*mesh), dtype=float), res)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        centre = [float(axes[i][idx[i]]) for i in range(box.dim)]
        raise SamplingError(f"non-finite sample {values[idx]} at cell {idx} (centre {centre})")
    return GridField(box, np.array(values))


def lp_norm(g: GridField, p: float) -> float:
    """(sum |g|^p * cell_volume)^(1/p); p = inf gives the max norm."""
    if p == np.inf:
        return float(np.max(np.abs(g.samples))) if g.samples.size else 0.0
    if not p >= 1:
        raise ContractError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(g.samples)
    m = float(a.max()) if a.size else 0.0
    if m == 0.0:
        return 0.0
    return m * float(np.sum((a / m) ** p) * g.cell_volume) ** (1.0 / p)


@dataclass(frozen=True)
class LpPair:
    p: float
    q: float

    def __post_init__(self):
        if not (1 < self.p < np.inf and 1 < self.q < np.inf):
            raise ContractError(f"exponents must lie in (1, inf), got p={self.p}, q={self.q}")
        if self.p > self.q:
            raise ContractError(f"need p <= q, got p={self.p}, q={self.q}")

    @property
    def gap(self) -> float:
        """1/p - 1/q."""
        return 1.0 / self.p - 1.0 / self.q


# -- test functions and dilation ----------------------------------------------

def dilate_field(f: Callable[..., np.ndarray], r: float, s: float, lam: float, n: int = 1):
    """Return (xi, eta, tau) -> f(xi / r, eta / s, tau / (r s lam)) on 2n+1 coordinate arrays."""
    for name, x in (("r", r), ("s", s), ("lam", lam)):
        if not (np.isfinite(x) and x > 0):
            raise ContractError(f"{name} must be positive, got {x}")
    factors = [r] * n + [s] * n + [r * s * lam]

    def dilated(*coords):
        if len(coords) != 2 * n + 1:
            raise ContractError(f"expected {2 * n + 1} coordinates, got {len(coords)}")
        return f(*(c / a for c, a in zip(coords, factors)))

    return dilated


def scale_function(f: Callable[..., np.ndarray], factors: Sequence[float]):
    """x -> f(x_0 / c_0, ..., x_{d-1} / c_{d-1})."""
    factors = [float(c) for c in factors]

    def scaled(*coords):
        return f(*(x / c for x, c in zip(coords, factors)))

    return scaled


def gaussian(sigma: Sequence[float] | float = 1.0, dim: int = 3):
    """Tensor Gaussian exp(-sum (x_i / sigma_i)^2)."""
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (dim,)).copy()

    def g(*coords):
        acc = 0.0
        for x, sg in zip(coords, sig):
            acc = acc + (x / sg) ** 2
        return np.exp(-acc)

    g.sigma = sig
    return g


def box_indicator(lower: Sequence[float], upper: Sequence[float]):
    lower = [float(a) for a in lower]
    upper = [float(b) for b in upper]

    def chi(*coords):
        out = 1.0
        for x, a, b in zip(coords, lower, upper):
            out = out * ((x >= a) & (x <= b))
        return np.asarray(out, dtype=float)

    return chi


def cube_indicator(half: float, dim: int = 3):
    return box_indicator([-half] * dim, [half] * dim)


# -- file formats ---------------------------------------------------------------
# CSV:    '#'-prefixed "key = value" header lines, then "x0,...,x{d-1},value" rows.
# Binary: one JSON header line, then little-endian float64 samples in C order.

_MAGIC = "heisfrac-gridfield"


def _header(g: GridField, n: int | None, mu: float | None) -> dict:
    return {
        "format": _MAGIC,
        "version": 1,
        "n": n if n is not None else (g.n if g.dim % 2 else None),
        "mu": mu,
        "box_lower": g.box.lower.tolist(),
        "box_upper": g.box.upper.tolist(),
        "resolution": list(g.resolution),
    }


def write_csv(g: GridField, path, n: int | None = None, mu: float | None = None, tag: str | None = None):
    """Write a field as CSV; ``tag`` adds a ``verifies`` header naming what the values check."""
    header = _header(g, n, mu)
    coords = np.stack([m.ravel() for m in g.mesh(sparse=False)], axis=1)
    with open(path, "w", newline="") as fh:
        if tag is not None:
            fh.write(f"# verifies = {json.dumps(tag)}\n")
        for key in ("format", "version", "n", "mu", "box_lower", "box_upper", "resolution"):
            fh.write(f"# {key} = {json.dumps(header[key])}\n")
        fh.write(",".join([f"x{i}" for i in range(g.dim)] + ["value"]) + "\n")
        for row, value in zip(coords, g.samples.ravel()):
            fh.write(",".join(repr(float(c)) for c in row) + "," + repr(float(value)) + "\n")


def _read_csv_header(lines) -> dict:
    meta = {}
    for line in lines:
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition("=")
        meta[key.strip()] = json.loads(value.strip())
    return meta


def read_csv(path) -> tuple[GridField, dict]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta = _read_csv_header(lines)
    if meta.get("format") != _MAGIC:
        raise ContractError(f"{path} is not a grid-field CSV")
    body = [ln for ln in lines if ln and not ln.startswith("#")][1:]
    values = np.array([float(ln.rsplit(",", 1)[1]) for ln in body])
    res = tuple(meta["resolution"])
    if values.size != int(np.prod(res)):
        raise ContractError(f"{path}: expected {np.prod(res)} rows, found {values.size}")
    box = Box(meta["box_lower"], meta["box_upper"])
    return GridField(box, values.reshape(res)), meta


def write_binary(g: GridField, path, n: int | None = None, mu: float | None = None):
    header = json.dumps(_header(g, n, mu), sort_keys=True)
    with open(path, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(np.ascontiguousarray(g.samples, dtype="<f8").tobytes())


def read_binary(path) -> tuple[GridField, dict]:
    with open(path, "rb") as fh:
        meta = json.loads(fh.readline().decode())
        if meta.get("format") != _MAGIC:
            raise ContractError(f"{path} is not a grid-field binary file")
        res = tuple(meta["resolution"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != int(np.prod(res)):
        raise ContractError(f"{path}: expected {np.prod(res)} samples, found {data.size}")
    return GridField(Box(meta["box_lower"], meta["box_upper"]), data.reshape(res)), meta


def read_field(path) -> tuple[GridField, dict]:
    with open(path, "rb") as fh:
        first = fh.read(1)
    return read_csv(path) if first == b"#" else read_binary(path)
