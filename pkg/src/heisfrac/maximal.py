"""Fractional maximal operators over rectangles on grids.

The strong operator takes, at each grid point x, the largest weighted integral

    vol(R)^{gamma-1} * integral of |f(x * y^{-1})| over y in R

over a ladder of origin-centred rectangles R.  In the variables of integration
this is an integral of |f| over the box x + R sheared in t by
``mu (u.eta - v.xi)``.  The Zygmund operator restricts R to Q1 x Q2 x Q3 with
Q1, Q2 cubes and vol(Q3) = vol(Q1)^{1/n} vol(Q2)^{1/n}.

``f`` is treated as piecewise constant on cells, so every rectangle integral is
exact: the cumulative table of |f| is interpolated multilinearly at the
rectangle corners.  For mu = 0 this is a plain summed-area table; for mu != 0
each (xi, eta) column is integrated along its own shifted t-window first and a
summed-area table in (xi, eta) finishes the job.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ContractError, GridTooLargeError
from .grid import GridField
from .group import GroupParams

DEFAULT_OFFSETS = (-0.5, 0.0, 0.5)
# brute force refuses beyond this many elementary operations
BRUTE_FORCE_BUDGET = 1e10
BRUTE_FORCE_MAX_AXIS = 16


def _cell_units(a: np.ndarray, h: float) -> np.ndarray:
    """Half-lengths in cell units, snapping values within 1e-9 of a half-integer."""
    x = np.asarray(a, dtype=float) / h
    snapped = np.round(2 * x) / 2
    close = np.abs(x - snapped) <= 1e-9 * np.maximum(1.0, x)
    return np.where(close, snapped, x)


@dataclass(frozen=True, eq=False)
class RectLadder:
    """Per-axis admissible half-lengths (physical units, strictly increasing)."""

    half_lengths: tuple

    def __post_init__(self):
        axes = []
        for a in self.half_lengths:
            a = np.array(a, dtype=float).reshape(-1)
            if a.size == 0 or np.any(~np.isfinite(a)) or np.any(a <= 0):
                raise ContractError("ladder half-lengths must be nonempty, finite and positive")
            if np.any(np.diff(a) <= 0):
                raise ContractError("ladder half-lengths must be strictly increasing")
            a.setflags(write=False)
            axes.append(a)
        object.__setattr__(self, "half_lengths", tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.half_lengths)

    @classmethod
    def geometric(cls, base, ratio: float = 2.0, count: int = 8, dim: int = 3) -> "RectLadder":
        """``base * ratio**k`` for k < count, per axis (``base`` scalar or per-axis)."""
        if not ratio > 1:
            raise ContractError(f"ladder ratio must exceed 1, got {ratio}")
        if count < 1:
            raise ContractError("ladder needs at least one rung")
        base = np.broadcast_to(np.asarray(base, dtype=float), (dim,))
        return cls(tuple(b * ratio ** np.arange(count) for b in base))

    @classmethod
    def spanning(cls, f: GridField, ratio: float = 2.0) -> "RectLadder":
        """Grid-aligned, roughly geometric ladder from one cell to the whole box.

        Rungs are (m + 1/2) h with m = round(ratio^j) - 1, so every window has
        cell-edge boundaries and the largest covers the box from any point.
        """
        if not ratio > 1:
            raise ContractError(f"ladder ratio must exceed 1, got {ratio}")
        axes = []
        for h, n in zip(f.spacing, f.resolution):
            m, j = [], 0
            while not m or m[-1] < n - 1:
                m.append(min(n - 1, int(round(ratio ** j)) - 1))
                j += 1
            axes.append((np.unique(m) + 0.5) * h)
        return cls(tuple(axes))

    @classmethod
    def exhaustive(cls, f: GridField) -> "RectLadder":
        """Every grid-aligned centred half-length (k + 1/2) h, k < N."""
        return cls(tuple((np.arange(n) + 0.5) * h for n, h in zip(f.resolution, f.spacing)))

    def with_axis(self, axis: int, values) -> "RectLadder":
        """Copy with the union of an axis's rungs and ``values``."""
        axes = list(self.half_lengths)
        axes[axis] = np.unique(np.concatenate([axes[axis], np.asarray(values, dtype=float).ravel()]))
        return RectLadder(tuple(axes))

    def zygmund_extended(self, n: int) -> "RectLadder":
        """Add to the t-axis every half-length forced by a (Q1, Q2) cube pair.

        The strong operator on the result sees every rectangle the Zygmund
        operator on ``self`` sees.
        """
        a1, a2 = self.half_lengths[0], self.half_lengths[n]
        return self.with_axis(2 * n, zygmund_t_half_lengths(a1, a2))


def zygmund_t_half_lengths(a1, a2) -> np.ndarray:
    """t half-lengths c with 2c = (2 a1)(2 a2), i.e. vol(Q3) = vol(Q1)^{1/n} vol(Q2)^{1/n}."""
    return (2.0 * np.asarray(a1)[:, None] * np.asarray(a2)[None, :]).ravel()


# -- windows and weights -------------------------------------------------------

@dataclass(frozen=True)
class _Windows:
    """Per-axis windows [lo, hi] in cell units relative to the output cell centre."""

    lo: tuple
    hi: tuple

    def cells(self) -> list[np.ndarray]:
        """Window lengths in cell units."""
        return [hi - lo for lo, hi in zip(self.lo, self.hi)]


def _axis_windows(half_cells: np.ndarray, offsets: Sequence[float] | None):
    if offsets is None:
        return -half_cells, half_cells.copy()
    lo, hi = [], []
    for a in half_cells:
        for o in offsets:
            lo.append(-a + o * a)
            hi.append(a + o * a)
    return np.array(lo), np.array(hi)


def _windows(f: GridField, per_axis_half: Sequence[np.ndarray], offsets=None) -> _Windows:
    lo, hi = [], []
    for a, h in zip(per_axis_half, f.spacing):
        l, u = _axis_windows(_cell_units(a, h), offsets)
        lo.append(l)
        hi.append(u)
    return _Windows(tuple(lo), tuple(hi))


def _product_combos(counts: Sequence[int]) -> np.ndarray:
    return np.array(list(itertools.product(*[range(c) for c in counts])), dtype=np.int64).reshape(-1, len(counts))


def inverse_weights(cells: Sequence[np.ndarray], combos: np.ndarray, spacing, exps) -> np.ndarray:
    """1 / (cell_volume * prod_a len_a^{-e_a}) with len_a = cells_a h_a, i.e. prod_a cells_a^e_a h_a^(e_a - 1).

    An operator value is (integral of |f| in cells) / inverse weight.  Working
    in cell units keeps gamma = 0 averages of integer data exact.
    """
    inv = np.ones(combos.shape[0])
    for a, c in enumerate(cells):
        inv = inv * c[combos[:, a]] ** exps[a]
    for a, h in enumerate(spacing):
        inv = inv * h ** (exps[a] - 1.0)
    return inv


def _check_gamma(gamma: float):
    if not (0 <= gamma < 1):
        raise ContractError(f"gamma must lie in [0, 1), got {gamma}")


# -- numba kernels -------------------------------------------------------------

@njit(cache=True)
def _interp_entries(pos, n, nodes, coefs, start, sign):
    """Write the (node, coef) pairs interpolating a cumulative table at ``pos``."""
    if pos <= 0.0:
        return start
    if pos >= n:
        nodes[start] = n
        coefs[start] = sign
        return start + 1
    i0 = int(np.floor(pos))
    fr = pos - i0
    c = start
    if fr != 1.0:
        nodes[c] = i0
        coefs[c] = sign * (1.0 - fr)
        c += 1
    if fr != 0.0:
        nodes[c] = i0 + 1
        coefs[c] = sign * fr
        c += 1
    return c


def _entry_tables(res, windows: _Windows):
    """Per axis, point index and window: up to 4 (node, coef) pairs of the box integral."""
    d = len(res)
    nmax = max(res)
    wmax = max(len(lo) for lo in windows.lo)
    nodes = np.zeros((d, nmax, wmax, 4), dtype=np.int64)
    coefs = np.zeros((d, nmax, wmax, 4))
    cnt = np.zeros((d, nmax, wmax), dtype=np.int64)
    _fill_entries(np.array(res, dtype=np.int64), _pad(windows.lo, wmax), _pad(windows.hi, wmax),
                  np.array([len(lo) for lo in windows.lo], dtype=np.int64), nodes, coefs, cnt)
    return nodes, coefs, cnt


def _pad(arrs, wmax):
    out = np.zeros((len(arrs), wmax))
    for a, x in enumerate(arrs):
        out[a, :len(x)] = x
    return out


@njit(cache=True)
def _fill_entries(res, lo, hi, nwin, nodes, coefs, cnt):
    for a in range(res.shape[0]):
        n = res[a]
        for i in range(n):
            for w in range(nwin[a]):
                c = _interp_entries(i + 0.5 + hi[a, w], n, nodes[a, i, w], coefs[a, i, w], 0, 1.0)
                c = _interp_entries(i + 0.5 + lo[a, w], n, nodes[a, i, w], coefs[a, i, w], c, -1.0)
                cnt[a, i, w] = c


@njit(cache=True)
def _box_sum(C, cstrides, nodes, coefs, cnt, idx, wsel):
    """Multilinear box integral from a cumulative table, odometer over per-axis entries."""
    d = idx.shape[0]
    for a in range(d):
        if cnt[a, idx[a], wsel[a]] == 0:
            return 0.0
    ctr = np.zeros(d, dtype=np.int64)
    total = 0.0
    while True:
        pos = 0
        coef = 1.0
        for a in range(d):
            pos += nodes[a, idx[a], wsel[a], ctr[a]] * cstrides[a]
            coef *= coefs[a, idx[a], wsel[a], ctr[a]]
        total += coef * C[pos]
        a = d - 1
        while a >= 0:
            ctr[a] += 1
            if ctr[a] < cnt[a, idx[a], wsel[a]]:
                break
            ctr[a] = 0
            a -= 1
        if a < 0:
            break
    return total


@njit(cache=True)
def _cumulative_inplace(C, shape1, strides1):
    d = shape1.shape[0]
    size = C.shape[0]
    for a in range(d):
        s = strides1[a]
        n1 = shape1[a]
        for flat in range(size):
            if (flat // s) % n1 >= 1:
                C[flat] += C[flat - s]


@njit(cache=True)
def _sat_max(C, cstrides, res, nodes, coefs, cnt, combos, invw, out):
    d = res.shape[0]
    npts = out.shape[0]
    idx = np.zeros(d, dtype=np.int64)
    for p in range(npts):
        rem = p
        for a in range(d - 1, -1, -1):
            idx[a] = rem % res[a]
            rem //= res[a]
        best = 0.0
        for k in range(combos.shape[0]):
            val = _box_sum(C, cstrides, nodes, coefs, cnt, idx, combos[k]) / invw[k]
            if val > best:
                best = val
        out[p] = best


@njit(cache=True)
def _box_sum3(C, s0, s1, nodes, coefs, cnt, i0, i1, i2, w0, w1, w2):
    total = 0.0
    for e0 in range(cnt[0, i0, w0]):
        p0 = nodes[0, i0, w0, e0] * s0
        c0 = coefs[0, i0, w0, e0]
        for e1 in range(cnt[1, i1, w1]):
            p1 = p0 + nodes[1, i1, w1, e1] * s1
            c1 = c0 * coefs[1, i1, w1, e1]
            for e2 in range(cnt[2, i2, w2]):
                total += (c1 * coefs[2, i2, w2, e2]) * C[p1 + nodes[2, i2, w2, e2]]
    return total


@njit(cache=True)
def _sat_max3(C, cstrides, res, nodes, coefs, cnt, combos, invw, out):
    # same arithmetic as _box_sum (axis order, coefficient products) unrolled for 3 axes
    s0 = cstrides[0]
    s1 = cstrides[1]
    for i0 in range(res[0]):
        for i1 in range(res[1]):
            for i2 in range(res[2]):
                best = 0.0
                for k in range(combos.shape[0]):
                    val = _box_sum3(C, s0, s1, nodes, coefs, cnt, i0, i1, i2,
                                    combos[k, 0], combos[k, 1], combos[k, 2]) / invw[k]
                    if val > best:
                        best = val
                out[(i0 * res[1] + i1) * res[2] + i2] = best


@njit(cache=True)
def _box_sum2(C, s0, nodes, coefs, cnt, i0, i1, w0, w1):
    total = 0.0
    for e0 in range(cnt[0, i0, w0]):
        p0 = nodes[0, i0, w0, e0] * s0
        c0 = coefs[0, i0, w0, e0]
        for e1 in range(cnt[1, i1, w1]):
            total += (c0 * coefs[1, i1, w1, e1]) * C[p0 + nodes[1, i1, w1, e1]]
    return total


@njit(cache=True)
def _column_window(Ct, col, pos_lo, pos_hi, nt):
    total = 0.0
    for sgn in range(2):
        pos = pos_hi if sgn == 0 else pos_lo
        if pos <= 0.0:
            v = 0.0
        elif pos >= nt:
            v = Ct[col, nt]
        else:
            i0 = int(np.floor(pos))
            fr = pos - i0
            v = Ct[col, i0] + fr * (Ct[col, i0 + 1] - Ct[col, i0])
        total += v if sgn == 0 else -v
    return total


@njit(cache=True)
def _twisted_max(Ct, uv_res, uv_idx, pos1, shape1, strides1, nv, dots, mu_h,
                 nodes, coefs, cnt, lo3, hi3, combos_uv, combo_start, invw, out):
    nuv = Ct.shape[0]
    nt = Ct.shape[1] - 1
    d2 = uv_res.shape[0]
    size1 = 1
    for a in range(d2):
        size1 *= shape1[a]
    CG = np.zeros(size1)
    shifts = np.empty(nuv)
    for P in range(nuv):
        iu = P // nv
        iv = P % nv
        for col in range(nuv):
            ju = col // nv
            jv = col % nv
            shifts[col] = mu_h * (dots[iu, jv] - dots[ju, iv])
        idx = uv_idx[P]
        for w3 in range(lo3.shape[0]):
            k0 = combo_start[w3]
            k1 = combo_start[w3 + 1]
            if k1 == k0:
                continue
            for it in range(nt):
                CG[:] = 0.0
                base = it + 0.5
                for col in range(nuv):
                    s = shifts[col]
                    CG[pos1[col]] = _column_window(Ct, col, base + s + lo3[w3], base + s + hi3[w3], nt)
                _cumulative_inplace(CG, shape1, strides1)
                best = out[P, it]
                for k in range(k0, k1):
                    if d2 == 2:
                        bs = _box_sum2(CG, strides1[0], nodes, coefs, cnt, idx[0], idx[1],
                                       combos_uv[k, 0], combos_uv[k, 1])
                    else:
                        bs = _box_sum(CG, strides1, nodes, coefs, cnt, idx, combos_uv[k])
                    val = bs / invw[k]
                    if val > best:
                        best = val
                out[P, it] = best


# -- core dispatch ---------------------------------------------------------------

def _strides(shape) -> np.ndarray:
    return np.array([int(np.prod(shape[a + 1:])) for a in range(len(shape))], dtype=np.int64)


def _cumulative(A: np.ndarray) -> np.ndarray:
    C = np.zeros(tuple(s + 1 for s in A.shape))
    C[tuple(slice(1, None) for _ in A.shape)] = A
    for a in range(A.ndim):
        np.cumsum(C, axis=a, out=C)
    return C


def _rect_max(f: GridField, params: GroupParams, windows: _Windows, combos: np.ndarray,
              invw: np.ndarray) -> GridField:
    """max over combos k of (integral of |f| over the twisted window k) / invw[k], per point."""
    if f.dim != params.dim:
        raise ContractError(f"field has {f.dim} axes but n={params.n} needs {params.dim}")
    A = np.abs(f.samples)
    res = f.resolution
    invw = np.ascontiguousarray(invw, dtype=float)
    combos = np.ascontiguousarray(combos, dtype=np.int64)
    if params.mu == 0.0:
        C = _cumulative(A)
        nodes, coefs, cnt = _entry_tables(res, windows)
        out = np.zeros(A.size)
        kernel = _sat_max3 if len(res) == 3 else _sat_max
        kernel(C.ravel(), _strides(C.shape), np.array(res, dtype=np.int64), nodes, coefs, cnt,
                 combos, invw, out)
        return f.with_samples(out.reshape(res))

    n = params.n
    uv_res = res[:2 * n]
    nt = res[-1]
    nuv = int(np.prod(uv_res))
    nv = int(np.prod(res[n:2 * n]))
    Ct = np.zeros((nuv, nt + 1))
    Ct[:, 1:] = np.cumsum(A.reshape(nuv, nt), axis=1)
    uv_win = _Windows(windows.lo[:2 * n], windows.hi[:2 * n])
    nodes, coefs, cnt = _entry_tables(uv_res, uv_win)
    shape1 = np.array([r + 1 for r in uv_res], dtype=np.int64)
    strides1 = _strides(tuple(shape1))
    uv_idx = np.ascontiguousarray(np.indices(uv_res).reshape(2 * n, -1).T.astype(np.int64))
    pos1 = ((uv_idx + 1) * strides1).sum(axis=1).astype(np.int64)
    order = np.argsort(combos[:, -1], kind="stable")
    combos_sorted = combos[order]
    w3count = len(windows.lo[-1])
    combo_start = np.searchsorted(combos_sorted[:, -1], np.arange(w3count + 1)).astype(np.int64)
    out = np.zeros((nuv, nt))
    _twisted_max(np.ascontiguousarray(Ct), np.array(uv_res, dtype=np.int64), uv_idx, pos1, shape1, strides1,
                 nv, _dots(f, n), params.mu / f.spacing[-1], nodes, coefs, cnt,
                 np.ascontiguousarray(windows.lo[-1]), np.ascontiguousarray(windows.hi[-1]),
                 np.ascontiguousarray(combos_sorted[:, :2 * n]), combo_start,
                 np.ascontiguousarray(invw[order]), out)
    return f.with_samples(out.reshape(res))


def _dots(f: GridField, n: int) -> np.ndarray:
    """dots[i, j] = u_i . v_j over flat u- and v-block indices."""
    ucoords = np.stack([m.ravel() for m in np.meshgrid(*[f.centers(a) for a in range(n)], indexing="ij")], 1)
    vcoords = np.stack([m.ravel() for m in np.meshgrid(*[f.centers(a) for a in range(n, 2 * n)],
                                                       indexing="ij")], 1)
    return np.ascontiguousarray(ucoords @ vcoords.T)


# -- public operators ------------------------------------------------------------

def strong_frac_maximal(f: GridField, gamma: float, params: GroupParams, ladder: RectLadder,
                        contains: bool = False, offsets: Sequence[float] = DEFAULT_OFFSETS) -> GridField:
    """Strong fractional maximal function M_gamma over a rectangle ladder.

    With ``contains=True`` the rectangles are not centred at the point but
    only contain it: each rung is also tried shifted by ``offset * half_length``.
    """
    _check_gamma(gamma)
    if ladder.dim != f.dim:
        raise ContractError(f"ladder has {ladder.dim} axes, field has {f.dim}")
    windows = _windows(f, ladder.half_lengths, offsets if contains else None)
    cells = windows.cells()
    combos = _product_combos([len(c) for c in cells])
    invw = inverse_weights(cells, combos, f.spacing, [1.0 - gamma] * f.dim)
    return _rect_max(f, params, windows, combos, invw)


def zygmund_maximal(f: GridField, alpha: float, beta: float, params: GroupParams,
                    ladder: RectLadder) -> GridField:
    """Zygmund fractional maximal function M_{alpha beta}.

    Q1 runs over cubes with half-lengths from the ladder's first u-axis, Q2
    over cubes from its first v-axis, and the t half-length is forced by
    vol(Q3) = vol(Q1)^{1/n} vol(Q2)^{1/n}.  The weight is
    vol(Q1)^{alpha/n-1} vol(Q2)^{alpha/n-1} vol(Q3)^{beta-1}.
    """
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise ContractError("alpha and beta must be finite")
    n = params.n
    if ladder.dim != f.dim or f.dim != params.dim:
        raise ContractError(f"ladder/field/group dimensions disagree: {ladder.dim}, {f.dim}, {params.dim}")
    a1, a2 = ladder.half_lengths[0], ladder.half_lengths[n]
    a3, which = np.unique(zygmund_t_half_lengths(a1, a2), return_inverse=True)
    windows = _windows(f, [a1] * n + [a2] * n + [a3])
    i1, i2 = np.meshgrid(np.arange(a1.size), np.arange(a2.size), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    combos = np.concatenate([np.repeat(i1[:, None], n, 1), np.repeat(i2[:, None], n, 1),
                             which.reshape(-1, 1)], axis=1)
    exps = [1.0 - alpha / n] * (2 * n) + [1.0 - beta]
    invw = inverse_weights(windows.cells(), combos, f.spacing, exps)
    return _rect_max(f, params, windows, combos, invw)


# -- brute-force oracle -------------------------------------------------------------

@njit(cache=True)
def _slab_sum(A, strides, lead_lo, lead_hi, last_index):
    """Sum of A over the leading-axis window at a fixed last-axis index."""
    d1 = lead_lo.shape[0]
    ctr = lead_lo.copy()
    s = 0.0
    while True:
        pos = last_index
        for a in range(d1):
            pos += ctr[a] * strides[a]
        s += A[pos]
        a = d1 - 1
        while a >= 0:
            ctr[a] += 1
            if ctr[a] <= lead_hi[a]:
                break
            ctr[a] = lead_lo[a]
            a -= 1
        if a < 0:
            break
    return s


@njit(cache=True)
def _brute_flat(A, res, invw, out):
    # rectangles in C order of their per-axis half-widths k, last axis grown one slab at a time
    d = res.shape[0]
    d1 = d - 1
    nl = res[d1]
    npts = out.shape[0]
    idx = np.zeros(d, dtype=np.int64)
    lo = np.zeros(d1, dtype=np.int64)
    hi = np.zeros(d1, dtype=np.int64)
    kk = np.zeros(d1, dtype=np.int64)
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * res[a + 1]
    nlead = 1
    for a in range(d1):
        nlead *= res[a]
    for p in range(npts):
        rem = p
        for a in range(d - 1, -1, -1):
            idx[a] = rem % res[a]
            rem //= res[a]
        best = 0.0
        for lead in range(nlead):
            rem = lead
            for a in range(d1 - 1, -1, -1):
                kk[a] = rem % res[a]
                rem //= res[a]
            for a in range(d1):
                lo[a] = max(0, idx[a] - kk[a])
                hi[a] = min(res[a] - 1, idx[a] + kk[a])
            s = 0.0
            for k in range(nl):
                j = idx[d1] - k
                if j >= 0:
                    s += _slab_sum(A, strides, lo, hi, j)
                j = idx[d1] + k
                if k > 0 and j < nl:
                    s += _slab_sum(A, strides, lo, hi, j)
                val = s / invw[lead * nl + k]
                if val > best:
                    best = val
        out[p] = best


@njit(cache=True)
def _brute_twisted(A3, uv_res, nv, dots, mu_h, combos_k, invw, out):
    nuv, nt = A3.shape
    d2 = uv_res.shape[0]
    idx = np.zeros(d2, dtype=np.int64)
    jdx = np.zeros(d2, dtype=np.int64)
    for P in range(nuv):
        rem = P
        for a in range(d2 - 1, -1, -1):
            idx[a] = rem % uv_res[a]
            rem //= uv_res[a]
        iu = P // nv
        iv = P % nv
        for it in range(nt):
            best = 0.0
            for k in range(combos_k.shape[0]):
                c = combos_k[k, d2] + 0.5
                s = 0.0
                for col in range(nuv):
                    rem = col
                    for a in range(d2 - 1, -1, -1):
                        jdx[a] = rem % uv_res[a]
                        rem //= uv_res[a]
                    inside = True
                    for a in range(d2):
                        if abs(jdx[a] - idx[a]) > combos_k[k, a]:
                            inside = False
                            break
                    if not inside:
                        continue
                    ju = col // nv
                    jv = col % nv
                    centre = it + 0.5 + mu_h * (dots[iu, jv] - dots[ju, iv])
                    wlo = centre - c
                    whi = centre + c
                    for tt in range(nt):
                        ov = min(whi, tt + 1.0) - max(wlo, float(tt))
                        if ov > 0.0:
                            s += A3[col, tt] * ov
                val = s / invw[k]
                if val > best:
                    best = val
            out[P, it] = best


def brute_force_cost(f: GridField, mu: float = 0.0) -> float:
    """Rough operation count of the oracle."""
    res = np.array(f.resolution, dtype=float)
    pts = float(np.prod(res))
    if mu == 0.0:
        # points x leading rectangles x leading-window cells x last-axis length
        return pts * float(np.prod(res[:-1])) * float(np.prod((res[:-1] + 1) / 2)) * res[-1]
    return pts * pts * pts


def brute_force_maximal(f: GridField, gamma: float, params: GroupParams) -> GridField:
    """Exact max over every grid-aligned rectangle centred at each point (oracle).

    Rectangles are enumerated cell by cell, independently of the cumulative
    tables used by the fast path.  For mu = 0, integer-valued fields give the
    same floating-point values as :func:`strong_frac_maximal` with an
    exhaustive ladder.  For mu != 0 each column's shifted t-window is
    integrated by explicit cell overlaps.
    """
    _check_gamma(gamma)
    if f.dim != params.dim:
        raise ContractError(f"field has {f.dim} axes but n={params.n} needs {params.dim}")
    cost = brute_force_cost(f, params.mu)
    if max(f.resolution) > BRUTE_FORCE_MAX_AXIS or cost > BRUTE_FORCE_BUDGET:
        raise GridTooLargeError(
            f"brute force on resolution {f.resolution} needs about {cost:.3g} operations; "
            f"limit is {BRUTE_FORCE_MAX_AXIS} cells per axis and {BRUTE_FORCE_BUDGET:.0e} operations")
    windows = _windows(f, RectLadder.exhaustive(f).half_lengths)
    cells = windows.cells()
    combos = _product_combos(f.resolution)
    invw = np.ascontiguousarray(inverse_weights(cells, combos, f.spacing, [1.0 - gamma] * f.dim))
    A = np.abs(f.samples)
    if params.mu == 0.0:
        out = np.zeros(A.size)
        _brute_flat(A.ravel(), np.array(f.resolution, dtype=np.int64), invw, out)
        return f.with_samples(out.reshape(f.resolution))
    n = params.n
    uv_res = f.resolution[:2 * n]
    nuv = int(np.prod(uv_res))
    out = np.zeros((nuv, f.resolution[-1]))
    _brute_twisted(np.ascontiguousarray(A.reshape(nuv, -1)), np.array(uv_res, dtype=np.int64),
                   int(np.prod(f.resolution[n:2 * n])), _dots(f, n),
                   params.mu / f.spacing[-1], combos, invw, out)
    return f.with_samples(out.reshape(f.resolution))


def level_set_measure(g: GridField, lam: float) -> float:
    """cell_volume * #{cells with g > lam}."""
    if not lam > 0:
        raise ContractError(f"level must be positive, got {lam}")
    return g.cell_volume * int(np.count_nonzero(g.samples > lam))
