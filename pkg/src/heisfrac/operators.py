"""Direct-summation fractional integral operators on cell-centred grids.

Every Heisenberg operator is a group convolution

    Op f(x) = sum_y f(y) K(x * y^{-1}) cell_volume.

Substituting tau -> tau + mu (u.eta - v.xi) turns it into

    Op f(u, v, t) = sum f(xi, eta, tau - mu (u.eta - v.xi)) K(u - xi, v - eta, t - tau) cell_volume

so the kernel is only ever needed at differences of grid nodes (a table indexed
by index differences) and the twist becomes a per-column shift of ``f`` along
t, done by linear interpolation with zero extension outside the box.

Cost is O(N_out * N_in); all-zero input columns are skipped, so point masses
on large grids are cheap.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import ContractError
from .grid import GridField
from .group import GroupParams
from .kernels import (
    FSParams,
    KernelParams,
    RieszParams,
    folland_stein_kernel_array,
    riesz_kernel_array,
    separable_kernel_array,
    zygmund_kernel_array,
)

SINGULAR_RULES = ("average", "shift")
DEFAULT_SINGULAR_RULE = "average"

# cap on quadrature nodes per singular table entry
_NODE_BUDGET = 220_000
# cap on kernel evaluations per vectorised chunk
_CHUNK_BUDGET = 2_000_000

KernelFn = Callable[[Sequence[np.ndarray]], np.ndarray]


# -- singular-cell rule -----------------------------------------------------------

@lru_cache(maxsize=None)
def graded_nodes(levels: int = 14, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on (0, 1), geometrically graded towards 0; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = [0.0] + [2.0 ** (-j) for j in range(levels, -1, -1)]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(a + (b - a) * (x + 1) / 2)
        weights.append((b - a) * w / 2)
    return np.concatenate(nodes), np.concatenate(weights)


def _nodes_for(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Largest graded rule whose k-fold tensor product fits the node budget."""
    for order in (4, 3, 2):
        for levels in range(14, 1, -1):
            if (order * (levels + 1)) ** k <= _NODE_BUDGET:
                return graded_nodes(levels, order)
    return graded_nodes(2, 2)


def kernel_table(
    spacing: Sequence[float],
    res: Sequence[int],
    kernel: KernelFn,
    blocks: Sequence[Sequence[int]],
    rule: str = DEFAULT_SINGULAR_RULE,
) -> np.ndarray:
    """Tabulate ``kernel(coords)`` at every node difference of a grid.

    ``coords`` is a list of per-axis coordinate arrays.  The kernel is singular
    where all axes of some block in ``blocks`` have zero difference; those
    entries are replaced

    * ``"average"``: by the kernel's mean over the zero axes of the difference
      cell, via graded tensor Gauss-Legendre (the kernel must be even in each
      coordinate, so the half cell suffices);
    * ``"shift"``: by the kernel at the point where each zero axis sits at half
      a cell, i.e. a zero block moves to half its cell diagonal.

    Both rules preserve positivity and pointwise kernel inequalities.
    """
    if rule not in SINGULAR_RULES:
        raise ContractError(f"unknown singular-cell rule {rule!r}; choose from {SINGULAR_RULES}")
    spacing = np.asarray(spacing, dtype=float)
    dim = len(res)
    shape = tuple(2 * int(n) - 1 for n in res)
    mesh = np.meshgrid(*[np.arange(-(n - 1), n) * h for h, n in zip(spacing, res)], indexing="ij", sparse=True)

    codes = np.zeros(shape, dtype=np.int64)
    for b, blk in enumerate(blocks):
        m = np.ones((1,) * dim, dtype=bool)
        for a in blk:
            m = m & (mesh[a] == 0)
        codes |= np.broadcast_to(m, shape).astype(np.int64) << b
    singular = codes != 0

    with np.errstate(all="ignore"):
        table = np.array(np.broadcast_to(kernel(mesh), shape), dtype=float)
    if not singular.any():
        return table

    full = [np.broadcast_to(m, shape) for m in mesh]
    for code in np.unique(codes[singular]):
        sel = codes == code
        zero_axes = [a for b, blk in enumerate(blocks) if (code >> b) & 1 for a in blk]
        base = [f[sel] for f in full]
        if rule == "shift":
            coords = list(base)
            for a in zero_axes:
                coords[a] = np.full(base[0].shape, spacing[a] / 2)
            table[sel] = kernel(coords)
            continue
        x, w = _nodes_for(len(zero_axes))
        grids = np.meshgrid(*([x] * len(zero_axes)), indexing="ij")
        wgrid = np.ones(grids[0].shape)
        for wg in np.meshgrid(*([w] * len(zero_axes)), indexing="ij"):
            wgrid = wgrid * wg
        pts = [g.ravel() for g in grids]
        wts = wgrid.ravel()
        nq = wts.size
        vals = np.empty(base[0].size)
        step = max(1, _CHUNK_BUDGET // nq)
        for lo in range(0, vals.size, step):
            hi = min(vals.size, lo + step)
            coords = [b[lo:hi, None] for b in base]
            for j, a in enumerate(zero_axes):
                coords[a] = (pts[j] * (spacing[a] / 2))[None, :]
            vals[lo:hi] = np.broadcast_to(kernel(coords), (hi - lo, nq)) @ wts
        table[sel] = vals
    return table


def _block_norm(coords, axes):
    acc = 0.0
    for a in axes:
        acc = acc + np.asarray(coords[a]) ** 2
    return np.sqrt(acc)


def zygmund_kernel_fn(k: KernelParams) -> KernelFn:
    n = k.n

    def fn(c):
        return zygmund_kernel_array(_block_norm(c, range(n)), _block_norm(c, range(n, 2 * n)), np.abs(c[2 * n]), k)

    return fn


def separable_kernel_fn(k: KernelParams) -> KernelFn:
    n = k.n

    def fn(c):
        return separable_kernel_array(_block_norm(c, range(n)), _block_norm(c, range(n, 2 * n)), np.abs(c[2 * n]), k)

    return fn


def folland_stein_kernel_fn(fs: FSParams) -> KernelFn:
    n = fs.n

    def fn(c):
        return folland_stein_kernel_array(_block_norm(c, range(n)), _block_norm(c, range(n, 2 * n)),
                                          np.abs(c[2 * n]), fs)

    return fn


def riesz_kernel_fn(rp: RieszParams) -> KernelFn:
    def fn(c):
        return riesz_kernel_array(_block_norm(c, range(len(c))), rp)

    return fn


def heisenberg_blocks(n: int) -> list[list[int]]:
    """Axis blocks u, v, t: the Zygmund kernel blows up on each block's zero set."""
    return [list(range(n)), list(range(n, 2 * n)), [2 * n]]


# -- summation engines ------------------------------------------------------------

@njit(cache=True)
def _shifted_column(col, shift, g):
    """g[j] = col at fractional index j + shift (linear, zero outside)."""
    nt = col.shape[0]
    k0 = int(np.floor(shift))
    w = shift - k0
    if w == 0.0 and k0 == 0:
        for j in range(nt):
            g[j] = col[j]
        return
    for j in range(nt):
        a = j + k0
        lo = col[a] if 0 <= a < nt else 0.0
        hi = col[a + 1] if 0 <= a + 1 < nt else 0.0
        g[j] = (1.0 - w) * lo + w * hi


@njit(cache=True)
def _t_convolve_add(g, kt, scale, out_col):
    """out_col[i] += scale * sum_j g[j] kt[i - j + nt - 1]."""
    nt = g.shape[0]
    for i in range(nt):
        acc = 0.0
        off = i + nt - 1
        for j in range(nt):
            acc += g[j] * kt[off - j]
        out_col[i] += scale * acc


@njit(cache=True)
def _twisted_sum(f3, K3, udiff, vdiff, dots, shift_scale, cols_u, cols_v, out):
    nu, nv, nt = f3.shape
    g = np.empty(nt)
    for iu in range(nu):
        for iv in range(nv):
            for c in range(cols_u.shape[0]):
                ju = cols_u[c]
                jv = cols_v[c]
                s = -shift_scale * (dots[iu, jv] - dots[ju, iv])
                _shifted_column(f3[ju, jv], s, g)
                _t_convolve_add(g, K3[udiff[iu, ju], vdiff[iv, jv]], 1.0, out[iu, iv])


@njit(cache=True)
def _twisted_sum_separable(f3, wu, wv, kt, udiff, vdiff, dots, shift_scale, cols_u, cols_v, out):
    # inner t-integral F first, then the weights in (xi, eta)
    nu, nv, nt = f3.shape
    g = np.empty(nt)
    F = np.empty(nt)
    for iu in range(nu):
        for iv in range(nv):
            for c in range(cols_u.shape[0]):
                ju = cols_u[c]
                jv = cols_v[c]
                s = -shift_scale * (dots[iu, jv] - dots[ju, iv])
                _shifted_column(f3[ju, jv], s, g)
                F[:] = 0.0
                _t_convolve_add(g, kt, 1.0, F)
                weight = wu[udiff[iu, ju]] * wv[vdiff[iv, jv]]
                for it in range(nt):
                    out[iu, iv, it] += weight * F[it]


@njit(cache=True)
def _convolve_sparse(flat, idx, nz, kflat, kstrides, res, out):
    npts, d = idx.shape
    for c in range(nz.shape[0]):
        y = nz[c]
        fy = flat[y]
        for x in range(npts):
            k = 0
            for a in range(d):
                k += (idx[x, a] - idx[y, a] + res[a] - 1) * kstrides[a]
            out[x] += fy * kflat[k]


# -- plumbing -------------------------------------------------------------------------

def _diff_strides(res) -> np.ndarray:
    dshape = [2 * int(r) - 1 for r in res]
    return np.array([int(np.prod(dshape[a + 1:])) for a in range(len(res))], dtype=np.int64)


def _block_diff_index(res_block: Sequence[int]) -> np.ndarray:
    """(i, j) -> flat index of the difference i - j in a (2N-1)^k table, i and j flat block indices."""
    res_block = tuple(int(r) for r in res_block)
    idx = np.indices(res_block).reshape(len(res_block), -1).T
    diff = idx[:, None, :] - idx[None, :, :] + (np.array(res_block) - 1)
    return np.ascontiguousarray((diff * _diff_strides(res_block)).sum(axis=-1).astype(np.int64))


def _block_coords(f: GridField, axes) -> np.ndarray:
    mesh = np.meshgrid(*[f.centers(a) for a in axes], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _check_heis(f: GridField, params: GroupParams):
    if f.dim != params.dim:
        raise ContractError(f"field has {f.dim} axes but n={params.n} needs {params.dim}")


def _heis_setup(f: GridField, params: GroupParams):
    _check_heis(f, params)
    n = params.n
    res = f.resolution
    nu, nv, nt = int(np.prod(res[:n])), int(np.prod(res[n:2 * n])), res[-1]
    f3 = np.ascontiguousarray(f.samples.reshape(nu, nv, nt))
    # dots[i, j] = u_i . v_j, serving as both u.eta and xi.v
    dots = np.ascontiguousarray(_block_coords(f, range(n)) @ _block_coords(f, range(n, 2 * n)).T)
    nz = np.argwhere(np.any(f3 != 0.0, axis=2))
    cols_u = np.ascontiguousarray(nz[:, 0].astype(np.int64))
    cols_v = np.ascontiguousarray(nz[:, 1].astype(np.int64))
    return f3, _block_diff_index(res[:n]), _block_diff_index(res[n:2 * n]), dots, cols_u, cols_v


def heisenberg_convolve(f: GridField, params: GroupParams, table: np.ndarray) -> GridField:
    """Group convolution of ``f`` with a tabulated kernel (shape (2N_a - 1) per axis)."""
    f3, udiff, vdiff, dots, cols_u, cols_v = _heis_setup(f, params)
    nu, nv, nt = f3.shape
    expected = tuple(2 * r - 1 for r in f.resolution)
    if table.shape != expected:
        raise ContractError(f"kernel table has shape {table.shape}, expected {expected}")
    K3 = np.ascontiguousarray(table.reshape(-1, int(np.prod(expected[params.n:2 * params.n])), 2 * nt - 1))
    out = np.zeros((nu, nv, nt))
    if cols_u.size:
        _twisted_sum(f3, K3, udiff, vdiff, dots, params.mu / f.spacing[-1], cols_u, cols_v, out)
    return f.with_samples((out * f.cell_volume).reshape(f.resolution))


def zygmund_table(f: GridField, k: KernelParams, rule: str = DEFAULT_SINGULAR_RULE) -> np.ndarray:
    return kernel_table(f.spacing, f.resolution, zygmund_kernel_fn(k), heisenberg_blocks(k.n), rule)


def folland_stein_table(f: GridField, fs: FSParams, rule: str = DEFAULT_SINGULAR_RULE) -> np.ndarray:
    return kernel_table(f.spacing, f.resolution, folland_stein_kernel_fn(fs), [list(range(f.dim))], rule)


def riesz_table(f: GridField, rp: RieszParams, rule: str = DEFAULT_SINGULAR_RULE) -> np.ndarray:
    return kernel_table(f.spacing, f.resolution, riesz_kernel_fn(rp), [list(range(f.dim))], rule)


def _separable_factors(f: GridField, k: KernelParams, rule: str):
    """Per-block tables whose outer product is the majorant table."""
    n = k.n
    g = k.gamma
    res = f.resolution
    sp = f.spacing

    def radial(expo):
        return lambda c: _block_norm(c, range(len(c))) ** expo

    wu = kernel_table(sp[:n], res[:n], radial(n * g - n), [list(range(n))], rule).ravel()
    wv = kernel_table(sp[n:2 * n], res[n:2 * n], radial(n * g - n), [list(range(n))], rule).ravel()
    kt = kernel_table(sp[2 * n:], res[2 * n:], radial(g - 1.0), [[0]], rule).ravel()
    return np.ascontiguousarray(wu), np.ascontiguousarray(wv), np.ascontiguousarray(kt)


def separable_table(f: GridField, k: KernelParams, rule: str = DEFAULT_SINGULAR_RULE) -> np.ndarray:
    """Full majorant table, the outer product of the block factors."""
    wu, wv, kt = _separable_factors(f, k, rule)
    full = wu[:, None, None] * wv[None, :, None] * kt[None, None, :]
    return full.reshape(tuple(2 * r - 1 for r in f.resolution))


# -- public operators -------------------------------------------------------------------

def frac_integral_apply(f: GridField, k: KernelParams, params: GroupParams,
                        rule: str = DEFAULT_SINGULAR_RULE) -> GridField:
    """Apply the Zygmund-kernel fractional integral with bracket exponent ``k.theta``."""
    if k.n != params.n:
        raise ContractError(f"kernel n={k.n} differs from group n={params.n}")
    _check_heis(f, params)
    return heisenberg_convolve(f, params, zygmund_table(f, k, rule))


def folland_stein_apply(f: GridField, fs: FSParams, params: GroupParams,
                        rule: str = DEFAULT_SINGULAR_RULE) -> GridField:
    """Apply the isotropic Folland-Stein fractional integral of order delta."""
    if fs.n != params.n:
        raise ContractError(f"kernel n={fs.n} differs from group n={params.n}")
    _check_heis(f, params)
    return heisenberg_convolve(f, params, folland_stein_table(f, fs, rule))


def separable_majorant_apply(f: GridField, k: KernelParams, params: GroupParams,
                             rule: str = DEFAULT_SINGULAR_RULE) -> GridField:
    """Apply the separable majorant kernel |u|^{ng-n}|v|^{ng-n}|t|^{g-1}, g = (alpha+beta)/(n+1).

    The t-integral of each twisted column is formed first and then weighted by
    the (xi, eta) factors.  Requires ``f >= 0``.
    """
    if k.n != params.n:
        raise ContractError(f"kernel n={k.n} differs from group n={params.n}")
    if np.any(f.samples < 0):
        raise ContractError("separable majorant is only applied to nonnegative fields")
    f3, udiff, vdiff, dots, cols_u, cols_v = _heis_setup(f, params)
    wu, wv, kt = _separable_factors(f, k, rule)
    out = np.zeros(f3.shape)
    if cols_u.size:
        _twisted_sum_separable(f3, wu, wv, kt, udiff, vdiff, dots, params.mu / f.spacing[-1],
                               cols_u, cols_v, out)
    return f.with_samples((out * f.cell_volume).reshape(f.resolution))


def translation_convolve(f: GridField, table: np.ndarray) -> GridField:
    """Euclidean convolution with a tabulated kernel, summing over nonzero inputs only."""
    res = np.array(f.resolution, dtype=np.int64)
    expected = tuple(2 * int(r) - 1 for r in res)
    if table.shape != expected:
        raise ContractError(f"kernel table has shape {table.shape}, expected {expected}")
    flat = np.ascontiguousarray(f.samples.ravel())
    idx = np.ascontiguousarray(np.indices(f.resolution).reshape(f.dim, -1).T.astype(np.int64))
    nz = np.flatnonzero(flat).astype(np.int64)
    out = np.zeros(flat.size)
    _convolve_sparse(flat, idx, nz, np.ascontiguousarray(table.ravel()), _diff_strides(res), res, out)
    return f.with_samples((out * f.cell_volume).reshape(f.resolution))


def riesz_apply(f: GridField, rp: RieszParams, rule: str = DEFAULT_SINGULAR_RULE) -> GridField:
    """Apply the Euclidean Riesz potential of order a on R^N."""
    if f.dim != rp.N:
        raise ContractError(f"field has {f.dim} axes but N={rp.N}")
    return translation_convolve(f, riesz_table(f, rp, rule))
