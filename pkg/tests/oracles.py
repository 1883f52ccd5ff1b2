"""Independent oracles shared by the unit tests and the acceptance gate."""

import numpy as np

from heisfrac.covering import triple_t


def sweep_volume(bounds):
    """Union volume of [lo, hi] boxes by sweeping the first axis and recursing."""
    if not bounds:
        return 0.0
    if len(bounds[0][0]) == 1:
        total, reach = 0.0, -np.inf
        for lo, hi in sorted((b[0][0], b[1][0]) for b in bounds):
            if hi <= reach:
                continue
            total += hi - max(lo, reach)
            reach = hi
        return total
    xs = sorted({b[0][0] for b in bounds} | {b[1][0] for b in bounds})
    total = 0.0
    for a, b in zip(xs[:-1], xs[1:]):
        active = [(lo[1:], hi[1:]) for lo, hi in bounds if lo[0] <= a and hi[0] >= b]
        total += (b - a) * sweep_volume(active)
    return total


def oracle_covered(r, others):
    clipped = []
    for o in others:
        lo, hi = np.maximum(r.lower, o.lower), np.minimum(r.upper, o.upper)
        if np.all(hi > lo):
            clipped.append((tuple(lo), tuple(hi)))
    return sweep_volume(clipped)


def as_bounds(rects):
    return [(tuple(r.lower), tuple(r.upper)) for r in rects]


def replay(fam, rep):
    """Re-derive every decision with the sweep oracle."""
    rects = [fam[i] for i in rep.order]
    t_half = [r.half_lengths[-1] for r in rects]
    assert all(a >= b for a, b in zip(t_half, t_half[1:]))
    kept = list(rep.selected_sorted)
    assert kept[0] == 0 and kept == sorted(set(kept))
    for j, r in enumerate(rects):
        stars = [triple_t(rects[k]) for k in kept if k < j]
        cv = oracle_covered(r, [s for s in stars if s.intersects(r)])
        assert cv == rep.covered[j] or abs(cv - rep.covered[j]) <= 1e-9 * r.volume
        if j > 0:
            assert (j in kept) == (cv < 0.5 * r.volume)


