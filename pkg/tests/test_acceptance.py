"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary (see
conftest.py), so ``pytest tests/test_acceptance.py`` shows the full table.
"""

import time

import numpy as np
import pytest

from heisfrac import covering, experiments
from heisfrac.cli import load_config, main
from heisfrac.grid import Box, GridField, LpPair, cube_indicator, sample
from heisfrac.group import GroupParams, multiply_arrays
from heisfrac.kernels import (FSParams, KernelParams, RieszParams, folland_stein_kernel_array,
                              riesz_kernel_array, separable_kernel_array, zygmund_kernel_array)
from heisfrac.maximal import RectLadder, brute_force_maximal, strong_frac_maximal, zygmund_maximal
from heisfrac.operators import folland_stein_apply, frac_integral_apply, riesz_apply, separable_majorant_apply

from oracles import replay

SEED = 20240601
LINES: list[str] = []

PAIRS5 = [(1.0, 0.0), (0.5, 0.5), (1.2, 0.3), (0.8, 0.1), (1.5, 0.2)]
PAIRS10 = PAIRS5 + [(0.3, 0.6), (1.0, 0.25), (0.9, 0.45), (1.4, 0.05), (0.6, 0.3)]
WEAK_TYPE_REGRESSION_BOUND = 10.0
COVER_REGRESSION_BOUND = 50.0


def record(number, title, ok, elapsed, budget, detail=""):
    ok = bool(ok) and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'}  [{number:>2}] {title}: {detail} ({elapsed:.2f}s / {budget:g}s)"
    LINES.append(line)
    print(line)
    return ok


def rng(*stream):
    return np.random.default_rng([SEED, *stream])


def log_uniform(g, size, span=4.0):
    return np.exp(g.uniform(-span, span, size))


def test_01_group_axioms():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        for mu in (-2.0, 0.0, 1.0):
            a, b, c = rng(1, n, int(mu + 2)).uniform(-10, 10, (3, 1000, 2 * n + 1))
            assoc = multiply_arrays(multiply_arrays(a, b, mu), c, mu) - multiply_arrays(a, multiply_arrays(b, c, mu), mu)
            e = np.zeros_like(a)
            ident = np.concatenate([multiply_arrays(a, e, mu) - a, multiply_arrays(e, a, mu) - a])
            inv = np.concatenate([multiply_arrays(a, -a, mu), multiply_arrays(-a, a, mu)])
            worst = max(worst, np.abs(assoc).max(), np.abs(ident).max(), np.abs(inv).max())
    assert record(1, "group axioms", worst <= 1e-12, time.perf_counter() - t0, 1, f"max residual {worst:.2e}")


def test_02_zygmund_homogeneity():
    t0 = time.perf_counter()
    g = rng(2)
    worst = 0.0
    for alpha, beta in PAIRS5:
        k = KernelParams(alpha, beta)
        a, b, c = (log_uniform(g, 1000) for _ in range(3))
        r, s = (log_uniform(g, (20, 1), 2.0) for _ in range(2))
        scaled = zygmund_kernel_array(r * a, s * b, r * s * c, k)
        e = alpha + beta - 2
        expect = r ** e * s ** e * zygmund_kernel_array(a, b, c, k)
        worst = max(worst, float(np.max(np.abs(scaled / expect - 1))))
    assert record(2, "Zygmund homogeneity", worst <= 1e-12, time.perf_counter() - t0, 1,
                  f"max relative residual {worst:.2e}")


def test_03_kernel_bounds():
    t0 = time.perf_counter()
    g = rng(3)
    violations = 0
    for alpha, beta in PAIRS10:
        k = KernelParams(alpha, beta)
        a, b, c = (log_uniform(g, 10_000) for _ in range(3))
        violations += int(np.count_nonzero(zygmund_kernel_array(a, b, c, k)
                                           > separable_kernel_array(a, b, c, k) * (1 + 1e-12)))
    assert record(3, "separable kernel bound", violations == 0, time.perf_counter() - t0, 1,
                  f"{violations} violations in 1e5 evaluations")


def test_04_delta_chain():
    t0 = time.perf_counter()
    g = rng(4)
    fs = FSParams(1.0, 1)
    e = fs.exponent
    a, b, c = (log_uniform(g, 10_000) for _ in range(3))
    omega = folland_stein_kernel_array(a, b, c, fs)
    mixed = (a * b + c) ** -e
    ratio = mixed / (a * a * b * b + c * c) ** (-e / 2)
    v1 = int(np.count_nonzero(omega > mixed * (1 + 1e-12)))
    v2 = int(np.count_nonzero((ratio < 2 ** (-e / 2) * (1 - 1e-12)) | (ratio > 2 ** (e / 2) * (1 + 1e-12))))
    assert record(4, "isotropic-to-product chain", v1 + v2 == 0, time.perf_counter() - t0, 1,
                  f"{v1} domination and {v2} comparability violations")


def _point_mass(res, dim):
    box = Box.symmetric(2.0, dim)
    g = GridField(box, np.zeros((res,) * dim))
    idx = (res // 2,) * dim
    data = np.zeros((res,) * dim)
    data[idx] = 1.0 / g.cell_volume
    return GridField(box, data), g.center_of(idx)


def _rel_error_off_planes(out, c0, kernel):
    diffs = [m - c for m, c in zip(out.mesh(sparse=False), c0)]
    mask = np.all([np.abs(d) > 1e-9 for d in diffs], axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        want = kernel([np.abs(d) for d in diffs])
    return float(np.max(np.abs(out.samples[mask] / want[mask] - 1)))


def test_05_point_mass_kernels():
    t0 = time.perf_counter()
    k, fs, rp = KernelParams(1.0, 0.0), FSParams(1.0, 1), RieszParams(0.5, 1)
    params = GroupParams(1, 0.0)
    f, c0 = _point_mass(64, 3)
    errs = {
        "zygmund": _rel_error_off_planes(frac_integral_apply(f, k, params), c0,
                                         lambda d: zygmund_kernel_array(*d, k)),
        "folland-stein": _rel_error_off_planes(folland_stein_apply(f, fs, params), c0,
                                               lambda d: folland_stein_kernel_array(*d, fs)),
    }
    f1, c1 = _point_mass(512, 1)
    errs["riesz"] = _rel_error_off_planes(riesz_apply(f1, rp), c1, lambda d: riesz_kernel_array(d[0], rp))
    worst = max(errs.values())
    detail = ", ".join(f"{name} {e:.1e}" for name, e in errs.items())
    assert record(5, "point-mass kernels", worst <= 0.02, time.perf_counter() - t0, 60, detail)


def test_06_riesz_closed_forms():
    t0 = time.perf_counter()
    f = sample(Box.symmetric(4.0, 1), 512, cube_indicator(1.0, 1))
    out = riesz_apply(f, RieszParams(0.5, 1))
    x = f.centers(0)
    at0 = float(np.interp(0.0, x, out.samples))
    at2 = float(np.interp(2.0, x, out.samples))
    e0, e2 = abs(at0 / 4 - 1), abs(at2 / (2 * (np.sqrt(3) - 1)) - 1)
    assert record(6, "Riesz closed forms", max(e0, e2) <= 0.02, time.perf_counter() - t0, 1,
                  f"T(0)={at0:.5f} (err {e0:.1e}), T(2)={at2:.5f} (err {e2:.1e})")


def test_07_majorant_inequality():
    t0 = time.perf_counter()
    k = KernelParams(1.0, 0.0)
    params = GroupParams(1, 1.0)
    worst = -np.inf
    for i in range(5):
        f = GridField(Box.symmetric(2.0, 3), rng(7, i).uniform(0, 1, (32, 32, 32)))
        low = frac_integral_apply(f, k, params).samples
        high = separable_majorant_apply(f, k, params).samples
        worst = max(worst, float(np.max(low - high)))
    assert record(7, "majorant inequality", worst <= 1e-10, time.perf_counter() - t0, 120,
                  f"max (operator - majorant) {worst:.2e}")


def test_08_homogeneity_slopes():
    t0 = time.perf_counter()
    scales = np.logspace(-0.75, 0.75, 6)
    zyg = experiments.OperatorChoice("zygmund", KernelParams(1.0, 0.0), GroupParams(1, 1.0))
    riesz = experiments.OperatorChoice("riesz", RieszParams(0.5, 1))
    cases = [(zyg, LpPair(4 / 3, 4)), (zyg, LpPair(4 / 3, 2)), (riesz, LpPair(4 / 3, 4))]
    errs = []
    for op, lp in cases:
        rep = experiments.homogeneity_slope(op, None, lp, "r", scales)
        errs.append(abs(rep.slope - rep.predicted))
    assert record(8, "homogeneity slopes", max(errs) <= 0.05, time.perf_counter() - t0, 300,
                  "slope errors " + ", ".join(f"{e:.1e}" for e in errs))


def test_09_theta_sharpness():
    t0 = time.perf_counter()
    sharp, low = experiments.theta_sharpness(1.0, 0.0, 1, LpPair(4 / 3, 4), [0.5, 0.4])
    ok = sharp.band_ok and sharp.admissible and low.violation >= 0.05
    assert record(9, "bracket-exponent sharpness", ok, time.perf_counter() - t0, 300,
                  f"theta=rho slopes ({sharp.slope_small:.3f}, {sharp.slope_large:.3f}) in band {sharp.band}; "
                  f"theta=rho-0.1 exits by {low.violation:.3f}")


def test_10_maximal_oracle():
    t0 = time.perf_counter()
    params = GroupParams(1, 0.0)
    mismatches = 0
    for res in (8, 12):
        for i in range(10):
            data = rng(10, res, i).integers(0, 6, (res,) * 3).astype(float)
            f = GridField(Box.symmetric(1.0, 3), data)
            fast = strong_frac_maximal(f, 0.3, params, RectLadder.exhaustive(f)).samples
            brute = brute_force_maximal(f, 0.3, params).samples
            mismatches += int(not np.array_equal(fast, brute))
    assert record(10, "maximal oracle equivalence", mismatches == 0, time.perf_counter() - t0, 60,
                  f"{mismatches} of 20 fields differ")


def test_11_maximal_analytic():
    t0 = time.perf_counter()
    f = sample(Box.symmetric(2.1, 3), 21, cube_indicator(0.5))
    m = strong_frac_maximal(f, 0.0, GroupParams(1, 0.0), RectLadder.spanning(f)).samples
    origin, unit = float(m[10, 10, 10]), float(m[15, 10, 10])
    ok = origin == 1.0 and abs(unit * 3 - 1) <= 0.05
    assert record(11, "maximal analytic values", ok, time.perf_counter() - t0, 10,
                  f"M(0)={origin!r}, M(1,0,0)={unit:.6f}")


def test_12_domination():
    t0 = time.perf_counter()
    params = GroupParams(1, 0.0)
    worst = -np.inf
    for i in range(10):
        f = GridField(Box.symmetric(2.0, 3), rng(12, i).uniform(0, 1, (32, 32, 32)))
        ladder = RectLadder.spanning(f)
        for alpha, beta in [(1.0, 0.0), (0.5, 0.5), (1.2, 0.3)]:
            z = zygmund_maximal(f, alpha, beta, params, ladder).samples
            s = strong_frac_maximal(f, (alpha + beta) / 2, params, ladder.zygmund_extended(1)).samples
            worst = max(worst, float(np.max(z - s)))
    assert record(12, "Zygmund maximal below strong maximal", worst <= 1e-12, time.perf_counter() - t0, 120,
                  f"max (zygmund - strong) {worst:.2e}")


def _cover_families():
    for i in range(200):
        g = rng(13, i)
        yield covering.random_family(g, int(g.integers(1, 51)))


def test_13_covering_lemma():
    t0 = time.perf_counter()
    worst_union, worst_ind, failures = 0.0, 0.0, 0
    for fam in _cover_families():
        rep = covering.select_cover(fam)
        try:
            replay(fam, rep)
        except AssertionError:
            failures += 1
        failures += sum(not c.half_covered for c in covering.rejection_certificates(fam, rep))
        worst_union = max(worst_union, rep.comparability_ratio)
        worst_ind = max(worst_ind, max(rep.indicator_ratios.values()))
    ok = failures == 0 and worst_union <= COVER_REGRESSION_BOUND and worst_ind <= COVER_REGRESSION_BOUND
    assert record(13, "covering lemma (selection, half-cover, ratios)", ok, time.perf_counter() - t0, 120,
                  f"{failures} failed checks, max union ratio {worst_union:.3f}, max indicator ratio {worst_ind:.3f}")


@pytest.mark.xfail(strict=True, reason="the t-projection of a rejected rectangle need not be covered")
def test_13b_covering_t_projection():
    t0 = time.perf_counter()
    rejected = uncovered = 0
    for fam in _cover_families():
        certs = covering.rejection_certificates(fam, covering.select_cover(fam))
        rejected += len(certs)
        uncovered += sum(not c.t_projection_covered for c in certs)
    assert record(13, "covering lemma (t-projection certificate)", uncovered == 0, time.perf_counter() - t0, 120,
                  f"{uncovered} of {rejected} rejected rectangles have an uncovered t-projection")


def test_14_weak_type():
    t0 = time.perf_counter()
    f = sample(Box.symmetric(6.0, 3), 48, cube_indicator(0.5))
    lambdas = np.logspace(np.log10(0.009), np.log10(0.9), 9)
    bounds = {}
    for gamma, lp in [(0.0, LpPair(2, 2)), (0.25, LpPair(2, 4))]:
        bounds[gamma] = experiments.weak_type_experiment(f, gamma, lp, lambdas, GroupParams(1, 0.0)).bound
    ok = max(bounds.values()) <= WEAK_TYPE_REGRESSION_BOUND
    assert record(14, "weak-type column", ok, time.perf_counter() - t0, 120,
                  ", ".join(f"gamma={g}: max {b:.4f}" for g, b in bounds.items()))


RUNS = [(cmd, None) for cmd in ("group-check", "kernel-check", "apply", "maximal", "cover", "sweep", "weak-type")]
RUNS.append(("sweep", "sharpness"))


def _suite(root):
    for i, (cmd, cfg) in enumerate(RUNS):
        argv = [cmd, "--out", str(root / f"{i}-{cmd}"), "--seed", str(SEED)]
        if cfg:
            argv += ["--config", cfg]
        assert main(argv) == 0


def test_15_determinism(tmp_path):
    t0 = time.perf_counter()
    assert load_config(None)["global"]["seed"]
    _suite(tmp_path / "a")
    _suite(tmp_path / "b")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    same = [(tmp_path / "a" / p).read_bytes() == (tmp_path / "b" / p).read_bytes() for p in files]
    ok = bool(files) and all(same)
    assert record(15, "determinism", ok, time.perf_counter() - t0, 600,
                  f"{sum(same)} of {len(files)} CSV files byte-identical")
