"""Command-line front end: one subcommand per experiment family, INI-configured, CSV out.

Exit status is 0 when every check of the run passes, 1 when a check fails and
2 on a usage, configuration or contract error.  Failures are also written as
JSON to stderr and to ``<out>/failure.json``.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import covering, experiments, grid, kernels, maximal
from .errors import ConfigError, ContractError
from .group import GroupParams, multiply_arrays

SUBCOMMANDS = ("group-check", "kernel-check", "apply", "maximal", "cover", "sweep", "weak-type")


# -- configuration ---------------------------------------------------------------

class Section:
    """Typed, strict access to one config section; every key must be present."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        if not parser.has_section(name):
            raise ConfigError(f"config has no [{name}] section")
        self.name = name
        self._sec = parser[name]

    def _raw(self, key: str) -> str:
        if key not in self._sec:
            raise ConfigError(f"[{self.name}] is missing key {key!r}")
        return self._sec[key].strip()

    def str(self, key: str) -> str:
        return self._raw(key)

    def float(self, key: str) -> float:
        raw = self._raw(key)
        try:
            return float(Fraction(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number") from exc

    def int(self, key: str) -> int:
        value = self.float(key)
        if value != int(value):
            raise ConfigError(f"[{self.name}] {key} must be an integer")
        return int(value)

    def bool(self, key: str) -> bool:
        raw = self._raw(key).lower()
        if raw not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a boolean")
        return raw in ("true", "yes", "1")

    def floats(self, key: str) -> list[float]:
        raw = self._raw(key)
        try:
            return [float(Fraction(x.strip())) for x in raw.split(",") if x.strip()]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number list") from exc

    def pairs(self, key: str) -> list[tuple[float, float]]:
        out = []
        for chunk in self._raw(key).split(";"):
            parts = chunk.split()
            if len(parts) != 2:
                raise ConfigError(f"[{self.name}] {key}: expected 'a b' pairs separated by ';'")
            out.append((float(Fraction(parts[0])), float(Fraction(parts[1]))))
        return out


def load_config(path: str | None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        packaged = resources.files("heisfrac").joinpath(f"configs/{path or 'default'}.ini")
        if path is None or (not Path(path).exists() and packaged.is_file()):
            parser.read_string(packaged.read_text())
        else:
            with open(path) as fh:
                parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parser


# -- run context -------------------------------------------------------------------

class Run:
    """Collects output files and check outcomes for one subcommand."""

    def __init__(self, name: str, seed: int, out: Path):
        self.name = name
        self.seed = seed
        self.out = out
        self.files: dict[str, str] = {}
        self.checks: list[dict] = []

    def rng(self, *stream: int) -> np.random.Generator:
        """Sub-generator derived from the global seed and a stream id."""
        return np.random.default_rng([self.seed, *stream])

    def check(self, name: str, ok: bool, **detail):
        self.checks.append({"check": name, "ok": bool(ok), **{k: _jsonable(v) for k, v in detail.items()}})

    def table(self, filename: str, tag: str, columns, rows):
        self.files[filename] = experiments.rows_to_csv(tag, columns, rows)

    @property
    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["ok"]]


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _field_source(sec: Section, dim: int) -> grid.GridField:
    kind = sec.str("field")
    if kind in ("cube", "gaussian"):
        box = grid.Box.symmetric(sec.float("box_half_width"), dim)
        f = grid.cube_indicator(0.5, dim) if kind == "cube" else grid.gaussian(1.0, dim)
        return grid.sample(box, sec.int("resolution"), f)
    path = Path(kind)
    if not path.exists():
        raise ConfigError(f"[{sec.name}] field {kind!r} is neither 'cube', 'gaussian' nor an existing file")
    return grid.read_field(path)[0]


def _theta(sec: Section, alpha: float, beta: float, n: int) -> float:
    raw = sec.str("theta")
    return kernels.rho(alpha, beta, n) if raw == "sharp" else sec.float("theta")


def _operator(sec: Section) -> experiments.OperatorChoice:
    kind = sec.str("operator")
    if kind == "riesz":
        return experiments.OperatorChoice("riesz", kernels.RieszParams(sec.float("a"), sec.int("n")))
    n = sec.int("n")
    group = GroupParams(n, sec.float("mu"))
    if kind == "folland_stein":
        return experiments.OperatorChoice(kind, kernels.FSParams(sec.float("delta"), n), group)
    alpha, beta = sec.float("alpha"), sec.float("beta")
    k = kernels.KernelParams(alpha, beta, n, _theta(sec, alpha, beta, n))
    return experiments.OperatorChoice(kind, k, group)


# -- subcommands ---------------------------------------------------------------------

def cmd_group_check(run: Run, cfg):
    sec = Section(cfg, "group-check")
    trials, tol = sec.int("trials"), sec.float("tol")
    rows = []
    for i, n in enumerate(int(x) for x in sec.floats("n_values")):
        for j, mu in enumerate(sec.floats("mu_values")):
            rng = run.rng(1, i, j)
            p, q, r = (rng.normal(size=(trials, 2 * n + 1)) for _ in range(3))
            scale = max(1.0, float(np.abs(np.concatenate([p, q, r])).max()))
            assoc = np.abs(multiply_arrays(multiply_arrays(p, q, mu), r, mu)
                           - multiply_arrays(p, multiply_arrays(q, r, mu), mu)).max() / scale
            e = np.zeros_like(p)
            ident = max(np.abs(multiply_arrays(p, e, mu) - p).max(), np.abs(multiply_arrays(e, p, mu) - p).max())
            inv = np.abs(multiply_arrays(p, -p, mu)).max()
            rows.append([n, mu, float(assoc), float(ident), float(inv)])
            run.check(f"group axioms n={n} mu={mu}", max(assoc, ident, inv) <= tol,
                      associativity=assoc, identity=ident, inverse=inv)
    run.table("group_check.csv", "group-law-axioms", ["n", "mu", "associativity", "identity", "inverse"], rows)


def cmd_kernel_check(run: Run, cfg):
    sec = Section(cfg, "kernel-check")
    n = sec.int("n")
    tol = sec.float("tol")
    npts, nscale, nhom = sec.int("points"), sec.int("scale_pairs"), sec.int("homogeneity_points")
    rows = []
    for i, (alpha, beta) in enumerate(sec.pairs("alpha_beta")):
        k = kernels.KernelParams(alpha, beta, n)
        rng = run.rng(2, i)
        a, b, c = (np.exp(rng.uniform(-3, 3, nhom)) for _ in range(3))
        r, s = (np.exp(rng.uniform(-2, 2, (nscale, 1))) for _ in range(2))
        base = kernels.zygmund_kernel_array(a, b, c, k)
        scaled = kernels.zygmund_kernel_array(r * a, s * b, r * s * c, k)
        expect = r ** (alpha - n) * s ** (alpha - n) * (r * s) ** (beta - 1) * base
        hom = float(np.max(np.abs(scaled - expect) / expect))
        a, b, c = (np.exp(rng.uniform(-4, 4, npts)) for _ in range(3))
        v = kernels.zygmund_kernel_array(a, b, c, k)
        sep = kernels.separable_kernel_array(a, b, c, k)
        viol = int(np.count_nonzero(v > sep * (1 + kernels.BOUND_SLACK)))
        rows.append([alpha, beta, k.theta, hom, viol])
        run.check(f"kernel alpha={alpha} beta={beta}", hom <= tol and viol == 0, homogeneity=hom, violations=viol)
    run.table("kernel_check.csv", "zygmund-homogeneity separable-bound",
              ["alpha", "beta", "theta", "homogeneity_residual", "separable_violations"], rows)

    fs = kernels.FSParams(sec.float("delta"), n)
    rng = run.rng(3)
    a, b, c = (np.exp(rng.uniform(-4, 4, npts)) for _ in range(3))
    e = fs.exponent
    omega = kernels.folland_stein_kernel_array(a, b, c, fs)
    mixed = (a * b + c) ** (-e)
    prod = (a * a * b * b + c * c) ** (-e / 2)
    ratio = mixed / prod
    slack = kernels.BOUND_SLACK
    v1 = int(np.count_nonzero(omega > mixed * (1 + slack)))
    v2 = int(np.count_nonzero((ratio < 2 ** (-e / 2) * (1 - slack)) | (ratio > 2 ** (e / 2) * (1 + slack))))
    run.table("delta_chain.csv", "isotropic-to-product-kernel-chain",
              ["delta", "n", "omega_violations", "comparability_violations"], [[fs.delta, n, v1, v2]])
    run.check("delta chain", v1 == 0 and v2 == 0, omega_violations=v1, comparability_violations=v2)


def cmd_apply(run: Run, cfg):
    sec = Section(cfg, "apply")
    op = _operator(sec)
    f = _field_source(sec, op.dim)
    g = op.apply(f)
    grid.write_csv(g, run.out / "apply_field.csv", mu=None if op.kind == "riesz" else op.group.mu,
                   tag=f"{op.kind}-operator-output")
    rows = [["input_l1", float(np.sum(np.abs(f.samples)) * f.cell_volume)],
            ["output_max", float(g.samples.max())],
            ["output_min", float(g.samples.min())],
            ["output_l2", grid.lp_norm(g, 2.0)]]
    run.table("apply.csv", f"{op.kind}-operator-output", ["quantity", "value"], rows)
    if np.all(f.samples >= 0):
        run.check("positivity", float(g.samples.min()) >= 0.0, output_min=float(g.samples.min()))


def cmd_maximal(run: Run, cfg):
    sec = Section(cfg, "maximal")
    n = sec.int("n")
    params = GroupParams(n, sec.float("mu"))
    dim = 2 * n + 1
    if sec.str("field") == "random":
        box = grid.Box.symmetric(sec.float("box_half_width"), dim)
        res = sec.int("resolution")
        data = run.rng(4).integers(0, sec.int("random_max") + 1, size=(res,) * dim).astype(float)
        f = grid.GridField(box, data)
    else:
        f = _field_source(sec, dim)
    ladder_kind = sec.str("ladder")
    if ladder_kind == "exhaustive":
        ladder = maximal.RectLadder.exhaustive(f)
    elif ladder_kind == "spanning":
        ladder = maximal.RectLadder.spanning(f, sec.float("ladder_ratio"))
    else:
        raise ConfigError(f"[maximal] ladder must be 'exhaustive' or 'spanning', got {ladder_kind!r}")
    mode = sec.str("mode")
    gamma = sec.float("gamma")
    rows = []
    if mode == "strong":
        out = maximal.strong_frac_maximal(f, gamma, params, ladder)
    elif mode == "contains":
        out = maximal.strong_frac_maximal(f, gamma, params, ladder, contains=True)
    elif mode == "zygmund":
        out = maximal.zygmund_maximal(f, sec.float("alpha"), sec.float("beta"), params, ladder)
    elif mode == "compare":
        out = maximal.strong_frac_maximal(f, gamma, params, ladder)
        oracle = maximal.brute_force_maximal(f, gamma, params)
        diff = float(np.max(np.abs(out.samples - oracle.samples)))
        exact = bool(np.array_equal(out.samples, oracle.samples))
        rows += [["oracle_max_abs_diff", diff], ["oracle_bit_exact", int(exact)]]
        if params.mu == 0.0:
            run.check("oracle equality", exact, max_abs_diff=diff)
        else:
            run.check("oracle agreement", diff <= 1e-12 * max(1.0, float(oracle.samples.max())), max_abs_diff=diff)
    elif mode == "domination":
        alpha, beta = sec.float("alpha"), sec.float("beta")
        g = (alpha + beta) / (n + 1)
        out = maximal.zygmund_maximal(f, alpha, beta, params, ladder)
        strong = maximal.strong_frac_maximal(f, g, params, ladder.zygmund_extended(n))
        excess = float(np.max(out.samples - strong.samples * (1 + 1e-12) - 1e-12))
        rows.append(["domination_excess", excess])
        run.check("zygmund below strong", excess <= 0.0, excess=excess)
    else:
        raise ConfigError(f"[maximal] unknown mode {mode!r}")
    rows += [["max", float(out.samples.max())], ["mean", float(out.samples.mean())]]
    grid.write_csv(out, run.out / "maximal_field.csv", n=n, mu=params.mu, tag=f"maximal-{mode}")
    run.table("maximal.csv", f"maximal-{mode}", ["quantity", "value"], rows)


def _three_cubes() -> covering.RectFamily:
    cube = covering.Rect([0.5, 0.5, 0.5], [0.5, 0.5, 0.5])
    return covering.RectFamily((cube, cube, cube))


def cmd_cover(run: Run, cfg):
    sec = Section(cfg, "cover")
    ps = sec.floats("ps")
    kind = sec.str("family")
    if kind == "three-cubes":
        families = [_three_cubes()]
    elif kind == "random":
        families = []
        for i in range(sec.int("families")):
            rng = run.rng(5, i)
            families.append(covering.random_family(rng, int(rng.integers(1, sec.int("count") + 1))))
    else:
        path = Path(kind)
        if not path.exists():
            raise ConfigError(f"[cover] family {kind!r} is neither a generator name nor a file")
        families = [covering.family_from_csv(path.read_text())]
    want_t = sec.bool("assert_t_projection")
    detail_rows, summary = [], []
    for i, fam in enumerate(families):
        rep = covering.select_cover(fam, ps)
        certs = covering.rejection_certificates(fam, rep)
        kept_ok = all(rep.covered[j] < 0.5 * rep.volumes[j] for j in rep.selected_sorted if j > 0)
        rejected_ok = all(c.half_covered for c in certs)
        t_bad = sum(not c.t_projection_covered for c in certs)
        for row in covering.report_rows(rep):
            detail_rows.append([i] + row)
        summary.append([i, len(fam), len(rep.selected_sorted), rep.union_all, rep.union_selected,
                        rep.comparability_ratio] + [rep.indicator_ratios[p] for p in ps] + [len(certs), t_bad])
        run.check(f"family {i} selection", kept_ok and rejected_ok, selected=list(rep.selected))
        if want_t:
            run.check(f"family {i} t-projection", t_bad == 0, uncovered=t_bad)
    run.table("cover.csv", "greedy-selection-condition",
              ["family", "position", "original_index", "volume", "covered_volume", "selected"], detail_rows)
    run.table("cover_summary.csv", "union-comparability indicator-sum-bound",
              ["family", "rectangles", "selected", "union_all", "union_selected", "comparability_ratio"]
              + [f"indicator_ratio_p{p}" for p in ps] + ["rejected", "t_projection_uncovered"], summary)


def cmd_sweep(run: Run, cfg):
    sec = Section(cfg, "sweep")
    lp = grid.LpPair(sec.float("p"), sec.float("q"))
    kind = sec.str("kind")
    if kind == "homogeneity":
        op = _operator(sec)
        scales = np.logspace(np.log10(sec.float("scale_min")), np.log10(sec.float("scale_max")), sec.int("points"))
        rep = experiments.homogeneity_slope(op, None, lp, sec.str("axis"), scales, resolution=sec.int("resolution"))
        run.table("sweep.csv", "dilation-scaling-law", ["scale", "op_norm_q", "f_norm_p", "phi", "log_phi"],
                  rep.rows())
        run.table("sweep_fit.csv", "dilation-scaling-law", ["slope", "predicted", "residual"],
                  [[rep.slope, float("nan") if rep.predicted is None else rep.predicted, rep.residual]])
        ok = rep.predicted is not None and abs(rep.slope - rep.predicted) <= sec.float("tol")
        run.check("slope", ok and rep.residual <= 0.05, slope=rep.slope, predicted=rep.predicted,
                  residual=rep.residual)
    elif kind == "sharpness":
        n = sec.int("n")
        alpha, beta = sec.float("alpha"), sec.float("beta")
        lambdas = np.logspace(sec.float("lambda_min_exp"), sec.float("lambda_max_exp"), sec.int("lambda_points"))
        results = experiments.theta_sharpness(alpha, beta, n, lp, sec.floats("thetas"), lambdas,
                                              end_points=sec.int("end_points"), resolution=sec.int("resolution"),
                                              mu=sec.float("mu"))
        rows, sweep_rows = [], []
        for res in results:
            verdict = experiments.constraint_check(alpha, beta, res.theta, lp.p, lp.q, n)
            rows.append([res.theta, res.slope_small, res.slope_large, res.band[0], res.band[1],
                         int(res.band_ok), res.violation, int(res.admissible), int(verdict.all_ok)])
            sweep_rows += [[res.theta] + r for r in res.report.rows()]
            run.check(f"theta={res.theta} consistent with necessary conditions",
                      res.admissible == verdict.all_ok, admissible=res.admissible, verdict=verdict.all_ok)
        run.table("sharpness.csv", "bracket-exponent-sharpness",
                  ["theta", "slope_small", "slope_large", "band_lo", "band_hi", "band_ok", "violation",
                   "admissible", "necessary_conditions"], rows)
        run.table("sharpness_sweeps.csv", "bracket-exponent-sharpness",
                  ["theta", "lambda", "op_norm_q", "f_norm_p", "phi", "log_phi"], sweep_rows)
    else:
        raise ConfigError(f"[sweep] kind must be 'homogeneity' or 'sharpness', got {kind!r}")


def cmd_weak_type(run: Run, cfg):
    sec = Section(cfg, "weak-type")
    n = sec.int("n")
    params = GroupParams(n, sec.float("mu"))
    dim = 2 * n + 1
    box = grid.Box.symmetric(sec.float("box_half_width"), dim)
    f = grid.sample(box, sec.int("resolution"), grid.cube_indicator(sec.float("cube_half"), dim))
    lambdas = np.logspace(np.log10(sec.float("lambda_min")), np.log10(sec.float("lambda_max")),
                          sec.int("lambda_points"))
    gammas, ps, qs = sec.floats("gammas"), sec.floats("p_values"), sec.floats("q_values")
    if not len(gammas) == len(ps) == len(qs):
        raise ConfigError("[weak-type] gammas, p_values and q_values must have equal length")
    bound = sec.float("bound")
    rows = []
    for gamma, p, q in zip(gammas, ps, qs):
        res = experiments.weak_type_experiment(f, gamma, grid.LpPair(p, q), lambdas, params)
        rows += [[gamma, p, q] + r for r in res.rows()]
        run.check(f"weak type gamma={gamma}", res.bound <= bound, bound=res.bound)
    run.table("weak_type.csv", "weak-type-level-sets",
              ["gamma", "p", "q", "lambda", "measure", "column", "truncated"], rows)


COMMANDS: dict[str, Callable] = {
    "group-check": cmd_group_check,
    "kernel-check": cmd_kernel_check,
    "apply": cmd_apply,
    "maximal": cmd_maximal,
    "cover": cmd_cover,
    "sweep": cmd_sweep,
    "weak-type": cmd_weak_type,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file, or the name of a packaged config (default, sharpness)")
    common.add_argument("--out", default=".", help="output directory for CSV files")
    common.add_argument("--seed", type=int, help="overrides [global] seed")
    common.add_argument("--threads", type=int, help="cap on numba worker threads")
    parser = argparse.ArgumentParser(prog="heisfrac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=(COMMANDS[name].__doc__ or name))
    return parser


def _emit_failure(record: dict, out: Path | None):
    text = json.dumps(record, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "failure.json").write_text(text + "\n")
        except OSError:
            pass


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            raise
        _emit_failure({"status": "error", "subcommand": None, "error": "UsageError",
                       "message": "unknown subcommand or bad arguments"}, None)
        return 2
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else Section(cfg, "global").int("seed")
        if args.threads is not None:
            import warnings

            import numba

            with warnings.catch_warnings():
                # numba warns about unusable threading layers it will not use anyway
                warnings.simplefilter("ignore", numba.NumbaWarning)
                numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
        out.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, seed, out)
        COMMANDS[args.command](run, cfg)
    except (ConfigError, ContractError, ValueError, ArithmeticError) as exc:
        _emit_failure({"status": "error", "subcommand": args.command, "error": type(exc).__name__,
                       "message": str(exc)}, out)
        return 2
    for name, text in run.files.items():
        (out / name).write_text(text)
    if run.failures:
        _emit_failure({"status": "fail", "subcommand": args.command, "failures": run.failures}, out)
        return 1
    stale = out / "failure.json"
    if stale.exists():
        stale.unlink()
    return 0


if __name__ == "__main__":
    sys.exit(main())
