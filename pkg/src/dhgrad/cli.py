"""Command-line runner: ``dhgrad <subcommand> [--config FILE] [--out DIR] ...``.

Every subcommand reads an optional INI file, applies command-line
overrides, validates the result, runs, and writes CSV / JSON / plot-data
artifacts to the output directory.  Exit status: 0 when all assertions
pass, 2 when one fails, 3 for configuration errors (including kernels
rejected by their constructor).
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import artifacts
from .experiments import CSV_COLUMNS, THEOREMS, SobolevConfig, _exponents, kernel_label, run_sobolev
from .field_ops import (Grid3, curl_residual, gaussian_field, limit_s_to_1, nonlocal_gradient_spectral,
                        reconstruct, reconstruct_realspace, write_axis_probes, write_snapshot)
from .inversion import construct_inversion, decay_regression, verify_convolution_identity
from .kernels import (FAMILIES, KernelRejected, KernelSpec, check_gradient_condition,
                      check_integrability, check_monotone_convex, make_kernel)
from .norms import oneil_check, random_oneil_instance
from .plots import emit_plots
from .radial_fourier import check_positivity, radial_ft, verify_asymptotics

log = logging.getLogger("dhgrad")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 2, 3
COMMANDS = ("certify", "invert", "represent", "limit", "sobolev", "oneil", "plots")


class ConfigError(ValueError):
    """Invalid configuration; carries every offending field."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ExperimentConfig:
    command: str
    kernel: dict = field(default_factory=lambda: {"family": "two_scale"})
    N: int = 64
    L: float = 16.0
    xi_min: float = 1e-3
    xi_max: float = 1e3
    points: int = 2048
    rtol: float = 1e-6
    theorem: str = "1.2"
    test_family: Optional[str] = None
    params: Optional[tuple] = None
    p: float = 2.0
    s_values: tuple = (0.5, 0.7, 0.9)
    kernels: tuple = ()
    instances: int = 20
    out: Path = Path("dhgrad-out")
    seed: int = 0
    threads: int = 1
    tol_override: Optional[float] = None

    def kernel_spec(self) -> KernelSpec:
        kw = dict(self.kernel)
        family = kw.pop("family")
        return KernelSpec.default(family, **kw)


# ---------------------------------------------------------------- config


_KERNEL_KEYS = {"family": str, "d": int, "s": float, "tail": float, "a": float, "b": float,
                "r": float, "R": float, "blend_sharpness": float}


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def load_config(command: str, path: Optional[str], overrides: dict) -> ExperimentConfig:
    """Merge an INI file (sections ``kernel grid spectrum experiment``) with flag overrides."""
    problems: list[str] = []
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep 'r' and 'R' apart
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError([f"config file {path} not found"])
        cp.read(path)
    for sec in cp.sections():
        if sec not in ("kernel", "grid", "spectrum", "experiment"):
            problems.append(f"unknown section [{sec}]")
    cfg = ExperimentConfig(command=command)
    kernel = dict(cfg.kernel)
    if cp.has_section("kernel"):
        for key, raw in cp.items("kernel"):
            if key not in _KERNEL_KEYS:
                problems.append(f"kernel.{key}: unknown key")
                continue
            try:
                kernel[key] = _KERNEL_KEYS[key](raw)
            except ValueError:
                problems.append(f"kernel.{key}: cannot parse {raw!r}")
    scalar = {
        "grid": {"N": int, "L": float},
        "spectrum": {"xi_min": float, "xi_max": float, "points": int, "rtol": float},
        "experiment": {"theorem": str, "test_family": str, "params": _floats, "p": float,
                       "s_values": _floats, "instances": int, "seed": int, "threads": int,
                       "kernels": lambda t: tuple(k.strip() for k in t.split(",") if k.strip()),
                       "out": Path},
    }
    values = {}
    for sec, keys in scalar.items():
        if not cp.has_section(sec):
            continue
        for key, raw in cp.items(sec):
            if key not in keys:
                problems.append(f"{sec}.{key}: unknown key")
                continue
            try:
                values[key] = keys[key](raw)
            except ValueError:
                problems.append(f"{sec}.{key}: cannot parse {raw!r}")
    for key, val in overrides.items():
        if val is None:
            continue
        if key.startswith("kernel."):
            kernel[key.split(".", 1)[1]] = val
        else:
            values[key] = val
    cfg = replace(cfg, kernel=kernel, **values)
    try:
        validate(cfg)
    except ConfigError as exc:
        problems += exc.problems
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    problems = []
    if cfg.kernel.get("family") not in FAMILIES:
        problems.append(f"kernel.family: must be one of {FAMILIES}")
    if cfg.N < 16 or cfg.N & (cfg.N - 1):
        problems.append("grid.N: must be a power of two >= 16")
    if cfg.L <= 0:
        problems.append("grid.L: must be positive")
    if not 0 < cfg.xi_min < cfg.xi_max:
        problems.append("spectrum: need 0 < xi_min < xi_max")
    if cfg.points < 16:
        problems.append("spectrum.points: need at least 16")
    if cfg.threads < 1:
        problems.append("experiment.threads: must be >= 1")
    if cfg.instances < 1:
        problems.append("experiment.instances: must be >= 1")
    if cfg.tol_override is not None and not cfg.tol_override > 0:
        problems.append("--tol-override: must be positive")
    for k in cfg.kernels:
        if k not in FAMILIES:
            problems.append(f"experiment.kernels: unknown family {k!r}")
    if cfg.command == "sobolev":
        if cfg.theorem not in THEOREMS:
            problems.append(f"experiment.theorem: must be one of {sorted(THEOREMS)}")
        else:
            try:
                specs = sobolev_kernels(cfg)
            except (ValueError, KernelRejected) as exc:
                specs = []
                problems.append(f"kernel: {exc}")
            for spec in specs:
                exps, reason = _exponents(cfg.theorem, spec, 1.0 if cfg.theorem == "1.2" else cfg.p)
                if exps is None:
                    problems.append(f"experiment.p / kernels: {kernel_label(spec)}: {reason}")
        if cfg.theorem == "1.2" and any(not 0.5 <= s < 1 for s in cfg.s_values):
            problems.append("experiment.s_values: theorem 1.2 needs 1/2 <= s < 1")
        if cfg.test_family not in (None, "gaussians", "bumps", "dilations"):
            problems.append("experiment.test_family: gaussians | bumps | dilations")
    if problems:
        raise ConfigError(problems)


def sobolev_kernels(cfg: ExperimentConfig) -> list[KernelSpec]:
    if cfg.theorem == "1.2":
        return [KernelSpec("riesz", s=s) for s in cfg.s_values]
    if cfg.kernels:
        return [KernelSpec.default(f) for f in cfg.kernels]
    spec = cfg.kernel_spec()
    if spec.family in THEOREMS[cfg.theorem]:
        return [spec]
    return [KernelSpec.default(f) for f in THEOREMS[cfg.theorem]]


# ---------------------------------------------------------------- assertions


@dataclass
class Assertion:
    name: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self):
        return dict(name=self.name, value=self.value, threshold=self.threshold, passed=self.passed)


def _le(name, value, threshold):
    return Assertion(name, float(value), float(threshold), bool(np.isfinite(value) and value <= threshold))


def _ge(name, value, threshold):
    return Assertion(name, float(value), float(threshold), bool(np.isfinite(value) and value >= threshold))


def _tol(cfg, default):
    return cfg.tol_override if cfg.tol_override is not None else default


# ---------------------------------------------------------------- commands


def run_certify(cfg: ExperimentConfig) -> tuple[list[Assertion], dict]:
    spec = cfg.kernel_spec()
    prof = make_kernel(spec)
    spectrum = radial_ft(prof, xi_min=cfg.xi_min, xi_max=cfg.xi_max, n=cfg.points, rtol=cfg.rtol)
    pos = check_positivity(spectrum)
    grad = check_gradient_condition(prof)
    conv = check_monotone_convex(prof)
    integ = check_integrability(prof)
    asym = verify_asymptotics(spectrum, spec)
    cols, names = [spectrum.xi, spectrum.values, spectrum.error], ["xi", "ghat", "error"]
    if spectrum.tail is not None:
        cols.append(spectrum.tail(spectrum.xi))
        names.append("high_asymptote")
    if spectrum.head is not None:
        cols.append(spectrum.head(spectrum.xi))
        names.append("low_asymptote")
    artifacts.write_columns(cfg.out / "spectrum.dat", names, *cols)
    report = dict(kernel=kernel_label(spec), positivity=pos, gradient_condition=grad,
                  monotone_convex=conv, integrability=integ, asymptotics=asym,
                  flagged_points=int(np.count_nonzero(spectrum.flagged)))
    checks = [
        _ge("min_ghat", pos["min_value"], 0.0),
        Assertion("gradient_condition", float(grad["passed"]), 1.0, grad["passed"]),
        Assertion("monotone_convex", float(conv), 1.0, conv),
    ]
    checks[0].passed = pos["positive"]
    return checks, report


def _expected_outer(spec: KernelSpec) -> float:
    d = spec.d
    if spec.family == "two_scale":
        return -(d - spec.tail)
    if spec.family == "riesz":
        return -(d - spec.s)
    return -(d - 1.0)


def run_invert(cfg: ExperimentConfig) -> tuple[list[Assertion], dict]:
    spec = cfg.kernel_spec()
    kernel, symbol = construct_inversion(spec)
    inner, outer = (1e-2, 0.3), (3.0, 1e2)
    fit = decay_regression(kernel, inner=inner, outer=outer)
    fit.update(inner_window=list(inner), outer_window=list(outer),
               expected_inner=-(spec.d - spec.s), expected_outer=_expected_outer(spec))
    ident = verify_convolution_identity(kernel, kernel.meta["profile"])
    kernel.export(cfg.out / "kernel.dat")
    artifacts.write_json(cfg.out / "decay.json", fit)
    artifacts.write_json(cfg.out / "convolution.json", ident)
    domega = np.diff(kernel.omega)
    checks = [
        _le("identity_deviation", ident["max_deviation"], _tol(cfg, 1e-3)),
        _ge("omega_min", float(np.min(kernel.omega)), 0.0),
        _le("omega_increase", float(np.max(domega)), 0.0),
        _le("inner_slope_error", abs(fit["inner_slope"] - fit["expected_inner"]), 0.15),
        _le("outer_slope_error", abs(fit["outer_slope"] - fit["expected_outer"]), 0.15),
        _ge("r2", fit["r2"], 0.99),
    ]
    return checks, dict(kernel=kernel_label(spec), decay=fit, identity=ident)


def run_represent(cfg: ExperimentConfig) -> tuple[list[Assertion], dict]:
    spec = cfg.kernel_spec()
    prof = make_kernel(spec)
    grid = Grid3(cfg.N, cfg.L)
    u = gaussian_field(grid)
    spectrum = radial_ft(prof, xi_min=cfg.xi_min, xi_max=cfg.xi_max, n=cfg.points)
    # an independently sampled transform for the inverse step
    spectrum_b = radial_ft(prof, xi_min=cfg.xi_min, xi_max=cfg.xi_max, n=cfg.points // 2 + 1, order=12)
    Gu = nonlocal_gradient_spectral(u, spectrum)
    norm_u = np.linalg.norm(u.values)
    err_spec = np.linalg.norm(reconstruct(Gu, spectrum_b, u.values.mean()).values - u.values) / norm_u
    kernel, _ = construct_inversion(prof)
    err_real = np.linalg.norm(reconstruct_realspace(Gu, kernel.V_at).values - u.values) / norm_u
    curl = curl_residual(Gu)
    rows = [dict(kernel=kernel_label(spec), N=cfg.N, L=cfg.L, route="spectral", rel_l2_error=err_spec),
            dict(kernel=kernel_label(spec), N=cfg.N, L=cfg.L, route="realspace", rel_l2_error=err_real)]
    artifacts.write_csv(cfg.out / "representation.csv", rows, ["kernel", "N", "L", "route", "rel_l2_error"])
    write_snapshot(cfg.out / "gradient.bin", Gu.values, grid)
    write_axis_probes(cfg.out / "gradient_probes.csv", grid, Gu.values)
    checks = [
        _le("spectral_reconstruction", err_spec, _tol(cfg, 1e-3)),
        _le("realspace_reconstruction", err_real, 0.05),
        _le("curl_residual", curl, 1e-10),
    ]
    return checks, dict(kernel=kernel_label(spec), rows=rows, curl_residual=curl)


def run_limit(cfg: ExperimentConfig) -> tuple[list[Assertion], dict]:
    grid = Grid3(cfg.N, cfg.L)
    u = gaussian_field(grid)
    s_list = cfg.params or (0.9, 0.95, 0.99)
    rows = limit_s_to_1(u, s_list)
    artifacts.write_csv(cfg.out / "limit.csv", rows, ["s", "distance"])
    dist = [r["distance"] for r in rows]
    increase = max(np.diff(dist)) if len(dist) > 1 else -1.0
    checks = [_le("distance_at_largest_s", dist[-1], _tol(cfg, 0.05)),
              _le("distance_increase", increase, 0.0)]
    return checks, dict(rows=rows)


def _map(cfg, fn, items):
    if cfg.threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, items))


def run_sobolev_cmd(cfg: ExperimentConfig) -> tuple[list[Assertion], dict]:
    family = cfg.test_family or ("gaussians" if cfg.theorem == "1.2" else "dilations")
    specs = sobolev_kernels(cfg)

    def one(spec):
        return run_sobolev(SobolevConfig(cfg.theorem, [spec], family=family, params=cfg.params, p=cfg.p))

    results = _map(cfg, one, specs)
    rows = sorted((r for res in results for r in res["rows"]),
                  key=lambda r: (r["theorem"], r["kernel"], r["family"], r["param"], r["s"]))
    skipped = [s for res in results for s in res["skipped"]]
    artifacts.write_csv(cfg.out / f"sobolev_{cfg.theorem}.csv", rows, CSV_COLUMNS)
    limit = _tol(cfg, 3.0 if cfg.theorem == "1.2" else 5.0)
    summary, checks = {}, []
    groups = [None] if cfg.theorem == "1.2" else sorted({r["kernel"] for r in rows})
    for tid in sorted({r["theorem"] for r in rows}):
        for kern in groups:
            q = np.array([r["quotient"] for r in rows if r["theorem"] == tid and (kern is None or r["kernel"] == kern)])
            if q.size == 0:
                continue
            key = tid if kern is None else f"{tid} {kern}"
            spread = float(q.max() / q.min()) if np.all(np.isfinite(q)) and q.min() > 0 else np.inf
            summary[key] = dict(min=float(q.min()), max=float(q.max()), spread=spread)
            if not tid.endswith("-bestk"):
                checks.append(_le(f"spread {key}", spread, limit))
    artifacts.write_json(cfg.out / f"sobolev_{cfg.theorem}_summary.json",
                         dict(theorem=cfg.theorem, family=family, p=cfg.p, quotients=summary, skipped=skipped))
    return checks, dict(quotients=summary, skipped=skipped)


def run_oneil(cfg: ExperimentConfig) -> tuple[list[Assertion], dict]:
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.instances)

    def one(ss):
        v, F = random_oneil_instance(np.random.default_rng(ss))
        return oneil_check(v, F, slack=_tol(cfg, 1e-8))

    reports = _map(cfg, one, seeds)
    rows = [dict(instance=i, probes=len(r.tau), violations=len(r.violations), max_ratio=r.max_ratio)
            for i, r in enumerate(reports)]
    artifacts.write_csv(cfg.out / "oneil.csv", rows, ["instance", "probes", "violations", "max_ratio"])
    total = sum(len(r.violations) for r in reports)
    return [_le("oneil_violations", total, 0)], dict(rows=rows)


RUNNERS = dict(certify=run_certify, invert=run_invert, represent=run_represent, limit=run_limit,
               sobolev=run_sobolev_cmd, oneil=run_oneil)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI file with [kernel] [grid] [spectrum] [experiment]")
    common.add_argument("--out", metavar="DIR", type=Path, help="artifact directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--threads", type=int, help="worker threads for independent experiments")
    common.add_argument("--tol-override", type=float, dest="tol_override",
                        help="replace the primary tolerance of the selected experiment")
    common.add_argument("--kernel", choices=FAMILIES, help="kernel family (defaults for the rest)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="dhgrad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "sobolev":
            sp.add_argument("--theorem", choices=sorted(THEOREMS))
            sp.add_argument("--family", dest="test_family", choices=("gaussians", "bumps", "dilations"))
            sp.add_argument("--p", type=float)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plots":
        out = args.out or Path("dhgrad-out")
        try:
            made = emit_plots(out)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for path in made:
            print(path)
        return EXIT_OK
    overrides = {k: getattr(args, k, None) for k in ("out", "seed", "threads", "tol_override",
                                                        "theorem", "test_family", "p")}
    overrides["kernel.family"] = args.kernel
    log.info("running %s", args.command)
    try:
        cfg = load_config(args.command, args.config, overrides)
        cfg.out.mkdir(parents=True, exist_ok=True)
        checks, report = RUNNERS[args.command](cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (KernelRejected, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report["assertions"] = [c.as_dict() for c in checks]
    artifacts.write_json(cfg.out / f"{args.command}.json", report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (threshold {c.threshold:g})")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
