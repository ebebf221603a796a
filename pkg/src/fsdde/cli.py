"""Command-line front end.

Every subcommand prints one JSON report on stdout. Reports echo the full run
configuration, the package version and the seed, and are byte-identical for
identical arguments; wall-clock timings appear only with ``--timings``.

Exit codes: 0 all checks passed, 1 invariant violated, 2 numerical failure,
3 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .cocycle import CocycleEvaluator, cocycle_residual, remark1_counterexample, smooth_modulus_sweep
from .config import ParseError, load_system
from .fbm import FactorizationError, SamplePath, sample_fbm
from .fractional import (
    IntegralMethod,
    MethodDisagreement,
    RoughnessWarning,
    integral_bound_check,
    shift_integral_identity_check,
    weyl_norms,
    young_integral,
)
from .grid import GridAlignmentError, GridFunction, PathGrid
from .holder import holder_norm, holder_seminorm, lambda_norm, little_holder_diagnostic, sup_norm, windowed_seminorm
from .sdde import DelaySystem, SolverConfig, SolverError, solve

EXIT_OK, EXIT_VIOLATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 3

MIN_GRID, MAX_GRID = 2**4, 2**14
# pair scans of the fractional norms are O(N^2) per call; coarsen above this
PAIR_SCAN_NODES = 1024
SEED_MAX = 2**64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _seed(text: str) -> int:
    try:
        s = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= s <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {s}")
    return s


def _grid(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid size must be an integer, got {text!r}") from None
    if n < MIN_GRID or n > MAX_GRID or n & (n - 1):
        raise argparse.ArgumentTypeError(f"grid size must be a power of two in [{MIN_GRID}, {MAX_GRID}], got {n}")
    return n


def _positive(text: str) -> float:
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def _nonnegative(text: str) -> float:
    x = float(text)
    if not (math.isfinite(x) and x >= 0):
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return x


def thread_cap() -> int:
    """Worker count from ``FSDDE_THREADS`` (default: CPU count)."""
    raw = os.environ.get("FSDDE_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"FSDDE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"FSDDE_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass
class RunConfig:
    subcommand: str
    hurst: float = 0.75
    alpha: float | None = 0.35
    horizon: float = 1.0
    grid: int = 2**10
    seed: int = 0
    system: str | None = None
    output: str | None = None
    format: str = "csv"
    stride: int | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not 0.5 < self.hurst < 1.0:
            raise UsageError(f"hurst must lie in (1/2, 1), got {self.hurst}")
        if self.alpha is not None and not 1.0 - self.hurst < self.alpha < 0.5:
            raise UsageError(f"alpha must lie in (1 - H, 1/2) = ({1.0 - self.hurst:g}, 0.5), got {self.alpha}")
        if self.stride is not None and (self.stride < 1 or self.grid % self.stride):
            raise UsageError(f"stride must be a positive divisor of the grid size, got {self.stride}")

    @property
    def h(self) -> float:
        return self.horizon / self.grid

    def echo(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return {k: v for k, v in d.items() if v is not None}


def _scan_stride(cfg: RunConfig, n: int) -> int:
    if cfg.stride is not None:
        return cfg.stride
    return max(1, -(-n // PAIR_SCAN_NODES))


def _driver(cfg: RunConfig, seed: int | None = None) -> SamplePath:
    return sample_fbm(cfg.hurst, PathGrid.over(0.0, cfg.horizon, cfg.grid), cfg.seed if seed is None else seed)


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(path, times: np.ndarray, columns: np.ndarray, names: list[str]) -> None:
    columns = np.asarray(columns).reshape(len(times), -1)
    lines = [",".join(["time", *names])]
    for t, row in zip(times, columns):
        lines.append(",".join([_fmt(t), *(_fmt(v) for v in row)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _series(times, values) -> dict:
    return {"time": [float(t) for t in times], "values": np.asarray(values).tolist()}


def _eta(spec: str, grid: PathGrid, d: int) -> GridFunction:
    kind, _, raw = spec.partition(":")
    try:
        v = float(raw) if raw else 1.0
    except ValueError:
        raise UsageError(f"bad initial-segment parameter in {spec!r}") from None
    s = grid.times
    if kind == "const":
        col = np.full_like(s, v)
    elif kind == "ramp":
        col = v + s
    elif kind == "sine":
        col = v + np.sin(2.0 * np.pi * s / (grid.t_end - grid.t0))
    else:
        raise UsageError(f"unknown initial segment {kind!r}; use const[:c], ramp[:c] or sine[:c]")
    return GridFunction(grid, np.repeat(col[:, None], d, axis=1))


def _history_grid(sys_: DelaySystem, h: float) -> PathGrid:
    try:
        k = PathGrid(0.0, h, 0).steps(sys_.r, what="delay")
    except GridAlignmentError as exc:
        raise UsageError(str(exc)) from None
    return PathGrid(-k * h, h, k)


# subcommands return (report, exit code)

def cmd_fbm_sample(cfg: RunConfig, args) -> tuple[dict, int]:
    omega = _driver(cfg)
    beta = cfg.hurst - 0.1
    stride = _scan_stride(cfg, omega.grid.n)
    report = {
        "omega_T": float(omega.values[-1]),
        "sup_norm": sup_norm(omega.as_function()),
        "holder_exponent": beta,
        "holder_seminorm": holder_seminorm(omega.as_function(), beta, stride=stride),
        "stride": stride,
    }
    if cfg.output:
        if cfg.format == "csv":
            write_csv(cfg.output, omega.times, omega.values, ["value"])
        else:
            Path(cfg.output).write_text(json.dumps(_series(omega.times, omega.values)) + "\n", encoding="utf-8")
        report["output"] = cfg.output
    elif cfg.format == "json":
        report["path"] = _series(omega.times, omega.values)
    return report, EXIT_OK


def read_csv(path) -> GridFunction:
    """Load a ``time, value...`` CSV on a uniform grid."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if data.shape[0] < 2 or data.shape[1] < 2:
        raise UsageError(f"{path} needs a header, at least two rows and a value column")
    t = data[:, 0]
    h = (t[-1] - t[0]) / (len(t) - 1)
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0.0):
        raise UsageError(f"{path} is not on a uniform grid")
    return GridFunction(PathGrid(float(t[0]), float(h), len(t) - 1), data[:, 1:])


def _file_norms(cfg: RunConfig, args) -> tuple[dict, int]:
    f = read_csv(args.input)
    beta = args.beta if args.beta is not None else 1.0 - cfg.alpha
    stride = cfg.stride or 1
    report = {
        "beta": beta,
        "sup": sup_norm(f),
        "seminorm": holder_seminorm(f, beta, stride=stride),
        "stride": stride,
        "lower_bound": stride > 1,
    }
    if args.delta is not None:
        report["delta"] = args.delta
        if args.delta <= f.grid.h * stride:
            report["windowed"] = 0.0
            report["window_below_resolution"] = True
        else:
            report["windowed"] = windowed_seminorm(f, beta, args.delta, stride=stride)
    if args.lam is not None:
        report["lambda"] = args.lam
        report["lambda_norm"] = lambda_norm(f, beta, args.lam, stride=stride)
    return report, EXIT_OK


def cmd_norms(cfg: RunConfig, args) -> tuple[dict, int]:
    if args.input:
        return _file_norms(cfg, args)
    omega = _driver(cfg)
    f = omega.as_function()
    beta = 1.0 - cfg.alpha
    stride = _scan_stride(cfg, omega.grid.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RoughnessWarning)
        nr = weyl_norms(f, omega, cfg.alpha, stride=stride)
    deltas = [2.0**-k for k in range(1, 7)]
    coarse = f.coarsen(stride) if stride > 1 else f
    lh = little_holder_diagnostic(coarse, beta, deltas)
    bound = nr.w_1ma_inf / (math.gamma(1.0 - cfg.alpha) * math.gamma(cfg.alpha))
    report = {
        "beta": beta,
        "sup_norm": sup_norm(f),
        "holder_norm": holder_norm(f, beta, stride=stride),
        "lambda_alpha": nr.lambda_alpha,
        "w_1malpha_inf": nr.w_1ma_inf,
        "w_alpha1_of_omega": nr.w_alpha1,
        "lambda_alpha_bound": bound,
        "stride": stride,
        "lower_bound": stride > 1,
        "little_holder": {"deltas": lh.deltas, "values": lh.values, "slope": lh.slope, "status": lh.status},
        "checks": {"lambda_alpha <= w_1malpha_inf / (Gamma(1-alpha) Gamma(alpha))": nr.chain_holds},
    }
    return report, EXIT_OK if nr.chain_holds else EXIT_VIOLATION


_INTEGRANDS = {
    "one": lambda t, w: np.ones_like(t),
    "sin": lambda t, w: np.sin(t),
    "omega": lambda t, w: w,
}


def cmd_integral_check(cfg: RunConfig, args) -> tuple[dict, int]:
    omega = _driver(cfg)
    f = GridFunction(omega.grid, _INTEGRANDS[args.integrand](omega.times, omega.values)[:, None])
    T = omega.horizon
    ys = float(young_integral(f, omega, 0.0, T)[0])
    ff = float(young_integral(f, omega, 0.0, T, cfg.alpha, IntegralMethod.FRACTIONAL_FORMULA)[0])
    scale = max(abs(ys), abs(ff), float(np.ptp(omega.values)) * sup_norm(f))
    rel = abs(ff - ys) / scale if scale > 0 else 0.0
    stride = _scan_stride(cfg, omega.grid.n)
    sub_f, sub_w = (f.coarsen(stride), omega.coarsen(stride)) if stride > 1 else (f, omega)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RoughnessWarning)
        bound = integral_bound_check(sub_f, sub_w, cfg.alpha)
    c = omega.grid.h * (omega.grid.n // 4)
    shift = shift_integral_identity_check(f, omega, c, T, c)
    checks = {
        "methods_agree": rel <= args.rtol,
        "first_bound": bound.first_holds,
        "second_bound": bound.second_holds,
        "shift_identity": shift <= 1e-10,
    }
    report = {
        "integrand": args.integrand,
        "young_sums": ys,
        "fractional_formula": ff,
        "relative_gap": rel,
        "rtol": args.rtol,
        "bound": bound.as_dict(),
        "bound_stride": stride,
        "shift_residual": shift,
        "shift_tolerance": 1e-10,
        "checks": checks,
    }
    return report, EXIT_OK if all(checks.values()) else EXIT_VIOLATION


def _solver_cfg(cfg: RunConfig, args) -> SolverConfig:
    return SolverConfig(alpha=cfg.alpha, tol=args.tol, max_iter=args.max_iter)


def _simulate_one(sys_: DelaySystem, cfg: RunConfig, args, seed: int) -> dict:
    omega = _driver(cfg, seed)
    eta = _eta(args.eta, _history_grid(sys_, omega.grid.h), sys_.d)
    sol = solve(sys_, eta, omega, _solver_cfg(cfg, args))
    return {"seed": seed, "solution": sol}


def _summary(sol) -> dict:
    return {
        "iterations": sol.iterations,
        "final_residual": sol.final_residual,
        "tol": sol.tol,
        "contraction_estimate": sol.contraction_estimate,
        "lambda_used": sol.lambda_used,
        "escalations": sol.escalations,
        "audit_ok": all(a["ok"] for a in sol.audit),
        "X_T": sol.path.values[-1].tolist(),
    }


def cmd_simulate(cfg: RunConfig, args) -> tuple[dict, int]:
    sys_ = load_system(cfg.system)
    sol = _simulate_one(sys_, cfg, args, cfg.seed)["solution"]
    report = {"system_constants": sys_.constants, **_summary(sol)}
    diag = {"config": cfg.echo(), "version": _version(), **sol.diagnostics()}
    if cfg.output:
        out = Path(cfg.output)
        names = [f"x{i}" for i in range(sys_.d)] if sys_.d > 1 else ["x"]
        if cfg.format == "csv":
            write_csv(out, sol.path.times, sol.path.values, names)
        else:
            out.write_text(json.dumps(_series(sol.path.times, sol.path.values)) + "\n", encoding="utf-8")
        sidecar = out.with_suffix(".json") if out.suffix != ".json" else out.with_name(out.stem + ".diagnostics.json")
        sidecar.write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        report["output"] = str(out)
        report["diagnostics"] = str(sidecar)
    ok = sol.contraction_estimate < 1.0
    report["checks"] = {"contraction_estimate < 1": ok}
    return report, EXIT_OK if ok else EXIT_VIOLATION


def cmd_cocycle_check(cfg: RunConfig, args) -> tuple[dict, int]:
    sys_ = load_system(cfg.system)
    if args.t + args.tau > cfg.horizon * (1 + 1e-12):
        raise UsageError(f"t + tau = {args.t + args.tau} exceeds the horizon {cfg.horizon}")
    omega = _driver(cfg)
    eta = _eta(args.eta, _history_grid(sys_, omega.grid.h), sys_.d)
    ev = CocycleEvaluator(sys_, _solver_cfg(cfg, args))
    rep = cocycle_residual(args.t, args.tau, omega, eta, sys_, evaluator=ev)
    sol = ev.solution(omega, eta, args.t + args.tau) if args.t + args.tau > 0 else None
    tol = sol.tol if sol is not None else 0.0
    limit = 2.0 * tol if args.tau == 0 else args.tolerance
    ok = rep.residual <= limit
    report = {
        **rep.as_dict(),
        "tolerance": limit,
        "solver_tol": tol,
        "checks": {"residual <= tolerance": ok},
    }
    return report, EXIT_OK if ok else EXIT_VIOLATION


def cmd_counterexample(cfg: RunConfig, args) -> tuple[dict, int]:
    rep = remark1_counterexample(cfg.alpha, args.t, args.tau, cfg.grid)
    # gaps 2^-k for k = 2..7 that the grid resolves
    ks = [k for k in range(2, 8) if 2**k <= cfg.grid]
    sweep = [(g, m) for g, m in smooth_modulus_sweep(cfg.alpha, args.tau, ks, cfg.grid) if args.tau + g <= 1.0]
    decreasing = all(b < a for (_, a), (_, b) in zip(sweep, sweep[1:]))
    checks = {
        "rough_modulus >= 1": rep.rough_holds,
        "eta_norm == 2": abs(rep.eta_norm - 2.0) <= 1e-12,
        "smooth_modulus decreasing": decreasing,
    }
    report = {
        **rep.as_dict(),
        "eta_norm_tolerance": 1e-12,
        "smooth_sweep": [{"gap": g, "modulus": m} for g, m in sweep],
        "checks": checks,
    }
    return report, EXIT_OK if all(checks.values()) else EXIT_VIOLATION


def cmd_sweep(cfg: RunConfig, args) -> tuple[dict, int]:
    sys_ = load_system(cfg.system)
    seeds = [cfg.seed + i for i in range(args.paths)]
    if seeds[-1] > SEED_MAX:
        raise UsageError("seed range exceeds 64 bits")

    def run(seed):
        try:
            return seed, _summary(_simulate_one(sys_, cfg, args, seed)["solution"]), None
        except SolverError as exc:
            return seed, None, str(exc)

    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(seeds))) as pool:
        results = sorted(pool.map(run, seeds), key=lambda r: r[0])
    rows, failures = [], []
    for seed, summary, err in results:
        if err is None:
            rows.append({"seed": seed, **summary})
        else:
            failures.append({"seed": seed, "error": err})
    x_t = np.array([r["X_T"] for r in rows]) if rows else np.zeros((0, sys_.d))
    report = {
        "paths": args.paths,
        "runs": rows,
        "failures": failures,
        "mean_X_T": x_t.mean(axis=0).tolist() if rows else None,
        "checks": {"all_converged": not failures, "contraction_estimate < 1": all(r["contraction_estimate"] < 1 for r in rows)},
    }
    if failures:
        return report, EXIT_NUMERICAL
    return report, EXIT_OK if all(report["checks"].values()) else EXIT_VIOLATION


def _common(p: argparse.ArgumentParser, *, alpha=True, system=False, output=False) -> None:
    p.add_argument("--hurst", type=float, default=0.75, help="Hurst index H in (1/2, 1)")
    if alpha:
        p.add_argument("--alpha", type=float, default=0.35, help="fractional order in (1 - H, 1/2)")
    p.add_argument("--horizon", type=_positive, default=1.0)
    p.add_argument("--grid", type=_grid, default=2**10, help="number of steps on [0, horizon]")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--stride", "--subsample", dest="stride", type=int, default=None,
                   help="subsample stride for O(N^2) pair scans; results become lower bounds")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
    if system:
        p.add_argument("--system", required=True, help="system file")
        p.add_argument("--eta", default="const:1", help="initial segment: const[:c], ramp[:c] or sine[:c]")
        p.add_argument("--tol", type=_positive, default=1e-9)
        p.add_argument("--max-iter", type=int, default=500)
    if output:
        p.add_argument("--output", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsdde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("fbm-sample", help="sample one fBm path")
    _common(p, alpha=False, output=True)
    p.set_defaults(handler=cmd_fbm_sample)

    p = sub.add_parser("norms", help="Hoelder and Weyl-type norms of a sampled path or a CSV file")
    _common(p)
    p.add_argument("--input", default=None, help="CSV (time, values...) to analyse instead of a sampled path")
    p.add_argument("--beta", type=float, default=None, help="Hoelder exponent for --input (default 1 - alpha)")
    p.add_argument("--delta", type=_positive, default=None, help="window for the windowed seminorm")
    p.add_argument("--lambda", dest="lam", type=_nonnegative, default=None, help="weight of the lambda-norm")
    p.set_defaults(handler=cmd_norms)

    p = sub.add_parser("integral-check", help="compare integral methods and check the integral bound")
    _common(p)
    p.add_argument("--integrand", choices=sorted(_INTEGRANDS), default="sin")
    p.add_argument("--rtol", type=_positive, default=1e-2)
    p.set_defaults(handler=cmd_integral_check)

    p = sub.add_parser("simulate", help="solve a delay equation along one path")
    _common(p, system=True, output=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("cocycle-check", help="residual of the cocycle identity")
    _common(p, system=True)
    p.add_argument("--t", type=_nonnegative, required=True)
    p.add_argument("--tau", type=_nonnegative, required=True)
    p.add_argument("--tolerance", type=_positive, default=5e-2)
    p.set_defaults(handler=cmd_cocycle_check)

    p = sub.add_parser("counterexample", help="time discontinuity for a non-little-Hoelder initial segment")
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--t", type=_positive, default=0.5)
    p.add_argument("--tau", type=_positive, default=0.25)
    p.add_argument("--grid", type=_grid, default=2**8)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(handler=cmd_counterexample)

    p = sub.add_parser("sweep", help="solve along many seeded paths in parallel")
    _common(p, system=True)
    p.add_argument("--paths", type=int, default=8)
    p.set_defaults(handler=cmd_sweep)
    return parser


def _run_config(args) -> RunConfig:
    known = {"hurst", "alpha", "horizon", "grid", "seed", "system", "output", "format", "stride"}
    skip = known | {"handler", "subcommand", "timings"}
    cfg = RunConfig(
        args.subcommand,
        **{k: getattr(args, k) for k in known if hasattr(args, k)},
        extra={k: v for k, v in sorted(vars(args).items()) if k not in skip},
    )
    if args.subcommand == "fbm-sample":
        cfg.alpha = None
    if args.subcommand == "counterexample":
        # the driver is irrelevant for the zero system; only alpha is checked
        if not 0.0 < cfg.alpha < 0.5:
            raise UsageError(f"alpha must lie in (0, 1/2), got {cfg.alpha}")
        cfg.hurst = 1.0 - cfg.alpha / 2.0
    if getattr(args, "beta", None) is not None and not 0.0 < args.beta <= 1.0:
        raise UsageError(f"beta must lie in (0, 1], got {args.beta}")
    if args.subcommand == "sweep" and args.paths < 1:
        raise UsageError("--paths must be at least 1")
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    started = time.perf_counter()
    try:
        cfg = _run_config(args)
        thread_cap()
        report, code = args.handler(cfg, args)
    except (UsageError, ParseError, GridAlignmentError, FileNotFoundError) as exc:
        print(f"fsdde {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, FactorizationError, MethodDisagreement, FloatingPointError) as exc:
        out = {"subcommand": args.subcommand, "error": str(exc), "exit_code": EXIT_NUMERICAL}
        residuals = getattr(exc, "residuals", None)
        if residuals is not None:
            out["residuals"] = residuals
        print(json.dumps(out, indent=2, sort_keys=True))
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"fsdde {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = {
        "subcommand": cfg.subcommand,
        "version": _version(),
        "seed": cfg.seed,
        "config": cfg.echo(),
        "result": report,
        "passed": code == EXIT_OK,
        "exit_code": code,
    }
    if args.timings:
        out["timings"] = {"wall_seconds": time.perf_counter() - started}
    print(json.dumps(out, indent=2, sort_keys=True, default=_json_default))
    return code


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


if __name__ == "__main__":
    sys.exit(main())
