"""``hclab solve|verify|bench --config <path> [--out <dir>] [--suite <sel>]``.

Config files are flat text, one ``section.key = value`` per line, ``#``
starts a comment.  Exit codes: 0 success, 1 configuration or usage error,
2 non-convergence (partial outputs are still written), 3 failed checks or
benchmark mismatch.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import ContinuationError, ConvergenceError, HclabError
from .functionals import rayleigh, rescale_to_solution
from .grid import LogGrid, write_field_csv
from .params import ProblemParams, make_params
from .riesz import RieszOperator
from .solver import SolveOptions, continuation, default_init, minimize, random_init
from .suite import SUITES, run_suite
from . import verify as V

__all__ = ["RunConfig", "load_config", "parse_config", "main", "cmd_solve", "cmd_verify", "cmd_bench"]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_FAIL = 0, 1, 2, 3
SUITE_CHOICES = ("all",) + tuple(SUITES)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    # problem
    N: int = 3
    alpha: float = 2.0
    theta: float = 0.0
    # grid
    tmin: float = -12.0
    tmax: float = 12.0
    n: int = 2048
    symmetric: bool = True
    # solver
    step: float = 1.0
    max_iter: int = 400
    tol: float = 1e-6
    continuation_steps: int = 0
    seed: int = 0
    init: str = "default"
    gauge: bool = True
    # output
    directory: Optional[str] = None
    formats: List[str] = field(default_factory=lambda: ["csv", "json"])
    # bench
    sizes: List[int] = field(default_factory=lambda: [1024, 4096, 16384])
    dense_max_n: int = 16384
    repeats: int = 3

    def params(self) -> ProblemParams:
        return make_params(self.N, self.alpha, self.theta)

    def grid(self) -> LogGrid:
        if self.symmetric:
            if self.tmin != -self.tmax:
                raise ConfigError(f"grid.symmetric needs tmin = -tmax, got [{self.tmin}, {self.tmax}]")
            return LogGrid.symmetric(self.tmax, self.n, self.N)
        return LogGrid(self.tmin, self.tmax, self.n, self.N)

    def options(self) -> SolveOptions:
        return SolveOptions(
            step=self.step,
            max_iter=self.max_iter,
            tol=self.tol,
            gauge=self.gauge,
            continuation_steps=self.continuation_steps,
            seed=self.seed,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _list(conv):
    return lambda text: [conv(s) for s in text.replace(",", " ").split()]


_KEYS = {
    "problem.N": ("N", _int),
    "problem.alpha": ("alpha", float),
    "problem.theta": ("theta", float),
    "grid.tmin": ("tmin", float),
    "grid.tmax": ("tmax", float),
    "grid.n": ("n", _int),
    "grid.symmetric": ("symmetric", _bool),
    "solver.step": ("step", float),
    "solver.max_iter": ("max_iter", _int),
    "solver.tol": ("tol", float),
    "solver.continuation_steps": ("continuation_steps", _int),
    "solver.seed": ("seed", _int),
    "solver.init": ("init", str),
    "solver.gauge": ("gauge", _bool),
    "output.directory": ("directory", str),
    "output.formats": ("formats", _list(str)),
    "bench.sizes": ("sizes", _list(_int)),
    "bench.dense_max_n": ("dense_max_n", _int),
    "bench.repeats": ("repeats", _int),
}


def parse_config(text: str) -> RunConfig:
    """Parse ``section.key = value`` lines; unknown keys and bad values raise ConfigError."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, conv = _KEYS[key]
        try:
            setattr(cfg, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    if cfg.init not in ("default", "random"):
        raise ConfigError(f"solver.init must be 'default' or 'random', got {cfg.init!r}")
    # re-validate every parameter invariant at load
    cfg.params()
    cfg.grid()
    cfg.options()
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _out_dir(cfg: RunConfig, override: Optional[str]) -> Path:
    if override:
        d = Path(override)
    elif cfg.directory:
        d = Path(cfg.directory)
    else:
        d = Path("out") / _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2))


def _emit_solution(cfg: RunConfig, out: Path, res, op: RieszOperator, legs=None) -> None:
    params = res.params
    write_field_csv(res.field, out / "solution.csv")
    res.write_trace_csv(out / "trace.csv")
    payload = {"config": cfg.as_dict(), **res.as_dict(), "rayleigh": res.s_theta}
    if legs is not None:
        payload["continuation"] = [
            {"theta": r.params.theta, "s_theta": r.s_theta, "iterations": r.iterations} for r in legs
        ]
    if res.converged:
        w = rescale_to_solution(params, res.field, res.s_theta)
        write_field_csv(w, out / "solution_rescaled.csv")
        payload["energy"] = rayleigh(params, op, res.field).as_dict()
    _write_json(out / "result.json", payload)
    try:
        fit = V.decay_fit(res.field)
        _write_json(out / "decay_fit.json", fit.as_dict())
    except HclabError as exc:
        _write_json(out / "decay_fit.json", {"error": str(exc)})
    cert = V.bound_check(params, res.field)
    _write_json(out / "bound.json", cert.as_dict())
    m = V.model_profile(params, res.field.grid).values
    np.savetxt(out / "ratio.csv", np.column_stack([res.field.grid.r, res.field.values / m]),
               delimiter=",", header="r,ratio", comments="", fmt="%.17g")


def cmd_solve(cfg: RunConfig, out_dir: Optional[str] = None) -> int:
    params, grid, opts = cfg.params(), cfg.grid(), cfg.options()
    out = _out_dir(cfg, out_dir)
    op = RieszOperator(params, grid)
    init = random_init(params, grid, cfg.seed) if cfg.init == "random" else default_init(params, grid)
    legs = None
    try:
        if cfg.continuation_steps > 0:
            legs = continuation(params, lambda p: op, opts, init)
            res = legs[-1]
        else:
            res = minimize(params, op, init, opts)
    except ContinuationError as exc:
        partial = getattr(exc.cause, "result", None)
        if partial is not None:
            _emit_solution(cfg, out, partial, op, exc.results)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except ConvergenceError as exc:
        if exc.result is not None:
            _emit_solution(cfg, out, exc.result, op)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    _emit_solution(cfg, out, res, op, legs)
    print(f"s_theta = {res.s_theta:.12g}  iterations = {res.iterations}  residual = {res.residual:.3e}  -> {out}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suite: str = "all", out_dir: Optional[str] = None) -> int:
    if suite not in SUITE_CHOICES:
        print(f"error: unknown suite {suite!r}; choose from {', '.join(SUITE_CHOICES)}", file=sys.stderr)
        return EXIT_CONFIG
    params, grid, opts = cfg.params(), cfg.grid(), cfg.options()
    out = _out_dir(cfg, out_dir)
    records = run_suite(suite, params, grid, opts)
    failed = [r.name for r in records if not r.passed]
    _write_json(out / "report.json", {
        "suite": suite,
        "config": cfg.as_dict(),
        "checks": [r.as_dict() for r in records],
        "passed": len(records) - len(failed),
        "failed": failed,
    })
    for r in records:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:36s} value={r.value:.3e} tol={r.tolerance:.1e}")
    print(f"{len(records) - len(failed)}/{len(records)} checks passed -> {out / 'report.json'}")
    return EXIT_OK if not failed else EXIT_FAIL


def _time_ms(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return 1e3 * best


def cmd_bench(cfg: RunConfig, out_dir: Optional[str] = None) -> int:
    params = cfg.params()
    out = _out_dir(cfg, out_dir)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    status = EXIT_OK
    for n in cfg.sizes:
        grid = LogGrid.symmetric(cfg.tmax, n, params.N)
        op = RieszOperator(params, grid)
        base = default_init(params, grid).values ** params.pbar
        f = grid.field(base * (1.0 + 0.1 * rng.standard_normal(n)))
        fft_vals = op.apply_fft(f).values
        fft_ms = _time_ms(lambda: op.apply_fft(f), cfg.repeats)
        row = {"n": n, "fft_ms": fft_ms}
        if n > cfg.dense_max_n:
            row.update(dense_ms=None, max_rel_err=None, dense_skipped=True)
        else:
            dense_vals = op.apply_dense(f).values
            row["dense_ms"] = _time_ms(lambda: op.apply_dense(f), cfg.repeats)
            err = float(np.max(np.abs(dense_vals - fft_vals)) / np.max(np.abs(dense_vals)))
            row.update(max_rel_err=err, dense_skipped=False)
            if not err <= 1e-7:
                status = EXIT_FAIL
        rows.append(row)
        dense = "skipped" if row["dense_skipped"] else f"{row['dense_ms']:.2f} ms"
        err_s = "-" if row["max_rel_err"] is None else f"{row['max_rel_err']:.2e}"
        print(f"n={n:6d}  dense={dense:>12s}  fft={fft_ms:.2f} ms  max_rel_err={err_s}")
    _write_json(out / "bench.json", {"config": cfg.as_dict(), "rows": rows})
    return status


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hclab", description="Radial Hardy-Choquard extremal solver and checks.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "compute the extremal and write profiles, trace and diagnostics"),
        ("verify", "run the verification checks and write a JSON report"),
        ("bench", "time dense against FFT Riesz products"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="flat 'section.key = value' config file")
        p.add_argument("--out", default=None, help="output directory (default ./out/<timestamp>)")
        if name == "verify":
            p.add_argument("--suite", default="all", help=f"one of {', '.join(SUITE_CHOICES)}")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.command == "solve":
            return cmd_solve(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, args.out)
        return cmd_bench(cfg, args.out)
    except (ConfigError, HclabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
