"""Batch command-line front end.

Subcommands: ``denoise`` (one model, one image), ``compare`` (both models on
the same noisy input), ``sweep`` (one model over an epsilon list),
``gamma1d`` (1-D limit experiment), ``check-assumptions`` (model-family
admissibility report).  Options can come from a flat ``key=value`` config
file via ``--config``; explicit flags win.  Machine artifacts go to files
under ``--out``; progress goes to stderr every 50 outer iterations.

Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

from .energies import check_assumptions
from .gamma1d import SWEEP_CSV_HEADER, gamma_sweep
from .images import (
    METRICS_CSV_HEADER,
    ImageFormatError,
    ImageRecord,
    add_gaussian_noise,
    load_gray,
    metrics,
    save_gray,
    synth_disk,
    synth_step_1d,
)
from .palm import RunReport, RunRow, SolverParams, solve

__all__ = ["main", "run", "RunConfig", "ConfigError", "NumericalFailure"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    """Invalid or missing configuration."""


class NumericalFailure(RuntimeError):
    """Non-finite values produced by a solver run."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved options for one command invocation."""

    command: str
    input: str | None = None
    out: str | None = None
    model: str = "bv"
    eps: float | None = None
    eps_bv: float | None = None
    eps_h1: float | None = None
    eps_list: tuple[float, ...] = ()
    sigma: float = 0.0
    seed: int = 0
    alpha: float = 1.75e-4
    beta: float = 1.0
    gamma: float = 3e-5
    theta: float = 0.99
    tol1: float = 1e-3
    tol2: float = 1e-5
    maxit: int = 10_000
    max_inner: int = 5_000
    c: float = 20.0
    band: float = 0.05
    fmt: str = "png"
    workers: int = 4

    def to_file(self, path) -> None:
        lines = []
        for f in dc_fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if f.name == "eps_list":
                if not val:
                    continue
                val = ",".join(str(x) for x in val)
            lines.append(f"{f.name}={val}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


_FLOAT_KEYS = {"eps", "eps_bv", "eps_h1", "sigma", "alpha", "beta", "gamma",
               "theta", "tol1", "tol2", "c", "band"}
_INT_KEYS = {"seed", "maxit", "max_inner", "workers"}
_STR_KEYS = {"command", "input", "out", "model", "fmt"}

# Lab-scale defaults for the 1-D limit experiment: large fidelity pins u to
# the signal so the energy gap isolates the contour terms.
_COMMAND_DEFAULTS: dict[str, dict] = {
    "gamma1d": {
        "alpha": 1e-4,
        "beta": 1e3,
        "gamma": 1e-2,
        "eps_list": (4e-2, 2e-2, 1e-2),
    },
    "check-assumptions": {"eps_list": (0.5, 0.2, 0.1, 0.05, 0.01)},
}


def _convert(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key == "eps_list":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if key in _STR_KEYS:
        return raw
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_file(path) -> dict:
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="ascii")
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"config file not found: {path}") from exc
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        values[key.strip()] = _convert(key.strip(), raw.strip())
    return values


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge precedence: explicit flag > config file > per-command default."""
    file_values = parse_config_file(args.config) if args.config else {}
    merged = dict(_COMMAND_DEFAULTS.get(args.command, {}))
    merged.update({k: v for k, v in file_values.items() if k != "command"})
    for f in dc_fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            merged[f.name] = _convert(f.name, flag) if isinstance(flag, str) and f.name == "eps_list" else flag
    merged["command"] = args.command
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_input(source: str) -> ImageRecord:
    """Load a file path or build a synthetic phantom from a descriptor.

    Descriptors: ``synth:const:N:VALUE`` and ``synth:disk:N:RADIUS:IN:OUT``.
    """
    if not source.startswith("synth:"):
        return load_gray(source)
    parts = source.split(":")
    try:
        kind = parts[1]
        if kind == "const":
            n, value = int(parts[2]), float(parts[3])
            return synth_disk(n, 0.25, value, value)
        if kind == "disk":
            n, r, vin, vout = int(parts[2]), float(parts[3]), float(parts[4]), float(parts[5])
            return synth_disk(n, r, vin, vout)
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"malformed synthetic descriptor {source!r}") from exc
    raise ConfigError(f"unknown synthetic kind in {source!r}")


def _solver_params(cfg: RunConfig, model: str, eps: float, h: float) -> SolverParams:
    return SolverParams(
        alpha=cfg.alpha,
        beta=cfg.beta,
        gamma=cfg.gamma,
        epsilon=eps,
        h=h,
        model=model,
        theta=cfg.theta,
        tol1=cfg.tol1,
        tol2=cfg.tol2,
        max_outer=cfg.maxit,
        max_inner=cfg.max_inner,
        seed=cfg.seed,
    )


def _progress(row: RunRow) -> None:
    if row.it % 50 == 0:
        print(
            f"  it {row.it:5d}  energy {row.energy:.6e}  inner {row.inner_iters:4d}  "
            f"du {row.du_inf:.2e}  dv {row.dv_inf:.2e}",
            file=sys.stderr,
        )


def _check_finite(u: np.ndarray, v: np.ndarray, report: RunReport) -> None:
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise NumericalFailure("non-finite samples in solver output")
    if report.rows and not np.isfinite(report.rows[-1].energy):
        raise NumericalFailure(f"non-finite energy at iteration {report.rows[-1].it}")


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) in (None, ()):
            raise ConfigError(f"--{name.replace('_', '-')} is required for {cfg.command}")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_one(g_noisy: ImageRecord, cfg: RunConfig, model: str, eps: float):
    params = _solver_params(cfg, model, eps, g_noisy.h)
    u, v, report = solve(g_noisy.field, params, progress=_progress)
    _check_finite(u, v, report)
    return u, v, report


def cmd_denoise(cfg: RunConfig) -> int:
    _require(cfg, "input", "out", "eps")
    out = _outdir(cfg)
    clean = load_input(cfg.input)
    noisy = add_gaussian_noise(clean, cfg.sigma, cfg.seed)
    u, v, report = _run_one(noisy, cfg, cfg.model, cfg.eps)

    save_gray(noisy.field, out / f"g.{cfg.fmt}", cfg.fmt)
    save_gray(u, out / f"u.{cfg.fmt}", cfg.fmt)
    save_gray(v, out / f"v.{cfg.fmt}", cfg.fmt)
    report.to_csv(out / "run.csv")
    m = metrics(u, v, clean.field, noisy.field, cfg.band)
    (out / "metrics.csv").write_text(
        METRICS_CSV_HEADER + "\n" + m.to_csv() + "\n", encoding="ascii"
    )
    print(f"{cfg.command}: {report.status} after {len(report.rows)} iterations", file=sys.stderr)
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    _require(cfg, "input", "out", "eps_bv", "eps_h1")
    out = _outdir(cfg)
    clean = load_input(cfg.input)
    noisy = add_gaussian_noise(clean, cfg.sigma, cfg.seed)

    lines = ["model," + METRICS_CSV_HEADER]
    for model, eps in (("bv", cfg.eps_bv), ("h1", cfg.eps_h1)):
        u, v, report = _run_one(noisy, cfg, model, eps)
        save_gray(u, out / f"{model}_u.{cfg.fmt}", cfg.fmt)
        save_gray(v, out / f"{model}_v.{cfg.fmt}", cfg.fmt)
        report.to_csv(out / f"run_{model}.csv")
        m = metrics(u, v, clean.field, noisy.field, cfg.band)
        lines.append(f"{model},{m.to_csv()}")
    (out / "compare.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    _require(cfg, "input", "out", "eps_list")
    out = _outdir(cfg)
    clean = load_input(cfg.input)
    noisy = add_gaussian_noise(clean, cfg.sigma, cfg.seed)

    def one(eps: float) -> str:
        u, v, report = _run_one(noisy, cfg, cfg.model, eps)
        save_gray(u, out / f"u_{eps}.{cfg.fmt}", cfg.fmt)
        save_gray(v, out / f"v_{eps}.{cfg.fmt}", cfg.fmt)
        report.to_csv(out / f"run_{eps}.csv")
        m = metrics(u, v, clean.field, noisy.field, cfg.band)
        return f"{eps},{m.to_csv()}"

    with ThreadPoolExecutor(max_workers=max(1, min(cfg.workers, len(cfg.eps_list)))) as pool:
        rows = list(pool.map(one, cfg.eps_list))
    (out / "sweep.csv").write_text(
        "eps," + METRICS_CSV_HEADER + "\n" + "\n".join(rows) + "\n", encoding="ascii"
    )
    return EXIT_OK


def cmd_gamma1d(cfg: RunConfig) -> int:
    _require(cfg, "out", "eps_list")
    out = _outdir(cfg)
    params = _solver_params(cfg, cfg.model, cfg.eps_list[0], 1.0 / 64)
    rows = gamma_sweep(synth_step_1d, cfg.eps_list, cfg.c, params, workers=cfg.workers)
    lines = [SWEEP_CSV_HEADER] + [r.to_csv() for r in rows]
    (out / "gamma1d.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    return EXIT_OK


def cmd_check_assumptions(cfg: RunConfig) -> int:
    _require(cfg, "out", "eps_list")
    out = _outdir(cfg)
    report = check_assumptions(cfg.eps_list)
    lines = ["assumption,eps,value,margin,passed"]
    for name, res in sorted(report.results.items()):
        for eps, val in zip(report.eps, res.values):
            lines.append(f"{name},{eps},{val},{res.margin},{res.passed}")
    (out / "assumptions.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"check-assumptions: {'pass' if report.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "denoise": cmd_denoise,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "gamma1d": cmd_gamma1d,
    "check-assumptions": cmd_check_assumptions,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="flat key=value config file; flags win")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--sigma", type=float, default=None, help="noise standard deviation")
    p.add_argument("--seed", type=int, default=None, help="noise seed")
    for name in ("alpha", "beta", "gamma", "theta", "tol1", "tol2"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--maxit", type=int, default=None, help="outer iteration cap")
    p.add_argument("--max-inner", dest="max_inner", type=int, default=None)
    p.add_argument("--band", type=float, default=None, help="intermediate-value band")
    p.add_argument("--fmt", choices=("png", "pgm"), default=None, help="image output format")
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bvseg",
        description="Phase-field image segmentation and denoising (BV and H1 models).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="run one model on one image")
    p.add_argument("--model", choices=("bv", "h1"), default=None)
    p.add_argument("--eps", type=float, default=None, help="phase-field width (required)")
    p.add_argument("--input", default=None, help="image path or synth: descriptor")
    _add_common(p)

    p = sub.add_parser("compare", help="run both models on the same noisy input")
    p.add_argument("--eps-bv", dest="eps_bv", type=float, default=None)
    p.add_argument("--eps-h1", dest="eps_h1", type=float, default=None)
    p.add_argument("--input", default=None)
    _add_common(p)

    p = sub.add_parser("sweep", help="run one model over a list of eps values")
    p.add_argument("--model", choices=("bv", "h1"), default=None)
    p.add_argument("--eps-list", dest="eps_list", default=None, help="comma-separated eps values")
    p.add_argument("--input", default=None)
    _add_common(p)

    p = sub.add_parser("gamma1d", help="1-D sharp-interface limit experiment")
    p.add_argument("--model", choices=("bv", "h1"), default=None)
    p.add_argument("--eps-list", dest="eps_list", default=None)
    p.add_argument("--c", type=float, default=None, help="resolution ratio eps/h")
    _add_common(p)

    p = sub.add_parser("check-assumptions", help="model-family admissibility report")
    p.add_argument("--eps-list", dest="eps_list", default=None)
    _add_common(p)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[cfg.command](cfg)
    except ImageFormatError as exc:
        print(f"bvseg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"bvseg: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bvseg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalFailure as exc:
        print(f"bvseg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())
