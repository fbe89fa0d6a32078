"""Command-line front end.

Usage examples::

    kdiffract --mode averaged --T 10 --epsilon 10 --calT 0,1,10 --format csv
    kdiffract --mode ideal --T 0 --epsilon 10 --output gauss.csv
    kdiffract --mode inm-table --n 0..2 --m 0..2 --T 10 --calT 1 \\
        --mc-samples 1000000 --seed 7
    kdiffract --mode kernel-demo --levels 0,1,3 --tau 0.5
    kdiffract --mode scenario --scenario cold-beam-sec5

Options may also come from a flat ``key=value`` file given with ``--config``;
flags on the command line win. Without ``--output`` the table goes to
``$KDIFFRACT_OUTPUT_DIR/kdiffract-<mode>.<format>`` when that variable is set,
and to stdout otherwise.

Exit codes: 0 success, 2 configuration error, 3 numerical accuracy failure,
4 output failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, _kernels
from .diffraction import (
    DEFAULT_STEP,
    DiffractionParams,
    MomentumGrid,
    averaged_distribution,
    ideal_distribution,
    inm_closed_form,
    inm_monte_carlo_seeded,
    inm_quadrature_table,
)
from .errors import DomainError, IntegrationAccuracyError, NonConvergenceError
from .experiment import FIGURE2, TERM_LABELS, cal_t, dominant_term, preset, tau_estimate
from .randtime import (
    DensityMatrix,
    EnergySpectrum,
    GammaTimeLaw,
    average_density,
    decay_factors,
    evolve_exact_log,
    evolve_second_order,
)

MODES = ("ideal", "averaged", "inm-table", "kernel-demo", "scenario")
METHOD_CHOICES = ("quadrature", "closed-form", "monte-carlo", "auto")
FORMATS = ("csv", "json")
OUTPUT_DIR_ENV = "KDIFFRACT_OUTPUT_DIR"
AUTO_DISAGREEMENT = 1e-6

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    T: float = FIGURE2["T"]
    calT: tuple = FIGURE2["calT"]
    epsilon: float = FIGURE2["epsilon"]
    n_max: int | None = None
    p_min: float | None = None
    p_max: float | None = None
    step: float = DEFAULT_STEP
    method: str = "auto"
    mc_samples: int | None = None
    seed: int | None = None
    tol: float = 1e-10
    n_range: tuple = (0, 2)
    m_range: tuple = (0, 2)
    levels: tuple = (0.0, 1.0)
    tau: float = 1.0
    t_max: float = 10.0
    t_points: int = 101
    scenario: str = "cold-beam-sec5"
    output: str | None = None
    format: str = "csv"


@dataclass
class Diagnostic:
    level: str  # "error" or "warning"
    message: str


@dataclass
class OutputRecord:
    meta: dict
    columns: list
    rows: list = field(default_factory=list)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _float_list(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


def _int_range(text: str) -> tuple:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    v = int(text)
    return v, v


_CONVERTERS = {
    "mode": str,
    "T": float,
    "calT": _float_list,
    "epsilon": float,
    "n_max": int,
    "p_min": float,
    "p_max": float,
    "step": float,
    "method": str,
    "mc_samples": lambda s: int(float(s)),
    "seed": int,
    "tol": float,
    "n_range": _int_range,
    "m_range": _int_range,
    "levels": _float_list,
    "tau": float,
    "t_max": float,
    "t_points": int,
    "scenario": str,
    "output": str,
    "format": str,
}
_ALIASES = {"n": "n_range", "m": "m_range", "t": "T", "calt": "calT", "caltau": "calT"}


def _key(name: str) -> str:
    key = name.strip().lstrip("-").replace("-", "_")
    if key in _CONVERTERS:
        return key
    return _ALIASES.get(key.lower(), key)


def read_config_file(path: str) -> dict:
    """Parse a flat ``key=value`` file (``#`` starts a comment)."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        key = _key(k)
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {k.strip()!r}")
        values[key] = v.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kdiffract",
        description="Standing-wave atomic diffraction with a Gamma-distributed interaction time.",
    )
    ap.add_argument("--config", help="flat key=value file; flags override it")
    ap.add_argument("--preset", help="fill T, epsilon and calT from a named preset (figure2)")
    ap.add_argument("--mode", help=f"one of {', '.join(MODES)}")
    ap.add_argument("--T", dest="T", help="dimensionless interaction time")
    ap.add_argument("--calT", dest="calT", help="comma-separated decoherence scales")
    ap.add_argument("--epsilon", help="initial transverse spread (peaks resolved for > 1)")
    ap.add_argument("--n-max", dest="n_max", help="comb truncation order (default: automatic)")
    ap.add_argument("--p-min", dest="p_min")
    ap.add_argument("--p-max", dest="p_max")
    ap.add_argument("--step", help="momentum grid spacing")
    ap.add_argument("--method", help=f"one of {', '.join(METHOD_CHOICES)}")
    ap.add_argument("--mc-samples", dest="mc_samples")
    ap.add_argument("--seed")
    ap.add_argument("--tol", help="quadrature tolerance for I_nm")
    ap.add_argument("--n", dest="n_range", help="order range lo..hi for inm-table")
    ap.add_argument("--m", dest="m_range", help="order range lo..hi for inm-table")
    ap.add_argument("--levels", help="kernel-demo level frequencies, comma-separated")
    ap.add_argument("--tau", help="kernel-demo scaling time")
    ap.add_argument("--t-max", dest="t_max")
    ap.add_argument("--t-points", dest="t_points")
    ap.add_argument("--scenario", help="beam scenario preset name")
    ap.add_argument("--output", "-o")
    ap.add_argument("--format")
    return ap


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    raw: dict = {}
    if args.config:
        raw.update(read_config_file(args.config))
    if args.preset:
        if args.preset != "figure2":
            raise ConfigError(f"unknown preset {args.preset!r}; known: figure2")
        raw.update({"T": str(FIGURE2["T"]), "epsilon": str(FIGURE2["epsilon"]),
                    "calT": ",".join(str(c) for c in FIGURE2["calT"])})
    for key in _CONVERTERS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if "mode" not in raw:
        raise ConfigError(f"--mode is required ({', '.join(MODES)})")
    values = {}
    for key, text in raw.items():
        try:
            values[key] = _CONVERTERS[key](text)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {text!r}") from None
    return RunConfig(**values)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def validate(config: RunConfig) -> list[Diagnostic]:
    """Actionable problems with ``config``; errors block the run, warnings do not."""
    out = []

    def err(msg):
        out.append(Diagnostic("error", msg))

    def warn(msg):
        out.append(Diagnostic("warning", msg))

    c = config
    if c.mode not in MODES:
        err(f"unknown mode {c.mode!r}; expected one of {', '.join(MODES)}")
        return out
    if c.format not in FORMATS:
        err(f"unknown format {c.format!r}; expected csv or json")
    if c.method not in METHOD_CHOICES:
        err(f"unknown method {c.method!r}; expected one of {', '.join(METHOD_CHOICES)}")

    if c.mode in ("ideal", "averaged", "inm-table"):
        if not (math.isfinite(c.T) and c.T >= 0.0):
            err("T must be finite and nonnegative")
        if c.mode != "inm-table":
            if not c.epsilon > 0.0:
                err("epsilon must be positive")
            elif c.epsilon <= 1.0:
                warn("peaks unresolved (requires epsilon > 1)")
        if c.n_max is not None and c.n_max < 1:
            err("n-max must be a positive integer")
        if c.step <= 0.0:
            err("step must be positive")
        if (c.p_min is None) != (c.p_max is None):
            err("give both p-min and p-max or neither")
        elif c.p_min is not None and not c.p_min < c.p_max:
            err("p-min must be below p-max")

    if c.mode == "averaged":
        if not c.calT:
            err("averaged mode needs a nonempty calT list")
        if any(not (math.isfinite(x) and x >= 0.0) for x in c.calT):
            err("calT values must be finite and nonnegative")
        if c.method == "closed-form" and any(x >= 2.0 for x in c.calT):
            err("closed-form needs every calT < 2 (4F3 series diverges); use quadrature")
        if c.method == "monte-carlo" and c.seed is None:
            err("monte-carlo needs --seed")

    if c.mode == "inm-table":
        if len(c.calT) != 1 or not c.calT[0] > 0.0:
            err("inm-table needs exactly one calT > 0")
        if not c.T > 0.0:
            err("inm-table needs T > 0")
        if c.method == "closed-form" and c.calT and c.calT[0] >= 2.0:
            err("closed-form needs calT < 2 (4F3 series diverges); use quadrature")
        for name, (lo, hi) in (("n", c.n_range), ("m", c.m_range)):
            if lo > hi:
                err(f"--{name} range is empty")
        if c.mc_samples is not None and c.seed is None:
            err("monte-carlo columns need --seed")

    if c.mc_samples is not None and c.mc_samples < 10_000:
        err("mc-samples must be at least 10000")
    if not c.tol > 0.0:
        err("tol must be positive")

    if c.mode == "kernel-demo":
        if not c.levels:
            err("kernel-demo needs at least one level")
        if not c.tau > 0.0:
            err("tau must be positive")
        if not c.t_max > 0.0 or c.t_points < 2:
            err("kernel-demo needs t-max > 0 and t-points >= 2")

    if c.mode == "scenario":
        try:
            preset(c.scenario)
        except DomainError as exc:
            err(str(exc))
    return out


# --------------------------------------------------------------------------
# modes
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


_GRID_KEYS = ("T", "epsilon", "n_max", "p_min", "p_max", "step", "tol")
MODE_KEYS = {
    "ideal": ("mode", "format") + _GRID_KEYS,
    "averaged": ("mode", "format", "calT", "method", "mc_samples", "seed") + _GRID_KEYS,
    "inm-table": ("mode", "format", "T", "calT", "method", "mc_samples", "seed", "tol",
                  "n_range", "m_range"),
    "kernel-demo": ("mode", "format", "levels", "tau", "t_max", "t_points"),
    "scenario": ("mode", "format", "scenario"),
}


def _base_meta(config: RunConfig) -> dict:
    """Version, backend and every config field that can change the numbers."""
    meta = {"version": __version__, "backend": _kernels.BACKEND}
    values = asdict(config)
    for key in MODE_KEYS[config.mode]:
        value = values[key]
        meta[f"config.{key}"] = list(value) if isinstance(value, tuple) else value
    return meta


def _grid(config: RunConfig, n_max: int) -> MomentumGrid:
    if config.p_min is not None:
        count = int(math.floor((config.p_max - config.p_min) / config.step + 1e-9))
        return MomentumGrid(config.p_min + config.step * np.arange(count + 1))
    return MomentumGrid.for_order(n_max, config.step)


def _run_distributions(config: RunConfig, warn) -> OutputRecord:
    meta = _base_meta(config)
    calts = (0.0,) if config.mode == "ideal" else tuple(config.calT)
    with warnings.catch_warnings():
        # validate() already reported these
        warnings.simplefilter("ignore")
        params = {c: DiffractionParams(T=config.T, epsilon=config.epsilon, calT=c,
                                       n_max=config.n_max)
                  for c in (0.0,) + calts}
    n_top = max(p.n_max for p in params.values())
    grid = _grid(config, n_top)
    method = {"closed-form": "closed_form", "monte-carlo": "monte_carlo"}.get(
        config.method, "quadrature")
    samples = config.mc_samples or 100_000

    columns = ["p_x", "w_ideal"]
    data = [grid.points, ideal_distribution(grid, params[0.0]).values]
    meta["n_max.ideal"] = params[0.0].n_max
    meta["integral.w_ideal"] = float(np.trapezoid(data[1], grid.points))
    if config.mode == "averaged":
        for c in calts:
            name = f"w_avg_calT_{_fmt(c)}"
            dist = averaged_distribution(grid, params[c], method, tol=config.tol,
                                         samples=samples, seed=config.seed)
            columns.append(name)
            data.append(dist.values)
            meta[f"n_max.{name}"] = params[c].n_max
            meta[f"error_estimate.{name}"] = dist.error_estimate
            meta[f"integral.{name}"] = dist.integral()
            if config.method == "auto" and 0.0 < c < 2.0 and config.T > 0.0:
                check = averaged_distribution(grid, params[c], "closed_form")
                diff = float(np.max(np.abs(check.values - dist.values)))
                meta[f"closed_form_check.{name}"] = diff
                if diff > AUTO_DISAGREEMENT:
                    warn(f"quadrature and closed form disagree by {diff:.3g} at calT={c}")
    meta["method"] = method
    rows = np.column_stack(data)
    return OutputRecord(meta, columns, rows.tolist())


def _run_inm_table(config: RunConfig, warn) -> OutputRecord:
    meta = _base_meta(config)
    T, calT = config.T, config.calT[0]
    ns = range(config.n_range[0], config.n_range[1] + 1)
    ms = range(config.m_range[0], config.m_range[1] + 1)
    pairs = sorted({tuple(sorted((abs(n), abs(m)))) for n in ns for m in ms})
    quad = inm_quadrature_table(pairs, T, calT, config.tol)
    with_cf = calT < 2.0 and config.method != "quadrature"
    with_mc = config.mc_samples is not None
    columns = ["n", "m", "quadrature", "quadrature_err"]
    if with_cf:
        columns += ["closed_form", "abs_diff_closed_form"]
    if with_mc:
        columns += ["monte_carlo", "mc_stderr", "abs_diff_monte_carlo", "mc_z"]
    rows = []
    worst_cf = 0.0
    for n in ns:
        for m in ms:
            a, b = sorted((abs(n), abs(m)))
            sign = -1.0 if ((abs(n) - n + abs(m) - m) // 2) % 2 else 1.0
            q = sign * quad[(a, b)].value
            row = [n, m, q, quad[(a, b)].error_estimate]
            if with_cf:
                cf = inm_closed_form(n, m, T, calT).value
                worst_cf = max(worst_cf, abs(cf - q))
                row += [cf, abs(cf - q)]
            if with_mc:
                mc = inm_monte_carlo_seeded(n, m, T, calT, config.mc_samples, config.seed)
                z = abs(mc.value - q) / mc.error_estimate if mc.error_estimate > 0 else 0.0
                row += [mc.value, mc.error_estimate, abs(mc.value - q), z]
            rows.append(row)
    if with_cf:
        meta["max_abs_diff_closed_form"] = worst_cf
        if worst_cf > AUTO_DISAGREEMENT:
            warn(f"quadrature and closed form disagree by {worst_cf:.3g}")
    return OutputRecord(meta, columns, rows)


def _run_kernel_demo(config: RunConfig, warn) -> OutputRecord:
    meta = _base_meta(config)
    spectrum = EnergySpectrum(config.levels)
    law = GammaTimeLaw(config.tau)
    d = spectrum.dim
    rho0 = DensityMatrix(np.full((d, d), 1.0 / d))
    t_grid = np.linspace(0.0, config.t_max, config.t_points)
    exact = evolve_exact_log(rho0, spectrum, law, t_grid)
    second = evolve_second_order(rho0, spectrum, law, t_grid)
    pairs = [(n, m) for n in range(d) for m in range(n + 1, d)]
    for n, m in pairs:
        w = spectrum.levels[n] - spectrum.levels[m]
        f = decay_factors(w, law)
        meta[f"gamma[{n},{m}]"] = f.gamma
        meta[f"nu[{n},{m}]"] = f.nu
        meta[f"second_order_rate[{n},{m}]"] = 0.5 * w * w * law.tau
    columns = ["t"]
    for n, m in pairs:
        columns += [f"abs_rho[{n},{m}].closed", f"abs_rho[{n},{m}].exact_log",
                    f"abs_rho[{n},{m}].second_order"]
    rows = []
    worst = 0.0
    for k, t in enumerate(t_grid):
        closed = average_density(rho0, spectrum, float(t), law).entries
        worst = max(worst, float(np.max(np.abs(closed - exact[k].entries))))
        row = [float(t)]
        for n, m in pairs:
            row += [abs(closed[n, m]), abs(exact[k].entries[n, m]), abs(second[k].entries[n, m])]
        rows.append(row)
    meta["max_abs_diff_exact_vs_closed"] = worst
    return OutputRecord(meta, columns, rows)


def _run_scenario(config: RunConfig, warn) -> OutputRecord:
    meta = _base_meta(config)
    s = preset(config.scenario)
    est = tau_estimate(s)
    calT, T = cal_t(s, est.tau)
    meta["dominant_term"] = dominant_term(s)
    for key, value in asdict(s).items():
        meta[f"scenario.{key}"] = value
    columns = ["tau_s", "calT", "T"] + [f"term.{label}_m2" for label in TERM_LABELS]
    return OutputRecord(meta, columns, [[est.tau, calT, T, *est.terms]])


_RUNNERS = {
    "ideal": _run_distributions,
    "averaged": _run_distributions,
    "inm-table": _run_inm_table,
    "kernel-demo": _run_kernel_demo,
    "scenario": _run_scenario,
}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _meta_text(value) -> str:
    if isinstance(value, float):
        return _fmt(value)
    if isinstance(value, list):
        return ",".join(_meta_text(v) for v in value)
    return str(value)


def render(record: OutputRecord, fmt: str) -> str:
    """Serialize ``record``; identical records give identical text."""
    for row in record.rows:
        if not all(math.isfinite(float(v)) for v in row):
            raise ValueError("output contains non-finite values")
    if fmt == "json":
        body = {"meta": record.meta, "columns": record.columns, "rows": record.rows}
        return json.dumps(body, sort_keys=True, indent=1, allow_nan=False) + "\n"
    lines = [f"# {k}={_meta_text(v)}" for k, v in sorted(record.meta.items())]
    lines.append("# columns=" + ",".join(record.columns))
    for row in record.rows:
        lines.append(",".join(str(v) if isinstance(v, int) else _fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def emit(record: OutputRecord, fmt: str, path: str | None) -> None:
    """Write ``record`` to ``path`` (stdout when None). OSError propagates."""
    text = render(record, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _output_path(config: RunConfig) -> str | None:
    if config.output:
        return config.output
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory:
        return str(Path(directory) / f"kdiffract-{config.mode}.{config.format}")
    return None


def run(config: RunConfig) -> int:
    """Execute ``config``; returns the process exit status."""
    diagnostics = validate(config)
    for d in diagnostics:
        print(f"kdiffract: {d.level}: {d.message}", file=sys.stderr)
    if any(d.level == "error" for d in diagnostics):
        return EXIT_CONFIG

    def warn(msg):
        print(f"kdiffract: warning: {msg}", file=sys.stderr)

    try:
        record = _RUNNERS[config.mode](config, warn)
    except (IntegrationAccuracyError, NonConvergenceError) as exc:
        achieved = getattr(exc, "achieved", None)
        extra = f" (achieved {achieved:.3g})" if achieved is not None else ""
        print(f"kdiffract: numerical accuracy failure: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"kdiffract: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        emit(record, config.format, _output_path(config))
    except OSError as exc:
        print(f"kdiffract: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = config_from_args(argv)
    except ConfigError as exc:
        print(f"kdiffract: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    raise SystemExit(main())
