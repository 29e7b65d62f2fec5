"""Run configuration, task dispatch and tabular output.

A run is fully described by a parameter set, a task name with typed options,
and output settings. Command-line flags and INI config files both reduce to
the same string mapping, so they produce identical tables.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from . import __version__
from .correlations import White, f_tilde, parse_corr
from .emission import MODES, WHITE, spectrum_sweep
from .kernels import (
    FrequencyCoefficients,
    KernelValue,
    colored_T,
    white_T,
    white_T_oracle,
    window_average_rate,
)
from .noisebox import BoxSpec, F_L_analytic, convergence_study, estimate_F_L, sample_ensemble
from .params import PhysicalParams, load_params, params_from_mapping
from .parallel import ordered_map, resolve_jobs
from .quadrature import QuadratureError
from .wavepacket import (
    CutoffGeometry,
    diagonal_sum,
    extra_term_weight,
    gaussian_packet,
    loglog_slope,
    transition_prob_wavepacket,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
FORMATS = ("csv", "json")
DEFAULT_PRECISION = 17


class ConfigError(ValueError):
    """Bad or incomplete run configuration (exit code 2)."""


class OutputError(OSError):
    """The result table could not be written (exit code 4)."""


NUMERICAL_ERRORS = (QuadratureError, ArithmeticError, FloatingPointError)


# --- tables -------------------------------------------------------------------


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            self._check(row)

    def _check(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, table has {len(self.columns)} columns")

    def append(self, row) -> None:
        row = list(row)
        self._check(row)
        self.rows.append(row)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(value, precision: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return repr(value)
        return format(value, f".{precision}g")
    return str(value)


def _json_cell(value, precision: int):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(format(value, f".{precision}g")) if math.isfinite(value) else None
    return value


def render_table(table: ResultTable, fmt: str = "csv", precision: int = DEFAULT_PRECISION) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_fmt(v, precision) for v in row])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "metadata": table.metadata,
            "columns": table.columns,
            "rows": [[_json_cell(v, precision) for v in row] for row in table.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")


def write_table(table: ResultTable, path: str | Path, fmt: str = "csv",
                precision: int = DEFAULT_PRECISION) -> Path:
    """Write ``table``; CSV output gets its metadata in ``<path>.meta.json``."""
    text = render_table(table, fmt, precision)
    path = Path(path)
    try:
        path.write_text(text)
        if fmt == "csv":
            meta = Path(f"{path}.meta.json")
            meta.write_text(json.dumps(table.metadata, indent=2) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


# --- task options ---------------------------------------------------------------

REQUIRED = object()


@dataclass(frozen=True)
class Option:
    name: str
    kind: type
    default: Any = REQUIRED
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def _parse_value(opt: Option, raw) -> Any:
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if opt.kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if opt.kind is int:
            return int(text)
        if opt.kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"task option {opt.name}: cannot parse {raw!r} as "
                          f"{opt.kind.__name__}") from None
    return text


@dataclass(frozen=True)
class TaskSpec:
    name: str
    options: tuple[Option, ...]
    runner: Callable[..., ResultTable]
    help: str = ""

    def resolve(self, raw: Mapping[str, Any]) -> dict:
        known = {o.name: o for o in self.options}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"unknown task option(s) for {self.name}: {', '.join(unknown)}")
        out = {}
        for opt in self.options:
            if opt.name in raw and raw[opt.name] is not None:
                out[opt.name] = _parse_value(opt, raw[opt.name])
            elif opt.default is REQUIRED:
                raise ConfigError(f"task {self.name} requires option {opt.name}")
            else:
                out[opt.name] = opt.default
        return out


def _parse_range(text: str, name: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{name} must look like MIN:MAX:N, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    return lo, hi, n


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _corr(text: str):
    try:
        return parse_corr(text)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"corr: {exc}") from exc


# --- tasks --------------------------------------------------------------------

KERNEL_COLUMNS = ["a", "b", "c", "d", "t", "corr", "value_re", "value_im", "method", "err_est"]


def _kernel_value(coeffs: FrequencyCoefficients, t: float, corr, oracle: bool) -> KernelValue:
    if oracle:
        return white_T_oracle(coeffs, t)
    return colored_T(coeffs, t, corr)


def _kernel_row(t: float, coeffs: FrequencyCoefficients, corr_text: str, oracle: bool) -> list:
    kv = _kernel_value(coeffs, t, _corr(corr_text), oracle)
    err = math.nan if kv.error is None else float(kv.error)
    return [coeffs.a, coeffs.b, coeffs.c, coeffs.d, t, corr_text,
            float(np.real(kv.value)), float(np.imag(kv.value)), kv.method, err]


def _coeffs(opts) -> FrequencyCoefficients:
    coeffs = FrequencyCoefficients(opts["a"], opts["b"], opts["c"], opts["d"])
    coeffs.check()
    return coeffs


def _check_oracle(opts) -> None:
    if opts["oracle"] and not isinstance(_corr(opts["corr"]), White):
        raise ConfigError("--oracle is only available for white noise")


def task_kernel(opts, params: PhysicalParams, jobs: int = 1) -> ResultTable:
    _check_oracle(opts)
    row = _kernel_row(opts["t"], _coeffs(opts), opts["corr"], opts["oracle"])
    return ResultTable(list(KERNEL_COLUMNS), [row])


def task_sweep(opts, params: PhysicalParams, jobs: int = 1) -> ResultTable:
    _check_oracle(opts)
    lo, hi, n = _parse_range(opts["t_range"], "t_range")
    if not (0 <= lo <= hi and n >= 1):
        raise ConfigError("t_range needs 0 <= MIN <= MAX and N >= 1")
    ts = [float(t) for t in np.linspace(lo, hi, n)]
    fn = partial(_kernel_row, coeffs=_coeffs(opts), corr_text=opts["corr"], oracle=opts["oracle"])
    return ResultTable(list(KERNEL_COLUMNS), ordered_map(fn, ts, jobs))


RATE_COLUMNS = ["p", "rate", "mode", "corr_tag", "f_tilde_pc", "beta_D_flag"]


def task_rate(opts, params: PhysicalParams, jobs: int = 1) -> ResultTable:
    if opts["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {opts['mode']!r}")
    corr = _corr(opts["corr"])
    if (opts["p"] is None) == (opts["p_range"] is None):
        raise ConfigError("give exactly one of p and p_range")
    if opts["p"] is not None:
        # a one-point sweep reuses the same row construction
        rows = spectrum_sweep(opts["p"], opts["p"] * 2, 2, params, corr, opts["mode"])[:1]
    else:
        lo, hi, n = _parse_range(opts["p_range"], "p_range")
        rows = spectrum_sweep(lo, hi, n, params, corr, opts["mode"])
    return ResultTable(list(RATE_COLUMNS), [[r[c] for c in RATE_COLUMNS] for r in rows])


SUPPRESSION_COLUMNS = ["L", "ell", "diagonal_sum", "offdiag_recovery", "slope_estimate"]


def _suppression_row(L_ell, width, radius):
    L, ell = L_ell
    geom = CutoffGeometry(L, ell)
    packet = gaussian_packet(L, width, radius=radius)
    leading = transition_prob_wavepacket(1.0, packet, geom).real
    return [L, ell, diagonal_sum(packet, geom), leading]


def task_suppression(opts, params: PhysicalParams, jobs: int = 1) -> ResultTable:
    L, ell, width = opts["L"], opts["ell"], opts["packet_width"]
    radius = opts["grid_radius"]
    sweep = opts["sweep"]
    if sweep == "none":
        points = [(L, ell), (L, ell / 2)]
    elif sweep == "L":
        points = [(L * f, ell) for f in _parse_floats(opts["factors"] or "1,2,5,10", "factors")]
    elif sweep == "ell":
        points = [(L, ell * f) for f in _parse_floats(opts["factors"] or "0.1,0.2,0.5,1", "factors")]
    else:
        raise ConfigError(f"sweep must be none, L or ell, got {sweep!r}")
    try:
        rows = ordered_map(partial(_suppression_row, width=width, radius=radius), points, jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ratio = [r[1] / r[0] for r in rows]
    slope = loglog_slope(ratio, [r[2] for r in rows]) if len(set(ratio)) > 1 else math.nan
    if sweep == "none":
        rows = rows[:1]
    return ResultTable(list(SUPPRESSION_COLUMNS), [r + [slope] for r in rows])


NOISEBOX_COLUMNS = ["section", "L", "jmax", "dx", "estimate", "stderr", "analytic", "zscore"]


def task_noisebox(opts, params: PhysicalParams, jobs: int = 1) -> ResultTable:
    rc, L = opts["rc"], opts["L"]
    try:
        if opts["jmax"] is None:
            box = BoxSpec.resolved(L, rc, opts["dt"], opts["dim"])
        else:
            box = BoxSpec(L, opts["jmax"], opts["dt"], opts["dim"], rc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if opts["nreal"] < 2:
        raise ConfigError("nreal must be >= 2")
    modes = sample_ensemble(box, opts["nreal"], opts["seed"], opts["nsteps"], jobs)
    table = ResultTable(list(NOISEBOX_COLUMNS))
    for x in _parse_floats(opts["points"], "points"):
        dx = x * rc if box.dim == 1 else np.array([x * rc, 0.0, 0.0])
        est = estimate_F_L(modes, box, dx)
        ref = float(F_L_analytic(box, dx))
        table.append(["correlator", L, box.jmax, x * rc, est.value, est.stderr, ref,
                      est.zscore(ref)])
    if opts["convergence"]:
        if box.dim != 1:
            raise ConfigError("the convergence study is one-dimensional")
        Ls = [f * rc for f in _parse_floats(opts["convergence"], "convergence")]
        report = convergence_study(Ls, rc, opts["dt"], opts["nreal"], opts["seed"], jobs=jobs)
        for row in report.rows:
            table.append(["convergence", row["L"], row["jmax"], math.nan, row["mc_dev"],
                          row["stderr"], row["analytic_dev"], row["mc_z"]])
    return table


# --- reproduction -------------------------------------------------------------


def white_T_truncated(coeffs: FrequencyCoefficients, t: float) -> float:
    """The kernel with every oscillating term dropped: only -t/(ac) is kept."""
    return -t / (coeffs.a * coeffs.c)


@dataclass(frozen=True)
class FactorOfTwoReport:
    exact_rate: float
    truncated_rate: float
    ratio: float
    a: float

    @property
    def passed(self) -> bool:
        return abs(self.ratio - 2.0) <= 0.02


def reproduce_factor_of_two(a: float = 1.0, t_start: float = 200.0,
                            n_periods: int = 10) -> FactorOfTwoReport:
    """Long-time dT/dt of the exact free white kernel against the truncated one.

    The exact kernel 2(at - sin at)/a^3 grows at the mean rate 2/a^2, the
    truncated t/a^2 at 1/a^2.
    """
    coeffs = FrequencyCoefficients.free(a)
    exact = window_average_rate(coeffs, White(), t_start, n_periods=n_periods)
    h = 1e-3 / abs(a)
    truncated = (white_T_truncated(coeffs, t_start + h) - white_T_truncated(coeffs, t_start - h)) / (2 * h)
    return FactorOfTwoReport(exact, truncated, exact / truncated, a)


REPRODUCE_COLUMNS = ["check", "value", "target", "tolerance", "passed"]


def task_reproduce(opts, params: PhysicalParams, jobs: int = 1) -> ResultTable:
    rep = reproduce_factor_of_two(opts["a"], opts["t_start"])
    table = ResultTable(list(REPRODUCE_COLUMNS))
    table.append(["factor_of_two_ratio", rep.ratio, 2.0, 0.02, rep.passed])
    bracket = 0.5 * (float(f_tilde(White(), 0.0)) + float(f_tilde(White(), opts["a"])))
    table.append(["white_bracket", bracket, 1.0, 1e-15, abs(bracket - 1.0) <= 1e-15])
    L = opts["suppression_L"]
    geom = CutoffGeometry(L, 0.05 * L)
    weight = extra_term_weight(gaussian_packet(L, opts["packet_width"]), geom)
    table.append(["extra_term_weight_ell_over_L_0.05", weight, 0.0, 1e-3, weight < 1e-3])
    return table


# --- registry -----------------------------------------------------------------

_KERNEL_OPTS = (
    Option("a", float, help="frequency a"),
    Option("b", float, 0.0, help="frequency b"),
    Option("c", float, help="frequency c"),
    Option("d", float, help="frequency d (a + b + c + d = 0)"),
    Option("corr", str, "white", help="white | exp:TAU | gauss:TAU | file:PATH"),
    Option("oracle", bool, False, help="evaluate the white kernel by direct quadrature"),
)

TASKS: dict[str, TaskSpec] = {
    "kernel": TaskSpec("kernel", _KERNEL_OPTS + (Option("t", float, help="time"),), task_kernel,
                       "time kernel T at one time"),
    "sweep": TaskSpec("sweep", _KERNEL_OPTS + (Option("t_range", str, help="MIN:MAX:N, linear"),),
                      task_sweep, "time kernel on a grid of times"),
    "rate": TaskSpec("rate", (
        Option("p", float, None, help="photon wavenumber"),
        Option("p_range", str, None, help="MIN:MAX:N, log-spaced"),
        Option("mode", str, WHITE, help="white | planewave | golden"),
        Option("corr", str, "white", help="white | exp:TAU | gauss:TAU | file:PATH"),
    ), task_rate, "emission spectrum dGamma/dp"),
    "suppression": TaskSpec("suppression", (
        Option("L", float, help="box side"),
        Option("ell", float, help="noise confinement length"),
        Option("packet_width", float, help="momentum width of the Gaussian packet"),
        Option("grid_radius", int, None, help="packet support radius in grid points"),
        Option("sweep", str, "none", help="none | L | ell"),
        Option("factors", str, None, help="comma-separated multipliers for the sweep"),
    ), task_suppression, "diagonal-term suppression by a confined noise"),
    "noisebox": TaskSpec("noisebox", (
        Option("L", float, help="box side"),
        Option("rc", float, help="correlation length r_C"),
        Option("jmax", int, None, help="mode cutoff; default resolves the spectrum"),
        Option("dt", float, 1.0, help="time step"),
        Option("dim", int, 1, help="1 or 3"),
        Option("nreal", int, 1000, help="number of realizations"),
        Option("nsteps", int, 1, help="time steps per realization"),
        Option("seed", int, 0, help="master seed"),
        Option("points", str, "0,1,2,3,4", help="displacements in units of r_C"),
        Option("convergence", str, None, help="box sizes in units of r_C, e.g. 20,40,80"),
    ), task_noisebox, "sampled box noise and its correlator"),
    "reproduce": TaskSpec("reproduce", (
        Option("a", float, 1.0, help="free-particle frequency a"),
        Option("t_start", float, 200.0, help="start of the averaging window"),
        Option("suppression_L", float, 400.0, help="box side for the suppression check"),
        Option("packet_width", float, 1.0, help="packet width for the suppression check"),
    ), task_reproduce, "headline checks"),
}


# --- run configuration ----------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    task: str
    options: dict
    params: PhysicalParams = field(default_factory=PhysicalParams)
    out_path: str | None = None
    out_format: str = "csv"
    precision: int = DEFAULT_PRECISION
    jobs: int = 1

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if self.out_format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.out_format!r}")
        if not 1 <= self.precision <= 17:
            raise ConfigError("precision must be between 1 and 17")

    @property
    def seed(self):
        return self.options.get("seed")

    def config_hash(self) -> str:
        """sha256 of the canonical parameters and task; output and jobs excluded."""
        doc = {"params": dataclasses.asdict(self.params), "task": self.task,
               "options": self.options}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()

    def metadata(self) -> dict:
        return {"task": self.task, "seed": self.seed, "version": __version__,
                "config_hash": self.config_hash()}


def build_config(task: str, raw_options: Mapping[str, Any], params: PhysicalParams | None = None,
                 out_path=None, out_format: str = "csv", precision: int = DEFAULT_PRECISION,
                 jobs: int | None = None) -> RunConfig:
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; choose from {', '.join(TASKS)}")
    opts = TASKS[task].resolve(raw_options)
    try:
        n_jobs = resolve_jobs(jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(task, opts, params or PhysicalParams(), out_path, out_format,
                     precision, n_jobs)


_SECTIONS = ("params", "task", "output")


def load_config(path: str | Path) -> RunConfig:
    """Read an INI file with [params], [task] (``name`` plus options) and [output]."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    extra = [s for s in parser.sections() if s not in _SECTIONS]
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(extra)}")
    if not parser.has_section("task"):
        raise ConfigError("config needs a [task] section")
    try:
        params = (params_from_mapping(dict(parser["params"])) if parser.has_section("params")
                  else PhysicalParams())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    task_raw = dict(parser["task"])
    name = task_raw.pop("name", None)
    if name is None:
        raise ConfigError("[task] needs a name key")
    jobs = task_raw.pop("jobs", None)
    out = dict(parser["output"]) if parser.has_section("output") else {}
    unknown = sorted(set(out) - {"path", "format", "precision"})
    if unknown:
        raise ConfigError(f"unknown output option(s): {', '.join(unknown)}")
    try:
        precision = int(out.get("precision", DEFAULT_PRECISION))
        jobs = None if jobs is None else int(jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return build_config(name, task_raw, params, out.get("path"), out.get("format", "csv"),
                        precision, jobs)


def load_params_file(path: str | Path) -> PhysicalParams:
    try:
        return load_params(path)
    except OSError as exc:
        raise ConfigError(f"cannot read params file {path}: {exc.strerror or exc}") from exc
    except (ValueError, KeyError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc


def execute(config: RunConfig) -> ResultTable:
    """Run the task and attach metadata; errors propagate by type."""
    spec = TASKS[config.task]
    try:
        table = spec.runner(config.options, config.params, config.jobs)
    except (ConfigError, *NUMERICAL_ERRORS):
        raise
    except ValueError as exc:
        # domain errors raised by the numerical modules on bad inputs
        raise ConfigError(str(exc)) from exc
    table.metadata = config.metadata()
    return table


def run_config(path: str | Path) -> ResultTable:
    """Load, run, and (when the config names a path) write; returns the table."""
    config = load_config(path)
    table = execute(config)
    if config.out_path:
        write_table(table, config.out_path, config.out_format, config.precision)
    return table


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, OutputError):
        return EXIT_IO
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NUMERICAL_ERRORS):
        return EXIT_NUMERIC
    raise exc
