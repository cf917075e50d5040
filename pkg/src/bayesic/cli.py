"""Command-line interface.

Settings resolve in the order built-in defaults < ``BAYESIC_SEED`` < config
file < command-line flags. Exit codes: 0 success, 1 I/O or data error,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .criteria import bpic, dic, wbic
from .exceptions import ConfigurationError, DataError, DomainError
from .limits import limit_geometric, limit_laplace, limit_normal
from .models import GeometricModel, LaplaceModel, NormalModel, ObservedSample, make_sample
from .posterior import DEFAULT_NODES_2D, BetaSchedule, power_posterior
from .simulate import EXPERIMENTS, ExperimentConfig, RunRecord, run_experiment, summarize

RECORD_HEADER = (
    "experiment", "model", "criterion", "schedule", "theta0", "alpha", "beta",
    "n", "replicate", "seed", "value", "limit", "abs_error",
)
SUMMARY_HEADER = (
    "experiment", "model", "criterion", "schedule", "n",
    "count", "median_value", "median_abs_error", "min_value", "max_value",
)
SEED_ENV = "BAYESIC_SEED"
MODELS = ("geometric", "normal", "laplace")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Invalid invocation; reported with exit code 2."""


class InputError(Exception):
    """Unreadable or invalid input/output; reported with exit code 1."""


# --------------------------------------------------------------------------
# value parsers (shared by flags and config-file entries)


def _u64(text: str) -> int:
    value = int(str(text).strip(), 0)
    if not 0 <= value < 2**64:
        raise ValueError("must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(str(text).strip())
    if value < 1:
        raise ValueError("must be at least 1")
    return value


def _int_list(text: str) -> tuple:
    values = tuple(int(float(v)) if "e" in v.lower() else int(v) for v in _split(text))
    if not values:
        raise ValueError("needs at least one value")
    return values


def _float_list(text: str) -> tuple:
    values = tuple(float(v) for v in _split(text))
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError("needs finite numbers")
    return values


def _schedule_list(text: str) -> tuple:
    return tuple(BetaSchedule.parse(v) for v in _split(text))


def _schedule(text: str):
    try:
        return float(text)
    except ValueError:
        return BetaSchedule.parse(text)


def _pair(text: str) -> tuple:
    values = _float_list(text)
    if len(values) != 2:
        raise ValueError("needs two comma-separated numbers")
    return values


def _nodes(text: str) -> tuple:
    values = _int_list(text)
    if len(values) == 1:
        values = values * 2
    if len(values) != 2:
        raise ValueError("needs one or two node counts")
    return values


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be true or false")


def _split(text: str) -> list:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _typed(parser, flag: str):
    """Wrap ``parser`` so argparse errors name ``flag``."""

    def convert(text):
        try:
            return parser(text)
        except (ValueError, TypeError) as exc:
            raise argparse.ArgumentTypeError(f"invalid value {text!r} for {flag}: {exc}") from None

    convert.__name__ = flag
    return convert


# dest -> (flag, parser); the config file may set any of these keys
_SETTINGS = {
    "seed": ("--seed", _u64),
    "replicates": ("--replicates", _positive_int),
    "n_grid": ("--n-grid", _int_list),
    "out": ("--out", str),
    "jobs": ("--jobs", _positive_int),
    "rescale_n": ("--rescale-n", _bool),
    "schedules": ("--schedules", _schedule_list),
    "theta0": ("--theta0", _float_list),
    "alpha": ("--alpha", _float_list),
    "beta": ("--beta", _float_list),
    "eps": ("--eps", _float_list),
    "prior_mean": ("--prior-mean", _float_list),
    "box": ("--box", _pair),
    "nodes": ("--nodes", _nodes),
    "summary": ("--summary", _bool),
    "gibbs": ("--gibbs", _bool),
    "model": ("--model", str),
    "data": ("--data", str),
    "header": ("--header", _bool),
    "schedule": ("--schedule", _schedule),
    "params": ("--params", str),
}
_DEFAULTS = {"seed": 0, "jobs": 1, "rescale_n": False, "summary": False, "gibbs": False, "header": False}


# --------------------------------------------------------------------------
# argument parsing


def _add(parser, dest: str, help: str, **kwargs):
    flag, conv = _SETTINGS[dest]
    if conv is _bool:
        parser.add_argument(flag, dest=dest, action="store_const", const=True, default=None, help=help)
    else:
        parser.add_argument(flag, dest=dest, type=_typed(conv, flag), default=None, help=help, **kwargs)


def _global_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("global options")
    _add(g, "seed", f"run seed (unsigned 64-bit; default ${SEED_ENV} or 0)")
    _add(g, "replicates", "replicates per grid cell")
    _add(g, "n_grid", "comma-separated sample sizes")
    _add(g, "out", "output CSV path (default stdout)")
    g.add_argument("--config", type=str, default=None, help="flat 'key = value' settings file")
    _add(g, "jobs", "worker processes")
    _add(g, "rescale_n", "report n*DIC, n*BPIC and n*WBIC/2")
    return parent


def _experiment_options(p: argparse.ArgumentParser) -> None:
    _add(p, "schedules", "comma-separated temperature schedules")
    _add(p, "theta0", "geometric theta0 list; normal mean; Laplace 'mu,b'")
    _add(p, "alpha", "Beta prior alpha values")
    _add(p, "beta", "Beta prior beta values")
    _add(p, "eps", "ball radii for consistency curves")
    _add(p, "prior_mean", "normal prior mean")
    _add(p, "box", "Laplace box 'm,s'")
    _add(p, "nodes", "grid nodes per axis ('k' or 'k1,k2')")
    _add(p, "summary", "emit grouped medians instead of raw records")
    _add(p, "gibbs", "add Gibbs and eta-rescaled ball masses to consistency runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesic", description="DIC, BPIC and WBIC: evaluation and simulation.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    parent = _global_parent()

    sim = sub.add_parser("simulate", parents=[parent], help="run a replicated experiment")
    sim.add_argument("experiment", choices=EXPERIMENTS)
    _experiment_options(sim)

    cons = sub.add_parser("consistency", parents=[parent], help="posterior ball-mass curves")
    _experiment_options(cons)

    crit = sub.add_parser("criteria", parents=[parent], help="criteria for a dataset")
    _add(crit, "model", "geometric, normal or laplace", choices=MODELS)
    _add(crit, "data", "CSV file, one observation per row")
    _add(crit, "header", "skip the first row of --data")
    _add(crit, "schedule", "WBIC schedule name or explicit beta_n")
    _add(crit, "alpha", "Beta prior alpha")
    _add(crit, "beta", "Beta prior beta")
    _add(crit, "prior_mean", "normal prior mean")
    _add(crit, "box", "Laplace box 'm,s'")
    _add(crit, "nodes", "Laplace grid nodes per axis")

    lim = sub.add_parser("limits", parents=[parent], help="almost-sure limits")
    _add(lim, "model", "geometric, normal or laplace", choices=MODELS)
    _add(lim, "params", "comma-separated key=value population parameters")
    return parser


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    settings = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        if dest not in _SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown setting {key!r}")
        flag, conv = _SETTINGS[dest]
        try:
            settings[dest] = conv(value)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"{path}:{lineno}: invalid value {value!r} for {flag}: {exc}") from None
    return settings


def resolve_settings(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    settings = dict(_DEFAULTS)
    if environ.get(SEED_ENV, "").strip():
        try:
            settings["seed"] = _u64(environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"invalid {SEED_ENV}={environ[SEED_ENV]!r}: must be an unsigned 64-bit integer") from None
    if args.config:
        settings.update(read_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key != "config":
            settings[key] = value
    return settings


@dataclass(frozen=True)
class CliInvocation:
    command: str
    settings: dict
    config: Optional[ExperimentConfig] = None


def parse_args(argv: Sequence[str], environ=None) -> CliInvocation:
    """Parse ``argv`` into an invocation; argparse exits 2 on bad flags."""
    args = build_parser().parse_args(list(argv))
    settings = resolve_settings(args, environ)
    command = args.command
    config = None
    if command in ("simulate", "consistency"):
        kind = settings.get("experiment", "consistency") if command == "simulate" else "consistency"
        settings["experiment"] = kind
        config = experiment_config(kind, settings)
    return CliInvocation(command, settings, config)


def experiment_config(kind: str, settings: dict) -> ExperimentConfig:
    kwargs = dict(kind=kind, seed=settings["seed"], jobs=settings["jobs"], gibbs=settings["gibbs"])
    direct = {"n_grid": "n_grid", "replicates": "replicates", "schedules": "schedules",
              "alpha": "alphas", "beta": "betas", "eps": "eps", "nodes": "nodes"}
    for key, field_name in direct.items():
        if settings.get(key) is not None:
            kwargs[field_name] = settings[key]
    if settings.get("prior_mean") is not None:
        kwargs["prior_mean"] = _single(settings["prior_mean"], "--prior-mean")
    if settings.get("box") is not None:
        kwargs["box_m"], kwargs["box_s"] = settings["box"]
    theta0 = settings.get("theta0")
    if theta0 is not None:
        if kind == "wbic-normal":
            kwargs["normal_theta0"] = _single(theta0, "--theta0")
        elif kind == "laplace":
            if len(theta0) != 2:
                raise UsageError("--theta0 for laplace is 'mu,b'")
            kwargs["laplace_mu"], kwargs["laplace_b"] = theta0
        else:
            kwargs["theta0s"] = theta0
    try:
        return ExperimentConfig(**kwargs)
    except (ConfigurationError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _single(values, flag: str) -> float:
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value here")
    return values[0]


# --------------------------------------------------------------------------
# data and output


def ingest_csv(path: str, model_kind: str, header: bool = False, dim: Optional[int] = None) -> ObservedSample:
    """Read one observation per row. Errors name the 1-based data row."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if header and rows:
        rows = rows[1:]
    values = []
    width = None
    for i, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row]
        if not any(cells):
            continue
        try:
            parsed = [float(c) for c in cells]
        except ValueError:
            raise InputError(f"{path}: row {i}: cannot parse {','.join(row)!r} as numbers") from None
        if not all(math.isfinite(v) for v in parsed):
            raise InputError(f"{path}: row {i}: non-finite value")
        if model_kind == "geometric":
            if len(parsed) != 1 or parsed[0] < 0 or parsed[0] != math.floor(parsed[0]):
                raise InputError(f"{path}: row {i}: geometric data must be a single non-negative integer")
        elif model_kind == "laplace" and len(parsed) != 1:
            raise InputError(f"{path}: row {i}: Laplace data has one column")
        if width is None:
            width = len(parsed)
        elif len(parsed) != width:
            raise InputError(f"{path}: row {i}: expected {width} column(s), got {len(parsed)}")
        values.append(parsed)
    if not values:
        raise InputError(f"{path}: no observations")
    if dim is not None and width != dim:
        raise InputError(f"{path}: expected {dim} column(s), got {width}")
    return ObservedSample(np.array(values), integer=model_kind == "geometric")


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, (bool, np.bool_)):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def format_records(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, name)) for name in RECORD_HEADER])
    return buf.getvalue()


def format_summary(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for row in summarize(records):
        writer.writerow([_fmt(v) for v in row.key] + [
            _fmt(row.count), _fmt(row.median_value), _fmt(row.median_abs_error),
            _fmt(row.min_value), _fmt(row.max_value),
        ])
    return buf.getvalue()


def parse_records(text: str) -> list[dict]:
    """Inverse of ``format_records`` at the field level (strings to values)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != RECORD_HEADER:
        raise DataError("not a record CSV")
    out = []
    for row in rows[1:]:
        rec = dict(zip(RECORD_HEADER, row))
        for key in ("alpha", "beta"):
            rec[key] = None if rec[key] == "-" else float(rec[key])
        for key in ("n", "replicate", "seed"):
            rec[key] = int(rec[key])
        for key in ("value", "limit", "abs_error"):
            rec[key] = float(rec[key])
        out.append(rec)
    return out


def write_output(text: str, out: Optional[str], stdout=None) -> None:
    if out is None or out == "-":
        stream = stdout or sys.stdout
        stream.write(text)
        stream.flush()
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror}") from None


def emit_records(records: Sequence[RunRecord], out: Optional[str] = None, summary: bool = False, stdout=None) -> None:
    if summary and not records:
        text = ",".join(SUMMARY_HEADER) + "\n"
    else:
        text = format_summary(records) if summary else format_records(records)
    write_output(text, out, stdout)


# --------------------------------------------------------------------------
# commands


def _run_simulation(inv: CliInvocation, stdout) -> None:
    records = run_experiment(inv.config)
    if inv.settings["rescale_n"]:
        records = [r.rescaled() for r in records]
    emit_records(records, inv.settings.get("out"), summary=inv.settings["summary"], stdout=stdout)


def _criteria_model(settings: dict, sample_dim: int):
    kind = settings.get("model")
    if kind == "geometric":
        alpha = _single(settings.get("alpha") or (1.0,), "--alpha")
        beta = _single(settings.get("beta") or (1.0,), "--beta")
        return GeometricModel(alpha, beta)
    if kind == "normal":
        mu = settings.get("prior_mean") or (0.0,) * sample_dim
        return NormalModel(tuple(mu))
    m, s = settings.get("box") or (4.0, 8.0)
    return LaplaceModel(m, s)


def _run_criteria(inv: CliInvocation, stdout) -> None:
    s = inv.settings
    if not s.get("model"):
        raise UsageError("criteria needs --model")
    if not s.get("data"):
        raise UsageError("criteria needs --data")
    raw = ingest_csv(s["data"], s["model"], header=s["header"])
    try:
        model = _criteria_model(s, raw.dim)
    except (ConfigurationError, DomainError) as exc:
        raise UsageError(str(exc)) from None
    try:
        sample = make_sample(model, raw.values)
    except (DataError, DomainError) as exc:
        raise InputError(f"{s['data']}: {exc}") from None
    laplace = isinstance(model, LaplaceModel)
    method = "grid" if laplace else "auto"
    nodes = s.get("nodes") or (DEFAULT_NODES_2D if laplace else None)
    schedule = s.get("schedule") or BetaSchedule.INV_LOG_N
    try:
        post = power_posterior(model, sample, 1.0, method=method, nodes_per_axis=nodes)
        values = [
            dic(model, sample, post),
            bpic(model, sample, post),
            wbic(model, sample, schedule, method=method, nodes_per_axis=nodes),
        ]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = ["criterion,n,beta_n,method,value"]
    for c in values:
        value = c.rescaled() if s["rescale_n"] else c.value
        lines.append(f"{c.kind},{c.n},{_fmt(c.beta_n)},{c.method},{_fmt(value)}")
    write_output("\n".join(lines) + "\n", s.get("out"), stdout)


def _parse_params(text: Optional[str]) -> dict:
    if not text:
        raise UsageError("limits needs --params")
    params = {}
    for item in _split(text):
        if "=" not in item:
            raise UsageError(f"--params entry {item!r} is not key=value")
        key, value = (p.strip() for p in item.split("=", 1))
        try:
            params[key.lower()] = float(value)
        except ValueError:
            raise UsageError(f"invalid value {value!r} for --params key {key!r}") from None
    return params


def _run_limits(inv: CliInvocation, stdout) -> None:
    s = inv.settings
    kind = s.get("model")
    if not kind:
        raise UsageError("limits needs --model")
    p = _parse_params(s.get("params"))
    try:
        if kind == "geometric":
            if "ex" in p:
                limit = limit_geometric(p["ex"])
            elif "theta0" in p and 0.0 < p["theta0"] < 1.0:
                limit = limit_geometric((1.0 - p["theta0"]) / p["theta0"])
            else:
                raise UsageError("geometric --params needs ex=EX or theta0 in (0, 1)")
        elif kind == "normal":
            if "mean" in p:
                limit = limit_normal(1, p["mean"] ** 2 + p.get("var", 1.0), p["mean"] ** 2)
            elif {"p", "e_norm_sq", "norm_e_sq"} <= p.keys():
                limit = limit_normal(int(p["p"]), p["e_norm_sq"], p["norm_e_sq"])
            else:
                raise UsageError("normal --params needs mean=M[,var=V] or p=,e_norm_sq=,norm_e_sq=")
        else:
            gamma0 = p.get("gamma0", p.get("b"))
            if gamma0 is None:
                raise UsageError("laplace --params needs gamma0=G (or b=B)")
            limit = limit_laplace(gamma0)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    write_output(f"model,value\n{limit.model},{_fmt(limit.value)}\n", s.get("out"), stdout)


_COMMANDS = {
    "simulate": _run_simulation,
    "consistency": _run_simulation,
    "criteria": _run_criteria,
    "limits": _run_limits,
}


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stderr = stderr or sys.stderr
    try:
        inv = parse_args(argv)
        _COMMANDS[inv.command](inv, stdout)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"bayesic: error: {exc}", file=stderr)
        return EXIT_USAGE
    except (InputError, DataError, DomainError, OSError) as exc:
        print(f"bayesic: error: {exc}", file=stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
