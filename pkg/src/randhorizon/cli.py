"""Command-line front end.

Each subcommand writes one or more rows with a fixed header: echoed inputs,
then ``value``, ``oracle`` and ``abs_err``.  Exit codes: 0 success, 1 table
cells out of tolerance, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import integrate

from . import __version__
from .errors import InputError, NumericalError
from .numerics.grid import DEFAULT_POINTS

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

# every key a config file may set, with its parser
CONFIG_KEYS: dict[str, Callable[[str], Any]] = {
    "K": float,
    "x": float,
    "r": float,
    "sigma": float,
    "sigma1": float,
    "sigma2": float,
    "T": float,
    "n": int,
    "grid_points": int,
    "tol": float,
    "mc_paths": int,
    "seed": int,
    "richardson_nodes": str,
    "binomial_steps": int,
    "x0": float,
    "b0": float,
    "payoff": str,
    "ns": str,
    "output": str,
    "format": str,
    "digits": int,
}

DEFAULTS: dict[str, Any] = {
    "K": 100.0,
    "r": 0.05,
    "grid_points": DEFAULT_POINTS,
    "tol": 1e-10,
    "mc_paths": 100_000,
    "seed": 0,
    "richardson_nodes": "1,2,3",
    "binomial_steps": 20_000,
    "ns": "10,50,200,1000",
    "format": "csv",
    "digits": 6,
}


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


# -- configuration -------------------------------------------------------------


def read_config(path: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as err:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {value!r}") from err
    return out


def _merge(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["format"] not in ("csv", "jsonl"):
        raise InputError(f"format must be csv or jsonl, got {cfg['format']!r}")
    if cfg["digits"] < 1:
        raise InputError("digits must be at least 1")
    return cfg


def _need(cfg: dict[str, Any], *keys: str) -> list[Any]:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise InputError("missing required parameter(s): " + ", ".join(missing))
    return [cfg[k] for k in keys]


def _int_list(text: str, name: str) -> list[int]:
    try:
        values = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as err:
        raise InputError(f"{name} must be a comma-separated list of integers") from err
    if not values:
        raise InputError(f"{name} is empty")
    return values


# -- output --------------------------------------------------------------------


def _echo(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _num(value: float | None, digits: int) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.{digits}g}"


class _Writer:
    def __init__(self, header: list[str], cfg: dict[str, Any], stream):
        self.header = header
        self.fmt = cfg["format"]
        self.stream = stream
        if self.fmt == "csv":
            self.csv = csv.writer(stream, lineterminator="\n")
            self.csv.writerow(header)

    def row(self, fields: dict[str, str]):
        if self.fmt == "csv":
            self.csv.writerow([fields.get(h, "") for h in self.header])
        else:
            self.stream.write(json.dumps({h: fields.get(h, "") for h in self.header}) + "\n")


def _result(inputs: dict[str, Any], value, oracle, digits: int, extra: dict[str, str] | None = None) -> dict[str, str]:
    fields = {k: _echo(v) for k, v in inputs.items()}
    if extra:
        fields.update(extra)
    fields["value"] = _num(value, digits)
    fields["oracle"] = _num(oracle, digits)
    err = None if oracle is None or value is None else abs(value - oracle)
    fields["abs_err"] = _num(err, 3) if err is not None else ""
    return fields


# -- subcommands ---------------------------------------------------------------


def _cmd_exact_digital(cfg, out, err) -> int:
    from .uvm.digital import exact_digital_value, exact_digital_value_quad

    K, x, s2, T = _need(cfg, "K", "x", "sigma2", "T")
    inputs = {"K": K, "x": x, "sigma2": s2, "T": T}
    value = exact_digital_value(K, x, s2, T)
    oracle = exact_digital_value_quad(K, x, s2, T)
    w = _Writer([*inputs, "value", "oracle", "abs_err"], cfg, out)
    w.row(_result(inputs, value, oracle, cfg["digits"]))
    return EXIT_OK


def _cmd_digital(cfg, out, err) -> int:
    from .bounds import ErlangHorizon, erlang_mixture
    from .uvm.digital import DigitalModel, digital_value, exact_digital_value

    K, x, s2, T, n = _need(cfg, "K", "x", "sigma2", "T", "n")
    model = DigitalModel(K, x, s2, T, n)
    value = digital_value(model, cfg["grid_points"])
    oracle = erlang_mixture(lambda z: exact_digital_value(K, x, s2, z), ErlangHorizon.for_horizon(n, T))
    inputs = {"K": K, "x": x, "sigma2": s2, "T": T, "n": n}
    w = _Writer([*inputs, "value", "oracle", "abs_err"], cfg, out)
    w.row(_result(inputs, value, oracle, cfg["digits"]))
    return EXIT_OK


def load_payoff_table(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Two whitespace- or comma-separated columns ``x, h(x)`` with strictly increasing ``x``."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].replace(",", " ").split()
        if not line:
            continue
        if len(line) != 2:
            raise InputError(f"{path}:{lineno}: expected two columns")
        try:
            rows.append((float(line[0]), float(line[1])))
        except ValueError as err:
            raise InputError(f"{path}:{lineno}: not a number") from err
    if len(rows) < 4:
        raise InputError(f"{path}: need at least four rows")
    data = np.array(rows)
    if np.any(data[:, 0] <= 0) or np.any(np.diff(data[:, 0]) <= 0):
        raise InputError(f"{path}: x must be positive and strictly increasing")
    return data[:, 0], data[:, 1]


def _cmd_uvm(cfg, out, err) -> int:
    from scipy.interpolate import PchipInterpolator

    from .bounds import bsb_fd_oracle
    from .uvm import Payoff, UvmModel, check_payoff_admissible, iterate_scheme, uvm_grid

    path, x0, b0, s1, s2, T, n, x = _need(cfg, "payoff", "x0", "b0", "sigma1", "sigma2", "T", "n", "x")
    xs, hs = load_payoff_table(path)
    interp = PchipInterpolator(np.log(xs), hs, extrapolate=False)

    def h(s):
        s = np.asarray(s, dtype=float)
        return interp(np.clip(np.log(s), np.log(xs[0]), np.log(xs[-1])))

    model = UvmModel(s1, s2, T, n)
    probe = Payoff.from_function(h, x0, b0)
    payoff = Payoff.from_function(h, x0, b0, uvm_grid(probe, model, cfg["grid_points"]))
    err.write(str(check_payoff_admissible(payoff)) + "\n")
    stages = iterate_scheme(payoff, model, cfg["grid_points"], cfg["tol"])
    value = float(stages[-1].U(x))
    oracle = bsb_fd_oracle(h, model, x)
    inputs = {"payoff": path, "x0": x0, "b0": b0, "sigma1": s1, "sigma2": s2, "T": T, "n": n, "x": x}
    w = _Writer([*inputs, "boundary", "value", "oracle", "abs_err"], cfg, out)
    w.row(_result(inputs, value, oracle, cfg["digits"], {"boundary": _num(stages[-1].b, cfg["digits"])}))
    return EXIT_OK


def _cmd_put(cfg, out, err) -> int:
    from .american_put import PutModel, binomial_oracle, carr_price, richardson_price

    K, x, r, sigma, T = _need(cfg, "K", "x", "r", "sigma", "T")
    digits = cfg["digits"]
    oracle = binomial_oracle(K, x, r, sigma, T, cfg["binomial_steps"])
    if cfg.get("n") is not None:
        model = PutModel(K, r, sigma, T, cfg["n"])
        value, _ = carr_price(model, x, cfg["grid_points"], cfg["tol"])
        method = f"n={cfg['n']}"
    else:
        nodes = _int_list(cfg["richardson_nodes"], "richardson_nodes")
        value = richardson_price(PutModel(K, r, sigma, T, 1), x, nodes, cfg["grid_points"])
        method = "richardson:" + "/".join(map(str, nodes))
    inputs = {"K": K, "x": x, "r": r, "sigma": sigma, "T": T, "method": method}
    w = _Writer([*inputs, "value", "oracle", "abs_err"], cfg, out)
    w.row(_result(inputs, value, oracle, digits))
    return EXIT_OK


def put_sandwich(K, x, r, sigma, T, n, paths, seed, points=DEFAULT_POINTS, tree_dt=None):
    """``(lower, std_error, value, upper)`` for the randomized put."""
    from .american_put import PutModel, binomial_horizon_curve, carr_price
    from .bounds import ErlangHorizon, PutExercisePolicy, erlang_pdf, mc_lower_bound

    model = PutModel(K, r, sigma, T, n)
    value, stages = carr_price(model, x, points)
    horizon = ErlangHorizon.for_horizon(n, T)
    lower, se = mc_lower_bound(
        PutExercisePolicy(K, x, r, sigma, [s.boundary for s in stages]), horizon, paths, seed
    )
    dt = T / 4000 if tree_dt is None else tree_dt
    zs, prices = binomial_horizon_curve(K, x, r, sigma, T + 12.0 * T / math.sqrt(n), dt)
    upper = float(integrate.trapezoid(prices * erlang_pdf(horizon, zs), zs))
    return lower, se, value, upper


def _cmd_sandwich(cfg, out, err) -> int:
    K, x, r, sigma, T, n = _need(cfg, "K", "x", "r", "sigma", "T", "n")
    paths, seed, digits = cfg["mc_paths"], cfg["seed"], cfg["digits"]
    lower, se, value, upper = put_sandwich(K, x, r, sigma, T, n, paths, seed, cfg["grid_points"])
    contained = lower - 3.0 * se <= value <= upper + 1e-3
    inputs = {"K": K, "x": x, "r": r, "sigma": sigma, "T": T, "n": n, "mc_paths": paths, "seed": seed}
    extra = {"lower": _num(lower, digits), "std_error": _num(se, 3), "contained": str(contained).lower()}
    w = _Writer([*inputs, "lower", "std_error", "contained", "value", "oracle", "abs_err"], cfg, out)
    w.row(_result(inputs, value, upper, digits, extra))
    return EXIT_OK


def _cmd_repro(cfg, out, err, table: int) -> int:
    from .uvm.digital import reproduce_tables, x80_report

    cells = reproduce_tables((table,), cfg["grid_points"])
    header = ["table", "K", "x", "sigma2", "T", "n", "value", "oracle", "abs_err"]
    w = _Writer(header, cfg, out)
    for c in cells:
        value = f"{c.value:.4f}" if table == 1 else f"{c.value:.4e}"
        oracle = f"{c.printed:.4f}" if table == 1 else f"{c.printed:.4e}"
        w.row(
            {
                "table": str(table),
                "K": "100.0",
                "x": _echo(c.x),
                "sigma2": _echo(c.sigma2),
                "T": _echo(c.T),
                "n": "exact" if c.n is None else str(c.n),
                "value": value,
                "oracle": oracle,
                "abs_err": f"{c.abs_err:.2g}",
            }
        )
    bad = [c for c in cells if not c.ok]
    for c in bad:
        err.write(f"out of tolerance: table {c.table} sigma2={c.sigma2} T={c.T} n={c.n} |err|={c.abs_err:.3g}\n")
    if table == 2:
        rep = x80_report(cfg["grid_points"])
        err.write(
            "x=80 row excluded (header inconsistent): "
            f"exact at T=1 {rep['exact_T1']:.6f}, exact at T=0.1 {rep['exact_T0.1']:.6e}, "
            "scheme at T=0.1 "
            + ", ".join(f"n={n}: {v:.4e}" for n, v in rep["scheme_T0.1"].items())
            + "\n"
        )
    return EXIT_TOLERANCE if bad else EXIT_OK


def _cmd_rate(cfg, out, err) -> int:
    from .bounds import convergence_diagnostic
    from .uvm.digital import DigitalModel, digital_value, exact_digital_value

    K, x, s2, T = _need(cfg, "K", "x", "sigma2", "T")
    ns = _int_list(cfg["ns"], "ns")
    exact = exact_digital_value(K, x, s2, T)
    values = {n: digital_value(DigitalModel(K, x, s2, T, n), cfg["grid_points"]) for n in ns}
    report = convergence_diagnostic(values, exact)
    digits = cfg["digits"]
    w = _Writer(["K", "x", "sigma2", "T", "n", "value", "oracle", "abs_err"], cfg, out)
    inputs = {"K": K, "x": x, "sigma2": s2, "T": T}
    for n in ns:
        w.row(_result({**inputs, "n": n}, values[n], exact, digits))
    fields = {k: _echo(v) for k, v in inputs.items()}
    fields.update({"n": "order", "value": _num(report.order, digits)})
    w.row(fields)
    if not report.monotone:
        err.write("warning: errors are not monotone in n\n")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="file of 'key = value' lines; flags override it")
    common.add_argument("--output", help="write rows here instead of stdout")
    common.add_argument("--format", choices=["csv", "jsonl"])
    common.add_argument("--digits", type=int, help="significant digits of computed values")
    common.add_argument("--grid-points", dest="grid_points", type=int)
    common.add_argument("--tol", type=float)

    parser = _Parser(prog="randhorizon", description="Randomized-maturity pricing and checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, *flags):
        p = sub.add_parser(name, parents=[common], help=help_text)
        for flag, typ in flags:
            p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=typ)
        return p

    add("exact-digital", "closed-form digital value", ("K", float), ("x", float), ("sigma2", float), ("T", float))
    add("digital", "randomized digital scheme", ("K", float), ("x", float), ("sigma2", float), ("T", float), ("n", int))
    add(
        "uvm",
        "general payoff under uncertain volatility",
        ("payoff", str),
        ("x0", float),
        ("b0", float),
        ("sigma1", float),
        ("sigma2", float),
        ("T", float),
        ("n", int),
        ("x", float),
    )
    add(
        "put",
        "randomized American put",
        ("K", float),
        ("x", float),
        ("r", float),
        ("sigma", float),
        ("T", float),
        ("n", int),
        ("richardson-nodes", str),
        ("binomial-steps", int),
    )
    add(
        "sandwich",
        "Monte Carlo / mixture bounds for the put",
        ("K", float),
        ("x", float),
        ("r", float),
        ("sigma", float),
        ("T", float),
        ("n", int),
        ("mc-paths", int),
        ("seed", int),
    )
    repro = add("repro", "recompute the published digital tables")
    repro.add_argument("--table", type=int, choices=[1, 2], required=True)
    add("rate", "empirical convergence order of the digital scheme", ("K", float), ("x", float), ("sigma2", float), ("T", float), ("ns", str))
    return parser


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = _merge(args)
    except _ArgError as e:
        stderr.write(f"randhorizon: error: {e}\n")
        return EXIT_CONFIG
    except (InputError, OSError) as e:
        stderr.write(f"randhorizon: invalid configuration: {e}\n")
        return EXIT_CONFIG

    buffer = io.StringIO()
    try:
        if args.command == "repro":
            code = _cmd_repro(cfg, buffer, stderr, args.table)
        else:
            handler = {
                "exact-digital": _cmd_exact_digital,
                "digital": _cmd_digital,
                "uvm": _cmd_uvm,
                "put": _cmd_put,
                "sandwich": _cmd_sandwich,
                "rate": _cmd_rate,
            }[args.command]
            code = handler(cfg, buffer, stderr)
    except InputError as e:
        stderr.write(f"randhorizon: invalid configuration: {e}\n")
        return EXIT_CONFIG
    except OSError as e:
        stderr.write(f"randhorizon: invalid configuration: {e}\n")
        return EXIT_CONFIG
    except NumericalError as e:
        stderr.write(f"randhorizon: numerical failure: {e}\n")
        return EXIT_NUMERICAL

    if cfg.get("output"):
        Path(cfg["output"]).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        stdout.write(buffer.getvalue())
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
