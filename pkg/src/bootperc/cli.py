"""Command-line front end.

Every command prints one JSON document (or CSV for ``sweep``) whose ``config``
block is the fully resolved configuration; feeding that block back through
``--config`` reproduces the run.  Exit codes: 0 success, 1 runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import secrets
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .bounds import iter_exp, threshold_constant
from .dynamics import MAX_ORACLE_VOLUME, Rule, close, exact_spanning_probability
from .lattice import RngStream, make_region, random_fill
from .montecarlo import (
    MAX_SWEEP_VOLUME,
    ConvergenceError,
    Estimate,
    TrialPlan,
    bound_vs_estimate,
    estimate_chi,
    estimate_f,
    estimate_F,
    estimate_I,
    search_p_alpha,
    sweep_scaling,
)
from .structure import aizenman_lebowitz_decompose, check_domination, components, slice_construct

PROG = "bootperc"
REQUIRED = object()

SWEEP_COLUMNS = ["L", "p_half", "scaled", "width", "relative_width", "p_lo", "p_hi", "p_half_se", "trials"]

COMMANDS: dict[str, dict[str, Any]] = {
    "simulate": {"rule": "modified", "d": 2, "delta": None, "L": REQUIRED, "p": REQUIRED, "trials": 10000, "seed": None},
    "crossing": {"rule": "modified", "d": 3, "m": REQUIRED, "p": REQUIRED, "x": REQUIRED, "y": REQUIRED,
                 "trials": 10000, "seed": None},
    "chi": {"rule": "modified", "delta": 2, "n": REQUIRED, "p": REQUIRED, "trials": 10000, "seed": None},
    "bigcomp": {"rule": "modified", "delta": 2, "m": REQUIRED, "n": REQUIRED, "p": REQUIRED, "trials": 10000,
                "seed": None},
    "threshold": {"rule": "modified", "d": 2, "L": REQUIRED, "alpha": 0.5, "tol": 1e-3, "trials": 200, "seed": None},
    "sweep": {"rule": "modified", "d": 2, "L_list": REQUIRED, "eps": 0.1, "trials": 200, "tol": None, "seed": None,
              "format": "csv", "output": None},
    "bound": {"d": 3, "m": REQUIRED, "n": REQUIRED, "p": REQUIRED, "x": REQUIRED, "y": REQUIRED, "trials": 100000,
              "seed": None},
    "decompose": {"rule": "modified", "d": 2, "L": REQUIRED, "p": REQUIRED, "a": REQUIRED, "seed": None},
    "slices": {"d": 3, "m": REQUIRED, "p": REQUIRED, "n": REQUIRED, "axis": 1, "seed": None},
    "oracle": {"rule": "modified", "d": 2, "delta": None, "L": REQUIRED, "p": REQUIRED},
    "consts": {"p_list": [0.1, 0.05, 0.02, 0.01], "d_list": [2, 3, 4]},
}

HELP = {
    "simulate": "estimate the spanning probability I(L, p)",
    "crossing": "estimate the crossing probability f_m(x, y)",
    "chi": "estimate the mean centre-component volume chi_n",
    "bigcomp": "estimate P(closure on Q(m) has a component of diameter >= n)",
    "threshold": "bisect for p_alpha(L), the p with I(L, p) = alpha",
    "sweep": "finite-size scaling of p_1/2(L) and the sharpness width",
    "bound": "compare the slice bound against a crossing estimate",
    "decompose": "find a connected spanned set of diameter in [a, 2a]",
    "slices": "slice construction and domination check on a random cube",
    "oracle": "exact spanning probability by enumeration (volume <= 25)",
    "consts": "threshold constant and the nominal length scales exp^(d-1)(lambda/p)",
}


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


OPTIONS: dict[str, tuple[tuple[str, ...], dict[str, Any]]] = {
    "rule": (("--rule",), {"choices": ["modified", "standard"]}),
    "d": (("-d", "--dim"), {"type": int, "dest": "d", "help": "ambient dimension"}),
    "delta": (("--delta",), {"type": int, "help": "effective dimension (default: d)"}),
    "L": (("-L",), {"type": int, "dest": "L", "help": "cube side"}),
    "L_list": (("--L-list",), {"type": _ints, "dest": "L_list", "help": "comma-separated cube sides"}),
    "p": (("-p",), {"type": float, "help": "site density"}),
    "p_list": (("--p-list",), {"type": _floats, "dest": "p_list"}),
    "d_list": (("--d-list",), {"type": _ints, "dest": "d_list"}),
    "m": (("-m",), {"type": int, "help": "cube side"}),
    "n": (("-n",), {"type": int, "help": "diameter cutoff / half-width"}),
    "x": (("-x",), {"type": _ints, "help": "site, e.g. 1,1,1"}),
    "y": (("-y",), {"type": _ints, "help": "site, e.g. 6,1,1"}),
    "a": (("-a",), {"type": int, "help": "target diameter"}),
    "axis": (("--axis",), {"type": int, "help": "1-based slicing axis"}),
    "trials": (("--trials",), {"type": int}),
    "seed": (("--seed",), {"type": int, "help": "master seed (drawn from entropy and echoed if omitted)"}),
    "alpha": (("--alpha",), {"type": float}),
    "tol": (("--tol",), {"type": float}),
    "eps": (("--eps",), {"type": float, "help": "sharpness levels are eps and 1 - eps"}),
    "format": (("--format",), {"choices": ["csv", "json"]}),
    "output": (("-o", "--output",), {"help": "write CSV rows to this path"}),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, keys in COMMANDS.items():
        p = sub.add_parser(name, help=HELP[name], argument_default=argparse.SUPPRESS)
        for key in keys:
            flags, kw = OPTIONS[key]
            p.add_argument(*flags, **kw)
        p.add_argument("--config", help="JSON file of parameters; flags override it")
        p.add_argument("--threads", type=int, help="worker cap; does not change results")
        p.add_argument("--progress", action="store_true", help="print progress lines to stderr")
    return parser


def resolve_config(command: str, args: dict[str, Any]) -> dict[str, Any]:
    defaults = COMMANDS[command]
    cfg = dict(defaults)
    if args.get("config"):
        try:
            loaded = json.loads(Path(args["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args['config']}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        loaded = dict(loaded)
        if loaded.pop("command", command) != command:
            raise UsageError(f"config file is for a different command; run it with that command instead of {command}")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    cfg.update({k: v for k, v in args.items() if k in defaults})
    missing = [k for k, v in cfg.items() if v is REQUIRED]
    if missing:
        flags = ", ".join(OPTIONS[k][0][-1] for k in missing)
        raise UsageError(f"{command} needs {flags}")
    if "seed" in cfg and cfg["seed"] is None:
        cfg["seed"] = secrets.randbits(63)
    for key in ("x", "y", "L_list", "p_list", "d_list"):
        if key in cfg:
            cfg[key] = list(cfg[key])
    return cfg


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def _estimate(e: Estimate) -> dict[str, Any]:
    return {"point": e.point, "ci_low": e.ci_low, "ci_high": e.ci_high, "trials": e.trials, "seed": e.seed,
            "std_err": e.std_err}


def _rule(cfg: dict[str, Any]) -> Rule:
    return Rule(cfg.get("rule", "modified"))


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _check_p(p: float) -> None:
    _need(0.0 <= p <= 1.0, f"-p must lie in [0, 1], got {p}")


def _check_trials(t: int) -> None:
    _need(t >= 1, f"--trials must be positive, got {t}")


def _region(d: int, delta: int | None, L: int):
    delta = d if delta is None else delta
    _need(1 <= delta <= d, f"need 1 <= delta <= d, got delta={delta}, d={d}")
    _need(L >= 1, f"-L must be >= 1, got {L}")
    _need(L**delta <= MAX_SWEEP_VOLUME, f"volume {L}^{delta} exceeds the cap of 2^30 sites; lower -L")
    return make_region(d, delta, L)


def _site(name: str, s: list[int], d: int, side: int) -> tuple[int, ...]:
    _need(len(s) == d, f"-{name} needs {d} coordinates, got {len(s)}")
    _need(all(1 <= c <= side for c in s), f"-{name} must lie in {{1..{side}}}^{d}, got {s}")
    return tuple(s)


Handler = Callable[[dict[str, Any], int | None, Callable[[str], None] | None], Any]


def cmd_simulate(cfg, threads, progress):
    region = _region(cfg["d"], cfg["delta"], cfg["L"])
    _check_p(cfg["p"])
    _check_trials(cfg["trials"])
    est = estimate_I(TrialPlan(_rule(cfg), region, cfg["p"], cfg["trials"], cfg["seed"]), threads)
    return {"estimate": _estimate(est)}


def cmd_crossing(cfg, threads, progress):
    region = _region(cfg["d"], None, cfg["m"])
    _check_p(cfg["p"])
    _check_trials(cfg["trials"])
    x = _site("x", cfg["x"], cfg["d"], cfg["m"])
    y = _site("y", cfg["y"], cfg["d"], cfg["m"])
    est = estimate_f(TrialPlan(_rule(cfg), region, cfg["p"], cfg["trials"], cfg["seed"]), x, y, threads)
    return {"estimate": _estimate(est)}


def cmd_chi(cfg, threads, progress):
    _need(cfg["n"] >= 0, "-n must be >= 0")
    _need(cfg["delta"] >= 1, "--delta must be >= 1")
    _region(cfg["delta"], None, 2 * cfg["n"] + 1)
    _check_p(cfg["p"])
    _check_trials(cfg["trials"])
    est = estimate_chi(_rule(cfg), cfg["delta"], cfg["n"], cfg["p"], cfg["trials"], cfg["seed"], threads)
    return {"estimate": _estimate(est)}


def cmd_bigcomp(cfg, threads, progress):
    _need(0 <= cfg["n"] <= cfg["m"], f"need 0 <= n <= m, got n={cfg['n']}, m={cfg['m']}")
    _need(cfg["delta"] >= 1, "--delta must be >= 1")
    _region(cfg["delta"], None, cfg["m"])
    _check_p(cfg["p"])
    _check_trials(cfg["trials"])
    est = estimate_F(_rule(cfg), cfg["delta"], cfg["m"], cfg["n"], cfg["p"], cfg["trials"], cfg["seed"], threads)
    return {"estimate": _estimate(est)}


def cmd_threshold(cfg, threads, progress):
    region = _region(cfg["d"], None, cfg["L"])
    _need(0 < cfg["alpha"] < 1, f"--alpha must lie in (0, 1), got {cfg['alpha']}")
    _need(cfg["tol"] > 0, f"--tol must be positive, got {cfg['tol']}")
    _check_trials(cfg["trials"])
    s = search_p_alpha(_rule(cfg), region, cfg["alpha"], cfg["tol"], cfg["trials"], cfg["seed"], threads=threads)
    return {"p_alpha": s.p, "bracket": [s.lo, s.hi],
            "probes": [{"p": p, "estimate": _estimate(e)} for p, e in s.probes]}


def _sweep_rows(points) -> list[dict[str, Any]]:
    rows = []
    for pt in points:
        lo, hi = sorted(k for k in pt.p_levels if k != 0.5)
        rows.append({"L": pt.L, "p_half": pt.p_half, "scaled": pt.scaled, "width": pt.width,
                     "relative_width": pt.relative_width, "p_lo": pt.p_levels[lo], "p_hi": pt.p_levels[hi],
                     "p_half_se": pt.p_half_se, "trials": pt.trials})
    return rows


def cmd_sweep(cfg, threads, progress):
    d = cfg["d"]
    _need(d in (1, 2, 3), f"sweeps support d in 1..3, got {d}")
    _need(len(cfg["L_list"]) > 0, "--L-list is empty")
    for L in cfg["L_list"]:
        _need(L >= (3 if d == 3 else 2), f"L={L} too small for d={d}")
        _need(L**d <= MAX_SWEEP_VOLUME, f"L={L} in d={d} exceeds the cap of 2^30 sites; lower --L-list")
    _need(0 < cfg["eps"] < 0.5, f"--eps must lie in (0, 0.5), got {cfg['eps']}")
    _check_trials(cfg["trials"])
    _need(cfg["tol"] is None or cfg["tol"] > 0, "--tol must be positive")
    points = sweep_scaling(_rule(cfg), d, cfg["L_list"], (cfg["eps"], 1 - cfg["eps"]), cfg["trials"], cfg["seed"],
                           cfg["tol"], threads, progress)
    return {"rows": _sweep_rows(points), "lambda": threshold_constant()}


def cmd_bound(cfg, threads, progress):
    d, m = cfg["d"], cfg["m"]
    _need(d >= 3, f"the slice bound needs d >= 3, got {d}")
    _need(1 <= cfg["n"] <= m, f"need 1 <= n <= m, got n={cfg['n']}")
    _region(d, None, m)
    _check_p(cfg["p"])
    _check_trials(cfg["trials"])
    x = _site("x", cfg["x"], d, m)
    y = _site("y", cfg["y"], d, m)
    r = bound_vs_estimate(m, cfg["n"], cfg["p"], x, y, cfg["trials"], cfg["seed"], d=d, threads=threads)
    return {"ell": r.ell, "F": _estimate(r.F), "chi": _estimate(r.chi), "f": _estimate(r.f),
            "bound": r.bound.value, "bound_raw": r.bound.raw, "bound_at_upper_ci": r.bound_upper.value,
            "divergent": r.divergent, "vacuous": r.vacuous, "holds": r.holds}


def cmd_decompose(cfg, threads, progress):
    region = _region(cfg["d"], None, cfg["L"])
    _need(cfg["d"] >= 2, "decomposition needs d >= 2")
    _need(cfg["a"] >= 1, "-a must be >= 1")
    _check_p(cfg["p"])
    rule = _rule(cfg)
    X = random_fill(region, cfg["p"], RngStream(cfg["seed"], 0))
    closure = close(rule, X).final
    T = aizenman_lebowitz_decompose(rule, X, cfg["a"])
    comps = components(T)
    return {"occupied": X.count(), "closure_max_diameter": int(components(closure).max_diameter()),
            "T_sites": [list(s) for s in T.sites()], "T_diameter": int(comps.max_diameter()),
            "T_connected": comps.count == 1, "T_internally_spanned": close(rule, X & T).final == T}


def cmd_slices(cfg, threads, progress):
    d, m = cfg["d"], cfg["m"]
    _need(d >= 2, "slices need d >= 2")
    region = _region(d, None, m)
    _need(1 <= cfg["axis"] <= d, f"--axis must lie in 1..{d}")
    _need(cfg["n"] >= 0, "-n must be >= 0")
    _check_p(cfg["p"])
    X = random_fill(region, cfg["p"], RngStream(cfg["seed"], 0))
    dec = slice_construct(X, cfg["axis"], cfg["n"])
    closure = close(Rule.modified(), X).final
    return {"occupied": X.count(), "full_slices": dec.full_flags, "Z_volume": dec.Z.count(),
            "closure_volume": closure.count(), "dominates": check_domination(dec, closure)}


def cmd_oracle(cfg, threads, progress):
    region = _region(cfg["d"], cfg["delta"], cfg["L"])
    _need(region.volume <= MAX_ORACLE_VOLUME, f"enumeration needs volume <= {MAX_ORACLE_VOLUME}; lower -L")
    _check_p(cfg["p"])
    return {"probability": exact_spanning_probability(_rule(cfg), region, cfg["p"]), "volume": region.volume}


def cmd_consts(cfg, threads, progress):
    lam = threshold_constant()
    _need(all(0 < p <= 1 for p in cfg["p_list"]), "--p-list entries must lie in (0, 1]")
    _need(all(d >= 1 for d in cfg["d_list"]), "--d-list entries must be >= 1")
    scales = []
    for d in cfg["d_list"]:
        for p in cfg["p_list"]:
            v = iter_exp(d - 1, lam / p)
            scales.append({"d": d, "p": p, "iterations": d - 1, "argument": lam / p, "value": v.value,
                           "log2": v.log2, "saturated": v.saturated})
    return {"lambda": lam, "lambda_standard_d2": math.pi**2 / 18, "numerical_prediction_modified_d2": 0.47,
            "scales": scales}


HANDLERS: dict[str, Handler] = {
    "simulate": cmd_simulate,
    "crossing": cmd_crossing,
    "chi": cmd_chi,
    "bigcomp": cmd_bigcomp,
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "bound": cmd_bound,
    "decompose": cmd_decompose,
    "slices": cmd_slices,
    "oracle": cmd_oracle,
    "consts": cmd_consts,
}


def envelope(command: str, cfg: dict[str, Any], result: Any) -> dict[str, Any]:
    return {"program": PROG, "version": __version__, "command": command, "config": cfg, "result": _finite(result)}


def _dump(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _sweep_csv(command: str, cfg: dict[str, Any], rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# {PROG} {__version__} {command}\n")
    buf.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.pop("command")
    threads = args.pop("threads", None)
    want_progress = args.pop("progress", False)
    progress = (lambda msg: print(msg, file=stderr, flush=True)) if want_progress else None
    try:
        cfg = resolve_config(command, args)
        _need(threads is None or threads >= 1, "--threads must be >= 1")
        result = HANDLERS[command](cfg, threads, progress)
    except UsageError as exc:
        print(f"{PROG} {command}: error: {exc}", file=stderr)
        return 2
    except (ValueError, OverflowError, ConvergenceError, RuntimeError) as exc:
        print(f"{PROG} {command}: runtime error: {exc}", file=stderr)
        return 1
    if command == "sweep" and cfg["format"] == "csv":
        text = _sweep_csv(command, cfg, result["rows"])
        if cfg["output"]:
            Path(cfg["output"]).write_text(text)
            stdout.write(_dump(envelope(command, cfg, {"csv": cfg["output"], "rows": len(result["rows"])})))
        else:
            stdout.write(text)
        return 0
    stdout.write(_dump(envelope(command, cfg, result)))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
