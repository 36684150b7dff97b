"""Command-line experiment runner.

Every subcommand resolves a configuration (defaults, then ``--config`` file,
then flags), runs, and writes a ``RunRecord`` as CSV or JSON.  Exit codes:
0 success, 1 verification failure, 2 usage error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__, acceptance, bounds, densesim, f2walk, fourier, phasewalk
from .errors import CapacityError, DomainError, InputError
from .records import RunRecord, write
from .stats import mean_stderr

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def int_list(text) -> list[int]:
    """``"0,10,20"``, ``"0:100:10"`` (inclusive stop) or a single integer."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            if step <= 0:
                raise UsageError(f"bad range {part!r}")
            out.extend(range(start, stop + 1, step))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty list {text!r}")
    return out


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def _opt_float(v):
    return None if v is None else float(v)


COMMON = {"seed": int, "output": str, "format": str, "workers": int}

PARAMS: dict[str, dict] = {
    "moments": {"n": int, "d": int_list, "t": int_list, "trials": int, "measure": str,
                "psi": str, "initial": str},
    "ideal-walk": {"n": int, "t": int, "m": int_list, "trials": int, "spectrum": _bool},
    "spectrum": {"n": int, "t": int},
    "fourier": {"n": int, "t": int, "task": str, "A": float, "mode": str, "trials": int},
    "conjecture": {"n": int, "t": int, "c": float, "trials": int},
    "f2mix": {"n": int, "k": int_list, "zstring": _bool, "mode": str, "trials": int},
    "bounds": {"formula": str, "n": int, "d": int_list, "t": int, "delta": float, "K": float, "B": float,
               "lambda_G": float, "C1": float, "C2": float, "C3": float, "C4": float, "C": float,
               "Cprime": float, "k_mix": _opt_float, "gateset_size": float, "log_base": float,
               "R": float, "moment": _opt_float, "c": _opt_float},
    "verify": {"only": lambda v: [str(x) for x in v] if isinstance(v, list) else str(v).split(",")},
}

DEFAULTS: dict[str, dict] = {
    "moments": {"n": 2, "d": list(range(0, 101, 10)), "t": [1, 2], "trials": 2000, "measure": "haar",
                "psi": "zero", "initial": "zero"},
    "ideal-walk": {"n": 1, "t": 1, "m": list(range(11)), "trials": 4000, "spectrum": False},
    "spectrum": {"n": 2, "t": 2},
    "fourier": {"n": 2, "t": 2, "task": "parseval", "A": 2.0, "mode": "exhaustive", "trials": 10_000},
    "conjecture": {"n": 8, "t": 16, "c": 1.0, "trials": 10_000},
    "f2mix": {"n": 3, "k": [0, 1, 2, 4, 8, 16, 32, 64, 128], "zstring": False, "mode": "exact", "trials": 10_000},
    "bounds": {"formula": "thm1_unitary", "n": 16, "d": [100], "t": 1, "delta": 0.1, "K": bounds.DEFAULT_K,
               "B": bounds.DEFAULT_B, "lambda_G": bounds.DEFAULT_LAMBDA_G,
               "C1": bounds.THM3_CONSTANTS[0], "C2": bounds.THM3_CONSTANTS[1],
               "C3": bounds.THM3_CONSTANTS[2], "C4": bounds.THM3_CONSTANTS[3], "C": 40000.0,
               "Cprime": 200.0, "k_mix": None, "gateset_size": 2.0, "log_base": 2.0, "R": 0.0,
               "moment": None, "c": None},
    "verify": {"only": None},
}
COMMON_DEFAULTS = {"seed": 0, "output": None, "format": "csv", "workers": 1}

# flags that apply to every subcommand even if the command ignores them
SHARED_FLAGS = ("n", "d", "t", "trials")


def load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file {path} not found")
    text = p.read_text()
    data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    return data


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    """defaults < config file < flags; unknown keys are rejected."""
    schema = {**PARAMS[command], **COMMON}
    cfg = {**COMMON_DEFAULTS, **DEFAULTS[command]}
    for source in (file_cfg, flags):
        for key, value in source.items():
            if key == "command":
                if value != command:
                    raise UsageError(f"config is for {value!r}, not {command!r}")
                continue
            if key not in schema:
                raise UsageError(f"unknown key {key!r} for {command}; allowed: {', '.join(sorted(schema))}")
            if value is None:
                continue
            try:
                cfg[key] = schema[key](value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {value!r} ({exc})") from None
    if cfg["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if cfg["workers"] < 1:
        raise UsageError("workers must be >= 1")
    return cfg


# --- commands ------------------------------------------------------------------------------

def cmd_moments(cfg: dict) -> RunRecord:
    rec = RunRecord("moments", cfg)
    rows = densesim.moment_curve(cfg["n"], cfg["d"], cfg["t"], cfg["trials"], cfg["seed"], cfg["measure"],
                                 cfg["psi"], cfg["initial"], cfg["workers"])
    rec.add("moments", [{**r, "measure": cfg["measure"], "trials": cfg["trials"],
                         "provenance": "monte-carlo", "seed": cfg["seed"]} for r in rows])
    return rec


def _spectrum_rows(n: int, t: int, seed: int) -> list[dict]:
    s = phasewalk.ideal_spectrum(n, t)
    return [{"n": n, "t": t, "eigenvalue": float(q), "eigenvalue_fraction": q, "multiplicity": mult,
             "rank": i, "is_second": q == s.second_highest, "achieved_by_parity": s.achieved_by_parity,
             "provenance": "exact", "seed": seed}
            for i, (q, mult) in enumerate(s.eigenvalues.items())]


def cmd_ideal_walk(cfg: dict) -> RunRecord:
    rec = RunRecord("ideal-walk", cfg)
    n, t, ms = cfg["n"], cfg["t"], sorted(set(cfg["m"]))
    ov = phasewalk.ideal_overlaps(n, ms, cfg["trials"], cfg["seed"], cfg["workers"])
    rows = []
    for j, m in enumerate(ms):
        exact = phasewalk.exact_moment_ideal(n, m, t)
        est = mean_stderr(np.abs(ov[:, j]) ** (2 * t))
        rows.append({"n": n, "m": m, "t": t, "exact": float(exact), "exact_fraction": exact,
                     "estimate": est.estimate, "stderr": est.stderr, "trials": cfg["trials"],
                     "within_3sigma": est.within(float(exact)), "provenance": "monte-carlo", "seed": cfg["seed"]})
    rec.add("ideal_walk", rows)
    if cfg["spectrum"]:
        rec.add("spectrum", _spectrum_rows(n, t, cfg["seed"]))
    rec.summary["limit"] = phasewalk.exact_moment_ideal(n, math.inf, t)
    return rec


def cmd_spectrum(cfg: dict) -> RunRecord:
    rec = RunRecord("spectrum", cfg)
    rec.add("spectrum", _spectrum_rows(cfg["n"], cfg["t"], cfg["seed"]))
    return rec


def cmd_fourier(cfg: dict) -> RunRecord:
    rec = RunRecord("fourier", cfg)
    n, t, seed = cfg["n"], cfg["t"], cfg["seed"]
    task = cfg["task"]
    if task == "parseval":
        r = fourier.parseval_exhaustive(n, t)
        rec.add("parseval", [{"n": n, "t": t, "classes": r.classes, "pairs": r.pairs, "violations": r.violations,
                              "min_ratio": r.min_ratio, "provenance": "exact", "seed": seed}])
    elif task == "low-support":
        r = fourier.low_support_fraction(n, t, cfg["A"], cfg["mode"], cfg["trials"], seed, cfg["workers"])
        exhaustive = cfg["mode"] == "exhaustive"
        rec.add("low_support", [{"n": n, "t": t, "A": cfg["A"], "mode": cfg["mode"],
                                 "fraction": r.exact if exhaustive else r.fraction,
                                 "counting_bound": r.counting_bound, "vacuous": r.vacuous,
                                 "trials": None if exhaustive else cfg["trials"],
                                 "provenance": "exact" if exhaustive else "monte-carlo", "seed": seed}])
    elif task == "distribution":
        dist = fourier.support_distribution(n, t)
        rec.add("support_distribution", [{"n": n, "t": t, "support": s, "count": c, "provenance": "exact",
                                          "seed": seed} for s, c in sorted(dist.items())])
    else:
        raise UsageError("task must be parseval, low-support or distribution")
    return rec


def cmd_conjecture(cfg: dict) -> RunRecord:
    rec = RunRecord("conjecture", cfg)
    r = fourier.conjecture1_estimate(cfg["n"], cfg["t"], cfg["c"], cfg["trials"], cfg["seed"], cfg["workers"])
    rec.add("conjecture", [{"n": r.n, "t": r.t, "c": r.c, "threshold": r.threshold, "tail": r.tail_prob,
                            "ci_low": r.ci_low, "ci_high": r.ci_high, "trials": r.trials,
                            "support_min": r.support_min, "support_median": r.support_median,
                            "support_max": r.support_max, "provenance": "monte-carlo", "seed": r.seed}])
    return rec


def cmd_f2mix(cfg: dict) -> RunRecord:
    rec = RunRecord("f2mix", cfg)
    n, seed = cfg["n"], cfg["seed"]
    if cfg["zstring"]:
        rows = []
        for k in sorted(set(cfg["k"])):
            z = f2walk.zstring_uniformity(n, k, cfg["mode"], cfg["trials"], seed, cfg["workers"])
            rows.append({"n": n, "k": k, "mode": cfg["mode"], "tv_nonzero": z.tv, "nonzero_vs_all": z.nonzero_vs_all,
                         "trials": None if cfg["mode"] == "exact" else cfg["trials"],
                         "provenance": "exact" if cfg["mode"] == "exact" else "monte-carlo", "seed": seed})
        rec.add("zstring", rows)
        return rec
    table = f2walk.enumerate_group(n)
    curve = f2walk.tv_curve(table, sorted(set(cfg["k"])))
    rec.add("f2mix", [{"n": n, "k": r.k, "tv": r.tv, "bound": r.bound, "bound_vacuous": r.bound_vacuous,
                       "holds": r.holds, "provenance": "exact", "seed": seed} for r in curve])
    if n <= f2walk.EIG_MAX_QUBITS:
        g = f2walk.walk_spectral_gap(table)
        rec.add("f2gap", [{"n": n, "order": table.order, "diameter": table.diameter,
                           "second_eigenvalue": g.second_eigenvalue, "gap": g.gap, "lemma_rate": g.lemma_rate,
                           "comparison_rate": g.comparison_rate, "provenance": "exact", "seed": seed}])
        c = f2walk.lemma1_certificate(table)
        rec.add("lemma1", [{"n": n, "k0": c.k0, "tv_at_k0": c.tv_at_k0, "bound_at_k0": c.bound_at_k0,
                            "lambda_star": c.lambda_star, "log2_envelope_at_k0": c.log2_envelope_at_k0,
                            "holds": c.holds, "provenance": "exact", "seed": seed}])
    return rec


def cmd_bounds(cfg: dict) -> RunRecord:
    rec = RunRecord("bounds", cfg)
    keys = ("n", "t", "delta", "K", "B", "lambda_G", "C1", "C2", "C3", "C4", "C", "Cprime", "k_mix",
            "gateset_size", "log_base")
    extra = {k: cfg[k] for k in ("R", "moment", "c") if cfg[k] is not None}
    rows = []
    for d in cfg["d"]:
        params = bounds.BoundParams(d=float(d), **{k: cfg[k] for k in keys})
        for r in bounds.evaluate(cfg["formula"], params, **extra):
            rows.append({"formula": r["formula"], "inputs": r["inputs"], "value": r["value"],
                         "vacuous": r["vacuous"], "extras": r.get("extras", {}), "provenance": "formula",
                         "seed": cfg["seed"]})
    rec.add("bounds", rows)
    return rec


def cmd_verify(cfg: dict) -> RunRecord:
    rec = RunRecord("verify", cfg)
    results = acceptance.run_all(cfg["seed"], cfg["only"], echo=lambda s: print(s, file=sys.stderr))
    rec.add("verify", [r.as_row() for r in results])
    rec.summary["passed"] = all(r.passed for r in results)
    return rec


COMMANDS = {"moments": cmd_moments, "ideal-walk": cmd_ideal_walk, "spectrum": cmd_spectrum,
            "fourier": cmd_fourier, "conjecture": cmd_conjecture, "f2mix": cmd_f2mix,
            "bounds": cmd_bounds, "verify": cmd_verify}


# --- argument parsing -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqclab", description="Random-circuit moment and complexity lab.")
    parser.add_argument("--version", action="version", version=f"rqclab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in PARAMS.items():
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON or YAML file; flags override its values")
        p.add_argument("--seed", help="master seed (64-bit)")
        p.add_argument("--output", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", help="threads for Monte Carlo chunks")
        for flag in SHARED_FLAGS:
            if flag not in params:
                p.add_argument(f"--{flag}", help=argparse.SUPPRESS)
        for key in params:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    command = args.pop("command")
    config_path = args.pop("config", None)
    unused = [k for k in SHARED_FLAGS if k in args and k not in PARAMS[command]]
    try:
        if unused:
            raise UsageError(f"{command} does not take --{', --'.join(unused)}")
        file_cfg = load_config_file(config_path) if config_path else {}
        cfg = resolve_config(command, file_cfg, args)
        start = time.perf_counter()
        record = COMMANDS[command](cfg)
        elapsed = time.perf_counter() - start
        write(record, cfg["format"], cfg["output"])
        print(f"rqclab {command}: {elapsed:.2f}s", file=sys.stderr)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error in {command}: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, DomainError) as exc:
        print(f"invalid input for {command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if command == "verify" and not record.summary["passed"]:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
