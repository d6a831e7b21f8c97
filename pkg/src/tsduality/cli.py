"""Command-line entry point.

Exit codes: 0 success, 1 a numeric check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from . import experiments as ex
from .channels import Evolution
from .correlations import correlation_duality_check
from .duality import evolution_to_state
from .errors import DimensionError, InvalidStateError, NotHermitianError
from .io import InputError, load_source, report_json, rows_to_csv
from .quantum import SQRT2
from .randomness import random_hermitian
from .weak import EPSILON_LADDER

log = logging.getLogger("tsduality")

COMMANDS = ("verify", "reproduce", "haar", "bench", "weak-converge",
            "decoherence-scan", "cglmp", "i3322", "three-time")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsduality", description="Temporal/spatial correlation toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--epsilon", type=float, default=None,
                   help="smallest meter epsilon for weak-converge (default: ladder down to 1e-3)")
    p.add_argument("--gamma", type=float, default=SQRT2, help="dephasing rate")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--in", dest="infile", default=None, help="channel or ensemble JSON")
    p.add_argument("--out", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _check_args(a) -> None:
    if a.tol <= 0:
        raise InputError("--tol must be positive")
    if a.dim is not None and a.dim < 2:
        raise InputError("--dim must be at least 2")
    if a.samples is not None and a.samples < 1:
        raise InputError("--samples must be at least 1")
    if a.jobs < 1:
        raise InputError("--jobs must be at least 1")
    if a.gamma <= 0:
        raise InputError("--gamma must be positive")
    if a.epsilon is not None and a.epsilon <= 0:
        raise InputError("--epsilon must be positive")


def _verify_input(a) -> dict:
    """Temporal vs spatial correlation on a user-supplied channel or ensemble with random observables."""
    src = load_source(a.infile)
    ens = evolution_to_state(src) if isinstance(src, Evolution) else src
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(a.seed).spawn(a.samples or 20)]
    deltas = [correlation_duality_check(ens, random_hermitian(ens.d_a, r), random_hermitian(ens.d_b, r)).delta
              for r in rngs]
    return {"n": len(deltas), "max_delta": max(deltas), "passed": max(deltas) <= a.tol}


def run(a) -> tuple:
    """Return ``(ok, data, rows)`` for the parsed arguments."""
    cmd = a.command
    if cmd == "verify":
        data = ex.verify(a.seed, a.tol, a.samples or 200, a.dim, a.jobs)
        if a.infile:
            data["suites"]["input"] = _verify_input(a)
            data["ok"] = data["ok"] and data["suites"]["input"]["passed"]
        rows = [{"suite": k, **v} for k, v in data["suites"].items()]
        return data["ok"], data, rows
    if cmd == "reproduce":
        rows = ex.reproduce(a.gamma)
        return all(r["ok"] for r in rows), {"rows": len(rows)}, rows
    if cmd == "haar":
        dims = [a.dim] if a.dim else [2, 4, 8, 16]
        data = ex.haar_trend(dims, a.samples or 10_000, a.seed)
        ok = data["decreasing"] if len(dims) > 1 else True
        return ok, data, data["reports"]
    if cmd == "bench":
        dims = [a.dim] if a.dim else [16, 32, 64, 128]
        data = ex.benchmark(dims, a.samples or 5, a.seed, tol=max(a.tol, 1e-9))
        ok = data["correct"] and (len(dims) == 1 or data["monotone"])
        return ok, data, data["rows"]
    if cmd == "weak-converge":
        ladder = [e for e in EPSILON_LADDER if a.epsilon is None or e >= a.epsilon]
        if a.epsilon is not None and a.epsilon not in ladder:
            ladder.append(a.epsilon)
        if len(ladder) < 2:
            raise InputError("--epsilon leaves fewer than two ladder points")
        data = ex.weak_convergence(a.samples or 20, a.seed, ladder, a.jobs)
        ok = 0.8 <= data["slope_min"] and data["slope_max"] <= 1.2 and max(data["commuting_deltas"]) == 0
        rows = [{"setup": i, "slope": s["slope"]} for i, s in enumerate(data["setups"])]
        return ok, data, rows
    if cmd == "decoherence-scan":
        data = ex.decoherence_scan(a.gamma, a.samples or 100)
        ok = data["max_delta"] <= max(a.tol, 1e-12)
        return ok, data, data["rows"]
    if cmd == "cglmp":
        data = ex.cglmp_report()
        ok = max(data["anomaly"]["arrows"].values()) <= 1e-9
        return ok, data, [{"cell": k, "value": v} for k, v in data["anomaly"]["cells"].items()]
    if cmd == "i3322":
        data = ex.i3322_report(a.seed, a.samples or 12, a.jobs)
        ok = data["lhv_max"] <= 1e-12 and abs(data["spatial_optimum"]["value"] - 0.25) <= 1e-6
        rows = [{"case": k, "original_labels": v["value_original_labels"], "relabelled": v["value_relabelled"]}
                for k, v in data["reference"].items()]
        return ok, data, rows
    if cmd == "three-time":
        data = ex.three_time_search()
        ok = data["best"]["gap"] >= 0.1 and all(abs(p - 1) <= 1e-12 for p in data["monogamy_pairs"])
        return ok, data, data["rows"]
    raise InputError(f"unknown command {cmd}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        _check_args(a)
        ok, data, rows = run(a)
    except (InputError, InvalidStateError, NotHermitianError, DimensionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if a.format == "csv":
        text = rows_to_csv(rows)
    else:
        text = report_json({"command": a.command, "ok": bool(ok), "seed": a.seed, "tol": a.tol,
                            "data": data, "rows": rows})
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", a.out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    if not ok:
        log.warning("%s: numeric check failed", a.command)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
