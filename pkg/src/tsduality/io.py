"""JSON and CSV serialisation of evolutions, ensembles and reports.

Complex matrices are nested row-major lists of ``[re, im]`` pairs. Inputs are
validated against the schemas shipped in ``tsduality/schemas`` before any
numerics run.
"""
from __future__ import annotations

import csv
import io
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Union

import jsonschema
import numpy as np

from .channels import Evolution
from .duality import BipartiteEnsemble
from .errors import DimensionError


class InputError(ValueError):
    """Malformed or schema-violating input file."""


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    text = resources.files("tsduality").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: Any, name: str) -> None:
    try:
        jsonschema.validate(doc, schema(name))
    except jsonschema.ValidationError as exc:
        raise InputError(f"{name} schema: {exc.message}") from exc


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise InputError("matrix must be a rectangular list of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def evolution_to_json(e: Evolution) -> dict:
    return {
        "d_a": e.d_a,
        "d_b": e.d_b,
        "branches": [{"p": float(p), "m": matrix_to_json(m)} for p, m in zip(e.probs, e.ops)],
    }


def evolution_from_json(doc: Mapping) -> Evolution:
    validate(doc, "channel")
    ops = [matrix_from_json(b["m"]) for b in doc["branches"]]
    for m in ops:
        if m.shape != (doc["d_b"], doc["d_a"]):
            raise InputError(f"branch matrix {m.shape} does not match d_b x d_a")
    try:
        return Evolution(np.array(ops), [b["p"] for b in doc["branches"]])
    except (ValueError, DimensionError) as exc:
        raise InputError(str(exc)) from exc


def ensemble_to_json(ens: BipartiteEnsemble) -> dict:
    return {
        "d_a": ens.d_a,
        "d_b": ens.d_b,
        "members": [{"p": float(p), "amps": matrix_to_json(a)} for p, a in zip(ens.probs, ens.amps)],
    }


def ensemble_from_json(doc: Mapping) -> BipartiteEnsemble:
    validate(doc, "ensemble")
    amps = [matrix_from_json(m["amps"]) for m in doc["members"]]
    for a in amps:
        if a.shape != (doc["d_a"], doc["d_b"]):
            raise InputError(f"amplitude matrix {a.shape} does not match d_a x d_b")
    try:
        return BipartiteEnsemble([m["p"] for m in doc["members"]], np.array(amps))
    except (ValueError, DimensionError) as exc:
        raise InputError(str(exc)) from exc


def read_json(path: Union[str, Path]) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})") from exc


def load_source(path: Union[str, Path]):
    """Evolution or ensemble, whichever the file holds."""
    doc = read_json(path)
    if isinstance(doc, dict) and "branches" in doc:
        return evolution_from_json(doc)
    if isinstance(doc, dict) and "members" in doc:
        return ensemble_from_json(doc)
    raise InputError(f"{path}: neither a channel nor an ensemble document")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def report_json(report: Mapping) -> str:
    doc = _plain(report)
    validate(doc, "report")
    return json.dumps(doc, indent=2, allow_nan=True)


def rows_to_csv(rows: Iterable[Mapping]) -> str:
    """CSV with ``repr`` floats so values round-trip exactly."""
    rows = [_plain(r) for r in rows]
    if not rows:
        return ""
    fields: List[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def rows_from_csv(text: str) -> List[dict]:
    """Inverse of :func:`rows_to_csv`; numeric-looking cells become floats."""
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in r.items():
            try:
                row[k] = float(v)
            except (TypeError, ValueError):
                row[k] = v
        out.append(row)
    return out
