"""JSON documents for behaviors, collections, correlation sets, models, states and setups.

Keys are 0-based.  Setting tuples and (party, setting) pairs are written as
comma-separated strings such as ``"0,1"``.  Exact numbers are ``"p/q"``
strings; float numbers are plain JSON numbers.  Complex matrix entries are
``[re, im]`` pairs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any

import numpy as np

from .lhv import LhvModel
from .locality import ExperimentCollection
from .quantum import DensityOperator, MeasurementSetup, Povm
from .scenario import EXACT, FLOAT, Behavior, CorrelationSet, Scenario


class SchemaError(ValueError):
    """Input document does not follow the expected layout."""


def _key(text: str, size: int | None = None) -> tuple[int, ...]:
    try:
        out = tuple(int(p) for p in str(text).split(",")) if str(text) != "" else ()
    except ValueError:
        raise SchemaError(f"bad index key {text!r}") from None
    if size is not None and len(out) != size:
        raise SchemaError(f"key {text!r} should have {size} components")
    return out


def _fmt_key(values) -> str:
    return ",".join(str(int(v)) for v in values)


def parse_number(value: Any, mode: str):
    """A JSON number or "p/q" string as a Fraction (exact) or float."""
    if isinstance(value, bool):
        raise SchemaError(f"boolean {value!r} is not a number")
    if mode == EXACT:
        try:
            if isinstance(value, float):
                if not math.isfinite(value):
                    raise SchemaError(f"non-finite number {value!r}")
                # Decimal reading of the literal, so 0.1 stays 1/10.
                return Fraction(repr(value))
            return Fraction(value)
        except (ValueError, TypeError, ZeroDivisionError):
            raise SchemaError(f"cannot read {value!r} as a rational number") from None
    try:
        out = float(Fraction(value)) if isinstance(value, str) else float(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SchemaError(f"cannot read {value!r} as a number") from None
    if not math.isfinite(out):
        raise SchemaError(f"non-finite number {value!r}")
    return out


def format_number(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def _require(doc: dict, *keys: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("expected a JSON object")
    for k in keys:
        if k not in doc:
            raise SchemaError(f"missing field {k!r}")


def _scenario_from_doc(doc: dict) -> Scenario:
    _require(doc, "parties", "settings")
    n_par = doc["parties"]
    settings = doc["settings"]
    if not isinstance(n_par, int) or n_par < 1:
        raise SchemaError("'parties' must be a positive integer")
    if not isinstance(settings, list) or len(settings) != n_par:
        raise SchemaError("'settings' must list one count per party")
    outcomes = doc.get("outcomes", {})
    if not isinstance(outcomes, dict):
        raise SchemaError("'outcomes' must be an object keyed 'n,s'")
    default = doc.get("default_outcomes", 2)
    rows = []
    for n, s_count in enumerate(settings):
        if not isinstance(s_count, int) or s_count < 1:
            raise SchemaError(f"party {n} must have a positive setting count")
        rows.append(tuple(int(outcomes.get(f"{n},{s}", default)) for s in range(s_count)))
    try:
        return Scenario(tuple(rows))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def _scenario_doc(scn: Scenario) -> dict:
    return {
        "parties": scn.num_parties,
        "settings": list(scn.settings),
        "outcomes": {f"{n},{s}": k for n, row in enumerate(scn.outcomes) for s, k in enumerate(row)},
    }


def _mode(doc: dict, override: str | None) -> str:
    mode = override or doc.get("mode", EXACT)
    if mode not in (EXACT, FLOAT):
        raise SchemaError(f"unknown mode {mode!r}")
    return mode


def behavior_from_json(doc: dict, mode: str | None = None, eps: float | None = None) -> Behavior:
    scn = _scenario_from_doc(doc)
    _require(doc, "tables")
    mode = _mode(doc, mode)
    raw = doc["tables"]
    if not isinstance(raw, dict):
        raise SchemaError("'tables' must be an object keyed by setting tuples")
    tables = {}
    for key, flat in raw.items():
        t = _key(key, scn.num_parties)
        if not isinstance(flat, list):
            raise SchemaError(f"table {key!r} must be a flat list")
        values = [parse_number(v, mode) for v in flat]
        try:
            scn.check_setting(t)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        shape = scn.shape(t)
        if len(values) != int(np.prod(shape)):
            raise SchemaError(f"table {key!r} has {len(values)} entries, expected {int(np.prod(shape))}")
        arr = np.empty(len(values), dtype=object if mode == EXACT else float)
        arr[:] = values
        tables[t] = arr.reshape(shape)
    if mode == FLOAT and eps is not None:
        return Behavior(scn, tables, mode, eps)
    return Behavior(scn, tables, mode)


def behavior_to_json(b: Behavior) -> dict:
    doc = _scenario_doc(b.scenario)
    doc["mode"] = b.mode
    doc["tables"] = {_fmt_key(t): [format_number(v) for v in b.tables[t].flat] for t in sorted(b.tables)}
    return doc


def collection_from_json(doc, mode: str | None = None, eps: float | None = None) -> ExperimentCollection:
    if isinstance(doc, list):
        doc = {"experiments": doc}
    _require(doc, "experiments")
    exps = doc["experiments"]
    if not isinstance(exps, list) or not exps:
        raise SchemaError("'experiments' must be a nonempty list of behaviors")
    behaviors = [behavior_from_json(e, mode, eps) for e in exps]
    labels = doc.get("context")
    try:
        return ExperimentCollection(behaviors, labels)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def collection_to_json(c: ExperimentCollection) -> dict:
    return {"context": list(c.context_labels), "experiments": [behavior_to_json(e) for e in c.experiments]}


def correlations_from_json(doc: dict, mode: str | None = None, eps: float | None = None) -> CorrelationSet:
    """``{"parties", "settings", "mode", "means": {"sites|settings": value}}``."""
    doc = dict(doc)
    doc.setdefault("outcomes", {})
    scn = _scenario_from_doc(doc)
    _require(doc, "means")
    mode = _mode(doc, mode)
    means = {}
    for key, v in doc["means"].items():
        if "|" not in key:
            raise SchemaError(f"mean key {key!r} should look like 'sites|settings'")
        left, right = key.split("|", 1)
        means[(_key(left), _key(right))] = parse_number(v, mode)
    try:
        if mode == FLOAT and eps is not None:
            return CorrelationSet(scn, means, mode, eps)
        return CorrelationSet(scn, means, mode)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def correlations_to_json(c: CorrelationSet) -> dict:
    doc = _scenario_doc(c.scenario)
    doc["mode"] = c.mode
    doc["means"] = {f"{_fmt_key(sites)}|{_fmt_key(sets)}": format_number(v)
                    for (sites, sets), v in sorted(c.means.items())}
    return doc


def model_to_json(m: LhvModel) -> dict:
    responses = {}
    for (n, s), table in sorted(m.responses.items()):
        for w, row in zip(m.omega, table):
            responses[f"{n},{s},{w}"] = [format_number(v) for v in row]
    return {
        "mode": m.mode,
        "omega": [w if isinstance(w, (int, str)) else str(w) for w in m.omega],
        "weights": [format_number(v) for v in m.weights],
        "responses": responses,
    }


def model_from_json(doc: dict, mode: str | None = None) -> LhvModel:
    _require(doc, "omega", "weights", "responses")
    mode = _mode(doc, mode)
    omega = list(doc["omega"])
    index = {str(w): i for i, w in enumerate(omega)}
    tables: dict[tuple[int, int], list] = {}
    for key, dist in doc["responses"].items():
        parts = str(key).split(",", 2)
        if len(parts) != 3 or parts[2] not in index:
            raise SchemaError(f"bad response key {key!r}")
        n, s = _key(",".join(parts[:2]), 2)
        rows = tables.setdefault((n, s), [None] * len(omega))
        rows[index[parts[2]]] = [parse_number(v, mode) for v in dist]
    for axis, rows in tables.items():
        if any(r is None for r in rows):
            raise SchemaError(f"response table {axis} lacks a row for some hidden value")
    weights = [parse_number(v, mode) for v in doc["weights"]]
    try:
        return LhvModel(tuple(omega), weights, tables, mode)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def _complex_matrix(raw) -> np.ndarray:
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise SchemaError("matrix must be a list of rows")
    out = np.empty((len(raw), len(raw[0])), dtype=complex)
    for i, row in enumerate(raw):
        if len(row) != out.shape[1]:
            raise SchemaError("matrix rows have different lengths")
        for j, v in enumerate(row):
            if isinstance(v, list):
                if len(v) != 2:
                    raise SchemaError("complex entries must be [re, im] pairs")
                out[i, j] = complex(parse_number(v[0], FLOAT), parse_number(v[1], FLOAT))
            else:
                out[i, j] = parse_number(v, FLOAT)
    return out


def _matrix_doc(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def state_from_json(doc: dict) -> DensityOperator:
    _require(doc, "dims", "matrix")
    try:
        return DensityOperator(tuple(int(d) for d in doc["dims"]), _complex_matrix(doc["matrix"]))
    except ValueError as exc:
        raise SchemaError(f"invalid state: {exc}") from None


def state_to_json(rho: DensityOperator) -> dict:
    return {"dims": list(rho.dims), "matrix": _matrix_doc(rho.matrix)}


def setup_from_json(doc: dict) -> MeasurementSetup:
    """``{"n,s": {"effects": [matrix, ...]}}``, or the same under a ``"povms"`` field."""
    if isinstance(doc, dict) and "povms" in doc:
        doc = doc["povms"]
    if not isinstance(doc, dict) or not doc:
        raise SchemaError("setup must map 'n,s' keys to POVMs")
    povms = {}
    for key, entry in doc.items():
        axis = _key(key, 2)
        effects = entry["effects"] if isinstance(entry, dict) and "effects" in entry else entry
        if not isinstance(effects, list) or not effects:
            raise SchemaError(f"POVM {key!r} needs a list of effects")
        try:
            povms[axis] = Povm(tuple(_complex_matrix(e) for e in effects))
        except ValueError as exc:
            raise SchemaError(f"invalid POVM {key!r}: {exc}") from None
    try:
        return MeasurementSetup(povms)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def setup_to_json(setup: MeasurementSetup) -> dict:
    return {"povms": {f"{n},{s}": {"effects": [_matrix_doc(e) for e in p.effects]}
                      for (n, s), p in sorted(setup.povms.items())}}
