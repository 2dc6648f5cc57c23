"""Nonsignaling, EPR locality and independence checks, plus canonical behaviors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .scenario import (
    EXACT,
    Behavior,
    Scenario,
    SettingTuple,
    _same_mode,
    marginal,
    subsets,
    to_exact_array,
    validate_behavior,
    xi,
)


def _gap(a: np.ndarray, b: np.ndarray) -> Fraction | float:
    diff = a - b
    return max(abs(v) for v in diff.flat) if diff.size else 0


def _passes(violation, exact: bool, eps: float) -> bool:
    return violation == 0 if exact else violation <= eps


@dataclass(frozen=True)
class LocalityReport:
    """Verdict plus the worst marginal discrepancy (max-norm) and where it occurs.

    For nonsignaling the witness is ``(sites, setting_a, setting_b)``; for EPR
    locality it is ``(context_a, setting_a, context_b, setting_b, sites)``.
    """

    ok: bool
    violation: Fraction | float
    witness: tuple | None = None
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.ok else "fail",
            "violation": str(self.violation) if isinstance(self.violation, Fraction) else float(self.violation),
            "witness": _jsonable(self.witness),
        }


def _jsonable(obj):
    if isinstance(obj, tuple):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def check_nonsignaling(b: Behavior) -> LocalityReport:
    """Marginals onto every proper site subset may depend only on that subset's settings."""
    issues = validate_behavior(b)
    if any(i.kind in ("missing", "shape", "extra") for i in issues):
        raise ValueError(f"structurally invalid behavior: {issues[0].detail}")
    scn = b.scenario
    worst, witness = (Fraction(0) if b.exact else 0.0), None
    for sites in subsets(scn.num_parties, include_full=False):
        groups: dict[tuple, list[SettingTuple]] = {}
        for t in scn.setting_tuples():
            groups.setdefault(tuple(t[n] for n in sites), []).append(t)
        for members in groups.values():
            margs = [marginal(b, t, sites) for t in members]
            for i, j in itertools.combinations(range(len(members)), 2):
                g = _gap(margs[i], margs[j])
                if g > worst:
                    worst, witness = g, (sites, members[i], members[j])
    return LocalityReport(_passes(worst, b.exact, b.eps), worst, witness)


@dataclass(frozen=True, eq=False)
class ExperimentCollection:
    """Behaviors observed in different experimental contexts.

    Setting index ``s`` of party ``n`` names the same measurement in every
    context that has it, so its outcome count must agree.
    """

    experiments: Sequence[Behavior]
    context_labels: Sequence[str] | None = None

    def __post_init__(self):
        exps = tuple(self.experiments)
        if not exps:
            raise ValueError("an experiment collection needs at least one behavior")
        labels = tuple(self.context_labels) if self.context_labels is not None else tuple(
            f"E{i}" for i in range(len(exps)))
        if len(labels) != len(exps):
            raise ValueError("one context label per experiment")
        object.__setattr__(self, "experiments", exps)
        object.__setattr__(self, "context_labels", labels)
        _same_mode(*exps)
        parties = {e.scenario.num_parties for e in exps}
        if len(parties) != 1:
            raise ValueError("experiments disagree on the number of parties")
        known: dict[tuple[int, int], int] = {}
        for e in exps:
            for n, row in enumerate(e.scenario.outcomes):
                for s, k in enumerate(row):
                    if known.setdefault((n, s), k) != k:
                        raise ValueError(f"setting ({n}, {s}) has {known[(n, s)]} outcomes in one context "
                                         f"and {k} in another")


def check_epr_local(c: ExperimentCollection) -> LocalityReport:
    """Each context nonsignaling, and every marginal a function of the retained settings alone.

    Across contexts the comparison includes the full site set: the same setting
    tuple must yield the same joint distribution in every context.
    """
    exps = c.experiments
    exact = exps[0].exact
    eps = max(e.eps for e in exps)
    per_context = [check_nonsignaling(e) for e in exps]
    worst, witness = (Fraction(0) if exact else 0.0), None
    for idx, rep in enumerate(per_context):
        if rep.violation > worst:
            sites, ta, tb = rep.witness
            worst, witness = rep.violation, (c.context_labels[idx], ta, c.context_labels[idx], tb, sites)
    n_par = exps[0].scenario.num_parties
    for sites in subsets(n_par):
        seen: dict[tuple, list[tuple[int, SettingTuple, np.ndarray]]] = {}
        for idx, e in enumerate(exps):
            for t in e.scenario.setting_tuples():
                key = tuple(t[n] for n in sites)
                seen.setdefault(key, []).append((idx, t, marginal(e, t, sites)))
        for members in seen.values():
            for (ia, ta, ma), (ib, tb, mb) in itertools.combinations(members, 2):
                if ia == ib:
                    continue
                g = _gap(ma, mb)
                if g > worst:
                    worst, witness = g, (c.context_labels[ia], ta, c.context_labels[ib], tb, sites)
    return LocalityReport(_passes(worst, exact, eps), worst, witness, per_context)


@dataclass(frozen=True)
class IndependenceReport:
    ok: bool
    deviation: Fraction | float


def check_independence(b: Behavior, setting: SettingTuple) -> IndependenceReport:
    """Whether the joint table factorizes into its single-site marginals."""
    setting = tuple(setting)
    n_par = b.scenario.num_parties
    table = b.tables[setting]
    if n_par == 1:
        return IndependenceReport(True, Fraction(0) if b.exact else 0.0)
    product = None
    for n in range(n_par):
        m = marginal(b, setting, (n,))
        product = m if product is None else np.multiply.outer(product, m)
    dev = _gap(table, product)
    return IndependenceReport(_passes(dev, b.exact, b.eps), dev)


def make_pr_box() -> Behavior:
    """Popescu-Rohrlich box: outcomes correlated unless both settings are 1."""
    scn = Scenario.uniform(2, 2, 2)
    tables = {}
    for s1, s2 in scn.setting_tuples():
        want = -1 if s1 == 1 and s2 == 1 else 1
        table = np.empty((2, 2), dtype=object)
        for a, b in itertools.product((0, 1), repeat=2):
            table[a, b] = Fraction(1, 2) if xi(a) * xi(b) == want else Fraction(0)
        tables[(s1, s2)] = table
    return Behavior(scn, tables)


def make_prop1_family(conditional_tables: Mapping[tuple[int, int], Sequence[Sequence]],
                      tau_per_context: Sequence[Sequence],
                      context_labels: Sequence[str] | None = None,
                      mode: str = EXACT) -> ExperimentCollection:
    """One behavior per context, mixing fixed local responses with a context-dependent tau.

    ``conditional_tables[(n, s)][w]`` is party ``n``'s outcome distribution for
    setting ``s`` given hidden value ``w``; every context shares these but uses
    its own distribution ``tau`` over the hidden values.  Each resulting
    behavior is nonsignaling; the collection need not be EPR local.
    """
    from .lhv import LhvModel, evaluate_model

    settings: dict[int, int] = {}
    for n, s in conditional_tables:
        settings[n] = max(settings.get(n, 0), s + 1)
    n_par = len(settings)
    if sorted(settings) != list(range(n_par)):
        raise ValueError("conditional tables must cover parties 0..N-1")
    outcomes = tuple(
        tuple(len(conditional_tables[(n, s)][0]) for s in range(settings[n])) for n in range(n_par))
    scn = Scenario(outcomes)
    behaviors = []
    for tau in tau_per_context:
        weights = to_exact_array(tau) if mode == EXACT else np.array(tau, dtype=float)
        total = sum(weights, Fraction(0) if mode == EXACT else 0.0)
        bad = any(w < 0 for w in weights) or (total != 1 if mode == EXACT else abs(total - 1) > 1e-9)
        if bad:
            raise ValueError(f"context distribution {list(tau)} is not a probability distribution")
        model = LhvModel(tuple(range(len(weights))), weights,
                         {k: v for k, v in conditional_tables.items()}, mode=mode)
        behaviors.append(evaluate_model(model, scn))
    return ExperimentCollection(behaviors, context_labels)


def prop1_witness() -> ExperimentCollection:
    """Fixed two-context instance: hidden value w in {0, 1}, responses copy w.

    Both parties output w under every setting, except party 0's setting 1 which
    outputs 1 - w.  Context A mixes w with weights (1/2, 1/2), context B with
    (1/4, 3/4), so site marginals move between contexts while each context is
    nonsignaling on its own.
    """
    copy = [[1, 0], [0, 1]]
    flip = [[0, 1], [1, 0]]
    tables = {(0, 0): copy, (0, 1): flip, (1, 0): copy, (1, 1): copy}
    taus = [[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 4), Fraction(3, 4)]]
    return make_prop1_family(tables, taus, ["A", "B"])
