"""Local hidden variable models: evaluation, feasibility, construction.

A model has a finite hidden-value set, a weight per hidden value and, for each
(party, setting), a response table ``responses[(n, s)]`` of shape
``(len(omega), K)`` whose row ``w`` is the outcome distribution given ``w``.
Responses depend only on the party's own setting by construction of the
layout.

Two independent LP formulations decide whether a behavior has such a model:
mixtures of deterministic strategies (the canonical route, which also yields
Bell-inequality certificates) and joint distributions over all
(party, setting) outcomes with the behavior as marginals.  They must agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .feasibility import (
    FEASIBLE,
    LinearFeasibilityProblem,
    solve_feasibility,
)
from .locality import check_nonsignaling
from .scenario import (
    EXACT,
    Behavior,
    CorrelationSet,
    Issue,
    Scenario,
    SettingTuple,
    correlations_to_behavior,
    subsets,
    to_exact_array,
    validate_behavior,
    xi,
)

DEFAULT_CAP = 10**7

Axis = tuple[int, int]


class ResourceError(RuntimeError):
    """Enumeration would exceed the configured cap."""


def _array(values, mode: str) -> np.ndarray:
    return to_exact_array(values) if mode == EXACT else np.array(values, dtype=float)


def _zero(mode: str):
    return Fraction(0) if mode == EXACT else 0.0


@dataclass(frozen=True, eq=False)
class LhvModel:
    omega: tuple
    weights: np.ndarray
    responses: Mapping[Axis, np.ndarray]
    mode: str = EXACT

    def __post_init__(self):
        omega = tuple(self.omega)
        weights = _array(self.weights, self.mode).reshape(-1)
        if len(weights) != len(omega):
            raise ValueError("one weight per hidden value")
        responses = {}
        for (n, s), table in self.responses.items():
            arr = _array(table, self.mode)
            if arr.ndim != 2 or arr.shape[0] != len(omega):
                raise ValueError(f"response table for ({n}, {s}) must have one row per hidden value")
            responses[(int(n), int(s))] = arr
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "responses", responses)

    def problems(self, eps: float = 1e-9) -> list[str]:
        """Violated invariants (weights and response rows must be distributions)."""
        out = []
        exact = self.mode == EXACT
        bad = (lambda x: x != 0) if exact else (lambda x: abs(x) > eps)
        if any(w < 0 for w in self.weights) or bad(sum(self.weights, _zero(self.mode)) - 1):
            out.append("weights are not a probability distribution")
        for key, table in self.responses.items():
            for w, row in enumerate(table):
                if any(v < 0 for v in row) or bad(sum(row, _zero(self.mode)) - 1):
                    out.append(f"response {key} for hidden value {self.omega[w]} is not a distribution")
        return out


@dataclass(frozen=True)
class DeterministicStrategy:
    """One outcome per (party, setting), aligned with ``scenario.axes``."""

    scenario: Scenario
    outcomes: tuple[int, ...]

    def __getitem__(self, axis: Axis) -> int:
        return self.outcomes[self.scenario.axes.index(tuple(axis))]

    def assignment(self) -> dict[Axis, int]:
        return dict(zip(self.scenario.axes, self.outcomes))

    def outcome_tuple(self, setting: SettingTuple) -> tuple[int, ...]:
        offsets = _axis_offsets(self.scenario)
        return tuple(self.outcomes[offsets[n] + s] for n, s in enumerate(setting))


def _axis_offsets(scn: Scenario) -> list[int]:
    offsets, acc = [], 0
    for row in scn.outcomes:
        offsets.append(acc)
        acc += len(row)
    return offsets


def _radices(scn: Scenario) -> list[int]:
    return [k for row in scn.outcomes for k in row]


def strategy_count(scn: Scenario) -> int:
    return math.prod(_radices(scn))


def _check_cap(scn: Scenario, cap: int) -> int:
    count = strategy_count(scn)
    if count > cap:
        raise ResourceError(f"{count} deterministic strategies exceed the cap of {cap}")
    return count


def enumerate_deterministic_strategies(scn: Scenario, cap: int = DEFAULT_CAP) -> list[DeterministicStrategy]:
    """Every deterministic strategy in mixed-radix order, first axis most significant."""
    _check_cap(scn, cap)
    return [DeterministicStrategy(scn, outs)
            for outs in itertools.product(*(range(k) for k in _radices(scn)))]


def strategy_behavior(strategy: DeterministicStrategy) -> Behavior:
    scn = strategy.scenario
    tables = {}
    for t in scn.setting_tuples():
        table = np.full(scn.shape(t), Fraction(0), dtype=object)
        table[strategy.outcome_tuple(t)] = Fraction(1)
        tables[t] = table
    return Behavior(scn, tables)


def evaluate_model(m: LhvModel, scn: Scenario) -> Behavior:
    """P(x | t) = sum_w weight(w) prod_n response_{n, t_n}(x_n | w)."""
    for axis in scn.axes:
        if axis not in m.responses:
            raise ValueError(f"model has no response for (party, setting) {axis}")
        if m.responses[axis].shape[1] != scn.outcomes[axis[0]][axis[1]]:
            raise ValueError(f"response {axis} has the wrong number of outcomes")
    tables = {}
    for t in scn.setting_tuples():
        acc = None
        for w, weight in enumerate(m.weights):
            if weight == 0:
                continue
            term = None
            for n, s in enumerate(t):
                row = m.responses[(n, s)][w]
                term = row if term is None else np.multiply.outer(term, row)
            term = term * weight
            acc = term if acc is None else acc + term
        if acc is None:
            acc = np.full(scn.shape(t), _zero(m.mode), dtype=object if m.mode == EXACT else float)
        tables[t] = acc
    return Behavior(scn, tables, m.mode)


def model_correlator(m: LhvModel, sites: Sequence[int], settings: Sequence[int]):
    """sum_w weight(w) prod_n f_n(w) with f_n(w) = P(+1 | w) - P(-1 | w), dichotomic only."""
    total = _zero(m.mode)
    for w, weight in enumerate(m.weights):
        prod = weight
        for n, s in zip(sites, settings):
            row = m.responses[(n, s)][w]
            if len(row) != 2:
                raise ValueError("model_correlator needs dichotomic responses")
            prod = prod * (row[0] - row[1])
        total += prod
    return total


@dataclass(frozen=True, eq=False)
class BellCertificate:
    """Linear inequality sum c[t, x] P(x | t) <= bound, valid for every LHV behavior.

    ``value`` is the left-hand side on the tested behavior and ``margin`` its
    excess over the bound.
    """

    scenario: Scenario
    coefficients: Mapping[tuple[SettingTuple, tuple[int, ...]], object]
    bound: object
    value: object
    margin: object

    def evaluate(self, b: Behavior):
        total = 0
        for (t, x), c in self.coefficients.items():
            total += c * b.tables[t][x]
        return total

    def correlator_form(self) -> tuple[object, dict[tuple[tuple[int, ...], tuple[int, ...]], object]]:
        """Rewrite the functional in correlation coordinates (dichotomic scenarios).

        On nonsignaling behaviors sum c P = constant + sum_key coeff[key] * mean[key]
        with ``key = (sites, settings on sites)``.
        """
        scn = self.scenario
        if not scn.is_dichotomic:
            raise ValueError("correlator form needs a dichotomic scenario")
        n_par = scn.num_parties
        scale = Fraction(1, 2 ** n_par)
        const = 0
        coeffs: dict = {}
        for (t, x), c in self.coefficients.items():
            const += c * scale
            for sites in subsets(n_par):
                sgn = 1
                for n in sites:
                    sgn *= xi(x[n])
                key = (sites, tuple(t[n] for n in sites))
                coeffs[key] = coeffs.get(key, 0) + c * sgn * scale
        return const, coeffs

    def to_dict(self) -> dict:
        def num(v):
            return str(v) if isinstance(v, Fraction) else float(v)
        return {
            "coefficients": {
                ",".join(map(str, t)) + "|" + ",".join(map(str, x)): num(c)
                for (t, x), c in self.coefficients.items() if c != 0
            },
            "bound": num(self.bound),
            "value": num(self.value),
            "margin": num(self.margin),
        }


@dataclass(frozen=True, eq=False)
class LhvResult:
    """Outcome of an LHV decision.

    ``status`` is ``feasible``, ``infeasible``, ``marginal`` (float LP too close
    to call) or ``invalid`` (correlation set that is not a behavior).
    """

    status: str
    model: LhvModel | None = None
    certificate: BellCertificate | None = None
    issues: tuple[Issue, ...] = ()
    joint: "JointMeasure | None" = None
    phase1: object = None

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def _row_index(scn: Scenario) -> tuple[list[tuple[SettingTuple, tuple[int, ...]]], dict]:
    keys = []
    for t in scn.setting_tuples():
        for x in itertools.product(*(range(k) for k in scn.shape(t))):
            keys.append((t, x))
    return keys, {k: i for i, k in enumerate(keys)}


def _require_valid(b: Behavior) -> None:
    structural = [i for i in validate_behavior(b) if i.kind in ("missing", "shape", "extra")]
    if structural:
        raise ValueError(f"behavior is structurally invalid: {structural[0].detail}")


def _certificate(b: Behavior, keys, y, margin) -> BellCertificate:
    # y = (coefficients on P(x|t) rows..., coefficient on the normalization row).
    # y^T A <= 0 on every strategy column gives sum c P_strategy <= -y_norm.
    coeffs = {k: y[i] for i, k in enumerate(keys)}
    bound = -y[-1]
    value = sum((c * b.tables[t][x] for (t, x), c in coeffs.items()), _zero(b.mode))
    return BellCertificate(b.scenario, coeffs, bound, value, value - bound)


def lhv_feasibility(b: Behavior, cap: int = DEFAULT_CAP, eps_lp: float = 1e-8) -> LhvResult:
    """Decide LHV feasibility as a mixture of deterministic strategies.

    Feasible behaviors come back with the strategy mixture as an
    :class:`LhvModel` (only strategies of positive weight are kept); infeasible
    ones with a :class:`BellCertificate` derived from the Farkas dual.
    """
    _require_valid(b)
    scn = b.scenario
    count = _check_cap(scn, cap)
    keys, index = _row_index(scn)
    rows: list[dict[int, int]] = [dict() for _ in keys]
    radices = _radices(scn)
    offsets = _axis_offsets(scn)
    settings = scn.setting_tuples()
    for col, outs in enumerate(itertools.product(*(range(k) for k in radices))):
        for t in settings:
            x = tuple(outs[offsets[n] + s] for n, s in enumerate(t))
            rows[index[(t, x)]][col] = 1
    exact = b.exact
    constraints = [(row, b.tables[t][x]) for row, (t, x) in zip(rows, keys)]
    constraints.append(({j: 1 for j in range(count)}, 1))
    if not exact:
        constraints = [({j: float(a) for j, a in r.items()}, float(v)) for r, v in constraints]
    res = solve_feasibility(LinearFeasibilityProblem(count, constraints, exact), eps=eps_lp)

    if res.status == FEASIBLE:
        support = [j for j, w in enumerate(res.solution) if w != 0 and (exact or w > 0)]
        all_strats = list(itertools.product(*(range(k) for k in radices)))
        weights = [res.solution[j] for j in support]
        if not exact:
            total = sum(weights)
            weights = [w / total for w in weights]
        responses = {}
        for n, s in scn.axes:
            k = scn.outcomes[n][s]
            table = np.zeros((len(support), k), dtype=object if exact else float)
            if exact:
                table[...] = Fraction(0)
            for r, j in enumerate(support):
                table[r, all_strats[j][offsets[n] + s]] = 1
            responses[(n, s)] = table
        model = LhvModel(tuple(support), weights, responses, b.mode)
        return LhvResult(FEASIBLE, model=model, phase1=res.phase1)
    cert = _certificate(b, keys, res.certificate, res.margin)
    return LhvResult(res.status, certificate=cert, phase1=res.phase1)


@dataclass(frozen=True, eq=False)
class JointMeasure:
    """Distribution over every (party, setting) outcome at once.

    One tensor axis per entry of ``scenario.axes``.
    """

    scenario: Scenario
    tensor: np.ndarray
    mode: str = EXACT

    def __post_init__(self):
        arr = _array(self.tensor, self.mode)
        want = tuple(_radices(self.scenario))
        if arr.shape != want:
            raise ValueError(f"joint measure shape {arr.shape} != {want}")
        object.__setattr__(self, "tensor", arr)

    def marginal(self, axes: Sequence[Axis]) -> np.ndarray:
        """Marginal onto the listed axes, in the listed order."""
        all_axes = self.scenario.axes
        pos = [all_axes.index(tuple(a)) for a in axes]
        drop = tuple(i for i in range(len(all_axes)) if i not in pos)
        out = self.tensor.sum(axis=drop) if drop else self.tensor
        kept_sorted = sorted(pos)
        return np.transpose(out, [kept_sorted.index(p) for p in pos])

    def behavior(self) -> Behavior:
        scn = self.scenario
        tables = {t: self.marginal([(n, s) for n, s in enumerate(t)]) for t in scn.setting_tuples()}
        return Behavior(scn, tables, self.mode)


def joint_measure_feasibility(b: Behavior, cap: int = DEFAULT_CAP, eps_lp: float = 1e-8) -> LhvResult:
    """Look for a joint distribution of all (party, setting) outcomes with ``b`` as marginals.

    Variables are the joint-measure entries flattened in column-major order and
    the marginal constraints are generated by index arithmetic on the tensor
    grid, independently of the strategy enumeration used by
    :func:`lhv_feasibility`.
    """
    _require_valid(b)
    scn = b.scenario
    size = _check_cap(scn, cap)
    shape = tuple(_radices(scn))
    grid = np.indices(shape).reshape(len(shape), -1, order="F")
    axes = scn.axes
    constraints = []
    for t in scn.setting_tuples():
        pos = [axes.index((n, s)) for n, s in enumerate(t)]
        cell = np.ravel_multi_index(tuple(grid[p] for p in pos), scn.shape(t))
        table = b.tables[t].reshape(-1)
        buckets: dict[int, dict[int, int]] = {}
        for var, c in enumerate(cell):
            buckets.setdefault(int(c), {})[var] = 1
        for c in range(table.size):
            constraints.append((buckets.get(c, {}), table[c]))
    constraints.append(({j: 1 for j in range(size)}, 1))
    if not b.exact:
        constraints = [({j: float(a) for j, a in r.items()}, float(v)) for r, v in constraints]
    res = solve_feasibility(LinearFeasibilityProblem(size, constraints, b.exact), eps=eps_lp)
    if res.status != FEASIBLE:
        return LhvResult(res.status, phase1=res.phase1)
    flat = np.array(res.solution, dtype=object if b.exact else float)
    if not b.exact:
        flat = np.clip(flat, 0.0, None)
        flat = flat / flat.sum()
    mu = JointMeasure(scn, flat.reshape(shape, order="F"), b.mode)
    return LhvResult(FEASIBLE, joint=mu, phase1=res.phase1)


def model_from_joint_measure(mu: JointMeasure) -> LhvModel:
    """Deterministic model whose hidden values are the atoms of ``mu``."""
    scn = mu.scenario
    atoms = [idx for idx in np.ndindex(*mu.tensor.shape) if mu.tensor[idx] != 0]
    weights = [mu.tensor[idx] for idx in atoms]
    responses = {}
    for a, (n, s) in enumerate(scn.axes):
        k = scn.outcomes[n][s]
        table = np.zeros((len(atoms), k), dtype=object if mu.mode == EXACT else float)
        if mu.mode == EXACT:
            table[...] = Fraction(0)
        for r, idx in enumerate(atoms):
            table[r, idx[a]] = 1
        responses[(n, s)] = table
    return LhvModel(tuple(atoms), weights, responses, mu.mode)


def single_multisetting_model(b: Behavior, free_party: int) -> LhvModel:
    """Explicit model for a nonsignaling family where only ``free_party`` varies its setting.

    The hidden value is the joint outcome of the other parties, distributed as
    their common marginal; the free party answers with the conditional
    distribution of its outcome given that hidden value (uniform where the
    hidden value has probability zero).
    """
    _require_valid(b)
    scn = b.scenario
    n_par = scn.num_parties
    if not 0 <= free_party < n_par:
        raise ValueError(f"free party {free_party} out of range")
    for n in range(n_par):
        if n != free_party and scn.settings[n] != 1:
            raise ValueError(f"party {n} has {scn.settings[n]} settings; only the free party may have more")
    report = check_nonsignaling(b)
    if not report.ok:
        raise ValueError(f"behavior is signaling (violation {report.violation}); the common marginal "
                         "of the fixed parties is not defined")
    exact = b.exact
    fixed = [n for n in range(n_par) if n != free_party]
    base = tuple(0 for _ in range(n_par))
    # Common marginal of the fixed parties, taken from the lowest free setting.
    if fixed:
        tau = b.tables[base].sum(axis=free_party)
    else:
        tau = np.array(Fraction(1) if exact else 1.0, dtype=object if exact else float)
    fixed_shape = tuple(scn.outcomes[n][0] for n in fixed)
    omega = list(np.ndindex(*fixed_shape)) if fixed else [()]
    weights = [tau[w] if fixed else tau.item() for w in omega]
    responses = {}
    for s in range(scn.settings[free_party]):
        t = tuple(s if n == free_party else 0 for n in range(n_par))
        k = scn.outcomes[free_party][s]
        table = np.moveaxis(b.tables[t], free_party, -1)
        rows = np.empty((len(omega), k), dtype=object if exact else float)
        for r, w in enumerate(omega):
            joint = table[w] if fixed else table
            if weights[r] == 0 or (not exact and weights[r] <= 0):
                rows[r] = [Fraction(1, k) if exact else 1.0 / k] * k
            else:
                rows[r] = [joint[x] / weights[r] for x in range(k)]
        responses[(free_party, s)] = rows
    for i, n in enumerate(fixed):
        k = scn.outcomes[n][0]
        rows = np.zeros((len(omega), k), dtype=object if exact else float)
        if exact:
            rows[...] = Fraction(0)
        for r, w in enumerate(omega):
            rows[r, w[i]] = 1
        responses[(n, 0)] = rows
    return LhvModel(tuple(omega), weights, responses, b.mode)


@dataclass(frozen=True, eq=False)
class DirectionalMeasure:
    """Measure extending one (party, setting) by every setting of the other party.

    ``direction`` is ``"right"`` (axes: party 0 setting ``setting``, then all of
    party 1's settings) or ``"left"`` (all of party 0's settings, then party 1
    setting ``setting``).
    """

    scenario: Scenario
    direction: str
    setting: int
    tensor: np.ndarray
    mode: str = EXACT

    def axes(self) -> list[Axis]:
        scn = self.scenario
        if self.direction == "right":
            return [(0, self.setting)] + [(1, s) for s in range(scn.settings[1])]
        return [(0, s) for s in range(scn.settings[0])] + [(1, self.setting)]

    def pair_marginal(self, other_setting: int) -> np.ndarray:
        """Distribution of (party 0, party 1) outcomes for one setting pair."""
        n_other = self.tensor.ndim - 1
        if self.direction == "right":
            keep = 1 + other_setting
            drop = tuple(i for i in range(1, 1 + n_other) if i != keep)
            return self.tensor.sum(axis=drop) if drop else self.tensor
        drop = tuple(i for i in range(n_other) if i != other_setting)
        return self.tensor.sum(axis=drop) if drop else self.tensor

    def context_marginal(self) -> np.ndarray:
        """Marginal over the single varying axis (must agree across the family)."""
        return self.tensor.sum(axis=0 if self.direction == "right" else self.tensor.ndim - 1)


def _check_direction(direction: str) -> None:
    if direction not in ("right", "left"):
        raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")


def extract_directional_measures(mu: JointMeasure, direction: str = "right") -> list[DirectionalMeasure]:
    """Marginals of a bipartite joint measure keeping one setting of one party and all of the other's."""
    _check_direction(direction)
    scn = mu.scenario
    if scn.num_parties != 2:
        raise ValueError("directional measures are defined for two parties")
    out = []
    if direction == "right":
        for s1 in range(scn.settings[0]):
            axes = [(0, s1)] + [(1, s) for s in range(scn.settings[1])]
            out.append(DirectionalMeasure(scn, "right", s1, mu.marginal(axes), mu.mode))
    else:
        for s2 in range(scn.settings[1]):
            axes = [(0, s) for s in range(scn.settings[0])] + [(1, s2)]
            out.append(DirectionalMeasure(scn, "left", s2, mu.marginal(axes), mu.mode))
    return out


def assemble_from_directional_measures(measures: Sequence[DirectionalMeasure],
                                       eps: float = 1e-9) -> JointMeasure:
    """Glue a compatible family of directional measures into one joint measure.

    With ``tau`` the shared marginal of the common axes, the result is
    prod_s alpha_s(x_s | rest) * tau(rest), where alpha_s is the conditional of
    the varying axis in measure ``s`` (uniform where ``tau`` vanishes).
    """
    if not measures:
        raise ValueError("no measures to assemble")
    direction = measures[0].direction
    _check_direction(direction)
    scn = measures[0].scenario
    mode = measures[0].mode
    exact = mode == EXACT
    if any(m.direction != direction or m.scenario != scn or m.mode != mode for m in measures):
        raise ValueError("measures disagree on direction, scenario or arithmetic mode")
    varying = 0 if direction == "right" else 1
    if sorted(m.setting for m in measures) != list(range(scn.settings[varying])):
        raise ValueError("need exactly one measure per setting of the varying party")
    measures = sorted(measures, key=lambda m: m.setting)
    # Put the varying axis first everywhere.
    tensors = [m.tensor if direction == "right" else np.moveaxis(m.tensor, -1, 0) for m in measures]
    tau = tensors[0].sum(axis=0)
    for m, tensor in zip(measures[1:], tensors[1:]):
        gap = max(abs(v) for v in (tensor.sum(axis=0) - tau).flat)
        if (gap != 0) if exact else (gap > eps):
            raise ValueError(f"directional measures are incompatible: shared marginal differs by {gap} "
                             f"for setting {m.setting}")
    rest_shape = tau.shape
    conds = []
    for tensor in tensors:
        k = tensor.shape[0]
        cond = np.empty(tensor.shape, dtype=object if exact else float)
        for idx in np.ndindex(*rest_shape):
            t = tau[idx]
            for x in range(k):
                if t == 0 or (not exact and t <= 0):
                    cond[(x,) + idx] = Fraction(1, k) if exact else 1.0 / k
                else:
                    cond[(x,) + idx] = tensor[(x,) + idx] / t
        conds.append(cond)
    # Build over axes (varying settings..., common axes...).
    n_var = len(conds)
    k_list = [c.shape[0] for c in conds]
    out = np.empty(tuple(k_list) + rest_shape, dtype=object if exact else float)
    for idx in np.ndindex(*rest_shape):
        block = None
        for c in conds:
            vec = c[(slice(None),) + idx]
            block = vec if block is None else np.multiply.outer(block, vec)
        out[(Ellipsis,) + idx] = block * tau[idx]
    if direction == "left":
        # Varying axes belong to party 1 and go last.
        out = np.moveaxis(out, list(range(n_var)), list(range(out.ndim - n_var, out.ndim)))
    return JointMeasure(scn, out, mode)


def lhv_check_from_correlations(c: CorrelationSet, cap: int = DEFAULT_CAP) -> LhvResult:
    """LHV decision from a complete set of +-1 means.

    Full correlators alone do not determine the answer; every lower-order mean
    must be present, and a set whose reconstructed probabilities go negative is
    reported as ``invalid``.
    """
    missing = c.missing()
    if missing:
        raise ValueError(f"incomplete correlation set: missing {len(missing)} means (e.g. {missing[0]}); "
                         "full correlators alone do not decide LHV feasibility")
    b, issues = correlations_to_behavior(c)
    bad = [i for i in issues if i.kind in ("negative", "normalization")]
    if bad:
        return LhvResult("invalid", issues=tuple(bad))
    return lhv_feasibility(b, cap=cap)


def restrict_behavior(b: Behavior, keep: Mapping[int, Sequence[int]] | None = None,
                      sites: Sequence[int] | None = None) -> Behavior:
    """Sub-behavior on chosen settings per party and/or a subset of sites (marginalized)."""
    scn = b.scenario
    sites = tuple(range(scn.num_parties)) if sites is None else tuple(sites)
    kept = {n: list(range(scn.settings[n])) if keep is None or n not in keep else list(keep[n])
            for n in range(scn.num_parties)}
    sub = scn.restrict(keep, sites)
    dropped = tuple(n for n in range(scn.num_parties) if n not in sites)
    tables = {}
    for t_sub in sub.setting_tuples():
        full = [0] * scn.num_parties
        for i, n in enumerate(sites):
            full[n] = kept[n][t_sub[i]]
        for n in dropped:
            full[n] = kept[n][0]
        table = b.tables[tuple(full)]
        tables[t_sub] = table.sum(axis=dropped) if dropped else table
    return Behavior(sub, tables, b.mode, b.eps if not b.exact else 0.0)
