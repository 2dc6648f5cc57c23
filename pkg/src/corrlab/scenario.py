"""Correlation scenarios, behaviors and the dichotomic correlation transforms.

Parties, settings and outcomes are all indexed from 0.  A behavior holds one
dense probability tensor per setting tuple; axis ``n`` of the tensor for
setting tuple ``t`` runs over the outcomes of party ``n`` under setting
``t[n]``.  Tensors are either exact (numpy object arrays of ``Fraction``) or
float arrays, never a mix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

EXACT = "exact"
FLOAT = "float"
DEFAULT_EPS = 1e-9

SettingTuple = tuple[int, ...]
Number = Union[Fraction, float, int]


def xi(outcome: int) -> int:
    """Sign encoding of a dichotomic outcome: 0 -> +1, 1 -> -1."""
    if outcome not in (0, 1):
        raise ValueError(f"dichotomic outcome must be 0 or 1, got {outcome}")
    return 1 - 2 * outcome


def to_exact_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=object)
    if shape is not None:
        arr = arr.reshape(shape)
    flat = arr.reshape(-1)
    for i, v in enumerate(flat):
        if isinstance(v, float):
            raise TypeError("float entry in an exact table; use Fraction or a 'p/q' string")
        flat[i] = Fraction(v)
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def subsets(n: int, include_full: bool = True) -> Iterable[tuple[int, ...]]:
    """Nonempty subsets of range(n) in order of size, then lexicographic."""
    top = n if include_full else n - 1
    for m in range(1, top + 1):
        yield from itertools.combinations(range(n), m)


@dataclass(frozen=True)
class Scenario:
    """Index skeleton of a correlation experiment.

    ``outcomes[n][s]`` is the number of outcomes of party ``n`` under setting
    ``s``; ``settings`` is derived from it.
    """

    outcomes: tuple[tuple[int, ...], ...]
    labels: Mapping[tuple[int, int], tuple[str, ...]] | None = field(default=None, compare=False)

    def __post_init__(self):
        outs = tuple(tuple(int(k) for k in row) for row in self.outcomes)
        object.__setattr__(self, "outcomes", outs)
        if len(outs) < 1:
            raise ValueError("a scenario needs at least one party")
        for n, row in enumerate(outs):
            if len(row) < 1:
                raise ValueError(f"party {n} has no settings")
            for s, k in enumerate(row):
                if k < 1:
                    raise ValueError(f"party {n}, setting {s} has {k} outcomes")
        if self.labels:
            for (n, s), names in self.labels.items():
                if len(names) != outs[n][s]:
                    raise ValueError(f"label table for ({n}, {s}) has wrong length")

    @classmethod
    def uniform(cls, parties: int, settings: int | Sequence[int], outcomes: int = 2) -> "Scenario":
        if isinstance(settings, int):
            settings = [settings] * parties
        return cls(tuple(tuple([outcomes] * s) for s in settings))

    @property
    def num_parties(self) -> int:
        return len(self.outcomes)

    @property
    def settings(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.outcomes)

    @property
    def axes(self) -> tuple[tuple[int, int], ...]:
        """All (party, setting) pairs in lexicographic order."""
        return tuple((n, s) for n, row in enumerate(self.outcomes) for s in range(len(row)))

    @property
    def is_dichotomic(self) -> bool:
        return all(k == 2 for row in self.outcomes for k in row)

    def setting_tuples(self) -> list[SettingTuple]:
        return list(itertools.product(*(range(s) for s in self.settings)))

    def shape(self, setting: SettingTuple) -> tuple[int, ...]:
        self.check_setting(setting)
        return tuple(self.outcomes[n][s] for n, s in enumerate(setting))

    def check_setting(self, setting: SettingTuple) -> None:
        if len(setting) != self.num_parties:
            raise ValueError(f"setting tuple {setting} has wrong length for {self.num_parties} parties")
        for n, s in enumerate(setting):
            if not 0 <= s < self.settings[n]:
                raise ValueError(f"setting {s} out of range for party {n}")

    def restrict(self, keep: Mapping[int, Sequence[int]] | None = None,
                 sites: Sequence[int] | None = None) -> "Scenario":
        """Sub-scenario keeping the listed settings per party and/or a subset of sites."""
        sites = range(self.num_parties) if sites is None else sites
        rows = []
        for n in sites:
            kept = range(self.settings[n]) if keep is None or n not in keep else keep[n]
            rows.append(tuple(self.outcomes[n][s] for s in kept))
        return Scenario(tuple(rows))


@dataclass(frozen=True, eq=False)
class Behavior:
    """Family of joint outcome distributions, one tensor per setting tuple.

    The constructor only normalizes storage; use :func:`validate_behavior` to
    check probability semantics.  ``eps`` is the equality tolerance used by
    float-mode checks (0 in exact mode).
    """

    scenario: Scenario
    tables: Mapping[SettingTuple, np.ndarray]
    mode: str = EXACT
    eps: float = 0.0

    def __post_init__(self):
        if self.mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")
        tables = {}
        for key, table in self.tables.items():
            key = tuple(int(s) for s in key)
            if self.mode == EXACT:
                arr = to_exact_array(table)
            else:
                arr = np.array(table, dtype=float)
            tables[key] = _freeze(arr)
        object.__setattr__(self, "tables", tables)
        if self.mode == FLOAT and self.eps == 0.0:
            object.__setattr__(self, "eps", DEFAULT_EPS)
        if self.mode == EXACT and self.eps != 0.0:
            raise ValueError("exact behaviors carry eps = 0")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def __getitem__(self, setting: SettingTuple) -> np.ndarray:
        return self.tables[tuple(setting)]

    def to_float(self) -> "Behavior":
        return Behavior(self.scenario, {k: v.astype(float) for k, v in self.tables.items()}, FLOAT)


def _same_mode(*behaviors: Behavior) -> str:
    modes = {b.mode for b in behaviors}
    if len(modes) != 1:
        raise ValueError("mixing exact and float behaviors in one operation")
    return modes.pop()


@dataclass(frozen=True)
class Issue:
    kind: str  # "missing", "shape", "negative", "normalization", "extra"
    setting: SettingTuple
    detail: str
    magnitude: float = 0.0


def validate_behavior(b: Behavior) -> list[Issue]:
    """Every violated invariant of ``b``; an empty list means valid."""
    scn = b.scenario
    issues = []
    expected = set(scn.setting_tuples())
    for t in sorted(set(b.tables) - expected):
        issues.append(Issue("extra", t, "setting tuple not in scenario"))
    for t in scn.setting_tuples():
        if t not in b.tables:
            issues.append(Issue("missing", t, "no table for setting tuple"))
            continue
        table = b.tables[t]
        if table.shape != scn.shape(t):
            issues.append(Issue("shape", t, f"table shape {table.shape} != {scn.shape(t)}"))
            continue
        low = min(table.flat)
        if (low < 0) if b.exact else (low < -b.eps):
            issues.append(Issue("negative", t, f"minimum entry {low}", float(-low)))
        total = sum(table.flat, Fraction(0) if b.exact else 0.0)
        off = abs(total - 1)
        if (off != 0) if b.exact else (off > b.eps):
            issues.append(Issue("normalization", t, f"entries sum to {total}", float(off)))
    return issues


def _check_sites(scn: Scenario, sites: Sequence[int]) -> tuple[int, ...]:
    sites = tuple(sites)
    if not sites:
        raise ValueError("kept site subset is empty")
    if any(b <= a for a, b in zip(sites, sites[1:])):
        raise ValueError(f"site subset {sites} is not strictly increasing")
    if sites[0] < 0 or sites[-1] >= scn.num_parties:
        raise ValueError(f"site index out of range in {sites}")
    return sites


def marginal(b: Behavior, setting: SettingTuple, kept_sites: Sequence[int]) -> np.ndarray:
    """Distribution of the kept sites' outcomes under ``setting``."""
    setting = tuple(setting)
    b.scenario.check_setting(setting)
    sites = _check_sites(b.scenario, kept_sites)
    dropped = tuple(n for n in range(b.scenario.num_parties) if n not in sites)
    table = b.tables[setting]
    if not dropped:
        return table
    return table.sum(axis=dropped)


def _as_function(phi, k: int, site: int) -> np.ndarray:
    if callable(phi):
        try:
            vals = [phi(x) for x in range(k)]
        except (KeyError, IndexError, ValueError) as err:
            raise ValueError(f"function for site {site} undefined on some outcome: {err}") from err
    elif isinstance(phi, Mapping):
        missing = [x for x in range(k) if x not in phi]
        if missing:
            raise ValueError(f"function for site {site} undefined on outcomes {missing}")
        vals = [phi[x] for x in range(k)]
    else:
        vals = list(phi)
        if len(vals) < k:
            raise ValueError(f"function for site {site} undefined on outcomes {list(range(len(vals), k))}")
        vals = vals[:k]
    return np.array(vals, dtype=object)


def product_expectation(b: Behavior, setting: SettingTuple,
                        functions: Sequence[Callable[[int], Number] | Sequence[Number]]) -> Number:
    """Expected value of the product of per-site functions of the outcomes."""
    setting = tuple(setting)
    shape = b.scenario.shape(setting)
    if len(functions) != len(shape):
        raise ValueError("need exactly one function per site")
    result = b.tables[setting]
    for n in reversed(range(len(shape))):
        vec = _as_function(functions[n], shape[n], n)
        if not b.exact:
            vec = vec.astype(float)
        result = np.dot(result, vec)
    return result.item() if isinstance(result, np.ndarray) else result


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    """Means of products of +-1 outcomes, keyed by (sites, settings on those sites).

    Completeness is not enforced here: operations that need every lower-order
    mean check it themselves.
    """

    scenario: Scenario
    means: Mapping[tuple[tuple[int, ...], tuple[int, ...]], Number]
    mode: str = EXACT
    eps: float = 0.0

    def __post_init__(self):
        if not self.scenario.is_dichotomic:
            raise ValueError("correlation sets need two outcomes everywhere")
        means = {}
        for (sites, sets), v in self.means.items():
            key = (tuple(sites), tuple(sets))
            if len(key[0]) != len(key[1]):
                raise ValueError(f"key {key} pairs sites and settings of different lengths")
            means[key] = Fraction(v) if self.mode == EXACT else float(v)
        object.__setattr__(self, "means", means)
        if self.mode == FLOAT and self.eps == 0.0:
            object.__setattr__(self, "eps", DEFAULT_EPS)

    def required_keys(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        scn = self.scenario
        keys = []
        for sites in subsets(scn.num_parties):
            for sets in itertools.product(*(range(scn.settings[n]) for n in sites)):
                keys.append((sites, sets))
        return keys

    def missing(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        return [k for k in self.required_keys() if k not in self.means]

    def out_of_range(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        tol = 0 if self.mode == EXACT else self.eps
        return [k for k, v in self.means.items() if abs(v) > 1 + tol]

    def full_correlators(self) -> dict[tuple[int, ...], Number]:
        everyone = tuple(range(self.scenario.num_parties))
        return {sets: v for (sites, sets), v in self.means.items() if sites == everyone}


def behavior_to_correlations(b: Behavior) -> CorrelationSet:
    """All means <x_{n1}...x_{nM}> of a dichotomic, nonsignaling behavior.

    A lower-order mean is only well defined when it does not depend on the
    settings of the sites left out; a signaling behavior raises ``ValueError``.
    """
    scn = b.scenario
    if not scn.is_dichotomic:
        raise ValueError("behavior_to_correlations needs two outcomes per (party, setting)")
    sign = np.array([1, -1], dtype=object if b.exact else float)
    means = {}
    for t in scn.setting_tuples():
        for sites in subsets(scn.num_parties):
            funcs = [sign if n in sites else [1, 1] for n in range(scn.num_parties)]
            value = product_expectation(b, t, funcs)
            key = (sites, tuple(t[n] for n in sites))
            if key in means:
                gap = abs(means[key] - value)
                if (gap != 0) if b.exact else (gap > b.eps):
                    raise ValueError(f"mean {key} depends on the other sites' settings (gap {gap}); "
                                     "behavior is signaling")
            else:
                means[key] = value
    return CorrelationSet(scn, means, b.mode, b.eps if not b.exact else 0.0)


def correlations_to_behavior(c: CorrelationSet) -> tuple[Behavior, list[Issue]]:
    """Rebuild joint probabilities from a complete correlation set.

    P(x_1..x_N | t) = 2^-N [1 + sum over nonempty site subsets A of
    prod_{n in A} sign(x_n) * <prod_{n in A} x_n>_t].  Negative entries are
    kept and reported in the returned issue list, never clipped.
    """
    missing = c.missing()
    if missing:
        raise ValueError(f"incomplete correlation set: {len(missing)} means missing, e.g. {missing[0]}")
    scn = c.scenario
    n_par = scn.num_parties
    exact = c.mode == EXACT
    one = Fraction(1) if exact else 1.0
    scale = Fraction(1, 2 ** n_par) if exact else 2.0 ** -n_par
    tables = {}
    for t in scn.setting_tuples():
        table = np.empty((2,) * n_par, dtype=object if exact else float)
        for outs in itertools.product((0, 1), repeat=n_par):
            total = one
            for sites in subsets(n_par):
                sgn = 1
                for n in sites:
                    sgn *= xi(outs[n])
                total += sgn * c.means[(sites, tuple(t[n] for n in sites))]
            table[outs] = total * scale
        tables[t] = table
    b = Behavior(scn, tables, c.mode, c.eps if not exact else 0.0)
    return b, validate_behavior(b)


def uniform_behavior(scn: Scenario) -> Behavior:
    tables = {}
    for t in scn.setting_tuples():
        shape = scn.shape(t)
        size = int(np.prod(shape))
        tables[t] = np.full(shape, Fraction(1, size), dtype=object)
    return Behavior(scn, tables)


def product_behavior(scn: Scenario, local: Mapping[tuple[int, int], Sequence[Number]],
                     mode: str = EXACT) -> Behavior:
    """Behavior whose every table is the outer product of per-(party, setting) distributions."""
    tables = {}
    for t in scn.setting_tuples():
        table = None
        for n, s in enumerate(t):
            vec = to_exact_array(local[(n, s)]) if mode == EXACT else np.array(local[(n, s)], dtype=float)
            table = vec if table is None else np.multiply.outer(table, vec)
        tables[t] = table
    return Behavior(scn, tables, mode)


def mix(weights: Sequence[Number], behaviors: Sequence[Behavior]) -> Behavior:
    """Convex combination of behaviors on one scenario."""
    mode = _same_mode(*behaviors)
    scn = behaviors[0].scenario
    if any(b.scenario != scn for b in behaviors):
        raise ValueError("behaviors live on different scenarios")
    tables = {}
    for t in scn.setting_tuples():
        acc = None
        for w, b in zip(weights, behaviors, strict=True):
            w = Fraction(w) if mode == EXACT else float(w)
            term = b.tables[t] * w
            acc = term if acc is None else acc + term
        tables[t] = acc
    return Behavior(scn, tables, mode)
