"""Linear feasibility ``A x = b, x >= 0`` by phase-1 simplex.

The solver runs in exact rational arithmetic (``Fraction``) or in floats.  It
uses Bland's rule, so pivoting is deterministic and cannot cycle.  When the
system is infeasible the optimal phase-1 dual is returned as a Farkas
certificate ``y`` with ``y^T A <= 0`` and ``y^T b > 0``.

Rows are kept as sparse dictionaries; the constraint matrices built by the LHV
layer are 0/1 and stay fairly sparse during pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

EPS_LP = 1e-8
_PIVOT_TOL = 1e-12

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
MARGINAL = "marginal"

Row = Union[Mapping[int, object], Sequence]


def _sparse(coeffs: Row, num_vars: int) -> dict[int, object]:
    if isinstance(coeffs, Mapping):
        out = {}
        for j, a in coeffs.items():
            if not 0 <= j < num_vars:
                raise ValueError(f"column index {j} outside 0..{num_vars - 1}")
            if a != 0:
                out[int(j)] = a
        return out
    coeffs = list(coeffs)
    if len(coeffs) != num_vars:
        raise ValueError(f"coefficient vector of length {len(coeffs)}, expected {num_vars}")
    return {j: a for j, a in enumerate(coeffs) if a != 0}


@dataclass(frozen=True, eq=False)
class LinearFeasibilityProblem:
    """Equality constraints over nonnegative variables, in one arithmetic mode."""

    num_vars: int
    constraints: Sequence[tuple[Row, object]]
    exact: bool = True

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        rows = []
        for coeffs, rhs in self.constraints:
            row = _sparse(coeffs, self.num_vars)
            values = list(row.values()) + [rhs]
            if self.exact:
                if any(isinstance(v, float) for v in values):
                    raise ValueError("float coefficient in an exact problem")
                row = {j: Fraction(a) for j, a in row.items()}
                rhs = Fraction(rhs)
            else:
                if any(isinstance(v, Fraction) for v in values):
                    raise ValueError("rational coefficient in a float problem")
                row = {j: float(a) for j, a in row.items()}
                rhs = float(rhs)
            rows.append((row, rhs))
        object.__setattr__(self, "constraints", tuple(rows))

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    """Either ``solution`` or ``certificate`` is set, never both.

    ``margin`` is ``y^T b`` for the certificate normalized to max-abs 1.
    ``phase1`` is the optimal sum of artificial variables.
    """

    status: str
    solution: tuple | None
    certificate: tuple | None
    margin: object
    phase1: object
    pivots: int

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def solve_feasibility(p: LinearFeasibilityProblem, eps: float = EPS_LP) -> FeasibilityResult:
    exact = p.exact
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    m, n = p.num_constraints, p.num_vars
    tol = 0 if exact else _PIVOT_TOL

    # Column layout: 0..n-1 original variables, n..n+m-1 artificials.
    signs = []
    rows: list[dict[int, object]] = []
    rhs: list[object] = []
    for i, (row, b) in enumerate(p.constraints):
        sgn = -1 if b < 0 else 1
        signs.append(sgn)
        r = {j: a * sgn for j, a in row.items()}
        r[n + i] = one
        rows.append(r)
        rhs.append(b * sgn)
    basis = [n + i for i in range(m)]

    # Reduced costs of the phase-1 objective (sum of artificials).
    cost: dict[int, object] = {}
    for r in rows:
        for j, a in r.items():
            if j < n:
                cost[j] = cost.get(j, zero) - a
    cost = {j: c for j, c in cost.items() if abs(c) > tol}

    pivots = 0
    while True:
        entering = min((j for j, c in cost.items() if c < -tol), default=None)
        if entering is None:
            break
        leave, best = None, None
        for i, r in enumerate(rows):
            a = r.get(entering)
            if a is None or a <= tol:
                continue
            ratio = rhs[i] / a
            if best is None or ratio < best - tol or (ratio <= best + tol and basis[i] < basis[leave]):
                leave, best = i, ratio
        if leave is None:
            # Phase 1 is bounded below by 0, so this can only be numerical noise.
            cost.pop(entering)
            continue
        _pivot(rows, rhs, cost, leave, entering, exact, tol)
        basis[leave] = entering
        pivots += 1

    objective = sum((rhs[i] for i in range(m) if basis[i] >= n), zero)
    y = [one - cost.get(n + i, zero) for i in range(m)]

    feasible_now = objective == 0 if exact else objective <= eps
    if feasible_now:
        x = [zero] * n
        for i, j in enumerate(basis):
            if j < n:
                x[j] = rhs[i]
        if not exact:
            x = [max(v, 0.0) for v in x]
        return FeasibilityResult(FEASIBLE, tuple(x), None, zero, objective, pivots)

    cert = [s * v for s, v in zip(signs, y)]
    scale = max(abs(v) for v in cert)
    cert = [v / scale for v in cert]
    margin = sum((cert[i] * p.constraints[i][1] for i in range(m)), zero)
    status = INFEASIBLE if exact or objective > 10 * eps else MARGINAL
    return FeasibilityResult(status, None, tuple(cert), margin, objective, pivots)


def _pivot(rows, rhs, cost, leave, entering, exact, tol):
    prow = rows[leave]
    piv = prow[entering]
    if piv != 1:
        inv = 1 / piv
        for j in prow:
            prow[j] = prow[j] * inv
        rhs[leave] = rhs[leave] * inv
    prow[entering] = Fraction(1) if exact else 1.0
    items = list(prow.items())
    b_piv = rhs[leave]
    for i, r in enumerate(rows):
        if i == leave:
            continue
        f = r.get(entering)
        if f is None:
            continue
        for j, a in items:
            v = r.get(j, 0) - f * a
            if (v == 0) if exact else (abs(v) <= tol):
                r.pop(j, None)
            else:
                r[j] = v
        rhs[i] = rhs[i] - f * b_piv
        if not exact and abs(rhs[i]) <= tol:
            rhs[i] = 0.0
    f = cost.get(entering)
    if f is not None:
        for j, a in items:
            v = cost.get(j, 0) - f * a
            if (v == 0) if exact else (abs(v) <= tol):
                cost.pop(j, None)
            else:
                cost[j] = v


def check_solution(p: LinearFeasibilityProblem, x: Sequence, tol: float = 0.0) -> float:
    """Largest equality residual of ``x``; raises if ``x`` has a negative entry."""
    if any(v < -tol for v in x):
        raise ValueError("negative entry in candidate solution")
    worst = 0
    for row, b in p.constraints:
        worst = max(worst, abs(sum(a * x[j] for j, a in row.items()) - b))
    return worst


def check_certificate(p: LinearFeasibilityProblem, y: Sequence) -> tuple[object, object]:
    """``(max_j (y^T A)_j, y^T b)``; a valid certificate has the first <= 0 < second."""
    col = {}
    for (row, _), yi in zip(p.constraints, y):
        for j, a in row.items():
            col[j] = col.get(j, 0) + yi * a
    top = max([col.get(j, 0) for j in range(p.num_vars)])
    return top, sum(yi * b for (_, b), yi in zip(p.constraints, y))
