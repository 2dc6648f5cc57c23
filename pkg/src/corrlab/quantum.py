"""Finite-dimensional quantum layer.

States, POVMs and Born-rule behaviors; LHV models and joint measures for
separable states; noisy-state visibility bounds; and source operators, i.e.
dilations of a bipartite state onto extra copies of one side whose partial
traces over all but one copy give the state back.  A positive source operator
yields compatible directional measures and hence an LHV model for every
choice of measurements.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .lhv import DirectionalMeasure, JointMeasure, LhvModel, ResourceError
from .linalg import (
    hermitian_eigenvalues,
    is_hermitian,
    operator_norm,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    tensor,
)
from .scenario import FLOAT, Behavior, Scenario

EPS = 1e-9
EPS_PSD = 1e-10
SOURCE_CAP = 2**14


@dataclass(frozen=True, eq=False)
class DensityOperator:
    dims: tuple[int, ...]
    matrix: np.ndarray
    eps: float = EPS

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        m = np.array(self.matrix, dtype=complex)
        total = int(np.prod(dims))
        if m.shape != (total, total):
            raise ValueError(f"density matrix of shape {m.shape} does not match dims {list(dims)}")
        if not is_hermitian(m):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) > self.eps:
            raise ValueError(f"density matrix has trace {tr}")
        low = hermitian_eigenvalues(m)[0]
        if low < -EPS_PSD:
            raise ValueError(f"density matrix has negative eigenvalue {low}")
        m.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def reduced(self, keep: Sequence[int]) -> "DensityOperator":
        traced = [i for i in range(len(self.dims)) if i not in keep]
        if not traced:
            return self
        return DensityOperator(tuple(self.dims[i] for i in keep), partial_trace(self.matrix, self.dims, traced))


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite-outcome measurement: positive effects summing to the identity."""

    effects: tuple[np.ndarray, ...]
    eps: float = EPS

    def __post_init__(self):
        effects = tuple(np.array(e, dtype=complex) for e in self.effects)
        if not effects:
            raise ValueError("a POVM needs at least one effect")
        d = effects[0].shape[0]
        for i, e in enumerate(effects):
            if e.shape != (d, d):
                raise ValueError(f"effect {i} has shape {e.shape}, expected {(d, d)}")
            if not is_hermitian(e):
                raise ValueError(f"effect {i} is not Hermitian")
            low = hermitian_eigenvalues(e)[0]
            if low < -EPS_PSD:
                raise ValueError(f"effect {i} has negative eigenvalue {low}")
        gap = np.abs(sum(effects) - np.eye(d)).max()
        if gap > self.eps:
            raise ValueError(f"effects sum to the identity only within {gap}")
        for e in effects:
            e.flags.writeable = False
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def num_outcomes(self) -> int:
        return len(self.effects)

    def stack(self) -> np.ndarray:
        return np.stack(self.effects)


@dataclass(frozen=True, eq=False)
class MeasurementSetup:
    """A POVM for every (party, setting)."""

    povms: Mapping[tuple[int, int], Povm]
    scenario: Scenario = field(init=False)

    def __post_init__(self):
        povms = {(int(n), int(s)): p for (n, s), p in self.povms.items()}
        parties = sorted({n for n, _ in povms})
        if parties != list(range(len(parties))) or not parties:
            raise ValueError("setup must cover parties 0..N-1")
        rows = []
        for n in parties:
            sets = sorted(s for m, s in povms if m == n)
            if sets != list(range(len(sets))):
                raise ValueError(f"party {n} settings must be 0..S-1")
            dims = {povms[(n, s)].dim for s in sets}
            if len(dims) != 1:
                raise ValueError(f"party {n} uses POVMs of different dimensions")
            rows.append(tuple(povms[(n, s)].num_outcomes for s in sets))
        object.__setattr__(self, "povms", povms)
        object.__setattr__(self, "scenario", Scenario(tuple(rows)))

    def dims(self) -> tuple[int, ...]:
        return tuple(self.povms[(n, 0)].dim for n in range(self.scenario.num_parties))

    def __getitem__(self, key: tuple[int, int]) -> Povm:
        return self.povms[key]


def projective_povm(basis: np.ndarray) -> Povm:
    """Rank-one projectors onto the columns of a unitary."""
    basis = np.asarray(basis, dtype=complex)
    return Povm(tuple(np.outer(basis[:, i], basis[:, i].conj()) for i in range(basis.shape[1])))


def qubit_spin_povm(direction: Sequence[float]) -> Povm:
    """Projectors (I +- n.sigma)/2; outcome 0 is spin up (+1) along ``direction``."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    ns = n[0] * sx + n[1] * sy + n[2] * sz
    eye = np.eye(2)
    return Povm(((eye + ns) / 2, (eye - ns) / 2))


def _born_tensor(matrix: np.ndarray, dims: Sequence[int], stacks: Sequence[np.ndarray]) -> np.ndarray:
    """tensor[x_1..x_k] = tr[matrix (E_1[x_1] ⊗ ... ⊗ E_k[x_k])], real part."""
    k = len(dims)
    letters = iter(string.ascii_letters)
    row = [next(letters) for _ in range(k)]
    col = [next(letters) for _ in range(k)]
    out = [next(letters) for _ in range(k)]
    operand = "".join(row) + "".join(col)
    operands = [np.asarray(matrix).reshape(list(dims) * 2)]
    subs = [operand]
    for i in range(k):
        operands.append(stacks[i])
        subs.append(out[i] + col[i] + row[i])
    expr = ",".join(subs) + "->" + "".join(out)
    vals = np.einsum(expr, *operands, optimize=True)
    if np.abs(vals.imag).max(initial=0.0) > 1e-9:
        raise ValueError("Born probabilities have a non-negligible imaginary part")
    return vals.real


def born_behavior(rho: DensityOperator, setup: MeasurementSetup) -> Behavior:
    """P(x | t) = tr[rho (M_1^{t_1}(x_1) ⊗ ... ⊗ M_N^{t_N}(x_N))], float mode."""
    if tuple(rho.dims) != setup.dims():
        raise ValueError(f"state dims {rho.dims} do not match setup dims {setup.dims()}")
    scn = setup.scenario
    tables = {}
    for t in scn.setting_tuples():
        stacks = [setup[(n, s)].stack() for n, s in enumerate(t)]
        tables[t] = _born_tensor(rho.matrix, rho.dims, stacks)
    return Behavior(scn, tables, FLOAT)


def _check_weights(weights: Sequence[float], count: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if len(w) != count:
        raise ValueError(f"{len(w)} weights for {count} terms")
    if (w < 0).any() or abs(w.sum() - 1) > EPS:
        raise ValueError("weights are not a probability vector")
    return w


def separable_state(weights: Sequence[float], factors: Sequence[Sequence[DensityOperator]]) -> DensityOperator:
    """sum_m w_m rho_1^(m) ⊗ ... ⊗ rho_N^(m)."""
    w = _check_weights(weights, len(factors))
    dims = tuple(f.dim for f in factors[0])
    total = None
    for wm, term in zip(w, factors):
        if tuple(f.dim for f in term) != dims:
            raise ValueError("product terms disagree on local dimensions")
        prod = wm * tensor(*(f.matrix for f in term))
        total = prod if total is None else total + prod
    return DensityOperator(dims, total)


def _local_distributions(factors, setup: MeasurementSetup) -> dict[tuple[int, int], np.ndarray]:
    """Per (party, setting): array (terms, outcomes) of tr[rho_n^(m) M(x)]."""
    out = {}
    for (n, s), povm in setup.povms.items():
        stack = povm.stack()
        rows = [np.einsum("ij,xji->x", term[n].matrix, stack).real for term in factors]
        out[(n, s)] = np.array(rows)
    return out


def classical_lhv_model(weights: Sequence[float], factors: Sequence[Sequence[DensityOperator]],
                        setup: MeasurementSetup) -> LhvModel:
    """Hidden value = index of the product term, responses = local Born distributions."""
    w = _check_weights(weights, len(factors))
    if len(factors[0]) != setup.scenario.num_parties:
        raise ValueError("factor count per term must equal the number of parties")
    return LhvModel(tuple(range(len(w))), w, _local_distributions(factors, setup), FLOAT)


def separable_joint_measure(weights: Sequence[float], factors: Sequence[Sequence[DensityOperator]],
                            setup: MeasurementSetup) -> JointMeasure:
    """sum_m w_m prod over every (party, setting) of tr[rho_n^(m) M_n^s(x)]."""
    scn = setup.scenario
    if scn.num_parties != 2:
        raise ValueError("separable_joint_measure is defined for two parties")
    w = _check_weights(weights, len(factors))
    local = _local_distributions(factors, setup)
    total = None
    for m, wm in enumerate(w):
        prod = None
        for axis in scn.axes:
            vec = local[axis][m]
            prod = vec if prod is None else np.multiply.outer(prod, vec)
        prod = prod * wm
        total = prod if total is None else total + prod
    return JointMeasure(scn, total, FLOAT)


def basis_correlated_state(weights: Sequence[float], setup: MeasurementSetup,
                           basis: np.ndarray | None = None) -> tuple[DensityOperator, JointMeasure]:
    """State sum_m w_m |e_m e_m><e_m e_m| and the joint measure from its pure dilation.

    The dilation is |Phi> = sum_m sqrt(w_m) e_m^{⊗(S1+S2)}; measuring every
    (party, setting) POVM on its own copy gives
    mu'(x) = sum_{m,l} sqrt(w_m w_l) prod_{(n,s)} <e_m| M_n^s(x_{n,s}) |e_l>.
    """
    scn = setup.scenario
    if scn.num_parties != 2:
        raise ValueError("basis_correlated_state is defined for two parties")
    d = setup.dims()[0]
    if setup.dims() != (d, d):
        raise ValueError("both parties must share one local dimension")
    w = np.asarray(weights, dtype=float)
    if len(w) > d:
        raise ValueError(f"{len(w)} weights but local dimension {d}")
    w = _check_weights(np.concatenate([w, np.zeros(d - len(w))]), d)
    basis = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if basis.shape != (d, d) or np.abs(basis.conj().T @ basis - np.eye(d)).max() > EPS:
        raise ValueError("basis must be a unitary matrix (columns = basis vectors)")
    state = np.zeros((d * d, d * d), dtype=complex)
    for m in range(d):
        e = np.kron(basis[:, m], basis[:, m])
        state += w[m] * np.outer(e, e.conj())
    rho = DensityOperator((d, d), state)

    amps = np.sqrt(w)
    # elements[axis][x, m, l] = <e_m| M(x) |e_l>
    elements = []
    for axis in scn.axes:
        stack = setup[axis].stack()
        elements.append(np.einsum("im,xij,jl->xml", basis.conj(), stack, basis))
    total = np.zeros(tuple(e.shape[0] for e in elements), dtype=complex)
    for m, l in itertools.product(range(d), repeat=2):
        coef = amps[m] * amps[l]
        if coef == 0:
            continue
        prod = None
        for e in elements:
            vec = e[:, m, l]
            prod = vec if prod is None else np.multiply.outer(prod, vec)
        total += coef * prod
    if np.abs(total.imag).max() > 1e-9:
        raise ValueError("dilation measure has a non-negligible imaginary part")
    return rho, JointMeasure(scn, total.real, FLOAT)


def dilation_state(weights: Sequence[float], copies: int, basis: np.ndarray | None = None) -> np.ndarray:
    """|Phi><Phi| for |Phi> = sum_m sqrt(w_m) e_m^{⊗copies}."""
    w = np.asarray(weights, dtype=float)
    d = len(w)
    basis = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    phi = np.zeros(d ** copies, dtype=complex)
    for m in range(d):
        phi += np.sqrt(w[m]) * tensor(*([basis[:, m].reshape(-1, 1)] * copies)).reshape(-1)
    return np.outer(phi, phi.conj())


def maximally_entangled(d: int) -> np.ndarray:
    psi = np.zeros(d * d, dtype=complex)
    for m in range(d):
        psi[m * d + m] = 1.0
    psi /= np.sqrt(d)
    return np.outer(psi, psi.conj())


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"mixing weight {gamma} outside [0, 1]")
    return gamma


def _check_bipartite(rho: DensityOperator) -> tuple[int, int]:
    if len(rho.dims) != 2:
        raise ValueError(f"expected a bipartite state, got dims {rho.dims}")
    return rho.dims


def noisy_state(rho: DensityOperator, gamma: float) -> DensityOperator:
    """(1 - gamma) I/(d1 d2) + gamma rho."""
    d1, d2 = _check_bipartite(rho)
    gamma = _check_gamma(gamma)
    total = d1 * d2
    return DensityOperator((d1, d2), (1 - gamma) * np.eye(total) / total + gamma * rho.matrix)


def isotropic_state(d: int, gamma: float) -> DensityOperator:
    """Noisy maximally entangled state on C^d ⊗ C^d."""
    if d < 2:
        raise ValueError("isotropic state needs d >= 2")
    gamma = _check_gamma(gamma)
    return DensityOperator((d, d), (1 - gamma) * np.eye(d * d) / (d * d) + gamma * maximally_entangled(d))


def ppt_min_eigenvalue(rho: DensityOperator, subsystem: int = 1) -> float:
    return hermitian_eigenvalues(partial_transpose(rho.matrix, rho.dims, subsystem))[0]


def is_ppt(rho: DensityOperator, tol: float = EPS_PSD) -> bool:
    """Positive partial transpose; ``False`` certifies entanglement."""
    return ppt_min_eigenvalue(rho) >= -tol


def reduced_norms(rho: DensityOperator) -> tuple[float, float]:
    """Operator norms of the two single-party reduced states."""
    _check_bipartite(rho)
    tau1 = partial_trace(rho.matrix, rho.dims, [1])
    tau2 = partial_trace(rho.matrix, rho.dims, [0])
    return operator_norm(tau1), operator_norm(tau2)


def _check_settings(s1: int, s2: int) -> None:
    if s1 < 1 or s2 < 1:
        raise ValueError("setting counts must be >= 1")


def source_positivity_bound(rho: DensityOperator, s1: int, s2: int, direction: str = "right") -> float:
    """Largest mixing weight keeping the right (or left) source operator positive."""
    d1, d2 = _check_bipartite(rho)
    _check_settings(s1, s2)
    n1, n2 = reduced_norms(rho)
    if direction == "right":
        return 1.0 / (1.0 + d1 * (s2 - 1) * n1)
    if direction == "left":
        return 1.0 / (1.0 + d2 * (s1 - 1) * n2)
    raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")


def visibility_threshold(rho: DensityOperator, s1: int, s2: int) -> float:
    """Mixing weight up to which the noisy state has an S1 x S2-setting LHV description.

    1 / (1 + beta), beta = min(d1 (S2 - 1) |tau_1|, d2 (S1 - 1) |tau_2|).
    """
    d1, d2 = _check_bipartite(rho)
    _check_settings(s1, s2)
    n1, n2 = reduced_norms(rho)
    beta = min(d1 * (s2 - 1) * n1, d2 * (s1 - 1) * n2)
    return 1.0 / (1.0 + beta)


@dataclass(frozen=True, eq=False)
class SourceOperator:
    """Dilation of a bipartite state.

    ``right``: acts on C^d1 ⊗ (C^d2)^{⊗copies}; ``left``: on (C^d1)^{⊗copies} ⊗ C^d2.
    """

    direction: str
    base_dims: tuple[int, int]
    copies: int
    matrix: np.ndarray
    gamma: float

    @property
    def dims(self) -> list[int]:
        d1, d2 = self.base_dims
        if self.direction == "right":
            return [d1] + [d2] * self.copies
        return [d1] * self.copies + [d2]

    def slot_trace(self, keep: int) -> np.ndarray:
        """Partial trace over every copy except ``keep`` (0-based copy index)."""
        if not 0 <= keep < self.copies:
            raise ValueError(f"copy index {keep} out of range")
        if self.copies == 1:
            return self.matrix
        if self.direction == "right":
            traced = [1 + j for j in range(self.copies) if j != keep]
        else:
            traced = [j for j in range(self.copies) if j != keep]
        return partial_trace(self.matrix, self.dims, traced)


def _right_source(rho: np.ndarray, d1: int, d2: int, gamma: float, copies: int) -> np.ndarray:
    total = d1 * d2 ** copies
    blocks = rho.reshape(d1, d2, d1, d2)
    tau1 = sum(blocks[:, k, :, k] for k in range(d2))
    eye2 = np.eye(d2)
    second = np.zeros((total, total), dtype=complex)
    for k, l in itertools.product(range(d2), repeat=2):
        rho_kl = blocks[:, k, :, l]
        if not rho_kl.any():
            continue
        unit = np.zeros((d2, d2))
        unit[k, l] = 1.0
        # Symmetrized placement: |f_k><f_l| on each copy in turn, identity on the rest.
        sym = sum(tensor(*[unit if j == slot else eye2 for j in range(copies)]) for slot in range(copies))
        second += np.kron(rho_kl, sym)
    second /= d2 ** (copies - 1)
    third = (copies - 1) * np.kron(tau1, np.eye(d2 ** copies)) / d2 ** copies
    return (1 - gamma) * np.eye(total) / total + gamma * second - gamma * third


def source_operator(rho: DensityOperator, gamma: float, direction: str = "right", copies: int = 2,
                    cap: int = SOURCE_CAP) -> SourceOperator:
    """Source operator of the noisy state (1 - gamma) I/(d1 d2) + gamma rho.

    Right direction: (1-g) I/(d1 d2^S) + g sum_{k,l} rho_kl ⊗ sym(|f_k><f_l|)/d2^(S-1)
    - g (S-1) tau_1 ⊗ I/d2^S, where rho_kl are the d1 x d1 blocks of rho in the
    computational basis of party 2 and sym(.) sums the placements over the S
    copies.  The left direction is the mirror image.
    """
    d1, d2 = _check_bipartite(rho)
    gamma = _check_gamma(gamma)
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if direction not in ("right", "left"):
        raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")
    big = d2 if direction == "right" else d1
    small = d1 if direction == "right" else d2
    size = small * big ** copies
    if size > cap:
        raise ResourceError(f"source operator dimension {size} exceeds the cap of {cap}")
    if direction == "right":
        mat = _right_source(rho.matrix, d1, d2, gamma, copies)
    else:
        swapped = permute_subsystems(rho.matrix, [d1, d2], [1, 0])
        mirrored = _right_source(swapped, d2, d1, gamma, copies)
        mat = permute_subsystems(mirrored, [d2] + [d1] * copies, list(range(1, copies + 1)) + [0])
    return SourceOperator(direction, (d1, d2), copies, mat, gamma)


@dataclass(frozen=True)
class SourceReport:
    hermitian_residual: float
    trace_residual: float
    partial_trace_residual: float
    min_eigenvalue: float
    tol: float = EPS
    psd_tol: float = EPS_PSD

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "hermitian": self.hermitian_residual <= self.tol,
            "unit_trace": self.trace_residual <= self.tol,
            "partial_traces": self.partial_trace_residual <= self.tol,
            "positive": self.min_eigenvalue >= -self.psd_tol,
        }

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.ok else "fail",
            "checks": {
                "hermitian": {"pass": self.checks["hermitian"], "residual": self.hermitian_residual},
                "unit_trace": {"pass": self.checks["unit_trace"], "residual": self.trace_residual},
                "partial_traces": {"pass": self.checks["partial_traces"],
                                   "residual": self.partial_trace_residual},
                "positive": {"pass": self.checks["positive"], "min_eigenvalue": self.min_eigenvalue},
            },
            "tolerance": self.tol,
            "psd_tolerance": self.psd_tol,
        }


def verify_source_operator(src: SourceOperator, target: DensityOperator,
                           tol: float = EPS, psd_tol: float = EPS_PSD) -> SourceReport:
    """Hermiticity, unit trace, every prescribed partial trace, and positivity."""
    m = src.matrix
    herm = float(np.abs(m - m.conj().T).max())
    tr = float(abs(np.trace(m) - 1))
    worst = max(float(np.abs(src.slot_trace(j) - target.matrix).max()) for j in range(src.copies))
    herm_part = (m + m.conj().T) / 2
    low = hermitian_eigenvalues(herm_part)[0]
    return SourceReport(herm, tr, worst, low, tol, psd_tol)


def directional_measures_from_source(src: SourceOperator, setup: MeasurementSetup) -> list[DirectionalMeasure]:
    """Born measures of a positive source operator against one setting of one party
    and every setting of the other, one per setting of the first party (right) or
    of the second party (left).
    """
    scn = setup.scenario
    if scn.num_parties != 2:
        raise ValueError("directional measures need a two-party setup")
    s1, s2 = scn.settings
    expected = s2 if src.direction == "right" else s1
    if src.copies != expected:
        raise ValueError(f"{src.direction} source operator has {src.copies} copies, setup needs {expected}")
    if setup.dims() != tuple(src.base_dims):
        raise ValueError("setup dims do not match the source operator")
    out = []
    if src.direction == "right":
        others = [setup[(1, s)].stack() for s in range(s2)]
        for s in range(s1):
            t = _born_tensor(src.matrix, src.dims, [setup[(0, s)].stack()] + others)
            out.append(DirectionalMeasure(scn, "right", s, t, FLOAT))
    else:
        others = [setup[(0, s)].stack() for s in range(s1)]
        for s in range(s2):
            t = _born_tensor(src.matrix, src.dims, others + [setup[(1, s)].stack()])
            out.append(DirectionalMeasure(scn, "left", s, t, FLOAT))
    return out


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre draw."""
    rank = d if rank is None else rank
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = x @ x.conj().T
    return m / np.trace(m).real


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(x)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_two_outcome_povm(d: int, rng: np.random.Generator) -> Povm:
    """{E, I - E} with E = U diag(p) U^dagger, p uniform in [0, 1]."""
    u = random_unitary(d, rng)
    e = u @ np.diag(rng.uniform(0, 1, size=d)) @ u.conj().T
    e = (e + e.conj().T) / 2
    return Povm((e, np.eye(d) - e))
