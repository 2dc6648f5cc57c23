import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrlab.lhv import (
    ResourceError,
    assemble_from_directional_measures,
    evaluate_model,
    lhv_feasibility,
    restrict_behavior,
    single_multisetting_model,
)
from corrlab.linalg import partial_trace
from corrlab.locality import check_nonsignaling
from corrlab.quantum import (
    DensityOperator,
    MeasurementSetup,
    Povm,
    basis_correlated_state,
    born_behavior,
    classical_lhv_model,
    dilation_state,
    directional_measures_from_source,
    is_ppt,
    isotropic_state,
    maximally_entangled,
    noisy_state,
    ppt_min_eigenvalue,
    projective_povm,
    qubit_spin_povm,
    random_density,
    random_two_outcome_povm,
    random_unitary,
    reduced_norms,
    separable_joint_measure,
    separable_state,
    source_operator,
    source_positivity_bound,
    verify_source_operator,
    visibility_threshold,
    _born_tensor,
)
from corrlab.scenario import validate_behavior


def dens(d, rng):
    return DensityOperator((d,), random_density(d, rng))


def random_setup(rng, s1=2, s2=2, d1=2, d2=2):
    povms = {(0, s): random_two_outcome_povm(d1, rng) for s in range(s1)}
    povms.update({(1, s): random_two_outcome_povm(d2, rng) for s in range(s2)})
    return MeasurementSetup(povms)


def max_gap(a, b):
    return max(np.abs(a.tables[t] - b.tables[t]).max() for t in a.tables)


def test_density_operator_validation():
    with pytest.raises(ValueError):
        DensityOperator((2,), np.diag([0.7, 0.7]))
    with pytest.raises(ValueError):
        DensityOperator((2,), np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityOperator((2,), np.array([[0.5, 0.5], [0, 0.5]]))
    with pytest.raises(ValueError):
        DensityOperator((2, 2), np.eye(2) / 2)


def test_povm_validation():
    with pytest.raises(ValueError):
        Povm((np.eye(2) / 2,))
    with pytest.raises(ValueError):
        Povm((np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))
    assert Povm((np.eye(3),)).num_outcomes == 1


def test_setup_coverage():
    with pytest.raises(ValueError):
        MeasurementSetup({(0, 0): qubit_spin_povm([0, 0, 1]), (0, 2): qubit_spin_povm([1, 0, 0])})
    with pytest.raises(ValueError):
        MeasurementSetup({(0, 0): qubit_spin_povm([0, 0, 1]), (0, 1): Povm((np.eye(3),))})


def test_maximally_mixed_gives_uniform():
    rng = np.random.default_rng(0)
    setup = MeasurementSetup({(n, s): projective_povm(random_unitary(3, rng)) for n in range(2) for s in range(2)})
    b = born_behavior(DensityOperator((3, 3), np.eye(9) / 9), setup)
    for t in b.tables:
        assert np.allclose(b.tables[t], 1 / 9)


def test_trivial_povm_site():
    rng = np.random.default_rng(1)
    rho = DensityOperator((2, 2), random_density(4, rng))
    setup = MeasurementSetup({(0, 0): Povm((np.eye(2),)), (1, 0): qubit_spin_povm([0, 1, 0])})
    b = born_behavior(rho, setup)
    assert np.isclose(b.tables[(0, 0)].sum(axis=1)[0], 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_singlet_correlator(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=3), rng.normal(size=3)
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    rho = DensityOperator((2, 2), np.outer(psi, psi))
    beh = born_behavior(rho, MeasurementSetup({(0, 0): qubit_spin_povm(a), (1, 0): qubit_spin_povm(b)}))
    table = beh.tables[(0, 0)]
    corr = table[0, 0] + table[1, 1] - table[0, 1] - table[1, 0]
    # Oracle: explicit 4x4 trace with the spin observables.
    sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    ua, ub = a / np.linalg.norm(a), b / np.linalg.norm(b)
    obs = np.kron(sum(u * s for u, s in zip(ua, sig)), sum(u * s for u, s in zip(ub, sig)))
    assert abs(corr - np.trace(rho.matrix @ obs).real) < 1e-12
    assert abs(corr + ua @ ub) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_born_behavior_valid_and_linear(seed):
    rng = np.random.default_rng(seed)
    setup = random_setup(rng, 2, 3, 2, 3)
    r1, r2 = random_density(6, rng), random_density(6, rng)
    w = rng.uniform()
    b1 = born_behavior(DensityOperator((2, 3), r1), setup)
    b2 = born_behavior(DensityOperator((2, 3), r2), setup)
    bm = born_behavior(DensityOperator((2, 3), w * r1 + (1 - w) * r2), setup)
    assert validate_behavior(bm) == []
    assert check_nonsignaling(bm).ok
    for t in bm.tables:
        assert np.allclose(bm.tables[t], w * b1.tables[t] + (1 - w) * b2.tables[t], atol=1e-12)


def test_classical_model_examples():
    zero = DensityOperator((2,), np.diag([1.0, 0.0]))
    one = DensityOperator((2,), np.diag([0.0, 1.0]))
    z = projective_povm(np.eye(2))
    setup = MeasurementSetup({(0, 0): z, (1, 0): z})
    m = classical_lhv_model([1.0], [[zero, one]], setup)
    assert len(m.omega) == 1
    rho = separable_state([0.5, 0.5], [[zero, zero], [one, one]])
    b = born_behavior(rho, setup)
    assert np.allclose(b.tables[(0, 0)], [[0.5, 0], [0, 0.5]])
    m = classical_lhv_model([0.5, 0.5], [[zero, zero], [one, one]], setup)
    assert max_gap(evaluate_model(m, setup.scenario), b) < 1e-12
    assert lhv_feasibility(b).feasible
    with pytest.raises(ValueError):
        classical_lhv_model([0.5, 0.5], [[zero, zero]], setup)


def test_single_term_joint_measure_is_product():
    rng = np.random.default_rng(5)
    f = [dens(2, rng), dens(2, rng)]
    setup = random_setup(rng)
    mu = separable_joint_measure([1.0], [f], setup)
    want = None
    for n, s in setup.scenario.axes:
        vec = np.einsum("ij,xji->x", f[n].matrix, setup[(n, s)].stack()).real
        want = vec if want is None else np.multiply.outer(want, vec)
    assert np.allclose(mu.tensor, want)


def test_separable_joint_measure_marginals():
    rng = np.random.default_rng(6)
    factors = [[dens(2, rng), dens(2, rng)] for _ in range(3)]
    w = [0.2, 0.5, 0.3]
    setup = random_setup(rng)
    b = born_behavior(separable_state(w, factors), setup)
    assert max_gap(separable_joint_measure(w, factors, setup).behavior(), b) < 1e-12


def test_basis_correlated_two_measures():
    # Every measurement is misaligned with the basis, so the cross terms survive.
    x, xz = qubit_spin_povm([1, 0, 0]), qubit_spin_povm([1, 0, 1])
    setup = MeasurementSetup({(0, 0): x, (0, 1): xz, (1, 0): x, (1, 1): xz})
    rho, mu_prime = basis_correlated_state([0.5, 0.5], setup)
    b = born_behavior(rho, setup)
    zero = DensityOperator((2,), np.diag([1.0, 0.0]))
    one = DensityOperator((2,), np.diag([0.0, 1.0]))
    mu = separable_joint_measure([0.5, 0.5], [[zero, zero], [one, one]], setup)
    assert max_gap(mu.behavior(), b) < 1e-12
    assert max_gap(mu_prime.behavior(), b) < 1e-12
    assert np.abs(mu.tensor - mu_prime.tensor).max() > 1e-3
    # The closed form agrees with the Born measure of the explicit dilation.
    stacks = [setup[ax].stack() for ax in setup.scenario.axes]
    direct = _born_tensor(dilation_state([0.5, 0.5], 4), [2] * 4, stacks)
    assert np.allclose(direct, mu_prime.tensor)


def test_noisy_state_endpoints():
    rng = np.random.default_rng(7)
    rho = DensityOperator((2, 3), random_density(6, rng))
    assert np.allclose(noisy_state(rho, 0).matrix, np.eye(6) / 6)
    assert np.allclose(noisy_state(rho, 1).matrix, rho.matrix)
    with pytest.raises(ValueError):
        noisy_state(rho, 1.5)
    with pytest.raises(ValueError):
        isotropic_state(1, 0.5)


@pytest.mark.parametrize("d", [2, 3])
def test_isotropic_properties(d):
    assert np.allclose(isotropic_state(d, 0).matrix, np.eye(d * d) / d ** 2)
    for g in (0.2, 0.7):
        eta = isotropic_state(d, g)
        for side in (0, 1):
            assert np.allclose(partial_trace(eta.matrix, [d, d], [side]), np.eye(d) / d)
    assert abs(ppt_min_eigenvalue(isotropic_state(d, 1 / (d + 1)))) < 1e-12
    assert not is_ppt(isotropic_state(d, 1 / (d + 1) + 0.05))
    assert is_ppt(isotropic_state(d, 1 / (d + 1) - 0.05))


def test_threshold_examples():
    psi2 = DensityOperator((2, 2), maximally_entangled(2))
    psi3 = DensityOperator((3, 3), maximally_entangled(3))
    assert abs(visibility_threshold(psi2, 2, 2) - 0.5) < 1e-12
    assert abs(visibility_threshold(psi3, 3, 3) - 1 / 3) < 1e-12
    rng = np.random.default_rng(8)
    rho = DensityOperator((2, 3), random_density(6, rng))
    assert visibility_threshold(rho, 4, 1) == 1.0
    assert visibility_threshold(rho, 1, 3) == 1.0
    assert abs(source_positivity_bound(psi2, 1, 2, "right") - 0.5) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
def test_threshold_is_best_direction(seed, s1, s2):
    rng = np.random.default_rng(seed)
    rho = DensityOperator((2, 3), random_density(6, rng))
    right = source_positivity_bound(rho, s1, s2, "right")
    left = source_positivity_bound(rho, s1, s2, "left")
    assert abs(visibility_threshold(rho, s1, s2) - max(right, left)) < 1e-12
    n1, _ = reduced_norms(rho)
    assert n1 >= 1 / 2 - 1e-12
    assert right <= 1 / (1 + (s2 - 1)) + 1e-12


def test_source_operator_trivial_cases():
    rng = np.random.default_rng(9)
    rho = DensityOperator((2, 2), random_density(4, rng))
    t0 = source_operator(rho, 0.0, "right", 3)
    assert np.allclose(t0.matrix, np.eye(16) / 16)
    t1 = source_operator(rho, 0.6, "right", 1)
    assert np.allclose(t1.matrix, noisy_state(rho, 0.6).matrix)
    with pytest.raises(ResourceError):
        source_operator(rho, 0.5, "right", 14)


def test_source_operator_isotropic():
    psi = DensityOperator((2, 2), maximally_entangled(2))
    src = source_operator(psi, 0.5, "right", 2)
    rep = verify_source_operator(src, isotropic_state(2, 0.5))
    assert rep.ok, rep.to_dict()


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["right", "left"]), st.integers(2, 3))
def test_source_operator_below_bound(seed, direction, copies):
    rng = np.random.default_rng(seed)
    d1, d2 = (2, 3) if rng.uniform() < 0.5 else (3, 2)
    if d1 * d2 * max(d1, d2) ** (copies - 1) > 200:
        copies = 2
    rho = DensityOperator((d1, d2), random_density(d1 * d2, rng))
    s1, s2 = (1, copies) if direction == "right" else (copies, 1)
    bound = source_positivity_bound(rho, s1, s2, direction)
    for frac in (0.5, 0.99, 1.0):
        g = frac * bound
        rep = verify_source_operator(source_operator(rho, g, direction, copies), noisy_state(rho, g))
        assert rep.ok, rep.to_dict()


def test_source_operator_above_bound_can_fail():
    psi = DensityOperator((2, 2), maximally_entangled(2))
    rep = verify_source_operator(source_operator(psi, 0.9, "right", 3), isotropic_state(2, 0.9))
    assert rep.checks["partial_traces"]
    assert not rep.checks["positive"]


@pytest.mark.parametrize("direction", ["right", "left"])
def test_directional_route_reproduces_born(direction):
    rng = np.random.default_rng(10)
    rho = DensityOperator((2, 2), random_density(4, rng))
    setup = random_setup(rng, 2, 3) if direction == "right" else random_setup(rng, 3, 2)
    s1, s2 = setup.scenario.settings
    copies = s2 if direction == "right" else s1
    g = source_positivity_bound(rho, s1, s2, direction)
    src = source_operator(rho, g, direction, copies)
    mu = assemble_from_directional_measures(directional_measures_from_source(src, setup))
    assert max_gap(mu.behavior(), born_behavior(noisy_state(rho, g), setup)) < 1e-9


def test_single_multisetting_on_born_behavior():
    rng = np.random.default_rng(11)
    rho = DensityOperator((2, 2), random_density(4, rng))
    setup = random_setup(rng, 3, 1)
    b = born_behavior(rho, setup)
    m = single_multisetting_model(b, 0)
    assert max_gap(evaluate_model(m, setup.scenario), b) < 1e-9


def test_restriction_of_separable_behavior():
    rng = np.random.default_rng(12)
    factors = [[dens(2, rng), dens(2, rng)] for _ in range(2)]
    b = born_behavior(separable_state([0.3, 0.7], factors), random_setup(rng, 2, 2))
    assert lhv_feasibility(b).feasible
    assert lhv_feasibility(restrict_behavior(b, {0: [1], 1: [0]})).feasible
    assert lhv_feasibility(restrict_behavior(b, sites=(1,))).feasible


def test_directional_route_checks_shapes():
    psi = DensityOperator((2, 2), maximally_entangled(2))
    setup = MeasurementSetup({(n, s): qubit_spin_povm(v) for (n, s), v in
                              zip(itertools.product(range(2), range(2)), np.eye(3)[[0, 2, 0, 2]])})
    with pytest.raises(ValueError):
        directional_measures_from_source(source_operator(psi, 0.3, "right", 3), setup)
