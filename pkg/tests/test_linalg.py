import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrlab.linalg import (
    hermitian_eigenvalues,
    jacobi_symmetric,
    min_eigenvalue,
    operator_norm,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    tensor,
)
from corrlab.quantum import maximally_entangled, random_density


def test_tensor_basics():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 2)), rng.normal(size=(3, 3))
    assert np.isclose(np.trace(tensor(a, b)), np.trace(a) * np.trace(b))
    e0 = np.diag([1.0, 0.0])
    e1 = np.diag([0.0, 1.0])
    m = tensor(e0, e1)
    assert m[1, 1] == 1 and np.count_nonzero(m) == 1


def test_partial_trace_product_rule():
    rng = np.random.default_rng(1)
    a, b = random_density(2, rng), random_density(3, rng)
    assert np.allclose(partial_trace(tensor(a, b), [2, 3], [1]), a * np.trace(b))
    assert np.allclose(partial_trace(tensor(a, b), [2, 3], [0]), b * np.trace(a))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_maximally_entangled_reduced(d):
    psi = maximally_entangled(d)
    for side in (0, 1):
        assert np.allclose(partial_trace(psi, [d, d], [side]), np.eye(d) / d)


def test_partial_trace_composition():
    rng = np.random.default_rng(2)
    rho = random_density(12, rng)
    dims = [2, 3, 2]
    once = partial_trace(rho, dims, [1, 2])
    seq = partial_trace(partial_trace(rho, dims, [2]), [2, 3], [1])
    assert np.allclose(once, seq)


def test_partial_trace_errors():
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), [2, 3], [0])
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), [2, 2], [])
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), [2, 2], [2])


def test_eigen_examples():
    assert hermitian_eigenvalues(np.diag([3.0, -1.0])) == [-1.0, 3.0]
    assert np.isclose(operator_norm(np.eye(3) / 3), 1 / 3)
    with pytest.raises(ValueError):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("gamma", [0.0, 1 / 3, 0.5, 1.0])
def test_isotropic_partial_transpose(gamma):
    rho = (1 - gamma) * np.eye(4) / 4 + gamma * maximally_entangled(2)
    low = min_eigenvalue(partial_transpose(rho, [2, 2], 1))
    assert abs(low - (1 - 3 * gamma) / 4) < 1e-12


def test_partial_transpose_involution():
    rng = np.random.default_rng(3)
    rho = random_density(6, rng)
    assert np.allclose(partial_transpose(partial_transpose(rho, [2, 3], 0), [2, 3], 0), rho)


def test_permute_subsystems():
    rng = np.random.default_rng(4)
    a, b = random_density(2, rng), random_density(3, rng)
    assert np.allclose(permute_subsystems(tensor(a, b), [2, 3], [1, 0]), tensor(b, a))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 12))
def test_eigenvalues_match_numpy(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (x + x.conj().T) / 2
    ours = hermitian_eigenvalues(h)
    ref = np.linalg.eigvalsh(h)
    assert np.allclose(ours, ref, atol=1e-10 * max(1.0, np.abs(ref).max()))


def test_jacobi_degenerate_and_diagonal():
    assert list(jacobi_symmetric(np.diag([2.0, 2.0, 2.0]))) == [2.0, 2.0, 2.0]
    vals = jacobi_symmetric(np.ones((4, 4)))
    assert np.allclose(vals, [0, 0, 0, 4], atol=1e-12)
