from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaoslab.spinops import (
    PauliString,
    SectorError,
    SizeError,
    kron,
    magnetization_dim,
    make_rng,
    parity_dims,
    partial_trace,
    pauli,
    pauli_string_matrix,
    pauli_string_sparse,
    product_ket,
    purity,
    random_product_state,
    reflection_permutation,
    sector_basis,
)

labels = st.lists(st.sampled_from("0xyz"), min_size=1, max_size=5)


def naive_string(s):
    return kron(*[pauli(c) for c in s])


@given(labels)
@settings(max_examples=60, deadline=None)
def test_pauli_string_matches_kron(s):
    M = pauli_string_matrix("".join(s))
    assert np.allclose(M, naive_string(s))
    assert np.allclose(pauli_string_sparse(s).toarray(), M)


@given(labels)
@settings(max_examples=40, deadline=None)
def test_pauli_string_hermitian_unitary(s):
    M = pauli_string_matrix("".join(s))
    n = M.shape[0]
    assert np.allclose(M, M.conj().T)
    assert np.allclose(M @ M, np.eye(n))
    expected_trace = n if set(s) == {"0"} else 0
    assert abs(np.trace(M) - expected_trace) < 1e-12


def test_site_one_is_leftmost_factor():
    Z1 = pauli_string_matrix("z0")
    assert np.allclose(Z1, np.kron(pauli("z"), np.eye(2)))
    # |0> is spin up
    up = product_ket(np.array([[1, 0], [1, 0]]))
    assert np.isclose(up.conj() @ Z1 @ up, 1)


def test_pauli_string_parse_and_weight():
    p = PauliString.parse("xIzy")
    assert p.L == 4
    assert p.weight == 3


def test_size_guard():
    with pytest.raises(SizeError):
        pauli_string_matrix("x" * 6, max_sites=5)


def test_bad_label():
    with pytest.raises(ValueError):
        pauli("q")


def test_partial_trace_product():
    rng = make_rng(3)
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    a = a @ a.conj().T
    a /= np.trace(a)
    b = np.diag([0.25, 0.25, 0.5, 0.0])
    rho = np.kron(a, b)
    assert np.allclose(partial_trace(rho, 3, [2, 3]), a)
    assert np.allclose(partial_trace(rho, 3, [1]), b)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
@settings(max_examples=30, deadline=None)
def test_partial_trace_preserves_trace_and_psd(seed, L):
    rng = make_rng(seed)
    X = rng.standard_normal((2**L, 2**L)) + 1j * rng.standard_normal((2**L, 2**L))
    rho = X @ X.conj().T
    rho /= np.trace(rho).real
    red = partial_trace(rho, L, range(2, L + 1))
    assert abs(np.trace(red) - 1) < 1e-10
    assert np.linalg.eigvalsh(red).min() > -1e-10
    assert 0.5 - 1e-10 <= purity(red) <= 1 + 1e-10


def test_purity_rejects_unnormalized():
    with pytest.raises(ValueError):
        purity(np.eye(2))


def test_random_product_state_is_reproducible_and_normalized():
    a = random_product_state(5, seed=11)
    b = random_product_state(5, seed=11)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert np.isclose(np.vdot(a.amplitudes, a.amplitudes), 1)
    # reduced state of each site is pure
    rho = a.density_matrix()
    assert np.isclose(purity(partial_trace(rho, 5, [2, 3, 4, 5])), 1)


@pytest.mark.parametrize("L", [2, 3, 4, 5, 8])
def test_reflection_is_involution(L):
    R = reflection_permutation(L)
    assert np.array_equal(R[R], np.arange(2**L))


@pytest.mark.parametrize("L", range(2, 11))
def test_parity_sector_dims_and_orthonormality(L):
    even = sector_basis(L, "parity", "even")
    odd = sector_basis(L, "parity", "odd")
    assert (even.dim, odd.dim) == parity_dims(L)
    assert even.dim + odd.dim == 2**L
    B = np.hstack([even.dense(), odd.dense()])
    assert np.allclose(B.conj().T @ B, np.eye(2**L))


def test_parity_dims_large():
    # (2**16 + 2**8) / 2, the count of reflection-even states
    assert parity_dims(16)[0] == 32896
    assert parity_dims(18)[0] == (2**18 + 2**9) // 2


@pytest.mark.parametrize("L,n_up", [(6, 3), (7, 2), (12, 6), (12, 5)])
def test_magnetization_dims(L, n_up):
    B = sector_basis(L, "magnetization", n_up)
    assert B.dim == comb(L, n_up) == magnetization_dim(L, n_up)


def test_magnetization_dim_l18():
    assert magnetization_dim(18, 7) == 31824


def test_sector_errors():
    with pytest.raises(SectorError):
        sector_basis(4, "magnetization", 5)
    with pytest.raises(SectorError):
        sector_basis(4, "parity", "up")
    with pytest.raises(SectorError):
        sector_basis(4, "momentum")


def test_make_rng_reproducible():
    assert make_rng(5).random() == make_rng(5).random()
    assert make_rng(np.random.SeedSequence(5)).random() == make_rng(5).random()
