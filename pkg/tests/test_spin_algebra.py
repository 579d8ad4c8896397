import math

import numpy as np
import pytest
from scipy.linalg import expm

from ckt.errors import DimensionError, NotHermitianError, SpinValueError
from ckt.spin_algebra import (
    coupled_operators,
    embed,
    partial_trace,
    product_state,
    spin_operators,
    unitary_exp,
)

SPINS = [0.5, 1, 1.5, 2, 2.5, 3, 7.5, 10, 25]


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def _random_state(rng, d):
    psi = rng.normal(size=d * d) + 1j * rng.normal(size=d * d)
    return psi / np.linalg.norm(psi)


def test_spin_half_is_pauli_over_two():
    jx, jy, jz = spin_operators(0.5)
    assert np.allclose(jz, np.diag([0.5, -0.5]))
    assert np.allclose(jx, [[0, 0.5], [0.5, 0]])
    assert np.allclose(jy, [[0, -0.5j], [0.5j, 0]])


def test_spin_one_standard_matrices():
    jx, jy, jz = spin_operators(1)
    r = 1 / math.sqrt(2)
    assert np.allclose(jz, np.diag([1, 0, -1]))
    assert np.allclose(jx, [[0, r, 0], [r, 0, r], [0, r, 0]])
    assert np.allclose(jy, [[0, -1j * r, 0], [1j * r, 0, -1j * r], [0, 1j * r, 0]])


@pytest.mark.parametrize("j", SPINS)
def test_algebra_casimir_and_reality(j):
    jx, jy, jz = spin_operators(j)
    d = jx.shape[0]
    assert d == int(2 * j) + 1
    for op in (jx, jy, jz):
        assert np.max(np.abs(op - op.conj().T)) < 1e-10
    assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) < 1e-10
    assert np.max(np.abs(jy @ jz - jz @ jy - 1j * jx)) < 1e-10
    assert np.max(np.abs(jz @ jx - jx @ jz - 1j * jy)) < 1e-10
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.max(np.abs(casimir - j * (j + 1) * np.eye(d))) < 1e-10
    assert np.count_nonzero(jz - np.diag(np.diagonal(jz))) == 0
    assert np.all(jx.imag == 0) and np.all(jz.imag == 0)
    assert np.all(jy.real == 0)


@pytest.mark.parametrize("bad", [0, 0.3, -1, 1.25, 26])
def test_rejects_invalid_spin(bad):
    with pytest.raises(SpinValueError):
        spin_operators(bad)


def test_operators_are_read_only():
    jx, _, _ = spin_operators(2)
    with pytest.raises(ValueError):
        jx[0, 0] = 1.0


def test_embed_ordering_and_commutation(rng):
    j = 1
    _, _, jz = spin_operators(j)
    d = 3
    for m1 in (1, 0, -1):
        for m2 in (1, 0, -1):
            psi = product_state(j, m1, m2)
            assert np.allclose(embed(jz, 1) @ psi, m1 * psi)
            assert np.allclose(embed(jz, 2) @ psi, m2 * psi)
    a = _random_hermitian(rng, d)
    b = _random_hermitian(rng, d)
    assert np.allclose(embed(a, 1) @ embed(b, 2), embed(b, 2) @ embed(a, 1))


def test_embed_spin_half_zz():
    _, _, jz = spin_operators(0.5)
    assert np.allclose(embed(jz, 1) @ embed(jz, 2), np.diag([0.25, -0.25, -0.25, 0.25]))


def test_embed_rejects_bad_input():
    with pytest.raises(DimensionError):
        embed(np.zeros((2, 3)), 1)
    with pytest.raises(DimensionError):
        embed(np.eye(3), 3)
    with pytest.raises(DimensionError):
        embed(np.eye(3), 1, d=4)


def test_coupled_operators_match_embed():
    ops = coupled_operators(1.5)
    jx, jy, jz = spin_operators(1.5)
    assert np.array_equal(ops.jy1, embed(jy, 1))
    assert np.array_equal(ops.jz2, embed(jz, 2))


def test_unitary_exp_basics():
    jx, jy, jz = spin_operators(0.5)
    assert np.allclose(unitary_exp(jx, 0.0), np.eye(2))
    assert np.allclose(unitary_exp(jz, 2 * math.pi), -np.eye(2), atol=1e-12)


def test_unitary_exp_rotation_flips_jz_against_expm_oracle():
    jx, jy, jz = spin_operators(1)
    r = unitary_exp(jy, math.pi)
    oracle = expm(-1j * math.pi * np.asarray(jy))
    assert np.max(np.abs(r - oracle)) < 1e-10
    assert np.max(np.abs(r @ jz @ r.conj().T + jz)) < 1e-10


@pytest.mark.parametrize("j", [0.5, 1, 2.5, 6])
def test_unitary_exp_group_law_and_unitarity(rng, j):
    d = int(2 * j) + 1
    g = _random_hermitian(rng, d)
    a, b = 0.37, -1.21
    u = unitary_exp(g, a)
    assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < 1e-10
    assert np.max(np.abs(u @ unitary_exp(g, b) - unitary_exp(g, a + b))) < 1e-10
    assert np.max(np.abs(u - expm(-1j * a * g))) < 1e-10


def test_unitary_exp_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        unitary_exp(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


def test_partial_trace_product_state_is_projector():
    psi = product_state(2, 1, -2)
    rho = partial_trace(psi, keep=1)
    expected = np.zeros((5, 5))
    expected[1, 1] = 1.0
    assert np.allclose(rho, expected)


def test_partial_trace_bell_state():
    psi = (product_state(0.5, 0.5, 0.5) + product_state(0.5, -0.5, -0.5)) / math.sqrt(2)
    assert np.allclose(partial_trace(psi, 1), np.eye(2) / 2)
    assert np.allclose(partial_trace(psi, 2), np.eye(2) / 2)


def test_partial_trace_cat_state():
    psi = (product_state(3, 2, -1) + product_state(3, -2, 1)) / math.sqrt(2)
    lam = np.linalg.eigvalsh(partial_trace(psi, 1))
    assert np.allclose(sorted(lam)[-2:], [0.5, 0.5])
    assert np.allclose(sorted(lam)[:-2], 0.0)


@pytest.mark.parametrize("j", [0.5, 1, 2, 4.5])
def test_reduced_states_share_spectrum(rng, j):
    d = int(2 * j) + 1
    psi = _random_state(rng, d)
    for keep in (1, 2):
        rho = partial_trace(psi, keep)
        lam = np.linalg.eigvalsh(rho)
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert lam.min() > -1e-12
        assert abs(np.trace(rho) - 1) < 1e-12
    lam1 = np.linalg.eigvalsh(partial_trace(psi, 1))
    lam2 = np.linalg.eigvalsh(partial_trace(psi, 2))
    assert np.allclose(lam1, lam2, atol=1e-10)


def test_partial_trace_rejects_non_square_length():
    with pytest.raises(DimensionError):
        partial_trace(np.ones(5) / math.sqrt(5), 1)
