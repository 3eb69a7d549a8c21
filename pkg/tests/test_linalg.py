import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from nvsim.linalg import (
    NotHermitianError,
    dagger,
    eig_hermitian,
    expm_unitary,
    kron,
    partial_trace_electron,
    projector,
    state_fidelity,
)
from nvsim.model import I_X, I_Z, u_cr

I2 = np.eye(2)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_state(rng, n, rank=None):
    rank = rank or n
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / abs(np.diag(r)))


BETA = np.array([1, 0, 0, 1j]) / math.sqrt(2)


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(I2, I2), np.eye(4))

    def test_diagonal(self):
        out = kron(np.diag([1, 0, -1]), I2)
        assert np.array_equal(out, np.diag([1, 1, 0, 0, -1, -1]))

    def test_block_convention(self):
        a = np.arange(4).reshape(2, 2)
        b = np.arange(9).reshape(3, 3) + 10
        out = kron(a, b)
        for i, j, k, l in np.ndindex(2, 2, 3, 3):
            assert out[i * 3 + k, j * 3 + l] == a[i, j] * b[k, l]

    def test_spectrum_against_direct_eigensolve(self):
        sz = np.diag([0.5, -0.5])
        w = np.sort(np.linalg.eigvalsh(kron(sz, I_X)))
        assert np.allclose(w, [-0.25, -0.25, 0.25, 0.25], atol=1e-14)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_associative_on_integer_matrices(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (rng.integers(-5, 6, size=(2, 2)) for _ in range(3))
        assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))

    def test_dims_multiply(self):
        assert kron(np.eye(3), I2).shape == (6, 6)


class TestExpm:
    def test_zero_generator(self):
        assert np.allclose(expm_unitary(np.zeros((4, 4)), 3.7), np.eye(4), atol=1e-15)

    def test_pi_rotation_about_x(self):
        u = expm_unitary(2 * math.pi * 0.110 * I_X, 1 / (2 * 0.110))
        assert abs(abs(u[0, 1]) - 1) < 1e-12
        assert abs(u[0, 0]) < 1e-12

    def test_scalar_exponentials(self):
        u = expm_unitary(np.diag([1.0, -1.0]), math.pi)
        assert np.allclose(u, -np.eye(2), atol=1e-15)

    def test_matches_pade(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            h = random_hermitian(rng, 6)
            t = rng.uniform(-3, 3)
            assert np.max(abs(expm_unitary(h, t) - expm(-1j * h * t))) < 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError) as exc:
            expm_unitary(np.array([[0, 1], [0, 0]]), 1.0)
        assert exc.value.deviation == pytest.approx(1.0)

    @given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
    @settings(max_examples=50, deadline=None)
    def test_inverse(self, seed, t):
        h = random_hermitian(np.random.default_rng(seed), 4)
        prod = expm_unitary(h, t) @ expm_unitary(h, -t)
        assert np.max(abs(prod - np.eye(4))) <= 1e-12

    def test_semigroup_100_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            h = random_hermitian(rng, 4)
            t1, t2 = rng.uniform(-2, 2, size=2)
            lhs = expm_unitary(h, t1 + t2)
            rhs = expm_unitary(h, t1) @ expm_unitary(h, t2)
            assert np.max(abs(lhs - rhs)) <= 1e-11

    def test_unitary(self):
        rng = np.random.default_rng(5)
        u = expm_unitary(random_hermitian(rng, 6), 2.5)
        assert np.max(abs(dagger(u) @ u - np.eye(6))) <= 1e-12


class TestEig:
    def test_ix(self):
        w, _ = eig_hermitian(I_X)
        assert np.allclose(w, [-0.5, 0.5])

    def test_permutation(self):
        w, v = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(w, [1, 2, 3])
        assert np.allclose(abs(v), [[0, 0, 1], [1, 0, 0], [0, 1, 0]])

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            eig_hermitian(np.array([[1, 2], [0, 1]]))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_reconstruction(self, seed):
        h = random_hermitian(np.random.default_rng(seed), 5)
        w, v = eig_hermitian(h)
        assert np.all(np.diff(w) >= 0)
        assert np.max(abs(h @ v - v * w)) <= 1e-10
        assert np.max(abs(v @ np.diag(w) @ dagger(v) - h)) <= 1e-10

    def test_degenerate_basis_is_canonical(self):
        rng = np.random.default_rng(0)
        d = np.diag([0.0, 0.0, 1.0, 1.0])
        bases = []
        for _ in range(3):
            u = np.eye(4, dtype=complex)
            u[:2, :2] = random_unitary(rng, 2)
            u[2:, 2:] = random_unitary(rng, 2)
            # same operator, different floating-point route into eigh
            h = u @ d @ dagger(u)
            bases.append(eig_hermitian(h)[1])
        for b in bases[1:]:
            assert np.allclose(b, bases[0], atol=1e-10)
        assert np.allclose(bases[0], np.eye(4), atol=1e-10)


class TestPartialTrace:
    def test_basis_state(self):
        rho = np.zeros((4, 4))
        rho[0, 0] = 1
        assert np.allclose(partial_trace_electron(rho, 2), np.diag([1, 0]))

    def test_bell_reduced_state(self):
        assert np.allclose(partial_trace_electron(projector(BETA), 2), I2 / 2, atol=1e-15)

    def test_product_state(self):
        rng = np.random.default_rng(1)
        re, rn = random_state(rng, 3), random_state(rng, 2)
        assert np.allclose(partial_trace_electron(kron(re, rn), 3), rn, atol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            partial_trace_electron(np.eye(5) / 5, 3)


class TestFidelity:
    def test_self(self):
        rho = random_state(np.random.default_rng(2), 4)
        assert state_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-14)

    def test_basis_vs_bell(self):
        rho = np.zeros((4, 4))
        rho[0, 0] = 1
        assert state_fidelity(rho, projector(BETA)) == pytest.approx(0.5, abs=1e-15)

    def test_zero_purity_rejected(self):
        with pytest.raises(ValueError):
            state_fidelity(np.zeros((2, 2)), np.eye(2) / 2)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            state_fidelity(np.eye(2) / 2, np.eye(4) / 4)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_symmetric_bounded_and_unitarily_invariant(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_state(rng, 4, rank=2), random_state(rng, 4)
        u = random_unitary(rng, 4)
        f = state_fidelity(a, b)
        assert 0 <= f <= 1
        assert f == pytest.approx(state_fidelity(b, a), abs=1e-14)
        g = state_fidelity(u @ a @ dagger(u), u @ b @ dagger(u))
        assert abs(f - g) <= 1e-12


def test_u_cr_is_block_diagonal_unitary():
    u = u_cr(1.234)
    assert np.max(abs(dagger(u) @ u - np.eye(4))) < 1e-15
    assert np.allclose(u[:2, 2:], 0) and np.allclose(u[:2, :2], I2)
    assert np.allclose(np.diag(I_Z), [0.5, -0.5])
