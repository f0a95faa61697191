"""Generator construction: Hamiltonian, Liouvillian, vectorization."""

import numpy as np
import pytest

from liouvep import (
    SystemParams,
    hamiltonian,
    lindblad_rhs,
    liouvillian,
    alpha_decomposition,
    commutator_norm,
    vectorize,
    devectorize,
    check_density_matrix,
)
from conftest import random_density_matrix, random_params


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(omega=0.0)
    with pytest.raises(ValueError):
        SystemParams(omega=1.0, gamma=-0.1)
    with pytest.raises(ValueError):
        SystemParams(omega=1.0, alpha=1.5)
    with pytest.raises(ValueError):
        SystemParams(omega=float("nan"))
    p = SystemParams(omega=2.0, gamma=3.0, alpha=0.25)
    assert p.gamma0 == pytest.approx(0.75)
    assert p.gammaphi == pytest.approx(2.25)


def test_hamiltonian_matrix():
    p = SystemParams(omega=2.0, delta=0.7)
    h = hamiltonian(p)
    assert np.allclose(h, [[-0.7, 1.0], [1.0, 0.0]])
    assert np.allclose(h, h.conj().T)


def test_liouvillian_matches_rhs():
    """-i L vec(rho) must equal the Lindblad right-hand side for any rho."""
    rng = np.random.default_rng(11)
    for _ in range(30):
        p = random_params(rng)
        rho = random_density_matrix(rng)
        lhs = -1j * liouvillian(p) @ vectorize(rho)
        rhs = vectorize(lindblad_rhs(p, rho))
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, p.omega, p.gamma)


def test_rhs_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(12)
    for _ in range(50):
        p = random_params(rng)
        rho = random_density_matrix(rng)
        dot = lindblad_rhs(p, rho)
        assert abs(np.trace(dot)) < 1e-12 * max(1.0, p.gamma, p.omega)
        assert np.max(np.abs(dot - dot.conj().T)) < 1e-12 * max(1.0, p.gamma, p.omega)


def test_zero_eigenvalue_structurally_exact():
    """Trace preservation makes (1, 0, 0, 1) an exact left null vector."""
    rng = np.random.default_rng(13)
    tr = np.array([1.0, 0.0, 0.0, 1.0])
    for _ in range(20):
        p = random_params(rng)
        assert np.max(np.abs(tr @ liouvillian(p))) == 0.0


def test_alpha_decomposition_linearity():
    rng = np.random.default_rng(14)
    for _ in range(30):
        p = random_params(rng)
        l_phi, l_dec, err = alpha_decomposition(p)
        recon = (1.0 - p.alpha) * l_phi + p.alpha * l_dec
        assert np.max(np.abs(recon - liouvillian(p))) < 1e-12 * max(1.0, p.gamma)
        assert err < 1e-12 * max(1.0, p.omega, p.gamma, abs(p.delta))


def test_generator_noncommutativity():
    """Decay and dephasing generators do not commute; that is what moves
    the EP loci with alpha. Frozen value at (omega, delta, gamma) =
    (1, 0, 1): Frobenius norm sqrt(3)."""
    p = SystemParams(1.0, 0.0, 1.0, 0.5)
    l_phi, l_dec, _ = alpha_decomposition(p)
    assert commutator_norm(l_dec, l_phi) == pytest.approx(np.sqrt(3.0), abs=1e-12)

    rng = np.random.default_rng(15)
    for _ in range(20):
        p = random_params(rng, gamma=(0.1, 10.0))
        l_phi, l_dec, _ = alpha_decomposition(p)
        assert commutator_norm(l_dec, l_phi) > 0.0


def test_vectorize_round_trip():
    rng = np.random.default_rng(16)
    for _ in range(20):
        rho = random_density_matrix(rng)
        assert np.array_equal(devectorize(vectorize(rho)), rho)


def test_devectorize_strict_rejects():
    v = np.array([0.5, 0.1 + 0.2j, 0.1 + 0.2j, 0.5])  # v[2] != conj(v[1])
    with pytest.raises(ValueError, match="Hermiticity"):
        devectorize(v, strict=True)
    v2 = np.array([0.5 + 0.1j, 0.0, 0.0, 0.5])
    with pytest.raises(ValueError, match="diagonal"):
        devectorize(v2, strict=True)


def test_devectorize_lenient_projects():
    v = np.array([0.6, 0.1 + 0.2j, 0.3 - 0.1j, 0.6])
    rho = devectorize(v, strict=False)
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1.0)


def test_check_density_matrix():
    check_density_matrix(np.eye(2) / 2)
    with pytest.raises(ValueError, match="trace"):
        check_density_matrix(np.eye(2))
    with pytest.raises(ValueError, match="Hermitian"):
        check_density_matrix(np.array([[0.5, 0.3], [0.1, 0.5]]))
    with pytest.raises(ValueError, match="negative eigenvalue"):
        check_density_matrix(np.array([[1.2, 0.0], [0.0, -0.2]]))
