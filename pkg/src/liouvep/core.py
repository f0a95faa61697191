"""Model definition for a driven dissipative two-level system.

A qubit with excited state |e> and ground state |g> is driven at Rabi
frequency Omega and detuning Delta, and coupled to two competing noise
channels whose total rate gamma is split by a mixing parameter alpha:

    decay     |e> -> |g>   at rate gamma0   = alpha * gamma
    dephasing |e><e|       at rate gammaphi = (1 - alpha) * gamma

The density matrix evolves under the Lindblad equation

    drho/dt = -i[H, rho] + gamma0 D[|g><e|](rho) + gammaphi D[|e><e|](rho)

with D[A](rho) = A rho A^dag - (A^dag A rho + rho A^dag A)/2 and, in the
(e, g) basis,

    H = [[-Delta, Omega/2], [Omega/2, 0]].

Vectorizing rho as (rho_ee, rho_eg, rho_ge, rho_gg) puts the equation in
the form d(vec rho)/dt = -i * L * vec rho for a 4x4 non-Hermitian matrix
L built here. Eigenvalues E of L are quoted in the energy convention, so
a Lindblad rate lambda corresponds to E = i*lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY",
    "KET_E",
    "KET_G",
    "hamiltonian",
    "lindblad_rhs",
    "liouvillian",
    "alpha_decomposition",
    "commutator_norm",
    "vectorize",
    "devectorize",
    "check_density_matrix",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)

for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY, KET_E, KET_G):
    _m.setflags(write=False)


@dataclass(frozen=True)
class SystemParams:
    """Immutable parameter set (omega, delta, gamma, alpha).

    omega : Rabi frequency, > 0; sets the frequency unit.
    delta : drive detuning, any real.
    gamma : total dissipation rate, >= 0.
    alpha : channel mixing in [0, 1]; alpha=1 pure decay, alpha=0 pure
            dephasing.
    """

    omega: float
    delta: float = 0.0
    gamma: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not np.isfinite([self.omega, self.delta, self.gamma, self.alpha]).all():
            raise ValueError("parameters must be finite")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def gamma0(self) -> float:
        """Decay rate alpha*gamma."""
        return self.alpha * self.gamma

    @property
    def gammaphi(self) -> float:
        """Dephasing rate (1-alpha)*gamma."""
        return (1.0 - self.alpha) * self.gamma


def hamiltonian(p: SystemParams) -> np.ndarray:
    """Drive Hamiltonian [[-Delta, Omega/2], [Omega/2, 0]] in the (e, g) basis."""
    return np.array(
        [[-p.delta, p.omega / 2.0], [p.omega / 2.0, 0.0]], dtype=complex
    )


def _dissipator(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    ada = a.conj().T @ a
    return a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada)


def lindblad_rhs(p: SystemParams, rho: np.ndarray) -> np.ndarray:
    """Right-hand side drho/dt of the master equation, straight from the
    commutator and the two dissipators.

    This is the definition-level route; ``liouvillian`` encodes the same
    map as a matrix and the two must agree on every density matrix.
    """
    rho = np.asarray(rho, dtype=complex)
    h = hamiltonian(p)
    sm = np.outer(KET_G, KET_E.conj())        # |g><e|
    pe = np.outer(KET_E, KET_E.conj())        # |e><e|
    out = -1j * (h @ rho - rho @ h)
    out += p.gamma0 * _dissipator(sm, rho)
    out += p.gammaphi * _dissipator(pe, rho)
    return out


def liouvillian(p: SystemParams) -> np.ndarray:
    """4x4 matrix L with d(vec rho)/dt = -i L vec rho.

    Basis order (rho_ee, rho_eg, rho_ge, rho_gg). The first column pair
    (-i*alpha*gamma, +i*alpha*gamma) in rows 1 and 4 carries the decay
    feed from rho_ee into rho_gg; (1, 0, 0, 1) is an exact left null
    vector (trace preservation).
    """
    om, de, ga, al = p.omega, p.delta, p.gamma, p.alpha
    return np.array(
        [
            [-1j * al * ga, -om / 2.0, om / 2.0, 0.0],
            [-om / 2.0, -1j * ga / 2.0 - de, 0.0, om / 2.0],
            [om / 2.0, 0.0, -1j * ga / 2.0 + de, -om / 2.0],
            [1j * al * ga, om / 2.0, -om / 2.0, 0.0],
        ],
        dtype=complex,
    )


def alpha_decomposition(p: SystemParams) -> tuple[np.ndarray, np.ndarray, float]:
    """Split L(alpha) = (1-alpha) * L_phi + alpha * L_0.

    L_phi is the pure-dephasing generator (alpha=0) and L_0 the
    pure-decay generator (alpha=1), both at the same (omega, delta,
    gamma). Returns (L_phi, L_0, recon_err) where recon_err is the max
    entrywise deviation of the recombination from liouvillian(p); a
    failure here would mean the builder is not affine in alpha.
    """
    p_phi = SystemParams(p.omega, p.delta, p.gamma, 0.0)
    p_dec = SystemParams(p.omega, p.delta, p.gamma, 1.0)
    l_phi = liouvillian(p_phi)
    l_dec = liouvillian(p_dec)
    recon = (1.0 - p.alpha) * l_phi + p.alpha * l_dec
    err = float(np.max(np.abs(recon - liouvillian(p))))
    if err > 1e-12 * max(1.0, p.omega, p.gamma, abs(p.delta)):
        raise AssertionError(f"alpha decomposition failed to recombine, err={err:g}")
    return l_phi, l_dec, err


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of [a, b]. Nonzero for (L_0, L_phi) whenever
    gamma > 0, which is what makes the EP loci move with alpha."""
    return float(np.linalg.norm(a @ b - b @ a))


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Flatten a 2x2 operator to (rho_ee, rho_eg, rho_ge, rho_gg)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    return np.array([rho[0, 0], rho[0, 1], rho[1, 0], rho[1, 1]])


def devectorize(v: np.ndarray, strict: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Inverse of ``vectorize``.

    strict=True enforces the Hermiticity pattern of the vector within
    tol (v[2] == conj(v[1]), v[0] and v[3] real) and raises naming the
    violated invariant. strict=False projects instead: the Hermitian
    part is kept and the trace is renormalized to 1 when it is nonzero.
    Lenient mode is meant for noisy tomography output.
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape != (4,):
        raise ValueError(f"expected a length-4 vector, got shape {v.shape}")
    rho = np.array([[v[0], v[1]], [v[2], v[3]]])
    scale = max(1.0, float(np.max(np.abs(v))))
    if strict:
        if abs(v[2] - np.conj(v[1])) > tol * scale:
            raise ValueError(
                "Hermiticity violated: v[2] != conj(v[1]) "
                f"(|diff| = {abs(v[2] - np.conj(v[1])):g})"
            )
        if abs(v[0].imag) > tol * scale or abs(v[3].imag) > tol * scale:
            raise ValueError(
                "Hermiticity violated: diagonal entries not real "
                f"(imags {v[0].imag:g}, {v[3].imag:g})"
            )
        return rho
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if abs(tr) > 1e-12:
        rho = rho / tr
    return rho


def check_density_matrix(
    rho: np.ndarray, trace_tol: float = 1e-9, positivity_tol: float = 1e-9
) -> None:
    """Raise ValueError unless rho is Hermitian, unit trace and PSD
    within the given tolerances."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > trace_tol:
        raise ValueError(f"not Hermitian within tolerance (deviation {herm:g})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace differs from 1 by {abs(tr - 1.0):g}")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals.min() < -positivity_tol:
        raise ValueError(f"negative eigenvalue {evals.min():g} beyond tolerance")
