import numpy as np

from liouvep import SystemParams


def random_density_matrix(rng):
    """Random full-rank 2x2 density matrix via a Wishart draw."""
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure_state(rng):
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    return psi / np.linalg.norm(psi)


def random_params(rng, omega=(0.5, 5.0), delta=(-3.0, 3.0),
                  gamma=(0.0, 10.0), alpha=(0.0, 1.0)):
    return SystemParams(
        omega=float(rng.uniform(*omega)),
        delta=float(rng.uniform(*delta)),
        gamma=float(rng.uniform(*gamma)),
        alpha=float(rng.uniform(*alpha)),
    )
