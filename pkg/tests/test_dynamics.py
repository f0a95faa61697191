"""Time evolution: RK4 master equation and quantum-jump Monte Carlo."""

import numpy as np
import pytest

from liouvep import (
    SystemParams,
    liouvillian,
    vectorize,
    steady_state,
    jump_operators,
    default_step,
    evolve_master,
    mc_trajectories,
    observable_series,
)
from conftest import random_params, random_pure_state

GROUND = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def _expm_reference(p, rho0, t):
    """Exact propagator by scipy's expm, the independent oracle."""
    from scipy.linalg import expm

    v = expm(-1j * liouvillian(p) * t) @ vectorize(rho0)
    return np.array([[v[0], v[1]], [v[2], v[3]]])


def test_jump_operator_rates():
    p = SystemParams(1.0, 0.2, 3.0, 0.25)
    ops = jump_operators(p)
    # decay operator sqrt(gamma0) |g><e|, dephasing sqrt(gammaphi) |e><e|
    assert ops.c_decay[1, 0] == pytest.approx(np.sqrt(0.75))
    assert ops.c_decay[0, 0] == 0.0
    assert ops.c_dephase[0, 0] == pytest.approx(np.sqrt(2.25))
    assert ops.c_dephase[1, 1] == 0.0
    # h_eff = H - (i/2) sum_k c_k^dag c_k
    anti = ops.h_eff - ops.h_eff.conj().T
    assert abs(anti[0, 0] + 1j * 3.0) < 1e-12
    assert abs(anti[1, 1]) < 1e-12


def test_master_matches_exact_propagator():
    rng = np.random.default_rng(41)
    times = np.linspace(0.0, 4.0, 9)
    for _ in range(10):
        p = random_params(rng, gamma=(0.0, 6.0))
        traj = evolve_master(p, GROUND, times)
        for k in (3, 8):
            ref = _expm_reference(p, GROUND, times[k])
            assert np.max(np.abs(traj.rhos[k] - ref)) < 1e-7


def test_master_preserves_trace_and_positivity():
    rng = np.random.default_rng(42)
    times = np.linspace(0.0, 6.0, 31)
    for _ in range(10):
        p = random_params(rng, gamma=(0.0, 8.0))
        traj = evolve_master(p, GROUND, times)
        for rho in traj.rhos:
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
            assert np.linalg.eigvalsh(rho).min() > -1e-6


def test_master_reaches_steady_state():
    p = SystemParams(1.0, 0.3, 2.0, 0.6)
    times = np.array([0.0, 60.0])
    traj = evolve_master(p, GROUND, times)
    assert np.max(np.abs(traj.rhos[-1] - steady_state(p))) < 1e-8


def test_rk4_convergence_order():
    """Halving the step must shrink the error by about 2^4."""
    p = SystemParams(1.0, 0.5, 2.0, 0.3)
    t_end = 3.0
    ref = _expm_reference(p, GROUND, t_end)
    h0 = default_step(p)
    errs = []
    for h in (h0, h0 / 2.0):
        traj = evolve_master(p, GROUND, np.array([0.0, t_end]), dt=h)
        errs.append(np.max(np.abs(traj.rhos[-1] - ref)))
    factor = errs[0] / errs[1]
    assert 12.0 < factor < 20.0


def test_evolve_rejects_bad_grid():
    with pytest.raises(ValueError):
        evolve_master(SystemParams(1.0), GROUND, np.array([0.0, 2.0, 1.0]))
    with pytest.raises(ValueError):
        evolve_master(SystemParams(1.0), GROUND, np.array([0.0, 1.0]), dt=-0.1)


def test_observable_series_master():
    p = SystemParams(1.0, 0.0, 1.0, 0.5)
    times = np.linspace(0.0, 5.0, 21)
    traj = evolve_master(p, GROUND, times)
    pe, err = observable_series(traj, "pop_e")
    sz = observable_series(traj, "sigma_z")[0]
    assert err is None
    assert pe[0] == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(sz - (2.0 * pe - 1.0))) < 1e-12
    with pytest.raises(ValueError):
        observable_series(traj, "sigma_q")


def test_mc_deterministic_given_seed():
    p = SystemParams(1.0, 0.4, 2.0, 0.5)
    times = np.linspace(0.0, 3.0, 7)
    a = mc_trajectories(p, GROUND, times, 200, master_seed=9)
    b = mc_trajectories(p, GROUND, times, 200, master_seed=9)
    assert np.array_equal(a.mean_rho, b.mean_rho)
    for name in a.obs:
        assert np.array_equal(a.obs[name][0], b.obs[name][0])
    c = mc_trajectories(p, GROUND, times, 200, master_seed=10)
    assert not np.array_equal(a.mean_rho, c.mean_rho)


def test_mc_matches_master_populations():
    rng = np.random.default_rng(43)
    times = np.linspace(0.0, 5.0, 11)
    p = random_params(rng, gamma=(0.5, 3.0))
    mc = mc_trajectories(p, GROUND, times, 4000, master_seed=3)
    ref = observable_series(evolve_master(p, GROUND, times), "pop_e")[0]
    pe, err = mc.obs["pop_e"]
    dev = np.abs(pe - ref)
    tol = 4.0 * np.maximum(err, 1e-4)
    assert np.all(dev <= tol)


def test_mc_no_jumps_without_damping():
    p = SystemParams(1.0, 0.0, 0.0, 1.0)
    times = np.linspace(0.0, 2.0, 5)
    mc = mc_trajectories(p, np.array([1.0, 0.0], complex), times, 100,
                         master_seed=1)
    assert mc.jump_counts.sum() == 0


def test_mc_accepts_state_vector_and_pure_matrix():
    rng = np.random.default_rng(44)
    psi = random_pure_state(rng)
    rho = np.outer(psi, psi.conj())
    p = SystemParams(1.0, 0.1, 1.0, 0.4)
    times = np.linspace(0.0, 2.0, 5)
    a = mc_trajectories(p, psi, times, 100, master_seed=2)
    b = mc_trajectories(p, rho, times, 100, master_seed=2)
    assert np.max(np.abs(a.mean_rho - b.mean_rho)) < 1e-9
    with pytest.raises(ValueError):
        mc_trajectories(p, 0.5 * np.eye(2), times, 10, master_seed=2)
