"""Measurement chain: calibration, tomography, eigenvalue extraction."""

import numpy as np
import pytest

from liouvep import (
    SystemParams,
    eigenvalues_closed_form,
    evolve_master,
    observable_series,
    DECAY_CALIBRATION,
    DEPHASING_CALIBRATION,
    calibrate_rate,
    fit_exponential_decay,
    fit_dephasing_rabi,
    apply_rotation,
    simulate_measurement,
    reconstruct_state,
    tomography,
    simulate_decay_survival,
    extract_eigenvalues,
    run_figure_pipeline,
)
from conftest import random_density_matrix

GROUND = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def _bloch(rho):
    return np.array([
        2.0 * rho[0, 1].real,
        -2.0 * rho[0, 1].imag,
        (rho[0, 0] - rho[1, 1]).real,
    ])


def test_calibration_curve_frozen_points():
    # quadratic curves evaluated by hand at the mid-range settings
    assert DECAY_CALIBRATION(3.86) == pytest.approx(4.30395572, abs=1e-8)
    assert DEPHASING_CALIBRATION(3.5) == pytest.approx(1.09325, abs=1e-8)
    assert calibrate_rate(DECAY_CALIBRATION, 0.0) == pytest.approx(0.244)


def test_calibration_curve_domain():
    with pytest.raises(ValueError, match="outside the calibrated range"):
        DECAY_CALIBRATION(20.0)
    with pytest.raises(ValueError):
        DEPHASING_CALIBRATION(-1.0)
    with pytest.warns(UserWarning, match="clamping"):
        assert DEPHASING_CALIBRATION(0.0) == 0.0


def test_apply_rotation_is_unitary_map():
    rng = np.random.default_rng(51)
    for _ in range(20):
        rho = random_density_matrix(rng)
        theta = rng.uniform(0, np.pi)
        phi = rng.uniform(0, 2 * np.pi)
        out = apply_rotation(rho, theta, phi)
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(out, out.conj().T)
        assert np.allclose(np.sort(np.linalg.eigvalsh(out)),
                           np.sort(np.linalg.eigvalsh(rho)), atol=1e-12)


def test_measurement_axes():
    """Basis pulses map each Bloch axis onto the population readout."""
    plus_x = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    plus_y = 0.5 * np.array([[1.0, -1.0j], [1.0j, 1.0]], dtype=complex)
    excited = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    assert simulate_measurement(plus_x, "x").p_hat == pytest.approx(1.0, abs=1e-12)
    assert simulate_measurement(plus_y, "y").p_hat == pytest.approx(1.0, abs=1e-12)
    assert simulate_measurement(excited, "z").p_hat == pytest.approx(1.0, abs=1e-12)
    assert simulate_measurement(plus_x, "z").p_hat == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        simulate_measurement(plus_x, "q")
    with pytest.raises(ValueError):
        simulate_measurement(plus_x, "x", n_shots=100)  # rng required


def test_measurement_shot_noise_is_binomial():
    rng = np.random.default_rng(52)
    rho = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    n = 400
    hats = [simulate_measurement(rho, "z", n_shots=n, rng=rng).p_hat
            for _ in range(300)]
    assert np.std(hats) == pytest.approx(np.sqrt(0.25 / n), rel=0.2)


def test_tomography_round_trip_exact():
    """Noiseless tomography must reproduce the state exactly."""
    rng = np.random.default_rng(53)
    for _ in range(30):
        rho = random_density_matrix(rng)
        tomo = tomography(rho)
        assert np.max(np.abs(tomo.bloch - _bloch(rho))) < 1e-12
        assert np.max(np.abs(tomo.state.projected - rho)) < 1e-10
        assert tomo.state.is_physical


def test_tomography_round_trip_with_shots():
    rng = np.random.default_rng(54)
    rho = random_density_matrix(rng)
    tomo = tomography(rho, n_shots=200000, rng=rng)
    assert np.max(np.abs(tomo.bloch - _bloch(rho))) < 0.02
    assert np.all(tomo.bloch_stderr > 0)


def test_reconstruct_state_projection():
    # an impossible Bloch vector of length > 1 must be projected back
    rec = reconstruct_state(1.0, 1.0, 1.0)
    assert not rec.is_physical
    evals = np.linalg.eigvalsh(rec.projected)
    assert evals.min() >= -1e-12
    assert np.trace(rec.projected).real == pytest.approx(1.0, abs=1e-12)


def test_fit_exponential_decay_recovers_rate():
    rng = np.random.default_rng(55)
    rate = 1.7
    times = np.linspace(0.0, 3.0 / rate, 24)
    surv = simulate_decay_survival(rate, times, 4000, rng)
    fit = fit_exponential_decay(times, surv)
    assert fit.converged
    assert fit.value == pytest.approx(rate, abs=4.0 * fit.stderr)
    assert fit.stderr < 0.1 * rate


def test_simulate_decay_survival_deterministic():
    times = np.linspace(0.0, 2.0, 10)
    a = simulate_decay_survival(1.0, times, 500, np.random.default_rng(7))
    b = simulate_decay_survival(1.0, times, 500, np.random.default_rng(7))
    assert np.array_equal(a, b)
    assert a[0] == 1.0 and np.all(np.diff(a) <= 0)


def test_fit_dephasing_rabi_recovers_rate():
    """Fit a dephasing-damped Rabi oscillation generated by the solver."""
    omega = 2.0 * np.pi * 40.0
    rate = 2.0 * np.pi * 1.1
    p = SystemParams(omega, 0.0, rate, 0.0)
    times = np.linspace(0.0, 16.0 * np.pi / omega, 48)
    traj = evolve_master(p, GROUND, times)
    pe = observable_series(traj, "pop_e")[0]
    fit = fit_dephasing_rabi(times, pe, omega=omega)
    assert fit.converged
    assert fit.value == pytest.approx(rate, rel=0.05)


def test_extract_on_synthetic_modes():
    """Three planted damped modes come back to high accuracy."""
    times = np.linspace(0.0, 6.0, 160)
    energies = np.array([0.9 - 0.3j, -0.9 - 0.3j, -0.8j])
    amps = np.array([0.4 + 0.1j, 0.4 - 0.1j, 0.7])
    sig = (amps[None, :] * np.exp(-1j * energies[None, :] * times[:, None])).sum(axis=1)
    sig = sig.real + 0.25
    est = extract_eigenvalues(times, sig)
    assert len(est.energies) == 3
    for e in energies:
        assert min(abs(est.energies - e)) < 1e-6
    assert not est.order_reduced
    assert est.residual_rms < 1e-8


def test_extract_joint_stack_shares_modes():
    times = np.linspace(0.0, 6.0, 160)
    energies = np.array([0.9 - 0.3j, -0.9 - 0.3j, -0.8j])
    rows = []
    rng = np.random.default_rng(56)
    for _ in range(3):
        a = rng.normal(size=3) + 1j * rng.normal(size=3)
        a[1] = np.conj(a[0])
        a[2] = a[2].real
        s = (a[None, :] * np.exp(-1j * energies[None, :] * times[:, None])).sum(axis=1)
        rows.append(s.real)
    est = extract_eigenvalues(times, np.array(rows))
    assert est.amplitudes.shape == (3, 3)
    for e in energies:
        assert min(abs(est.energies - e)) < 1e-6


def test_extract_flags_order_reduction_at_ep():
    """On the critical line two eigenvalues coincide and the fit must
    report a reduced model order."""
    p = SystemParams(1.0, 0.0, 4.0, 0.0)
    times = np.linspace(0.0, 6.0, 160)
    traj = evolve_master(p, GROUND, times)
    stack = np.vstack([observable_series(traj, nm)[0]
                       for nm in ("sigma_x", "sigma_y", "sigma_z")])
    est = extract_eigenvalues(times, stack)
    assert est.order_reduced


def test_extract_input_validation():
    times = np.linspace(0.0, 1.0, 40)
    with pytest.raises(ValueError):
        extract_eigenvalues(times, np.zeros(39))
    with pytest.raises(ValueError):
        extract_eigenvalues(times[:4], np.zeros(4))
    uneven = np.concatenate([times[:20], times[20:] * 1.5])
    with pytest.raises(ValueError):
        extract_eigenvalues(uneven, np.zeros(40))


def test_pipeline_noiseless_matches_theory():
    panel = run_figure_pipeline([0.0], [1.0, 2.5], delta=1.0 / np.sqrt(8.0),
                                n_shots=None)
    assert len(panel.points) == 6
    for pt in panel.points:
        assert pt.match_distance < 1e-6
        assert not pt.order_reduced
    assert panel.coverage() == 1.0


def test_pipeline_noisy_deterministic():
    kw = dict(alphas=[0.0], gammas=[2.0], delta=1.0 / np.sqrt(8.0),
              n_shots=2000, seed=12)
    a = run_figure_pipeline(**kw)
    b = run_figure_pipeline(**kw)
    assert [(p.branch, p.energy) for p in a.points] == \
           [(p.branch, p.energy) for p in b.points]
    assert len(a.points) == 3
    for pt in a.points:
        assert np.isfinite(pt.energy.real) and np.isfinite(pt.energy.imag)
        assert pt.n_observables == 3
