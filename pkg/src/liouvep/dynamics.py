"""Time evolution: deterministic master equation and quantum-jump unraveling.

The master path integrates d(vec rho)/dt = -i L vec rho with a fixed-step
classical Runge-Kutta scheme (default step 0.01 / max(Omega, gamma,
|Delta|)), re-Hermitizing every step and renormalizing the trace only
when the drift exceeds a logged threshold.

The Monte Carlo path unravels the same equation into pure-state
trajectories with jump operators

    c_decay   = sqrt(alpha*gamma)     |g><e|
    c_dephase = sqrt((1-alpha)*gamma) |e><e|

evolved under H_eff = H - (i/2) sum_k c_k^dag c_k. Jump times use the
exact norm-threshold rule: the unnormalized state evolves until its
squared norm hits a uniform random threshold r, the jump instant is
resolved by a dyadic bisection of the step (the norm is monotone
nonincreasing, d||psi||^2/dt = -gamma |psi_e|^2), a channel is chosen
with probability proportional to ||c_k psi||^2, and r is redrawn. Both
channels annihilate onto definite states: a decay jump lands on |g>, a
dephasing jump re-projects onto |e>. A dephasing jump therefore changes
the population of the individual trajectory, but the ensemble average
is population-neutral because the no-jump drift compensates; the net
ensemble effect is pure phase randomization.

Each trajectory owns an RNG stream spawned from (master_seed,
trajectory_index), and trajectories are processed in fixed-size chunks,
so results are bit-identical regardless of how chunks are distributed
over workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    SystemParams,
    KET_E,
    KET_G,
    hamiltonian,
    liouvillian,
    vectorize,
    devectorize,
    check_density_matrix,
)

__all__ = [
    "JumpOperatorSet",
    "MasterTrajectory",
    "McTrajectory",
    "jump_operators",
    "default_step",
    "evolve_master",
    "mc_trajectories",
    "observable_series",
]

OBSERVABLES = ("pop_e", "sigma_x", "sigma_y", "sigma_z")

_CHUNK = 4096          # fixed chunk size keeps reductions worker-independent
_BISECT_LEVELS = 42    # dyadic jump-time resolution, h * 2**-42


@dataclass(frozen=True)
class JumpOperatorSet:
    """Jump operators and effective Hamiltonian of the unraveling."""

    c_decay: np.ndarray
    c_dephase: np.ndarray
    h_eff: np.ndarray

    @property
    def total_rate_op(self) -> np.ndarray:
        return (
            self.c_decay.conj().T @ self.c_decay
            + self.c_dephase.conj().T @ self.c_dephase
        )


def jump_operators(p: SystemParams) -> JumpOperatorSet:
    c1 = np.sqrt(p.gamma0) * np.outer(KET_G, KET_E.conj())
    c2 = np.sqrt(p.gammaphi) * np.outer(KET_E, KET_E.conj())
    h_eff = hamiltonian(p) - 0.5j * (c1.conj().T @ c1 + c2.conj().T @ c2)
    return JumpOperatorSet(c_decay=c1, c_dephase=c2, h_eff=h_eff)


def default_step(p: SystemParams) -> float:
    return 0.01 / max(p.omega, p.gamma, abs(p.delta))


def _expm2(mat: np.ndarray) -> np.ndarray:
    """Closed-form exponential of a 2x2 matrix.

    exp(A) = e^m (cosh(s) I + sinhc(s) (A - m I)) with m = tr(A)/2 and
    s^2 = m^2 - det(A); the sinhc series keeps the defective s -> 0
    case smooth, so this works even at the Hamiltonian EP of H_eff.
    """
    m = 0.5 * (mat[0, 0] + mat[1, 1])
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    s2 = m * m - det
    s = np.sqrt(s2 + 0j)
    if abs(s) < 1e-5:
        ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0
        shc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0
    else:
        ch = np.cosh(s)
        shc = np.sinh(s) / s
    return np.exp(m) * (ch * np.eye(2) + shc * (mat - m * np.eye(2)))


@dataclass
class MasterTrajectory:
    """Deterministic density-matrix path on a time grid."""

    params: SystemParams
    times: np.ndarray
    rhos: np.ndarray          # (n, 2, 2)
    metadata: dict = field(default_factory=dict)


def evolve_master(
    p: SystemParams,
    rho0: np.ndarray,
    t_grid: np.ndarray,
    dt: float | None = None,
    renorm_tol: float = 1e-12,
    negativity_tol: float = 1e-6,
) -> MasterTrajectory:
    """Integrate the master equation with fixed-step RK4.

    The state is re-Hermitized every step; trace drift beyond
    renorm_tol triggers a renormalization and is counted in the
    metadata. An eigenvalue of rho below -negativity_tol aborts with
    diagnostics, since the exact flow is completely positive and such a
    violation means the step size is not resolving the dynamics.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-D array")
    check_density_matrix(rho0, trace_tol=1e-9, positivity_tol=1e-7)
    h_target = float(dt) if dt is not None else default_step(p)
    if h_target <= 0:
        raise ValueError("dt must be positive")
    mat = -1j * liouvillian(p)
    v = vectorize(np.asarray(rho0, dtype=complex))
    rhos = np.empty((len(t_grid), 2, 2), dtype=complex)
    n_renorm = 0
    max_drift = 0.0

    def hermitize(vec4):
        vec4[0] = vec4[0].real
        vec4[3] = vec4[3].real
        off = 0.5 * (vec4[1] + np.conj(vec4[2]))
        vec4[1] = off
        vec4[2] = np.conj(off)
        return vec4

    def store(k, vec4):
        rho = devectorize(vec4, strict=False)
        evals = np.linalg.eigvalsh(rho)
        if evals.min() < -negativity_tol:
            raise RuntimeError(
                f"state went negative at t={t_grid[k]:g} "
                f"(min eigenvalue {evals.min():g}); reduce dt"
            )
        rhos[k] = rho

    store(0, v)
    for k in range(1, len(t_grid)):
        span = t_grid[k] - t_grid[k - 1]
        n_sub = max(1, int(np.ceil(span / h_target)))
        h = span / n_sub
        for _ in range(n_sub):
            k1 = mat @ v
            k2 = mat @ (v + 0.5 * h * k1)
            k3 = mat @ (v + 0.5 * h * k2)
            k4 = mat @ (v + h * k3)
            v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            v = hermitize(v)
            drift = abs((v[0] + v[3]).real - 1.0)
            if drift > renorm_tol:
                max_drift = max(max_drift, drift)
                n_renorm += 1
                v = v / (v[0] + v[3]).real
        store(k, v)
    return MasterTrajectory(
        params=p,
        times=t_grid,
        rhos=rhos,
        metadata={"dt": h_target, "n_renorm": n_renorm, "max_trace_drift": max_drift},
    )


@dataclass
class McTrajectory:
    """Ensemble summary of quantum-jump trajectories.

    obs maps each named observable to (mean, standard error) arrays on
    the time grid; mean_rho is the ensemble-averaged density matrix.
    jump_counts holds total (decay, dephasing) jump numbers over all
    trajectories; sample_jumps records (time, channel) events for the
    first few trajectories for inspection.
    """

    params: SystemParams
    times: np.ndarray
    mean_rho: np.ndarray      # (n, 2, 2)
    obs: dict
    n_traj: int
    master_seed: int
    jump_counts: np.ndarray   # (2,) decay, dephasing
    sample_jumps: list
    metadata: dict = field(default_factory=dict)


def _traj_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    )


def mc_trajectories(
    p: SystemParams,
    psi0: np.ndarray,
    t_grid: np.ndarray,
    n_traj: int,
    master_seed: int,
    dt: float | None = None,
    n_sample_jumps: int = 64,
) -> McTrajectory:
    """Quantum-jump Monte Carlo ensemble on a time grid.

    psi0 may be a pure state vector (2,) or a pure density matrix; the
    unraveling does not sample mixed initial states. Identical
    (master_seed, n_traj, t_grid) inputs give bit-identical results.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-D array")
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape == (2, 2):
        evals, evecs = np.linalg.eigh(0.5 * (psi0 + psi0.conj().T))
        if evals[0] > 1e-9:
            raise ValueError(
                "initial state is mixed; the jump unraveling needs a pure state"
            )
        psi0 = evecs[:, -1]
    if psi0.shape != (2,):
        raise ValueError(f"psi0 must have shape (2,), got {psi0.shape}")
    nrm = np.linalg.norm(psi0)
    if nrm < 1e-12:
        raise ValueError("psi0 has zero norm")
    psi0 = psi0 / nrm

    ops = jump_operators(p)
    h_target = float(dt) if dt is not None else default_step(p)
    alpha_w = p.alpha  # both channels scale with |psi_e|^2, so the
    # branching probability is alpha itself

    n_t = len(t_grid)
    sum_rho = np.zeros((n_t, 2, 2), dtype=complex)
    sums = {name: np.zeros(n_t) for name in OBSERVABLES}
    sums2 = {name: np.zeros(n_t) for name in OBSERVABLES}
    jump_counts = np.zeros(2, dtype=np.int64)
    sample_jumps: list = []

    # per-interval propagator plan (interval -> (n_sub, h, P, dyadic cache))
    plans = []
    cache: dict = {}
    for k in range(1, n_t):
        span = t_grid[k] - t_grid[k - 1]
        n_sub = max(1, int(np.ceil(span / h_target)))
        h = span / n_sub
        key = round(h, 15)
        if key not in cache:
            props = [_expm2(-1j * ops.h_eff * h * 0.5**j)
                     for j in range(_BISECT_LEVELS + 1)]
            cache[key] = props
        plans.append((n_sub, h, cache[key]))

    def accumulate(idx_t, psi):
        n2 = np.sum(np.abs(psi) ** 2, axis=1)
        pe = np.abs(psi[:, 0]) ** 2 / n2
        cross = psi[:, 0] * np.conj(psi[:, 1]) / n2
        sx = 2.0 * cross.real
        sy = -2.0 * cross.imag
        sz = 2.0 * pe - 1.0
        for name, val in (("pop_e", pe), ("sigma_x", sx),
                          ("sigma_y", sy), ("sigma_z", sz)):
            sums[name][idx_t] += val.sum()
            sums2[name][idx_t] += (val * val).sum()
        pn = psi / np.sqrt(n2)[:, None]
        sum_rho[idx_t] += np.einsum("mi,mj->ij", pn, pn.conj())

    for start in range(0, n_traj, _CHUNK):
        stop = min(start + _CHUNK, n_traj)
        m = stop - start
        gens = [_traj_rng(master_seed, i) for i in range(start, stop)]
        psi = np.tile(psi0, (m, 1))
        thresh = np.array([g.random() for g in gens])
        accumulate(0, psi)
        for k in range(1, n_t):
            n_sub, h, props = plans[k - 1]
            p_full = props[0]
            for i_sub in range(n_sub):
                t_base = t_grid[k - 1] + i_sub * h
                cand = psi @ p_full.T
                n2 = np.sum(np.abs(cand) ** 2, axis=1)
                hit = n2 <= thresh
                if not np.any(hit):
                    psi = cand
                    continue
                idx = np.flatnonzero(hit)
                pre = psi[idx].copy()
                psi = cand
                # bisect the step dyadically; the squared norm is monotone
                # nonincreasing, so advancing only while above threshold
                # converges to the crossing time
                cur = pre
                t_off = np.zeros(len(idx))
                for j in range(1, _BISECT_LEVELS + 1):
                    trial = cur @ props[j].T
                    tn2 = np.sum(np.abs(trial) ** 2, axis=1)
                    adv = tn2 > thresh[idx]
                    cur[adv] = trial[adv]
                    t_off[adv] += h * 0.5**j
                for pos, traj_local in enumerate(idx):
                    g = gens[traj_local]
                    state = cur[pos]
                    rem = h - t_off[pos]
                    r_cur = thresh[traj_local]
                    while True:
                        u = g.random()
                        channel = 0 if u < alpha_w else 1
                        jump_counts[channel] += 1
                        if start + traj_local < n_sample_jumps:
                            sample_jumps.append(
                                (start + traj_local,
                                 float(t_base + t_off[pos]),
                                 "decay" if channel == 0 else "dephase")
                            )
                        phase = state[0] / max(abs(state[0]), 1e-300)
                        base = phase * (KET_G if channel == 0 else KET_E)
                        r_cur = g.random()
                        # evolve the remainder of the substep, watching for
                        # a second crossing (rare)
                        state = _expm2(-1j * ops.h_eff * rem) @ base
                        if float(np.sum(np.abs(state) ** 2)) > r_cur:
                            break
                        lo, hi = 0.0, rem
                        for _ in range(60):
                            mid = 0.5 * (lo + hi)
                            sm = _expm2(-1j * ops.h_eff * mid) @ base
                            if float(np.sum(np.abs(sm) ** 2)) > r_cur:
                                lo = mid
                            else:
                                hi = mid
                        state = _expm2(-1j * ops.h_eff * lo) @ base
                        t_off[pos] += lo
                        rem = rem - lo
                    psi[traj_local] = state
                    thresh[traj_local] = r_cur
            accumulate(k, psi)

    mean_rho = sum_rho / n_traj
    obs = {}
    for name in OBSERVABLES:
        mean = sums[name] / n_traj
        if n_traj > 1:
            var = (sums2[name] - n_traj * mean**2) / (n_traj - 1)
            sem = np.sqrt(np.maximum(var, 0.0) / n_traj)
        else:
            sem = np.full(n_t, np.nan)
        obs[name] = (mean, sem)
    return McTrajectory(
        params=p,
        times=t_grid,
        mean_rho=mean_rho,
        obs=obs,
        n_traj=n_traj,
        master_seed=master_seed,
        jump_counts=jump_counts,
        sample_jumps=sample_jumps,
        metadata={"dt": h_target, "chunk": _CHUNK},
    )


def observable_series(traj, name: str):
    """(values, errors) of a named observable along a trajectory.

    Works on both MasterTrajectory (errors None) and McTrajectory
    (standard errors from the ensemble). Names: pop_e, sigma_x,
    sigma_y, sigma_z.
    """
    if name not in OBSERVABLES:
        raise ValueError(f"unknown observable {name!r}, expected one of {OBSERVABLES}")
    if isinstance(traj, McTrajectory):
        mean, sem = traj.obs[name]
        return mean.copy(), sem.copy()
    if isinstance(traj, MasterTrajectory):
        r = traj.rhos
        if name == "pop_e":
            vals = r[:, 0, 0].real
        elif name == "sigma_x":
            vals = (r[:, 0, 1] + r[:, 1, 0]).real
        elif name == "sigma_y":
            vals = (1j * (r[:, 0, 1] - r[:, 1, 0])).real
        else:
            vals = (r[:, 0, 0] - r[:, 1, 1]).real
        return vals, None
    raise TypeError(f"unsupported trajectory type {type(traj)!r}")
