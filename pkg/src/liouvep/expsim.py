"""Simulated measurement chain of a driven dissipative two-level ion.

This module mirrors how the spectrum of the Liouvillian is measured in
practice rather than diagonalized: engineered decay and dephasing
channels are calibrated against control settings, the state is evolved
and read out by tomography with binomial shot noise, and the complex
eigenvalues are recovered from the time series by a matrix-pencil
(ESPRIT-style) harmonic analysis with bootstrap confidence intervals.

Calibration follows the quadratic control curves of the ion setup: the
decay rate against the power of the quench laser and the dephasing
rate against the drive amplitude of the noise field. Tomography uses
one carrier rotation per basis,

    U(theta, phi) = exp(-i (theta/2) (cos(phi) sx - sin(phi) sy)),

with R(pi/2, pi/2) mapping the +x Bloch state and R(pi/2, 0) the +y
Bloch state onto the excited level before a projective measurement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    SystemParams,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    IDENTITY,
    check_density_matrix,
    liouvillian,
    vectorize,
)
from .dynamics import evolve_master, observable_series
from .spectral import eigenvalues_closed_form

__all__ = [
    "CalibrationCurve",
    "DECAY_CALIBRATION",
    "DEPHASING_CALIBRATION",
    "RateFit",
    "MeasurementResult",
    "TomographyResult",
    "ReconstructedState",
    "EigenvalueEstimate",
    "PanelPoint",
    "PanelData",
    "calibrate_rate",
    "fit_exponential_decay",
    "fit_dephasing_rabi",
    "apply_rotation",
    "simulate_measurement",
    "tomography",
    "reconstruct_state",
    "simulate_decay_survival",
    "extract_eigenvalues",
    "run_figure_pipeline",
]

BASES = ("x", "y", "z")


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class CalibrationCurve:
    """Quadratic map from a control setting to an engineered rate.

    rate(x) = a x^2 + b x + c over the declared setting_range. Small
    negative outputs (possible near the lower end of the fitted curve)
    are clamped to zero with a warning; settings outside the declared
    range raise, since the fit has no support there.
    """

    kind: str
    a: float
    b: float
    c: float
    setting_range: tuple
    setting_unit: str = ""
    rate_unit: str = ""

    def __call__(self, setting: float) -> float:
        lo, hi = self.setting_range
        if not (lo <= setting <= hi):
            raise ValueError(
                f"{self.kind} setting {setting:g} {self.setting_unit} outside "
                f"the calibrated range [{lo:g}, {hi:g}]"
            )
        rate = self.a * setting**2 + self.b * setting + self.c
        if rate < 0.0:
            warnings.warn(
                f"{self.kind} curve gives {rate:.3g} at setting {setting:g}; "
                "clamping to zero", stacklevel=2)
            rate = 0.0
        return float(rate)


DECAY_CALIBRATION = CalibrationCurve(
    kind="decay", a=-0.0643, b=1.30, c=0.244,
    setting_range=(0.0, 12.0), setting_unit="uW", rate_unit="2pi kHz",
)

DEPHASING_CALIBRATION = CalibrationCurve(
    kind="dephasing", a=0.0882, b=0.00940, c=-0.0201,
    setting_range=(0.0, 8.0), setting_unit="Vpp", rate_unit="2pi kHz",
)


def calibrate_rate(curve: CalibrationCurve, setting: float) -> float:
    """Evaluate a calibration curve at a control setting."""
    return curve(setting)


@dataclass
class RateFit:
    """Fitted rate with one-sigma uncertainty and fit bookkeeping."""

    value: float
    stderr: float
    n_used: int
    converged: bool
    chisq_reduced: float
    warnings: list = field(default_factory=list)


def fit_exponential_decay(times, survival, errors=None) -> RateFit:
    """Fit survival(t) = A exp(-gamma t) and return gamma.

    A log-linear weighted least-squares seed is polished by
    Gauss-Newton on the untransformed model; nonpositive survival
    points carry no information for the seed and are dropped with a
    warning. With no supplied errors the standard error is scaled by
    the reduced chi-square.
    """
    times = np.asarray(times, dtype=float)
    surv = np.asarray(survival, dtype=float)
    if times.shape != surv.shape or times.ndim != 1:
        raise ValueError("times and survival must be matching 1-D arrays")
    warn: list = []
    good = surv > 0.0
    n_dropped = int(np.sum(~good))
    if n_dropped:
        warn.append(f"dropped {n_dropped} nonpositive survival points")
    if np.sum(good) < 3:
        raise ValueError("need at least 3 positive survival points")
    t, y = times[good], surv[good]
    if errors is not None:
        sig = np.asarray(errors, dtype=float)[good]
        sig = np.where(sig > 0, sig, np.inf)
    else:
        sig = np.ones_like(y)

    w_log = (y / sig) ** 2          # var(log y) = (sig/y)^2
    x = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(x * w_log[:, None] ** 0.5,
                               np.log(y) * w_log**0.5, rcond=None)
    log_a, neg_g = coef
    amp, gam = float(np.exp(log_a)), float(-neg_g)
    if gam <= 0:
        warn.append("seed slope nonnegative; data may not decay")
        gam = max(gam, 1e-6 / max(t.max(), 1.0))

    converged = False
    for _ in range(60):
        model = amp * np.exp(-gam * t)
        r = (y - model) / sig
        j = np.vstack([np.exp(-gam * t) / sig, -amp * t * np.exp(-gam * t) / sig]).T
        jtj = j.T @ j
        try:
            step = np.linalg.solve(jtj, j.T @ r)
        except np.linalg.LinAlgError:
            break
        amp += step[0]
        gam += step[1]
        if np.all(np.abs(step) <= 1e-12 * np.array([max(abs(amp), 1e-30),
                                                    max(abs(gam), 1e-30)])):
            converged = True
            break
    model = amp * np.exp(-gam * t)
    r = (y - model) / sig
    dof = max(len(t) - 2, 1)
    chi2r = float(r @ r / dof)
    j = np.vstack([np.exp(-gam * t) / sig, -amp * t * np.exp(-gam * t) / sig]).T
    cov = np.linalg.inv(j.T @ j)
    var = cov[1, 1] * (chi2r if errors is None else 1.0)
    return RateFit(value=gam, stderr=float(np.sqrt(max(var, 0.0))),
                   n_used=int(len(t)), converged=converged,
                   chisq_reduced=chi2r, warnings=warn)


def fit_dephasing_rabi(times, pop_e, errors=None, omega: float = 1.0,
                       gamma_bounds=None, n_scan: int = 48) -> RateFit:
    """Fit the dephasing rate from a damped Rabi oscillation.

    The model is the master-equation excited-state population of a
    pure-dephasing system (alpha = 0) driven at the known Rabi
    frequency, starting from the ground state. The single free rate is
    found by a coarse scan of the chi-square followed by a bounded
    parabolic refinement; the standard error comes from the local
    curvature of the chi-square.
    """
    from scipy.optimize import minimize_scalar

    times = np.asarray(times, dtype=float)
    pop = np.asarray(pop_e, dtype=float)
    if times.shape != pop.shape or times.ndim != 1 or len(times) < 5:
        raise ValueError("times and pop_e must be matching 1-D arrays, n >= 5")
    sig = np.ones_like(pop) if errors is None \
        else np.where(np.asarray(errors, float) > 0, np.asarray(errors, float), np.inf)
    lo, hi = gamma_bounds if gamma_bounds is not None else (1e-4 * omega, 4.0 * omega)
    grid = times if times[0] == 0.0 else np.concatenate([[0.0], times])
    sel = slice(1, None) if times[0] != 0.0 else slice(None)
    v0 = vectorize(np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex))
    spans = np.diff(grid)

    def chisq(g):
        # exact propagation: one matrix exponential per distinct grid
        # spacing, so the scan stays cheap at any damping strength
        from scipy.linalg import expm

        p = SystemParams(omega, 0.0, float(g), 0.0)
        mat = -1j * liouvillian(p)
        props = {}
        v = v0.copy()
        model = np.empty(len(grid))
        model[0] = v[0].real
        for k, span in enumerate(spans):
            key = round(float(span), 15)
            if key not in props:
                props[key] = expm(mat * span)
            v = props[key] @ v
            model[k + 1] = v[0].real
        r = (pop - model[sel]) / sig
        return float(r @ r)

    scan = np.linspace(lo, hi, n_scan)
    vals = np.array([chisq(g) for g in scan])
    k = int(np.argmin(vals))
    blo = scan[max(k - 1, 0)]
    bhi = scan[min(k + 1, n_scan - 1)]
    res = minimize_scalar(chisq, bounds=(blo, bhi), method="bounded",
                          options={"xatol": 1e-10 * omega})
    gam = float(res.x)
    warn = []
    if k in (0, n_scan - 1):
        warn.append("chi-square minimum at the edge of the scan range")
    dof = max(len(pop) - 1, 1)
    chi2r = chisq(gam) / dof
    h = max(1e-4 * omega, 1e-4 * gam)
    curv = (chisq(gam + h) - 2.0 * chisq(gam) + chisq(gam - h)) / h**2
    if curv > 0:
        var = 2.0 / curv * (chi2r if errors is None else 1.0)
        stderr = float(np.sqrt(var))
    else:
        stderr = float("inf")
        warn.append("flat chi-square around the minimum; stderr unreliable")
    return RateFit(value=gam, stderr=stderr, n_used=int(len(pop)),
                   converged=bool(res.success), chisq_reduced=float(chi2r),
                   warnings=warn)


# ---------------------------------------------------------------------------
# tomography


def _rotation(theta: float, phi: float) -> np.ndarray:
    axis = np.cos(phi) * SIGMA_X - np.sin(phi) * SIGMA_Y
    return np.cos(0.5 * theta) * IDENTITY - 1j * np.sin(0.5 * theta) * axis


def apply_rotation(rho: np.ndarray, theta: float, phi: float) -> np.ndarray:
    """Carrier rotation U(theta, phi) rho U(theta, phi)^dag."""
    u = _rotation(theta, phi)
    return u @ rho @ u.conj().T


_BASIS_PULSE = {
    "x": (np.pi / 2, np.pi / 2),
    "y": (np.pi / 2, 0.0),
    "z": None,
}


@dataclass(frozen=True)
class MeasurementResult:
    basis: str
    p_hat: float
    stderr: float
    n_shots: int | None


def simulate_measurement(rho, basis: str, n_shots: int | None = None,
                         rng=None) -> MeasurementResult:
    """Excited-state population after the basis pulse, with shot noise.

    n_shots None returns the exact projection probability with zero
    stderr; otherwise the estimate is binomial over n_shots projective
    shots drawn from rng.
    """
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}, got {basis!r}")
    check_density_matrix(rho, trace_tol=1e-6, positivity_tol=1e-6)
    pulse = _BASIS_PULSE[basis]
    rot = rho if pulse is None else apply_rotation(np.asarray(rho, complex), *pulse)
    p = float(np.clip(rot[0, 0].real, 0.0, 1.0))
    if n_shots is None:
        return MeasurementResult(basis=basis, p_hat=p, stderr=0.0, n_shots=None)
    if n_shots < 1:
        raise ValueError("n_shots must be positive")
    if rng is None:
        raise ValueError("an rng is required when simulating shots")
    k = int(rng.binomial(n_shots, p))
    p_hat = k / n_shots
    stderr = float(np.sqrt(max(p_hat * (1.0 - p_hat), 0.25 / n_shots) / n_shots))
    return MeasurementResult(basis=basis, p_hat=p_hat, stderr=stderr,
                             n_shots=n_shots)


@dataclass(frozen=True)
class ReconstructedState:
    raw: np.ndarray
    projected: np.ndarray
    is_physical: bool


def reconstruct_state(p_x: float, p_y: float, p_z: float) -> ReconstructedState:
    """Bloch-vector reconstruction from three basis populations.

    raw is the linear-inversion estimate, which can leave the Bloch
    ball under shot noise; projected clips negative eigenvalues and
    renormalizes, and is_physical reports whether raw was already a
    state.
    """
    s = np.array([2.0 * p_x - 1.0, 2.0 * p_y - 1.0, 2.0 * p_z - 1.0])
    raw = 0.5 * (IDENTITY + s[0] * SIGMA_X + s[1] * SIGMA_Y + s[2] * SIGMA_Z)
    evals, evecs = np.linalg.eigh(raw)
    physical = bool(evals.min() >= -1e-12)
    clipped = np.clip(evals, 0.0, None)
    tot = clipped.sum()
    if tot <= 0.0:
        projected = 0.5 * IDENTITY.astype(complex)
    else:
        projected = (evecs * (clipped / tot)) @ evecs.conj().T
    return ReconstructedState(raw=raw, projected=projected, is_physical=physical)


@dataclass(frozen=True)
class TomographyResult:
    measurements: dict
    bloch: np.ndarray
    bloch_stderr: np.ndarray
    state: ReconstructedState
    n_shots: int | None


def tomography(rho, n_shots: int | None = None, rng=None) -> TomographyResult:
    """Full single-qubit tomography: one pulse-and-project per basis."""
    ms = {b: simulate_measurement(rho, b, n_shots, rng) for b in BASES}
    st = reconstruct_state(ms["x"].p_hat, ms["y"].p_hat, ms["z"].p_hat)
    bloch = np.array([2.0 * ms[b].p_hat - 1.0 for b in BASES])
    bloch_err = np.array([2.0 * ms[b].stderr for b in BASES])
    return TomographyResult(measurements=ms, bloch=bloch,
                            bloch_stderr=bloch_err, state=st, n_shots=n_shots)


def simulate_decay_survival(gamma: float, times, n_reps: int, rng) -> np.ndarray:
    """Binomial survival fractions of an exponential-decay experiment."""
    times = np.asarray(times, dtype=float)
    p = np.exp(-gamma * times)
    return rng.binomial(n_reps, p) / n_reps


# ---------------------------------------------------------------------------
# matrix-pencil eigenvalue extraction


@dataclass
class EigenvalueEstimate:
    """Modes recovered from real time series by pencil-seeded fitting.

    energies holds the complex eigenvalues E with the sign convention
    s(t) ~ sum_k A_k exp(-i E_k t) + s_inf; stderr_re / stderr_im are
    bootstrap standard errors (NaN without bootstrap). For a single
    input record amplitudes is (n_modes,) and s_inf a float; for a
    stack of records fit jointly they are (n_series, n_modes) and
    (n_series,). order_reduced flags that fewer independent modes than
    requested survived: either the signal subspace has lower rank
    (dark or merged modes) or two recovered eigenvalues coincide, the
    time-domain signature of an EP.
    """

    energies: np.ndarray
    amplitudes: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    s_inf: float | np.ndarray
    residual_rms: float
    effective_rank: int
    requested_modes: int
    order_reduced: bool
    duplicate_modes: bool
    dt: float
    diagnostics: dict = field(default_factory=dict)


def _pencil_poles(series: np.ndarray, n_poles: int, rank_gap: float):
    """Signal-subspace poles z of uniformly sampled series.

    series is (n,) or (n_series, n); multiple series must share the
    poles, and their Hankel blocks are stacked so the common signal
    subspace is estimated from all of them at once. Returns
    (z, gap_rank). The stacked Hankel matrix is SVD-truncated at
    min(n_poles, detected rank); the rank is cut below n_poles only on
    an unambiguous singular-value gap (ratio above rank_gap), so noisy
    data keeps the requested overmodeled order while clean
    rank-deficient data (dark modes, EP-fused modes) is truncated
    honestly. gap_rank is the cut position when a gap was found, else
    the requested order.
    """
    ys = np.atleast_2d(series)
    n = ys.shape[1]
    span = n // 2
    rows = n - span
    hank = np.vstack([
        np.lib.stride_tricks.sliding_window_view(row, span + 1)[:rows]
        for row in ys
    ])
    u, s, vt = np.linalg.svd(hank, full_matrices=False)
    m_max = min(n_poles, len(s) - 1)
    rank = m_max
    for j in range(1, m_max + 1):
        denom = s[j] if s[j] > 0 else np.finfo(float).tiny
        if s[j - 1] / denom > rank_gap or s[j] < 1e-13 * s[0]:
            rank = j
            break
    v = vt.T[:, :rank]
    v1, v2 = v[:-1], v[1:]
    # total least squares for the shift map: the plain normal-equation
    # solve attenuates pole moduli under noise, TLS removes most of
    # that bias
    both = np.hstack([v1, v2])
    _, _, wt = np.linalg.svd(both, full_matrices=False)
    w = wt.T
    w12 = w[:rank, rank:]
    w22 = w[rank:, rank:]
    try:
        phi = -w12 @ np.linalg.inv(w22)
    except np.linalg.LinAlgError:
        phi, *_ = np.linalg.lstsq(v1, v2, rcond=None)
    z = np.linalg.eigvals(phi)
    return z, rank


def extract_eigenvalues(
    times,
    series,
    model_order: int = 3,
    include_offset: bool = True,
    rank_gap: float = 1e3,
    duplicate_tol: float = 1e-3,
    pencil_order: int | None = None,
    stderr=None,
) -> EigenvalueEstimate:
    """Recover complex eigenvalues from uniformly sampled observables.

    Each series is modeled as a constant plus damped sinusoids,
    s(t) = s_inf + sum_k exp(-g_k t) (p_k cos(w_k t) + q_k sin(w_k t)),
    which is the real form of sum_k A_k exp(-i E_k t) with E_k
    = +-w_k - i g_k for conjugate pairs and E_k = -i g_k for purely
    relaxational modes. series may be one record (n,) or a stack
    (n_series, n) of observables that share the same eigenvalues with
    independent amplitudes; fitting the stack jointly is far better
    conditioned than any single record when the window holds less than
    an oscillation period. A matrix-pencil pass (shift invariance of
    the SVD signal subspace of the stacked Hankel matrix, mildly
    overmodeled) seeds the rates and frequencies, then a separable
    nonlinear least-squares polish refines them (Levenberg-Marquardt
    on the shared rates/frequencies with all linear coefficients
    projected out); surplus seeded groups stay in the fit so they
    absorb the noise floor instead of biasing the physical modes, and
    the model_order strongest groups are reported.

    stderr_re / stderr_im come from the curvature of the least-squares
    problem at the fit: the covariance of all parameters (shared
    rates/frequencies plus every linear coefficient) is estimated
    either from the supplied per-point measurement errors (stderr,
    same shape as series, used as the error model) or from the
    residual variance, and the marginal standard deviations of w_k and
    g_k are reported. For a purely relaxational mode the model pins
    Re E = 0, so its stderr_re is 0.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    single = series.ndim == 1
    ys = np.atleast_2d(series)
    if times.ndim != 1 or ys.shape[1] != len(times):
        raise ValueError("series must be (n,) or (n_series, n) matching times")
    n = len(times)
    n_series = ys.shape[0]
    if n < 2 * (model_order + 2):
        raise ValueError(
            f"series of length {n} too short for order {model_order}"
        )
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-8, atol=1e-12 * max(abs(times[-1]), 1.0)):
        raise ValueError("times must be a uniform increasing grid")
    t_total = times[-1] - times[0]
    n_req = model_order + (1 if include_offset else 0)
    if stderr is not None:
        stderr = np.atleast_2d(np.asarray(stderr, dtype=float))
        if stderr.shape != ys.shape:
            raise ValueError("stderr must match the shape of series")

    def offsets_of(arr2d):
        off = arr2d.mean(axis=1)
        return off[0] if single else off

    if float(np.sqrt(np.mean(ys**2))) < 1e-12:
        # dark record: nothing to extract
        empty = np.array([])
        return EigenvalueEstimate(
            energies=empty.astype(complex),
            amplitudes=empty.astype(complex) if single
            else np.zeros((n_series, 0), complex),
            stderr_re=empty, stderr_im=empty, s_inf=offsets_of(ys),
            residual_rms=float(np.sqrt(np.mean(ys**2))),
            effective_rank=0, requested_modes=int(n_req), order_reduced=True,
            duplicate_modes=False, dt=dt,
            diagnostics={"dark": True},
        )

    span = n // 2
    p_order = pencil_order if pencil_order is not None \
        else min(n_req + 2, span - 1, n - span - 1)
    p_order = max(p_order, n_req)

    def seed_groups(data2d):
        """Pencil pass: damping/frequency seeds grouped by conjugacy."""
        z, gap_rank = _pencil_poles(data2d, p_order, rank_gap)
        z = z[np.abs(z) > 1e-10]
        n_grow = int(np.sum(np.abs(z) > 1.25))
        z = z[np.abs(z) <= 1.25]
        lam = np.log(z.astype(complex)) / dt
        # crude per-pole weights from a Vandermonde solve, to order the
        # seeds for the polish stage
        nn = np.arange(n)
        if len(z):
            w_mat = np.power.outer(z, nn).T
            a_all, *_ = np.linalg.lstsq(w_mat, data2d.T.astype(complex),
                                        rcond=None)
            znorm = np.array([np.linalg.norm(np.abs(zk) ** nn) for zk in z])
            weight = np.abs(a_all).sum(axis=1) * znorm
        else:
            weight = np.zeros(0)
        groups = []
        left = list(range(len(z)))
        while left:
            i = left.pop(0)
            if abs(lam[i].imag) < 1e-9 * max(1.0, abs(lam[i].real)):
                if include_offset and abs(lam[i]) * t_total < 0.5:
                    # constant column already models this pole
                    continue
                groups.append({"kind": "real", "g": -lam[i].real,
                               "w": 0.0, "weight": weight[i]})
                continue
            partner = None
            for j in left:
                if abs(z[j] - np.conj(z[i])) < 1e-8 * (1.0 + abs(z[i])):
                    partner = j
                    break
            if partner is not None:
                left.remove(partner)
                groups.append({"kind": "pair", "g": -lam[i].real,
                               "w": abs(lam[i].imag),
                               "weight": weight[i] + weight[partner]})
            else:
                # unpaired complex pole: treat as a pair seed anyway
                groups.append({"kind": "pair", "g": -lam[i].real,
                               "w": abs(lam[i].imag), "weight": weight[i]})
        for gr in groups:
            gr["g"] = max(gr["g"], 0.0)
        groups.sort(key=lambda gr: -gr["weight"])
        return groups, gap_rank, n_grow

    tloc = times - times[0]

    def basis_for(groups):
        cols = [np.ones(n)] if include_offset else []
        for gr in groups:
            env = np.exp(-gr["g"] * tloc)
            if gr["kind"] == "pair":
                ph = gr["w"] * tloc
                cols.append(env * np.cos(ph))
                cols.append(env * np.sin(ph))
            else:
                cols.append(env)
        return np.array(cols).T if cols else np.empty((n, 0))

    def varpro_fit(data2d, groups):
        """Gauss-Newton on shared (g, w); linear coefficients per series.

        Returns (groups, coef, resid) with coef of shape (n_cols,
        n_series) and resid the raw-space residual (n_series, n).
        """
        groups = [dict(gr) for gr in groups]

        def solve_linear(grs):
            phi = basis_for(grs)
            if phi.shape[1] == 0:
                coef = np.zeros((0, n_series))
                return phi, coef, data2d.copy()
            coef, *_ = np.linalg.lstsq(phi, data2d.T, rcond=None)
            resid = data2d - (phi @ coef).T
            return phi, coef, resid

        phi, coef, resid = solve_linear(groups)
        if not groups:
            return groups, coef, resid
        cost = float(np.sum(resid**2))
        n_nl = sum(2 if gr["kind"] == "pair" else 1 for gr in groups)
        lam_lm = 1e-3
        for _ in range(200):
            jtj = np.zeros((n_nl, n_nl))
            jtr = np.zeros(n_nl)
            for s_i in range(n_series):
                jac_cols = []
                ic = 1 if include_offset else 0
                for gr in groups:
                    env = np.exp(-gr["g"] * tloc)
                    if gr["kind"] == "pair":
                        p_c, q_c = coef[ic, s_i], coef[ic + 1, s_i]
                        ph = gr["w"] * tloc
                        model_k = env * (p_c * np.cos(ph) + q_c * np.sin(ph))
                        jac_cols.append(-tloc * model_k)
                        jac_cols.append(env * tloc * (-p_c * np.sin(ph)
                                                      + q_c * np.cos(ph)))
                        ic += 2
                    else:
                        jac_cols.append(-tloc * coef[ic, s_i] * env)
                        ic += 1
                jac = np.array(jac_cols).T
                jtj += jac.T @ jac
                jtr += jac.T @ resid[s_i]
            diag = np.diag(jtj).copy()
            diag[diag <= 0] = 1.0
            accepted = False
            for _ in range(40):
                try:
                    step = np.linalg.solve(jtj + lam_lm * np.diag(diag), jtr)
                except np.linalg.LinAlgError:
                    lam_lm *= 10.0
                    continue
                trial = [dict(gr) for gr in groups]
                k = 0
                for gr in trial:
                    gr["g"] = min(max(gr["g"] + step[k], 0.0), 4.0 / dt)
                    k += 1
                    if gr["kind"] == "pair":
                        # reflective: w = 0 would be an absorbing
                        # boundary (zero gradient) under clamping
                        gr["w"] = min(abs(gr["w"] + step[k]), np.pi / dt)
                        k += 1
                phi_t, coef_t, resid_t = solve_linear(trial)
                cost_t = float(np.sum(resid_t**2))
                if cost_t <= cost:
                    gain = cost - cost_t
                    groups, phi, coef, resid, cost = \
                        trial, phi_t, coef_t, resid_t, cost_t
                    lam_lm = max(lam_lm / 3.0, 1e-12)
                    accepted = True
                    break
                lam_lm *= 3.0
                if lam_lm > 1e10:
                    break
            if not accepted:
                break
            step_scale = float(np.max(np.abs(step))) if len(step) else 0.0
            if gain < 1e-12 * max(cost, 1e-300) and step_scale < 1e-9:
                break
        return groups, coef, resid

    groups0, gap_rank, n_grow = seed_groups(ys)
    groups, coef, resid = varpro_fit(ys, groups0)

    def eligible(gr):
        """Whether a fitted group is a reportable mode.

        Groups that neither decay nor oscillate appreciably inside the
        window duplicate the constant offset and are never reported.
        Groups that die within a couple of samples carry no resolvable
        rate either and are equally unreportable.
        """
        if gr["g"] * dt > 2.5:
            return False
        if gr["kind"] == "real":
            return not (include_offset and gr["g"] * t_total < 0.5)
        if gr["w"] * dt > 3.0:
            # indistinguishable from its alias at this sampling rate
            return False
        return not (gr["g"] * t_total < 0.5 and gr["w"] * t_total < 1.0)

    def group_contribs(groups, coef):
        """Norm of each group's share of the fitted record."""
        phi = basis_for(groups)
        out = []
        ic = 1 if include_offset else 0
        for gr in groups:
            ncol = 2 if gr["kind"] == "pair" else 1
            part = (phi[:, ic:ic + ncol] @ coef[ic:ic + ncol]).T
            out.append(float(np.linalg.norm(part)))
            ic += ncol
        return out

    def select_strongest(groups, coef):
        """model_order strongest eligible modes by contribution norm."""
        contrib = group_contribs(groups, coef)
        order_gi = sorted(range(len(groups)), key=lambda gi: -contrib[gi])
        selected, slots = [], 0
        for gi in order_gi:
            if not eligible(groups[gi]):
                continue
            size = 2 if groups[gi]["kind"] == "pair" else 1
            if slots + size <= model_order:
                selected.append(gi)
                slots += size
        selected.sort()
        return selected, slots

    selected, slots = select_strongest(groups, coef)
    # structure completion: when fewer eligible modes than requested
    # survive, first look for what the fit missed in its own residual;
    # failing that, demote the strongest unselected oscillating group
    # to purely relaxational (a pair cannot fill an odd open slot) and
    # refit jointly either way
    for _ in range(2 * model_order):
        if slots >= model_order:
            break
        changed = False
        if float(np.sqrt(np.mean(resid**2))) >= 1e-12:
            try:
                cands, _, _ = seed_groups(resid)
            except np.linalg.LinAlgError:
                cands = []
            for gr in cands:
                if not eligible(gr):
                    continue
                if slots + (2 if gr["kind"] == "pair" else 1) > model_order:
                    continue
                g2, c2, r2 = varpro_fit(ys, groups + [gr])
                sel2, slots2 = select_strongest(g2, c2)
                if slots2 > slots:
                    groups, coef, resid = g2, c2, r2
                    selected, slots = sel2, slots2
                    changed = True
                break
        if not changed:
            contrib = group_contribs(groups, coef)
            spare = [gi for gi in range(len(groups))
                     if gi not in selected and groups[gi]["kind"] == "pair"]
            spare.sort(key=lambda gi: -contrib[gi])
            for gi in spare:
                # multi-start on the demoted rate: the degenerate fit
                # being repaired often sits in a local minimum
                g_seeds = {max(groups[gi]["g"], 1e-3)}
                g_seeds.update(s / t_total for s in (1.0, 3.0, 9.0))
                best = None
                for g0 in g_seeds:
                    trial_groups = [dict(gr) for gr in groups]
                    trial_groups[gi] = {"kind": "real", "g": g0, "w": 0.0}
                    g2, c2, r2 = varpro_fit(ys, trial_groups)
                    sel2, slots2 = select_strongest(g2, c2)
                    if slots2 > slots:
                        cost2 = float(np.sum(r2**2))
                        if best is None or cost2 < best[0]:
                            best = (cost2, g2, c2, r2, sel2, slots2)
                if best is not None:
                    _, groups, coef, resid, selected, slots = best
                    changed = True
                    break
        if not changed:
            break

    def unpack(groups, coef):
        """Offsets plus per-group (energies, amplitudes-per-series)."""
        if include_offset and coef.shape[0]:
            s_off = coef[0].copy()
        else:
            s_off = np.zeros(n_series)
        per_group = []
        ic = 1 if include_offset else 0
        for gr in groups:
            if gr["kind"] == "pair":
                amp = 0.5 * (coef[ic] - 1j * coef[ic + 1])  # per series
                per_group.append((
                    [-gr["w"] - 1j * gr["g"], gr["w"] - 1j * gr["g"]],
                    [amp, np.conj(amp)],
                ))
                ic += 2
            else:
                per_group.append(([-1j * gr["g"]],
                                  [coef[ic].astype(complex)]))
                ic += 1
        return s_off, per_group

    phi_fit = basis_for(groups)
    s_off, per_group = unpack(groups, coef)
    energies = np.array([e for gi in selected for e in per_group[gi][0]],
                        dtype=complex)
    amp_rows = [a for gi in selected for a in per_group[gi][1]]
    a_modes = np.array(amp_rows, dtype=complex).reshape(len(energies),
                                                        n_series).T
    order = np.argsort(-energies.imag, kind="stable")  # slowest first
    energies = energies[order]
    a_modes = a_modes[:, order]

    z_final = np.exp(-1j * energies * dt)
    dup = any(
        abs(z_final[i] - z_final[j]) < duplicate_tol
        for i in range(len(z_final)) for j in range(i + 1, len(z_final))
    )
    # a low Hankel rank alone is not degeneracy (a structurally zero
    # offset or dark mode lowers it too); coalescence shows up as
    # duplicated poles or fewer distinct modes than requested
    order_reduced = dup or (len(energies) < model_order)

    # curvature-based uncertainties: full Jacobian over the shared
    # nonlinear parameters and every per-series linear coefficient
    n_nl = sum(2 if gr["kind"] == "pair" else 1 for gr in groups)
    n_lin = phi_fit.shape[1]
    n_par = n_nl + n_series * n_lin
    sig_g = np.full(len(groups), np.nan)
    sig_w = np.full(len(groups), np.nan)
    if len(groups):
        jac_full = np.zeros((n_series * n, n_par))
        for s_i in range(n_series):
            rows = slice(s_i * n, (s_i + 1) * n)
            k_nl = 0
            ic = 1 if include_offset else 0
            for gr in groups:
                env = np.exp(-gr["g"] * tloc)
                if gr["kind"] == "pair":
                    p_c, q_c = coef[ic, s_i], coef[ic + 1, s_i]
                    ph = gr["w"] * tloc
                    jac_full[rows, k_nl] = -tloc * env * (
                        p_c * np.cos(ph) + q_c * np.sin(ph))
                    jac_full[rows, k_nl + 1] = env * tloc * (
                        -p_c * np.sin(ph) + q_c * np.cos(ph))
                    k_nl += 2
                    ic += 2
                else:
                    jac_full[rows, k_nl] = -tloc * coef[ic, s_i] * env
                    k_nl += 1
                    ic += 1
            jac_full[rows, n_nl + s_i * n_lin:n_nl + (s_i + 1) * n_lin] = \
                phi_fit
        jtj_full = jac_full.T @ jac_full
        try:
            jtj_inv = np.linalg.pinv(jtj_full, rcond=1e-12)
            if stderr is not None:
                # sandwich form with the supplied per-point error model
                s2 = (stderr**2).reshape(-1)
                mid = (jac_full * s2[:, None]).T @ jac_full
                cov = jtj_inv @ mid @ jtj_inv
            else:
                dof = max(n_series * n - n_par, 1)
                cov = float(np.sum(resid**2)) / dof * jtj_inv
            var = np.clip(np.diag(cov)[:n_nl], 0.0, None)
            # directions the pseudoinverse clipped are unconstrained by
            # the data, not perfectly known: report them as such
            lam, vv = np.linalg.eigh(jtj_full)
            lam_max = float(lam[-1]) if len(lam) else 0.0
            if lam_max > 0.0:
                clipped = lam < lam_max * 1e-12
                if clipped.any():
                    load = (vv[:, clipped]**2).sum(axis=1)[:n_nl]
                    var = np.where(load > 1e-6, np.inf, var)
            k_nl = 0
            for gi, gr in enumerate(groups):
                sig_g[gi] = np.sqrt(var[k_nl])
                if gr["kind"] == "pair":
                    sig_w[gi] = np.sqrt(var[k_nl + 1])
                    k_nl += 2
                else:
                    sig_w[gi] = 0.0
                    k_nl += 1
        except np.linalg.LinAlgError:
            pass

    # A mode fitted as purely relaxational still admits a range of
    # oscillation frequencies the data cannot rule out.  Quote that
    # range, from a profile of the misfit over a trial frequency, as
    # the real-part uncertainty instead of a hard zero.
    def profile_re_sigma(gi):
        cost0 = float(np.sum(resid**2))
        dof = max(n_series * n - n_par, 1)
        thr = cost0 + 9.0 * cost0 / dof
        w_hi = min(0.5 * np.pi / dt, 8.0 * np.pi / t_total)
        w_vals = np.linspace(0.0, w_hi, 25)[1:]
        g0 = max(groups[gi]["g"], 1e-6 / t_total)
        below = np.zeros(len(w_vals), dtype=bool)
        for k, w_try in enumerate(w_vals):
            best = np.inf
            for g_try in (0.7 * g0, g0, 1.4 * g0):
                g_mod = [dict(gr) for gr in groups]
                g_mod[gi] = {"kind": "pair", "g": g_try, "w": w_try}
                phi = basis_for(g_mod)
                c_m, *_ = np.linalg.lstsq(phi, ys.T, rcond=None)
                best = min(best,
                           float(np.sum((ys - (phi @ c_m).T)**2)))
            below[k] = best <= thr
        if below.all():
            return w_hi / 3.0
        k_last = -1
        for k in range(len(w_vals)):
            if below[k]:
                k_last = k
        if k_last < 0:
            return w_vals[0] / 3.0
        return w_vals[k_last] / 3.0

    mode_sig = []
    for gi in selected:
        if groups[gi]["kind"] == "pair":
            mode_sig.append((sig_w[gi], sig_g[gi]))
            mode_sig.append((sig_w[gi], sig_g[gi]))
        else:
            mode_sig.append((profile_re_sigma(gi), sig_g[gi]))
    mode_sig = np.array(mode_sig if mode_sig else np.zeros((0, 2)))
    if len(mode_sig):
        mode_sig = mode_sig[order]
        stderr_re = mode_sig[:, 0]
        stderr_im = mode_sig[:, 1]
    else:
        stderr_re = np.zeros(0)
        stderr_im = np.zeros(0)

    return EigenvalueEstimate(
        energies=energies,
        amplitudes=a_modes[0] if single else a_modes,
        stderr_re=stderr_re,
        stderr_im=stderr_im,
        s_inf=float(s_off[0]) if single else s_off,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        effective_rank=int(gap_rank),
        requested_modes=int(n_req),
        order_reduced=bool(order_reduced),
        duplicate_modes=bool(dup),
        dt=dt,
        diagnostics={"n_grow_poles": n_grow,
                     "pencil_order": int(p_order),
                     "n_series": int(n_series),
                     "groups": [
                         {"kind": gr["kind"], "g": gr["g"], "w": gr["w"],
                          "eligible": eligible(gr),
                          "selected": gi in selected}
                         for gi, gr in enumerate(groups)
                     ]},
    )


# ---------------------------------------------------------------------------
# figure pipeline


@dataclass(frozen=True)
class PanelPoint:
    """One extracted spectral branch at one parameter point."""

    alpha: float
    gamma: float            # units of the Rabi frequency
    branch: int             # 1-based plotting label
    energy: complex         # units of the Rabi frequency
    stderr_re: float
    stderr_im: float
    amplitude: float
    n_observables: int
    order_reduced: bool
    match_distance: float


@dataclass
class PanelData:
    """Measured and theoretical spectra over an (alpha, gamma) panel."""

    omega: float
    delta: float
    alphas: tuple
    gammas: tuple
    points: list
    theory: list
    config: dict = field(default_factory=dict)

    def coverage(self, k_sigma: float = 3.0, floor: float = 0.05) -> float:
        """Fraction of points within k-sigma (or floor) of theory."""
        if not self.points:
            return 0.0
        theory = {(round(r[0], 12), round(r[1], 12), r[2]): r[3]
                  for r in self.theory}
        hit = 0
        for pt in self.points:
            ref = theory.get((round(pt.alpha, 12), round(pt.gamma, 12), pt.branch))
            if ref is None:
                continue
            tol_re = max(k_sigma * pt.stderr_re, floor) if np.isfinite(pt.stderr_re) else floor
            tol_im = max(k_sigma * pt.stderr_im, floor) if np.isfinite(pt.stderr_im) else floor
            if (abs(pt.energy.real - ref.real) <= tol_re
                    and abs(pt.energy.imag - ref.imag) <= tol_im):
                hit += 1
        return hit / len(self.points)


def run_figure_pipeline(
    alphas,
    gammas,
    delta: float = 0.0,
    omega: float = 1.0,
    n_shots: int | None = 14000,
    seed: int = 0,
    t_max: float | None = None,
    n_times: int = 160,
    bases=BASES,
    model_order: int = 3,
) -> PanelData:
    """Simulate the full spectroscopy of a spectral panel.

    For every (alpha, gamma) on the grid (gamma and delta in units of
    the Rabi frequency) the ground state is evolved under the master
    equation and tomographed at every time with n_shots per basis. The
    requested Bloch series are fitted jointly, sharing one set of decay
    rates and frequencies across observables, which pins down modes
    that any single observable would leave poorly determined. The
    fitted modes are matched to the closed-form spectrum by minimal
    total distance and labeled with the matched branch. Theory rows
    carry the same labels, so measured and exact sheets line up row by
    row.
    """
    alphas = tuple(float(a) for a in np.atleast_1d(alphas))
    gammas = tuple(float(g) for g in np.atleast_1d(gammas))
    bases = tuple(bases)
    for b in bases:
        if b not in BASES:
            raise ValueError(f"unknown tomography basis {b!r}")
    # the record should be signal-dominated: past a few decay times the
    # series is pure shot noise and only degrades the fit
    t_end = float(t_max) if t_max is not None else 6.0 / omega
    times = np.linspace(0.0, t_end, int(n_times))
    rho0 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    points: list = []
    theory: list = []
    basis_obs = {"x": "sigma_x", "y": "sigma_y", "z": "sigma_z"}

    for ia, a in enumerate(alphas):
        for ig, g in enumerate(gammas):
            p = SystemParams(omega, delta * omega, g * omega, a)
            exact = eigenvalues_closed_form(p).values[:3] / omega
            for br in (1, 2, 3):
                theory.append((a, g, br, complex(exact[br - 1])))
            traj = evolve_master(p, rho0, times)
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(ia, ig)))
            stack = np.empty((len(bases), len(times)))
            errs = None
            if n_shots is None:
                for bi, b in enumerate(bases):
                    stack[bi] = observable_series(traj, basis_obs[b])[0]
            else:
                errs = np.empty_like(stack)
                for k in range(len(times)):
                    tomo = tomography(traj.rhos[k], n_shots, rng)
                    for bi, b in enumerate(bases):
                        stack[bi, k] = tomo.bloch[BASES.index(b)]
                        errs[bi, k] = tomo.bloch_stderr[BASES.index(b)]
            est = extract_eigenvalues(times, stack, model_order=model_order,
                                      stderr=errs)
            if not len(est.energies):
                continue
            modes = est.energies / omega
            amps = np.atleast_2d(est.amplitudes)
            # optimal assignment of fitted modes to theory branches
            from itertools import permutations as _perms

            m = len(modes)
            best = None
            for perm in _perms(range(3), m):
                cost = sum(abs(modes[i] - exact[perm[i]]) for i in range(m))
                if best is None or cost < best[0]:
                    best = (cost, perm)
            _, perm = best
            for i in range(m):
                br = perm[i] + 1
                points.append(PanelPoint(
                    alpha=a, gamma=g, branch=br, energy=complex(modes[i]),
                    stderr_re=float(est.stderr_re[i] / omega),
                    stderr_im=float(est.stderr_im[i] / omega),
                    amplitude=float(np.linalg.norm(amps[:, i])),
                    n_observables=len(bases),
                    order_reduced=bool(est.order_reduced),
                    match_distance=float(abs(modes[i] - exact[perm[i]])),
                ))
    return PanelData(omega=omega, delta=delta, alphas=alphas, gammas=gammas,
                     points=points, theory=theory,
                     config={"n_shots": n_shots, "seed": seed,
                             "t_max": t_end, "n_times": int(n_times),
                             "bases": tuple(bases),
                             "model_order": model_order})
