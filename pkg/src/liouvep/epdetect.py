"""Detection, location, and continuation of Liouvillian exceptional points.

The workhorse scalar is the discriminant of the cubic factor of the
characteristic polynomial, written in the decay-rate variable where its
coefficients are real. Its sign separates the two spectral regimes
(negative: a conjugate pair of rates, i.e. an underdamped pair of
energies; positive: three real rates), it vanishes exactly where two
rates merge, and a second-order EP is a simple zero while a
third-order EP is a cusp of the zero set where p and q of the
depressed cubic vanish together.

Classification works directly on the numerical spectrum: coalescence
of eigenvalues within a gap tolerance, coalescence of eigenvectors
(overlap), and the Jordan structure of L - E* I checked through
singular-value ranks. Second- and third-order tests use different gap
tolerances because a third-order degeneracy splits under floating-point
rounding like the cube root of the coefficient error (about 1e-5 in
double precision), which no root refinement can undo.

All entry points reject alpha near 1/2, where the critical damping
strength diverges like 1/|1 - 2 alpha| and no EP exists at finite
gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import SystemParams, liouvillian
from .spectral import characteristic_cubic, liouvillian_spectrum

__all__ = [
    "EPTolerances",
    "EPCandidate",
    "EPClassification",
    "ExceptionalLine",
    "EPTrajectoryPoint",
    "cubic_discriminant",
    "signed_discriminant",
    "classify_ep",
    "locate_ep2",
    "locate_ep3",
    "trace_exceptional_lines",
    "ep_trajectory_vs_alpha",
    "phase_of",
]

# brentq cannot go below 4 ulp relative tolerance
_RTOL_MIN = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class EPTolerances:
    """Tolerances of the EP machinery, relative to the Rabi frequency.

    gap_rel certifies a two-fold coalescence; gap3_rel certifies a
    three-fold one and is looser by design (cube-root splitting of a
    triple root under rounding noise). overlap_tol bounds 1 - |<vi|vj>|
    for eigenvector coalescence. rank_tol scales singular-value
    thresholds in Jordan-structure checks. no_decision_factor widens
    each gap tolerance into an indeterminate band. alpha_halfwidth is
    the exclusion band around alpha = 1/2.
    """

    gap_rel: float = 1e-6
    gap3_rel: float = 1e-4
    overlap_tol: float = 1e-4
    sv_sep_tol: float = 1e-3
    rank_tol: float = 1e-6
    no_decision_factor: float = 10.0
    alpha_halfwidth: float = 0.02


def _check_alpha(alpha: float, tols: EPTolerances) -> None:
    if abs(alpha - 0.5) < tols.alpha_halfwidth:
        raise ValueError(
            f"alpha={alpha:g} lies in the exclusion band |alpha-0.5| < "
            f"{tols.alpha_halfwidth:g}: the critical damping strength grows "
            "like 1/|1-2*alpha| and no exceptional point exists at finite gamma"
        )


def cubic_discriminant(p: SystemParams) -> complex:
    """Discriminant of the cubic factor in the energy variable."""
    return characteristic_cubic(p).discriminant()


def signed_discriminant(p: SystemParams) -> float:
    """Real discriminant in the rate variable; zero exactly on EPs.

    Positive in the broken regime (three real decay rates), negative in
    the underdamped regime (a conjugate pair of rates).
    """
    return characteristic_cubic(p).lambda_discriminant()


@dataclass(frozen=True)
class EPCandidate:
    """A parameter point together with its certified EP order."""

    params: SystemParams
    order: int
    e_star: complex
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class EPClassification:
    """Outcome of classify_ep.

    kind is one of "none", "ep2", "ep3", "indeterminate". order is 0,
    2 or 3; e_star is the mean of the coalescing eigenvalues when an
    order is assigned. pair holds the 1-based branch labels that
    coalesce. diagnostics carries gaps, overlaps, singular values and
    the textual reason.
    """

    kind: str
    order: int
    e_star: complex | None
    pair: tuple
    diagnostics: dict = field(default_factory=dict, compare=False)


def _rank(svals: np.ndarray, thresh: float) -> int:
    return int(np.sum(svals > thresh))


def classify_ep(p: SystemParams, tols: EPTolerances | None = None) -> EPClassification:
    """Classify a parameter point as no EP, EP2, EP3, or indeterminate.

    Decision ladder: first test all three pairwise gaps of the nonzero
    triple against the order-3 tolerance and, on success, require the
    Jordan structure rank(L - E* I) = 3, rank((L - E* I)^2) = 2.
    Otherwise test the smallest pairwise gap against the order-2
    tolerance plus eigenvector overlap above 1 - overlap_tol. Gaps
    inside the widened no-decision band, or degeneracies whose
    eigenvectors refuse to coalesce, come back indeterminate rather
    than forced into a bin.
    """
    tols = tols or EPTolerances()
    spec = liouvillian_spectrum(p)
    triple = spec.values[:3]
    om = p.omega
    # rounding noise in the eigenvalues (and hence in root-located EP
    # parameters) grows with the spectral magnitude, so the gap
    # tolerances track it once it exceeds the Rabi frequency
    spec_scale = max(1.0, float(np.max(np.abs(triple))) / om)
    gap3_tol = tols.gap3_rel * om * spec_scale
    gap2_tol = tols.gap_rel * om * spec_scale
    pairs = ((0, 1), (0, 2), (1, 2))
    gaps = {pr: abs(triple[pr[0]] - triple[pr[1]]) for pr in pairs}
    gmax = max(gaps.values())
    gmin_pair = min(pairs, key=lambda pr: gaps[pr])
    gmin = gaps[gmin_pair]
    diag = {
        "gaps": {f"E{a+1}E{b+1}": g for (a, b), g in gaps.items()},
        "label_ambiguous": spec.label_ambiguous,
    }

    mat = liouvillian(p)
    nrm = np.linalg.norm(mat, 2)

    if gmax <= gap3_tol:
        e_star = triple.mean()
        shifted = mat - e_star * np.eye(4)
        sv1 = np.linalg.svd(shifted, compute_uv=False)
        sq = shifted @ shifted
        sv2 = np.linalg.svd(sq, compute_uv=False)
        r1 = _rank(sv1, tols.rank_tol * nrm)
        r2 = _rank(sv2, tols.rank_tol * max(np.linalg.norm(sq, 2), nrm))
        diag.update({"sv_shifted": sv1, "sv_squared": sv2,
                     "rank_shifted": r1, "rank_squared": r2})
        if r1 == 3 and r2 == 2:
            diag["reason"] = "three-fold coalescence with a single Jordan chain"
            return EPClassification("ep3", 3, complex(e_star), (1, 2, 3), diag)
        diag["reason"] = (
            "three eigenvalues coalesce but the Jordan ranks "
            f"({r1}, {r2}) do not match a single length-3 chain"
        )
        return EPClassification("indeterminate", 0, complex(e_star), (), diag)

    if gmax <= tols.no_decision_factor * gap3_tol and gmin <= gap3_tol:
        diag["reason"] = "inside the order-3 no-decision band"
        return EPClassification("indeterminate", 0, None, (), diag)

    if gmin <= gap2_tol:
        i, j = gmin_pair
        e_star = 0.5 * (triple[i] + triple[j])
        overlap = None
        if spec.overlaps is not None:
            overlap = float(spec.overlaps[i, j])
        diag["overlap"] = overlap
        shifted = mat - e_star * np.eye(4)
        sv1 = np.linalg.svd(shifted, compute_uv=False)
        diag["sv_shifted"] = sv1
        r1 = _rank(sv1, tols.rank_tol * nrm)
        diag["rank_shifted"] = r1
        sep_ok = sv1[2] / sv1[0] >= tols.sv_sep_tol
        diag["sv_separation"] = float(sv1[2] / sv1[0])
        if overlap is not None and overlap >= 1.0 - tols.overlap_tol and r1 == 3 and sep_ok:
            diag["reason"] = "two-fold coalescence of eigenvalues and eigenvectors"
            return EPClassification("ep2", 2, complex(e_star), (i + 1, j + 1), diag)
        diag["reason"] = (
            "eigenvalue pair merges but eigenvector overlap "
            f"{overlap!r} or rank structure does not certify a defective pair"
        )
        return EPClassification("indeterminate", 0, complex(e_star), (i + 1, j + 1), diag)

    if gmin <= tols.no_decision_factor * gap2_tol:
        diag["reason"] = "inside the order-2 no-decision band"
        return EPClassification("indeterminate", 0, None, (), diag)

    diag["reason"] = "all eigenvalue gaps are resolved"
    return EPClassification("none", 0, None, (), diag)


def _auto_bracket_gamma(alpha, delta, omega, n=240):
    """Bracket the smallest-gamma sign change of the discriminant."""
    scale = 1.0 / abs(1.0 - 2.0 * alpha)
    grid = np.geomspace(0.2, 60.0, n) * omega * scale
    prev_g = grid[0]
    prev_f = signed_discriminant(SystemParams(omega, delta, prev_g, alpha))
    for g in grid[1:]:
        f = signed_discriminant(SystemParams(omega, delta, g, alpha))
        if prev_f == 0.0:
            return (prev_g * 0.999, prev_g * 1.001)
        if prev_f * f < 0.0:
            return (prev_g, g)
        prev_g, prev_f = g, f
    raise ValueError(
        f"no discriminant sign change found for alpha={alpha:g}, "
        f"delta={delta:g} with gamma up to {grid[-1]:g}"
    )


def _polish_double_root(gamma_hat, delta, omega, alpha):
    """Sharpen an EP2 damping estimate to machine precision.

    The discriminant root only places gamma* to within the rounding
    noise of the discriminant itself (which grows like gamma^6). The
    double root is better conditioned as the joint system P(l) = 0,
    P'(l) = 0 of the rate cubic in (l, gamma): its Jacobian is regular
    at a plain EP2, so Newton converges quadratically to machine
    accuracy. Returns the polished gamma, or gamma_hat if the iteration
    wanders off.
    """

    def coeffs(g):
        return characteristic_cubic(
            SystemParams(omega, delta, g, alpha)).lambda_coefficients()

    d2, d1, d0 = coeffs(gamma_hat)
    crit = np.roots([3.0, 2.0 * d2, d1]).real
    lam = min(crit, key=lambda r: abs(((r + d2) * r + d1) * r + d0))
    g = float(gamma_hat)
    best_score, best_g = np.inf, g
    for _ in range(30):
        d2, d1, d0 = coeffs(g)
        f0 = ((lam + d2) * lam + d1) * lam + d0
        f1 = (3.0 * lam + 2.0 * d2) * lam + d1
        s = max(omega, abs(g), abs(lam))
        # scale-free residual; iterate to its floating-point floor and
        # keep the best iterate rather than testing a sharp tolerance
        score = abs(f0) / s**3 + abs(f1) / s**2
        if score < best_score:
            best_score, best_g = score, g
        if score < 1e-16:
            break
        h = 1e-7 * s
        cp = coeffs(g + h)
        cm = coeffs(g - h)
        dd2, dd1, dd0 = [(a - b) / (2.0 * h) for a, b in zip(cp, cm)]
        jac = np.array([
            [f1, (lam * dd2 + dd1) * lam + dd0],
            [6.0 * lam + 2.0 * d2, 2.0 * lam * dd2 + dd1],
        ])
        try:
            dl, dg = np.linalg.solve(jac, [-f0, -f1])
        except np.linalg.LinAlgError:
            break
        limit = 0.1 * s
        clip = max(abs(dl), abs(dg)) / limit
        if clip > 1.0:
            dl, dg = dl / clip, dg / clip
        lam += dl
        g += dg
        if not (0.5 * gamma_hat < g < 2.0 * gamma_hat):
            break
    return float(best_g)


def locate_ep2(
    alpha: float,
    gamma_bracket: tuple | None = None,
    delta: float = 0.0,
    omega: float = 1.0,
    tols: EPTolerances | None = None,
) -> EPCandidate:
    """Find the critical damping strength of a second-order EP.

    Solves signed_discriminant(gamma) = 0 by bisection-accelerated root
    finding at machine-tight tolerance, then classifies the located
    point. With the default bracket the smallest-gamma crossing is
    returned; on the zero-detuning line that is gamma* =
    4 Omega / |1 - 2 alpha|.
    """
    tols = tols or EPTolerances()
    _check_alpha(alpha, tols)
    if gamma_bracket is None:
        gamma_bracket = _auto_bracket_gamma(alpha, delta, omega)
    a, b = map(float, gamma_bracket)
    if not (0.0 < a < b):
        raise ValueError(f"invalid gamma bracket {gamma_bracket!r}")

    def f(g):
        return signed_discriminant(SystemParams(omega, delta, g, alpha))

    fa, fb = f(a), f(b)
    if fa * fb > 0.0:
        raise ValueError(
            f"discriminant does not change sign over {gamma_bracket!r} "
            f"(f(a)={fa:g}, f(b)={fb:g})"
        )
    gamma_star = brentq(f, a, b, xtol=1e-14 * max(1.0, b), rtol=_RTOL_MIN)
    gamma_star = _polish_double_root(gamma_star, delta, omega, alpha)
    p_star = SystemParams(omega, delta, float(gamma_star), alpha)
    cls = classify_ep(p_star, tols)
    if cls.kind not in ("ep2", "ep3"):
        raise RuntimeError(
            f"root of the discriminant at gamma={gamma_star:g} did not "
            f"certify as an EP: {cls.diagnostics.get('reason')}"
        )
    return EPCandidate(params=p_star, order=cls.order, e_star=cls.e_star,
                       diagnostics=cls.diagnostics)


def _depressed_residual(delta, gamma, omega, alpha):
    cc = characteristic_cubic(SystemParams(omega, delta, gamma, alpha))
    p, q = cc.depressed()
    return np.array([p / omega**2, q / omega**3])


def locate_ep3(
    alpha: float,
    omega: float = 1.0,
    tols: EPTolerances | None = None,
) -> tuple:
    """Find the (detuning, damping) pair of both third-order EPs.

    A third-order EP needs p = q = 0 in the depressed rate cubic; a
    damped Newton iteration with finite-difference Jacobian drives both
    to zero from the analytic seed (Omega/sqrt(8),
    sqrt(13.5) Omega / |1 - 2 alpha|). The EP3 pair is symmetric under
    detuning reversal; candidates are returned ordered by detuning.
    """
    tols = tols or EPTolerances()
    _check_alpha(alpha, tols)
    x = np.array([omega / np.sqrt(8.0),
                  np.sqrt(13.5) * omega / abs(1.0 - 2.0 * alpha)])
    scale = np.array([omega, omega / abs(1.0 - 2.0 * alpha)])

    def res(vec):
        return _depressed_residual(vec[0], vec[1], omega, alpha)

    f = res(x)
    for _ in range(60):
        norm_f = np.linalg.norm(f)
        # the normalized residual carries rounding noise that grows
        # like (gamma/omega)^3; demanding less than that stalls the
        # line search at machine precision
        res_floor = 1e-14 * max(1.0, (x[1] / omega) ** 3)
        if norm_f < res_floor:
            break
        jac = np.empty((2, 2))
        for col in range(2):
            h = 1e-7 * max(abs(x[col]), scale[col])
            xp = x.copy()
            xp[col] += h
            xm = x.copy()
            xm[col] -= h
            jac[:, col] = (res(xp) - res(xm)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"singular Jacobian in EP3 search at {x}") from exc
        lam = 1.0
        while lam > 2.0**-30:
            trial = x + lam * step
            if trial[0] > 0.0 and trial[1] > 0.0:
                f_trial = res(trial)
                if np.linalg.norm(f_trial) <= (1.0 - 0.25 * lam) * norm_f:
                    x, f = trial, f_trial
                    break
            lam *= 0.5
        else:
            if norm_f < 1e3 * res_floor:
                break
            raise RuntimeError(
                f"EP3 search stalled at {x} with residual {norm_f:g}"
            )
    else:
        raise RuntimeError(
            f"EP3 search did not converge (residual {np.linalg.norm(f):g})"
        )

    out = []
    for sgn in (-1.0, 1.0):
        p_star = SystemParams(omega, sgn * float(x[0]), float(x[1]), alpha)
        cls = classify_ep(p_star, tols)
        if cls.kind != "ep3":
            raise RuntimeError(
                f"converged point {p_star} did not certify as order 3: "
                f"{cls.diagnostics.get('reason')}"
            )
        out.append(EPCandidate(params=p_star, order=3, e_star=cls.e_star,
                               diagnostics=cls.diagnostics))
    return tuple(out)


@dataclass
class ExceptionalLine:
    """One polyline of the exceptional set in the (delta, gamma) plane.

    points has shape (m, 2) with columns (delta, gamma), ordered along
    the line. start_junction / end_junction flag endpoints that sit on
    a located third-order EP; pair holds the 1-based labels of the
    branch pair that coalesces along the interior of the line.
    """

    points: np.ndarray
    start_junction: bool = False
    end_junction: bool = False
    pair: tuple = ()


def trace_exceptional_lines(
    alpha: float,
    delta_range: tuple = (-1.0, 1.0),
    gamma_range: tuple = (2.0, 6.0),
    resolution: int = 200,
    omega: float = 1.0,
    tols: EPTolerances | None = None,
) -> list:
    """Trace the zero set of the discriminant over a parameter window.

    The window is sampled on a resolution x resolution grid, every
    sign-changing grid edge is refined by one-dimensional root finding,
    the refined points are chained into polylines by direction-aware
    nearest-neighbor continuation, and chain ends adjacent to a located
    EP3 are terminated exactly on it and flagged as junctions. Points
    too close to a junction are dropped before chaining because the two
    lines meeting at a cusp are tangent there and cannot be separated
    at grid resolution.
    """
    tols = tols or EPTolerances()
    _check_alpha(alpha, tols)
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    d_lo, d_hi = map(float, delta_range)
    g_lo, g_hi = map(float, gamma_range)
    if not (d_lo < d_hi and 0.0 <= g_lo < g_hi):
        raise ValueError("empty or invalid parameter window")
    deltas = np.linspace(d_lo, d_hi, resolution)
    gammas = np.linspace(g_lo, g_hi, resolution)
    cell_d = deltas[1] - deltas[0]
    cell_g = gammas[1] - gammas[0]

    grid = np.empty((resolution, resolution))
    for ig, g in enumerate(gammas):
        for idx, d in enumerate(deltas):
            grid[ig, idx] = signed_discriminant(SystemParams(omega, d, g, alpha))

    def f_delta(d, g):
        return signed_discriminant(SystemParams(omega, d, g, alpha))

    pts = []
    tiny = 1e-12 * max(1.0, float(np.median(np.abs(grid))))
    node_zero = np.abs(grid) <= tiny
    for ig in range(resolution):
        for idx in range(resolution):
            if node_zero[ig, idx]:
                pts.append((deltas[idx], gammas[ig]))
    for ig in range(resolution):
        row = grid[ig]
        for idx in range(resolution - 1):
            if node_zero[ig, idx] or node_zero[ig, idx + 1]:
                continue
            if row[idx] * row[idx + 1] < 0.0:
                d_root = brentq(f_delta, deltas[idx], deltas[idx + 1],
                                args=(gammas[ig],), xtol=1e-13, rtol=_RTOL_MIN)
                pts.append((d_root, gammas[ig]))
    for idx in range(resolution):
        col = grid[:, idx]
        for ig in range(resolution - 1):
            if node_zero[ig, idx] or node_zero[ig + 1, idx]:
                continue
            if col[ig] * col[ig + 1] < 0.0:
                g_root = brentq(lambda g: f_delta(deltas[idx], g),
                                gammas[ig], gammas[ig + 1],
                                xtol=1e-13, rtol=_RTOL_MIN)
                pts.append((deltas[idx], g_root))
    if not pts:
        return []

    junctions = []
    try:
        for cand in locate_ep3(alpha, omega, tols):
            dj, gj = cand.params.delta, cand.params.gamma
            if d_lo - cell_d <= dj <= d_hi + cell_d and g_lo - cell_g <= gj <= g_hi + cell_g:
                junctions.append((dj, gj))
    except (RuntimeError, ValueError):
        junctions = []

    pts = np.array(pts)
    scaled = np.column_stack([pts[:, 0] / cell_d, pts[:, 1] / cell_g])
    j_scaled = np.array([(d / cell_d, g / cell_g) for d, g in junctions]) \
        if junctions else np.empty((0, 2))

    keep = np.ones(len(scaled), dtype=bool)
    for js in j_scaled:
        keep &= np.linalg.norm(scaled - js, axis=1) >= 4.0
    pts = pts[keep]
    scaled = scaled[keep]
    if len(pts) == 0:
        return []

    used = np.zeros(len(pts), dtype=bool)
    # neighbor counts identify line endpoints as chain seeds
    n_neigh = np.array([
        np.sum((np.linalg.norm(scaled - scaled[i], axis=1) < 1.8) & ~used) - 1
        for i in range(len(pts))
    ])
    order_seed = np.lexsort((scaled[:, 1], scaled[:, 0], n_neigh))

    def grow(start_idx):
        chain = [start_idx]
        used[start_idx] = True
        direction = None
        reversed_once = False
        while True:
            end = chain[-1]
            rel = scaled - scaled[end]
            dist = np.linalg.norm(rel, axis=1)
            cand_mask = (~used) & (dist < 2.6) & (dist > 0)
            if direction is not None:
                with np.errstate(invalid="ignore", divide="ignore"):
                    cosang = (rel @ direction) / np.where(dist > 0, dist, 1.0)
                cand_mask &= cosang > 0.2
            cand_idx = np.flatnonzero(cand_mask)
            if len(cand_idx) == 0:
                if not reversed_once:
                    reversed_once = True
                    chain.reverse()
                    if len(chain) >= 2:
                        step = scaled[chain[-1]] - scaled[chain[-2]]
                        nn = np.linalg.norm(step)
                        direction = step / nn if nn > 0 else None
                    else:
                        direction = None
                    continue
                break
            nxt = cand_idx[np.argmin(dist[cand_idx])]
            step = scaled[nxt] - scaled[end]
            step = step / np.linalg.norm(step)
            direction = step if direction is None else 0.4 * direction + 0.6 * step
            nn = np.linalg.norm(direction)
            direction = direction / nn if nn > 0 else step
            chain.append(nxt)
            used[nxt] = True
        return chain

    chains = []
    for seed in order_seed:
        if not used[seed]:
            chain = grow(seed)
            if len(chain) >= 4:
                chains.append(chain)

    lines = []
    for chain in chains:
        coords = pts[chain]
        first, last = coords[0], coords[-1]
        if (last[0], last[1]) < (first[0], first[1]):
            coords = coords[::-1]
        start_j = end_j = False
        for dj, gj in junctions:
            jd = np.array([dj, gj])
            cellv = np.array([cell_d, cell_g])
            if np.linalg.norm((coords[0] - jd) / cellv) < 7.0:
                coords = np.vstack([jd, coords])
                start_j = True
            elif np.linalg.norm((coords[-1] - jd) / cellv) < 7.0:
                coords = np.vstack([coords, jd])
                end_j = True
        pair = ()
        mid_d, mid_g = coords[len(coords) // 2]
        try:
            d_ref = brentq(f_delta, mid_d - 0.6 * cell_d, mid_d + 0.6 * cell_d,
                           args=(mid_g,), xtol=1e-14, rtol=_RTOL_MIN)
            cls = classify_ep(SystemParams(omega, float(d_ref), float(mid_g), alpha),
                              tols)
            if cls.kind == "ep2":
                pair = cls.pair
        except (ValueError, RuntimeError):
            pair = ()
        lines.append(ExceptionalLine(points=coords, start_junction=start_j,
                                     end_junction=end_j, pair=pair))
    lines.sort(key=lambda ln: (ln.points[0, 0], ln.points[0, 1]))
    return lines


@dataclass(frozen=True)
class EPTrajectoryPoint:
    """One alpha sample of an EP continuation: a candidate or a reason."""

    alpha: float
    status: str            # "ok" | "excluded" | "failed"
    candidate: EPCandidate | None
    message: str = ""


def ep_trajectory_vs_alpha(
    kind: str,
    alphas,
    delta: float = 0.0,
    omega: float = 1.0,
    tols: EPTolerances | None = None,
) -> list:
    """Continue an EP2 or EP3 across a grid of mixing parameters.

    Returns one record per requested alpha; samples inside the
    exclusion band are flagged "excluded" and genuine solver failures
    "failed" instead of aborting the sweep. For kind "ep3" the
    positive-detuning member of the symmetric pair is recorded.
    """
    tols = tols or EPTolerances()
    if kind not in ("ep2", "ep3"):
        raise ValueError(f"kind must be 'ep2' or 'ep3', got {kind!r}")
    records = []
    for a in np.asarray(alphas, dtype=float):
        a = float(a)
        if abs(a - 0.5) < tols.alpha_halfwidth:
            records.append(EPTrajectoryPoint(
                alpha=a, status="excluded", candidate=None,
                message="inside the alpha=1/2 exclusion band"))
            continue
        try:
            if kind == "ep2":
                cand = locate_ep2(a, delta=delta, omega=omega, tols=tols)
            else:
                cand = locate_ep3(a, omega=omega, tols=tols)[1]
            records.append(EPTrajectoryPoint(alpha=a, status="ok", candidate=cand))
        except (ValueError, RuntimeError) as exc:
            records.append(EPTrajectoryPoint(
                alpha=a, status="failed", candidate=None, message=str(exc)))
    return records


def phase_of(p: SystemParams, tols: EPTolerances | None = None) -> str:
    """Spectral phase on the zero-detuning line.

    Returns "exact" (underdamped conjugate pair), "broken" (three real
    decay rates), or "at_ep" when the point certifies as an EP. The
    dichotomy relies on the symmetry of the zero-detuning line, so a
    finite detuning is rejected.
    """
    tols = tols or EPTolerances()
    if abs(p.delta) > 1e-12 * p.omega:
        raise ValueError(
            "the exact/broken dichotomy is defined on the zero-detuning line"
        )
    cls = classify_ep(p, tols)
    if cls.kind in ("ep2", "ep3"):
        return "at_ep"
    disc = signed_discriminant(p)
    return "broken" if disc > 0.0 else "exact"
