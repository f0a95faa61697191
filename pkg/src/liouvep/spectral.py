"""Spectral analysis of the 4x4 Liouvillian.

Trace preservation forces a permanent eigenvalue E4 = 0, so the
characteristic polynomial factors as det(L - E*I) = E * C(E) with a
monic cubic C. The cubic is extracted with the Faddeev-LeVerrier trace
recursion, and the vanishing of the quartic constant term is verified on
every call as a builder sanity check.

Because a Lindblad generator maps Hermitian operators to Hermitian
operators, its representation in the Pauli basis is a real matrix; the
cubic therefore has real coefficients in the rate variable
lambda = -i*E for every parameter value. That reality is what makes the
cubic discriminant a signed, real function of the parameters and is
exploited heavily by the exceptional-point search code.

Two independent routes to the spectrum are kept deliberately separate:

* ``eigenvalues_closed_form`` solves C(E) by Cardano's method on the
  coefficients (plus the exact zero branch);
* ``eigen_full`` diagonalizes the matrix with LAPACK and checks
  residuals.

Branch labels follow the plotting convention of the model's phase
diagram: in the exact-like phase (a complex-conjugate rate pair) the
pair is (E1, E3) while it decays more slowly than the isolated branch,
and switches to (E1, E2) for alpha < 0.5 or (E2, E3) for alpha > 0.5
once it becomes the faster-decaying pair past a third-order EP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SystemParams, liouvillian, devectorize

__all__ = [
    "CubicCoefficients",
    "Spectrum",
    "BranchTrack",
    "DegenerateSteadyStateError",
    "cubic_from_matrix",
    "characteristic_cubic",
    "solve_cubic",
    "eigenvalues_closed_form",
    "eigen_full",
    "liouvillian_spectrum",
    "steady_state",
    "track_branches",
]


@dataclass(frozen=True)
class CubicCoefficients:
    """Monic cubic C(E) = E^3 + c2 E^2 + c1 E + c0 from det(L - E*I) = E*C(E)."""

    c2: complex
    c1: complex
    c0: complex

    def lambda_coefficients(self) -> tuple[float, float, float]:
        """Real coefficients (d2, d1, d0) of the same cubic in lambda = -i*E.

        The imaginary residue is pure floating-point dust; it is checked
        and discarded.
        """
        d2, d1, d0 = -1j * self.c2, -self.c1, 1j * self.c0
        scale = max(1.0, abs(d2), abs(d1), abs(d0))
        dust = max(abs(d2.imag), abs(d1.imag), abs(d0.imag))
        if dust > 1e-9 * scale:
            raise AssertionError(
                f"rate-variable cubic should be real, imaginary part {dust:g}"
            )
        return float(d2.real), float(d1.real), float(d0.real)

    def discriminant(self) -> complex:
        """Cubic discriminant in the product-of-root-gaps convention,
        disc = prod_{i<j} (E_i - E_j)^2."""
        c2, c1, c0 = self.c2, self.c1, self.c0
        return (
            18.0 * c2 * c1 * c0
            - 4.0 * c2**3 * c0
            + c2**2 * c1**2
            - 4.0 * c1**3
            - 27.0 * c0**2
        )

    def lambda_discriminant(self) -> float:
        """Signed real discriminant of the rate-variable cubic.

        Positive means three real rates (all Re E = 0, the broken-like
        phase), negative means one real rate plus a conjugate pair (an
        Im-degenerate eigenvalue pair, the exact-like phase), zero marks
        a coalescence. Equals -Re(discriminant()).
        """
        d2, d1, d0 = self.lambda_coefficients()
        return (
            18.0 * d2 * d1 * d0
            - 4.0 * d2**3 * d0
            + d2**2 * d1**2
            - 4.0 * d1**3
            - 27.0 * d0**2
        )

    def depressed(self) -> tuple[float, float]:
        """(p, q) of the depressed rate cubic t^3 + p t + q, t = lambda + d2/3.

        A triple root is exactly p = q = 0; these are the two real
        conditions the EP3 search drives to zero.
        """
        d2, d1, d0 = self.lambda_coefficients()
        p = d1 - d2**2 / 3.0
        q = 2.0 * d2**3 / 27.0 - d2 * d1 / 3.0 + d0
        return p, q


def cubic_from_matrix(mat: np.ndarray) -> CubicCoefficients:
    """Characteristic cubic of a 4x4 matrix with a zero eigenvalue.

    Runs the Faddeev-LeVerrier recursion for the full quartic
    det(E*I - mat) = E^4 + a3 E^3 + a2 E^2 + a1 E + a0 and requires
    |a0| <= 1e-10 * ||mat||_F^4; a violation means the matrix does not
    preserve the trace and is rejected.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {mat.shape}")
    coeffs = []
    acc = np.zeros_like(mat)
    c = 1.0 + 0.0j
    for k in range(1, 5):
        acc = mat @ (acc + c * np.eye(4))
        c = -np.trace(acc) / k
        coeffs.append(c)
    a3, a2, a1, a0 = coeffs
    norm = float(np.linalg.norm(mat))
    if abs(a0) > 1e-10 * max(norm, 1e-300) ** 4:
        raise ValueError(
            "constant term of the characteristic polynomial is "
            f"{abs(a0):g}, expected ~0: matrix has no zero eigenvalue"
        )
    return CubicCoefficients(c2=a3, c1=a2, c0=a1)


def characteristic_cubic(p: SystemParams) -> CubicCoefficients:
    """Characteristic cubic of the Liouvillian at parameters p."""
    return cubic_from_matrix(liouvillian(p))


def solve_cubic(coeffs: CubicCoefficients) -> np.ndarray:
    """Roots of the monic cubic by Cardano's formula with a Newton polish.

    The cube-root branch with the larger magnitude is taken to avoid
    cancellation; p = q = 0 collapses to the exact triple root.
    """
    c2, c1, c0 = complex(coeffs.c2), complex(coeffs.c1), complex(coeffs.c0)
    p = c1 - c2**2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    scale = max(abs(c2), abs(c1) ** 0.5, abs(c0) ** (1.0 / 3.0), 1e-300)
    if abs(p) < 1e-30 * scale**2 and abs(q) < 1e-30 * scale**3:
        ts = np.zeros(3, dtype=complex)
    else:
        s = np.sqrt(q * q / 4.0 + p**3 / 27.0 + 0j)
        u3 = -q / 2.0 + s
        if abs(u3) < abs(-q / 2.0 - s):
            u3 = -q / 2.0 - s
        u = u3 ** (1.0 / 3.0)
        w = np.exp(2j * np.pi / 3.0)
        ts = np.array([u * w**k - p / (3.0 * u * w**k) for k in range(3)])
    roots = ts - c2 / 3.0
    # one guarded Newton step per root tightens the worst case without
    # disturbing near-multiple roots
    for i, r in enumerate(roots):
        f = ((r + c2) * r + c1) * r + c0
        df = (3.0 * r + 2.0 * c2) * r + c1
        if df != 0:
            r2 = r - f / df
            f2 = ((r2 + c2) * r2 + c1) * r2 + c0
            if abs(f2) < abs(f):
                roots[i] = r2
    return roots


def _label_triple(triple: np.ndarray, alpha: float) -> tuple[np.ndarray, bool]:
    """Order the three nonzero eigenvalues by the plotting convention.

    Returns (ordered triple, ambiguous flag). In the exact-like phase
    the Im-degenerate pair and the isolated branch are identified from
    the rate variable; broken-phase points are sorted by Im descending
    (slowest first). The flag marks near-ties where the layout choice is
    not numerically meaningful.
    """
    lam = -1j * np.asarray(triple, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(lam))))
    band = 1e-9 * scale
    imag = np.abs(lam.imag)
    order = np.argsort(imag)
    iso, pa, pb = order[0], order[1], order[2]
    if imag[pa] <= band:
        # three essentially real rates: broken-like, sort by Im E descending
        idx = np.argsort(-np.asarray(triple).imag, kind="stable")
        return np.asarray(triple)[idx], bool(
            np.min(np.abs(np.diff(np.sort(np.asarray(triple).imag)))) < band
        )
    pair = np.asarray(triple)[[pa, pb]]
    pair = pair[np.argsort(pair.real)]
    iso_e = complex(triple[iso])
    pair_im = float(pair[0].imag)
    ambiguous = abs(pair_im - iso_e.imag) < band or abs(pair[0].real) < band
    if pair_im >= iso_e.imag - band:
        # slow pair: (E1, E3) with the isolated branch in the middle slot
        out = np.array([pair[0], iso_e, pair[1]])
    elif alpha < 0.5:
        out = np.array([pair[0], pair[1], iso_e])
    else:
        out = np.array([iso_e, pair[0], pair[1]])
    return out, bool(ambiguous)


@dataclass
class Spectrum:
    """Eigenvalues (and optionally eigenvectors) of a 4x4 operator.

    values : shape (4,), ordered; for Liouvillian spectra the order is
        (E1, E2, E3, E4) with E4 the exact zero branch.
    vectors : shape (4, 4) with columns matching values, or None for
        coefficient-only routes.
    zero_index : index of the eigenvalue identified as the zero branch,
        or None when nothing is close to zero.
    gaps : (4, 4) matrix of pairwise |E_i - E_j|.
    overlaps : (4, 4) matrix of |<v_i|v_j>| for unit vectors, or None.
    sigma_min : smallest singular value of (mat - E_i I) per eigenvalue,
        or None.
    residuals : ||mat v - E v|| per column, or None.
    """

    values: np.ndarray
    vectors: np.ndarray | None = None
    zero_index: int | None = None
    gaps: np.ndarray = field(default=None)  # type: ignore[assignment]
    overlaps: np.ndarray | None = None
    sigma_min: np.ndarray | None = None
    residuals: np.ndarray | None = None
    label_ambiguous: bool = False

    def __post_init__(self):
        if self.gaps is None:
            v = self.values
            self.gaps = np.abs(v[:, None] - v[None, :])

    def nonzero_values(self) -> np.ndarray:
        """The three eigenvalues excluding the zero branch."""
        if self.zero_index is None:
            raise ValueError("no zero branch identified")
        keep = [i for i in range(len(self.values)) if i != self.zero_index]
        return self.values[keep]


def eigenvalues_closed_form(p: SystemParams) -> Spectrum:
    """Spectrum from the characteristic cubic alone (no matrix solver).

    E4 = 0 is exact by construction; the cubic roots come from Cardano's
    formula and are ordered by the plotting convention.
    """
    roots = solve_cubic(characteristic_cubic(p))
    triple, amb = _label_triple(roots, p.alpha)
    values = np.concatenate([triple, [0.0 + 0.0j]])
    return Spectrum(values=values, zero_index=3, label_ambiguous=amb)


def eigen_full(
    mat: np.ndarray,
    residual_tol: float = 1e-9,
    mult_tol: float = 1e-6,
) -> Spectrum:
    """Full eigendecomposition of an arbitrary 4x4 matrix.

    Serves as the independent oracle for the closed form. Eigenvalues
    are sorted by (Re, Im); each eigenvector is unit-normalized with its
    largest-magnitude component rotated to the positive real axis. If a
    LAPACK vector misses the residual contract
    ||mat v - E v|| <= residual_tol * ||mat||, it is replaced by the
    smallest right singular vector of (mat - E I), which also supplies
    the per-eigenvalue sigma_min diagnostic used to estimate geometric
    multiplicities near defective points.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {mat.shape}")
    try:
        w, v = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK 4x4 converges
        raise RuntimeError(f"eigendecomposition failed: {exc}") from exc
    order = np.lexsort((w.imag, w.real))
    w, v = w[order], v[:, order]
    norm = max(float(np.linalg.norm(mat, 2)), 1e-300)
    sig = np.empty(4)
    res = np.empty(4)
    for k in range(4):
        vk = v[:, k] / np.linalg.norm(v[:, k])
        sv = np.linalg.svd(mat - w[k] * np.eye(4), compute_uv=False)
        sig[k] = sv[-1]
        rk = np.linalg.norm(mat @ vk - w[k] * vk)
        if rk > residual_tol * norm:
            _, _, vh = np.linalg.svd(mat - w[k] * np.eye(4))
            vk = vh[-1].conj()
            rk = np.linalg.norm(mat @ vk - w[k] * vk)
            if rk > residual_tol * norm:
                raise RuntimeError(
                    f"eigen residual {rk:g} exceeds {residual_tol:g}*||mat|| "
                    f"for eigenvalue {w[k]}"
                )
        big = int(np.argmax(np.abs(vk)))
        phase = vk[big] / abs(vk[big])
        v[:, k] = vk / phase
        res[k] = rk
    overlaps = np.abs(v.conj().T @ v)
    zero_index = None
    imin = int(np.argmin(np.abs(w)))
    if abs(w[imin]) <= 1e-8 * norm:
        zero_index = imin
    return Spectrum(
        values=w,
        vectors=v,
        zero_index=zero_index,
        overlaps=overlaps,
        sigma_min=sig,
        residuals=res,
    )


def liouvillian_spectrum(p: SystemParams) -> Spectrum:
    """eigen_full of the Liouvillian, reordered to the (E1, E2, E3, E4=0)
    branch convention."""
    spec = eigen_full(liouvillian(p))
    if spec.zero_index is None:
        raise RuntimeError("Liouvillian spectrum lost its zero eigenvalue")
    keep = [i for i in range(4) if i != spec.zero_index]
    triple = spec.values[keep]
    ordered, amb = _label_triple(triple, p.alpha)
    perm = []
    used = set()
    for t in ordered:
        j = min(
            (j for j in keep if j not in used),
            key=lambda j: abs(spec.values[j] - t),
        )
        used.add(j)
        perm.append(j)
    perm.append(spec.zero_index)
    return Spectrum(
        values=spec.values[perm],
        vectors=spec.vectors[:, perm],
        zero_index=3,
        overlaps=spec.overlaps[np.ix_(perm, perm)],
        sigma_min=spec.sigma_min[perm],
        residuals=spec.residuals[perm],
        label_ambiguous=amb,
    )


class DegenerateSteadyStateError(ValueError):
    """The Liouvillian null space is not one-dimensional."""


def steady_state(p: SystemParams, null_tol: float = 1e-10) -> np.ndarray:
    """Unique steady density matrix, from the null vector of L.

    Requires a one-dimensional null space; gamma = 0 (unitary dynamics)
    or a drive-free pure-dephasing point (omega would need to vanish,
    populations conserved) make it degenerate and raise
    DegenerateSteadyStateError.
    """
    mat = liouvillian(p)
    _, sv, vh = np.linalg.svd(mat)
    scale = max(sv[0], 1e-300)
    if sv[-2] <= null_tol * scale:
        raise DegenerateSteadyStateError(
            "steady state is not unique: second singular value "
            f"{sv[-2]:g} of the Liouvillian is consistent with zero"
        )
    rho = devectorize(vh[-1].conj(), strict=False)
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -1e-9:
        raise RuntimeError(
            f"steady-state reconstruction went negative ({evals.min():g})"
        )
    return rho


@dataclass
class BranchTrack:
    """Labeled eigenvalue curves along a parameter sweep.

    energies : shape (n, 4), columns (E1, E2, E3, E4).
    ambiguous : shape (n,) bool, True where the assignment was a
        near-tie and the labels are a convention, not a measurement.
    """

    params: list[SystemParams]
    energies: np.ndarray
    ambiguous: np.ndarray


def track_branches(params: list[SystemParams]) -> BranchTrack:
    """Label eigenvalue branches continuously along a sweep.

    Exact-like points (conjugate rate pair) are labeled by the stateless
    plotting convention; broken-like stretches fall back to
    minimum-total-distance continuity over all six assignments of the
    nonzero triple, with ties broken by giving the lower label to the
    slower branch. Coalescences and assignment ties set the ambiguous
    flag for that step.
    """
    if len(params) == 0:
        return BranchTrack(params=[], energies=np.empty((0, 4), complex),
                           ambiguous=np.empty(0, bool))
    from itertools import permutations

    energies = np.empty((len(params), 4), dtype=complex)
    flags = np.zeros(len(params), dtype=bool)
    prev = None
    for k, p in enumerate(params):
        spec = eigen_full(liouvillian(p))
        if spec.zero_index is None:  # pragma: no cover - zero branch is exact
            raise RuntimeError("zero branch missing during tracking")
        triple = spec.values[[i for i in range(4) if i != spec.zero_index]]
        scale = max(1.0, float(np.max(np.abs(triple))))
        cubic = cubic_from_matrix(liouvillian(p))
        exact_like = cubic.lambda_discriminant() < 0.0
        if exact_like or prev is None:
            ordered, amb = _label_triple(triple, p.alpha)
            flags[k] = amb
        else:
            # squared distances avoid the collinear degeneracy of the
            # absolute-value cost (purely imaginary spectra tie otherwise)
            scored = []
            for perm in permutations(range(3)):
                cand = triple[list(perm)]
                cost = float(np.sum(np.abs(cand - prev) ** 2))
                scored.append((cost, cand))
            best_cost = min(c for c, _ in scored)
            tied = [cand for c, cand in scored if c - best_cost < 1e-12 * scale**2]
            if len(tied) > 1:
                # genuine tie (mirror-symmetric split at an EP): give the
                # slower branch the lower label, slot by slot
                flags[k] = True
                tied.sort(key=lambda cand: tuple(-cand.imag))
            ordered = tied[0]
        mingap = min(
            abs(triple[i] - triple[j]) for i in range(3) for j in range(i + 1, 3)
        )
        if mingap < 1e-6 * scale:
            flags[k] = True
        energies[k, :3] = ordered
        energies[k, 3] = 0.0
        prev = ordered
    return BranchTrack(params=list(params), energies=energies, ambiguous=flags)
