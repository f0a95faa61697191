"""Exceptional-point detection, location and continuation."""

import numpy as np
import pytest

from liouvep import (
    SystemParams,
    liouvillian,
    eigenvalues_closed_form,
    cubic_discriminant,
    signed_discriminant,
    classify_ep,
    locate_ep2,
    locate_ep3,
    trace_exceptional_lines,
    ep_trajectory_vs_alpha,
    phase_of,
)
from conftest import random_params

ALPHAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0)


def test_discriminant_equals_gap_product():
    """|disc| is the product of squared root gaps of the nonzero triple."""
    rng = np.random.default_rng(31)
    for _ in range(40):
        p = random_params(rng, gamma=(0.1, 8.0))
        roots = eigenvalues_closed_form(p).values[:3]
        prod = 1.0
        for i in range(3):
            for j in range(i + 1, 3):
                prod *= abs(roots[i] - roots[j]) ** 2
        scale = max(1.0, p.omega, p.gamma, abs(p.delta)) ** 6
        assert abs(abs(cubic_discriminant(p)) - prod) < 1e-7 * scale


def test_signed_discriminant_sign_convention():
    # underdamped (exact-like): conjugate pair of rates, negative sign
    assert signed_discriminant(SystemParams(1.0, 0.0, 1.0, 0.0)) < 0.0
    # overdamped (broken-like): three real rates, positive sign
    assert signed_discriminant(SystemParams(1.0, 0.0, 6.0, 0.0)) > 0.0


def test_discriminant_alpha_half_closed_form():
    """At alpha = 1/2: disc = 4 (delta^2 + omega^2)^3, independent of gamma."""
    rng = np.random.default_rng(32)
    for _ in range(20):
        om = float(rng.uniform(0.5, 2.0))
        de = float(rng.uniform(-1.5, 1.5))
        g = float(rng.uniform(0.0, 50.0))
        p = SystemParams(om, de, g, 0.5)
        expect = 4.0 * (de**2 + om**2) ** 3
        scale = max(1.0, g, om) ** 6
        assert abs(cubic_discriminant(p) - expect) < 1e-9 * scale


def test_locate_ep2_formula():
    for a in ALPHAS:
        cand = locate_ep2(a)
        expect = 4.0 / abs(1.0 - 2.0 * a)
        assert cand.order == 2
        assert cand.params.gamma == pytest.approx(expect, abs=1e-9 * expect)
        # E* = -i gamma^* (1 + 2 alpha) / 4 on the zero-detuning line
        estar = -1j * cand.params.gamma * (1.0 + 2.0 * a) / 4.0
        assert abs(cand.e_star - estar) < 1e-5 * max(1.0, abs(estar))


def test_locate_ep2_rejects_alpha_half():
    with pytest.raises(ValueError, match="exclusion band"):
        locate_ep2(0.5)


def test_locate_ep2_scales_with_omega():
    cand = locate_ep2(0.0, omega=2.5)
    assert cand.params.gamma == pytest.approx(10.0, abs=1e-8)


def test_locate_ep3_formula():
    for a in ALPHAS:
        lo, hi = locate_ep3(a)
        expect_d = 1.0 / np.sqrt(8.0)
        expect_g = np.sqrt(13.5) / abs(1.0 - 2.0 * a)
        for cand, sign in ((lo, -1.0), (hi, 1.0)):
            assert cand.order == 3
            assert cand.params.delta == pytest.approx(sign * expect_d, abs=1e-9)
            assert cand.params.gamma == pytest.approx(expect_g, abs=1e-9 * expect_g)
            # E* = -i gamma^* (1 + alpha) / 3
            estar = -1j * cand.params.gamma * (1.0 + a) / 3.0
            assert abs(cand.e_star - estar) < 1e-4 * max(1.0, abs(estar))


def test_locate_ep3_rejects_alpha_half():
    with pytest.raises(ValueError, match="exclusion band"):
        locate_ep3(0.49)


def test_classify_regular_point():
    cls = classify_ep(SystemParams(1.0, 0.0, 1.0, 0.0))
    assert cls.kind == "none"
    assert cls.order == 0


def test_classify_ep2():
    cls = classify_ep(SystemParams(1.0, 0.0, 4.0, 0.0))
    assert cls.kind == "ep2"
    assert cls.order == 2
    assert cls.e_star == pytest.approx(-1j, abs=1e-5)
    assert len(cls.pair) == 2


def test_classify_ep3():
    g = np.sqrt(13.5)
    cls = classify_ep(SystemParams(1.0, 1.0 / np.sqrt(8.0), g, 0.0))
    assert cls.kind == "ep3"
    assert cls.order == 3
    assert cls.e_star == pytest.approx(-1j * g / 3.0, abs=1e-3)


def test_jordan_rank_structure_at_ep3():
    """Rank of (L - E* I) is 3 and of its square 2: one Jordan chain of
    length three on top of the zero branch."""
    g = np.sqrt(13.5)
    p = SystemParams(1.0, 1.0 / np.sqrt(8.0), g, 0.0)
    mat = liouvillian(p)
    shifted = mat - (-1j * g / 3.0) * np.eye(4)
    thresh = 1e-6 * np.linalg.norm(mat, 2)
    r1 = int(np.sum(np.linalg.svd(shifted, compute_uv=False) > thresh))
    r2 = int(np.sum(np.linalg.svd(shifted @ shifted, compute_uv=False) > thresh))
    assert (r1, r2) == (3, 2)


def test_phase_of_dichotomy():
    assert phase_of(SystemParams(1.0, 0.0, 1.0, 0.0)) == "exact"
    assert phase_of(SystemParams(1.0, 0.0, 6.0, 0.0)) == "broken"
    assert phase_of(SystemParams(1.0, 0.0, 4.0, 0.0)) == "at_ep"
    with pytest.raises(ValueError, match="zero-detuning"):
        phase_of(SystemParams(1.0, 0.3, 1.0, 0.0))


def test_trace_exceptional_lines_topology():
    lines = trace_exceptional_lines(0.0, resolution=120)
    assert len(lines) == 3
    cell = max(2.0 / 119, 4.0 / 119)
    ep3s = np.array([[-1.0 / np.sqrt(8.0), np.sqrt(13.5)],
                     [1.0 / np.sqrt(8.0), np.sqrt(13.5)]])
    for target in ep3s:
        n_meet = 0
        for ln in lines:
            ends = [ln.points[0], ln.points[-1]]
            if min(np.linalg.norm(e - target) for e in ends) <= cell:
                n_meet += 1
        assert n_meet >= 2
    # interior points sit on the discriminant zero set
    for ln in lines:
        mid = ln.points[len(ln.points) // 2]
        p = SystemParams(1.0, float(mid[0]), float(mid[1]), 0.0)
        roots = eigenvalues_closed_form(p).values[:3]
        gaps = sorted(abs(roots[i] - roots[j])
                      for i in range(3) for j in range(i + 1, 3))
        assert gaps[0] < 0.05


def test_trace_empty_window():
    lines = trace_exceptional_lines(0.0, delta_range=(0.6, 1.0),
                                    gamma_range=(0.2, 1.0), resolution=40)
    assert lines == []


def test_ep_trajectory_exclusion_band():
    recs = ep_trajectory_vs_alpha("ep2", [0.0, 0.3, 0.5, 0.7])
    by_alpha = {r.alpha: r for r in recs}
    assert by_alpha[0.5].status == "excluded"
    assert by_alpha[0.5].candidate is None
    for a in (0.0, 0.3, 0.7):
        assert by_alpha[a].status == "ok"
        assert by_alpha[a].candidate.params.gamma == pytest.approx(
            4.0 / abs(1.0 - 2.0 * a), rel=1e-6)


def test_ep_trajectory_ep3_positive_branch():
    recs = ep_trajectory_vs_alpha("ep3", [0.0, 0.2])
    for r in recs:
        assert r.status == "ok"
        assert r.candidate.params.delta == pytest.approx(1.0 / np.sqrt(8.0),
                                                         abs=1e-8)
