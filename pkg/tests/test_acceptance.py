"""Acceptance suite: ten end-to-end checks with stated tolerances.

Each test prints one line, ACCEPTANCE nn <label>: PASS/FAIL, and
enforces both the numerical tolerance and the runtime budget. The file
also runs standalone: python3 tests/test_acceptance.py
"""

import json
import sys
import time

import numpy as np

from liouvep import (
    SystemParams,
    liouvillian,
    alpha_decomposition,
    commutator_norm,
    lindblad_rhs,
    eigenvalues_closed_form,
    cubic_discriminant,
    signed_discriminant,
    locate_ep2,
    locate_ep3,
    trace_exceptional_lines,
    evolve_master,
    mc_trajectories,
    observable_series,
    default_step,
    vectorize,
    tomography,
    extract_eigenvalues,
)
from liouvep.cli import main as cli_main
from conftest import random_density_matrix

ALPHAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0)
GROUND = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def _report(num, label, ok, elapsed, budget, detail=""):
    verdict = "PASS" if ok and elapsed < budget else "FAIL"
    extra = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {num:02d} {label}: {verdict} "
          f"[{elapsed:.2f} s / budget {budget:.0f} s]{extra}")
    assert ok, f"criterion {num} failed: {detail}"
    assert elapsed < budget, f"criterion {num} overran: {elapsed:.1f} s"


def test_01_closed_form_alpha_half():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        om = float(rng.uniform(0.5, 5.0))
        de = float(rng.uniform(-3.0, 3.0))
        g = float(rng.uniform(0.05, 10.0))
        p = SystemParams(om, de, g, 0.5)
        rabi = np.sqrt(de**2 + om**2)
        expect = [0.0, -0.5j * g, rabi - 0.5j * g, -rabi - 0.5j * g]
        got = eigenvalues_closed_form(p).values
        err = max(min(abs(got - e)) for e in expect) / om
        worst = max(worst, err)
    _report(1, "closed form at alpha=1/2", worst < 1e-9,
            time.perf_counter() - t0, 1.0, f"worst {worst:.2e} of 1e-9")


def test_02_ep2_locus():
    t0 = time.perf_counter()
    worst = 0.0
    for a in ALPHAS:
        cand = locate_ep2(a)
        err = abs(cand.params.gamma - 4.0 / abs(1.0 - 2.0 * a))
        worst = max(worst, err)
    _report(2, "EP2 locus gamma*=4/|1-2a|", worst < 1e-5,
            time.perf_counter() - t0, 5.0, f"worst {worst:.2e} of 1e-5")


def test_03_ep3_locus():
    t0 = time.perf_counter()
    worst_d = worst_g = 0.0
    for a in ALPHAS:
        for cand in locate_ep3(a):
            worst_d = max(worst_d, abs(abs(cand.params.delta) - 1.0 / np.sqrt(8.0)))
            worst_g = max(worst_g, abs(cand.params.gamma * abs(1.0 - 2.0 * a)
                                       - np.sqrt(13.5)))
    ok = worst_d < 1e-5 and worst_g < 1e-5
    _report(3, "EP3 locus (1/sqrt8, sqrt13.5)", ok,
            time.perf_counter() - t0, 10.0,
            f"worst delta {worst_d:.2e}, scaled gamma {worst_g:.2e} of 1e-5")


def test_04_jordan_rank_certification():
    t0 = time.perf_counter()
    g = np.sqrt(13.5)
    p = SystemParams(1.0, 1.0 / np.sqrt(8.0), g, 0.0)
    mat = liouvillian(p)
    shifted = mat - (-1j * g / 3.0) * np.eye(4)
    thresh = 1e-6 * np.linalg.norm(mat, 2)
    r1 = int(np.sum(np.linalg.svd(shifted, compute_uv=False) > thresh))
    r2 = int(np.sum(np.linalg.svd(shifted @ shifted, compute_uv=False) > thresh))
    _report(4, "Jordan ranks 3 and 2 at the EP3", (r1, r2) == (3, 2),
            time.perf_counter() - t0, 1.0, f"ranks ({r1}, {r2})")


def test_05_no_finite_ep_at_alpha_half():
    t0 = time.perf_counter()
    gammas = np.linspace(0.0, 200.0, 4001)
    lowest = np.inf
    for de in (0.0, 1.0 / np.sqrt(8.0)):
        for g in gammas:
            val = abs(cubic_discriminant(SystemParams(1.0, de, float(g), 0.5)))
            lowest = min(lowest, val)
    # contrast: away from alpha = 1/2 the discriminant does vanish
    gstar = locate_ep2(0.4).params.gamma
    at_ep = abs(signed_discriminant(SystemParams(1.0, 0.0, gstar, 0.4)))
    ok = lowest > 1e-3 and at_ep < 1e-3
    _report(5, "alpha=1/2 discriminant floor", ok,
            time.perf_counter() - t0, 5.0,
            f"min {lowest:.3f} over gamma<=200; {at_ep:.1e} at the alpha=0.4 EP")


def test_06_exceptional_line_topology():
    t0 = time.perf_counter()
    lines = trace_exceptional_lines(0.0, resolution=200)
    cell = max(2.0 / 199.0, 4.0 / 199.0)
    ep3s = np.array([[-1.0 / np.sqrt(8.0), np.sqrt(13.5)],
                     [1.0 / np.sqrt(8.0), np.sqrt(13.5)]])
    meets = []
    for target in ep3s:
        n = 0
        for ln in lines:
            ends = (ln.points[0], ln.points[-1])
            if min(np.linalg.norm(e - target) for e in ends) <= cell:
                n += 1
        meets.append(n)
    ok = len(lines) == 3 and all(n >= 2 for n in meets)
    _report(6, "three lines joined at both EP3s", ok,
            time.perf_counter() - t0, 60.0,
            f"{len(lines)} lines, junction counts {meets}")


def test_07_monte_carlo_vs_master():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2026)
    times = np.linspace(0.0, 6.0, 25)
    n_hit = n_tot = 0
    for k in range(20):
        p = SystemParams(1.0,
                         float(rng.uniform(-2.0, 2.0)),
                         float(rng.uniform(0.3, 4.0)),
                         float(rng.uniform(0.0, 1.0)))
        mc = mc_trajectories(p, GROUND, times, 10000, master_seed=k)
        ref = observable_series(evolve_master(p, GROUND, times), "pop_e")[0]
        pe, err = mc.obs["pop_e"]
        dev = np.abs(pe - ref)
        n_hit += int(np.sum(dev <= 4.0 * err + 1e-12))
        n_tot += len(times)
    frac = n_hit / n_tot
    _report(7, "MC within 4 sigma of master", frac >= 0.95,
            time.perf_counter() - t0, 120.0,
            f"{n_hit}/{n_tot} grid points, {100*frac:.1f}%")


def test_08_extraction_noiseless_and_coverage():
    t0 = time.perf_counter()
    delta = 1.0 / np.sqrt(8.0)
    times = np.linspace(0.0, 6.0, 160)

    # noiseless single sigma_z record, away from the EPs
    worst = 0.0
    for g in (0.5, 1.0, 2.0, 3.0, 4.5, 5.0):
        p = SystemParams(1.0, delta, g, 0.0)
        exact = eigenvalues_closed_form(p).values[:3]
        sz = observable_series(evolve_master(p, GROUND, times), "sigma_z")[0]
        est = extract_eigenvalues(times, sz)
        worst = max(worst, max(min(abs(e - ee) for ee in est.energies)
                               for e in exact))

    # 14,000-shot tomography noise: 3 sigma coverage over 100 seeds
    p = SystemParams(1.0, delta, 2.0, 0.0)
    exact = eigenvalues_closed_form(p).values[:3]
    traj = evolve_master(p, GROUND, times)
    stack = np.vstack([observable_series(traj, nm)[0]
                       for nm in ("sigma_x", "sigma_y", "sigma_z")])
    n_shots = 14000
    covered = 0
    for sd in range(100):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=123, spawn_key=(sd,)))
        noisy = np.empty_like(stack)
        errs = np.empty_like(stack)
        for i, s in enumerate(stack):
            prob = np.clip((1.0 + s) / 2.0, 0.0, 1.0)
            phat = rng.binomial(n_shots, prob) / n_shots
            noisy[i] = 2.0 * phat - 1.0
            errs[i] = 2.0 * np.sqrt(
                np.maximum(phat * (1.0 - phat), 0.25 / n_shots) / n_shots)
        est = extract_eigenvalues(times, noisy, stderr=errs)
        ok = True
        used = set()
        for e in exact:
            cand = sorted((abs(e - est.energies[j]), j)
                          for j in range(len(est.energies)) if j not in used)
            if not cand:
                ok = False
                break
            _, j = cand[0]
            used.add(j)
            ok = ok and (abs(e.real - est.energies[j].real)
                         <= 3.0 * est.stderr_re[j] + 1e-12)
            ok = ok and (abs(e.imag - est.energies[j].imag)
                         <= 3.0 * est.stderr_im[j] + 1e-12)
        covered += int(ok)
    ok = worst < 1e-3 and covered >= 95
    _report(8, "pencil extraction and 3-sigma coverage", ok,
            time.perf_counter() - t0, 300.0,
            f"noiseless worst {worst:.1e} of 1e-3; covered {covered}/100")


def test_09_figure_panel_degeneracy_pattern(tmp_path):
    t0 = time.perf_counter()
    gstar = np.sqrt(13.5)
    cfg = tmp_path / "panel.json"
    cfg.write_text(json.dumps({
        "alphas": [0.0],
        "gammas_over_omega": [2.0, 3.0, gstar, 4.2, 5.0],
        "delta_over_omega": 1.0 / np.sqrt(8.0),
        "n_shots": 14000,
        "n_times": 160,
    }))
    out = tmp_path / "panel.csv"
    rc = cli_main(["expsim", "--config", str(cfg), "--seed", "7",
                   "--out", str(out)])
    assert rc == 0
    rows = [l.split(",") for l in out.read_text().splitlines()
            if not l.startswith("#")]
    hdr = rows[0]
    im = {}
    for r in rows[1:]:
        d = dict(zip(hdr, r))
        key = round(float(d["gamma_over_omega"]), 6)
        im.setdefault(key, {})[int(d["branch"])] = float(d["im_E"])
    checks = []
    for g, br in sorted(im.items()):
        d12 = abs(br[1] - br[2])
        d13 = abs(br[1] - br[3])
        spread = max(br.values()) - min(br.values())
        if g < gstar - 0.2:          # exact-like: E1 and E3 share Im
            checks.append(d13 < 0.05 and d12 > 3.0 * d13)
        elif g > gstar + 0.2:        # broken-like: E1 pairs with E2
            checks.append(d12 < d13)
        else:                        # the triple merge at gamma*
            checks.append(spread < 0.6)
    _report(9, "Im-degeneracy pattern across the EP3", all(checks),
            time.perf_counter() - t0, 600.0,
            f"pattern flags {checks}")


def test_10_property_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(110)
    ok = True
    notes = []

    # trace and Hermiticity preservation of the generator
    for _ in range(50):
        p = SystemParams(1.0, float(rng.uniform(-2, 2)),
                         float(rng.uniform(0, 6)), float(rng.uniform(0, 1)))
        rho = random_density_matrix(rng)
        dot = lindblad_rhs(p, rho)
        ok &= abs(np.trace(dot)) < 1e-12 * max(1.0, p.gamma)
        ok &= np.max(np.abs(dot - dot.conj().T)) < 1e-12 * max(1.0, p.gamma)
    notes.append("trace/herm")

    # alpha-decomposition linearity
    for _ in range(30):
        p = SystemParams(1.0, float(rng.uniform(-2, 2)),
                         float(rng.uniform(0, 6)), float(rng.uniform(0, 1)))
        l_phi, l_dec, err = alpha_decomposition(p)
        recon = (1.0 - p.alpha) * l_phi + p.alpha * l_dec
        ok &= np.max(np.abs(recon - liouvillian(p))) < 1e-12 * max(1.0, p.gamma)
    notes.append("alpha linearity")

    # non-commutativity of the two dissipation channels
    for _ in range(20):
        p = SystemParams(1.0, float(rng.uniform(-2, 2)),
                         float(rng.uniform(0.1, 6)), 0.5)
        l_phi, l_dec, _ = alpha_decomposition(p)
        ok &= commutator_norm(l_dec, l_phi) > 0.0
    notes.append("non-commutativity")

    # tomography round trip without shot noise
    for _ in range(30):
        rho = random_density_matrix(rng)
        tomo = tomography(rho)
        ok &= np.max(np.abs(tomo.state.projected - rho)) < 1e-10
    notes.append("tomography")

    # RK4 order: halving the step cuts the error by 12 to 20
    from scipy.linalg import expm

    p = SystemParams(1.0, 0.5, 2.0, 0.3)
    t_end = 3.0
    ref_v = expm(-1j * liouvillian(p) * t_end) @ vectorize(GROUND)
    ref = np.array([[ref_v[0], ref_v[1]], [ref_v[2], ref_v[3]]])
    h0 = default_step(p)
    errs = []
    for h in (h0, h0 / 2.0):
        end = evolve_master(p, GROUND, np.array([0.0, t_end]), dt=h).rhos[-1]
        errs.append(np.max(np.abs(end - ref)))
    factor = errs[0] / errs[1]
    ok &= 12.0 < factor < 20.0
    notes.append(f"RK4 factor {factor:.1f}")

    _report(10, "property suites", bool(ok),
            time.perf_counter() - t0, 60.0, ", ".join(notes))


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-v", "-s"]))
