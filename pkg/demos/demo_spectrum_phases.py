"""Sweep the damping strength through the critical point at alpha = 0.

The resonantly driven qubit with pure dephasing has two spectral
phases. Below gamma* = 4 Omega the three nonzero Liouvillian
eigenvalues form a conjugate pair plus one purely damped mode
(underdamped, oscillating relaxation). Above gamma* all three are
purely damped. The two phases meet at a second-order exceptional
point where eigenvalues and eigenvectors coalesce simultaneously.
"""

import numpy as np

from liouvep import (
    SystemParams,
    eigenvalues_closed_form,
    phase_of,
    locate_ep2,
    classify_ep,
)


def main():
    print("Liouvillian spectrum vs damping at alpha = 0, delta = 0")
    print(f"{'gamma/Omega':>12} {'phase':>8}   nonzero eigenvalues E/Omega")
    print("-" * 76)
    for g in (1.0, 2.0, 3.0, 3.9, 4.0, 4.1, 5.0, 6.0):
        p = SystemParams(omega=1.0, delta=0.0, gamma=g, alpha=0.0)
        triple = eigenvalues_closed_form(p).values[:3]
        phase = phase_of(p)
        parts = "  ".join(f"{e.real:+.3f}{e.imag:+.3f}j" for e in triple)
        print(f"{g:12.2f} {phase:>8}   {parts}")

    print()
    cand = locate_ep2(0.0)
    print(f"located critical point: gamma*/Omega = {cand.params.gamma:.12f}")
    print(f"certified order:        {cand.order}")
    print(f"coalesced eigenvalue:   E*/Omega = {cand.e_star:.6f}")

    cls = classify_ep(SystemParams(1.0, 0.0, 4.0, 0.0))
    print(f"classification at gamma = 4: kind={cls.kind}, "
          f"pair={cls.pair}")

    checks = [
        abs(cand.params.gamma - 4.0) < 1e-9,
        cand.order == 2,
        phase_of(SystemParams(1.0, 0.0, 2.0, 0.0)) == "exact",
        phase_of(SystemParams(1.0, 0.0, 6.0, 0.0)) == "broken",
        cls.kind == "ep2",
    ]
    print()
    if all(checks):
        print("PASS: phase boundary sits at gamma* = 4 Omega with a "
              "certified EP2")
        return 0
    print(f"FAIL: checks = {checks}")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
