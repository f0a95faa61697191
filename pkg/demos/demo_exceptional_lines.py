"""Trace the exceptional lines of the pure-dephasing qubit.

Over the (detuning, damping) plane the eigenvalue coalescences form
one-dimensional lines. For alpha = 0 in the window delta/Omega in
[-1, 1], gamma/Omega in [2, 6] there are exactly three: a low arc
connecting the two third-order points, and two flanks running from
each EP3 up to the window edge. The EP3s are the junctions where the
branch pair that coalesces changes identity.
"""

import numpy as np

from liouvep import trace_exceptional_lines, locate_ep3


def main():
    lines = trace_exceptional_lines(0.0, resolution=200)
    lo, hi = locate_ep3(0.0)
    junctions = np.array([
        [lo.params.delta, lo.params.gamma],
        [hi.params.delta, hi.params.gamma],
    ])
    cell = max(2.0 / 199.0, 4.0 / 199.0)

    print(f"traced {len(lines)} exceptional lines at 200 x 200 resolution")
    print(f"EP3 junctions: {junctions[0].round(6)}, {junctions[1].round(6)}")
    print()
    meet = [0, 0]
    for k, ln in enumerate(lines):
        a, b = ln.points[0], ln.points[-1]
        print(f"line {k}: {len(ln.points):4d} points, coalescing pair "
              f"E{ln.pair[0]}-E{ln.pair[1]}")
        print(f"  runs from ({a[0]:+.4f}, {a[1]:.4f}) "
              f"to ({b[0]:+.4f}, {b[1]:.4f})")
        for j, tgt in enumerate(junctions):
            d = min(np.linalg.norm(a - tgt), np.linalg.norm(b - tgt))
            if d <= cell:
                meet[j] += 1
                print(f"  touches junction {j} within {d:.2e}")

    checks = [
        len(lines) == 3,
        meet[0] >= 2,
        meet[1] >= 2,
    ]
    print()
    if all(checks):
        print("PASS: three lines meeting pairwise at the two EP3 junctions")
        return 0
    print(f"FAIL: lines = {len(lines)}, junction counts = {meet}")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
