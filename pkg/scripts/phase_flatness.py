"""How flat is the transmission phase as omega1 shrinks?

For the cosh family with N = 3 prints the phase slope at the carrier
q = pi/2 (what sets the packet delay) and the largest slope over the
default q grid (which sits at the band edges).
"""
import argparse

import numpy as np

from darboux_lattice.darboux import family_levels
from darboux_lattice.scattering import default_q_grid, group_delay, level_phase_slope


def sweep(omegas, N=3, kind="cosh", alpha=0.0):
    q = default_q_grid()
    rows = []
    for w in omegas:
        levels = family_levels(kind, N, w, alpha)
        slope = sum(level_phase_slope(lv.omega, lv.delta, q) for lv in levels)
        rows.append((w, group_delay(levels, np.pi / 2).dphi_dq, float(np.max(np.abs(slope)))))
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omegas", type=float, nargs="+", default=[0.6, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01])
    ap.add_argument("--N", type=int, default=3)
    args = ap.parse_args()
    print("omega1,slope_at_pi_over_2,max_abs_slope_on_grid")
    for w, c, m in sweep(args.omegas, args.N):
        print(f"{w:g},{c:.6g},{m:.6g}")
