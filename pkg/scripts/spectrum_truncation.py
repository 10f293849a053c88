"""Bound-level error of hard-wall truncated family lattices versus window size."""
import argparse

import numpy as np

from darboux_lattice import spectrum, synthesize_family

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", default="sinh")
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--omega", type=float, default=0.01)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--sites", type=int, nargs="+", default=[200, 300, 400, 500, 600, 800])
    args = ap.parse_args()
    k = np.arange(1, args.N + 1)
    target = np.sort(np.concatenate([2 * np.cosh(k * args.omega), -2 * np.cosh(k * args.omega)]))
    print("sites,n_bound,max_level_error,max_imag")
    for s in args.sites:
        rep = spectrum(synthesize_family(args.kind, args.N, args.omega, args.alpha, sites=s))
        got = np.sort(rep.bound_levels.real)
        err = np.max(np.abs(got - target)) if len(got) == len(target) else float("nan")
        print(f"{s},{rep.n_bound},{err:.3e},{rep.max_imag:.2e}")
