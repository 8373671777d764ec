#!/usr/bin/env python3
"""Nonrelativistic-limit sweep for the constant-field charged particle.

For each c the worldline is integrated from rest and compared with the
Newtonian parabola x = E0 t^2 / 2; the error should shrink like 1/c^2.
"""

import argparse

import numpy as np

import contactflow as cf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--field", type=float, default=0.5, help="field strength E0")
    ap.add_argument("--cs", type=float, nargs="+", default=[10.0, 20.0, 40.0, 80.0])
    ap.add_argument("--tau-max", type=float, default=0.6)
    args = ap.parse_args()

    errs = []
    print(f"{'c':>8}  {'max |x - E0 t^2/2| (t <= 1)':>28}")
    for c in args.cs:
        sc = cf.builtin("relativistic", field_strength=args.field, c=c)
        strip = cf.propagate(sc.surface, sc.initial_states[0], (0.0, args.tau_max),
                             cf.IntegratorConfig(n_out=601))
        t, x = strip.x[:, 0], strip.x[:, 1]
        mask = t <= 1.0
        err = float(np.max(np.abs(x[mask] - 0.5 * args.field * t[mask] ** 2)))
        errs.append(err)
        print(f"{c:8.1f}  {err:28.6e}")

    order = -float(np.polyfit(np.log(args.cs), np.log(errs), 1)[0])
    print(f"\nobserved order in 1/c: {order:.3f} (expected 2)")


if __name__ == "__main__":
    main()
