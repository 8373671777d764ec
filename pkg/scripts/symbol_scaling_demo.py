#!/usr/bin/env python3
"""Oscillatory scaling of the Schrödinger-type operator.

Conjugating D by e^{i lam g} gives an exact polynomial in lam; the leading
coefficient reproduces the principal symbol at dg and the residual order
drops by one when g solves the characteristic (Hamilton-Jacobi) equation.
"""

import numpy as np

import contactflow as cf


def main():
    ch = cf.Chart(["t", "x", "s"], [(-10.0, 10.0)] * 3)
    D = cf.schrodinger_operator(ch, mass=1.0, V=0.0)
    lams = np.logspace(0.0, 2.5, 12)

    g = cf.poly_phase(ch, {(2, 0, 0): 0.1, (0, 2, 0): 0.25, (1, 1, 0): 0.2},
                      s_weight=1.0)
    rep = cf.symbol_scaling_check(D, g, lams, [0.4, -0.3, 0.0])
    print(f"degree {rep.degree}; leading coeff {rep.leading_coeff:.6f} "
          f"vs symbol {rep.symbol_value:.6f} (rel err {rep.leading_rel_error:.1e})")
    print(f"residual order {rep.fitted_exponent:.3f} (expected {rep.degree - 1})")

    # point-source action S = x^2 / (2t) solves S_t + S_x^2/2 = 0
    ts = np.linspace(0.95, 1.05, 9)
    xs = np.linspace(0.45, 0.55, 9)
    pts = np.array([[t, x] for t in ts for x in xs])
    vals = pts[:, 1] ** 2 / (2.0 * pts[:, 0])
    hj = cf.fit_quadratic_phase(ch, pts, vals, center=[1.0, 0.5], radius=0.05)
    probes = [[1.0, 0.5, 0.0], [1.01, 0.49, 0.1], [0.99, 0.51, -0.2]]
    lams_e = np.logspace(np.log10(2.0), np.log10(200.0), 12)
    generic = cf.poly_phase(ch, {(0, 2, 0): 0.3, (1, 0, 0): 0.2}, s_weight=1.0)
    print(f"eikonal residual order: {cf.eikonal_residual(D, hj, lams_e, probes):.3f} "
          f"(characteristic phase) vs "
          f"{cf.eikonal_residual(D, generic, lams_e, probes):.3f} (generic)")


if __name__ == "__main__":
    main()
