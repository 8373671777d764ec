"""Legendre lifts of initial hypersurfaces and front propagation.

An initial front is a parametrized hypersurface in the M axes with an
initial action value; each sample is lifted to an on-shell characteristic
state (momentum conormal to the front, scaled onto the chosen branch of
{G = 0}) and propagated.  Caustics are detected as sign changes of the
finite-difference Jacobian of the projected front map (u, tau) -> x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .charts import Chart
from .errors import ContractViolation, NoLiftError
from .strips import (BatchItem, CharacteristicState, IntegratorConfig, Strip,
                     SymbolSurface, batch_propagate)

#: |det| below this counts as zero when scanning for caustic sign flips
CAUSTIC_DET_TOL = 1e-9


class FrontSpec:
    """Parametrized initial hypersurface: u -> x(u) in M with initial action S0(u).

    ``params`` is a 1D grid of front parameters (only codimension-1 fronts
    with a single parameter are supported; the chart may have dim 2 or 3
    with the remaining tangent direction supplied by ``extra_tangents``).
    """

    def __init__(self, chart: Chart, position: Callable, params: np.ndarray,
                 s0: Callable | None = None, tangent: Callable | None = None,
                 s0_du: Callable | None = None, closed: bool = False):
        self.chart = chart
        self.position = position
        self.params = np.asarray(params, float)
        self.s0 = s0 or (lambda u: 0.0)
        self._tangent = tangent
        self._s0_du = s0_du
        self.closed = closed

    def x(self, u) -> np.ndarray:
        return np.asarray(self.position(u), float)

    def tangent(self, u, h: float = 1e-6) -> np.ndarray:
        if self._tangent is not None:
            return np.asarray(self._tangent(u), float)
        return (self.x(u + h) - self.x(u - h)) / (2 * h)

    def s0_du(self, u, h: float = 1e-6) -> float:
        if self._s0_du is not None:
            return float(self._s0_du(u))
        return (float(self.s0(u + h)) - float(self.s0(u - h))) / (2 * h)


def flat_front(chart: Chart, axis: str, value: float, span, n: int,
               s0: Callable | None = None) -> FrontSpec:
    """Hyperplane {axis = value} parametrized by the remaining axis."""
    i_fixed = chart.axis_index(axis)
    if chart.dim != 2:
        raise ContractViolation("flat_front currently supports 2D charts")
    i_free = 1 - i_fixed

    def pos(u):
        x = np.zeros(chart.dim)
        x[i_fixed] = value
        x[i_free] = u
        return x

    params = np.linspace(span[0], span[1], n)
    return FrontSpec(chart, pos, params, s0=s0)


def circle_front(chart: Chart, radius: float, n: int, center=(0.0, 0.0)) -> FrontSpec:
    if chart.dim != 2:
        raise ContractViolation("circle_front needs a 2D chart")
    cx, cy = center

    def pos(u):
        return np.array([cx + radius * math.cos(u), cy + radius * math.sin(u)])

    params = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return FrontSpec(chart, pos, params, closed=True)


@dataclass
class LiftedSample:
    u: float
    state: CharacteristicState
    conormal: np.ndarray


def legendre_lift(E: SymbolSurface, sigma: FrontSpec, branch: tuple[int, int] = (1, 0),
                  scan_radius: float = 20.0) -> list[LiftedSample]:
    """Lift each front sample to an on-shell state.

    The momentum must annihilate the front tangent in the contact sense
    (<p, x_u> = p_s dS0/du); the remaining conormal scale is fixed by root
    finding G = 0 along the conormal ray.  ``branch`` is (sign of p_s,
    root index among the ascending roots).
    """
    ps_sign, root_idx = branch
    if ps_sign not in (1, -1):
        raise ContractViolation("branch p_s sign must be +1 or -1 (null lifts unsupported)")
    samples: list[LiftedSample] = []
    failures: list[tuple[float, str]] = []
    for u in sigma.params:
        x = sigma.x(u)
        t = sigma.tangent(u)
        nt = np.linalg.norm(t)
        if nt == 0.0:
            failures.append((u, "degenerate parametrization (zero tangent)"))
            continue
        # particular solution of <p, x_u> = p_s * dS0/du plus the conormal ray
        rhs = ps_sign * sigma.s0_du(u)
        p_part = (rhs / nt**2) * t
        nrm = _conormal(t)

        def g(lam, x=x, p_part=p_part, nrm=nrm):
            return E.value(x, p_part + lam * nrm, float(ps_sign))

        roots = _scan_roots(g, scan_radius)
        if root_idx >= len(roots):
            failures.append((u, f"no on-shell root (found {len(roots)}, wanted index {root_idx})"))
            continue
        p = p_part + roots[root_idx] * nrm
        state = CharacteristicState(x, float(sigma.s0(u)), p, float(ps_sign))
        samples.append(LiftedSample(float(u), state, nrm))
    if not samples:
        raise NoLiftError(f"no front sample admitted a lift: {failures[:3]}")
    if failures:
        # partial failure is per-sample data, not fatal
        for u, msg in failures:
            samples.append(LiftedSample(float(u), None, np.empty(0)))  # type: ignore[arg-type]
    return [s for s in samples if s.state is not None]


def _conormal(t: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to the tangent (2D fronts)."""
    if len(t) != 2:
        raise ContractViolation("conormal construction implemented for 2D charts")
    n = np.array([-t[1], t[0]])
    return n / np.linalg.norm(n)


def _scan_roots(g, radius: float, n_grid: int = 801) -> list[float]:
    lams = np.linspace(-radius, radius, n_grid)
    vals = np.array([g(l) for l in lams])
    roots = []
    for a, b, fa, fb in zip(lams[:-1], lams[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(float(brentq(g, a, b, xtol=1e-14)))
    if vals[-1] == 0.0:
        roots.append(float(lams[-1]))
    return sorted(roots)


@dataclass
class CausticEvent:
    u_index: int
    tau_lo: float
    tau_hi: float


@dataclass
class FrontHistory:
    """Propagated front: arrays indexed (u, tau)."""

    surface: SymbolSurface
    params: np.ndarray           # (nu,)
    taus: np.ndarray             # (nt,)
    x: np.ndarray                # (nu, nt, m)
    s: np.ndarray                # (nu, nt)
    p: np.ndarray                # (nu, nt, m)
    p_s: np.ndarray              # (nu, nt)
    jacobian_det: np.ndarray     # (nu, nt)
    caustics: list[CausticEvent]
    closed: bool = False

    def first_caustic_tau(self) -> float | None:
        if not self.caustics:
            return None
        return min(ev.tau_lo for ev in self.caustics)

    def contact_residual(self) -> float:
        """Max |<p, dx/du> - p_s ds/du| over the interior grid (Legendre condition)."""
        worst = 0.0
        nu = len(self.params)
        rng = range(nu) if self.closed else range(1, nu - 1)
        for j in range(len(self.taus)):
            for i in rng:
                ip, im = (i + 1) % nu, (i - 1) % nu
                du = _param_gap(self.params, i, self.closed)
                dx = (self.x[ip, j] - self.x[im, j]) / du
                ds = (self.s[ip, j] - self.s[im, j]) / du
                res = abs(np.dot(self.p[i, j], dx) - self.p_s[i, j] * ds)
                scale = max(np.linalg.norm(self.p[i, j]) * np.linalg.norm(dx), 1.0)
                worst = max(worst, res / scale)
        return worst


def _param_gap(params, i, closed):
    n = len(params)
    if closed:
        span = params[-1] - params[0] + (params[1] - params[0])
        return 2.0 * span / n
    return params[(i + 1) % n] - params[(i - 1) % n]


def propagate_front(E: SymbolSurface, lift: Sequence[LiftedSample], taus,
                    integ: IntegratorConfig | None = None,
                    closed: bool = False) -> FrontHistory:
    """Propagate every lifted sample and track the projection Jacobian.

    The Jacobian column along tau uses the exact strip velocity; the columns
    along u use centered differences across neighbouring samples.  A caustic
    event is recorded wherever the determinant changes sign between
    consecutive tau samples.
    """
    if not lift:
        raise ContractViolation("empty lift")
    taus = np.asarray(taus, float)
    inits = [ls.state for ls in lift]
    results = batch_propagate(E, inits, (taus[0], taus[-1]), integ, tau_eval=taus)
    bad = [i for i, r in enumerate(results) if not r.ok or len(r.strip.taus) != len(taus)]
    if bad:
        raise ContractViolation(
            f"{len(bad)} front samples failed to propagate over the full grid "
            f"(first failure at u index {bad[0]})")
    nu, nt, m = len(lift), len(taus), E.dim
    X = np.empty((nu, nt, m)); S = np.empty((nu, nt))
    P = np.empty((nu, nt, m)); PS = np.empty((nu, nt))
    for i, r in enumerate(results):
        X[i] = r.strip.x; S[i] = r.strip.s; P[i] = r.strip.p; PS[i] = r.strip.p_s

    params = np.array([ls.u for ls in lift])
    J = np.zeros((nu, nt))
    for j in range(nt):
        for i in range(nu):
            if not closed and (i == 0 or i == nu - 1):
                J[i, j] = np.nan
                continue
            ip, im = (i + 1) % nu, (i - 1) % nu
            du = _param_gap(params, i, closed)
            col_u = (X[ip, j] - X[im, j]) / du
            _, gp, _ = E.gradient(X[i, j], P[i, j], PS[i, j])
            cols = np.column_stack([col_u, gp]) if m == 2 else None
            if cols is None:
                raise ContractViolation("jacobian tracking implemented for 2D charts")
            J[i, j] = np.linalg.det(cols)

    events: list[CausticEvent] = []
    for i in range(nu):
        # compare consecutive *significant* signs so a grid point landing
        # exactly on det = 0 still registers as one flip
        last_sign, last_j = 0, -1
        for j in range(nt):
            d = J[i, j]
            if np.isnan(d) or abs(d) <= CAUSTIC_DET_TOL * _det_scale(J[i]):
                continue
            sign = 1 if d > 0 else -1
            if last_sign and sign != last_sign:
                events.append(CausticEvent(i, float(taus[last_j]), float(taus[j])))
            last_sign, last_j = sign, j
    return FrontHistory(E, params, taus, X, S, P, PS, J, events, closed=closed)


def _det_scale(row: np.ndarray) -> float:
    finite = row[~np.isnan(row)]
    return float(np.max(np.abs(finite))) if finite.size else 1.0


@dataclass
class ActionSlice:
    tau: float
    x: np.ndarray        # (nu, m) projected positions
    s: np.ndarray        # (nu,) accumulated action
    branch: np.ndarray   # (nu,) integer branch tag (constant-sign Jacobian runs)


def front_action_function(history: FrontHistory) -> list[ActionSlice]:
    """Per-tau-slice sampled action S(x): (projected position, s) pairs.

    Pre-caustic slices carry a single branch tag; after a caustic the samples
    are tagged by runs of constant Jacobian sign instead of failing.
    """
    slices = []
    for j, tau in enumerate(history.taus):
        det = history.jacobian_det[:, j]
        branch = np.zeros(len(det), dtype=int)
        tag = 0
        prev = 0.0
        for i, d in enumerate(det):
            sign = 0.0 if (np.isnan(d) or abs(d) <= CAUSTIC_DET_TOL) else np.sign(d)
            if i > 0 and sign != 0.0 and prev != 0.0 and sign != prev:
                tag += 1
            if sign != 0.0:
                prev = sign
            branch[i] = tag
        slices.append(ActionSlice(float(tau), history.x[:, j, :].copy(),
                                  history.s[:, j].copy(), branch))
    return slices
