"""The equation hypersurface and its characteristic strips.

A scenario is described by a momentum-homogeneous scalar G(x, p, p_s) on the
slit cotangent space of the bundle total space U = M x fiber.  G never
depends on the fiber coordinate s (fiber invariance), so the fiber momentum
p_s is an exact constant of motion.  The zero set {G = 0} is the fundamental
object; its characteristic strips are integrated here.

Strip equations (coordinates x, fiber s, momenta p, p_s; tau the strip
parameter):

    dx/dtau  = dG/dp
    ds/dtau  = -dG/dp_s
    dp/dtau  = -dG/dx
    dp_s/dtau = 0

With this orientation the fiber coordinate accumulates the action: on shell,
momentum homogeneity gives p . dx/dtau = p_s ds/dtau, so in the p_s = 1 gauge
s grows by the Lagrangian integral along the projected extremal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .charts import Chart, fd_steps
from .errors import ContractViolation, DegeneracyError

#: strips with |p_s| below this are treated as the lightlike class
PS_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Fiber:
    """Fiber group of the bundle: the real line or a circle of given period."""

    group: str = "line"  # "line" | "circle"
    period: float = 2.0 * math.pi

    def __post_init__(self):
        if self.group not in ("line", "circle"):
            raise ContractViolation(f"unknown fiber group {self.group!r}")
        if self.group == "circle" and not self.period > 0:
            raise ContractViolation("circle fiber needs a positive period")

    def reduce(self, s: float) -> float:
        if self.group == "circle":
            return float(s % self.period)
        return float(s)


class SymbolSurface:
    """Zero set of a momentum-homogeneous symbol function over a chart on M.

    value(x, p, p_s) must be positively homogeneous of integer degree
    ``degree`` in (p, p_s) and independent of the fiber coordinate (the
    latter holds by construction: s is not an argument).
    """

    def __init__(self, chart: Chart, value: Callable, degree: int,
                 grad: Callable | None = None, fiber: Fiber = Fiber(),
                 name: str = "", fd_step: float = 1e-6):
        self.chart = chart
        self._value = value
        self._grad = grad
        self.degree = int(degree)
        self.fiber = fiber
        self.name = name
        self.fd_step = fd_step
        if self.degree < 1:
            raise ContractViolation("homogeneity degree must be a positive integer")

    @property
    def dim(self) -> int:
        return self.chart.dim

    def value(self, x, p, p_s: float) -> float:
        return float(self._value(np.asarray(x, float), np.asarray(p, float), float(p_s)))

    def gradient(self, x, p, p_s: float):
        """Return (dG/dx, dG/dp, dG/dp_s)."""
        x = np.asarray(x, float)
        p = np.asarray(p, float)
        if self._grad is not None:
            gx, gp, gps = self._grad(x, p, p_s)
            return np.asarray(gx, float), np.asarray(gp, float), float(gps)
        return self._fd_gradient(x, p, p_s)

    def _fd_gradient(self, x, p, p_s):
        m = self.dim
        gx = np.empty(m)
        gp = np.empty(m)
        hx = fd_steps(x, self.fd_step)
        hp = fd_steps(p, self.fd_step)
        for i in range(m):
            xp = x.copy(); xp[i] += hx[i]
            xm = x.copy(); xm[i] -= hx[i]
            gx[i] = (self.value(xp, p, p_s) - self.value(xm, p, p_s)) / (2 * hx[i])
            pp = p.copy(); pp[i] += hp[i]
            pm = p.copy(); pm[i] -= hp[i]
            gp[i] = (self.value(x, pp, p_s) - self.value(x, pm, p_s)) / (2 * hp[i])
        hs = self.fd_step * max(1.0, abs(p_s))
        gps = (self.value(x, p, p_s + hs) - self.value(x, p, p_s - hs)) / (2 * hs)
        return gx, gp, gps

    def euler_residual(self, x, p, p_s: float) -> float:
        """Euler homogeneity defect <q, dG/dq> - degree * G (should vanish)."""
        _, gp, gps = self.gradient(x, p, p_s)
        return float(np.dot(p, gp) + p_s * gps - self.degree * self.value(x, p, p_s))

    def degeneracy_measure(self, x, p, p_s: float) -> float:
        """Norm of the non-radial part of the momentum gradient.

        Vanishing means the contact hyperplane touches the surface (a point
        the characteristic direction is undefined at).
        """
        _, gp, gps = self.gradient(x, p, p_s)
        q = np.append(np.asarray(p, float), p_s)
        gq = np.append(gp, gps)
        nq = np.linalg.norm(q)
        if nq == 0.0:
            raise ContractViolation("the zero covector is not a contact element")
        radial = (np.dot(gq, q) / nq**2) * q
        return float(np.linalg.norm(gq - radial))

    def degeneracy_threshold(self, p, p_s: float) -> float:
        q = np.append(np.asarray(p, float), p_s)
        return 1e-10 * np.linalg.norm(q) ** (self.degree - 1)

    def is_degenerate(self, x, p, p_s: float) -> bool:
        return self.degeneracy_measure(x, p, p_s) < self.degeneracy_threshold(p, p_s)


@dataclass(frozen=True)
class CharacteristicState:
    """A point of a characteristic strip."""

    x: np.ndarray
    s: float
    p: np.ndarray
    p_s: float
    tau: float = 0.0

    def __init__(self, x, s: float, p, p_s: float, tau: float = 0.0):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        if x.shape != p.shape:
            raise ContractViolation("x and p must have the same length")
        if np.linalg.norm(p) == 0.0 and p_s == 0.0:
            raise ContractViolation("(p, p_s) = 0 is excluded: contact elements are projective")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "s", float(s))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_s", float(p_s))
        object.__setattr__(self, "tau", float(tau))

    def covector(self) -> np.ndarray:
        return np.append(self.p, self.p_s)

    def scaled(self, lam: float) -> "CharacteristicState":
        if lam <= 0:
            raise ContractViolation("contact-element rescaling must be by a positive factor")
        return CharacteristicState(self.x, self.s, lam * self.p, lam * self.p_s, self.tau)

    def normalized(self) -> "CharacteristicState":
        """Gauge-fix the projective scale: p_s -> sign(p_s), else |(p,p_s)| = 1."""
        if abs(self.p_s) > PS_ZERO_TOL:
            return self.scaled(1.0 / abs(self.p_s))
        return self.scaled(1.0 / np.linalg.norm(self.covector()))


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    tol_onshell: float = 1e-8
    method: str = "adaptive"  # "adaptive" | "fixed"
    dt: float = 1e-2          # fixed-step size
    max_step: float = np.inf
    n_out: int = 201


@dataclass
class Strip:
    """A sampled characteristic strip."""

    surface: SymbolSurface
    taus: np.ndarray
    x: np.ndarray        # (n, m)
    s: np.ndarray        # (n,)
    p: np.ndarray        # (n, m)
    p_s: np.ndarray      # (n,)
    g_residual: np.ndarray
    boundary_exit: bool = False

    def __len__(self) -> int:
        return len(self.taus)

    def state(self, i: int) -> CharacteristicState:
        return CharacteristicState(self.x[i], self.s[i], self.p[i], self.p_s[i], self.taus[i])

    def states(self) -> list[CharacteristicState]:
        return [self.state(i) for i in range(len(self))]

    def velocity(self, i: int) -> np.ndarray:
        """Strip velocity (dx/dtau, ds/dtau) at sample i."""
        _, gp, gps = self.surface.gradient(self.x[i], self.p[i], self.p_s[i])
        return np.append(gp, -gps)


def characteristic_field(E: SymbolSurface, state: CharacteristicState) -> np.ndarray:
    """Strip velocity (dx, ds, dp, dp_s)/dtau at an on-shell state."""
    g = E.value(state.x, state.p, state.p_s)
    scale = _onshell_scale(E, state.p, state.p_s)
    if abs(g) > 1e-6 * scale:
        raise ContractViolation(f"state is off-shell: G = {g:.3e}")
    if E.is_degenerate(state.x, state.p, state.p_s):
        raise DegeneracyError(
            f"momentum gradient is radial at x={state.x}, (p,p_s)={state.covector()}",
            state=state)
    gx, gp, gps = E.gradient(state.x, state.p, state.p_s)
    return np.concatenate([gp, [-gps], -gx, [0.0]])


def _onshell_scale(E: SymbolSurface, p, p_s) -> float:
    return max(np.linalg.norm(np.append(p, p_s)) ** E.degree, 1e-300)


def _pack(state: CharacteristicState) -> np.ndarray:
    return np.concatenate([state.x, [state.s], state.p, [state.p_s]])


def _unpack(E: SymbolSurface, y, tau: float) -> CharacteristicState:
    m = E.dim
    return CharacteristicState(y[:m], y[m], y[m + 1:2 * m + 1], y[2 * m + 1], tau)


def _rhs(E: SymbolSurface):
    m = E.dim

    def f(tau, y):
        gx, gp, gps = E.gradient(y[:m], y[m + 1:2 * m + 1], y[2 * m + 1])
        return np.concatenate([gp, [-gps], -gx, [0.0]])

    return f


def _project_onshell(E: SymbolSurface, y, tol: float) -> tuple[np.ndarray, float]:
    """Newton-correct the M-momenta to restore G = 0; p_s and x are held fixed.

    Radial rescaling would only scale a homogeneous G, so the correction acts
    along the p-gradient instead, which leaves the projected characteristic
    unchanged to the order of the defect.
    """
    m = E.dim
    y = y.copy()
    g = E.value(y[:m], y[m + 1:2 * m + 1], y[2 * m + 1])
    for _ in range(4):
        if abs(g) <= 0.5 * tol:
            break
        _, gp, _ = E.gradient(y[:m], y[m + 1:2 * m + 1], y[2 * m + 1])
        n2 = float(np.dot(gp, gp))
        if n2 < 1e-300:
            break
        y[m + 1:2 * m + 1] -= (g / n2) * gp
        g = E.value(y[:m], y[m + 1:2 * m + 1], y[2 * m + 1])
    return y, g


def propagate(E: SymbolSurface, init: CharacteristicState, tau_span,
              integ: IntegratorConfig | None = None,
              tau_eval: Sequence[float] | None = None) -> Strip:
    """Integrate a characteristic strip over tau_span.

    Leaving the chart bounds terminates normally with ``boundary_exit`` set;
    a degenerate (touching) point raises DegeneracyError carrying the last
    good state.
    """
    integ = integ or IntegratorConfig()
    t0, t1 = float(tau_span[0]), float(tau_span[1])
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise ContractViolation("tau_span must be finite")
    g0 = E.value(init.x, init.p, init.p_s)
    if abs(g0) > integ.tol_onshell * max(1.0, _onshell_scale(E, init.p, init.p_s)):
        raise ContractViolation(f"initial state is off-shell: G = {g0:.3e}")
    if not E.chart.contains(init.x):
        raise ContractViolation(f"initial point {init.x} outside chart bounds")
    if E.is_degenerate(init.x, init.p, init.p_s):
        raise DegeneracyError("initial state is a degenerate (touching) point",
                              state=init)

    if t0 == t1:
        y = _pack(init)
        return Strip(E, np.array([t0]), y[None, :E.dim], np.array([init.s]),
                     y[None, E.dim + 1:2 * E.dim + 1], np.array([init.p_s]),
                     np.array([g0]))

    if tau_eval is None:
        tau_eval = np.linspace(t0, t1, integ.n_out)
    else:
        tau_eval = np.asarray(tau_eval, dtype=float)

    if integ.method == "fixed":
        taus, ys, boundary = _integrate_fixed(E, _pack(init), t0, t1, integ.dt)
    elif integ.method == "adaptive":
        taus, ys, boundary = _integrate_adaptive(E, _pack(init), t0, t1, tau_eval, integ)
    else:
        raise ContractViolation(f"unknown integrator method {integ.method!r}")

    m = E.dim
    n = len(taus)
    X = np.empty((n, m)); S = np.empty(n); P = np.empty((n, m)); PS = np.empty(n)
    G = np.empty(n)
    for i in range(n):
        y, g = _project_onshell(E, ys[i], integ.tol_onshell)
        X[i] = y[:m]; S[i] = y[m]; P[i] = y[m + 1:2 * m + 1]; PS[i] = y[2 * m + 1]
        G[i] = g
    return Strip(E, np.asarray(taus), X, S, P, PS, G, boundary_exit=boundary)


def _integrate_adaptive(E, y0, t0, t1, tau_eval, integ):
    def bounds_event(tau, y):
        return E.chart.boundary_clearance(y[:E.dim])

    bounds_event.terminal = True

    def degeneracy_event(tau, y):
        m = E.dim
        p, ps = y[m + 1:2 * m + 1], y[2 * m + 1]
        return E.degeneracy_measure(y[:m], p, ps) - E.degeneracy_threshold(p, ps)

    degeneracy_event.terminal = True

    sol = solve_ivp(_rhs(E), (t0, t1), y0, method="RK45",
                    rtol=integ.rel_tol, atol=integ.abs_tol, max_step=integ.max_step,
                    t_eval=tau_eval, events=[bounds_event, degeneracy_event])
    if not sol.success and sol.status != 1:
        raise DegeneracyError(f"integration failed: {sol.message}",
                              state=_unpack(E, sol.y[:, -1] if sol.y.size else y0,
                                            sol.t[-1] if sol.t.size else t0))
    boundary = False
    taus = list(sol.t)
    ys = list(sol.y.T)
    if sol.status == 1:  # an event fired
        if sol.t_events[1].size:  # degeneracy
            last = (_unpack(E, ys[-1], taus[-1]) if ys
                    else _unpack(E, y0, t0))
            raise DegeneracyError(
                f"degenerate (touching) point reached near tau = {sol.t_events[1][0]:.6g}",
                state=last)
        boundary = True
        taus.append(float(sol.t_events[0][0]))
        ys.append(sol.y_events[0][0])
    if not taus:
        taus = [t0]
        ys = [y0]
    return np.asarray(taus), ys, boundary


def _integrate_fixed(E, y0, t0, t1, dt):
    """Classic fixed-step RK4; used for bitwise-reproducible runs."""
    f = _rhs(E)
    n_steps = max(1, int(round(abs(t1 - t0) / dt)))
    h = (t1 - t0) / n_steps
    taus = [t0]
    ys = [y0]
    y = y0
    tau = t0
    for k in range(n_steps):
        k1 = f(tau, y)
        k2 = f(tau + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(tau + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(tau + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tau = t0 + (k + 1) * h
        if not E.chart.contains(y[:E.dim]):
            taus.append(tau)
            ys.append(y)
            return np.asarray(taus), ys, True
        taus.append(tau)
        ys.append(y)
    return np.asarray(taus), ys, False


def action_increment(strip: Strip) -> float:
    """Fiber increment s_end - s_start (never reduced mod the circle period)."""
    if len(strip) == 0:
        raise ContractViolation("empty strip")
    return float(strip.s[-1] - strip.s[0])


@dataclass
class BatchItem:
    strip: Strip | None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch_propagate(E: SymbolSurface, inits: Sequence[CharacteristicState], tau_span,
                    integ: IntegratorConfig | None = None,
                    tau_eval: Sequence[float] | None = None) -> list[BatchItem]:
    """propagate() over a list of initial states; failures are carried per item."""
    out = []
    for init in inits:
        try:
            out.append(BatchItem(propagate(E, init, tau_span, integ, tau_eval)))
        except Exception as exc:  # noqa: BLE001 - per-item isolation is the contract
            out.append(BatchItem(None, exc))
    return out


def sample_onshell(E: SymbolSurface, rng: np.random.Generator, n: int,
                   p_s: float = 1.0, margin: float = 0.0,
                   max_tries: int = 200) -> list[CharacteristicState]:
    """Draw random states on {G = 0} inside the chart (p_s gauge fixed).

    For each sample a random interior base point and a random momentum ray
    are drawn and the momentum is slid along a random direction until G
    changes sign; the root is then bracketed and polished by bisection.
    """
    from scipy.optimize import brentq

    out: list[CharacteristicState] = []
    tries = 0
    while len(out) < n and tries < max_tries * n:
        tries += 1
        x = E.chart.interior_sample(rng, margin)
        p0 = rng.standard_normal(E.dim)
        d = rng.standard_normal(E.dim)
        d /= np.linalg.norm(d)

        def g(t):
            return E.value(x, p0 + t * d, p_s)

        ts = np.linspace(-20.0, 20.0, 81)
        vals = [g(t) for t in ts]
        root = None
        for a, b, fa, fb in zip(ts[:-1], ts[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                root = a
                break
            if fa * fb < 0:
                root = brentq(g, a, b, xtol=1e-14, rtol=1e-15)
                break
        if root is None:
            continue
        p = p0 + root * d
        state = CharacteristicState(x, 0.0, p, p_s)
        if E.is_degenerate(x, p, p_s):
            continue
        out.append(state)
    if len(out) < n:
        raise ContractViolation(
            f"could only find {len(out)}/{n} on-shell samples; surface may be empty here")
    return out
