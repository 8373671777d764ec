"""Connections, curvature, wave diagrams, Legendre duality and the
relativistic-particle scenario.

The bundle total space is modelled locally as M x fiber; the connection is
carried by a potential A on M with 1-form alpha = ds + A_mu dx^mu.  Wave
diagrams are unit-level sections of the Monge cone by the plane alpha = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .charts import Chart, Covector, PolyField, ScalarField, TangentVector, fd_steps
from .errors import (ContractViolation, EmptyDiagramError,
                     InternalConsistencyError)
from .strips import (CharacteristicState, Fiber, PS_ZERO_TOL, Strip,
                     SymbolSurface)

#: rays whose alpha-value is below this (relative to the ray norm) are lightlike
LIGHTLIKE_RTOL = 1e-9


class ConnectionData:
    """Connection potential A on M and its curvature F = dA."""

    def __init__(self, chart: Chart, A: Callable | Sequence, dA: Callable | None = None,
                 fd_step: float = 1e-6):
        self.chart = chart
        self.fd_step = fd_step
        if callable(A):
            self._A = A
            self._components = None
        else:
            comps = list(A)
            if len(comps) != chart.dim:
                raise ContractViolation("connection potential needs one component per axis")
            self._components = [c if isinstance(c, (PolyField, ScalarField))
                                else PolyField.from_const(chart, float(c))
                                for c in comps]
            self._A = None
        self._dA = dA

    def A(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self._A is not None:
            return np.asarray(self._A(x), float)
        return np.array([c.value(x) for c in self._components])

    def jacobian(self, x) -> np.ndarray:
        """J[i, j] = d A_j / d x_i."""
        x = np.asarray(x, float)
        if self._dA is not None:
            return np.asarray(self._dA(x), float)
        m = self.chart.dim
        if self._components is not None and all(
                isinstance(c, PolyField) or hasattr(c, "poly") for c in self._components):
            J = np.empty((m, m))
            for j, c in enumerate(self._components):
                poly = c if isinstance(c, PolyField) else c.poly
                J[:, j] = poly.gradient(x)
            return J
        steps = fd_steps(x, self.fd_step)
        J = np.empty((m, m))
        for i in range(m):
            xp = x.copy(); xp[i] += steps[i]
            xm = x.copy(); xm[i] -= steps[i]
            J[i] = (self.A(xp) - self.A(xm)) / (2 * steps[i])
        return J

    def curvature(self, x) -> np.ndarray:
        """F_{mu nu} = d_mu A_nu - d_nu A_mu (antisymmetric by construction)."""
        J = self.jacobian(x)
        return J - J.T

    def bianchi_residual(self, x, h: float | None = None) -> float:
        """Max cyclic-sum residual of dF over 3-axis combinations (0 for dim < 3)."""
        m = self.chart.dim
        if m < 3:
            return 0.0
        x = np.asarray(x, float)
        steps = fd_steps(x, h if h is not None else 1e-5)

        def dF(i, mu, nu):
            xp = x.copy(); xp[i] += steps[i]
            xm = x.copy(); xm[i] -= steps[i]
            return (self.curvature(xp)[mu, nu] - self.curvature(xm)[mu, nu]) / (2 * steps[i])

        worst = 0.0
        import itertools
        for a, b, c in itertools.combinations(range(m), 3):
            worst = max(worst, abs(dF(a, b, c) + dF(b, c, a) + dF(c, a, b)))
        return worst

    def shifted(self, chi: PolyField | ScalarField) -> "ConnectionData":
        """Connection with potential A + d(chi)."""
        def A_new(x, old=self.A, chi=chi):
            return old(x) + _grad_of(chi, x)

        def dA_new(x, oldJ=self.jacobian, chi=chi):
            return oldJ(x) + _hessian_of(chi, x)

        return ConnectionData(self.chart, A_new, dA=dA_new, fd_step=self.fd_step)


def _grad_of(chi, x):
    if isinstance(chi, PolyField):
        return chi.gradient(x)
    return chi.gradient(np.asarray(x, float))


def _hessian_of(chi, x):
    x = np.asarray(x, float)
    m = len(x)
    poly = chi if isinstance(chi, PolyField) else getattr(chi, "poly", None)
    if poly is not None:
        H = np.empty((m, m))
        for i in range(m):
            e = [0] * m
            e[i] = 1
            H[i] = poly.derivative(e).gradient(x)
        return H
    steps = fd_steps(x, 1e-5)
    H = np.empty((m, m))
    for i in range(m):
        xp = x.copy(); xp[i] += steps[i]
        xm = x.copy(); xm[i] -= steps[i]
        H[i] = (_grad_of(chi, xp) - _grad_of(chi, xm)) / (2 * steps[i])
    return H


@dataclass
class DiagramPoint:
    v: np.ndarray            # tangent vector in M with Lambda(v) = 1
    p_s_sign: int            # sign of the generating fiber momentum
    covector: np.ndarray     # the generating on-shell (p, p_s)
    s_dot: float             # fiber component of the scaled cone ray

    @property
    def branch(self) -> str:
        return "plus" if self.p_s_sign > 0 else ("minus" if self.p_s_sign < 0 else "null")


@dataclass
class WaveDiagram:
    """Sampled level set {Lambda_x = 1} in T_x M with momentum provenance."""

    base_point: np.ndarray
    points: list[DiagramPoint]
    lightlike: list[np.ndarray] = field(default_factory=list)   # raw rays with alpha = 0
    unreachable: list[np.ndarray] = field(default_factory=list)  # rays with alpha < 0

    def branch(self, name: str) -> np.ndarray:
        pts = [q.v for q in self.points if q.branch == name]
        return np.asarray(pts) if pts else np.empty((0, len(self.base_point)))

    def samples(self) -> np.ndarray:
        return np.asarray([q.v for q in self.points])


def _onshell_momenta_at(E: SymbolSurface, x, p_s: float, n_samples: int,
                        p_max: float = 20.0) -> list[np.ndarray]:
    """On-shell M-momenta at fixed p_s: radial bracket scan over directions."""
    from scipy.optimize import brentq

    m = E.dim
    out = []
    if m == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    elif m == 2:
        thetas = np.linspace(0.0, 2 * math.pi, n_samples, endpoint=False)
        dirs = [np.array([math.cos(t), math.sin(t)]) for t in thetas]
    else:
        rng = np.random.default_rng(0)
        dirs = []
        for _ in range(n_samples):
            d = rng.standard_normal(m)
            dirs.append(d / np.linalg.norm(d))
    rs = np.linspace(1e-9, p_max, 400)
    for d in dirs:
        vals = np.array([E.value(x, r * d, p_s) for r in rs])
        for a, b, fa, fb in zip(rs[:-1], rs[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                out.append(a * d)
            elif fa * fb < 0:
                r = brentq(lambda r: E.value(x, r * d, p_s), a, b, xtol=1e-14)
                out.append(r * d)
    return out


def wave_diagram(E: SymbolSurface, conn: ConnectionData, x, n_samples: int = 64) -> WaveDiagram:
    """Section of the Monge cone at x by the connection plane alpha = 1.

    Rays parallel to the plane (alpha = 0) land in the lightlike bucket; rays
    pointing below it (alpha < 0, unreachable by positive rescaling) are kept
    separately as well.
    """
    x = E.chart.require_point(x)
    A = conn.A(x)
    points: list[DiagramPoint] = []
    lightlike: list[np.ndarray] = []
    unreachable: list[np.ndarray] = []

    sections = [(+1.0, +1), (-1.0, -1)]
    for p_s, sign in sections:
        for p in _onshell_momenta_at(E, x, p_s, n_samples):
            if E.is_degenerate(x, p, p_s):
                continue
            _, gp, gps = E.gradient(x, p, p_s)
            v_m, s_dot = gp, -gps
            a = s_dot + float(np.dot(A, v_m))
            norm = np.linalg.norm(np.append(v_m, s_dot))
            if norm == 0.0:
                continue
            if abs(a) <= LIGHTLIKE_RTOL * norm:
                lightlike.append(np.append(v_m, s_dot))
            elif a < 0:
                unreachable.append(np.append(v_m, s_dot))
            else:
                points.append(DiagramPoint(v_m / a, sign, np.append(p, p_s), s_dot / a))
    # the p_s = 0 class: scan directions on the unit momentum sphere
    for p in _null_class_momenta(E, x, n_samples):
        _, gp, gps = E.gradient(x, p, 0.0)
        v_m, s_dot = gp, -gps
        a = s_dot + float(np.dot(A, v_m))
        norm = np.linalg.norm(np.append(v_m, s_dot))
        if norm == 0.0:
            continue
        if abs(a) <= LIGHTLIKE_RTOL * norm:
            lightlike.append(np.append(v_m, s_dot))
        elif a < 0:
            unreachable.append(np.append(v_m, s_dot))
        else:
            points.append(DiagramPoint(v_m / a, 0, np.append(p, 0.0), s_dot / a))

    if not points:
        if lightlike:
            raise EmptyDiagramError(
                f"all Monge-cone rays at {x} are lightlike; the alpha = 1 section is empty")
        raise EmptyDiagramError(f"no on-shell covectors found at {x}")
    return WaveDiagram(x, points, lightlike, unreachable)


def ray_alpha(E: SymbolSurface, conn: ConnectionData, x, p, p_s: float) -> float:
    """alpha = ds + A.dx evaluated on the cone ray of an on-shell covector.

    Positive values mean the ray meets the diagram plane alpha = 1 under
    positive rescaling; negative values put it in the unreachable bucket.
    """
    x = np.asarray(x, float)
    _, gp, gps = E.gradient(x, p, p_s)
    return float(-gps + conn.A(x) @ gp)


def _null_class_momenta(E: SymbolSurface, x, n_samples: int) -> list[np.ndarray]:
    """Unit momenta p with G(x, p, 0) = 0 (homogeneous: a cone direction scan)."""
    from scipy.optimize import brentq

    m = E.dim
    out = []
    if m == 2:
        thetas = np.linspace(0.0, 2 * math.pi, max(n_samples, 16), endpoint=False)

        def g(t):
            return E.value(x, np.array([math.cos(t), math.sin(t)]), 0.0)

        vals = [g(t) for t in thetas]
        closed = list(thetas) + [2 * math.pi]
        vals_c = vals + [vals[0]]
        for a, b, fa, fb in zip(closed[:-1], closed[1:], vals_c[:-1], vals_c[1:]):
            if fa == 0.0:
                out.append(np.array([math.cos(a), math.sin(a)]))
            elif fa * fb < 0:
                t = brentq(g, a, b, xtol=1e-14)
                out.append(np.array([math.cos(t), math.sin(t)]))
    return out


def legendre_dual(samples: np.ndarray, ring_ordered: bool = True,
                  k_neighbors: int | None = None) -> np.ndarray:
    """Supporting-hyperplane (polar) dual of a sampled convex hypersurface.

    For each sample v with estimated tangent plane T the unique covector p
    with p(v) = 1 and p|_T = 0 is returned.  For ring-ordered 2D samples the
    tangent is the symmetric chord through the neighbours; otherwise a local
    least-squares plane over k = 2*dim nearest samples is used.
    """
    samples = np.asarray(samples, float)
    n, m = samples.shape
    if n < m + 1:
        raise ContractViolation("need at least dim+1 samples to estimate tangent planes")
    duals = np.full_like(samples, np.nan)
    if ring_ordered and m == 2:
        for i in range(n):
            t = samples[(i + 1) % n] - samples[(i - 1) % n]
            nrm = np.array([-t[1], t[0]])
            denom = float(np.dot(nrm, samples[i]))
            if abs(denom) < 1e-14 * np.linalg.norm(nrm) * max(np.linalg.norm(samples[i]), 1.0):
                continue  # degenerate tangent estimate: skip with NaN marker
            duals[i] = nrm / denom
    else:
        k = k_neighbors or 2 * m
        d2 = np.sum((samples[None, :, :] - samples[:, None, :]) ** 2, axis=-1)
        for i in range(n):
            idx = np.argsort(d2[i])[1:k + 1]
            rel = samples[idx] - samples[i]
            _, sv, vt = np.linalg.svd(rel, full_matrices=True)
            nrm = vt[-1]
            denom = float(np.dot(nrm, samples[i]))
            if abs(denom) < 1e-12:
                continue
            duals[i] = nrm / denom
    good = ~np.isnan(duals[:, 0])
    return duals[good]


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    a = np.asarray(a, float)
    b = np.asarray(b, float)
    da = cKDTree(b).query(a)[0].max()
    db = cKDTree(a).query(b)[0].max()
    return float(max(da, db))


def gauge_transform(E: SymbolSurface, conn: ConnectionData,
                    chi: PolyField | ScalarField) -> tuple[SymbolSurface, ConnectionData]:
    """Change of connection by chi: A -> A + d(chi).  E is untouched (it is
    the invariant object); only derived Lagrangian data changes."""
    return E, conn.shifted(chi)


def strip_in_gauge(strip: Strip, chi: PolyField | ScalarField) -> Strip:
    """Re-express a strip in the trivialization matching A -> A + d(chi):
    s -> s + chi(x), p -> p + p_s * d(chi)."""
    dchi = np.array([_grad_of(chi, strip.x[i]) for i in range(len(strip))])
    chival = np.array([chi.value(strip.x[i]) if hasattr(chi, "value") else chi(strip.x[i])
                       for i in range(len(strip))])
    return Strip(strip.surface, strip.taus.copy(), strip.x.copy(),
                 strip.s + chival,
                 strip.p + strip.p_s[:, None] * dchi,
                 strip.p_s.copy(), strip.g_residual.copy(), strip.boundary_exit)


def classify_characteristic(strip: Strip, time_orientation: int = +1) -> str:
    """Particle / antiparticle / lightlike class by the sign of p_s.

    p_s is conserved, so a sign change along the strip indicates corruption
    and raises InternalConsistencyError.
    """
    if time_orientation not in (+1, -1):
        raise ContractViolation("time_orientation must be +1 or -1")
    ps = strip.p_s * time_orientation
    signs = np.sign(ps[np.abs(ps) > PS_ZERO_TOL])
    if signs.size and not np.all(signs == signs[0]):
        raise InternalConsistencyError("p_s changed sign along a strip")
    if not signs.size:
        return "lightlike"
    if np.any(np.abs(ps) <= PS_ZERO_TOL):
        raise InternalConsistencyError("p_s jumped between zero and nonzero along a strip")
    return "particle" if signs[0] > 0 else "antiparticle"


@dataclass
class RelativisticScenario:
    surface: SymbolSurface
    connection: ConnectionData
    metric: np.ndarray          # constant Lorentzian metric on the M axes
    mass: float
    charge: float
    fiber_coeff: float          # coefficient of p_s^2 in G (m^2 c^2 for flat diag(c^2,-1,...))
    em_potential: ConnectionData


def lorentzian_metric(c: float, dim: int = 2) -> np.ndarray:
    """Flat metric diag(c^2, -1, ..., -1) on (t, x...)."""
    g = -np.eye(dim)
    g[0, 0] = c * c
    return g


def relativistic_scenario(mass: float, charge: float, em_potential,
                          metric, chart: Chart | None = None,
                          fiber_coeff: float | None = None) -> RelativisticScenario:
    """Light-cone symbol on U for a charged relativistic particle.

    The Monge cones are the null cones of a Lorentzian metric on U whose
    fiber direction is spacelike; the symbol is

        G = g^{mu nu} (p - e A p_s)_mu (p - e A p_s)_nu - (fiber_coeff) p_s^2

    normalized so the p_s = +/-1 sections are the two mass-shell branches
    (fiber_coeff defaults to m^2 g_{00}, i.e. m^2 c^2 for diag(c^2, -1...)).
    """
    g = np.asarray(metric, float)
    m_dim = g.shape[0]
    eigs = np.linalg.eigvalsh(g)
    if not (np.sum(eigs > 0) == 1 and np.sum(eigs < 0) == m_dim - 1):
        raise ContractViolation("metric must be Lorentzian (signature +,-,...,-)")
    if chart is None:
        names = ("t",) + tuple(f"x{i}" if m_dim > 2 else "x" for i in range(1, m_dim))
        chart = Chart(names, [[-1e4, 1e4]] * m_dim)
    if fiber_coeff is None:
        fiber_coeff = mass * mass * g[0, 0]
    if not fiber_coeff > 0:
        raise ContractViolation("fiber coefficient must be positive (spacelike fiber)")
    ginv = np.linalg.inv(g)

    if isinstance(em_potential, ConnectionData):
        em = em_potential
    else:
        em = ConnectionData(chart, em_potential)
    e = float(charge)

    def value(x, p, ps):
        k = p - e * ps * em.A(x)
        return float(k @ ginv @ k - fiber_coeff * ps * ps)

    def grad(x, p, ps):
        A = em.A(x)
        k = p - e * ps * A
        w = 2.0 * (ginv @ k)
        J = em.jacobian(x)          # J[i, j] = d A_j / d x_i
        gx = -e * ps * (J @ w)
        gps = float(-e * np.dot(A, w) - 2.0 * fiber_coeff * ps)
        return gx, w, gps

    surface = SymbolSurface(chart, value, degree=2, grad=grad, name="relativistic")

    def A_conn(x):
        return e * em.A(x)

    def dA_conn(x):
        return e * em.jacobian(x)

    conn = ConnectionData(chart, A_conn, dA=dA_conn)
    return RelativisticScenario(surface, conn, g, mass, e, float(fiber_coeff), em)


def constant_field_potential(chart: Chart, field_strength: float) -> ConnectionData:
    """EM potential with F = E0 dt ^ dx: A_t = -E0 * x (so F_tx = +E0)."""
    m = chart.dim
    comps = [PolyField.from_const(chart, 0.0) for _ in range(m)]
    idx_x = 1  # first spatial axis
    e_x = [0] * m
    e_x[idx_x] = 1
    comps[0] = PolyField(chart, {tuple(e_x): -field_strength})
    return ConnectionData(chart, comps)


def null_norm(scenario: RelativisticScenario, strip: Strip) -> float:
    """Max |g(dx/dtau, dx/dtau)| along a strip, normalized by the velocity norm."""
    worst = 0.0
    for i in range(len(strip)):
        v = strip.velocity(i)[:strip.surface.dim]
        nv = float(v @ scenario.metric @ v)
        worst = max(worst, abs(nv) / max(np.dot(v, v), 1e-300))
    return worst
