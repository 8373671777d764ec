"""Single-chart coordinate numerics: points, (co)vectors, scalar fields, finite differences.

Everything in the engine lives in one global coordinate chart per scenario.
Coordinates are dimensionless; axis names are labels only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BoundaryError, ContractViolation

#: default relative finite-difference step (scaled per axis by max(1, |x_i|))
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class Chart:
    """A rectangular coordinate chart with named axes."""

    axis_names: tuple[str, ...]
    bounds: np.ndarray  # shape (dim, 2)

    def __init__(self, axis_names: Sequence[str], bounds) -> None:
        names = tuple(axis_names)
        arr = np.asarray(bounds, dtype=float)
        if len(names) < 1:
            raise ContractViolation("chart needs at least one axis")
        if arr.shape != (len(names), 2):
            raise ContractViolation(
                f"bounds shape {arr.shape} does not match {len(names)} axes"
            )
        if not np.all(np.isfinite(arr)):
            raise ContractViolation("chart bounds must be finite")
        if not np.all(arr[:, 0] < arr[:, 1]):
            raise ContractViolation("each axis needs lower < upper bound")
        object.__setattr__(self, "axis_names", names)
        arr.setflags(write=False)
        object.__setattr__(self, "bounds", arr)

    @property
    def dim(self) -> int:
        return len(self.axis_names)

    def axis_index(self, name: str) -> int:
        try:
            return self.axis_names.index(name)
        except ValueError:
            raise ContractViolation(f"no axis named {name!r} in {self.axis_names}") from None

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.bounds[:, 0]) and np.all(x <= self.bounds[:, 1]))

    def require_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ContractViolation(f"point shape {x.shape} does not match dim {self.dim}")
        return x

    def require_interior(self, x, margin: float = 0.0) -> np.ndarray:
        x = self.require_point(x)
        if np.any(x - self.bounds[:, 0] < margin) or np.any(self.bounds[:, 1] - x < margin):
            raise BoundaryError(f"point {x} is within {margin} of the chart boundary")
        return x

    def boundary_clearance(self, x) -> float:
        """Smallest signed distance to the boundary (negative outside)."""
        x = np.asarray(x, dtype=float)
        return float(min(np.min(x - self.bounds[:, 0]), np.min(self.bounds[:, 1] - x)))

    def interior_sample(self, rng: np.random.Generator, margin: float = 0.0) -> np.ndarray:
        lo = self.bounds[:, 0] + margin
        hi = self.bounds[:, 1] - margin
        return rng.uniform(lo, hi)


def _check_pairable(a, b):
    if a.chart is not b.chart and a.chart != b.chart:
        raise ContractViolation("covector and vector live on different charts")
    if a.components.shape != b.components.shape:
        raise ContractViolation("component length mismatch")


@dataclass(frozen=True)
class Covector:
    chart: Chart
    components: np.ndarray

    def __init__(self, chart: Chart, components) -> None:
        object.__setattr__(self, "chart", chart)
        comp = np.asarray(components, dtype=float)
        if comp.shape != (chart.dim,):
            raise ContractViolation("covector length does not match chart dim")
        object.__setattr__(self, "components", comp)

    def __call__(self, v: "TangentVector") -> float:
        return pair(self, v)


@dataclass(frozen=True)
class TangentVector:
    chart: Chart
    components: np.ndarray

    def __init__(self, chart: Chart, components) -> None:
        object.__setattr__(self, "chart", chart)
        comp = np.asarray(components, dtype=float)
        if comp.shape != (chart.dim,):
            raise ContractViolation("vector length does not match chart dim")
        object.__setattr__(self, "components", comp)


def pair(p: Covector, v: TangentVector) -> float:
    """Natural pairing <p, v> = sum_i p_i v^i."""
    _check_pairable(p, v)
    return float(np.dot(p.components, v.components))


def fd_steps(x, h: float | None = None) -> np.ndarray:
    """Per-axis central-difference steps: h * max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    h = DEFAULT_FD_STEP if h is None else float(h)
    return h * np.maximum(1.0, np.abs(x))


class ScalarField:
    """A real function on a chart with an optional analytic gradient.

    When no gradient callable is supplied, central finite differences are
    used (O(h^2) accurate for C^3 fields).
    """

    def __init__(self, chart: Chart, fn: Callable, grad: Callable | None = None,
                 fd_step: float = DEFAULT_FD_STEP):
        self.chart = chart
        self.fn = fn
        self.grad = grad
        self.fd_step = fd_step

    @property
    def grad_mode(self) -> str:
        return "analytic" if self.grad is not None else "finite-difference"

    def value(self, x) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))

    def gradient(self, x, h: float | None = None) -> np.ndarray:
        x = self.chart.require_point(x)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self, x, h if h is not None else self.fd_step)

    def gradient_covector(self, x, h: float | None = None) -> Covector:
        return Covector(self.chart, self.gradient(x, h))

    @classmethod
    def constant(cls, chart: Chart, c: float) -> "ScalarField":
        return cls(chart, lambda x, c=c: c, grad=lambda x: np.zeros(chart.dim))

    @classmethod
    def from_poly(cls, poly: "PolyField") -> "ScalarField":
        f = cls(poly.chart, poly.value, grad=poly.gradient)
        f.poly = poly
        return f


def fd_gradient(f, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a scalar field at an interior point."""
    chart = f.chart
    x = chart.require_point(x)
    steps = fd_steps(x, h)
    if np.any(x - steps < chart.bounds[:, 0]) or np.any(x + steps > chart.bounds[:, 1]):
        raise BoundaryError(f"point {x} closer than one step to the chart boundary")
    g = np.empty(chart.dim)
    for i, hi in enumerate(steps):
        xp = x.copy(); xp[i] += hi
        xm = x.copy(); xm[i] -= hi
        g[i] = (f.value(xp) - f.value(xm)) / (2.0 * hi)
    return g


class PolyField:
    """Multivariate polynomial on a chart with exact derivatives of every order.

    Coefficients are stored as a map multi-index -> float; this is the
    workhorse for connection potentials, gauge functions and probe phases
    where finite differences would limit accuracy.
    """

    def __init__(self, chart: Chart, coeffs: Mapping[tuple, float]):
        self.chart = chart
        self.coeffs = {tuple(int(i) for i in k): float(v) for k, v in coeffs.items()
                       if v != 0.0}
        for k in self.coeffs:
            if len(k) != chart.dim or any(i < 0 for i in k):
                raise ContractViolation(f"bad multi-index {k} for dim {chart.dim}")

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for k, c in self.coeffs.items():
            total += c * math.prod(xi ** ki for xi, ki in zip(x, k))
        return total

    def __call__(self, x) -> float:
        return self.value(x)

    def derivative(self, multi: Sequence[int]) -> "PolyField":
        out = self.coeffs
        for axis, order in enumerate(multi):
            for _ in range(order):
                new = {}
                for k, c in out.items():
                    if k[axis] > 0:
                        kk = list(k); kk[axis] -= 1
                        new[tuple(kk)] = new.get(tuple(kk), 0.0) + c * k[axis]
                out = new
        return PolyField(self.chart, out)

    def deriv_value(self, multi: Sequence[int], x) -> float:
        return self.derivative(multi).value(x)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.chart.dim)
        for axis in range(self.chart.dim):
            e = [0] * self.chart.dim
            e[axis] = 1
            g[axis] = self.derivative(e).value(x)
        return g

    def as_scalar_field(self) -> ScalarField:
        return ScalarField.from_poly(self)

    @classmethod
    def from_const(cls, chart: Chart, c: float) -> "PolyField":
        return cls(chart, {tuple([0] * chart.dim): c})


def random_polynomial(chart: Chart, rng: np.random.Generator, max_degree: int = 2,
                      scale: float = 1.0) -> PolyField:
    """Random polynomial, useful as a gauge function in property tests."""
    coeffs = {}
    for k in itertools.product(range(max_degree + 1), repeat=chart.dim):
        if 0 < sum(k) <= max_degree:
            coeffs[k] = scale * rng.uniform(-1.0, 1.0)
    return PolyField(chart, coeffs)
