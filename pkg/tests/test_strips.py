import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import contactflow as cf
from contactflow.strips import Fiber, _onshell_scale, _project_onshell, _pack


def test_state_validation():
    with pytest.raises(cf.ContractViolation):
        cf.CharacteristicState([0.0], 0.0, [0.0, 0.0], 1.0)  # shape mismatch
    with pytest.raises(cf.ContractViolation):
        cf.CharacteristicState([0.0, 0.0], 0.0, [0.0, 0.0], 0.0)  # zero covector
    st0 = cf.CharacteristicState([1.0, 2.0], 0.5, [0.3, -0.4], 1.0)
    assert np.allclose(st0.covector(), [0.3, -0.4, 1.0])
    with pytest.raises(cf.ContractViolation):
        st0.scaled(-1.0)
    # normalization gauge: p_s -> 1 when nonzero, unit covector otherwise
    assert st0.normalized().p_s == pytest.approx(1.0)
    null = cf.CharacteristicState([0.0, 0.0], 0.0, [3.0, 4.0], 0.0)
    assert np.linalg.norm(null.normalized().covector()) == pytest.approx(1.0)


def test_fiber_circle_reduce():
    fib = Fiber("circle", period=2.0)
    assert fib.reduce(5.3) == pytest.approx(1.3)
    with pytest.raises(cf.ContractViolation):
        Fiber("torus")


def test_free_particle_straight_lines(free):
    strip = cf.propagate(free.surface, free.initial_states[0], (0.0, 10.0))
    # x(tau) = (tau, 0.7 tau); momenta constant
    assert np.allclose(strip.x[:, 0], strip.taus, atol=1e-10)
    assert np.allclose(strip.x[:, 1], 0.7 * strip.taus, atol=1e-10)
    assert np.max(np.abs(strip.p - strip.p[0])) < 1e-11
    assert np.max(np.abs(strip.g_residual)) < 1e-12
    assert not strip.boundary_exit


def test_oscillator_closed_form(oscillator):
    strip = cf.propagate(oscillator.surface, oscillator.initial_states[0], (0.0, 10.0))
    assert np.max(np.abs(strip.x[:, 1] - np.sin(strip.taus))) < 1e-8
    assert np.max(np.abs(strip.p[:, 1] - np.cos(strip.taus))) < 1e-8
    # action for x = sin: integral of cos(2 tau)/2
    s_exact = np.sin(2 * strip.taus) / 4.0
    assert np.max(np.abs(strip.s - s_exact)) < 1e-8


def test_ps_exactly_conserved(oscillator):
    strip = cf.propagate(oscillator.surface, oscillator.initial_states[0], (0.0, 10.0))
    assert np.max(np.abs(strip.p_s - strip.p_s[0])) < 1e-14


def test_offshell_init_rejected(free):
    bad = cf.CharacteristicState([0.0, 0.0], 0.0, [1.0, 1.0], 1.0)  # G = 1.5
    with pytest.raises(cf.ContractViolation):
        cf.propagate(free.surface, bad, (0.0, 1.0))


def test_zero_span_is_identity(free):
    st0 = free.initial_states[0]
    strip = cf.propagate(free.surface, st0, (0.0, 0.0))
    assert len(strip) == 1
    assert np.allclose(strip.x[0], st0.x)
    assert strip.s[0] == st0.s


def test_boundary_exit_terminates(free):
    small = cf.Chart(["t", "x"], [(-2.0, 2.0), (-2.0, 2.0)])
    E = cf.SymbolSurface(small, free.surface._value, 2, grad=free.surface._grad)
    strip = cf.propagate(E, free.initial_states[0], (0.0, 10.0))
    assert strip.boundary_exit
    assert strip.taus[-1] < 10.0
    assert abs(small.boundary_clearance(strip.x[-1])) < 1e-7


def test_degenerate_state_rejected_by_field():
    # G = p_x^2 has vanishing momentum gradient on its own zero set
    ch = cf.Chart(["x", "y"], [(-10, 10), (-10, 10)])
    E = cf.SymbolSurface(ch, lambda x, p, p_s: p[0] ** 2, 2)
    st0 = cf.CharacteristicState([0.0, 0.0], 0.0, [0.0, 1.0], 1.0)
    assert E.is_degenerate(st0.x, st0.p, st0.p_s)
    with pytest.raises(cf.DegeneracyError):
        cf.characteristic_field(E, st0)


def test_degenerate_initial_state_rejected_by_propagate():
    # G = (p^2 - x^2 p_s^2)/2: at x = 0, p = 0 the momentum gradient vanishes
    # on shell, so no characteristic direction exists there
    ch = cf.Chart(["x"], [(-10.0, 10.0)])

    def val(x, p, p_s):
        return 0.5 * (p[0] ** 2 - x[0] ** 2 * p_s ** 2)

    E = cf.SymbolSurface(ch, val, 2)
    st0 = cf.CharacteristicState([0.0], 0.0, [0.0], 1.0)
    with pytest.raises(cf.DegeneracyError) as err:
        cf.propagate(E, st0, (0.0, 1.0))
    assert err.value.state is not None


def test_projection_restores_shell(free):
    y = _pack(cf.CharacteristicState([0.0, 0.0], 0.0, [-0.245, 0.7], 1.0))
    y[3] += 1e-6  # perturb p_t
    y2, g = _project_onshell(free.surface, y, 1e-10)
    assert abs(g) < 5e-11
    assert abs(y2[3] - y[3]) < 1e-5  # small correction
    assert y2[4 + 1] == y[4 + 1]  # p_s untouched


@given(lam=st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=30, deadline=None)
def test_symbol_homogeneity(lam):
    E = cf.builtin("oscillator").surface
    p = np.array([-0.5, 1.0])
    v0 = E.value([0.3, 0.1], p, 1.0)
    v1 = E.value([0.3, 0.1], lam * p, lam)
    assert v1 == pytest.approx(lam ** 2 * v0, rel=1e-10, abs=1e-12)
    assert E.euler_residual([0.3, 0.1], p, 1.0) < 1e-9


def test_fixed_step_matches_adaptive(oscillator):
    st0 = oscillator.initial_states[0]
    a = cf.propagate(oscillator.surface, st0, (0.0, 5.0))
    cfg = cf.IntegratorConfig(method="fixed", dt=1e-3)
    b = cf.propagate(oscillator.surface, st0, (0.0, 5.0), cfg)
    assert abs(a.x[-1, 1] - b.x[-1, 1]) < 1e-8


def test_fixed_step_deterministic(oscillator):
    st0 = oscillator.initial_states[0]
    cfg = cf.IntegratorConfig(method="fixed", dt=1e-2)
    a = cf.propagate(oscillator.surface, st0, (0.0, 5.0), cfg)
    b = cf.propagate(oscillator.surface, st0, (0.0, 5.0), cfg)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.s, b.s)


def test_batch_propagate_carries_failures(free):
    good = free.initial_states[0]
    # off-shell state cannot even be constructed into a batch failure via
    # propagate's precondition, which is the contract being exercised
    bad = cf.CharacteristicState([0.0, 0.0], 0.0, [5.0, 0.7], 1.0)
    items = cf.batch_propagate(free.surface, [good, bad], (0.0, 1.0))
    assert items[0].ok and not items[1].ok
    assert isinstance(items[1].error, cf.ContractViolation)


def test_sample_onshell_lands_on_shell(free, rng):
    states = cf.sample_onshell(free.surface, rng, 20, margin=5.0)
    assert len(states) == 20
    for s in states:
        g = free.surface.value(s.x, s.p, s.p_s)
        assert abs(g) < 1e-9 * max(1.0, _onshell_scale(free.surface, s.p, s.p_s))


def test_action_increment(free):
    strip = cf.propagate(free.surface, free.initial_states[0], (0.0, 10.0))
    assert cf.action_increment(strip) == pytest.approx(0.5 * 0.7 ** 2 * 10.0, rel=1e-10)
