import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disseminate.csbp import (
    BranchingMechanism,
    classify_mechanism,
    expected_mass,
    feller_terminal_values,
    laplace_exponent,
    laplace_functional,
    mechanism_value,
    simulate_feller_path,
)
from disseminate.rng import make_stream


# ---------------------------------------------------------------------------
# oracle: classic fixed-step RK4 on dv/dt = -phi(v), v(0) = mu, written
# against its own local phi. Shares nothing with the implementation under
# test beyond the mechanism definition itself.

def _phi(z, b, c, atoms):
    out = b * z + c * z * z
    for w, y in atoms:
        out += w * (math.expm1(-z * y) + z * y)
    return out


def rk4_exponent(mu, t_end, n_steps, b, c, atoms=()):
    h = t_end / n_steps
    v = mu
    for _ in range(n_steps):
        k1 = -_phi(v, b, c, atoms)
        k2 = -_phi(v + 0.5 * h * k1, b, c, atoms)
        k3 = -_phi(v + 0.5 * h * k2, b, c, atoms)
        k4 = -_phi(v + h * k3, b, c, atoms)
        v += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


ATOM_B, ATOM_C = 0.2, 0.5
ATOM_JUMPS = ((0.3, 1.5), (0.1, 0.4))
# rk4_exponent(.., n_steps=200_000, ..) on the atom mechanism, frozen so a
# simultaneous drift of oracle and implementation cannot go unnoticed
FROZEN_V_MU2_T1 = 0.7153025243841734
FROZEN_V_MU07_T25 = 0.20358167428328208


def test_oracle_reproduces_quadratic_closed_form():
    # c=1: v_t(mu) = mu / (1 + t*mu)
    for mu in (0.5, 2.0):
        for t in (0.3, 1.0, 4.0):
            v = rk4_exponent(mu, t, 50_000, b=0.0, c=1.0)
            assert abs(v - mu / (1 + t * mu)) < 1e-10


def test_oracle_frozen_values():
    assert abs(rk4_exponent(2.0, 1.0, 200_000, ATOM_B, ATOM_C, ATOM_JUMPS)
               - FROZEN_V_MU2_T1) < 1e-12
    assert abs(rk4_exponent(0.7, 2.5, 200_000, ATOM_B, ATOM_C, ATOM_JUMPS)
               - FROZEN_V_MU07_T25) < 1e-12


# ---------------------------------------------------------------------------
# laplace_exponent


def test_closed_form_grid():
    mech = BranchingMechanism(c=1.0)
    for t in (0.1, 1.0, 10.0):
        for mu in (1e-3, 1.0, 1e3):
            got = laplace_exponent(mech, mu, t)
            assert abs(got - mu / (1 + t * mu)) <= 1e-8


def test_ode_route_agrees_with_closed_form():
    # the integrator and the closed form are independent routes; both stay
    mech = BranchingMechanism(c=1.0)
    for t, mu in ((0.5, 0.3), (2.0, 1.0), (10.0, 5.0)):
        ode = laplace_exponent(mech, mu, t, method="ode")
        closed = laplace_exponent(mech, mu, t, method="closed")
        assert abs(ode - closed) <= 1e-8


def test_ode_route_matches_rk4_oracle_with_atoms():
    mech = BranchingMechanism(b=ATOM_B, c=ATOM_C, atoms=ATOM_JUMPS)
    got = laplace_exponent(mech, 2.0, 1.0, method="ode")
    assert abs(got - FROZEN_V_MU2_T1) <= 1e-8
    got = laplace_exponent(mech, 0.7, 2.5, method="ode")
    assert abs(got - FROZEN_V_MU07_T25) <= 1e-8
    # live oracle at a point not frozen above
    live = rk4_exponent(1.3, 0.8, 100_000, ATOM_B, ATOM_C, ATOM_JUMPS)
    assert abs(laplace_exponent(mech, 1.3, 0.8, method="ode") - live) <= 1e-8


def test_exponent_semigroup_property():
    # v_{t+s}(mu) = v_t(v_s(mu)): composition across the flow
    mech = BranchingMechanism(c=1.0)
    mu, s, t = 2.0, 0.7, 1.9
    direct = laplace_exponent(mech, mu, s + t)
    composed = laplace_exponent(mech, laplace_exponent(mech, mu, s), t)
    assert abs(direct - composed) < 1e-10
    mech2 = BranchingMechanism(b=ATOM_B, c=ATOM_C, atoms=ATOM_JUMPS)
    direct = laplace_exponent(mech2, mu, s + t, method="ode")
    composed = laplace_exponent(
        mech2, laplace_exponent(mech2, mu, s, method="ode"), t, method="ode"
    )
    assert abs(direct - composed) < 1e-8


def test_exponent_edge_cases_and_validation():
    mech = BranchingMechanism(c=1.0)
    assert laplace_exponent(mech, 2.5, 0.0) == 2.5
    with pytest.raises(ValueError):
        laplace_exponent(mech, 0.0, 1.0)
    with pytest.raises(ValueError):
        laplace_exponent(mech, 1.0, -1.0)
    with pytest.raises(ValueError):
        laplace_exponent(BranchingMechanism(b=1.0, c=1.0), 1.0, 1.0, method="closed")


@given(
    b=st.floats(0.0, 2.0),
    c=st.floats(0.01, 2.0),
    mu=st.floats(0.01, 50.0),
    t=st.floats(0.01, 5.0),
)
@settings(max_examples=60, deadline=None)
def test_exponent_bounds_when_not_supercritical(b, c, mu, t):
    # phi >= 0 for b >= 0, so v is nonincreasing in t and stays in (0, mu]
    mech = BranchingMechanism(b=b, c=c)
    v = laplace_exponent(mech, mu, t, method="ode")
    assert 0.0 <= v <= mu + 1e-12
    v2 = laplace_exponent(mech, mu, 2 * t, method="ode")
    assert v2 <= v + 1e-9


# ---------------------------------------------------------------------------
# mechanism evaluation


def test_mechanism_value_small_z_relative_accuracy():
    # the atom integrand is ~ w*(z*y)^2/2 for small z; naive evaluation
    # would cancel catastrophically at z ~ 1e-9
    mech = BranchingMechanism(atoms=((1.0, 1.0),))
    z = 1e-9
    expected = 0.5 * z * z  # leading term of e^{-z} - 1 + z
    got = mechanism_value(mech, z)
    assert abs(got - expected) / expected < 1e-6


def test_mechanism_value_vectorized_and_validated():
    mech = BranchingMechanism(b=1.0, c=2.0)
    z = np.array([0.0, 1.0, 3.0])
    np.testing.assert_allclose(mechanism_value(mech, z), z + 2 * z * z)
    with pytest.raises(ValueError):
        mechanism_value(mech, -0.5)
    with pytest.raises(ValueError):
        BranchingMechanism(c=-1.0)
    with pytest.raises(ValueError):
        BranchingMechanism(atoms=((0.0, 1.0),))


def test_classify_mechanism():
    assert classify_mechanism(BranchingMechanism(b=0.5, c=1.0)) == "subcritical"
    assert classify_mechanism(BranchingMechanism(b=-0.5, c=1.0)) == "supercritical"
    assert classify_mechanism(BranchingMechanism(c=1.0)) == "critical"


def test_expected_mass_and_functional():
    mech = BranchingMechanism(b=0.3, c=1.0)
    assert abs(expected_mass(mech, 2.0, 1.5) - 2.0 * math.exp(-0.45)) < 1e-12
    v = laplace_exponent(BranchingMechanism(c=1.0), 1.0, 1.0)
    f = laplace_functional(BranchingMechanism(c=1.0), 3.0, 1.0, 1.0)
    assert abs(f - math.exp(-3.0 * v)) < 1e-12
    assert laplace_functional(BranchingMechanism(c=1.0), 0.0, 1.0, 1.0) == 1.0


# ---------------------------------------------------------------------------
# Feller paths


def test_feller_path_grid_and_absorption():
    stream = make_stream(11, 0)
    path = simulate_feller_path(1.0, 0.0, 0.05, 3.0, 0.01, stream)
    assert path.times[0] == 0.0 and path.times[-1] == 3.0
    assert np.all(path.values >= 0.0)
    dead = path.values == 0.0
    if dead.any():
        assert np.all(path.values[np.argmax(dead):] == 0.0)


def test_feller_path_zero_start_stays_zero():
    path = simulate_feller_path(1.0, 0.0, 0.0, 1.0, 0.1, make_stream(0, 0))
    assert np.all(path.values == 0.0)


def test_feller_path_validation():
    with pytest.raises(ValueError):
        simulate_feller_path(0.0, 0.0, 1.0, 1.0, 0.1, make_stream(0, 0))
    with pytest.raises(ValueError):
        simulate_feller_path(1.0, 0.0, -1.0, 1.0, 0.1, make_stream(0, 0))
    with pytest.raises(ValueError):
        simulate_feller_path(1.0, 0.0, 1.0, 1.0, 2.0, make_stream(0, 0))


def test_feller_ensemble_mean_tracks_exponential_decay():
    c, b, x0, t_end = 1.0, 0.4, 1.5, 1.0
    vals = feller_terminal_values(c, b, x0, t_end, 1e-3, 20_000, make_stream(21, 0))
    y = vals[t_end]
    se = y.std(ddof=1) / np.sqrt(len(y))
    assert abs(y.mean() - x0 * math.exp(-b * t_end)) < 4 * se


def test_feller_ensemble_laplace_matches_exponent():
    # small-scale version of the ensemble-vs-transform consistency check
    c, x0, t, mu = 1.0, 1.0, 0.5, 1.0
    vals = feller_terminal_values(c, 0.0, x0, t, 1e-3, 20_000, make_stream(22, 0))
    sample = np.exp(-mu * vals[t])
    se = sample.std(ddof=1) / np.sqrt(len(sample))
    target = math.exp(-x0 * laplace_exponent(BranchingMechanism(c=c), mu, t))
    assert abs(sample.mean() - target) < 4 * se


def test_feller_ensemble_multiple_snapshots():
    vals = feller_terminal_values(1.0, 0.0, 1.0, 1.0, 0.01, 50, make_stream(1, 0),
                                  snapshot_times=[0.0, 0.5, 1.0])
    assert set(vals) == {0.0, 0.5, 1.0}
    assert np.all(vals[0.0] == 1.0)
    with pytest.raises(ValueError):
        # beyond the grid: no step lands within dt/2 of it
        feller_terminal_values(1.0, 0.0, 1.0, 1.0, 0.01, 5, make_stream(1, 0),
                               snapshot_times=[1.2])
