from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disseminate.errors import PopulationOverflowError
from disseminate.galton_watson import (
    GwTrajectory,
    OffspringLaw,
    classify_criticality,
    extinction_frequency,
    extinction_probability,
    mean_population,
    simulate_counts,
    simulate_counts_ensemble,
)
from disseminate.rng import make_stream


# ---------------------------------------------------------------------------
# oracle: monotone fixed-point iteration written independently of the
# implementation under test. Iterating s <- g(s) from 0 converges upward
# to the smallest root of g(s) = s; the contraction rate g'(q) < 1 away
# from criticality makes 200 float iterations far more accurate than the
# 1e-12 we compare at. (Exact rationals are useless here: the denominator
# squares every iteration.)

def fixed_point_oracle(probs, n_iter=200):
    probs = [float(p) for p in probs]
    s = 0.0
    for _ in range(n_iter):
        s = sum(p * s**k for k, p in enumerate(probs))
    return s


def test_fixed_point_oracle_values():
    # p0=1/3, p2=2/3: the roots of (2/3)s^2 - s + 1/3 are 1/2 and 1
    q = fixed_point_oracle([Fraction(1, 3), 0, Fraction(2, 3)])
    assert abs(q - 0.5) < 1e-12
    # p0=1/5, p2=4/5: roots of (4/5)s^2 - s + 1/5 are 1/4 and 1
    q = fixed_point_oracle([Fraction(1, 5), 0, Fraction(4, 5)])
    assert abs(q - 0.25) < 1e-12


def test_extinction_probability_matches_oracle():
    law = OffspringLaw.from_specs(("1/3", 0, "2/3"))
    assert abs(extinction_probability(law, 1e-12) - 0.5) <= 1e-9
    law2 = OffspringLaw.from_specs(("1/5", 0, "4/5"))
    assert abs(extinction_probability(law2, 1e-12) - 0.25) <= 1e-9


def test_extinction_probability_critical_and_subcritical_are_one():
    assert extinction_probability(OffspringLaw.from_specs(("1/2", 0, "1/2")), 1e-12) == 1.0
    assert extinction_probability(OffspringLaw.from_specs((0.6, 0.4)), 1e-12) == 1.0


# ---------------------------------------------------------------------------
# law construction and exact means


def test_rational_specs_give_exact_mean():
    law = OffspringLaw.from_specs(("1/3", 0, "2/3"))
    assert law.zeta == Fraction(4, 3)
    assert mean_population(law, 3) == float(Fraction(4, 3) ** 3)


def test_invalid_laws_rejected():
    with pytest.raises(ValueError):
        OffspringLaw.from_specs((0.5, 0.4))  # does not sum to 1
    with pytest.raises(ValueError):
        OffspringLaw.from_specs((1.2, -0.2))
    with pytest.raises(ValueError):
        OffspringLaw.from_specs(())


def test_classify_criticality():
    assert classify_criticality(Fraction(4, 3)) == "supercritical"
    assert classify_criticality(Fraction(1)) == "critical"
    assert classify_criticality(0.8) == "subcritical"
    assert classify_criticality(1.0 + 1e-14) == "critical"


@given(
    st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(lambda w: sum(w) > 0)
)
@settings(max_examples=100, deadline=None)
def test_generating_function_properties(weights):
    total = sum(weights)
    law = OffspringLaw.from_specs([Fraction(w, total) for w in weights])
    g0 = law.generating_function(0.0)
    g1 = law.generating_function(1.0)
    assert abs(g1 - 1.0) < 1e-12
    assert 0.0 <= g0 <= 1.0
    # monotone on [0, 1]
    s = np.linspace(0, 1, 7)
    vals = [law.generating_function(x) for x in s]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# simulation


def test_trajectory_absorbing_state_enforced():
    with pytest.raises(ValueError):
        GwTrajectory((3, 0, 2))
    t = GwTrajectory((3, 1, 0, 0))
    assert t.counts[-1] == 0


def test_simulate_counts_shapes_and_zero_absorption():
    law = OffspringLaw.from_specs((1.0,))  # everyone dies immediately
    traj, tree = simulate_counts(law, 5, 4, make_stream(0, 0))
    assert traj.counts == (5, 0, 0, 0, 0)
    assert tree is None


def test_genealogy_tree_consistent_with_counts():
    law = OffspringLaw.from_specs(("1/4", "1/4", "1/2"))
    traj, tree = simulate_counts(law, 3, 5, make_stream(9, 1), record_tree=True)
    by_gen = {}
    for node in tree.nodes:
        by_gen.setdefault(node.generation, []).append(node)
    for m, n in enumerate(traj.counts):
        if n > 0:
            assert len(by_gen.get(m, [])) == n
    # offspring counts of generation m sum to the size of generation m+1
    for m in range(len(traj.counts) - 1):
        if traj.counts[m] == 0:
            break
        z_sum = sum(node.offspring_count for node in by_gen[m])
        assert z_sum == traj.counts[m + 1]


def test_ensemble_matches_mean_law():
    law = OffspringLaw.from_specs((0.3, 0.6, 0.1))  # zeta = 0.8
    n_reps, m = 20_000, 6
    counts = simulate_counts_ensemble(law, 1, m, n_reps, make_stream(17, 0))
    assert counts.shape == (n_reps, m + 1)
    sample = counts[:, m].astype(np.float64)
    se = sample.std(ddof=1) / np.sqrt(n_reps)
    assert abs(sample.mean() - 0.8**m) < 4 * se


def test_ensemble_absorbing_at_zero():
    law = OffspringLaw.from_specs((0.5, 0.0, 0.5))
    counts = simulate_counts_ensemble(law, 1, 12, 500, make_stream(3, 0))
    dead = counts == 0
    # once zero, always zero
    assert not np.any(dead[:, :-1] & (counts[:, 1:] > 0))


def test_overflow_raises():
    law = OffspringLaw.from_specs((0.0, 0.0, 1.0))  # deterministic doubling
    with pytest.raises(PopulationOverflowError):
        simulate_counts(law, 2**62 + 1, 2, make_stream(0, 0))


# ---------------------------------------------------------------------------
# extinction frequency


def test_extinction_frequency_subcritical_goes_extinct():
    law = OffspringLaw.from_specs((0.75, 0.0, 0.25))  # zeta = 0.5, q = 1
    freq = extinction_frequency(law, horizon=40, n_reps=400, stream=make_stream(2, 0))
    assert freq >= 0.99


def test_extinction_frequency_supercritical_with_escape():
    # q = 0.5; the escape threshold keeps surviving populations from
    # growing past the count cap, misclassifying at most q^150 of runs
    law = OffspringLaw.from_specs(("1/3", 0, "2/3"))
    n = 4000
    freq = extinction_frequency(
        law, horizon=200, n_reps=n, stream=make_stream(4, 0), escape_threshold=150
    )
    se = np.sqrt(0.25 / n)
    assert abs(freq - 0.5) < 4 * se


def test_extinction_frequency_matches_fixed_point_for_second_law():
    law = OffspringLaw.from_specs(("1/5", 0, "4/5"))
    n = 4000
    freq = extinction_frequency(
        law, horizon=100, n_reps=n, stream=make_stream(8, 0), escape_threshold=60
    )
    se = np.sqrt(0.25 * 0.75 / n)
    assert abs(freq - 0.25) < 4 * se
