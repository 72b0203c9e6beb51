import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from occupancy import exact, zoo
from occupancy.exact import (CapacityError, MultiSitePattern, TimePattern,
                             as_distribution, bits_to_word, lattice_bits,
                             marginal_trajectory, marginals, path_probability,
                             poisson_mixture, spin_generator, spin_law,
                             state_bits, transition_matrix,
                             validate_distribution)

from conftest import naive_event_probability, naive_transition_probability


def test_bit_conventions():
    assert bits_to_word([1, 0, 1]) == 5
    assert np.array_equal(state_bits(5, 3), [1.0, 0.0, 1.0])
    assert np.array_equal(lattice_bits(2),
                          [[0, 0], [1, 0], [0, 1], [1, 1]])
    with pytest.raises(ValueError):
        state_bits(8, 3)


def test_single_site_rows(single_site):
    T = transition_matrix(single_site)
    assert np.allclose(T, [[0.7, 0.3], [0.2, 0.8]], atol=1e-15)
    assert marginal_trajectory(single_site, 0, 2)[-1, 0] == pytest.approx(0.45, abs=1e-15)


def test_transition_matrix_matches_naive_product(interacting, broken):
    for spec in (interacting, broken, zoo.random_certified_model(3, 17)):
        T = transition_matrix(spec)
        size = 1 << spec.n
        for x in range(size):
            for y in range(size):
                assert T[x, y] == pytest.approx(
                    naive_transition_probability(spec, x, y), abs=1e-14)
        assert np.allclose(T.sum(axis=1), 1.0, atol=1e-12)


def test_empty_state_absorbing_without_colonisation():
    spec = zoo.constant_pair(n=2, c=0.0, s=0.8)
    T = transition_matrix(spec)
    assert T[0, 0] == 1.0


def test_distribution_basics(interacting):
    d0 = exact.distribution(interacting, 2, 0)
    assert d0[2] == 1.0 and d0.sum() == 1.0
    d3 = exact.distribution(interacting, 0, 3)
    validate_distribution(d3)
    # matches marginal_trajectory
    assert np.allclose(marginals(d3), marginal_trajectory(interacting, 0, 3)[-1],
                       atol=1e-14)


def test_interacting_marginals_frozen_values(interacting):
    traj = marginal_trajectory(interacting, 0, 2)
    assert np.allclose(traj[1], [0.2, 0.2], atol=1e-15)
    assert np.allclose(traj[2], [0.388, 0.388], atol=1e-15)


def test_marginals_of_simple_distributions():
    point = np.zeros(8)
    point[5] = 1.0
    assert np.array_equal(marginals(point), state_bits(5, 3))
    uniform = np.full(8, 1 / 8)
    assert np.allclose(marginals(uniform), 0.5, atol=1e-15)


def test_distribution_validation():
    with pytest.raises(ValueError):
        validate_distribution(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        validate_distribution(np.array([0.7, -0.2, 0.5, 0.0]))
    with pytest.raises(ValueError):
        validate_distribution(np.array([0.5, 0.2, 0.3]))
    fixed = as_distribution(np.array([0.5, -1e-15, 0.5, 0.0]))
    validate_distribution(fixed)


# -- event probabilities -----------------------------------------------------


def test_pattern_validation():
    with pytest.raises(ValueError):
        TimePattern(site=0, omega=())
    with pytest.raises(ValueError):
        TimePattern(site=0, omega=(0, 2))
    with pytest.raises(ValueError):
        MultiSitePattern(entries=((0, (1, 1)),))
    with pytest.raises(ValueError):
        MultiSitePattern(entries=((0, (1,)), (0, (2,))))
    with pytest.raises(ValueError):
        MultiSitePattern(entries=((0, (0,)),))
    assert MultiSitePattern(entries=((0, (2, 1)),)).horizon == 2


def test_all_ones_pattern_is_certain(interacting):
    pattern = TimePattern(site=0, omega=(1, 1, 1))
    assert path_probability(interacting, 0, pattern) == 1.0


def test_single_step_pattern_matches_marginal(interacting):
    for site in range(2):
        for x0 in range(4):
            p1 = marginal_trajectory(interacting, x0, 1)[1, site]
            value = path_probability(interacting, x0, TimePattern(site=site, omega=(0,)))
            assert value == pytest.approx(1.0 - p1, abs=5e-15)


def test_path_probability_against_naive_enumeration(interacting, broken):
    for spec in (interacting, broken):
        for site in range(spec.n):
            for omega in [(0,), (0, 0), (1, 0), (0, 1, 0), (1, 1, 0)]:
                pattern = TimePattern(site=site, omega=omega)
                cons = pattern.constraints()
                horizon = max(t for _, t in cons)
                expected = naive_event_probability(spec, 0, cons, horizon)
                got = path_probability(spec, 0, pattern)
                assert got == pytest.approx(expected, abs=1e-12)


def test_enumerate_and_propagate_agree(interacting):
    rng = np.random.default_rng(0)
    spec = zoo.random_certified_model(3, 23)
    for _ in range(10):
        site = int(rng.integers(spec.n))
        omega = tuple(int(b) for b in rng.integers(0, 2, size=4))
        if all(w == 1 for w in omega):
            continue
        pattern = TimePattern(site=site, omega=omega)
        a = path_probability(spec, 1, pattern, method="enumerate")
        b = path_probability(spec, 1, pattern, method="propagate")
        assert a == pytest.approx(b, abs=1e-13)


def test_trailing_ones_do_not_change_value(interacting):
    short = TimePattern(site=1, omega=(0, 1, 0))
    long = TimePattern(site=1, omega=(0, 1, 0, 1, 1, 1, 1, 1, 1, 1))
    assert path_probability(interacting, 0, long) == pytest.approx(
        path_probability(interacting, 0, short), abs=1e-15)


def test_multisite_against_naive(interacting):
    pattern = MultiSitePattern(entries=((0, (1, 3)), (1, (2,))))
    expected = naive_event_probability(interacting, 0, pattern.constraints(), 3)
    for method in ("enumerate", "propagate"):
        got = exact.multisite_probability(interacting, 0, pattern, method=method)
        assert got == pytest.approx(expected, abs=1e-12)


def test_empty_multisite_is_certain(interacting):
    assert exact.multisite_probability(
        interacting, 0, MultiSitePattern(entries=())) == 1.0


def test_enumeration_guard():
    spec = zoo.random_certified_model(5, 3)
    pattern = TimePattern(site=0, omega=(1,) * 5 + (0,))
    with pytest.raises(CapacityError):
        path_probability(spec, 0, pattern, method="enumerate")
    # propagation has no horizon guard
    value = path_probability(spec, 0, pattern, method="propagate")
    assert 0.0 < value < 1.0


def test_state_cap():
    spec = zoo.constant_pair(n=21, c=0.2, s=0.8)
    with pytest.raises(CapacityError):
        transition_matrix(spec)


# -- spin systems ------------------------------------------------------------


def test_two_state_generator():
    Q = spin_generator(zoo.two_state_spin(0.5, 1.0))
    assert np.allclose(Q, [[-0.5, 0.5], [1.0, -1.0]], atol=1e-15)


def test_generator_sparsity_matches_adjacency(ring3):
    Q = spin_generator(ring3)
    for x in range(8):
        for y in range(8):
            flips = bin(x ^ y).count("1")
            if flips >= 2:
                assert Q[x, y] == 0.0
    assert np.allclose(Q.sum(axis=1), 0.0, atol=1e-12)


def test_spin_rates_values(ring3):
    # from state 0b001, site 1 sees one occupied neighbour
    r = exact.spin_rates(ring3)
    assert r[0b001, 1] == pytest.approx(0.35, abs=1e-15)
    assert r[0b001, 0] == pytest.approx(1.0, abs=1e-15)  # death
    assert r[0b101, 1] == pytest.approx(0.7, abs=1e-15)


def test_two_state_law_closed_form():
    lam, mu = 0.5, 1.0
    spec = zoo.two_state_spin(lam, mu)
    for t in (0.0, 0.3, 1.0, 2.5):
        law = spin_law(spec, 0, t)
        expected = lam / (lam + mu) * (1.0 - np.exp(-(lam + mu) * t))
        assert law[1] == pytest.approx(expected, abs=1e-12)


def test_spin_law_matches_matrix_exponential(ring3):
    Q = spin_generator(ring3)
    for t in (0.25, 1.0, 3.0):
        truth = np.zeros(8)
        truth[1] = 1.0
        truth = truth @ expm(Q * t)
        law = spin_law(ring3, 1, t)
        assert np.allclose(law, truth, atol=1e-9)


def test_spin_semigroup_property(ring3):
    one = spin_law(ring3, 1, 1.5)
    two = exact.spin_law_from(ring3, spin_law(ring3, 1, 0.9), 0.6)
    assert np.allclose(one, two, atol=1e-11)


def test_generator_from_finite_difference(ring3):
    h = 1e-6
    v0 = np.zeros(8)
    v0[1] = 1.0
    approx = (spin_law(ring3, 1, h) - v0) / h
    assert np.allclose(approx, v0 @ spin_generator(ring3), atol=1e-5)


def test_poisson_mixture_recovers_identity():
    P = np.eye(3)
    v0 = np.array([0.2, 0.3, 0.5])
    out = poisson_mixture(P, v0, 7.3)
    assert np.allclose(out, v0, atol=1e-12)


def test_zero_rate_spin_is_frozen():
    spec = zoo.contact_ring(2, beta=0.0, mu=0.0)
    law = spin_law(spec, 1, 5.0)
    assert law[1] == 1.0


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 5000), steps=st.integers(0, 6))
def test_distributions_stay_normalised(seed, steps):
    spec = zoo.random_certified_model(3, seed)
    dist = exact.distribution(spec, seed % 8, steps)
    validate_distribution(dist)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 5000))
def test_chapman_kolmogorov(seed):
    spec = zoo.random_certified_model(2, seed)
    d_direct = exact.distribution(spec, 0, 5)
    d_chained = exact.distribution_from(spec, exact.distribution(spec, 0, 2), 3)
    assert np.allclose(d_direct, d_chained, atol=1e-12)
