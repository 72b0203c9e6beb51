import numpy as np
import pytest

from occupancy import zoo


@pytest.fixture
def interacting():
    return zoo.interacting_pair()


@pytest.fixture
def single_site():
    return zoo.constant_pair(n=1, c=0.3, s=0.8)


@pytest.fixture
def broken():
    return zoo.non_monotone_pair()


@pytest.fixture
def ring3():
    return zoo.contact_ring(3, beta=0.35, mu=1.0)


@pytest.fixture
def certified_suite():
    """A handful of certified random models of mixed dimension."""
    return [zoo.random_certified_model(n, seed=100 + n) for n in (2, 3, 4)]


def naive_transition_probability(spec, x: int, y: int) -> float:
    """Independent per-site product, written as plainly as possible."""
    prob = 1.0
    for i in range(spec.n):
        bits = [(x >> j) & 1 for j in range(spec.n)]
        point = np.array(bits, dtype=float)
        if bits[i]:
            q = spec.survival[i].eval(point)
        else:
            q = spec.colonisation[i].eval(point)
        prob *= q if (y >> i) & 1 else 1.0 - q
    return prob


def naive_event_probability(spec, x0: int, constraints, horizon: int) -> float:
    """Brute-force sum over literal trajectories (tiny cases only)."""
    size = 1 << spec.n
    total = 0.0
    stack = [(x0, 1, 1.0)]
    while stack:
        state, t, prob = stack.pop()
        if t > horizon:
            total += prob
            continue
        for nxt in range(size):
            ok = all(not ((nxt >> site) & 1)
                     for site, tc in constraints if tc == t)
            if not ok:
                continue
            p = naive_transition_probability(spec, state, nxt)
            if p > 0:
                stack.append((nxt, t + 1, prob * p))
    return total
