"""Exact computations on the full state space {0,1}^n.

States are integer words with site i stored in bit i (LSB), so word 0 is
the empty configuration and word 2^n - 1 is fully occupied.  Everything
here enumerates the 2^n states explicitly and is the ground truth that
the approximate modules are checked against; n is capped accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .model import ModelSpec, SpinSpec

# hard cap on state-space dimension for dense enumeration
STATE_CAP = 20
# trajectory enumeration guard: 2^(n * horizon) literal paths at most
PATH_ENUM_CAP = 2 ** 24
_ENUM_CHUNK = 2 ** 18

DIST_ATOL = 1e-12


class CapacityError(RuntimeError):
    """State space or trajectory space too large for dense enumeration."""


def check_state_cap(n: int, cap: int = STATE_CAP):
    if n > cap:
        raise CapacityError(f"state space 2^{n} exceeds the dense cap 2^{cap}")


@lru_cache(maxsize=32)
def lattice_bits(n: int) -> np.ndarray:
    """(2^n, n) array of state bits as floats; row w is the word w."""
    check_state_cap(n)
    words = np.arange(1 << n, dtype=np.int64)[:, None]
    bits = ((words >> np.arange(n)) & 1).astype(float)
    bits.setflags(write=False)
    return bits


def state_bits(word: int, n: int) -> np.ndarray:
    if not 0 <= word < (1 << n):
        raise ValueError(f"state word {word} out of range for n={n}")
    return ((word >> np.arange(n)) & 1).astype(float)


def bits_to_word(bits) -> int:
    arr = np.asarray(bits)
    return int(np.sum((arr != 0) * (1 << np.arange(len(arr)))))


def validate_distribution(dist: np.ndarray, atol: float = DIST_ATOL):
    dist = np.asarray(dist, float)
    if dist.ndim != 1 or dist.size & (dist.size - 1):
        raise ValueError("distribution length must be a power of two")
    if np.any(dist < 0):
        raise ValueError("distribution has negative mass")
    if abs(dist.sum() - 1.0) > atol:
        raise ValueError(f"distribution mass {dist.sum()} not within {atol} of 1")


def as_distribution(values: np.ndarray) -> np.ndarray:
    """Clamp tiny negative round-off to zero and renormalise."""
    v = np.clip(np.asarray(values, float), 0.0, None)
    total = v.sum()
    if total <= 0:
        raise ValueError("no mass left after clamping")
    return v / total


def site_probabilities(spec: ModelSpec) -> np.ndarray:
    """(2^n, n) table: entry [x, i] is the chance bit i is set next, from x."""
    bits = lattice_bits(spec.n)
    q = np.empty((1 << spec.n, spec.n))
    for i in range(spec.n):
        c = spec.colonisation[i].eval_batch(bits)
        s = spec.survival[i].eval_batch(bits)
        q[:, i] = c * (1.0 - bits[:, i]) + s * bits[:, i]
    return q


def transition_matrix(spec: ModelSpec) -> np.ndarray:
    """Dense one-step kernel; bits update conditionally independently."""
    check_state_cap(spec.n)
    q = site_probabilities(spec)
    size = 1 << spec.n
    col_bits = lattice_bits(spec.n)
    T = np.ones((size, size))
    for i in range(spec.n):
        qi = q[:, i][:, None]
        T *= np.where(col_bits[None, :, i] > 0, qi, 1.0 - qi)
    return T


def distribution_from(spec: ModelSpec, dist: np.ndarray, steps: int) -> np.ndarray:
    if steps < 0:
        raise ValueError("steps must be >= 0")
    v = np.asarray(dist, float).copy()
    if steps:
        T = transition_matrix(spec)
        for _ in range(steps):
            v = v @ T
    return v


def distribution(spec: ModelSpec, x0: int, steps: int) -> np.ndarray:
    check_state_cap(spec.n)
    if not 0 <= x0 < (1 << spec.n):
        raise ValueError(f"state word {x0} out of range")
    v = np.zeros(1 << spec.n)
    v[x0] = 1.0
    return distribution_from(spec, v, steps)


def marginals(dist: np.ndarray) -> np.ndarray:
    """Per-site occupation probabilities of a state distribution."""
    dist = np.asarray(dist, float)
    n = int(math.log2(dist.size))
    if 1 << n != dist.size:
        raise ValueError("distribution length must be a power of two")
    return lattice_bits(n).T @ dist


def marginal_trajectory(spec: ModelSpec, x0: int, steps: int) -> np.ndarray:
    """(steps+1, n) exact occupation probabilities from a point mass at x0."""
    check_state_cap(spec.n)
    v = np.zeros(1 << spec.n)
    v[x0] = 1.0
    T = transition_matrix(spec) if steps else None
    out = np.empty((steps + 1, spec.n))
    out[0] = marginals(v)
    for t in range(1, steps + 1):
        v = v @ T
        out[t] = marginals(v)
    return out


# -- event patterns ----------------------------------------------------------


@dataclass(frozen=True)
class TimePattern:
    """One site observed at steps 1..m; omega[t-1] = 0 demands vacancy at t.

    The probability of the pattern is the chance that the site's path agrees
    with omega wherever omega is 0; entries equal to 1 impose nothing beyond
    the complementary patterns summing correctly.
    """

    site: int
    omega: tuple[int, ...]

    def __post_init__(self):
        if len(self.omega) < 1:
            raise ValueError("omega must have at least one entry")
        if any(w not in (0, 1) for w in self.omega):
            raise ValueError("omega entries must be 0 or 1")
        object.__setattr__(self, "omega", tuple(int(w) for w in self.omega))

    @property
    def horizon(self) -> int:
        return len(self.omega)

    def constraints(self) -> tuple[tuple[int, int], ...]:
        return tuple((self.site, t) for t, w in enumerate(self.omega, start=1) if w == 0)


@dataclass(frozen=True)
class MultiSitePattern:
    """Joint vacancy demands: site i vacant at each step in times[i]."""

    entries: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        seen = set()
        cleaned = []
        for site, times in self.entries:
            site = int(site)
            if site in seen:
                raise ValueError(f"duplicate site {site}")
            seen.add(site)
            times = tuple(sorted(int(t) for t in times))
            if len(set(times)) != len(times):
                raise ValueError(f"duplicate times for site {site}")
            if times and times[0] < 1:
                raise ValueError("times must be >= 1")
            cleaned.append((site, times))
        object.__setattr__(self, "entries", tuple(cleaned))

    @property
    def horizon(self) -> int:
        return max((t for _, times in self.entries for t in times), default=0)

    def constraints(self) -> tuple[tuple[int, int], ...]:
        return tuple((site, t) for site, times in self.entries for t in times)


def _event_enumerate(spec: ModelSpec, x0: int, constraints, horizon: int) -> float:
    """Literal sum over all length-`horizon` trajectories."""
    n = spec.n
    if horizon * n > round(math.log2(PATH_ENUM_CAP)):
        raise CapacityError(
            f"2^({n}*{horizon}) trajectories exceed the enumeration cap {PATH_ENUM_CAP}")
    T = transition_matrix(spec)
    size = 1 << n
    mask = size - 1
    total = 0.0
    n_traj = size ** horizon
    for start in range(0, n_traj, _ENUM_CHUNK):
        idx = np.arange(start, min(start + _ENUM_CHUNK, n_traj), dtype=np.int64)
        words = [(idx >> (n * t)) & mask for t in range(horizon)]
        prob = T[x0, words[0]].copy()
        for t in range(1, horizon):
            prob *= T[words[t - 1], words[t]]
        for site, t in constraints:
            prob *= 1.0 - ((words[t - 1] >> site) & 1)
        total += float(prob.sum())
    return total


def _event_propagate(spec: ModelSpec, x0: int, constraints, horizon: int) -> float:
    """Push the distribution forward, zeroing constrained states as reached."""
    size = 1 << spec.n
    by_time: dict[int, list[int]] = {}
    for site, t in constraints:
        by_time.setdefault(t, []).append(site)
    T = transition_matrix(spec)
    v = np.zeros(size)
    v[x0] = 1.0
    words = np.arange(size)
    for t in range(1, horizon + 1):
        v = v @ T
        for site in by_time.get(t, ()):
            v = v * (1 - ((words >> site) & 1))
    return float(v.sum())


def _event_probability(spec, x0: int, constraints, horizon: int, method: str) -> float:
    check_state_cap(spec.n)
    if not 0 <= x0 < (1 << spec.n):
        raise ValueError(f"state word {x0} out of range")
    for site, t in constraints:
        if not 0 <= site < spec.n:
            raise ValueError(f"site {site} out of range")
        if t < 1:
            raise ValueError("constrained steps must be >= 1")
    if horizon == 0:
        return 1.0
    if method == "enumerate":
        return _event_enumerate(spec, x0, constraints, horizon)
    if method == "propagate":
        return _event_propagate(spec, x0, constraints, horizon)
    raise ValueError(f"unknown method {method!r}")


def path_probability(spec: ModelSpec, x0: int, pattern: TimePattern,
                     method: str = "enumerate") -> float:
    """Probability one site's path matches the pattern's vacancy demands.

    Trailing unconstrained steps are trimmed before enumerating, so the
    guard applies to the last constrained step, not to len(omega).
    """
    cons = pattern.constraints()
    horizon = max((t for _, t in cons), default=0)
    return _event_probability(spec, x0, cons, horizon, method)


def multisite_probability(spec: ModelSpec, x0: int, pattern: MultiSitePattern,
                          method: str = "enumerate") -> float:
    """Probability of joint vacancies across sites and steps."""
    cons = pattern.constraints()
    horizon = max((t for _, t in cons), default=0)
    return _event_probability(spec, x0, cons, horizon, method)


# -- spin systems ------------------------------------------------------------


def spin_rates(spec: SpinSpec) -> np.ndarray:
    """(2^n, n) flip rates: birth rate off an empty site, death rate off an occupied one."""
    bits = lattice_bits(spec.n)
    r = np.empty((1 << spec.n, spec.n))
    for i in range(spec.n):
        lam = spec.birth[i].eval_batch(bits)
        mu = spec.death[i].eval_batch(bits)
        r[:, i] = lam * (1.0 - bits[:, i]) + mu * bits[:, i]
    return r


def spin_generator(spec: SpinSpec) -> np.ndarray:
    """Dense generator; only single-bit flips carry rate."""
    check_state_cap(spec.n)
    size = 1 << spec.n
    r = spin_rates(spec)
    Q = np.zeros((size, size))
    words = np.arange(size)
    for i in range(spec.n):
        Q[words, words ^ (1 << i)] = r[:, i]
    Q[words, words] = 0.0
    Q[words, words] = -Q.sum(axis=1)
    return Q


def poisson_mixture(P: np.ndarray, v0: np.ndarray, mean: float,
                    tail_tol: float = 1e-12) -> np.ndarray:
    """Sum of pmf(k; mean) * v0 P^k, truncated once the pmf mass reaches 1 - tail_tol."""
    if mean < 0:
        raise ValueError("mean must be >= 0")
    if mean == 0:
        return np.asarray(v0, float).copy()
    k_hi = int(stats.poisson.isf(tail_tol, mean)) + 8
    pmf = stats.poisson.pmf(np.arange(k_hi + 1), mean)
    last = min(int(np.searchsorted(np.cumsum(pmf), 1.0 - tail_tol)), k_hi)
    acc = pmf[0] * np.asarray(v0, float)
    v = np.asarray(v0, float)
    for k in range(1, last + 1):
        v = v @ P
        acc = acc + pmf[k] * v
    return acc


def spin_law_from(spec: SpinSpec, dist: np.ndarray, t: float,
                  tail_tol: float = 1e-12) -> np.ndarray:
    """Law at time t by uniformisation: Poisson mixture over powers of I + Q/rate."""
    if t < 0:
        raise ValueError("t must be >= 0")
    check_state_cap(spec.n)
    v0 = np.asarray(dist, float)
    Q = spin_generator(spec)
    rate = float(np.max(-np.diag(Q)))
    if rate <= 0.0 or t == 0:
        return v0.copy()
    P = np.eye(Q.shape[0]) + Q / rate
    return as_distribution(poisson_mixture(P, v0, rate * t, tail_tol))


def spin_law(spec: SpinSpec, x0: int, t: float, tail_tol: float = 1e-12) -> np.ndarray:
    if not 0 <= x0 < (1 << spec.n):
        raise ValueError(f"state word {x0} out of range")
    v = np.zeros(1 << spec.n)
    v[x0] = 1.0
    return spin_law_from(spec, v, t, tail_tol)
