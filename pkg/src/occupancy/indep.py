"""Independent-site surrogate processes.

Each site evolves as its own two-state chain whose transition
probabilities (or rates, in continuous time) are the model's functions
evaluated along the deterministic trajectory rather than at the random
state.  Site marginals of the surrogate coincide with the deterministic
trajectory itself; joint laws factor across sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import meanfield
from .exact import MultiSitePattern, TimePattern, state_bits
from .meanfield import OdeConfig
from .model import ModelSpec, SpinSpec


@dataclass(frozen=True)
class SiteChainSchedule:
    """Per-step colonise/survive probabilities for one site's two-state chain."""

    site: int
    colonise: np.ndarray
    survive: np.ndarray

    def __post_init__(self):
        if self.colonise.shape != self.survive.shape or self.colonise.ndim != 1:
            raise ValueError("colonise and survive must be equal-length vectors")


def site_schedule(spec: ModelSpec, x0: int, horizon: int, site: int) -> SiteChainSchedule:
    """Schedule driving site's chain for steps 1..horizon from state word x0."""
    if not 0 <= site < spec.n:
        raise ValueError(f"site {site} out of range")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    traj = meanfield.iterate(spec, state_bits(x0, spec.n), horizon - 1)
    return SiteChainSchedule(
        site=site,
        colonise=spec.colonisation[site].eval_batch(traj),
        survive=spec.survival[site].eval_batch(traj),
    )


def marginal(spec: ModelSpec, x0: int, t: int) -> np.ndarray:
    """Surrogate occupation probabilities at step t; equals the recursion row."""
    traj = meanfield.iterate(spec, state_bits(x0, spec.n), t)
    return traj[-1]


def path_probability(spec: ModelSpec, x0: int, pattern: TimePattern) -> float:
    """Forward two-state recursion for one site's vacancy pattern."""
    m = pattern.horizon
    sched = site_schedule(spec, x0, m, pattern.site)
    bit = int(state_bits(x0, spec.n)[pattern.site])
    v = np.array([1.0 - bit, float(bit)])
    for t in range(m):
        c, s = sched.colonise[t], sched.survive[t]
        v = np.array([v[0] * (1.0 - c) + v[1] * (1.0 - s), v[0] * c + v[1] * s])
        if pattern.omega[t] == 0:
            v[1] = 0.0
    return float(v.sum())


def path_probability_decomposed(spec: ModelSpec, x0: int, pattern: TimePattern) -> float:
    """Same value by peeling the last demanded vacancy.

    Writing phi for the last step where the pattern demands vacancy, the
    chain either was vacant at phi-1 and stayed off, or was occupied at
    phi-1 and died; conditioning splits the probability into
    (1 - survive) * P(pattern with phi freed) plus
    (survive - colonise) * P(pattern with phi freed and phi-1 demanded).
    An independent route used to cross-check path_probability.
    """
    m = pattern.horizon
    sched = site_schedule(spec, x0, m, pattern.site)
    bit = int(state_bits(x0, spec.n)[pattern.site])
    memo: dict[tuple[int, ...], float] = {}

    def solve(omega: tuple[int, ...]) -> float:
        if omega in memo:
            return memo[omega]
        zeros = [t for t, w in enumerate(omega, start=1) if w == 0]
        if not zeros:
            value = 1.0
        else:
            phi = zeros[-1]
            if phi == 1:
                c, s = sched.colonise[0], sched.survive[0]
                value = 1.0 - (c if bit == 0 else s)
            else:
                # the chain is either vacant at phi-1 and fails to colonise,
                # or occupied at phi-1 and dies; survive - colonise weights
                # the second branch after freeing step phi
                c, s = sched.colonise[phi - 1], sched.survive[phi - 1]
                freed = list(omega)
                freed[phi - 1] = 1
                lower = list(freed)
                lower[phi - 2] = 0
                value = ((1.0 - s) * solve(tuple(freed))
                         + (s - c) * solve(tuple(lower)))
        memo[omega] = value
        return value

    return solve(pattern.omega)


def multisite_probability(spec: ModelSpec, x0: int, pattern: MultiSitePattern) -> float:
    """Joint vacancy probability; sites are independent so it is a product."""
    value = 1.0
    for site, times in pattern.entries:
        if not times:
            continue
        m = max(times)
        omega = [1] * m
        for t in times:
            omega[t - 1] = 0
        value *= path_probability(spec, x0, TimePattern(site=site, omega=tuple(omega)))
    return value


def _coupled_rhs(spec: SpinSpec, site: int, p: np.ndarray, v: np.ndarray):
    lam = spec.birth[site].eval(p)
    mu = spec.death[site].eval(p)
    dp = meanfield.ode_rhs(spec, p)
    dv = np.array([-v[0] * lam + v[1] * mu, v[0] * lam - v[1] * mu])
    return dp, dv


def _coupled_advance(spec: SpinSpec, site: int, p, v, h: float, method: str):
    if method == "euler":
        dp, dv = _coupled_rhs(spec, site, p, v)
        return np.clip(p + h * dp, 0.0, 1.0), v + h * dv
    kp1, kv1 = _coupled_rhs(spec, site, p, v)
    kp2, kv2 = _coupled_rhs(spec, site, np.clip(p + 0.5 * h * kp1, 0.0, 1.0),
                            v + 0.5 * h * kv1)
    kp3, kv3 = _coupled_rhs(spec, site, np.clip(p + 0.5 * h * kp2, 0.0, 1.0),
                            v + 0.5 * h * kv2)
    kp4, kv4 = _coupled_rhs(spec, site, np.clip(p + h * kp3, 0.0, 1.0), v + h * kv3)
    p = np.clip(p + (h / 6.0) * (kp1 + 2 * kp2 + 2 * kp3 + kp4), 0.0, 1.0)
    v = v + (h / 6.0) * (kv1 + 2 * kv2 + 2 * kv3 + kv4)
    return p, v


def spin_path_probability(spec: SpinSpec, x0: int, site: int, times,
                          config: OdeConfig = OdeConfig()) -> float:
    """P(site vacant at every listed time) for the continuous-time surrogate.

    The site's two-state master equation is integrated jointly with the
    occupancy ODE that drives its rates; at each listed time the occupied
    mass is projected out (conditioning on vacancy without renormalising).
    """
    if not 0 <= site < spec.n:
        raise ValueError(f"site {site} out of range")
    times = [float(t) for t in times]
    if any(t <= 0 for t in times):
        raise ValueError("times must be > 0")
    if sorted(set(times)) != times:
        raise ValueError("times must be strictly increasing")
    p = state_bits(x0, spec.n)
    bit = int(p[site])
    v = np.array([1.0 - bit, float(bit)])
    t_cur = 0.0
    for t_next in times:
        full, rem = meanfield.step_count(t_next - t_cur, config.h)
        for _ in range(full):
            p, v = _coupled_advance(spec, site, p, v, config.h, config.method)
        if rem > 0.0:
            p, v = _coupled_advance(spec, site, p, v, rem, config.method)
        v[1] = 0.0
        t_cur = t_next
    return float(v[0])
