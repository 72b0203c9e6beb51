"""Time discretisation linking spin systems to occupancy chains.

A spin system with birth rates lam and death rates mu maps, for a step
delta small enough that delta * sup(lam) <= 1 and delta * sup(mu) <= 1,
to the occupancy chain with colonisation delta * lam and survival
1 - delta * mu.  Three quantities measure how faithful the chain is:

  * uniformised flip rates (off-diagonal transition mass over delta)
    against the generator;
  * the law of the chain subordinated to a Poisson(t / delta) number of
    steps against the continuous-time law;
  * the chain's deterministic recursion (an Euler scheme with step
    delta) against the occupancy ODE.

All three converge at first order in delta, and path-level vacancy
orderings established for the chain survive the limit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from . import exact, indep, meanfield
from .exact import MultiSitePattern
from .meanfield import OdeConfig
from .model import FunctionFamily, ModelSpec, SpinSpec

DEFAULT_DELTAS = tuple(2.0 ** -k for k in range(4, 9))
_ADMISSIBLE_SLACK = 1e-12


class InadmissibleDelta(ValueError):
    """Step size too large: some discretised probability leaves [0,1]."""


@dataclass(frozen=True)
class DiscretisationConfig:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")


def admissibility_bound(spec: SpinSpec) -> float:
    """Largest step for which all discretised probabilities stay in [0,1].

    Uses exact per-family range bounds, so no sampling is involved; pins
    are ignored by the bounds, which can only make the result smaller
    (never unsafely large).
    """
    sup = 0.0
    for fam in spec.birth + spec.death:
        sup = max(sup, fam.range_bounds()[1])
    return np.inf if sup == 0.0 else 1.0 / sup


def discretise(spec: SpinSpec, config: DiscretisationConfig) -> ModelSpec:
    """Occupancy chain with colonisation delta*birth and survival 1 - delta*death."""
    delta = config.delta
    if delta > admissibility_bound(spec) * (1.0 + _ADMISSIBLE_SLACK):
        raise InadmissibleDelta(
            f"delta={delta} exceeds the admissibility bound {admissibility_bound(spec)}")
    colonisation = tuple(
        replace(fam, role="probability",
                offset=delta * fam.offset, scale=delta * fam.scale)
        for fam in spec.birth)
    survival = tuple(
        replace(fam, role="probability",
                offset=1.0 - delta * fam.offset, scale=-delta * fam.scale)
        for fam in spec.death)
    return ModelSpec(n=spec.n, colonisation=colonisation, survival=survival)


def uniformized_rates(spec: SpinSpec, config: DiscretisationConfig) -> np.ndarray:
    """Generator-shaped matrix from the chain: off-diagonal T/delta, diagonal balancing.

    The chain's holding probability contributes nothing off-diagonal, so
    the diagonal is minus the off-diagonal row sum rather than (T_xx-1)/delta.
    """
    T = exact.transition_matrix(discretise(spec, config))
    Q = T / config.delta
    size = Q.shape[0]
    idx = np.arange(size)
    Q[idx, idx] = 0.0
    Q[idx, idx] = -Q.sum(axis=1)
    return Q


def rate_defect(spec: SpinSpec, config: DiscretisationConfig) -> tuple[float, float]:
    """(worst single-flip rate error, worst multi-flip rate) of the chain.

    Single-flip entries converge to the generator's at first order in
    delta; transitions flipping two or more bits have probability
    O(delta^2), hence rate O(delta).
    """
    Q = uniformized_rates(spec, config)
    G = exact.spin_generator(spec)
    size = Q.shape[0]
    words = np.arange(size)
    ham = np.zeros((size, size), dtype=int)
    for i in range(int(np.log2(size))):
        ham += ((words[:, None] ^ words[None, :]) >> i) & 1
    single = float(np.max(np.abs((Q - G))[ham == 1]))
    multi = float(np.max(Q[ham >= 2], initial=0.0))
    return single, multi


def subordinated_law(spec: SpinSpec, config: DiscretisationConfig, x0: int,
                     t: float, tail_tol: float = 1e-12) -> np.ndarray:
    """Law of the chain run for a Poisson(t/delta) number of steps."""
    if t < 0:
        raise ValueError("t must be >= 0")
    exact.check_state_cap(spec.n)
    if not 0 <= x0 < (1 << spec.n):
        raise ValueError(f"state word {x0} out of range")
    T = exact.transition_matrix(discretise(spec, config))
    v0 = np.zeros(T.shape[0])
    v0[x0] = 1.0
    if t == 0:
        return v0
    return exact.as_distribution(
        exact.poisson_mixture(T, v0, t / config.delta, tail_tol))


def law_distance(spec: SpinSpec, config: DiscretisationConfig, x0: int, t: float,
                 tail_tol: float = 1e-12) -> float:
    """Total variation between the subordinated chain and the spin law at t."""
    approx = subordinated_law(spec, config, x0, t, tail_tol)
    truth = exact.spin_law(spec, x0, t, tail_tol)
    return 0.5 * float(np.abs(approx - truth).sum())


def euler_gap(spec: SpinSpec, p0, t: float, config: DiscretisationConfig,
              reference: OdeConfig = OdeConfig(h=1e-3, method="rk4")) -> float:
    """Sup-norm gap at time t between the delta-step Euler path and a fine reference.

    The Euler path with step delta is exactly the discretised chain's
    deterministic recursion, so this measures how far the chain's
    deterministic trajectory sits from the ODE flow.
    """
    _, coarse = meanfield.integrate_ode(spec, p0, t,
                                        OdeConfig(h=config.delta, method="euler"))
    _, fine = meanfield.integrate_ode(spec, p0, t, reference)
    return float(np.max(np.abs(coarse[-1] - fine[-1])))


def ordering_margins(spec: SpinSpec, x0: int, demands,
                     deltas=DEFAULT_DELTAS) -> list[tuple[float, float]]:
    """Vacancy-ordering margins of the discretised chains along a delta grid.

    `demands` lists (site, times) with real-valued times; each time must be
    an integer multiple of every delta in the grid.  Returns (delta, margin)
    pairs, margin being the chain's joint vacancy probability minus the
    independent surrogate's.
    """
    out = []
    for delta in deltas:
        entries = []
        for site, times in demands:
            steps = []
            for tau in times:
                k = round(tau / delta)
                if abs(k * delta - tau) > 1e-9 * max(1.0, abs(tau)):
                    raise ValueError(f"time {tau} is not a multiple of delta={delta}")
                steps.append(k)
            entries.append((site, tuple(steps)))
        chain = discretise(spec, DiscretisationConfig(delta))
        discrete = MultiSitePattern(entries=tuple(entries))
        p_chain = exact.multisite_probability(spec=chain, x0=x0, pattern=discrete,
                                              method="propagate")
        p_indep = indep.multisite_probability(chain, x0, discrete)
        out.append((delta, p_chain - p_indep))
    return out


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows of (delta, metric, value) for the discretisation diagnostics."""

    rows: tuple[tuple[float, str, float], ...]

    def values(self, metric: str) -> list[tuple[float, float]]:
        return [(d, v) for d, m, v in self.rows if m == metric]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delta", "metric", "value"])
        for delta, metric, value in self.rows:
            writer.writerow([repr(delta), metric, repr(value)])
        return buf.getvalue()


def convergence_table(spec: SpinSpec, x0: int, t: float, deltas=DEFAULT_DELTAS,
                      tail_tol: float = 1e-12) -> ConvergenceTable:
    """Rate, law, and Euler diagnostics for each step size on the grid."""
    p0 = exact.state_bits(x0, spec.n)
    rows = []
    for delta in deltas:
        config = DiscretisationConfig(delta)
        single, multi = rate_defect(spec, config)
        rows.append((delta, "single-flip-rate-error", single))
        rows.append((delta, "multi-flip-rate", multi))
        rows.append((delta, "law-distance", law_distance(spec, config, x0, t, tail_tol)))
        rows.append((delta, "euler-gap", euler_gap(spec, p0, t, config)))
    return ConvergenceTable(rows=tuple(rows))
