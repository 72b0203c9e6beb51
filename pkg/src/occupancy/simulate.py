"""Monte Carlo for occupancy models, driven by addressed uniforms.

Every replicate r consumes the uniforms U[r, t, i] of a UniformArray and
nothing else, so runs are bitwise reproducible for a given seed and
independent of scheduling: workers always process whole replicate chunks
and combine exact integer counts.

A bit turns on when its uniform falls below the colonisation (if vacant)
or survival (if occupied) probability of the current state.  For models
whose survival dominates colonisation this threshold rule is monotone:
raising any uniform can only turn bits off, which is what the paired-path
check below exercises.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exact import MultiSitePattern, lattice_bits, state_bits
from .model import ModelSpec
from .streams import REPLICATE_CHUNK, UniformArray

# per-word threshold tables are precomputed below this dimension
_TABLE_CAP = 12


def _threshold_tables(spec: ModelSpec):
    if spec.n > _TABLE_CAP:
        return None
    bits = lattice_bits(spec.n)
    c = np.column_stack([fam.eval_batch(bits) for fam in spec.colonisation])
    s = np.column_stack([fam.eval_batch(bits) for fam in spec.survival])
    return c, s


def _thresholds(spec: ModelSpec, states: np.ndarray, tables) -> np.ndarray:
    if tables is not None:
        c_tab, s_tab = tables
        words = states @ (1 << np.arange(spec.n))
        return np.where(states > 0, s_tab[words], c_tab[words])
    pts = states.astype(float)
    c = np.column_stack([fam.eval_batch(pts) for fam in spec.colonisation])
    s = np.column_stack([fam.eval_batch(pts) for fam in spec.survival])
    return np.where(states > 0, s, c)


def step_occupancy(spec: ModelSpec, states: np.ndarray, uniforms: np.ndarray,
                   tables=None) -> np.ndarray:
    """Advance a (B, n) batch of 0/1 states one step with given uniforms."""
    states = np.asarray(states)
    if states.shape != uniforms.shape or states.shape[-1] != spec.n:
        raise ValueError("states and uniforms must both have shape (B, n)")
    if tables is None:
        tables = _threshold_tables(spec)
    return (uniforms < _thresholds(spec, states, tables)).astype(np.int8)


def step_indep(spec: ModelSpec, states: np.ndarray, p_t: np.ndarray,
               uniforms: np.ndarray) -> np.ndarray:
    """Advance surrogate chains whose rates come from the deterministic point p_t."""
    states = np.asarray(states)
    p_t = np.asarray(p_t, float)
    c = np.array([fam.eval(p_t) for fam in spec.colonisation])
    s = np.array([fam.eval(p_t) for fam in spec.survival])
    return (uniforms < np.where(states > 0, s, c)).astype(np.int8)


@dataclass(frozen=True, eq=False)
class McEstimate:
    mean: float
    se: float
    reps: int
    seed: int


@dataclass(frozen=True, eq=False)
class MarginalEstimates:
    """Occupation frequencies (steps+1, n) with exact-count standard errors."""

    means: np.ndarray
    ses: np.ndarray
    reps: int
    seed: int

    def estimate(self, step: int, site: int) -> McEstimate:
        return McEstimate(mean=float(self.means[step, site]),
                          se=float(self.ses[step, site]),
                          reps=self.reps, seed=self.seed)


def _chunk_plan(reps: int):
    if reps < 1:
        raise ValueError("reps must be >= 1")
    plan = []
    for chunk in range((reps + REPLICATE_CHUNK - 1) // REPLICATE_CHUNK):
        rows = min(REPLICATE_CHUNK, reps - chunk * REPLICATE_CHUNK)
        plan.append((chunk, rows))
    return plan


def _run_chunks(plan, worker, workers: int):
    """Run per-chunk jobs and return results in plan order."""
    if workers <= 1:
        return [worker(chunk, rows) for chunk, rows in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: worker(*job), plan))


def _bernoulli_se(count: np.ndarray, reps: int) -> np.ndarray:
    """Standard error of a mean of 0/1 replicates from the exact count."""
    if reps < 2:
        return np.zeros_like(np.asarray(count, float))
    var = (count - count * (count / reps)) / (reps - 1)
    return np.sqrt(np.maximum(var, 0.0)) / np.sqrt(reps)


def simulate_marginals(spec: ModelSpec, x0: int, steps: int, reps: int,
                       seed: int, workers: int = 1) -> MarginalEstimates:
    """Estimate occupation probabilities at steps 0..steps from reps paths."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    ua = UniformArray(seed=seed, n_sites=spec.n)
    x0_bits = state_bits(x0, spec.n).astype(np.int8)
    tables = _threshold_tables(spec)

    def run(chunk: int, rows: int) -> np.ndarray:
        states = np.tile(x0_bits, (rows, 1))
        counts = np.zeros((steps + 1, spec.n), dtype=np.int64)
        counts[0] = states.sum(axis=0)
        for t in range(1, steps + 1):
            u = ua.chunk_values(t, chunk, rows)
            states = step_occupancy(spec, states, u, tables)
            counts[t] = states.sum(axis=0)
        return counts

    counts = sum(_run_chunks(_chunk_plan(reps), run, workers))
    return MarginalEstimates(means=counts / reps, ses=_bernoulli_se(counts, reps),
                             reps=reps, seed=seed)


def simulate_event_probability(spec: ModelSpec, x0: int, pattern: MultiSitePattern,
                               reps: int, seed: int, workers: int = 1) -> McEstimate:
    """Estimate the probability of a joint vacancy pattern."""
    horizon = pattern.horizon
    by_time: dict[int, list[int]] = {}
    for site, t in pattern.constraints():
        by_time.setdefault(t, []).append(site)
    ua = UniformArray(seed=seed, n_sites=spec.n)
    x0_bits = state_bits(x0, spec.n).astype(np.int8)
    tables = _threshold_tables(spec)

    def run(chunk: int, rows: int) -> np.ndarray:
        states = np.tile(x0_bits, (rows, 1))
        alive = np.ones(rows, dtype=bool)
        for t in range(1, horizon + 1):
            u = ua.chunk_values(t, chunk, rows)
            states = step_occupancy(spec, states, u, tables)
            for site in by_time.get(t, ()):
                alive &= states[:, site] == 0
        return np.asarray(alive.sum(), dtype=np.int64)

    count = int(sum(_run_chunks(_chunk_plan(reps), run, workers)))
    return McEstimate(mean=count / reps, se=float(_bernoulli_se(np.asarray(count), reps)),
                      reps=reps, seed=seed)


def monotone_path_check(spec: ModelSpec, x0: int, steps: int, reps: int, seed: int,
                        gamma: float = 0.5, workers: int = 1) -> int:
    """Count order violations between paths driven by U and by U**gamma.

    U**gamma dominates U pointwise (gamma in (0,1]) and the threshold rule
    is antitone in its uniforms for survival-dominant monotone models, so
    the powered path should sit below the plain one at every site and step.
    Returns the number of (replicate, step, site) triples where it does not.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    ua = UniformArray(seed=seed, n_sites=spec.n)
    x0_bits = state_bits(x0, spec.n).astype(np.int8)
    tables = _threshold_tables(spec)

    def run(chunk: int, rows: int) -> np.ndarray:
        lo = np.tile(x0_bits, (rows, 1))
        hi = lo.copy()
        bad = 0
        for t in range(1, steps + 1):
            u = ua.chunk_values(t, chunk, rows)
            hi = step_occupancy(spec, hi, u, tables)
            lo = step_occupancy(spec, lo, u ** gamma, tables)
            bad += int(np.sum(lo > hi))
        return np.asarray(bad, dtype=np.int64)

    return int(sum(_run_chunks(_chunk_plan(reps), run, workers)))
