"""Deterministic site-occupancy approximations.

The discrete recursion propagates a probability vector p in [0,1]^n with
the same colonisation/survival functions the stochastic model uses,
evaluated at p instead of at a random state.  The continuous analogue is
the ODE p' = (1-p) * birth(p) - p * death(p), integrated with fixed-step
Euler or classic Runge-Kutta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, SpinSpec


def _check_point(spec, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.n,):
        raise ValueError(f"expected a point of shape ({spec.n},), got {p.shape}")
    return p


def recursion_step(spec: ModelSpec, p) -> np.ndarray:
    """One step of the deterministic occupancy recursion."""
    p = _check_point(spec, p)
    c = np.array([fam.eval(p) for fam in spec.colonisation])
    s = np.array([fam.eval(p) for fam in spec.survival])
    return c * (1.0 - p) + s * p


def iterate(spec: ModelSpec, p0, steps: int) -> np.ndarray:
    """(steps+1, n) trajectory of the recursion, row 0 being p0."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    p = _check_point(spec, p0)
    out = np.empty((steps + 1, spec.n))
    out[0] = p
    for t in range(1, steps + 1):
        p = recursion_step(spec, p)
        out[t] = p
    return out


def mask_self_colonisation(spec: ModelSpec) -> ModelSpec:
    """Pin each colonisation function's own coordinate to zero.

    On the lattice this never changes the process: colonisation only acts
    on sites that are currently empty.  On the cube it removes each site's
    self-term from its own colonisation pressure, which can only lower the
    deterministic trajectory while it remains an upper bound for the
    stochastic occupation probabilities (for certified models).
    """
    masked = tuple(fam.pinned(i, 0.0) for i, fam in enumerate(spec.colonisation))
    return ModelSpec(n=spec.n, colonisation=masked, survival=spec.survival)


def pin_self_survival(spec: ModelSpec, value: float = 1.0) -> ModelSpec:
    """Pin each survival function's own coordinate (experimentation only).

    Survival acts on occupied sites, so value=1.0 is the choice that leaves
    the lattice process unchanged.  Unlike mask_self_colonisation this
    generally *raises* increasing survival functions on the cube, loosening
    the deterministic bound rather than sharpening it, and no pin value
    both preserves the process and lowers the bound.  Exposed for
    experiments; there is no canonical improvement here.
    """
    pinned = tuple(fam.pinned(i, value) for i, fam in enumerate(spec.survival))
    return ModelSpec(n=spec.n, colonisation=spec.colonisation, survival=pinned)


@dataclass(frozen=True)
class OdeConfig:
    """Fixed-step integrator settings."""

    h: float = 1e-3
    method: str = "rk4"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size h must be > 0")
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"unknown method {self.method!r}")


def ode_rhs(spec: SpinSpec, p) -> np.ndarray:
    """Right-hand side of the spin occupancy ODE."""
    p = _check_point(spec, p)
    lam = np.array([fam.eval(p) for fam in spec.birth])
    mu = np.array([fam.eval(p) for fam in spec.death])
    return (1.0 - p) * lam - p * mu


def _advance(spec: SpinSpec, p: np.ndarray, h: float, method: str) -> np.ndarray:
    if method == "euler":
        p = p + h * ode_rhs(spec, p)
    else:
        k1 = ode_rhs(spec, p)
        k2 = ode_rhs(spec, np.clip(p + 0.5 * h * k1, 0.0, 1.0))
        k3 = ode_rhs(spec, np.clip(p + 0.5 * h * k2, 0.0, 1.0))
        k4 = ode_rhs(spec, np.clip(p + h * k3, 0.0, 1.0))
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return np.clip(p, 0.0, 1.0)


def step_count(t_end: float, h: float) -> tuple[int, float]:
    """Number of full steps and the remainder needed to land exactly on t_end."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    full = int(math.floor(t_end / h + 1e-9))
    rem = t_end - full * h
    if rem < 1e-12 * max(1.0, t_end):
        rem = 0.0
    return full, rem


def integrate_ode(spec: SpinSpec, p0, t_end: float,
                  config: OdeConfig = OdeConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step integration to t_end; returns (times, states).

    States are clamped to [0,1] after every step.  With method="euler" and
    h equal to a discretisation step, the returned rows reproduce the
    discrete recursion of the matching probability model up to round-off.
    """
    p = np.clip(_check_point(spec, p0), 0.0, 1.0)
    full, rem = step_count(t_end, config.h)
    times = [0.0]
    states = [p]
    for k in range(full):
        p = _advance(spec, p, config.h, config.method)
        times.append((k + 1) * config.h)
        states.append(p)
    if rem > 0.0:
        p = _advance(spec, p, rem, config.method)
        times.append(t_end)
        states.append(p)
    return np.asarray(times), np.vstack(states)
