"""Counter-addressed uniform random streams.

Every uniform used anywhere in the package is a pure function of a small
integer address, never of execution order.  Streams are built on Philox,
a counter-based generator: the 256-bit counter is laid out as

    counter = [0, block, lane, domain]

with word 0 left free-running for draws within a stream, and the key is
``[seed, salt]``.  Distinct (domain, lane, block) triples therefore give
independent streams for the same seed, and re-drawing any prefix of a
stream is reproducible regardless of what else has been generated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
# arbitrary odd salt; fixed forever so that seeds alone determine streams
_KEY_SALT = 0x9E3779B97F4A7C15

# domains keep modules off each other's streams even at equal (lane, block)
DOMAIN_SIMULATION = 0
DOMAIN_ASSUMPTIONS = 1

# replicates per stream block in UniformArray; an engine constant, not a
# tuning knob: changing it changes which uniform any replicate sees
REPLICATE_CHUNK = 1024


def uniform_stream(seed: int, domain: int, lane: int, block: int, count: int) -> np.ndarray:
    """First `count` doubles of the stream addressed by (seed, domain, lane, block)."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    bitgen = np.random.Philox(
        key=[int(seed) & _MASK64, _KEY_SALT],
        counter=[0, int(block) & _MASK64, int(lane) & _MASK64, int(domain) & _MASK64],
    )
    return np.random.Generator(bitgen).random(count)


def assumption_uniforms(seed: int, lane: int, count: int) -> np.ndarray:
    """Uniforms for hypothesis sampling; one lane per hypothesis index."""
    return uniform_stream(seed, DOMAIN_ASSUMPTIONS, lane, 0, count)


@dataclass(frozen=True)
class UniformArray:
    """Virtual array U[replicate, step, site] of iid uniforms.

    Values are a pure function of (seed, replicate, step, site).  Replicates
    are grouped into chunks of REPLICATE_CHUNK rows; chunk c at step t is one
    contiguous stream, row-major over (row within chunk, site).  Workers that
    process whole chunks in any order reproduce identical values.
    """

    seed: int
    n_sites: int

    def chunk_values(self, step: int, chunk_index: int, rows: int = REPLICATE_CHUNK) -> np.ndarray:
        """Uniforms for the first `rows` replicates of one chunk at one step."""
        if not 1 <= rows <= REPLICATE_CHUNK:
            raise ValueError("rows must be in 1..REPLICATE_CHUNK")
        values = uniform_stream(self.seed, DOMAIN_SIMULATION, step, chunk_index,
                                rows * self.n_sites)
        return values.reshape(rows, self.n_sites)

    def replicate_values(self, replicate: int, step: int) -> np.ndarray:
        """All site uniforms for one replicate at one step."""
        row = replicate % REPLICATE_CHUNK
        chunk = self.chunk_values(step, replicate // REPLICATE_CHUNK, rows=row + 1)
        return chunk[row]

    def value(self, replicate: int, step: int, site: int) -> float:
        if not 0 <= site < self.n_sites:
            raise ValueError("site out of range")
        return float(self.replicate_values(replicate, step)[site])
