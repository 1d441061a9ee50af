"""Star-tree data generation under the proportional model.

Edges can be fixed (constant, mixture, explicit values) or drawn iid in
time space from a small menu of laws.  Tip sequences evolve from a fixed
root sequence by the exact two-stage mixture: each (leaf, site) entry
copies the root state with probability s_k and otherwise redraws from
the stationary distribution.

Randomness is counter-based (Philox) with one independent stream per
block of ``LEAF_BLOCK`` leaves, keyed by (seed, block index).  Output is
therefore bitwise reproducible and independent of how work is scheduled
across workers, while block-level vectorisation keeps generation fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import (
    Alignment,
    AncestralSequence,
    EdgeSpec,
    StationaryDistribution,
    mu,
)

# Leaves per counter-based stream; fixed so the leaf -> stream mapping
# never depends on worker count or total n.
LEAF_BLOCK = 1024

# Key-space offset reserving a stream for edge-length draws, away from
# the alignment block indices.
_EDGE_STREAM = 1 << 63

_MAX_SEED = (1 << 64) - 1

_IID_FAMILIES = ("point", "exponential", "uniform")


@dataclass(frozen=True)
class IidEdgeLaw:
    """Named iid law for edge lengths in time space.

    Supported families: ``point`` (t,), ``exponential`` (rate,),
    ``uniform`` (a, b).  All have finite mean, so the induced edge
    lengths keep the average copy probability bounded away from zero.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family not in _IID_FAMILIES:
            raise ValueError(f"unsupported edge-length law {self.family!r}; choose from {_IID_FAMILIES}")
        if self.family == "point":
            if len(params) != 1 or params[0] < 0:
                raise ValueError("point law takes a single nonnegative time")
        elif self.family == "exponential":
            if len(params) != 1 or params[0] <= 0:
                raise ValueError("exponential law takes a single positive rate")
        else:
            if len(params) != 2 or not 0 <= params[0] <= params[1]:
                raise ValueError("uniform law takes 0 <= a <= b")


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to regenerate one star-tree data set."""

    pi: StationaryDistribution
    rho_true: AncestralSequence
    n_leaves: int
    edge: Union[EdgeSpec, IidEdgeLaw]
    seed: int

    def __post_init__(self):
        if self.n_leaves < 1:
            raise ValueError("need at least one leaf")
        if not 0 <= int(self.seed) <= _MAX_SEED:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.edge, (EdgeSpec, IidEdgeLaw)):
            raise ValueError(f"edge must be an EdgeSpec or IidEdgeLaw, got {type(self.edge)!r}")


def _stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for a (seed, index) pair."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_edge_lengths(config: SimulationConfig) -> EdgeSpec:
    """Realise one s value per leaf, deterministically in the seed.

    Constant and mixture specs are materialised to length ``n_leaves``
    (mixture atoms are drawn iid); an empirical spec must already have
    one value per leaf; iid time laws are drawn in t space and mapped
    through s = exp(-mu t), so every realised s lies in (0, 1].
    """
    n = config.n_leaves
    edge = config.edge
    if isinstance(edge, EdgeSpec):
        if edge.kind == "constant":
            values = np.full(n, edge.values[0])
        elif edge.kind == "mixture":
            rng = _stream(config.seed, _EDGE_STREAM)
            idx = rng.choice(len(edge.values), size=n, p=np.asarray(edge.weights))
            values = np.asarray(edge.values)[idx]
        else:
            if edge.n != n:
                raise ValueError(f"empirical edge spec has {edge.n} values for {n} leaves")
            values = np.asarray(edge.values)
    else:
        rng = _stream(config.seed, _EDGE_STREAM)
        if edge.family == "point":
            t = np.full(n, edge.params[0])
        elif edge.family == "exponential":
            t = rng.exponential(scale=1.0 / edge.params[0], size=n)
        else:
            a, b = edge.params
            t = rng.uniform(a, b, size=n)
        values = np.exp(-mu(config.pi) * t)
    return EdgeSpec.empirical(values, allow_zero_mean=True)


def simulate_alignment(
    pi: StationaryDistribution,
    rho_true: AncestralSequence,
    edges: EdgeSpec,
    seed: int,
) -> Alignment:
    """Evolve tip sequences from the root along per-leaf edges.

    ``edges`` must be an empirical spec with one s per leaf.  Each
    (leaf, site) entry is the root state with probability s_k and a
    fresh draw from pi otherwise, which reproduces the transition
    probabilities exactly.
    """
    if edges.kind != "empirical":
        raise ValueError("simulate_alignment needs an empirical edge spec (one s per leaf)")
    if not 0 <= int(seed) <= _MAX_SEED:
        raise ValueError("seed must be an unsigned 64-bit integer")
    n = edges.n
    n_sites = rho_true.n_sites
    c = pi.c
    s = np.asarray(edges.values)
    cdf = np.cumsum(pi.as_array())
    rho_arr = np.asarray(rho_true.states, dtype=np.int64)
    rows = np.empty((n, n_sites), dtype=np.int64)
    for start in range(0, n, LEAF_BLOCK):
        stop = min(start + LEAF_BLOCK, n)
        rng = _stream(seed, start // LEAF_BLOCK)
        u = rng.random((stop - start, 2 * n_sites))
        copy = u[:, :n_sites] < s[start:stop, None]
        draw = np.searchsorted(cdf, u[:, n_sites:], side="right")
        np.minimum(draw, c - 1, out=draw)  # guard the cdf[-1] rounding edge
        rows[start:stop] = np.where(copy, rho_arr[None, :], draw + 1)
    return Alignment(c=c, rows=rows)


def simulate(config: SimulationConfig) -> tuple[EdgeSpec, Alignment]:
    """Draw edges, then tips, from one config: the one-call front door."""
    edges = sample_edge_lengths(config)
    alignment = simulate_alignment(config.pi, config.rho_true, edges, config.seed)
    return edges, alignment


def pattern_counts(alignment: Alignment) -> dict[tuple[int, ...], int]:
    """Multiplicity of each observed leaf pattern (an N-long state tuple)."""
    uniq, counts = np.unique(alignment.rows, axis=0, return_counts=True)
    return {tuple(int(v) for v in row): int(k) for row, k in zip(uniq, counts)}


def empirical_site_frequencies(alignment: Alignment) -> np.ndarray:
    """Observed per-site state frequencies, shape (c, n_sites)."""
    n = alignment.n
    cols = [
        np.bincount(alignment.rows[:, l] - 1, minlength=alignment.c) / n
        for l in range(alignment.n_sites)
    ]
    return np.stack(cols, axis=1)
