"""Exact probability kernel of the proportional substitution model.

The proportional model is a continuous-time Markov process on states
1..c whose transition probability mixes "stay put" with "redraw from the
stationary distribution":

    P_ij(s) = pi_j * (1 - s) + 1{i == j} * s

where s = exp(-mu * t) maps evolutionary time t onto the unit interval
(s = 1 is zero time, s = 0 is infinite time) and mu is normalised so
that t is an expected number of substitutions.  All sequence-level
quantities factor over sites, so everything here works in the log
domain site by site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

# Single absolute tolerance for probability identities (simplex sums,
# row stochasticity, stationarity checks).
TOL = 1e-12

NEG_INF = float("-inf")

# Letter alphabet for the four-state model: state 1..4 <-> A, C, G, T.
NUCLEOTIDES = "ACGT"


def states_from_letters(text: str) -> tuple[int, ...]:
    """Map a nucleotide string like ``"AC"`` to 1-based states ``(1, 2)``."""
    try:
        return tuple(NUCLEOTIDES.index(ch.upper()) + 1 for ch in text)
    except ValueError:
        raise ValueError(f"not a nucleotide string: {text!r}") from None


def letters_from_states(states: Sequence[int]) -> str:
    """Inverse of :func:`states_from_letters`; requires states in 1..4."""
    if any(not 1 <= int(s) <= 4 for s in states):
        raise ValueError(f"letter alphabet only covers states 1..4, got {tuple(states)}")
    return "".join(NUCLEOTIDES[int(s) - 1] for s in states)


@dataclass(frozen=True)
class StationaryDistribution:
    """Known stationary frequencies pi of the substitution process.

    ``probs[i - 1]`` is the frequency of state ``i``.  Every entry must
    be strictly positive and the entries must sum to one within
    :data:`TOL`; at least two states are required.
    """

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) < 2:
            raise ValueError("need at least two states")
        if any(p <= 0.0 for p in probs):
            raise ValueError(f"all frequencies must be strictly positive: {probs}")
        if abs(sum(probs) - 1.0) > TOL:
            raise ValueError(f"frequencies must sum to 1 within {TOL}: sum={sum(probs)!r}")

    @property
    def c(self) -> int:
        return len(self.probs)

    def prob(self, state: int) -> float:
        """Frequency of a 1-based state."""
        if not 1 <= state <= self.c:
            raise ValueError(f"state {state} out of range 1..{self.c}")
        return self.probs[state - 1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


@dataclass(frozen=True)
class EdgeSpec:
    """Law of edge lengths in s-space.

    Three variants share one atom representation (values with weights):

    * ``constant``  -- a single common value s,
    * ``mixture``   -- finitely many atoms (weight, s),
    * ``empirical`` -- one explicit value per leaf, weight 1/n each.

    The first moment ``s_bar`` must be strictly positive (the asymptotic
    theory needs the average edge not to be infinitely long); pass
    ``allow_zero_mean=True`` only for degenerate diagnostics such as
    pure-stationarity draws.
    """

    kind: str
    weights: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("constant", "mixture", "empirical"):
            raise ValueError(f"unknown edge-spec kind {self.kind!r}")
        weights = tuple(float(w) for w in self.weights)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "values", values)
        if len(weights) != len(values) or not values:
            raise ValueError("weights and values must be non-empty and equally long")
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"every s must lie in [0, 1]: {values}")
        if any(w <= 0.0 for w in weights):
            raise ValueError("atom weights must be positive")
        if abs(math.fsum(weights) - 1.0) > TOL:
            raise ValueError(f"atom weights must sum to 1 within {TOL}")

    @classmethod
    def constant(cls, s: float, *, allow_zero_mean: bool = False) -> "EdgeSpec":
        spec = cls("constant", (1.0,), (float(s),))
        spec._check_mean(allow_zero_mean)
        return spec

    @classmethod
    def mixture(cls, atoms: Sequence[tuple[float, float]], *, allow_zero_mean: bool = False) -> "EdgeSpec":
        if not atoms:
            raise ValueError("mixture needs at least one atom")
        weights, values = zip(*((float(w), float(s)) for w, s in atoms))
        spec = cls("mixture", tuple(weights), tuple(values))
        spec._check_mean(allow_zero_mean)
        return spec

    @classmethod
    def empirical(cls, values: Sequence[float], *, allow_zero_mean: bool = False) -> "EdgeSpec":
        values = tuple(float(v) for v in values)
        if not values:
            raise ValueError("empirical edge spec needs at least one value")
        n = len(values)
        spec = cls("empirical", (1.0 / n,) * n, values)
        spec._check_mean(allow_zero_mean)
        return spec

    def _check_mean(self, allow_zero_mean: bool) -> None:
        if not allow_zero_mean and self.s_bar <= 0.0:
            raise ValueError(
                "mean of s is zero (all edges infinitely long); pass "
                "allow_zero_mean=True if this degenerate law is intended"
            )

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def s_bar(self) -> float:
        """First moment of s under the atom weights."""
        return math.fsum(w * v for w, v in zip(self.weights, self.values))

    @property
    def s2_bar(self) -> float:
        """Second raw moment of s under the atom weights."""
        return math.fsum(w * v * v for w, v in zip(self.weights, self.values))


@dataclass(frozen=True)
class AncestralSequence:
    """A candidate (or true) root sequence of 1-based states."""

    states: tuple[int, ...]

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        object.__setattr__(self, "states", states)
        if not states:
            raise ValueError("sequence must have at least one site")
        if any(s < 1 for s in states):
            raise ValueError(f"states are 1-based positive integers: {states}")

    @property
    def n_sites(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)


StateSeq = Union[AncestralSequence, Sequence[int]]


def _states(seq: StateSeq) -> tuple[int, ...]:
    if isinstance(seq, AncestralSequence):
        return seq.states
    return tuple(int(s) for s in seq)


@dataclass(frozen=True)
class Alignment:
    """Observed tip data: an n x N matrix of 1-based states over 1..c."""

    c: int
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"rows must be a non-empty 2-D matrix, got shape {rows.shape}")
        if self.c < 2:
            raise ValueError("need at least two states")
        if rows.min() < 1 or rows.max() > self.c:
            raise ValueError(f"states must lie in 1..{self.c}")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_sites(self) -> int:
        return int(self.rows.shape[1])

    def row(self, k: int) -> tuple[int, ...]:
        """Sequence observed at leaf k (0-based leaf index)."""
        return tuple(int(v) for v in self.rows[k])


@dataclass(frozen=True)
class DiagCounts:
    """Per-state counts of sites where a candidate root and a tip agree."""

    per_state: tuple[int, ...]
    total_sites: int

    def __post_init__(self):
        per_state = tuple(int(m) for m in self.per_state)
        object.__setattr__(self, "per_state", per_state)
        if any(m < 0 for m in per_state):
            raise ValueError("counts must be nonnegative")
        if sum(per_state) > self.total_sites:
            raise ValueError("matches cannot exceed the number of sites")

    @property
    def total_matches(self) -> int:
        return sum(self.per_state)


def mu(pi: StationaryDistribution) -> float:
    """Substitution rate normalising edge lengths to expected substitutions.

    Equals ``1 / sum_j pi_j (1 - pi_j)`` and is strictly greater than 1
    for every distribution on two or more states.
    """
    return 1.0 / sum(p * (1.0 - p) for p in pi.probs)


def s_from_t(pi: StationaryDistribution, t: float) -> float:
    """Reparameterise time t >= 0 as s = exp(-mu t) in (0, 1]."""
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return math.exp(-mu(pi) * t)


def t_from_s(pi: StationaryDistribution, s: float) -> float:
    """Inverse of :func:`s_from_t` on (0, 1].

    ``s = 0`` corresponds to an infinitely long edge and returns
    ``math.inf`` (a documented sentinel, not an error).
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return math.inf
    return -math.log(s) / mu(pi)


def transition_prob(pi: StationaryDistribution, i: int, j: int, s: float) -> float:
    """P_ij(s) = pi_j (1 - s) + 1{i == j} s for 1-based states i, j."""
    if not 1 <= i <= pi.c:
        raise ValueError(f"state {i} out of range 1..{pi.c}")
    if not 1 <= j <= pi.c:
        raise ValueError(f"state {j} out of range 1..{pi.c}")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    p = pi.probs[j - 1] * (1.0 - s)
    if i == j:
        p += s
    return p


def diag_counts(rho: StateSeq, y: StateSeq, c: int) -> DiagCounts:
    """Count, per state i, the sites where both root and tip equal i."""
    rho = _states(rho)
    y = _states(y)
    if len(rho) != len(y):
        raise ValueError(f"length mismatch: {len(rho)} root sites vs {len(y)} tip sites")
    per_state = [0] * c
    for r, v in zip(rho, y):
        if r == v:
            per_state[r - 1] += 1
    return DiagCounts(tuple(per_state), len(rho))


def seq_log_likelihood(pi: StationaryDistribution, rho: StateSeq, y: StateSeq, s: float) -> float:
    """log P_{rho y}(s) = sum_l log P_{rho_l y_l}(s).

    Factors of exactly zero (an impossible copy at s = 1) yield
    ``-inf`` rather than an error: boundary values of s are legitimate
    inputs for the profile-likelihood case analysis.
    """
    rho = _states(rho)
    y = _states(y)
    if len(rho) != len(y):
        raise ValueError(f"length mismatch: {len(rho)} root sites vs {len(y)} tip sites")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    probs = pi.probs
    total = 0.0
    for r, v in zip(rho, y):
        p = probs[v - 1] * (1.0 - s)
        if r == v:
            p += s
        if p <= 0.0:
            return NEG_INF
        total += math.log(p)
    return total
