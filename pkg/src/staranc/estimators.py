"""Root-sequence reconstruction: joint MLE, empirical Bayes, the
frequency-difference estimator, and majority rule.

The joint MLE profiles out the per-leaf edge lengths exactly.  For a
fixed root candidate and one observed tip pattern, the inner problem is
a concave 1-D maximisation whose solution is either a boundary value or
the unique root of a rational stationarity equation; the outer search
enumerates every candidate sequence so the reported argmax is exact.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import (
    NEG_INF,
    Alignment,
    AncestralSequence,
    StateSeq,
    StationaryDistribution,
    _states,
    diag_counts,
    seq_log_likelihood,
)
from .simulate import pattern_counts

# Two scores within this absolute band are reported as tied.
TIE_TOL = 1e-9

# Stationarity residual target for the profiled edge length, relative
# to the number of sites.
EDGE_RESIDUAL_TOL = 1e-14

DEFAULT_SEARCH_CAP = 1 << 20


class Method(enum.Enum):
    MLE = "mle"
    EB = "eb"
    DIFF = "diff"
    MAJORITY = "majority"


class CapacityError(RuntimeError):
    """Search space too large for an exhaustive scan."""

    def __init__(self, c: int, n_sites: int, cap: int):
        self.size = c**n_sites
        super().__init__(
            f"search space {c}^{n_sites} = {self.size} exceeds the cap of {cap}; "
            "raise the cap explicitly if the enumeration is really wanted"
        )


@dataclass(frozen=True)
class EstimateResult:
    """One reconstruction: the method, its answer, and bookkeeping.

    ``log_score`` is the profile log-likelihood for the MLE and the
    normalised log-posterior for empirical Bayes; other methods carry
    no score.  ``tied`` is set whenever some other candidate came
    within :data:`TIE_TOL` of the winner (per site, for the site-wise
    methods).
    """

    method: Method
    rho_hat: AncestralSequence
    log_score: float | None
    edge_estimates: tuple[float, ...] | None
    tied: bool
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class VStatistic:
    """Site-by-state matrix V of frequency differences.

    ``values[l, j - 1]`` holds V(j, l+1): the observed frequency of
    state j at site l minus its average observed frequency over the
    other sites.  Columns of the per-site frequency matrix each sum to
    one, so each row of ``values`` sums to zero.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class EdgeLengthFit:
    """Edge lengths from the root-marginalised likelihood.

    ``unidentifiable`` lists 0-based leaves whose coordinate objective
    was constant (the marginal likelihood carries no information about
    that edge); those edges are reported as 0 by convention.
    """

    s: np.ndarray
    converged: bool
    sweeps: int
    objective: float
    objective_trace: tuple[float, ...]
    unidentifiable: tuple[int, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        s.flags.writeable = False
        object.__setattr__(self, "s", s)


# ---------------------------------------------------------------------------
# Profiled edge length

@functools.lru_cache(maxsize=1 << 18)
def _solve_edge(probs: tuple[float, ...], per_state: tuple[int, ...], n_sites: int) -> float:
    """Maximise the single-pattern log-likelihood over s in [0, 1].

    Case analysis on the diagonal match counts m_i:
      * sum_i m_i / pi_i <= N          -> 0 (derivative at 0 nonpositive),
      * sum_i m_i == N                 -> 1 (every site matches),
      * otherwise the unique root in (0, 1) of
            sum_i m_i / (pi_i + (1 - pi_i) s) = N,
        located by bisection until the residual falls below
        EDGE_RESIDUAL_TOL * N or the bracket collapses.
    """
    total = sum(per_state)
    if sum(m / p for m, p in zip(per_state, probs) if m) <= n_sites:
        return 0.0
    if total == n_sites:
        return 1.0
    terms = [(m, p) for m, p in zip(per_state, probs) if m]

    def residual(s: float) -> float:
        return sum(m / (p + (1.0 - p) * s) for m, p in terms) - n_sites

    lo, hi = 0.0, 1.0
    best_s, best_r = 0.5, residual(0.5)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        r = residual(mid)
        if abs(r) < abs(best_r):
            best_s, best_r = mid, r
        if abs(r) <= EDGE_RESIDUAL_TOL * n_sites:
            return mid
        if r > 0.0:
            lo = mid
        else:
            hi = mid
    return best_s


def mle_edge_length(pi: StationaryDistribution, rho: StateSeq, y: StateSeq) -> float:
    """Edge length maximising the likelihood of one tip given one root."""
    counts = diag_counts(rho, y, pi.c)
    return _solve_edge(pi.probs, counts.per_state, counts.total_sites)


def profile_log_likelihood(pi: StationaryDistribution, rho: StateSeq, alignment: Alignment) -> float:
    """Log-likelihood of the alignment with edges profiled out per leaf.

    Each distinct observed pattern contributes its count times its
    maximised single-pattern log-likelihood, which is always finite.
    """
    rho = _states(rho)
    if len(rho) != alignment.n_sites:
        raise ValueError(f"candidate has {len(rho)} sites, alignment has {alignment.n_sites}")
    total = 0.0
    for pattern, count in pattern_counts(alignment).items():
        s_hat = mle_edge_length(pi, rho, pattern)
        total += count * seq_log_likelihood(pi, rho, pattern, s_hat)
    return total


def _candidate_sequences(c: int, n_sites: int):
    return itertools.product(range(1, c + 1), repeat=n_sites)


def mle_ancestral(
    pi: StationaryDistribution,
    alignment: Alignment,
    search_cap: int = DEFAULT_SEARCH_CAP,
) -> EstimateResult:
    """Exhaustive joint MLE of the root sequence.

    Scans every candidate in lexicographic order, so ties resolve to
    the smallest state indices and are flagged.  Raises
    :class:`CapacityError` when c^N exceeds ``search_cap``.
    """
    c, n_sites = alignment.c, alignment.n_sites
    if c**n_sites > search_cap:
        raise CapacityError(c, n_sites, search_cap)
    counts = pattern_counts(alignment)
    best_rho, best, second = None, NEG_INF, NEG_INF
    for cand in _candidate_sequences(c, n_sites):
        score = 0.0
        for pattern, count in counts.items():
            s_hat = mle_edge_length(pi, cand, pattern)
            score += count * seq_log_likelihood(pi, cand, pattern, s_hat)
        if score > best:
            best_rho, second, best = cand, best, score
        elif score > second:
            second = score
    edge_estimates = tuple(
        mle_edge_length(pi, best_rho, alignment.row(k)) for k in range(alignment.n)
    )
    return EstimateResult(
        method=Method.MLE,
        rho_hat=AncestralSequence(best_rho),
        log_score=best,
        edge_estimates=edge_estimates,
        tied=(best - second) <= TIE_TOL,
    )


# ---------------------------------------------------------------------------
# Empirical Bayes

@njit(cache=True)
def _eb_log_trans(probs, x, y, s):
    v = probs[y] * (1.0 - s)
    if x == y:
        v += s
    return math.log(v) if v > 0.0 else -math.inf


@njit(cache=True)
def _eb_objective(probs, sumlog, zerocnt):
    c, n_sites = sumlog.shape
    total = 0.0
    for l in range(n_sites):
        m = -math.inf
        for x in range(c):
            if zerocnt[x, l] == 0 and sumlog[x, l] > m:
                m = sumlog[x, l]
        if m == -math.inf:
            return -math.inf
        acc = 0.0
        for x in range(c):
            if zerocnt[x, l] == 0:
                acc += probs[x] * math.exp(sumlog[x, l] - m)
        total += m + math.log(acc)
    return total


@njit(cache=True)
def _eb_sweeps(codes, probs, s, sumlog, zerocnt, tol, max_sweeps, trace, unident):
    """Coordinate ascent over leaves on the root-marginalised likelihood.

    ``sumlog[x, l]`` carries the running sum over leaves of
    log P(x -> y_kl; s_k), with exact zeros (s_k = 1 mismatches) kept
    out of the sum and tallied in ``zerocnt``.  With leaf k removed the
    per-site marginal is affine in s_k, so the coordinate objective is
    a sum of logs of affine functions: concave, solved by bisecting the
    derivative sign.  Per-site weights are rescaled by their maximum
    before exponentiation; the derivative is invariant to that scale.
    """
    n, n_sites = codes.shape
    c = probs.shape[0]
    a = np.empty(n_sites)
    b = np.empty(n_sites)
    prev = _eb_objective(probs, sumlog, zerocnt)
    trace[0] = prev
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        for k in range(n):
            for l in range(n_sites):
                yk = codes[k, l]
                m = -math.inf
                for x in range(c):
                    lp = _eb_log_trans(probs, x, yk, s[k])
                    rem = sumlog[x, l] - (0.0 if lp == -math.inf else lp)
                    zc = zerocnt[x, l] - (1 if lp == -math.inf else 0)
                    if zc == 0 and rem > m:
                        m = rem
                wsum = 0.0
                wmatch = 0.0
                if m > -math.inf:
                    for x in range(c):
                        lp = _eb_log_trans(probs, x, yk, s[k])
                        rem = sumlog[x, l] - (0.0 if lp == -math.inf else lp)
                        zc = zerocnt[x, l] - (1 if lp == -math.inf else 0)
                        if zc == 0:
                            w = probs[x] * math.exp(rem - m)
                            wsum += w
                            if x == yk:
                                wmatch = w
                a[l] = probs[yk] * wsum
                b[l] = wmatch - a[l]
            allzero = True
            for l in range(n_sites):
                if b[l] != 0.0:
                    allzero = False
            if allzero:
                # objective constant in this coordinate
                unident[k] = True
                sk = 0.0
            else:
                unident[k] = False
                d0 = 0.0
                for l in range(n_sites):
                    if a[l] > 0.0:
                        d0 += b[l] / a[l]
                    elif b[l] > 0.0:
                        d0 = math.inf
                if d0 <= 0.0:
                    sk = 0.0
                else:
                    d1 = 0.0
                    for l in range(n_sites):
                        v = a[l] + b[l]
                        if v <= 0.0:
                            d1 = -math.inf
                            break
                        d1 += b[l] / v
                    if d1 >= 0.0:
                        sk = 1.0
                    else:
                        lo = 0.0
                        hi = 1.0
                        while hi - lo > 1e-12:
                            mid = 0.5 * (lo + hi)
                            d = 0.0
                            for l in range(n_sites):
                                d += b[l] / (a[l] + b[l] * mid)
                            if d > 0.0:
                                lo = mid
                            else:
                                hi = mid
                        sk = 0.5 * (lo + hi)
            if sk != s[k]:
                for l in range(n_sites):
                    yk = codes[k, l]
                    for x in range(c):
                        lpo = _eb_log_trans(probs, x, yk, s[k])
                        lpn = _eb_log_trans(probs, x, yk, sk)
                        if lpo == -math.inf:
                            zerocnt[x, l] -= 1
                        else:
                            sumlog[x, l] -= lpo
                        if lpn == -math.inf:
                            zerocnt[x, l] += 1
                        else:
                            sumlog[x, l] += lpn
                s[k] = sk
        cur = _eb_objective(probs, sumlog, zerocnt)
        trace[sweeps] = cur
        if abs(cur - prev) < tol:
            return sweeps, True
        prev = cur
    return sweeps, False


def _marginal_site_loglik(pi: StationaryDistribution, alignment: Alignment, s: np.ndarray) -> np.ndarray:
    """sumlog[x, l] = sum_k log P(x -> y_kl; s_k), with -inf for dead states."""
    codes = alignment.rows - 1
    s = np.asarray(s, dtype=np.float64)
    out = np.empty((alignment.c, alignment.n_sites))
    probs = pi.as_array()
    base = probs[codes] * (1.0 - s)[:, None]
    for x in range(alignment.c):
        p = base + np.where(codes == x, s[:, None], 0.0)
        with np.errstate(divide="ignore"):
            out[x] = np.sum(np.log(p), axis=0)
    return out


def eb_objective(pi: StationaryDistribution, alignment: Alignment, s) -> float:
    """Root-marginalised log-likelihood at a fixed edge-length vector.

    Factorises over sites: sum_l log sum_x pi_x prod_k P(x -> y_kl; s_k).
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (alignment.n,):
        raise ValueError(f"need one s per leaf, got shape {s.shape}")
    sumlog = _marginal_site_loglik(pi, alignment, s)
    logpi = np.log(pi.as_array())[:, None]
    cols = logpi + sumlog
    m = np.max(cols, axis=0)
    finite = m > -math.inf
    if not np.all(finite):
        return NEG_INF
    return float(np.sum(m + np.log(np.sum(np.exp(cols - m), axis=0))))


def _ascend(codes, probs, s0, tol, max_iter):
    """One coordinate-ascent run from a given start vector."""
    c = probs.shape[0]
    n, n_sites = codes.shape
    s = s0.copy()
    sumlog = np.zeros((c, n_sites))
    zerocnt = np.zeros((c, n_sites), dtype=np.int64)
    base = probs[codes] * (1.0 - s)[:, None]
    for x in range(c):
        p = base + np.where(codes == x, s[:, None], 0.0)
        zerocnt[x] = np.sum(p == 0.0, axis=0)
        sumlog[x] = np.sum(np.log(np.where(p > 0.0, p, 1.0)), axis=0)
    trace = np.full(max_iter + 1, np.nan)
    unident = np.zeros(n, dtype=np.bool_)
    sweeps, converged = _eb_sweeps(
        codes, probs, s, sumlog, zerocnt, float(tol), int(max_iter), trace, unident
    )
    return s, float(trace[sweeps]), sweeps, converged, trace, unident


def eb_edge_lengths(
    pi: StationaryDistribution,
    alignment: Alignment,
    tol: float = 1e-10,
    max_iter: int = 500,
    search_cap: int = DEFAULT_SEARCH_CAP,
) -> EdgeLengthFit:
    """Fit all edge lengths by coordinate ascent on the marginal likelihood.

    The objective is multimodal: each candidate root sequence anchors a
    basin in which its exactly-matching leaves sit at s = 1 and
    conflicting leaves near 0, and a single interior start can converge
    into a dominated basin.  The fit therefore ascends from the
    interior point s_k = 0.5 and, when c^N is within ``search_cap``,
    from one start per candidate root (each leaf initialised at its
    fraction of sites matching that root), keeping the best final
    objective.  Every run sweeps the leaves, solves each coordinate
    exactly, never decreases the objective, and stops once a sweep
    moves it by less than ``tol`` (or at ``max_iter`` sweeps, flagged
    by a warning).
    """
    n = alignment.n
    c, n_sites = alignment.c, alignment.n_sites
    codes = np.ascontiguousarray(alignment.rows - 1)
    probs = pi.as_array()
    starts = [np.full(n, 0.5)]
    if c**n_sites <= search_cap:
        rows = alignment.rows
        for root in _candidate_sequences(c, n_sites):
            starts.append(np.mean(rows == np.asarray(root), axis=1))
    best = None
    for s0 in starts:
        run = _ascend(codes, probs, s0, tol, max_iter)
        if best is None or run[1] > best[1]:
            best = run
    s, objective, sweeps, converged, trace, unident = best
    warnings = ()
    if not converged:
        warnings = (f"edge-length ascent did not converge within {max_iter} sweeps",)
    return EdgeLengthFit(
        s=s,
        converged=converged,
        sweeps=sweeps,
        objective=objective,
        objective_trace=tuple(float(v) for v in trace[: sweeps + 1]),
        unidentifiable=tuple(int(k) for k in np.nonzero(unident)[0]),
        warnings=warnings,
    )


def eb_ancestral(
    pi: StationaryDistribution,
    alignment: Alignment,
    tol: float = 1e-10,
    max_iter: int = 500,
    search_cap: int = DEFAULT_SEARCH_CAP,
) -> EstimateResult:
    """Empirical Bayes: fitted edges, then the per-site posterior mode.

    The posterior over root sequences factorises across sites, so the
    argmax is taken site by site (smallest state index on ties, which
    are flagged).  ``log_score`` is the normalised log-posterior of the
    reported sequence.
    """
    fit = eb_edge_lengths(pi, alignment, tol=tol, max_iter=max_iter, search_cap=search_cap)
    sumlog = _marginal_site_loglik(pi, alignment, fit.s)
    cols = np.log(pi.as_array())[:, None] + sumlog
    states = []
    tied = False
    warnings = list(fit.warnings)
    log_score = 0.0
    for l in range(alignment.n_sites):
        col = cols[:, l]
        best = int(np.argmax(col))
        states.append(best + 1)
        finite = col[col > -math.inf]
        if finite.size == 0:
            # conflicting zero-probability constraints; keep the convention
            tied = True
            warnings.append(f"site {l + 1}: posterior degenerate, all states impossible")
            continue
        top = np.sort(col)[::-1]
        if col.size > 1 and top[0] - top[1] <= TIE_TOL:
            tied = True
        m = float(np.max(col))
        log_score += float(col[best]) - (m + math.log(float(np.sum(np.exp(col - m)))))
    return EstimateResult(
        method=Method.EB,
        rho_hat=AncestralSequence(tuple(states)),
        log_score=log_score,
        edge_estimates=tuple(float(v) for v in fit.s),
        tied=tied,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Frequency-difference estimator and majority rule

def difference_estimator(alignment: Alignment) -> tuple[EstimateResult, VStatistic]:
    """Per site, pick the state whose observed frequency most exceeds
    its average frequency across the other sites.

    Needs at least two sites.  Ties go to the smallest state index and
    are flagged.
    """
    n_sites = alignment.n_sites
    if n_sites < 2:
        raise ValueError("the difference estimator needs at least two sites")
    freqs = np.stack(
        [
            np.bincount(alignment.rows[:, l] - 1, minlength=alignment.c)
            for l in range(n_sites)
        ],
        axis=1,
    ) / alignment.n
    v = freqs - (freqs.sum(axis=1, keepdims=True) - freqs) / (n_sites - 1)
    states = []
    tied = False
    for l in range(n_sites):
        col = v[:, l]
        states.append(int(np.argmax(col)) + 1)
        top = np.sort(col)[::-1]
        if top[0] - top[1] <= TIE_TOL:
            tied = True
    result = EstimateResult(
        method=Method.DIFF,
        rho_hat=AncestralSequence(tuple(states)),
        log_score=None,
        edge_estimates=None,
        tied=tied,
    )
    return result, VStatistic(values=v.T.copy())


def majority_rule(alignment: Alignment) -> EstimateResult:
    """Per-site modal state, smallest state index on ties (flagged)."""
    states = []
    tied = False
    for l in range(alignment.n_sites):
        counts = np.bincount(alignment.rows[:, l] - 1, minlength=alignment.c)
        best = int(np.argmax(counts))
        states.append(best + 1)
        if np.sum(counts == counts[best]) > 1:
            tied = True
    return EstimateResult(
        method=Method.MAJORITY,
        rho_hat=AncestralSequence(tuple(states)),
        log_score=None,
        edge_estimates=None,
        tied=tied,
    )


def estimate(
    pi: StationaryDistribution,
    alignment: Alignment,
    method: Method,
    search_cap: int = DEFAULT_SEARCH_CAP,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> EstimateResult:
    """Dispatch one reconstruction by method."""
    if method is Method.MLE:
        return mle_ancestral(pi, alignment, search_cap=search_cap)
    if method is Method.EB:
        return eb_ancestral(pi, alignment, tol=tol, max_iter=max_iter, search_cap=search_cap)
    if method is Method.DIFF:
        return difference_estimator(alignment)[0]
    if method is Method.MAJORITY:
        return majority_rule(alignment)
    raise ValueError(f"unknown method {method!r}")
