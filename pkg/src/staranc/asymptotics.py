"""Exact large-n analysis of profile-likelihood reconstruction.

As the number of leaves grows, the per-leaf profile log-likelihood of a
candidate root sequence concentrates on a deterministic function of the
candidate (``e_function`` here).  Likelihood-based reconstruction lands
in the maximiser set of that function, so enumerating it decides
consistency exactly: reconstruction is consistent precisely when the
true sequence is the unique maximiser.

This module computes that function by exact pattern enumeration, the
closed-form single-site and two-site criteria that locate the
inconsistency zone, the binomial overshoot divergence behind the zone
scan, and the critical-time catalogue over the frequency simplex.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .estimators import DEFAULT_SEARCH_CAP, CapacityError, mle_edge_length
from .model import (
    EdgeSpec,
    StateSeq,
    StationaryDistribution,
    _states,
    letters_from_states,
    seq_log_likelihood,
    t_from_s,
)

# Membership band for the maximiser set: floating point cannot resolve
# exact argmax ties, so anything within this absolute distance of the
# maximum counts as a maximiser.
MAXIMIZER_TOL = 1e-9


@dataclass(frozen=True)
class AsymptoticReport:
    """Limit scores for every candidate plus the maximiser set."""

    e_values: dict[tuple[int, ...], float]
    maximizer_set: tuple[tuple[int, ...], ...]
    contains_truth: bool


@dataclass(frozen=True)
class TwoSiteCoefficients:
    """Quadratic-in-s coefficients of the two-site expected profile score.

    ``a``, ``b``, ``c`` multiply the second moment of s, the first
    moment, and 1 for the given candidate pair; the ``*_d`` values are
    differenced against the true pair, so the difference of expected
    scores is ``a_d * s2_bar + b_d * s_bar + c_d``.
    """

    a: float
    b: float
    c: float
    a_d: float
    b_d: float
    c_d: float


@dataclass(frozen=True)
class QPolynomial:
    """Constant-edge score difference Q(s) = a_d s^2 + b_d s + c_d.

    When ``c_d > 0`` the candidate beats the truth for small s; the
    unique sign change ``s_star`` in [0, 1] then converts to the
    critical time ``t_star``: reconstruction prefers the wrong pair for
    every common edge time beyond it.
    """

    a_d: float
    b_d: float
    c_d: float
    s_star: Optional[float]
    t_star: Optional[float]

    def __call__(self, s: float) -> float:
        return (self.a_d * s + self.b_d) * s + self.c_d


@dataclass(frozen=True)
class ZoneGrid:
    """Boolean inconsistency zone over a (pi_r, pi_a) frequency grid.

    ``in_zone[i, j]`` refers to true-state frequency ``values[i]`` and
    alternative frequency ``values[j]``.  The flagged region is a
    sufficient condition for inconsistency at small average s, not a
    characterisation.
    """

    n_sites: int
    step: float
    values: tuple[float, ...]
    in_zone: np.ndarray
    condition: str = "sufficient"

    def __post_init__(self):
        in_zone = np.asarray(self.in_zone, dtype=bool)
        in_zone.flags.writeable = False
        object.__setattr__(self, "in_zone", in_zone)


@dataclass(frozen=True)
class CriticalTimeRow:
    """One frequency vector admitting an inconsistent candidate pair."""

    pi: tuple[float, float, float, float]
    pair: tuple[int, int]
    s_star: float
    t_star: float
    c_d: float
    a_d: float


def expected_pattern_prob(
    pi: StationaryDistribution,
    rho_true: StateSeq,
    edge: EdgeSpec,
    y: StateSeq,
) -> float:
    """Average probability of observing pattern y at a leaf.

    Exact atom-by-atom expectation under the edge law; for an empirical
    spec this is the finite-n average over the realised edges.
    """
    rho = _states(rho_true)
    y = _states(y)
    if len(rho) != len(y):
        raise ValueError("pattern and root sequence must have equal length")
    probs = pi.as_array()
    values = np.asarray(edge.values)
    weights = np.asarray(edge.weights)
    prod = np.ones_like(values)
    for r, v in zip(rho, y):
        prod *= probs[v - 1] * (1.0 - values) + (values if r == v else 0.0)
    return float(weights @ prod)


def e_function(
    pi: StationaryDistribution,
    rho_true: StateSeq,
    edge: EdgeSpec,
    rho: StateSeq,
    cap: int = DEFAULT_SEARCH_CAP,
) -> float:
    """Limit of the per-leaf expected profile log-likelihood of ``rho``.

    Sums, over every possible pattern, the pattern's average
    probability under the truth times the candidate's maximised
    log-likelihood for that pattern.  Patterns of probability zero
    contribute nothing (0 * log 0 = 0).
    """
    rho = _states(rho)
    c, n_sites = pi.c, len(rho)
    if c**n_sites > cap:
        raise CapacityError(c, n_sites, cap)
    total = 0.0
    for pattern in itertools.product(range(1, c + 1), repeat=n_sites):
        p = expected_pattern_prob(pi, rho_true, edge, pattern)
        if p == 0.0:
            continue
        s_hat = mle_edge_length(pi, rho, pattern)
        total += p * seq_log_likelihood(pi, rho, pattern, s_hat)
    return total


def maximizer_set(
    pi: StationaryDistribution,
    rho_true: StateSeq,
    edge: EdgeSpec,
    cap: int = DEFAULT_SEARCH_CAP,
) -> AsymptoticReport:
    """Enumerate the limit score over all candidates and band the argmax."""
    rho_true = _states(rho_true)
    c, n_sites = pi.c, len(rho_true)
    if c**n_sites > cap:
        raise CapacityError(c, n_sites, cap)
    e_values = {
        cand: e_function(pi, rho_true, edge, cand, cap=cap)
        for cand in itertools.product(range(1, c + 1), repeat=n_sites)
    }
    top = max(e_values.values())
    maximizers = tuple(
        cand for cand, val in e_values.items() if top - val <= MAXIMIZER_TOL
    )
    return AsymptoticReport(
        e_values=e_values,
        maximizer_set=maximizers,
        contains_truth=rho_true in maximizers,
    )


def single_site_threshold(pi: StationaryDistribution, r: int, a: int) -> Optional[float]:
    """Average-s threshold below which state ``a`` beats truth ``r`` at one site.

    Returns
        [pi_r log pi_r - pi_a log pi_a]
        / [pi_r log pi_r - pi_a log pi_a - log pi_r]
    when that ratio is positive, else None: no threshold exists and the
    single-site reconstruction of r cannot be beaten by a in the limit.
    """
    if r == a:
        raise ValueError("states must differ")
    pr, pa = pi.prob(r), pi.prob(a)
    num = pr * math.log(pr) - pa * math.log(pa)
    if num <= 0.0:
        return None
    return num / (num - math.log(pr))


def v_function(p: float, n_sites: int) -> float:
    """Expected one-sided binomial overshoot divergence.

    With X ~ binomial(N, p) and phat = X / N, averages
    ``phat log(phat/p) + (1 - phat) log((1-phat)/(1-p))`` over the
    event {phat > p}, using the 0 log 0 = 0 convention.  Nonnegative,
    zero at p = 1.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if n_sites < 1:
        raise ValueError("need at least one site")
    total = 0.0
    for x in range(n_sites + 1):
        phat = x / n_sites
        if phat <= p:
            continue
        pmf = math.comb(n_sites, x) * p**x * (1.0 - p) ** (n_sites - x)
        if pmf == 0.0:
            continue
        term = 0.0
        if phat > 0.0:
            term += phat * math.log(phat / p)
        if phat < 1.0:
            term += (1.0 - phat) * math.log((1.0 - phat) / (1.0 - p))
        total += pmf * term
    return total


def zone_scan(n_sites: int, grid_step: float = 0.01) -> ZoneGrid:
    """Scan the frequency square for the sufficient inconsistency condition.

    Cell (pi_r, pi_a) is flagged when v(pi_a) > v(pi_r): some positive
    average copy probability then makes a constant-state candidate in a
    beat a constant-state truth in r.
    """
    if not 0.0 < grid_step < 0.5:
        raise ValueError(f"grid step must lie in (0, 0.5), got {grid_step}")
    count = int(round(1.0 / grid_step)) - 1
    values = tuple(i * grid_step for i in range(1, count + 1))
    vvals = np.array([v_function(p, n_sites) for p in values])
    in_zone = vvals[None, :] > vvals[:, None]
    return ZoneGrid(n_sites=n_sites, step=grid_step, values=values, in_zone=in_zone)


def _match_penalty(p: float) -> float:
    """log[4 p (1 - p)] below one half, zero above.

    This is the per-site cost of profiling the edge on a pattern that
    matches the candidate at one of two sites.
    """
    return math.log(4.0 * p * (1.0 - p)) if p < 0.5 else 0.0


def two_site_coefficients(
    pi: StationaryDistribution,
    rho_star_pair: StateSeq,
    rho_pair: StateSeq,
) -> TwoSiteCoefficients:
    """Closed-form coefficients of the two-site expected profile score.

    For candidate pair (r1, r2) against truth (r1*, r2*), the expected
    per-leaf maximised log-likelihood equals
    ``C0 + a * s2_bar + b * s_bar + c`` where C0 collects
    candidate-independent stationary terms.
    """
    star = _states(rho_star_pair)
    cand = _states(rho_pair)
    if len(star) != 2 or len(cand) != 2:
        raise ValueError("two-site analysis needs exactly two sites")

    def abc(pair):
        r1, r2 = pair
        p1, p2 = pi.prob(r1), pi.prob(r2)
        d1 = (1.0 if star[0] == r1 else 0.0) - p1
        d2 = (1.0 if star[1] == r2 else 0.0) - p2
        f1, f2 = _match_penalty(p1), _match_penalty(p2)
        g = f1 + f2 - math.log(p1 * p2)
        a = d1 * d2 * g
        b = -d1 * f1 - d2 * f2 + (d1 * p2 + d2 * p1) * g
        c = -p1 * f1 - p2 * f2 + p1 * p2 * g
        return a, b, c

    a, b, c = abc(cand)
    at, bt, ct = abc(star)
    return TwoSiteCoefficients(a=a, b=b, c=c, a_d=a - at, b_d=b - bt, c_d=c - ct)


def two_site_baseline(
    pi: StationaryDistribution,
    rho_star_pair: StateSeq,
    edge: EdgeSpec,
) -> float:
    """Candidate-independent constant C0 of the two-site expected score."""
    star = _states(rho_star_pair)
    if len(star) != 2:
        raise ValueError("two-site analysis needs exactly two sites")
    total = 0.0
    for x in range(1, pi.c + 1):
        px = expected_pattern_prob(pi, (star[0],), edge, (x,))
        py = expected_pattern_prob(pi, (star[1],), edge, (x,))
        total += (px + py) * math.log(pi.prob(x))
    return total


def q_polynomial(
    pi: StationaryDistribution,
    rho_star_pair: StateSeq,
    rho_pair: StateSeq,
) -> QPolynomial:
    """Constant-edge score difference of a candidate pair against truth.

    Always satisfies Q(1) < 0 (perfect copies favour the truth); a
    violation means the closed forms and the model disagree and raises.
    When Q(0) = c_d > 0 the polynomial has exactly one root in [0, 1],
    found in closed form with a bisection fallback, and the critical
    time is t_star = -log(s_star) / mu.
    """
    star = _states(rho_star_pair)
    cand = _states(rho_pair)
    if star == cand:
        raise ValueError("candidate pair must differ from the true pair")
    coef = two_site_coefficients(pi, star, cand)
    a_d, b_d, c_d = coef.a_d, coef.b_d, coef.c_d
    q1 = a_d + b_d + c_d
    if q1 >= 0.0:
        raise RuntimeError(
            f"internal consistency violated: Q(1) = {q1!r} >= 0 for candidate {cand} "
            f"against truth {star}"
        )
    s_star = None
    t_star = None
    if c_d > 0.0:
        s_star = _unique_root_in_unit(a_d, b_d, c_d)
        t_star = t_from_s(pi, s_star)
    return QPolynomial(a_d=a_d, b_d=b_d, c_d=c_d, s_star=s_star, t_star=t_star)


def _unique_root_in_unit(a: float, b: float, c: float) -> float:
    """Root of a s^2 + b s + c in [0, 1] given the signs Q(0) > 0 > Q(1)."""

    def q(s):
        return (a * s + b) * s + c

    root = None
    if abs(a) < 1e-300:
        if b != 0.0:
            root = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            sq = math.sqrt(disc)
            # stable split: one root from the large-magnitude sum
            u = -(b + math.copysign(sq, b)) / 2.0
            for cand in (u / a, (c / u) if u != 0.0 else None):
                if cand is not None and -1e-12 <= cand <= 1.0 + 1e-12:
                    root = min(max(cand, 0.0), 1.0)
                    break
    if root is None or not 0.0 <= root <= 1.0 or abs(q(root)) > 1e-9:
        lo, hi = 0.0, 1.0  # fall back on the guaranteed sign change
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if q(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
    return root


def q_with_moments(coeffs, s_bar: float, s2_bar: float) -> float:
    """Score difference under varying edges via the first two s moments.

    ``coeffs`` is anything carrying ``a_d``, ``b_d``, ``c_d``.  The
    moments must be feasible for a [0, 1] variable:
    s_bar^2 <= s2_bar <= s_bar.
    """
    if not 0.0 <= s_bar <= 1.0:
        raise ValueError(f"s_bar must lie in [0, 1], got {s_bar}")
    if s2_bar < s_bar * s_bar - 1e-12 or s2_bar > s_bar + 1e-12:
        raise ValueError(
            f"moments infeasible for a [0, 1] variable: s_bar={s_bar}, s2_bar={s2_bar}"
        )
    return coeffs.a_d * s2_bar + coeffs.b_d * s_bar + coeffs.c_d


def constant_ancestor_profile(pi: StationaryDistribution, a: int, p_hat: float) -> float:
    """Per-site profiled score of an all-``a`` root, stationary part removed.

    For a single leaf whose fraction of sites in state ``a`` is
    ``p_hat``: zero when p_hat <= pi_a (the profiled edge collapses to
    infinite time), else the one-sided binomial divergence
    ``p_hat log(p_hat/pi_a) + (1 - p_hat) log((1 - p_hat)/(1 - pi_a))``.
    """
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in [0, 1], got {p_hat}")
    pa = pi.prob(a)
    if p_hat <= pa:
        return 0.0
    term = p_hat * math.log(p_hat / pa)
    if p_hat < 1.0:
        term += (1.0 - p_hat) * math.log((1.0 - p_hat) / (1.0 - pa))
    return term


def critical_time_scan(
    grid_step: float = 0.1,
    truth: tuple[int, int] = (1, 2),
    include_same_state: bool = False,
) -> list[CriticalTimeRow]:
    """Catalogue four-state frequency vectors with an inconsistent pair.

    Walks the grid {step, 2 step, ...}^4 intersected with the simplex,
    takes the candidate pair maximising Q(0) = c_d, and emits a row
    whenever that maximum is positive, together with its critical time.

    Candidates range over ordered pairs of *distinct* states other than
    the truth: the two-site analysis targets root sequences with two
    different states, and constant-state candidates belong to the
    single-site/constant-root criterion instead.  Pass
    ``include_same_state=True`` to scan those too (their Q(0) can
    exceed the best distinct pair's).
    """
    if truth[0] == truth[1]:
        raise ValueError("the true pair must use two distinct states")
    m = int(round(1.0 / grid_step))
    if not 3 <= m:
        raise ValueError(f"grid step must lie in (0, 0.5), got {grid_step}")
    rows = []
    candidates = [
        pair
        for pair in itertools.product(range(1, 5), repeat=2)
        if pair != tuple(truth) and (include_same_state or pair[0] != pair[1])
    ]
    for k1, k2, k3 in itertools.product(range(1, m - 2), repeat=3):
        k4 = m - k1 - k2 - k3
        if k4 < 1:
            continue
        # integer compositions of the simplex, rounded onto the decimal grid
        pi = StationaryDistribution(
            tuple(round(k * grid_step, 12) for k in (k1, k2, k3, k4))
        )
        best_pair, best = None, 0.0
        for pair in candidates:
            c_d = two_site_coefficients(pi, truth, pair).c_d
            if c_d > best:  # strict: first maximiser wins, i.e. lexicographic
                best_pair, best = pair, c_d
        if best_pair is None:
            continue
        poly = q_polynomial(pi, truth, best_pair)
        rows.append(
            CriticalTimeRow(
                pi=pi.probs,
                pair=best_pair,
                s_star=poly.s_star,
                t_star=poly.t_star,
                c_d=poly.c_d,
                a_d=poly.a_d,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Persisted outputs

def _format_states(states: Sequence[int], c: int, letters: bool) -> str:
    if letters and c == 4:
        return letters_from_states(states)
    return "-".join(str(int(s)) for s in states)


def zone_to_csv(zone: ZoneGrid, path) -> None:
    """Rows (pi_r, pi_a, N, in_zone), one per grid cell."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# condition: {zone.condition}\n")
        writer = csv.writer(fh)
        writer.writerow(["pi_r", "pi_a", "N", "in_zone"])
        for i, pr in enumerate(zone.values):
            for j, pa in enumerate(zone.values):
                writer.writerow(
                    [f"{pr:.10g}", f"{pa:.10g}", zone.n_sites, int(zone.in_zone[i, j])]
                )


def zone_to_svg(zone: ZoneGrid, path, cell_px: int = 8) -> None:
    """Raster of the zone: black cells are in-zone.

    The true-state frequency runs along x, the alternative along y
    (increasing upward); both axes cover (0, 1) at the scan step.
    """
    k = len(zone.values)
    w = h = k * cell_px
    margin = 30
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{w + 2 * margin}" height="{h + 2 * margin}" '
        f'viewBox="0 0 {w + 2 * margin} {h + 2 * margin}">',
        f'<rect x="{margin}" y="{margin}" width="{w}" height="{h}" '
        f'fill="white" stroke="black"/>',
    ]
    for i in range(k):  # pi_r on x
        for j in range(k):  # pi_a on y, flipped so it increases upward
            if zone.in_zone[i, j]:
                x = margin + i * cell_px
                y = margin + (k - 1 - j) * cell_px
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" fill="black"/>'
                )
    parts.append(
        f'<text x="{margin + w / 2:.0f}" y="{margin + h + 20}" text-anchor="middle" '
        f'font-size="12">true-state frequency (N={zone.n_sites})</text>'
    )
    parts.append(
        f'<text x="12" y="{margin + h / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {margin + h / 2:.0f})">alternative frequency</text>'
    )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def critical_times_to_csv(rows: Sequence[CriticalTimeRow], path, letters: bool = True) -> None:
    """Rows (pi_A..pi_T, rho1, rho2, t_star, c_d, a_d)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pi_A", "pi_C", "pi_G", "pi_T", "rho1", "rho2", "t_star", "c_d", "a_d"])
        for row in rows:
            r1 = _format_states((row.pair[0],), 4, letters)
            r2 = _format_states((row.pair[1],), 4, letters)
            writer.writerow(
                [*(f"{p:.10g}" for p in row.pi), r1, r2,
                 f"{row.t_star:.10g}", f"{row.c_d:.10g}", f"{row.a_d:.10g}"]
            )


def e_values_to_csv(report: AsymptoticReport, path, c: int, letters: bool = False) -> None:
    """Rows (rho, e), one per candidate sequence."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "e"])
        for cand, val in report.e_values.items():
            writer.writerow([_format_states(cand, c, letters), f"{val:.17g}"])
