import itertools
import math

import numpy as np
import pytest

from staranc import (
    Alignment,
    AncestralSequence,
    CapacityError,
    EdgeSpec,
    StationaryDistribution,
    constant_ancestor_profile,
    critical_time_scan,
    e_function,
    expected_pattern_prob,
    maximizer_set,
    mle_edge_length,
    mu,
    profile_log_likelihood,
    q_polynomial,
    q_with_moments,
    seq_log_likelihood,
    simulate_alignment,
    single_site_threshold,
    two_site_baseline,
    two_site_coefficients,
    v_function,
    zone_scan,
)
from staranc.asymptotics import zone_to_csv, zone_to_svg
from conftest import random_pi


# ---------------------------------------------------------------------------
# expected pattern probabilities and the limit score

def test_expected_pattern_prob_degenerate_copy(table_pi):
    edge = EdgeSpec.constant(1.0)
    assert expected_pattern_prob(table_pi, (1, 2), edge, (1, 2)) == 1.0
    assert expected_pattern_prob(table_pi, (1, 2), edge, (1, 3)) == 0.0


def test_expected_pattern_prob_stationary(table_pi):
    edge = EdgeSpec.constant(0.0, allow_zero_mean=True)
    got = expected_pattern_prob(table_pi, (1, 2), edge, (3, 4))
    assert got == pytest.approx(0.2 * 0.6, abs=1e-12)


def test_expected_pattern_prob_linear_in_atoms(table_pi):
    mix = EdgeSpec.mixture([(0.5, 0.2), (0.5, 0.8)])
    lo = expected_pattern_prob(table_pi, (1, 2), EdgeSpec.constant(0.2), (1, 4))
    hi = expected_pattern_prob(table_pi, (1, 2), EdgeSpec.constant(0.8), (1, 4))
    got = expected_pattern_prob(table_pi, (1, 2), mix, (1, 4))
    assert got == pytest.approx(0.5 * lo + 0.5 * hi, abs=1e-12)


def test_e_function_zero_at_perfect_copy(table_pi):
    assert e_function(table_pi, (1, 2), EdgeSpec.constant(1.0), (1, 2)) == 0.0


def test_e_function_single_site_closed_form():
    """Independent coding of the single-site limit score: a candidate
    pays log pi_y for every pattern y it does not match."""
    rng = np.random.default_rng(12)
    for _ in range(40):
        c = int(rng.integers(2, 6))
        pi = random_pi(rng, c)
        s = float(rng.uniform(0.01, 0.99))
        edge = EdgeSpec.constant(s)
        r = int(rng.integers(1, c + 1))
        for a in range(1, c + 1):
            closed = sum(
                expected_pattern_prob(pi, (r,), edge, (y,)) * math.log(pi.prob(y))
                for y in range(1, c + 1)
                if y != a
            )
            assert e_function(pi, (r,), edge, (a,)) == pytest.approx(closed, abs=1e-12)


def test_e_function_cap(table_pi):
    with pytest.raises(CapacityError):
        e_function(table_pi, (1,) * 12, EdgeSpec.constant(0.5), (1,) * 12, cap=1000)


def test_e_function_tracks_simulated_profile(table_pi):
    """Monte Carlo check that the per-leaf profile score concentrates
    on the limit value."""
    rho_true = AncestralSequence((1, 2))
    s = 0.35
    n = 20_000
    edge = EdgeSpec.constant(s)
    aln = simulate_alignment(table_pi, rho_true, EdgeSpec.empirical([s] * n), seed=1234)
    for cand in [(1, 2), (3, 4), (2, 2)]:
        e_val = e_function(table_pi, rho_true, edge, cand)
        per_leaf = np.array(
            [
                seq_log_likelihood(table_pi, cand, row, mle_edge_length(table_pi, cand, row))
                for row in map(tuple, aln.rows)
            ]
        )
        se = per_leaf.std(ddof=1) / math.sqrt(n)
        assert abs(per_leaf.mean() - e_val) < 3 * se


def test_maximizer_set_symmetric_and_degenerate_cases():
    pi2 = StationaryDistribution((0.5, 0.5))
    report = maximizer_set(pi2, (1, 2), EdgeSpec.constant(0.5))
    assert report.maximizer_set == ((1, 2),)
    assert report.contains_truth
    report = maximizer_set(pi2, (2, 1), EdgeSpec.constant(1.0))
    assert report.maximizer_set == ((2, 1),)


def test_maximizer_set_in_the_inconsistent_regime(table_pi):
    """Beyond the critical time the truth drops out of the maximiser
    set; the (T, T)-style constant candidate tops the enumeration and
    the catalogued distinct pair also beats the truth."""
    s = math.exp(-mu(table_pi) * 3.0)
    report = maximizer_set(table_pi, (1, 2), EdgeSpec.constant(s))
    assert not report.contains_truth
    assert (1, 2) not in report.maximizer_set
    assert report.maximizer_set == ((4, 4),)
    assert report.e_values[(3, 4)] > report.e_values[(1, 2)]


def test_symmetric_truth_maximises_everywhere():
    """Under symmetric frequencies the true sequence maximises the
    limit score; checked by enumeration over small state/site counts."""
    edges = [EdgeSpec.constant(0.3), EdgeSpec.mixture([(0.4, 0.1), (0.6, 0.9)])]
    rng = np.random.default_rng(3)
    for c, n_sites in [(2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (4, 3)]:
        pi = StationaryDistribution((1.0 / c,) * c)
        truth = tuple(int(v) for v in rng.integers(1, c + 1, n_sites))
        for edge in edges:
            report = maximizer_set(pi, truth, edge)
            top = report.e_values[truth]
            for cand, val in report.e_values.items():
                assert val <= top + 1e-12


# ---------------------------------------------------------------------------
# single-site threshold and the zone scan

def test_single_site_threshold_values(table_pi, uniform4):
    assert single_site_threshold(uniform4, 1, 2) is None  # symmetric: no zone
    got = single_site_threshold(table_pi, 1, 4)  # pi_r = 0.1, pi_a = 0.6
    assert got == pytest.approx(0.03204815926020495, abs=1e-12)
    assert single_site_threshold(table_pi, 4, 1) is None  # negative numerator
    with pytest.raises(ValueError):
        single_site_threshold(table_pi, 2, 2)


def test_v_function_single_site_closed_form():
    for p in [i / 100 for i in range(1, 100)]:
        assert v_function(p, 1) == pytest.approx(-p * math.log(p), abs=1e-12)


def test_v_function_boundaries_and_nonnegativity():
    assert v_function(1.0, 5) == 0.0
    assert v_function(0.0, 5) == 0.0
    rng = np.random.default_rng(8)
    for _ in range(200):
        p = float(rng.uniform(0, 1))
        n_sites = int(rng.integers(1, 30))
        assert v_function(p, n_sites) >= 0.0


def test_v_function_is_continuous_by_dense_sampling():
    for n_sites in (1, 2, 5):
        p = np.linspace(0.01, 0.99, 971)
        vals = np.array([v_function(float(x), n_sites) for x in p])
        # no jumps: neighbouring values move by O(grid step)
        assert np.abs(np.diff(vals)).max() < 0.02


def test_zone_scan_diagonal_and_threshold_agreement(table_pi):
    zone = zone_scan(1, 0.05)
    assert len(zone.values) == 19
    assert not np.any(np.diag(zone.in_zone))
    # cell truth must coincide with the existence of a positive
    # single-site threshold for every (pi_r, pi_a) pair on the grid
    for i, pr in enumerate(zone.values):
        for j, pa in enumerate(zone.values):
            if i == j:
                continue
            rest = (1.0 - pr - pa) / 2
            if rest <= 0:  # threshold needs a genuine distribution; v-scan does not
                continue
            pi = StationaryDistribution((pr, pa, rest, rest))
            expected = single_site_threshold(pi, 1, 2) is not None
            assert bool(zone.in_zone[i, j]) == expected


def test_zone_region_approaches_parsimony_region():
    agreements = []
    for n_sites in (1, 2, 5, 20):
        zone = zone_scan(n_sites, 0.02)
        k = len(zone.values)
        vals = np.asarray(zone.values)
        parsimony = vals[None, :] > vals[:, None]
        agreements.append(np.mean(zone.in_zone == parsimony))
    assert all(b > a for a, b in zip(agreements, agreements[1:]))
    assert agreements[-1] > 0.95


def test_zone_outputs(tmp_path):
    zone = zone_scan(2, 0.1)
    csv_path = tmp_path / "zone.csv"
    svg_path = tmp_path / "zone.svg"
    zone_to_csv(zone, csv_path)
    zone_to_svg(zone, svg_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("# condition: sufficient")
    assert lines[1] == "pi_r,pi_a,N,in_zone"
    assert len(lines) == 2 + 9 * 9
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and "</svg>" in svg


# ---------------------------------------------------------------------------
# two-site analysis

def test_two_site_uniform_frequencies_kill_the_constant_term(uniform4):
    for cand in itertools.product(range(1, 5), repeat=2):
        coef = two_site_coefficients(uniform4, (1, 2), cand)
        assert coef.c_d == pytest.approx(0.0, abs=1e-12)


def test_two_site_self_difference_is_zero(table_pi):
    coef = two_site_coefficients(table_pi, (1, 2), (1, 2))
    assert (coef.a_d, coef.b_d, coef.c_d) == (0.0, 0.0, 0.0)


def test_two_site_closed_form_matches_pattern_sum():
    """Oracle identity: the quadratic-in-moments closed form equals the
    brute-force sum over all two-site patterns of the averaged pattern
    probability times the maximised candidate log-likelihood."""
    rng = np.random.default_rng(2024)
    for trial in range(100):
        pi = random_pi(rng, 4)
        truth = tuple(int(v) for v in rng.integers(1, 5, 2))
        cand = tuple(int(v) for v in rng.integers(1, 5, 2))
        if trial % 3:
            edge = EdgeSpec.constant(float(rng.uniform(0.01, 0.99)))
        else:
            edge = EdgeSpec.mixture(
                [(0.3, float(rng.uniform(0, 1))), (0.7, float(rng.uniform(0, 1)))]
            )
        coef = two_site_coefficients(pi, truth, cand)
        closed = (
            two_site_baseline(pi, truth, edge)
            + coef.a * edge.s2_bar
            + coef.b * edge.s_bar
            + coef.c
        )
        brute = 0.0
        for y in itertools.product(range(1, 5), repeat=2):
            p = expected_pattern_prob(pi, truth, edge, y)
            s_hat = mle_edge_length(pi, cand, y)
            brute += p * seq_log_likelihood(pi, cand, y, s_hat)
        assert closed == pytest.approx(brute, abs=1e-10)


def test_q_polynomial_perfect_copy_anchor(table_pi):
    poly = q_polynomial(table_pi, (1, 2), (3, 4))
    assert poly(1.0) == pytest.approx(math.log(0.1 * 0.1), abs=1e-12)
    assert poly.s_star is not None
    assert poly.t_star == pytest.approx(2.2335, abs=5e-4)
    # the root really is the sign change
    assert poly(poly.s_star) == pytest.approx(0.0, abs=1e-9)
    assert poly(poly.s_star - 1e-6) > 0 > poly(poly.s_star + 1e-6)


def test_q_polynomial_uniform_has_no_root(uniform4):
    for cand in itertools.product(range(1, 5), repeat=2):
        if cand == (1, 2):
            continue
        poly = q_polynomial(uniform4, (1, 2), cand)
        assert poly.s_star is None and poly.t_star is None


def test_q_polynomial_rejects_the_truth(table_pi):
    with pytest.raises(ValueError):
        q_polynomial(table_pi, (1, 2), (1, 2))


def test_q_polynomial_negative_at_one_on_random_frequencies():
    """Q(1) < 0 for every non-truth candidate: hard internal assertion
    exercised over many random frequency vectors."""
    rng = np.random.default_rng(31415)
    for _ in range(1000):
        pi = random_pi(rng, 4)
        truth = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        cand = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        if cand == truth:
            continue
        poly = q_polynomial(pi, truth, cand)  # raises if Q(1) >= 0
        assert poly(1.0) < 0.0


def test_q_with_moments(table_pi):
    coef = two_site_coefficients(table_pi, (1, 2), (3, 4))
    s = 0.37
    assert q_with_moments(coef, s, s * s) == pytest.approx(
        (coef.a_d * s + coef.b_d) * s + coef.c_d, abs=1e-15
    )
    # spreading the edge distribution at fixed mean lowers Q when a_d < 0
    assert coef.a_d < 0
    assert q_with_moments(coef, s, s * s + 0.05) < q_with_moments(coef, s, s * s)
    with pytest.raises(ValueError):
        q_with_moments(coef, 0.5, 0.2)  # below the squared mean
    with pytest.raises(ValueError):
        q_with_moments(coef, 0.5, 0.7)  # above the mean


def test_q_with_moments_matches_pattern_sum(table_pi):
    """Mixture moments fed into the quadratic reproduce the difference
    of brute-force expected scores."""
    edge = EdgeSpec.mixture([(0.25, 0.1), (0.75, 0.6)])
    truth, cand = (1, 2), (3, 4)
    coef = two_site_coefficients(table_pi, truth, cand)

    def brute(rho):
        total = 0.0
        for y in itertools.product(range(1, 5), repeat=2):
            p = expected_pattern_prob(table_pi, truth, edge, y)
            s_hat = mle_edge_length(table_pi, rho, y)
            total += p * seq_log_likelihood(table_pi, rho, y, s_hat)
        return total

    got = q_with_moments(coef, edge.s_bar, edge.s2_bar)
    assert got == pytest.approx(brute(cand) - brute(truth), abs=1e-10)


# ---------------------------------------------------------------------------
# constant-ancestor profile

def test_constant_ancestor_profile_branches(table_pi):
    assert constant_ancestor_profile(table_pi, 4, 0.3) == 0.0  # below pi_T = 0.6
    assert constant_ancestor_profile(table_pi, 1, 1.0) == pytest.approx(
        -math.log(0.1), abs=1e-12
    )


def test_constant_ancestor_profile_matches_profile_likelihood():
    """Cross-module oracle: for one leaf and an all-a candidate, the
    full profile likelihood equals N times the normalised form plus the
    stationary log-probability of the observed row."""
    rng = np.random.default_rng(4242)
    for _ in range(60):
        c = int(rng.integers(2, 5))
        pi = random_pi(rng, c)
        n_sites = int(rng.integers(1, 9))
        a = int(rng.integers(1, c + 1))
        y = tuple(int(v) for v in rng.integers(1, c + 1, n_sites))
        aln = Alignment(c=c, rows=np.asarray([y], dtype=np.int64))
        p_hat = sum(v == a for v in y) / n_sites
        stationary = sum(math.log(pi.prob(v)) for v in y)
        expected = n_sites * constant_ancestor_profile(pi, a, p_hat) + stationary
        got = profile_log_likelihood(pi, (a,) * n_sites, aln)
        assert got == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# critical-time catalogue

def test_critical_time_scan_anchor_rows():
    rows = {tuple(round(p, 10) for p in r.pi): r for r in critical_time_scan(0.1)}
    row = rows[(0.1, 0.1, 0.2, 0.6)]
    assert row.pair == (3, 4)  # G, T
    assert row.t_star == pytest.approx(2.2, abs=0.05)
    row = rows[(0.1, 0.7, 0.1, 0.1)]
    assert row.pair == (1, 3)  # A, G
    assert row.t_star == pytest.approx(2.1, abs=0.05)


def test_critical_time_scan_same_state_candidates_flag():
    base = critical_time_scan(0.1)
    wide = critical_time_scan(0.1, include_same_state=True)
    assert {r.pi for r in base} <= {r.pi for r in wide}
    by_pi = {r.pi: r for r in wide}
    # with constant candidates admitted, the running example prefers
    # the all-dominant-state pair and its intercept is larger
    row = by_pi[(0.1, 0.1, 0.2, 0.6)]
    assert row.pair == (4, 4)
    assert row.c_d > {r.pi: r for r in base}[(0.1, 0.1, 0.2, 0.6)].c_d
