import math

import numpy as np
import pytest
from scipy import integrate, stats

from staranc import (
    AncestralSequence,
    EdgeSpec,
    IidEdgeLaw,
    SimulationConfig,
    StationaryDistribution,
    expected_pattern_prob,
    mu,
    pattern_counts,
    sample_edge_lengths,
    simulate,
    simulate_alignment,
)


def _config(pi, rho, n, edge, seed):
    return SimulationConfig(
        pi=pi, rho_true=AncestralSequence(rho), n_leaves=n, edge=edge, seed=seed
    )


def test_iid_law_validation():
    with pytest.raises(ValueError):
        IidEdgeLaw(family="cauchy", params=(1.0,))  # unsupported (and heavy-tailed)
    with pytest.raises(ValueError):
        IidEdgeLaw(family="exponential", params=(0.0,))
    with pytest.raises(ValueError):
        IidEdgeLaw(family="uniform", params=(2.0, 1.0))
    with pytest.raises(ValueError):
        IidEdgeLaw(family="point", params=(-1.0,))


def test_point_mass_at_zero_time_gives_s_one(uniform4):
    cfg = _config(uniform4, (1, 2), 17, IidEdgeLaw("point", (0.0,)), seed=1)
    edges = sample_edge_lengths(cfg)
    assert edges.kind == "empirical" and edges.n == 17
    assert all(v == 1.0 for v in edges.values)


def test_edge_sampling_is_seed_deterministic(uniform4):
    law = IidEdgeLaw("exponential", (2.0,))
    e1 = sample_edge_lengths(_config(uniform4, (1,), 1000, law, seed=99))
    e2 = sample_edge_lengths(_config(uniform4, (1,), 1000, law, seed=99))
    e3 = sample_edge_lengths(_config(uniform4, (1,), 1000, law, seed=100))
    assert e1.values == e2.values
    assert e1.values != e3.values
    assert all(0.0 < v <= 1.0 for v in e1.values)


def test_exponential_law_mean_matches_quadrature(uniform4):
    """Sample mean of s against the quadrature value of E[exp(-mu T)]."""
    rate = 1.0
    n = 100_000
    edges = sample_edge_lengths(_config(uniform4, (1,), n, IidEdgeLaw("exponential", (rate,)), seed=5))
    m = mu(uniform4)
    expected, _ = integrate.quad(lambda t: math.exp(-m * t) * rate * math.exp(-rate * t), 0, np.inf)
    values = np.asarray(edges.values)
    se = values.std(ddof=1) / math.sqrt(n)
    assert abs(values.mean() - expected) < 3 * se


def test_uniform_law_mean_matches_quadrature(uniform4):
    a, b = 0.5, 2.5
    n = 50_000
    edges = sample_edge_lengths(_config(uniform4, (1,), n, IidEdgeLaw("uniform", (a, b)), seed=6))
    m = mu(uniform4)
    expected, _ = integrate.quad(lambda t: math.exp(-m * t) / (b - a), a, b)
    values = np.asarray(edges.values)
    se = values.std(ddof=1) / math.sqrt(n)
    assert abs(values.mean() - expected) < 3 * se


def test_mixture_edges_materialise_to_atoms(uniform4):
    mix = EdgeSpec.mixture([(0.5, 0.2), (0.5, 0.8)])
    edges = sample_edge_lengths(_config(uniform4, (1,), 5000, mix, seed=3))
    assert set(edges.values) == {0.2, 0.8}
    frac = np.mean(np.asarray(edges.values) == 0.2)
    assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / 5000)


def test_empirical_edges_require_matching_length(uniform4):
    spec = EdgeSpec.empirical([0.5, 0.6])
    with pytest.raises(ValueError):
        sample_edge_lengths(_config(uniform4, (1,), 3, spec, seed=0))


def test_identity_edges_copy_the_root(table_pi):
    rho = (1, 2, 4)
    edges = EdgeSpec.empirical([1.0] * 40)
    aln = simulate_alignment(table_pi, AncestralSequence(rho), edges, seed=11)
    assert np.all(aln.rows == np.asarray(rho))


def test_zero_edges_draw_from_stationary(table_pi):
    """With s = 0 every entry is a fresh stationary draw: chi-square
    goodness of fit per site at significance 1e-3."""
    n = 100_000
    edges = EdgeSpec.empirical([0.0] * n, allow_zero_mean=True)
    aln = simulate_alignment(table_pi, AncestralSequence((1, 2)), edges, seed=21)
    expected = np.asarray(table_pi.probs) * n
    for l in range(2):
        observed = np.bincount(aln.rows[:, l] - 1, minlength=4)
        assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_site_frequency_matches_mixture_expectation(table_pi):
    """Frequency of state 1 at site 1 concentrates on pi_1(1-s) + s."""
    n = 100_000
    edges = EdgeSpec.empirical([0.5] * n)
    aln = simulate_alignment(table_pi, AncestralSequence((1, 2)), edges, seed=31)
    target = 0.1 - 0.1 * 0.5 + 0.5  # 0.55
    freq = np.mean(aln.rows[:, 0] == 1)
    se = math.sqrt(target * (1 - target) / n)
    assert abs(freq - target) < 3 * se


def test_alignment_is_seed_deterministic(table_pi):
    cfg = _config(table_pi, (1, 2), 4096, IidEdgeLaw("exponential", (1.0,)), seed=77)
    e1, a1 = simulate(cfg)
    e2, a2 = simulate(cfg)
    assert e1.values == e2.values
    assert np.array_equal(a1.rows, a2.rows)


def test_marginal_pattern_law(uniform4):
    """Observed pattern frequencies track the per-leaf average pattern
    probability within 5 standard errors (two states, two sites)."""
    pi = StationaryDistribution((0.3, 0.7))
    rho = AncestralSequence((1, 2))
    n = 100_000
    cfg = _config(pi, (1, 2), n, EdgeSpec.mixture([(0.5, 0.2), (0.5, 0.8)]), seed=41)
    edges = sample_edge_lengths(cfg)
    aln = simulate_alignment(pi, rho, edges, seed=41)
    counts = pattern_counts(aln)
    assert sum(counts.values()) == n
    for pattern in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        target = expected_pattern_prob(pi, rho, edges, pattern)
        freq = counts.get(pattern, 0) / n
        se = math.sqrt(target * (1 - target) / n)
        assert abs(freq - target) < 5 * se


def test_pattern_counts_basics(table_pi):
    aln = simulate_alignment(table_pi, AncestralSequence((1, 2)), EdgeSpec.empirical([1.0]), seed=0)
    assert pattern_counts(aln) == {(1, 2): 1}
    rows = np.array([[1, 2], [1, 2], [2, 2]])
    counts = pattern_counts(type(aln)(c=2, rows=rows))
    assert counts == {(1, 2): 2, (2, 2): 1}
    same = np.tile([3, 1, 4], (9, 1))
    counts = pattern_counts(type(aln)(c=4, rows=same))
    assert counts == {(3, 1, 4): 9}
