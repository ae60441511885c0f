import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import commuting_pair, random_commuting_pair, random_density, random_unitary
from oqw.analytic import (
    ComponentKind,
    analytic_distribution,
    binomial_row,
    classify_spectrum,
    component_stats,
    initial_projections,
    log_binomial_pmf,
)
from oqw.errors import DimensionError
from oqw.line import LineCoin, diagonal_trap_coin, run_line
from oqw.linalg import SpectralDecomposition, joint_eigendecomposition
from oqw.walk import WalkState, evolve, position_distribution


def exact_pmf(n, r, p, q=None):
    q = Fraction(1) - Fraction(p) if q is None else Fraction(q)
    return math.comb(n, r) * Fraction(p) ** r * q ** (n - r)


def trap_decomp(theta):
    return SpectralDecomposition.from_diagonal([1.0, np.cos(theta)], [0.0, np.sin(theta)])


# --- binomial evaluation ---------------------------------------------------


def test_log_pmf_small_cases():
    assert log_binomial_pmf(2, 0, 0.5) == pytest.approx(0.5, rel=1e-14)
    assert log_binomial_pmf(90, 90, 1.0) == 1.0
    assert log_binomial_pmf(90, 88, 1.0) == 0.0
    assert log_binomial_pmf(5, -5, 0.0) == 1.0


def test_log_pmf_large_n_against_big_integers():
    exact = Fraction(math.comb(1000, 500), 2**1000)
    got = log_binomial_pmf(1000, 0, 0.5)
    assert abs(Fraction(got) - exact) / exact <= 1e-12


@pytest.mark.parametrize("p", [0.5, 0.25, 0.1234567, 0.9, 0.003])
@pytest.mark.parametrize("n", [1, 2, 9, 16, 35, 36, 50])
def test_log_pmf_relative_error_small_n(n, p):
    for r in range(n + 1):
        ex = exact_pmf(n, r, p)
        if float(ex) < 1e-300:
            continue
        got = log_binomial_pmf(n, 2 * r - n, p)
        assert abs(Fraction(got) - ex) / ex <= 1e-12


@pytest.mark.parametrize("n", [81, 200, 501, 2000])
def test_log_row_relative_error_large_n(n):
    p = 0.3
    row = binomial_row(n, p, method="log")
    for r in range(0, n + 1, max(1, n // 50)):
        ex = exact_pmf(n, r, p)
        if float(ex) < 1e-290:
            continue
        assert abs(Fraction(float(row[r])) - ex) / ex <= 1e-12


@pytest.mark.parametrize("n, k", [(3, 0), (2, 1), (4, 6), (4, -6)])
def test_log_pmf_rejects_bad_site(n, k):
    with pytest.raises(ValueError):
        log_binomial_pmf(n, k, 0.5)


def test_log_pmf_rejects_bad_probability():
    with pytest.raises(ValueError):
        log_binomial_pmf(2, 0, 1.5)


@pytest.mark.parametrize("method", ["exact", "log"])
def test_row_degenerate_probabilities(method):
    np.testing.assert_array_equal(binomial_row(6, 1.0, 0.0, method), [0, 0, 0, 0, 0, 0, 1])
    np.testing.assert_array_equal(binomial_row(6, 0.0, 1.0, method), [1, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(binomial_row(0, 0.3, method=method), [1.0])


@pytest.mark.parametrize("p", [0.5, 0.25, 0.75, 0.0123, 0.999])
def test_exact_and_log_rows_agree_at_overlap(p):
    a = binomial_row(50, p, method="exact")
    b = binomial_row(50, p, method="log")
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=0)


def test_row_unknown_method():
    with pytest.raises(ValueError):
        binomial_row(3, 0.5, method="fast")


# --- projections -----------------------------------------------------------


def test_projections_in_standard_basis_ignore_coherence():
    dec = trap_decomp(np.pi / 3)
    for z in (0.0, 0.1, 0.3j):
        w = initial_projections(dec, np.array([[0.2, z], [np.conj(z), 0.8]]))
        np.testing.assert_allclose(w, [0.2, 0.8], atol=1e-15)


def test_projection_of_eigenstate(rng):
    B, C, *_ = random_commuting_pair(3, rng)
    dec = joint_eigendecomposition(B, C)
    v = dec.basis[:, 1]
    w = initial_projections(dec, np.outer(v, v.conj()))
    np.testing.assert_allclose(w, [0.0, 1.0, 0.0], atol=1e-12)
    assert np.all(w >= 0)


@pytest.mark.parametrize("seed", range(10))
def test_projections_match_quadratic_form(seed):
    r = np.random.default_rng(seed)
    d = 4
    U = random_unitary(d, r)
    lam, phi = np.full(d, np.sqrt(0.5)), np.full(d, np.sqrt(0.5))
    dec = SpectralDecomposition(U, lam, phi)
    rho = random_density(d, r)
    w = initial_projections(dec, rho)
    direct = [np.vdot(U[:, i], rho @ U[:, i]).real for i in range(d)]
    np.testing.assert_allclose(w, direct, atol=1e-14)
    assert w.sum() == pytest.approx(1.0, abs=1e-10)


def test_projection_dimension_mismatch():
    with pytest.raises(DimensionError):
        initial_projections(trap_decomp(0.3), np.eye(3) / 3)


# --- closed-form distribution ---------------------------------------------


def test_two_step_distribution():
    prof = analytic_distribution(trap_decomp(np.pi / 4), [0.5, 0.5], 2)
    got = prof.as_dict()
    assert got[2] == pytest.approx(0.625, abs=1e-15)
    assert got[0] == pytest.approx(0.25, abs=1e-15)
    assert got[-2] == pytest.approx(0.125, abs=1e-15)
    # cross-check with the graph engine
    s = evolve(WalkState.initial({0: np.diag([0.5, 0.5])}), diagonal_trap_coin(np.pi / 4).transitions(2), 2)
    for k, v in position_distribution(s).items():
        assert got[k] == pytest.approx(v, abs=1e-15)


def test_trap_pi_3_endpoint():
    prof = analytic_distribution(trap_decomp(np.pi / 3), [0.2, 0.8], 90)
    assert prof.as_dict()[90] == pytest.approx(0.2 + 0.8 * 0.25**90, abs=1e-16)


def test_pure_trapped_state():
    prof = analytic_distribution(trap_decomp(0.7), [1.0, 0.0], 13)
    d = prof.as_dict()
    assert d[13] == 1.0
    assert all(v == 0.0 for k, v in d.items() if k != 13)


def test_left_trapped_state():
    dec = SpectralDecomposition.from_diagonal([0.0, 0.6], [1.0, 0.8])
    prof = analytic_distribution(dec, [1.0, 0.0], 8)
    assert prof.as_dict()[-8] == 1.0


@pytest.mark.parametrize("weights", [[0.5, 0.6], [1.2, -0.2], [0.5], [np.nan, 1.0]])
def test_invalid_weights(weights):
    with pytest.raises(ValueError):
        analytic_distribution(trap_decomp(0.3), weights, 4)


def test_profile_layout():
    prof = analytic_distribution(trap_decomp(0.3), [0.4, 0.6], 5)
    np.testing.assert_array_equal(prof.positions, [-5, -3, -1, 1, 3, 5])
    assert prof.n == 5
    assert [c.kind for c in prof.components] == [ComponentKind.SOLITON_RIGHT, ComponentKind.GAUSSIAN]


@pytest.mark.parametrize("seed", range(20))
def test_matches_numeric_engine(seed):
    r = np.random.default_rng(seed)
    d = int(r.integers(1, 5))
    B, C, *_ = random_commuting_pair(d, r)
    rho0 = random_density(d, r)
    dec = joint_eigendecomposition(B, C)
    w = initial_projections(dec, rho0)
    t = LineCoin(B, C).transitions(30)
    s = WalkState.initial({0: rho0})
    done = 0
    for n in (1, 5, 17, 30):
        s = evolve(s, t, n - done)
        done = n
        numeric = position_distribution(s)
        prof = analytic_distribution(dec, w, n).as_dict()
        for k in set(numeric) | set(prof):
            assert abs(numeric.get(k, 0.0) - prof.get(k, 0.0)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_phase_invariance(seed):
    r = np.random.default_rng(seed)
    d = 3
    U = random_unitary(d, r)
    lam = np.array([0.9, 0.5, 0.2])
    phi = np.sqrt(1 - lam**2)
    w = r.dirichlet(np.ones(d))
    base = analytic_distribution(SpectralDecomposition(U, lam, phi), w, 25).probabilities
    ph = np.exp(1j * r.uniform(0, 2 * np.pi, size=(2, d)))
    rotated = analytic_distribution(SpectralDecomposition(U, lam * ph[0], phi * ph[1]), w, 25)
    np.testing.assert_allclose(rotated.probabilities, base, rtol=0, atol=1e-14)


@pytest.mark.parametrize("n", [0, 1, 50, 51, 1000, 30001, 100000])
def test_normalization(n):
    prof = analytic_distribution(trap_decomp(0.61), [0.35, 0.65], n)
    assert prof.probabilities.sum() == pytest.approx(1.0, abs=1e-10)


# --- moments ---------------------------------------------------------------


def test_component_stats_examples():
    th = np.pi / 3
    mean, spread = component_stats(np.cos(th), np.sin(th), 90)
    assert mean == pytest.approx(-45.0, abs=1e-12)
    assert spread == pytest.approx(np.sin(2 * th) * np.sqrt(90), abs=1e-12)
    assert spread == pytest.approx(8.2158, abs=5e-5)
    assert component_stats(1.0, 0.0, 77) == (77.0, 0.0)


def test_component_stats_rejects_unnormalized():
    with pytest.raises(ValueError):
        component_stats(0.9, 0.9, 10)


def test_spread_is_standard_deviation_of_simulation():
    s = 1 / np.sqrt(2)
    state = run_line(LineCoin(s * np.eye(2), s * np.eye(2)), np.diag([0.5, 0.5]), 100)
    ks, ps = state.positions, state.traces()
    mean = np.dot(ks, ps)
    std = np.sqrt(np.dot((ks - mean) ** 2, ps))
    m, spread = component_stats(s, s, 100)
    assert m == pytest.approx(0.0, abs=1e-12)
    assert spread == pytest.approx(10.0, rel=1e-12)
    assert abs(std - spread) / spread <= 0.01


@pytest.mark.parametrize("lam_abs", [0.2, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("n", [10, 400, 5000])
def test_component_moments_from_pmf(lam_abs, n):
    phi_abs = np.sqrt(1 - lam_abs**2)
    row = binomial_row(n, lam_abs**2, phi_abs**2)
    ks = np.arange(-n, n + 1, 2)
    mean = np.dot(ks, row)
    std = np.sqrt(np.dot((ks - mean) ** 2, row))
    m, spread = component_stats(lam_abs, phi_abs, n)
    assert abs(mean - m) <= 1e-6
    assert abs(std - spread) <= 1e-6


# --- classification --------------------------------------------------------


def test_classify_trap_coin():
    comps = classify_spectrum(trap_decomp(np.pi / 3), [0.2, 0.8])
    assert [(c.kind, c.weight) for c in comps] == [
        (ComponentKind.SOLITON_RIGHT, 0.2),
        (ComponentKind.GAUSSIAN, 0.8),
    ]
    assert comps[1].mean(90) == pytest.approx(-45.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.4, 2.0, -1.1])
def test_classify_left_soliton_phase_free(alpha):
    lam = [0.0, 0.6 * np.exp(1j * alpha)]
    dec = SpectralDecomposition.from_diagonal(lam, [1.0, 0.8])
    comps = classify_spectrum(dec, [0.5, 0.5])
    assert [(c.kind, c.weight) for c in comps] == [
        (ComponentKind.SOLITON_LEFT, 0.5),
        (ComponentKind.GAUSSIAN, 0.5),
    ]


def test_classify_four_gaussians(rng):
    lam = np.array([0.2, 0.45, 0.7, 0.9])
    dec = SpectralDecomposition(random_unitary(4, rng), lam, np.sqrt(1 - lam**2))
    comps = classify_spectrum(dec, [0.1, 0.2, 0.3, 0.4])
    assert len(comps) == 4
    assert all(c.kind is ComponentKind.GAUSSIAN for c in comps)


def test_degenerate_moduli_merge():
    lam = np.array([0.6, -0.6, 0.6j, 0.3])
    phi = np.sqrt(1 - np.abs(lam) ** 2)
    comps = classify_spectrum(SpectralDecomposition.from_diagonal(lam, phi), [0.1, 0.2, 0.3, 0.4])
    assert len(comps) == 2
    assert comps[0].weight == pytest.approx(0.6)


def test_zero_weight_groups_dropped():
    comps = classify_spectrum(trap_decomp(0.5), [0.0, 1.0])
    assert [c.kind for c in comps] == [ComponentKind.GAUSSIAN]


def test_near_soliton_is_gaussian():
    eps = 1e-9
    dec = SpectralDecomposition.from_diagonal([np.sqrt(1 - eps)], [np.sqrt(eps)])
    assert classify_spectrum(dec, [1.0])[0].kind is ComponentKind.GAUSSIAN


MODULI = [0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0]


@settings(max_examples=200, deadline=None)
@given(
    moduli=st.lists(st.sampled_from(MODULI), min_size=1, max_size=4, unique=True),
    reps=st.lists(st.integers(1, 2), min_size=4, max_size=4),
    seed=st.integers(0, 2**32 - 1),
)
def test_classifier_counts_distinct_moduli(moduli, reps, seed):
    r = np.random.default_rng(seed)
    lam_abs = np.repeat(moduli, reps[: len(moduli)])
    d = lam_abs.size
    lam = lam_abs * np.exp(1j * r.uniform(0, 2 * np.pi, d))
    phi = np.sqrt(1 - lam_abs**2) * np.exp(1j * r.uniform(0, 2 * np.pi, d))
    B, C = commuting_pair(lam, phi, random_unitary(d, r))
    dec = joint_eigendecomposition(B, C)
    w = r.dirichlet(np.ones(d))
    comps = classify_spectrum(dec, w)
    assert len(comps) == len(moduli)
    kinds = [c.kind for c in comps]
    assert kinds.count(ComponentKind.SOLITON_RIGHT) == (1.0 in moduli)
    assert kinds.count(ComponentKind.SOLITON_LEFT) == (0.0 in moduli)
    assert sum(c.weight for c in comps) == pytest.approx(1.0, abs=1e-10)
    for c in comps:
        assert c.lambda_abs2 + c.phi_abs2 == pytest.approx(1.0, abs=1e-10)
