"""Polynomial algebra, ensembles, Gaussian counterparts, and the numeric checks."""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

import helpers
import oracles
from corrhit.dist_core import marginal, parse_distribution
from corrhit.fourier import build_basis, make_junta, make_table_function
from corrhit.invariance import (
    MultilinearPolynomial,
    ThresholdForm,
    discrete_ensemble,
    ensemble_orthonormality,
    gamma_decay_check,
    gaussian_counterpart,
    gaussian_ensemble,
    gaussian_rhc_check,
    hypercontractivity_check,
    invariance_gap,
    mollifier_chi,
    mollifier_phi,
    poly_from_function,
    projection_part,
    sample_ensemble,
    smoothing_gap,
    t_rho_poly,
    truncate,
)

TRIT = ("0", "1", "2")
BIT = ("0", "1")


def uniform_marginal(m: int):
    text = "alphabet " + " ".join(str(i) for i in range(m)) + "\nsteps 1\n"
    text += "".join(f"entry {i} 1/{m}\n" for i in range(m))
    return marginal(parse_distribution(text), 1)


def random_poly(rng: random.Random, n: int, p: int, max_degree: int | None = None):
    coeffs = {}
    for sigma in itertools.product(range(p + 1), repeat=n):
        deg = sum(1 for s in sigma if s)
        if max_degree is not None and deg > max_degree:
            continue
        if rng.random() < 0.5:
            coeffs[sigma] = rng.uniform(-1, 1)
    if not coeffs:
        coeffs[(0,) * n] = 1.0
    return MultilinearPolynomial.from_coeffs(n, p, coeffs)


def correlated_bits(r: Fraction):
    """Exact two-step distribution of +-1-correlated uniform bits, E[XY] = r."""
    same = (1 + r) / 4
    diff = (1 - r) / 4
    cells = {(0, 0): same, (1, 1): same, (0, 1): diff, (1, 0): diff}
    return helpers.dist_from_cells(cells, 2, 2)


# ---------------------------------------------------------------------------
# polynomial algebra


def test_polynomial_statistics():
    q = MultilinearPolynomial.from_coeffs(
        2, 1, {(0, 0): 0.5, (1, 0): 0.25, (1, 1): -0.25}
    )
    assert q.degree() == 2
    assert q.expectation() == 0.5
    assert q.second_moment() == pytest.approx(0.5**2 + 0.25**2 + 0.25**2)
    assert q.variance() == pytest.approx(0.25**2 + 0.25**2)
    assert q.influence(1) == pytest.approx(0.125)
    assert q.influence(2) == pytest.approx(0.0625)
    assert q.coefficient((1, 0)) == 0.25
    assert q.coefficient((0, 1)) == 0.0


def test_from_coeffs_drops_zeros():
    q = MultilinearPolynomial.from_coeffs(1, 1, {(0,): 0.0, (1,): 1.0})
    assert q.terms == (((1,), 1.0),)


def test_polynomial_validates_shapes():
    with pytest.raises(ValueError):
        MultilinearPolynomial(1, 1, (((0, 0), 1.0),))
    with pytest.raises(ValueError):
        MultilinearPolynomial(1, 1, (((2,), 1.0),))
    with pytest.raises(ValueError):
        MultilinearPolynomial(1, 1, (((1,), float("nan")),))


def test_t_rho_twice_equals_t_rho_squared():
    rng = random.Random(3)
    for _ in range(10):
        q = random_poly(rng, 2, 2)
        twice = t_rho_poly(t_rho_poly(q, 0.6), 0.5)
        combined = t_rho_poly(q, 0.3)
        assert twice.coeffs().keys() == combined.coeffs().keys()
        for sigma, c in combined.coeffs().items():
            assert twice.coefficient(sigma) == pytest.approx(c, abs=1e-12)


def test_truncate_partitions_coefficient_mass():
    rng = random.Random(4)
    q = random_poly(rng, 3, 1)
    for d in range(4):
        low = truncate(q, d, "le")
        high = truncate(q, d, "gt")
        assert low.second_moment() + high.second_moment() == pytest.approx(
            q.second_moment(), abs=1e-12
        )
        assert truncate(q, d, "lt").second_moment() + truncate(
            q, d, "ge"
        ).second_moment() == pytest.approx(q.second_moment(), abs=1e-12)


def test_projection_parts_tile_the_polynomial():
    rng = random.Random(5)
    q = random_poly(rng, 2, 2)
    total = 0.0
    for s in ((), (1,), (2,), (1, 2)):
        total += projection_part(q, s).second_moment()
    assert total == pytest.approx(q.second_moment(), abs=1e-12)


def test_projection_parts_are_orthogonal_under_enumeration():
    pi = uniform_marginal(3)
    basis = build_basis(pi)
    rng = random.Random(6)
    q = random_poly(rng, 2, 2)
    parts = [projection_part(q, s) for s in ((1,), (2,), (1, 2))]
    for qa, qb in itertools.combinations(parts, 2):
        acc = 0.0
        for pos in itertools.product(range(basis.size), repeat=2):
            w = 1.0
            for pq in pos:
                w *= float(pi.probs[basis.support[pq]])
            values = [
                [basis.functions[k][pq] for k in range(basis.size)] for pq in pos
            ]
            acc += w * qa.evaluate(values) * qb.evaluate(values)
        assert acc == pytest.approx(0.0, abs=1e-10)


# ---------------------------------------------------------------------------
# ensembles


def test_discrete_ensemble_orthonormality():
    rng = random.Random(7)
    for _ in range(10):
        pi = marginal(helpers.random_dist(rng, m=rng.choice((2, 3, 4)), steps=2), 1)
        ens = discrete_ensemble(pi, 2)
        assert ensemble_orthonormality(ens) < 1e-10


def test_sample_ensemble_shapes_and_constant_slot():
    ens = discrete_ensemble(uniform_marginal(3), 4)
    rng = np.random.Generator(np.random.Philox(key=1))
    draws = sample_ensemble(ens, rng, 100)
    assert draws.shape == (100, 4, 3)
    assert np.all(draws[:, :, 0] == 1.0)

    gens = gaussian_ensemble(2, 2)
    draws = sample_ensemble(gens, np.random.Generator(np.random.Philox(key=1)), 50)
    assert draws.shape == (50, 2, 3)
    assert np.all(draws[:, :, 0] == 1.0)


def test_gaussian_ensemble_rejects_basis():
    with pytest.raises(ValueError):
        gaussian_ensemble(0, 1)


def test_poly_from_function_dictator_golden():
    pi = uniform_marginal(2)
    f = make_junta(1, BIT, [(1, "1")])
    q = poly_from_function(f, build_basis(pi))
    assert q.coefficient((0,)) == pytest.approx(0.5, abs=1e-12)
    assert q.coefficient((1,)) == pytest.approx(-0.5, abs=1e-12)


def test_poly_from_function_random_tables_round_trip():
    rng = random.Random(8)
    for _ in range(8):
        m = rng.choice((2, 3))
        n = rng.randint(1, 2)
        pi = marginal(helpers.random_dist(rng, m=m, steps=2, full_support=True), 1)
        f = make_table_function(
            n, tuple(str(i) for i in range(m)), helpers.random_unit_table(rng, n, m)
        )
        basis = build_basis(pi)
        q = poly_from_function(f, basis)  # re-verifies pointwise internally
        # second moment equals the weighted square sum over the support grid
        acc = 0.0
        for pos in itertools.product(range(basis.size), repeat=n):
            w = 1.0
            for pq in pos:
                w *= float(pi.probs[basis.support[pq]])
            point = tuple(basis.support[pq] for pq in pos)
            idx = 0
            for d in reversed(point):
                idx = idx * m + d
            acc += w * float(f.payload["values"][idx]) ** 2
        assert q.second_moment() == pytest.approx(acc, abs=1e-10)


# ---------------------------------------------------------------------------
# Gaussian counterparts


def test_counterpart_correlated_bits():
    for r in (Fraction(1, 2), Fraction(3, 5)):
        cp = gaussian_counterpart(correlated_bits(r))
        assert cp.rows == ((1, 1), (2, 1))
        cov = cp.gaussian_cov()
        want = np.array([[1.0, float(r)], [float(r), 1.0]])
        assert np.max(np.abs(cov - want)) < 1e-10
        assert cp.max_deviation < 1e-10


def test_counterpart_basic_distribution_golden():
    p = helpers.basic_dist()
    cp = gaussian_counterpart(p)
    assert cp.rows == ((1, 1), (1, 2), (2, 1), (2, 2))
    cov = cp.gaussian_cov()
    assert np.max(np.abs(np.diag(cov) - 1.0)) < 1e-10
    cross = cov[0:2, 2:4]
    s3 = math.sqrt(3.0) / 4.0
    want = np.array([[0.25, s3], [-s3, 0.25]])
    assert np.max(np.abs(cross - want)) < 1e-9
    # the singular values of the cross block realize the correlation
    sv = np.linalg.svd(cross, compute_uv=False)
    assert sv[0] == pytest.approx(0.5, abs=1e-10)
    assert sv[1] == pytest.approx(0.5, abs=1e-10)


def test_counterpart_independent_product_has_zero_cross_block():
    cells = {
        (x, y): Fraction(1, 4) for x in range(2) for y in range(2)
    }
    cp = gaussian_counterpart(helpers.dist_from_cells(cells, 2, 2))
    cov = cp.gaussian_cov()
    assert abs(cov[0, 1]) < 1e-12


def test_counterpart_rejects_unequal_supports():
    text = "alphabet 0 1 2\nsteps 2\nentry 0 0 1/3\nentry 1 1 1/3\nentry 0 2 1/3\n"
    with pytest.raises(ValueError):
        gaussian_counterpart(parse_distribution(text))


def test_counterpart_rejects_degenerate_weights():
    text = (
        "alphabet 0 1\nsteps 2\n"
        "entry 0 0 0.4999999999999999\nentry 1 1 0.5\nentry 0 1 1e-16\n"
    )
    with pytest.raises(ValueError):
        gaussian_counterpart(parse_distribution(text))


def test_counterpart_sampling_matches_covariance():
    cp = gaussian_counterpart(helpers.basic_dist())
    rng = np.random.Generator(np.random.Philox(key=5))
    draws = cp.sample(rng, 200_000, 1)[:, 0, :]
    emp = draws.T @ draws / draws.shape[0]
    assert np.max(np.abs(emp - cp.gaussian_cov())) < 0.02


# ---------------------------------------------------------------------------
# hypercontractivity


def test_hypercontractivity_exact_random_low_degree():
    rng = random.Random(11)
    for m, n in ((2, 2), (2, 3), (3, 2), (3, 3)):
        pi = uniform_marginal(m)
        ens = discrete_ensemble(pi, n)
        a = 1.0 / m
        for _ in range(8):
            q = random_poly(rng, n, m - 1, max_degree=2)
            rep = hypercontractivity_check(q, ens, a)
            assert rep.method == "exact"
            assert rep.noise_holds
            assert rep.degree_holds
            assert rep.rho == pytest.approx(a ** (1 / 6) / 2)


def test_hypercontractivity_gaussian_quadrature_route():
    rng = random.Random(12)
    ens = gaussian_ensemble(1, 1)
    for _ in range(5):
        q = random_poly(rng, 1, 1)
        rep = hypercontractivity_check(q, ens, 0.5)
        assert rep.method == "quadrature"
        assert rep.noise_holds and rep.degree_holds


def test_hypercontractivity_gaussian_mc_route():
    rng = random.Random(13)
    ens = gaussian_ensemble(2, 2)
    q = random_poly(rng, 2, 2, max_degree=2)
    rep = hypercontractivity_check(q, ens, 0.5, samples=100_000, seed=4)
    assert rep.method == "mc"
    assert rep.stderr > 0
    assert rep.noise_holds and rep.degree_holds


def test_hypercontractivity_shape_mismatch():
    ens = discrete_ensemble(uniform_marginal(2), 2)
    q = MultilinearPolynomial.from_coeffs(2, 2, {(1, 2): 1.0})
    with pytest.raises(ValueError):
        hypercontractivity_check(q, ens, 0.5)


# ---------------------------------------------------------------------------
# mollifier


def test_mollifier_piecewise_identities():
    lam = 0.1
    for x in (-5.0, -0.2, -lam):
        assert mollifier_phi(lam, x) == 0.0
    for x in (lam, 0.3, 0.5, 0.9 - 1e-12):
        assert mollifier_phi(lam, x) == pytest.approx(x, abs=1e-12)
    for x in (1.0 + lam, 1.5, 7.0):
        assert mollifier_phi(lam, x) == 1.0
    assert mollifier_phi(lam, 0.5) == 0.5


def test_mollifier_stays_close_to_the_clamp():
    lam = 0.05
    xs = np.linspace(-2.0, 3.0, 10_001)
    clamp = np.clip(xs, 0.0, 1.0)
    vals = np.array([mollifier_phi(lam, float(x)) for x in xs])
    assert float(np.max(np.abs(vals - clamp))) <= lam + 1e-12
    # monotone non-decreasing
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all((vals >= 0.0) & (vals <= 1.0))


def test_mollifier_collar_matches_direct_quadrature():
    from corrhit.invariance import _collar_profile

    lam = 0.2
    for u in (-0.9, -0.5, 0.0, 0.4, 0.95):
        direct = lam * _collar_profile(u)
        assert mollifier_phi(lam, lam * u) == pytest.approx(direct, abs=1e-10)


def test_mollifier_chi_is_the_product():
    lam = 0.3
    xs = (0.5, 1.4, -0.1)
    want = 1.0
    for x in xs:
        want *= mollifier_phi(lam, x)
    assert mollifier_chi(lam, xs) == pytest.approx(want, abs=1e-12)


def test_mollifier_rejects_bad_lambda():
    with pytest.raises(ValueError):
        mollifier_phi(0.5, 0.0)
    with pytest.raises(ValueError):
        mollifier_phi(0.0, 0.0)


# ---------------------------------------------------------------------------
# invariance gap


def test_invariance_gap_constant_polynomials():
    p = helpers.basic_dist()
    q = MultilinearPolynomial.from_coeffs(1, 2, {(0,): 0.5})
    rep = invariance_gap((q, q), p, lam=0.2, samples=2_000, seed=1)
    assert rep.gap <= 1e-15
    assert rep.holds


def test_invariance_gap_is_reproducible():
    p = helpers.basic_dist()
    basis = build_basis(marginal(p, 1))
    f = make_junta(2, TRIT, [(1, "0")])
    q = poly_from_function(f, basis)
    a = invariance_gap((q, q), p, lam=0.1, samples=50_000, seed=11)
    b = invariance_gap((q, q), p, lam=0.1, samples=50_000, seed=11)
    assert a.gaussian_estimate == b.gaussian_estimate
    assert a.discrete_value == b.discrete_value
    assert a.holds
    c = invariance_gap((q, q), p, lam=0.1, samples=50_000, seed=12)
    assert c.gaussian_estimate != a.gaussian_estimate


def test_invariance_gap_validates_shapes():
    p = helpers.basic_dist()
    q = MultilinearPolynomial.from_coeffs(1, 2, {(0,): 0.5})
    with pytest.raises(ValueError):
        invariance_gap((q,), p, lam=0.2)
    bad = MultilinearPolynomial.from_coeffs(1, 1, {(1,): 0.5})
    with pytest.raises(ValueError):
        invariance_gap((bad, bad), p, lam=0.2)


def test_invariance_gap_budget_refusal():
    p = helpers.basic_dist()
    q = MultilinearPolynomial.from_coeffs(8, 2, {(0,) * 8: 0.5})
    with pytest.raises(ValueError):
        invariance_gap((q, q), p, lam=0.2, budget=100)


SPREAD_DISCRETE = {
    1: 0.166666666667,
    2: 0.138888888889,
    4: 0.135314385726,
    8: 0.133824549515,
}
SPREAD_GAUSSIAN_LIMIT = 0.129969809929
SPREAD_MC_GAPS = {1: 0.036620, 2: 0.008996, 4: 0.004935, 8: 0.003614}


def spread_poly(n: int) -> MultilinearPolynomial:
    c = 1.0 / math.sqrt(n)
    coeffs = {}
    for j in range(n):
        sigma = [0] * n
        sigma[j] = 1
        coeffs[tuple(sigma)] = c
    return MultilinearPolynomial.from_coeffs(n, 2, coeffs)


def test_spread_family_distance_to_gaussian_shrinks():
    p = helpers.basic_dist()
    discrete = {}
    gaps = {}
    for n in (1, 2, 4, 8):
        q = spread_poly(n)
        rep = invariance_gap((q, q), p, lam=0.45, samples=2_000_000, seed=101)
        discrete[n] = rep.discrete_value
        gaps[n] = rep.gap
        assert rep.holds
    for n, want in SPREAD_DISCRETE.items():
        assert discrete[n] == pytest.approx(want, abs=1e-9)
    exact_dist = [abs(discrete[n] - SPREAD_GAUSSIAN_LIMIT) for n in (1, 2, 4, 8)]
    assert exact_dist[0] > exact_dist[1] > exact_dist[2] > exact_dist[3]
    for n, want in SPREAD_MC_GAPS.items():
        assert gaps[n] == pytest.approx(want, abs=1e-5)
    assert gaps[1] > gaps[2] > gaps[4] > gaps[8]


# ---------------------------------------------------------------------------
# smoothing


def test_smoothing_gap_zero_gamma_is_exact_zero():
    p = helpers.basic_dist()
    basis = build_basis(marginal(p, 1))
    q = poly_from_function(make_junta(2, TRIT, [(1, "0")]), basis)
    rep = smoothing_gap((q, q), p, gamma=0.0, eps=0.25)
    assert rep.gap == 0.0
    assert rep.in_range
    assert rep.holds


def test_smoothing_gap_small_gamma_holds():
    p = helpers.basic_dist()
    basis = build_basis(marginal(p, 1))
    q = poly_from_function(make_junta(3, TRIT, [(2, "1")]), basis)
    rep = smoothing_gap((q, q), p, gamma=0.0, eps=0.2)
    gamma = rep.gamma_max * 0.9
    rep2 = smoothing_gap((q, q), p, gamma=gamma, eps=0.2)
    assert rep2.in_range
    assert rep2.gap <= 0.2
    assert rep2.holds


def test_smoothing_gap_out_of_range_gamma_only_reports():
    p = helpers.basic_dist()
    q = MultilinearPolynomial.from_coeffs(1, 2, {(0,): 0.5})
    rep = smoothing_gap((q, q), p, gamma=0.9, eps=0.25)
    assert not rep.in_range
    assert rep.holds  # no claim outside the admissible range


def test_smoothing_gap_rejects_polynomials_leaving_unit_interval():
    p = helpers.basic_dist()
    q = MultilinearPolynomial.from_coeffs(1, 2, {(0,): 2.0})
    with pytest.raises(ValueError):
        smoothing_gap((q, q), p, gamma=0.1, eps=0.25)


# ---------------------------------------------------------------------------
# Gaussian reverse hypercontractivity


def test_rhc_orthant_golden():
    cov = [[1.0, 0.5], [0.5, 1.0]]
    forms = (ThresholdForm(), ThresholdForm())
    rep = gaussian_rhc_check(cov, forms, samples=200_000, seed=3)
    assert rep.quadrature_value == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert rep.quadrature_value == pytest.approx(
        oracles.orthant_probability(0.5), abs=1e-9
    )
    assert abs(rep.product_estimate - 1.0 / 3.0) <= 4 * rep.product_stderr
    assert rep.rhs == pytest.approx(
        (rep.mus[0] * rep.mus[1]) ** (2 / 0.75), abs=1e-12
    )
    assert rep.eq46a_holds
    assert rep.holds


def test_rhc_independent_and_antipodal():
    forms = (ThresholdForm(), ThresholdForm())
    rep = gaussian_rhc_check(np.eye(2), forms, samples=100_000, seed=1)
    assert rep.rho == 0.0
    assert rep.holds

    anti = (ThresholdForm(1, 0.0), ThresholdForm(-1, 0.0))
    rep2 = gaussian_rhc_check([[1.0, 0.9], [0.9, 1.0]], anti, samples=100_000, seed=2)
    assert rep2.holds  # the bound collapses fast as rho grows


def test_rhc_rejections():
    forms = (ThresholdForm(), ThresholdForm())
    with pytest.raises(ValueError):
        gaussian_rhc_check([[1.0, 1.0], [1.0, 1.0]], forms)  # rho = 1
    with pytest.raises(ValueError):
        gaussian_rhc_check([[2.0, 0.1], [0.1, 2.0]], forms)  # non-unit diagonal
    with pytest.raises(ValueError):
        gaussian_rhc_check([[1.0, 0.5], [0.4, 1.0]], forms)  # asymmetric
    with pytest.raises(ValueError):
        gaussian_rhc_check(np.eye(3), forms)  # shape mismatch


def test_threshold_form_validates_sign():
    with pytest.raises(ValueError):
        ThresholdForm(2, 0.0)


# ---------------------------------------------------------------------------
# gamma decay


def test_gamma_decay_for_smoothed_unit_polynomials():
    rng = random.Random(21)
    for _ in range(10):
        q = random_poly(rng, 3, 1)
        norm = math.sqrt(q.second_moment())
        q = MultilinearPolynomial.from_coeffs(
            3, 1, {s: c / norm for s, c in q.terms}
        )
        gamma = rng.uniform(0.05, 0.6)
        smoothed = t_rho_poly(q, 1.0 - gamma)
        rep = gamma_decay_check(smoothed, gamma)
        assert rep.holds_all, rep.profile


def test_gamma_decay_detects_heavy_tails():
    q = MultilinearPolynomial.from_coeffs(2, 1, {(1, 1): 1.0})
    rep = gamma_decay_check(q, 0.3)
    assert not rep.holds_all
    assert rep.first_violation == 1


def test_gamma_decay_trivial_for_constants():
    q = MultilinearPolynomial.from_coeffs(2, 1, {(0, 0): 0.7})
    rep = gamma_decay_check(q, 0.5)
    assert rep.holds_all
    assert rep.first_violation is None
