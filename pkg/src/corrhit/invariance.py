"""Multilinear polynomial numerics: Gaussian counterparts, hypercontractivity,
mollified indicators, invariance gaps, smoothing, and Gaussian reverse
hypercontractivity.

Polynomials live over orthonormal ensembles: per coordinate, index 0 is the
constant 1 and indices 1..p are mean-zero orthonormal functions of the step
symbol (discrete) or independent standard normals (Gaussian).  Formal
coefficient algebra is exact in the coefficients; evaluations and Monte Carlo
runs are float, with counter-based RNG so every estimate is reproducible
bit-for-bit from (seed, sample count).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy import integrate

from .dist_core import MarginalDistribution, StepDistribution, marginal, rho
from .fourier import (
    TABLE_BUDGET,
    FunctionSpec,
    OrthonormalBasis,
    analyze,
    build_basis,
    evaluate,
    to_table,
)


# ---------------------------------------------------------------------------
# multilinear polynomials


@dataclass(frozen=True)
class MultilinearPolynomial:
    """Sparse sum of monomials prod_i X_{i, sigma_i} with real coefficients.

    terms holds (sigma, coefficient) pairs, sigma in {0..p}^n, sorted and
    deduplicated; index 0 marks the constant factor.
    """

    n: int
    p: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self):
        if self.n < 1 or self.p < 0:
            raise ValueError("need n >= 1 and p >= 0")
        seen = set()
        for sigma, c in self.terms:
            if len(sigma) != self.n:
                raise ValueError("index tuple length must equal n")
            if any(not 0 <= s <= self.p for s in sigma):
                raise ValueError("index entries must lie in 0..p")
            if sigma in seen:
                raise ValueError("duplicate index tuple")
            seen.add(sigma)
            if not math.isfinite(c):
                raise ValueError("coefficients must be finite")

    @classmethod
    def from_coeffs(cls, n: int, p: int, coeffs: dict) -> "MultilinearPolynomial":
        terms = tuple(
            (tuple(sigma), float(c)) for sigma, c in sorted(coeffs.items()) if c != 0
        )
        return cls(n, p, terms)

    def coeffs(self) -> dict[tuple[int, ...], float]:
        return dict(self.terms)

    def coefficient(self, sigma) -> float:
        sigma = tuple(sigma)
        for s, c in self.terms:
            if s == sigma:
                return c
        return 0.0

    def degree(self) -> int:
        return max((sum(1 for s in sigma if s) for sigma, _ in self.terms), default=0)

    def expectation(self) -> float:
        return self.coefficient((0,) * self.n)

    def second_moment(self) -> float:
        return math.fsum(c * c for _, c in self.terms)

    def variance(self) -> float:
        return math.fsum(c * c for sigma, c in self.terms if any(sigma))

    def influence(self, i: int) -> float:
        if not 1 <= i <= self.n:
            raise ValueError("coordinate out of range")
        return math.fsum(c * c for sigma, c in self.terms if sigma[i - 1] != 0)

    def evaluate(self, values) -> float:
        """values[i][k]: the k-th ensemble element of coordinate i+1 (k=0 -> 1)."""
        total = 0.0
        for sigma, c in self.terms:
            term = c
            for i, s in enumerate(sigma):
                if s:
                    term *= values[i][s]
            total += term
        return total


def t_rho_poly(poly: MultilinearPolynomial, rho_value: float) -> MultilinearPolynomial:
    """Noise operator on coefficients: alpha(sigma) -> rho^|sigma| alpha(sigma)."""
    r = float(rho_value)
    return MultilinearPolynomial.from_coeffs(
        poly.n,
        poly.p,
        {
            sigma: c * r ** sum(1 for s in sigma if s)
            for sigma, c in poly.terms
        },
    )


def truncate(poly: MultilinearPolynomial, d: int, mode: str = "le") -> MultilinearPolynomial:
    """Keep monomials whose support size compares to d as mode says."""
    comps = {
        "le": lambda k: k <= d,
        "lt": lambda k: k < d,
        "ge": lambda k: k >= d,
        "gt": lambda k: k > d,
    }
    if mode not in comps:
        raise ValueError(f"unknown comparator {mode!r}")
    keep = comps[mode]
    return MultilinearPolynomial.from_coeffs(
        poly.n,
        poly.p,
        {s: c for s, c in poly.terms if keep(sum(1 for x in s if x))},
    )


def projection_part(poly: MultilinearPolynomial, coords) -> MultilinearPolynomial:
    """Monomials supported on exactly the given coordinate set."""
    want = frozenset(int(c) for c in coords)
    if any(not 1 <= c <= poly.n for c in want):
        raise ValueError("coordinate out of range")
    return MultilinearPolynomial.from_coeffs(
        poly.n,
        poly.p,
        {
            s: c
            for s, c in poly.terms
            if frozenset(i + 1 for i, x in enumerate(s) if x) == want
        },
    )


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSequence:
    """n i.i.d. orthonormal ensembles: discrete (basis of a marginal) or Gaussian."""

    kind: str
    n: int
    p: int
    basis: OrthonormalBasis | None = None

    def __post_init__(self):
        if self.kind not in ("discrete", "gaussian"):
            raise ValueError("kind must be 'discrete' or 'gaussian'")
        if self.kind == "discrete":
            if self.basis is None:
                raise ValueError("discrete ensembles need a basis")
            if self.p != self.basis.size - 1:
                raise ValueError("p must equal basis size - 1")
        elif self.basis is not None:
            raise ValueError("gaussian ensembles carry no basis")
        if self.n < 1 or self.p < 0:
            raise ValueError("need n >= 1 and p >= 0")


def discrete_ensemble(pi: MarginalDistribution, n: int) -> EnsembleSequence:
    basis = build_basis(pi)
    return EnsembleSequence("discrete", n, basis.size - 1, basis)


def gaussian_ensemble(n: int, p: int) -> EnsembleSequence:
    return EnsembleSequence("gaussian", n, p)


def ensemble_orthonormality(ens: EnsembleSequence) -> float:
    """Worst deviation of E[X_j X_k] from the identity (0 for Gaussian, known)."""
    if ens.kind == "gaussian":
        return 0.0
    basis = ens.basis
    probs = [float(basis.pi.probs[s]) for s in basis.support]
    worst = 0.0
    for a in range(basis.size):
        for b in range(basis.size):
            ip = sum(
                p * x * y
                for p, x, y in zip(probs, basis.functions[a], basis.functions[b])
            )
            worst = max(worst, abs(ip - (1.0 if a == b else 0.0)))
    worst = max(worst, max(abs(x - 1.0) for x in basis.functions[0]))
    return worst


def sample_ensemble(ens: EnsembleSequence, rng: Generator, size: int) -> np.ndarray:
    """(size, n, p+1) array of ensemble values; [:, :, 0] is the constant 1."""
    out = np.empty((size, ens.n, ens.p + 1))
    out[:, :, 0] = 1.0
    if ens.kind == "gaussian":
        out[:, :, 1:] = rng.standard_normal((size, ens.n, ens.p))
        return out
    basis = ens.basis
    probs = np.array([float(basis.pi.probs[s]) for s in basis.support])
    draws = rng.choice(len(basis.support), size=(size, ens.n), p=probs)
    mat = np.array(basis.functions)  # (p+1, |support|)
    out[:, :, :] = mat.T[draws]
    return out


# ---------------------------------------------------------------------------
# expansion of table functions


def poly_from_function(
    f: FunctionSpec, basis: OrthonormalBasis, n: int | None = None,
    budget: int | None = None,
) -> MultilinearPolynomial:
    """Expand a table function in the product basis and re-verify pointwise.

    The returned polynomial evaluated on the discrete ensemble values of a
    point reproduces f at that point within 1e-10 over the whole support grid.
    """
    if f.kind != "table":
        f = to_table(f, budget=budget)
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    expansion = analyze(f, basis, budget=budget)
    poly = MultilinearPolynomial.from_coeffs(f.n, basis.size - 1, expansion.coeffs)
    for pos in itertools.product(range(basis.size), repeat=f.n):
        values = [
            [basis.functions[k][pos_i] for k in range(basis.size)] for pos_i in pos
        ]
        got = poly.evaluate(values)
        want = float(evaluate(f, tuple(basis.support[q] for q in pos)))
        if abs(got - want) > 1e-10:
            raise ArithmeticError(
                f"expansion fails to reproduce the function at {pos}: {got} vs {want}"
            )
    return poly


# ---------------------------------------------------------------------------
# Gaussian counterparts


@dataclass(frozen=True, eq=False)
class GaussianCounterpart:
    """Linear images of one standard-normal vector matching the discrete covariance.

    Row (j, k) of the map gives the Gaussian stand-in for ensemble element k of
    step j; covariance agreement with the discrete ensembles is certified at
    construction.
    """

    steps: int
    sizes: tuple[int, ...]
    rows: tuple[tuple[int, int], ...]
    matrix: np.ndarray  # (#rows, base_dim)
    discrete_cov: np.ndarray
    max_deviation: float

    def row_index(self, j: int, k: int) -> int:
        return self.rows.index((j, k))

    def gaussian_cov(self) -> np.ndarray:
        return self.matrix @ self.matrix.T

    def sample(self, rng: Generator, size: int, n: int) -> np.ndarray:
        """(size, n, #rows) Gaussian ensemble values, coordinates independent."""
        base = rng.standard_normal((size, n, self.matrix.shape[1]))
        return base @ self.matrix.T


def gaussian_counterpart(
    p: StepDistribution, bases: tuple[OrthonormalBasis, ...] | None = None,
) -> GaussianCounterpart:
    """Joint Gaussian ensembles whose covariance matches the discrete ones.

    Works in the L2 space of one step tuple: the orthonormal frame is the
    support-tuple indicators (normalized, mixed-radix order), each discrete
    ensemble element is expressed in that frame, and the same coefficients
    applied to independent standard normals give the counterpart.
    """
    ell = p.steps
    if bases is None:
        bases = tuple(build_basis(marginal(p, j)) for j in range(1, ell + 1))
    if len(bases) != ell:
        raise ValueError("need one basis per step")
    support0 = bases[0].support
    for b in bases[1:]:
        if b.support != support0:
            raise ValueError("step supports differ; counterpart needs equal supports")
    support = p.support()
    if not support:
        raise ValueError("empty support")
    min_w = min(float(w) for _, w in support)
    if min_w <= 1e-15:
        raise ValueError("degenerate support weight; the indicator frame loses rank")
    rows = []
    for j in range(1, ell + 1):
        for k in range(1, bases[j - 1].size):
            rows.append((j, k))
    pos = {s: q for q, s in enumerate(support0)}
    mat = np.zeros((len(rows), len(support)))
    for t, (tup, w) in enumerate(support):
        sw = math.sqrt(float(w))
        for r, (j, k) in enumerate(rows):
            mat[r, t] = sw * bases[j - 1].functions[k][pos[tup[j - 1]]]
    cov = np.zeros((len(rows), len(rows)))
    for t, (tup, w) in enumerate(support):
        fw = float(w)
        vals = [bases[j - 1].functions[k][pos[tup[j - 1]]] for j, k in rows]
        for a in range(len(rows)):
            for b in range(len(rows)):
                cov[a, b] += fw * vals[a] * vals[b]
    dev = float(np.max(np.abs(mat @ mat.T - cov)))
    if dev > 1e-10:
        raise ArithmeticError(
            f"counterpart covariance deviates by {dev} from the discrete one"
        )
    sizes = tuple(b.size - 1 for b in bases)
    return GaussianCounterpart(ell, sizes, tuple(rows), mat, cov, dev)


# ---------------------------------------------------------------------------
# hypercontractivity


@dataclass(frozen=True)
class HypercontractivityReport:
    rho: float
    noise_lhs: float
    noise_rhs: float
    noise_holds: bool
    degree: int
    degree_lhs: float
    degree_rhs: float
    degree_holds: bool
    method: str
    stderr: float


def _enumerate_discrete_values(poly: MultilinearPolynomial, basis: OrthonormalBasis):
    """(weights, values) over the support grid, weights exact-probability floats."""
    k = basis.size
    probs = np.array([float(basis.pi.probs[s]) for s in basis.support])
    n = poly.n
    grids = np.meshgrid(*([np.arange(k)] * n), indexing="ij")
    digits = [g.reshape(-1) for g in grids]
    weights = np.ones(k**n)
    for d in digits:
        weights *= probs[d]
    funcs = np.array(basis.functions)  # (k, k): funcs[s][pos]
    vals = np.zeros(k**n)
    for sigma, c in poly.terms:
        term = np.full(k**n, c)
        for i, s in enumerate(sigma):
            if s:
                term *= funcs[s][digits[i]]
        vals += term
    return weights, vals


def hypercontractivity_check(
    poly: MultilinearPolynomial, ens: EnsembleSequence, a,
    budget: int | None = None, samples: int = 200_000, seed: int = 0,
) -> HypercontractivityReport:
    """Check the (2, 3, a^(1/6)/2) inequality and the degree-d third-moment bound.

    Discrete ensembles are enumerated exactly.  Gaussian ensembles use
    Gauss-Hermite quadrature when n*p <= 2 and Monte Carlo otherwise; the
    comparisons then include a 3-standard-error slack.
    """
    a = float(a)
    if not 0 < a <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if poly.n != ens.n or poly.p != ens.p:
        raise ValueError("polynomial and ensemble shapes disagree")
    r = a ** (1.0 / 6.0) / 2.0
    noisy = t_rho_poly(poly, r)
    sq = poly.second_moment()
    d = poly.degree()
    stderr = 0.0
    if ens.kind == "discrete":
        cap = TABLE_BUDGET if budget is None else budget
        if ens.basis.size**poly.n > cap:
            raise ValueError("support grid exceeds the budget")
        weights, vals = _enumerate_discrete_values(poly, ens.basis)
        _, noisy_vals = _enumerate_discrete_values(noisy, ens.basis)
        third_noisy = float(np.sum(weights * np.abs(noisy_vals) ** 3))
        third_plain = float(np.sum(weights * np.abs(vals) ** 3))
        method = "exact"
    elif ens.n * ens.p <= 2:
        third_noisy, third_plain = _gauss_quadrature_thirds(poly, noisy)
        method = "quadrature"
    else:
        rng = Generator(Philox(key=int(seed)))
        values = sample_ensemble(ens, rng, samples)
        vals = _eval_poly_vectorized(poly, values)
        noisy_vals = _eval_poly_vectorized(noisy, values)
        cubes = np.abs(noisy_vals) ** 3
        third_noisy = float(np.mean(cubes))
        third_plain = float(np.mean(np.abs(vals) ** 3))
        stderr = float(np.std(cubes, ddof=1) / math.sqrt(samples))
        method = "mc"
    noise_lhs = third_noisy ** (1.0 / 3.0)
    noise_rhs = math.sqrt(sq)
    degree_lhs = third_plain ** (1.0 / 3.0)
    degree_rhs = (2.0 / a ** (1.0 / 6.0)) ** d * math.sqrt(sq)
    slack = 1e-12 if method != "mc" else 3.0 * stderr + 1e-12
    return HypercontractivityReport(
        r, noise_lhs, noise_rhs, noise_lhs <= noise_rhs + slack,
        d, degree_lhs, degree_rhs, degree_lhs <= degree_rhs + slack,
        method, stderr,
    )


def _eval_poly_vectorized(poly: MultilinearPolynomial, values: np.ndarray) -> np.ndarray:
    """values: (N, n, p+1) ensemble draws; returns (N,) polynomial values."""
    out = np.zeros(values.shape[0])
    for sigma, c in poly.terms:
        term = np.full(values.shape[0], c)
        for i, s in enumerate(sigma):
            if s:
                term *= values[:, i, s]
        out += term
    return out


def _gauss_quadrature_thirds(poly, noisy):
    """Third absolute moments of P and T_rho P over 1 or 2 standard normals."""
    dims = []
    for i in range(poly.n):
        for k in range(1, poly.p + 1):
            dims.append((i, k))
    nodes, weights = np.polynomial.hermite_e.hermegauss(96)
    weights = weights / math.sqrt(2.0 * math.pi)
    if len(dims) == 1:
        pts = nodes[:, None]
        w = weights
    else:
        a, b = np.meshgrid(nodes, nodes, indexing="ij")
        pts = np.stack([a.reshape(-1), b.reshape(-1)], axis=1)
        w = np.outer(weights, weights).reshape(-1)
    values = np.empty((pts.shape[0], poly.n, poly.p + 1))
    values[:, :, 0] = 1.0
    for col, (i, k) in enumerate(dims):
        values[:, i, k] = pts[:, col]
    third_plain = float(np.sum(w * np.abs(_eval_poly_vectorized(poly, values)) ** 3))
    third_noisy = float(np.sum(w * np.abs(_eval_poly_vectorized(noisy, values)) ** 3))
    return third_noisy, third_plain


# ---------------------------------------------------------------------------
# mollifier


_BUMP_CACHE: dict = {}


def _bump_raw(x: float) -> float:
    if not -1.0 < x < 1.0:
        return 0.0
    return math.exp(-1.0 / (x + 1.0) ** 2) * math.exp(-1.0 / (x - 1.0) ** 2)


def _bump_constant() -> float:
    if "c" not in _BUMP_CACHE:
        val, err = integrate.quad(
            _bump_raw, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=800
        )
        if err > 1e-12:
            raise ArithmeticError("bump normalization did not converge")
        _BUMP_CACHE["c"] = val
    return _BUMP_CACHE["c"]


def _collar_profile(u: float) -> float:
    """g(u) = integral of psi(s) * max(u + s, 0) ds for u in [-1, 1]."""
    c = _bump_constant()
    val, err = integrate.quad(
        lambda s: _bump_raw(s) * (u + s), max(-u, -1.0), 1.0,
        epsabs=1e-13, epsrel=1e-12, limit=800,
    )
    if err > 1e-11:
        raise ArithmeticError("collar quadrature did not converge")
    return val / c


def _collar_spline():
    """Dense cubic interpolant of the collar profile; nodes by adaptive quadrature."""
    if "spline" not in _BUMP_CACHE:
        from scipy.interpolate import CubicSpline

        us = np.linspace(-1.0, 1.0, 2049)
        gs = np.array([_collar_profile(float(u)) for u in us])
        _BUMP_CACHE["spline"] = CubicSpline(us, gs)
    return _BUMP_CACHE["spline"]


def _phi_values(lam: float, x: np.ndarray) -> np.ndarray:
    """phi_lambda on an array: exact piecewise outside the collars, interpolated
    collar profile (quadrature-sampled, error well under 1e-10) inside."""
    if not 0.0 < lam < 0.5:
        raise ValueError("lambda must lie in (0, 1/2)")
    x = np.asarray(x, dtype=float)
    out = np.where(x >= lam, x, 0.0)
    out = np.where(x >= 1.0 - lam, 1.0, out)
    spline = _collar_spline()
    low = (x > -lam) & (x < lam)
    if np.any(low):
        out[low] = lam * np.maximum(spline(x[low] / lam), 0.0)
    high = (x > 1.0 - lam) & (x < 1.0 + lam)
    if np.any(high):
        out[high] = x[high] - lam * np.maximum(spline((x[high] - 1.0) / lam), 0.0)
    return np.clip(out, 0.0, 1.0)


def mollifier_phi(lam: float, x) -> float:
    """The clamp-to-[0,1] ramp convolved with the width-lambda bump."""
    return float(_phi_values(float(lam), np.asarray([x], dtype=float))[0])


def mollifier_chi(lam: float, xbar) -> float:
    """Product of mollified ramps, one per step value."""
    vals = _phi_values(float(lam), np.asarray(xbar, dtype=float))
    return float(np.prod(vals))


# ---------------------------------------------------------------------------
# invariance gap


@dataclass(frozen=True)
class InvarianceGapReport:
    discrete_value: float
    gaussian_estimate: float
    gaussian_stderr: float
    gap: float
    bound: float
    tau: float
    degree: int
    alpha: float
    holds: bool
    samples: int
    seed: int


def _support_grid(p: StepDistribution, n: int, budget: int | None):
    support = p.support()
    r = len(support)
    cap = TABLE_BUDGET if budget is None else budget
    if r**n > cap:
        raise ValueError(f"{r}^{n} support assignments exceed the budget {cap}")
    grids = np.meshgrid(*([np.arange(r)] * n), indexing="ij")
    digits = [g.reshape(-1) for g in grids]
    w = np.array([float(wt) for _, wt in support])
    weights = np.ones(r**n)
    for d in digits:
        weights *= w[d]
    return support, digits, weights


def _discrete_step_values(
    polys, bases, support, digits,
) -> list[np.ndarray]:
    """Per-step polynomial values on every support assignment of the grid."""
    out = []
    for j, (poly, basis) in enumerate(zip(polys, bases), 1):
        pos = {s: q for q, s in enumerate(basis.support)}
        # ensemble value of element k at support tuple t, for this step
        elem = np.array(
            [
                [basis.functions[k][pos[tup[j - 1]]] for tup, _ in support]
                for k in range(basis.size)
            ]
        )
        vals = np.zeros(digits[0].shape[0])
        for sigma, c in poly.terms:
            term = np.full(digits[0].shape[0], c)
            for i, s in enumerate(sigma):
                if s:
                    term *= elem[s][digits[i]]
            vals += term
        out.append(vals)
    return out


def invariance_gap(
    polys, dist: StepDistribution, lam: float, samples: int = 200_000, seed: int = 0,
    c_const: float = 10.0, budget: int | None = None,
) -> InvarianceGapReport:
    """|E[chi_lam(polys on discrete ensembles)] - E[chi_lam(polys on Gaussian
    counterparts)]|: exact enumeration on the discrete side, seeded Monte Carlo
    on the Gaussian side, compared with the C l^(5/2) tau^(1/8) / alpha^(4d)
    envelope (consistency with some constant, C configurable).
    """
    polys = tuple(polys)
    ell = dist.steps
    if len(polys) != ell:
        raise ValueError("need one polynomial per step")
    n = polys[0].n
    if any(q.n != n for q in polys):
        raise ValueError("polynomials must share n")
    bases = tuple(build_basis(marginal(dist, j)) for j in range(1, ell + 1))
    for q, b in zip(polys, bases):
        if q.p != b.size - 1:
            raise ValueError("polynomial index range disagrees with the step basis")
    counterpart = gaussian_counterpart(dist, bases)

    support, digits, weights = _support_grid(dist, n, budget)
    step_vals = _discrete_step_values(polys, bases, support, digits)
    prod = np.ones(weights.shape[0])
    for vals in step_vals:
        prod *= _phi_values(lam, vals)
    discrete_value = float(np.sum(weights * prod))

    rng = Generator(Philox(key=int(seed)))
    gvals = counterpart.sample(rng, samples, n)  # (N, n, rows)
    prod_g = np.ones(samples)
    for j, poly in enumerate(polys, 1):
        pv = np.zeros(samples)
        for sigma, c in poly.terms:
            term = np.full(samples, c)
            for i, s in enumerate(sigma):
                if s:
                    term *= gvals[:, i, counterpart.row_index(j, s)]
            pv += term
        prod_g *= _phi_values(lam, pv)
    gaussian_estimate = float(np.mean(prod_g))
    stderr = float(np.std(prod_g, ddof=1) / math.sqrt(samples))

    tau = max(
        math.fsum(q.influence(i) for q in polys) for i in range(1, n + 1)
    )
    d = max(q.degree() for q in polys)
    a = min(
        float(min(pi.probs[s] for s in pi.support_indices()))
        for pi in (marginal(dist, j) for j in range(1, ell + 1))
    )
    bound = c_const * ell**2.5 * tau ** (1.0 / 8.0) / a ** (4 * d)
    gap = abs(discrete_value - gaussian_estimate)
    holds = gap <= bound + 3.0 * stderr + 1e-12
    report = InvarianceGapReport(
        discrete_value, gaussian_estimate, stderr, gap, bound, tau, d, a,
        holds, samples, seed,
    )
    if not holds:
        raise ArithmeticError(f"invariance gap {gap} exceeds {bound} + 3 stderr")
    return report


# ---------------------------------------------------------------------------
# smoothing


@dataclass(frozen=True)
class SmoothingReport:
    raw_value: float
    smoothed_value: float
    gap: float
    eps: float
    gamma: float
    gamma_max: float
    in_range: bool
    holds: bool


def smoothing_gap(
    polys, dist: StepDistribution, gamma: float, eps: float,
    budget: int | None = None,
) -> SmoothingReport:
    """|E[prod P_j] - E[prod T_(1-gamma) P_j]| under the step distribution.

    Each polynomial must stay in [0,1] pointwise on its step's support grid.
    Whenever gamma lies in [0, (1-rho) eps / (l ln(l/eps))], the gap must come
    out at most eps; a violation raises.
    """
    polys = tuple(polys)
    ell = dist.steps
    if len(polys) != ell:
        raise ValueError("need one polynomial per step")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if not 0 < eps < ell:
        raise ValueError("eps must lie in (0, steps)")
    n = polys[0].n
    if any(q.n != n for q in polys):
        raise ValueError("polynomials must share n")
    bases = tuple(build_basis(marginal(dist, j)) for j in range(1, ell + 1))
    for j, (q, b) in enumerate(zip(polys, bases), 1):
        if q.p != b.size - 1:
            raise ValueError("polynomial index range disagrees with the step basis")
        _, vals = _enumerate_discrete_values(q, b)
        if np.min(vals) < -1e-9 or np.max(vals) > 1.0 + 1e-9:
            raise ValueError(f"step {j} polynomial leaves [0,1] on its support grid")

    support, digits, weights = _support_grid(dist, n, budget)
    raw_vals = _discrete_step_values(polys, bases, support, digits)
    smoothed = tuple(t_rho_poly(q, 1.0 - gamma) for q in polys)
    smooth_vals = _discrete_step_values(smoothed, bases, support, digits)
    raw = np.ones(weights.shape[0])
    smo = np.ones(weights.shape[0])
    for rv, sv in zip(raw_vals, smooth_vals):
        raw *= rv
        smo *= sv
    raw_value = float(np.sum(weights * raw))
    smoothed_value = float(np.sum(weights * smo))
    gap = abs(raw_value - smoothed_value)

    r = rho(dist)
    gamma_max = (1.0 - r) * eps / (ell * math.log(ell / eps))
    in_range = 0.0 <= gamma <= gamma_max
    holds = (not in_range) or gap <= eps + 1e-12
    report = SmoothingReport(
        raw_value, smoothed_value, gap, eps, gamma, gamma_max, in_range, holds
    )
    if not holds:
        raise ArithmeticError(
            f"smoothing gap {gap} exceeds eps {eps} inside the admissible range"
        )
    return report


# ---------------------------------------------------------------------------
# Gaussian reverse hypercontractivity


@dataclass(frozen=True)
class ThresholdForm:
    """Indicator 1[sign * x > offset] of a half-line."""

    sign: int = 1
    offset: float = 0.0

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (self.sign * x > self.offset).astype(float)


@dataclass(frozen=True)
class RhcReport:
    product_estimate: float
    product_stderr: float
    mus: tuple[float, ...]
    mu_stderrs: tuple[float, ...]
    rhs: float
    rhs_stderr: float
    rho: float
    p_condition: float
    min_eigenvalue: float
    eq46a_holds: bool
    holds: bool
    quadrature_value: float | None
    samples: int
    seed: int


def gaussian_rhc_check(
    cov, forms, samples: int = 200_000, seed: int = 0,
) -> RhcReport:
    """Monte Carlo check of E[prod f_j(G_j)] >= (prod mu_j)^(l/(1-rho^2)).

    cov is the joint covariance of one standard normal per step (unit
    diagonal); rho is its largest off-diagonal magnitude.  The positive
    semidefiniteness condition cov - p I >= 0 with p = (1-rho^2)/l is reported.
    For two steps a quadrature cross-value of the product probability is
    included.  Estimates come with standard errors; the inequality is asserted
    with 3-sigma slack on both sides.
    """
    cov = np.asarray(cov, dtype=float)
    forms = tuple(forms)
    ell = len(forms)
    if cov.shape != (ell, ell):
        raise ValueError("covariance shape must match the number of functions")
    if np.max(np.abs(cov - cov.T)) > 1e-12:
        raise ValueError("covariance must be symmetric")
    if np.max(np.abs(np.diag(cov) - 1.0)) > 1e-9:
        raise ValueError("steps must be standard normals (unit diagonal)")
    eigs = np.linalg.eigvalsh(cov)
    if eigs[0] < -1e-10:
        raise ValueError("covariance not positive semidefinite")
    off = np.abs(cov - np.diag(np.diag(cov)))
    r = float(np.max(off)) if ell > 1 else 0.0
    if r >= 1.0 - 1e-12:
        raise ValueError("correlation 1 lies outside the admissible range")
    p_cond = (1.0 - r * r) / ell
    eq46a = bool(eigs[0] >= p_cond - 1e-12)

    vals, vecs = np.linalg.eigh(cov)
    transform = vecs @ np.diag(np.sqrt(np.maximum(vals, 0.0)))
    rng = Generator(Philox(key=int(seed)))
    base = rng.standard_normal((samples, ell))
    g = base @ transform.T
    indicators = np.stack([form.apply(g[:, j]) for j, form in enumerate(forms)], axis=1)
    prod = np.prod(indicators, axis=1)
    prod_hat = float(np.mean(prod))
    prod_se = math.sqrt(max(prod_hat * (1.0 - prod_hat), 0.0) / samples)
    mus = tuple(float(np.mean(indicators[:, j])) for j in range(ell))
    mu_ses = tuple(
        math.sqrt(max(m * (1.0 - m), 0.0) / samples) for m in mus
    )
    exponent = ell / (1.0 - r * r)
    if any(m == 0.0 for m in mus):
        rhs = 0.0
        rhs_se = 0.0
    else:
        prod_mu = 1.0
        for m in mus:
            prod_mu *= m
        rhs = prod_mu**exponent
        rhs_se = rhs * exponent * math.sqrt(
            sum((se / m) ** 2 for se, m in zip(mu_ses, mus))
        )
    holds = prod_hat + 3.0 * prod_se >= rhs - 3.0 * rhs_se
    quad_value = None
    if ell == 2:
        quad_value = _bivariate_product_probability(cov, forms)
    report = RhcReport(
        prod_hat, prod_se, mus, mu_ses, rhs, rhs_se, r, p_cond, float(eigs[0]),
        eq46a, holds, quad_value, samples, seed,
    )
    if not holds:
        raise ArithmeticError(
            f"product estimate {prod_hat} fell below the bound {rhs} beyond 3 sigma"
        )
    return report


def _bivariate_product_probability(cov: np.ndarray, forms) -> float:
    """P[sign_1 G_1 > t_1, sign_2 G_2 > t_2] by bivariate normal CDF."""
    from scipy.stats import multivariate_normal

    signs = np.array([forms[0].sign, forms[1].sign], dtype=float)
    flipped = cov * np.outer(signs, signs)
    upper = np.array([forms[0].offset, forms[1].offset])
    # P[Y > t] = P[-Y <= -t], and -Y has the same covariance as Y
    return float(multivariate_normal(mean=[0.0, 0.0], cov=flipped).cdf(-upper))


# ---------------------------------------------------------------------------
# gamma decay


@dataclass(frozen=True)
class GammaDecayReport:
    gamma: float
    holds_all: bool
    first_violation: int | None
    profile: tuple[tuple[int, float, float], ...]  # (d, tail mass, envelope)


def gamma_decay_check(poly: MultilinearPolynomial, gamma: float) -> GammaDecayReport:
    """Tail coefficient mass E[(P^(>=d))^2] against the (1-gamma)^d envelope.

    Checks every d from 0 through deg+1; beyond the degree the tail is zero,
    so that range decides the property outright.
    """
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    deg = poly.degree()
    profile = []
    first_violation = None
    for d in range(deg + 2):
        tail = math.fsum(
            c * c for sigma, c in poly.terms if sum(1 for s in sigma if s) >= d
        )
        envelope = (1.0 - gamma) ** d
        profile.append((d, tail, envelope))
        if tail > envelope + 1e-12 and first_violation is None:
            first_violation = d
    return GammaDecayReport(gamma, first_violation is None, first_violation, tuple(profile))
