"""Finite multi-step product distributions and their correlation quantities.

A distribution here assigns probability to tuples of symbols, one symbol per
step.  Coordinates of a product space draw such tuples independently.  The
module computes the diagonal mass `alpha`, the support-box floor `beta`, the
maximal correlation `rho` (by two independent routes that are cross-checked),
double-sample kernels, and related diagnostics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._util import (
    Number,
    as_float,
    format_number,
    mixed_radix_digits,
    mixed_radix_index,
    parse_weight,
)

REVERSIBILITY_TOL = 1e-10
ROUTE_TOL = 1e-8
EIGEN_NEG_TOL = 1e-8
FLOAT_SUM_TOL = 1e-12


class DistributionFormatError(ValueError):
    """Raised when a distribution file cannot be parsed or validated."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct symbol tokens."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("alphabet must be non-empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")
        object.__setattr__(self, "_pos", {s: i for i, s in enumerate(self.symbols)})

    def index(self, symbol: str) -> int:
        try:
            return self._pos[symbol]
        except KeyError:
            raise KeyError(f"unknown symbol {symbol!r}") from None

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


@dataclass(frozen=True)
class StepDistribution:
    """Joint distribution over `steps`-tuples of symbols from one alphabet.

    Weights are stored densely in mixed-radix order with step 1 least
    significant.  `exact` is true when every weight is a Fraction; exact and
    float weights never mix.
    """

    alphabet: Alphabet
    steps: int
    weights: tuple[Number, ...]
    exact: bool
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        m = len(self.alphabet)
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if len(self.weights) != m**self.steps:
            raise ValueError("weight table has wrong size")
        if self.exact:
            if not all(isinstance(w, Fraction) for w in self.weights):
                raise ValueError("exact distribution requires Fraction weights")
            total = sum(self.weights, Fraction(0))
            if total != 1:
                raise DistributionFormatError(
                    f"weights sum to {total}, expected exactly 1 (no renormalization)"
                )
        else:
            total = float(sum(float(w) for w in self.weights))
            if abs(total - 1.0) > FLOAT_SUM_TOL:
                raise DistributionFormatError(
                    f"weights sum to {total!r}, expected 1 within {FLOAT_SUM_TOL}"
                )
        if any((w < 0) for w in self.weights):
            raise DistributionFormatError("negative weight")

    def weight(self, tup: tuple[int, ...]) -> Number:
        return self.weights[mixed_radix_index(tup, len(self.alphabet))]

    def support(self) -> list[tuple[tuple[int, ...], Number]]:
        """Pairs (symbol-index tuple, weight) with positive weight, index order."""
        m = len(self.alphabet)
        out = []
        for idx, w in enumerate(self.weights):
            if w > 0:
                out.append((mixed_radix_digits(idx, m, self.steps), w))
        return out

    def tuples(self):
        m = len(self.alphabet)
        for idx in range(m**self.steps):
            yield mixed_radix_digits(idx, m, self.steps)

    def as_array(self) -> np.ndarray:
        """Dense float tensor with one axis per step, step 1 first."""
        m = len(self.alphabet)
        arr = np.zeros((m,) * self.steps)
        for idx, w in enumerate(self.weights):
            arr[mixed_radix_digits(idx, m, self.steps)] = float(w)
        return arr


@dataclass(frozen=True)
class MarginalDistribution:
    """Single-step marginal over the alphabet."""

    alphabet: Alphabet
    probs: tuple[Number, ...]
    exact: bool

    def support_indices(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0)

    def prob(self, symbol_index: int) -> Number:
        return self.probs[symbol_index]


@dataclass(frozen=True)
class MarkovKernel:
    """Row-stochastic transition matrix over a support alphabet.

    `stationary` is the distribution the kernel is checked against;
    `reversible` records whether detailed balance holds within tolerance.
    """

    alphabet: Alphabet
    rows: tuple[tuple[Number, ...], ...]
    stationary: MarginalDistribution
    exact: bool
    reversible: bool

    def __post_init__(self):
        m = len(self.alphabet)
        if len(self.rows) != m or any(len(r) != m for r in self.rows):
            raise ValueError("kernel must be square over its alphabet")
        for r in self.rows:
            if any(x < 0 for x in r):
                raise ValueError("negative kernel entry")
            if self.exact:
                if sum(r, Fraction(0)) != 1:
                    raise ValueError("kernel row does not sum to 1")
            elif abs(sum(float(x) for x in r) - 1.0) > REVERSIBILITY_TOL:
                raise ValueError("kernel row does not sum to 1")

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.rows])


def _check_reversibility(
    rows, pi: tuple[Number, ...], exact: bool, tol: float = REVERSIBILITY_TOL
) -> bool:
    m = len(rows)
    for y in range(m):
        for z in range(m):
            lhs = pi[y] * rows[y][z]
            rhs = pi[z] * rows[z][y]
            if exact:
                if lhs != rhs:
                    return False
            elif abs(float(lhs) - float(rhs)) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# parsing and serialization


def parse_distribution(text: str, name: str | None = None) -> StepDistribution:
    """Parse the line-oriented distribution format.

    Recognized lines (after stripping `#` comments and blanks):
      alphabet <sym> <sym> ...
      steps <int>
      entry <sym_1> ... <sym_steps> <weight>
    Weights written as `p/q` or integers stay exact; decimals force the whole
    table to float.  Missing entries are zero.  Duplicate entry lines, negative
    weights, and totals differing from 1 are errors; nothing is renormalized.
    """
    alphabet: Alphabet | None = None
    steps: int | None = None
    entries: dict[tuple[int, ...], Number] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kw = toks[0]
        if kw == "alphabet":
            if alphabet is not None:
                raise DistributionFormatError(f"line {lineno}: duplicate alphabet line")
            if len(toks) < 2:
                raise DistributionFormatError(f"line {lineno}: empty alphabet")
            try:
                alphabet = Alphabet(tuple(toks[1:]))
            except ValueError as exc:
                raise DistributionFormatError(f"line {lineno}: {exc}") from None
        elif kw == "steps":
            if steps is not None:
                raise DistributionFormatError(f"line {lineno}: duplicate steps line")
            if len(toks) != 2 or not toks[1].isdigit() or int(toks[1]) < 1:
                raise DistributionFormatError(f"line {lineno}: steps needs one positive integer")
            steps = int(toks[1])
        elif kw == "entry":
            if alphabet is None or steps is None:
                raise DistributionFormatError(
                    f"line {lineno}: entry before alphabet and steps"
                )
            if len(toks) != 2 + steps:
                raise DistributionFormatError(
                    f"line {lineno}: entry needs {steps} symbols and one weight"
                )
            try:
                tup = tuple(alphabet.index(s) for s in toks[1 : 1 + steps])
            except KeyError as exc:
                raise DistributionFormatError(f"line {lineno}: {exc.args[0]}") from None
            try:
                w = parse_weight(toks[-1])
            except ValueError as exc:
                raise DistributionFormatError(f"line {lineno}: {exc}") from None
            if w < 0:
                raise DistributionFormatError(f"line {lineno}: negative weight")
            if tup in entries:
                raise DistributionFormatError(f"line {lineno}: duplicate entry")
            entries[tup] = w
        else:
            raise DistributionFormatError(f"line {lineno}: unknown directive {kw!r}")
    if alphabet is None or steps is None:
        raise DistributionFormatError("missing alphabet or steps line")
    exact = all(isinstance(w, Fraction) for w in entries.values())
    m = len(alphabet)
    zero: Number = Fraction(0) if exact else 0.0
    weights = [zero] * (m**steps)
    for tup, w in entries.items():
        weights[mixed_radix_index(tup, m)] = w if exact else float(w)
    return StepDistribution(alphabet, steps, tuple(weights), exact, name=name)


def format_distribution(p: StepDistribution) -> str:
    """Canonical serialization: alphabet, steps, then support entries in index order."""
    lines = [
        "alphabet " + " ".join(p.alphabet.symbols),
        f"steps {p.steps}",
    ]
    for tup, w in p.support():
        syms = " ".join(p.alphabet.symbols[i] for i in tup)
        lines.append(f"entry {syms} {format_number(w)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# marginals and scalar quantities


def marginal(p: StepDistribution, j: int) -> MarginalDistribution:
    """Marginal of step j (1-indexed)."""
    if not 1 <= j <= p.steps:
        raise ValueError(f"step {j} out of range 1..{p.steps}")
    zero: Number = Fraction(0) if p.exact else 0.0
    probs = [zero] * len(p.alphabet)
    for tup, w in p.support():
        probs[tup[j - 1]] += w
    return MarginalDistribution(p.alphabet, tuple(probs), p.exact)


def equal_marginals(p: StepDistribution, tol: float = 0.0) -> bool:
    """Whether all step marginals coincide (exactly, or within tol for floats)."""
    first = marginal(p, 1).probs
    for j in range(2, p.steps + 1):
        cur = marginal(p, j).probs
        if p.exact and tol == 0.0:
            if cur != first:
                return False
        elif any(abs(float(a) - float(b)) > tol for a, b in zip(cur, first)):
            return False
    return True


def alpha(p: StepDistribution) -> Number:
    """Smallest diagonal weight: min over symbols x of P(x, x, ..., x)."""
    return min(p.weight((x,) * p.steps) for x in range(len(p.alphabet)))


def beta(p: StepDistribution) -> Number:
    """Smallest weight over the product of the per-step marginal supports."""
    supports = [marginal(p, j).support_indices() for j in range(1, p.steps + 1)]
    return min(p.weight(tup) for tup in itertools.product(*supports))


# ---------------------------------------------------------------------------
# double-sample kernel and spectra


def double_sample_kernel(p: StepDistribution, j: int) -> MarkovKernel:
    """Transition kernel of resampling step j twice given the other steps.

    Symbols with zero marginal mass at step j are dropped first, so the kernel
    lives on the support alphabet.  The result is reversible with respect to
    the step-j marginal; construction fails if reversibility breaks tolerance.
    """
    pi_full = marginal(p, j)
    support = pi_full.support_indices()
    if not support:
        raise ValueError("step marginal has empty support")
    sub_alphabet = Alphabet(tuple(p.alphabet.symbols[i] for i in support))
    pos = {sym: k for k, sym in enumerate(support)}
    zero: Number = Fraction(0) if p.exact else 0.0

    # joint[(rest tuple)][symbol] accumulates mass of (rest, y at step j)
    joint: dict[tuple[int, ...], dict[int, Number]] = {}
    for tup, w in p.support():
        rest = tup[: j - 1] + tup[j:]
        joint.setdefault(rest, {})[tup[j - 1]] = w

    n = len(support)
    rows = [[zero for _ in range(n)] for _ in range(n)]
    for by_symbol in joint.values():
        rest_mass = sum(by_symbol.values())
        for y, wy in by_symbol.items():
            for z, wz in by_symbol.items():
                rows[pos[y]][pos[z]] += wy * wz / rest_mass
    pi = tuple(pi_full.probs[i] for i in support)
    for k in range(n):
        if pi[k] <= 0:
            raise ValueError("zero marginal mass at retained symbol")
        rows[k] = [x / pi[k] for x in rows[k]]
    rows_t = tuple(tuple(r) for r in rows)
    if not _check_reversibility(rows_t, pi, p.exact):
        raise ArithmeticError("double-sample kernel violates reversibility tolerance")
    stationary = MarginalDistribution(sub_alphabet, pi, p.exact)
    return MarkovKernel(sub_alphabet, rows_t, stationary, p.exact, reversible=True)


def kernel_second_eigenvalue(k: MarkovKernel) -> float:
    """Second-largest eigenvalue of a reversible kernel, clamped to [-1, 1].

    Uses the symmetrization D^{1/2} K D^{-1/2} so a self-adjoint eigensolver
    applies.  A single-state kernel has no second eigenvalue; returns 0.0.
    """
    if not _check_reversibility(k.rows, k.stationary.probs, k.exact):
        raise ArithmeticError("kernel is not reversible within tolerance")
    m = len(k.alphabet)
    if m == 1:
        return 0.0
    pi = np.array([float(x) for x in k.stationary.probs])
    d = np.sqrt(pi)
    sym = (d[:, None] / d[None, :]) * k.as_array()
    sym = (sym + sym.T) / 2.0
    eig = np.linalg.eigvalsh(sym)
    lam2 = float(eig[-2])
    return min(1.0, max(-1.0, lam2))


def maximal_correlation(p: StepDistribution, s_steps, t_steps) -> float:
    """Maximal correlation between the step groups S and T (1-indexed, disjoint).

    Singular-value route: build M[a, b] = P_{S,T}(a, b) / sqrt(pi_S(a) pi_T(b))
    over the grouped supports and take the second singular value (the top one
    is 1 and is discarded).  Returns a value clamped to [0, 1].
    """
    s = tuple(sorted(set(s_steps)))
    t = tuple(sorted(set(t_steps)))
    if not s or not t:
        raise ValueError("step groups must be non-empty")
    if set(s) & set(t):
        raise ValueError("step groups must be disjoint")
    for j in s + t:
        if not 1 <= j <= p.steps:
            raise ValueError(f"step {j} out of range 1..{p.steps}")

    joint: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
    pi_s: dict[tuple[int, ...], float] = {}
    pi_t: dict[tuple[int, ...], float] = {}
    for tup, w in p.support():
        a = tuple(tup[j - 1] for j in s)
        b = tuple(tup[j - 1] for j in t)
        wf = float(w)
        joint[(a, b)] = joint.get((a, b), 0.0) + wf
        pi_s[a] = pi_s.get(a, 0.0) + wf
        pi_t[b] = pi_t.get(b, 0.0) + wf
    # grouped tuples sorted by mixed-radix index over the original alphabet
    m = len(p.alphabet)
    a_list = sorted(pi_s, key=lambda tup: mixed_radix_index(tup, m))
    b_list = sorted(pi_t, key=lambda tup: mixed_radix_index(tup, m))
    if len(a_list) == 1 or len(b_list) == 1:
        return 0.0
    mat = np.zeros((len(a_list), len(b_list)))
    for ia, a in enumerate(a_list):
        for ib, b in enumerate(b_list):
            w = joint.get((a, b), 0.0)
            if w:
                mat[ia, ib] = w / np.sqrt(pi_s[a] * pi_t[b])
    sv = np.linalg.svd(mat, compute_uv=False)
    return min(1.0, max(0.0, float(sv[1])))


def rho(p: StepDistribution) -> float:
    """Maximal correlation of one step against the rest, maximized over steps.

    Computed twice: via second eigenvalues of the double-sample kernels (the
    square root of lambda_2) and via the SVD route.  The two must agree within
    1e-8 or an ArithmeticError is raised.  A one-step distribution has no
    opposing group; returns 0.0.
    """
    if p.steps == 1:
        return 0.0
    eigen_vals = []
    svd_vals = []
    for j in range(1, p.steps + 1):
        lam2 = kernel_second_eigenvalue(double_sample_kernel(p, j))
        if lam2 < -EIGEN_NEG_TOL:
            raise ArithmeticError(
                f"double-sample kernel of step {j} has lambda_2 = {lam2} < 0"
            )
        eigen_vals.append(float(np.sqrt(max(lam2, 0.0))))
        rest = [i for i in range(1, p.steps + 1) if i != j]
        svd_vals.append(maximal_correlation(p, [j], rest))
    eigen_route = max(eigen_vals)
    svd_route = max(svd_vals)
    if abs(eigen_route - svd_route) > ROUTE_TOL:
        raise ArithmeticError(
            f"correlation routes disagree: eigen {eigen_route} vs svd {svd_route}"
        )
    return eigen_route


# ---------------------------------------------------------------------------
# structure checks


def is_markov_generated(
    p: StepDistribution, tol: float = 1e-10
) -> tuple[bool, list[tuple[tuple[Number, ...], ...]] | None]:
    """Whether the steps form a Markov chain: step j depends on step j-1 only.

    Checked entrywise within `tol` on the support; prefixes of zero mass are
    skipped.  Returns (True, [T_2, ..., T_steps]) with each T_j a matrix over
    the full alphabet (rows of symbols never seen as a positive-mass step j-1
    value are zero-filled), or (False, None).  Two steps are vacuously Markov.
    """
    if p.steps < 2:
        raise ValueError("needs at least 2 steps")
    m = len(p.alphabet)
    zero: Number = Fraction(0) if p.exact else 0.0
    kernels = []
    for j in range(2, p.steps + 1):
        # masses of step prefixes of lengths j and j-1
        pref_j: dict[tuple[int, ...], Number] = {}
        pref_prev: dict[tuple[int, ...], Number] = {}
        for tup, w in p.support():
            pref_j[tup[:j]] = pref_j.get(tup[:j], zero) + w
            pref_prev[tup[: j - 1]] = pref_prev.get(tup[: j - 1], zero) + w
        rows: list[list[Number] | None] = [None] * m
        for prev, mass in sorted(pref_prev.items()):
            if mass <= 0:
                continue
            cond = [pref_j.get(prev + (b,), zero) / mass for b in range(m)]
            a = prev[-1]
            if rows[a] is None:
                rows[a] = cond
            else:
                for b in range(m):
                    diff = rows[a][b] - cond[b]
                    if abs(float(diff)) > tol:
                        return False, None
        kernels.append(
            tuple(
                tuple(r) if r is not None else (zero,) * m
                for r in rows
            )
        )
    return True, kernels


@dataclass(frozen=True)
class EdgeVarianceReport:
    """Both sides of the double-sample edge-variance comparison."""

    lhs: Number
    rhs: float
    rho: float
    variance: Number
    holds: bool


def check_edge_variance(p: StepDistribution, j: int, f) -> EdgeVarianceReport:
    """Compare E[(f(Y) - f(Z))^2] under the double-sample kernel of step j
    against 2 (1 - rho^2) Var[f], where rho is the correlation of the whole
    distribution and f maps support symbols to numbers.

    `f` may be a dict keyed by symbol token or a sequence aligned with the
    kernel alphabet.
    """
    k = double_sample_kernel(p, j)
    n = len(k.alphabet)
    if isinstance(f, dict):
        vals = [f[sym] for sym in k.alphabet.symbols]
    else:
        vals = list(f)
        if len(vals) != n:
            raise ValueError("function values do not match kernel alphabet")
    exact = p.exact and all(isinstance(v, (Fraction, int)) for v in vals)
    if exact:
        vals = [Fraction(v) for v in vals]
    pi = k.stationary.probs
    lhs: Number = Fraction(0) if exact else 0.0
    mean: Number = Fraction(0) if exact else 0.0
    mean_sq: Number = Fraction(0) if exact else 0.0
    for y in range(n):
        mean += pi[y] * vals[y]
        mean_sq += pi[y] * vals[y] * vals[y]
        for z in range(n):
            dvv = vals[y] - vals[z]
            lhs += pi[y] * k.rows[y][z] * dvv * dvv
    variance = mean_sq - mean * mean
    r = rho(p)
    rhs = 2.0 * (1.0 - r * r) * float(variance)
    holds = float(lhs) >= rhs - 1e-10
    return EdgeVarianceReport(lhs, rhs, r, variance, holds)
