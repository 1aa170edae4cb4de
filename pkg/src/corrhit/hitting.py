"""Hitting expectations, reduction loops, bound formulas, and verification suites.

The central quantity is E[prod_j f^(j)(X^(j))] where every coordinate draws a
step tuple independently from one distribution.  Two exact routes compute it:
full enumeration over support assignments, and a joint-count dynamic program
for symmetric window and modular-linear functions.  On top sit the two
constructive loops (density increment and influence reduction), closed-form
bound evaluators, the counterexample catalogs, the Markov-chain product
identity, and an empirical hitting-exponent fit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from ._util import Number
from .dist_core import (
    StepDistribution,
    alpha,
    double_sample_kernel,
    is_markov_generated,
    marginal,
    parse_distribution,
    rho,
)
from .fourier import (
    TABLE_BUDGET,
    BudgetExceeded,
    FunctionSpec,
    Restriction,
    evaluate,
    expectation,
    influence,
    is_resilient,
    make_anchored_symmetric,
    max_operator,
    restrict,
    to_table,
)


@dataclass(frozen=True)
class HittingInstance:
    """A distribution, a coordinate count, and one function per step (or one shared)."""

    dist: StepDistribution
    n: int
    fns: tuple[FunctionSpec, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if len(self.fns) not in (1, self.dist.steps):
            raise ValueError("need one shared function or one per step")
        for f in self.fns:
            if f.alphabet.symbols != self.dist.alphabet.symbols:
                raise ValueError("function alphabet must match the distribution")
            if f.n != self.n:
                raise ValueError("function coordinate count must match n")

    def step_functions(self) -> tuple[FunctionSpec, ...]:
        if len(self.fns) == 1:
            return self.fns * self.dist.steps
        return self.fns

    def value(self, engine: str = "auto", budget: int | None = None) -> Number:
        return multi_set_expectation(
            self.dist, self.n, self.step_functions(), engine=engine, budget=budget
        )


# ---------------------------------------------------------------------------
# exact expectation routes


def _multi_enumerate(p: StepDistribution, n: int, fns, budget) -> Number:
    support = p.support()
    cap = TABLE_BUDGET if budget is None else budget
    if len(support) ** n > cap:
        raise BudgetExceeded(
            f"{len(support)}^{n} support assignments exceed the budget {cap}"
        )
    ell = p.steps
    total = Fraction(0)
    exact = p.exact and all(f.is_exact() for f in fns)
    if not exact:
        total = 0.0
    for assignment in itertools.product(support, repeat=n):
        weight: Number = Fraction(1) if exact else 1.0
        for _, w in assignment:
            weight *= w
        value = weight
        for j in range(ell):
            row = tuple(tup[j] for tup, _ in assignment)
            fv = evaluate(fns[j], row)
            if fv == 0:
                value = 0
                break
            value *= fv if exact else float(fv)
        total += value
    return total


def _dp_special_coords(fns) -> tuple[int, ...] | None:
    """Coordinates that must be enumerated explicitly, or None if incompatible."""
    special: set[int] = set()
    for f in fns:
        if f.kind == "anchored_symmetric":
            if f.payload["anchor"] is not None:
                special.add(f.payload["anchor"][0])
            special |= set(f.payload["ignored"])
        elif f.kind != "mod_linear":
            return None
    if len(special) > 2:
        return None
    return tuple(sorted(special))


def _dp_initial_state(fns, special, assignment):
    """Per-function starting state after pinning the special coordinates.

    Returns None when some pinned symbol already kills a function (anchor
    mismatch or window overrun).
    """
    states = []
    for j, f in enumerate(fns):
        if f.kind == "mod_linear":
            pay = f.payload
            res = 0
            for coord, tup in zip(special, assignment):
                res = (res + pay["coeffs"][coord - 1] * pay["symbol_map"][tup[j]]) % pay["modulus"]
            states.append(res)
            continue
        pay = f.payload
        anchor = pay["anchor"]
        counts = {s: 0 for s in sorted(pay["windows"])}
        for coord, tup in zip(special, assignment):
            sym = tup[j]
            if anchor is not None and coord == anchor[0] and sym != anchor[1]:
                return None
            if coord in pay["ignored"]:
                continue
            if sym in counts:
                counts[sym] += 1
                if counts[sym] > pay["windows"][sym][1]:
                    return None
        states.append(tuple(counts[s] for s in sorted(counts)))
    return tuple(states)


def _dp_advance(fns, state, j_symbols, coord):
    """Next joint state after one more coordinate draws the tuple with rows j_symbols."""
    out = []
    for j, f in enumerate(fns):
        if f.kind == "mod_linear":
            pay = f.payload
            res = (state[j] + pay["coeffs"][coord - 1] * pay["symbol_map"][j_symbols[j]]) % pay["modulus"]
            out.append(res)
            continue
        pay = f.payload
        syms = sorted(pay["windows"])
        counts = list(state[j])
        sym = j_symbols[j]
        if sym in pay["windows"]:
            k = syms.index(sym)
            counts[k] += 1
            if counts[k] > pay["windows"][sym][1]:
                return None
        out.append(tuple(counts))
    return tuple(out)


def _dp_accepts(fns, state) -> bool:
    for j, f in enumerate(fns):
        if f.kind == "mod_linear":
            if state[j] != f.payload["residue"]:
                return False
            continue
        pay = f.payload
        for k, s in enumerate(sorted(pay["windows"])):
            lo, hi = pay["windows"][s]
            if not lo <= state[j][k] <= hi:
                return False
    return True


def _multi_dp(p: StepDistribution, n: int, fns, budget) -> Number:
    special = _dp_special_coords(fns)
    if special is None:
        raise ValueError("functions are not compatible with the joint-count route")
    if any(f.zero for f in fns):
        return Fraction(0) if p.exact else 0.0
    cap = TABLE_BUDGET if budget is None else budget
    support = p.support()
    exact = p.exact
    zero: Number = Fraction(0) if exact else 0.0
    free_coords = [c for c in range(1, n + 1) if c not in special]
    total = zero
    for assignment in itertools.product(support, repeat=len(special)):
        branch: Number = Fraction(1) if exact else 1.0
        for _, w in assignment:
            branch *= w
        init = _dp_initial_state(fns, special, tuple(t for t, _ in assignment))
        if init is None:
            continue
        states: dict = {init: branch}
        for coord in free_coords:
            nxt: dict = {}
            for state, mass in states.items():
                for tup, w in support:
                    new = _dp_advance(fns, state, tup, coord)
                    if new is None:
                        continue
                    nxt[new] = nxt.get(new, zero) + mass * w
            states = nxt
            if len(states) > cap:
                raise BudgetExceeded(
                    f"joint-count state space {len(states)} exceeds the budget {cap}"
                )
        for state, mass in states.items():
            if _dp_accepts(fns, state):
                total += mass
    return total


def multi_set_expectation(
    p: StepDistribution, n: int, fns, engine: str = "auto", budget: int | None = None,
) -> Number:
    """E[prod_j f^(j)(X^(j))] with coordinates drawn i.i.d. from p, exact.

    engine 'enumerate' walks support assignments, 'dp' runs the joint-count
    program (symmetric window and modular-linear functions whose anchored or
    pinned coordinates form a shared set of size <= 2), 'auto' prefers the dp
    when compatible and enumeration otherwise.
    """
    fns = tuple(fns)
    if len(fns) != p.steps:
        raise ValueError("need exactly one function per step")
    for f in fns:
        if f.alphabet.symbols != p.alphabet.symbols:
            raise ValueError("function alphabet must match the distribution")
        if f.n != n:
            raise ValueError("function coordinate count must match n")
    if engine not in ("auto", "enumerate", "dp"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "enumerate":
        return _multi_enumerate(p, n, fns, budget)
    if engine == "dp":
        return _multi_dp(p, n, fns, budget)
    if _dp_special_coords(fns) is not None:
        return _multi_dp(p, n, fns, budget)
    return _multi_enumerate(p, n, fns, budget)


def same_set_expectation(
    p: StepDistribution, n: int, f: FunctionSpec,
    engine: str = "auto", budget: int | None = None,
) -> Number:
    """E[prod_j f(X^(j))]: one function hit by every step."""
    return multi_set_expectation(p, n, (f,) * p.steps, engine=engine, budget=budget)


# ---------------------------------------------------------------------------
# reduction logs


@dataclass(frozen=True)
class DensityStep:
    """One density-increment iteration."""

    restriction: Restriction
    before: Number
    after: Number
    loss: Number


@dataclass(frozen=True)
class InfluenceStep:
    """One influence-reduction iteration with its recomputed certificates."""

    j_star: int
    i: int
    x_bar: tuple[int, ...]  # symbols for steps other than j_star, ascending step order
    y: int
    z: int
    prob_y: Number
    prob_z: Number
    before: tuple[Number, ...]
    after: tuple[Number, ...]
    product_before: Number
    product_after: Number
    gain: Number


@dataclass(frozen=True)
class ReductionLog:
    """Trace of a reduction loop plus the quantities its certificate needs."""

    kind: str
    iterations: tuple
    params: dict

    def total_loss(self) -> Number:
        out: Number = Fraction(1)
        for step in self.iterations:
            if isinstance(step, DensityStep):
                out *= step.loss
        return out


# ---------------------------------------------------------------------------
# density increment (restriction loop)


def density_increment(
    p: StepDistribution, n: int, f: FunctionSpec, eps, k: int,
    budget: int | None = None,
):
    """Restrict f until it is eps-resilient up to size k, tracking the loss.

    Loop: while some restriction R of size <= k has E[Rg] >= (1 + eps') E[g]
    with eps' = alpha(P)^k * eps, replace g by the lexicographically smallest
    such R's image.  Stopping makes g eps'-upper-resilient, which implies
    eps-resilience; that implication is re-verified exhaustively, not trusted.
    Expectations run against the first-step marginal.  Returns (g, chain, log)
    where chain is the tuple of applied restrictions.
    """
    if not 0 <= k <= n:
        raise ValueError("k must lie in [0, n]")
    if eps <= 0:
        raise ValueError("eps must be positive")
    a = alpha(p)
    if a <= 0:
        raise ValueError("needs positive diagonal mass")
    pi = marginal(p, 1)
    mu = expectation(f, pi)
    if mu <= 0:
        raise ValueError("needs E[f] > 0")
    eps_prime = a**k * eps if isinstance(eps, (Fraction, int)) and p.exact else float(a) ** k * float(eps)
    max_iters = math.ceil(2.0 * math.log(1.0 / float(mu)) / float(eps_prime)) if float(mu) < 1 else 0
    support = pi.support_indices()
    cap = TABLE_BUDGET if budget is None else budget

    g = f
    cur = mu
    chain: list[Restriction] = []
    steps: list[DensityStep] = []
    while True:
        found = None
        threshold = (1 + eps_prime) * cur
        count = 0
        for size in range(1, k + 1):
            for coords in itertools.combinations(range(1, n + 1), size):
                for symbols in itertools.product(support, repeat=size):
                    count += 1
                    if count > cap:
                        raise BudgetExceeded("restriction search exceeds the budget")
                    entries: list[int | None] = [None] * n
                    for c, s in zip(coords, symbols):
                        entries[c - 1] = s
                    r = Restriction(tuple(entries))
                    val = expectation(restrict(g, r), pi)
                    if val >= threshold:
                        found = (r, val)
                        break
                if found:
                    break
            if found:
                break
        if not found:
            break
        r, val = found
        loss: Number = Fraction(1) if pi.exact else 1.0
        for _, sym in r.fixed_items():
            loss *= pi.probs[sym]
        steps.append(DensityStep(r, cur, val, loss))
        chain.append(r)
        g = restrict(g, r)
        cur = val
        if len(steps) > max_iters:
            raise ArithmeticError(
                f"density increment ran {len(steps)} iterations, bound is {max_iters}"
            )

    ok, witness = is_resilient(g, eps, k, pi, budget=budget)
    if not ok:
        raise ArithmeticError(
            f"stopped function fails the resilience re-check at {witness}"
        )
    total_loss: Number = Fraction(1)
    for s in steps:
        total_loss *= s.loss
    floor = math.exp(-2.0 * math.log(1.0 / float(mu)) / (float(a) ** (2 * k) * float(eps))) if float(mu) < 1 else 1.0
    if float(total_loss) < floor - 1e-12:
        raise ArithmeticError(
            f"certified loss {float(total_loss)} fell below the floor {floor}"
        )
    log = ReductionLog(
        "density_increment",
        tuple(steps),
        {
            "eps": eps,
            "k": k,
            "eps_prime": eps_prime,
            "mu": mu,
            "iteration_bound": max_iters,
            "loss_floor": floor,
            "total_loss": total_loss,
            "final_expectation": cur,
        },
    )
    return g, tuple(chain), log


# ---------------------------------------------------------------------------
# influence reduction (max-operator loop)


def influence_reduction(
    p: StepDistribution, n: int, fns, tau, budget: int | None = None,
):
    """Drive every influence of every step function below tau.

    Per iteration: take the (step, coordinate) pair of maximal influence (ties
    broken toward the smallest coordinate, then step), scan all tuples
    (x-bar, y, z) in mixed-radix order, and apply the first whose recomputed
    certificates hold: the expectation sum rises by at least
    tau (1 - rho^2) / 2 and both involved step tuples have probability at
    least beta-hat = tau (1 - rho^2) / (2 l |alphabet|^(l+1)).  The step
    function at j* becomes its max-operator image; every other step function
    gets coordinate i substituted by its x-bar symbol.  Refuses rho = 1.
    """
    fns = tuple(fns)
    ell = p.steps
    if len(fns) != ell:
        raise ValueError("need exactly one function per step")
    if not 0 < float(tau) <= 1:
        raise ValueError("tau must lie in (0, 1]")
    r = rho(p)
    if r >= 1.0 - 1e-12:
        raise ValueError(
            "correlation is 1: the influence-reduction guarantee fails on such "
            "distributions (three-set counterexample), refusing"
        )
    fns = tuple(to_table(f, budget=budget) for f in fns)
    m = len(p.alphabet)
    one_minus = 1.0 - r * r
    gain_target = float(tau) * one_minus / 2.0
    beta_hat = float(tau) * one_minus / (2.0 * ell * m ** (ell + 1))
    cap_iters = math.floor(2.0 * ell / (float(tau) * one_minus))
    marginals = [marginal(p, j) for j in range(1, ell + 1)]

    def influences(cur):
        out = {}
        for j in range(1, ell + 1):
            for i in range(1, n + 1):
                out[(j, i)] = influence(cur[j - 1], marginals[j - 1], i=i, budget=budget)
        return out

    product_initial = multi_set_expectation(p, n, fns, budget=budget)
    cur = list(fns)
    steps: list[InfluenceStep] = []
    while True:
        infl = influences(cur)
        worst = max(infl.values())
        if worst <= tau:
            break
        candidates = sorted(
            (i, j) for (j, i), v in infl.items() if v == worst
        )
        i, j_star = candidates[0]
        before_vec = tuple(expectation(g, m) for g, m in zip(cur, marginals))
        before_sum = sum(before_vec)
        product_before = multi_set_expectation(p, n, cur, budget=budget)
        other_steps = [j for j in range(1, ell + 1) if j != j_star]
        hit = None
        for x_bar in itertools.product(range(m), repeat=ell - 1):
            for y in range(m):
                tup_y = _assemble_tuple(x_bar, other_steps, j_star, y)
                prob_y = p.weight(tup_y)
                if prob_y < beta_hat:
                    continue
                for z in range(m):
                    tup_z = _assemble_tuple(x_bar, other_steps, j_star, z)
                    prob_z = p.weight(tup_z)
                    if prob_z < beta_hat:
                        continue
                    trial = list(cur)
                    trial[j_star - 1] = max_operator(cur[j_star - 1], i, y, z, budget=budget)
                    for idx, j in enumerate(other_steps):
                        sub = Restriction.from_dict(n, {i: x_bar[idx]})
                        trial[j - 1] = restrict(cur[j - 1], sub)
                    after_vec = tuple(
                        expectation(g, m) for g, m in zip(trial, marginals)
                    )
                    gain = sum(after_vec) - before_sum
                    if gain >= gain_target:
                        hit = (x_bar, y, z, prob_y, prob_z, trial, after_vec, gain)
                        break
                if hit:
                    break
            if hit:
                break
        if hit is None:
            raise ArithmeticError(
                "no qualifying tuple found although an influence exceeds tau; "
                "this contradicts the existence guarantee and flags a bug"
            )
        x_bar, y, z, prob_y, prob_z, trial, after_vec, gain = hit
        product_after = multi_set_expectation(p, n, trial, budget=budget)
        if product_before < beta_hat * product_after:
            raise ArithmeticError(
                "per-step product certificate failed: "
                f"{float(product_before)} < beta_hat * {float(product_after)}"
            )
        steps.append(
            InfluenceStep(
                j_star, i, x_bar, y, z, prob_y, prob_z,
                before_vec, after_vec, product_before, product_after, gain,
            )
        )
        cur = trial
        if len(steps) > cap_iters:
            raise ArithmeticError(
                f"influence reduction ran {len(steps)} iterations, cap is {cap_iters}"
            )

    product_final = multi_set_expectation(p, n, cur, budget=budget)
    log = ReductionLog(
        "influence_reduction",
        tuple(steps),
        {
            "tau": tau,
            "rho": r,
            "beta_hat": beta_hat,
            "iteration_cap": cap_iters,
            "beta": beta_hat**cap_iters,
            "product_initial": product_initial,
            "product_final": product_final,
        },
    )
    return tuple(cur), log


def _assemble_tuple(x_bar, other_steps, j_star, sym) -> tuple[int, ...]:
    ell = len(other_steps) + 1
    out = [0] * ell
    for idx, j in enumerate(other_steps):
        out[j - 1] = x_bar[idx]
    out[j_star - 1] = sym
    return tuple(out)


# ---------------------------------------------------------------------------
# max-operator gain check


@dataclass(frozen=True)
class MaxGainReport:
    lhs: Number
    mu: Number
    influence: Number
    rho: float
    rhs: float
    holds: bool


def max_gain_check(
    p: StepDistribution, j_star: int, i: int, n: int, f: FunctionSpec,
    budget: int | None = None,
) -> MaxGainReport:
    """Average E[M[i,Y,Z]f] over the double sample of step j_star and compare
    against E[f] + Inf_i(f) (1 - rho^2)."""
    if f.kind != "table":
        f = to_table(f, budget=budget)
    pi = marginal(p, j_star)
    kern = double_sample_kernel(p, j_star)
    exact = p.exact and f.is_exact()
    lhs: Number = Fraction(0) if exact else 0.0
    for yi, y_sym in enumerate(kern.alphabet.symbols):
        y = p.alphabet.index(y_sym)
        py = kern.stationary.probs[yi]
        for zi, z_sym in enumerate(kern.alphabet.symbols):
            z = p.alphabet.index(z_sym)
            w = py * kern.rows[yi][zi]
            if w == 0:
                continue
            mf = max_operator(f, i, y, z, budget=budget)
            lhs += w * expectation(mf, pi, budget=budget)
    mu = expectation(f, pi, budget=budget)
    inf = influence(f, pi, i=i, budget=budget)
    r = rho(p)
    rhs = float(mu) + float(inf) * (1.0 - r * r)
    holds = float(lhs) >= rhs - 1e-10
    return MaxGainReport(lhs, mu, inf, r, rhs, holds)


# ---------------------------------------------------------------------------
# closed-form bounds


def low_influence_bound(mus, rho_value, ell: int, eps, a, c_const: float = 10.0):
    """Evaluate the low-influence hitting bound and its tau threshold formula.

    Returns (lower_bound, tau): the bound is (prod mu)^(l/(1-rho^2)) - eps;
    tau is ((1-rho^2) eps / l^(5/2)) raised to
    C l ln(l/eps) ln(1/alpha) / ((1-rho) eps) with configurable constant C.
    """
    mus = tuple(float(m) for m in mus)
    rho_value = float(rho_value)
    eps = float(eps)
    a = float(a)
    if not 0 <= rho_value < 1:
        raise ValueError("needs correlation strictly below 1")
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    if a <= 0:
        raise ValueError("alpha must be positive")
    if len(mus) != ell:
        raise ValueError("need one density per step")
    prod = 1.0
    for m in mus:
        prod *= m
    one_minus_sq = 1.0 - rho_value**2
    bound = prod ** (ell / one_minus_sq) - eps
    base = one_minus_sq * eps / ell**2.5
    exponent = c_const * ell * math.log(ell / eps) * math.log(1.0 / a) / ((1.0 - rho_value) * eps)
    tau = base**exponent
    return bound, tau


def explicit_c_bound(a, rho_value, ell: int, mu, d) -> float:
    """The triple-exponential loss floor 1/exp(exp(exp((1/mu)^D))).

    alpha, rho, and l do not enter the formula (the caller supplies D, which
    absorbs the distribution dependence); they are validated for range only.
    Underflow clamps to the smallest positive float so the result stays in (0,1).
    """
    mu = float(mu)
    if not 0 < mu <= 0.99:
        raise ValueError("mu must lie in (0, 0.99]")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not 0 < float(a) <= 1 or not 0 <= float(rho_value) <= 1:
        raise ValueError("alpha must lie in (0,1], rho in [0,1]")
    t1 = (1.0 / mu) ** float(d)
    if t1 > math.log(709.0):  # exp(t1) would overflow the next level
        return 5e-324
    t2 = math.exp(t1)
    if t2 > 709.0:
        return 5e-324
    t3 = math.exp(t2)
    if t3 > 745.0:
        return 5e-324
    return max(math.exp(-t3), 5e-324)


# ---------------------------------------------------------------------------
# counterexample catalogs


SKEW_PAIR_TEXT = """\
alphabet 0 1
steps 2
entry 0 0 1/3
entry 0 1 1/3
entry 1 1 1/3
"""

AP3_TEXT = """\
alphabet 0 1 2
steps 3
entry 0 0 0 1/6
entry 1 1 1 1/6
entry 2 2 2 1/6
entry 0 1 2 1/6
entry 1 2 0 1/6
entry 2 0 1 1/6
"""


def skew_pair_distribution() -> StepDistribution:
    """Two steps, uniform over {00, 01, 11}: unequal marginals, rho = 1/2."""
    return parse_distribution(SKEW_PAIR_TEXT, name="skew-pair")


def ap3_distribution() -> StepDistribution:
    """Three steps, uniform over the six arithmetic triples mod 3: rho = 1."""
    return parse_distribution(AP3_TEXT, name="ap3")


def _weight_window(n: int, center_num: int, center_den: int) -> tuple[int, int]:
    """Exact bounds of |count - n*center| <= 0.01 n with rational arithmetic."""
    c = Fraction(n * center_num, center_den)
    slack = Fraction(n, 100)
    lo = math.ceil(c - slack)
    hi = math.floor(c + slack)
    return max(lo, 0), min(hi, n)


def skew_pair_sets(n: int) -> tuple[FunctionSpec, FunctionSpec]:
    """The two anchored weight-window sets of the unequal-marginals example."""
    p = skew_pair_distribution()
    lo1, hi1 = _weight_window(n, 1, 3)
    lo2, hi2 = _weight_window(n, 2, 3)
    s1 = make_anchored_symmetric(n, p.alphabet, {"1": (lo1, hi1)}, anchor=(1, "1"))
    s2 = make_anchored_symmetric(n, p.alphabet, {"1": (lo2, hi2)}, anchor=(1, "0"))
    return s1, s2


@dataclass(frozen=True)
class SkewEntry:
    n: int
    value: Number
    mu1: Number
    mu2: Number
    ratio: Number
    s1_measure: Number
    s2_measure: Number


@dataclass(frozen=True)
class SkewReport:
    entries: tuple[SkewEntry, ...]
    decay_rate: float
    ratios_strictly_decreasing: bool


def counterexample_unequal_marginals(
    n_list, engine: str = "auto", budget: int | None = None,
) -> SkewReport:
    """Same-set expectations of the union set on the skew pair, per n.

    The union indicator splits exactly into the two disjoint anchored sets, so
    E[f f] expands into four cross terms, each handled by the joint-count
    program.  Asserts that E[ff] / min(mu1, mu2)^2 strictly decreases along
    n_list.
    """
    p = skew_pair_distribution()
    entries = []
    for n in n_list:
        n = int(n)
        if n < 3 or n % 3:
            raise ValueError("each n must be >= 3 and divisible by 3")
        s1, s2 = skew_pair_sets(n)
        pi1, pi2 = marginal(p, 1), marginal(p, 2)
        value: Number = Fraction(0)
        for fa in (s1, s2):
            for fb in (s1, s2):
                value += multi_set_expectation(p, n, (fa, fb), engine=engine, budget=budget)
        m1 = expectation(s1, pi1, budget=budget) + expectation(s2, pi1, budget=budget)
        m2 = expectation(s1, pi2, budget=budget) + expectation(s2, pi2, budget=budget)
        ratio = value / min(m1, m2) ** 2
        entries.append(
            SkewEntry(
                n, value, m1, m2, ratio,
                expectation(s1, pi1, budget=budget), expectation(s2, pi2, budget=budget),
            )
        )
    decreasing = all(
        entries[t + 1].ratio < entries[t].ratio for t in range(len(entries) - 1)
    )
    if not decreasing:
        raise ArithmeticError("normalized same-set values failed to decrease")
    if len(entries) >= 2:
        xs = [e.n for e in entries]
        ys = [math.log(float(e.value)) for e in entries]
        decay = _fit_slope(xs, ys)[0]
    else:
        decay = float("nan")
    return SkewReport(tuple(entries), decay, decreasing)


def ap3_sets(n: int) -> tuple[FunctionSpec, FunctionSpec, FunctionSpec]:
    """Three symbol-scarcity sets: step 1 wants fewer than n/3 twos, step 2
    fewer than n/3 ones, step 3 fewer than n/3 zeros."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = ap3_distribution()
    theta = math.ceil(Fraction(n, 3)) - 1
    return tuple(
        make_anchored_symmetric(n, p.alphabet, {sym: (0, theta)})
        for sym in ("2", "1", "0")
    )


@dataclass(frozen=True)
class ThreeSetsReport:
    n: int
    rho: float
    triple_product: Number
    measures: tuple[Number, Number, Number]
    max_influences: tuple[Number, Number, Number]


def counterexample_three_sets(
    n: int, engine: str = "auto", budget: int | None = None,
) -> ThreeSetsReport:
    """AP3 catalog entry: exact triple product (always 0), measures, influences.

    Every support tuple feeds exactly one of the three scarcity counts, so the
    counts sum to n and cannot all stay below n/3; the dynamic program
    reproduces the zero exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = ap3_distribution()
    fns = ap3_sets(n)
    value = multi_set_expectation(p, n, fns, engine=engine, budget=budget)
    pis = [marginal(p, j) for j in (1, 2, 3)]
    measures = tuple(expectation(f, pi, budget=budget) for f, pi in zip(fns, pis))
    infl = tuple(
        max(influence(f, pi, i=i, budget=budget) for i in range(1, n + 1))
        for f, pi in zip(fns, pis)
    )
    return ThreeSetsReport(n, rho(p), value, measures, infl)


# ---------------------------------------------------------------------------
# Markov product identity


@dataclass(frozen=True)
class MarkovCheckReport:
    lhs: Number
    rhs: Number
    equal: bool
    pointwise_ok: bool
    ell: int


def _apply_kernel_tensor(kernel_rows, f: FunctionSpec) -> FunctionSpec:
    """h(x) = sum_y prod_i K(x_i, y_i) f(y), one axis at a time, exact."""
    m = len(f.alphabet)
    values = list(f.payload["values"])
    for i in range(1, f.n + 1):
        stride = m ** (i - 1)
        block = m**i
        out = list(values)
        for base in range(0, len(values), block):
            for off in range(stride):
                idxs = [base + off + a * stride for a in range(m)]
                for a in range(m):
                    out[idxs[a]] = sum(
                        kernel_rows[a][b] * values[idxs[b]] for b in range(m)
                    )
        values = out
    clamped = []
    for v in values:
        if v < 0 or v > 1:
            raise ArithmeticError("kernel application left [0,1]")
        clamped.append(v)
    return FunctionSpec(f.n, f.alphabet, "table", {"values": tuple(clamped)})


def _prefix_distribution(p: StepDistribution) -> StepDistribution:
    """Marginal of the first steps - 1 steps as a StepDistribution."""
    m = len(p.alphabet)
    zero: Number = Fraction(0) if p.exact else 0.0
    weights = [zero] * (m ** (p.steps - 1))
    for tup, w in p.support():
        idx = 0
        for d in reversed(tup[:-1]):
            idx = idx * m + d
        weights[idx] += w
    return StepDistribution(p.alphabet, p.steps - 1, tuple(weights), p.exact)


def markov_same_set_check(
    p: StepDistribution, n: int, f: FunctionSpec, budget: int | None = None,
) -> MarkovCheckReport:
    """Verify the chain-contraction identity for Markov-generated distributions.

    With T the last-step transition matrix and h = T applied coordinatewise to
    f, the product g = f * h satisfies: the full product expectation over all
    steps equals the product over the first steps - 1 with the last function
    replaced by g.  Also checks g <= f pointwise.
    """
    ok, kernels = is_markov_generated(p)
    if not ok:
        raise ValueError("distribution is not generated by a Markov chain")
    if f.kind != "table":
        f = to_table(f, budget=budget)
    ell = p.steps
    h = _apply_kernel_tensor(kernels[-1], f)
    g_values = tuple(
        fv * hv for fv, hv in zip(f.payload["values"], h.payload["values"])
    )
    g = FunctionSpec(f.n, f.alphabet, "table", {"values": g_values})
    pointwise_ok = all(
        gv <= fv for gv, fv in zip(g_values, f.payload["values"])
    )
    lhs = multi_set_expectation(p, n, (f,) * ell, budget=budget)
    prefix = _prefix_distribution(p)
    rhs_fns = (f,) * (ell - 2) + (g,)
    rhs = multi_set_expectation(prefix, n, rhs_fns, budget=budget)
    if p.exact and f.is_exact():
        equal = lhs == rhs
    else:
        equal = abs(float(lhs) - float(rhs)) <= 1e-10
    return MarkovCheckReport(lhs, rhs, equal, pointwise_ok, ell)


# ---------------------------------------------------------------------------
# empirical hitting exponent


@dataclass(frozen=True)
class ExponentReport:
    slope: float
    intercept: float
    rms_residual: float
    points: tuple[tuple[float, float], ...]  # (mu achieved, delta)
    n: int
    family: str


def _fit_slope(xs, ys) -> tuple[float, float, float]:
    k = len(xs)
    mean_x = sum(xs) / k
    mean_y = sum(ys) / k
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("degenerate fit: all x equal")
    slope = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / sxx
    intercept = mean_y - slope * mean_x
    rss = sum((y - intercept - slope * x) ** 2 for x, y in zip(xs, ys))
    return slope, intercept, math.sqrt(rss / k)


def estimate_hitting_exponent(
    p: StepDistribution, mu_grid, n: int = 30, family: str = "threshold",
    engine: str = "auto", budget: int | None = None,
) -> ExponentReport:
    """Fit log(same-set value) against log(measure) over a threshold family.

    Only defined for two-step symmetric distributions with positive diagonal
    mass; anything else is refused.  Family members are the indicators
    1[count of the first alphabet symbol >= t]; each target measure picks the
    t whose achieved measure is nearest.  Empirical evidence only.
    """
    if p.steps != 2:
        raise ValueError("exponent estimation needs exactly 2 steps")
    if family != "threshold":
        raise ValueError(f"unknown family {family!r}")
    m = len(p.alphabet)
    for x in range(m):
        for y in range(m):
            wx, wy = p.weight((x, y)), p.weight((y, x))
            if (p.exact and wx != wy) or (not p.exact and abs(float(wx) - float(wy)) > 1e-12):
                raise ValueError("exponent estimation requires a symmetric distribution")
    if alpha(p) <= 0:
        raise ValueError("needs positive diagonal mass")
    pi = marginal(p, 1)
    sym = p.alphabet.symbols[0]
    members = []
    for t in range(0, n + 1):
        f = make_anchored_symmetric(n, p.alphabet, {sym: (t, n)})
        mu_hat = expectation(f, pi, budget=budget)
        if 0 < mu_hat < 1:
            members.append((t, f, mu_hat))
    chosen: dict[int, tuple] = {}
    for target in mu_grid:
        best = min(members, key=lambda item: abs(float(item[2]) - float(target)))
        chosen[best[0]] = best
    points = []
    for t in sorted(chosen):
        _, f, mu_hat = chosen[t]
        delta = same_set_expectation(p, n, f, engine=engine, budget=budget)
        if delta <= 0:
            continue
        points.append((float(mu_hat), float(delta)))
    if len(points) < 2:
        raise ValueError("need at least two usable family members")
    xs = [math.log(mu) for mu, _ in points]
    ys = [math.log(d) for _, d in points]
    slope, intercept, rms = _fit_slope(xs, ys)
    return ExponentReport(slope, intercept, rms, tuple(points), n, family)
