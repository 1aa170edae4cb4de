"""Independent reference computations used to freeze golden test values.

Everything here is deliberately brute force and self-contained: no imports
from the package under test. Property tests compare the package against
these routes; running this module prints the golden constants that the test
suite pins as literals.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------------------
# small exact distributions used throughout the suite


def three_cycle_dist():
    """Uniform start on {0,1,2}, second step stays or moves +1 mod 3."""
    p = {}
    for x in range(3):
        p[(x, x)] = Fraction(1, 6)
        p[(x, (x + 1) % 3)] = Fraction(1, 6)
    return p, 3, 2


def skew_pair_dist():
    """Uniform on {(0,0),(0,1),(1,1)}: monotone coupling with unequal marginals."""
    p = {(0, 0): Fraction(1, 3), (0, 1): Fraction(1, 3), (1, 1): Fraction(1, 3)}
    return p, 2, 2


def ap3_dist():
    """Uniform on the six arithmetic progressions mod 3 (constant + sloped)."""
    tuples = [(0, 0, 0), (1, 1, 1), (2, 2, 2), (0, 1, 2), (1, 2, 0), (2, 0, 1)]
    return {t: Fraction(1, 6) for t in tuples}, 3, 3


def cycle_dist(s, p):
    """Stay with probability p, advance one step with 1-p, uniform start on s points."""
    pf = Fraction(p) if not isinstance(p, Fraction) else p
    d = {}
    for x in range(s):
        d[(x, x)] = pf / s
        d[(x, (x + 1) % s)] = (1 - pf) / s
    return d, s, 2


# ---------------------------------------------------------------------------
# brute-force marginals / kernels / correlations


def marginal(p, ell, j):
    out = {}
    for t, w in p.items():
        out[t[j - 1]] = out.get(t[j - 1], Fraction(0)) + w
    return out


def double_sample_kernel_brute(p, ell, j):
    """K[y][z] = Pr[second resample is z | first resample is y] at step j.

    Both resamples are drawn from step j's conditional law given all the
    other steps. Returned over the support of step j's marginal, row index
    sorted by symbol.
    """
    pi = marginal(p, ell, j)
    support = sorted(y for y, w in pi.items() if w > 0)
    rest = {}
    for t, w in p.items():
        key = tuple(v for i, v in enumerate(t) if i != j - 1)
        rest[key] = rest.get(key, Fraction(0)) + w
    k = {(y, z): Fraction(0) for y in support for z in support}
    for t, w in p.items():
        y = t[j - 1]
        key = tuple(v for i, v in enumerate(t) if i != j - 1)
        for t2, w2 in p.items():
            if tuple(v for i, v in enumerate(t2) if i != j - 1) != key:
                continue
            z = t2[j - 1]
            k[(y, z)] += w * w2 / rest[key]
    return support, {(y, z): k[(y, z)] / pi[y] for y in support for z in support}


def kernel_lambda2(support, k, pi):
    n = len(support)
    d = np.array([float(pi[y]) for y in support])
    m = np.zeros((n, n))
    for a, y in enumerate(support):
        for b, z in enumerate(support):
            m[a, b] = float(k[(y, z)])
    s = np.diag(np.sqrt(d)) @ m @ np.diag(1.0 / np.sqrt(d))
    ev = np.linalg.eigvalsh((s + s.T) / 2)
    return float(np.sort(ev)[-2]) if n > 1 else 0.0


def maximal_correlation_svd(p, ell, s_steps, t_steps):
    """Second singular value of the whitened joint matrix of the two groups."""
    sa = sorted(s_steps)
    ta = sorted(t_steps)
    ga = {}
    gb = {}
    joint = {}
    for t, w in p.items():
        a = tuple(t[j - 1] for j in sa)
        b = tuple(t[j - 1] for j in ta)
        ga[a] = ga.get(a, Fraction(0)) + w
        gb[b] = gb.get(b, Fraction(0)) + w
        joint[(a, b)] = joint.get((a, b), Fraction(0)) + w
    arows = sorted(a for a, w in ga.items() if w > 0)
    brows = sorted(b for b, w in gb.items() if w > 0)
    m = np.zeros((len(arows), len(brows)))
    for i, a in enumerate(arows):
        for jj, b in enumerate(brows):
            w = joint.get((a, b), Fraction(0))
            m[i, jj] = float(w) / math.sqrt(float(ga[a]) * float(gb[b]))
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[1]) if min(m.shape) > 1 else 0.0


def rho_brute(p, ell):
    steps = list(range(1, ell + 1))
    return max(
        maximal_correlation_svd(p, ell, [j], [j2 for j2 in steps if j2 != j])
        for j in steps
    )


# ---------------------------------------------------------------------------
# brute-force product expectations


def multi_set_expectation_brute(p, ell, n, fns):
    """E[prod_j f_j(X^(j))] by enumerating support tuples coordinate by coordinate."""
    support = [(t, w) for t, w in p.items() if w > 0]
    total = Fraction(0)
    for assign in itertools.product(support, repeat=n):
        w = Fraction(1)
        for t, wt in assign:
            w *= wt
        val = Fraction(1)
        for j in range(ell):
            x = tuple(assign[i][0][j] for i in range(n))
            val *= fns[j](x)
            if val == 0:
                break
        total += w * val
    return total


# ---------------------------------------------------------------------------
# golden scenario helpers


def modlinear3(x):
    return Fraction(1) if sum(x) % 3 == 0 else Fraction(0)


def skew_windows(n):
    """Window [lo,hi] on the count of ones for the two anchored sets."""
    lo1 = math.ceil(Fraction(n, 3) - Fraction(n, 100))
    hi1 = math.floor(Fraction(n, 3) + Fraction(n, 100))
    lo2 = math.ceil(Fraction(2 * n, 3) - Fraction(n, 100))
    hi2 = math.floor(Fraction(2 * n, 3) + Fraction(n, 100))
    return (lo1, hi1), (lo2, hi2)


def skew_set_indicator(n, which):
    (lo1, hi1), (lo2, hi2) = skew_windows(n)

    def f(x):
        ones = sum(x)
        in1 = x[0] == 1 and lo1 <= ones <= hi1
        in2 = x[0] == 0 and lo2 <= ones <= hi2
        if which == 1:
            return Fraction(int(in1))
        if which == 2:
            return Fraction(int(in2))
        return Fraction(int(in1 or in2))

    return f


def ap3_indicator(n, step):
    """Fewer than n/3 of the blocked symbol: step 1 blocks 2, step 2 blocks 1, step 3 blocks 0."""
    blocked = {1: 2, 2: 1, 3: 0}[step]

    def f(x):
        return Fraction(int(sum(1 for v in x if v == blocked) * 3 < n))

    return f


def binom_pmf(n, k, p):
    return Fraction(math.comb(n, k)) * p**k * (1 - p) ** (n - k)


def ap3_measure_exact(n):
    """Pr[Bin(n,1/3) < n/3] for the blocked-symbol count at a single step."""
    th = (n + 2) // 3  # smallest integer >= n/3; count must be strictly below n/3
    # count < n/3  <=>  3*count < n  <=>  count <= ceil(n/3) - 1
    limit = (n - 1) // 3 if n % 3 == 0 else (n - (n % 3)) // 3
    limit = (n - 1) // 3  # works for all n: 3k <= n-1 <=> k <= (n-1)//3
    del th
    p = Fraction(1, 3)
    return sum(binom_pmf(n, k, p) for k in range(0, limit + 1))


def ap3_influence_exact(n):
    """Influence of any coordinate on the window indicator count('2') < n/3 under uniform {0,1,2}^n."""
    theta = (n - 1) // 3  # accept counts 0..theta
    p = Fraction(1, 3)
    # conditional variance is nonzero only when the other n-1 coordinates sit
    # exactly on the boundary theta; there the value flips with 1[x_i = 2]
    return binom_pmf(n - 1, theta, p) * p * (1 - p)


def skew_measure_exact(n, step):
    """E[1_{S1 union S2}(X^(step))] exactly, by binomial sums over the step marginal."""
    (lo1, hi1), (lo2, hi2) = skew_windows(n)
    p1 = Fraction(1, 3) if step == 1 else Fraction(2, 3)  # Pr[symbol 1]
    total = Fraction(0)
    # S1: x1 = 1 and total ones in [lo1, hi1]
    for k in range(max(lo1 - 1, 0), hi1):  # ones among remaining n-1
        total += p1 * binom_pmf(n - 1, k, p1)
    # S2: x1 = 0 and total ones in [lo2, hi2]
    for k in range(lo2, min(hi2, n - 1) + 1):
        total += (1 - p1) * binom_pmf(n - 1, k, p1)
    return total


def skew_s1_measure_exact(n):
    """E[1_{S1}(X^(1))] exactly: first bit one and total ones within the window."""
    (lo1, hi1), _ = skew_windows(n)
    p1 = Fraction(1, 3)
    return sum(p1 * binom_pmf(n - 1, k, p1) for k in range(max(lo1 - 1, 0), hi1))


def skew_s1_measure_float(n):
    """Same quantity in floating point via log binomials, for large n."""
    (lo1, hi1), _ = skew_windows(n)
    lp = math.log(1.0 / 3.0)
    lq = math.log(2.0 / 3.0)
    total = 0.0
    for k in range(max(lo1 - 1, 0), hi1):
        lb = math.lgamma(n) - math.lgamma(k + 1) - math.lgamma(n - k)
        total += math.exp(lb + (k + 1) * lp + (n - 1 - k) * lq)
    return total


# ---------------------------------------------------------------------------
# max-of-substitutions gain, brute force


def max_gain_brute(p, ell, n, j_star, i, f):
    """Average over the coordinate-i double sample of E[max-substituted f] at step j_star."""
    pi = marginal(p, ell, j_star)
    support_j = sorted(y for y, w in pi.items() if w > 0)
    rest = {}
    for t, w in p.items():
        key = tuple(v for k, v in enumerate(t) if k != j_star - 1)
        rest[key] = rest.get(key, Fraction(0)) + w

    def cond(y, key):
        num = Fraction(0)
        for t, w in p.items():
            if t[j_star - 1] == y and tuple(v for k, v in enumerate(t) if k != j_star - 1) == key:
                num += w
        return num / rest[key]

    def expect_max(y, z):
        # E over X ~ pi^n of max(f with x_i = y, f with x_i = z)
        total = Fraction(0)
        syms = support_j
        for x in itertools.product(syms, repeat=n):
            w = Fraction(1)
            for v in x:
                w *= pi[v]
            xy = list(x)
            xy[i - 1] = y
            xz = list(x)
            xz[i - 1] = z
            total += w * max(f(tuple(xy)), f(tuple(xz)))
        return total

    total = Fraction(0)
    for key, wk in rest.items():
        for y in support_j:
            for z in support_j:
                total += wk * cond(y, key) * cond(z, key) * expect_max(y, z)
    return total


# ---------------------------------------------------------------------------
# misc exact helpers


def fn_expectation_iid(pi, n, f, symbols):
    total = Fraction(0)
    for x in itertools.product(symbols, repeat=n):
        w = Fraction(1)
        for v in x:
            w *= pi[v]
        total += w * f(x)
    return total


def influence_iid(pi, n, f, symbols, i):
    """E over the other coordinates of the conditional variance at coordinate i."""
    total = Fraction(0)
    for x_rest in itertools.product(symbols, repeat=n - 1):
        w = Fraction(1)
        for v in x_rest:
            w *= pi[v]
        mean = Fraction(0)
        mean_sq = Fraction(0)
        for a in symbols:
            x = x_rest[: i - 1] + (a,) + x_rest[i - 1 :]
            v = f(x)
            mean += pi[a] * v
            mean_sq += pi[a] * v * v
        total += w * (mean_sq - mean * mean)
    return total


def orthant_probability(r):
    """Pr[G1 > 0, G2 > 0] for standard normals with correlation r, by quadrature."""
    from scipy.integrate import dblquad

    det = 1 - r * r

    def dens(y, x):
        return math.exp(-(x * x - 2 * r * x * y + y * y) / (2 * det)) / (
            2 * math.pi * math.sqrt(det)
        )

    val, _ = dblquad(dens, 0, 8.0, lambda _: 0, lambda _: 8.0, epsabs=1e-12)
    return val


def cycle_eigen_formula(s, p):
    vals = [
        1 - 2 * p * (1 - p) * (1 - math.cos(2 * math.pi * k / s)) for k in range(1, s)
    ]
    return max(vals)


# ---------------------------------------------------------------------------


def main():
    print("== three-cycle lazy step ==")
    p, m, ell = three_cycle_dist()
    sup, k = double_sample_kernel_brute(p, ell, 2)
    pi = marginal(p, ell, 2)
    print("kernel rows:", [[str(k[(y, z)]) for z in sup] for y in sup])
    print("lambda2:", kernel_lambda2(sup, k, pi))
    print("rho (svd):", rho_brute(p, ell))
    print("rho (eigen):", math.sqrt(kernel_lambda2(sup, k, pi)))

    f = modlinear3
    val = multi_set_expectation_brute(p, ell, 2, [f, f])
    print("mod-linear same-set value at n=2:", val)

    dict0 = lambda x: Fraction(int(x[0] == 0))
    print("dictator same-set n=1:", multi_set_expectation_brute(p, ell, 1, [dict0, dict0]))
    print(
        "dictator same-set n=4:",
        multi_set_expectation_brute(p, ell, 4, [lambda x: Fraction(int(x[0] == 0))] * 2),
    )

    print("max gain lhs (dictator n=1, j*=2):", max_gain_brute(p, ell, 1, 2, 1, dict0))
    pi1 = marginal(p, ell, 1)
    print("dictator influence n=1:", influence_iid(pi1, 1, dict0, sorted(pi1), 1))

    print()
    print("== cycles ==")
    for s, pv in [(3, Fraction(1, 2)), (4, Fraction(1, 4))]:
        d, _, _ = cycle_dist(s, pv)
        sup_c, kc = double_sample_kernel_brute(d, 2, 2)
        pic = marginal(d, 2, 2)
        lam = kernel_lambda2(sup_c, kc, pic)
        print(f"(s={s}, p={pv}) lambda2 kernel={lam:.15f} formula={cycle_eigen_formula(s, float(pv)):.15f}")
        print(f"  rho={math.sqrt(max(lam, 0.0)):.15f}")

    print()
    print("== skew pair ==")
    sk, _, _ = skew_pair_dist()
    print("marginal 1:", {a: str(w) for a, w in marginal(sk, 2, 1).items()})
    print("marginal 2:", {a: str(w) for a, w in marginal(sk, 2, 2).items()})
    print("rho:", rho_brute(sk, 2))
    for n in (3, 6, 9, 12):
        f = skew_set_indicator(n, 0)
        val = multi_set_expectation_brute(sk, 2, n, [f, f])
        mu1 = skew_measure_exact(n, 1)
        mu2 = skew_measure_exact(n, 2)
        ratio = val / min(mu1, mu2) ** 2
        print(f"n={n}: E[ff]={val}  mu1={mu1}  mu2={mu2}  normalized={float(ratio):.6f}")
    for n in (9,):
        f1 = skew_set_indicator(n, 1)
        pi1 = marginal(sk, 2, 1)
        print("E[1_S1(X^1)] at n=9:", fn_expectation_iid(pi1, n, f1, sorted(pi1)))
    print("union measure at n=300 (step 1):", float(skew_measure_exact(300, 1)))
    v300 = skew_s1_measure_exact(300)
    print("S1 measure at n=300 exact:", v300, float(v300))
    for n in (3000, 30000):
        print(f"S1 measure at n={n} (float):", skew_s1_measure_float(n))

    print()
    print("== ap3 ==")
    ap, _, _ = ap3_dist()
    print("rho:", rho_brute(ap, 3))
    for n in (2, 3):
        fns = [ap3_indicator(n, j) for j in (1, 2, 3)]
        print(f"triple product n={n}:", multi_set_expectation_brute(ap, 3, n, fns))
    print("measure n=60:", float(ap3_measure_exact(60)), ap3_measure_exact(60))
    print("measure n=120:", float(ap3_measure_exact(120)))
    print("measure n=240:", float(ap3_measure_exact(240)))
    for n in (6, 12, 24):
        print(f"influence n={n}:", ap3_influence_exact(n), float(ap3_influence_exact(n)))

    print()
    print("== gaussian orthant ==")
    print("Pr[G1>0, G2>0] at r=1/2:", orthant_probability(0.5))

    print()
    print("== noise operator on a dictator, uniform bit ==")
    # T_rho f(x) = rho f(x) + (1-rho) E[f]; dictator 1[x=1], rho=1/2
    ef = Fraction(1, 2)
    for x, fx in ((0, Fraction(0)), (1, Fraction(1))):
        print(f"T_1/2 f({x}) =", Fraction(1, 2) * fx + Fraction(1, 2) * ef)

    print()
    print("== mod-linear influences, uniform trit, n=2, sum mod 3 ==")
    piu = {0: Fraction(1, 3), 1: Fraction(1, 3), 2: Fraction(1, 3)}
    for i in (1, 2):
        print(f"Inf_{i}:", influence_iid(piu, 2, modlinear3, (0, 1, 2), i))


if __name__ == "__main__":
    main()
