"""Functions on finite product spaces and their spectral toolkit.

Four function representations share one interface: dense tables, symmetric
count-window acceptors with an optional anchored coordinate, junta indicators,
and modular linear-form indicators.  On top of them: exact expectations and
influences (by enumeration and by count or residue dynamic programs),
orthonormal bases, Fourier expansions, the noise operator, projections onto
coordinate subsets, restrictions, resilience checks, and the pointwise-max
substitution operator.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._util import (
    Number,
    mixed_radix_digits,
    mixed_radix_index,
    parse_weight,
)
from .dist_core import Alphabet, MarginalDistribution

TABLE_BUDGET = 2**24
BASIS_TOL = 1e-12


class BudgetExceeded(RuntimeError):
    """Raised when an exact route would enumerate more states than allowed."""


# ---------------------------------------------------------------------------
# function descriptions


@dataclass(frozen=True)
class FunctionSpec:
    """A function from alphabet^n to [0,1] in one of four representations.

    kinds and payloads:
      table              values: tuple of |alphabet|^n numbers, mixed-radix
                         index with coordinate 1 least significant
      anchored_symmetric anchor: None or (coordinate, symbol index);
                         windows: {symbol index: (lo, hi)} count windows;
                         ignored: frozenset of dummy coordinates;
                         zero: hard-zero flag set by conflicting restrictions
      junta              constraints: tuple of (coordinate, symbol index),
                         conjunction of equalities; zero flag as above
      mod_linear         modulus, coeffs (one per coordinate), residue,
                         symbol_map: tuple mapping symbol index to Z_modulus
    Coordinates are 1-based everywhere in payloads.
    """

    n: int
    alphabet: Alphabet
    kind: str
    payload: dict = field(compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind not in ("table", "anchored_symmetric", "junta", "mod_linear"):
            raise ValueError(f"unknown function kind {self.kind!r}")

    @property
    def zero(self) -> bool:
        return bool(self.payload.get("zero", False))

    def is_exact(self) -> bool:
        if self.kind == "table":
            return all(isinstance(v, Fraction) for v in self.payload["values"])
        return True


def _coerce_alphabet(alphabet) -> Alphabet:
    if isinstance(alphabet, Alphabet):
        return alphabet
    return Alphabet(tuple(str(s) for s in alphabet))


def make_table_function(n: int, alphabet: Alphabet, values) -> FunctionSpec:
    alphabet = _coerce_alphabet(alphabet)
    m = len(alphabet)
    vals = tuple(values)
    if len(vals) != m**n:
        raise ValueError("table length must be |alphabet|^n")
    for v in vals:
        if not 0 <= v <= 1:
            raise ValueError("table values must lie in [0,1]")
    return FunctionSpec(n, alphabet, "table", {"values": vals})


def make_anchored_symmetric(
    n: int, alphabet: Alphabet, windows: dict, anchor=None, ignored=(), zero=False
) -> FunctionSpec:
    alphabet = _coerce_alphabet(alphabet)
    win = {}
    for sym, (lo, hi) in windows.items():
        idx = alphabet.index(sym) if isinstance(sym, str) else int(sym)
        lo, hi = int(lo), int(hi)
        if not (0 <= lo and hi <= n):
            raise ValueError("window bounds must lie within [0, n]")
        win[idx] = (lo, hi)
    anc = None
    if anchor is not None:
        coord, sym = anchor
        idx = alphabet.index(sym) if isinstance(sym, str) else int(sym)
        if not 1 <= coord <= n:
            raise ValueError("anchor coordinate out of range")
        anc = (int(coord), idx)
    ign = frozenset(int(c) for c in ignored)
    if any(not 1 <= c <= n for c in ign):
        raise ValueError("ignored coordinate out of range")
    if anc is not None and anc[0] in ign:
        raise ValueError("anchor coordinate cannot be ignored")
    payload = {"anchor": anc, "windows": win, "ignored": ign, "zero": bool(zero)}
    return FunctionSpec(n, alphabet, "anchored_symmetric", payload)


def make_junta(n: int, alphabet: Alphabet, constraints, zero=False) -> FunctionSpec:
    alphabet = _coerce_alphabet(alphabet)
    seen: dict[int, int] = {}
    is_zero = bool(zero)
    for coord, sym in constraints:
        idx = alphabet.index(sym) if isinstance(sym, str) else int(sym)
        coord = int(coord)
        if not 1 <= coord <= n:
            raise ValueError("constraint coordinate out of range")
        if coord in seen and seen[coord] != idx:
            is_zero = True  # x_i = v and x_i = w with v != w cannot both hold
        seen[coord] = idx
    cons = tuple(sorted(seen.items()))
    return FunctionSpec(n, alphabet, "junta", {"constraints": cons, "zero": is_zero})


def make_mod_linear(
    n: int, alphabet: Alphabet, modulus: int, coeffs, residue: int, symbol_map, zero=False
) -> FunctionSpec:
    alphabet = _coerce_alphabet(alphabet)
    if modulus < 1:
        raise ValueError("modulus must be positive")
    cs = tuple(int(c) % modulus for c in coeffs)
    if len(cs) != n:
        raise ValueError("need one coefficient per coordinate")
    if isinstance(symbol_map, dict):
        sm = tuple(int(symbol_map[s]) % modulus for s in alphabet.symbols)
    else:
        sm = tuple(int(v) % modulus for v in symbol_map)
        if len(sm) != len(alphabet):
            raise ValueError("symbol map must cover the alphabet")
    payload = {
        "modulus": int(modulus),
        "coeffs": cs,
        "residue": int(residue) % modulus,
        "symbol_map": sm,
        "zero": bool(zero),
    }
    return FunctionSpec(n, alphabet, "mod_linear", payload)


# ---------------------------------------------------------------------------
# restrictions


@dataclass(frozen=True)
class Restriction:
    """Per-coordinate entries: None keeps the coordinate free, an int fixes it."""

    entries: tuple[int | None, ...]

    @classmethod
    def from_dict(cls, n: int, fixed: dict, alphabet: Alphabet | None = None):
        entries: list[int | None] = [None] * n
        for coord, sym in fixed.items():
            if isinstance(sym, str):
                if alphabet is None:
                    raise ValueError("alphabet required to resolve symbol tokens")
                idx = alphabet.index(sym)
            else:
                idx = int(sym)
            entries[int(coord) - 1] = idx
        return cls(tuple(entries))

    @property
    def size(self) -> int:
        return sum(1 for e in self.entries if e is not None)

    def fixed_items(self):
        """Pairs (1-based coordinate, symbol index) in coordinate order."""
        return [(i + 1, e) for i, e in enumerate(self.entries) if e is not None]


def restrict(f: FunctionSpec, r: Restriction) -> FunctionSpec:
    """Substitute the fixed symbols; the result keeps all n coordinates.

    Fixed coordinates become dummy.  Anchored windows lose the budget consumed
    by fixed symbols; fixing the anchor to a conflicting symbol yields the
    explicit zero function rather than an error.
    """
    if len(r.entries) != f.n:
        raise ValueError("restriction length must match coordinate count")
    if r.size == 0:
        return f
    if f.kind == "table":
        m = len(f.alphabet)
        values = f.payload["values"]
        out = []
        for idx in range(m**f.n):
            digits = list(mixed_radix_digits(idx, m, f.n))
            for pos, e in enumerate(r.entries):
                if e is not None:
                    digits[pos] = e
            out.append(values[mixed_radix_index(digits, m)])
        return FunctionSpec(f.n, f.alphabet, "table", {"values": tuple(out)})
    if f.kind == "junta":
        if f.zero:
            return f
        cons = dict(f.payload["constraints"])
        zero = False
        for coord, sym in r.fixed_items():
            want = cons.pop(coord, None)
            if want is not None and want != sym:
                zero = True
        return FunctionSpec(
            f.n, f.alphabet, "junta",
            {"constraints": tuple(sorted(cons.items())), "zero": zero},
        )
    if f.kind == "mod_linear":
        pay = f.payload
        coeffs = list(pay["coeffs"])
        residue = pay["residue"]
        mod = pay["modulus"]
        for coord, sym in r.fixed_items():
            residue = (residue - coeffs[coord - 1] * pay["symbol_map"][sym]) % mod
            coeffs[coord - 1] = 0
        return FunctionSpec(
            f.n, f.alphabet, "mod_linear",
            {**pay, "coeffs": tuple(coeffs), "residue": residue},
        )
    # anchored_symmetric
    pay = f.payload
    if f.zero:
        return f
    anchor = pay["anchor"]
    windows = dict(pay["windows"])
    ignored = set(pay["ignored"])
    zero = False
    for coord, sym in r.fixed_items():
        if coord in ignored:
            continue  # already dummy; substitution cannot change the value
        if anchor is not None and coord == anchor[0]:
            if sym != anchor[1]:
                zero = True
            anchor = None
        if sym in windows:
            lo, hi = windows[sym]
            if hi == 0:
                zero = True
            windows[sym] = (max(lo - 1, 0), max(hi - 1, 0))
        ignored.add(coord)
    payload = {
        "anchor": anchor,
        "windows": windows,
        "ignored": frozenset(ignored),
        "zero": zero,
    }
    return FunctionSpec(f.n, f.alphabet, "anchored_symmetric", payload)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(f: FunctionSpec, x) -> Number:
    """Value of f at a point given as symbol indices or tokens."""
    if len(x) != f.n:
        raise ValueError("point length must match coordinate count")
    point = tuple(f.alphabet.index(s) if isinstance(s, str) else int(s) for s in x)
    m = len(f.alphabet)
    for s in point:
        if not 0 <= s < m:
            raise ValueError(f"symbol index {s} outside alphabet")
    if f.zero:
        return Fraction(0)
    if f.kind == "table":
        return f.payload["values"][mixed_radix_index(point, m)]
    if f.kind == "junta":
        ok = all(point[coord - 1] == sym for coord, sym in f.payload["constraints"])
        return Fraction(1 if ok else 0)
    if f.kind == "mod_linear":
        pay = f.payload
        total = sum(
            c * pay["symbol_map"][s] for c, s in zip(pay["coeffs"], point)
        )
        return Fraction(1 if total % pay["modulus"] == pay["residue"] else 0)
    pay = f.payload
    anchor = pay["anchor"]
    if anchor is not None and point[anchor[0] - 1] != anchor[1]:
        return Fraction(0)
    counts = [0] * m
    for pos, s in enumerate(point):
        if (pos + 1) not in pay["ignored"]:
            counts[s] += 1
    for sym, (lo, hi) in pay["windows"].items():
        if not lo <= counts[sym] <= hi:
            return Fraction(0)
    return Fraction(1)


# ---------------------------------------------------------------------------
# expectation and variance


def _check_budget(m: int, n: int, budget: int | None):
    cap = TABLE_BUDGET if budget is None else budget
    if m**n > cap:
        raise BudgetExceeded(f"{m}^{n} points exceed the exact-enumeration budget {cap}")


def _expectation_enumerate(f: FunctionSpec, pi: MarginalDistribution, budget=None):
    m = len(f.alphabet)
    _check_budget(m, f.n, budget)
    support = pi.support_indices()
    exact = pi.exact and f.is_exact()
    total: Number = Fraction(0) if exact else 0.0
    sq: Number = Fraction(0) if exact else 0.0
    for point in itertools.product(support, repeat=f.n):
        w: Number = Fraction(1) if exact else 1.0
        for s in point:
            w *= pi.probs[s]
        v = evaluate(f, point)
        if not exact:
            w, v = float(w), float(v)
        total += w * v
        sq += w * v * v
    return total, sq


def _grouped_count_iter(f: FunctionSpec, pi: MarginalDistribution, shift, n_free, budget):
    """Iterate (probability, shifted counts) over constrained-symbol count vectors.

    Unconstrained symbols are lumped into one complement group, so the state
    space is the product of the window boxes.  Probabilities are exact for
    rational marginals.  `shift[sym]` counts already-pinned occurrences that
    the windows must also cover.
    """
    pay = f.payload
    con = sorted(pay["windows"])
    exact = pi.exact
    p_con = [pi.probs[s] for s in con]
    p_other = (Fraction(1) if exact else 1.0) - sum(p_con)
    cap = TABLE_BUDGET if budget is None else budget
    boxes = []
    for s in con:
        lo, hi = pay["windows"][s]
        lo_free = max(lo - shift.get(s, 0), 0)
        hi_free = min(hi - shift.get(s, 0), n_free)
        if hi_free < lo_free:
            return
        boxes.append(range(lo_free, hi_free + 1))
    size = 1
    for b in boxes:
        size *= len(b)
    if size > cap:
        raise BudgetExceeded(f"window box of {size} states exceeds budget {cap}")
    for combo in itertools.product(*boxes):
        used = sum(combo)
        rest = n_free - used
        if rest < 0:
            continue
        if p_other == 0 and rest > 0:
            continue
        # multinomial over the constrained groups plus the complement
        weight: Number = Fraction(1) if exact else 1.0
        remaining = n_free
        for c, p in zip(combo, p_con):
            weight *= math.comb(remaining, c) * (p**c)
            remaining -= c
        weight *= p_other**rest
        yield weight, dict(zip(con, combo))


def _expectation_anchored_dp(f: FunctionSpec, pi: MarginalDistribution, budget=None):
    pay = f.payload
    exact = pi.exact
    one: Number = Fraction(1) if exact else 1.0
    if f.zero:
        return one * 0
    anchor = pay["anchor"]
    shift: dict[int, int] = {}
    factor = one
    n_free = f.n - len(pay["ignored"])
    if anchor is not None:
        factor = factor * pi.probs[anchor[1]]
        shift[anchor[1]] = 1
        n_free -= 1
    if factor == 0:
        return one * 0
    total = one * 0
    for weight, _ in _grouped_count_iter(f, pi, shift, n_free, budget):
        total += weight
    return factor * total


def _expectation_mod_linear_dp(f: FunctionSpec, pi: MarginalDistribution):
    pay = f.payload
    exact = pi.exact
    zero: Number = Fraction(0) if exact else 0.0
    if f.zero:
        return zero
    mod = pay["modulus"]
    dist = [zero] * mod
    dist[0] = Fraction(1) if exact else 1.0
    for c in pay["coeffs"]:
        step = [zero] * mod
        for s, p in enumerate(pi.probs):
            if p > 0:
                step[(c * pay["symbol_map"][s]) % mod] += p
        nxt = [zero] * mod
        for a, wa in enumerate(dist):
            if wa == 0:
                continue
            for b, wb in enumerate(step):
                if wb != 0:
                    nxt[(a + b) % mod] += wa * wb
        dist = nxt
    return dist[pay["residue"]]


def expectation(
    f: FunctionSpec, pi: MarginalDistribution, n: int | None = None,
    engine: str = "auto", budget: int | None = None,
) -> Number:
    """E[f(X)] with X_i independent draws from pi.

    engine: 'enumerate' walks all support points, 'dp' uses the count-window
    or residue dynamic program (anchored_symmetric and mod_linear only),
    'auto' prefers the dp when it applies and enumeration fits the budget
    otherwise.  Exact inputs give exact rationals on every route.
    """
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    if f.zero:
        return Fraction(0) if pi.exact else 0.0
    if engine not in ("auto", "enumerate", "dp"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "enumerate":
        return _expectation_enumerate(f, pi, budget)[0]
    if f.kind == "anchored_symmetric":
        return _expectation_anchored_dp(f, pi, budget)
    if f.kind == "mod_linear":
        return _expectation_mod_linear_dp(f, pi)
    if engine == "dp":
        raise ValueError(f"no dynamic program for kind {f.kind!r}")
    if f.kind == "junta":
        out: Number = Fraction(1) if pi.exact else 1.0
        for _, sym in f.payload["constraints"]:
            out *= pi.probs[sym]
        return out
    return _expectation_enumerate(f, pi, budget)[0]


def variance(
    f: FunctionSpec, pi: MarginalDistribution, n: int | None = None,
    engine: str = "auto", budget: int | None = None,
) -> Number:
    """Var[f(X)]; for indicator kinds E[f^2] = E[f], so every engine applies."""
    if f.kind == "table":
        if engine == "dp":
            raise ValueError("no dynamic program for kind 'table'")
        total, sq = _expectation_enumerate(f, pi, budget)
        return sq - total * total
    mu = expectation(f, pi, n, engine=engine, budget=budget)
    return mu - mu * mu


# ---------------------------------------------------------------------------
# influences


def _influence_enumerate(f, pi, i, budget=None):
    m = len(f.alphabet)
    _check_budget(m, f.n, budget)
    support = pi.support_indices()
    exact = pi.exact and f.is_exact()
    zero: Number = Fraction(0) if exact else 0.0
    total = zero
    others = [c for c in range(1, f.n + 1) if c != i]
    for rest in itertools.product(support, repeat=f.n - 1):
        w: Number = Fraction(1) if exact else 1.0
        for s in rest:
            w *= pi.probs[s]
        mean = zero
        mean_sq = zero
        point = [0] * f.n
        for coord, s in zip(others, rest):
            point[coord - 1] = s
        for a in support:
            point[i - 1] = a
            v = evaluate(f, tuple(point))
            if not exact:
                v = float(v)
            mean += pi.probs[a] * v
            mean_sq += pi.probs[a] * v * v
        total += w * (mean_sq - mean * mean)
    return total


def _influence_anchored_dp(f, pi, i, budget=None):
    pay = f.payload
    exact = pi.exact
    zero: Number = Fraction(0) if exact else 0.0
    one: Number = Fraction(1) if exact else 1.0
    if f.zero or i in pay["ignored"]:
        return zero
    anchor = pay["anchor"]
    windows = pay["windows"]

    def in_windows(counts: dict[int, int]) -> bool:
        return all(lo <= counts.get(s, 0) <= hi for s, (lo, hi) in windows.items())

    if anchor is not None and i == anchor[0]:
        # f depends on x_i only through the anchor match and x_i's own count
        pv = pi.probs[anchor[1]]
        n_free = f.n - 1 - len(pay["ignored"])
        prob = zero
        for weight, counts in _grouped_count_iter(f, pi, {anchor[1]: 1}, n_free, budget):
            prob += weight
        return pv * (1 - pv) * prob
    shift: dict[int, int] = {}
    factor = one
    n_free = f.n - len(pay["ignored"]) - 1
    if anchor is not None:
        factor = factor * pi.probs[anchor[1]]
        shift[anchor[1]] = 1
        n_free -= 1
    if factor == 0:
        return zero
    total = zero
    con = sorted(windows)
    # iterate over free-count states ignoring windows on the +1 slot: widen
    # each box by one below so boundary states appear
    widened = dict(windows)
    pay_widened = {**pay, "windows": {s: (max(lo - 1, 0), hi) for s, (lo, hi) in widened.items()}}
    f_wide = FunctionSpec(f.n, f.alphabet, f.kind, pay_widened)
    for weight, counts in _grouped_count_iter(f_wide, pi, shift, n_free, budget):
        base = {s: counts.get(s, 0) + shift.get(s, 0) for s in set(counts) | set(shift)}
        p = zero
        for a, pa in enumerate(pi.probs):
            if pa <= 0:
                continue
            bumped = dict(base)
            bumped[a] = bumped.get(a, 0) + 1
            if in_windows(bumped):
                p += pa
        total += weight * (p - p * p)
    return factor * total


def _influence_mod_linear_dp(f, pi, i):
    pay = f.payload
    exact = pi.exact
    zero: Number = Fraction(0) if exact else 0.0
    if f.zero:
        return zero
    mod = pay["modulus"]
    dist = [zero] * mod
    dist[0] = Fraction(1) if exact else 1.0
    for coord, c in enumerate(pay["coeffs"], start=1):
        if coord == i:
            continue
        step = [zero] * mod
        for s, p in enumerate(pi.probs):
            if p > 0:
                step[(c * pay["symbol_map"][s]) % mod] += p
        nxt = [zero] * mod
        for a, wa in enumerate(dist):
            if wa == 0:
                continue
            for b, wb in enumerate(step):
                if wb != 0:
                    nxt[(a + b) % mod] += wa * wb
        dist = nxt
    ci = pay["coeffs"][i - 1]
    total = zero
    for s, ws in enumerate(dist):
        if ws == 0:
            continue
        p = zero
        for a, pa in enumerate(pi.probs):
            if pa > 0 and (s + ci * pay["symbol_map"][a]) % mod == pay["residue"]:
                p += pa
        total += ws * (p - p * p)
    return total


def influence(
    f: FunctionSpec, pi: MarginalDistribution, n: int | None = None, i: int = 1,
    engine: str = "auto", budget: int | None = None,
) -> Number:
    """Inf_i(f) = E[Var[f(X) | X at all coordinates except i]], exact when inputs are."""
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    if not 1 <= i <= f.n:
        raise ValueError("coordinate out of range")
    if engine not in ("auto", "enumerate", "dp"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "enumerate":
        return _influence_enumerate(f, pi, i, budget)
    if f.kind == "anchored_symmetric":
        return _influence_anchored_dp(f, pi, i, budget)
    if f.kind == "mod_linear":
        return _influence_mod_linear_dp(f, pi, i)
    if engine == "dp":
        raise ValueError(f"no dynamic program for kind {f.kind!r}")
    return _influence_enumerate(f, pi, i, budget)


def total_influence(
    f: FunctionSpec, pi: MarginalDistribution, n: int | None = None,
    engine: str = "auto", budget: int | None = None,
) -> Number:
    return sum(influence(f, pi, i=i, engine=engine, budget=budget) for i in range(1, f.n + 1))


# ---------------------------------------------------------------------------
# orthonormal basis and Fourier expansions


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal functions over support(pi), phi_0 constant 1.

    `support` lists alphabet indices carrying positive mass; each function is
    a vector of values aligned with `support`.
    """

    pi: MarginalDistribution
    support: tuple[int, ...]
    functions: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        probs = [float(self.pi.probs[s]) for s in self.support]
        k = len(self.functions)
        for a in range(k):
            for b in range(a, k):
                ip = sum(
                    p * x * y
                    for p, x, y in zip(probs, self.functions[a], self.functions[b])
                )
                want = 1.0 if a == b else 0.0
                if abs(ip - want) > BASIS_TOL:
                    raise ValueError("basis is not orthonormal within tolerance")

    @property
    def size(self) -> int:
        return len(self.functions)


def build_basis(pi: MarginalDistribution) -> OrthonormalBasis:
    """Gram-Schmidt over symbol indicators in canonical order, seeded with 1.

    Deterministic: vectors with negligible residual are dropped (the indicator
    set together with the constant is linearly dependent), and each kept
    function is scaled so its first nonzero entry is positive.
    """
    support = pi.support_indices()
    if not support:
        raise ValueError("marginal has empty support")
    probs = np.array([float(pi.probs[s]) for s in support])
    k = len(support)
    raw = [np.ones(k)]
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        raw.append(e)
    basis: list[np.ndarray] = []
    for v in raw:
        w = v.astype(float)
        for _ in range(2):  # re-orthogonalize for 1e-12-level orthonormality
            for b in basis:
                w = w - np.dot(probs * w, b) * b
        norm_sq = float(np.dot(probs * w, w))
        if norm_sq <= 1e-20:
            continue
        w = w / math.sqrt(norm_sq)
        for x in w:
            if abs(x) > 1e-12:
                if x < 0:
                    w = -w
                break
        basis.append(w)
        if len(basis) == k:
            break
    functions = tuple(tuple(float(x) for x in b) for b in basis)
    return OrthonormalBasis(pi, support, functions)


@dataclass(frozen=True)
class FourierExpansion:
    """Sparse coefficient map over multi-indices sigma in {0..m-1}^n."""

    basis: OrthonormalBasis
    n: int
    coeffs: dict[tuple[int, ...], float] = field(compare=False)

    def weight_at(self, sigma: tuple[int, ...]) -> float:
        return self.coeffs.get(sigma, 0.0)

    def degree(self) -> int:
        deg = 0
        for sigma, c in self.coeffs.items():
            if c != 0.0:
                deg = max(deg, sum(1 for s in sigma if s != 0))
        return deg

    def parseval_total(self) -> float:
        return sum(c * c for c in self.coeffs.values())

    def influence_from_coeffs(self, i: int) -> float:
        return sum(
            c * c for sigma, c in self.coeffs.items() if sigma[i - 1] != 0
        )


def _basis_point_value(basis: OrthonormalBasis, sigma, point_positions) -> float:
    out = 1.0
    for s, pos in zip(sigma, point_positions):
        out *= basis.functions[s][pos]
    return out


def analyze(
    f: FunctionSpec, basis: OrthonormalBasis, n: int | None = None,
    budget: int | None = None,
) -> FourierExpansion:
    """Coefficients f_hat(sigma) = E[f * phi_sigma] by exact-support enumeration."""
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    k = basis.size
    _check_budget(k, f.n, budget)
    probs = [float(basis.pi.probs[s]) for s in basis.support]
    # tensor of f over support^n, axis per coordinate, coordinate 1 first
    values = np.zeros((k,) * f.n)
    pts = list(itertools.product(range(k), repeat=f.n))
    for pos in pts:
        point = tuple(basis.support[p] for p in pos)
        values[pos] = float(evaluate(f, point))
    # contract one axis at a time with the basis matrix weighted by pi
    mat = np.array([[probs[j] * basis.functions[s][j] for j in range(k)] for s in range(k)])
    t = values
    for axis in range(f.n):
        t = np.tensordot(mat, t, axes=([1], [axis]))
        t = np.moveaxis(t, 0, axis)
    coeffs: dict[tuple[int, ...], float] = {}
    for sigma in pts:
        c = float(t[sigma])
        if c != 0.0:
            coeffs[sigma] = c
    return FourierExpansion(basis, f.n, coeffs)


def synthesize(expansion: FourierExpansion, budget: int | None = None) -> FunctionSpec:
    """Dense table of sum_sigma f_hat(sigma) phi_sigma; zero off the support.

    Values may drift from [0,1] by float rounding only; drifts beyond 1e-8
    raise, smaller ones are clamped.
    """
    basis = expansion.basis
    k = basis.size
    n = expansion.n
    _check_budget(k, n, budget)
    t = np.zeros((k,) * n)
    for sigma, c in expansion.coeffs.items():
        if c == 0.0:
            continue
        # outer product of the per-coordinate basis vectors, coordinate 1 first
        vecs = [np.array(basis.functions[s]) for s in sigma]
        block = vecs[0]
        for v in vecs[1:]:
            block = np.multiply.outer(block, v)
        t = t + c * block
    alphabet = basis.pi.alphabet
    m = len(alphabet)
    out = [0.0] * (m**n)
    for pos in itertools.product(range(k), repeat=n):
        point = tuple(basis.support[p] for p in pos)
        v = float(t[pos])
        if v < -1e-8 or v > 1 + 1e-8:
            raise ArithmeticError(f"synthesized value {v} escapes [0,1]")
        out[mixed_radix_index(point, m)] = min(1.0, max(0.0, v))
    return FunctionSpec(n, alphabet, "table", {"values": tuple(out)})


def low_degree_max_coefficient(
    f: FunctionSpec, k: int, basis: OrthonormalBasis, n: int | None = None,
    budget: int | None = None,
) -> float:
    """max |f_hat(sigma)| over 0 < |sigma| <= k; zero when no such sigma."""
    expansion = analyze(f, basis, n, budget)
    best = 0.0
    for sigma, c in expansion.coeffs.items():
        deg = sum(1 for s in sigma if s != 0)
        if 0 < deg <= k:
            best = max(best, abs(c))
    return best


# ---------------------------------------------------------------------------
# averaging operators


def _table_tensor(f: FunctionSpec, exact: bool):
    m = len(f.alphabet)
    values = f.payload["values"]
    if exact:
        return list(values)
    return [float(v) for v in values]


def _average_coordinate(values, m: int, i: int, pi_probs, keep):
    """Replace coordinate i by keep*x_i + (1-keep)*fresh-draw averaging."""
    out = list(values)
    stride = m ** (i - 1)
    block = m**i
    for base in range(0, len(values), block):
        for off in range(stride):
            idxs = [base + off + a * stride for a in range(m)]
            avg = sum(pi_probs[a] * values[idxs[a]] for a in range(m))
            for a in range(m):
                out[idxs[a]] = keep * values[idxs[a]] + (1 - keep) * avg
    return out


def noise_operator(
    f: FunctionSpec, rho, pi: MarginalDistribution, n: int | None = None,
    budget: int | None = None,
) -> FunctionSpec:
    """T_rho f: each coordinate kept with probability rho, resampled otherwise.

    Computed by per-coordinate averaging and, independently, by scaling
    Fourier coefficients by rho^|sigma|; the routes must agree within 1e-10 on
    the support.  Returns the averaged table (exact for rational rho and f).
    """
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    if not 0 <= float(rho) <= 1:
        raise ValueError("rho must lie in [0,1]")
    m = len(f.alphabet)
    _check_budget(m, f.n, budget)
    if f.kind != "table":
        f = to_table(f, budget=budget)
    exact = f.is_exact() and pi.exact and isinstance(rho, (Fraction, int))
    keep: Number = Fraction(rho) if exact else float(rho)
    values = _table_tensor(f, exact)
    probs = list(pi.probs) if exact else [float(p) for p in pi.probs]
    for i in range(1, f.n + 1):
        values = _average_coordinate(values, m, i, probs, keep)
    averaged = FunctionSpec(f.n, f.alphabet, "table", {"values": tuple(values)})

    basis = build_basis(pi)
    expansion = analyze(f, basis, budget=budget)
    scaled = {
        sigma: c * float(rho) ** sum(1 for s in sigma if s != 0)
        for sigma, c in expansion.coeffs.items()
    }
    coeff_route = synthesize(FourierExpansion(basis, f.n, scaled), budget=budget)
    for pos in itertools.product(pi.support_indices(), repeat=f.n):
        idx = mixed_radix_index(pos, m)
        a = float(averaged.payload["values"][idx])
        b = float(coeff_route.payload["values"][idx])
        if abs(a - b) > 1e-10:
            raise ArithmeticError(
                f"noise operator routes disagree at {pos}: {a} vs {b}"
            )
    return averaged


def projection_subset(
    f: FunctionSpec, s, pi: MarginalDistribution, n: int | None = None,
    budget: int | None = None,
) -> FunctionSpec:
    """f projected onto coordinates in s: average out every other coordinate."""
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    keep_set = set(int(c) for c in s)
    if any(not 1 <= c <= f.n for c in keep_set):
        raise ValueError("projection coordinate out of range")
    m = len(f.alphabet)
    _check_budget(m, f.n, budget)
    if f.kind != "table":
        f = to_table(f, budget=budget)
    exact = f.is_exact() and pi.exact
    values = _table_tensor(f, exact)
    probs = list(pi.probs) if exact else [float(p) for p in pi.probs]
    zero_keep: Number = Fraction(0) if exact else 0.0
    for i in range(1, f.n + 1):
        if i not in keep_set:
            values = _average_coordinate(values, m, i, probs, zero_keep)
    return FunctionSpec(f.n, f.alphabet, "table", {"values": tuple(values)})


def to_table(f: FunctionSpec, budget: int | None = None) -> FunctionSpec:
    """Materialize any representation as a dense table."""
    if f.kind == "table":
        return f
    m = len(f.alphabet)
    _check_budget(m, f.n, budget)
    values = [
        evaluate(f, mixed_radix_digits(idx, m, f.n)) for idx in range(m**f.n)
    ]
    return FunctionSpec(f.n, f.alphabet, "table", {"values": tuple(values)})


def max_operator(f: FunctionSpec, i: int, y, z, budget: int | None = None) -> FunctionSpec:
    """(M[i,y,z] f)(x) = max of f with coordinate i replaced by y and by z."""
    if f.kind != "table":
        raise ValueError("max operator requires the table representation")
    if not 1 <= i <= f.n:
        raise ValueError("coordinate out of range")
    m = len(f.alphabet)
    _check_budget(m, f.n, budget)
    yi = f.alphabet.index(y) if isinstance(y, str) else int(y)
    zi = f.alphabet.index(z) if isinstance(z, str) else int(z)
    values = f.payload["values"]
    stride = m ** (i - 1)
    out = list(values)
    for idx in range(len(values)):
        digit = (idx // stride) % m
        base = idx - digit * stride
        vy = values[base + yi * stride]
        vz = values[base + zi * stride]
        out[idx] = vy if vy >= vz else vz
    return FunctionSpec(f.n, f.alphabet, "table", {"values": tuple(out)})


# ---------------------------------------------------------------------------
# resilience


def _restriction_candidates(n: int, k: int, support, max_candidates: int | None):
    count = 0
    for size in range(0, k + 1):
        for coords in itertools.combinations(range(1, n + 1), size):
            for symbols in itertools.product(support, repeat=size):
                count += 1
                if max_candidates is not None and count > max_candidates:
                    raise BudgetExceeded(
                        f"restriction search exceeds {max_candidates} candidates"
                    )
                entries = [None] * n
                for c, s in zip(coords, symbols):
                    entries[c - 1] = s
                yield Restriction(tuple(entries))


def is_resilient(
    f: FunctionSpec, eps, k: int, pi: MarginalDistribution, n: int | None = None,
    budget: int | None = None, upper_only: bool = False,
):
    """Exhaustively test (1-eps) E[f] <= E[Rf] <= (1+eps) E[f] over |R| <= k.

    Restriction symbols range over support(pi).  Returns (True, None) or
    (False, witness) with the first violating restriction in deterministic
    order (subset lex order, then mixed-radix symbol order).
    """
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    if not 0 <= k <= f.n:
        raise ValueError("k must lie in [0, n]")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    mu = expectation(f, pi)
    lo = (1 - eps) * mu
    hi = (1 + eps) * mu
    support = pi.support_indices()
    cap = TABLE_BUDGET if budget is None else budget
    for r in _restriction_candidates(f.n, k, support, cap):
        value = expectation(restrict(f, r), pi)
        if value > hi or (not upper_only and value < lo):
            return False, r
    return True, None


def is_upper_resilient(
    f: FunctionSpec, eps, k: int, pi: MarginalDistribution, n: int | None = None,
    budget: int | None = None,
):
    """Like is_resilient but only the upper bound E[Rf] <= (1+eps) E[f]."""
    return is_resilient(f, eps, k, pi, n, budget, upper_only=True)


@dataclass(frozen=True)
class LocalVarianceCertificate:
    """Outcome of the sufficient local-variance condition for resilience."""

    passed: bool
    threshold: float
    worst_subset: tuple[int, ...]
    worst_variance: float


def resilience_from_local_variance(
    f: FunctionSpec, eps, k: int, pi: MarginalDistribution, n: int | None = None,
    budget: int | None = None,
) -> LocalVarianceCertificate:
    """Check Var[f^{subset S}] <= alpha(pi)^k (eps mu)^2 for every |S| = k.

    Passing certifies eps-resilience up to k (one-way implication).
    """
    if n is not None and n != f.n:
        raise ValueError("n disagrees with the function's coordinate count")
    support = pi.support_indices()
    a = min(pi.probs[s] for s in support)
    mu = expectation(f, pi)
    threshold = float(a) ** k * float(eps * mu) ** 2
    worst_s: tuple[int, ...] = ()
    worst_v = 0.0
    passed = True
    for coords in itertools.combinations(range(1, f.n + 1), k):
        proj = projection_subset(f, coords, pi, budget=budget)
        v = float(variance(proj, pi, budget=budget))
        if v > worst_v:
            worst_v, worst_s = v, coords
        if v > threshold + 1e-15:
            passed = False
    return LocalVarianceCertificate(passed, threshold, worst_s, worst_v)


# ---------------------------------------------------------------------------
# JSON function files


def parse_function(text: str) -> FunctionSpec:
    """Load the JSON function document format."""
    doc = json.loads(text)
    n = int(doc["n"])
    alphabet = Alphabet(tuple(str(s) for s in doc["alphabet"]))
    kind = doc["kind"]
    zero = bool(doc.get("zero", False))
    if kind == "table":
        values = []
        for v in doc["values"]:
            values.append(parse_weight(v) if isinstance(v, str) else float(v))
        exact = all(isinstance(v, Fraction) for v in values)
        if not exact:
            values = [float(v) for v in values]
        return make_table_function(n, alphabet, values)
    if kind == "anchored_symmetric":
        anchor = doc.get("anchor")
        if anchor is not None:
            anchor = (int(anchor[0]), str(anchor[1]))
        windows = {str(sym): (int(w[0]), int(w[1])) for sym, w in doc["windows"].items()}
        ignored = [int(c) for c in doc.get("ignored", [])]
        return make_anchored_symmetric(n, alphabet, windows, anchor, ignored, zero)
    if kind == "junta":
        constraints = [(int(c), str(s)) for c, s in doc["constraints"]]
        return make_junta(n, alphabet, constraints, zero)
    if kind == "mod_linear":
        symbol_map = {str(s): int(v) for s, v in doc["symbol_map"].items()}
        return make_mod_linear(
            n, alphabet, int(doc["modulus"]), [int(c) for c in doc["coeffs"]],
            int(doc["residue"]), symbol_map, zero,
        )
    raise ValueError(f"unknown function kind {kind!r}")


def format_function(f: FunctionSpec) -> str:
    """Canonical JSON rendering of a function document."""
    doc: dict = {"n": f.n, "alphabet": list(f.alphabet.symbols), "kind": f.kind}
    if f.kind == "table":
        doc["values"] = [
            str(v) if isinstance(v, Fraction) else float(v)
            for v in f.payload["values"]
        ]
    elif f.kind == "anchored_symmetric":
        pay = f.payload
        doc["anchor"] = (
            None if pay["anchor"] is None
            else [pay["anchor"][0], f.alphabet.symbols[pay["anchor"][1]]]
        )
        doc["windows"] = {
            f.alphabet.symbols[s]: list(w) for s, w in sorted(pay["windows"].items())
        }
        doc["ignored"] = sorted(pay["ignored"])
        doc["zero"] = f.zero
    elif f.kind == "junta":
        doc["constraints"] = [
            [c, f.alphabet.symbols[s]] for c, s in f.payload["constraints"]
        ]
        doc["zero"] = f.zero
    else:
        pay = f.payload
        doc["modulus"] = pay["modulus"]
        doc["coeffs"] = list(pay["coeffs"])
        doc["residue"] = pay["residue"]
        doc["symbol_map"] = {
            sym: pay["symbol_map"][i] for i, sym in enumerate(f.alphabet.symbols)
        }
        doc["zero"] = f.zero
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"
