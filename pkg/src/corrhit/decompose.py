"""Cycle machinery for two-step distributions.

A two-step distribution with equal marginals and positive diagonal mass splits
into a convex mixture of well-behaved parts: point masses on diagonal pairs
plus cycle distributions whose correlation is bounded away from 1.  The split
follows a deterministic trace: subtract the diagonal floor, decompose the
remaining regular digraph into weighted cycles, then cap each cycle's diagonal
share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._util import Number
from .dist_core import (
    Alphabet,
    MarginalDistribution,
    StepDistribution,
    alpha,
    equal_marginals,
    marginal,
    rho,
)


@dataclass(frozen=True)
class WeightedDigraph:
    """Directed graph over an alphabet with non-negative rational edge weights."""

    alphabet: Alphabet
    weights: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        m = len(self.alphabet)
        if len(self.weights) != m or any(len(r) != m for r in self.weights):
            raise ValueError("weight table must be square over the alphabet")
        for row in self.weights:
            for w in row:
                if not isinstance(w, Fraction) or w < 0:
                    raise ValueError("weights must be non-negative rationals")

    def is_regular(self) -> bool:
        """In-weight equals out-weight at every vertex, exactly."""
        m = len(self.alphabet)
        for v in range(m):
            out_w = sum((self.weights[v][u] for u in range(m)), Fraction(0))
            in_w = sum((self.weights[u][v] for u in range(m)), Fraction(0))
            if out_w != in_w:
                return False
        return True


@dataclass(frozen=True)
class WeightedCycle:
    """Directed cycle with pairwise distinct vertices and a uniform edge weight."""

    vertices: tuple[int, ...]
    weight: Fraction

    def __post_init__(self):
        if len(self.vertices) < 1:
            raise ValueError("cycle needs at least one vertex")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("cycle vertices must be distinct")
        if not isinstance(self.weight, Fraction) or self.weight <= 0:
            raise ValueError("cycle weight must be a positive rational")

    def edges(self):
        s = len(self.vertices)
        for i in range(s):
            yield self.vertices[i], self.vertices[(i + 1) % s]


@dataclass(frozen=True)
class CycleDistribution:
    """Parameters of an (s, p)-cycle: diagonal mass p/s, forward edges (1-p)/s."""

    s: int
    p: Fraction
    vertices: tuple[str, ...]

    def __post_init__(self):
        if self.s < 2 or len(self.vertices) != self.s:
            raise ValueError("cycle distribution needs s >= 2 matching vertices")
        if len(set(self.vertices)) != self.s:
            raise ValueError("duplicate vertices")
        if not 0 < self.p < 1:
            raise ValueError("p must lie strictly between 0 and 1")


@dataclass(frozen=True)
class DecompositionPart:
    """One mixture component: a point mass on a diagonal pair or a cycle part."""

    weight: Fraction
    dist: StepDistribution
    kind: str  # "cycle" or "point"
    cycle: CycleDistribution | None = None

    def __post_init__(self):
        if self.kind not in ("cycle", "point"):
            raise ValueError("kind must be 'cycle' or 'point'")
        if self.weight <= 0:
            raise ValueError("part weight must be positive")


@dataclass(frozen=True)
class ConvexDecomposition:
    """Mixture of parts whose weighted sum reproduces the base distribution."""

    base: StepDistribution
    parts: tuple[DecompositionPart, ...]

    def __post_init__(self):
        total = sum((p.weight for p in self.parts), Fraction(0))
        if total != 1:
            raise ValueError(f"part weights sum to {total}, expected 1")

    def reconstruct(self) -> tuple[Fraction, ...]:
        """Entrywise weighted sum of the parts, exact."""
        acc = [Fraction(0)] * len(self.base.weights)
        for part in self.parts:
            for i, w in enumerate(part.dist.weights):
                acc[i] += part.weight * w
        return tuple(acc)


# ---------------------------------------------------------------------------
# digraph cycle decomposition


def digraph_cycle_decomposition(g: WeightedDigraph) -> list[WeightedCycle]:
    """Split a regular digraph into at most |alphabet|^2 weighted cycles.

    Walk rule: start at the smallest vertex with positive out-weight, always
    follow the smallest-index positive out-edge; the first repeated vertex
    closes a cycle, which is removed at the minimum edge weight along it.
    Each extraction zeroes at least one edge, so the loop terminates.
    """
    if not g.is_regular():
        raise ValueError("digraph is not regular")
    m = len(g.alphabet)
    residual = [list(row) for row in g.weights]
    cycles: list[WeightedCycle] = []

    def first_out(v: int) -> int | None:
        for u in range(m):
            if residual[v][u] > 0:
                return u
        return None

    while True:
        start = None
        for v in range(m):
            if first_out(v) is not None:
                start = v
                break
        if start is None:
            break
        path = [start]
        seen = {start: 0}
        cur = start
        while True:
            nxt = first_out(cur)
            assert nxt is not None, "regularity guarantees an out-edge"
            if nxt in seen:
                cyc = tuple(path[seen[nxt] :])
                break
            seen[nxt] = len(path)
            path.append(nxt)
            cur = nxt
        s = len(cyc)
        w = min(residual[cyc[i]][cyc[(i + 1) % s]] for i in range(s))
        for i in range(s):
            residual[cyc[i]][cyc[(i + 1) % s]] -= w
        cycles.append(WeightedCycle(cyc, w))
        assert len(cycles) <= m * m, "cycle count exceeded the square bound"
    return cycles


# ---------------------------------------------------------------------------
# (s, p)-cycle distributions


def make_cycle(s: int, p, vertices=None) -> StepDistribution:
    """Two-step (s, p)-cycle distribution: P(x,x) = p/s, P(x, x+1 mod s) = (1-p)/s."""
    if s < 2:
        raise ValueError("cycle size must be at least 2")
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    if vertices is None:
        vertices = tuple(str(i) for i in range(s))
    vertices = tuple(vertices)
    if len(vertices) != s or len(set(vertices)) != s:
        raise ValueError("need s distinct vertices")
    alphabet = Alphabet(vertices)
    exact = isinstance(p, (Fraction, int))
    pv: Number = Fraction(p) if exact else float(p)
    zero: Number = Fraction(0) if exact else 0.0
    m = s
    weights = [zero] * (m * m)
    # mixed-radix: step 1 least significant, so pair (x, y) sits at x + m * y
    for x in range(s):
        weights[x + m * x] = pv / s
        weights[x + m * ((x + 1) % s)] = (1 - pv) / s
    return StepDistribution(alphabet, 2, tuple(weights), exact)


def cycle_rho(s: int, p) -> tuple[float, float]:
    """Correlation of the (s, p)-cycle and its closed-form upper bound.

    The double-sample kernel of the cycle is circulant with eigenvalues
    lambda_k = 1 - 2p(1-p)(1 - cos(2 pi k / s)); the correlation is the square
    root of the largest one with k > 0.  Returns (rho, 1 - 7p(1-p)/s^2), and
    rho never exceeds the bound.
    """
    if s < 2:
        raise ValueError("cycle size must be at least 2")
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    pf = float(p)
    lam = max(
        1.0 - 2.0 * pf * (1.0 - pf) * (1.0 - math.cos(2.0 * math.pi * k / s))
        for k in range(1, s)
    )
    r = math.sqrt(max(lam, 0.0))
    bound = 1.0 - 7.0 * pf * (1.0 - pf) / (s * s)
    assert r <= bound + 1e-12, f"cycle correlation {r} exceeds bound {bound}"
    return r, bound


# ---------------------------------------------------------------------------
# convex decomposition


def _point_mass_part(base: StepDistribution, x: int, weight: Fraction) -> DecompositionPart:
    m = len(base.alphabet)
    weights = [Fraction(0)] * (m * m)
    weights[x + m * x] = Fraction(1)
    dist = StepDistribution(base.alphabet, 2, tuple(weights), True)
    return DecompositionPart(weight, dist, "point")


def _cycle_part(
    base: StepDistribution, cyc: WeightedCycle, p: Fraction, weight: Fraction
) -> DecompositionPart:
    m = len(base.alphabet)
    s = len(cyc.vertices)
    weights = [Fraction(0)] * (m * m)
    for i in range(s):
        x = cyc.vertices[i]
        y = cyc.vertices[(i + 1) % s]
        weights[x + m * x] += p / s
        weights[x + m * y] += (1 - p) / s
    dist = StepDistribution(base.alphabet, 2, tuple(weights), True)
    info = CycleDistribution(s, p, tuple(base.alphabet.symbols[v] for v in cyc.vertices))
    return DecompositionPart(weight, dist, "cycle", cycle=info)


def convex_cycle_decomposition(p: StepDistribution) -> ConvexDecomposition:
    """Split a two-step equal-marginal distribution into cycle and point parts.

    Trace: let a = alpha(P) and t = |alphabet|.  P - a*Id is a regular digraph;
    decompose it into cycles.  Each cycle of weight w and length >= 2 becomes an
    (s, q)-cycle part with diagonal share b = min(w, a/t^2), q = b/(b+w), and
    mixture weight s*(w+b).  Self-loop cycles and the unused diagonal mass
    become point-mass parts.  The weighted parts re-sum to P exactly.
    """
    if p.steps != 2:
        raise ValueError("decomposition requires exactly 2 steps")
    if not p.exact:
        raise ValueError("decomposition requires rational weights")
    if not equal_marginals(p):
        raise ValueError("decomposition requires equal marginals")
    a = alpha(p)
    if a <= 0:
        raise ValueError("decomposition requires positive diagonal mass")
    m = len(p.alphabet)
    t2 = Fraction(m * m)
    graph_weights = [
        [p.weight((x, y)) - (a if x == y else 0) for y in range(m)] for x in range(m)
    ]
    graph = WeightedDigraph(p.alphabet, tuple(tuple(r) for r in graph_weights))
    cycles = digraph_cycle_decomposition(graph)

    parts: list[DecompositionPart] = []
    diagonal_used = [Fraction(0)] * m
    for cyc in cycles:
        if len(cyc.vertices) == 1:
            # self-loop: pure diagonal weight, absorbed by the point mass below
            continue
        b = min(cyc.weight, a / t2)
        q = b / (b + cyc.weight)
        beta_k = len(cyc.vertices) * (cyc.weight + b)
        parts.append(_cycle_part(p, cyc, q, beta_k))
        for v in cyc.vertices:
            diagonal_used[v] += b
    for x in range(m):
        leftover = p.weight((x, x)) - diagonal_used[x]
        assert leftover >= 0, "diagonal over-used by cycle parts"
        if leftover > 0:
            parts.append(_point_mass_part(p, x, leftover))
    return ConvexDecomposition(p, tuple(parts))


@dataclass(frozen=True)
class PartGuarantee:
    """Bounds check for one decomposition part."""

    kind: str
    weight: Fraction
    support_alpha: Fraction
    part_rho: float
    rho_defined: bool
    alpha_ok: bool
    rho_ok: bool


@dataclass(frozen=True)
class GuaranteeReport:
    alpha_base: Fraction
    alpha_floor: Fraction
    rho_ceiling: float
    parts: tuple[PartGuarantee, ...]
    all_ok: bool


def _support_alpha(d: StepDistribution) -> Fraction:
    """Diagonal floor over the distribution's own marginal support."""
    support = set(marginal(d, 1).support_indices()) | set(
        marginal(d, 2).support_indices()
    )
    return min(d.weight((x, x)) for x in sorted(support))


def decomposition_guarantees(
    dec: ConvexDecomposition, p: StepDistribution
) -> GuaranteeReport:
    """Verify alpha(P_k) >= alpha(P)^4 and rho(P_k) <= 1 - 3 alpha(P)^5 per part.

    alpha of a part is taken over its own support; point masses have no
    variance-1 functions, so their correlation is reported as 0 and exempted
    from the ceiling (rho_defined records the convention).
    """
    a = alpha(p)
    floor = a**4
    ceiling = 1.0 - 3.0 * float(a) ** 5
    rows = []
    ok = True
    for part in dec.parts:
        sa = _support_alpha(part.dist)
        if part.kind == "point":
            pr, defined = 0.0, False
            rho_ok = True
        else:
            pr, defined = rho(part.dist), True
            rho_ok = pr <= ceiling + 1e-12
        alpha_ok = sa >= floor
        ok = ok and alpha_ok and rho_ok
        rows.append(
            PartGuarantee(part.kind, part.weight, sa, pr, defined, alpha_ok, rho_ok)
        )
    return GuaranteeReport(a, floor, ceiling, tuple(rows), ok)
