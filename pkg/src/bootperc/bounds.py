"""Closed-form quantities: the slice-connection bound, H(r), iterated exponentials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

LOG_2_63 = 63 * math.log(2)


def threshold_constant() -> float:
    """The metastability threshold pi^2/6 of the modified model."""
    return math.pi**2 / 6


def H(chi: float, r: int) -> float:
    """Half the geometric tail sum_{s >= r-1} (2 chi)^s; ``math.inf`` once 2 chi >= 1."""
    if int(r) != r or r < 1:
        raise ValueError(f"r must be an integer >= 1, got {r}")
    if chi < 0:
        raise ValueError(f"chi must be non-negative, got {chi}")
    q = 2.0 * chi
    if q >= 1.0:
        return math.inf
    return q ** (r - 1) / (2.0 * (1.0 - q))


@dataclass(frozen=True)
class BoundInputs:
    ell: int
    m: int
    d: int
    F_hat: float
    chi_hat: float

    def __post_init__(self) -> None:
        if self.ell < 0 or self.m < 1:
            raise ValueError("need ell >= 0 and m >= 1")
        if self.ell > self.m:
            raise ValueError(f"ell = {self.ell} exceeds the cube side m = {self.m}")
        if self.d < 3:
            raise ValueError(f"the slice bound is stated for d >= 3, got d = {self.d}")
        if not 0.0 <= self.F_hat <= 1.0:
            raise ValueError(f"F_hat must be a probability, got {self.F_hat}")
        if self.chi_hat < 0:
            raise ValueError(f"chi_hat must be non-negative, got {self.chi_hat}")


@dataclass
class BoundValue:
    value: float  # clamped to [0, 1]; inf when divergent
    raw: float  # unclamped sum
    divergent: bool
    terms_by_k: list[float] = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return self.divergent or self.value >= 1.0


def _parts(inp: BoundInputs):
    vol = inp.m ** (inp.d - 1)

    def h(r: int) -> float:
        return H(inp.chi_hat, r)

    def g(r: int) -> float:
        return inp.F_hat * min(1.0, vol * h(r))

    def head(i: int) -> float:
        return h(i + 1) + math.fsum(g(i + a) for a in range(inp.m + 1))

    return g, head


def slice_bound(inp: BoundInputs) -> BoundValue:
    """Upper bound on the crossing probability f_m^d(x, y) with ||x - y|| = ell.

    The sum over chains 0 < i_1 < ... < i_k < i_{k+1} = ell + 1 of
    head(i_1) * prod_j g(i_{j+1} - i_j) is evaluated by a backward recursion
    D(i) = sum_{i' > i} g(i' - i) D(i'), D(ell + 1) = 1, carrying the number
    of gaps so the per-k breakdown comes out too.
    """
    if 2.0 * inp.chi_hat >= 1.0:
        return BoundValue(math.inf, math.inf, True)
    g, head = _parts(inp)
    top = inp.ell + 1
    gaps = [0.0] + [g(r) for r in range(1, top + 1)]
    # D[i][k]: weight of chains from i to ell+1 using exactly k gaps
    D = [[0.0] * (top + 1) for _ in range(top + 1)]
    D[top][0] = 1.0
    for i in range(top - 1, 0, -1):
        for k in range(1, top - i + 1):
            D[i][k] = math.fsum(gaps[j - i] * D[j][k - 1] for j in range(i + 1, top + 1))
    terms = [math.fsum(head(i) * D[i][k] for i in range(1, top + 1)) for k in range(top)]
    raw = math.fsum(terms)
    return BoundValue(min(1.0, raw), raw, False, terms)


def slice_bound_enumerated(inp: BoundInputs) -> float:
    """The same bound summed chain by chain (2^ell chains); unclamped."""
    if 2.0 * inp.chi_hat >= 1.0:
        return math.inf
    g, head = _parts(inp)
    top = inp.ell + 1
    total = []
    for k in range(inp.ell + 1):
        for chain in combinations(range(1, top), k):
            idx = list(chain) + [top]
            term = head(idx[0])
            for a, b in zip(idx, idx[1:]):
                term *= g(b - a)
            total.append(term)
    return math.fsum(total)


def exact_I1(L: int, p: float) -> float:
    """Spanning probability of a line of L sites: any occupied site fills it."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return -math.expm1(L * math.log1p(-p)) if p < 1 else 1.0


@dataclass(frozen=True)
class IterExp:
    """exp applied ``n`` times.  Values above 2^63 are reported only through log2."""

    n: int
    x: float
    value: float | None
    log2: float
    saturated: bool

    def __str__(self) -> str:
        if not self.saturated:
            return repr(self.value)
        return f"2^{self.log2:.6g}" if math.isfinite(self.log2) else "exceeds 2^(2^1024)"


def iter_exp(n: int, x: float) -> IterExp:
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    y = float(x)
    for i in range(n):
        if y > LOG_2_63:
            # exp^(n-i)(y) > 2^63: remaining levels only through log2
            log_val = y  # natural log of exp(y)
            for _ in range(n - i - 1):
                log_val = math.exp(log_val) if log_val < 709 else math.inf
            return IterExp(n, x, None, log_val / math.log(2), True)
        y = math.exp(y)
    if y > 2.0**63:
        return IterExp(n, x, None, math.log2(y), True)
    return IterExp(n, x, y, math.log2(y) if y > 0 else -math.inf, False)
