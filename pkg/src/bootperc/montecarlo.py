"""Seeded trial harness, interval estimates, threshold search and scaling sweeps.

Trial ``i`` of a plan draws its configuration from ``RngStream(seed, i)``, and
per-trial results are reduced in trial order, so estimates do not depend on
the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, stats

from .bounds import BoundInputs, BoundValue, slice_bound
from .dynamics import Rule, close_flat
from .lattice import Region, RngStream, make_region, random_occupancy

Z95 = float(stats.norm.ppf(0.975))
MAX_SWEEP_VOLUME = 1 << 30


@dataclass(frozen=True)
class TrialPlan:
    rule: Rule
    region: Region
    p: float
    trials: int
    master_seed: int

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class Estimate:
    point: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    std_err: float

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("need at least one trial")
    phat = successes / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # clip round-off so the point estimate always lies inside
    return min(phat, max(0.0, centre - half)), max(phat, min(1.0, centre + half))


def proportion_estimate(hits: np.ndarray, seed: int) -> Estimate:
    n = int(hits.size)
    k = int(np.count_nonzero(hits))
    lo, hi = wilson_interval(k, n)
    phat = k / n
    return Estimate(phat, lo, hi, n, seed, math.sqrt(phat * (1 - phat) / n))


def mean_estimate(values: np.ndarray, seed: int) -> Estimate:
    n = int(values.size)
    mean = float(np.mean(values))
    if n < 2:
        return Estimate(mean, -math.inf, math.inf, n, seed, math.inf)
    se = float(np.std(values, ddof=1)) / math.sqrt(n)
    q = float(stats.t.ppf(0.975, n - 1))
    return Estimate(mean, mean - q * se, mean + q * se, n, seed, se)


def _default_threads(threads: int | None) -> int:
    return max(1, threads if threads is not None else (os.cpu_count() or 1))


def run_trials(
    plan: TrialPlan,
    observable: Callable[[np.ndarray], float],
    threads: int | None = None,
    start: int = 0,
) -> np.ndarray:
    """Evaluate ``observable`` on the closure-ready occupancy of trials
    ``start .. start + plan.trials - 1``; results are ordered by trial index."""

    def one(i: int) -> float:
        occ = random_occupancy(plan.region, plan.p, RngStream(plan.master_seed, i))
        return observable(occ)

    idx = range(start, start + plan.trials)
    workers = _default_threads(threads)
    if workers == 1:
        return np.array([one(i) for i in idx], dtype=np.float64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.fromiter(pool.map(one, idx), dtype=np.float64, count=plan.trials)


# --- observables ---------------------------------------------------------------------


def _closed(rule: Rule, region: Region, occ: np.ndarray) -> np.ndarray:
    close_flat(rule, region, occ)
    return occ


def _spans(rule: Rule, region: Region) -> Callable[[np.ndarray], float]:
    return lambda occ: float(_closed(rule, region, occ).all())


def _labels(region: Region, occ: np.ndarray) -> np.ndarray:
    return ndimage.label(occ.reshape(region.shape))[0]


def estimate_I(plan: TrialPlan, threads: int | None = None) -> Estimate:
    """Fraction of trials in which the region is internally spanned."""
    hits = run_trials(plan, _spans(plan.rule, plan.region), threads)
    return proportion_estimate(hits, plan.master_seed)


def estimate_f(plan: TrialPlan, x: Sequence[int], y: Sequence[int], threads: int | None = None) -> Estimate:
    """Fraction of trials in which x and y share a component of the closure."""
    region = plan.region
    for s in (x, y):
        if s not in region:
            raise ValueError(f"site {tuple(s)} is outside the region")
    lx, ly = region.local(x), region.local(y)

    def obs(occ: np.ndarray) -> float:
        closed = _closed(plan.rule, region, occ).reshape(region.shape)
        if not closed[lx] or not closed[ly]:
            return 0.0
        if lx == ly:
            return 1.0
        lab = ndimage.label(closed)[0]
        return float(lab[lx] == lab[ly])

    return proportion_estimate(run_trials(plan, obs, threads), plan.master_seed)


def estimate_chi(
    rule: Rule, delta: int, n: int, p: float, trials: int, seed: int, threads: int | None = None
) -> Estimate:
    """Mean volume of the closure's component at the centre of Q^delta(2n+1)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    region = make_region(delta, delta, 2 * n + 1)
    centre = (n,) * delta

    def obs(occ: np.ndarray) -> float:
        closed = _closed(rule, region, occ).reshape(region.shape)
        if not closed[centre]:
            return 0.0
        lab = ndimage.label(closed)[0]
        return float(np.count_nonzero(lab == lab[centre]))

    plan = TrialPlan(rule, region, p, trials, seed)
    return mean_estimate(run_trials(plan, obs, threads), seed)


def _max_component_diameter(closed: np.ndarray) -> int:
    lab, k = ndimage.label(closed)
    if k == 0:
        return -1
    return max(max(s.stop - s.start for s in box) - 1 for box in ndimage.find_objects(lab))


def estimate_F(
    rule: Rule, delta: int, m: int, n: int, p: float, trials: int, seed: int, threads: int | None = None
) -> Estimate:
    """Fraction of trials whose closure on Q^delta(m) has a component of diameter >= n."""
    if n > m:
        raise ValueError(f"need n <= m, got n={n}, m={m}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    region = make_region(delta, delta, m)

    def obs(occ: np.ndarray) -> float:
        closed = _closed(rule, region, occ).reshape(region.shape)
        return float(_max_component_diameter(closed) >= n)

    plan = TrialPlan(rule, region, p, trials, seed)
    return proportion_estimate(run_trials(plan, obs, threads), seed)


# --- threshold search ----------------------------------------------------------------


class ConvergenceError(RuntimeError):
    pass


@dataclass
class ThresholdSearch:
    alpha: float
    p: float
    lo: float
    hi: float
    probes: list[tuple[float, Estimate]] = field(default_factory=list)

    @property
    def last_trials(self) -> int:
        return self.probes[-1][1].trials if self.probes else 0


def search_p_alpha(
    rule: Rule,
    region: Region,
    alpha: float,
    tol: float,
    trials_per_probe: int,
    seed: int,
    *,
    max_iter: int = 64,
    max_doublings: int = 2,
    threads: int | None = None,
    cache: dict | None = None,
) -> ThresholdSearch:
    """Bisection for the p at which the spanning probability equals ``alpha``.

    Every probe reuses the same seed, so the estimated spanning curve is a
    monotone step function of p.  When a probe's interval contains alpha the
    probe is repeated with twice the trials, at most ``max_doublings`` times,
    before the point estimate decides the side.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if trials_per_probe < 1:
        raise ValueError("trials_per_probe must be positive")
    cache = {} if cache is None else cache

    def probe(p: float, trials: int) -> Estimate:
        key = (p, trials)
        if key not in cache:
            cache[key] = estimate_I(TrialPlan(rule, region, p, trials, seed), threads)
        return cache[key]

    lo, hi = 0.0, 1.0
    out = ThresholdSearch(alpha, 0.5, lo, hi)
    for _ in range(max_iter):
        if hi - lo <= tol:
            out.p, out.lo, out.hi = 0.5 * (lo + hi), lo, hi
            return out
        mid = 0.5 * (lo + hi)
        trials = trials_per_probe
        est = probe(mid, trials)
        for _ in range(max_doublings):
            if not est.contains(alpha):
                break
            trials *= 2
            est = probe(mid, trials)
        out.probes.append((mid, est))
        if est.point < alpha:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection for alpha={alpha} did not reach width {tol} in {max_iter} probes; "
        f"bracket [{lo!r}, {hi!r}], last probe {out.probes[-1] if out.probes else None}"
    )


def bisect_p_alpha(
    rule: Rule, region: Region, alpha: float, tol: float, trials_per_probe: int, seed: int, **kwargs
) -> float:
    return search_p_alpha(rule, region, alpha, tol, trials_per_probe, seed, **kwargs).p


# --- scaling ---------------------------------------------------------------------------


def log_scale(d: int, L: int) -> float:
    """log^{d-1} L, the (d-1)-fold iterated natural log (L itself for d = 1)."""
    v = float(L)
    for _ in range(d - 1):
        if v <= 1.0:
            raise ValueError(f"L={L} too small for a {d - 1}-fold logarithm")
        v = math.log(v)
    return v


@dataclass
class ScalingPoint:
    L: int
    p_half: float
    scaled: float
    width: float
    p_levels: dict[float, float]
    p_half_se: float
    trials: int

    @property
    def relative_width(self) -> float:
        return self.width / self.p_half


def sweep_scaling(
    rule: Rule,
    d: int,
    L_list: Sequence[int],
    alpha_levels: Sequence[float] = (0.1, 0.9),
    trials: int = 200,
    seed: int = 0,
    tol: float | None = None,
    threads: int | None = None,
    progress: Callable[[str], None] | None = None,
) -> list[ScalingPoint]:
    """p_{1/2}(L), p_{1/2} log^{d-1} L and the width p_{hi} - p_{lo} for each L.

    ``alpha_levels`` are the two sharpness levels (eps, 1 - eps).  The standard
    error of p_{1/2} is propagated from the probe count through the slope
    (hi - lo) / (p_hi - p_lo) of the spanning curve.
    """
    if len(alpha_levels) != 2 or not 0 < alpha_levels[0] < 0.5 < alpha_levels[1] < 1:
        raise ValueError(f"alpha_levels must be (eps, 1 - eps) around 1/2, got {alpha_levels}")
    points = []
    for L in L_list:
        if L**d > MAX_SWEEP_VOLUME:
            raise ValueError(f"L={L} in d={d} exceeds the volume cap of 2^30 sites")
        region = make_region(d, d, L)
        scale = log_scale(d, L)
        step = tol if tol is not None else 0.002 / scale
        cache: dict = {}
        levels = {}
        searches = {}
        for a in (0.5, *alpha_levels):
            s = search_p_alpha(rule, region, a, step, trials, seed, threads=threads, cache=cache)
            searches[a] = s
            levels[a] = s.p
            if progress:
                progress(f"L={L} alpha={a} p={s.p:.6g}")
        lo_a, hi_a = alpha_levels
        width = levels[hi_a] - levels[lo_a]
        slope = (hi_a - lo_a) / width if width > 0 else math.inf
        n = searches[0.5].last_trials
        se = math.sqrt(0.25 / n) / slope
        p_half = levels[0.5]
        points.append(ScalingPoint(L, p_half, p_half * scale, width, levels, se, n))
    return points


# --- bound vs estimate -------------------------------------------------------------------


@dataclass
class BoundReport:
    m: int
    n: int
    p: float
    x: tuple[int, ...]
    y: tuple[int, ...]
    ell: int
    F: Estimate
    chi: Estimate
    f: Estimate
    bound: BoundValue
    bound_upper: BoundValue

    @property
    def divergent(self) -> bool:
        return self.bound.divergent

    @property
    def vacuous(self) -> bool:
        return self.bound.vacuous

    @property
    def holds(self) -> bool:
        """Upper confidence limit of f is at most the bound evaluated at the point estimates."""
        return self.vacuous or self.f.ci_high <= self.bound.value


def bound_vs_estimate(
    m: int,
    n: int,
    p: float,
    x: Sequence[int],
    y: Sequence[int],
    trials: int,
    seed: int,
    d: int = 3,
    rule: Rule | None = None,
    threads: int | None = None,
) -> BoundReport:
    """Estimate F_{m,n}^{d-1}, chi_n^{d-1} and f_m^d(x, y); evaluate the slice bound.

    ``bound`` uses the point estimates of F and chi; ``bound_upper`` uses their
    upper confidence limits (the bound is nondecreasing in both).  The three
    estimators draw from distinct seeds derived from ``seed``.
    """
    rule = rule or Rule.modified()
    if rule.is_standard:
        raise ValueError("the slice bound is established for the modified rule only")
    if d < 3:
        raise ValueError(f"need d >= 3, got {d}")
    x, y = tuple(x), tuple(y)
    ell = max(abs(a - b) for a, b in zip(x, y))
    seeds = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
    F = estimate_F(rule, d - 1, m, n, p, trials, int(seeds[0]), threads)
    chi = estimate_chi(rule, d - 1, n, p, trials, int(seeds[1]), threads)
    region = make_region(d, d, m)
    f = estimate_f(TrialPlan(rule, region, p, trials, int(seeds[2])), x, y, threads)
    bound = slice_bound(BoundInputs(ell, m, d, F.point, chi.point))
    upper = slice_bound(BoundInputs(ell, m, d, F.ci_high, max(0.0, chi.ci_high)))
    return BoundReport(m, n, p, x, y, ell, F, chi, f, bound, upper)
