import math

import numpy as np
import pytest
from conftest import all_grids, flood_fill_labels, linf_diameter, naive_close
from scipy.optimize import brentq

from bootperc.dynamics import Rule, exact_spanning_probability
from bootperc.lattice import Region, make_region
from bootperc.montecarlo import (
    ConvergenceError,
    TrialPlan,
    bisect_p_alpha,
    bound_vs_estimate,
    estimate_chi,
    estimate_f,
    estimate_F,
    estimate_I,
    log_scale,
    search_p_alpha,
    sweep_scaling,
    wilson_interval,
)

MOD, STD = Rule.modified(), Rule.standard()


def within(est, truth, k=3.0):
    sd = math.sqrt(max(truth * (1 - truth), 1e-12) / est.trials)
    return abs(est.point - truth) <= k * sd


def exact_expectation(shape, p, observable):
    grids = all_grids(shape)
    k = grids.reshape(len(grids), -1).sum(axis=1)
    vol = grids[0].size
    w = p**k * (1 - p) ** (vol - k)
    return float(sum(wi * observable(g) for wi, g in zip(w, grids)))


@pytest.mark.parametrize("rule", [MOD, STD])
@pytest.mark.parametrize("region", [make_region(2, 2, 3), make_region(2, 2, 4), make_region(3, 3, 2),
                                    Region(2, (2, 5), (0, 0), (0, 1)), make_region(1, 1, 16)])
@pytest.mark.parametrize("p", [0.2, 0.5])
def test_I_matches_enumeration(rule, region, p):
    est = estimate_I(TrialPlan(rule, region, p, 4000, 31))
    assert within(est, exact_spanning_probability(rule, region, p))


def test_I_extremes():
    r = make_region(2, 2, 5)
    assert estimate_I(TrialPlan(MOD, r, 1.0, 50, 1)).point == 1.0
    assert estimate_I(TrialPlan(MOD, r, 0.0, 50, 1)).point == 0.0
    with pytest.raises(ValueError):
        TrialPlan(MOD, r, 0.5, 0, 1)


def test_f_single_site_is_p():
    est = estimate_f(TrialPlan(MOD, make_region(3, 3, 1), 0.3, 5000, 2), (1, 1, 1), (1, 1, 1))
    assert within(est, 0.3)
    assert estimate_f(TrialPlan(MOD, make_region(3, 3, 3), 0.0, 100, 2), (1, 1, 1), (3, 3, 3)).point == 0.0


@pytest.mark.parametrize("L,x,y", [(2, (0, 0), (1, 1)), (3, (0, 0), (0, 0)), (3, (0, 0), (2, 1)), (3, (1, 1), (1, 1))])
def test_f_matches_enumeration(L, x, y):
    p = 0.35

    def crossing(g):
        return any(x in c and y in c for c in flood_fill_labels(naive_close(g, False, 2)))

    truth = exact_expectation((L, L), p, crossing)
    est = estimate_f(TrialPlan(MOD, make_region(2, 2, L), p, 4000, 3), tuple(c + 1 for c in x),
                     tuple(c + 1 for c in y))
    assert within(est, truth)
    if x == y:
        assert truth >= p


def test_chi_matches_enumeration():
    p = 0.3

    def centre_volume(g):
        for c in flood_fill_labels(naive_close(g, False, 2)):
            if (1, 1) in c:
                return len(c)
        return 0

    truth = exact_expectation((3, 3), p, centre_volume)
    est = estimate_chi(MOD, 2, 1, p, 20000, 4)
    assert abs(est.point - truth) <= 3 * est.std_err
    assert est.ci_low <= est.point <= est.ci_high


def test_chi_trivial():
    assert estimate_chi(MOD, 2, 1, 1.0, 20, 1).point == 9.0
    est = estimate_chi(MOD, 3, 0, 0.4, 5000, 1)
    assert within(est, 0.4)


def test_F_cases():
    p, m = 0.05, 4
    est = estimate_F(MOD, 2, m, 0, p, 5000, 6)
    assert within(est, 1 - (1 - p) ** (m * m))
    assert estimate_F(MOD, 2, m, 2, 0.0, 100, 6).point == 0.0
    assert estimate_F(MOD, 2, m, m, 1.0, 100, 6).point == 0.0
    with pytest.raises(ValueError):
        estimate_F(MOD, 2, 3, 4, 0.5, 10, 6)


def test_F_matches_enumeration():
    p = 0.3

    def big(g):
        return any(linf_diameter(c) >= 2 for c in flood_fill_labels(naive_close(g, False, 2)))

    truth = exact_expectation((3, 3), p, big)
    assert within(estimate_F(MOD, 2, 3, 2, p, 5000, 8), truth)


def test_wilson_interval_properties():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0 and lo > 0.95
    w1 = np.subtract(*wilson_interval(50, 100)[::-1])
    w2 = np.subtract(*wilson_interval(5000, 10000)[::-1])
    assert w2 < w1 / 5


def test_wilson_coverage():
    region = make_region(2, 2, 3)
    truth = exact_spanning_probability(MOD, region, 0.4)
    hits = sum(estimate_I(TrialPlan(MOD, region, 0.4, 300, 1000 + k)).contains(truth) for k in range(200))
    assert hits >= 186


def test_estimates_independent_of_threads():
    plan = TrialPlan(MOD, make_region(2, 2, 12), 0.2, 400, 99)
    a = estimate_I(plan, threads=1)
    b = estimate_I(plan, threads=4)
    assert a == b
    assert estimate_chi(MOD, 2, 3, 0.2, 300, 5, threads=1) == estimate_chi(MOD, 2, 3, 0.2, 300, 5, threads=3)


def test_monotone_in_p_with_common_seed():
    r = make_region(2, 2, 16)
    pts = [estimate_I(TrialPlan(MOD, r, p, 300, 12)).point for p in np.linspace(0.05, 0.5, 10)]
    assert all(a <= b for a, b in zip(pts, pts[1:]))


def test_bisect_line():
    p = bisect_p_alpha(MOD, make_region(1, 1, 10), 0.5, 1e-3, 4000, 21)
    assert p == pytest.approx(1 - 0.5**0.1, abs=0.01)


def test_bisect_square():
    def poly(p):
        return 2 * p**2 * (1 - p) ** 2 + 4 * p**3 * (1 - p) + p**4 - 0.5

    root = brentq(poly, 0.01, 0.99)
    assert exact_spanning_probability(MOD, make_region(2, 2, 2), root) == pytest.approx(0.5, abs=1e-12)
    p = bisect_p_alpha(MOD, make_region(2, 2, 2), 0.5, 1e-3, 4000, 22)
    assert p == pytest.approx(root, abs=0.015)


def test_bisect_errors():
    r = make_region(1, 1, 10)
    with pytest.raises(ValueError):
        bisect_p_alpha(MOD, r, 0.5, 0.0, 100, 1)
    with pytest.raises(ValueError):
        bisect_p_alpha(MOD, r, 1.0, 0.01, 100, 1)
    with pytest.raises(ConvergenceError):
        search_p_alpha(MOD, r, 0.5, 1e-6, 100, 1, max_iter=5)


def test_log_scale():
    assert log_scale(1, 10) == 10
    assert log_scale(2, 100) == pytest.approx(math.log(100))
    assert log_scale(3, 1000) == pytest.approx(math.log(math.log(1000)))
    with pytest.raises(ValueError):
        log_scale(3, 2)


def test_sweep_one_dimension():
    pts = sweep_scaling(MOD, 1, [8, 16], trials=2000, seed=4, tol=1e-3)
    for pt in pts:
        assert (1 - pt.p_half) ** pt.L == pytest.approx(0.5, abs=0.05)
        assert 0 < pt.p_half < 1 and pt.width > 0
        assert pt.scaled == pytest.approx(pt.p_half * pt.L)


def test_sweep_volume_cap():
    with pytest.raises(ValueError):
        sweep_scaling(MOD, 3, [2048], trials=10)


def test_bound_report_trivial():
    r = bound_vs_estimate(4, 2, 0.0, (1, 1, 1), (4, 1, 1), 200, 1)
    # the bound collapses to 0 at p = 0; the point estimate meets it, a Wilson upper limit cannot
    assert r.f.point == 0.0 <= r.bound.value and not r.divergent
    r = bound_vs_estimate(4, 2, 0.6, (1, 1, 1), (4, 1, 1), 200, 1)
    assert r.divergent and r.vacuous and r.holds
    with pytest.raises(ValueError):
        bound_vs_estimate(4, 2, 0.1, (1, 1, 1), (4, 1, 1), 10, 1, rule=STD)
