import math

import numpy as np
import pytest

from cocyclelab.potentials import make_builtin
from cocyclelab.core import SystemParams, orbit_trace, typical_orbit
from cocyclelab.lyapunov import (
    SCAN_COLUMNS,
    Regime,
    estimate_lyapunov,
    product_inequality_check,
    regime_classify,
    rows_to_csv,
    small_slope_pairs,
    sweep_energy,
)

GOLDEN_HEADER = "energy,estimate,std_error,regime,threshold_quarter_log_lambda,n_steps,n_samples,seed"


@pytest.mark.parametrize(
    "energy,expected",
    [(60, Regime.LARGE_ENERGY), (0, Regime.CORE), (53.34, Regime.LARGE_ENERGY), (53.33, Regime.CORE),
     (-60, Regime.LARGE_ENERGY), (100 / 3 + 20, Regime.LARGE_ENERGY)],
)
def test_regime_boundary(energy, expected):
    assert regime_classify(SystemParams(100.0, energy, 2)) is expected


def test_regime_monotone_in_energy():
    labels = [regime_classify(SystemParams(37.0, e, 2)) for e in np.linspace(0, 40, 400)]
    switch = labels.index(Regime.LARGE_ENERGY)
    assert all(r is Regime.CORE for r in labels[:switch])
    assert all(r is Regime.LARGE_ENERGY for r in labels[switch:])


def test_estimate_constant_hyperbolic(zero):
    est = estimate_lyapunov(SystemParams(1.0, 3.0, 2), zero, 10 ** 5, 10, 0)
    assert est.estimate == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=0.005)


def test_estimate_is_deterministic(cos3):
    p = SystemParams(20.0, 1.0, 8000)
    a = estimate_lyapunov(p, cos3, 5000, 4, 11)
    b = estimate_lyapunov(p, cos3, 5000, 4, 11)
    assert a == b
    assert a != estimate_lyapunov(p, cos3, 5000, 4, 12)


def test_disjoint_seeds_agree(cos3):
    p = SystemParams(20.0, 3.0, 8000)
    a = estimate_lyapunov(p, cos3, 10 ** 5, 6, 100)
    b = estimate_lyapunov(p, cos3, 10 ** 5, 6, 200)
    assert abs(a.estimate - b.estimate) <= 5 * math.hypot(a.std_error, b.std_error)


def test_estimate_preconditions(cos3):
    p = SystemParams(20.0, 0.0, 8)
    with pytest.raises(ValueError):
        estimate_lyapunov(p, cos3, 999, 1, 0)
    with pytest.raises(ValueError):
        estimate_lyapunov(p, cos3, 1000, 0, 0)


def test_estimate_nonnegative(zero):
    est = estimate_lyapunov(SystemParams(1.0, 1.0, 2), zero, 2000, 3, 5)
    assert est.estimate >= 0.0 and est.std_error >= 0.0


@pytest.mark.parametrize("lam", [50.0, 100.0])
def test_large_energy_property(cos3, lam):
    b = math.ceil(lam ** 3)
    rng = np.random.default_rng(int(lam))
    thr = lam / 3 + 2 * math.sqrt(lam)
    for i in range(20):
        e = rng.choice([-1, 1]) * rng.uniform(thr, thr + lam)
        est = estimate_lyapunov(SystemParams(lam, e, b), cos3, 2000, 4, i)
        assert est.estimate >= math.log(lam) / 2 - 2 * est.std_error


def test_sweep_rows_and_threshold(cos3):
    rows = sweep_energy(20.0, 8000, cos3, -1.0, 1.0, 3, 2000, 2, 5)
    assert [r.energy for r in rows] == [-1.0, 0.0, 1.0]
    assert {r.threshold_quarter_log_lambda for r in rows} == {math.log(20) / 4}
    assert [r.seed for r in rows] == [5, 6, 7]
    assert rows_to_csv(rows) == rows_to_csv(sweep_energy(20.0, 8000, cos3, -1.0, 1.0, 3, 2000, 2, 5))


def test_sweep_parallel_matches_serial(cos3):
    serial = sweep_energy(20.0, 8000, cos3, -2.0, 2.0, 4, 2000, 2, 9)
    threaded = sweep_energy(20.0, 8000, cos3, -2.0, 2.0, 4, 2000, 2, 9, workers=3)
    assert serial == threaded


def test_csv_column_order_golden(cos3):
    assert ",".join(SCAN_COLUMNS) == GOLDEN_HEADER
    text = rows_to_csv(sweep_energy(20.0, 8000, cos3, 0.0, 1.0, 2, 1000, 1, 0), ["meta"])
    lines = text.split("\n")
    assert lines[0] == "# meta" and lines[1] == GOLDEN_HEADER
    assert "\r" not in text


def test_product_check_constant_large_slopes():
    # r_{j+1} = c - 1/r_j has the fixed point r = lam when c = lam + 1/lam
    lam = 9.0
    p = SystemParams(lam, 0.0, 3)
    v = make_builtin("constant", c=(lam + 1 / lam) / lam)
    tr = orbit_trace(0.2, math.atan(lam), 12, p, v)
    assert np.allclose(tr.slopes(), lam)
    rep = product_inequality_check(tr, p, N=10)
    assert rep.k == 0 and rep.branch == "N"
    assert rep.product_log == pytest.approx(10 * math.log(lam))
    assert rep.passed


def test_product_check_uses_stretches_through_vertical_slope(zero):
    # r_1 = 0 forces r_2 = infinity; the product r_1 r_2 stays finite (= -1)
    p = SystemParams(1.0, 0.0, 3)
    tr = orbit_trace(0.1, math.pi / 4, 6, p, zero)  # rotation: 1, -1, 1, ...
    p2 = SystemParams(4.0, -1.0, 3)
    tr2 = orbit_trace(0.1, math.atan(1.0), 6, p2, zero)  # c = 1: r_1 = 0, r_2 = inf, r_3 = 1
    rep = product_inequality_check(tr2, SystemParams(4.0, -1.0, 3), N=3)
    assert math.isfinite(rep.product_log)
    assert rep.product_log == pytest.approx(0.0, abs=1e-12)  # |0 * inf * 1| read as |r_1 r_2| |r_3| = 1
    assert product_inequality_check(tr, p, N=4).product_log == pytest.approx(0.0, abs=1e-12)


def test_product_check_short_trace(cos3):
    p = SystemParams(30.0, 0.0, 27000)
    tr = orbit_trace(0.1, 0.3, 3, p, cos3)
    with pytest.raises(ValueError):
        product_inequality_check(tr, p, N=5)
    with pytest.raises(ValueError):
        product_inequality_check(tr, SystemParams(30.0, 40.0, 27000), N=1)


def test_product_check_property(cos3):
    lam, b, N = 30.0, 27000, 200
    thr = lam / 3 + 2 * math.sqrt(lam)
    rng = np.random.default_rng(42)
    for _ in range(300):
        p = SystemParams(lam, rng.uniform(-thr, thr), b)
        tr = orbit_trace(0.0, rng.uniform(-1.5, 1.5), N + 2, p, cos3, orbit=typical_orbit(N + 2, b, rng))
        rep = product_inequality_check(tr, p, N)
        assert rep.passed and rep.k <= N
        assert np.all(small_slope_pairs(tr, p) > 0.25)
