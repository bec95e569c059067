"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import contextlib
import itertools
import math
import time

import numpy as np
import pytest

from cocyclelab.certification import certify_tree, child_badness
from cocyclelab.cli import main
from cocyclelab.combinatorics import BadCountLaw, level_bad_measure, mn_measure
from cocyclelab.core import SystemParams
from cocyclelab.lyapunov import estimate_lyapunov, sweep_energy
from cocyclelab.potentials import check_v1_class, make_builtin, sublevel_structure
from cocyclelab.verify import bad_count_trials, derivative_trials, product_bound_trials

from _oracles import dense_slopes

pytestmark = pytest.mark.acceptance


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def check(number, title):
        detail = {}
        try:
            yield detail
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            with capsys.disabled():
                print(f"\nFAIL criterion {number:2d}: {title} ({msg})")
            raise
        with capsys.disabled():
            extra = ", ".join(f"{k}={v}" for k, v in detail.items())
            print(f"\nPASS criterion {number:2d}: {title}" + (f" ({extra})" if extra else ""))
    return check


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile the numba kernels outside the timed sections
    estimate_lyapunov(SystemParams(2.0, 0.0, 2), make_builtin("constant", c=0.0), 1000, 1, 0)


def test_01_hyperbolic_constant_matrix(criterion, zero):
    with criterion(1, "v = 0, E = 3 matches log((3 + sqrt 5)/2) within 1e-2") as d:
        t = time.perf_counter()
        est = estimate_lyapunov(SystemParams(1.0, 3.0, 2), zero, 10 ** 5, 10, 11)
        elapsed = time.perf_counter() - t
        exact = math.log((3 + math.sqrt(5)) / 2)
        d.update(estimate=f"{est.estimate:.6f}", exact=f"{exact:.6f}", seconds=f"{elapsed:.2f}")
        assert abs(est.estimate - exact) < 1e-2
        assert elapsed < 5


def test_02_elliptic_constant_matrix(criterion, zero):
    with criterion(2, "v = 0, E = 1 gives an estimate within 0.02 of 0") as d:
        est = estimate_lyapunov(SystemParams(1.0, 1.0, 2), zero, 10 ** 5, 10, 12)
        d.update(estimate=f"{est.estimate:.2e}")
        assert abs(est.estimate) < 0.02


def test_03_large_energy_bound(criterion, cos3):
    with criterion(3, "lambda = 100, large |E|: estimate >= log(lambda)/2") as d:
        t = time.perf_counter()
        for energy in (55.0, 60.0, 80.0):
            est = estimate_lyapunov(SystemParams(100.0, energy, 10 ** 6), cos3, 10 ** 5, 10, 13)
            d[f"L({energy:g})"] = f"{est.estimate:.4f}"
            assert est.estimate >= 2.302 - 2 * est.std_error, f"E={energy}: {est.estimate}"
        elapsed = time.perf_counter() - t
        d["seconds"] = f"{elapsed:.2f}"
        assert elapsed < 30


def test_04_quarter_log_lambda_on_energy_grid(criterion, cos3):
    with criterion(4, "lambda = 20, b = 8000: L(E) > log(20)/4 on a 97-point grid") as d:
        t = time.perf_counter()
        rows = sweep_energy(20.0, 8000, cos3, -16.0, 16.0, 97, 10 ** 5, 10, seed=14)
        elapsed = time.perf_counter() - t
        bound = math.log(20) / 4
        offenders = [r.energy for r in rows if not r.estimate > bound]
        worst = min(rows, key=lambda r: r.estimate)
        d.update(min=f"{worst.estimate:.4f} at E={worst.energy:g}", bound=f"{bound:.4f}", seconds=f"{elapsed:.1f}")
        assert len(rows) == 97
        assert not offenders, f"estimate <= {bound:.4f} at E = {offenders}"
        assert elapsed < 300


def test_05_product_inequality_suite(criterion, cos3):
    with criterion(5, "product inequality on 1e4 orbits at lambda = 30, b = 27000") as d:
        rep = product_bound_trials(30.0, 27000, cos3, 10 ** 4, 200, seed=15)
        d.update(passed=f"{rep['passed']}/{rep['trials']}", small_slope_pairs=rep["small_slope_pairs"],
                 pair_min=f"{rep['pair_min']:.3f}" if rep["pair_min"] is not None else None)
        assert rep["passed"] == rep["trials"], rep["failed"][:3]
        assert rep["pair_violations"] == 0


def test_06_certifier_matches_dense_simulation(criterion, cos3):
    with criterion(6, "b = 8 depth 3 certifier flags match dense simulation") as d:
        p = SystemParams(3.0, 1.0, 8)
        t = time.perf_counter()
        certify_tree(p, cos3, 3)
        elapsed = time.perf_counter() - t
        cells = marginal = mismatches = 0
        for depth in range(3):
            for node in itertools.product(range(1, 9), repeat=depth):
                scan = child_badness(node, p, cos3)
                for j, bad, marg in zip(scan.children, scan.bad, scan.marginal):
                    cells += 1
                    if marg:
                        marginal += 1
                    elif bool(bad) != bool(dense_slopes(node + (int(j),), p, cos3).min() < p.sqrt_lambda):
                        mismatches += 1
        d.update(cells=cells, marginal=marginal, mismatches=mismatches, seconds=f"{elapsed:.2f}")
        assert mismatches == 0
        assert marginal < 0.01 * cells
        assert elapsed < 60


def test_07_derivative_bounds(criterion, cos3):
    with criterion(7, "iterated-graph slopes within the derivative budget") as d:
        rep = derivative_trials(20.0, 8000, 0.0, cos3, 100, 3, seed=17)
        d.update(max_slope=f"{rep['max_slope']:.3e}", cap=f"{rep['cap']:.5f}")
        assert rep["cap"] == pytest.approx(0.01047, abs=1e-5)
        assert not rep["violations"], rep["violations"][:3]


def test_08_combinatorics_exact(criterion):
    with criterion(8, "bad-count measure exact against enumeration") as d:
        rep = bad_count_trials(4, 5)
        assert rep["ok"], rep["mismatches"][:3]
        for b, n in itertools.product(range(2, 5), range(1, 6)):
            for q in range(b + 1):
                law = BadCountLaw(n, q, b)
                assert sum(level_bad_measure(law, m) for m in range(n + 1)) == 1
        tail = 1 - mn_measure(BadCountLaw(1000, 1, 12))
        d.update(cases=rep["cases"], tail=f"{float(tail):.3e}")
        assert tail < 1e-10


def test_09_counterexample_has_zero_exponent(criterion):
    with criterion(9, "counterexample potential has estimate near 0") as d:
        v = make_builtin("counterexample", phi="cos", b=16)
        est = estimate_lyapunov(SystemParams(1.0, 0.0, 16), v, 10 ** 6, 1, 19)
        d.update(estimate=f"{est.estimate:.4f}")
        assert abs(est.estimate) < 0.05


def test_10_sublevel_class_checker(criterion, cos3):
    with criterion(10, "cos3 in the sublevel class with eps0 = 0.1, beta = 1, s = 2") as d:
        a_grid = np.linspace(-1 / 3, 1 / 3, 50)
        eps = [0.1, 0.05, 0.01]
        const = check_v1_class(make_builtin("constant", c=0.0), [0.0], eps, params=cos3.v1_params)
        assert not const.passed
        for e in eps:
            rep = sublevel_structure(cos3, 0.0, e)
            assert rep.max_interval_length == pytest.approx(3 * e / math.pi, rel=0.1)
        res = check_v1_class(cos3, a_grid, eps)
        w = res.worst
        d.update(worst_ratio=f"{res.worst_ratio:.3f}")
        assert res.passed, (f"worst ratio {res.worst_ratio:.2f} at a={w.a:.4f}, eps={w.eps}: "
                            f"{w.interval_count} arcs, longest {w.max_interval_length:.4f}")


def test_11_apriori_bound_arithmetic(criterion, cos3):
    with criterion(11, "a priori bad-index bound at lambda = 20, b = 8000") as d:
        rep = certify_tree(SystemParams(20.0, 0.0, 8000), cos3, 1, "sampled", children_per_node=64, seed=0)
        d.update(apriori_bound=rep.apriori_bound, budget_q=rep.budget_q)
        assert rep.apriori_bound == 10737
        assert rep.budget_q == 666
        assert rep.apriori_satisfied is False


DETERMINISM_RUNS = {
    "estimate": ["estimate", "--lambda", "20", "--b", "8000", "--energy", "3", "--steps", "20000", "--samples", "4"],
    "sweep": ["sweep", "--lambda", "20", "--b", "8000", "--grid", "9", "--steps", "5000", "--samples", "3",
              "--emin", "-16", "--emax", "16"],
    "certify": ["certify", "--lambda", "20", "--b", "8000", "--depth", "2", "--strategy", "sampled",
                "--children", "100", "--nodes", "3"],
    "verify-lemmas": ["verify-lemmas", "--which", "all", "--lambda", "30", "--b", "27000", "--trials", "20"],
}


def test_12_determinism(criterion, tmp_path, capsys):
    with criterion(12, "stochastic commands are byte-identical across reruns") as d:
        compared = 0
        for name, argv in DETERMINISM_RUNS.items():
            for fmt in ("json", "csv"):
                if name == "verify-lemmas" and fmt == "csv":
                    continue
                blobs = []
                for run in range(2):
                    out = tmp_path / f"{name}-{fmt}-{run}.out"
                    status = main(argv + ["--seed", "5", "--format", fmt, "-o", str(out)])
                    capsys.readouterr()
                    assert status in (0, 1), f"{name} exited {status}"
                    blobs.append(out.read_bytes())
                assert blobs[0] == blobs[1], f"{name} ({fmt}) differs between runs"
                compared += 1
        d.update(outputs=compared)
