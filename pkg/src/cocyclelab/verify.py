"""Seeded drivers that check the lemma-level statements on many random instances.

Each driver returns a plain dict (stable key order, no timings) so reports
are byte-reproducible for a fixed seed.
"""
from __future__ import annotations

import math

import numpy as np

from .certification import derivative_budget, graph_derivative_check
from .combinatorics import BadCountLaw, brute_force_word_measure, exactly_q_predicate, level_bad_measure
from .core import SystemParams, orbit_trace, typical_orbit
from .lyapunov import estimate_lyapunov, large_energy_threshold, product_inequality_check, small_slope_pairs
from .potentials import PotentialSpec


def product_bound_trials(lam: float, b: int, v: PotentialSpec, trials: int, N: int, seed: int) -> dict:
    """Random orbits with E uniform on |E| < lam/3 + 2 sqrt(lam) and a uniformly random initial angle."""
    thr = large_energy_threshold(lam)
    failed, n_pairs, pair_viol, pair_min = [], 0, 0, math.inf
    for i, seq in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(seq)
        energy = float(rng.uniform(-thr, thr))
        y0 = float(rng.uniform(-0.5 * math.pi, 0.5 * math.pi))
        p = SystemParams(lam, energy, b)
        trace = orbit_trace(0.0, y0, N + 2, p, v, orbit=typical_orbit(N + 2, b, rng))
        rep = product_inequality_check(trace, p, N)
        if not rep.passed:
            failed.append({"trial": i, "energy": energy, "k": rep.k, "product_log": rep.product_log, "bound_log": rep.bound_log})
        pairs = small_slope_pairs(trace, p)
        n_pairs += pairs.size
        pair_viol += int(np.sum(pairs <= 0.25))
        if pairs.size:
            pair_min = min(pair_min, float(pairs.min()))
    return {
        "check": "product-bound",
        "lambda": lam, "b": b, "potential": v.designator, "trials": trials, "N": N, "seed": seed,
        "passed": trials - len(failed),
        "failed": failed,
        "small_slope_pairs": n_pairs,
        "pair_violations": pair_viol,
        "pair_min": pair_min if n_pairs else None,
        "ok": not failed and pair_viol == 0,
    }


def large_energy_trials(lam: float, b: int, v: PotentialSpec, trials: int, n_steps: int, n_samples: int, seed: int) -> dict:
    """Energies drawn with |E| in [lam/3 + 2 sqrt(lam), that + lam]; each estimate must reach log(lam)/2."""
    thr = large_energy_threshold(lam)
    rng = np.random.default_rng(seed)
    half = 0.5 * math.log(lam)
    rows, ok = [], True
    for i in range(trials):
        energy = float(rng.choice([-1.0, 1.0]) * rng.uniform(thr, thr + lam))
        est = estimate_lyapunov(SystemParams(lam, energy, b), v, n_steps, n_samples, seed + i)
        good = est.estimate >= half - 2 * est.std_error
        ok &= good
        rows.append({"energy": energy, "estimate": est.estimate, "std_error": est.std_error, "pass": good})
    return {"check": "large-energy", "lambda": lam, "b": b, "potential": v.designator, "seed": seed,
            "bound": half, "rows": rows, "ok": ok}


def derivative_trials(lam: float, b: int, energy: float, v: PotentialSpec, trials: int, max_depth: int, seed: int) -> dict:
    """Finite-difference slopes of random iterated graphs against the derivative budget and its cap."""
    p = SystemParams(lam, energy, b)
    rng = np.random.default_rng(seed)
    cap = derivative_budget(0, p, v).cap
    violations, worst = [], 0.0
    for _ in range(trials):
        depth = int(rng.integers(1, max_depth + 1))
        word = tuple(int(d) for d in rng.integers(1, b + 1, size=depth))
        chk = graph_derivative_check(word, p, v)
        worst = max(worst, chk.max_abs_slope)
        if not chk.passed or chk.max_abs_slope > cap:
            violations.append({"word": list(word), "slope": chk.max_abs_slope, "budget": chk.budget})
    return {"check": "derivative-budget", "lambda": lam, "b": b, "energy": energy, "potential": v.designator,
            "trials": trials, "seed": seed, "cap": cap, "max_slope": worst, "violations": violations,
            "ok": not violations}


def bad_count_trials(max_b: int = 4, max_n: int = 5) -> dict:
    """Exact agreement of the closed-form bad-count measure with word enumeration."""
    mismatches, cases = [], 0
    for b in range(2, max_b + 1):
        for n in range(1, max_n + 1):
            for q in range(0, b + 1):
                law = BadCountLaw(n, q, b)
                for m in range(n + 1):
                    cases += 1
                    lhs = level_bad_measure(law, m)
                    rhs = brute_force_word_measure(b, n, exactly_q_predicate(q), m)
                    if lhs != rhs:
                        mismatches.append({"b": b, "n": n, "q": q, "m": m, "formula": str(lhs), "enumerated": str(rhs)})
    return {"check": "bad-count-measure", "max_b": max_b, "max_n": max_n, "cases": cases,
            "mismatches": mismatches, "ok": not mismatches}
