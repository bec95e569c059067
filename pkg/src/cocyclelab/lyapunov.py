"""Monte Carlo Lyapunov exponents, energy sweeps and orbit-level product bounds."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from enum import Enum

import numpy as np

from . import _kernels
from .core import OrbitTrace, SystemParams, coupling_term, typical_orbit
from .potentials import PotentialSpec

CLAMP_BAND = 1e-6


class Regime(str, Enum):
    LARGE_ENERGY = "large_energy"
    CORE = "core"


def large_energy_threshold(lam: float) -> float:
    return lam / 3.0 + 2.0 * math.sqrt(lam)


def regime_classify(params: SystemParams) -> Regime:
    """``large_energy`` when |E| >= lam/3 + 2 sqrt(lam); there L(E) >= log(lam)/2."""
    if abs(params.energy) >= large_energy_threshold(params.lam):
        return Regime.LARGE_ENERGY
    return Regime.CORE


@dataclass(frozen=True)
class LyapunovEstimate:
    energy: float
    estimate: float
    std_error: float
    n_steps: int
    n_samples: int
    seed: int
    clamped: bool = False


def _burn_in(n_steps: int) -> int:
    return min(100, n_steps // 10)


def _sample_exponent(params: SystemParams, v: PotentialSpec, n_steps: int, seq: np.random.SeedSequence) -> float:
    rng = np.random.default_rng(seq)
    burn = _burn_in(n_steps)
    xs = typical_orbit(burn + n_steps, params.b, rng)
    c = np.ascontiguousarray(coupling_term(xs[burn:], params, v), dtype=float)
    total, _, _ = _kernels.log_spectral_norm(c)
    return total / n_steps


def estimate_lyapunov(
    params: SystemParams,
    v: PotentialSpec,
    n_steps: int,
    n_samples: int,
    seed: int,
) -> LyapunovEstimate:
    """Average of (1/n) log ||A_E^n(x)|| over seeded, Lebesgue-typical starting points.

    Each sample skips min(100, n/10) steps of its orbit, then measures the
    spectral norm of the next ``n_steps`` factors. Samples use child seeds of
    ``seed``, so results do not depend on evaluation order.
    """
    if n_steps < 1000:
        raise ValueError("n_steps must be >= 1000")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    children = np.random.SeedSequence(seed).spawn(n_samples)
    vals = np.array([_sample_exponent(params, v, n_steps, s) for s in children])
    est = float(np.sum(vals) / n_samples)
    se = float(np.std(vals, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    clamped = -CLAMP_BAND < est < 0.0
    if clamped:
        est = 0.0
    return LyapunovEstimate(params.energy, est, se, n_steps, n_samples, seed, clamped)


@dataclass(frozen=True)
class EnergyScanRow:
    energy: float
    estimate: float
    std_error: float
    regime: str
    threshold_quarter_log_lambda: float
    n_steps: int
    n_samples: int
    seed: int


SCAN_COLUMNS = tuple(f.name for f in fields(EnergyScanRow))


def energy_grid(e_min: float, e_max: float, n_grid: int) -> np.ndarray:
    if not e_min < e_max:
        raise ValueError("need e_min < e_max")
    if n_grid < 2:
        raise ValueError("need at least two grid points")
    return np.linspace(e_min, e_max, n_grid)


def sweep_energy(
    lam: float,
    b: int,
    v: PotentialSpec,
    e_min: float,
    e_max: float,
    n_grid: int,
    n_steps: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> list[EnergyScanRow]:
    """Estimate L(E) on a uniform grid with both endpoints; row i uses seed + i."""
    energies = energy_grid(e_min, e_max, n_grid)
    quarter = math.log(lam) / 4.0

    def row(i: int) -> EnergyScanRow:
        p = SystemParams(lam, float(energies[i]), b)
        est = estimate_lyapunov(p, v, n_steps, n_samples, seed + i)
        return EnergyScanRow(p.energy, est.estimate, est.std_error, regime_classify(p).value,
                             quarter, n_steps, n_samples, seed + i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, range(n_grid)))
    return [row(i) for i in range(n_grid)]


def rows_to_csv(rows: list[EnergyScanRow], header_lines: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for r in rows:
        w.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c) for c in SCAN_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[EnergyScanRow]) -> list[dict]:
    return [asdict(r) for r in rows]


@dataclass(frozen=True)
class ProductCheckReport:
    N: int
    k: int
    product_log: float
    bound_log: float
    branch: str  # "N" or "N+1": which product length was checked
    passed: bool


def _log_abs_slopes(trace: OrbitTrace, last: int) -> float:
    """sum_{j=1..last} log|r_j| from stretches, without forming infinite slopes.

    A(1, r_j) = r_j (1, r_{j+1}) gives log|r_j| = stretch_j - log|cos y_j| + log|cos y_{j+1}|,
    and the cosine terms telescope.
    """
    ang = trace.angles
    return float(np.sum(trace.log_stretch[1:last + 1]) - np.log(abs(np.cos(ang[1]))) + np.log(abs(np.cos(ang[last + 1]))))


def product_inequality_check(trace: OrbitTrace, params: SystemParams, N: int | None = None) -> ProductCheckReport:
    """Compare |r_1 ... r_N| (or up to N+1) with sqrt(lam)^(N - 3k) along a recorded orbit.

    k counts indices j in [1, N] with |r_j| < sqrt(lam). If |r_N| >= 1/lam the
    product up to N is checked against sqrt(lam)^(N-3k), otherwise the product
    up to N+1 against sqrt(lam)^(N+1-3k). Requires |E| <= lam/3 + 2 sqrt(lam).
    """
    if abs(params.energy) > large_energy_threshold(params.lam):
        raise ValueError("product bound needs |E| <= lam/3 + 2 sqrt(lam)")
    if N is None:
        N = trace.n - 2
    if N < 1:
        raise ValueError("N must be >= 1")
    if trace.n < N + 1:
        raise ValueError(f"trace of length {trace.n} cannot give r_1..r_{N}")
    ang = np.abs(trace.angles)
    k = int(np.sum(ang[1:N + 1] < math.atan(params.sqrt_lambda)))
    half_log = 0.5 * math.log(params.lam)
    if ang[N] >= math.atan(1.0 / params.lam):
        branch, last = "N", N
    else:
        if trace.n < N + 2:
            raise ValueError(f"trace of length {trace.n} is too short for the N+1 product")
        branch, last = "N+1", N + 1
    product_log = _log_abs_slopes(trace, last)
    bound_log = (last - 3 * k) * half_log
    return ProductCheckReport(N, k, product_log, bound_log, branch, product_log >= bound_log - 1e-9)


def small_slope_pairs(trace: OrbitTrace, params: SystemParams) -> np.ndarray:
    """|r_j r_{j+1}| for every j >= 1 with |r_j| < 1/lam (those pairs stay above 1/4 for large lam)."""
    r = trace.slopes()
    j = np.flatnonzero(np.abs(r[1:-1]) < 1.0 / params.lam) + 1
    return np.abs(r[j] * r[j + 1])
