"""Base map, transfer matrices and projective dynamics of the Schrödinger cocycle.

Angles live on the projective circle [-pi/2, pi/2) with the endpoints glued;
the slope r = tan(y) of a direction may be infinite, its angle never is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import _kernels

if TYPE_CHECKING:
    from .potentials import PotentialSpec

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class SystemParams:
    """Coupling ``lam``, energy and integer base ``b`` of the expanding map."""

    lam: float
    energy: float
    b: int

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"coupling must be positive, got {self.lam}")
        if int(self.b) != self.b or self.b < 2:
            raise ValueError(f"base b must be an integer >= 2, got {self.b}")
        object.__setattr__(self, "b", int(self.b))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "energy", float(self.energy))

    @property
    def sqrt_lambda(self) -> float:
        return math.sqrt(self.lam)

    def with_energy(self, energy: float) -> SystemParams:
        return SystemParams(self.lam, energy, self.b)


@dataclass(frozen=True)
class OrbitTrace:
    """Recorded orbit: base points, projective angles and per-step log stretches.

    ``x[k]``, ``y[k]`` and ``log_stretch[k]`` are the k-th sample for k < n;
    ``y_final`` is the angle after the last step, so ``angles`` has n + 1 entries.
    """

    x: np.ndarray
    y: np.ndarray
    log_stretch: np.ndarray
    y_final: float

    def __post_init__(self) -> None:
        for arr in (self.x, self.y, self.log_stretch):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def angles(self) -> np.ndarray:
        return np.append(self.y, self.y_final)

    def slopes(self) -> np.ndarray:
        """Slopes r_0..r_n; a vertical direction shows up as a huge finite number."""
        return np.tan(self.angles)

    def cumulative_log_stretch(self) -> float:
        return float(np.sum(self.log_stretch))


def canonical_angle(y):
    """Reduce angles modulo pi into [-pi/2, pi/2)."""
    out = np.mod(np.asarray(y, dtype=float) + HALF_PI, math.pi) - HALF_PI
    out = np.where(out >= HALF_PI, -HALF_PI, out)
    return out if np.ndim(out) else float(out)


def angle_of_slope(r):
    """Angle of the direction (1, r); ``inf`` maps to -pi/2."""
    r = np.asarray(r, dtype=float)
    out = np.where(np.isinf(r), -HALF_PI, np.arctan(np.where(np.isinf(r), 0.0, r)))
    return out if np.ndim(out) else float(out)


def base_step(x, b: int):
    """One step of T(x) = b x mod 1, always landing in [0, 1)."""
    if b < 2:
        raise ValueError("b must be >= 2")
    out = np.mod(np.asarray(x, dtype=float) * b, 1.0)
    out = np.where(out >= 1.0, 0.0, out)
    return out if np.ndim(out) else float(out)


def forward_orbit(x0: float, n: int, b: int) -> np.ndarray:
    """x_0..x_{n-1} by plain floating-point iteration of the base map.

    Each step discards about log2(b) bits of x, and for even b the orbit
    reaches 0 after roughly 53/log2(b) steps. Use :func:`typical_orbit`
    for statistics.
    """
    out = np.empty(n)
    x = float(x0)
    for k in range(n):
        out[k] = x
        x = base_step(x, b)
    return out


def leading_digits(x0: float, b: int, count: int) -> np.ndarray:
    """First ``count`` base-b digits of x0 (0-based digits)."""
    digits = np.empty(count, dtype=np.int64)
    x = float(x0)
    for k in range(count):
        d = min(int(x * b), b - 1)
        digits[k] = d
        x = x * b - d
    return digits


def digits_per_double(b: int) -> int:
    """Number of base-b digits a double resolves in [0, 1)."""
    return int(math.ceil(53 / math.log2(b))) + 1


def typical_orbit(n: int, b: int, rng: np.random.Generator, x0: float | None = None) -> np.ndarray:
    """Orbit of length n of a Lebesgue-typical point, synthesised from random digits.

    The point's base-b expansion is drawn digit by digit and the orbit is
    assembled through the inverse branches x -> (d + x)/b, which are
    contracting, so no precision is lost along the orbit. When ``x0`` is
    given its leading digits are kept and only the unresolved tail is random.
    """
    digits = rng.integers(0, b, size=n).astype(np.float64)
    if x0 is not None:
        lead = leading_digits(x0, b, min(n, digits_per_double(b)))
        digits[: lead.size] = lead
    return _kernels.inverse_branch_orbit(digits, float(rng.random()), float(b))


def coupling_term(x, params: SystemParams, v: PotentialSpec):
    """The varying matrix entry lambda*v(x) - E."""
    return params.lam * v(x) - params.energy


def transfer_matrix(x: float, params: SystemParams, v: PotentialSpec) -> np.ndarray:
    return np.array([[0.0, 1.0], [-1.0, float(coupling_term(x, params, v))]])


def projective_step(x, y, params: SystemParams, v: PotentialSpec):
    """Image angle arctan(lambda v(x) - E - cot y), infinities absorbed.

    Computed as the angle of A_E(x)(cos y, sin y), which needs no special
    case at y = 0 (image is the vertical direction) or y = -pi/2.
    """
    c = coupling_term(x, params, v)
    s = np.sin(y)
    co = np.cos(y)
    s = np.where(np.abs(s) < 1e-15, 0.0, s)
    return canonical_angle(np.arctan2(c * s - co, s))


def log_stretch(x, y, params: SystemParams, v: PotentialSpec):
    """log ||A_E(x) u|| for the unit vector u at angle y."""
    c = coupling_term(x, params, v)
    s = np.sin(y)
    return 0.5 * np.log(s * s + (c * s - np.cos(y)) ** 2)


def orbit_trace(
    x0: float,
    y0: float,
    n: int,
    params: SystemParams,
    v: PotentialSpec,
    orbit: np.ndarray | None = None,
) -> OrbitTrace:
    """Forward orbit of (x0, y0) under the circle map with stretch accounting.

    ``orbit`` may supply the base points (e.g. from :func:`typical_orbit`);
    otherwise they come from floating-point iteration of the base map.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if orbit is None:
        xs = forward_orbit(x0, n, params.b)
    else:
        xs = np.asarray(orbit, dtype=float)[:n]
        if xs.size < n:
            raise ValueError("supplied orbit is shorter than n")
    c = np.ascontiguousarray(coupling_term(xs, params, v), dtype=float)
    ys, st = _kernels.angle_trace(c, float(canonical_angle(y0)))
    return OrbitTrace(x=xs.copy(), y=ys[:-1].copy(), log_stretch=st, y_final=float(ys[-1]))


@dataclass(frozen=True)
class GrowthBracket:
    """(1/n) log ||A^n|| together with the cheap single-vector bracket around it."""

    value: float
    lower: float
    upper: float
    n: int


def lognorm_bracket(
    x0: float,
    n: int,
    params: SystemParams,
    v: PotentialSpec,
    rng: np.random.Generator | None = None,
    orbit: np.ndarray | None = None,
) -> GrowthBracket:
    """Stable evaluation of (1/n) log ||A_E^n(x0)|| in the spectral norm.

    Two orthonormal vectors are pushed forward with renormalisation. The
    larger of their stretches is a lower bound and ||M|| <= sqrt(2) times it
    gives the upper bound; since det A^n = 1 the two columns also determine
    the norm exactly, which is ``value``.

    Base points: ``orbit`` if given, else a typical orbit sharing the leading
    digits of x0 when ``rng`` is given, else plain forward iteration.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if orbit is not None:
        xs = np.asarray(orbit, dtype=float)[:n]
    elif rng is not None:
        xs = typical_orbit(n, params.b, rng, x0=x0)
    else:
        xs = forward_orbit(x0, n, params.b)
    c = np.ascontiguousarray(coupling_term(xs, params, v), dtype=float)
    total, s1, s2 = _kernels.log_spectral_norm(c)
    lower = max(s1, s2) / n
    return GrowthBracket(value=total / n, lower=lower, upper=lower + 0.5 * math.log(2.0) / n, n=n)


def lognorm_growth(
    x0: float,
    n: int,
    params: SystemParams,
    v: PotentialSpec,
    rng: np.random.Generator | None = None,
    orbit: np.ndarray | None = None,
) -> float:
    """(1/n) log ||A_E^n(x0)||; see :func:`lognorm_bracket`."""
    return lognorm_bracket(x0, n, params, v, rng=rng, orbit=orbit).value


def matrix_product(xs, params: SystemParams, v: PotentialSpec) -> np.ndarray:
    """Explicit product A(x_{n-1}) ... A(x_0). Overflows for long orbits; oracle use only."""
    m = np.eye(2)
    for x in xs:
        m = transfer_matrix(float(x), params, v) @ m
    return m
