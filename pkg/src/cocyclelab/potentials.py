"""Built-in potentials and an empirical checker for the sublevel-set condition.

The condition: there are eps0 > 0, beta > 0 and an integer s >= 1 such that
for every 0 < eps <= eps0 and every level a, {x : |v(x) - a| < eps} is at
most s arcs of the circle, each of length at most eps**beta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# grid points with |v - a| - eps inside this band count as outside the set
_TIE = 1e-12
_BISECT_WIDTH = 1e-10


@dataclass(frozen=True)
class V1Params:
    eps0: float
    beta: float
    s: int

    def __post_init__(self) -> None:
        if not (self.eps0 > 0 and self.beta > 0 and self.s >= 1):
            raise ValueError(f"invalid sublevel parameters {self}")


@dataclass(frozen=True)
class PotentialSpec:
    """A 1-periodic potential with its derivative and sup-norm bounds.

    ``eval`` and ``deriv`` must accept numpy arrays. ``designator`` is the
    string the CLI uses to rebuild the same potential.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    deriv_sup_norm: float
    v1_params: V1Params | None = None
    designator: str = ""
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.eval(x)

    def with_v1_params(self, eps0: float, beta: float, s: int) -> PotentialSpec:
        return PotentialSpec(
            self.name, self.eval, self.deriv, self.sup_norm, self.deriv_sup_norm,
            V1Params(eps0, beta, s), self.designator, dict(self.params),
        )


_INNER = {
    # name: (phi, phi', max phi, min phi, ||phi'||)
    "cos": (lambda x: np.cos(TWO_PI * x), lambda x: -TWO_PI * np.sin(TWO_PI * x), 1.0, -1.0, TWO_PI),
    "sin": (lambda x: np.sin(TWO_PI * x), lambda x: TWO_PI * np.cos(TWO_PI * x), 1.0, -1.0, TWO_PI),
}


def _cos3() -> PotentialSpec:
    return PotentialSpec(
        name="cos3",
        eval=lambda x: np.cos(TWO_PI * np.asarray(x, dtype=float)) / 3.0,
        deriv=lambda x: -(TWO_PI / 3.0) * np.sin(TWO_PI * np.asarray(x, dtype=float)),
        sup_norm=1.0 / 3.0,
        deriv_sup_norm=TWO_PI / 3.0,
        v1_params=V1Params(eps0=0.1, beta=1.0, s=2),
        designator="cos3",
    )


def _trigpoly(terms: Sequence[tuple[int, float]]) -> PotentialSpec:
    if not terms:
        raise ValueError("trigpoly needs at least one (k, c) term")
    ks = np.array([int(k) for k, _ in terms], dtype=float)
    cs = np.array([float(c) for _, c in terms])
    if np.any(ks < 0):
        raise ValueError("trigpoly frequencies must be >= 0")

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.tensordot(cs, np.cos(TWO_PI * np.multiply.outer(ks, x)), axes=1)

    def dv(x):
        x = np.asarray(x, dtype=float)
        return np.tensordot(-TWO_PI * ks * cs, np.sin(TWO_PI * np.multiply.outer(ks, x)), axes=1)

    # triangle-inequality bounds; exact for a single term
    return PotentialSpec(
        name="trigpoly",
        eval=ev,
        deriv=dv,
        sup_norm=float(np.sum(np.abs(cs))),
        deriv_sup_norm=float(np.sum(TWO_PI * ks * np.abs(cs))),
        designator="trigpoly:" + ",".join(f"{int(k)},{float(c)!r}" for k, c in zip(ks, cs)),
        params={"terms": [(int(k), float(c)) for k, c in zip(ks, cs)]},
    )


def _counterexample(phi: str | Callable, b: int) -> PotentialSpec:
    if isinstance(phi, str):
        if phi not in _INNER:
            raise ValueError(f"unknown inner function {phi!r}; choose from {sorted(_INNER)}")
        f, df, fmax, fmin, dsup = _INNER[phi]
        phi_name = phi
    else:
        raise TypeError("inner function must be one of the named built-ins")
    # zero mean is what makes the exponent vanish at E = 0
    xs = (np.arange(1 << 14) + 0.5) / (1 << 14)
    mean = float(np.mean(f(xs)))
    if abs(mean) > 1e-9:
        raise ValueError(f"inner function must have zero mean, got {mean:.3e}")
    b = int(b)
    if b < 2:
        raise ValueError("counterexample needs the base b >= 2")

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.exp(f(np.mod(b * x, 1.0))) + np.exp(-f(x))

    def dv(x):
        x = np.asarray(x, dtype=float)
        tx = np.mod(b * x, 1.0)
        return b * df(tx) * np.exp(f(tx)) - df(x) * np.exp(-f(x))

    return PotentialSpec(
        name="counterexample",
        eval=ev,
        deriv=dv,
        sup_norm=math.exp(fmax) + math.exp(-fmin),
        deriv_sup_norm=b * dsup * math.exp(fmax) + dsup * math.exp(-fmin),
        designator=f"counterexample:phi={phi_name}",
        params={"phi": phi_name, "b": b},
    )


def _constant(c: float) -> PotentialSpec:
    c = float(c)
    return PotentialSpec(
        name="constant",
        eval=lambda x: np.full(np.shape(x), c) if np.ndim(x) else c,
        deriv=lambda x: np.zeros(np.shape(x)) if np.ndim(x) else 0.0,
        sup_norm=abs(c),
        deriv_sup_norm=0.0,
        designator=f"constant:{c!r}",
        params={"c": c},
    )


def make_builtin(name: str, **params) -> PotentialSpec:
    """Construct a built-in potential.

    ``cos3``; ``trigpoly`` with ``terms=[(k, c), ...]`` meaning sum c cos(2 pi k x);
    ``counterexample`` with ``phi`` (named zero-mean inner function) and ``b``,
    giving exp(phi(bx mod 1)) + exp(-phi(x)); ``constant`` with ``c``.
    """
    if name == "cos3":
        if params:
            raise ValueError("cos3 takes no parameters")
        return _cos3()
    if name == "trigpoly":
        return _trigpoly(params.get("terms", ()))
    if name == "counterexample":
        if "b" not in params:
            raise ValueError("counterexample needs the base b")
        return _counterexample(params.get("phi", "cos"), params["b"])
    if name == "constant":
        return _constant(params.get("c", 0.0))
    raise ValueError(f"unknown potential {name!r}")


def parse_potential(designator: str, b: int | None = None) -> PotentialSpec:
    """Build a potential from ``cos3``, ``trigpoly:k1,c1,...``, ``counterexample:phi=cos`` or ``constant:c``."""
    name, _, rest = designator.partition(":")
    if name == "cos3" and not rest:
        return make_builtin("cos3")
    if name == "trigpoly":
        vals = [t for t in rest.split(",") if t]
        if not vals or len(vals) % 2:
            raise ValueError(f"trigpoly needs k,c pairs: {designator!r}")
        terms = [(int(vals[i]), float(vals[i + 1])) for i in range(0, len(vals), 2)]
        return make_builtin("trigpoly", terms=terms)
    if name == "counterexample":
        kw = dict(item.split("=", 1) for item in rest.split(",") if item) if rest else {}
        unknown = set(kw) - {"phi"}
        if unknown:
            raise ValueError(f"unknown counterexample option(s) {sorted(unknown)}")
        if b is None:
            raise ValueError("counterexample needs the base b")
        return make_builtin("counterexample", phi=kw.get("phi", "cos"), b=b)
    if name == "constant":
        return make_builtin("constant", c=float(rest) if rest else 0.0)
    raise ValueError(f"unknown potential {designator!r}")


@dataclass(frozen=True)
class SublevelReport:
    a: float
    eps: float
    interval_count: int
    max_interval_length: float
    total_length: float = 0.0
    resolution_warning: bool = False


def _bisect(f, lo, hi, inside_lo):
    """Vectorised bisection for the boundary between lo and hi (hi may exceed 1)."""
    lo = lo.copy()
    hi = hi.copy()
    while np.max(hi - lo, initial=0.0) > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        inside_mid = f(np.mod(mid, 1.0)) < -_TIE
        same = inside_mid == inside_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def sublevel_structure(v: PotentialSpec, a: float, eps: float, resolution: int = 1 << 15) -> SublevelReport:
    """Arcs of {x on the circle : |v(x) - a| < eps}, found on a grid and refined by bisection."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if resolution < 10_000:
        raise ValueError("resolution must be at least 10^4")

    def f(x):
        return np.abs(v(x) - a) - eps

    xs = np.arange(resolution) / resolution
    inside = f(xs) < -_TIE
    if not inside.any():
        return SublevelReport(a, eps, 0, 0.0, 0.0, False)
    if inside.all():
        return SublevelReport(a, eps, 1, 1.0, 1.0, False)

    nxt = np.roll(inside, -1)
    starts = np.flatnonzero(~inside & nxt)  # boundary between i and i+1, entering
    ends = np.flatnonzero(inside & ~nxt)  # boundary between i and i+1, leaving
    h = 1.0 / resolution
    left = _bisect(f, xs[starts], xs[starts] + h, np.zeros(starts.size, bool))
    right = _bisect(f, xs[ends], xs[ends] + h, np.ones(ends.size, bool))

    # runs and gaps alternate around the circle
    idx = np.searchsorted(ends, starts, side="right") % ends.size
    lengths = np.mod(right[idx] - left, 1.0)
    run_cells = np.mod(ends[idx] - starts, resolution)
    nxt_start = starts[np.searchsorted(starts, ends, side="right") % starts.size]
    gap_cells = np.mod(nxt_start - ends, resolution)
    # a run or gap of at most two cells may hide further components
    warn = bool(np.any(run_cells <= 2) or np.any(gap_cells <= 2))
    return SublevelReport(
        a=float(a),
        eps=float(eps),
        interval_count=int(starts.size),
        max_interval_length=float(lengths.max()),
        total_length=float(lengths.sum()),
        resolution_warning=warn,
    )


@dataclass(frozen=True)
class V1CheckResult:
    passed: bool
    worst: SublevelReport | None
    worst_ratio: float
    pairs_checked: int


def check_v1_class(
    v: PotentialSpec,
    a_grid: Sequence[float],
    eps_grid: Sequence[float],
    resolution: int = 1 << 15,
    params: V1Params | None = None,
) -> V1CheckResult:
    """Check the arc-count and arc-length condition on every (a, eps) pair.

    The worst report is the one with the largest ratio max(count/s, length/eps**beta);
    a ratio above 1 is a violation. This is evidence on a grid, not a proof.
    """
    p = params or v.v1_params
    if p is None:
        raise ValueError(f"potential {v.name!r} declares no sublevel parameters")
    for eps in eps_grid:
        if not 0 < eps <= p.eps0:
            raise ValueError(f"eps={eps} outside (0, eps0={p.eps0}]")
    worst, worst_ratio, n = None, -math.inf, 0
    for a in a_grid:
        for eps in eps_grid:
            rep = sublevel_structure(v, a, eps, resolution)
            ratio = max(rep.interval_count / p.s, rep.max_interval_length / eps ** p.beta)
            n += 1
            if ratio > worst_ratio:
                worst, worst_ratio = rep, ratio
    if n == 0:
        return V1CheckResult(passed=True, worst=None, worst_ratio=0.0, pairs_checked=0)
    return V1CheckResult(passed=worst_ratio <= 1.0, worst=worst, worst_ratio=worst_ratio, pairs_checked=n)
