"""Good/bad classification of cylinder intervals by iterating the section y = arctan(lam).

A cylinder I_w (w = (j1, ..., jn), digits 1..b) is good when every x in it,
started at slope r = lam, has |r_n| >= sqrt(lam). The n-th image of the
section over I_w is the graph of phi_w : [0, 1] -> circle, and the cylinder
is good iff min |tan phi_w| >= sqrt(lam). Minima are taken on a grid and
made rigorous up to floating point with a Lipschitz margin derived from the
derivative budget of the iterated graphs.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import SystemParams, projective_step
from .potentials import PotentialSpec

Word = tuple[int, ...]

EXHAUSTIVE_NODE_CAP = 10_000_000
_CHUNK = 1 << 20  # grid evaluations per vectorised batch
_NODE_EVALS = 1 << 16


def default_grid(b: int) -> int:
    """Grid size keeping about 2^16 evaluations per node, clipped to [64, 8192]."""
    return int(min(8192, max(64, _NODE_EVALS // b)))


class BasepointPrecisionWarning(UserWarning):
    """A cylinder is narrower than the float spacing at its basepoint."""


def validate_word(word: Sequence[int], b: int) -> Word:
    word = tuple(int(j) for j in word)
    if any(not 1 <= j <= b for j in word):
        raise ValueError(f"word digits must lie in 1..{b}: {word}")
    return word


def word_index(word: Word, b: int) -> int:
    """m = sum (j_k - 1) b^(n-k), exact."""
    m = 0
    for j in word:
        m = m * b + (j - 1)
    return m


def word_basepoint(word: Sequence[int], x: float, b: int) -> float:
    """The point (m + x)/b^n of I_word whose n-th image is x.

    Computed from the exact rational. Warns with :class:`BasepointPrecisionWarning`
    when the cylinder is too narrow to resolve in double precision, or when the
    rounded value is off by more than 1e-12 relative.
    """
    word = validate_word(word, b)
    n = len(word)
    exact = (Fraction(word_index(word, b)) + Fraction(x)) / b ** n
    out = float(exact)
    if exact and abs(Fraction(out) - exact) > Fraction(1, 10 ** 12) * exact:
        warnings.warn(f"basepoint of depth-{n} word not representable to 1e-12", BasepointPrecisionWarning, stacklevel=2)
    elif n and b ** -float(n) < math.ulp(max(out, 2.0 ** -1022)) * 1e3:
        warnings.warn(f"depth-{n} cylinder spans fewer than 1e3 floats", BasepointPrecisionWarning, stacklevel=2)
    return out


def _suffix_offsets(word: Word, b: int) -> list[tuple[float, float]]:
    """For each k, (m_k / b^L, b^-L) with L = n - k and m_k the index of word[k:].

    x_k = m_k/b^L + x b^-L is the k-th orbit point of word_basepoint(word, x);
    computing it from the suffix avoids amplifying rounding through b*x mod 1.
    """
    n = len(word)
    out = []
    for k in range(n):
        L = n - k
        out.append((float(Fraction(word_index(word[k:], b), b ** L)), float(b) ** -L))
    return out


def graph_eval(word: Sequence[int], x, params: SystemParams, v: PotentialSpec):
    """phi_word(x): angle of H^n(word_basepoint(word, x), arctan lam)."""
    word = validate_word(word, params.b)
    x = np.asarray(x, dtype=float)
    y = np.full(x.shape, math.atan(params.lam))
    for base, scale in _suffix_offsets(word, params.b):
        y = projective_step(base + x * scale, y, params, v)
    return y if np.ndim(y) else float(y)


def _children_graphs(word: Word, children: np.ndarray, xs: np.ndarray, params: SystemParams, v: PotentialSpec) -> np.ndarray:
    """phi_{word j}(xs) for every child j, shape (len(children), len(xs))."""
    b = params.b
    n = len(word)
    y = np.full((children.size, xs.size), math.atan(params.lam))
    local = (children[:, None] - 1.0) + xs[None, :]
    for k in range(n + 1):
        L = n + 1 - k
        base = float(Fraction(word_index(word[k:], b) * b, b ** L)) if k < n else 0.0
        y = projective_step(base + local * float(b) ** -L, y, params, v)
    return y


@dataclass(frozen=True)
class DerivativeBudget:
    """(lam ||v'|| / b) sum_{i=0..m} (2 lam^2 / b)^i, with the large-b cap 2||v'||/lam^2."""

    m: int
    value: float
    cap: float
    cap_applies: bool


def derivative_budget(m: int, params: SystemParams, v: PotentialSpec) -> DerivativeBudget:
    if m < 0:
        raise ValueError("m must be >= 0")
    lam, b = params.lam, params.b
    ratio = 2.0 * lam * lam / b
    value = (lam * v.deriv_sup_norm / b) * math.fsum(ratio ** i for i in range(m + 1))
    return DerivativeBudget(
        m=m,
        value=value,
        cap=2.0 * v.deriv_sup_norm / lam ** 2,
        cap_applies=b >= lam ** 3 and lam > 4,
    )


@dataclass(frozen=True)
class ChildScan:
    """Grid minima of |tan phi| for the children of one node.

    ``bad`` is True unless the child is certified good (grid minimum at least
    sqrt(lam) + margin). ``marginal`` children have a grid minimum within the
    margin of sqrt(lam); they are the only ones whose status the grid cannot settle.
    """

    children: np.ndarray
    min_abs_tan: np.ndarray
    margin: float
    bad: np.ndarray
    marginal: np.ndarray


def badness_margin(depth: int, params: SystemParams, v: PotentialSpec, grid: int) -> float:
    """Lipschitz slack for the grid minimum of |tan phi| at the given graph depth.

    The angle derivative is at most derivative_budget(depth); on |tan y| <= sqrt(lam)
    the factor d tan/dy = 1 + tan^2 is at most 1 + lam; the nearest grid
    point is within 1/grid.
    """
    return derivative_budget(depth, params, v).value * (1.0 + params.lam) / grid


def child_badness(
    word: Sequence[int],
    params: SystemParams,
    v: PotentialSpec,
    grid: int | None = None,
    children: Sequence[int] | None = None,
) -> ChildScan:
    grid = default_grid(params.b) if grid is None else grid
    if grid < 64:
        raise ValueError("grid must be >= 64")
    word = validate_word(word, params.b)
    ch = np.arange(1, params.b + 1) if children is None else np.asarray(children, dtype=np.int64)
    xs = np.linspace(0.0, 1.0, grid)
    step = max(1, _CHUNK // grid)
    mins = np.concatenate([
        np.min(np.abs(np.tan(_children_graphs(word, ch[i:i + step], xs, params, v))), axis=1)
        for i in range(0, ch.size, step)
    ])
    margin = badness_margin(len(word) + 1, params, v, grid)
    root = params.sqrt_lambda
    return ChildScan(
        children=ch,
        min_abs_tan=mins,
        margin=margin,
        bad=mins < root + margin,
        marginal=np.abs(mins - root) < margin,
    )


@dataclass(frozen=True)
class LevelStats:
    level: int  # depth of the examined parent nodes; their children sit at level + 1
    nodes_examined: int
    children_examined: int
    max_bad_children: int
    bad_fraction_estimate: float
    max_bad_fraction: float
    marginal_children: int


@dataclass(frozen=True)
class CertificationReport:
    lam: float
    energy: float
    b: int
    potential: str
    depth: int
    strategy: str
    grid: int
    seed: int
    children_per_node: int | None
    nodes_per_level: int | None
    per_level: list[LevelStats]
    budget_q: int
    apriori_bound: int | None
    apriori_satisfied: bool | None
    hypothesis_verified: bool
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def apriori_bad_bound(params: SystemParams, v: PotentialSpec) -> int | None:
    """(s + 1)(2 + floor(2^beta lam^(-beta/2) b)) from the potential's sublevel parameters."""
    p = v.v1_params
    if p is None:
        return None
    return (p.s + 1) * (2 + math.floor(2.0 ** p.beta * params.lam ** (-p.beta / 2.0) * params.b))


def hypothesis_flags(params: SystemParams) -> list[str]:
    lam, e = params.lam, params.energy
    flags = []
    if abs(e) >= lam / 2:
        flags.append("energy_outside_graph_lemma")  # |E| < lam/2 is assumed for the derivative recursion
    if params.b < lam ** 3:
        flags.append("b_below_lambda_cubed")
    if lam / 3 + 2 * math.sqrt(lam) >= lam / 2:
        flags.append("energy_handoff_gap")  # large-energy bound does not reach down to lam/2
    return flags


def certify_tree(
    params: SystemParams,
    v: PotentialSpec,
    depth: int,
    strategy: str = "exhaustive",
    grid: int | None = None,
    seed: int = 0,
    children_per_node: int | None = None,
    nodes_per_level: int = 8,
) -> CertificationReport:
    """Walk the cylinder tree to ``depth`` and record bad-child counts per level.

    ``exhaustive`` visits every node; ``sampled`` examines ``nodes_per_level``
    uniformly drawn nodes per level (just the root at level 0) and
    ``children_per_node`` distinct children of each, seeded by ``seed``.
    For sampled nodes the bad count is scaled to all b children.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    b = params.b
    grid = default_grid(b) if grid is None else grid
    q = b // 12
    flags = hypothesis_flags(params)
    rng = np.random.default_rng(seed)
    per_level = []
    if strategy == "exhaustive":
        if b ** depth > EXHAUSTIVE_NODE_CAP:
            raise ValueError(f"exhaustive walk of {b}^{depth} nodes exceeds {EXHAUSTIVE_NODE_CAP}")
        k = b
    elif strategy == "sampled":
        if children_per_node is None:
            raise ValueError("sampled strategy needs children_per_node")
        k = min(int(children_per_node), b)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    verified = True
    for level in range(depth):
        if strategy == "exhaustive":
            nodes = itertools.product(range(1, b + 1), repeat=level)
        elif level == 0:
            nodes = [()]
        else:
            nodes = [tuple(int(d) for d in rng.integers(1, b + 1, size=level)) for _ in range(nodes_per_level)]
        n_nodes = n_children = total_bad = max_bad = marginal = 0
        max_frac = 0.0
        for node in nodes:
            children = None if k == b else np.sort(rng.choice(b, size=k, replace=False)) + 1
            scan = child_badness(node, params, v, grid, children)
            nb = int(scan.bad.sum())
            n_nodes += 1
            n_children += scan.children.size
            total_bad += nb
            marginal += int(scan.marginal.sum())
            frac = nb / scan.children.size
            max_frac = max(max_frac, frac)
            scaled = nb if k == b else math.ceil(frac * b)
            max_bad = max(max_bad, scaled)
            verified &= scaled <= q
        per_level.append(LevelStats(level, n_nodes, n_children, max_bad, total_bad / n_children, max_frac, marginal))

    apriori = apriori_bad_bound(params, v)
    if apriori is None:
        flags.append("missing_v1_params")
    return CertificationReport(
        lam=params.lam,
        energy=params.energy,
        b=b,
        potential=v.designator or v.name,
        depth=depth,
        strategy=strategy,
        grid=grid,
        seed=seed,
        children_per_node=None if strategy == "exhaustive" else k,
        nodes_per_level=None if strategy == "exhaustive" else nodes_per_level,
        per_level=per_level,
        budget_q=q,
        apriori_bound=apriori,
        apriori_satisfied=None if apriori is None else apriori < q,
        hypothesis_verified=verified,
        flags=flags,
    )


def _angle_diff(a, b):
    return np.mod(a - b + 0.5 * math.pi, math.pi) - 0.5 * math.pi


@dataclass(frozen=True)
class DerivativeCheck:
    max_abs_slope: float
    budget: float
    passed: bool


def graph_derivative_check(
    word: Sequence[int],
    params: SystemParams,
    v: PotentialSpec,
    grid: int = 256,
    h: float = 1e-4,
) -> DerivativeCheck:
    """Centered finite-difference slopes of phi_word against derivative_budget(depth)."""
    if params.b < params.lam ** 3:
        raise ValueError("derivative recursion assumes b >= lam^3")
    if not abs(params.energy) < params.lam / 2:
        raise ValueError("derivative recursion assumes |E| < lam/2")
    word = validate_word(word, params.b)
    budget = derivative_budget(len(word), params, v).value
    if not word:
        return DerivativeCheck(0.0, budget, True)
    xs = np.linspace(h, 1.0 - h, grid)
    slopes = _angle_diff(graph_eval(word, xs + h, params, v), graph_eval(word, xs - h, params, v)) / (2 * h)
    worst = float(np.max(np.abs(slopes)))
    return DerivativeCheck(worst, budget, worst <= budget * (1 + 1e-3))
