"""Cover-based dimension of a set relative to a measure.

For a depth-n uniform cover of a set ``E`` the partition function is

    Z_n(s) = sum over depth-n cubes A meeting E of mu(A)^s.

The normalised growth rate ``lambda(s) = slope_n(log2 Z_n(s)) / d`` is
positive while the s-dimensional cover sums blow up and negative once
they vanish, so the dimension is the zero of ``lambda``.  Only slopes
enter the estimate: anything multiplying ``Z_n`` by an n-independent
factor (notably the truncated cascade tail) drops out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import tree
from .cascade import DEFAULT_NODE_BUDGET, CascadeMeasure, tail_rule_name
from .dyadic import DyadicAddress
from .errors import ContractError, DomainError, EstimationError, PreconditionError
from .hashing import derive_seeds
from .logspace import log2sumexp2
from .parallel import pmap
from .weights import WeightModel, validate

DEFAULT_S_GRID = tuple(round(0.05 * i, 10) for i in range(21))
DEFAULT_N_MAX = {1: 16, 2: 12, 3: 8}


# -- measure oracles -----------------------------------------------------------

@dataclass(frozen=True)
class LebesgueMeasure:
    dim: int

    level_fn = None
    # Every cube of a given depth has the same mass, so covers only need counts.
    uniform = True

    def label(self) -> str:
        return "lebesgue"

    def finalize(self, depth, coords, log2_weight):
        return np.full(len(log2_weight), -float(depth * self.dim))

    def log2_mass(self, a: DyadicAddress) -> float:
        return -float(a.depth * a.dim)

    def ancestor_log2_masses(self, idx, max_depth: int) -> np.ndarray:
        """``(N, max_depth + 1)`` table of log2 masses of each point's ancestors."""
        row = -self.dim * np.arange(max_depth + 1, dtype=np.float64)
        return np.broadcast_to(row, (len(idx), max_depth + 1))


@dataclass(frozen=True)
class CascadeOracle:
    """One cascade realisation with a fixed truncation rule."""

    cascade: CascadeMeasure
    tail_extra: int = 0

    uniform = False

    @property
    def dim(self) -> int:
        return self.cascade.dim

    @property
    def level_fn(self):
        return self.cascade.level_log2_weight

    @property
    def seed(self) -> int:
        return self.cascade.seed

    def label(self) -> str:
        return f"cascade[{self.cascade.model.spec()},{self.cascade.refinement},{tail_rule_name(self.tail_extra)}]"

    def finalize(self, depth, coords, log2_weight):
        out = log2_weight - depth * self.dim
        if self.tail_extra:
            out = out + self.cascade.tail_log2(depth, coords, self.tail_extra)
        return out

    def log2_mass(self, a: DyadicAddress) -> float:
        return self.cascade.mass(a, a.depth, self.tail_extra).log2_mass

    def ancestor_log2_masses(self, idx, max_depth: int) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.uint64)
        n = len(idx)
        out = np.empty((n, max_depth + 1))
        cum = np.zeros(n)
        out[:, 0] = self.finalize(0, [np.zeros(n, dtype=np.uint64)] * self.dim, cum)
        for k in range(1, max_depth + 1):
            coords = [idx[:, i] >> np.uint64(max_depth - k) for i in range(self.dim)]
            cum = cum + self.cascade.level_log2_weight(k, coords)
            out[:, k] = self.finalize(k, coords, cum)
        return out


@dataclass(frozen=True)
class CascadeFamily:
    """The law of a cascade: realised once per seed by the estimators."""

    model: WeightModel
    refinement: str = "axis"
    tail_extra: int = 0

    @property
    def dim(self) -> int:
        return self.model.d

    def realize(self, seed: int) -> CascadeOracle:
        return CascadeOracle(CascadeMeasure(seed, self.model, self.refinement), self.tail_extra)

    def label(self) -> str:
        return f"cascade[{self.model.spec()},{self.refinement},{tail_rule_name(self.tail_extra)}]"


MeasureOracle = Union[LebesgueMeasure, CascadeOracle]


# -- covers and partition sums -------------------------------------------------

@dataclass
class CoverMasses:
    """log2 masses of the cubes of the uniform covers at the recorded depths.

    ``multiplicity`` optionally maps a depth to the integer number of cubes
    sharing each listed mass (used for uniform measures).
    """

    dim: int
    masses: dict
    set_label: str
    measure_label: str
    multiplicity: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def count(self, n: int) -> int:
        if n in self.multiplicity:
            return int(sum(self.multiplicity[n]))
        return len(self.masses[n])

    def log2_Z(self, n: int, s: float) -> float:
        key = (n, float(s))
        if key not in self._cache:
            terms = s * self.masses[n]
            if n in self.multiplicity:
                terms = terms + np.array([math.log2(c) for c in self.multiplicity[n]])
            self._cache[key] = log2sumexp2(terms)
        return self._cache[key]


def enumerate_cover(measure, o, depths, node_budget: int | None = DEFAULT_NODE_BUDGET) -> CoverMasses:
    """Walk the pruned subdivision tree of ``o`` and keep cube masses at ``depths``."""
    if measure.dim != o.dim:
        raise DomainError(f"measure dimension {measure.dim} does not match set dimension {o.dim}")
    depths = sorted({int(n) for n in depths})
    if not depths or depths[0] < 0:
        raise ContractError("depths must be non-negative")
    d = o.dim
    root_cover = int(o.classify_many(0, [np.zeros(1, dtype=np.uint64)] * d)[0])
    if root_cover == tree.DISJOINT:
        raise EstimationError(f"set {o.spec()} is empty")
    start = tree.root_block(d, cover=root_cover)
    budget = tree.Budget(node_budget, o.spec())
    if getattr(measure, "uniform", False):
        return _count_cover(measure, o, depths, start, budget)
    parts = {n: [] for n in depths}
    for block in tree.descend(start, d, depths[-1], set(depths), measure.level_fn,
                              o.classify_many, budget):
        parts[block.depth].append(measure.finalize(block.depth, block.coords, block.log2_weight))
    masses = {n: np.concatenate(parts[n]) if parts[n] else np.empty(0) for n in depths}
    return CoverMasses(d, masses, o.spec(), measure.label())


def _count_cover(measure, o, depths, start, budget) -> CoverMasses:
    # Contained cubes are not expanded: each has 2^((n-m)d) depth-n descendants.
    d = o.dim
    contained = {}
    counts = {}
    block = start
    for m in range(depths[-1] + 1):
        if block.cover is not None and len(block):
            inner = block.cover == tree.CONTAINED
            if inner.any():
                contained[m] = contained.get(m, 0) + int(inner.sum())
                keep = ~inner
                block = tree.Block(m, [c[keep] for c in block.coords], block.log2_weight[keep], block.cover[keep])
        if m in depths:
            counts[m] = len(block) + sum(c << ((m - mm) * d) for mm, c in contained.items())
        if m < depths[-1] and len(block):
            block = tree.expand(block, d, None, o.classify_many, budget)
    masses = {n: np.array([-float(n * d)]) for n in depths}
    return CoverMasses(d, masses, o.spec(), measure.label(), {n: [counts[n]] for n in depths})


def partition_sum(measure, o, n: int, s: float, node_budget: int | None = DEFAULT_NODE_BUDGET) -> float:
    """log2 Z_n(s) over the depth-n cover of ``o``."""
    if n < 1:
        raise ContractError(f"depth must be >= 1, got {n}")
    if s < 0:
        raise ContractError(f"s must be >= 0, got {s}")
    return enumerate_cover(measure, o, [n], node_budget).log2_Z(n, s)


@dataclass
class PartitionSumTable:
    set_label: str
    measure_label: str
    seed: int | None
    dim: int
    depths: tuple
    s_values: tuple
    log2_Z: np.ndarray

    @classmethod
    def from_cover(cls, cover: CoverMasses, s_values, seed=None) -> PartitionSumTable:
        depths = tuple(sorted(cover.masses))
        s_values = tuple(float(s) for s in s_values)
        values = np.array([[cover.log2_Z(n, s) for s in s_values] for n in depths])
        return cls(cover.set_label, cover.measure_label, seed, cover.dim, depths, s_values, values)

    def column(self, s: float) -> np.ndarray:
        for j, v in enumerate(self.s_values):
            if abs(v - s) <= 1e-12:
                return self.log2_Z[:, j]
        raise ContractError(f"s={s} is not tabulated")

    def rows(self):
        seed = "" if self.seed is None else self.seed
        for i, n in enumerate(self.depths):
            for j, s in enumerate(self.s_values):
                yield (self.set_label, self.measure_label, seed, n, s, float(self.log2_Z[i, j]))


def _select(depths, n_range):
    lo, hi = n_range
    ns = [n for n in depths if lo <= n <= hi]
    if len(ns) < 3:
        raise ContractError(f"need at least 3 depths in {n_range}, have {ns}")
    return ns


def _slope(ns, ys) -> float:
    x = np.asarray(ns, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def scaling_slope(t: PartitionSumTable, s: float, n_range) -> float:
    """Least-squares slope of log2 Z_n(s) in n, divided by d."""
    ns = _select(t.depths, n_range)
    col = t.column(s)
    ys = [col[t.depths.index(n)] for n in ns]
    return _slope(ns, ys) / t.dim


def find_zero(fn, grid, tol: float = 1e-4, edge_tol: float = 0.05, bounds=(0.0, 1.0)):
    """Zero of a decreasing function sampled on ``grid``.

    The sign change between grid points is narrowed by bisection to width
    ``tol`` and finished with a linear interpolation.  Without a sign
    change the root is placed on the end of the grid when that end is one
    of the a-priori ``bounds`` of the dimension, or when ``|fn|`` there is
    within ``edge_tol``; otherwise the estimate fails.
    """
    grid = [float(s) for s in grid]
    values = [fn(s) for s in grid]
    diagnostics = {"s_grid": grid, "lambda": values}
    if values[0] <= 0:
        if grid[0] <= bounds[0] or values[0] >= -edge_tol:
            return grid[0], values
        raise EstimationError("lambda is negative at the start of the grid", diagnostics)
    for i in range(len(grid) - 1):
        if values[i] > 0 >= values[i + 1]:
            break
    else:
        if grid[-1] >= bounds[1] or values[-1] <= edge_tol:
            return grid[-1], values
        raise EstimationError("lambda has no sign change on the grid", diagnostics)
    lo, hi, flo, fhi = grid[i], grid[i + 1], values[i], values[i + 1]
    if fhi == 0:
        return hi, values
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm > 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo + (hi - lo) * flo / (flo - fhi), values


# -- estimation ----------------------------------------------------------------

@dataclass
class DimensionConfig:
    n_min: int = 4
    n_max: int = 12
    s_grid: tuple = DEFAULT_S_GRID
    seeds: int = 20
    master_seed: int = 0
    threads: int | None = None
    node_budget: int | None = DEFAULT_NODE_BUDGET
    bisect_tol: float = 1e-4
    edge_tol: float = 0.05

    def __post_init__(self):
        if self.n_min < 1 or self.n_max - self.n_min < 2:
            raise ContractError(f"depth range {self.n_min}..{self.n_max} needs at least 3 depths >= 1")
        if self.seeds < 1:
            raise ContractError("at least one seed is required")


@dataclass
class SeedEstimate:
    seed: int | None
    zeta: float
    slopes: tuple
    table: PartitionSumTable


@dataclass
class DimensionEstimate:
    zeta_hat: float
    stderr: float
    slope_fn: tuple
    n_range: tuple
    seeds_used: int
    per_seed: tuple = ()
    set_label: str = ""
    measure_label: str = ""
    tables: list = field(default_factory=list, repr=False)

    @property
    def n_min(self) -> int:
        return self.n_range[0]

    @property
    def n_max(self) -> int:
        return self.n_range[1]

    @property
    def zeta_std(self) -> float:
        values = [z for _, z in self.per_seed]
        return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0

    def to_json(self) -> dict:
        return {
            "set": self.set_label,
            "measure": self.measure_label,
            "zeta_hat": self.zeta_hat,
            "stderr": self.stderr,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "seeds": self.seeds_used,
            "zeta_std": self.zeta_std,
            "per_seed": [{"seed": s, "zeta_hat": z} for s, z in self.per_seed],
            "slope_fn": [{"s": s, "lambda": v} for s, v in self.slope_fn],
        }


def estimate_single(oracle, o, cfg: DimensionConfig, seed=None) -> SeedEstimate:
    """Zero crossing of lambda for one measure realisation."""
    depths = list(range(cfg.n_min, cfg.n_max + 1))
    cover = enumerate_cover(oracle, o, depths, cfg.node_budget)

    def lam(s):
        return _slope(depths, [cover.log2_Z(n, s) for n in depths]) / o.dim

    zeta, slopes = find_zero(lam, cfg.s_grid, cfg.bisect_tol, cfg.edge_tol)
    zeta = min(1.0, max(0.0, zeta))
    table = PartitionSumTable.from_cover(cover, cfg.s_grid, seed)
    return SeedEstimate(seed, zeta, tuple(slopes), table)


def _require_valid(model):
    report = validate(model)
    if not report.ok:
        raise PreconditionError(f"weight model {model.spec()} fails validation: {report.failures()}")


def estimate_dimension(measure, o, cfg: DimensionConfig | None = None) -> DimensionEstimate:
    """Dimension of ``o`` under ``measure``.

    ``measure`` is a ``LebesgueMeasure``, a single ``CascadeOracle``, or a
    ``CascadeFamily`` realised ``cfg.seeds`` times from ``cfg.master_seed``;
    per-seed estimates are aggregated as mean and standard error.
    """
    cfg = cfg or DimensionConfig()
    if isinstance(measure, CascadeFamily):
        _require_valid(measure.model)
        seeds = derive_seeds(cfg.master_seed, cfg.seeds)
        runs = pmap(lambda sd: estimate_single(measure.realize(sd), o, cfg, sd), seeds, cfg.threads)
    elif isinstance(measure, CascadeOracle):
        _require_valid(measure.cascade.model)
        runs = [estimate_single(measure, o, cfg, measure.seed)]
    else:
        runs = [estimate_single(measure, o, cfg)]
    zetas = np.array([r.zeta for r in runs])
    stderr = float(np.std(zetas, ddof=1) / math.sqrt(len(zetas))) if len(zetas) > 1 else 0.0
    mean_slopes = np.mean([r.slopes for r in runs], axis=0)
    return DimensionEstimate(
        zeta_hat=float(zetas.mean()),
        stderr=stderr,
        slope_fn=tuple(zip(map(float, cfg.s_grid), map(float, mean_slopes))),
        n_range=(cfg.n_min, cfg.n_max),
        seeds_used=len(runs),
        per_seed=tuple((r.seed, r.zeta) for r in runs),
        set_label=o.spec(),
        measure_label=measure.label(),
        tables=[r.table for r in runs],
    )
