"""Multiplicative cascade measures on the dyadic subdivision of [0,1)^d.

A realisation is fixed by ``(seed, model, refinement)``; the weight at a
node is a hash of the seed and the node's address pushed through the
weight law, so nothing is stored and any subtree can be regenerated.

Each level of the 2^d-ary tree is one of two things:

``"axis"`` (default)
    the cube is halved along axis 1, then axis 2, ..., and every half-box
    gets its own independent weight, so a depth-n cube carries ``n*d``
    weights and ``E[mu(A)^s] = |A|^s E[W^s]^(n d)`` under truncation.
``"cube"``
    a single weight per child cube; a depth-n cube carries ``n`` weights.

Both coincide in d=1.  The root carries no weight, so ``mu_0`` is
Lebesgue measure.  All masses are kept as base-2 logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tree
from .dyadic import DyadicAddress
from .errors import ContractError, DomainError
from .hashing import HASH_VERSION, address_uniforms
from .logspace import log2sumexp2
from .weights import WeightModel

REFINEMENTS = ("axis", "cube")
DEFAULT_NODE_BUDGET = 1 << 26


def tail_rule_name(tail_extra: int) -> str:
    return "mean_one" if tail_extra == 0 else f"extended({tail_extra})"


def parse_tail_rule(text: str) -> int:
    text = text.strip()
    if text == "mean_one":
        return 0
    if text.startswith("extended(") and text.endswith(")"):
        try:
            q = int(text[len("extended("):-1])
        except ValueError:
            q = -1
        if q >= 0:
            return q
    raise DomainError(f"unknown tail rule {text!r}; expected mean_one or extended(q)")


@dataclass(frozen=True)
class MassEstimate:
    log2_mass: float
    trunc_depth: int
    address: DyadicAddress
    tail_rule: str = "mean_one"

    @property
    def value(self) -> float:
        return 2.0 ** self.log2_mass


@dataclass(frozen=True)
class CascadeMeasure:
    seed: int
    model: WeightModel
    refinement: str = "axis"
    hash_version: str = HASH_VERSION

    def __post_init__(self):
        if self.refinement not in REFINEMENTS:
            raise DomainError(f"refinement must be one of {REFINEMENTS}, got {self.refinement!r}")
        if self.hash_version != HASH_VERSION:
            raise ContractError(
                f"hash version {self.hash_version!r} is not provided by this build ({HASH_VERSION!r})"
            )
        object.__setattr__(self, "seed", int(self.seed) & ((1 << 64) - 1))

    @property
    def dim(self) -> int:
        return self.model.d

    @property
    def weights_per_level(self) -> int:
        return self.dim if self.refinement == "axis" else 1

    def label(self) -> str:
        return f"cascade[{self.model.spec()},{self.refinement},seed={self.seed}]"

    # -- weights -------------------------------------------------------------

    def _draw(self, seed, depth, step, coords):
        u1, u2 = address_uniforms(seed, self.dim, depth, step, coords, pair=self.model.needs_pair)
        return self.model.log2_sample(u1, u2)

    def level_log2_weight(self, depth: int, coords, seed=None) -> np.ndarray:
        """Sum of log2 weights the cubes at ``depth`` pick up at that level.

        ``coords`` holds one index array per axis; ``seed`` (int or uint64
        array) overrides the measure's own seed and broadcasts.
        """
        seed = self.seed if seed is None else seed
        total = self._draw(seed, depth, 0, coords)
        if self.refinement == "axis":
            for step in range(1, self.dim):
                box = [c if i < step else c >> np.uint64(1) for i, c in enumerate(coords)]
                total = total + self._draw(seed, depth, step, box)
        return total

    def node_weight(self, a: DyadicAddress) -> float:
        """The weight W attached to cube ``a`` itself."""
        self._check_dim(a)
        if a.depth < 1:
            raise ContractError("the root cube carries no weight")
        coords = [np.array([c], dtype=np.uint64) for c in a.coords]
        return float(np.exp2(self._draw(self.seed, a.depth, 0, coords))[0])

    def prefix_log2_weight(self, a: DyadicAddress) -> float:
        """log2 of the product of every weight on the path root -> ``a``."""
        self._check_dim(a)
        total = 0.0
        for m in range(1, a.depth + 1):
            coords = [np.array([c], dtype=np.uint64) for c in a.ancestor(m).coords]
            total += float(self.level_log2_weight(m, coords)[0])
        return total

    # -- masses --------------------------------------------------------------

    def mass(self, a: DyadicAddress, n: int, tail_extra: int = 0,
             node_budget: int | None = DEFAULT_NODE_BUDGET) -> MassEstimate:
        """mu_n(a); ``tail_extra = q`` descends q further levels instead of using mean one."""
        self._check_dim(a)
        if n < a.depth:
            raise ContractError(f"truncation depth {n} is above the cube depth {a.depth}")
        if tail_extra < 0:
            raise ContractError("tail_extra must be >= 0")
        depth = n + tail_extra
        prefix = self.prefix_log2_weight(a)
        if depth == a.depth:
            log2_sum = prefix
        else:
            start = tree.root_block(self.dim, a.depth, a.coords, prefix)
            budget = tree.Budget(node_budget, "subtree")
            parts = [
                log2sumexp2(b.log2_weight)
                for b in tree.descend(start, self.dim, depth, {depth}, self.level_log2_weight, budget=budget)
            ]
            log2_sum = log2sumexp2(parts)
        return MassEstimate(log2_sum - depth * self.dim, n, a, tail_rule_name(tail_extra))

    def total_mass(self, n: int, tail_extra: int = 0) -> float:
        if n < 0:
            raise ContractError("truncation depth must be >= 0")
        return self.mass(DyadicAddress.root(self.dim), n, tail_extra).value

    def slab_masses(self, axis: int, ks, n: int, tail_extra: int = 0,
                    node_budget: int | None = DEFAULT_NODE_BUDGET) -> list[float]:
        """mu_n of the slabs ``|x_axis - 1/2| <= 2^-k`` (half-open) for each k, in one pass."""
        if not 1 <= axis <= self.dim:
            raise ContractError(f"axis must lie in [1, {self.dim}], got {axis}")
        ks = [int(k) for k in ks]
        for k in ks:
            if not 1 <= k <= n:
                raise ContractError(f"slab level {k} must lie in [1, {n}]")
        depth = n + tail_extra
        parts = {k: [] for k in ks}
        budget = tree.Budget(node_budget, "slab")
        for block in tree.descend(tree.root_block(self.dim), self.dim, depth, {depth},
                                  self.level_log2_weight, budget=budget):
            column = block.coords[axis - 1]
            for k in ks:
                j = column >> np.uint64(depth - k)
                half = np.uint64(1 << (k - 1))
                inside = (j == half) | (j == half - np.uint64(1))
                parts[k].append(log2sumexp2(block.log2_weight[inside]))
        return [2.0 ** (log2sumexp2(parts[k]) - depth * self.dim) for k in ks]

    def slab_mass(self, axis: int, k: int, n: int, tail_extra: int = 0) -> float:
        return self.slab_masses(axis, [k], n, tail_extra)[0]

    def tail_log2(self, depth: int, coords, tail_extra: int) -> np.ndarray:
        """log2 of ``2^(-q d) * sum`` of the weight products ``q`` levels below each cube."""
        n = len(coords[0])
        if tail_extra == 0:
            return np.zeros(n)
        out = np.empty(n)
        fan = 1 << (tail_extra * self.dim)
        step = max(1, tree.CHUNK // fan)
        for start in range(0, n, step):
            sl = slice(start, start + step)
            block = tree.Block(depth, [c[sl] for c in coords], np.zeros(len(coords[0][sl])), None)
            for _ in range(tail_extra):
                block = tree.expand(block, self.dim, self.level_log2_weight)
            out[sl] = log2sumexp2(block.log2_weight.reshape(-1, fan), axis=1)
        return out - tail_extra * self.dim

    def _check_dim(self, a: DyadicAddress):
        if a.dim != self.dim:
            raise DomainError(f"address of dimension {a.dim} used with a {self.dim}-dimensional cascade")


def node_weight(c: CascadeMeasure, a: DyadicAddress) -> float:
    return c.node_weight(a)


def mass(c: CascadeMeasure, a: DyadicAddress, n: int, tail_extra: int = 0) -> MassEstimate:
    return c.mass(a, n, tail_extra)


def total_mass(c: CascadeMeasure, n: int, tail_extra: int = 0) -> float:
    return c.total_mass(n, tail_extra)


def slab_mass(c: CascadeMeasure, axis: int, k: int, n: int) -> float:
    return c.slab_mass(axis, k, n)


def batch_log2_mass(model: WeightModel, seeds, a: DyadicAddress, n: int,
                    refinement: str = "axis", max_cells: int = 1 << 21) -> np.ndarray:
    """log2 mu_n(a) for many seeds at once (mean-one tail).

    Vectorises across seeds and the subtree together; equal, seed for
    seed, to ``CascadeMeasure(seed, model, refinement).mass(a, n)``.
    """
    if n < a.depth:
        raise ContractError(f"truncation depth {n} is above the cube depth {a.depth}")
    seeds = np.asarray([int(s) & ((1 << 64) - 1) for s in seeds], dtype=np.uint64)
    proto = CascadeMeasure(0, model, refinement)
    d = proto.dim
    leaves = 1 << ((n - a.depth) * d)
    per_batch = max(1, max_cells // leaves)
    bits = tree.child_bits(d)
    out = np.empty(len(seeds))
    for start in range(0, len(seeds), per_batch):
        sd = seeds[start:start + per_batch, None]
        cum = np.zeros((len(sd), 1))
        for m in range(1, a.depth + 1):
            coords = [np.array([c], dtype=np.uint64) for c in a.ancestor(m).coords]
            cum = cum + proto.level_log2_weight(m, coords, seed=sd)
        coords = [np.array([c], dtype=np.uint64) for c in a.coords]
        for m in range(a.depth + 1, n + 1):
            coords = [((c[:, None] << np.uint64(1)) | bits[None, :, i]).ravel() for i, c in enumerate(coords)]
            cum = np.repeat(cum, 1 << d, axis=1) + proto.level_log2_weight(m, coords, seed=sd)
        out[start:start + per_batch] = log2sumexp2(cum, axis=1)
    return out - n * d


def truncated_log2_moment(model: WeightModel, depth: int, s: float, refinement: str = "axis") -> float:
    """log2 E[mu_depth(A)^s] for a depth-``depth`` cube under the mean-one tail."""
    d = model.d
    weights = depth * (d if refinement == "axis" else 1)
    return -depth * d * s + weights * float(model.log2_moment(s))


def second_moment_oracle(model: WeightModel, n: int | None, refinement: str = "axis") -> float:
    """E[l_n^2] for the total mass, from the one-step recursion.

    ``cube``: ``x_k = 2^-d E[W^2] x_(k-1) + (1 - 2^-d)`` over n levels;
    ``axis``: the binary version over ``n d`` half-splits.  ``n=None``
    gives the fixed point (``inf`` when it does not exist).
    """
    w2 = float(model.moment(2.0))
    branch = 2 if refinement == "axis" else 1 << model.d
    steps = None if n is None else (n * model.d if refinement == "axis" else n)
    ratio = w2 / branch
    fixed = (1 - 1 / branch) / (1 - ratio) if ratio < 1 else math.inf
    if steps is None:
        return fixed
    x = 1.0
    for _ in range(steps):
        x = ratio * x + (1 - 1 / branch)
    return x
