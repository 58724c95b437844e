"""Vectorised top-down enumeration of (pruned) dyadic subtrees.

Nodes travel as blocks: per-axis index arrays, the running sum of log2
level weights, and (when a set classifier is supplied) the cover class.
Large frontiers are split into fixed-size pieces and descended depth
first, so memory stays bounded and the output order depends only on the
inputs and ``CHUNK``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResourceError

#: Upper bound on the number of children materialised at once.
CHUNK = 1 << 20

DISJOINT, INTERSECTS, CONTAINED = 0, 1, 2


@dataclass
class Block:
    depth: int
    coords: list
    log2_weight: np.ndarray
    cover: np.ndarray | None

    def __len__(self):
        return len(self.log2_weight)


class Budget:
    """Counts generated nodes and raises once ``limit`` is passed."""

    def __init__(self, limit: int | None, label: str = ""):
        self.limit = limit
        self.label = label
        self.used = 0

    def spend(self, count: int, depth: int):
        self.used += count
        if self.limit is not None and self.used > self.limit:
            raise ResourceError(
                f"node budget {self.limit} exceeded at depth {depth} for set {self.label or '?'}",
                depth=depth,
                set_label=self.label,
            )


def child_bits(dim: int) -> np.ndarray:
    """``(2^d, d)`` table of the axis bits of every child symbol."""
    sym = np.arange(1 << dim, dtype=np.uint64)
    return np.stack([(sym >> np.uint64(i)) & np.uint64(1) for i in range(dim)], axis=1)


def expand(block: Block, dim: int, level_fn=None, classify_fn=None, budget=None) -> Block:
    """All children of ``block`` (minus Disjoint ones), parent-major, symbol-minor."""
    arity = 1 << dim
    bits = child_bits(dim)
    depth = block.depth + 1
    n = len(block)
    if budget is not None:
        budget.spend(n * arity, depth)
    coords = [
        ((c[:, None] << np.uint64(1)) | bits[None, :, i]).ravel() for i, c in enumerate(block.coords)
    ]
    weight = np.repeat(block.log2_weight, arity)
    cover = None
    if classify_fn is not None:
        parent = np.repeat(block.cover, arity)
        cover = np.where(parent == CONTAINED, CONTAINED, classify_fn(depth, coords)).astype(np.int8)
        keep = cover != DISJOINT
        if not keep.all():
            coords = [c[keep] for c in coords]
            weight = weight[keep]
            cover = cover[keep]
    if level_fn is not None and len(weight):
        weight = weight + level_fn(depth, coords)
    return Block(depth, coords, weight, cover)


def descend(block: Block, dim: int, target: int, record, level_fn=None, classify_fn=None,
            budget=None, chunk: int = CHUNK):
    """Yield the blocks at every depth in ``record`` down to ``target``."""
    if block.depth in record:
        yield block
    if block.depth >= target or len(block) == 0:
        return
    step = max(1, chunk >> dim)
    for start in range(0, len(block), step):
        sl = slice(start, start + step)
        piece = Block(
            block.depth,
            [c[sl] for c in block.coords],
            block.log2_weight[sl],
            None if block.cover is None else block.cover[sl],
        )
        yield from descend(
            expand(piece, dim, level_fn, classify_fn, budget),
            dim, target, record, level_fn, classify_fn, budget, chunk,
        )


def root_block(dim: int, depth: int = 0, coords=None, log2_weight: float = 0.0, cover=None) -> Block:
    coords = coords or (0,) * dim
    return Block(
        depth,
        [np.array([c], dtype=np.uint64) for c in coords],
        np.array([log2_weight], dtype=np.float64),
        None if cover is None else np.array([cover], dtype=np.int8),
    )
