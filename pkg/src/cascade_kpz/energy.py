"""s-energies of point measures under the dyadic-ball "distance".

The distance between x and y is the measure of the smallest dyadic cube
holding both, so the s-energy of a probability measure nu is

    I_s(nu) = double integral of mu(B(x, y))^-s nu(dx) nu(dy).

Measures are represented by samples of the natural (uniform child
choice) measure on a set.  A bounded energy as the sampling depth grows
certifies a dimension lower bound; geometric growth signals t above the
dimension.  Growth is only ever classified, never declared infinite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dimension import CascadeFamily
from .dyadic import DEFAULT_MAX_DEPTH, cell_indices
from .errors import ContractError
from .hashing import derive_seeds, pack_words
from .parallel import pmap
from .tree import DISJOINT, child_bits


@dataclass
class EnergyEstimate:
    s: float
    value: float
    pair_count: int
    max_depth: int
    profile: dict = field(default_factory=dict)
    ratios: tuple = ()
    eventual_ratio: float | None = None
    growth: str | None = None
    rows: list = field(default_factory=list, repr=False)


def sample_natural_measure(o, depth: int, count: int, rng_seed) -> np.ndarray:
    """``count`` points of the natural measure of ``o`` resolved to depth ``depth``.

    Each point descends ``depth`` levels picking uniformly among the
    children that meet the set and is placed at the centre of the cube it
    reaches.  Returns an ``(count, d)`` array.
    """
    if not getattr(o, "sampleable", False):
        raise ContractError(f"no natural measure for set {o.spec()}")
    if depth < 1:
        raise ContractError(f"sampling depth must be >= 1, got {depth}")
    d = o.dim
    rng = np.random.default_rng(rng_seed)
    bits = child_bits(d)
    arity = 1 << d
    coords = np.zeros((count, d), dtype=np.uint64)
    for level in range(1, depth + 1):
        cand = (coords[:, None, :] << np.uint64(1)) | bits[None, :, :]
        flat = [cand[:, :, i].ravel() for i in range(d)]
        allowed = (o.classify_many(level, flat) != DISJOINT).reshape(count, arity)
        choice = np.floor(rng.random(count) * allowed.sum(axis=1)).astype(np.int64)
        pick = np.argmax(np.cumsum(allowed, axis=1) > choice[:, None], axis=1)
        coords = cand[np.arange(count), pick]
    return (coords.astype(np.float64) + 0.5) * 2.0**-depth


def _group(idx, depth: int, max_depth: int):
    """Group points by their depth-``depth`` cube: (inverse, counts, representative)."""
    coords = idx >> np.uint64(max_depth - depth)
    words = pack_words(depth, [coords[:, i] for i in range(idx.shape[1])])
    keys = np.stack(words, axis=1)
    _, first, inverse, counts = np.unique(keys, axis=0, return_index=True,
                                          return_inverse=True, return_counts=True)
    return inverse.ravel(), counts.astype(np.int64), first


def s_energy(measure, pts, s: float, max_depth: int = DEFAULT_MAX_DEPTH) -> EnergyEstimate:
    """(1/N^2) * sum over ordered pairs i != j of mu(B(x_i, x_j))^-s.

    Exact.  Pairs are not visited one by one: a cube A with ``c_A`` points
    is the ball of ``c_A (c_A - 1)`` ordered pairs minus those already
    claimed by its children, so the sum costs O(N * max_depth).
    """
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if n < 2:
        raise ContractError("at least two points are needed")
    if s < 0:
        raise ContractError(f"s must be >= 0, got {s}")
    idx = cell_indices(pts, max_depth)
    table = np.asarray(measure.ancestor_log2_masses(idx, max_depth))
    total = 0.0
    child = None
    for depth in range(max_depth, -1, -1):
        inverse, counts, rep = _group(idx, depth, max_depth)
        pairs = counts * (counts - 1)
        if child is not None:
            _, c_counts, c_rep = child
            np.subtract.at(pairs, inverse[c_rep], c_counts * (c_counts - 1))
        used = pairs > 0
        if used.any():
            total += float(np.dot(pairs[used], np.exp2(-s * table[rep[used], depth])))
        child = (inverse, counts, rep)
        if len(counts) == 1:
            # All points share this cube, so no coarser cube claims new pairs.
            break
    return EnergyEstimate(float(s), total / n**2, n * (n - 1), max_depth)


def classify_growth(profile_values, eps: float = 0.05, window: int = 2):
    """Successive ratios, their eventual value and a bounded/diverging label."""
    values = np.asarray(profile_values, dtype=np.float64)
    ratios = values[1:] / values[:-1]
    tail = ratios[-window:]
    eventual = float(np.exp(np.mean(np.log(tail))))
    return tuple(float(r) for r in ratios), eventual, ("diverging" if eventual > 1 + eps else "bounded")


def energy_growth_profile(measure, o, s: float, depths, n_points: int, seeds: int,
                          master_seed: int = 0, eps: float = 0.05, window: int = 2,
                          threads: int | None = None) -> EnergyEstimate:
    """Mean s-energy of fresh samples at each sampling depth (ball cap = depth).

    ``measure`` may be a ``CascadeFamily``, realised once per seed.
    """
    depths = [int(m) for m in depths]
    if len(depths) < 2:
        raise ContractError("a growth profile needs at least two depths")
    seed_list = derive_seeds(master_seed, seeds)

    def run(seed):
        oracle = measure.realize(seed) if isinstance(measure, CascadeFamily) else measure
        out = []
        for m in depths:
            pts = sample_natural_measure(o, m, n_points, (seed, m))
            out.append(s_energy(oracle, pts, s, max_depth=m).value)
        return out

    per_seed = pmap(run, seed_list, threads)
    label = measure.label()
    rows = [
        (o.spec(), label, seed, float(s), m, value)
        for seed, values in zip(seed_list, per_seed)
        for m, value in zip(depths, values)
    ]
    means = np.mean(np.array(per_seed), axis=0)
    profile = {m: float(v) for m, v in zip(depths, means)}
    ratios, eventual, growth = classify_growth(means, eps, window)
    return EnergyEstimate(
        s=float(s),
        value=float(means[-1]),
        pair_count=n_points * (n_points - 1) * len(seed_list),
        max_depth=depths[-1],
        profile=profile,
        ratios=ratios,
        eventual_ratio=eventual,
        growth=growth,
        rows=rows,
    )
