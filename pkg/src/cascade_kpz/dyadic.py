"""Dyadic cubes of [0,1)^d, their ancestry, and the dyadic ball B(x, y).

A depth-``m`` cube is addressed by ``m`` child symbols.  Symbol bit ``i``
(least significant first) is the binary digit of axis ``i + 1`` at that
level, so in d=2 symbol 0 is the lower-left child and symbol 3 the
upper-right one.  Symbols are packed into one integer, first level in the
most significant position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

#: Depth cap used for coincident points; per-axis indices stay below 2**60.
DEFAULT_MAX_DEPTH = 60


@dataclass(frozen=True, order=True)
class DyadicAddress:
    dim: int
    depth: int
    path: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dim}")
        if self.depth < 0:
            raise DomainError(f"depth must be >= 0, got {self.depth}")
        if not 0 <= self.path < (1 << (self.depth * self.dim)):
            raise DomainError(f"path {self.path:#x} does not fit {self.depth} levels of {self.dim} bits")

    @classmethod
    def root(cls, dim: int) -> DyadicAddress:
        return cls(dim, 0, 0)

    @classmethod
    def from_symbols(cls, dim: int, symbols: Sequence[int]) -> DyadicAddress:
        path = 0
        arity = 1 << dim
        for sym in symbols:
            if not 0 <= sym < arity:
                raise DomainError(f"symbol {sym} outside [0, {arity})")
            path = (path << dim) | int(sym)
        return cls(dim, len(symbols), path)

    @classmethod
    def from_coords(cls, dim: int, depth: int, coords: Sequence[int]) -> DyadicAddress:
        """Build the address of the cube prod [j_i 2^-m, (j_i + 1) 2^-m)."""
        if len(coords) != dim:
            raise DomainError(f"expected {dim} coordinates, got {len(coords)}")
        for j in coords:
            if not 0 <= j < (1 << depth):
                raise DomainError(f"cube index {j} outside [0, 2^{depth})")
        path = 0
        for shift in range(depth - 1, -1, -1):
            sym = 0
            for i, j in enumerate(coords):
                sym |= ((int(j) >> shift) & 1) << i
            path = (path << dim) | sym
        return cls(dim, depth, path)

    @property
    def arity(self) -> int:
        return 1 << self.dim

    @property
    def symbols(self) -> tuple[int, ...]:
        mask = self.arity - 1
        return tuple(
            (self.path >> ((self.depth - level) * self.dim)) & mask
            for level in range(1, self.depth + 1)
        )

    @property
    def coords(self) -> tuple[int, ...]:
        js = [0] * self.dim
        for sym in self.symbols:
            for i in range(self.dim):
                js[i] = (js[i] << 1) | ((sym >> i) & 1)
        return tuple(js)

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple(
            (math.ldexp(j, -self.depth), math.ldexp(j + 1, -self.depth)) for j in self.coords
        )

    def lebesgue(self) -> float:
        return math.ldexp(1.0, -self.depth * self.dim)

    def child(self, symbol: int) -> DyadicAddress:
        if not 0 <= symbol < self.arity:
            raise DomainError(f"symbol {symbol} outside [0, {self.arity})")
        return DyadicAddress(self.dim, self.depth + 1, (self.path << self.dim) | symbol)

    def children(self) -> list[DyadicAddress]:
        return [self.child(sym) for sym in range(self.arity)]

    def ancestor(self, depth: int) -> DyadicAddress:
        if not 0 <= depth <= self.depth:
            raise DomainError(f"ancestor depth {depth} outside [0, {self.depth}]")
        return DyadicAddress(self.dim, depth, self.path >> ((self.depth - depth) * self.dim))

    def parent(self) -> DyadicAddress:
        return self.ancestor(self.depth - 1)

    def contains(self, other: DyadicAddress) -> bool:
        """True when ``other`` is this cube or one of its descendants."""
        return (
            other.dim == self.dim
            and other.depth >= self.depth
            and other.ancestor(self.depth) == self
        )

    def to_string(self) -> str:
        return f"{self.dim}:{self.depth}:{self.path:x}"

    @classmethod
    def parse(cls, text: str) -> DyadicAddress:
        try:
            d, m, hexpath = text.strip().split(":")
            return cls(int(d), int(m), int(hexpath, 16))
        except ValueError as exc:
            raise DomainError(f"malformed address {text!r}") from exc

    def __str__(self) -> str:
        return self.to_string()


def as_point(p, dim: int | None = None) -> tuple[float, ...]:
    """Validate a point of [0,1)^d and return it as a tuple of floats."""
    coords = (float(p),) if np.isscalar(p) else tuple(float(c) for c in p)
    if dim is not None and len(coords) != dim:
        raise DomainError(f"point {coords} has dimension {len(coords)}, expected {dim}")
    for c in coords:
        if not (0.0 <= c < 1.0):
            raise DomainError(f"coordinate {c!r} outside [0, 1)")
    return coords


def address_of(p, m: int, dim: int | None = None) -> DyadicAddress:
    """The depth-``m`` cube containing ``p`` (half-open convention)."""
    coords = as_point(p, dim)
    if m < 0:
        raise DomainError(f"depth must be >= 0, got {m}")
    js = [math.floor(math.ldexp(c, m)) for c in coords]
    return DyadicAddress.from_coords(len(coords), m, js)


def dyadic_ball(x, y, max_depth: int = DEFAULT_MAX_DEPTH) -> DyadicAddress:
    """Smallest dyadic cube holding both points, no deeper than ``max_depth``."""
    px = as_point(x)
    py = as_point(y, len(px))
    if max_depth < 0:
        raise DomainError(f"max_depth must be >= 0, got {max_depth}")
    split = 0
    for a, b in zip(px, py):
        ja = math.floor(math.ldexp(a, max_depth))
        jb = math.floor(math.ldexp(b, max_depth))
        split = max(split, (ja ^ jb).bit_length())
    return address_of(px, max_depth - split)


def children(a: DyadicAddress) -> list[DyadicAddress]:
    return a.children()


def lebesgue(a: DyadicAddress) -> float:
    return a.lebesgue()


# Vectorised helpers used by the enumeration and energy code.

def cell_indices(points, depth: int) -> np.ndarray:
    """Per-axis cube indices at ``depth`` for an ``(N, d)`` array of points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if np.any((pts < 0.0) | (pts >= 1.0)) or not np.all(np.isfinite(pts)):
        raise DomainError("points must lie in [0, 1)^d")
    return np.floor(np.ldexp(pts, depth)).astype(np.uint64)


def bit_length(x: np.ndarray) -> np.ndarray:
    """Elementwise ``int.bit_length`` for uint64 arrays."""
    x = np.asarray(x, dtype=np.uint64).copy()
    out = np.zeros(x.shape, dtype=np.int64)
    for shift in (32, 16, 8, 4, 2, 1):
        big = x >= (np.uint64(1) << np.uint64(shift))
        out[big] += shift
        x[big] >>= np.uint64(shift)
    out += (x > 0)
    return out


def common_depth(idx_a: np.ndarray, idx_b: np.ndarray, max_depth: int) -> np.ndarray:
    """Depth of the dyadic ball for index pairs given at ``max_depth``.

    ``idx_a`` and ``idx_b`` broadcast against each other and carry the axis
    in their last dimension.
    """
    split = bit_length(np.bitwise_xor(idx_a, idx_b)).max(axis=-1)
    return max_depth - split
