"""Dyadic-native test sets described by a three-valued cube classifier.

Every set answers, exactly, whether a dyadic cube misses it (DISJOINT),
lies inside it (CONTAINED) or neither (INTERSECTS).  Classifiers are
monotone under refinement, which is what lets covers prune whole
subtrees.  ``classify`` works on one address; ``classify_many`` is the
vectorised form used during enumeration.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .dyadic import DyadicAddress, as_point, address_of
from .errors import ConfigError, DomainError
from .grammar import Call, number, parse_call
from .tree import CONTAINED, DISJOINT, INTERSECTS


class Cover(enum.IntEnum):
    DISJOINT = DISJOINT
    INTERSECTS = INTERSECTS
    CONTAINED = CONTAINED


class _Base:
    dim: int

    def _check(self, a: DyadicAddress):
        if a.dim != self.dim:
            raise DomainError(f"{a.dim}-dimensional cube classified against a {self.dim}-dimensional set")

    def label(self) -> str:
        return self.spec()


@dataclass(frozen=True)
class FullCube(_Base):
    dim: int

    sampleable = True

    def classify(self, a: DyadicAddress) -> Cover:
        self._check(a)
        return Cover.CONTAINED

    def classify_many(self, depth, coords):
        return np.full(len(coords[0]), CONTAINED, dtype=np.int8)

    @property
    def analytic_zeta0(self):
        return 1.0

    def spec(self) -> str:
        return "fullcube"


@dataclass(frozen=True)
class DyadicCantor(_Base):
    """Points whose every address symbol lies in ``keep``."""

    dim: int
    keep: tuple

    sampleable = True

    def __post_init__(self):
        arity = 1 << self.dim
        keep = tuple(sorted({int(k) for k in self.keep}))
        if not keep:
            raise DomainError("cantor set needs at least one kept symbol")
        if keep[0] < 0 or keep[-1] >= arity:
            raise DomainError(f"kept symbols must lie in [0, {arity})")
        if len(keep) < arity:
            # Under half-open cubes an axis whose bit is forced to 1 at every
            # level only reaches the excluded face x_i = 1.
            for i in range(self.dim):
                if all((k >> i) & 1 for k in keep):
                    raise DomainError(
                        f"keep={list(keep)} forces axis {i + 1} to 1 at every level; the set is empty in [0,1)^d"
                    )
        object.__setattr__(self, "keep", keep)

    @property
    def k(self) -> int:
        return len(self.keep)

    @property
    def full(self) -> bool:
        return self.k == 1 << self.dim

    def classify(self, a: DyadicAddress) -> Cover:
        self._check(a)
        if self.full:
            return Cover.CONTAINED
        if all(sym in self.keep for sym in a.symbols):
            return Cover.INTERSECTS
        return Cover.DISJOINT

    def classify_many(self, depth, coords):
        n = len(coords[0])
        if self.full:
            return np.full(n, CONTAINED, dtype=np.int8)
        table = np.zeros(1 << self.dim, dtype=bool)
        table[list(self.keep)] = True
        ok = np.ones(n, dtype=bool)
        one = np.uint64(1)
        for shift in range(depth):
            sym = np.zeros(n, dtype=np.int64)
            for i, c in enumerate(coords):
                sym |= ((c >> np.uint64(shift)) & one).astype(np.int64) << i
            ok &= table[sym]
        return np.where(ok, INTERSECTS, DISJOINT).astype(np.int8)

    @property
    def analytic_zeta0(self):
        return math.log2(self.k) / self.dim

    def spec(self) -> str:
        return f"cantor(keep=[{','.join(str(k) for k in self.keep)}])"


@dataclass(frozen=True)
class AxisSlice(_Base):
    """The hyperplane ``x_axis = coord`` (axes numbered from 1)."""

    dim: int
    axis: int
    coord: Fraction

    sampleable = False

    def __post_init__(self):
        if not 1 <= self.axis <= self.dim:
            raise DomainError(f"axis must lie in [1, {self.dim}], got {self.axis}")
        coord = self.coord
        # Floats are read as the decimal they print as, so 0.3 means 3/10.
        coord = Fraction(repr(coord)) if isinstance(coord, float) else Fraction(coord)
        den = coord.denominator
        if den & (den - 1):
            raise DomainError(f"slice coordinate {coord} is not a dyadic rational")
        if not 0 <= coord < 1:
            raise DomainError(f"slice coordinate {coord} outside [0, 1)")
        object.__setattr__(self, "coord", coord)

    def _index(self, depth: int) -> int:
        return math.floor(self.coord * (1 << depth))

    def classify(self, a: DyadicAddress) -> Cover:
        self._check(a)
        lo, hi = a.bounds[self.axis - 1]
        # Exact: bounds are dyadic and compared as fractions.
        inside = Fraction(lo) <= self.coord < Fraction(hi)
        return Cover.INTERSECTS if inside else Cover.DISJOINT

    def classify_many(self, depth, coords):
        hit = coords[self.axis - 1] == np.uint64(self._index(depth))
        return np.where(hit, INTERSECTS, DISJOINT).astype(np.int8)

    @property
    def analytic_zeta0(self):
        return (self.dim - 1) / self.dim

    def spec(self) -> str:
        return f"slice(axis={self.axis},coord={float(self.coord)!r})"


@dataclass(frozen=True)
class Singleton(_Base):
    point: tuple

    sampleable = True

    def __post_init__(self):
        object.__setattr__(self, "point", as_point(self.point))

    @property
    def dim(self) -> int:
        return len(self.point)

    def classify(self, a: DyadicAddress) -> Cover:
        self._check(a)
        return Cover.INTERSECTS if address_of(self.point, a.depth) == a else Cover.DISJOINT

    def classify_many(self, depth, coords):
        hit = np.ones(len(coords[0]), dtype=bool)
        for x, c in zip(self.point, coords):
            hit &= c == np.uint64(math.floor(math.ldexp(x, depth)))
        return np.where(hit, INTERSECTS, DISJOINT).astype(np.int8)

    @property
    def analytic_zeta0(self):
        return 0.0

    def spec(self) -> str:
        return f"singleton({','.join(repr(x) for x in self.point)})"


@dataclass(frozen=True)
class FiniteUnion(_Base):
    members: tuple

    sampleable = False

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DomainError("union needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DomainError(f"union members have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def classify(self, a: DyadicAddress) -> Cover:
        self._check(a)
        return Cover(max(m.classify(a) for m in self.members))

    def classify_many(self, depth, coords):
        # DISJOINT < INTERSECTS < CONTAINED, so the join is a maximum.
        out = self.members[0].classify_many(depth, coords)
        for m in self.members[1:]:
            out = np.maximum(out, m.classify_many(depth, coords))
        return out

    @property
    def analytic_zeta0(self):
        values = [m.analytic_zeta0 for m in self.members]
        return None if any(v is None for v in values) else max(values)

    def spec(self) -> str:
        return f"union({','.join(m.spec() for m in self.members)})"


SetOracle = Union[FullCube, DyadicCantor, AxisSlice, Singleton, FiniteUnion]


def classify(o: SetOracle, a: DyadicAddress) -> Cover:
    return o.classify(a)


def analytic_zeta0(o: SetOracle):
    return o.analytic_zeta0


def _build(call: Call, d: int, field):
    name, args, kw = call.name, call.args, call.kwargs

    def no_extra(allowed=()):
        extra = set(kw) - set(allowed)
        if extra:
            raise ConfigError(f"{name}: unexpected arguments {sorted(extra)}", field=field)

    try:
        if name == "fullcube":
            no_extra()
            if args:
                raise ConfigError("fullcube takes no arguments", field=field)
            return FullCube(d)
        if name == "cantor":
            no_extra(("keep",))
            keep = kw.get("keep", args[0] if args else None)
            if not isinstance(keep, (list, tuple)) or not all(isinstance(k, int) for k in keep):
                raise ConfigError("cantor needs keep=[symbols]", field=field)
            return DyadicCantor(d, tuple(keep))
        if name == "slice":
            no_extra(("axis", "coord"))
            axis = kw.get("axis")
            coord = kw.get("coord")
            if not isinstance(axis, int):
                raise ConfigError("slice needs an integer axis=", field=field)
            coord = number(coord, "slice coord", field)
            return AxisSlice(d, axis, coord)
        if name == "singleton":
            no_extra()
            point = tuple(number(x, "singleton coordinate", field) for x in args)
            if len(point) != d:
                raise ConfigError(f"singleton has {len(point)} coordinates but d={d}", field=field)
            return Singleton(point)
        if name == "union":
            no_extra()
            if not args or not all(isinstance(a, Call) for a in args):
                raise ConfigError("union needs set arguments", field=field)
            return FiniteUnion(tuple(_build(a, d, field) for a in args))
    except DomainError as exc:
        raise ConfigError(str(exc), field=field) from exc
    raise ConfigError(f"unknown set kind {name!r}", field=field)


def parse_set(text: str, d: int, field: str | None = "set") -> SetOracle:
    """Parse ``fullcube | cantor(keep=[..]) | slice(axis=..,coord=..) | singleton(..) | union(..)``."""
    return _build(parse_call(text, field), d, field)
