"""Boxes embedded in Z^d, bit-packed occupancy, and reproducible random fills.

A :class:`Region` is an axis-aligned box whose free axes carry the sides and
whose remaining ambient coordinates are pinned.  Sites inside a region are
indexed row-major over the free axes (the last free axis varies fastest), and
a :class:`Configuration` stores one bit per site in little-endian 64-bit words.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Sequence

import numpy as np

Site = tuple[int, ...]

_U64_LIMIT = 1 << 64


@dataclass(frozen=True)
class Region:
    """An axis-aligned box of effective dimension ``len(sides)`` inside Z^d.

    The free ambient axes are ``axes`` (sorted, 0-based).  Along free axis
    ``axes[k]`` the coordinate runs over ``origin + 1 .. origin + sides[k]``;
    every other coordinate is fixed at ``origin + 1``.
    """

    ambient_dim: int
    sides: tuple[int, ...]
    origin: tuple[int, ...]
    axes: tuple[int, ...]

    def __post_init__(self) -> None:
        d = self.ambient_dim
        if d < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {d}")
        if len(self.origin) != d:
            raise ValueError(f"origin has {len(self.origin)} coordinates, expected {d}")
        if len(self.axes) != len(self.sides):
            raise ValueError("axes and sides must have the same length")
        if len(self.sides) > d:
            raise ValueError(f"effective dimension {len(self.sides)} exceeds ambient dimension {d}")
        if list(self.axes) != sorted(set(self.axes)) or any(not 0 <= a < d for a in self.axes):
            raise ValueError(f"free axes must be distinct, sorted and in [0, {d}), got {self.axes}")
        if any(s < 1 for s in self.sides):
            raise ValueError(f"side lengths must be positive, got {self.sides}")
        vol = 1
        for s in self.sides:
            vol *= s
        if vol >= _U64_LIMIT:
            raise OverflowError(f"region volume {vol} does not fit in 64 bits")

    @property
    def effective_dim(self) -> int:
        return len(self.sides)

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of the occupancy grid (one array axis per free axis)."""
        return self.sides

    @property
    def volume(self) -> int:
        vol = 1
        for s in self.sides:
            vol *= s
        return vol

    @property
    def diameter(self) -> int:
        """l-infinity diameter of the whole box."""
        return max(self.sides, default=1) - 1

    def __contains__(self, site: object) -> bool:
        try:
            self.local(site)  # type: ignore[arg-type]
        except (ValueError, TypeError):
            return False
        return True

    def local(self, site: Sequence[int]) -> tuple[int, ...]:
        """0-based grid coordinates of an ambient ``site``; raises if outside."""
        if len(site) != self.ambient_dim:
            raise ValueError(f"site {tuple(site)} has wrong dimension for Z^{self.ambient_dim}")
        free = set(self.axes)
        for k in range(self.ambient_dim):
            if k not in free and site[k] != self.origin[k] + 1:
                raise ValueError(f"site {tuple(site)} is outside the region")
        out = []
        for a, s in zip(self.axes, self.sides):
            c = site[a] - self.origin[a] - 1
            if not 0 <= c < s:
                raise ValueError(f"site {tuple(site)} is outside the region")
            out.append(c)
        return tuple(out)

    def ambient(self, local: Sequence[int]) -> Site:
        """Ambient coordinates of 0-based grid coordinates ``local``."""
        x = [o + 1 for o in self.origin]
        for a, c in zip(self.axes, local):
            x[a] += int(c)
        return tuple(x)

    def index(self, site: Sequence[int]) -> int:
        """Row-major index of an ambient site."""
        loc = self.local(site)
        return int(np.ravel_multi_index(loc, self.shape)) if loc else 0

    def site(self, index: int) -> Site:
        if not 0 <= index < self.volume:
            raise IndexError(f"site index {index} outside [0, {self.volume})")
        loc = np.unravel_index(index, self.shape) if self.sides else ()
        return self.ambient(loc)

    def sites(self) -> Iterator[Site]:
        """All sites in row-major order."""
        for loc in product(*(range(s) for s in self.sides)):
            yield self.ambient(loc)

    def subregion(self, lo: Sequence[int], hi: Sequence[int]) -> Region:
        """Sub-box spanning 0-based grid coordinates ``lo .. hi`` inclusive."""
        origin = list(self.origin)
        for a, l in zip(self.axes, lo):
            origin[a] += int(l)
        sides = tuple(int(h) - int(l) + 1 for l, h in zip(lo, hi))
        return Region(self.ambient_dim, sides, tuple(origin), self.axes)

    def section(self, pinned: dict[int, int]) -> Region:
        """Lower-dimensional box obtained by fixing some free axes.

        ``pinned`` maps a grid axis (index into ``axes``) to a 0-based
        coordinate along it.  The array of the section is
        ``grid[tuple(pinned.get(k, slice(None)) for k in range(effective_dim))]``.
        """
        origin = list(self.origin)
        axes, sides = [], []
        for k, (a, s) in enumerate(zip(self.axes, self.sides)):
            if k in pinned:
                c = int(pinned[k])
                if not 0 <= c < s:
                    raise ValueError(f"pinned coordinate {c} outside [0, {s})")
                origin[a] += c
            else:
                axes.append(a)
                sides.append(s)
        return Region(self.ambient_dim, tuple(sides), tuple(origin), tuple(axes))

    @staticmethod
    def section_index(pinned: dict[int, int], ndim: int) -> tuple:
        return tuple(pinned.get(k, slice(None)) for k in range(ndim))


def make_region(d: int, delta: int, L: int, origin: Sequence[int] | None = None) -> Region:
    """The cube Q^delta(L) = {1..L}^delta x {1}^(d-delta), shifted by ``origin``."""
    if not 1 <= delta <= d:
        raise ValueError(f"need 1 <= delta <= d, got delta={delta}, d={d}")
    if int(L) != L or L < 1:
        raise ValueError(f"side length must be a positive integer, got {L}")
    if origin is None:
        origin = (0,) * d
    return Region(d, (int(L),) * delta, tuple(int(o) for o in origin), tuple(range(delta)))


def face(L: int, S: Iterable[int], d: int) -> Region:
    """The face F_S(L) of Q^d(L+1): coordinates in S run over 1..L, the rest equal L+1.

    ``S`` holds 1-based axis numbers and must be a proper subset of {1..d}.
    For S empty the face is the single corner site (effective dimension 0).
    """
    S = sorted(set(int(i) for i in S))
    if any(not 1 <= i <= d for i in S):
        raise ValueError(f"face axes must lie in 1..{d}, got {S}")
    if len(S) == d:
        raise ValueError("S must be a proper subset of {1..d}")
    if L < 1:
        raise ValueError(f"side length must be >= 1, got {L}")
    free = {i - 1 for i in S}
    origin = tuple(0 if k in free else L for k in range(d))
    axes = tuple(sorted(free))
    return Region(d, (int(L),) * len(axes), origin, axes)


def proper_subsets(d: int) -> Iterator[tuple[int, ...]]:
    """All proper subsets of {1..d} as sorted tuples, largest first."""
    for size in range(d - 1, -1, -1):
        for mask in range(1 << d):
            if bin(mask).count("1") == size:
                yield tuple(i + 1 for i in range(d) if mask >> i & 1)


def _pack(flat: np.ndarray) -> np.ndarray:
    bits = np.packbits(flat.astype(bool, copy=False), bitorder="little")
    pad = (-bits.size) % 8
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, np.uint8)])
    return bits.view("<u8").copy()


@dataclass(eq=False)
class Configuration:
    """Occupancy bits over a region, one bit per site in row-major order."""

    region: Region
    words: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        nwords = -(-self.region.volume // 64)
        self.words = np.asarray(self.words, dtype="<u8")
        if self.words.shape != (nwords,):
            raise ValueError(f"expected {nwords} words for volume {self.region.volume}")
        tail = self.region.volume % 64
        if tail and int(self.words[-1]) >> tail:
            raise ValueError("bits beyond the region volume must be zero")

    @classmethod
    def empty(cls, region: Region) -> Configuration:
        return cls(region, np.zeros(-(-region.volume // 64), "<u8"))

    @classmethod
    def full(cls, region: Region) -> Configuration:
        return cls.from_array(region, np.ones(region.shape, bool))

    @classmethod
    def from_array(cls, region: Region, occupied: np.ndarray) -> Configuration:
        occupied = np.asarray(occupied)
        if occupied.size != region.volume:
            raise ValueError(f"array has {occupied.size} entries, region volume is {region.volume}")
        return cls(region, _pack(occupied.reshape(-1)))

    @classmethod
    def from_sites(cls, region: Region, sites: Iterable[Sequence[int]]) -> Configuration:
        flat = np.zeros(region.volume, bool)
        for x in sites:
            flat[region.index(x)] = True
        return cls(region, _pack(flat))

    def to_array(self) -> np.ndarray:
        """Boolean occupancy grid of shape ``region.shape``."""
        flat = np.unpackbits(self.words.view(np.uint8), count=self.region.volume, bitorder="little")
        return flat.astype(bool).reshape(self.region.shape)

    def sites(self) -> list[Site]:
        flat = self.to_array().reshape(-1)
        return [self.region.site(int(i)) for i in np.flatnonzero(flat)]

    def count(self) -> int:
        return int(np.unpackbits(self.words.view(np.uint8)).sum())

    def is_full(self) -> bool:
        return self.count() == self.region.volume

    def __contains__(self, site: Sequence[int]) -> bool:
        if site not in self.region:
            return False
        i = self.region.index(site)
        return bool(int(self.words[i // 64]) >> (i % 64) & 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.region == other.region and np.array_equal(self.words, other.words)

    def __len__(self) -> int:
        return self.count()

    def _check(self, other: Configuration) -> None:
        if self.region != other.region:
            raise ValueError("configurations live on different regions")

    def __le__(self, other: Configuration) -> bool:
        """Sitewise inclusion."""
        self._check(other)
        return not np.any(self.words & ~other.words)

    def __ge__(self, other: Configuration) -> bool:
        return other <= self

    def __or__(self, other: Configuration) -> Configuration:
        self._check(other)
        return Configuration(self.region, self.words | other.words)

    def __and__(self, other: Configuration) -> Configuration:
        self._check(other)
        return Configuration(self.region, self.words & other.words)

    def copy(self) -> Configuration:
        return Configuration(self.region, self.words.copy())


@dataclass(frozen=True)
class RngStream:
    """A Philox stream keyed by ``(master_seed, stream_index)``.

    The site index is the position in the counter sequence, so the value drawn
    for site ``i`` of trial ``k`` never depends on other trials.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.master_seed % _U64_LIMIT) | ((self.stream_index % _U64_LIMIT) << 64)
        return np.random.Generator(np.random.Philox(key=key))


def random_occupancy(region: Region, p: float, stream: RngStream) -> np.ndarray:
    """Flat uint8 occupancy with each site independently occupied w.p. ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    u = stream.generator().random(region.volume)
    return (u < p).view(np.uint8)


def random_fill(region: Region, p: float, stream: RngStream) -> Configuration:
    """Product-measure configuration on ``region`` with density ``p``."""
    return Configuration(region, _pack(random_occupancy(region, p, stream)))
