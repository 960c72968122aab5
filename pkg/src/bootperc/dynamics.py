"""Bootstrap update rules, closure and internal spanning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _kernels
from .lattice import Configuration, Region

MAX_ORACLE_VOLUME = 25


class Family(str, Enum):
    MODIFIED = "modified"
    STANDARD = "standard"


@dataclass(frozen=True)
class Rule:
    """An update family together with its neighbourhood dimension.

    Modified with dimension delta activates an empty site once at least delta
    of the region's free axes have an active neighbour on either side.
    Standard activates it once it has at least delta active nearest
    neighbours.  ``delta=None`` means "the region's effective dimension",
    which is how the model is normally run.
    """

    family: Family = Family.MODIFIED
    delta: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.delta is not None and self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")

    @classmethod
    def modified(cls, delta: int | None = None) -> Rule:
        return cls(Family.MODIFIED, delta)

    @classmethod
    def standard(cls, delta: int | None = None) -> Rule:
        return cls(Family.STANDARD, delta)

    @property
    def is_standard(self) -> bool:
        return self.family is Family.STANDARD

    def threshold(self, region: Region) -> int:
        """Neighbourhood dimension to use on ``region``."""
        if self.delta is None:
            return region.effective_dim
        if self.delta > region.effective_dim:
            raise ValueError(
                f"rule dimension {self.delta} exceeds the region's effective dimension "
                f"{region.effective_dim}"
            )
        return self.delta

    def __str__(self) -> str:
        return self.family.value if self.delta is None else f"{self.family.value}[{self.delta}]"


@dataclass
class ClosureResult:
    final: Configuration
    rounds: int
    touched: int
    activation_order: np.ndarray | None = None


MAX_CLOSURE_DIM = 8


@lru_cache(maxsize=256)
def _geometry(shape: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    shp = np.array(shape, np.int64)
    strides = np.ones(len(shape), np.int64)
    for i in range(len(shape) - 2, -1, -1):
        strides[i] = strides[i + 1] * shp[i + 1]
    return shp, strides


@lru_cache(maxsize=32)
def _count_table(nd: int, standard: bool) -> np.ndarray:
    # neighbour count for each direction bitmask (bits 2i, 2i+1 belong to axis i)
    m = np.arange(1 << (2 * nd))
    if standard:
        counts = sum((m >> b) & 1 for b in range(2 * nd))
    else:
        counts = sum(((m >> (2 * i)) & 3) > 0 for i in range(nd))
    return np.asarray(counts, np.uint8 if nd <= 4 else np.uint16)


_NO_GEN = np.zeros(0, np.int32)


def close_flat(rule: Rule, region: Region, occ: np.ndarray, track: bool = False):
    """In-place closure of a flat uint8 occupancy array.

    Returns ``(rounds, touched, generations)``; generations is -1 for sites
    that never activate, else the round in which the site became active.
    """
    thr = rule.threshold(region)
    if thr == 0:
        # every site has at least zero active neighbours
        rounds = 0 if occ.all() else 1
        gen = None
        if track:
            gen = np.where(occ.astype(bool), 0, 1).astype(np.int32)
        occ[:] = 1
        return rounds, 0, gen
    nd = region.effective_dim
    if nd > MAX_CLOSURE_DIM:
        raise ValueError(f"closure supports effective dimension <= {MAX_CLOSURE_DIM}")
    padded_shape = tuple(s + 2 for s in region.shape)
    inner = (slice(1, -1),) * nd
    grid = np.full(padded_shape, 2, np.uint8)
    grid[inner] = occ.reshape(region.shape)
    _, strides = _geometry(padded_shape)
    gen = np.full(padded_shape, -1, np.int32) if track else _NO_GEN
    rounds, touched = _kernels.close_frontier(
        grid.reshape(-1), strides, _count_table(nd, rule.is_standard), thr, gen.reshape(-1), track
    )
    occ[:] = grid[inner].reshape(-1)
    return int(rounds), int(touched), (gen[inner].reshape(-1) if track else None)


def _occ(config: Configuration) -> np.ndarray:
    return config.to_array().reshape(-1).view(np.uint8).copy()


def close(rule: Rule, config: Configuration, track_order: bool = False) -> ClosureResult:
    """The closure of ``config`` under ``rule`` inside its region."""
    occ = _occ(config)
    rounds, touched, gen = close_flat(rule, config.region, occ, track_order)
    final = Configuration.from_array(config.region, occ)
    order = gen.reshape(config.region.shape) if gen is not None else None
    return ClosureResult(final, rounds, touched, order)


def _active_neighbour_counts(rule: Rule, grid: np.ndarray) -> np.ndarray:
    counts = np.zeros(grid.shape, np.int64)
    for ax in range(grid.ndim):
        lower = np.zeros(grid.shape, bool)
        upper = np.zeros(grid.shape, bool)
        src = [slice(None)] * grid.ndim
        dst = [slice(None)] * grid.ndim
        src[ax], dst[ax] = slice(None, -1), slice(1, None)
        lower[tuple(dst)] = grid[tuple(src)]
        upper[tuple(src)] = grid[tuple(dst)]
        if rule.is_standard:
            counts += lower.astype(np.int64) + upper.astype(np.int64)
        else:
            counts += lower | upper
    return counts


def step(rule: Rule, config: Configuration) -> Configuration:
    """One synchronous application of the update operator."""
    thr = rule.threshold(config.region)
    grid = config.to_array()
    new = grid | (_active_neighbour_counts(rule, grid) >= thr)
    return Configuration.from_array(config.region, new)


def is_internally_spanned(rule: Rule, config: Configuration) -> bool:
    occ = _occ(config)
    close_flat(rule, config.region, occ)
    return bool(occ.all())


@lru_cache(maxsize=128)
def spanning_counts(rule: Rule, region: Region) -> tuple[int, ...]:
    """Number of spanning subsets of ``region`` of each size 0..volume."""
    vol = region.volume
    if vol > MAX_ORACLE_VOLUME:
        raise ValueError(f"exhaustive enumeration needs volume <= {MAX_ORACLE_VOLUME}, got {vol}")
    thr = rule.threshold(region)
    if thr == 0:
        return tuple(math.comb(vol, k) for k in range(vol + 1))
    shape, strides = _geometry(region.shape)
    idx = np.arange(vol)
    lower = np.zeros(len(shape), np.uint64)
    upper = np.zeros(len(shape), np.uint64)
    for i, (n, s) in enumerate(zip(shape, strides)):
        c = (idx // s) % n
        lower[i] = sum(1 << int(j) for j in idx[c > 0])
        upper[i] = sum(1 << int(j) for j in idx[c < n - 1])
    counts = _kernels.spanning_counts(vol, strides, lower, upper, rule.is_standard, thr)
    return tuple(int(c) for c in counts)


def exact_spanning_probability(rule: Rule, region: Region, p: float) -> float:
    """P_p(region is internally spanned), by enumerating all 2^volume subsets."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    counts = spanning_counts(rule, region)
    vol = region.volume
    return math.fsum(c * p**k * (1.0 - p) ** (vol - k) for k, c in enumerate(counts) if c)
