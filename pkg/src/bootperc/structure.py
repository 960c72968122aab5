"""Structural predicates and constructive procedures on single configurations.

Axis arguments are 1-based, like site coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np
from scipy import ndimage

from .dynamics import Rule, close, close_flat
from .lattice import Configuration, Region, proper_subsets


@dataclass
class ComponentSet:
    """Nearest-neighbour components of a site set.

    ``labels`` has the region's grid shape; 0 marks sites outside the set and
    component ``c`` (1-based) has diameter ``diameters[c-1]`` and volume
    ``volumes[c-1]``.
    """

    region: Region
    labels: np.ndarray
    diameters: np.ndarray
    volumes: np.ndarray

    @property
    def count(self) -> int:
        return len(self.volumes)

    def label_of(self, site: Sequence[int]) -> int:
        return int(self.labels[self.region.local(site)])

    def max_diameter(self) -> int:
        return int(self.diameters.max()) if self.count else -1


def _components_of_grid(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = np.atleast_1d(grid)
    labels, k = ndimage.label(g)
    diams = np.zeros(k, np.int64)
    for c, box in enumerate(ndimage.find_objects(labels)):
        diams[c] = max(s.stop - s.start for s in box) - 1
    volumes = np.bincount(labels.reshape(-1), minlength=k + 1)[1:]
    return labels.reshape(grid.shape), diams, volumes


def components(site_set: Configuration) -> ComponentSet:
    labels, diams, vols = _components_of_grid(site_set.to_array())
    return ComponentSet(site_set.region, labels, diams, vols)


def crossing_in_closure(rule: Rule, config: Configuration, x: Sequence[int], y: Sequence[int]) -> bool:
    """Whether x and y lie in one component of the closure (x == y: x is active)."""
    region = config.region
    for s in (x, y):
        if s not in region:
            raise ValueError(f"site {tuple(s)} is outside the region")
    comps = components(close(rule, config).final)
    lx = comps.label_of(x)
    return lx != 0 and lx == comps.label_of(y)


def has_component_of_diameter(rule: Rule, config: Configuration, n: int) -> bool:
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return components(close(rule, config).final).max_diameter() >= n


def center_site(region: Region) -> tuple[int, ...]:
    sides = set(region.sides)
    if len(sides) != 1 or region.sides[0] % 2 == 0:
        raise ValueError(f"expected a cube of odd side, got sides {region.sides}")
    half = region.sides[0] // 2
    return region.ambient((half,) * region.effective_dim)


def center_component_volume(rule: Rule, config: Configuration) -> int:
    """Volume of the closure's component at the centre of an odd cube (0 if inactive)."""
    z = center_site(config.region)
    comps = components(close(rule, config).final)
    c = comps.label_of(z)
    return int(comps.volumes[c - 1]) if c else 0


# --- Aizenman-Lebowitz decomposition -------------------------------------------------


def _diam(pts: np.ndarray) -> int:
    return int(np.ptp(pts, axis=0).max())


def _closure_of_points(rule: Rule, region: Region, pts: np.ndarray) -> np.ndarray:
    # closure of a connected set stays in its bounding box when delta = dim >= 2
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    sub = region.subregion(lo, hi)
    grid = np.zeros(sub.shape, np.uint8)
    grid[tuple((pts - lo).T)] = 1
    occ = grid.reshape(-1)
    close_flat(rule, sub, occ)
    return np.argwhere(grid) + lo


def _first_adjacent_pair(owner: np.ndarray) -> tuple[int, int] | None:
    best = None
    for ax in range(owner.ndim):
        a = [slice(None)] * owner.ndim
        b = [slice(None)] * owner.ndim
        a[ax], b[ax] = slice(None, -1), slice(1, None)
        oa, ob = owner[tuple(a)], owner[tuple(b)]
        hit = (oa >= 0) & (ob >= 0) & (oa != ob)
        if hit.any():
            pos = tuple(np.argwhere(hit)[0])
            flat = np.ravel_multi_index(pos, owner.shape)
            if best is None or flat < best[0]:
                best = (flat, (int(oa[pos]), int(ob[pos])))
    return None if best is None else best[1]


def _neighbour_owners(owner: np.ndarray, ax: int) -> tuple[np.ndarray, np.ndarray]:
    """Owner of the -e_ax and +e_ax neighbour of every site (-1 if none)."""
    below = np.full(owner.shape, -1, owner.dtype)
    above = np.full(owner.shape, -1, owner.dtype)
    a = [slice(None)] * owner.ndim
    b = [slice(None)] * owner.ndim
    a[ax], b[ax] = slice(None, -1), slice(1, None)
    below[tuple(b)] = owner[tuple(a)]
    above[tuple(a)] = owner[tuple(b)]
    return below, above


def _first_activatable(rule: Rule, owner: np.ndarray, thr: int) -> tuple[tuple[int, ...], list[int]] | None:
    nbrs = [_neighbour_owners(owner, ax) for ax in range(owner.ndim)]
    count = np.zeros(owner.shape, np.int64)
    for below, above in nbrs:
        if rule.is_standard:
            count += (below >= 0).astype(np.int64) + (above >= 0)
        else:
            count += (below >= 0) | (above >= 0)
    cand = (owner < 0) & (count >= thr)
    if not cand.any():
        return None
    x = tuple(int(c) for c in np.argwhere(cand)[0])
    suppliers: list[int] = []
    for below, above in nbrs:
        lo, hi = int(below[x]), int(above[x])
        picks = [o for o in (lo, hi) if o >= 0]
        if not rule.is_standard:
            picks = picks[:1]
        for o in picks:
            if o not in suppliers:
                suppliers.append(o)
    return x, suppliers


def aizenman_lebowitz_sets(rule: Rule, config: Configuration) -> Iterator[np.ndarray]:
    """Yield, in order of formation, the connected internally spanned sets built
    by the iterative realisation of the closure.

    Each item is an array of 0-based grid coordinates.  The process starts
    from the occupied singletons.  A step either merges two adjacent sets, or
    takes the first (row-major) empty site that the current union activates
    and merges it with the sets supplying its active neighbours.  The merged
    set is replaced by its closure; sets that the closure overlaps are then
    absorbed one at a time.  Every yielded set is connected and internally
    spanned, and a set formed while all existing sets have diameter < a has
    diameter <= 2a.
    """
    region = config.region
    nd = region.effective_dim
    thr = rule.threshold(region)
    if nd < 2 or thr != nd:
        raise ValueError("decomposition needs effective dimension >= 2 and rule dimension equal to it")
    grid = config.to_array()
    owner = np.full(region.shape, -1, np.int64)
    members: dict[int, np.ndarray] = {}
    for i, pt in enumerate(np.argwhere(grid)):
        owner[tuple(pt)] = i
        members[i] = pt[None, :]
        yield members[i]
    next_id = len(members)
    while True:
        pair = _first_adjacent_pair(owner)
        if pair is not None:
            ids = list(pair)
            pts = np.concatenate([members[i] for i in ids])
        else:
            found = _first_activatable(rule, owner, thr)
            if found is None:
                return
            x, ids = found
            pts = np.concatenate([members[i] for i in ids] + [np.array([x])])
        merged = _closure_of_points(rule, region, pts)
        yield merged
        absorbed = set(ids)
        while True:
            hit = owner[tuple(merged.T)]
            foreign = sorted(set(int(o) for o in hit if o >= 0) - absorbed)
            if not foreign:
                break
            c = foreign[0]
            absorbed.add(c)
            merged = _closure_of_points(rule, region, np.concatenate([merged, members[c]]))
            yield merged
        for c in absorbed:
            del members[c]
        owner[tuple(merged.T)] = next_id
        members[next_id] = merged
        next_id += 1


def aizenman_lebowitz_decompose(rule: Rule, config: Configuration, a: int) -> Configuration:
    """A connected, internally spanned T inside the closure with a <= diam T <= 2a."""
    if int(a) != a or a < 1:
        raise ValueError(f"a must be a positive integer, got {a}")
    for pts in aizenman_lebowitz_sets(rule, config):
        if _diam(pts) >= a:
            grid = np.zeros(config.region.shape, bool)
            grid[tuple(pts.T)] = True
            return Configuration.from_array(config.region, grid)
    raise ValueError(f"the closure has no connected internally spanned set of diameter >= {a}")


# --- slices ---------------------------------------------------------------------------


@dataclass
class SliceDecomposition:
    """Thickness-1 slices perpendicular to ``axis`` and their dominating union."""

    axis: int
    n: int
    slices: list[Configuration]
    full_flags: list[bool]
    Z: Configuration
    dominating: bool


def slice_construct(
    config: Configuration,
    axis: int,
    n: int,
    rule: Rule | None = None,
    force: bool = False,
) -> SliceDecomposition:
    """Run the (d-1)-dimensional model on every slice and build Z.

    Slice j keeps Y_j = closure of X on that slice; it is full when Y_j has a
    component of diameter >= n, in which case Z_j is the whole slice.  Under
    the modified rule Z contains the d-dimensional closure.  The standard rule
    is accepted only with ``force=True`` and the result is flagged as not
    dominating.
    """
    rule = rule or Rule.modified()
    region = config.region
    nd = region.effective_dim
    if nd < 2:
        raise ValueError("slices need effective dimension >= 2")
    if not 1 <= axis <= nd:
        raise ValueError(f"axis must lie in 1..{nd}, got {axis}")
    if rule.delta is not None and rule.delta != nd:
        raise ValueError("slice construction runs the model at the region's own dimension")
    if rule.is_standard and not force:
        raise ValueError("slice domination holds for the modified rule only; pass force=True to compute anyway")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    k = axis - 1
    slice_rule = Rule(rule.family, None)
    grid = config.to_array()
    z = np.zeros(region.shape, bool)
    slices, flags = [], []
    for j in range(region.sides[k]):
        pin = {k: j}
        sub = region.section(pin)
        idx = Region.section_index(pin, nd)
        y = close(slice_rule, Configuration.from_array(sub, grid[idx])).final
        full = components(y).max_diameter() >= n
        slices.append(y)
        flags.append(full)
        z[idx] = True if full else y.to_array()
    return SliceDecomposition(axis, n, slices, flags, Configuration.from_array(region, z), not rule.is_standard)


def check_domination(decomposition: SliceDecomposition, closure: Configuration) -> bool:
    if decomposition.Z.region != closure.region:
        raise ValueError("decomposition and closure live on different regions")
    return closure <= decomposition.Z


# --- deterministic implications ----------------------------------------------------------


def _cube_side(region: Region, dim: int | None = None) -> int:
    if len(set(region.sides)) != 1 or (dim is not None and region.effective_dim != dim):
        raise ValueError(f"expected a cube{'' if dim is None else f' of dimension {dim}'}, got sides {region.sides}")
    return region.sides[0]


def scaffold_events(config: Configuration, k: int) -> tuple[bool, bool]:
    """Events (A, B) on Q^3(L).

    A: every site with two coordinates in 1..k is occupied (three k x k x L arms).
    B: every axis-parallel segment of k sites contains an occupied site.
    """
    L = _cube_side(config.region, 3)
    if not 1 <= k <= L:
        raise ValueError(f"need 1 <= k <= L = {L}, got k={k}")
    g = config.to_array()
    A = bool(g[:k, :k, :].all() and g[:k, :, :k].all() and g[:, :k, :k].all())
    B = True
    for ax in range(3):
        c = np.cumsum(g, axis=ax, dtype=np.int64)
        pad = np.zeros_like(np.take(c, [0], axis=ax))
        c = np.concatenate([pad, c], axis=ax)
        windows = np.take(c, range(k, L + 1), axis=ax) - np.take(c, range(0, L - k + 1), axis=ax)
        if not (windows > 0).all():
            B = False
            break
    return A, B


class Implication(str, Enum):
    VACUOUS = "vacuous"
    CONFIRMED = "confirmed"
    VIOLATED = "violated"


def face_growth_check(config: Configuration, rule: Rule | None = None) -> Implication:
    """Check "Q^d(L) is i.s. and every face F_S(L) is |S|-i.s. => Q^d(L+1) is i.s."
    on a configuration over Q^d(L+1)."""
    rule = rule or Rule.modified()
    region = config.region
    side = _cube_side(region)
    d = region.effective_dim
    if d < 2 or side < 2:
        raise ValueError("need a cube of dimension >= 2 and side >= 2")
    L = side - 1
    fam = Rule(rule.family, None)
    grid = config.to_array()
    inner = region.subregion((0,) * d, (L - 1,) * d)
    if not _spans(fam, inner, grid[(slice(0, L),) * d]):
        return Implication.VACUOUS
    for S in proper_subsets(d):
        free = {i - 1 for i in S}
        pin = {k: L for k in range(d) if k not in free}
        idx = tuple(slice(0, L) if k in free else L for k in range(d))
        box = region.subregion((0,) * d, tuple(L - 1 if k in free else L for k in range(d)))
        if not _spans(fam, box.section(pin), grid[idx]):
            return Implication.VACUOUS
    if _spans(fam, region, grid):
        return Implication.CONFIRMED
    return Implication.VIOLATED


def _spans(rule: Rule, region: Region, arr: np.ndarray) -> bool:
    occ = np.ascontiguousarray(arr, dtype=np.uint8).reshape(-1).copy()
    close_flat(rule, region, occ)
    return bool(occ.all())
