"""Reference implementations used as oracles across the suite.

They are written for clarity, not speed, and share no code with the package.
"""

from __future__ import annotations

from collections import deque
from itertools import product

import numpy as np
import pytest


def naive_close_batch(grids: np.ndarray, standard: bool, thr: int) -> np.ndarray:
    """Synchronous fixed-point iteration on a batch of boolean grids (axis 0 is the batch)."""
    w = grids.astype(bool).copy()
    nd = w.ndim - 1
    while True:
        count = np.zeros(w.shape, np.int64)
        for ax in range(1, nd + 1):
            lo = np.zeros_like(w)
            hi = np.zeros_like(w)
            n = w.shape[ax]
            src = [slice(None)] * w.ndim
            dst = [slice(None)] * w.ndim
            src[ax], dst[ax] = slice(0, n - 1), slice(1, n)
            lo[tuple(dst)] = w[tuple(src)]
            hi[tuple(src)] = w[tuple(dst)]
            count += (lo.astype(np.int64) + hi) if standard else (lo | hi)
        new = w | (count >= thr)
        if np.array_equal(new, w):
            return w
        w = new


def naive_close(grid: np.ndarray, standard: bool, thr: int) -> np.ndarray:
    return naive_close_batch(grid[None], standard, thr)[0]


def flood_fill_labels(grid: np.ndarray) -> list[set[tuple[int, ...]]]:
    """Components of a boolean grid by breadth-first search, as sets of index tuples."""
    seen: set[tuple[int, ...]] = set()
    comps = []
    for start in product(*(range(s) for s in grid.shape)):
        if not grid[start] or start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for ax in range(grid.ndim):
                for step in (-1, 1):
                    nb = list(cur)
                    nb[ax] += step
                    nb = tuple(nb)
                    if 0 <= nb[ax] < grid.shape[ax] and grid[nb] and nb not in seen:
                        seen.add(nb)
                        comp.add(nb)
                        queue.append(nb)
        comps.append(comp)
    return comps


def linf_diameter(points) -> int:
    pts = np.array(sorted(points))
    return int((pts.max(axis=0) - pts.min(axis=0)).max())


def all_grids(shape: tuple[int, ...]) -> np.ndarray:
    """Every boolean grid of the given shape, bit k of the index = flat site k."""
    vol = int(np.prod(shape))
    idx = np.arange(1 << vol)[:, None]
    bits = (idx >> np.arange(vol)) & 1
    return bits.astype(bool).reshape((1 << vol,) + tuple(shape))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
