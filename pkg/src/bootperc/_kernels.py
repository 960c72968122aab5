"""Compiled inner loops.  Everything here works on flat row-major arrays."""

import numba as nb
import numpy as np


@nb.njit(nogil=True, cache=True)
def close_frontier(occ, strides, counts, thr, gen, track):
    """Run the bootstrap closure in place on a padded flat grid.

    ``occ`` holds 0 (empty), 1 (active) or 2 (border sentinel, never active);
    every region site has all 2d neighbours inside the padded array.  Each
    empty site keeps a bitmask of the directions holding an active neighbour
    (bits 2i and 2i+1 for axis i) and ``counts[mask]`` turns it into the
    rule's neighbour count.  Sites are processed level by level, so level g
    holds exactly the sites the synchronous update activates at round g.
    Returns (rounds, touched) where touched counts in-region neighbour visits.
    """
    n = occ.size
    nd = strides.size
    queue = np.empty(n, np.int64)
    mask = np.zeros(n, counts.dtype)
    tail = 0
    for s in range(n):
        if occ[s] == 1:
            queue[tail] = s
            tail += 1
            if track:
                gen[s] = 0
    head = 0
    rounds = 0
    touched = 0
    level = 0
    while head < tail:
        end = tail
        while head < end:
            s = queue[head]
            head += 1
            for i in range(nd):
                st = strides[i]
                for side in range(2):
                    t = s - st if side == 0 else s + st
                    o = occ[t]
                    if o == 2:
                        continue
                    touched += 1
                    if o:
                        continue
                    m = mask[t] | (1 << (2 * i + side))
                    mask[t] = m
                    if counts[m] >= thr:
                        occ[t] = 1
                        if track:
                            gen[t] = level + 1
                        queue[tail] = t
                        tail += 1
        if tail > end:
            rounds = level + 1
        level += 1
    return rounds, touched


@nb.njit(cache=True)
def _at_least(masks, thr, full):
    # bitmask of sites set in at least ``thr`` of ``masks``
    acc = np.zeros(thr + 1, np.uint64)
    acc[0] = full
    for m in masks:
        for j in range(thr, 0, -1):
            acc[j] |= acc[j - 1] & m
    return acc[thr]


@nb.njit(cache=True)
def spanning_counts(vol, shifts, lower, upper, standard, thr):
    """Count, for each size k, the subsets of a small box whose closure is the box.

    Sites are bits of a uint64.  ``shifts[i]`` is the row-major stride of
    axis i; ``lower[i]``/``upper[i]`` mark the sites having a neighbour at
    -e_i/+e_i.  The closure is iterated synchronously with word operations.
    """
    full = np.uint64((1 << vol) - 1) if vol < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    nd = shifts.size
    counts = np.zeros(vol + 1, np.int64)
    nmask = 2 * nd if standard else nd
    masks = np.zeros(nmask, np.uint64)
    for w0 in range(1 << vol):
        w = np.uint64(w0)
        while True:
            for i in range(nd):
                sh = np.uint64(shifts[i])
                from_below = (w << sh) & lower[i]
                from_above = (w >> sh) & upper[i]
                if standard:
                    masks[2 * i] = from_below
                    masks[2 * i + 1] = from_above
                else:
                    masks[i] = from_below | from_above
            nw = (w | _at_least(masks, thr, full)) & full
            if nw == w:
                break
            w = nw
        if w == full:
            k = 0
            x = np.uint64(w0)
            while x:
                k += 1
                x &= x - np.uint64(1)
            counts[k] += 1
    return counts
