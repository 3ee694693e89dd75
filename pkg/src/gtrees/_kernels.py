"""Hot loops over packed word arrays.

Words are packed as ``int8`` rows (signed letters, zero padded) with a separate
length vector.  Letter keys ``2*(|x|-1) + (x < 0)`` give the canonical order and
make inversion ``key ^ 1``.  Oriented graph edges use the same trick: edge ``i``
is ``2*i`` forward and ``2*i + 1`` reversed.

Every function here is compiled by numba when it is available and runs as
ordinary Python otherwise (see ``_accel``).  Lengths are scaled to ``int64`` by
the caller so all comparisons stay exact.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit


@njit
def _key_to_letter(k):
    if k % 2 == 1:
        return -(k // 2 + 1)
    return k // 2 + 1


@njit
def _letter_to_key(x):
    if x < 0:
        return 2 * (-x - 1) + 1
    return 2 * (x - 1)


# --- enumeration --------------------------------------------------------------


@njit
def _first_reduced(keys, L):
    # a^L is the lexicographically first reduced word of length L
    for i in range(L):
        keys[i] = 0


@njit
def _next_reduced(keys, L, r2):
    """Advance ``keys`` to the next reduced word of length L in lex order."""
    i = L - 1
    while i >= 0:
        k = keys[i] + 1
        if i > 0 and k == (keys[i - 1] ^ 1):
            k += 1
        if k < r2:
            keys[i] = k
            for j in range(i + 1, L):
                m = 0
                if (keys[j - 1] ^ 1) == 0:
                    m = 1
                keys[j] = m
            return True
        i -= 1
    return False


@njit
def _is_least_rotation(keys, L):
    for s in range(1, L):
        for t in range(L):
            a = keys[(s + t) % L]
            b = keys[t]
            if a != b:
                if a < b:
                    return False
                break
    return True


@njit
def _count_reduced(rank, max_len):
    total = 1
    level = 1
    for L in range(1, max_len + 1):
        if L == 1:
            level = 2 * rank
        else:
            level *= 2 * rank - 1
        total += level
    return total


@njit
def enumerate_reduced(rank, max_len):
    n = _count_reduced(rank, max_len)
    width = max(max_len, 1)
    out = np.zeros((n, width), dtype=np.int8)
    lens = np.zeros(n, dtype=np.int64)
    r2 = 2 * rank
    keys = np.zeros(width, dtype=np.int64)
    row = 1
    for L in range(1, max_len + 1):
        _first_reduced(keys, L)
        while True:
            for t in range(L):
                out[row, t] = _key_to_letter(keys[t])
            lens[row] = L
            row += 1
            if not _next_reduced(keys, L, r2):
                break
    return out, lens


@njit
def _necklace_pass(rank, max_len, out, lens, fill):
    r2 = 2 * rank
    width = max(max_len, 1)
    keys = np.zeros(width, dtype=np.int64)
    row = 1
    for L in range(1, max_len + 1):
        _first_reduced(keys, L)
        while True:
            ok = True
            if L >= 2 and keys[0] == (keys[L - 1] ^ 1):
                ok = False
            if ok and _is_least_rotation(keys, L):
                if fill:
                    for t in range(L):
                        out[row, t] = _key_to_letter(keys[t])
                    lens[row] = L
                row += 1
            if not _next_reduced(keys, L, r2):
                break
    return row


@njit
def enumerate_necklaces(rank, max_len):
    """Least-rotation representatives of cyclically reduced words, shortlex."""
    width = max(max_len, 1)
    dummy = np.zeros((1, width), dtype=np.int8)
    dlens = np.zeros(1, dtype=np.int64)
    n = _necklace_pass(rank, max_len, dummy, dlens, False)
    out = np.zeros((n, width), dtype=np.int8)
    lens = np.zeros(n, dtype=np.int64)
    _necklace_pass(rank, max_len, out, lens, True)
    return out, lens


# --- products -----------------------------------------------------------------


@njit
def multiply_terms(words, lens, terms):
    """Reduced products of packed words.

    ``terms[r, t]`` is ``+(i+1)`` for ``words[i]``, ``-(i+1)`` for its inverse and
    0 for an unused slot.  Returns a new packed array.
    """
    m = terms.shape[0]
    T = terms.shape[1]
    width = 1
    for r in range(m):
        s = 0
        for t in range(T):
            c = terms[r, t]
            if c != 0:
                s += lens[abs(c) - 1]
        if s > width:
            width = s
    out = np.zeros((m, width), dtype=np.int8)
    olens = np.zeros(m, dtype=np.int64)
    stack = np.zeros(width, dtype=np.int64)
    for r in range(m):
        top = 0
        for t in range(T):
            c = terms[r, t]
            if c == 0:
                continue
            i = abs(c) - 1
            n = lens[i]
            for q in range(n):
                if c > 0:
                    x = words[i, q]
                else:
                    x = -words[i, n - 1 - q]
                if top > 0 and stack[top - 1] == -x:
                    top -= 1
                else:
                    stack[top] = x
                    top += 1
        for q in range(top):
            out[r, q] = stack[q]
        olens[r] = top
    return out, olens


# --- translation lengths --------------------------------------------------------


@njit
def mgraph_lengths(words, lens, img_flat, img_off, edge_len):
    """Scaled translation lengths for a marked graph.

    The image of letter key ``k`` is ``img_flat[img_off[k]:img_off[k+1]]`` as
    oriented edge ids; ``edge_len`` is indexed by oriented edge id.
    """
    m = words.shape[0]
    maximg = 0
    for k in range(img_off.shape[0] - 1):
        if img_off[k + 1] - img_off[k] > maximg:
            maximg = img_off[k + 1] - img_off[k]
    cap = max(1, words.shape[1] * maximg)
    stack = np.zeros(cap, dtype=np.int64)
    out = np.zeros(m, dtype=np.int64)
    for r in range(m):
        top = 0
        for q in range(lens[r]):
            k = _letter_to_key(words[r, q])
            for p in range(img_off[k], img_off[k + 1]):
                e = img_flat[p]
                if top > 0 and stack[top - 1] == (e ^ 1):
                    top -= 1
                else:
                    stack[top] = e
                    top += 1
        i = 0
        j = top
        while j - i >= 2 and stack[i] == (stack[j - 1] ^ 1):
            i += 1
            j -= 1
        s = 0
        for p in range(i, j):
            s += edge_len[stack[p]]
        out[r] = s
    return out


@njit
def _merge_runs(rv, rl, k):
    """Merge adjacent (cyclically) runs sitting at the same vertex; return new count."""
    if k == 0:
        return 0
    w = 0
    for i in range(k):
        if w > 0 and rv[w - 1] == rv[i]:
            if rl[w - 1] != rl[i]:
                rl[w - 1] = -1
        else:
            rv[w] = rv[i]
            rl[w] = rl[i]
            w += 1
    while w > 1 and rv[w - 1] == rv[0]:
        if rl[w - 1] != rl[0]:
            rl[0] = -1
        w -= 1
    return w


@njit
def gog_lengths(words, lens, first_vertex, contains, dist, nexthop, edge_letter):
    """Scaled translation lengths in a Bass-Serre tree of a tree of free factors.

    Letters are assigned to vertices, consecutive letters at one vertex form a
    syllable, and a syllable that is a power of the letter of the edge pointing
    toward both of its neighbours is pushed across that edge.  When nothing
    moves, the syllable path has no backtracking, so it is the axis and its
    period is the sum of tree distances between consecutive syllables.
    """
    m = words.shape[0]
    width = max(1, words.shape[1])
    out = np.zeros(m, dtype=np.int64)
    rv = np.zeros(width, dtype=np.int64)
    rl = np.zeros(width, dtype=np.int64)
    for r in range(m):
        n = lens[r]
        i0 = 0
        j0 = n
        while j0 - i0 >= 2 and words[r, i0] == -words[r, j0 - 1]:
            i0 += 1
            j0 -= 1
        k = 0
        prev = -1
        for q in range(i0, j0):
            a = abs(words[r, q]) - 1
            if prev >= 0 and contains[prev, a]:
                v = prev
            else:
                v = first_vertex[a]
            rv[k] = v
            rl[k] = a
            k += 1
            prev = v
        k = _merge_runs(rv, rl, k)
        changed = True
        while changed and k > 1:
            changed = False
            for i in range(k):
                v = rv[i]
                u = rv[(i - 1 + k) % k]
                x = rv[(i + 1) % k]
                n1 = nexthop[v, u]
                if n1 == nexthop[v, x] and rl[i] >= 0 and rl[i] == edge_letter[v, n1]:
                    rv[i] = n1
                    changed = True
                    break
            if changed:
                k = _merge_runs(rv, rl, k)
        s = 0
        if k > 1:
            for i in range(k):
                s += dist[rv[i], rv[(i + 1) % k]]
        out[r] = s
    return out


# --- tree metric scans -----------------------------------------------------------


@njit
def four_point_violation(D):
    """First quadruple (i<j<k<l) breaking the four-point condition, or all -1."""
    n = D.shape[0]
    res = np.full(4, -1, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            dij = D[i, j]
            for k in range(j + 1, n):
                dik = D[i, k]
                djk = D[j, k]
                for l in range(k + 1, n):
                    s1 = dij + D[k, l]
                    s2 = dik + D[j, l]
                    s3 = D[i, l] + djk
                    if s1 >= s2:
                        hi, lo = s1, s2
                    else:
                        hi, lo = s2, s1
                    if s3 >= hi:
                        lo = hi
                        hi = s3
                    elif s3 > lo:
                        lo = s3
                    if hi != lo:
                        res[0] = i
                        res[1] = j
                        res[2] = k
                        res[3] = l
                        return res
    return res


@njit
def metric_violation(D):
    """First (i, j, k) failing symmetry/zero diagonal/triangle, or all -1."""
    n = D.shape[0]
    res = np.full(3, -1, dtype=np.int64)
    for i in range(n):
        if D[i, i] != 0:
            res[0] = i
            res[1] = i
            res[2] = i
            return res
        for j in range(n):
            if D[i, j] != D[j, i] or D[i, j] < 0:
                res[0] = i
                res[1] = j
                res[2] = j
                return res
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if D[i, k] > D[i, j] + D[j, k]:
                    res[0] = i
                    res[1] = j
                    res[2] = k
                    return res
    return res


@njit
def alignment_violation(DT, DA, DB):
    """First triple (x, y, z) with z between x and y in T but not in A or B.

    Also reports ``DT != DA + DB`` as ``(x, y, -2)``.
    """
    n = DT.shape[0]
    res = np.full(3, -1, dtype=np.int64)
    for x in range(n):
        for y in range(n):
            if DT[x, y] != DA[x, y] + DB[x, y]:
                res[0] = x
                res[1] = y
                res[2] = -2
                return res
    for x in range(n):
        for y in range(x + 1, n):
            dxy = DT[x, y]
            for z in range(n):
                if z == x or z == y:
                    continue
                if DT[x, z] + DT[z, y] == dxy:
                    if DA[x, z] + DA[z, y] != DA[x, y] or DB[x, z] + DB[z, y] != DB[x, y]:
                        res[0] = x
                        res[1] = y
                        res[2] = z
                        return res
    return res
