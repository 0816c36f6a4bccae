"""Single-pattern baselines: a naive scan (strstr stand-in) and Boyer-Moore.

Both count byte comparisons into ``CostCounters.byte_cmps``; table lookups
and shift arithmetic are free. The two finders return identical results
for identical arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

from sigscan.counters import CostCounters


def naive_find(pattern: bytes, text: bytes, start: int = 0,
               counters: CostCounters | None = None) -> int | None:
    """Smallest index >= ``start`` where ``pattern`` occurs in ``text``.

    Textbook loop: at each alignment compare left to right until the
    first mismatch. Every comparison performed (the mismatching one
    included) is counted.

    Alignments whose first byte cannot match are located with
    ``bytes.find`` on ``pattern[0]`` and charged one comparison each, which
    is exactly what the plain loop would spend on them.
    """
    m = len(pattern)
    n = len(text)
    last = n - m  # final admissible alignment
    cmps = 0
    found = None
    first = pattern[0]
    s = start
    while s <= last:
        k = text.find(first, s, last + 1)
        if k < 0:
            cmps += last + 1 - s
            break
        cmps += k - s + 1
        j = 1
        while j < m:
            cmps += 1
            if text[k + j] != pattern[j]:
                break
            j += 1
        if j == m:
            found = k
            break
        s = k + 1
    if counters is not None:
        counters.byte_cmps += cmps
    return found


@dataclass(frozen=True)
class BmTables:
    pattern: bytes
    bad_char: tuple[int, ...]  # 256 entries, last index of byte in pattern or -1
    good_suffix: tuple[int, ...]  # len(pattern) + 1 shifts

    def last_occurrence(self, byte: int) -> int:
        return self.bad_char[byte]


def bm_build(pattern: bytes) -> BmTables:
    if not pattern:
        raise ValueError("empty pattern")
    pattern = bytes(pattern)
    m = len(pattern)
    bad = [-1] * 256
    for i, b in enumerate(pattern):
        bad[b] = i

    # strong good-suffix rule: border positions of each suffix, then
    # fall back to the widest border of the whole pattern
    shift = [0] * (m + 1)
    border = [0] * (m + 1)
    i, j = m, m + 1
    border[i] = j
    while i > 0:
        while j <= m and pattern[i - 1] != pattern[j - 1]:
            if shift[j] == 0:
                shift[j] = j - i
            j = border[j]
        i -= 1
        j -= 1
        border[i] = j
    j = border[0]
    for i in range(m + 1):
        if shift[i] == 0:
            shift[i] = j
        if i == j:
            j = border[j]
    return BmTables(pattern, tuple(bad), tuple(shift))


def bm_find(tables: BmTables, text: bytes, start: int = 0,
            counters: CostCounters | None = None) -> int | None:
    """Boyer-Moore search with bad-character and good-suffix shifts."""
    pattern = tables.pattern
    bad = tables.bad_char
    good = tables.good_suffix
    m = len(pattern)
    last = len(text) - m
    cmps = 0
    found = None
    s = start
    while s <= last:
        j = m - 1
        while True:
            cmps += 1
            c = text[s + j]
            if c != pattern[j]:
                break
            if j == 0:
                found = s
                break
            j -= 1
        if found is not None:
            break
        bc = j - bad[c]
        gs = good[j + 1]
        s += bc if bc > gs else gs
    if counters is not None:
        counters.byte_cmps += cmps
    return found
