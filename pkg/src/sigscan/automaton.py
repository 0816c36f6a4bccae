"""Aho-Corasick automaton over byte strings.

The automaton keeps explicit failure links (it is not flattened into a
DFA) so that goto moves and failure moves can be counted separately.
Goto edges are stored sparsely, one dict per state; the root answers
every byte, falling back to itself.

Patterns are ASCII case-folded at build time. Callers wanting
case-insensitive search fold the text before calling :meth:`search`.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple, Sequence

from sigscan.counters import CostCounters

ROOT = 0


class MatchEvent(NamedTuple):
    pattern_id: int
    end_index: int


class AutomatonError(ValueError):
    pass


def fold(data: bytes) -> bytes:
    """ASCII-only case folding (A-Z -> a-z); other bytes untouched."""
    return data.lower()


class AcAutomaton:
    """Immutable goto/failure/output machine built by :func:`build`.

    Attributes are exposed read-only for inspection and tests:
    ``goto`` (list of byte -> state dicts, root excluding its implicit
    self-loops), ``fail``, ``output`` (sorted tuple of pattern ids per
    state), ``depth``, ``pattern_lengths`` and ``build_cost``.
    """

    __slots__ = ("goto", "fail", "output", "depth", "pattern_lengths",
                 "build_cost", "_rows")

    def __init__(self, goto, fail, output, depth, pattern_lengths, build_cost):
        self.goto: list[dict[int, int]] = goto
        self.fail: list[int] = fail
        self.output: list[tuple[int, ...]] = output
        self.depth: list[int] = depth
        self.pattern_lengths: tuple[int, ...] = pattern_lengths
        self.build_cost: CostCounters = build_cost
        # dense root row used only by search: missing bytes map back to root
        row = dict.fromkeys(range(256), ROOT)
        row.update(goto[ROOT])
        self._rows = [row] + goto[1:]

    @classmethod
    def empty(cls) -> AcAutomaton:
        """Pattern-less sentinel: searching it returns nothing and costs nothing."""
        return cls([{}], [ROOT], [()], [0], (), CostCounters())

    @property
    def state_count(self) -> int:
        return len(self.goto)

    @property
    def pattern_count(self) -> int:
        return len(self.pattern_lengths)

    def __bool__(self) -> bool:
        return self.pattern_count > 0

    def search(self, text: bytes, counters: CostCounters | None = None) -> list[MatchEvent]:
        """Return every pattern occurrence in ``text``.

        Events come out in nondecreasing ``end_index`` order; events
        ending at the same byte are ordered by pattern id. Each consumed
        byte counts one goto move (the root's fallback to itself
        included), each failure-link step one fail move and each event
        one output emission.
        """
        if not self.pattern_lengths or not text:
            return []
        rows = self._rows
        fail = self.fail
        output = self.output
        events: list[MatchEvent] = []
        state = ROOT
        fails = 0
        for i, b in enumerate(text):
            while True:
                nxt = rows[state].get(b)
                if nxt is not None:
                    state = nxt
                    break
                state = fail[state]
                fails += 1
            hits = output[state]
            if hits:
                for pid in hits:
                    events.append(MatchEvent(pid, i))
        if counters is not None:
            counters.goto_moves += len(text)
            counters.fail_moves += fails
            counters.output_emissions += len(events)
        return events

    def dump(self) -> str:
        """Human-readable state table. Format is not stable."""
        lines = []
        for s in range(self.state_count):
            edges = " ".join(f"{b:02x}->{t}" for b, t in sorted(self.goto[s].items()))
            lines.append(f"{s} d={self.depth[s]} fail={self.fail[s]} "
                         f"out={list(self.output[s])} {edges}")
        return "\n".join(lines)


def build(patterns: Sequence[bytes]) -> AcAutomaton:
    """Build an automaton; the i-th pattern gets id ``i``.

    ``build_cost.build_units`` counts trie-node creations plus failure
    queue pushes and pops.
    """
    if not patterns:
        raise AutomatonError("empty pattern set")
    goto: list[dict[int, int]] = [{}]
    depth = [0]
    own: list[list[int]] = [[]]
    units = 1  # root
    lengths = []
    for pid, pat in enumerate(patterns):
        if not pat:
            raise AutomatonError(f"empty pattern at index {pid}")
        pat = fold(bytes(pat))
        lengths.append(len(pat))
        state = ROOT
        for b in pat:
            nxt = goto[state].get(b)
            if nxt is None:
                nxt = len(goto)
                goto[state][b] = nxt
                goto.append({})
                depth.append(depth[state] + 1)
                own.append([])
                units += 1
            state = nxt
        own[state].append(pid)

    n = len(goto)
    fail = [ROOT] * n
    output: list[tuple[int, ...]] = [()] * n
    output[ROOT] = tuple(own[ROOT])
    queue: deque[int] = deque()
    for child in goto[ROOT].values():
        fail[child] = ROOT
        output[child] = tuple(own[child])
        queue.append(child)
        units += 1
    while queue:
        s = queue.popleft()
        units += 1
        for b, child in goto[s].items():
            f = fail[s]
            while f != ROOT and b not in goto[f]:
                f = fail[f]
            target = goto[f].get(b, ROOT)
            fail[child] = target
            inherited = output[target]
            mine = own[child]
            if mine and inherited:
                output[child] = tuple(sorted(set(mine).union(inherited)))
            else:
                output[child] = tuple(mine) or inherited
            queue.append(child)
            units += 1

    return AcAutomaton(goto, fail, output, depth, tuple(lengths),
                       CostCounters(build_units=units))
