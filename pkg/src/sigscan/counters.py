"""Deterministic work counters.

Every counted event costs one unit. Counters are plain integers so two
shards of a run can be summed and compared exactly against a sequential
run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

FIELDS = ("goto_moves", "fail_moves", "output_emissions", "byte_cmps", "build_units")


@dataclass
class CostCounters:
    goto_moves: int = 0
    fail_moves: int = 0
    output_emissions: int = 0
    byte_cmps: int = 0
    build_units: int = 0

    @property
    def total(self) -> int:
        return (self.goto_moves + self.fail_moves + self.output_emissions
                + self.byte_cmps + self.build_units)

    def add(self, other: CostCounters) -> CostCounters:
        """Accumulate ``other`` into this tally in place and return self."""
        self.goto_moves += other.goto_moves
        self.fail_moves += other.fail_moves
        self.output_emissions += other.output_emissions
        self.byte_cmps += other.byte_cmps
        self.build_units += other.build_units
        return self

    def __add__(self, other: CostCounters) -> CostCounters:
        return self.copy().add(other)

    def __sub__(self, other: CostCounters) -> CostCounters:
        return CostCounters(*(getattr(self, f) - getattr(other, f) for f in FIELDS))

    def copy(self) -> CostCounters:
        return CostCounters(*self.as_tuple())

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    @classmethod
    def merge(cls, *shards: CostCounters) -> CostCounters:
        out = cls()
        for s in shards:
            out.add(s)
        return out
