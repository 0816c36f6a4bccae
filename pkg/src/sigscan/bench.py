"""Counter-based performance harness.

Instead of timing, every run reports cumulative :class:`CostCounters`
against the number of packets processed. The first sample of every
report is the zero-packet intercept: the cost of building the search
structures before any traffic arrives.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence, Union

from sigscan import automaton
from sigscan.automaton import fold
from sigscan.counters import FIELDS, CostCounters
from sigscan.engine import Detector, inspect
from sigscan.matchers import bm_build, bm_find, naive_find
from sigscan.packet import DecodeError, decode, read_capture

ALGOS = ("ac_engine", "bm_scan", "naive_scan")
CSV_HEADER = "algo,packets," + ",".join(FIELDS) + ",total,alerts"

Capture = Union[bytes, bytearray, BinaryIO]


@dataclass(frozen=True)
class Sample:
    packets: int
    counters: CostCounters  # cumulative, build cost included
    alerts: int


@dataclass
class BenchReport:
    algo: str
    samples: list[Sample]
    build_cost: CostCounters
    decode_errors: int = 0
    # (packet ordinal, pattern index) pairs; filled by run_algo_compare only
    hits: list[tuple[int, int]] = field(default_factory=list)

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    @property
    def run_cost(self) -> CostCounters:
        """Work spent on traffic alone, build intercept removed."""
        return self.final.counters - self.build_cost


def _stream(capture: Capture) -> BinaryIO:
    if isinstance(capture, (bytes, bytearray)):
        return io.BytesIO(capture)
    return capture


class _Sampler:
    def __init__(self, algo: str, build_cost: CostCounters, interval: int):
        if interval < 1:
            raise ValueError("sample interval must be >= 1")
        self.interval = interval
        self.counters = build_cost.copy()
        self.alerts = 0
        self.packets = 0
        self.report = BenchReport(algo, [Sample(0, build_cost.copy(), 0)], build_cost.copy())

    def tick(self) -> None:
        self.packets += 1
        if self.packets % self.interval == 0:
            self.snapshot()

    def snapshot(self) -> None:
        if self.report.samples[-1].packets != self.packets:
            self.report.samples.append(Sample(self.packets, self.counters.copy(), self.alerts))

    def finish(self) -> BenchReport:
        self.snapshot()
        return self.report


def run_engine_bench(d: Detector, capture: Capture, sample_interval: int = 1000) -> BenchReport:
    """Stream a capture through :func:`inspect`, sampling every ``sample_interval`` packets.

    Frames that fail to decode still count as processed packets and are
    tallied in ``decode_errors``.
    """
    sampler = _Sampler("ac_engine", d.build_cost, sample_interval)
    _, records = read_capture(_stream(capture))
    for i, rec in enumerate(records):
        try:
            packet = decode(rec, i)
        except DecodeError:
            sampler.report.decode_errors += 1
        else:
            sampler.alerts += len(inspect(d, packet, sampler.counters))
        sampler.tick()
    return sampler.finish()


def _payloads(capture: Capture) -> tuple[list[bytes], int]:
    payloads, errors = [], 0
    _, records = read_capture(_stream(capture))
    for i, rec in enumerate(records):
        try:
            payloads.append(decode(rec, i).payload)
        except DecodeError:
            payloads.append(b"")
            errors += 1
    return payloads, errors


def run_algo_compare(patterns: Sequence[bytes], capture: Capture,
                     sample_interval: int = 1000) -> list[BenchReport]:
    """Search the same payload stream three ways: one automaton, per-pattern
    Boyer-Moore, per-pattern naive scan.

    Patterns and payloads are ASCII case-folded for all three so their
    verdicts are comparable. The per-pattern scans do not stop early:
    every pattern is searched in every payload.
    """
    if not patterns:
        raise ValueError("need at least one pattern")
    patterns = [fold(bytes(p)) for p in patterns]
    payloads, errors = _payloads(capture)
    folded = [fold(p) for p in payloads]

    ac = automaton.build(patterns)
    tables = [bm_build(p) for p in patterns]
    bm_cost = CostCounters(build_units=sum(len(t.bad_char) + len(t.good_suffix) for t in tables))

    def run(algo: str, build_cost: CostCounters, verdicts) -> BenchReport:
        sampler = _Sampler(algo, build_cost, sample_interval)
        sampler.report.decode_errors = errors
        for i, text in enumerate(folded):
            found = verdicts(text, sampler.counters)
            sampler.alerts += len(found)
            sampler.report.hits.extend((i, k) for k in found)
            sampler.tick()
        return sampler.finish()

    def ac_verdicts(text, counters):
        return sorted({ev.pattern_id for ev in ac.search(text, counters)})

    def bm_verdicts(text, counters):
        return [k for k, t in enumerate(tables) if bm_find(t, text, 0, counters) is not None]

    def naive_verdicts(text, counters):
        return [k for k, p in enumerate(patterns) if naive_find(p, text, 0, counters) is not None]

    return [run("ac_engine", ac.build_cost, ac_verdicts),
            run("bm_scan", bm_cost, bm_verdicts),
            run("naive_scan", CostCounters(), naive_verdicts)]


def merge_reports(first: BenchReport, second: BenchReport) -> BenchReport:
    """Join two shard reports of consecutive capture halves.

    Both shards must come from the same build. The second shard's build
    intercept is dropped and its samples are offset by the first
    shard's final tally, so interval-aligned shards reproduce the
    sequential report exactly.
    """
    if first.algo != second.algo or first.build_cost != second.build_cost:
        raise ValueError("shards differ in algorithm or build")
    base = first.final
    shifted = [Sample(base.packets + s.packets,
                      base.counters + (s.counters - second.build_cost),
                      base.alerts + s.alerts)
               for s in second.samples[1:]]
    offset = base.packets
    return BenchReport(first.algo, list(first.samples) + shifted, first.build_cost.copy(),
                       first.decode_errors + second.decode_errors,
                       list(first.hits) + [(i + offset, k) for i, k in second.hits])


def emit_csv(reports: BenchReport | Iterable[BenchReport]) -> bytes:
    """CSV with one row per sample; ASCII, LF line endings."""
    if isinstance(reports, BenchReport):
        reports = [reports]
    lines = [CSV_HEADER]
    for r in reports:
        for s in r.samples:
            c = s.counters
            lines.append(",".join(str(v) for v in (r.algo, s.packets, *c.as_tuple(),
                                                    c.total, s.alerts)))
    return ("\n".join(lines) + "\n").encode("ascii")
