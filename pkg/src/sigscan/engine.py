"""Rule compilation and per-packet inspection.

Rules are partitioned into four groups by header protocol. Each rule
with contents contributes one anchor (its longest content, first on
ties) to its group's automaton; the anchor acts as a prefilter and
the full content chain is confirmed by :func:`verify_rule`.

Every IPv4 packet is searched against its own protocol group and the
``ip`` group. Alerts within a packet are ordered by sid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from ipaddress import IPv4Address
from typing import Iterable

from sigscan import automaton
from sigscan.automaton import AcAutomaton, fold
from sigscan.counters import CostCounters
from sigscan.matchers import BmTables, bm_build, bm_find
from sigscan.packet import ParsedPacket
from sigscan.rules import PROTOCOLS, Rule, RuleHeader, RuleSet

GROUP_FOR_PACKET = {"tcp": "tcp", "udp": "udp", "icmp": "icmp", "other_ip": None}


@dataclass(frozen=True)
class Alert:
    sid: int
    msg: str
    proto: str
    src_ip: int | None
    src_port: int | None
    dst_ip: int | None
    dst_port: int | None
    packet_index: int
    payload: bytes


@dataclass(frozen=True)
class Detector:
    automata: dict[str, AcAutomaton]
    anchor_index: dict[str, tuple[tuple[Rule, int], ...]]
    header_only_rules: dict[str, tuple[Rule, ...]]
    build_cost: CostCounters = field(default_factory=CostCounters)

    def groups_for(self, packet: ParsedPacket) -> tuple[str, ...]:
        own = GROUP_FOR_PACKET.get(packet.proto)
        return (own, "ip") if own else ("ip",)


def anchor_ordinal(rule: Rule) -> int:
    """Index of the rule's longest content; earliest wins ties."""
    best = 0
    for i, c in enumerate(rule.contents):
        if len(c.data) > len(rule.contents[best].data):
            best = i
    return best


def compile_rules(rs: RuleSet | Iterable[Rule]) -> Detector:
    rules = rs.rules if isinstance(rs, RuleSet) else tuple(rs)
    anchors: dict[str, list[tuple[Rule, int]]] = {g: [] for g in PROTOCOLS}
    header_only: dict[str, list[Rule]] = {g: [] for g in PROTOCOLS}
    for rule in rules:
        if rule.contents:
            anchors[rule.protocol].append((rule, anchor_ordinal(rule)))
        else:
            header_only[rule.protocol].append(rule)

    automata = {}
    cost = CostCounters()
    for group in PROTOCOLS:
        entries = anchors[group]
        if entries:
            ac = automaton.build([r.contents[i].data for r, i in entries])
            cost.add(ac.build_cost)
        else:
            ac = AcAutomaton.empty()
        automata[group] = ac
    return Detector(automata,
                    {g: tuple(v) for g, v in anchors.items()},
                    {g: tuple(v) for g, v in header_only.items()},
                    cost)


def header_match(h: RuleHeader, p: ParsedPacket) -> bool:
    if h.protocol != "ip" and h.protocol != p.proto:
        return False
    if p.src_ip is None:
        return False
    if (h.src_addr.matches(p.src_ip) and h.src_port.matches(p.src_port)
            and h.dst_addr.matches(p.dst_ip) and h.dst_port.matches(p.dst_port)):
        return True
    if h.direction == "<>":
        return (h.src_addr.matches(p.dst_ip) and h.src_port.matches(p.dst_port)
                and h.dst_addr.matches(p.src_ip) and h.dst_port.matches(p.src_port))
    return False


@lru_cache(maxsize=65536)
def _tables(pattern: bytes) -> BmTables:
    return bm_build(pattern)


def verify_rule(rule: Rule, payload: bytes, counters: CostCounters | None = None) -> bool:
    """Confirm every content of ``rule`` against ``payload``, in rule order.

    Windows, with ``prev_end`` one past the previous match:

    * offset/depth (and any first content): start >= offset (or 0); with
      depth the match must end by ``(offset or 0) + depth``.
    * later contents: start >= prev_end + (distance or 0); with within
      the match must end by ``prev_end + within``.

    The leftmost admissible occurrence is taken; there is no
    backtracking.
    """
    folded = None
    prev_end = 0
    for i, c in enumerate(rule.contents):
        size = len(c.data)
        if c.absolute or i == 0:
            lo = c.offset or 0
            limit = lo + c.depth if c.depth is not None else None
        else:
            lo = prev_end + (c.distance or 0)
            limit = prev_end + c.within if c.within is not None else None
        if c.nocase:
            if folded is None:
                folded = fold(payload)
            text, pattern = folded, fold(c.data)
        else:
            text, pattern = payload, c.data
        if limit is not None and limit < len(text):
            text = text[:limit]
        if lo + size > len(text):
            return False
        start = bm_find(_tables(pattern), text, lo, counters)
        if start is None:
            return False
        prev_end = start + size
    return True


def inspect(d: Detector, p: ParsedPacket, counters: CostCounters | None = None) -> list[Alert]:
    if p.proto == "non_ip":
        return []
    payload = p.payload
    folded = fold(payload)
    fired: dict[int, Rule] = {}
    for group in d.groups_for(p):
        entries = d.anchor_index[group]
        seen: set[int] = set()
        for ev in d.automata[group].search(folded, counters):
            pid = ev.pattern_id
            if pid in seen:
                continue
            seen.add(pid)
            rule = entries[pid][0]
            if rule.sid in fired:
                continue
            if header_match(rule.header, p) and verify_rule(rule, payload, counters):
                fired[rule.sid] = rule
        for rule in d.header_only_rules[group]:
            if header_match(rule.header, p):
                fired[rule.sid] = rule
    proto = "ip" if p.proto == "other_ip" else p.proto
    return [Alert(sid, fired[sid].msg, proto, p.src_ip, p.src_port, p.dst_ip, p.dst_port,
                  p.index, payload)
            for sid in sorted(fired)]


def format_alert(a: Alert) -> str:
    """One alert-file line (no trailing newline)."""
    def endpoint(ip, port):
        return f"{IPv4Address(ip)}:{'-' if port is None else port}"

    msg = a.msg.encode("ascii", "backslashreplace").decode("ascii")
    return (f'[{a.sid}] "{msg}" {a.proto} {endpoint(a.src_ip, a.src_port)} -> '
            f"{endpoint(a.dst_ip, a.dst_port)} pkt={a.packet_index} payload={a.payload.hex()}")
