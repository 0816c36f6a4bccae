"""Signature-based intrusion detection over pcap captures.

Snort-subset rules are compiled into four protocol-partitioned
Aho-Corasick automata (tcp, udp, icmp, ip); payloads are prefiltered
through the automata and candidate rules verified with Boyer-Moore.
All work is tallied in deterministic cost counters rather than timed.
"""

from sigscan.counters import CostCounters

__version__ = "0.1.0"

__all__ = ["CostCounters", "__version__"]
