"""Seeded generator for Snort-style rule files.

Produces a corpus shaped like a real rules file: mostly tcp rules,
variables in headers, one to three contents with modifiers, plus a
sprinkling of comments and rules using options outside the supported
subset (which the parser skips).
"""

from __future__ import annotations

import random
import string

from sigscan.rules import format_content_arg

VARIABLES = {
    "HOME_NET": "192.168.0.0/16",
    "EXTERNAL_NET": "!192.168.0.0/16",
    "HTTP_SERVERS": "[192.168.1.0/24,192.168.2.10]",
}

_ALPHABET = string.ascii_letters + string.digits + "/._-=?"
_PROTO_WEIGHTS = {"tcp": 70, "udp": 15, "icmp": 8, "ip": 7}
_UNSUPPORTED = ('pcre:"/a+b/i";', "flow:established,to_server;", "dsize:>100;",
                "byte_test:4,>,1000,0;", 'uricontent:"/cgi-bin";')


def random_content(rng: random.Random, lo: int = 4, hi: int = 20) -> bytes:
    size = rng.randint(lo, hi)
    data = bytearray(ord(rng.choice(_ALPHABET)) for _ in range(size))
    if rng.random() < 0.15:
        at = rng.randrange(size)
        data[at:at + 2] = bytes(rng.randrange(256) for _ in range(min(2, size - at)))
    return bytes(data)


def _addr(rng: random.Random) -> str:
    return rng.choices(["any", "$HOME_NET", "$EXTERNAL_NET", "$HTTP_SERVERS", "10.0.0.0/8"],
                       [50, 20, 20, 5, 5])[0]


def _port(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.55:
        return "any"
    if roll < 0.85:
        return str(rng.choice([21, 23, 25, 53, 80, 110, 139, 443, 445, 8080]))
    if roll < 0.95:
        lo = rng.randrange(1, 60000)
        return f"{lo}:{lo + rng.randrange(1, 5000)}"
    return "!" + str(rng.choice([80, 443]))


def _content_options(rng: random.Random) -> list[str]:
    opts = []
    for i in range(rng.choice([1, 1, 1, 2, 2, 3])):
        data = random_content(rng)
        parts = [f"content:{format_content_arg(data)};"]
        if rng.random() < 0.3:
            parts.append("nocase;")
        if i == 0 and rng.random() < 0.2:
            offset = rng.randrange(0, 20)
            parts.append(f"offset:{offset};")
            parts.append(f"depth:{len(data) + rng.randrange(0, 200)};")
        elif i > 0 and rng.random() < 0.4:
            distance = rng.randrange(0, 10)
            parts.append(f"distance:{distance};")
            parts.append(f"within:{distance + len(data) + rng.randrange(0, 100)};")
        opts.append(" ".join(parts))
    return opts


def synth_rules(count: int, seed: int = 0, *, skip_rate: float = 0.05,
                comment_rate: float = 0.05, header_only_rate: float = 0.01) -> str:
    """Return rules-file text with ``count`` parseable rules plus noise lines."""
    rng = random.Random(seed)
    protos = list(_PROTO_WEIGHTS)
    weights = list(_PROTO_WEIGHTS.values())
    lines = ["# synthetic rule corpus", ""]
    sid = 1_000_000
    made = 0
    while made < count:
        roll = rng.random()
        if roll < comment_rate:
            lines.append(f"# disabled: alert tcp any any -> any any (msg:\"old\"; sid:{sid};)")
            continue
        sid += 1
        proto = rng.choices(protos, weights)[0]
        header = f"alert {proto} {_addr(rng)} {_port(rng)} -> {_addr(rng)} {_port(rng)}"
        if rng.random() < 0.05:
            header = header.replace(" -> ", " <> ")
        opts = [f'msg:"SYNTH {proto.upper()} rule {sid}";']
        if rng.random() >= header_only_rate:
            opts.extend(_content_options(rng))
        if roll < comment_rate + skip_rate:
            opts.append(rng.choice(_UNSUPPORTED))
        else:
            made += 1
        opts.append(f"classtype:misc-activity; sid:{sid}; rev:1;")
        lines.append(f"{header} ({' '.join(opts)})")
    return "\n".join(lines) + "\n"
