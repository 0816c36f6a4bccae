"""Parser for a subset of the Snort 2.x rule language.

Supported grammar::

    alert PROTO ADDR PORT DIR ADDR PORT (OPTIONS)

PROTO is one of tcp, udp, icmp, ip. ADDR is ``any``, ``A.B.C.D[/P]``,
``$VAR``, ``!ADDR`` or ``[ADDR,ADDR,...]``. PORT is ``any``, ``N``,
``N:M``, ``:M``, ``N:``, ``!PORT`` or ``$VAR``. DIR is ``->`` or ``<>``.

Detection options understood: content, nocase, offset, depth, distance,
within. ``msg`` and ``sid`` are required metadata; rev, gid, classtype,
reference, priority and metadata are accepted and dropped since they do
not influence matching. A rule using any other option is skipped, not
rejected, and the reason is recorded.
"""

from __future__ import annotations

import ipaddress
import logging
import re
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Union

logger = logging.getLogger(__name__)

PROTOCOLS = ("tcp", "udp", "icmp", "ip")
DIRECTIONS = ("->", "<>")

MODIFIERS = ("nocase", "offset", "depth", "distance", "within")
IGNORED_OPTIONS = frozenset(("rev", "gid", "classtype", "reference", "priority", "metadata"))

_OPTION_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")
_INT = re.compile(r"^[+-]?\d+$")
_VAR = re.compile(r"^\$([A-Za-z_][A-Za-z0-9_]*)$")

MAX_PORT = 65535


class RuleError(ValueError):
    """Malformed rule text."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class RuleSetError(ValueError):
    pass


class Skip(NamedTuple):
    reason: str


@dataclass(frozen=True)
class AddrSpec:
    kind: str  # "any" | "cidr" | "list"
    negated: bool = False
    address: int = 0
    prefix: int = 0
    members: tuple[AddrSpec, ...] = ()

    def matches(self, ip: int) -> bool:
        if self.kind == "any":
            hit = True
        elif self.kind == "cidr":
            mask = (0xFFFFFFFF << (32 - self.prefix)) & 0xFFFFFFFF
            hit = (ip & mask) == (self.address & mask)
        else:
            hit = any(m.matches(ip) for m in self.members)
        return hit != self.negated

    def __str__(self) -> str:
        neg = "!" if self.negated else ""
        if self.kind == "any":
            return neg + "any"
        if self.kind == "cidr":
            return f"{neg}{ipaddress.IPv4Address(self.address)}/{self.prefix}"
        return neg + "[" + ",".join(str(m) for m in self.members) + "]"


ANY_ADDR = AddrSpec("any")


@dataclass(frozen=True)
class PortSpec:
    kind: str  # "any" | "single" | "range"
    negated: bool = False
    lo: int = 0
    hi: int = MAX_PORT

    def matches(self, port: int | None) -> bool:
        # vacuously true for protocols without ports
        if port is None or self.kind == "any":
            return True
        return (self.lo <= port <= self.hi) != self.negated

    def __str__(self) -> str:
        neg = "!" if self.negated else ""
        if self.kind == "any":
            return neg + "any"
        if self.kind == "single":
            return f"{neg}{self.lo}"
        return f"{neg}{self.lo}:{self.hi}"


ANY_PORT = PortSpec("any")

Variable = Union[AddrSpec, PortSpec, str]


@dataclass(frozen=True)
class ContentPattern:
    data: bytes
    nocase: bool = False
    offset: int | None = None
    depth: int | None = None
    distance: int | None = None
    within: int | None = None

    @property
    def absolute(self) -> bool:
        return self.offset is not None or self.depth is not None

    @property
    def relative(self) -> bool:
        return self.distance is not None or self.within is not None

    def to_text(self) -> str:
        parts = [f"content:{format_content_arg(self.data)};"]
        if self.nocase:
            parts.append("nocase;")
        for name in ("offset", "depth", "distance", "within"):
            value = getattr(self, name)
            if value is not None:
                parts.append(f"{name}:{value};")
        return " ".join(parts)


@dataclass(frozen=True)
class RuleHeader:
    action: str
    protocol: str
    src_addr: AddrSpec
    src_port: PortSpec
    direction: str
    dst_addr: AddrSpec
    dst_port: PortSpec

    def to_text(self) -> str:
        return " ".join((self.action, self.protocol, str(self.src_addr), str(self.src_port),
                         self.direction, str(self.dst_addr), str(self.dst_port)))


@dataclass(frozen=True)
class Rule:
    header: RuleHeader
    msg: str
    sid: int
    contents: tuple[ContentPattern, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def protocol(self) -> str:
        return self.header.protocol

    def to_text(self) -> str:
        """Canonical single-line form; reparsing it yields an equal Rule."""
        opts = [f'msg:"{_escape_msg(self.msg)}";']
        opts.extend(c.to_text() for c in self.contents)
        opts.append(f"sid:{self.sid};")
        return f"{self.header.to_text()} ({' '.join(opts)})"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()
    variables: Mapping[str, Variable] = field(default_factory=dict)
    skipped: tuple[tuple[int, str], ...] = ()
    errors: tuple[tuple[int, str], ...] = ()

    def partition_sizes(self) -> dict[str, int]:
        sizes = dict.fromkeys(PROTOCOLS, 0)
        for r in self.rules:
            sizes[r.protocol] += 1
        return sizes

    def __len__(self) -> int:
        return len(self.rules)


# content arguments

_ESCAPABLE = '"\\;|'


def parse_content_arg(text: str) -> bytes:
    """Decode a quoted content argument into raw bytes.

    ``|41 42|`` runs are hex; ``\\"``, ``\\\\``, ``\\;`` and ``\\|`` are
    escapes outside hex runs. Everything else is copied verbatim.
    """
    text = text.strip()
    if len(text) < 2 or text[0] != '"' or text[-1] != '"':
        raise RuleError(f"content argument must be quoted: {text!r}")
    body = text[1:-1]
    out = bytearray()
    i = 0
    n = len(body)
    while i < n:
        ch = body[i]
        if ch == "\\":
            if i + 1 >= n or body[i + 1] not in _ESCAPABLE:
                raise RuleError(f"bad escape in content: {text!r}")
            out += body[i + 1].encode("latin-1")
            i += 2
        elif ch == "|":
            end = body.find("|", i + 1)
            if end < 0:
                raise RuleError(f"unterminated hex run in content: {text!r}")
            for group in body[i + 1:end].split():
                if len(group) % 2:
                    raise RuleError(f"odd hex digit count in content: {text!r}")
                try:
                    out += bytes.fromhex(group)
                except ValueError:
                    raise RuleError(f"non-hex character in content: {text!r}") from None
            i = end + 1
        elif ch == '"':
            raise RuleError(f"unescaped quote in content: {text!r}")
        else:
            try:
                out += ch.encode("latin-1")
            except UnicodeEncodeError:
                out += ch.encode("utf-8")
            i += 1
    return bytes(out)


def format_content_arg(data: bytes) -> str:
    """Quote ``data`` as a content argument: printable ASCII verbatim, the rest hex."""
    parts = []
    hexrun: list[str] = []
    for b in data:
        ch = chr(b)
        if 0x20 <= b < 0x7F and ch not in _ESCAPABLE:
            if hexrun:
                parts.append("|" + " ".join(hexrun) + "|")
                hexrun = []
            parts.append(ch)
        else:
            hexrun.append(f"{b:02X}")
    if hexrun:
        parts.append("|" + " ".join(hexrun) + "|")
    return '"' + "".join(parts) + '"'


def _escape_msg(msg: str) -> str:
    return msg.replace("\\", "\\\\").replace('"', '\\"').replace(";", "\\;")


def _unquote_msg(value: str) -> str:
    value = value.strip()
    if len(value) < 2 or value[0] != '"' or value[-1] != '"':
        raise RuleError(f"msg must be quoted: {value!r}")
    return re.sub(r'\\([\\";])', r"\1", value[1:-1])


# header

class _Unsupported(Exception):
    pass


def _resolve(name: str, variables: Mapping[str, Variable], want: type, depth: int):
    if name not in variables:
        raise RuleError(f"unresolved variable ${name}")
    value = variables[name]
    if isinstance(value, str):
        if depth > 8:
            raise RuleError(f"variable ${name} nests too deeply")
        parse = parse_addr if want is AddrSpec else parse_port
        return parse(value, variables, _depth=depth + 1)
    if not isinstance(value, want):
        raise RuleError(f"variable ${name} is not a {'address' if want is AddrSpec else 'port'}")
    return value


def _split_list(text: str) -> list[str]:
    items, level, buf = [], 0, []
    for ch in text:
        if ch == "[":
            level += 1
        elif ch == "]":
            level -= 1
        if ch == "," and level == 0:
            items.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    items.append("".join(buf).strip())
    return items


def parse_addr(text: str, variables: Mapping[str, Variable] | None = None, *,
               _depth: int = 0) -> AddrSpec:
    variables = variables or {}
    text = text.strip()
    if not text:
        raise RuleError("empty address")
    if text.startswith("!"):
        inner = parse_addr(text[1:], variables, _depth=_depth)
        if inner.kind == "any":
            raise RuleError("negated 'any' address matches nothing")
        return AddrSpec(inner.kind, not inner.negated, inner.address, inner.prefix, inner.members)
    if text == "any":
        return ANY_ADDR
    m = _VAR.match(text)
    if m:
        return _resolve(m.group(1), variables, AddrSpec, _depth)
    if text.startswith("["):
        if not text.endswith("]") or text.count("[") != text.count("]"):
            raise RuleError(f"unbalanced address list: {text!r}")
        members: list[AddrSpec] = []
        for item in _split_list(text[1:-1]):
            spec = parse_addr(item, variables, _depth=_depth)
            if spec.kind == "any":
                raise RuleError(f"'any' inside address list: {text!r}")
            if spec.kind == "list":
                if spec.negated:
                    raise RuleError(f"negated nested address list: {text!r}")
                members.extend(spec.members)
            else:
                members.append(spec)
        if not members:
            raise RuleError("empty address list")
        return AddrSpec("list", members=tuple(members))
    addr, _, prefix = text.partition("/")
    try:
        ip = int(ipaddress.IPv4Address(addr))
    except ValueError:
        raise RuleError(f"bad IPv4 address: {text!r}") from None
    if not prefix:
        plen = 32
    elif prefix.isdigit() and int(prefix) <= 32:
        plen = int(prefix)
    else:
        raise RuleError(f"bad CIDR prefix: {text!r}")
    return AddrSpec("cidr", address=ip, prefix=plen)


def _port_number(text: str) -> int:
    if not text.isdigit() or int(text) > MAX_PORT:
        raise RuleError(f"bad port: {text!r}")
    return int(text)


def parse_port(text: str, variables: Mapping[str, Variable] | None = None, *,
               _depth: int = 0) -> PortSpec:
    variables = variables or {}
    text = text.strip()
    if not text:
        raise RuleError("empty port")
    if text.startswith("!"):
        inner = parse_port(text[1:], variables, _depth=_depth)
        if inner.kind == "any":
            raise RuleError("negated 'any' port matches nothing")
        return PortSpec(inner.kind, not inner.negated, inner.lo, inner.hi)
    if text == "any":
        return ANY_PORT
    m = _VAR.match(text)
    if m:
        return _resolve(m.group(1), variables, PortSpec, _depth)
    if text.startswith("["):
        raise _Unsupported("port list")
    if ":" in text:
        lo_text, _, hi_text = text.partition(":")
        lo = _port_number(lo_text) if lo_text else 0
        hi = _port_number(hi_text) if hi_text else MAX_PORT
        if lo > hi:
            raise RuleError(f"empty port range: {text!r}")
        return PortSpec("range", lo=lo, hi=hi)
    port = _port_number(text)
    return PortSpec("single", lo=port, hi=port)


def _header_tokens(text: str) -> list[str]:
    tokens, buf, level = [], [], 0
    for ch in text:
        if ch == "[":
            level += 1
        elif ch == "]":
            level -= 1
        if ch.isspace() and level == 0:
            if buf:
                tokens.append("".join(buf))
                buf = []
        else:
            buf.append(ch)
    if buf:
        tokens.append("".join(buf))
    return tokens


def parse_header(text: str, variables: Mapping[str, Variable] | None = None) -> RuleHeader:
    tokens = _header_tokens(text)
    if len(tokens) != 7:
        raise RuleError(f"rule header needs 7 fields, got {len(tokens)}")
    action, proto, src, sport, direction, dst, dport = tokens
    if action != "alert":
        raise RuleError(f"unknown action {action!r}")
    proto = proto.lower()
    if proto not in PROTOCOLS:
        raise RuleError(f"unknown protocol {proto!r}")
    if direction not in DIRECTIONS:
        raise RuleError(f"bad direction {direction!r}")
    return RuleHeader(action, proto,
                      parse_addr(src, variables), parse_port(sport, variables),
                      direction,
                      parse_addr(dst, variables), parse_port(dport, variables))


# options

def _split_options(body: str) -> list[tuple[str, str | None]]:
    options = []
    buf: list[str] = []
    in_quote = False
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and in_quote and i + 1 < len(body):
            buf.append(body[i:i + 2])
            i += 2
            continue
        if ch == '"':
            in_quote = not in_quote
        if ch == ";" and not in_quote:
            options.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
        i += 1
    if in_quote:
        raise RuleError("unterminated quoted string")
    tail = "".join(buf).strip()
    if tail:
        options.append(tail)

    parsed = []
    for opt in options:
        if not opt:
            continue
        name, sep, value = opt.partition(":")
        name = name.strip()
        if not _OPTION_NAME.match(name):
            raise RuleError(f"malformed option {opt!r}")
        parsed.append((name.lower(), value.strip() if sep else None))
    return parsed


def _int_arg(name: str, value: str | None) -> int:
    if value is None or not _INT.match(value):
        raise RuleError(f"{name} needs an integer argument, got {value!r}")
    return int(value)


def _finish_content(spec: dict, first: bool) -> ContentPattern:
    data = spec["data"]
    if not data:
        raise RuleError("empty content")
    offset, depth = spec.get("offset"), spec.get("depth")
    distance, within = spec.get("distance"), spec.get("within")
    absolute = offset is not None or depth is not None
    relative = distance is not None or within is not None
    if relative and first:
        raise RuleError("distance/within on the first content")
    if absolute and relative:
        raise RuleError("offset/depth mixed with distance/within on one content")
    if offset is not None and offset < 0:
        raise RuleError("negative offset")
    if distance is not None and distance < 0:
        raise RuleError("negative distance")
    if depth is not None and depth < len(data):
        raise RuleError(f"depth {depth} shorter than content length {len(data)}")
    if within is not None and within < len(data) + (distance or 0):
        raise RuleError(f"within {within} too short for content length {len(data)}")
    return ContentPattern(data, spec.get("nocase", False), offset, depth, distance, within)


def parse_rule(line: str, variables: Mapping[str, Variable] | None = None,
               lineno: int | None = None) -> Rule | Skip:
    """Parse one logical rule line.

    Returns a :class:`Rule`, or a :class:`Skip` for blank lines, comments
    and rules relying on options outside the supported subset. Raises
    :class:`RuleError` for malformed text.
    """
    variables = variables or {}
    text = line.strip()
    if not text:
        return Skip("blank")
    if text.startswith("#"):
        return Skip("comment")
    try:
        return _parse_rule(text, variables, lineno or 0)
    except RuleError as e:
        if e.line is None and lineno is not None:
            raise RuleError(e.message, lineno) from None
        raise
    except _Unsupported as e:
        return Skip(f"unsupported {e}")


def _parse_rule(text: str, variables: Mapping[str, Variable], lineno: int) -> Rule:
    open_at = text.find("(")
    if open_at < 0 or not text.endswith(")"):
        raise RuleError("unbalanced parentheses")
    header = parse_header(text[:open_at], variables)
    options = _split_options(text[open_at + 1:-1])

    msg = ""
    sid = None
    contents: list[dict] = []
    unsupported = []
    for name, value in options:
        if name == "msg":
            msg = _unquote_msg(value or "")
        elif name == "sid":
            if sid is not None:
                raise RuleError("sid given twice")
            sid = _int_arg(name, value)
            if sid <= 0:
                raise RuleError("sid must be positive")
        elif name == "content":
            if value is None:
                raise RuleError("content needs an argument")
            if value.startswith("!"):
                unsupported.append("negated content")
                contents.append({"data": b"x"})
                continue
            contents.append({"data": parse_content_arg(value)})
        elif name in MODIFIERS:
            if not contents:
                raise RuleError(f"{name} before any content")
            current = contents[-1]
            if name in current:
                raise RuleError(f"{name} given twice for one content")
            if name == "nocase":
                if value is not None:
                    raise RuleError("nocase takes no argument")
                current[name] = True
            else:
                number = _int_arg(name, value)
                if name in ("depth", "within") and number <= 0:
                    raise RuleError(f"{name} must be positive")
                current[name] = number
        elif name in IGNORED_OPTIONS:
            pass
        else:
            unsupported.append(name)
    if unsupported:
        raise _Unsupported("option: " + unsupported[0])
    if sid is None:
        raise RuleError("missing sid")
    patterns = tuple(_finish_content(c, i == 0) for i, c in enumerate(contents))
    return Rule(header, msg, sid, patterns, line=lineno)


def logical_lines(text: str):
    """Yield (first physical line number, joined text), honoring trailing-backslash continuation."""
    pending: list[str] = []
    start = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not pending:
            start = lineno
        if line.endswith("\\"):
            pending.append(line[:-1])
            continue
        pending.append(line)
        yield start, "".join(pending)
        pending = []
    if pending:
        yield start, "".join(pending)


def parse_ruleset(text: str, variables: Mapping[str, Variable] | None = None) -> RuleSet:
    """Parse a whole rules file.

    Hard errors on individual lines are recorded in ``RuleSet.errors``;
    parsing only fails outright when nothing parsed and something
    errored, or when a sid repeats.
    """
    variables = dict(variables or {})
    rules: list[Rule] = []
    skipped: list[tuple[int, str]] = []
    errors: list[tuple[int, str]] = []
    seen: dict[int, int] = {}
    for lineno, line in logical_lines(text):
        try:
            result = parse_rule(line, variables, lineno)
        except RuleError as e:
            logger.debug("rule error: %s", e)
            errors.append((lineno, e.message))
            continue
        if isinstance(result, Skip):
            if result.reason != "blank":
                skipped.append((lineno, result.reason))
            continue
        if result.sid in seen:
            raise RuleSetError(f"duplicate sid {result.sid} (lines {seen[result.sid]} and {lineno})")
        seen[result.sid] = lineno
        rules.append(result)
    if not rules and errors:
        first_line, first_msg = errors[0]
        raise RuleSetError(f"no rules parsed; {len(errors)} error(s), first at line "
                           f"{first_line}: {first_msg}")
    return RuleSet(tuple(rules), variables, tuple(skipped), tuple(errors))
