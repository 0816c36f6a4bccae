"""Classic libpcap capture reading, Ethernet/IPv4 decoding and a seeded
synthetic capture writer.

Only link type 1 (Ethernet II) is accepted. Decoding classifies each
frame as tcp, udp, icmp, other_ip or non_ip and locates the payload
span; nothing is reassembled.
"""

from __future__ import annotations

import ipaddress
import logging
import random
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)

MAGIC_USEC = 0xA1B2C3D4
MAGIC_NSEC = 0xA1B23C4D
LINKTYPE_ETHERNET = 1

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
ETH_LEN = 14
ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100

PROTO_NUMBERS = {"tcp": 6, "udp": 17, "icmp": 1}
PROTO_NAMES = {6: "tcp", 17: "udp", 1: "icmp"}
OTHER_IP_PROTO = 47  # GRE, used by the generator for other_ip packets


class CaptureError(ValueError):
    pass


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class CaptureHeader:
    byte_order: str  # "little" | "big"
    snaplen: int
    link_type: int
    nanosecond: bool = False
    version: tuple[int, int] = (2, 4)


@dataclass(frozen=True)
class PacketRecord:
    ts_sec: int
    ts_usec: int
    caplen: int
    origlen: int
    data: bytes


@dataclass(frozen=True)
class ParsedPacket:
    proto: str  # tcp | udp | icmp | other_ip | non_ip
    src_ip: int | None
    dst_ip: int | None
    src_port: int | None
    dst_port: int | None
    data: bytes = field(repr=False)
    payload_start: int = 0
    payload_end: int = 0
    index: int = 0

    @property
    def payload(self) -> bytes:
        return self.data[self.payload_start:self.payload_end]

    @property
    def src(self) -> str:
        return str(ipaddress.IPv4Address(self.src_ip)) if self.src_ip is not None else "-"

    @property
    def dst(self) -> str:
        return str(ipaddress.IPv4Address(self.dst_ip)) if self.dst_ip is not None else "-"


def read_capture(stream: BinaryIO) -> tuple[CaptureHeader, Iterator[PacketRecord]]:
    """Decode the global header and return it with a lazy record iterator.

    A record cut short by end of file stops iteration with a logged
    warning. A record header whose caplen exceeds the snap length is
    treated as corruption and raises :class:`CaptureError`.
    """
    raw = stream.read(GLOBAL_HEADER_LEN)
    if len(raw) < GLOBAL_HEADER_LEN:
        raise CaptureError("capture shorter than the 24-byte global header")
    magic_le = struct.unpack("<I", raw[:4])[0]
    magic_be = struct.unpack(">I", raw[:4])[0]
    if magic_le in (MAGIC_USEC, MAGIC_NSEC):
        order, magic = "<", magic_le
    elif magic_be in (MAGIC_USEC, MAGIC_NSEC):
        order, magic = ">", magic_be
    else:
        raise CaptureError(f"unknown magic 0x{magic_le:08x}")
    _, major, minor, _zone, _sigfigs, snaplen, linktype = struct.unpack(order + "IHHiIII", raw)
    if linktype != LINKTYPE_ETHERNET:
        raise CaptureError(f"unsupported link type {linktype}")
    header = CaptureHeader("little" if order == "<" else "big", snaplen, linktype,
                           magic == MAGIC_NSEC, (major, minor))
    return header, _records(stream, order, header)


def _records(stream: BinaryIO, order: str, header: CaptureHeader) -> Iterator[PacketRecord]:
    fmt = order + "IIII"
    count = 0
    while True:
        raw = stream.read(RECORD_HEADER_LEN)
        if not raw:
            return
        if len(raw) < RECORD_HEADER_LEN:
            logger.warning("truncated record header after %d packets; stopping", count)
            return
        ts_sec, ts_frac, caplen, origlen = struct.unpack(fmt, raw)
        if header.snaplen and caplen > header.snaplen:
            raise CaptureError(f"record {count}: caplen {caplen} exceeds snaplen {header.snaplen}")
        data = stream.read(caplen)
        if len(data) < caplen:
            logger.warning("truncated record %d (%d of %d bytes); stopping", count, len(data), caplen)
            return
        if header.nanosecond:
            ts_frac //= 1000
        yield PacketRecord(ts_sec, ts_frac, caplen, max(origlen, caplen), data)
        count += 1


def decode(rec: PacketRecord | bytes, index: int = 0) -> ParsedPacket:
    """Classify an Ethernet frame and locate its payload."""
    data = rec.data if isinstance(rec, PacketRecord) else bytes(rec)
    n = len(data)
    if n < ETH_LEN:
        raise DecodeError(f"short frame ({n} bytes)")
    ethertype = int.from_bytes(data[12:14], "big")
    pos = ETH_LEN
    while ethertype == ETHERTYPE_VLAN:
        if n < pos + 4:
            raise DecodeError("truncated VLAN tag")
        ethertype = int.from_bytes(data[pos + 2:pos + 4], "big")
        pos += 4
    if ethertype != ETHERTYPE_IPV4:
        return ParsedPacket("non_ip", None, None, None, None, data, n, n, index)

    ip = pos
    if n < ip + 20:
        raise DecodeError("truncated IPv4 header")
    vihl = data[ip]
    if vihl >> 4 != 4:
        raise DecodeError(f"IP version {vihl >> 4} in IPv4 frame")
    ihl = (vihl & 0x0F) * 4
    if ihl < 20:
        raise DecodeError(f"IHL {ihl // 4} < 5")
    total = int.from_bytes(data[ip + 2:ip + 4], "big")
    end = ip + total if ihl <= total and ip + total <= n else n
    proto_num = data[ip + 9]
    src = int.from_bytes(data[ip + 12:ip + 16], "big")
    dst = int.from_bytes(data[ip + 16:ip + 20], "big")
    l4 = min(ip + ihl, end)

    proto = PROTO_NAMES.get(proto_num, "other_ip")
    sport = dport = None
    if proto == "tcp":
        if end < l4 + 20:
            raise DecodeError("truncated TCP header")
        sport = int.from_bytes(data[l4:l4 + 2], "big")
        dport = int.from_bytes(data[l4 + 2:l4 + 4], "big")
        offset = (data[l4 + 12] >> 4) * 4
        if offset < 20:
            raise DecodeError(f"TCP data offset {offset // 4} < 5")
        start = min(l4 + offset, end)
    elif proto == "udp":
        if end < l4 + 8:
            raise DecodeError("truncated UDP header")
        sport = int.from_bytes(data[l4:l4 + 2], "big")
        dport = int.from_bytes(data[l4 + 2:l4 + 4], "big")
        start = l4 + 8
    elif proto == "icmp":
        start = min(l4 + 8, end)
    else:
        start = l4
    return ParsedPacket(proto, src, dst, sport, dport, data, start, end, index)


def iter_packets(stream: BinaryIO, errors: list | None = None) -> Iterator[ParsedPacket]:
    """Read and decode a capture, skipping frames that fail to decode.

    Each skipped frame is appended to ``errors`` as ``(index, message)``.
    Indexes are record ordinals, so they stay aligned with the file.
    """
    _, records = read_capture(stream)
    for i, rec in enumerate(records):
        try:
            yield decode(rec, i)
        except DecodeError as e:
            if errors is not None:
                errors.append((i, str(e)))


# synthetic captures

@dataclass(frozen=True)
class Plant:
    pattern: bytes
    packet: int
    offset: int


@dataclass(frozen=True)
class GenSpec:
    packets: int
    mix: Mapping[str, float] = field(default_factory=lambda: {"tcp": 1.0})
    payload_len: tuple[int, int] = (0, 64)
    plants: Sequence[Plant] = ()
    src_net: str = "10.0.0.0/16"
    dst_net: str = "192.168.0.0/16"
    fill: str = "random"  # "random" | "zero"

    @classmethod
    def from_dict(cls, d: Mapping) -> GenSpec:
        plants = []
        for p in d.get("plants", ()):
            if "hex" in p:
                pattern = bytes.fromhex(p["hex"])
            else:
                pattern = p["pattern"].encode("latin-1")
            plants.append(Plant(pattern, int(p["packet"]), int(p["offset"])))
        lo, hi = d.get("payload_len", (0, 64))
        return cls(int(d["packets"]), dict(d.get("mix", {"tcp": 1.0})), (int(lo), int(hi)),
                   tuple(plants), d.get("src_net", "10.0.0.0/16"),
                   d.get("dst_net", "192.168.0.0/16"), d.get("fill", "random"))


def _checksum(header: bytes) -> int:
    total = sum(struct.unpack(f"!{len(header) // 2}H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def build_frame(proto: str, src: int, dst: int, sport: int, dport: int,
                payload: bytes, ident: int = 0) -> bytes:
    """Ethernet + IPv4 (IHL 5) + minimal transport header + payload."""
    if proto == "tcp":
        l4 = struct.pack("!HHIIBBHHH", sport, dport, 0, 0, 5 << 4, 0x18, 65535, 0, 0)
        num = 6
    elif proto == "udp":
        l4 = struct.pack("!HHHH", sport, dport, 8 + len(payload), 0)
        num = 17
    elif proto == "icmp":
        l4 = struct.pack("!BBHHH", 8, 0, 0, ident & 0xFFFF, 0)
        num = 1
    elif proto == "other_ip":
        l4 = b""
        num = OTHER_IP_PROTO
    else:
        raise ValueError(f"cannot generate protocol {proto!r}")
    total = 20 + len(l4) + len(payload)
    ip = struct.pack("!BBHHHBBHII", 0x45, 0, total, ident & 0xFFFF, 0, 64, num, 0, src, dst)
    ip = ip[:10] + struct.pack("!H", _checksum(ip)) + ip[12:]
    eth = b"\x02\x00\x00\x00\x00\x02" + b"\x02\x00\x00\x00\x00\x01" + struct.pack("!H", ETHERTYPE_IPV4)
    return eth + ip + l4 + payload


def write_capture(frames: Sequence[bytes], snaplen: int = 65535, byteorder: str = "<",
                  ts_start: int = 1_000_000_000) -> bytes:
    out = [struct.pack(byteorder + "IHHiIII", MAGIC_USEC, 2, 4, 0, 0, snaplen, LINKTYPE_ETHERNET)]
    for i, frame in enumerate(frames):
        out.append(struct.pack(byteorder + "IIII", ts_start + i // 1000, (i % 1000) * 1000,
                               len(frame), len(frame)))
        out.append(frame)
    return b"".join(out)


def _random_host(rng: random.Random, net: ipaddress.IPv4Network) -> int:
    if net.num_addresses <= 2:
        return int(net.network_address)
    return int(net.network_address) + rng.randrange(1, net.num_addresses - 1)


@dataclass(frozen=True)
class GenPacket:
    proto: str
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    payload: bytes

    def frame(self, ident: int = 0) -> bytes:
        return build_frame(self.proto, self.src_ip, self.dst_ip, self.src_port, self.dst_port,
                           self.payload, ident)


def gen_packets(spec: GenSpec, seed: int = 0) -> list[GenPacket]:
    """Draw the packets :func:`gen_capture` writes, in capture order.

    Payloads are random bytes (or zeros); each plant overwrites its
    pattern at the requested payload offset. Protocols are drawn from
    ``spec.mix``.
    """
    lo, hi = spec.payload_len
    if lo < 0 or hi < lo:
        raise ValueError(f"bad payload length range {spec.payload_len}")
    if spec.fill not in ("random", "zero"):
        raise ValueError(f"unknown fill {spec.fill!r}")
    rng = random.Random(seed)
    protos = sorted(spec.mix)
    weights = [spec.mix[p] for p in protos]
    for p in protos:
        if p not in ("tcp", "udp", "icmp", "other_ip"):
            raise ValueError(f"cannot generate protocol {p!r}")
    by_packet: dict[int, list[Plant]] = {}
    for plant in spec.plants:
        if not 0 <= plant.packet < spec.packets:
            raise ValueError(f"plant packet index {plant.packet} outside capture")
        by_packet.setdefault(plant.packet, []).append(plant)
    src_net = ipaddress.IPv4Network(spec.src_net, strict=False)
    dst_net = ipaddress.IPv4Network(spec.dst_net, strict=False)

    packets = []
    for i in range(spec.packets):
        proto = rng.choices(protos, weights)[0]
        length = rng.randint(lo, hi)
        payload = bytearray(rng.randbytes(length) if spec.fill == "random" else length)
        for plant in by_packet.get(i, ()):
            if plant.offset < 0 or plant.offset + len(plant.pattern) > length:
                raise ValueError(f"plant at packet {i} offset {plant.offset} "
                                 f"overruns {length}-byte payload")
            payload[plant.offset:plant.offset + len(plant.pattern)] = plant.pattern
        src = _random_host(rng, src_net)
        dst = _random_host(rng, dst_net)
        sport = rng.randrange(1024, 65536)
        dport = rng.randrange(1, 1024)
        packets.append(GenPacket(proto, src, dst, sport, dport, bytes(payload)))
    return packets


def gen_capture(spec: GenSpec, seed: int = 0) -> bytes:
    """Bit-deterministic capture bytes for ``(spec, seed)``."""
    return write_capture([p.frame(i) for i, p in enumerate(gen_packets(spec, seed))])
