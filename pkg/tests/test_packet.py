import io
import logging
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigscan.packet import (
    CaptureError,
    DecodeError,
    GenSpec,
    PacketRecord,
    Plant,
    decode,
    gen_capture,
    gen_packets,
    iter_packets,
    read_capture,
)

from oracles import eth_ipv4_frame, pcap_bytes, tcp_header, udp_header

SRC = (10, 0, 0, 1)
DST = (10, 0, 0, 2)


def rec(data):
    return PacketRecord(0, 0, len(data), len(data), data)


# read_capture

def test_empty_capture_little_endian():
    header, records = read_capture(io.BytesIO(pcap_bytes([])))
    assert header.byte_order == "little"
    assert header.link_type == 1
    assert list(records) == []


def test_empty_capture_big_endian():
    header, records = read_capture(io.BytesIO(pcap_bytes([], order=">")))
    assert header.byte_order == "big"
    assert list(records) == []


def test_unknown_magic():
    with pytest.raises(CaptureError, match="unknown magic"):
        read_capture(io.BytesIO(pcap_bytes([], magic=0xDEADBEEF)))


def test_rejects_non_ethernet_and_short_header():
    with pytest.raises(CaptureError, match="link type"):
        read_capture(io.BytesIO(pcap_bytes([], linktype=101)))
    with pytest.raises(CaptureError):
        read_capture(io.BytesIO(b"\xd4\xc3\xb2\xa1"))


@pytest.mark.parametrize("order", ["<", ">"])
def test_records_in_order(order):
    frames = [b"\x01" * 20, b"\x02" * 30]
    _, records = read_capture(io.BytesIO(pcap_bytes(frames, order=order)))
    got = list(records)
    assert [r.data for r in got] == frames
    assert [(r.ts_sec, r.ts_usec, r.caplen) for r in got] == [(100, 5000, 20), (101, 5000, 30)]


def test_nanosecond_magic():
    header, records = read_capture(io.BytesIO(pcap_bytes([b"x" * 14], magic=0xA1B23C4D)))
    assert header.nanosecond
    assert next(records).ts_usec == 5  # 5000 ns


def test_truncated_trailing_record_warns(caplog):
    data = pcap_bytes([b"a" * 20, b"b" * 20])[:-5]
    with caplog.at_level(logging.WARNING):
        _, records = read_capture(io.BytesIO(data))
        got = list(records)
    assert len(got) == 1
    assert "truncated" in caplog.text


def test_caplen_beyond_snaplen_is_error():
    data = pcap_bytes([b"a" * 20], snaplen=10)
    _, records = read_capture(io.BytesIO(data))
    with pytest.raises(CaptureError, match="snaplen"):
        list(records)


# decode

def test_decode_tcp_frame():
    frame = eth_ipv4_frame(6, SRC, DST, tcp_header(1234, 80))
    assert len(frame) == 14 + 20 + 20
    p = decode(rec(frame))
    assert (p.proto, p.src_port, p.dst_port, len(p.payload)) == ("tcp", 1234, 80, 0)
    assert (p.src, p.dst) == ("10.0.0.1", "10.0.0.2")


def test_decode_udp_frame():
    frame = eth_ipv4_frame(17, SRC, DST, udp_header(53, 5353, 10), b"hi")
    assert len(frame) == 44
    p = decode(rec(frame))
    assert (p.proto, p.src_port, p.dst_port, p.payload) == ("udp", 53, 5353, b"hi")


def test_decode_short_frame():
    with pytest.raises(DecodeError, match="short frame"):
        decode(rec(b"\x00" * 10))


def test_decode_bad_ihl_and_tcp_offset():
    frame = bytearray(eth_ipv4_frame(6, SRC, DST, tcp_header(1, 2)))
    frame[14] = 0x44
    with pytest.raises(DecodeError, match="IHL"):
        decode(rec(bytes(frame)))
    frame = bytearray(eth_ipv4_frame(6, SRC, DST, tcp_header(1, 2)))
    frame[14 + 20 + 12] = 4 << 4
    with pytest.raises(DecodeError, match="offset"):
        decode(rec(bytes(frame)))


def test_decode_tcp_options_and_ip_options():
    frame = eth_ipv4_frame(6, SRC, DST, tcp_header(1, 2, offset=8), b"data", ihl=6)
    p = decode(rec(frame))
    assert p.payload == b"data"
    assert p.payload_start == 14 + 24 + 32


def test_decode_icmp_excludes_header():
    frame = eth_ipv4_frame(1, SRC, DST, b"\x08\x00\x00\x00\x00\x01\x00\x01", b"ping")
    p = decode(rec(frame))
    assert p.proto == "icmp" and p.payload == b"ping"
    assert p.src_port is None and p.dst_port is None


def test_decode_other_ip_and_non_ip():
    p = decode(rec(eth_ipv4_frame(47, SRC, DST, b"", b"gre-bytes")))
    assert p.proto == "other_ip" and p.payload == b"gre-bytes" and p.src_port is None
    arp = b"\xff" * 12 + b"\x08\x06" + b"\x00" * 28
    q = decode(rec(arp))
    assert q.proto == "non_ip" and q.payload == b""


def test_decode_vlan_tag_skipped():
    inner = eth_ipv4_frame(17, SRC, DST, udp_header(1, 2, 11), b"abc")
    frame = inner[:12] + b"\x81\x00\x00\x05" + inner[12:]
    p = decode(rec(frame))
    assert p.proto == "udp" and p.payload == b"abc"


def test_total_length_trims_padding_but_never_overreads():
    padded = eth_ipv4_frame(17, SRC, DST, udp_header(1, 2, 10), b"hi") + b"\x00" * 16
    assert decode(rec(padded)).payload == b"hi"
    lying = eth_ipv4_frame(17, SRC, DST, udp_header(1, 2, 10), b"hi", total=1500)
    assert decode(rec(lying)).payload == b"hi"


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=120))
def test_decode_fuzz_random_bytes(data):
    try:
        p = decode(rec(data))
    except DecodeError:
        return
    assert 0 <= p.payload_start <= p.payload_end <= len(data)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([1, 6, 17, 47]), st.binary(max_size=60), st.integers(0, 100))
def test_decode_fuzz_ipv4_shaped(proto, tail, cut):
    frame = eth_ipv4_frame(proto, SRC, DST, tail)
    frame = frame[:max(14, len(frame) - cut)]
    try:
        p = decode(rec(frame))
    except DecodeError:
        return
    assert 0 <= p.payload_start <= p.payload_end <= len(frame)


# generator

def test_gen_single_zero_packet_size():
    data = gen_capture(GenSpec(1, {"tcp": 1}, (10, 10), fill="zero"))
    assert len(data) == 24 + 16 + 64
    (p,) = iter_packets(io.BytesIO(data))
    assert p.proto == "tcp" and p.payload == b"\x00" * 10


def test_gen_plant():
    spec = GenSpec(1, {"tcp": 1}, (10, 10), plants=(Plant(b"attack", 0, 2),))
    (p,) = iter_packets(io.BytesIO(gen_capture(spec, 3)))
    assert p.payload[2:8] == b"attack"


def test_gen_plant_overrun():
    spec = GenSpec(1, {"tcp": 1}, (10, 10), plants=(Plant(b"12345678", 0, 5),))
    with pytest.raises(ValueError, match="overruns"):
        gen_capture(spec)


def test_gen_deterministic():
    spec = GenSpec(50, {"tcp": 2, "udp": 1, "icmp": 1, "other_ip": 1}, (0, 40))
    assert gen_capture(spec, 11) == gen_capture(spec, 11)
    assert gen_capture(spec, 11) != gen_capture(spec, 12)


def test_gen_roundtrip():
    plants = tuple(Plant(b"needle%d" % i, i * 7, i) for i in range(10))
    spec = GenSpec(80, {"tcp": 3, "udp": 2, "icmp": 1, "other_ip": 1}, (20, 60), plants)
    intended = gen_packets(spec, 5)
    decoded = list(iter_packets(io.BytesIO(gen_capture(spec, 5))))
    assert len(decoded) == len(intended) == 80
    for i, (want, got) in enumerate(zip(intended, decoded)):
        assert got.index == i
        assert got.proto == want.proto
        assert got.payload == want.payload
        assert (got.src_ip, got.dst_ip) == (want.src_ip, want.dst_ip)
        if want.proto in ("tcp", "udp"):
            assert (got.src_port, got.dst_port) == (want.src_port, want.dst_port)
        else:
            assert got.src_port is None
    for plant in plants:
        payload = decoded[plant.packet].payload
        assert payload[plant.offset:plant.offset + len(plant.pattern)] == plant.pattern


def test_gen_spec_from_dict():
    spec = GenSpec.from_dict({"packets": 3, "mix": {"udp": 1}, "payload_len": [8, 8],
                              "plants": [{"pattern": "abc", "packet": 1, "offset": 0},
                                         {"hex": "00ff", "packet": 2, "offset": 6}]})
    assert spec.plants == (Plant(b"abc", 1, 0), Plant(b"\x00\xff", 2, 6))
    packets = list(iter_packets(io.BytesIO(gen_capture(spec))))
    assert packets[2].payload[6:] == b"\x00\xff"


def test_iter_packets_counts_decode_errors():
    frames = [eth_ipv4_frame(17, SRC, DST, udp_header(1, 2, 9), b"x"), b"\x00" * 5]
    errors = []
    got = list(iter_packets(io.BytesIO(pcap_bytes(frames)), errors))
    assert len(got) == 1 and errors[0][0] == 1
    assert struct.unpack("!H", frames[0][36:38]) == (2,)
