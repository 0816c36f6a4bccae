import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigscan.counters import CostCounters
from sigscan.matchers import bm_build, bm_find, naive_find

from oracles import textbook_naive


def cmps(fn, *args):
    c = CostCounters()
    return fn(*args, c), c.byte_cmps


def test_naive_examples():
    assert naive_find(b"abc", b"xxabc", 0) == 2
    assert naive_find(b"abc", b"xxabc", 3) is None
    assert cmps(naive_find, b"aab", b"aaaaab", 0) == (3, 12)


def test_bm_examples():
    assert bm_find(bm_build(b"abc"), b"xxabc", 0) == 2
    assert bm_find(bm_build(b"aaa"), b"aaa", 0) == 0


def test_bm_beats_naive_on_random_text():
    rng = random.Random(2024)
    text = bytes(rng.randrange(256) for _ in range(1024))
    # textbook oracle: 1023 comparisons, one per alignment
    assert textbook_naive(b"needle", text) == (None, 1023)
    naive = cmps(naive_find, b"needle", text, 0)
    bm = cmps(bm_find, bm_build(b"needle"), text, 0)
    assert naive == (None, 1023)
    assert bm[0] is None and bm[1] < naive[1]


def test_bm_build_rejects_empty():
    with pytest.raises(ValueError):
        bm_build(b"")


@pytest.mark.parametrize("pattern", [b"a", b"abab", b"abcab", b"aaaa", b"needle", b"ANPANMAN"])
def test_bm_table_bounds(pattern):
    t = bm_build(pattern)
    assert len(t.good_suffix) == len(pattern) + 1
    assert all(1 <= s <= len(pattern) for s in t.good_suffix)
    for b in range(256):
        expected = pattern.rfind(bytes([b]))
        assert t.last_occurrence(b) == expected


def test_naive_counts_match_textbook_loop():
    rng = random.Random(99)
    for _ in range(2000):
        alphabet = rng.choice([b"ab", b"abc", bytes(range(256))])
        p = bytes(rng.choice(alphabet) for _ in range(rng.randint(1, 8)))
        t = bytes(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
        start = rng.randint(0, len(t))
        assert cmps(naive_find, p, t, start) == textbook_naive(p, t, start)


def test_result_equivalence_seeded():
    rng = random.Random(5)
    for _ in range(1000):
        alphabet = rng.choice([b"ab", b"acgt", bytes(range(256))])
        p = bytes(rng.choice(alphabet) for _ in range(rng.randint(1, 32)))
        t = bytes(rng.choice(alphabet) for _ in range(rng.randint(0, 4096)))
        if rng.random() < 0.3 and len(t) > len(p):
            at = rng.randrange(len(t) - len(p) + 1)
            t = t[:at] + p + t[at + len(p):]
        start = rng.randint(0, len(t))
        expected = t.find(p, start)
        expected = None if expected < 0 else expected
        naive, naive_cmps = cmps(naive_find, p, t, start)
        bm, bm_cmps = cmps(bm_find, bm_build(p), t, start)
        assert naive == bm == expected
        bound = len(p) * max(0, len(t) - len(p) + 1)
        assert naive_cmps <= bound
        assert bm_cmps <= bound


@settings(max_examples=300, deadline=None)
@given(st.binary(min_size=1, max_size=10), st.binary(max_size=300), st.data())
def test_result_equivalence_property(p, t, data):
    start = data.draw(st.integers(0, len(t)))
    assert naive_find(p, t, start) == bm_find(bm_build(p), t, start)
