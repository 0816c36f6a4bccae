import json
import subprocess
import sys

import pytest

from sigscan.cli import main
from sigscan.packet import GenSpec, Plant, gen_capture, write_capture

RULE = 'alert tcp any any -> any any (msg:"X"; content:"attack"; sid:1;)\n'


@pytest.fixture
def files(tmp_path):
    rules = tmp_path / "rules.txt"
    rules.write_text(RULE)
    spec = GenSpec(5, {"tcp": 1}, (12, 12), (Plant(b"attack", 2, 3),), fill="zero")
    pcap = tmp_path / "cap.pcap"
    pcap.write_bytes(gen_capture(spec, 1))
    return tmp_path, rules, pcap


def test_check_single_rule(files, capsys):
    _, rules, _ = files
    assert main(["check", "--rules", str(rules)]) == 0
    assert capsys.readouterr().out.splitlines() == ["parsed=1 skipped=0 tcp=1 udp=0 icmp=0 ip=0"]


def test_check_empty_file(tmp_path, capsys):
    empty = tmp_path / "empty.rules"
    empty.write_text("")
    assert main(["check", "--rules", str(empty)]) == 2
    assert capsys.readouterr().out.startswith("parsed=0 ")


def test_check_reports_skips(tmp_path, capsys):
    rules = tmp_path / "r"
    rules.write_text(RULE + 'alert tcp any any -> any any (pcre:"/x/"; sid:2;)\n')
    assert main(["check", "--rules", str(rules)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "parsed=1 skipped=1 tcp=1 udp=0 icmp=0 ip=0"
    assert out[1] == "skip[unsupported option: pcre]=1"


def test_check_hard_errors(tmp_path, capsys):
    rules = tmp_path / "r"
    rules.write_text(RULE + "alert tcp any any -> any any (content:\"x\"\n")
    assert main(["check", "--rules", str(rules)]) == 2
    captured = capsys.readouterr()
    assert "errors=1" in captured.out
    assert "line 2" in captured.err


def test_check_variables(tmp_path, capsys):
    rules = tmp_path / "r"
    rules.write_text('alert udp $NET any -> any 53 (content:"q"; sid:5;)\n')
    assert main(["check", "--rules", str(rules)]) == 2
    capsys.readouterr()
    assert main(["check", "--rules", str(rules), "--var", "NET=10.0.0.0/8"]) == 0
    assert "udp=1" in capsys.readouterr().out


def test_scan_writes_alert(files, capsys):
    tmp, rules, pcap = files
    out = tmp / "alerts.txt"
    assert main(["scan", "--rules", str(rules), "--pcap", str(pcap), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith('[1] "X" tcp 10.0.')
    assert lines[0].endswith(" pkt=2 payload=" + (b"\0\0\0attack\0\0\0").hex())
    assert capsys.readouterr().out.strip() == "packets=5 decode_errors=0 alerts=1"


def test_scan_empty_capture(files, capsys):
    tmp, rules, _ = files
    pcap = tmp / "empty.pcap"
    pcap.write_bytes(write_capture([]))
    out = tmp / "alerts.txt"
    assert main(["scan", "--rules", str(rules), "--pcap", str(pcap), "--out", str(out)]) == 0
    assert out.read_bytes() == b""
    assert capsys.readouterr().out.startswith("packets=0")


def test_scan_unreadable_rules(files, capsys):
    tmp, _, pcap = files
    out = tmp / "alerts.txt"
    code = main(["scan", "--rules", str(tmp / "missing"), "--pcap", str(pcap), "--out", str(out)])
    assert code == 2
    assert not out.exists()
    assert "cannot read" in capsys.readouterr().err


def test_scan_bad_capture_and_io_error(files):
    tmp, rules, pcap = files
    junk = tmp / "junk.pcap"
    junk.write_bytes(b"not a capture at all")
    assert main(["scan", "--rules", str(rules), "--pcap", str(junk), "--out", str(tmp / "o")]) == 2
    # output path is a directory: the write itself fails
    (tmp / "dir").mkdir()
    assert main(["scan", "--rules", str(rules), "--pcap", str(pcap), "--out", str(tmp / "dir")]) == 3


def test_usage_errors(files):
    tmp, rules, _ = files
    assert main([]) == 2
    assert main(["scan", "--rules", str(rules)]) == 2
    assert main(["check", "--rules", str(rules), "--var", "broken"]) == 2
    assert main(["--help"]) == 0


def test_bench_engine_and_compare(files, capsys):
    tmp, rules, pcap = files
    out = tmp / "bench.csv"
    argv = ["bench", "--rules", str(rules), "--pcap", str(pcap), "--out", str(out), "--interval", "2"]
    assert main(argv) == 0
    lines = out.read_bytes().split(b"\n")
    assert lines[0].startswith(b"algo,packets,")
    assert [ln.split(b",")[1] for ln in lines[1:-1]] == [b"0", b"2", b"4", b"5"]
    assert main(argv + ["--algo", "compare"]) == 0
    rows = out.read_text().splitlines()[1:]
    assert {r.split(",")[0] for r in rows} == {"ac_engine", "bm_scan", "naive_scan"}
    assert main(argv[:-2] + ["--interval", "0"]) == 2
    capsys.readouterr()


def test_gen_deterministic(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"packets": 20, "mix": {"tcp": 1, "udp": 1},
                                "payload_len": [4, 30],
                                "plants": [{"pattern": "attack", "packet": 3, "offset": 0}]}))
    a, b, c = (tmp_path / n for n in ("a", "b", "c"))
    assert main(["gen", "--spec", str(spec), "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--spec", str(spec), "--seed", "7", "--out", str(b)]) == 0
    assert main(["gen", "--spec", str(spec), "--seed", "8", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    spec.write_text("{nope")
    assert main(["gen", "--spec", str(spec), "--out", str(a)]) == 2
    capsys.readouterr()


def test_outputs_byte_identical_across_runs(files):
    tmp, rules, pcap = files
    outs = []
    for name in ("one", "two"):
        alerts, csv = tmp / f"{name}.txt", tmp / f"{name}.csv"
        main(["scan", "--rules", str(rules), "--pcap", str(pcap), "--out", str(alerts)])
        main(["bench", "--rules", str(rules), "--pcap", str(pcap), "--out", str(csv)])
        outs.append((alerts.read_bytes(), csv.read_bytes()))
    assert outs[0] == outs[1]


def test_module_entry_point(files):
    _, rules, _ = files
    proc = subprocess.run([sys.executable, "-m", "sigscan", "check", "--rules", str(rules)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("parsed=1")
