import json
import os

from conefx.cli import main

MODELS = os.path.join(os.path.dirname(__file__), "..", "models")
GOLDEN = os.path.join(MODELS, "single_step_american.json")
EURO = os.path.join(MODELS, "three_asset_single_period.json")


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_price_ask(capsys):
    code, out, _ = run(capsys, "price", GOLDEN, "--side", "ask", "--oracle")
    assert code == 0
    assert "134/3" in out and "44.6667" in out and "oracle checked" in out


def test_price_bid(capsys):
    code, out, _ = run(capsys, "price", GOLDEN, "--side", "bid")
    assert code == 0
    assert "59/3" in out and "19.6667" in out


def test_price_zero_payoff(capsys, tmp_path):
    with open(GOLDEN) as fh:
        doc = json.load(fh)
    for nid in doc["payoff"]:
        doc["payoff"][nid] = ["0", "0", "0"]
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "price", str(path), "--side", "ask")
    assert code == 0 and ": 0 " in out
    code, out, _ = run(capsys, "price", str(path), "--side", "bid")
    assert code == 0 and ": 0 " in out


def test_check_na(capsys):
    code, out, _ = run(capsys, "check-na", GOLDEN, "--oracle")
    assert code == 0
    assert "holds" in out


def test_check_na_failure_exit_code(capsys, tmp_path):
    doc = {
        "d": 2,
        "tree": [
            {"id": "0", "time": 0, "parent": None},
            {"id": "u", "time": 1, "parent": "0"},
            {"id": "d", "time": 1, "parent": "0"},
        ],
        "pi": {"prices": {"0": ["10", "1"], "u": ["12", "1"], "d": ["11", "1"]}, "k": "0"},
        "payoff": {"u": ["0", "1"], "d": ["0", "1"]},
        "exercise": {"u": True, "d": True},
    }
    path = tmp_path / "arb.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "check-na", str(path))
    assert code == 1
    assert "FAILS" in out
    # pricing such a model is a domain failure too
    code, _, err = run(capsys, "price", str(path), "--side", "ask")
    assert code == 1 and "na-failed" in err


def test_hedge_writes_verified_strategy(capsys, tmp_path):
    out_file = tmp_path / "strategy.json"
    code, out, _ = run(capsys, "hedge", GOLDEN, "--side", "ask", "--out", str(out_file))
    assert code == 0
    doc = json.loads(out_file.read_text())
    assert doc["verified"] is True
    assert doc["holdings"]["r"] == ["0", "0", "134/3"]


def test_hedge_rejects_small_endowment(capsys):
    code, _, err = run(capsys, "hedge", GOLDEN, "--side", "ask", "--endowment", "44")
    assert code == 1
    assert "endowment-insufficient" in err


def test_dual_writes_certificate(capsys, tmp_path):
    out_file = tmp_path / "cert.json"
    code, _, _ = run(capsys, "dual", GOLDEN, "--side", "bid", "--out", str(out_file))
    assert code == 0
    doc = json.loads(out_file.read_text())
    assert doc["value"] == "59/3" and doc["price"] == "59/3"


def test_export_csv_contains_golden_vertices(capsys, tmp_path):
    out_file = tmp_path / "sets.csv"
    code, _, _ = run(
        capsys, "export-sets", GOLDEN, "--side", "ask", "--format", "csv", "--out", str(out_file)
    )
    assert code == 0
    text = out_file.read_text()
    assert "r,Z,,dual-vertex,10;70/3;134/3" in text
    assert text.count("dual-vertex") >= 10


def test_export_json_bid_partition(capsys, tmp_path):
    out_file = tmp_path / "sets.json"
    code, _, _ = run(capsys, "export-sets", GOLDEN, "--side", "bid", "--out", str(out_file))
    assert code == 0
    doc = json.loads(out_file.read_text())
    verts = doc["nodes"]["r"]["Z"]["vertices"]
    assert len(verts) == 8


def test_outputs_are_byte_identical_across_runs(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "dual", GOLDEN, "--side", "ask", "--out", str(a))
    run(capsys, "dual", GOLDEN, "--side", "ask", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "export-sets", GOLDEN, "--side", "bid", "--format", "csv", "--out", str(a))
    run(capsys, "export-sets", GOLDEN, "--side", "bid", "--format", "csv", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_oracle_flag_is_accepted_on_bid_with_cap(capsys):
    code, out, _ = run(capsys, "price", GOLDEN, "--side", "bid", "--oracle", "--cap", "1000")
    assert code == 0 and "oracle checked" in out


def test_resource_cap_exit_code(capsys):
    code, _, err = run(capsys, "price", GOLDEN, "--side", "bid", "--cap", "1")
    assert code == 2
    assert "cap" in err


def test_invalid_model_file(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "price", str(path), "--side", "ask")
    assert code == 1
    assert "invalid-model" in err


def test_european_model_price(capsys):
    code, out, _ = run(capsys, "price", EURO, "--side", "ask", "--oracle")
    assert code == 0


def test_remote_server_round_trip(capsys, tmp_path):
    """End-to-end over a real socket: serve, price remotely, shut down."""
    import socket
    import subprocess
    import sys
    import time as _time

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    proc = subprocess.Popen(
        [sys.executable, "-m", "uvicorn", "conefx.service:app", "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = _time.monotonic() + 20
        while _time.monotonic() < deadline:
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=0.3):
                    break
            except OSError:
                _time.sleep(0.2)
        else:
            raise RuntimeError("service did not come up")
        code, out, _ = run(
            capsys, "--server", f"http://127.0.0.1:{port}", "price", GOLDEN, "--side", "ask"
        )
        assert code == 0 and "134/3" in out
    finally:
        proc.terminate()
        proc.wait(timeout=10)
