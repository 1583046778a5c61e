"""End-to-end command-line runs against temp directories."""

import csv
import json

import pytest

from qdissect import save_metis
from qdissect.cli import EXIT_OK, EXIT_USAGE, main

from conftest import grid_graph, ring_graph


@pytest.fixture
def ring8_file(tmp_path):
    path = tmp_path / "ring8.graph"
    path.write_text(save_metis(ring_graph(8)))
    return str(path)


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "grid.graph"
    path.write_text(save_metis(grid_graph(5, 5)))
    return str(path)


def read_json(path):
    return json.loads(path.read_text())


# ------------------------------------------------------------------ partition

def test_partition_ring8(tmp_path, ring8_file):
    out = tmp_path / "out"
    rc = main(["partition", "--input", ring8_file, "--out", str(out),
               "--steps", "40", "--ridge", "1e-3", "--seed", "0", "--refine"])
    assert rc == EXIT_OK
    part = read_json(out / "partition.json")
    assert part["balanced"]
    assert part["cut_weight"] == 2.0
    assert part["c_star"] is not None
    # trace: best-so-far is non-increasing
    lines = (out / "trace.jsonl").read_text().strip().split("\n")
    assert json.loads(lines[0])["schema"].startswith("qdissect/")
    bests = [json.loads(l)["best_so_far"] for l in lines[1:]]
    assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(bests, bests[1:]))
    hist = read_json(out / "histogram.json")
    assert sum(hist["counts"].values()) == hist["shots"]
    manifest = read_json(out / "manifest.json")
    assert manifest["command"] == "partition"
    assert sorted(manifest["outputs"]) == ["ansatz.json", "histogram.json",
                                           "partition.json", "trace.jsonl"]


def test_partition_missing_input_usage_error(tmp_path, capsys):
    rc = main(["partition", "--input", str(tmp_path / "nope.graph"),
               "--out", str(tmp_path / "o")])
    assert rc == EXIT_USAGE
    assert "not found" in capsys.readouterr().err


def test_invalid_format_flag_is_usage_error(tmp_path, ring8_file):
    rc = main(["partition", "--input", ring8_file, "--format", "dot",
               "--out", str(tmp_path / "o")])
    assert rc == EXIT_USAGE


def test_partition_rerun_byte_identical(tmp_path, ring8_file):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    rc = main(["partition", "--input", ring8_file, "--out", str(out1),
               "--steps", "20", "--ridge", "1e-3", "--seed", "3"])
    assert rc == EXIT_OK
    rc = main(["rerun", str(out1 / "manifest.json"), "--out", str(out2)])
    assert rc == EXIT_OK
    for name in read_json(out1 / "manifest.json")["outputs"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


# -------------------------------------------------------------------- dissect

def test_dissect_grid_csv(tmp_path, grid_file):
    out = tmp_path / "out"
    rc = main(["dissect", "--input", grid_file, "--out", str(out),
               "--levels", "2", "--coarse-target", "10", "--seed", "0"])
    assert rc == EXIT_OK
    perm_lines = (out / "permutation.txt").read_text().strip().split("\n")
    assert sorted(int(x) for x in perm_lines) == list(range(25))
    with open(out / "merit.csv") as f:
        rows = list(csv.DictReader(f))
    by_part = {r["partitioner"]: r for r in rows}
    assert int(by_part["fm-baseline"]["ops"]) < int(by_part["natural-order"]["ops"])


def test_dissect_external_bitstring(tmp_path, ring8_file):
    bits = tmp_path / "bits.txt"
    bits.write_text("00001111\n")
    out = tmp_path / "out"
    rc = main(["dissect", "--input", ring8_file, "--out", str(out),
               "--partitioner", "external-bitstring",
               "--bitstring-file", str(bits), "--coarse-target", "8"])
    assert rc == EXIT_OK
    assert (out / "permutation.txt").exists()


def test_dissect_external_bitstring_needs_file(tmp_path, ring8_file, capsys):
    rc = main(["dissect", "--input", ring8_file, "--out", str(tmp_path / "o"),
               "--partitioner", "external-bitstring"])
    assert rc == EXIT_USAGE
    assert "bitstring-file" in capsys.readouterr().err


# ---------------------------------------------------------------------- exact

def test_exact_ring8(tmp_path, ring8_file):
    out = tmp_path / "out"
    rc = main(["exact", "--input", ring8_file, "--out", str(out),
               "--coarse-target", "8", "--lambda", "1.0"])
    assert rc == EXIT_OK
    res = read_json(out / "exact.json")
    assert res["c_star"] == 2.0
    assert "00001111" in res["optima"]


def test_exact_refuses_large_instances(tmp_path, capsys):
    path = tmp_path / "big.graph"
    path.write_text(save_metis(ring_graph(31)))
    rc = main(["exact", "--input", str(path), "--out", str(tmp_path / "o"),
               "--coarse-target", "31"])
    assert rc == EXIT_USAGE
    assert "refused" in capsys.readouterr().err


# -------------------------------------------------------------------- compare

def test_compare_shape(tmp_path, ring8_file):
    out = tmp_path / "out"
    rc = main(["compare", "--input", ring8_file, "--out", str(out),
               "--coarse-targets", "8", "--steps", "15", "--ridge", "1e-3",
               "--n-seeds", "1", "--seed", "0"])
    assert rc == EXIT_OK
    with open(out / "compare.csv") as f:
        rows = list(csv.DictReader(f))
    partitioners = {r["partitioner"] for r in rows}
    assert "varqite" in partitioners and "fm-baseline" in partitioners


# --------------------------------------------------------------------- config

def test_config_file_flags_win(tmp_path, ring8_file):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("steps = 10\nseed = 5\n# comment\nridge: 1e-3\n")
    out = tmp_path / "out"
    rc = main(["partition", "--input", ring8_file, "--out", str(out),
               "--config", str(cfgfile), "--steps", "12"])
    assert rc == EXIT_OK
    cfg = read_json(out / "manifest.json")["config"]
    assert cfg["steps"] == 12     # flag wins
    assert cfg["seed"] == 5       # file value applies
    assert cfg["ridge"] == 1e-3


def test_rerun_into_same_dir_reproduces(tmp_path, ring8_file):
    out = tmp_path / "out"
    rc = main(["partition", "--input", ring8_file, "--out", str(out),
               "--steps", "10", "--seed", "1"])
    assert rc == EXIT_OK
    before = {n: (out / n).read_bytes()
              for n in read_json(out / "manifest.json")["outputs"]}
    rc = main(["rerun", str(out / "manifest.json")])
    assert rc == EXIT_OK
    for name, blob in before.items():
        assert (out / name).read_bytes() == blob
