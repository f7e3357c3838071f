import csv
import itertools
import json

import pytest

from sumspec.cli import main
from sumspec.experiment import CSV_COLUMNS, SCREE_COLUMNS
from sumspec.netcore import from_edge_list, write_edge_list


def write(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


SIM = {
    "mode": "simulate",
    "seed": 3,
    "model": {"name": "dsbm", "k": 2, "pi": [0.5, 0.5], "b": [[8, 1], [1, 8]], "b_scale": "per_n"},
    "grid": {"n": [60], "T": [1, 4], "seeds": 3},
    "algorithm": ["alg1", "alg2"],
    "solver": {"restarts": 3},
}


@pytest.fixture
def three_cliques(tmp_path):
    edges = []
    for c in range(3):
        edges += [(a + 4 * c, b + 4 * c) for a, b in itertools.combinations(range(4), 2)]
    write_edge_list(tmp_path / "l0.txt", from_edge_list(12, edges))
    write_edge_list(tmp_path / "l1.txt", from_edge_list(12, edges[:-1]))
    write(tmp_path / "manifest.json", {"n": 12, "layers": ["l0.txt", "l1.txt"]})
    return tmp_path


def test_detect_writes_labels(three_cliques, tmp_path):
    cfg = write(three_cliques / "cfg.json", {"mode": "detect", "manifest": "manifest.json", "k": 3})
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out-dir", str(out)]) == 0
    labels = (out / "labels.txt").read_text().split()
    assert len(labels) == 12
    assert len({tuple(labels[4 * c:4 * c + 4]) for c in range(3)}) == 3
    assert all(len(set(labels[4 * c:4 * c + 4])) == 1 for c in range(3))
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "ok" and report["run"]["n_prime"] == 12
    assert len(report["estimates"]["b_stack"]) == 2


def test_simulate_row_count_and_columns(tmp_path):
    cfg = write(tmp_path / "sim.json", SIM)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "results.csv")
    assert len(rows) == 1 * 2 * 3 * 2
    assert list(rows[0]) == CSV_COLUMNS
    assert all(r["status"] == "ok" for r in rows)
    assert len(list((tmp_path / "o" / "runs").glob("*.json"))) == len(rows)
    # both algorithms see the same sampled instance
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r["T"], r["seed_index"]), set()).add(r["seed"])
    assert all(len(s) == 1 for s in by_cell.values())


def test_simulate_is_byte_identical(tmp_path):
    cfg = write(tmp_path / "sim.json", SIM)
    main(["run", str(cfg), "--out-dir", str(tmp_path / "a")])
    main(["run", str(cfg), "--out-dir", str(tmp_path / "b"), "--workers", "2"])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_partial_failure_exit_code(tmp_path):
    doc = dict(SIM, grid={"n": [2, 30], "T": [2], "seeds": 1}, algorithm="alg1")
    doc["model"] = dict(SIM["model"], k=3, pi=[0.3, 0.3, 0.4], b=[[0.5, 0.1, 0.1], [0.1, 0.5, 0.1], [0.1, 0.1, 0.5]],
                        b_scale="none")
    cfg = write(tmp_path / "sim.json", doc)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    rows = read_csv(tmp_path / "o" / "results.csv")
    assert len(rows) == 2
    assert rows[0]["status"] == "error:eigensolve" and "KTooLarge" in rows[0]["error"]
    assert rows[1]["status"] == "ok"


@pytest.mark.parametrize("doc", [
    {"mode": "detect", "manifest": "m.json", "k": 0},
    {"mode": "simulate", "model": {"k": 2, "pi": [0.5, 0.5], "b": [[0.1, 0.2], [0.3, 0.1]]},
     "grid": {"n": [10], "T": [1], "seeds": 1}},
    {"mode": "unknown"},
])
def test_invalid_config_exits_one(tmp_path, doc):
    cfg = write(tmp_path / "bad.json", doc)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1


def test_missing_files_exit_one(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 1
    write(tmp_path / "m.json", {"n": 3, "layers": ["missing.txt"]})
    cfg = write(tmp_path / "cfg.json", {"mode": "detect", "manifest": "m.json", "k": 2})
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1


def test_scree_triangle(tmp_path):
    write_edge_list(tmp_path / "t.txt", from_edge_list(3, [(0, 1), (1, 2), (0, 2)]))
    write(tmp_path / "m.json", {"n": 3, "layers": ["t.txt"]})
    cfg = write(tmp_path / "cfg.json", {"mode": "scree", "manifest": "m.json", "kmax": 3})
    assert main(["scree", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "scree.csv")
    assert list(rows[0]) == SCREE_COLUMNS
    assert [float(r["abs_eigenvalue"]) for r in rows] == pytest.approx([2.0, 1.0, 1.0])
    assert float(rows[0]["ratio_to_next"]) == pytest.approx(2.0)


def test_scree_empty_graph(tmp_path):
    write_edge_list(tmp_path / "e.txt", from_edge_list(5, []))
    write(tmp_path / "m.json", {"n": 5, "layers": ["e.txt"]})
    cfg = write(tmp_path / "cfg.json", {"mode": "scree", "manifest": "m.json", "kmax": 3})
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    assert [float(r["abs_eigenvalue"]) for r in read_csv(tmp_path / "o" / "scree.csv")] == [0.0] * 3


def test_scree_from_model(tmp_path):
    doc = {"mode": "scree", "kmax": 4, "n": 200, "T": 64, "seed": 1,
           "model": {"k": 2, "pi": [0.5, 0.5], "b": [[5, 1], [1, 5]], "b_scale": "per_n"}}
    cfg = write(tmp_path / "cfg.json", doc)
    assert main(["scree", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "scree.csv")
    assert float(rows[1]["ratio_to_next"]) > 2
