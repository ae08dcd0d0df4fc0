import json
import subprocess
import sys

import pytest

from colearn.cli import main
from colearn.classes import make_all_functions
from colearn.core import DataDistribution, Dataset, Hypothesis
from colearn.io import InstanceFile, dump_json, instance_from_json, instance_to_json, read_graph
from colearn.errors import InvalidInputError


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def instance_file(tmp_path):
    F = make_all_functions(3)
    data = [Dataset.from_examples([(0, 1)]), Dataset.from_examples([(0, 0)]), Dataset.from_examples([(1, 1)])]
    path = tmp_path / "inst.json"
    dump_json(instance_to_json(InstanceFile(F, 2, datasets=data)), str(path))
    return path


def test_instance_json_roundtrip():
    F = make_all_functions(2)
    D = DataDistribution.labeled_by(Hypothesis([1, 0]), {0: 0.5, 1: 0.5})
    doc = instance_to_json(InstanceFile(F, 2, [D], [Dataset.from_examples([(1, 0)])], {"mode": "iid"}, {"note": 1}))
    back = instance_from_json(json.loads(json.dumps(doc)))
    assert back.k == 2 and back.planted == {"mode": "iid"} and back.extra == {"note": 1}
    assert back.datasets[0] == Dataset.from_examples([(1, 0)])
    assert back.distributions[0].probs.tolist() == [0.5, 0.5]
    with pytest.raises(InvalidInputError):
        instance_from_json({"format": "other"})
    with pytest.raises(InvalidInputError):
        instance_from_json({**doc, "version": 9})


def test_read_graph_formats():
    a = read_graph('{"vertices": 3, "edges": [[0, 1], [1, 2]]}')
    b = read_graph("c comment\np edge 3 2\ne 1 2\ne 2 3\n")
    c = read_graph("# vertices 3\n0 1\n1 2\n")
    assert a.edges == b.edges == c.edges and a.n == b.n == c.n == 3
    assert read_graph("0 1\n").n == 2
    with pytest.raises(InvalidInputError):
        read_graph("0 1 2\n")


def test_erm_decide_and_minimize(instance_file, capsys):
    code, out, _ = run(["erm", "--instance", str(instance_file)], capsys)
    res = json.loads(out)
    assert code == 0 and res["feasible"] and res["error"] == 0.0
    assert min(res["assignment"]) == 1 and res["assignment"][0] != res["assignment"][1]
    code, out, _ = run(["erm", "--instance", str(instance_file), "--k", "1", "--minimize"], capsys)
    res = json.loads(out)
    assert code == 0 and not res["feasible"] and res["error"] == pytest.approx(1 / 3)


def test_conflict_graph_and_color(instance_file, tmp_path, capsys):
    code, out, _ = run(["conflict-graph", "--instance", str(instance_file)], capsys)
    assert code == 0 and out == "p edge 3 1\ne 1 2\n"
    g = tmp_path / "tri.txt"
    g.write_text("0 1\n1 2\n0 2\n")
    code, out, _ = run(["color", "--graph", str(g), "--k", "2", "--backend", "two"], capsys)
    assert code == 4 and json.loads(out)["promise_violated"]
    code, out, _ = run(["color", "--graph", str(g), "--k", "3", "--backend", "exact"], capsys)
    res = json.loads(out)
    assert code == 0 and res["proper"] and res["num_colors"] == 3


def test_vcdim(capsys):
    code, out, _ = run(["vcdim", "--class", "all_functions:2", "--n", "2", "--k", "2"], capsys)
    res = json.loads(out)
    assert code == 0 and res["vc"] == 4 and res["bound_threshold"] > 4


def test_reduce_subsetsum(capsys):
    code, out, _ = run(["reduce", "subsetsum", "--values", "3,5,2", "--t", "5"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["padded"] == [3, 5, 2, 27, 27] and doc["k"] == 2


def test_gen_then_simulate(tmp_path, capsys):
    inst = tmp_path / "p.json"
    assert main(["gen", "--class", "all_functions:3", "--n", "4", "--k", "2", "--seed", "1", "--out", str(inst)]) == 0
    out = tmp_path / "r.csv"
    code = main(["simulate", "--instance", str(inst), "--eps", "0.05", "--delta", "0.1", "--trials", "2", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("trial,algo,n,k") and len(lines) == 3


def test_simulate_grid(capsys):
    code, out, err = run(["simulate", "--class-kind", "all_functions", "--ns", "4", "--ks", "2", "--ds", "3",
                          "--eps", "0.05", "--delta", "0.1", "--algo", "general,naive", "--summary"], capsys)
    assert code == 0 and len(out.splitlines()) == 3
    assert len(err.splitlines()) == 2 and "mean_samples" in err


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["erm", "--instance", str(bad), "--k", "1"], capsys)[0] == 2
    assert run(["simulate", "--eps", "0.05", "--delta", "0.1"], capsys)[0] == 2
    assert run(["simulate", "--class-kind", "all_functions", "--ns", "4", "--ks", "2", "--ds", "3",
                "--eps", "0.5", "--delta", "0.1"], capsys)[0] == 2
    assert run(["reduce", "subsetsum", "--values", "1"], capsys)[0] == 2
    assert run(["vcdim", "--class", "all_functions:8", "--n", "6", "--k", "3"], capsys)[0] == 3
    assert run(["erm", "--instance", str(tmp_path / "missing.json"), "--k", "1"], capsys)[0] == 1


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "colearn.cli", "vcdim", "--class", "all_functions:3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["vc"] == 3
