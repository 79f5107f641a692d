import json

import numpy as np
import pytest

from parkview.cli import main
from parkview.interleaving import identity_interleaving, write_interleaving
from parkview.mergetree import write_tree


@pytest.fixture
def files(tmp_path, two_leaf):
    ta = tmp_path / "a.json"
    ta.write_bytes(write_tree(two_leaf))
    il = tmp_path / "il.json"
    il.write_bytes(write_interleaving(identity_interleaving(two_leaf)))
    return tmp_path, ta, il


def _fields(tmp_path, seed=0):
    rng = np.random.default_rng(seed)
    paths = []
    for name in ("fa.csv", "fb.csv"):
        p = tmp_path / name
        np.savetxt(p, rng.normal(size=(16, 16)), delimiter=",")
        paths.append(p)
    return paths


def test_render_identity(files, capsys):
    d, ta, il = files
    out = d / "out.svg"
    code = main(["render", "--tree-a", str(ta), "--tree-b", str(ta), "--interleaving", str(il), "-o", str(out)])
    assert code == 0
    assert out.read_bytes().startswith(b"<?xml")
    text = capsys.readouterr().out
    assert "2 leaves left, 2 leaves right" in text and "delta: 0" in text


def test_render_rejects_bad_interleaving(files, capsys):
    d, ta, il = files
    raw = json.loads(il.read_text())
    raw["alpha"]["b"] = {"edge": "b", "height": 1.5}
    il.write_text(json.dumps(raw))
    code = main(["render", "--tree-a", str(ta), "--tree-b", str(ta), "--interleaving", str(il),
                 "-o", str(d / "x.svg")])
    assert code == 1
    err = capsys.readouterr().err
    assert "shift" in err and "b" in err
    assert not (d / "x.svg").exists()


def test_missing_file(files, capsys):
    d, ta, il = files
    code = main(["render", "--tree-a", str(d / "nope.json"), "--tree-b", str(ta),
                 "--interleaving", str(il), "-o", str(d / "x.svg")])
    assert code == 2
    assert "cannot read" in capsys.readouterr().err


def test_compare_with_stats(tmp_path, capsys):
    fa, fb = _fields(tmp_path)
    out, stats = tmp_path / "c.svg", tmp_path / "s.json"
    code = main(["compare", "--field-a", str(fa), "--field-b", str(fb), "-o", str(out), "--stats", str(stats),
                 "--grid-fraction", "4", "--colors", "4"])
    assert code == 0
    s = json.loads(stats.read_text())
    assert s["delta"] >= s["frechet"] > 0
    assert s["leaves"]["left"] > 1
    assert max(s["colors_used"].values()) <= 4
    for side in ("alpha", "beta"):
        bc = s["branch_components"][side]
        assert 1 <= bc["max"] <= bc["total"]


def test_compare_persistence_collapses(tmp_path, capsys):
    fa, fb = _fields(tmp_path, 1)
    stats = tmp_path / "s.json"
    code = main(["compare", "--field-a", str(fa), "--field-b", str(fb), "--persistence", "1000",
                 "-o", str(tmp_path / "c.svg"), "--stats", str(stats)])
    assert code == 0
    s = json.loads(stats.read_text())
    assert s["leaves"] == {"left": 1, "right": 1}


def test_compare_bad_field(tmp_path, capsys):
    fa, fb = _fields(tmp_path)
    fa.write_text("1,2\n3,inf\n")
    assert main(["compare", "--field-a", str(fa), "--field-b", str(fb), "-o", str(tmp_path / "c.svg")]) == 1


def test_bad_flags(files, capsys):
    d, ta, il = files
    for extra in (["--colors", "2"], ["--grid-fraction", "0"]):
        with pytest.raises(SystemExit) as ex:
            main(["render", "--tree-a", str(ta), "--tree-b", str(ta), "--interleaving", str(il),
                  "-o", str(d / "x.svg")] + extra)
        assert ex.value.code == 2


def test_validate_ok(files, capsys):
    d, ta, il = files
    assert main(["validate", str(ta), str(il), "--exhaustive"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ok"] and [f["kind"] for f in rep["files"]] == ["tree", "interleaving"]


def test_validate_order_violation(tmp_path, capsys):
    # b is listed between a and c although a and c merge below it
    tree = {"root": "r", "leaf_order": ["a", "b", "c"], "nodes": {
        "r": {"height": 5, "children": ["s", "b"]},
        "s": {"height": 3, "children": ["a", "c"]},
        "a": {"height": 0, "children": []},
        "b": {"height": 1, "children": []},
        "c": {"height": 2, "children": []}}}
    p = tmp_path / "t.json"
    p.write_text(json.dumps(tree))
    assert main(["validate", str(p)]) == 1
    rep = json.loads(capsys.readouterr().out)
    v = rep["files"][0]["violations"]
    assert [(x["rule"], x["subject"]) for x in v] == [("order", "leaves (a, b, c)")]
    tree["leaf_order"] = ["a", "c", "b"]
    p.write_text(json.dumps(tree))
    assert main(["validate", str(p)]) == 0


def test_validate_delta_mismatch(files, capsys):
    d, ta, il = files
    raw = json.loads(il.read_text())
    raw["beta"]["a"] = {"edge": "a", "height": 0.25}
    il.write_text(json.dumps(raw))
    assert main(["validate", str(ta), str(il)]) == 1
    rep = json.loads(capsys.readouterr().out)
    v = rep["files"][1]["violations"]
    assert v and v[0]["map"] == "beta" and v[0]["subject"] == "a"


def test_validate_missing(files, capsys):
    d, ta, il = files
    assert main(["validate", str(ta), str(d / "gone.json")]) == 2


def test_identical_invocations(files, tmp_path):
    d, ta, il = files
    outs = []
    for k in range(2):
        o = tmp_path / f"o{k}.svg"
        main(["render", "--tree-a", str(ta), "--tree-b", str(ta), "--interleaving", str(il), "-o", str(o)])
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]
