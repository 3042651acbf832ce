import json
import math
import subprocess
import sys

import numpy as np
import pytest

import symext
from symext.cli import main
from symext.io import (
    MatrixFileError, doc_to_array, dumps, load_doc, matrix_to_doc, read_operator, read_state,
    write_doc,
)
from symext.linalg import HermitianOp
from symext.states import StateRecipe, max_entangled, maximally_mixed, random_density, werner

SWAP = HermitianOp(np.eye(4)[[0, 2, 1, 3]], [2, 2])


def _write(tmp_path, name, op, recipe=None):
    path = tmp_path / f"{name}.json"
    write_doc(matrix_to_doc(op, name, recipe), path)
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "bell": _write(tmp_path, "bell", max_entangled(2)),
        "mixed": _write(tmp_path, "mixed", maximally_mixed([2, 2])),
        "werner": _write(tmp_path, "werner_0.4", werner(0.4)),
        "identity": _write(tmp_path, "identity", HermitianOp(np.eye(4), [2, 2])),
        "swap": _write(tmp_path, "swap", SWAP),
        "big": _write(tmp_path, "big", HermitianOp(np.eye(25), [5, 5])),
        "tri": _write(tmp_path, "tri", maximally_mixed([2, 2, 2])),
        "dir": tmp_path,
    }


def _run(argv, tmp_path, name="out"):
    out = tmp_path / f"{name}.json"
    code = main(argv + ["--out", str(out)])
    doc = json.loads(out.read_text()) if out.exists() else None
    return code, doc


def _strip(doc):
    doc = dict(doc)
    doc.pop("timings", None)
    if "rows" in doc:
        doc["rows"] = [{k: v for k, v in r.items() if not k.endswith("_s")} for r in doc["rows"]]
        doc.pop("loglog_slope", None)
    return doc


# --- file format ------------------------------------------------------------


def test_roundtrip_identity(tmp_path):
    rho = random_density([2, 3], seed=4)
    recipe = StateRecipe("random_density", {"dims": [2, 3]}, seed=4)
    path = _write(tmp_path, "r", rho, recipe)
    op, doc = read_operator(path)
    assert np.array_equal(op.matrix, rho.matrix)
    again = tmp_path / "again.json"
    write_doc(matrix_to_doc(op, doc.get("name"), StateRecipe.from_json(doc["recipe"])), again)
    assert again.read_text() == (tmp_path / "r.json").read_text()
    assert load_doc(again) == doc


def test_dumps_17_digits():
    x = 0.1 + 0.2
    assert dumps(x) == "0.30000000000000004"
    assert float(dumps(1 / 3)) == 1 / 3
    assert dumps(2.0) == "2.0"
    assert dumps(float("nan")) == "null"
    assert json.loads(dumps({"a": [1, 2.5, None, True], "b": {}}, indent=None)) == \
        {"a": [1, 2.5, None, True], "b": {}}
    with pytest.raises(TypeError):
        dumps(object())


def test_recipe_only_document():
    m, dims = doc_to_array({"recipe": {"name": "werner", "parameters": {"p": 0.4}}})
    assert dims == [2, 2] and np.allclose(m, werner(0.4).matrix)


@pytest.mark.parametrize("doc", [
    [], {"dims": [2]}, {"dims": [2], "entries": [[1, 0]] * 3},
    {"dims": [0], "entries": []}, {"dims": "x", "entries": []},
])
def test_bad_documents(doc):
    with pytest.raises(MatrixFileError):
        doc_to_array(doc)


def test_bad_files(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(MatrixFileError):
        load_doc(p)
    with pytest.raises(MatrixFileError):
        load_doc(tmp_path / "missing.json")
    write_doc(matrix_to_doc(HermitianOp(np.eye(2))), p)
    with pytest.raises(MatrixFileError):
        read_state(p)  # trace 2


# --- commands ---------------------------------------------------------------


def test_sep_check_examples(files):
    tmp = files["dir"]
    code, doc = _run(["sep-check", "--in", files["bell"], "--eps", "0.5", "--norm", "frobenius"], tmp)
    assert code == 0 and doc["verdict"] == "ENTANGLED"
    assert doc["witness"]["dims"] == [2, 2] and len(doc["witness"]["entries"]) == 16
    assert doc["diagnostics"][0]["k"] == 2
    code, doc = _run(["sep-check", "--in", files["mixed"], "--eps", "0.5"], tmp)
    assert code == 0 and doc["verdict"] == "SEPARABLE"
    code, doc = _run(["sep-check", "--in", files["bell"], "--eps", "0.5", "--kcap", "1"], tmp)
    assert code == 3 and doc["verdict"] == "INCONCLUSIVE"
    assert doc["version"]["tool"] == symext.__version__


def test_witness_verify_roundtrip(files):
    tmp = files["dir"]
    code, doc = _run(["sep-check", "--in", files["bell"]], tmp, "verdict")
    wpath = tmp / "w.json"
    write_doc(doc["witness"], wpath)
    code, out = _run(["witness-verify", "--witness", str(wpath), "--state", files["bell"],
                      "--mesh", "0.02"], tmp)
    assert code == 0 and out["verified"]
    assert out["trace_with_state"] < 0 and out["product_net_min"] >= -1e-6
    code, out = _run(["witness-verify", "--witness", str(wpath), "--state", files["mixed"],
                      "--mesh", "0.05"], tmp)
    assert code == 3 and not out["verified"]


def test_bss_examples(files):
    tmp = files["dir"]
    code, doc = _run(["bss", "--op", files["bell"], "--k", "8", "--oracle"], tmp)
    assert code == 0
    assert abs(doc["value"] - 0.5) <= 0.07
    assert abs(doc["oracle"]["value"] - 0.5) <= 0.02
    assert doc["oracle"]["value"] <= doc["value"] <= doc["oracle"]["value"] + doc["error_bound"]
    code, doc = _run(["bss", "--op", files["identity"], "--k", "2"], tmp)
    assert code == 0 and doc["value"] == pytest.approx(1.0)
    code, doc = _run(["bss", "--op", files["bell"], "--auto", "--eps", "0.1"], tmp)
    assert code == 0 and doc["capped"] and doc["k_required"] > doc["k_used"] == 64
    assert doc["value"] >= 0.5


def test_other_commands(files):
    tmp = files["dir"]
    code, doc = _run(["definetti-k", "--eps", "1.0", "--dimA", "2", "--norm", "locc"], tmp)
    assert code == 0 and doc["k"] == 12
    code, doc = _run(["definetti-k", "--eps", "0.5", "--dimA", "2", "--dimB", "2"], tmp)
    assert doc["k"] == math.ceil(153 * 16 * math.log(2) / 0.25) and "crossover" in doc
    code, doc = _run(["oracle-ppt", "--in", files["werner"]], tmp)
    assert code == 0 and doc["ppt"] is False
    assert doc["min_pt_eigenvalue"] == pytest.approx((1 - 1.2) / 4)
    code, doc = _run(["oracle-ppt", "--in", files["mixed"]], tmp)
    assert doc["ppt"] is True and doc["distance_to_ppt"] == 0.0
    code, doc = _run(["meanfield", "--k-op", files["swap"], "--eps", "0.1"], tmp)
    assert code == 0 and -0.1 <= doc["energy"] <= 0.02
    code, doc = _run(["cmi-test", "--seeds", "100"], tmp)
    assert code == 0 and doc["held"] == 100 and doc["all_hold"]
    code, doc = _run(["bench", "--dims", "2,2", "--kmax", "4", "--repeat", "1"], tmp)
    assert code == 0 and doc["sides_match"]
    assert [r["block_side"] for r in doc["rows"]] == [6, 8, 10]


def test_exit_codes(files, capsys):
    tmp = files["dir"]
    assert main(["sep-check", "--in", str(tmp / "missing.json")]) == 2
    assert main(["sep-check", "--in", files["tri"]]) == 2
    assert main(["sep-check", "--in", files["identity"]]) == 2  # trace 4
    assert main(["bss", "--op", files["big"], "--k", "2", "--oracle"]) == 4
    assert main(["bss", "--op", files["bell"], "--k", "2000"]) == 4
    assert main(["bench", "--dims", "2"]) == 2
    assert main(["meanfield", "--k-op", files["tri"], "--eps", "0.1"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["sep-check"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bss", "--op", files["bell"], "--k", "2", "--auto"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_result_determinism(files):
    tmp = files["dir"]
    for argv in (["sep-check", "--in", files["bell"]],
                 ["bss", "--op", files["bell"], "--k", "4"],
                 ["cmi-test", "--seeds", "5", "--verbose"],
                 ["bench", "--kmax", "3", "--repeat", "1"]):
        _, a = _run(argv, tmp, "a")
        _, b = _run(argv, tmp, "b")
        assert _strip(a) == _strip(b)
        assert "wall_s" in a["timings"]


def test_version_and_entry_point():
    out = subprocess.run([sys.executable, "-m", "symext.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert symext.__version__ in out.stdout and "kernels" in out.stdout


def test_threads_env(files, monkeypatch):
    monkeypatch.setenv("SYMEXT_THREADS", "1")
    code, doc = _run(["definetti-k", "--eps", "1.0", "--dimA", "2"], files["dir"])
    assert code == 0
