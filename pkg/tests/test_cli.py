import json

import numpy as np
import pytest

from gmsdb.cli import main
from gmsdb.io import CsvFormatError, read_table

FAST = ["--n-max", "5", "--restarts", "1"]


@pytest.fixture
def grains_csv(tmp_path):
    path = tmp_path / "grains.csv"
    assert main(["gen", "--preset", "grains", "--seed", "2", "--out", str(path)]) == 0
    return path


def test_gen_writes_spec_comment_and_header(grains_csv):
    lines = grains_csv.read_text().splitlines()
    spec = json.loads(lines[0].lstrip("# "))
    assert spec["preset"] == "grains" and spec["seed"] == 2
    assert lines[1] == "x0,x1,label"
    table = read_table(grains_csv)
    assert table.features.shape == (600, 2) and table.spec["preset"] == "grains"


def test_gen_custom_generator(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["gen", "--generator", "rings", "--params", '{"radii": [1, 2], "n": 20}',
                 "--noise", "0.5", "--out", str(out)])
    assert code == 0
    assert read_table(out).features.shape == (60, 2)


def test_fit_predict_grid_eval(grains_csv, tmp_path, capsys):
    model, report = tmp_path / "m.json", tmp_path / "report.txt"
    assert main(["fit", "--in", str(grains_csv), "--model", str(model),
                 "--report", str(report), *FAST]) == 0
    out = capsys.readouterr().out
    assert "N_S                3" in out and "RI                 1.000000" in out
    sidecar = json.loads((tmp_path / "report.txt.json").read_text())
    assert sidecar["n_superclusters"] == 3 and sidecar["rand_index"] == 1.0

    pred = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(model), "--in", str(grains_csv),
                 "--out", str(pred)]) == 0
    assert pred.read_text().splitlines()[0] == "label,input_label"

    soft = tmp_path / "soft.csv"
    assert main(["predict", "--model", str(model), "--in", str(grains_csv), "--soft",
                 "--out", str(soft)]) == 0
    probs = read_table(soft).features[:, :3]
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    grid = tmp_path / "grid.csv"
    assert main(["grid", "--model", str(model), "--bounds", "-3", "13", "-3", "12",
                 "--resolution", "4", "3", "--out", str(grid)]) == 0
    assert read_table(grid).features.shape == (12, 2)

    capsys.readouterr()
    assert main(["eval", "--pred", str(pred), "--truth", str(grains_csv)]) == 0
    assert "RI    1.000000" in capsys.readouterr().out


def test_fit_is_byte_deterministic(grains_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["fit", "--in", str(grains_csv), "--model", str(path), *FAST]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_exit_codes(grains_csv, tmp_path, capsys):
    assert main(["fit", "--in", str(tmp_path / "missing.csv")]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,x1\n1.0,abc\n")
    assert main(["fit", "--in", str(bad)]) == 3
    assert "row 2, column 2" in capsys.readouterr().err
    assert main(["gen", "--preset", "nope"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code == 2
    flat = tmp_path / "flat.csv"
    flat.write_text("x0,x1\n" + "1.0,1.0\n" * 20)
    assert main(["fit", "--in", str(flat), *FAST]) == 4


def test_predict_dimension_mismatch(grains_csv, tmp_path, capsys):
    model = tmp_path / "m.json"
    main(["fit", "--in", str(grains_csv), "--model", str(model), *FAST])
    three = tmp_path / "three.csv"
    three.write_text("a,b,c\n1,2,3\n")
    capsys.readouterr()
    assert main(["predict", "--model", str(model), "--in", str(three)]) == 3
    err = capsys.readouterr().err
    assert "d=2" in err and "d=3" in err
    assert main(["grid", "--model", str(model), "--bounds", "1", "0", "0", "1"]) == 3


def test_read_table_errors(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("# comment only\n")
    with pytest.raises(CsvFormatError):
        read_table(path)
    path.write_text("x0,label\n1.0,a\ninf,b\n")
    with pytest.raises(CsvFormatError, match="non-finite"):
        read_table(path)
    path.write_text("x0,label\n1.0,a\n2.5,b\n")
    table = read_table(path)
    assert table.labels.tolist() == ["a", "b"]
