import json
import os

from refinery.cli import main

PROBLEMS = os.path.join(os.path.dirname(__file__), os.pardir, "problems")


def shipped(name):
    return os.path.join(PROBLEMS, name + ".json")


def write_problem(tmp_path, data, name="custom.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_analyze_daubechies4(tmp_path, capsys):
    out = tmp_path / "report"
    assert main(["analyze", shipped("daubechies4"),
                 "--out-dir", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "local dimension: 3" in summary
    assert "accuracy spectral bound (kappa_nec): 2" in summary
    assert "accuracy constructive (kappa_constructive): 2" in summary
    assert "eigenvalue 1 " in summary
    assert "eigenvalue 0.5 " in summary
    assert "eigenvalue 0.683012701892" in summary

    jordan = json.loads((out / "jordan.json").read_text())
    assert jordan["size"] == 5
    values = sorted(c["eigenvalue"][0] for c in jordan["clusters"])
    assert any(abs(v - 0.5) <= 1e-9 for v in values)

    accuracy = json.loads((out / "accuracy.json").read_text())
    assert accuracy["necessary"] == 2
    assert accuracy["constructive"] == 2
    assert accuracy["consistent"] is True

    chain = json.loads((out / "chain.json").read_text())
    assert chain["levels"] == len(chain["windows"])
    assert len(chain["extensions"]) == 4


def test_analyze_thirds_summary(tmp_path):
    out = tmp_path / "report"
    assert main(["analyze", shipped("thirds"), "--out-dir", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "eigenvalue 0.333333333333" in summary
    assert "chain lengths 2" in summary
    assert "accuracy constructive (kappa_constructive): 1" in summary


def test_analyze_haar_summary(tmp_path):
    out = tmp_path / "report"
    assert main(["analyze", shipped("haar"), "--out-dir", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "local dimension: 1" in summary
    assert "accuracy constructive (kappa_constructive): 1" in summary


def test_analyze_non_tile_exits_2(tmp_path):
    out = tmp_path / "report"
    assert main(["analyze", shipped("sparse_digits"),
                 "--out-dir", str(out)]) == 2
    summary = (out / "summary.txt").read_text()
    assert "mean 3.0" in summary
    assert "does not tile" in summary


def test_analyze_degenerate_without_start_exits_2(tmp_path):
    data = json.loads(open(shipped("haar")).read())
    del data["options"]
    path = write_problem(tmp_path, data, "haar_nostart.json")
    out = tmp_path / "report"
    assert main(["analyze", path, "--out-dir", str(out)]) == 2
    assert "options.start" in (out / "summary.txt").read_text()


def test_invalid_inputs_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert main(["analyze", str(bad), "--out-dir", str(tmp_path)]) == 1

    data = json.loads(open(shipped("haar")).read())
    data["surprise"] = True
    path = write_problem(tmp_path, data)
    assert main(["analyze", path, "--out-dir", str(tmp_path)]) == 1
    assert "surprise" in capsys.readouterr().err

    assert main(["analyze", str(tmp_path / "missing.json"),
                 "--out-dir", str(tmp_path)]) == 1


def test_eval_phi_sorted_and_deterministic(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert main(["eval", shipped("thirds"), "--out-dir", str(out),
                     "--what", "phi", "--seed", "5"]) == 0
    first = (out1 / "phi.csv").read_bytes()
    assert first == (out2 / "phi.csv").read_bytes()
    lines = first.decode().strip().splitlines()
    assert lines[0] == "x_1,re_phi,im_phi,boundary_flag"
    xs = [float(line.split(",")[0]) for line in lines[1:]]
    assert xs == sorted(xs)
    assert len(xs) == 2 ** 8


def test_eval_budget_exceeded_exits_1(tmp_path, capsys):
    assert main(["eval", shipped("thirds"), "--out-dir", str(tmp_path),
                 "--resolution", "30"]) == 1
    assert "cap" in capsys.readouterr().err


def test_eval_basis_haar(tmp_path):
    out = tmp_path / "basis"
    assert main(["eval", shipped("haar"), "--out-dir", str(out),
                 "--what", "basis"]) == 0
    manifest = json.loads((out / "basis.json").read_text())
    assert len(manifest["elements"]) == 3
    for elem in manifest["elements"]:
        assert (out / elem["csv"]).exists()
        assert len(elem["vector"]["real"]) == 3
    live = [e for e in manifest["elements"]
            if abs(complex(*e["eigenvalue"])) > 1e-9]
    assert all(max(e["residuals"]) <= 1e-6 for e in live)


def test_eval_attractor_quincunx(tmp_path):
    out = tmp_path / "cloud"
    assert main(["eval", shipped("quincunx_haar"), "--out-dir", str(out),
                 "--what", "attractor"]) == 0
    lines = (out / "cloud.csv").read_text().strip().splitlines()
    assert lines[0] == "x_1,x_2"
    assert len(lines) == 1 + 2 ** 16


def test_verify_clean_problems_exit_0(capsys):
    for name in ("daubechies4", "haar", "thirds"):
        assert main(["verify", shipped(name)]) == 0
        text = capsys.readouterr().out
        assert "FAIL" not in text
        for check in ("transfer-digit-product", "grid-refinement",
                      "jordan-basis-relation", "class-residuals",
                      "accuracy-order", "lift-calculus"):
            assert f"PASS {check}" in text


def test_verify_non_tile_exits_2(capsys):
    assert main(["verify", shipped("sparse_digits")]) == 2
    captured = capsys.readouterr()
    assert "FAIL tile-multiplicity" in captured.out
    assert "tile-multiplicity" in captured.err


def test_verify_invariant_failure_exits_3(tmp_path, capsys):
    data = {
        "name": "skew",
        "dilation": [[2.0]],
        "digits": [[0], [1]],
        "mask": {"support": [[0], [1]], "coefficients": [1.5, 0.5]},
        "options": {"start": [1.0, 0.0, 0.0]},
    }
    path = write_problem(tmp_path, data, "skew.json")
    assert main(["verify", path]) == 3
    captured = capsys.readouterr()
    assert "FAIL mask-coset-sums" in captured.out
    assert "mask-coset-sums" in captured.err


def test_verify_quincunx_exit_0(capsys):
    assert main(["verify", shipped("quincunx_haar")]) == 0
    text = capsys.readouterr().out
    assert "PASS tile-multiplicity" in text
    assert "FAIL" not in text
