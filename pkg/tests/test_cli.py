import json

import numpy as np
import pytest

from icot.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_file(tmp_path, rows=16, seed=0, name="in.csv"):
    rng = np.random.default_rng(seed)
    lines = ["x,y"] + [f"{a:.6f},{b:.6f}" for a, b in rng.random((rows, 2))]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestFitCommand:
    def test_writes_artifacts(self, tmp_path, capsys):
        tree_path = tmp_path / "tree.json"
        report_path = tmp_path / "report.json"
        code, out, _ = run(
            capsys,
            "fit",
            "--generate", "gaussian_blobs", "--n", "40",
            "--max-depth", "2", "--restarts", "2", "--seed", "3",
            "--out-tree", str(tree_path),
            "--out-report", str(report_path),
        )
        assert code == 0
        assert "objective (silhouette):" in out
        assert "cluster 0" in out
        tree_doc = json.loads(tree_path.read_text())
        assert tree_doc["schema"] == "icot-tree/1"
        report = json.loads(report_path.read_text())
        assert report["schema"] == "icot-report/1"
        assert report["config"]["seed"] == 3
        assert set(report["scores"]) == {"silhouette", "dunn"}

    def test_conflicting_input_flags_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--input", "a.csv", "--generate", "tetra"])
        assert exc.value.code == 2

    def test_unknown_criterion_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--generate", "tetra", "--criterion", "minkowski"])
        assert exc.value.code == 2

    def test_missing_file_data_error(self, capsys):
        code, _, err = run(capsys, "fit", "--input", "/nonexistent/x.csv")
        assert code == 1
        assert "error:" in err

    def test_deterministic_artifacts(self, tmp_path, capsys):
        path = csv_file(tmp_path)
        outs = []
        for tag in ("a", "b"):
            tree_path = tmp_path / f"tree_{tag}.json"
            report_path = tmp_path / f"report_{tag}.json"
            code, _, _ = run(
                capsys,
                "fit", "--input", path, "--criterion", "dunn", "--seed", "7",
                "--max-depth", "2", "--restarts", "3",
                "--out-tree", str(tree_path), "--out-report", str(report_path),
            )
            assert code == 0
            outs.append((tree_path.read_bytes(), report_path.read_bytes()))
        assert outs[0] == outs[1]


class TestBenchmarkCommand:
    def test_all_methods_with_truth(self, tmp_path, capsys):
        report_path = tmp_path / "bench.json"
        code, out, _ = run(
            capsys,
            "benchmark",
            "--generate", "wingnut", "--n", "60", "--seed", "2",
            "--max-depth", "2", "--restarts", "2",
            "--out-report", str(report_path),
        )
        assert code == 0
        for method in ("icot", "kmeans", "two_step", "truth"):
            assert method in out
        assert "*" in out
        report = json.loads(report_path.read_text())
        assert set(report["methods"]) == {"icot", "kmeans", "two_step", "truth"}
        for scores in report["methods"].values():
            assert set(scores) == {"silhouette", "dunn"}

    def test_single_method(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            "benchmark", "--input", csv_file(tmp_path),
            "--max-depth", "2", "--restarts", "2",
            "--methods", "icot",
        )
        assert code == 0
        assert "icot" in out and "kmeans" not in out

    def test_truth_without_labels_fails(self, tmp_path, capsys):
        code, _, err = run(
            capsys,
            "benchmark", "--input", csv_file(tmp_path),
            "--max-depth", "2", "--restarts", "2",
            "--methods", "icot", "truth",
        )
        assert code == 1
        assert "truth" in err


class TestExportMioCommand:
    def test_writes_lp(self, tmp_path, capsys):
        out_path = tmp_path / "model.lp"
        code, out, _ = run(
            capsys,
            "export-mio", "--generate", "gaussian_blobs", "--n", "8",
            "--seed", "1", "--depth", "1", "--out", str(out_path),
        )
        assert code == 0
        text = out_path.read_text()
        assert text.startswith("\\ icot")
        assert "Maximize" in text and "Binaries" in text

    def test_oversized_instance_refused(self, tmp_path, capsys):
        code, _, err = run(
            capsys,
            "export-mio", "--generate", "gaussian_blobs", "--n", "10000",
            "--depth", "1", "--out", str(tmp_path / "x.lp"),
        )
        assert code == 1
        assert "guard" in err

    def test_big_m_echoed(self, tmp_path, capsys):
        out_path = tmp_path / "model.lp"
        code, _, _ = run(
            capsys,
            "export-mio", "--generate", "gaussian_blobs", "--n", "8",
            "--seed", "1", "--depth", "1", "--big-m", "3.5",
            "--out", str(out_path),
        )
        assert code == 0
        assert "big_m = 3.5" in out_path.read_text()
