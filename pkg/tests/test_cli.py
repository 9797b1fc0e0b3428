import json

import pytest

from bisolve.bench.cli import main


def run_cli(args):
    return main(args)


class TestRunCommand:
    def test_run_writes_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = run_cli([
            "run", "--instance", "analytic", "--method", "bisg-v2",
            "--alpha", "0.75", "--c", "1.0", "--iters", "50",
            "--phi-star", "analytic", "--out", str(out), "--no-svg",
        ])
        assert code == 0
        assert (out / "trace.csv").exists()
        assert (out / "summary.json").exists()
        text = capsys.readouterr().out
        assert "phi_star" in text

    def test_determinism_across_runs(self, tmp_path):
        args = [
            "run", "--instance", "analytic", "--method", "bisg-v2",
            "--alpha", "0.75", "--iters", "80", "--seed", "7",
            "--phi-star", "analytic", "--no-svg",
        ]
        run_cli(args + ["--out", str(tmp_path / "a")])
        run_cli(args + ["--out", str(tmp_path / "b")])
        csv_a = (tmp_path / "a" / "trace.csv").read_bytes()
        csv_b = (tmp_path / "b" / "trace.csv").read_bytes()
        assert csv_a == csv_b

    def test_inline_json_instance(self, tmp_path):
        desc = json.dumps({"kind": "colinear-ls",
                           "params": {"n_rows": 30, "n_base_cols": 6,
                                      "n_colinear": 1, "combo_size": 2, "seed": 4}})
        code = run_cli([
            "run", "--instance", desc, "--method", "bisg-v2", "--iters", "30",
            "--out", str(tmp_path), "--no-svg",
        ])
        assert code == 0

    def test_descriptor_file_instance(self, tmp_path):
        desc_path = tmp_path / "inst.json"
        desc_path.write_text(json.dumps({"kind": "analytic", "params": {}}))
        code = run_cli([
            "run", "--instance", str(desc_path), "--method", "bisg-v2",
            "--iters", "20", "--phi-star", "analytic",
            "--out", str(tmp_path / "out"), "--no-svg",
        ])
        assert code == 0

    def test_seed_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BISOLVE_SEED", "123")
        run_cli([
            "run", "--instance", "analytic", "--method", "bisg-v2", "--iters", "10",
            "--phi-star", "analytic", "--out", str(tmp_path), "--no-svg",
        ])
        doc = json.loads((tmp_path / "summary.json").read_text())
        assert doc["spec"]["seed"] == 123


@pytest.fixture(scope="module")
def compare_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("compare")
    spec = {
        "instance": "analytic-v1",
        "methods": [
            {"id": "bisg-v1", "alpha": 0.75, "c": 0.5, "x0": [2.0, 0.0]},
            {"id": "bigsam", "delta": 1.0, "x0": [2.0, 0.0]},
        ],
        "iters": 201,
        "phi_star_source": "analytic",
        "bounds": [
            {"method": "bisg-v1[a=0.75;c=0.5]", "bound": "inner_rate", "k_range": [1, 200]},
            {"method": "bisg-v1[a=0.75;c=0.5]", "bound": "outer_rate", "k_range": [1, 100]},
        ],
    }
    spec_path = tmp / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out = tmp / "out"
    code = main(["compare", "--spec", str(spec_path), "--out", str(out)])
    assert code == 0
    return out


class TestCompareRatesVerify:
    def test_compare_summary_reports_clean_bounds(self, compare_out):
        doc = json.loads((compare_out / "summary.json").read_text())
        by_label = {m["label"]: m for m in doc["methods"]}
        assert not by_label["bisg-v1[a=0.75;c=0.5]"]["incomplete"]
        assert not by_label["bigsam[delta=1]"]["incomplete"]
        assert by_label["bisg-v1[a=0.75;c=0.5]"]["bounds"][0]["n_violations"] == 0

    def test_rates_command(self, compare_out, capsys):
        # the bi-sub-gradient run's inner gaps are exactly zero on this
        # instance, so fit the envelope baseline's positive gap series
        code = main(["rates", str(compare_out / "trace.csv"),
                     "--method", "bigsam[delta=1]", "--window", "20:200"])
        assert code == 0
        assert "gap ~ k^(" in capsys.readouterr().out

    def test_verify_inner_rate_from_csv(self, compare_out, capsys):
        code = main(["verify", str(compare_out / "trace.csv"),
                     "--bound", "inner_rate",
                     "--method", "bisg-v1[a=0.75;c=0.5]",
                     "--k-range", "1", "200"])
        assert code == 0
        assert "ok" in capsys.readouterr().out

    def test_verify_outer_rate_from_csv(self, compare_out):
        code = main(["verify", str(compare_out / "trace.csv"),
                     "--bound", "outer_rate",
                     "--method", "bisg-v1[a=0.75;c=0.5]",
                     "--k-range", "1", "100"])
        assert code == 0

    def test_verify_linear_rate_points_to_api(self, compare_out):
        with pytest.raises(SystemExit):
            main(["verify", str(compare_out / "trace.csv"),
                  "--bound", "linear_rate", "--method", "bisg-v1[a=0.75;c=0.5]"])

    def test_verify_unknown_method(self, compare_out):
        with pytest.raises(SystemExit):
            main(["verify", str(compare_out / "trace.csv"),
                  "--bound", "inner_rate", "--method", "nope"])


class TestCertifyQl:
    @pytest.mark.parametrize("preset,dim", [
        ("squared-l1", 10),
        ("l1-subgradient", 5),
        ("identity", 3),
        ("elastic-net", 8),
    ])
    def test_presets_certify(self, preset, dim, capsys):
        code = main(["certify-ql", "--preset", preset, "--dim", str(dim),
                     "--samples", "2000", "--seed", "3"])
        assert code == 0
        assert "certified" in capsys.readouterr().out

    def test_counterexample_path(self, capsys, monkeypatch):
        # shrink the declared constants behind the preset to force a witness
        import bisolve.bench.cli as cli
        from bisolve.quasi_lipschitz import QLConstants

        monkeypatch.setitem(
            cli._QL_PRESETS, "identity",
            ("identity", lambda n: (lambda x: x), lambda n: QLConstants(0.0, 0.1)),
        )
        code = main(["certify-ql", "--preset", "identity", "--dim", "3",
                     "--samples", "100", "--seed", "1"])
        assert code == 1
        assert "counterexample" in capsys.readouterr().out
