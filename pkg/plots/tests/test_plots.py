import json
import os
import subprocess
import sys

import pytest

from spinbath_plots import FigureSpec, SchemaError, check_artifact, data_check, render

HERE = os.path.dirname(os.path.abspath(__file__))
ACCEPTANCE = os.path.normpath(os.path.join(HERE, "..", "..", "artifacts", "acceptance"))


def plot_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "spinbath_plots.cli", *argv],
        capture_output=True,
        text=True,
    )


def simulator(*argv):
    res = subprocess.run(
        [sys.executable, "-m", "spinbath.cli", *argv], capture_output=True, text=True
    )
    assert res.returncode == 0, res.stderr
    return res


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    """Acceptance-run artifacts, or freshly generated small equivalents."""
    expected = {
        "trajectory": os.path.join(ACCEPTANCE, "ac2", "trajectory.csv"),
        "fidelity": os.path.join(ACCEPTANCE, "ac4", "fidelity.csv"),
        "scaling": os.path.join(ACCEPTANCE, "ac5", "scaling.csv"),
        "landscape": os.path.join(ACCEPTANCE, "landscape", "landscape.csv"),
    }
    if all(os.path.exists(p) for p in expected.values()):
        return {k: os.path.dirname(p) for k, p in expected.items()}

    base = tmp_path_factory.mktemp("generated")
    cfg = base / "compare.json"
    cfg.write_text(json.dumps({
        "experiment": "compare", "seed": 0,
        "model": {"sample": {"M": 6, "g": 0.05, "E": 2.0}},
        "grid": {"t0": 0.0, "t1": 2.0, "n_steps": 8},
    }))
    simulator("exact", "--m", "6", "--out", str(base / "exact"))
    simulator("compare", "--config", str(cfg), "--out", str(base / "compare"))
    simulator("scaling", "--out", str(base / "scaling"))
    simulator("landscape", "--m", "5", "--out", str(base / "landscape"))
    return {
        "trajectory": str(base / "exact"),
        "fidelity": str(base / "compare"),
        "scaling": str(base / "scaling"),
        "landscape": str(base / "landscape"),
    }


class TestFigureSpec:
    def test_unknown_kind(self):
        with pytest.raises(SchemaError, match="kind"):
            FigureSpec(kind="pie", inputs=["x.csv"])

    def test_needs_inputs(self):
        with pytest.raises(SchemaError, match="input"):
            FigureSpec(kind="fidelity", inputs=[])

    def test_spec_json_roundtrip(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"kind": "fidelity", "inputs": "f.csv", "out": "f.png"}))
        spec = FigureSpec.from_json(str(path))
        assert spec.kind == "fidelity" and spec.inputs == ["f.csv"]

    def test_spec_json_unknown_field(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"kind": "fidelity", "inputs": ["f.csv"], "refit": True}))
        with pytest.raises(SchemaError, match="refit"):
            FigureSpec.from_json(str(path))


class TestSchemaChecks:
    def test_missing_column_is_named(self, tmp_path):
        bad = tmp_path / "trajectory.csv"
        bad.write_text("t,norm\n0,1\n")
        with pytest.raises(SchemaError, match="abs_r"):
            data_check(FigureSpec(kind="decoherence", inputs=[str(bad)]))

    def test_empty_csv_rejected(self, tmp_path):
        empty = tmp_path / "f.csv"
        empty.write_text("t,fidelity\n")
        with pytest.raises(SchemaError, match="no data"):
            data_check(FigureSpec(kind="fidelity", inputs=[str(empty)]))

    def test_unrecognized_artifact(self, tmp_path):
        other = tmp_path / "stuff.csv"
        other.write_text("a\n1\n")
        with pytest.raises(SchemaError, match="not a recognized"):
            check_artifact(str(other))

    def test_scaling_json_keys(self, tmp_path):
        c = tmp_path / "scaling.csv"
        c.write_text("M,diag_mean,diag_std,offdiag_std\n64,1,0.1,0.2\n")
        j = tmp_path / "scaling.json"
        j.write_text(json.dumps({"diag_slope": 1.0}))
        with pytest.raises(SchemaError, match="offdiag_slope"):
            data_check(FigureSpec(kind="scaling", inputs=[str(c), str(j)]))


class TestRender:
    def test_flat_decoherence_from_free_run(self, tmp_path):
        # H = 0 trajectory: |r| constant; rendering it must succeed
        flat = tmp_path / "trajectory.csv"
        flat.write_text("t,abs_r\n" + "".join(f"{k/4},0.5\n" for k in range(5)))
        out = render(FigureSpec(kind="decoherence", inputs=[str(flat)], out=str(tmp_path / "r.png")))
        assert os.path.getsize(out) > 0

    def test_render_requires_out(self, tmp_path):
        f = tmp_path / "f.csv"
        f.write_text("t,fidelity\n0,1\n")
        with pytest.raises(SchemaError, match="output"):
            render(FigureSpec(kind="fidelity", inputs=[str(f)]))

    def test_deterministic_bytes(self, tmp_path, artifacts):
        src = os.path.join(artifacts["fidelity"], "fidelity.csv")
        a = render(FigureSpec(kind="fidelity", inputs=[src], out=str(tmp_path / "a.png")))
        b = render(FigureSpec(kind="fidelity", inputs=[src], out=str(tmp_path / "b.png")))
        assert open(a, "rb").read() == open(b, "rb").read()


class TestCli:
    def test_schema_error_exit_2(self, tmp_path):
        bad = tmp_path / "t.csv"
        bad.write_text("t\n0\n")
        res = plot_cli("decoherence", str(bad), "--data-check")
        assert res.returncode == 2 and "abs_r" in res.stderr

    def test_spec_render(self, tmp_path, artifacts):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "landscape",
            "inputs": [os.path.join(artifacts["landscape"], "landscape.csv")],
            "out": str(tmp_path / "l.png"),
            "title": "phase landscape",
        }))
        res = plot_cli("--spec", str(spec))
        assert res.returncode == 0, res.stderr
        assert os.path.getsize(tmp_path / "l.png") > 0


def test_ac10_figures_and_data_checks(tmp_path, artifacts):
    jobs = [
        ("decoherence", [os.path.join(artifacts["trajectory"], "trajectory.csv")]),
        ("landscape", [os.path.join(artifacts["landscape"], "landscape.csv")]),
        ("fidelity", [os.path.join(artifacts["fidelity"], "fidelity.csv")]),
        ("scaling", [os.path.join(artifacts["scaling"], "scaling.csv"),
                     os.path.join(artifacts["scaling"], "scaling.json")]),
    ]
    rendered = 0
    for kind, inputs in jobs:
        out = str(tmp_path / f"{kind}.png")
        res = plot_cli(kind, *inputs, "-o", out)
        assert res.returncode == 0, f"{kind}: {res.stderr}"
        assert os.path.getsize(out) > 0
        rendered += 1

    roots = set(artifacts.values())
    if os.path.isdir(ACCEPTANCE):
        roots.update(
            os.path.join(ACCEPTANCE, d)
            for d in os.listdir(ACCEPTANCE)
            if os.path.isdir(os.path.join(ACCEPTANCE, d))
        )
    checked = 0
    for root in roots:
        for name in sorted(os.listdir(root)):
            res = plot_cli("check", os.path.join(root, name))
            assert res.returncode == 0, f"{name}: {res.stderr}"
            checked += 1

    ok = rendered == 4 and checked > 0
    line = f"AC-10 {'PASS' if ok else 'FAIL'} ({rendered}/4 figures, {checked} artifacts checked)"
    print(f"\n{line}", flush=True)
    assert ok, line
