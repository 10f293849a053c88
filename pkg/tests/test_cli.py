import json
import subprocess
import sys

import numpy as np
import pytest

from darboux_lattice import Lattice
from darboux_lattice.cli import OUTDIR_ENV, ExperimentConfig, main


def _synth(tmp_path, *extra, name="lattice.json"):
    out = tmp_path / name
    rc = main(["synth", "--kind", "cosh", "--levels", "1", "--omega", "0.6",
               "--sites", "200", "--out", str(out), *extra])
    assert rc == 0
    return out


def test_synth_writes_lattice_and_levels(tmp_path):
    out = _synth(tmp_path)
    lat = Lattice.load(out)
    assert lat.size == 200
    side = json.loads((tmp_path / "levels.json").read_text())
    assert len(side["levels"]) == 2


def test_synth_named_sidecar(tmp_path):
    _synth(tmp_path, name="well.json")
    assert (tmp_path / "well_levels.json").exists()


def test_synth_integer_alpha_rejected(tmp_path, capsys):
    rc = main(["synth", "--kind", "sinh", "--levels", "1", "--omega", "0.6",
               "--alpha", "1.0", "--out", str(tmp_path / "x.json")])
    assert rc == 2
    assert "non-integer" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("bad", [["--levels", "0"], ["--omega", "-1"], ["--kappa", "0"]])
def test_synth_bad_values(tmp_path, bad):
    args = {"--levels": "1", "--omega": "0.6", "--kappa": "1"}
    args[bad[0]] = bad[1]
    argv = ["synth", "--kind", "cosh"] + [x for kv in args.items() for x in kv]
    assert main(argv + ["--out", str(tmp_path / "x.json")]) == 2
    assert list(tmp_path.iterdir()) == []


def test_scatter_numeric_and_analytic(tmp_path):
    lat = _synth(tmp_path)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["scatter", "--lattice", str(lat), "--q-samples", "64", "--out", str(a)]) == 0
    assert main(["scatter", "--analytic", str(tmp_path / "levels.json"), "--q-samples", "64",
                 "--out", str(b)]) == 0
    na = np.loadtxt(a, delimiter=",", skiprows=1)
    nb = np.loadtxt(b, delimiter=",", skiprows=1)
    assert na.shape == (64, 7)
    assert np.max(np.abs(na[:, 3:5] - nb[:, 3:5])) < 1e-8
    assert np.max(np.abs(na[:, 6] - 1)) < 1e-8


def test_scatter_needs_one_source(tmp_path):
    assert main(["scatter", "--out", str(tmp_path / "s.csv")]) == 2


def test_evolve_outputs(tmp_path):
    lat = _synth(tmp_path)
    out = tmp_path / "trace.csv"
    rc = main(["evolve", "--lattice", str(lat), "--n0", "30", "--tmax", "10",
               "--probe", "5", "--probe", "10", "--out", str(out)])
    assert rc == 0
    tr = np.loadtxt(out, delimiter=",", skiprows=1)
    assert tr.shape == (11, 3)
    assert (tmp_path / "profile_t5.csv").exists()
    assert (tmp_path / "profile_t10.csv").exists()


def test_evolve_deterministic(tmp_path):
    lat = _synth(tmp_path)
    outs = []
    for name in ("r1.csv", "r2.csv"):
        main(["evolve", "--lattice", str(lat), "--n0", "30", "--tmax", "5", "--out",
              str(tmp_path / name)])
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_evolve_bad_dt(tmp_path):
    lat = _synth(tmp_path)
    assert main(["evolve", "--lattice", str(lat), "--dt", "0.05",
                 "--out", str(tmp_path / "t.csv")]) == 2
    assert not (tmp_path / "t.csv").exists()


def test_evolve_missing_lattice(tmp_path):
    assert main(["evolve", "--lattice", str(tmp_path / "nope.json")]) == 2


def test_compare_report(tmp_path):
    lat = Lattice.uniform(300, offset=-150)
    lat.save(tmp_path / "free.json")
    out = tmp_path / "cmp.json"
    rc = main(["compare", "--lattice", str(tmp_path / "free.json"), "--tmax", "40",
               "--probe", "30", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["advancement"] == 0.0
    assert rep["distortion"] == 0.0
    assert abs(rep["P_total_final"] - 1) < 1e-10


def test_figdata_static(tmp_path):
    assert main(["figdata", "fig2a", "--out-dir", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "fig2a.csv", delimiter=",", skiprows=1)
    assert data.shape == (513, 7)
    assert np.allclose(data[0, 1:], np.pi)


def test_figdata_fig1a_profile(tmp_path):
    assert main(["figdata", "fig1a", "--out-dir", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "fig1a.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 2] == 0)


def test_figdata_unknown(tmp_path):
    assert main(["figdata", "fig9", "--out-dir", str(tmp_path)]) == 2
    assert list(tmp_path.iterdir()) == []


def test_design_modulation(tmp_path):
    out = tmp_path / "lat.json"
    main(["synth", "--kind", "sinh", "--levels", "1", "--omega", "0.6", "--alpha", "0.5",
          "--sites", "200", "--out", str(out)])
    d = tmp_path / "design.json"
    assert main(["design-modulation", "--lattice", str(out), "--out", str(d)]) == 0
    rep = json.loads(d.read_text())
    assert rep["Lambda_A_gamma_over_2pi"] == pytest.approx(2.0960468, abs=1e-6)
    assert sum(rep["rho"]) > 0


def test_design_no_solution_is_numeric_error(tmp_path):
    lat = _synth(tmp_path)
    rc = main(["design-modulation", "--lattice", str(lat), "--abeta-product", "0.5",
               "--out", str(tmp_path / "d.json")])
    assert rc == 3
    assert not (tmp_path / "d.json").exists()


def test_save_and_run_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    out = tmp_path / "l.json"
    assert main(["--save-config", str(cfg), "synth", "--kind", "cosh", "--levels", "1",
                 "--omega", "0.6", "--sites", "200", "--out", str(out)]) == 0
    first = out.read_bytes()
    out.unlink()
    loaded = ExperimentConfig.load(cfg)
    assert loaded.command == "synth"
    assert main(["run", str(cfg)]) == 0
    assert out.read_bytes() == first


def test_outdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTDIR_ENV, str(tmp_path))
    assert main(["synth", "--kind", "cosh", "--levels", "1", "--omega", "0.6",
                 "--sites", "200"]) == 0
    assert (tmp_path / "lattice.json").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "darboux_lattice", "figdata", "fig2b",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
    assert (tmp_path / "fig2b.csv").exists()


def test_argparse_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--kind", "tanh"])
    assert exc.value.code == 2
