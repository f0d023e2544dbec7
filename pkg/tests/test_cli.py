import json

import numpy as np
import pytest

from curlspec.cli.config import RunConfig, load_config, parse_config
from curlspec.cli.experiments import split_experiment
from curlspec.cli.main import run
from curlspec.errors import ConfigError


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def _results(out):
    return json.loads((out / "results.json").read_text())


def test_defaults_are_valid():
    cfg = RunConfig()
    assert cfg.domain.generator == "ball" and cfg.lagrangian.preset == "zero_flux"


@pytest.mark.parametrize("doc, where", [
    ({"domain": {"refinement": -1}}, "domain.refinement"),
    ({"solver": {"tol": 0}}, "solver.tol"),
    ({"bogus": 1}, "bogus"),
    ({"domain": {"generator": "torus", "major_radius": 1.0, "minor_radius": 2.0}}, "domain"),
    ({"lagrangian": {"preset": "custom"}}, "lagrangian"),
    ({"split": {"coarse_refinement": 2, "fine_refinement": 2}}, "split"),
])
def test_config_errors_name_the_field(doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(doc)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"domain": {"refinement": 99}})
    assert run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "domain.refinement" in capsys.readouterr().err


def test_wrong_lagrangian_shape_is_config_error(tmp_path):
    cfg = _write(tmp_path, {"domain": {"generator": "torus", "refinement": 1},
                            "lagrangian": {"preset": "custom", "F": [[1, 0, 0, 0]]}})
    out = tmp_path / "o"
    assert run(["solve", "--config", str(cfg), "--out", str(out)]) == 2
    assert _results(out)["status"] == "config_error"


def test_nonisotropic_lagrangian_is_numerical_failure(tmp_path):
    cfg = _write(tmp_path, {"domain": {"generator": "torus", "refinement": 1},
                            "lagrangian": {"preset": "custom", "F": [[1, 0]], "F_imag": [[0, 1]]}})
    out = tmp_path / "o"
    assert run(["solve", "--config", str(cfg), "--out", str(out)]) == 1
    doc = _results(out)
    assert doc["status"] == "numerical_failure" and doc["error_type"] == "InconsistentLagrangian"


def test_solve_ball_and_determinism(tmp_path):
    cfg = _write(tmp_path, {"domain": {"refinement": 1}, "solver": {"k": 3}})
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["solve", "--config", str(cfg), "--out", str(a), "--sequential"]) == 0
    assert run(["solve", "--config", str(cfg), "--out", str(b), "--sequential"]) == 0
    da, db = _results(a), _results(b)
    assert da["status"] == "ok" and da["config"]["solver"]["k"] == 3
    assert da["result"]["cluster_sizes"][0] == 3
    assert da["harmonic_dimension"] == 0
    da.pop("timestamp"), db.pop("timestamp")
    assert da == db
    vtk = (a / "fields.vtk").read_text()
    assert vtk.startswith("# vtk DataFile") and "VECTORS u_1 double" in vtk and "CELL_DATA" in vtk


def test_mesh_info_torus(tmp_path):
    cfg = _write(tmp_path, {"domain": {"generator": "torus", "refinement": 1}})
    out = tmp_path / "o"
    assert run(["mesh-info", "--config", str(cfg), "--out", str(out)]) == 0
    doc = _results(out)
    assert doc["boundary_genus"] == 1 and doc["euler_characteristic"] == 0
    assert doc["intersection_matrix"] == [[0.0, 1.0], [-1.0, 0.0]]


def test_hadamard_check_and_track(tmp_path):
    cfg = _write(tmp_path, {"domain": {"refinement": 1},
                            "hadamard": {"fields": [{"kind": "dilation"}, {"kind": "translation"}]},
                            "track": {"field": {"kind": "dilation"}, "t_max": 0.1, "n_steps": 2}})
    out = tmp_path / "h"
    assert run(["hadamard-check", "--config", str(cfg), "--out", str(out)]) == 0
    reps = _results(out)["reports"]
    assert [r["field"] for r in reps] == ["dilation", "translation"]
    # under dilation every discrete branch moves at exactly -lambda
    np.testing.assert_allclose(reps[0]["discrete_values"], -reps[0]["eigenvalue"], rtol=1e-8)
    out = tmp_path / "t"
    assert run(["track", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "branches.csv").read_text().splitlines()
    assert lines[0].startswith("t,lambda_1") and len(lines) == 4


def test_split_experiment_amplitude_zero_never_splits():
    stats = split_experiment(amplitude=0.0, trials=3, seed=1, refinements=(0, 1))
    assert stats.n_valid == 3 and stats.n_split == 0
    assert stats.split_fraction == 0.0


def test_split_experiment_reproducible():
    a = split_experiment(amplitude=0.05, trials=2, seed=5, refinements=(0, 1))
    b = split_experiment(amplitude=0.05, trials=2, seed=5, refinements=(0, 1), workers=2)
    assert a.to_dict() == b.to_dict()


def test_split_command_needs_ball(tmp_path):
    cfg = _write(tmp_path, {"domain": {"generator": "torus", "refinement": 1}})
    assert run(["split-experiment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_optimize_and_resume(tmp_path):
    doc = {"domain": {"refinement": 1}, "optimize": {"family": "harmonic", "l_min": 2, "l_max": 2,
                                                      "max_iters": 1, "direction": "minimize"}}
    first = tmp_path / "first"
    assert run(["optimize", "--config", str(_write(tmp_path, doc)), "--out", str(first)]) == 0
    r1 = _results(first)["optimization"]
    assert r1["monotone"]
    assert (first / "final.tmesh").exists() and (first / "family.npz").exists()
    doc["optimize"]["resume_from"] = str(first)
    doc["optimize"]["max_iters"] = 0
    second = tmp_path / "second"
    assert run(["optimize", "--config", str(_write(tmp_path, doc, "c2.json")), "--out", str(second)]) == 0
    r2 = _results(second)["optimization"]
    assert r2["gradient_norm"] == pytest.approx(r1["gradient_norm"], rel=1e-10)
    assert r2["value"] == pytest.approx(r1["value"], rel=1e-12)
    doc["optimize"]["resume_from"] = str(tmp_path / "nowhere")
    assert run(["optimize", "--config", str(_write(tmp_path, doc, "c3.json")), "--out", str(tmp_path / "x")]) == 2


def test_seed_override(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, {"domain": {"refinement": 0}, "solver": {"k": 1, "write_fields": False}})
    assert run(["solve", "--config", str(cfg), "--out", str(out), "--seed", "42"]) == 0
    assert _results(out)["config"]["seed"] == 42
