import json

import numpy as np
import pytest

from kspap.cli import ExperimentSuite, main, run_suite
from kspap.config import ConfigError, build_profiles, domain_from, load_json, signal_from_descriptor, solver_config
from kspap.domain import SpectralField

SOLVER = {"domain": {"dim": 2, "modes": 8}, "dt": 0.05, "t_end": 1.0}
PROFILES = {"f1": {"vector": True, "modes": [{"component": 0, "k": [1, 0], "amp": 1.0}]}}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def linear_config(amp=1e-3, **extra):
    data = {
        "solver": SOLVER,
        "profiles": PROFILES,
        "forcing": {"ap": [{"freq": 1.0, "amp": amp, "profile_ref": "f1"}]},
    }
    data.update(extra)
    return data


def test_empty_suite(tmp_path):
    cfg = write(tmp_path, {"experiments": [], "out": str(tmp_path / "out")})
    assert main(["suite", "--config", cfg]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["experiments"] == [] and manifest["passed"]


def test_bad_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "seed": 1,\n  "solver": {"dt": 0.05,, }\n}\n')
    assert main(["suite", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "bad.json:3:" in err and '"solver"' in err


@pytest.mark.parametrize(
    "argv",
    [["solve-linear", "--p", "5"], ["solve-linear", "--dt", "0.03"], ["stability", "--gamma", "-1"]],
)
def test_invalid_flags(argv, capsys):
    assert main(argv) == 2
    assert "config error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "data",
    [
        {"experiments": [{"kind": "nope"}]},
        {"experiments": [{"name": "x"}]},
        {"experiments": [{"kind": "semigroup"}, {"kind": "semigroup"}]},
        {"experiments": [{"kind": "solve-linear"}]},
        {"experiments": "semigroup"},
        {"solver": {"dt": 0.05, "bogus": 1}},
        {"solver": []},
    ],
)
def test_config_errors(tmp_path, data):
    assert main(["suite", "--config", write(tmp_path, data)]) == 2


def test_missing_config(tmp_path):
    assert main(["suite", "--config", str(tmp_path / "missing.json")]) == 2


def test_solve_linear_descriptor(tmp_path):
    out = tmp_path / "out"
    code = main(["solve-linear", "--config", write(tmp_path, linear_config()), "--out", str(out), "--trials", "5"])
    assert code == 0
    assert (out / "solve-linear" / "trajectory.csv").exists()
    assert (out / "solve-linear" / "ledger.json").exists()
    assert (out / "plot.gp").read_text().startswith("# gnuplot")


def test_forcing_too_large(tmp_path, capsys):
    code = main(["solve-pap", "--config", write(tmp_path, linear_config(amp=1.0)), "--trials", "5"])
    assert code == 1
    assert "ForcingTooLarge:" in capsys.readouterr().out


def test_config_overrides_flags(tmp_path):
    out = tmp_path / "out"
    data = linear_config(seed=3)
    code = main(["solve-linear", "--config", write(tmp_path, data), "--dt", "0.1", "--seed", "9",
                 "--out", str(out), "--trials", "5"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    t = np.loadtxt(out / "solve-linear" / "trajectory.csv", delimiter=",", skiprows=1, usecols=0)
    assert t[1] - t[0] == pytest.approx(0.05)


def test_deterministic_output(tmp_path):
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        main(["solve-linear", "--config", write(tmp_path, linear_config()), "--out", str(out), "--trials", "5"])
        blobs.append((out / "solve-linear" / "trajectory.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_hyperbolic_suite(tmp_path, capsys):
    data = {"experiments": [{"kind": "hyperbolic", "params": {"delta": 1, "expected_sigma": "71/98"}}]}
    assert main(["suite", "--config", write(tmp_path, data)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_parallel_suite_matches_serial():
    specs = [{"kind": "semigroup", "params": {"modes": 8}},
             {"kind": "hyperbolic", "params": {"delta": 1}}]
    serial = run_suite(ExperimentSuite(experiments=specs), jobs=1, echo=lambda s: None)
    parallel = run_suite(ExperimentSuite(experiments=specs), jobs=2, echo=lambda s: None)
    assert serial[0] == parallel[0] == 0
    assert [r.name for r in serial[1]] == [r.name for r in parallel[1]]


def test_solver_config_precedence():
    cfg = solver_config({"dt": 0.05, "t_end": 1.0}, dt=0.1, gamma=0.5, domain_spec={"modes": 8})
    assert cfg.dt == 0.05 and cfg.gamma == 0.5 and cfg.domain.modes == 8


def test_domain_from_dict():
    d = domain_from({"side_lengths": [1.0, 2.0], "modes": 4})
    assert d.side_lengths == (1.0, 2.0)
    with pytest.raises(ConfigError):
        domain_from({"dim": 2, "length": -1.0})


def test_load_json_top_level(tmp_path):
    with pytest.raises(ConfigError, match="object"):
        load_json(write(tmp_path, [1, 2]))


def test_descriptor_round_trip(tmp_path):
    d = domain_from({"modes": 8})
    SpectralField.mode(d, (1, 1)).to_json(tmp_path / "w.json")
    profiles = build_profiles({**PROFILES, "w": {"file": "w.json"}}, d, str(tmp_path))
    sig = signal_from_descriptor(
        {"ap": [{"freq": 1.0, "profile_ref": "f1"}],
         "pap0": [{"kind": "power", "params": {"rate": 2.0}, "profile_ref": "f1"}]},
        profiles,
    )
    assert sig.value_kind == "vector" and sig.pap0[0].kind == "power"
    assert profiles["w"].coefficients[1, 1] == 1.0
    with pytest.raises(ConfigError, match="profile_ref"):
        signal_from_descriptor({"ap": [{"profile_ref": "missing"}]}, profiles)
    with pytest.raises(ConfigError):
        signal_from_descriptor({"pap0": {"kind": "gaussian"}}, profiles)
