import json
import subprocess
import sys

import pytest

from mobile_sampling import cli
from mobile_sampling.config import CRITERIA, ConfigError, ExperimentConfig, Tolerances


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


# -- configuration ------------------------------------------------------------------


def test_default_config_round_trip():
    cfg = ExperimentConfig()
    again = ExperimentConfig.from_dict({k: v for k, v in cfg.to_dict().items()})
    assert again.to_dict() == cfg.to_dict()
    assert tuple(cfg.claims) == CRITERIA


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"tolerances": {"no_such_tolerance": 1.0}},
    {"claims": ["not-a-claim"]},
    {"T": -1},
    {"radii": [50, 25]},
    {"T": "large"},
    {"centers_per_radius": "many"},
    {"tolerances": {"density_rel": "tight"}},
])
def test_invalid_config_rejected(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_tolerances_from_dict():
    t = Tolerances.from_dict({"density_rel": 0.1})
    assert t.density_rel == 0.1 and t.mc_sigmas == 3.0


def test_unreadable_config(tmp_path):
    bad = tmp_path / "c.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(bad)


# -- subcommands --------------------------------------------------------------------


def test_delta_example(capsys):
    code, out, _ = run(["delta", "--body", "cube:0.5", "--dim", "2"], capsys)
    assert code == 0
    assert "1.41421" in out and "0.70711" in out


def test_gap_example(capsys):
    code, out, _ = run(["gap", "--d", "2", "--A", "1", "--B", "1"], capsys)
    assert code == 0 and "2.96740" in out


def test_density_example(capsys, tmp_path):
    code, out, _ = run(["density", "--traj", "hairs:4", "--rmax", "200", "--out", str(tmp_path)], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "density.json").read_text())
    assert abs(doc["upper"] - 0.3125) <= 0.05 * 0.3125
    header = (tmp_path / "density_windows.csv").read_text().splitlines()[0]
    assert header == "radius,center,window_kind,length,density"


def test_section_and_frame(capsys, tmp_path):
    code, out, _ = run(["section", "--body", "cross:1", "--dim", "3", "--q", "1,1,1", "--out", str(tmp_path),
                        "--emit-plot-data"], capsys)
    assert code == 0 and "1.29904" in out
    assert (tmp_path / "section_profile.csv").exists()
    code, out, _ = run(["frame", "--samples", "lattice:0.5", "--dim", "1", "--T", "8", "--out", str(tmp_path)], capsys)
    assert code == 0 and "A 2.00000 B 2.00000" in out
    assert json.loads((tmp_path / "frame.json").read_text())["A"] == 2.0


def test_frame_failure_exit_status(capsys):
    code, out, _ = run(["frame", "--samples", "lattice:1", "--dim", "1", "--T", "8"], capsys)
    assert code == 1 and "not a sampling set" in out


def test_cover(capsys):
    assert run(["cover", "--traj", "uniform:1", "--body", "ball:0.5", "--window", "4"], capsys)[0] == 0
    assert run(["cover", "--traj", "uniform:2", "--body", "cube:0.5", "--window", "4"], capsys)[0] == 1


def test_gap_with_samples(capsys):
    code, out, _ = run(["gap", "--d", "1", "--A", "2", "--B", "2", "--samples", "lattice:0.5"], capsys)
    assert code == 0 and "empirical gap 0.25000" in out


@pytest.mark.parametrize("args", [
    ["density", "--traj", "spiral:3"],
    ["delta", "--body", "simplex:1"],
    ["frame", "--samples", "grid:1"],
    ["gap", "--d", "2", "--A", "2", "--B", "1"],
    ["verify", "--claim", "made-up"],
    ["density", "--emit-plot-data"],
])
def test_config_errors_exit_2(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 2 and "config error" in err


def test_bad_config_file_exit_2(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"unknown_key": 3}))
    code, _, err = run(["suite", "--config", str(path)], capsys)
    assert code == 2 and "unknown_key" in err


def test_verify_writes_jsonl(tmp_path, capsys):
    code, out, _ = run(["verify", "--claim", "delta-exact-square", "--claim", "frame-normalization",
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    lines = (tmp_path / "verdicts.jsonl").read_text().splitlines()
    ids = [json.loads(line)["claim_id"] for line in lines]
    assert ids == ["delta-exact-square", "frame-normalization"]
    assert "2/2 criteria passed" in out


def test_inline_documents(capsys):
    body = json.dumps({"dim": 2, "shape": "cube", "params": [0.5]})
    code, out, _ = run(["delta", "--body", body], capsys)
    assert code == 0 and "1.41421" in out
    traj = json.dumps({"kind": "hairs", "dim": 2, "n": 2})
    code, out, _ = run(["density", "--traj", traj, "--rmax", "40"], capsys)
    assert code == 0


def test_outputs_are_byte_identical(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"claims": ["delta-exact-square", "hairs-ill-posed"], "hairs_n": [1, 2],
                               "radii": [10, 20]}))
    dirs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "mobile_sampling.cli", "verify", "--config", str(cfg),
                               "--seed", "7", "--out", str(out), "--emit-plot-data"], capture_output=True, text=True)
        assert proc.returncode in (0, 1), proc.stderr
        dirs.append(out)
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == sorted(p.name for p in dirs[1].iterdir())
    assert "counterexample_table.csv" in names and "density_sweep.csv" in names
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_machine_precision_is_twelve_digits():
    assert cli.dumps({"x": 1 / 3}) == '{"x": 0.333333333333}'
    assert cli.dumps({"x": float("nan"), "y": float("inf")}) == '{"x": null, "y": "inf"}'
    assert cli.fmt_human(1 / 3) == "0.33333"
