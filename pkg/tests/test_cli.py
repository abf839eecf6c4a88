import json
import math

import numpy as np
import pytest

from fracstefan.cli import convergence_study, main, run
from fracstefan.config import DEFAULT_LADDER, ConfigError, Mode, parse_config

MINIMAL = """
mode: stefan_marching
alpha: 0.5
b: 1.0
T: 0.5
M: 1.0
"""
# coarsest level whose audit tolerance 10 (h + dt) ||u0|| still resolves
# the front flux (about -0.14 at T = 0.5)
COARSE = "n_nodes: 65\nn_steps: 64\n"


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestParse:
    def test_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.mode is Mode.STEFAN_MARCHING
        assert (cfg.spec.n_nodes, cfg.spec.n_steps) == (129, 128)
        assert cfg.fixed_point.relaxation == 0.5
        assert cfg.ladder == DEFAULT_LADDER

    def test_all_errors_at_once(self):
        with pytest.raises(ConfigError) as err:
            parse_config("mode: teleport\nalpha: 1.2\nb: 1\nT: 0.5\nspeed_of_light: 3\n")
        text = " | ".join(err.value.problems)
        assert "alpha out of (0,1)" in text
        assert "unknown keys: ['speed_of_light']" in text
        assert "missing required keys: ['M']" in text
        assert "mode must be one of" in text

    def test_cone_violation_names_worst_node(self):
        with pytest.raises(ConfigError, match=r"worst node \d+"):
            parse_config(MINIMAL + "u0_c: 3.0\n")

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError):
            parse_config("- a\n- b\n")
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("a: [1, 2\n")

    def test_hash_ignores_output_location(self):
        a = parse_config(MINIMAL + "output_dir: x\n")
        b = parse_config(MINIMAL + "output_dir: y\n")
        c = parse_config(MINIMAL + "seed: 4\n")
        assert a.config_hash == b.config_hash != c.config_hash

    def test_injection_must_name_an_auditor(self):
        with pytest.raises(ConfigError, match="inject_violation"):
            parse_config(MINIMAL + "inject_violation: nothing\n")


class TestRun:
    def test_marching_artifacts(self, tmp_path):
        cfg = parse_config(MINIMAL + COARSE).with_overrides(output_dir=str(tmp_path))
        assert run(cfg) == 0
        lines = (tmp_path / "front.csv").read_text().splitlines()
        assert lines[0] == f"# config_hash={cfg.config_hash}"
        assert lines[1] == "t,s,s_dot,flux"
        assert len(list((tmp_path / "snapshots").glob("snap_*.csv"))) == 65
        report = json.loads((tmp_path / "audit.json").read_text())
        assert report["passed"]

    def test_picard_is_deterministic(self, tmp_path):
        text = MINIMAL.replace("stefan_marching", "stefan_picard") + "n_nodes: 33\nn_steps: 32\n"
        path = write(tmp_path, text)
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "a")]) == 0
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "b")]) == 0
        files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
        assert files_a == files_b
        assert "iteration.log" in {p.name for p in files_a}
        for rel in files_a:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel
        entries = [json.loads(line) for line in (tmp_path / "a" / "iteration.log").read_text().splitlines()]
        assert entries[-1]["sup_residual"] <= 1e-9

    def test_given_front_mode(self, tmp_path):
        text = MINIMAL.replace("stefan_marching", "given_front") + "front_speed: 0.2\nn_nodes: 33\nn_steps: 8\n"
        assert main(["run", "--config", str(write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 0
        data = np.loadtxt(tmp_path / "o" / "front.csv", delimiter=",", skiprows=2)
        np.testing.assert_allclose(data[:, 1], 1.0 + 0.2 * data[:, 0])

    def test_exit_codes(self, tmp_path, capsys):
        bad = write(tmp_path, "mode: stefan_marching\nalpha: 2\n", "bad.yaml")
        assert main(["run", "--config", str(bad)]) == 3
        assert "alpha out of (0,1)" in capsys.readouterr().err
        assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 3

        inject = write(tmp_path, MINIMAL + COARSE + "inject_violation: extremum_principle\n", "inj.yaml")
        assert main(["audit", "--config", str(inject), "--out", str(tmp_path / "inj")]) == 1
        report = json.loads((tmp_path / "inj" / "audit.json").read_text())
        assert [c["name"] for c in report["checks"] if not c["passed"]] == ["extremum_principle"]

        stall = write(tmp_path, MINIMAL.replace("stefan_marching", "stefan_picard") + "max_iters: 2\nn_nodes: 33\nn_steps: 32\n", "stall.yaml")
        assert main(["run", "--config", str(stall), "--out", str(tmp_path / "stall")]) == 2

    def test_audit_subcommand_passes(self, tmp_path):
        path = write(tmp_path, MINIMAL + COARSE)
        assert main(["audit", "--config", str(path), "--out", str(tmp_path / "o"), "--seed", "5"]) == 0
        report = json.loads((tmp_path / "o" / "audit.json").read_text())
        assert report["tolerances"]["seed"] == 5

    def test_limit_subcommand(self, tmp_path):
        path = write(tmp_path, MINIMAL.replace("alpha: 0.5", "alpha: 0.99") + "n_nodes: 65\nn_steps: 64\n")
        assert main(["limit", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "convergence.csv").read_text().splitlines()
        assert lines[1].startswith("n,dt,alpha")
        rel = float(lines[2].split(",")[5])
        assert rel <= 0.05


class TestStudy:
    def test_repeated_level_has_zero_error(self):
        cfg = parse_config(MINIMAL)
        rows = convergence_study(cfg, [(33, 32), (33, 32), (33, 32)])
        assert all(r.error == 0.0 for r in rows)
        assert all(math.isnan(r.order) for r in rows)

    def test_needs_three_levels(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "ladder: [[33, 32], [65, 64]]\n")

    def test_study_subcommand_writes_orders(self, tmp_path):
        path = write(tmp_path, MINIMAL + "ladder: [[33, 32], [65, 64], [129, 128]]\n")
        assert main(["study", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "convergence.csv").read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert lines[1] == "n,n_steps,dt,quantity,value,error,observed_order"
        s_rows = [line.split(",") for line in lines[2:] if ",s_T," in line]
        assert float(s_rows[-1][6]) > 0.8
