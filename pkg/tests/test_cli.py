import re
import subprocess
import sys
import time

import pytest

from neurokdc.cli import main
from neurokdc.experiments import SWEEP_HEADER


class TestSimCommands:
    def test_sweep_to_stdout(self, capsys):
        code = main(["sim", "sweep", "--vary", "n", "--values", "4,6",
                     "--k", "3", "--l", "3", "--rule", "hebbian",
                     "--trials", "2", "--seed", "1",
                     "--max-rounds", "10000", "--agreement-window", "10",
                     "--out", "-"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == ",".join(SWEEP_HEADER)
        assert sum(1 for l in lines if not l.startswith("#") and l) == 5
        assert sum(1 for l in lines if l.startswith("# summary")) == 2

    def test_randomness_to_file(self, tmp_path, capsys):
        out_file = tmp_path / "rand.csv"
        code = main(["sim", "randomness", "--trials", "3", "--seed", "2",
                     "--k", "3", "--n", "4", "--l", "3",
                     "--max-rounds", "10000", "--agreement-window", "10",
                     "--out", str(out_file)])
        assert code == 0
        text = out_file.read_text()
        assert text.startswith("trial_index,synced,rounds_used,fingerprint\n")
        assert "# summary trials=3" in text

    def test_attack_to_stdout(self, capsys):
        code = main(["sim", "attack", "--trials", "2", "--seed", "3",
                     "--k", "3", "--n", "4", "--l", "2", "--out", "-"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("trial_index,partner_synced,")

    def test_config_error_exit_code(self, capsys):
        assert main(["sim", "randomness", "--trials", "1", "--seed", "1"]) == 1

    def test_invalid_machine_geometry_exit_code(self, capsys):
        assert main(["sim", "randomness", "--trials", "2", "--seed", "1",
                     "--l", "0"]) == 1

    def test_sweep_values_must_increase(self, capsys):
        assert main(["sim", "sweep", "--vary", "n", "--values", "6,4",
                     "--trials", "1", "--seed", "1"]) == 1


def _spawn(args):
    return subprocess.Popen(
        [sys.executable, "-m", "neurokdc.cli", *args],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )


@pytest.fixture
def served():
    proc = _spawn(["serve", "--listen", "127.0.0.1:0", "--input-seed", "5",
                   "--agreement-window", "10", "--max-rounds", "10000"])
    line = proc.stderr.readline()
    match = re.search(r"listening on ([\d.]+):(\d+)", line)
    assert match, f"no listen line, got {line!r}"
    yield match.group(1), int(match.group(2))
    proc.terminate()
    proc.wait(timeout=10)


class TestEndToEndCli:
    def test_party_pair_and_eavesdropper(self, served):
        host, port = served
        addr = f"{host}:{port}"
        eve = _spawn(["eavesdrop", "--connect", addr, "--session", "1",
                      "--weight-seed", "4"])
        time.sleep(0.3)
        pa = _spawn(["party", "--connect", addr, "--session", "1",
                     "--role", "A", "--k", "3", "--n", "4", "--l", "3",
                     "--rule", "hebbian", "--weight-seed", "2",
                     "--agreement-window", "10", "--emit-key"])
        pb = _spawn(["party", "--connect", addr, "--session", "1",
                     "--role", "B", "--k", "3", "--n", "4", "--l", "3",
                     "--rule", "hebbian", "--weight-seed", "3",
                     "--agreement-window", "10", "--emit-key"])
        out_a, err_a = pa.communicate(timeout=120)
        out_b, err_b = pb.communicate(timeout=120)
        out_e, err_e = eve.communicate(timeout=120)
        assert pa.returncode == 0, err_a
        assert pb.returncode == 0, err_b
        assert eve.returncode == 0, err_e
        # both partners print the same lowercase hex key
        key_a, key_b = out_a.strip(), out_b.strip()
        assert key_a == key_b
        assert re.fullmatch(r"[0-9a-f]{24}", key_a)  # 3*4 octets
        assert "synced=True" in err_a and "rounds=863" in err_a
        assert "partners_synced=True" in err_e

    def test_timeout_exit_code(self):
        proc = _spawn(["serve", "--listen", "127.0.0.1:0", "--input-seed", "5",
                       "--agreement-window", "40", "--max-rounds", "40"])
        line = proc.stderr.readline()
        match = re.search(r"listening on ([\d.]+):(\d+)", line)
        assert match
        addr = f"{match.group(1)}:{match.group(2)}"
        try:
            pa = _spawn(["party", "--connect", addr, "--session", "1",
                         "--role", "A", "--k", "3", "--n", "4", "--l", "3",
                         "--weight-seed", "2", "--agreement-window", "40",
                         "--max-rounds", "40"])
            pb = _spawn(["party", "--connect", addr, "--session", "1",
                         "--role", "B", "--k", "3", "--n", "4", "--l", "3",
                         "--weight-seed", "3", "--agreement-window", "40",
                         "--max-rounds", "40"])
            pa.wait(timeout=60)
            pb.wait(timeout=60)
            assert pa.returncode == 2
            assert pb.returncode == 2
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_protocol_error_exit_code(self, served):
        host, port = served
        addr = f"{host}:{port}"
        pa = _spawn(["party", "--connect", addr, "--session", "77",
                     "--role", "A", "--k", "3", "--n", "4", "--l", "3",
                     "--weight-seed", "2"])
        pb = _spawn(["party", "--connect", addr, "--session", "77",
                     "--role", "B", "--k", "3", "--n", "4", "--l", "4",
                     "--weight-seed", "3"])
        pa.wait(timeout=60)
        pb.wait(timeout=60)
        assert pa.returncode == 3  # param mismatch abort
        assert pb.returncode == 3
