import math

import numpy as np
import pytest

from onebitcs import cli, harness


def run_cli(*argv):
    return cli.main(list(argv))


class TestExperiment:
    def test_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = run_cli(
            "experiment", "--scheme", "ppcs", "--n", "256", "--k", "2",
            "--trials", "4", "--seed", "3", "--out", str(out),
        )
        assert code == 0
        records = harness.parse_report(str(out))
        assert len(records) == 4

    def test_stdout_without_out(self, capsys):
        code = run_cli(
            "experiment", "--scheme", "ppcs", "--n", "256", "--k", "2",
            "--trials", "2", "--seed", "3",
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "trial_id,scheme" in captured.out

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("scheme=ppcs\nn=256\nk=2\ntrials=2\nseed=5\n")
        out = tmp_path / "r.csv"
        code = run_cli(
            "experiment", "--config", str(cfg), "--trials", "3", "--out", str(out)
        )
        assert code == 0
        assert len(harness.parse_report(str(out))) == 3


class TestEncodeDecode:
    @pytest.mark.parametrize("scheme", ["ppcs", "btree", "expander", "heavy-hitters", "pipeline"])
    def test_offline_round_trip(self, tmp_path, scheme, capsys):
        n, k = 256, 2
        rng = np.random.default_rng(9)
        x = np.zeros(n)
        sup = rng.choice(n, size=k, replace=False)
        x[sup] = rng.choice([-1.0, 1.0], size=k) / math.sqrt(k)
        sig = tmp_path / "signal.txt"
        sig.write_text("".join(f"{float(v)!r}\n" for v in x))
        bits = tmp_path / "m.bits"
        out = tmp_path / "rec.csv"
        assert run_cli(
            "encode", "--scheme", scheme, "--signal", str(sig), "--out", str(bits),
            "--k", str(k), "--delta", "0.05", "--b", "4", "--mg", "600",
            "--seed", "17",
        ) == 0
        assert run_cli("decode", "--bits", str(bits), "--out", str(out)) == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        if scheme == "pipeline":
            found = {int(l.split(",")[0]) for l in lines}
        elif scheme == "ppcs":
            parts = {int(l) for l in lines}
            width = -(-n // min(n, harness.PARTS_PER_SPARSITY * k))
            found = set()
            for p in parts:
                found.update(range(p * width, min((p + 1) * width, n)))
        else:
            found = {int(l) for l in lines}
        assert set(sup.tolist()) <= found


class TestSelftest:
    def test_selftest_passes(self, capsys):
        assert run_cli("selftest", "--seed", "7") == 0
        out = capsys.readouterr().out
        assert "[FAIL]" not in out
        assert out.count("[PASS]") == 5
