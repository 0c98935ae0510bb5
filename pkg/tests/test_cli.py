import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from wassknn import cli


def run_main(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestConfig:
    def test_file_and_overrides(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("# counterexample run\nsuite = counterexample\nseed = 3\nn = 64, 128\ntrials = 2\nT = 50\n")
        raw = cli.read_config_file(p)
        raw["trials"] = "3"
        cfg = cli.build_config(raw)
        assert cfg.n == (64, 128) and cfg.trials == 3 and cfg.T == 50 and cfg.seed == 3

    def test_seed_required(self):
        with pytest.raises(cli.ConfigError):
            cli.build_config({"suite": "geometry"})

    @pytest.mark.parametrize("n", ["64,64", "128,64"])
    def test_n_strictly_increasing(self, n):
        with pytest.raises(cli.ConfigError):
            cli.build_config({"suite": "counterexample", "seed": "1", "n": n})

    def test_trials_positive(self):
        with pytest.raises(cli.ConfigError):
            cli.build_config({"suite": "geometry", "seed": "1", "trials": "0"})

    def test_bad_line(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("suite counterexample\n")
        with pytest.raises(cli.ConfigError):
            cli.read_config_file(p)

    def test_hash_ignores_output_path(self):
        a = cli.build_config({"suite": "geometry", "seed": "1", "out": "a.csv"})
        b = cli.build_config({"suite": "geometry", "seed": "1", "out": "b.csv"})
        c = cli.build_config({"suite": "geometry", "seed": "2"})
        assert a.hash == b.hash != c.hash


class TestRun:
    def test_counterexample_schema(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        code, _, _ = run_main(["run", "--suite", "counterexample", "--n", "64,1024", "--seed", "7", "--trials", "3", "--out", str(out)], capsys)
        assert code == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        text = raw.decode()
        assert text.splitlines()[0] == "n,k,trial,x_n,emp_risk,exact_tail,hoeffding_bound,config_hash,seed"
        rs = rows(text)
        assert [(int(r["n"]), int(r["trial"])) for r in rs] == [(64, 0), (64, 1), (64, 2), (1024, 0), (1024, 1), (1024, 2)]
        assert all(r["seed"] == "7" and len(r["config_hash"]) == 16 for r in rs)
        assert rs[3]["k"] == "32"
        assert float(rs[3]["exact_tail"]) == float("%.17g" % float(rs[3]["exact_tail"]))

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert run_main(["run", "--suite", "counterexample", "--n", "1024", "--seed", "7", "--out", str(p)], capsys)[0] == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    @pytest.mark.parametrize("suite", ["counterexample", "finite-support", "rational-grid", "geometry"])
    def test_thread_count_irrelevant(self, suite, monkeypatch):
        cfg = cli.build_config({"suite": suite, "seed": "11", "trials": "6", **({"n": "64,256"} if suite in ("counterexample", "finite-support") else {})})
        monkeypatch.setenv("WASSKNN_THREADS", "1")
        one = cli.run(cfg)
        monkeypatch.setenv("WASSKNN_THREADS", "4")
        assert cli.run(cfg) == one

    def test_unknown_suite(self, capsys):
        code, _, err = run_main(["run", "--suite", "nope", "--seed", "1"], capsys)
        assert code == 2
        assert "unknown suite" in err

    def test_missing_subcommand(self, capsys):
        assert run_main([], capsys)[0] == 2

    def test_unwritable_output(self, tmp_path, capsys):
        code, _, _ = run_main(["run", "--suite", "geometry", "--seed", "1", "--trials", "2", "--out", str(tmp_path / "no" / "x.csv")], capsys)
        assert code == 1

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_main(["run", "--config", str(tmp_path / "none.cfg")], capsys)[0] == 1

    def test_stdout(self, capsys):
        code, out, _ = run_main(["run", "--suite", "rational-grid", "--seed", "2", "--trials", "4"], capsys)
        assert code == 0
        assert all(r["holds"] == "1" for r in rows(out))

    def test_geometry_no_failures(self):
        text = cli.run(cli.build_config({"suite": "geometry", "seed": "5", "trials": "500"}))
        assert all(r["failures"] == "0" for r in rows(text))

    def test_dimension(self):
        text = cli.run(cli.build_config({"suite": "dimension", "seed": "5", "trials": "10", "search_trials": "500"}))
        assert all(r["failures"] == "0" for r in rows(text))

    def test_finite_support_trend(self):
        text = cli.run(cli.build_config({"suite": "finite-support", "seed": "1", "exact": "1"}))
        summ = cli.summarize(text)
        for (n0, _, m0, s0, _), (n1, _, m1, s1, _) in zip(summ, summ[1:]):
            assert m1 <= m0 + 2 * np.hypot(s0, s1)

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "wassknn", "run", "--suite", "bogus", "--seed", "1"], capture_output=True)
        assert res.returncode == 2


class TestSummarize:
    def test_counterexample_bayes_zero(self, tmp_path, capsys):
        p = tmp_path / "c.csv"
        p.write_text(cli.run(cli.build_config({"suite": "counterexample", "seed": "1", "n": "64,128", "trials": "3", "T": "100"})))
        plot = tmp_path / "plot.dat"
        code, out, _ = run_main(["summarize", str(p), "--plot", str(plot)], capsys)
        assert code == 0
        assert "bayes_risk" in out.splitlines()[0]
        assert all(float(line.split()[-1]) == 0.0 for line in out.splitlines()[1:])
        lines = plot.read_text().splitlines()
        assert [len(line.split()) for line in lines] == [2, 2]
        assert lines[0].split()[0] == "64"

    def test_single_trial_se_zero(self):
        text = "n,k,trial,risk,bayes_risk,config_hash,seed\n100,10,0,0.25,0.2,abc,1\n"
        assert cli.summarize(text) == [(100, 1, 0.25, 0.0, 0.2)]

    def test_empty_rows(self, tmp_path, capsys):
        p = tmp_path / "e.csv"
        p.write_text("n,k,trial,risk,bayes_risk,config_hash,seed\n")
        assert run_main(["summarize", str(p)], capsys)[0] == 1

    def test_malformed(self, tmp_path, capsys):
        p = tmp_path / "m.csv"
        p.write_text("n,risk\nten,0.1\n")
        assert run_main(["summarize", str(p)], capsys)[0] == 1
        p.write_text("a,b\n1,2\n")
        assert run_main(["summarize", str(p)], capsys)[0] == 1

    def test_missing_file(self, tmp_path, capsys):
        assert run_main(["summarize", str(tmp_path / "none.csv")], capsys)[0] == 1
