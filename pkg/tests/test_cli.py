import json
import subprocess
import sys
from pathlib import Path

import pytest

from ordguess.cli import RunConfig, main, parse_config_file
from ordguess.errors import ConfigError

TOY = Path(__file__).parent / "helpers" / "toy_adapter.py"


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def tiny_model(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("aa\nab\nab\nba\n")
    model = tmp_path / "model.ng"
    assert run_cli("train", "--corpus", str(corpus), "--order", "2",
                   "--smoothing", "0.05", "--out", str(model)) == 0
    return model


class TestClean:
    def test_rules_applied(self, tmp_path, capsys):
        raw = tmp_path / "raw.txt"
        raw.write_bytes(b"abcdef\nabc\nabcdef\x01\n")
        out = tmp_path / "clean.txt"
        assert run_cli("clean", "--in", str(raw), "--out", str(out)) == 0
        assert out.read_text() == "abcdef\n"
        stats = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert stats["removed_length"] == 1 and stats["removed_charset"] == 1
        assert "repetition_rate" in stats

    def test_empty_input(self, tmp_path, capsys):
        raw = tmp_path / "raw.txt"
        raw.write_text("")
        out = tmp_path / "clean.txt"
        assert run_cli("clean", "--in", str(raw), "--out", str(out)) == 0
        assert out.read_text() == ""
        stats = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert stats["total"] == 0

    def test_missing_input_is_io_error(self, tmp_path):
        assert run_cli("clean", "--in", str(tmp_path / "nope"), "--out", "") == 3


class TestSplit:
    def test_ratio_and_determinism(self, tmp_path):
        src = tmp_path / "pw.txt"
        src.write_text("".join(f"pw{i:06d}\n" for i in range(10)))
        t1, s1 = tmp_path / "tr1", tmp_path / "te1"
        t2, s2 = tmp_path / "tr2", tmp_path / "te2"
        assert run_cli("split", "--in", str(src), "--ratio", "0.8", "--seed", "3",
                       "--train", str(t1), "--test", str(s1)) == 0
        run_cli("split", "--in", str(src), "--ratio", "0.8", "--seed", "3",
                "--train", str(t2), "--test", str(s2))
        assert len(t1.read_text().splitlines()) == 8
        assert len(s1.read_text().splitlines()) == 2
        assert t1.read_text() == t2.read_text()
        merged = sorted(t1.read_text().splitlines() + s1.read_text().splitlines())
        assert merged == sorted(src.read_text().splitlines())


class TestTrain:
    def test_round_trip_byte_identical(self, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("abc\nabd\n")
        m1, m2 = tmp_path / "m1.ng", tmp_path / "m2.ng"
        assert run_cli("train", "--corpus", str(corpus), "--order", "3",
                       "--smoothing", "0.01", "--out", str(m1)) == 0
        run_cli("train", "--corpus", str(corpus), "--order", "3",
                "--smoothing", "0.01", "--out", str(m2))
        assert m1.read_bytes() == m2.read_bytes()

    def test_bad_order_is_usage_error(self, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("abc\n")
        assert run_cli("train", "--corpus", str(corpus), "--order", "9",
                       "--out", str(tmp_path / "m.ng")) == 2


class TestGenerate:
    def test_stream_matches_oracle_set(self, tiny_model, tmp_path, capsys):
        gen_out = tmp_path / "gen.txt"
        assert run_cli("generate", "--model", str(tiny_model), "--p-min", "1e-4",
                       "--min-len", "1", "--max-len", "3",
                       "--output", str(gen_out)) == 0
        meta = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        oracle_out = tmp_path / "oracle.txt"
        assert run_cli("oracle", "--model", str(tiny_model), "--p-min", "1e-4",
                       "--min-len", "1", "--max-len", "3",
                       "--output", str(oracle_out)) == 0
        generated = gen_out.read_text().splitlines()
        expected = oracle_out.read_text().splitlines()
        assert sorted(generated) == sorted(expected)
        assert len(set(generated)) == len(generated)
        assert meta["emitted"] == len(generated)
        assert meta["inferences"] > 0 and meta["peak_frontier"] > 0

    def test_no_packing_order_matches_oracle_exactly(self, tiny_model, tmp_path):
        gen_out = tmp_path / "gen.txt"
        run_cli("generate", "--model", str(tiny_model), "--p-min", "1e-4",
                "--min-len", "1", "--max-len", "3", "--no-packing",
                "--capacity-n", "100000", "--with-prob", "--output", str(gen_out))
        oracle_out = tmp_path / "oracle.txt"
        run_cli("oracle", "--model", str(tiny_model), "--p-min", "1e-4",
                "--min-len", "1", "--max-len", "3", "--with-prob",
                "--output", str(oracle_out))
        assert gen_out.read_text() == oracle_out.read_text()

    def test_p_min_one_empty_stream_clean_exit(self, tiny_model, tmp_path):
        out = tmp_path / "gen.txt"
        assert run_cli("generate", "--model", str(tiny_model), "--p-min", "1.0",
                       "--output", str(out)) == 0
        assert out.read_text() == ""

    def test_config_file_with_flag_precedence(self, tiny_model, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"model = {tiny_model}\np_min = 1.0\nmin_len = 1\nmax_len = 3\n"
            "capacity_n = 500  # inline comment\n")
        out = tmp_path / "gen.txt"
        # config alone: p_min=1.0 -> nothing
        assert run_cli("generate", "--config", str(cfg), "--output", str(out)) == 0
        assert out.read_text() == ""
        # flag overrides config
        assert run_cli("generate", "--config", str(cfg), "--p-min", "1e-4",
                       "--output", str(out)) == 0
        assert len(out.read_text().splitlines()) > 0

    def test_unknown_config_key(self, tiny_model, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"model = {tiny_model}\nbogus_knob = 3\n")
        assert run_cli("generate", "--config", str(cfg)) == 2

    def test_missing_model_file(self, tmp_path):
        assert run_cli("generate", "--model", str(tmp_path / "nope.ng"),
                       "--p-min", "0.1") == 3

    def test_corrupt_model_file(self, tmp_path):
        bad = tmp_path / "bad.ng"
        bad.write_text("ordguess-ngram 1\norder 2\nsmoothing 0.0\nrecords 5\n")
        assert run_cli("generate", "--model", str(bad), "--p-min", "0.1") == 4

    def test_broken_adapter_is_protocol_error(self, tmp_path):
        cmd = f"external:{sys.executable} {TOY} --mode badnorm"
        assert run_cli("generate", "--model", cmd, "--p-min", "0.01",
                       "--min-len", "1", "--max-len", "2") == 5

    def test_generate_over_adapter_matches_oracle(self, tmp_path):
        cmd = f"external:{sys.executable} {TOY}"
        gen_out, oracle_out = tmp_path / "g.txt", tmp_path / "o.txt"
        assert run_cli("generate", "--model", cmd, "--p-min", "5e-3",
                       "--min-len", "1", "--max-len", "3",
                       "--output", str(gen_out)) == 0
        assert run_cli("oracle", "--model", cmd, "--p-min", "5e-3",
                       "--min-len", "1", "--max-len", "3",
                       "--output", str(oracle_out)) == 0
        assert sorted(gen_out.read_text().splitlines()) == \
            sorted(oracle_out.read_text().splitlines())


class TestSample:
    def test_determinism_and_accounting(self, tiny_model, tmp_path, capsys):
        o1, o2 = tmp_path / "s1.txt", tmp_path / "s2.txt"
        assert run_cli("sample", "--model", str(tiny_model), "--count", "25",
                       "--seed", "9", "--max-len", "4", "--output", str(o1)) == 0
        meta = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        run_cli("sample", "--model", str(tiny_model), "--count", "25",
                "--seed", "9", "--max-len", "4", "--output", str(o2))
        assert o1.read_text() == o2.read_text()
        lines = o1.read_text().splitlines()
        assert len(lines) == 25
        assert meta["generated"] == 25
        assert meta["inferences"] == sum(len(pw) + 1 for pw in lines)
        assert meta["inferences_len_plus_one"] == meta["inferences"]


class TestEvaluate:
    def write(self, path, rows):
        path.write_text("".join(r + "\n" for r in rows))
        return path

    def test_cover_examples_file_level(self, tmp_path, capsys):
        cand = self.write(tmp_path / "c.txt", ["x", "y", "q"])
        test = self.write(tmp_path / "t.txt", ["x", "y", "z", "w"])
        train = self.write(tmp_path / "tr.txt", ["other"])
        assert run_cli("evaluate", "--candidates", str(cand), "--test", str(test),
                       "--train", str(train), "--json") == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["cover_rate"] == 50.0
        assert rep["hit_number"] == 2
        assert rep["effect_rate"] == pytest.approx(100 * 2 / 3)
        assert rep["hit_number"] <= rep["match_number"] <= rep["new_unique"]

    def test_table_output(self, tmp_path, capsys):
        cand = self.write(tmp_path / "c.txt", ["x"])
        test = self.write(tmp_path / "t.txt", ["x", "y"])
        train = self.write(tmp_path / "tr.txt", ["z"])
        assert run_cli("evaluate", "--candidates", str(cand), "--test", str(test),
                       "--train", str(train)) == 0
        out = capsys.readouterr().out
        assert "cover_rate" in out and "50.0" in out


class TestCompare:
    def test_capacity_mode(self, tiny_model, capsys):
        assert run_cli("compare", "--model", str(tiny_model), "--mode", "capacity",
                       "--capacities", "50,200", "--p-min", "1e-6",
                       "--min-len", "1", "--max-len", "4", "--json") == 0
        rows = json.loads(capsys.readouterr().out)
        assert {r["method"] for r in rows} == {"ucs", "ucs+prune", "ordered"}
        assert {r["capacity"] for r in rows} == {50, 200}

    def test_cover_mode_requires_inputs(self, tiny_model):
        assert run_cli("compare", "--model", str(tiny_model), "--mode", "cover") == 2


class TestOracle:
    def test_guard_exit_code(self, tiny_model):
        assert run_cli("oracle", "--model", str(tiny_model), "--p-min", "1e-30",
                       "--min-len", "1", "--max-len", "4",
                       "--visit-budget", "10") == 2


class TestSynth:
    def test_synth_then_clean_is_identity(self, tmp_path, capsys):
        out = tmp_path / "synth.txt"
        assert run_cli("synth", "--count", "300", "--seed", "4",
                       "--out", str(out)) == 0
        cleaned = tmp_path / "cleaned.txt"
        run_cli("clean", "--in", str(out), "--out", str(cleaned))
        assert cleaned.read_text() == out.read_text()


class TestRunConfig:
    def test_round_trip_through_file(self, tmp_path):
        cfg = RunConfig(p_min=3e-8, capacity_n=123, subsearches=4, packing=False,
                        model="m.ng", ladder="0.1,0.01", seed=9)
        path = tmp_path / "run.cfg"
        cfg.to_file(str(path))
        back = RunConfig.from_sources({}, str(path))
        assert back == cfg

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("capacity_n = lots\n")
        with pytest.raises(ConfigError):
            RunConfig.from_sources({}, str(path))

    def test_parse_config_file_syntax_error(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just a line\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(path))


class TestStreamingSubprocess:
    def test_partial_consumption_is_clean_and_duplicate_free(self, tiny_model):
        proc = subprocess.Popen(
            [sys.executable, "-m", "ordguess.cli", "generate",
             "--model", str(tiny_model), "--p-min", "1e-9",
             "--min-len", "1", "--max-len", "6"],
            stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True)
        lines = [proc.stdout.readline().strip() for _ in range(5)]
        proc.stdout.close()
        rc = proc.wait(timeout=30)
        assert rc == 0
        assert all(lines)
        assert len(set(lines)) == 5
