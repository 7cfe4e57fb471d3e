import csv
import io
import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest
from jsonschema import Draft202012Validator

from sampled_card import cli

SCHEMAS = {
    name: json.loads(resources.files("sampled_card").joinpath(f"schemas/{name}.json").read_text())
    for name in ("estimate_report", "error", "analyze", "budget_split")
}


def validate(obj, schema):
    Draft202012Validator.check_schema(SCHEMAS[schema])
    Draft202012Validator(SCHEMAS[schema]).validate(obj)


def run(argv, capsys, stdin_bytes=None, monkeypatch=None):
    if stdin_bytes is not None:
        monkeypatch.setattr(sys, "stdin", io.TextIOWrapper(io.BytesIO(stdin_bytes)))
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, out


def run_json(argv, capsys, **kw):
    code, out = run(argv, capsys, **kw)
    return code, json.loads(out)


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_bytes(data)
    return str(p)


class TestEstimate:
    def test_hand_countable_stdin(self, capsys, monkeypatch):
        code, rep = run_json(["estimate", "--algorithm", "alg1", "--m", "16"], capsys,
                             stdin_bytes=b"a\nb\na\nc\n", monkeypatch=monkeypatch)
        assert code == 0
        assert rep["p0_hat"] == 0.5 and rep["sample_length"] == 4
        assert rep["n_hat"] == pytest.approx(2 * rep["n_s_hat"])
        validate(rep, "estimate_report")

    def test_distinct_tokens_naive(self, capsys, tmp_path):
        path = write(tmp_path, "tokens.txt", "".join(f"tok{i}\n" for i in range(10_000)).encode())
        code, rep = run_json(["estimate", path, "--algorithm", "naive", "--m", "1024"], capsys)
        assert code == 0 and abs(rep["n_hat"] / 10_000 - 1) <= 0.10

    def test_alg2_with_large_reservoir_matches_alg1(self, capsys, tmp_path):
        rng = np.random.default_rng(0)
        path = write(tmp_path, "s.txt", "".join(f"{x}\n" for x in rng.integers(0, 900, 3000)).encode())
        _, a = run_json(["estimate", path, "--algorithm", "alg1", "--m", "64", "--seed", "5"], capsys)
        _, b = run_json(["estimate", path, "--algorithm", "alg2", "--u", "5000", "--m", "64", "--seed", "5"], capsys)
        for key in ("n_hat", "n_s_hat", "p0_hat", "correction", "singletons", "doubletons", "sample_length", "seed"):
            assert a[key] == b[key]

    def test_binary_matches_ndjson_integers(self, capsys, tmp_path):
        vals = np.random.default_rng(1).integers(0, 2**63, size=5000, dtype=np.uint64)
        vals[::3] = vals[1::3][: vals[::3].size]
        b = write(tmp_path, "v.bin", vals.astype("<u8").tobytes())
        j = write(tmp_path, "v.ndjson", "".join(f"{int(v)}\n" for v in vals).encode())
        _, rb = run_json(["estimate", b, "--format", "binary-u64", "--m", "256"], capsys)
        _, rj = run_json(["estimate", j, "--format", "ndjson", "--m", "256"], capsys)
        assert rb == rj

    def test_ndjson_strings_match_text(self, capsys, tmp_path):
        toks = ["x", "y", "x", "zz", "y", "y", "q"]
        t = write(tmp_path, "t.txt", "\n".join(toks).encode())
        j = write(tmp_path, "t.ndjson", "\n".join(json.dumps(s) for s in toks).encode())
        assert run_json(["estimate", t, "--m", "16"], capsys)[1] == run_json(
            ["estimate", j, "--format", "ndjson", "--m", "16"], capsys)[1]

    def test_prediction_fields(self, capsys, tmp_path):
        path = write(tmp_path, "s.txt", b"a\na\nb\nc\nc\nc\n")
        _, rep = run_json(["estimate", path, "--m", "64", "--sampling-rate", "0.01",
                           "--freq-model", "uniform:100:10000"], capsys)
        assert rep["sampling_rate"] == 0.01 and rep["predicted_rel_variance"] > 0
        validate(rep, "estimate_report")

    def test_seed_env_matches_flag(self, capsys, tmp_path, monkeypatch):
        path = write(tmp_path, "s.txt", "".join(f"{i % 50}\n" for i in range(400)).encode())
        _, by_flag = run_json(["estimate", path, "--m", "16", "--seed", "77"], capsys)
        monkeypatch.setenv("SAMPLED_CARD_SEED", "77")
        _, by_env = run_json(["estimate", path, "--m", "16"], capsys)
        monkeypatch.delenv("SAMPLED_CARD_SEED")
        _, default = run_json(["estimate", path, "--m", "16"], capsys)
        assert by_flag == by_env
        assert by_flag["n_s_hat"] != default["n_s_hat"] or by_flag["seed"] != default["seed"]

    def test_deterministic(self, capsys, tmp_path):
        path = write(tmp_path, "s.txt", "".join(f"{i % 97}\n" for i in range(2000)).encode())
        argv = ["estimate", path, "--algorithm", "alg2", "--u", "30", "--m", "32", "--seed", "3"]
        assert run(argv, capsys) == run(argv, capsys)

    def test_empty_input(self, capsys, tmp_path):
        path = write(tmp_path, "empty.txt", b"\n\n")
        code, rep = run_json(["estimate", path], capsys)
        assert code == 4 and rep["error"] == "EmptySample"
        validate(rep, "error")

    def test_degenerate(self, capsys, tmp_path):
        path = write(tmp_path, "d.txt", b"a\nb\nc\n")
        code, rep = run_json(["estimate", path, "--m", "16"], capsys)
        assert code == 3 and rep["error"] == "DegenerateSample" and rep["singletons"] == 3
        validate(rep, "error")

    @pytest.mark.parametrize("argv", [
        ["estimate", "--algorithm", "alg3"],
        ["estimate", "--m", "100"],
        ["estimate", "--algorithm", "alg2"],
        ["estimate", "--algorithm", "alg2", "--u", "5"],
        ["estimate", "--sampling-rate", "1.5"],
        ["estimate", "--freq-model", "uniform:1:5"],
        ["estimate", "/nonexistent/file"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, argv, capsys):
        assert cli.main(argv) == 2

    def test_bad_seed_env(self, capsys, monkeypatch):
        monkeypatch.setenv("SAMPLED_CARD_SEED", "abc")
        assert cli.main(["estimate"]) == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "sampled_card", "estimate", "--m", "16"],
                              input=b"a\na\nb\n", capture_output=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["sample_length"] == 3
        proc = subprocess.run([sys.executable, "-m", "sampled_card", "estimate"], input=b"", capture_output=True)
        assert proc.returncode == 4


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSimulate:
    def test_table_1a(self, capsys):
        code, out = run(["simulate", "--table", "1a", "--trials", "200", "--seed", "7", "--fast"], capsys)
        rows = read_csv(out)
        assert code == 0 and len(rows) == 3
        assert round(float(rows[0]["analysis_var"]), 4) == 0.0200

    def test_table_4b_splits(self, capsys):
        _, out = run(["simulate", "--table", "4b", "--fast"], capsys)
        rows = [r for r in read_csv(out) if r["P"] == "0.001"]
        got = [(int(r["m_nominal"]), int(r["u"])) for r in rows]
        for (m, u), (pm, pu) in zip(got, [(72, 28), (363, 137), (724, 276)]):
            assert abs(m - pm) <= 3 and abs(u - pu) <= 3

    def test_intro_correction_raises_mean(self, capsys):
        _, out = run(["simulate", "--table", "intro", "--fast"], capsys)
        rows = {r["algorithm"]: float(r["mean_n_hat"]) for r in read_csv(out)}
        assert rows["alg1"] > rows["naive"]

    def test_deterministic(self, capsys):
        argv = ["simulate", "--table", "2b", "--fast", "--seed", "4"]
        assert run(argv, capsys) == run(argv, capsys)

    def test_unknown_table(self, capsys):
        assert cli.main(["simulate", "--table", "5"]) == 2


class TestAnalyze:
    def test_uniform_alg1(self, capsys):
        _, out = run_json(["analyze", "--freq-model", "uniform:100:10000", "--sampling-rate", "0.01",
                           "--m", "50", "--l", "505000"], capsys)
        assert round(out["rel_variance"], 4) == 0.0200
        validate(out, "analyze")

    def test_pareto_alg2(self, capsys):
        _, out = run_json(["analyze", "--freq-model", "pareto:1.1:500", "--sampling-rate", "0.01",
                           "--m", "1000", "--u", "1000"], capsys)
        assert round(out["rel_variance"], 4) == 0.0010
        validate(out, "analyze")

    def test_no_unseen_mass(self, capsys):
        _, out = run_json(["analyze", "--freq-model", "uniform:1000000:2000000", "--sampling-rate", "0.999999",
                           "--m", "64", "--l", "1000"], capsys)
        assert out["p0"] < 1e-12
        assert out["rel_variance"] == pytest.approx(1 / 64)

    def test_default_length(self, capsys):
        _, out = run_json(["analyze", "--freq-model", "uniform:100:10000", "--sampling-rate", "0.01",
                           "--m", "50"], capsys)
        assert out["l"] == pytest.approx(505_000, rel=1e-3)

    def test_u_and_l_exclusive(self, capsys):
        assert cli.main(["analyze", "--freq-model", "uniform:1:5", "--sampling-rate", "0.1", "--m", "4",
                         "--u", "3", "--l", "10"]) == 2


class TestOptimize:
    @pytest.mark.parametrize("budget, m, u", [(100, 72, 28), (1000, 724, 276)])
    def test_published(self, budget, m, u, capsys):
        code, out = run_json(["optimize", "--budget", str(budget), "--freq-model", "uniform:100:10000",
                              "--sampling-rate", "0.001"], capsys)
        assert code == 0 and abs(out["m"] - m) <= 3 and abs(out["u"] - u) <= 3
        validate(out, "budget_split")

    def test_budget_two(self, capsys):
        _, out = run_json(["optimize", "--budget", "2", "--freq-model", "uniform:100:10000",
                           "--sampling-rate", "0.001"], capsys)
        assert (out["m"], out["u"]) == (1, 1)
        validate(out, "budget_split")

    def test_infeasible(self, capsys):
        assert cli.main(["optimize", "--budget", "1", "--freq-model", "uniform:100:10000",
                         "--sampling-rate", "0.001"]) == 2


PEAK_RSS = (
    "import resource, sys\n"
    "from sampled_card import cli\n"
    "code = cli.main(sys.argv[1:])\n"
    "sys.stderr.write(str(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss))\n"
    "sys.exit(code)\n"
)


def peak_kib(argv):
    proc = subprocess.run([sys.executable, "-c", PEAK_RSS, *argv], capture_output=True)
    # an all-singleton baseline exits 3, which still exercises the full read path
    assert proc.returncode in (0, 3), proc.stderr
    return int(proc.stderr.decode().strip().splitlines()[-1])


@pytest.mark.slow
class TestConstantMemory:
    CEILING_KIB = 64 * 1024  # growth allowed over a 10^4-element run

    def test_text_lines(self, tmp_path):
        ids = np.random.default_rng(0).integers(0, 2**40, size=10**7)
        big = tmp_path / "big.txt"
        np.savetxt(big, ids, fmt="%d")
        small = tmp_path / "small.txt"
        np.savetxt(small, ids[:10**4], fmt="%d")
        args = ["estimate", "--algorithm", "alg2", "--u", "1000", "--m", "1024"]
        base = peak_kib(args + [str(small)])
        assert peak_kib(args + [str(big)]) - base < self.CEILING_KIB

    def test_binary_records(self, tmp_path):
        ids = np.random.default_rng(1).integers(0, 2**63, size=10**7, dtype=np.uint64)
        big = tmp_path / "big.bin"
        big.write_bytes(ids.astype("<u8").tobytes())
        small = tmp_path / "small.bin"
        small.write_bytes(ids[:10**4].astype("<u8").tobytes())
        args = ["estimate", "--algorithm", "alg2", "--u", "1000", "--m", "1024", "--format", "binary-u64"]
        base = peak_kib(args + [str(small)])
        assert peak_kib(args + [str(big)]) - base < self.CEILING_KIB
