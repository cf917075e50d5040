import io
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from bayesic import cli
from bayesic.criteria import bpic, dic, wbic
from bayesic.models import GeometricModel, LaplaceModel, NormalModel, ObservedSample
from bayesic.posterior import power_posterior
from bayesic.simulate import RunRecord

HEADER = "experiment,model,criterion,schedule,theta0,alpha,beta,n,replicate,seed,value,limit,abs_error"


def run(*args, env=None, cwd=None):
    full_env = {k: v for k, v in os.environ.items() if k != cli.SEED_ENV}
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "bayesic", *args], capture_output=True, text=True, env=full_env, cwd=cwd
    )


def _inline(argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    env = {} if environ is None else environ
    old = dict(os.environ)
    os.environ.pop(cli.SEED_ENV, None)
    os.environ.update(env)
    try:
        code = cli.main(argv, stdout=out, stderr=err)
    finally:
        os.environ.clear()
        os.environ.update(old)
    return code, out.getvalue(), err.getvalue()


class TestParseArgs:
    def test_simulate_seed(self):
        inv = cli.parse_args(["simulate", "dic-geometric", "--seed", "42"], environ={})
        assert inv.config.kind == "dic-geometric" and inv.config.seed == 42

    def test_two_schedules(self):
        inv = cli.parse_args(["simulate", "wbic-normal", "--schedules", "inv-log-n,inv-n"], environ={})
        assert [s.value for s in inv.config.schedules] == ["inv-log-n", "inv-n"]

    def test_env_seed_default(self):
        inv = cli.parse_args(["simulate", "laplace"], environ={cli.SEED_ENV: "17"})
        assert inv.config.seed == 17

    def test_flag_beats_config_beats_env(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# manifest\nseed = 5\nreplicates = 3  # trailing\nn-grid = 10,100\n")
        inv = cli.parse_args(["simulate", "wbic-normal", "--config", str(cfg)], environ={cli.SEED_ENV: "9"})
        assert (inv.config.seed, inv.config.replicates, inv.config.n_grid) == (5, 3, (10, 100))
        inv = cli.parse_args(["simulate", "wbic-normal", "--config", str(cfg), "--seed", "1"], environ={})
        assert inv.config.seed == 1

    def test_consistency_subcommand(self):
        inv = cli.parse_args(["consistency", "--eps", "0.05,0.1", "--gibbs"], environ={})
        assert inv.config.kind == "consistency" and inv.config.eps == (0.05, 0.1) and inv.config.gibbs

    def test_theta0_per_kind(self):
        inv = cli.parse_args(["simulate", "laplace", "--theta0", "0.5,2"], environ={})
        assert (inv.config.laplace_mu, inv.config.laplace_b) == (0.5, 2.0)
        inv = cli.parse_args(["simulate", "wbic-normal", "--theta0", "3"], environ={})
        assert inv.config.normal_theta0 == 3.0

    def test_config_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = blue\n")
        with pytest.raises(cli.UsageError, match="unknown setting"):
            cli.parse_args(["simulate", "laplace", "--config", str(cfg)], environ={})


class TestExitCodes:
    def test_help(self):
        r = run("--help")
        assert r.returncode == 0 and "simulate" in r.stdout

    def test_unknown_subcommand(self):
        assert run("bogus").returncode == 2

    def test_unknown_flag(self):
        assert run("limits", "--model", "geometric", "--colour", "red").returncode == 2

    def test_invalid_value_names_flag(self):
        r = run("simulate", "wbic-normal", "--replicates", "zero")
        assert r.returncode == 2 and "--replicates" in r.stderr

    def test_invalid_schedule(self):
        r = run("simulate", "wbic-normal", "--schedules", "inv-cube-n")
        assert r.returncode == 2 and "--schedules" in r.stderr

    def test_bad_env_seed(self):
        r = run("simulate", "laplace", env={cli.SEED_ENV: "minus-one"})
        assert r.returncode == 2 and cli.SEED_ENV in r.stderr

    def test_config_error_is_usage(self):
        r = run("simulate", "dic-geometric", "--n-grid", "100,10")
        assert r.returncode == 2 and "increasing" in r.stderr

    def test_missing_data_file(self, tmp_path):
        r = run("criteria", "--model", "geometric", "--data", str(tmp_path / "nope.csv"))
        assert r.returncode == 1

    def test_unwritable_output(self, tmp_path):
        r = run("limits", "--model", "laplace", "--params", "gamma0=1", "--out", str(tmp_path / "no" / "x.csv"))
        assert r.returncode == 1

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        assert run("criteria", "--model", "geometric", "--data", str(p)).returncode == 1

    def test_bad_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("-1\n")
        r = run("criteria", "--model", "geometric", "--data", str(p))
        assert r.returncode == 1 and "row 1" in r.stderr

    def test_success(self, tmp_path):
        out = tmp_path / "run.csv"
        r = run("simulate", "wbic-normal", "--n-grid", "10,100", "--replicates", "1", "--out", str(out))
        assert r.returncode == 0 and r.stdout == ""
        assert out.read_text().splitlines()[0] == HEADER


class TestIngest:
    def test_geometric(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("0\n3\n1\n")
        s = cli.ingest_csv(str(p), "geometric")
        assert s.n == 3
        np.testing.assert_allclose(s.xbar, 4 / 3)

    def test_normal_two_columns(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text("1.0,2.0\n0.0,0.0\n")
        s = cli.ingest_csv(str(p), "normal")
        assert (s.n, s.dim) == (2, 2)

    def test_header_flag(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("x\n2\n4\n")
        assert cli.ingest_csv(str(p), "geometric", header=True).xbar == 3.0
        with pytest.raises(cli.InputError, match="row 1"):
            cli.ingest_csv(str(p), "geometric")

    @pytest.mark.parametrize(
        "text, row",
        [("-1\n", 1), ("1\n2\nabc\n", 3), ("0\n1.5\n", 2), ("1\n2,3\n", 2)],
    )
    def test_errors_name_row(self, tmp_path, text, row):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(cli.InputError, match=f"row {row}"):
            cli.ingest_csv(str(p), "geometric")

    def test_ragged_normal(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(cli.InputError, match="row 2"):
            cli.ingest_csv(str(p), "normal")


class TestEmit:
    def _record(self, **kw):
        base = dict(experiment="dic-geometric", model="geometric", criterion="DIC-exact", schedule="-",
                    theta0="0.1", alpha=1.0, beta=None, n=100, replicate=3, seed=2**63 + 5,
                    value=math.pi / 7, limit=6.501659467828965)
        base.update(kw)
        return RunRecord(**base)

    def test_empty_is_header_only(self):
        buf = io.StringIO()
        cli.emit_records([], stdout=buf)
        assert buf.getvalue() == HEADER + "\n"

    def test_round_trip_bitwise(self):
        rec = self._record(value=0.1 + 0.2)
        (row,) = cli.parse_records(cli.format_records([rec]))
        for key in ("value", "limit", "abs_error"):
            assert row[key] == getattr(rec, key)
        assert row["beta"] is None and row["alpha"] == 1.0
        assert (row["n"], row["replicate"], row["seed"]) == (100, 3, 2**63 + 5)

    def test_lf_and_precision(self):
        text = cli.format_records([self._record()])
        assert "\r" not in text
        value_field = text.splitlines()[1].split(",")[10]
        assert value_field == format(math.pi / 7, ".17g")


class TestCommands:
    def test_criteria_matches_library_geometric(self, tmp_path):
        x = np.random.default_rng(1).integers(0, 8, 40)
        p = tmp_path / "g.csv"
        p.write_text("".join(f"{v}\n" for v in x))
        code, out, _ = _inline(["criteria", "--model", "geometric", "--data", str(p), "--alpha", "2", "--beta", "3"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "criterion,n,beta_n,method,value"
        got = {ln.split(",")[0]: float(ln.split(",")[4]) for ln in lines[1:]}
        model, s = GeometricModel(2, 3), ObservedSample.geometric(x)
        post = power_posterior(model, s, 1.0)
        assert abs(got["DIC"] - dic(model, s, post).value) <= 1e-12
        assert abs(got["BPIC"] - bpic(model, s, post).value) <= 1e-12
        assert abs(got["WBIC"] - wbic(model, s, "inv-log-n").value) <= 1e-12

    def test_criteria_normal_schedule_and_rescale(self, tmp_path):
        x = np.random.default_rng(2).normal(size=(25, 2))
        p = tmp_path / "n.csv"
        p.write_text("".join(f"{float(a)!r},{float(b)!r}\n" for a, b in x))
        code, out, _ = _inline(["criteria", "--model", "normal", "--data", str(p), "--schedule", "inv-sqrt-n",
                                "--prior-mean", "0.5,0.5", "--rescale-n"])
        assert code == 0
        got = {ln.split(",")[0]: float(ln.split(",")[4]) for ln in out.splitlines()[1:]}
        model = NormalModel((0.5, 0.5))
        expected = wbic(model, ObservedSample(x), "inv-sqrt-n").rescaled()
        assert abs(got["WBIC"] - expected) <= 1e-12 * abs(expected)

    def test_criteria_laplace(self, tmp_path):
        x = np.random.default_rng(3).laplace(size=60)
        p = tmp_path / "l.csv"
        p.write_text("".join(f"{float(v)!r}\n" for v in x))
        code, out, _ = _inline(["criteria", "--model", "laplace", "--data", str(p), "--nodes", "64",
                                "--schedule", "0.5"])
        assert code == 0
        got = {ln.split(",")[0]: ln.split(",") for ln in out.splitlines()[1:]}
        assert got["WBIC"][2] == "0.5" and got["WBIC"][3] == "Quadrature"
        expected = wbic(LaplaceModel(), ObservedSample(x), 0.5, method="grid", nodes_per_axis=(64, 64)).value
        assert abs(float(got["WBIC"][4]) - expected) <= 1e-12

    def test_criteria_needs_model(self, tmp_path):
        code, _, err = _inline(["criteria", "--data", "x.csv"])
        assert code == 2 and "--model" in err

    @pytest.mark.parametrize(
        "model, params, expected",
        [
            ("geometric", "theta0=0.5", 4 * math.log(2)),
            ("geometric", "ex=9", 6.501659467828964790),
            ("normal", "mean=1", math.log(2 * math.pi) + 1),
            ("normal", "p=3,e_norm_sq=3,norm_e_sq=0", 3 * math.log(2 * math.pi) + 3),
            ("laplace", "gamma0=0.5", 2.0),
        ],
    )
    def test_limits(self, model, params, expected):
        code, out, _ = _inline(["limits", "--model", model, "--params", params])
        assert code == 0
        name, value = out.splitlines()[1].split(",")
        assert name == model
        np.testing.assert_allclose(float(value), expected, rtol=1e-14)

    def test_limits_bad_params(self):
        assert _inline(["limits", "--model", "geometric", "--params", "ex=-1"])[0] == 2
        assert _inline(["limits", "--model", "normal", "--params", "bogus"])[0] == 2

    def test_simulate_summary(self):
        code, out, _ = _inline(["simulate", "wbic-normal", "--n-grid", "10,100", "--replicates", "3",
                                "--schedules", "one", "--summary"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("experiment,model,criterion,schedule,n,count")
        assert len(lines) == 3 and lines[1].split(",")[5] == "3"

    def test_simulate_rescale(self):
        args = ["simulate", "wbic-normal", "--n-grid", "10", "--replicates", "1", "--schedules", "one"]
        plain = _inline(args)[1].splitlines()[1].split(",")
        scaled = _inline(args + ["--rescale-n"])[1].splitlines()[1].split(",")
        np.testing.assert_allclose(float(scaled[10]), 5 * float(plain[10]), rtol=1e-15)

    def test_simulate_env_seed_applies(self):
        args = ["simulate", "wbic-normal", "--n-grid", "10", "--replicates", "1"]
        a = _inline(args, {cli.SEED_ENV: "3"})[1]
        b = _inline(args + ["--seed", "3"])[1]
        c = _inline(args)[1]
        assert a == b and a != c
