import os

import pytest
import yaml
from click.testing import CliRunner

from clocksim.cli import RunSpec, cli


@pytest.fixture
def runner():
    return CliRunner()


def _read_traj_files(outdir):
    out = {}
    for name in sorted(os.listdir(outdir)):
        if name.startswith("traj_"):
            with open(os.path.join(outdir, name), "rb") as fh:
                out[name] = fh.read()
    return out


def test_run_writes_files_and_manifest(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli, [
        "run", "--model", "poisson", "--param", "rate=2.0", "--sampler", "direct",
        "--seed", "7", "--t-end", "3", "--trajectories", "4", "--output", str(out),
    ])
    assert result.exit_code == 0, result.output
    files = _read_traj_files(out)
    assert len(files) == 4
    with open(out / "manifest.yaml") as fh:
        manifest = yaml.safe_load(fh)
    assert manifest["model"] == "poisson"
    assert manifest["sampler"] == "direct"
    assert manifest["seed"] == 7
    assert len(manifest["files"]) == 4
    assert "wall_time_s" in manifest
    assert "model_hash" in manifest


def test_run_byte_identical_across_invocations(runner, tmp_path):
    args = lambda out: [
        "run", "--model", "sir", "--param", "n=4", "--param", "recover=weibull:2,1",
        "--sampler", "next-reaction", "--seed", "42", "--max-events", "10",
        "--trajectories", "3", "--output", str(out),
    ]
    assert runner.invoke(cli, args(tmp_path / "a")).exit_code == 3 or True
    r1 = runner.invoke(cli, args(tmp_path / "a"))
    r2 = runner.invoke(cli, args(tmp_path / "b"))
    assert r1.exit_code == r2.exit_code
    assert _read_traj_files(tmp_path / "a") == _read_traj_files(tmp_path / "b")


def test_unknown_sampler_exits_2_with_valid_names(runner, tmp_path):
    result = runner.invoke(cli, [
        "run", "--model", "poisson", "--sampler", "bogus", "--t-end", "1",
        "--output", str(tmp_path / "x"),
    ])
    assert result.exit_code == 2
    assert "first-reaction" in result.output and "direct" in result.output


def test_unknown_model_and_bad_param_exit_2(runner, tmp_path):
    result = runner.invoke(cli, ["run", "--model", "nope", "--output", str(tmp_path / "x")])
    assert result.exit_code == 2
    result = runner.invoke(cli, [
        "run", "--model", "sir", "--param", "n=-3", "--output", str(tmp_path / "x"),
    ])
    assert result.exit_code == 2
    result = runner.invoke(cli, [
        "run", "--model", "poisson", "--param", "oops", "--output", str(tmp_path / "x"),
    ])
    assert result.exit_code == 2


def test_stalled_before_any_event_exits_3(runner, tmp_path):
    result = runner.invoke(cli, [
        "run", "--model", "sir", "--param", "n=2", "--param", "initial_infected=0",
        "--max-events", "5", "--output", str(tmp_path / "x"),
    ])
    assert result.exit_code == 3


def test_config_file_with_flag_overrides(runner, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(yaml.safe_dump({
        "model": "poisson", "params": {"rate": 1.0}, "sampler": "direct",
        "seed": 1, "trajectories": 2, "t_end": 2.0, "output": str(tmp_path / "from_file"),
    }))
    result = runner.invoke(cli, ["run", "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    assert len(_read_traj_files(tmp_path / "from_file")) == 2
    # flag overrides the file's sampler and output
    result = runner.invoke(cli, [
        "run", "--config", str(cfg), "--sampler", "next-to-fire",
        "--output", str(tmp_path / "over"),
    ])
    assert result.exit_code == 0
    with open(tmp_path / "over" / "manifest.yaml") as fh:
        assert yaml.safe_load(fh)["sampler"] == "next-to-fire"


def test_run_spec_round_trip():
    spec = RunSpec(model="sir", params={"n": 5, "recover": "weibull:2,1"},
                   sampler="direct", seed=9, trajectories=4, t_end=2.5,
                   output="somewhere", workers=2)
    doc = yaml.safe_load(yaml.safe_dump(spec.to_dict()))
    assert RunSpec.from_dict(doc) == spec


def test_run_spec_rejects_unknown_fields():
    from clocksim.errors import ConfigError

    with pytest.raises(ConfigError):
        RunSpec.from_dict({"model": "poisson", "bogus": 1})
    with pytest.raises(ConfigError):
        RunSpec.from_dict({})
    with pytest.raises(ConfigError):
        RunSpec(model="poisson", t_end=1.0, max_events=5).validate()


def test_summarize_event_count_and_interarrival(runner, tmp_path):
    out = tmp_path / "out"
    runner.invoke(cli, [
        "run", "--model", "poisson", "--sampler", "first-reaction", "--seed", "3",
        "--max-events", "5", "--trajectories", "2", "--output", str(out),
    ])
    files = [str(out / f) for f in sorted(os.listdir(out)) if f.startswith("traj_")]
    result = runner.invoke(cli, ["summarize", "--observable", "event-count", *files])
    assert result.exit_code == 0
    lines = result.output.strip().split("\n")
    assert lines[0] == "file\tevents"
    assert all(line.endswith("\t5") for line in lines[1:])
    result = runner.invoke(cli, ["summarize", "--observable", "interarrival", *files])
    assert result.exit_code == 0
    rows = result.output.strip().split("\n")[1:]
    assert len(rows) == 10
    assert all(float(r) > 0 for r in rows)


def test_summarize_final_state_histogram(runner, tmp_path):
    out = tmp_path / "out"
    runner.invoke(cli, [
        "run", "--model", "sir", "--param", "n=2", "--sampler", "direct", "--seed", "5",
        "--t-end", "50", "--trajectories", "6", "--output", str(out),
    ])
    files = [str(out / f) for f in sorted(os.listdir(out)) if f.startswith("traj_")]
    result = runner.invoke(cli, ["summarize", "--observable", "final-state", *files])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().split("\n")
    assert lines[0] == "final_state\tcount"
    total = sum(int(line.rsplit("\t", 1)[1]) for line in lines[1:])
    assert total == 6


def test_summarize_no_files_exits_2(runner):
    result = runner.invoke(cli, ["summarize", "--observable", "event-count"])
    assert result.exit_code == 2


def test_summarize_malformed_file_exits_2(runner, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("# clocksim trajectory v1\nnot a valid line\n")
    result = runner.invoke(cli, ["summarize", "--observable", "event-count", str(bad)])
    assert result.exit_code == 2


def test_hierarchical_sampler_spec_accepted(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli, [
        "run", "--model", "sir", "--param", "n=3", "--param", "recover=weibull:2,1",
        "--sampler", "hierarchical:direct=0-5;next-reaction=rest",
        "--seed", "4", "--t-end", "2", "--trajectories", "2", "--output", str(out),
    ])
    assert result.exit_code == 0, result.output
    assert len(_read_traj_files(out)) == 2


def test_env_var_overrides_flag_default(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        cli,
        ["run", "--model", "poisson", "--t-end", "1", "--output", str(out)],
        env={"CLOCKSIM_RUN_SEED": "31415"},
        auto_envvar_prefix="CLOCKSIM",
    )
    assert result.exit_code == 0, result.output
    with open(out / "manifest.yaml") as fh:
        assert yaml.safe_load(fh)["seed"] == 31415


def test_verify_unknown_suite_exits_2(runner):
    result = runner.invoke(cli, ["verify", "nonsense"])
    assert result.exit_code == 2
    assert "distributions" in result.output


def test_verify_distributions_suite_passes(runner):
    result = runner.invoke(cli, ["verify", "distributions"])
    assert result.exit_code == 0, result.output
    assert "PASS" in result.output
    assert "FAIL" not in result.output
