"""Command-line front end: run models, verify, summarize trajectories.

Configuration comes from an optional YAML file plus flags (flags win); every
flag can also be set through the environment with the prefix CLOCKSIM_RUN_
(for run flags), per click's auto-envvar rules.  Exit codes: 0 success,
1 verification failure, 2 configuration/usage error, 3 a trajectory stalled
before producing any event under an event-count stop.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import multiprocessing
import os
import time
from dataclasses import asdict, dataclass, field

import click
import numpy as np
import yaml

from . import kernel, models, verify
from .errors import ClocksimError, ConfigError
from .samplers import make_sampler


@dataclass
class RunSpec:
    """Validated description of one `clocksim run` invocation."""

    model: str
    params: dict = field(default_factory=dict)
    sampler: str = "first-reaction"
    seed: int = 0
    trajectories: int = 1
    t_end: float | None = None
    max_events: int | None = None
    output: str = "out"
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "model" not in doc:
            raise ConfigError("missing required field 'model'")
        return cls(**doc)

    def stop(self):
        if self.t_end is not None and self.max_events is not None:
            raise ConfigError("give only one of t_end / max_events")
        if self.t_end is not None:
            return kernel.EndTime(self.t_end)
        if self.max_events is not None:
            return kernel.EventCount(self.max_events)
        return kernel.StalledOnly()

    def validate(self):
        if self.trajectories < 1:
            raise ConfigError(f"trajectories must be >= 1, got {self.trajectories}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        self.stop()
        try:
            make_sampler(self.sampler)
        except ClocksimError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            models.build(self.model, self.params)
        except ClocksimError as exc:
            raise ConfigError(f"model {self.model!r}: {exc}") from exc


def _parse_param_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _load_run_spec(config, overrides) -> RunSpec:
    doc = {}
    if config:
        try:
            with open(config) as fh:
                loaded = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{config}: top level must be a mapping")
        doc.update(loaded)
    params = dict(doc.get("params") or {})
    for item in overrides.pop("param", ()) or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param needs key=value, got {item!r}")
        params[key.strip()] = _parse_param_value(value.strip())
    doc["params"] = params
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    spec = RunSpec.from_dict(doc)
    spec.validate()
    return spec


def _run_one(cfg: dict, index: int):
    model = models.build(cfg["model"], cfg["params"])
    spec = RunSpec.from_dict(cfg)
    traj = kernel.run_trajectory(model, cfg["sampler"], cfg["seed"], spec.stop(), stream_index=index)
    path = os.path.join(cfg["output"], f"traj_{index:06d}.tsv")
    with open(path, "w") as fh:
        kernel.write_trajectory(fh, traj, model)
    return index, len(traj.events), traj.final_time, traj.variates_consumed


@click.group()
def cli():
    """Exact simulation of competing clock processes."""


@cli.command("run")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="YAML run spec; flags override file values.")
@click.option("--model", default=None, help="Built-in model name.")
@click.option("--param", multiple=True, help="Model parameter key=value (repeatable).")
@click.option("--sampler", default=None,
              help="first-reaction | next-reaction | next-to-fire | direct | hierarchical:<spec>")
@click.option("--seed", type=int, default=None)
@click.option("--trajectories", type=int, default=None)
@click.option("--t-end", type=float, default=None)
@click.option("--max-events", type=int, default=None)
@click.option("--output", type=click.Path(file_okay=False), default=None)
@click.option("--workers", type=int, default=None)
def cmd_run(config, model, param, sampler, seed, trajectories, t_end, max_events, output, workers):
    """Generate trajectory files and a manifest."""
    started = time.perf_counter()
    try:
        spec = _load_run_spec(config, {
            "model": model, "param": param, "sampler": sampler, "seed": seed,
            "trajectories": trajectories, "t_end": t_end, "max_events": max_events,
            "output": output, "workers": workers,
        })
    except (ConfigError, ClocksimError) as exc:
        raise click.UsageError(str(exc))
    os.makedirs(spec.output, exist_ok=True)
    cfg = spec.to_dict()
    results = []
    if spec.workers == 1:
        for i in range(spec.trajectories):
            results.append(_run_one(cfg, i))
    else:
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(spec.workers, mp_context=ctx) as pool:
            futures = [pool.submit(_run_one, cfg, i) for i in range(spec.trajectories)]
            results = [f.result() for f in futures]
    results.sort()
    built = models.build(spec.model, spec.params)
    manifest = {
        "model": spec.model,
        "params": spec.params,
        "model_hash": kernel.model_hash(built),
        "sampler": spec.sampler,
        "seed": spec.seed,
        "stream_derivation": kernel.STREAM_DERIVATION,
        "trajectories": spec.trajectories,
        "t_end": spec.t_end,
        "max_events": spec.max_events,
        "workers": spec.workers,
        "files": [f"traj_{i:06d}.tsv" for i, *_ in results],
        "events": {i: n for i, n, *_ in results},
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    with open(os.path.join(spec.output, "manifest.yaml"), "w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=True)
    click.echo(f"wrote {spec.trajectories} trajectories to {spec.output}")
    if spec.max_events is not None and any(n == 0 for _, n, *_ in results):
        click.echo("stalled before any event", err=True)
        raise SystemExit(3)


@cli.command("summarize")
@click.argument("files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--observable", type=click.Choice(["event-count", "final-state", "interarrival"]),
              default="event-count", show_default=True)
def cmd_summarize(files, observable):
    """Tabulate an observable over trajectory files (TSV on stdout)."""
    if not files:
        raise click.UsageError("no trajectory files given")
    parsed = []
    for path in sorted(files):
        try:
            with open(path) as fh:
                parsed.append(kernel.read_trajectory(fh, path=path))
        except (ClocksimError, ValueError) as exc:
            raise click.UsageError(f"{path}: {exc}")
    if observable == "event-count":
        click.echo("file\tevents")
        for tf in parsed:
            click.echo(f"{tf.path}\t{len(tf.events)}")
        return
    if observable == "interarrival":
        click.echo("interarrival")
        for tf in parsed:
            prev = 0.0
            for ev in tf.events:
                click.echo("%.17g" % (ev.time - prev))
                prev = ev.time
        return
    # final-state: pooled histogram over replayed final states
    hist = {}
    for tf in parsed:
        try:
            model = models.build(tf.header["model"], json.loads(tf.header.get("params", "{}")))
            counts = dict(json.loads(tf.header.get("initial_state", "{}")))
            by_id = {c.id: c for c in model.clocks}
            from .clocks import apply_mark_inplace

            for ev in tf.events:
                apply_mark_inplace(counts, by_id[ev.clock].mark)
        except (ClocksimError, KeyError, ValueError) as exc:
            raise click.UsageError(f"{tf.path}: cannot replay ({exc})")
        key = json.dumps(dict(sorted(counts.items())), sort_keys=True)
        hist[key] = hist.get(key, 0) + 1
    click.echo("final_state\tcount")
    for key in sorted(hist):
        click.echo(f"{key}\t{hist[key]}")


# -- verification suites ------------------------------------------------------


def _suite_distributions():
    from . import hazards

    matrix = [
        ("exponential:1", None),
        ("exponential:0.5@1,0.3", None),
        ("weibull:2,1", None),
        ("weibull:0.7,2", None),
        ("gamma:2,3", None),
        ("uniform:0.5,2", None),
        ("piecewise:0,1,2|0.5,0,2", None),
        ("none@1,0.25;2,0.5", None),
    ]
    rows = []
    for text, _ in matrix:
        spec = models.parse_hazard(text)
        ts = np.linspace(0.01, 4.0, 101)
        worst = 0.0
        for t in ts:
            s = hazards.survival(spec, float(t))
            via_tp = math.exp(-hazards.time_process(spec, 0.0, float(t)))
            if s > 1e-300:
                worst = max(worst, abs(s - via_tp) / s)
        worst_rt = 0.0
        for t in ts:
            s = hazards.survival(spec, float(t))
            if s <= 1e-12 or s >= 1.0:
                continue
            t_back = hazards.invert_conditional(spec, 0.0, math.log(s))
            if abs(t_back - t) > 1e-9 * t:
                # a tie inside a flat segment or at an atom is consistent iff
                # no hazard was consumed between the two answers
                gap = hazards.time_process(spec, min(t, t_back), max(t, t_back))
                if gap > 1e-9:
                    worst_rt = math.inf
            else:
                worst_rt = max(worst_rt, abs(t_back - t) / t)
        ok = worst < 1e-10 and worst_rt < 1e-9
        rows.append((f"distributions {text}", f"sup-rel {worst:.2e} rt {worst_rt:.2e}", ok))
    return rows


def _first_events(model, sampler_name, n, seed):
    times = []
    marks = {}
    stop = kernel.StalledOnly()
    for i in range(n):
        traj = kernel.run_trajectory(model, sampler_name, seed, stop, stream_index=i)
        if traj.events:
            times.append(traj.events[0].time)
            for ev in traj.events:
                marks[ev.clock] = marks.get(ev.clock, 0) + 1
    return times, marks


def _suite_equivalence(n=20_000):
    model = models.build("sir", {"n": 3, "initial_infected": 1})
    base_times, base_marks = _first_events(model, "first-reaction", n, seed=101)
    rows = []
    all_clocks = sorted({c.id for c in model.clocks})
    for name in ("next-reaction", "next-to-fire", "direct"):
        times, marks = _first_events(model, name, n, seed=101)
        _, p_ks = verify.ks_two_sample(base_times, times)
        va = [base_marks.get(c, 0) for c in all_clocks]
        vb = [marks.get(c, 0) for c in all_clocks]
        _, p_chi = verify.chi_square_homogeneity(va, vb)
        ok = p_ks > 0.01 and p_chi > 0.01
        rows.append((f"equivalence {name} vs first-reaction",
                     f"KS p {p_ks:.3f} chi2 p {p_chi:.3f}", ok))
    return rows


def _suite_oracle():
    rows = []
    model = models.build("atomic-showcase", {})
    n = 4000
    trajs = kernel.run_ensemble(model, "direct", 7, n, kernel.StalledOnly())
    b_fired = sum(1 for t in trajs if t.events and t.events[0].clock == 1)
    emp = b_fired / n
    total_sf, cifs = verify.cif_numeric(
        [(models.parse_hazard("exponential:%r" % math.log(2.0)), 0.0),
         (models.parse_hazard("none@1,0.5"), 0.0)],
        grid_step=1e-3, horizon=3.0,
    )
    cif_b = cifs[1].final
    ok = abs(emp - 0.25) < 0.02 and abs(cif_b - 0.25) < 1e-3
    rows.append(("oracle atomic-showcase P(B)", f"empirical {emp:.4f} cif {cif_b:.6f}", ok))

    bd = models.build("birth-death", {"birth": 1.0, "death": 1.0, "x0": 1, "capacity": 30})
    horizon = 1.0
    trajs = kernel.run_ensemble(bd, "next-reaction", 11, 4000, kernel.EndTime(horizon))
    emp_occ = verify.occupancy_from_trajectories(bd, trajs)
    oracle = verify.ctmc_oracle(bd, horizon)
    tv = verify.total_variation(emp_occ, oracle)
    rows.append(("oracle birth-death occupancy", f"TV {tv:.4f}", tv < 0.03))
    return rows


_SUITES = {
    "distributions": lambda: _suite_distributions(),
    "sampler-equivalence": lambda: _suite_equivalence(),
    "oracle": lambda: _suite_oracle(),
}


@cli.command("verify")
@click.argument("suite")
def cmd_verify(suite):
    """Run a verification suite: distributions | sampler-equivalence | oracle | all."""
    if suite == "all":
        names = list(_SUITES)
    elif suite in _SUITES:
        names = [suite]
    else:
        raise click.UsageError(f"unknown suite {suite!r}; valid: {', '.join([*_SUITES, 'all'])}")
    rows = []
    for name in names:
        rows.extend(_SUITES[name]())
    width = max(len(r[0]) for r in rows)
    failed = 0
    for label, stats, ok in rows:
        status = "PASS" if ok else "FAIL"
        failed += 0 if ok else 1
        click.echo(f"{label.ljust(width)}  {stats}  {status}")
    if failed:
        click.echo(f"{failed} check(s) failed", err=True)
        raise SystemExit(1)


def main():
    cli(auto_envvar_prefix="CLOCKSIM")


if __name__ == "__main__":
    main()
