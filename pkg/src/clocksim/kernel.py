"""The trajectory loop: compute the kernel, sample, apply, update caches.

A trajectory is a pure function of (model, sampler, seed): uniform variates
come from one counted PCG64 stream per trajectory whose 128-bit state and
odd stream increment are splitmix64-derived from (seed, stream_index) (see
:func:`derived_generator`).  Ensembles give trajectory i stream index i, so
results are independent of execution order and worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import weakref
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import graph as depgraph
from .clocks import (
    DISABLED,
    UNCHANGED,
    Enabled,
    StateView,
    SystemState,
    apply_mark_inplace,
    evaluate_enabling,
)
from .errors import ModelError, Stalled
from .hazards import INF
from .samplers import EnablingDelta, make_sampler


class CountingStream:
    """Uniform variate source that counts what it hands out."""

    __slots__ = ("_random", "count")

    def __init__(self, rng):
        self._random = rng.random
        self.count = 0

    def uniform(self):
        self.count += 1
        return self._random()


_MASK64 = (1 << 64) - 1


def _mix64(x):
    # splitmix64 finalizer
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


_tl = threading.local()


def derived_generator(seed, index):
    """The uniform stream for trajectory `index` under base `seed`.

    A PCG64 stream: state = mix(seed) || mix(seed, index), increment =
    (mix(seed, index, salt) || mix(...)+1) | 1.  Distinct odd increments are
    PCG64's designed multi-stream mechanism, so trajectories get independent
    streams from a pure function of (seed, index).  The backing bit
    generator is reused per thread; the returned Generator is only valid
    until the next call on the same thread.
    """
    bg = getattr(_tl, "bitgen", None)
    if bg is None:
        bg = np.random.PCG64(0)
        _tl.bitgen = bg
        _tl.template = bg.state
    s0 = _mix64(seed ^ 0x243F6A8885A308D3)
    s1 = _mix64(s0 ^ index)
    i0 = _mix64(seed + 0x452821E638D01377 + index * 0x9E3779B97F4A7C15)
    i1 = _mix64(i0 + 1)
    st = dict(_tl.template)
    st["state"] = {"state": (s0 << 64) | s1, "inc": ((i0 << 64) | i1) | 1}
    st["has_uint32"] = 0
    st["uinteger"] = 0
    bg.state = st
    return np.random.Generator(bg)


STREAM_DERIVATION = "PCG64(state=splitmix64(seed,index), inc=splitmix64(seed,index,salt)|1)"


class EventRecord(NamedTuple):
    seq: int
    time: float
    clock: int


@dataclass(frozen=True)
class Trajectory:
    initial_state: SystemState
    events: tuple
    final_time: float
    rng_seed: int
    stream_index: int
    sampler: str
    variates_consumed: int


@dataclass(frozen=True)
class EndTime:
    t: float

    def __post_init__(self):
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ModelError(f"end time must be finite and >= 0, got {self.t}")


@dataclass(frozen=True)
class EventCount:
    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise ModelError(f"event count must be > 0, got {self.n}")


@dataclass(frozen=True)
class StalledOnly:
    pass


# Models are immutable; the dependency graph and id table are shared by
# every trajectory over the same model.
_MODEL_TABLES = {}


def _model_tables(model):
    key = id(model)
    entry = _MODEL_TABLES.get(key)
    if entry is not None and entry[0]() is model:
        return entry[1], entry[2]
    graph_ = depgraph.build(model.clocks)
    by_id = {c.id: c for c in model.clocks}
    _MODEL_TABLES[key] = (weakref.ref(model), graph_, by_id)
    return graph_, by_id


class Engine:
    """Mutable per-trajectory state: counts, hazard cache, sampler."""

    def __init__(self, model, sampler, stream, now=0.0):
        self.model = model
        self.graph, self._by_id = _model_tables(model)
        self.sampler = sampler
        self.stream = stream
        self.now = now
        self._counts = dict(model.initial_state.counts)
        self._changed = {}
        self._view = StateView(self._counts, self._changed)
        self._cache = {}
        enabled = {}
        for cid in sorted(self._by_id):
            out = evaluate_enabling(self._by_id[cid], self._view, now, DISABLED)
            if isinstance(out, Enabled):
                self._cache[cid] = out
                enabled[cid] = (out.spec, out.enabling_time)
            else:
                self._cache[cid] = DISABLED
        sampler.initialize(enabled, now, stream)

    def state(self) -> SystemState:
        return SystemState(dict(self._counts))

    def step(self, limit=None):
        """Fire the next event; returns (clock, time), or None if censored.

        Raises Stalled when no clock can ever fire.  The hazard cache is
        inconsistent only inside this call (the invariant-breaking update
        between applying the mark and absorbing the delta).
        """
        ev = self.sampler.next_event(self.now, self.stream)
        t = ev.time
        if t == INF:
            raise Stalled("sampler proposed an infinite time")
        if limit is not None and t > limit:
            return None
        if t <= self.now:
            # strictly increasing stopping times; ties are fp artifacts
            t = math.nextafter(self.now, INF)
        fired = ev.clock
        clock = self._by_id[fired]
        apply_mark_inplace(self._counts, clock.mark)
        for key in clock.mark.deltas:
            self._changed[key] = t
        delta = EnablingDelta(fired=fired)
        for cid in sorted(depgraph.affected(self.graph, fired)):
            c = self._by_id[cid]
            if cid == fired:
                raw = c.enabling(self._view, t)
                if raw is UNCHANGED:
                    prev = self._cache[cid]
                    raw = Enabled(prev.spec, None) if isinstance(prev, Enabled) else DISABLED
                if raw is DISABLED:
                    self._cache[cid] = DISABLED
                    delta.newly_disabled.append(cid)
                else:
                    # the fired clock regenerates: default anchor is now
                    te = raw.enabling_time if raw.enabling_time is not None else t
                    resolved = Enabled(raw.spec, te)
                    self._cache[cid] = resolved
                    delta.newly_enabled.append((cid, resolved.spec, te))
            else:
                prev = self._cache[cid]
                out = evaluate_enabling(c, self._view, t, prev)
                if out is UNCHANGED:
                    continue
                if out is DISABLED:
                    self._cache[cid] = DISABLED
                    delta.newly_disabled.append(cid)
                else:
                    self._cache[cid] = out
                    entry = (cid, out.spec, out.enabling_time)
                    if isinstance(prev, Enabled):
                        delta.modified.append(entry)
                    else:
                        delta.newly_enabled.append(entry)
        self.sampler.absorb(delta, t, self.stream)
        self.now = t
        return (fired, t)

    def cache_consistent(self) -> bool:
        """Debug sweep: every cached outcome matches a fresh evaluation."""
        for cid, clock in self._by_id.items():
            out = evaluate_enabling(clock, self._view, self.now, self._cache[cid])
            if out is not UNCHANGED:
                return False
        return True


def run_trajectory(model, sampler, seed, stop, stream_index=0) -> Trajectory:
    """One realization; deterministic given (model, sampler, seed, index).

    `sampler` is a name for :func:`clocksim.samplers.make_sampler` or an
    already-built sampler instance (exclusively owned by this call).
    """
    sampler_obj = make_sampler(sampler) if isinstance(sampler, str) else sampler
    sampler_name = sampler if isinstance(sampler, str) else getattr(sampler_obj, "name", "custom")
    stream = CountingStream(derived_generator(seed, stream_index))
    engine = Engine(model, sampler_obj, stream)
    limit = stop.t if isinstance(stop, EndTime) else None
    max_events = stop.n if isinstance(stop, EventCount) else None
    events = []
    final_time = engine.now
    while True:
        if max_events is not None and len(events) >= max_events:
            final_time = engine.now
            break
        try:
            res = engine.step(limit)
        except Stalled:
            final_time = limit if limit is not None else engine.now
            break
        if res is None:
            final_time = limit
            break
        fired, t = res
        events.append(EventRecord(seq=len(events), time=t, clock=fired))
    return Trajectory(
        initial_state=model.initial_state,
        events=tuple(events),
        final_time=final_time,
        rng_seed=seed,
        stream_index=stream_index,
        sampler=sampler_name,
        variates_consumed=stream.count,
    )


def run_ensemble(model, sampler, base_seed, count, stop) -> list:
    """Independent trajectories; trajectory i uses stream (base_seed, i)."""
    if count < 1:
        raise ModelError(f"count must be >= 1, got {count}")
    return [run_trajectory(model, sampler, base_seed, stop, stream_index=i) for i in range(count)]


def replay_states(model, trajectory):
    """Yield (time, SystemState) after each event, validating counts."""
    by_id = {c.id: c for c in model.clocks}
    counts = dict(trajectory.initial_state.counts)
    for ev in trajectory.events:
        apply_mark_inplace(counts, by_id[ev.clock].mark)
        yield ev.time, SystemState(dict(counts))


def final_state(model, trajectory) -> SystemState:
    state = trajectory.initial_state
    for _, state in replay_states(model, trajectory):
        pass
    return state


# -- serialization -------------------------------------------------------

def model_hash(model) -> str:
    """Stable hash of (name, params, initial state)."""
    doc = {
        "name": model.name,
        "params": model.params,
        "initial_state": model.initial_state.counts,
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_trajectory(fh, trajectory, model) -> None:
    """Tab-separated events with a #-header; times at 17 significant digits."""
    fh.write("# clocksim trajectory v1\n")
    fh.write(f"# model: {model.name}\n")
    fh.write(f"# params: {json.dumps(model.params, sort_keys=True)}\n")
    fh.write(f"# model_hash: {model_hash(model)}\n")
    fh.write(f"# initial_state: {json.dumps(model.initial_state.counts, sort_keys=True)}\n")
    fh.write(f"# sampler: {trajectory.sampler}\n")
    fh.write(f"# seed: {trajectory.rng_seed}\n")
    fh.write(f"# stream: {trajectory.stream_index}\n")
    fh.write(f"# final_time: {_fmt(trajectory.final_time)}\n")
    fh.write(f"# events: {len(trajectory.events)}\n")
    fh.write(f"# variates: {trajectory.variates_consumed}\n")
    fh.write("# columns: seq\ttime\tclock\n")
    for ev in trajectory.events:
        fh.write(f"{ev.seq}\t{_fmt(ev.time)}\t{ev.clock}\n")


@dataclass(frozen=True)
class TrajectoryFile:
    header: dict
    events: tuple
    path: str = ""


def read_trajectory(fh, path="") -> TrajectoryFile:
    header = {}
    events = []
    for line in fh:
        line = line.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                header[key.strip()] = value.strip()
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ModelError(f"malformed event line: {line!r}")
        events.append(EventRecord(seq=int(parts[0]), time=float(parts[1]), clock=int(parts[2])))
    return TrajectoryFile(header=header, events=tuple(events), path=path)
