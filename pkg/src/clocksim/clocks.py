"""Clock processes and the discrete system state they increment.

A clock is declared by its enabling rule, its jump mark, and the substates
it reads.  The enabling rule is a pure function of a :class:`StateView`
(current counts plus the time each substate last changed) and the current
time; it answers "can this clock fire, and with what hazard, measured from
when".  The kernel compares successive answers and collapses identical ones
to :data:`UNCHANGED`, so rules may be re-evaluated freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import NegativeSubstate
from .hazards import HazardSpec

ClockId = int
SubstateKey = str


@dataclass(frozen=True)
class SystemState:
    """Sparse integer counts over substate keys; zero entries are absent."""

    counts: Mapping[SubstateKey, int] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {k: int(v) for k, v in self.counts.items() if int(v) != 0}
        object.__setattr__(self, "counts", cleaned)

    def count(self, key: SubstateKey) -> int:
        return self.counts.get(key, 0)

    def __eq__(self, other):
        if not isinstance(other, SystemState):
            return NotImplemented
        return self.counts == other.counts


@dataclass(frozen=True)
class JumpMark:
    """Sparse integer increment applied to the state when a clock fires."""

    deltas: Mapping[SubstateKey, int]

    def __post_init__(self):
        cleaned = {k: int(v) for k, v in self.deltas.items() if int(v) != 0}
        object.__setattr__(self, "deltas", cleaned)

    def support(self) -> frozenset:
        return frozenset(self.deltas)


class _DisabledType:
    """Singleton enabling outcome: the clock cannot fire."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Disabled"


class _UnchangedType:
    """Singleton outcome: identical hazard and enabling time as last query."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UnchangedSinceLastQuery"


DISABLED = _DisabledType()
UNCHANGED = _UnchangedType()


@dataclass(frozen=True)
class Enabled:
    """The clock can fire with the given hazard, measured from enabling_time.

    enabling_time=None anchors the hazard at the moment the clock (re)became
    enabled; the kernel resolves it to the previous anchor while the clock
    stays enabled, or to the current time on a fresh enable.  Models that
    anchor at a past jump (rabbits: the last meal) return an explicit time.
    """

    spec: HazardSpec
    enabling_time: float | None = None


class StateView:
    """Read access to the current counts and per-substate last-change times.

    changed_at(key) is the most recent stopping time at which the count of
    `key` changed (0.0 if never) -- the T_k of intensities of the restricted
    form lambda(t, X(T_k), T_k).
    """

    __slots__ = ("_counts", "_changed")

    def __init__(self, counts: Mapping[SubstateKey, int], changed: Mapping[SubstateKey, float]):
        self._counts = counts
        self._changed = changed

    def count(self, key: SubstateKey) -> int:
        return self._counts.get(key, 0)

    def changed_at(self, key: SubstateKey) -> float:
        return self._changed.get(key, 0.0)

    def counts_snapshot(self) -> SystemState:
        return SystemState(dict(self._counts))


@dataclass(frozen=True)
class ClockSpec:
    """One clock process: enabling rule, jump mark, and declared reads.

    The enabling callable must depend only on substates in `reads` and be
    deterministic given (view, time).
    """

    id: ClockId
    enabling: Callable[[StateView, float], object]
    mark: JumpMark
    reads: frozenset
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "reads", frozenset(self.reads))


def apply_mark(state: SystemState, mark: JumpMark) -> SystemState:
    """Componentwise sum; zero results removed; negative results rejected."""
    counts = dict(state.counts)
    for key, delta in mark.deltas.items():
        new = counts.get(key, 0) + delta
        if new < 0:
            raise NegativeSubstate(key, new)
        if new == 0:
            counts.pop(key, None)
        else:
            counts[key] = new
    return SystemState(counts)


def apply_mark_inplace(counts: dict, mark: JumpMark) -> None:
    """apply_mark on the kernel's working dict, same rules."""
    for key, delta in mark.deltas.items():
        new = counts.get(key, 0) + delta
        if new < 0:
            raise NegativeSubstate(key, new)
        if new == 0:
            counts.pop(key, None)
        else:
            counts[key] = new


def evaluate_enabling(clock: ClockSpec, view: StateView, now: float, previously) -> object:
    """Resolve the clock's enabling against its previous outcome.

    Returns DISABLED, Enabled (with a concrete enabling time), or UNCHANGED
    when the functional form and enabling time are identical to `previously`.
    `previously` is DISABLED for a clock never queried (or just fired, whose
    draw was consumed: re-enabling is regenerative).
    """
    raw = clock.enabling(view, now)
    if raw is UNCHANGED:
        return UNCHANGED
    if raw is DISABLED:
        return UNCHANGED if previously is DISABLED else DISABLED
    was_enabled = isinstance(previously, Enabled)
    te = raw.enabling_time
    if te is None:
        te = previously.enabling_time if was_enabled else now
    if te > now:
        raise ValueError(f"clock {clock.id}: enabling time {te} is in the future (now={now})")
    if (
        was_enabled
        and previously.enabling_time == te
        and (previously.spec is raw.spec or previously.spec == raw.spec)
    ):
        return UNCHANGED
    return Enabled(raw.spec, te)
