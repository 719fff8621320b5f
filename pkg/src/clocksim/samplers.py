"""Exact sampling strategies over enabled clocks.

Every sampler implements the same contract:

    initialize(enabled, now, stream)   enabled: {cid: (HazardSpec, te)}
    next_event(now, stream) -> SamplerEvent      (raises Stalled)
    absorb(delta, now, stream)                   after a jump was applied

and is exclusively owned by one trajectory.  `stream.uniform()` yields the
trajectory's uniform variates; each sampler consumes a documented number per
call so runs are reproducible:

  first-reaction  next_event: one variate per enabled clock, ascending id.
  next-reaction   absorb: one variate per fresh draw (never-seen or just-
                  fired clocks in newly_enabled, ascending id); resumed and
                  modified clocks consume none.  next_event: none.
  next-to-fire    absorb: one variate per modified clock then per newly
                  enabled clock, each ascending id.  next_event: none.
  direct          next_event: exactly two variates (waiting time, then the
                  clock draw; the second is consumed even on an atom hit).
  hierarchical    children queried in construction order; each child keeps
                  its own discipline (losing first-reaction/direct children
                  re-propose next step and draw again).

Ties between equal finite putative times break toward the smallest clock id.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from scipy.optimize import brentq as _brentq

from .errors import DuplicateAtoms, ModelError, Stalled, UnknownClock
from .hazards import INF, Exponential, HazardSpec, invert_conditional, time_process
from .structs import PrefixSumTree, PutativeQueue

_BISECT_RTOL = 1e-12
_BISECT_MAXITER = 200


class SamplerEvent(NamedTuple):
    clock: int
    time: float


class EnablingDelta:
    """Enabling changes at one stopping time, as seen by a sampler.

    The fired clock's old draw is consumed by the jump; if it is enabled in
    the post-jump state it reappears in newly_enabled (fresh draw), if not it
    appears in newly_disabled.  fired is None for children of a hierarchical
    sampler that do not own the jump.
    """

    __slots__ = ("fired", "newly_enabled", "newly_disabled", "modified")

    def __init__(self, fired=None, newly_enabled=None, newly_disabled=None, modified=None):
        self.fired = fired
        self.newly_enabled = [] if newly_enabled is None else newly_enabled  # (cid, spec, te)
        self.newly_disabled = [] if newly_disabled is None else newly_disabled  # cid
        self.modified = [] if modified is None else modified  # (cid, spec, te)


def _conditional_draw(spec: HazardSpec, te: float, now: float, u: float) -> float:
    """Absolute putative time from a fresh variate, given survival to now."""
    shift = now - te
    if shift < 0.0:
        shift = 0.0
    return te + invert_conditional(spec, shift, math.log1p(-u))


class FirstReactionSampler:
    """Redraw every enabled clock each step and take the minimum."""

    name = "first-reaction"

    def __init__(self):
        self._enabled = {}

    def initialize(self, enabled, now, stream):
        self._enabled = dict(sorted(enabled.items()))

    def enabled_ids(self):
        return set(self._enabled)

    def next_event(self, now, stream):
        best_t = INF
        best_cid = -1
        for cid in sorted(self._enabled):
            spec, te = self._enabled[cid]
            u = stream.uniform()
            t = _conditional_draw(spec, te, now, u)
            if t < best_t:
                best_t = t
                best_cid = cid
        if best_cid < 0 or best_t == INF:
            raise Stalled("all putative times are infinite")
        return SamplerEvent(best_cid, best_t)

    def absorb(self, delta, now, stream):
        if delta.fired is not None:
            self._enabled.pop(delta.fired, None)
        for cid in delta.newly_disabled:
            self._enabled.pop(cid, None)
        for cid, spec, te in delta.modified:
            self._enabled[cid] = (spec, te)
        for cid, spec, te in delta.newly_enabled:
            self._enabled[cid] = (spec, te)


class _LedgerEntry:
    __slots__ = ("drawn", "consumed", "spec", "te", "seg_start", "enabled", "putative")

    def __init__(self, drawn, spec, te, seg_start):
        self.drawn = drawn          # drawn log-survival, <= 0
        self.consumed = 0.0         # hazard consumed so far, >= 0
        self.spec = spec
        self.te = te
        self.seg_start = seg_start  # absolute time this spec segment began
        self.enabled = True
        self.putative = INF


class NextReactionSampler:
    """Keep one drawn log-survival per clock and consume it additively.

    A clock's budget survives disabling (frozen, resumed on re-enable) and
    spec changes (consumption accrues under the old spec, then the remaining
    budget is re-inverted under the new one).  Only the jumping clock's draw
    is removed and resampled.  Set record_audit=True to log
    (cid, consumed, budget, at_atom) at every jump.
    """

    name = "next-reaction"

    def __init__(self, record_audit=False):
        self._entries = {}
        self._queue = PutativeQueue()
        self.audit_log = [] if record_audit else None

    def enabled_ids(self):
        return {cid for cid, e in self._entries.items() if e.enabled}

    def queue_members(self):
        return set(self._queue.members())

    def initialize(self, enabled, now, stream):
        for cid in sorted(enabled):
            spec, te = enabled[cid]
            self._fresh(cid, spec, te, now, stream)

    def _fresh(self, cid, spec, te, now, stream):
        u = stream.uniform()
        e = _LedgerEntry(math.log1p(-u), spec, te, now)
        self._entries[cid] = e
        self._reinvert(e, now)
        self._queue.insert(cid, e.putative)

    def _reinvert(self, e, now):
        remaining = -e.drawn - e.consumed
        if remaining < 0.0:
            remaining = 0.0
        shift = now - e.te
        if shift < 0.0:
            shift = 0.0
        e.seg_start = now
        e.putative = e.te + invert_conditional(e.spec, shift, -remaining)

    def _accrue(self, e, now):
        e.consumed += time_process(e.spec, max(e.seg_start - e.te, 0.0), max(now - e.te, 0.0))

    def next_event(self, now, stream):
        top = self._queue.peek()
        if top is None or top[1] == INF:
            raise Stalled("all putative times are infinite")
        return SamplerEvent(top[0], top[1])

    def absorb(self, delta, now, stream):
        fired = delta.fired
        if fired is not None:
            e = self._entries.pop(fired, None)
            if e is None or not e.enabled:
                raise UnknownClock(fired)
            if self.audit_log is not None:
                self._accrue(e, now)
                at_atom = any(e.te + a.offset == now for a in e.spec.atoms)
                self.audit_log.append((fired, e.consumed, -e.drawn, at_atom))
            self._queue.delete(fired)
        for cid in sorted(delta.newly_disabled):
            if cid == fired:
                continue
            e = self._entries.get(cid)
            if e is None or not e.enabled:
                raise UnknownClock(cid)
            self._accrue(e, now)
            e.enabled = False
            e.putative = INF
            self._queue.delete(cid)
        for cid, spec, te in sorted(delta.modified):
            e = self._entries.get(cid)
            if e is None or not e.enabled:
                raise UnknownClock(cid)
            self._accrue(e, now)
            e.spec = spec
            e.te = te
            self._reinvert(e, now)
            self._queue.update(cid, e.putative)
        for cid, spec, te in sorted(delta.newly_enabled):
            e = self._entries.get(cid)
            if e is None:
                self._fresh(cid, spec, te, now, stream)
            elif not e.enabled:
                # resume the frozen budget under the (possibly new) spec
                e.spec = spec
                e.te = te
                e.enabled = True
                self._reinvert(e, now)
                self._queue.insert(cid, e.putative)
            else:
                raise UnknownClock(cid)


class NextToFireSampler:
    """Keep putative times; redraw affected clocks with fresh variates."""

    name = "next-to-fire"

    def __init__(self):
        self._enabled = {}
        self._queue = PutativeQueue()

    def enabled_ids(self):
        return set(self._enabled)

    def queue_members(self):
        return set(self._queue.members())

    def initialize(self, enabled, now, stream):
        for cid in sorted(enabled):
            spec, te = enabled[cid]
            self._enabled[cid] = (spec, te)
            self._queue.insert(cid, _conditional_draw(spec, te, now, stream.uniform()))

    def next_event(self, now, stream):
        top = self._queue.peek()
        if top is None or top[1] == INF:
            raise Stalled("all putative times are infinite")
        return SamplerEvent(top[0], top[1])

    def absorb(self, delta, now, stream):
        fired = delta.fired
        if fired is not None:
            if fired not in self._enabled:
                raise UnknownClock(fired)
            del self._enabled[fired]
            self._queue.delete(fired)
        for cid in sorted(delta.newly_disabled):
            if cid == fired:
                continue
            if cid not in self._enabled:
                raise UnknownClock(cid)
            del self._enabled[cid]
            self._queue.delete(cid)
        for cid, spec, te in sorted(delta.modified):
            if cid not in self._enabled:
                raise UnknownClock(cid)
            self._enabled[cid] = (spec, te)
            self._queue.update(cid, _conditional_draw(spec, te, now, stream.uniform()))
        for cid, spec, te in sorted(delta.newly_enabled):
            if cid in self._enabled:
                raise UnknownClock(cid)
            self._enabled[cid] = (spec, te)
            self._queue.insert(cid, _conditional_draw(spec, te, now, stream.uniform()))


class DirectSampler:
    """Sample the waiting-time factorization: when, then which clock.

    The total survival over all enabled clocks is inverted for the next
    event time (closed form when every continuous part is constant-rate,
    bracketed bisection otherwise, with atoms as exact breakpoints); if the
    budget runs out at an atom, the owning clock jumps, otherwise a discrete
    draw over the continuous hazards at the sampled time picks the clock via
    find-by-prefix on the hazard tree.
    """

    name = "direct"

    def __init__(self):
        self._enabled = {}
        self._tree = PrefixSumTree()
        self._slot = {}
        self._owner = {}
        self._free = []
        self._next_slot = 0
        self._varying = set()      # enabled cids with time-varying continuous hazard
        self._atom_clocks = set()  # enabled cids with atoms
        self._atom_abs = {}        # absolute atom time -> cid, enabled clocks only
        self._crate = 0.0          # sum of enabled constant (exponential) rates
        self._crate_ops = 0

    def enabled_ids(self):
        return set(self._enabled)

    # -- bookkeeping ---------------------------------------------------

    def _register_atoms(self, cid, spec, te, now):
        for a in spec.atoms:
            t = te + a.offset
            if t <= now:
                continue
            other = self._atom_abs.get(t)
            if other is not None and other != cid:
                raise DuplicateAtoms(f"clocks {other} and {cid} share atom time {t}")
            self._atom_abs[t] = cid

    def _unregister_atoms(self, cid):
        for t in [t for t, c in self._atom_abs.items() if c == cid]:
            del self._atom_abs[t]

    def _bump_crate(self, delta):
        self._crate += delta
        self._crate_ops += 1
        if self._crate_ops >= 4096:
            # rebuild the running sum to bound float drift
            total = 0.0
            for other in self._enabled:
                if other not in self._varying:
                    cont = self._enabled[other][0].continuous
                    if cont is not None:
                        total += cont.rate
            self._crate = total
            self._crate_ops = 0

    def _add(self, cid, spec, te, now):
        self._enabled[cid] = (spec, te)
        slot = self._free.pop() if self._free else self._next_slot
        if slot == self._next_slot:
            self._next_slot += 1
        self._slot[cid] = slot
        self._owner[slot] = cid
        cont = spec.continuous
        if cont is not None and not isinstance(cont, Exponential):
            self._varying.add(cid)
        elif cont is not None:
            self._bump_crate(cont.rate)
        self._tree.set(slot, spec.continuous_hazard(max(now - te, 0.0)))
        if spec.atoms:
            self._atom_clocks.add(cid)
            self._register_atoms(cid, spec, te, now)

    def _remove(self, cid):
        spec, _ = self._enabled[cid]
        del self._enabled[cid]
        slot = self._slot.pop(cid)
        del self._owner[slot]
        self._tree.set(slot, 0.0)
        self._free.append(slot)
        if cid in self._varying:
            self._varying.discard(cid)
        elif spec.continuous is not None:
            self._bump_crate(-spec.continuous.rate)
        if cid in self._atom_clocks:
            self._atom_clocks.discard(cid)
            self._unregister_atoms(cid)

    def initialize(self, enabled, now, stream):
        for cid in sorted(enabled):
            spec, te = enabled[cid]
            self._add(cid, spec, te, now)

    def absorb(self, delta, now, stream):
        fired = delta.fired
        if fired is not None:
            if fired not in self._enabled:
                raise UnknownClock(fired)
            self._remove(fired)
        for cid in sorted(delta.newly_disabled):
            if cid == fired:
                continue
            if cid not in self._enabled:
                raise UnknownClock(cid)
            self._remove(cid)
        for cid, spec, te in sorted(delta.modified):
            if cid not in self._enabled:
                raise UnknownClock(cid)
            self._remove(cid)
            self._add(cid, spec, te, now)
        for cid, spec, te in sorted(delta.newly_enabled):
            if cid in self._enabled:
                raise UnknownClock(cid)
            self._add(cid, spec, te, now)

    # -- waiting-time inversion ------------------------------------------

    def _varying_items(self):
        return [self._enabled[cid] for cid in self._varying]

    @staticmethod
    def _g(varying, bases, crate, s_prev, t):
        """Total continuous consumption over (s_prev, t]."""
        g = crate * (t - s_prev)
        for (spec, te), base in zip(varying, bases):
            c = spec.cumulative_hazard(max(t - te, 0.0))
            if c == INF:
                return INF
            g += c - base
        return g

    def _crossing(self, varying, bases, crate, s_prev, hi, budget):
        """t in (s_prev, hi] where consumption hits budget.

        Bisection until the upper bracket value is finite (it may start at a
        survival asymptote), then Brent's method to relative 1e-12 in time.
        """
        lo = s_prev
        f_lo = -budget
        f_hi = self._g(varying, bases, crate, s_prev, hi) - budget
        for _ in range(_BISECT_MAXITER):
            if f_hi < INF:
                break
            mid = 0.5 * (lo + hi)
            f_mid = self._g(varying, bases, crate, s_prev, mid) - budget
            if f_mid >= 0.0:
                hi = mid
                f_hi = f_mid
            else:
                lo = mid
                f_lo = f_mid
        if hi - lo <= _BISECT_RTOL * max(abs(hi), 1e-300):
            return hi
        if f_lo >= 0.0:
            return lo
        return float(_brentq(
            lambda t: self._g(varying, bases, crate, s_prev, t) - budget,
            lo, hi, xtol=1e-15, rtol=_BISECT_RTOL, maxiter=_BISECT_MAXITER,
        ))

    def _invert_waiting(self, now, budget):
        """(absolute event time, atom owner cid | None); raises Stalled."""
        upcoming = []
        for cid in self._atom_clocks:
            spec, te = self._enabled[cid]
            for a in spec.atoms:
                if te + a.offset > now:
                    upcoming.append((te + a.offset, a.mass, cid))
        upcoming.sort()
        varying = self._varying_items()
        crate = self._crate if varying else self._tree.total()
        s_prev = now
        bases = None
        for at_time, mass, at_cid in upcoming:
            if not varying:
                seg = crate * (at_time - s_prev)
                if crate > 0.0 and budget <= seg:
                    return s_prev + budget / crate, None
            else:
                bases = [spec.cumulative_hazard(max(s_prev - te, 0.0)) for spec, te in varying]
                seg = self._g(varying, bases, crate, s_prev, at_time)
                if budget <= seg:
                    return self._crossing(varying, bases, crate, s_prev, at_time, budget), None
            budget -= seg
            drop = INF if mass >= 1.0 else -math.log1p(-mass)
            if budget <= drop:
                return at_time, at_cid
            budget -= drop
            s_prev = at_time
        # last, unbounded segment
        if not varying:
            if crate <= 0.0:
                raise Stalled("no hazard remains")
            return s_prev + budget / crate, None
        bases = [spec.cumulative_hazard(max(s_prev - te, 0.0)) for spec, te in varying]
        asym = INF
        for spec, te in varying:
            end = spec.support_end()
            if end < INF and s_prev < te + end < asym:
                asym = te + end
        if asym < INF:
            return self._crossing(varying, bases, crate, s_prev, asym, budget), None
        if crate <= 0.0:
            limit = 0.0
            for (spec, te), base in zip(varying, bases):
                top = spec.cumulative_limit()
                if top == INF:
                    limit = INF
                    break
                limit += top - base
            if limit < budget:
                raise Stalled("remaining hazard mass is insufficient")
        hi = s_prev + max(1.0, abs(s_prev) * 1e-6)
        for _ in range(_BISECT_MAXITER):
            if self._g(varying, bases, crate, s_prev, hi) >= budget:
                break
            hi = s_prev + 2.0 * (hi - s_prev)
        return self._crossing(varying, bases, crate, s_prev, hi, budget), None

    def next_event(self, now, stream):
        if not self._enabled:
            raise Stalled("no enabled clocks")
        u1 = stream.uniform()
        u2 = stream.uniform()
        t, atom_cid = self._invert_waiting(now, -math.log1p(-u1))
        if atom_cid is not None:
            return SamplerEvent(atom_cid, t)
        if self._varying:
            for cid in self._varying:
                spec, te = self._enabled[cid]
                self._tree.set(self._slot[cid], spec.continuous_hazard(max(t - te, 0.0)))
        total = self._tree.total()
        if total > 0.0:
            slot = self._tree.find(u2 * total)
            if slot >= 0:
                return SamplerEvent(self._owner[slot], t)
        # Degenerate boundary (hazard vanished exactly at t): pick the
        # smallest-id clock with positive hazard just before t.
        t_left = math.nextafter(t, now)
        for cid in sorted(self._enabled):
            spec, te = self._enabled[cid]
            if spec.continuous_hazard(max(t_left - te, 0.0)) > 0.0:
                return SamplerEvent(cid, t)
        raise Stalled("no hazard at sampled time")


class HierarchicalSampler:
    """Partition the clocks over child samplers; the soonest proposal wins.

    parts: list of (sampler, clock-id set or None); at most one None entry
    catches every clock not named elsewhere.  Children keep their own
    contracts for retained vs re-proposed draws.
    """

    name = "hierarchical"

    def __init__(self, parts):
        if sum(1 for _, cids in parts if cids is None) > 1:
            raise ModelError("at most one catch-all partition")
        self._children = [s for s, _ in parts]
        self._sets = [frozenset(c) if c is not None else None for _, c in parts]
        self._rest = next((i for i, c in enumerate(self._sets) if c is None), -1)
        self._owners = {}

    def _owner_index(self, cid):
        cached = self._owners.get(cid)
        if cached is not None:
            return cached
        for i, cids in enumerate(self._sets):
            if cids is not None and cid in cids:
                self._owners[cid] = i
                return i
        if self._rest >= 0:
            self._owners[cid] = self._rest
            return self._rest
        raise ModelError(f"clock {cid} not covered by the partition")

    def enabled_ids(self):
        out = set()
        for child in self._children:
            out |= child.enabled_ids()
        return out

    def initialize(self, enabled, now, stream):
        split = [dict() for _ in self._children]
        for cid in sorted(enabled):
            split[self._owner_index(cid)][cid] = enabled[cid]
        for child, part in zip(self._children, split):
            child.initialize(part, now, stream)

    def next_event(self, now, stream):
        best = None
        for child in self._children:
            try:
                ev = child.next_event(now, stream)
            except Stalled:
                continue
            if best is None or (ev.time, ev.clock) < (best.time, best.clock):
                best = ev
        if best is None or best.time == INF:
            raise Stalled("all children stalled")
        return best

    def absorb(self, delta, now, stream):
        for i, child in enumerate(self._children):
            sub = EnablingDelta(
                fired=delta.fired if (delta.fired is not None and self._owner_index(delta.fired) == i) else None,
                newly_enabled=[e for e in delta.newly_enabled if self._owner_index(e[0]) == i],
                newly_disabled=[c for c in delta.newly_disabled if self._owner_index(c) == i],
                modified=[e for e in delta.modified if self._owner_index(e[0]) == i],
            )
            if sub.fired is None and not (sub.newly_enabled or sub.newly_disabled or sub.modified):
                continue
            child.absorb(sub, now, stream)


_BASE_SAMPLERS = {
    "first-reaction": FirstReactionSampler,
    "next-reaction": NextReactionSampler,
    "next-to-fire": NextToFireSampler,
    "direct": DirectSampler,
}

SAMPLER_NAMES = ("first-reaction", "next-reaction", "next-to-fire", "direct", "hierarchical")


def _parse_id_set(text):
    if text == "rest":
        return None
    out = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        elif part:
            out.add(int(part))
    return out


def make_sampler(name: str):
    """Build a sampler by name.

    Hierarchical partitions are spelled
    `hierarchical:<child>=<ids>;<child>=<ids>` where <ids> is a comma list
    of clock ids or ranges (`0-5,7`), or `rest` for every other clock.
    """
    if name in _BASE_SAMPLERS:
        return _BASE_SAMPLERS[name]()
    if name.startswith("hierarchical:"):
        parts = []
        for chunk in name[len("hierarchical:"):].split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            child_name, _, ids = chunk.partition("=")
            child_name = child_name.strip()
            if child_name not in _BASE_SAMPLERS:
                raise ModelError(
                    f"unknown hierarchical child {child_name!r}; valid: {sorted(_BASE_SAMPLERS)}"
                )
            parts.append((_BASE_SAMPLERS[child_name](), _parse_id_set(ids.strip())))
        if not parts:
            raise ModelError("empty hierarchical partition")
        return HierarchicalSampler(parts)
    raise ModelError(f"unknown sampler {name!r}; valid: {', '.join(SAMPLER_NAMES)}")
