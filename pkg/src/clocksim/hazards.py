"""Hazard specifications with continuous and atomic parts.

A clock's next-jump distribution between system jumps is described by a
:class:`HazardSpec`: a named continuous hazard family plus a finite list of
atoms (point masses in the intensity).  Durations are measured from the
clock's enabling time.  Survival combines both parts,

    S(t) = exp(-H(t)) * prod_{offset <= t} (1 - mass),

where H is the integrated continuous hazard.  The time process is the
consumed hazard over an interval,

    time_process(t1, t2) = H(t2) - H(t1) + sum_{t1 < offset <= t2} -ln(1 - mass),

so that S(t2) = S(t1) * exp(-time_process(t1, t2)) identically.  Every
sampling strategy in :mod:`clocksim.samplers` is built from the three
operations ``sample_first``, ``invert_conditional`` and ``time_process``.

Log-survivals are plain non-positive floats (-inf means survival exhausted);
putative times use ``math.inf`` as the distinguished "never" value, ordered
after every finite time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special as _special

INF = math.inf

# Relative time tolerance and iteration cap for numerical hazard inversion.
_INVERT_RTOL = 1e-12
_INVERT_MAXITER = 200


@dataclass(frozen=True)
class Atom:
    """A point mass in the intensity: survival drops by (1 - mass) at offset."""

    offset: float
    mass: float

    def __post_init__(self):
        if not (0.0 < self.mass <= 1.0):
            raise ValueError(f"atom mass must be in (0, 1], got {self.mass}")
        if not (self.offset >= 0.0 and math.isfinite(self.offset)):
            raise ValueError(f"atom offset must be finite and >= 0, got {self.offset}")


@dataclass(frozen=True)
class Exponential:
    """Constant hazard."""

    rate: float

    def __post_init__(self):
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be finite and >= 0, got {self.rate}")

    def hazard(self, d):
        return self.rate

    def cumulative(self, d):
        return self.rate * d

    def inverse_cumulative(self, x):
        if self.rate == 0.0:
            return INF
        if x <= 0.0:
            return 0.0
        return x / self.rate

    def cumulative_limit(self):
        return INF if self.rate > 0.0 else 0.0

    def support_end(self):
        return INF


@dataclass(frozen=True)
class Weibull:
    """Weibull hazard; cumulative hazard (d / scale) ** shape."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0 and math.isfinite(self.shape)):
            raise ValueError(f"shape must be finite and > 0, got {self.shape}")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")

    def hazard(self, d):
        k = self.shape
        if d <= 0.0:
            if k > 1.0:
                return 0.0
            if k == 1.0:
                return 1.0 / self.scale
            return INF
        return (k / self.scale) * (d / self.scale) ** (k - 1.0)

    def cumulative(self, d):
        if d <= 0.0:
            return 0.0
        return (d / self.scale) ** self.shape

    def inverse_cumulative(self, x):
        if x <= 0.0:
            return 0.0
        return self.scale * x ** (1.0 / self.shape)

    def cumulative_limit(self):
        return INF

    def support_end(self):
        return INF


@dataclass(frozen=True)
class Gamma:
    """Gamma-distributed interarrival; hazard pdf(d) / sf(d).

    The cumulative hazard has no closed-form inverse, so inversion is
    numerical (bracketed bisection refined by safeguarded Newton).
    """

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0.0 and math.isfinite(self.shape)):
            raise ValueError(f"shape must be finite and > 0, got {self.shape}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be finite and > 0, got {self.rate}")

    def hazard(self, d):
        if d <= 0.0:
            if self.shape > 1.0:
                return 0.0
            if self.shape == 1.0:
                return self.rate
            return INF
        x = self.rate * d
        sf = _special.gammaincc(self.shape, x)
        if sf <= 0.0:
            return INF
        logpdf = (
            self.shape * math.log(self.rate)
            + (self.shape - 1.0) * math.log(d)
            - x
            - _special.gammaln(self.shape)
        )
        return math.exp(logpdf) / sf

    def cumulative(self, d):
        if d <= 0.0:
            return 0.0
        sf = _special.gammaincc(self.shape, self.rate * d)
        if sf <= 0.0:
            return INF
        return -math.log(sf)

    def inverse_cumulative(self, x):
        if x <= 0.0:
            return 0.0
        return _invert_monotone(self.cumulative, self.hazard, x, self.shape / self.rate)

    def cumulative_limit(self):
        return INF

    def support_end(self):
        return INF


@dataclass(frozen=True)
class UniformInterval:
    """Jump uniformly distributed on [a, b].

    The hazard 1 / (b - d) diverges at b; inversion works on the survival
    directly and never evaluates the hazard there.  Jumps always land
    strictly before b.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b and math.isfinite(self.b)):
            raise ValueError(f"need 0 <= a < b finite, got [{self.a}, {self.b}]")

    def hazard(self, d):
        if d < self.a:
            return 0.0
        if d >= self.b:
            return INF
        return 1.0 / (self.b - d)

    def cumulative(self, d):
        if d <= self.a:
            return 0.0
        if d >= self.b:
            return INF
        return -math.log((self.b - d) / (self.b - self.a))

    def inverse_cumulative(self, x):
        # survival (b - d)/(b - a) = exp(-x); x = 0 resolves to a, where
        # the hazard begins
        return self.b - (self.b - self.a) * math.exp(-max(x, 0.0))

    def cumulative_limit(self):
        return INF

    def support_end(self):
        return self.b


@dataclass(frozen=True)
class PiecewiseConstant:
    """Piecewise-constant hazard; rates[i] applies on [breakpoints[i], breakpoints[i+1]).

    The last rate extends to infinity.  breakpoints[0] must be 0.
    """

    breakpoints: tuple
    rates: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        rs = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "rates", rs)
        if len(bp) != len(rs) or not bp:
            raise ValueError("breakpoints and rates must have equal nonzero length")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(r < 0.0 or not math.isfinite(r) for r in rs):
            raise ValueError("rates must be finite and >= 0")
        cum = [0.0]
        for i in range(len(bp) - 1):
            cum.append(cum[-1] + rs[i] * (bp[i + 1] - bp[i]))
        object.__setattr__(self, "_cum", tuple(cum))

    def hazard(self, d):
        if d < 0.0:
            return 0.0
        i = len(self.breakpoints) - 1
        while i > 0 and d < self.breakpoints[i]:
            i -= 1
        return self.rates[i]

    def cumulative(self, d):
        if d <= 0.0:
            return 0.0
        i = len(self.breakpoints) - 1
        while i > 0 and d < self.breakpoints[i]:
            i -= 1
        return self._cum[i] + self.rates[i] * (d - self.breakpoints[i])

    def inverse_cumulative(self, x):
        x = max(x, 0.0)
        bp, rs, cum = self.breakpoints, self.rates, self._cum
        for i in range(len(bp)):
            if rs[i] <= 0.0:
                continue
            end = cum[i + 1] if i + 1 < len(bp) else INF
            if x < end or (i + 1 == len(bp)):
                start = cum[i]
                if x < start:
                    # crossed in an earlier zero-rate plateau tie: resume here
                    return bp[i]
                return bp[i] + (x - start) / rs[i]
        return INF

    def cumulative_limit(self):
        if self.rates[-1] > 0.0:
            return INF
        return self._cum[-1]

    def support_end(self):
        return INF


#: Families accepted as the continuous part of a HazardSpec.
CONTINUOUS_FAMILIES = (Exponential, Weibull, Gamma, UniformInterval, PiecewiseConstant)


def _invert_monotone(cumulative, hazard, x, scale_guess):
    """Smallest d with cumulative(d) >= x, for strictly increasing cumulative.

    Bracketed bisection refined by safeguarded Newton, terminating at
    relative time tolerance 1e-12 or 200 iterations.
    """
    lo = 0.0
    hi = max(scale_guess, 1e-300)
    it = 0
    while cumulative(hi) < x:
        lo = hi
        hi *= 2.0
        it += 1
        if it > 1100 or hi == INF:
            return INF
    for _ in range(_INVERT_MAXITER):
        if hi - lo <= _INVERT_RTOL * max(hi, 1e-300):
            break
        mid = 0.5 * (lo + hi)
        f = cumulative(mid) - x
        if f >= 0.0:
            hi = mid
        else:
            lo = mid
        # Newton step from the current upper end, kept inside the bracket.
        h = hazard(hi)
        if h > 0.0 and math.isfinite(h):
            step = (cumulative(hi) - x) / h
            cand = hi - step
            if lo < cand < hi:
                if cumulative(cand) - x >= 0.0:
                    hi = cand
                else:
                    lo = cand
    return hi


@dataclass(frozen=True)
class HazardSpec:
    """A clock's full intensity between system jumps.

    continuous: one of the hazard families above, or None for atoms-only.
    atoms: atoms at strictly increasing offsets; an atom of mass 1 is a
    certain jump and must be last (survival is zero afterward).
    """

    continuous: object = None
    atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.continuous is not None and not isinstance(self.continuous, CONTINUOUS_FAMILIES):
            raise ValueError(f"unknown continuous family {self.continuous!r}")
        offs = [a.offset for a in self.atoms]
        if any(o2 <= o1 for o1, o2 in zip(offs, offs[1:])):
            raise ValueError("atom offsets must be strictly increasing")
        if any(a.mass == 1.0 for a in self.atoms[:-1]):
            raise ValueError("an atom of mass 1 must be the last atom")

    # -- continuous part helpers (zero hazard when continuous is None) --

    def cumulative_hazard(self, d):
        """Integrated continuous hazard over [0, d] (atoms excluded)."""
        return 0.0 if self.continuous is None else self.continuous.cumulative(d)

    _cum = cumulative_hazard

    def _cum_inv(self, x):
        if self.continuous is None:
            return INF
        return self.continuous.inverse_cumulative(x)

    def continuous_hazard(self, d):
        """Continuous hazard rate at duration d since enabling."""
        return 0.0 if self.continuous is None else self.continuous.hazard(d)

    def cumulative_limit(self):
        """Total integrable continuous hazard over [0, inf)."""
        return 0.0 if self.continuous is None else self.continuous.cumulative_limit()

    def support_end(self):
        """Duration at which the continuous survival hits zero (inf if never)."""
        return INF if self.continuous is None else self.continuous.support_end()


def survival(spec: HazardSpec, t: float) -> float:
    """P[jump later than t], right-continuous in t (atoms at t included)."""
    if t < 0.0:
        raise ValueError("duration must be >= 0")
    s = math.exp(-spec._cum(t))
    for a in spec.atoms:
        if a.offset > t:
            break
        s *= 1.0 - a.mass
    return s


def left_survival(spec: HazardSpec, t: float) -> float:
    """Left limit S(t-): atoms at exactly t excluded."""
    if t < 0.0:
        raise ValueError("duration must be >= 0")
    s = math.exp(-spec._cum(t))
    for a in spec.atoms:
        if a.offset >= t:
            break
        s *= 1.0 - a.mass
    return s


def time_process(spec: HazardSpec, t1: float, t2: float) -> float:
    """Consumed hazard over (t1, t2]; equals -ln(S(t2)/S(t1)).

    +inf when an atom of mass 1 lies in the interval or the continuous
    survival is exhausted by t2.
    """
    if not 0.0 <= t1 <= t2:
        raise ValueError(f"need 0 <= t1 <= t2, got ({t1}, {t2})")
    h2 = spec._cum(t2)
    if h2 == INF:
        return INF
    total = h2 - spec._cum(t1)
    for a in spec.atoms:
        if a.offset > t2:
            break
        if a.offset > t1:
            if a.mass == 1.0:
                return INF
            total -= math.log1p(-a.mass)
    return total


def next_atoms(spec: HazardSpec, t1: float, t2: float) -> list:
    """Atoms with offset in the half-open interval (t1, t2], in order."""
    if t2 < t1:
        raise ValueError(f"need t1 <= t2, got ({t1}, {t2})")
    return [a for a in spec.atoms if t1 < a.offset <= t2]


def invert_conditional(spec: HazardSpec, shift: float, required_log_survival: float) -> float:
    """Smallest duration t' >= shift consuming -required_log_survival hazard.

    Conditional inversion: given survival to `shift`, find when the
    remaining log-survival budget runs out.  Returns inf when the spec's
    remaining hazard mass never reaches the requirement.  Zero-hazard
    plateaus at an exact-tie target resolve to where the hazard resumes.
    """
    if shift < 0.0:
        raise ValueError("shift must be >= 0")
    if required_log_survival > 0.0:
        raise ValueError("required log-survival must be <= 0")
    need = -required_log_survival
    base = spec._cum(shift)
    if base == INF:
        return shift
    if not spec.atoms or spec.atoms[-1].offset <= shift:
        return max(spec._cum_inv(base + need), shift)
    atoms_acc = 0.0
    for a in spec.atoms:
        if a.offset <= shift:
            continue
        cont_at_atom = spec._cum(a.offset) - base
        if cont_at_atom + atoms_acc > need:
            t = max(spec._cum_inv(base + (need - atoms_acc)), shift)
            return min(t, a.offset)
        if a.mass == 1.0:
            return a.offset
        atoms_acc -= math.log1p(-a.mass)
        if cont_at_atom + atoms_acc >= need:
            return a.offset
    return max(spec._cum_inv(base + (need - atoms_acc)), shift)


def sample_first(spec: HazardSpec, u: float) -> tuple:
    """Invert a fresh uniform variate; returns (putative duration, ln(1-u)).

    The putative duration lands on an atom whenever 1-u falls inside the
    atom's survival drop; it is inf when the survival plateaus above 1-u.
    The second element is the consumed log-survival of the draw.
    """
    if not 0.0 <= u < 1.0:
        raise ValueError(f"uniform variate must be in [0, 1), got {u}")
    log_surv = math.log1p(-u)
    return invert_conditional(spec, 0.0, log_surv), log_surv
