"""Domain types and the effective non-Hermitian Hamiltonian.

Rate convention: the population of |e> decays at 2*gamma and the cavity
photon number at 2*kappa, i.e. every jump operator carries a factor of two
(2*gamma*r_u, 2*kappa_ex, ...).  Amplitudes therefore decay at gamma and
kappa.  Half of the cavity-QED literature uses the opposite convention, so
take care when importing numbers from elsewhere.

All rates are plain floats in whatever angular-frequency unit the caller
chooses; the CLI measures them in units of gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameter

BRANCHING_TOL = 1e-12

# Basis of the single-excitation block.
U0, E0, G1 = 0, 1, 2
BASIS_LABELS = ("u,0", "e,0", "g,1")


@dataclass(frozen=True)
class RateSet:
    g: float
    kappa_in: float
    kappa_ex: float
    gamma: float
    r_u: float = 0.0
    r_g: float = 1.0
    r_o: float = 0.0
    delta_e: float = 0.0
    delta_u: float = 0.0

    @property
    def kappa(self) -> float:
        return self.kappa_in + self.kappa_ex

    def replace(self, **changes) -> "RateSet":
        return replace(self, **changes)


def validate(rates: RateSet) -> RateSet:
    """Check every RateSet invariant and return a normalized copy.

    Branching ratios that miss unit sum by at most 1e-12 are rescaled so the
    sum is exact.  Idempotent.
    """
    for name in ("g", "kappa_in", "kappa_ex", "gamma", "r_u", "r_g", "r_o",
                 "delta_e", "delta_u"):
        value = getattr(rates, name)
        if not math.isfinite(value):
            raise InvalidParameter(name, f"{name} must be finite, got {value!r}")
    if rates.g <= 0:
        raise InvalidParameter("g", f"g must be > 0, got {rates.g}")
    if rates.gamma <= 0:
        raise InvalidParameter("gamma", f"gamma must be > 0, got {rates.gamma}")
    for name in ("kappa_in", "kappa_ex"):
        if getattr(rates, name) < 0:
            raise InvalidParameter(name, f"{name} must be >= 0")
    if rates.kappa <= 0:
        raise InvalidParameter("kappa", "kappa_in + kappa_ex must be > 0")
    for name in ("r_u", "r_g", "r_o"):
        value = getattr(rates, name)
        if not 0.0 <= value <= 1.0:
            raise InvalidParameter(name, f"{name} must lie in [0, 1], got {value}")
    total = rates.r_u + rates.r_g + rates.r_o
    if abs(total - 1.0) > BRANCHING_TOL:
        raise InvalidParameter("branching", f"r_u + r_g + r_o = {total!r} != 1")
    # rounding leaves |total - 1| of a few ulp; skipping those keeps validate idempotent
    if abs(total - 1.0) > 8 * np.finfo(float).eps:
        rates = replace(rates, r_u=rates.r_u / total, r_g=rates.r_g / total,
                        r_o=rates.r_o / total)
    return rates


def effective_hamiltonian(rates: RateSet, omega: float, delta_u: float | None = None) -> np.ndarray:
    """Return H_eff/hbar on the basis (|u,0>, |e,0>, |g,1>).

    ``i d(alpha)/dt = H_eff @ alpha`` reproduces the conditioned amplitude
    equations.  ``delta_u`` overrides ``rates.delta_u`` (used for chirped
    pulses).
    """
    if omega < 0:
        raise InvalidParameter("omega", "drive amplitude must be >= 0")
    du = rates.delta_u if delta_u is None else delta_u
    g = rates.g
    return np.array([
        [du, -1j * omega, 0.0],
        [1j * omega, rates.delta_e - 1j * rates.gamma, 1j * g],
        [0.0, -1j * g, -1j * rates.kappa],
    ], dtype=complex)


# ---------------------------------------------------------------------------
# drive pulses

PULSE_FAMILIES = ("constant", "sin2_ramp", "gaussian", "piecewise_linear", "vstirap_sin")


@dataclass(frozen=True)
class DrivePulse:
    """Real, non-negative drive envelope Omega(t), zero for t < 0.

    Families (``t`` in [0, duration] unless noted):

    constant          Omega = omega_max
    sin2_ramp         omega_max * sin^2(pi t / (2 ramp)) for t < ramp, then
                      omega_max; ``ramp`` defaults to ``duration``
    gaussian          omega_max * exp(-(t - center)^2 / (2 width^2));
                      defaults center = duration/2, width = duration/6
    piecewise_linear  omega_max times linear interpolation of ``knots``
                      ((t, level), ...), levels in [0, 1]; zero outside the
                      knot span
    vstirap_sin       omega_max * sin(pi t / duration)

    With ``hold=True`` the value reached at ``duration`` is kept for all
    later times instead of dropping to zero.  The two-photon detuning is
    ``rates.delta_u + delta_u_chirp * clip(t, 0, duration)``.
    """

    family: str
    omega_max: float
    duration: float
    ramp: float | None = None
    center: float | None = None
    width: float | None = None
    knots: tuple[tuple[float, float], ...] = ()
    hold: bool = False
    delta_u_chirp: float = 0.0

    def __post_init__(self):
        if self.family not in PULSE_FAMILIES:
            raise InvalidParameter("family", f"unknown pulse family {self.family!r}")
        if not (math.isfinite(self.omega_max) and self.omega_max >= 0):
            raise InvalidParameter("omega_max", "omega_max must be finite and >= 0")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise InvalidParameter("duration", "duration must be > 0")
        if not math.isfinite(self.delta_u_chirp):
            raise InvalidParameter("delta_u_chirp", "chirp must be finite")
        if self.ramp is not None and not 0 < self.ramp <= self.duration:
            raise InvalidParameter("ramp", "ramp must lie in (0, duration]")
        if self.width is not None and not self.width > 0:
            raise InvalidParameter("width", "width must be > 0")
        if self.family == "piecewise_linear":
            knots = tuple((float(t), float(v)) for t, v in self.knots)
            object.__setattr__(self, "knots", knots)
            if len(knots) < 2:
                raise InvalidParameter("knots", "need at least two knots")
            times = [t for t, _ in knots]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise InvalidParameter("knots", "knot times must be strictly increasing")
            if times[0] < 0 or times[-1] > self.duration:
                raise InvalidParameter("knots", "knots must lie inside [0, duration]")
            if any(not 0 <= v <= 1 for _, v in knots):
                raise InvalidParameter("knots", "knot levels must lie in [0, 1]")

    def replace(self, **changes) -> "DrivePulse":
        return replace(self, **changes)

    def _shape(self, t: float) -> float:
        T = self.duration
        fam = self.family
        if fam == "constant":
            return 1.0
        if fam == "sin2_ramp":
            ramp = self.ramp if self.ramp is not None else T
            return math.sin(0.5 * math.pi * t / ramp) ** 2 if t < ramp else 1.0
        if fam == "gaussian":
            center = self.center if self.center is not None else 0.5 * T
            width = self.width if self.width is not None else T / 6.0
            return math.exp(-0.5 * ((t - center) / width) ** 2)
        if fam == "vstirap_sin":
            return max(math.sin(math.pi * t / T), 0.0)
        # piecewise_linear
        knots = self.knots
        if t < knots[0][0] or t > knots[-1][0]:
            return 0.0
        times = [k[0] for k in knots]
        return float(np.interp(t, times, [k[1] for k in knots]))

    def omega(self, t: float) -> float:
        if t < 0:
            return 0.0
        if t > self.duration:
            return self.omega_max * self._shape(self.duration) if self.hold else 0.0
        return self.omega_max * self._shape(t)

    def delta_u(self, t: float, base: float) -> float:
        if not self.delta_u_chirp:
            return base
        return base + self.delta_u_chirp * min(max(t, 0.0), self.duration)

    def breakpoints(self) -> tuple[float, ...]:
        """Times in (0, duration] where the envelope or its slope jumps."""
        pts = {self.duration}
        if self.family == "sin2_ramp" and self.ramp is not None:
            pts.add(self.ramp)
        if self.family == "piecewise_linear":
            pts.update(t for t, _ in self.knots if t > 0)
        return tuple(sorted(p for p in pts if p > 0))

    @property
    def final_omega(self) -> float:
        """Drive amplitude that persists after ``duration`` (0 unless held)."""
        return self.omega(self.duration + 1.0)


# ---------------------------------------------------------------------------
# integration control

@dataclass(frozen=True)
class ToleranceSpec:
    rtol: float = 1e-9
    atol: float = 1e-12
    method: str = "DOP853"


@dataclass(frozen=True)
class StopRule:
    """When to stop integrating.

    The run ends at the first time after the pulse where the remaining
    excitation |alpha_e|^2 + |alpha_g|^2 drops below ``eps_stop``; if the drive
    is still on (held pulses) the |u,0> population must also have drained.
    ``t_max=None`` selects :func:`default_t_max`.
    """

    t_max: float | None = None
    eps_stop: float = 1e-10


def default_t_max(rates: RateSet, pulse: DrivePulse) -> float:
    t_max = pulse.duration + 20.0 / min(rates.gamma, rates.kappa)
    held = pulse.final_omega
    if held > 0:
        du = pulse.delta_u(pulse.duration, rates.delta_u)
        slowest = -np.linalg.eigvals(effective_hamiltonian(rates, held, du)).imag.max()
        # population of the slowest mode decays at twice its amplitude rate;
        # repumping returns a fraction r_u of each decay to |u,0>
        t_max += 15.0 / max(slowest * (1.0 - rates.r_u), 1e-300)
    return t_max


def resolve_t_max(rates: RateSet, pulse: DrivePulse, stop: StopRule) -> float:
    if stop.t_max is not None:
        if stop.t_max <= 0:
            raise InvalidParameter("t_max", "t_max must be > 0")
        return float(stop.t_max)
    return default_t_max(rates, pulse)


def fingerprint(*parts) -> tuple:
    """Hashable identity of a run's inputs (frozen dataclasses compare by value)."""
    return tuple(parts)


# ---------------------------------------------------------------------------
# physical cavity

@dataclass(frozen=True)
class PhysicalCavity:
    """SI description of an optical Fabry-Perot cavity with one emitter."""

    mu_ge: float          # C m
    omega_ge: float       # rad/s
    L: float              # m
    A_eff: float          # m^2
    alpha_loss: float     # one round trip
    r_u: float = 0.0
    r_g: float = 1.0
    r_o: float = 0.0

    def __post_init__(self):
        for name in ("mu_ge", "omega_ge", "L", "A_eff"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameter(name, f"{name} must be > 0")
        if not (math.isfinite(self.alpha_loss) and self.alpha_loss >= 0):
            raise InvalidParameter("alpha_loss", "alpha_loss must be >= 0")
        if not self.r_g > 0:
            raise InvalidParameter("r_g", "r_g must be > 0")
        for name in ("r_u", "r_o"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidParameter(name, f"{name} must lie in [0, 1]")
        if abs(self.r_u + self.r_g + self.r_o - 1.0) > BRANCHING_TOL:
            raise InvalidParameter("branching", "r_u + r_g + r_o != 1")
